use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(graphfk::cli::run() as u8)
}
