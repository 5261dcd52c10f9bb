//! Command-line front end: file loading, orchestration, reports, exit codes.
//!
//! Exit codes: 0 for success or a definite verdict, 1 for internal errors,
//! 2 for invalid input (including out-of-scope classification inputs), and
//! 3 for unknown verdicts or exhausted search budgets. Every command is
//! deterministic given its flags and inputs; reports embed content hashes
//! of the input files and the seed in use.

use crate::files::{self, FileError, VerdictFile};
use crate::fk::{self, FkOptions};
use crate::graphcore::{LabeledGraph, Tightness};
use crate::realize::{self, RealizeError, RealizeOptions};
use crate::rmod::{self, IsoVerdict};
use crate::sampler;
use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "graphfk",
    about = "Reduced filtered K-theory of labeled graphs: compute, check, classify, realize",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Space file overriding or supplying the space of graph inputs.
    #[arg(long, global = true)]
    pub space: Option<PathBuf>,
    /// Entry bound for realization searches.
    #[arg(long, global = true, default_value_t = 8)]
    pub budget: u32,
    /// Seed for randomized commands (printed in the report).
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Skip the internal exactness/relation self-checks (faster).
    #[arg(long, global = true)]
    pub no_self_check: bool,
    /// Emit the report as JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute the invariant of a labeled graph and write a module file.
    Fk {
        graph: PathBuf,
        /// Also compute the unit class (pointed module).
        #[arg(long)]
        unital: bool,
        /// Run the exactness and range checks and report them.
        #[arg(long)]
        check: bool,
        /// Output module path (default: <graph>.module.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide stable isomorphism of two graph inputs by invariant comparison.
    Classify { graph_a: PathBuf, graph_b: PathBuf },
    /// Realize a module file as a labeled graph with a certificate.
    Realize {
        module: PathBuf,
        /// Pointed realization matching the module's unit class.
        #[arg(long)]
        unital: bool,
        /// Output graph path (default: <module>.graph.json).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Certificate path (default: <module>.cert.json).
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Validate a module file: relations, exactness, range conditions.
    CheckModule { module: PathBuf },
    /// Validate a graph file: labeling, tightness, structural predicates.
    CheckGraph { graph: PathBuf },
    /// Generate random graphs, realize their invariants afresh, certify.
    Roundtrip {
        /// Number of instances.
        #[arg(long, default_value_t = 10)]
        count: u32,
        /// Exercise the pointed (unital) pipeline.
        #[arg(long)]
        unital: bool,
    },
}

/// A structured run report.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub verdicts: BTreeMap<String, serde_json::Value>,
    pub timings_ms: BTreeMap<String, u128>,
    pub certificates: Vec<String>,
    pub seed: u64,
}

impl RunReport {
    fn new(command: &str, seed: u64) -> Self {
        RunReport {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
            certificates: Vec::new(),
            seed,
        }
    }

    fn hash_input(&mut self, path: &Path) {
        if let Ok(bytes) = std::fs::read(path) {
            let mut h = Sha256::new();
            h.update(&bytes);
            self.inputs
                .insert(path.display().to_string(), format!("{:x}", h.finalize()));
        }
    }

    fn set<V: Serialize>(&mut self, key: &str, value: V) {
        self.verdicts
            .insert(key.to_string(), serde_json::to_value(value).unwrap());
    }
}

/// Entry point used by the binary: parse, execute, print, return the code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let json = cli.json;
    let (code, report) = execute(cli);
    if json {
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        print_human(&report);
    }
    code
}

fn print_human(report: &RunReport) {
    println!("command: {}", report.command);
    for (k, v) in &report.verdicts {
        println!("{k}: {v}");
    }
    for c in &report.certificates {
        println!("certificate: {c}");
    }
    for (k, v) in &report.timings_ms {
        println!("time[{k}]: {v} ms");
    }
}

pub fn execute(cli: Cli) -> (i32, RunReport) {
    match &cli.command {
        Command::Fk { graph, unital, check, out } => {
            cmd_fk(&cli, graph, *unital, *check, out.as_deref())
        }
        Command::Classify { graph_a, graph_b } => cmd_classify(&cli, graph_a, graph_b),
        Command::Realize { module, unital, out, cert } => {
            cmd_realize(&cli, module, *unital, out.as_deref(), cert.as_deref())
        }
        Command::CheckModule { module } => cmd_check_module(&cli, module),
        Command::CheckGraph { graph } => cmd_check_graph(&cli, graph),
        Command::Roundtrip { count, unital } => cmd_roundtrip(&cli, *count, *unital),
    }
}

fn fk_options(cli: &Cli) -> FkOptions {
    FkOptions {
        self_check: !cli.no_self_check,
    }
}

fn realize_options(cli: &Cli) -> RealizeOptions {
    RealizeOptions {
        budget: cli.budget,
        ..RealizeOptions::default()
    }
}

fn fail(report: RunReport, code: i32, message: String) -> (i32, RunReport) {
    let mut report = report;
    report.set("error", message);
    (code, report)
}

fn load_graph_input(
    cli: &Cli,
    path: &Path,
    report: &mut RunReport,
) -> Result<LabeledGraph, (i32, String)> {
    report.hash_input(path);
    if let Some(sp) = &cli.space {
        report.hash_input(sp);
    }
    files::load_graph(path, cli.space.as_deref()).map_err(|e| match e {
        FileError::Io { .. } | FileError::Parse { .. } => (EXIT_INVALID, e.to_string()),
        other => (EXIT_INVALID, other.to_string()),
    })
}

fn cmd_fk(
    cli: &Cli,
    graph_path: &Path,
    unital: bool,
    check: bool,
    out: Option<&Path>,
) -> (i32, RunReport) {
    let mut report = RunReport::new("fk", cli.seed);
    let graph = match load_graph_input(cli, graph_path, &mut report) {
        Ok(g) => g,
        Err((code, msg)) => return fail(report, code, msg),
    };
    let t0 = Instant::now();
    let result = if unital {
        fk::unit_class_opts(&graph, fk_options(cli)).map(|pm| (pm.module, Some(pm.unit)))
    } else {
        fk::compute_fk_opts(&graph, fk_options(cli)).map(|m| (m, None))
    };
    let (module, unit) = match result {
        Ok(v) => v,
        Err(e @ fk::FkError::InvalidLabeling { .. }) => {
            return fail(report, EXIT_INVALID, e.to_string())
        }
        Err(e @ (fk::FkError::SelfCheck(_) | fk::FkError::UnitPreimage)) => {
            return fail(report, EXIT_INTERNAL, e.to_string())
        }
        Err(e) => return fail(report, EXIT_INVALID, e.to_string()),
    };
    report
        .timings_ms
        .insert("compute".into(), t0.elapsed().as_millis());
    if check {
        let verdict = rmod::range_check(&module, unital);
        report.set("relations", rmod::verify_relations(&module));
        report.set("exact", verdict.exact);
        report.set("k1_free", verdict.k1_free.iter().all(|&b| b));
        report.set("rank_equal", verdict.rank_equal.iter().all(|&b| b));
        report.set("rank_leq", verdict.rank_leq.iter().all(|&b| b));
    }
    let file = match files::module_to_file(&module, unit.as_deref()) {
        Ok(f) => f,
        Err(e) => return fail(report, EXIT_INTERNAL, e.to_string()),
    };
    let out_path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| graph_path.with_extension("module.json"));
    if let Err(e) = files::save_json(&out_path, &file) {
        return fail(report, EXIT_INTERNAL, e.to_string());
    }
    report.set("module", out_path.display().to_string());
    let summary: Vec<String> = (0..module.space().n())
        .map(|x| {
            format!(
                "{}: Mo {}, Mdb {}, M1 {}",
                module.space().point_name(x),
                group_name(&module.point(x).mo),
                group_name(&module.point(x).mdb),
                group_name(&module.point(x).m1),
            )
        })
        .collect();
    report.set("groups", summary);
    (EXIT_OK, report)
}

fn group_name(g: &crate::zlattice::FgAbGroup) -> String {
    let mut parts: Vec<String> = g
        .invariant_factors()
        .iter()
        .map(|d| format!("Z/{d}"))
        .collect();
    if g.free_rank() > 0 {
        parts.push(format!("Z^{}", g.free_rank()));
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

/// Scope gate for the classifier: named predicate failures are reported.
fn classifier_scope(g: &LabeledGraph) -> Result<(), String> {
    if !g.labeling_is_valid() {
        return Err("labeling is invalid".into());
    }
    if g.is_tight_sufficient() != Tightness::Tight {
        return Err("tightness criterion not established".into());
    }
    let report = g
        .structural_predicates()
        .map_err(|e| format!("structural predicates unavailable: {e}"))?;
    if !report.purely_infinite_sufficient {
        return Err("a vertex supports fewer than two loops".into());
    }
    if !report.is_cuntz_krieger {
        return Err("graph is not finite with no sources".into());
    }
    Ok(())
}

fn cmd_classify(cli: &Cli, path_a: &Path, path_b: &Path) -> (i32, RunReport) {
    let mut report = RunReport::new("classify", cli.seed);
    let ga = match load_graph_input(cli, path_a, &mut report) {
        Ok(g) => g,
        Err((code, msg)) => return fail(report, code, msg),
    };
    let gb = match load_graph_input(cli, path_b, &mut report) {
        Ok(g) => g,
        Err((code, msg)) => return fail(report, code, msg),
    };
    if ga.space() != gb.space() {
        return fail(
            report,
            EXIT_INVALID,
            "out-of-theorem-scope: the graphs live over different spaces".into(),
        );
    }
    for (name, g) in [("first", &ga), ("second", &gb)] {
        if let Err(msg) = classifier_scope(g) {
            return fail(
                report,
                EXIT_INVALID,
                format!("out-of-theorem-scope: {name} graph: {msg}"),
            );
        }
    }
    let t0 = Instant::now();
    let ma = match fk::compute_fk_opts(&ga, fk_options(cli)) {
        Ok(m) => m,
        Err(e) => return fail(report, EXIT_INTERNAL, e.to_string()),
    };
    let mb = match fk::compute_fk_opts(&gb, fk_options(cli)) {
        Ok(m) => m,
        Err(e) => return fail(report, EXIT_INTERNAL, e.to_string()),
    };
    report
        .timings_ms
        .insert("invariants".into(), t0.elapsed().as_millis());
    let t1 = Instant::now();
    // a label-preserving graph isomorphism yields an immediate witness
    let hint = rmod::hint_from_vertex_bijection(&ga, &gb, &ma, &mb);
    let verdict = match rmod::find_isomorphism(&ma, &mb, cli.budget, hint.as_ref()) {
        Ok(v) => v,
        Err(e) => return fail(report, EXIT_INTERNAL, e.to_string()),
    };
    report
        .timings_ms
        .insert("search".into(), t1.elapsed().as_millis());
    match verdict {
        IsoVerdict::Iso(iso) => {
            // a definite verdict is only printed after independent
            // re-verification of its witness
            if !rmod::verify_module_iso(&ma, &mb, &iso) {
                return fail(
                    report,
                    EXIT_INTERNAL,
                    "witness failed independent re-verification".into(),
                );
            }
            let cert = files::certificate_to_file(ma.space(), &iso, None)
                .ok()
                .map(|c| VerdictFile {
                    verdict: "stably_isomorphic".into(),
                    witness: Some(c),
                    refuting_invariant: None,
                });
            report.set("verdict", "stably_isomorphic");
            if let Some(v) = cert {
                report.set("result", v);
            }
            (EXIT_OK, report)
        }
        IsoVerdict::NotIsomorphic { reason } => {
            report.set("verdict", "distinct");
            report.set(
                "result",
                VerdictFile {
                    verdict: "distinct".into(),
                    witness: None,
                    refuting_invariant: Some(reason),
                },
            );
            (EXIT_OK, report)
        }
        IsoVerdict::Unknown => {
            report.set("verdict", "unknown");
            report.set(
                "result",
                VerdictFile {
                    verdict: "unknown".into(),
                    witness: None,
                    refuting_invariant: None,
                },
            );
            (EXIT_UNKNOWN, report)
        }
    }
}

fn cmd_realize(
    cli: &Cli,
    module_path: &Path,
    unital: bool,
    out: Option<&Path>,
    cert: Option<&Path>,
) -> (i32, RunReport) {
    let mut report = RunReport::new("realize", cli.seed);
    report.hash_input(module_path);
    let file: files::ModuleFile = match files::load_json(module_path) {
        Ok(f) => f,
        Err(e) => return fail(report, EXIT_INVALID, e.to_string()),
    };
    let (module, unit) = match files::module_from_file(&file) {
        Ok(v) => v,
        Err(e) => return fail(report, EXIT_INVALID, e.to_string()),
    };
    let opts = realize_options(cli);
    let t0 = Instant::now();
    let result = if unital {
        let Some(unit) = unit else {
            return fail(
                report,
                EXIT_INVALID,
                "unital realization requires a unit in the module file".into(),
            );
        };
        let pm = crate::fk::PointedRModule { module, unit };
        realize::realize_unital(&pm, &opts)
    } else {
        realize::realize_module(&module, &opts)
    };
    report
        .timings_ms
        .insert("realize".into(), t0.elapsed().as_millis());
    let certificate = match result {
        Ok(c) => c,
        Err(e @ (RealizeError::Precondition(_) | RealizeError::Unsupported(_))) => {
            report.set(
                "verdict",
                if matches!(e, RealizeError::Unsupported(_)) {
                    "unsupported"
                } else {
                    "precondition-failure"
                },
            );
            return fail(report, EXIT_INVALID, e.to_string());
        }
        Err(e @ RealizeError::BudgetExhausted { .. }) => {
            report.set("verdict", "budget-exhausted");
            return fail(report, EXIT_UNKNOWN, e.to_string());
        }
        Err(e) => return fail(report, EXIT_INTERNAL, e.to_string()),
    };
    let out_path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| module_path.with_extension("graph.json"));
    let cert_path = cert
        .map(Path::to_path_buf)
        .unwrap_or_else(|| module_path.with_extension("cert.json"));
    if let Err(e) = files::save_json(&out_path, &files::graph_to_file(&certificate.graph)) {
        return fail(report, EXIT_INTERNAL, e.to_string());
    }
    let cert_file = match files::certificate_to_file(
        certificate.graph.space(),
        &certificate.iso,
        certificate.unit_preserved,
    ) {
        Ok(f) => f,
        Err(e) => return fail(report, EXIT_INTERNAL, e.to_string()),
    };
    if let Err(e) = files::save_json(&cert_path, &cert_file) {
        return fail(report, EXIT_INTERNAL, e.to_string());
    }
    report.certificates.push(cert_path.display().to_string());
    report.set("graph", out_path.display().to_string());
    report.set("vertices", certificate.graph.vertex_count());
    report.set("verdict", "realized");
    if let Some(up) = certificate.unit_preserved {
        report.set("unit_preserved", up);
    }
    (EXIT_OK, report)
}

fn cmd_check_module(cli: &Cli, module_path: &Path) -> (i32, RunReport) {
    let mut report = RunReport::new("check-module", cli.seed);
    report.hash_input(module_path);
    let file: files::ModuleFile = match files::load_json(module_path) {
        Ok(f) => f,
        Err(e) => return fail(report, EXIT_INVALID, e.to_string()),
    };
    let (module, unit) = match files::module_from_file(&file) {
        Ok(v) => v,
        Err(e) => return fail(report, EXIT_INVALID, e.to_string()),
    };
    let relations = rmod::verify_relations(&module);
    let verdict = rmod::range_check(&module, unit.is_some());
    report.set("relations", relations);
    report.set("exact", verdict.exact);
    report.set("k1_free", verdict.k1_free.iter().all(|&b| b));
    report.set("rank_equal", verdict.rank_equal.iter().all(|&b| b));
    report.set("rank_leq", verdict.rank_leq.iter().all(|&b| b));
    report.set("admits_finite_realization", verdict.admits_finite());
    report.set("admits_unital_realization", verdict.admits_unital());
    report.set("has_unit", unit.is_some());
    let code = if relations && verdict.exact {
        EXIT_OK
    } else {
        EXIT_INVALID
    };
    (code, report)
}

fn cmd_check_graph(cli: &Cli, graph_path: &Path) -> (i32, RunReport) {
    let mut report = RunReport::new("check-graph", cli.seed);
    let graph = match load_graph_input(cli, graph_path, &mut report) {
        Ok(g) => g,
        Err((code, msg)) => return fail(report, code, msg),
    };
    let valid = graph.labeling_is_valid();
    report.set("labeling_valid", valid);
    if let Some((from, to)) = graph.first_invalid_edge() {
        report.set(
            "invalid_edge",
            format!("{} -> {}", graph.vertex_id(from), graph.vertex_id(to)),
        );
    }
    report.set("tight", graph.is_tight_sufficient() == Tightness::Tight);
    report.set("condition_k", graph.condition_k());
    match graph.structural_predicates() {
        Ok(r) => {
            report.set("purely_infinite_sufficient", r.purely_infinite_sufficient);
            report.set("is_cuntz_krieger", r.is_cuntz_krieger);
            report.set(
                "breaking_vertices",
                r.breaking_vertices
                    .iter()
                    .map(|b| graph.vertex_id(b.vertex).to_string())
                    .collect::<Vec<_>>(),
            );
            report.set("ideal_lattice_size", r.hereditary_saturated.len());
        }
        Err(e) => report.set("structural_predicates", format!("unavailable: {e}")),
    }
    if let Ok(matches) = graph.ideal_lattice_matches_space() {
        report.set("ideal_lattice_matches_space", matches);
    }
    let code = if valid { EXIT_OK } else { EXIT_INVALID };
    (code, report)
}

fn cmd_roundtrip(cli: &Cli, count: u32, unital: bool) -> (i32, RunReport) {
    let mut report = RunReport::new("roundtrip", cli.seed);
    let Some(space_path) = &cli.space else {
        return fail(report, EXIT_INVALID, "roundtrip requires --space".into());
    };
    report.hash_input(space_path);
    let space_file: crate::finspace::SpaceFile = match files::load_json(space_path) {
        Ok(f) => f,
        Err(e) => return fail(report, EXIT_INVALID, e.to_string()),
    };
    let space = match crate::finspace::FiniteT0Space::from_file(&space_file) {
        Ok(s) => s,
        Err(e) => return fail(report, EXIT_INVALID, e.to_string()),
    };
    let mut rng = sampler::rng_from_seed(cli.seed);
    let cfg = sampler::GraphConfig {
        singular_prob: if unital { 0.25 } else { 0.0 },
        ..sampler::GraphConfig::default()
    };
    let opts = realize_options(cli);
    let mut certified = 0u32;
    let mut exhausted = 0u32;
    let mut failures = 0u32;
    let mut skipped = 0u32;
    let t0 = Instant::now();
    for _ in 0..count {
        let Some((graph, module)) =
            sampler::random_small_module_graph(&mut rng, &space, &cfg, 6, 1, 60)
        else {
            skipped += 1;
            continue;
        };
        let outcome = if unital {
            match fk::unit_class_opts(&graph, FkOptions { self_check: false }) {
                Ok(pm) => realize::realize_unital(&pm, &opts),
                Err(_) => {
                    skipped += 1;
                    continue;
                }
            }
        } else {
            realize::realize_module(&module, &opts)
        };
        match outcome {
            Ok(cert) => {
                // the driver has already verified the certificate; verify
                // once more against a fresh recomputation
                let fresh = fk::compute_fk_opts(&cert.graph, FkOptions { self_check: false });
                match fresh {
                    Ok(fresh) => {
                        if rmod::verify_module_iso(&module, &fresh, &cert.iso) {
                            certified += 1;
                        } else {
                            failures += 1;
                        }
                    }
                    Err(_) => failures += 1,
                }
            }
            Err(RealizeError::BudgetExhausted { .. }) => exhausted += 1,
            Err(_) => failures += 1,
        }
    }
    report
        .timings_ms
        .insert("roundtrip".into(), t0.elapsed().as_millis());
    report.set("count", count);
    report.set("certified", certified);
    report.set("budget_exhausted", exhausted);
    report.set("certificate_failures", failures);
    report.set("skipped", skipped);
    (EXIT_OK, report)
}
