//! Exact integer linear algebra: normal forms, finitely generated abelian
//! groups as presentations, homomorphisms, kernels, cokernels, and exactness
//! checks.
//!
//! Conventions used throughout the crate:
//!
//! * matrices act from the **right** on row vectors, `x ↦ x·M`;
//! * composing `f: A → B` with `g: B → C` gives `fg` (apply `f` first), so
//!   the matrix of a composite is the ordinary product `F·G`;
//! * a finitely generated abelian group is `ℤ^n` modulo the **row span** of
//!   a relation matrix;
//! * all entries are unbounded integers — intermediate normal-form entries
//!   can grow far beyond machine words.

mod diagram;
mod group;
mod hom;
mod matrix;
mod smith;
mod snake;
mod solve;

pub use diagram::{certify_iso, Diagram, DiagramArrow};
pub use group::{direct_sum, FgAbGroup};
pub use hom::{cokernel, cokernel_of_hom, is_exact_at, kernel, GroupHom};
pub use matrix::{
    hermite_of, in_lattice, lattice_contains, lattice_eq, lattice_union, reduce_mod_hnf,
    row_hermite, IntMatrix,
};
pub use smith::{smith_normal_form, SmithDecomposition};
pub use snake::{assemble_lower_block, connecting_data, SixTermSequence};
pub use solve::{
    coset_points_in_box, first_coset_point_in_box, kernel_basis, preimage_lattice, solve_left, solve_left_matrix,
    solve_mod, solve_sandwich_system, Sandwich,
};

use thiserror::Error;

/// Errors from lattice-level operations. These signal caller mistakes
/// (mismatched shapes or groups), never numerical failure — the arithmetic
/// is exact.
#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("middle groups do not match: {0}")]
    MiddleMismatch(String),
    #[error("matrix shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("homomorphism is not well defined: relation row {row} maps outside the target relation lattice")]
    IllDefinedHom { row: usize },
    #[error("six-term self-check failed at slot {slot}: sequence not exact (implementation bug)")]
    ExactnessSelfCheck { slot: &'static str },
}
