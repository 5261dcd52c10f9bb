//! Exact computation with the reduced filtered K-theory of labeled-graph
//! algebras over finite T₀-spaces.
//!
//! The crate works entirely with integer matrix data. A directed graph with
//! edge multiplicities and a labeling of its vertices by points of a finite
//! T₀-space determines a family of K-groups (kernels and cokernels of integer
//! matrices) together with natural maps between them. This crate can
//!
//! * compute that invariant — an *R-module*: per point, a K₁-group, a K₀-group
//!   of the open boundary, and a K₀-group of the smallest open set, with index
//!   and inclusion-induced maps ([`fk`]);
//! * validate the module relations, exactness, and range conditions that
//!   characterize which modules arise from graphs ([`rmod`]);
//! * decide stable isomorphism of suitable inputs by invariant comparison,
//!   with verified witnesses and named refuting invariants ([`rmod`], [`cli`]);
//! * realize an admissible module as a concrete labeled graph, emitting an
//!   isomorphism certificate that an independent checker re-verifies
//!   ([`realize`]).
//!
//! Everything rests on exact integer linear algebra over unbounded integers:
//! Smith and Hermite normal forms, finitely presented abelian groups,
//! kernels, cokernels, and six-term exact sequences ([`zlattice`]), plus the
//! order calculus of finite T₀-spaces ([`finspace`]) and the graph-side
//! predicates ([`graphcore`]).
//!
//! See the `examples/` directory for runnable walkthroughs of each
//! capability, and the `graphfk` binary for the file-driven interface.

pub mod cli;
pub mod files;
pub mod finspace;
pub mod fk;
pub mod graphcore;
pub mod realize;
pub mod rmod;
pub mod sampler;
pub mod zlattice;

pub use finspace::FiniteT0Space;
pub use fk::{PointedRModule, RModule};
pub use graphcore::LabeledGraph;
pub use zlattice::{FgAbGroup, GroupHom, IntMatrix};
