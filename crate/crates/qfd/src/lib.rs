//! Geometrically symmetrised quadratic discriminants on image chips.
//!
//! A chip is a vector of pixel values on a small square or hexagonal
//! lattice. Its quadratic feature vector stacks the pixels and all
//! ordered pixel-pair products, and a discriminant is a linear functional
//! on those features trained to separate a target class from clutter.
//! Imposing invariance under the lattice point group collapses features
//! into orbit classes, shrinking the coefficient count from `N + N^2` to
//! the number of classes without changing what the symmetrised
//! discriminant can express.
//!
//! The crate is organised bottom-up:
//!
//! - [`lattice`]: index conventions and pixel geometry for both lattices.
//! - [`point_group`]: the dihedral symmetry groups as explicit pixel
//!   permutations, with closure, verification and a subgroup catalogue.
//! - [`degeneracy`]: orbit partitions of pixels and pixel pairs, the
//!   reduction and expansion maps between full and reduced coordinates,
//!   and the stabiliser census.
//! - [`ensemble_stats`]: single-pass, mergeable reduced moment
//!   accumulation, plus the full-coordinate reference path and
//!   group-averaged symmetrisation it is checked against.
//! - [`qfd_train`]: the truncated-spectrum solver, the deflection
//!   objective and model training.
//! - [`detect_eval`]: scoring, response invariance checks and detection
//!   error tradeoff curves.
//! - [`synth`]: stationary Gaussian texture chips with an optional
//!   centre bump, drawn from per-chip deterministic streams.
//! - [`chip_io`]: binary file formats for chips, statistics and models.
//! - [`verify`]: a self-contained consistency suite over all of the
//!   above.
//! - [`cli`]: the `qfd` command-line tool.

pub mod chip_io;
pub mod cli;
pub mod degeneracy;
pub mod detect_eval;
pub mod ensemble_stats;
pub mod error;
pub mod lattice;
pub mod point_group;
pub mod qfd_train;
pub mod synth;
pub mod verify;

pub use chip_io::ChipSet;
pub use degeneracy::{DegeneracyMatrix, DofCounts};
pub use ensemble_stats::EnsembleStats;
pub use error::{QfdError, Result};
pub use lattice::{LatticeKind, LatticeSpec};
pub use point_group::{GroupRep, OpLabel, SymmetryOp};
pub use qfd_train::QfdModel;
pub use synth::SynthSpec;
