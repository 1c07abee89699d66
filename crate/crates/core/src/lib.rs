//! Greedy subset selection over smooth concave objectives.
//!
//! The crate maximizes `l(β)` subject to `‖β‖₀ ≤ k` for pluggable concave
//! objectives (least squares, logistic log-likelihood, ℓ2-regularized
//! logistic). The induced normalized set function
//! `f(S) = max_{supp(β) ⊆ S} l(β) − l(0)` is driven by four support-selection
//! strategies (oblivious ranking, forward stepwise, orthogonal matching
//! pursuit, forward-backward), and an analysis layer computes submodularity
//! ratios, restricted strong-concavity/smoothness parameters, and checks the
//! resulting approximation and recovery bounds against brute-force oracles.
//!
//! Modules map onto the pipeline stages:
//!
//! * [`model`] — validated domain types (datasets, supports, traces)
//! * [`objective`] — objective values, gradients, Hessians
//! * [`solver`] — restricted maximization and the set function `f`
//! * [`select`] — the four selection algorithms
//! * [`analysis`] — γ, (m, M, M̃), bound formulas, report assembly
//! * [`datagen`] — seeded synthetic data generators
//! * [`evaluate`] — brute-force oracle, recovery metrics, experiment harness
//! * [`io`] — CSV datasets and versioned JSON artifacts

pub mod analysis;
pub mod datagen;
pub mod error;
pub mod evaluate;
pub mod io;
mod linalg;
pub mod model;
pub mod objective;
pub mod select;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    Algorithm, Dataset, LabelEncoding, ParamVector, SelectionTrace, StepAction, Support, TraceStep,
};
pub use objective::{ObjectiveKind, ObjectiveSpec};
pub use solver::{RestrictedFit, SetFunctionOracle, SolverConfig};
