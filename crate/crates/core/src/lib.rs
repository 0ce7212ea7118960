//! Score inference for generalized Bradley-Terry models.
//!
//! Paired comparisons `r_ab` between alternatives are modeled as draws from
//! an exponentially tilted root law, `p(r | θ_ab) ∝ e^{θ_ab r} f(r)`, where
//! `θ_ab = θ_a - θ_b`. Scores are the MAP estimate under an i.i.d. Gaussian
//! prior, which is the minimizer of a strongly convex loss built from the
//! root law's cumulant-generating function.
//!
//! - [`rootlaw`]: the root-law catalog, cumulant functions and tilted samplers.
//! - [`comparisons`]: alternatives, antisymmetric comparison matrices, edits and partial orders.
//! - [`solver`]: loss, gradient, Hessian and the certified Newton MAP solver.
//! - [`properties`]: monotonicity, resilience, neutral comparisons and moment checks.
//! - [`sim`]: Erdős–Rényi comparison graphs, synthetic data and the three error experiments.
//! - [`cli`]: the `gbt` command-line front end.

pub mod cli;
pub mod comparisons;
pub mod error;
pub mod properties;
pub mod quadrature;
pub mod rootlaw;
pub mod sim;
pub mod solver;
mod special;

pub use comparisons::{AlternativeSet, ComparisonEdit, ComparisonMatrix, EditKind, PartialOrder};
pub use error::{Error, Result};
pub use rootlaw::{Family, RootLaw, SupportKind};
pub use solver::{PriorConfig, ScoreVector, SolveReport, SolverOptions};
pub use special::{beta_even_moment, CgfTriple};
