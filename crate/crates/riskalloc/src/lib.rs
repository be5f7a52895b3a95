//! Scenario-space toolkit for convex and coherent risk measures, capital
//! allocations, reward-risk ratios, and machine-checked suitability verdicts.
//!
//! Core capabilities:
//! - Finite scenario spaces with explicit probabilities, position matrices,
//!   portfolio aggregation, empirical distribution functions, and quantiles.
//! - Risk measures (expected shortfall, entropic, distortion, exponential
//!   distortion, value-at-risk) and reward measures (expectation, robust over
//!   density sets, distorted expectation) evaluated exactly on the scenario
//!   space, plus randomized axiom checkers that return reproducible witnesses
//!   for violated axioms.
//! - Capital allocations: individual, with-without, normalized with-without,
//!   sub/supergradient densities and allocations, finite-difference and
//!   analytic gradients, and full-allocation residuals.
//! - Reward-risk ratios with explicit zero/infinity conventions and portfolio
//!   classification.
//! - Suitability verdicts: grid-based verification of ratio-monotonicity
//!   definitions (`def_3_2`, `def_3_5`, `def_3_7`), sufficient-condition
//!   checks (`thm_3_3_conditions`, `thm_3_6_conditions`), and a constructive
//!   counterexample showing non-gradient allocations break strict
//!   suitability.
//! - Coalition games on positions: coalition values, admissibility,
//!   ratio-suitable allocations (`game_def_4_1`), marginal contributions, and
//!   efficiency/symmetry/dummy property reports.
//! - A data-parallel batch layer (rayon) with an always-available sequential
//!   fallback, used by the checkers and benchmarked against each other.
//!
//! All randomized components take explicit seeds and generate their inputs
//! sequentially before any parallel evaluation, so results are reproducible
//! across thread counts and across the `parallel` feature flag.

pub mod allocations;
pub mod batch;
pub mod distortion;
pub mod error;
pub mod game;
pub mod measures;
pub mod performance;
pub mod sample;
pub mod scenario;
pub mod suitability;

pub use error::{Error, Result};
pub use scenario::{Outcome, PortfolioWeights, ScenarioSet};

/// Absolute tolerance for scenario probabilities summing to one.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Default slack used by axiom checkers and suitability verifiers.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default step for finite-difference gradients and portfolio perturbations.
pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Absolute tolerance for density sets pairing to expectation one.
pub const DENSITY_PAIRING_TOL: f64 = 1e-10;
/// Threshold below which a signed quantity is treated as having no sign.
pub const SIGN_EPS: f64 = 1e-12;
