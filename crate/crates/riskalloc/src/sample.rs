//! Seeded random instance generators for property and acceptance tests.
//!
//! Capabilities:
//! - reproducible scenario sets with bounded outcomes and either uniform or
//!   random strictly positive probabilities
//! - outcomes, portfolio weights, and scenario densities matched to a
//!   scenario set's dimensions
//! - a retry combinator for resampling until a numeric precondition holds,
//!   with an explicit budget
//!
//! Generation is sequential from an explicit `u64` seed (ChaCha8), so a
//! given seed yields the same instance on every platform, thread count, and
//! feature configuration.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scenario::{Outcome, PortfolioWeights, ScenarioSet};

/// A deterministic generator for the given seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` values drawn uniformly from `[lo, hi)`.
pub fn values_in(rng: &mut impl Rng, count: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..count).map(|_| rng.random_range(lo..hi)).collect()
}

/// `m` strictly positive probabilities summing to one exactly.
pub fn probabilities(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![1.0];
    }
    let raw = values_in(rng, m, 0.2, 1.0);
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let head: f64 = probs[..m - 1].iter().sum();
    probs[m - 1] = 1.0 - head;
    probs
}

/// A scenario set with random strictly positive probabilities and `n`
/// positions of `m` outcomes each, drawn from `[lo, hi)`.
pub fn scenario_set(
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    lo: f64,
    hi: f64,
) -> Result<ScenarioSet> {
    let probs = probabilities(rng, m);
    let positions = (0..n).map(|_| values_in(rng, m, lo, hi)).collect();
    let labels = (1..=n).map(|i| format!("X_{i}")).collect();
    ScenarioSet::new(probs, positions, labels)
}

/// A scenario set with uniform probabilities and outcomes from `[lo, hi)`.
pub fn uniform_scenario_set(
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    lo: f64,
    hi: f64,
) -> Result<ScenarioSet> {
    let positions = (0..n).map(|_| values_in(rng, m, lo, hi)).collect();
    ScenarioSet::uniform(positions)
}

/// Like [`scenario_set`], but resampled until the aggregate outcome at unit
/// weights has pairwise distinct values with gaps of at least
/// `1e-6 * (hi - lo)`, as required by measures whose density construction
/// needs a strictly increasing distribution function.
pub fn scenario_set_distinct(
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    lo: f64,
    hi: f64,
) -> Result<ScenarioSet> {
    let min_gap = 1e-6 * (hi - lo);
    sample_until(1000, || {
        let scn = scenario_set(rng, n, m, lo, hi)?;
        let x = scn.aggregate(&PortfolioWeights::ones(n))?;
        let mut sorted = x.values().to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let distinct = sorted.windows(2).all(|w| w[1] - w[0] >= min_gap);
        Ok(distinct.then_some(scn))
    })
}

/// An outcome of `m` values drawn from `[lo, hi)`.
pub fn outcome(rng: &mut impl Rng, m: usize, lo: f64, hi: f64) -> Result<Outcome> {
    Outcome::new(values_in(rng, m, lo, hi))
}

/// Portfolio weights drawn from `[1 - spread, 1 + spread)` around ones.
pub fn weights_near_ones(rng: &mut impl Rng, n: usize, spread: f64) -> Result<PortfolioWeights> {
    PortfolioWeights::new(values_in(rng, n, 1.0 - spread, 1.0 + spread))
}

/// A strictly positive scenario density with expectation one under `scn`.
pub fn density(rng: &mut impl Rng, scn: &ScenarioSet) -> Vec<f64> {
    let raw = values_in(rng, scn.m(), 0.1, 1.0);
    let mean: f64 = raw.iter().zip(scn.probs()).map(|(g, p)| g * p).sum();
    raw.iter().map(|g| g / mean).collect()
}

/// Runs `attempt` until it yields a sample, up to `max_tries` times.
/// `Ok(None)` means "resample"; errors abort immediately.
pub fn sample_until<T>(
    max_tries: usize,
    mut attempt: impl FnMut() -> Result<Option<T>>,
) -> Result<T> {
    for _ in 0..max_tries {
        if let Some(sample) = attempt()? {
            return Ok(sample);
        }
    }
    Err(Error::SamplingExhausted { tries: max_tries })
}
