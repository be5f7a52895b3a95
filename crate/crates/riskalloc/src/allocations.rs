//! Capital-allocation principles and their certificates: subgradient and
//! supergradient densities, with-without and gradient allocations, and
//! full-allocation residuals.
//!
//! Core capabilities:
//! - `individual_allocation`, `with_without_allocation`, and
//!   `normalized_with_without` from repeated risk evaluations, with the
//!   with-without differences computed through weight-masked aggregation.
//! - `subgradient_density` for expected shortfall, entropic, and distortion
//!   measures, and `subgradient_allocation` pairing a density with every
//!   position.
//! - `gradient_allocation_fd`: centered finite differences over perturbed
//!   portfolio weights, parallelized across positions.
//! - Analytic gradients for distortion and exponential-distortion risk and
//!   for distorted rewards, evaluated with the exact discrete Choquet
//!   weights so they differentiate the implemented measures to machine
//!   precision on distinct-valued instances.
//! - `supergradient_density` for expectation, robust, and distorted rewards.
//! - `check_full_allocation`: the efficiency residual `sum(k) - rho(X)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::batch;
use crate::distortion::DistortionFunction;
use crate::error::{Error, Result};
use crate::measures::{robust_min, RewardMeasure, RewardMeasureSpec, RiskMeasure, RiskMeasureSpec};
use crate::scenario::{Outcome, PortfolioWeights, ScenarioSet};
use crate::SIGN_EPS;

/// Which allocation principle produced a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationKind {
    /// Stand-alone risk of each position.
    Individual,
    /// Risk of the portfolio minus the portfolio without the position.
    WithWithout,
    /// With-without contributions rescaled to meet full allocation.
    NormalizedWithWithout,
    /// Pairing of a risk subgradient density with each position.
    Subgradient,
    /// Centered finite-difference portfolio derivative.
    GradientFd,
    /// Closed-form portfolio derivative.
    GradientAnalytic,
    /// Coalition value increment from adding one position.
    MarginalContribution,
    /// Closed-form derivative of a reward measure.
    RewardGradient,
}

/// Capital (or reward) assigned to each position by one principle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationVector {
    /// Amount per position, in the order of the scenario set's labels.
    pub values: Vec<f64>,
    /// Principle that produced the vector.
    pub kind: AllocationKind,
    /// Provenance details (step sizes, measure parameters).
    pub meta: BTreeMap<String, String>,
}

impl AllocationVector {
    /// Validates finiteness and wraps the values.
    pub fn new(
        values: Vec<f64>,
        kind: AllocationKind,
        meta: BTreeMap<String, String>,
    ) -> Result<Self> {
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "allocation entry".to_string(),
                    value: v,
                });
            }
        }
        Ok(Self { values, kind, meta })
    }

    /// Sum of all entries.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// A scenario density pairing against outcomes as `E[xi Y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDensity {
    /// Density value per scenario.
    pub values: Vec<f64>,
}

impl ScenarioDensity {
    /// Validates finiteness and wraps the values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "density value".to_string(),
                    value: v,
                });
            }
        }
        Ok(Self { values })
    }

    /// The pairing `E[xi Y] = sum_j probs[j] * xi[j] * Y[j]`.
    pub fn pair(&self, y: &Outcome, scn: &ScenarioSet) -> Result<f64> {
        if self.values.len() != scn.m() || y.len() != scn.m() {
            return Err(Error::DimensionMismatch {
                expected: scn.m(),
                actual: self.values.len().min(y.len()),
            });
        }
        let mut acc = 0.0;
        for (j, &xi) in self.values.iter().enumerate() {
            acc += scn.probs()[j] * xi * y.values()[j];
        }
        Ok(acc)
    }
}

/// Stand-alone allocation `k_i = rho(X_i)`.
pub fn individual_allocation(
    spec: &RiskMeasureSpec,
    scn: &ScenarioSet,
) -> Result<AllocationVector> {
    let measure = RiskMeasure::compile(spec)?;
    let values = batch::try_map_indexed(scn.n(), |i| measure.evaluate(&scn.position(i)?, scn))?;
    AllocationVector::new(values, AllocationKind::Individual, BTreeMap::new())
}

/// With-without allocation `k_i = rho(X) - rho(X - X_i)`, with the reduced
/// portfolio formed by masking weight `i` to zero.
pub fn with_without_allocation(
    spec: &RiskMeasureSpec,
    scn: &ScenarioSet,
) -> Result<AllocationVector> {
    let measure = RiskMeasure::compile(spec)?;
    let ones = PortfolioWeights::ones(scn.n());
    let rho_x = measure.evaluate(&scn.aggregate(&ones)?, scn)?;
    let values = batch::try_map_indexed(scn.n(), |i| {
        let without = scn.aggregate(&ones.with_value(i, 0.0)?)?;
        Ok(rho_x - measure.evaluate(&without, scn)?)
    })?;
    AllocationVector::new(values, AllocationKind::WithWithout, BTreeMap::new())
}

/// With-without contributions rescaled by `rho(X) / sum_j ww_j` so the
/// result meets the full-allocation property.
pub fn normalized_with_without(
    spec: &RiskMeasureSpec,
    scn: &ScenarioSet,
) -> Result<AllocationVector> {
    let measure = RiskMeasure::compile(spec)?;
    let rho_x = measure.evaluate(&scn.aggregate(&PortfolioWeights::ones(scn.n()))?, scn)?;
    let ww = with_without_allocation(spec, scn)?;
    let sum = ww.total();
    if sum.abs() <= SIGN_EPS {
        return Err(Error::ZeroNormalizer { sum });
    }
    let values = ww.values.iter().map(|&w| w * rho_x / sum).collect();
    AllocationVector::new(
        values,
        AllocationKind::NormalizedWithWithout,
        BTreeMap::new(),
    )
}

/// Scenario indices sorted ascending by outcome value, with ties rejected.
fn sorted_distinct(x: &Outcome) -> Result<Vec<usize>> {
    let values = x.values();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    for w in order.windows(2) {
        if values[w[0]] == values[w[1]] {
            return Err(Error::TiedValues {
                value: values[w[0]],
            });
        }
    }
    Ok(order)
}

/// Exact discrete distortion weights `w_k = psi(F_k) - psi(F_(k-1))` along
/// the ascending order of `x`, returned as (scenario index, weight) pairs.
fn distortion_weights(
    psi: &DistortionFunction,
    x: &Outcome,
    scn: &ScenarioSet,
) -> Result<Vec<(usize, f64)>> {
    let order = sorted_distinct(x)?;
    let probs = scn.probs();
    let mut weights = Vec::with_capacity(order.len());
    let mut cum = 0.0;
    let mut psi_prev = psi.eval(0.0);
    for &j in &order {
        cum += probs[j];
        let psi_cur = psi.eval(cum.clamp(0.0, 1.0));
        weights.push((j, psi_cur - psi_prev));
        psi_prev = psi_cur;
    }
    Ok(weights)
}

/// Exact discrete reward weights `w_k = phi(1-F_(k-1)) - phi(1-F_k)` along
/// the ascending order of `x`.
fn distorted_reward_weights(
    phi: &DistortionFunction,
    x: &Outcome,
    scn: &ScenarioSet,
) -> Result<Vec<(usize, f64)>> {
    let order = sorted_distinct(x)?;
    let probs = scn.probs();
    let mut weights = Vec::with_capacity(order.len());
    let mut cum = 0.0;
    let mut phi_prev = phi.eval(1.0);
    for &j in &order {
        cum += probs[j];
        let phi_cur = phi.eval((1.0 - cum).clamp(0.0, 1.0));
        weights.push((j, phi_prev - phi_cur));
        phi_prev = phi_cur;
    }
    Ok(weights)
}

/// A subgradient density of the risk measure at `x`: a `xi` with
/// `rho(x + Y) >= rho(x) + E[xi Y]` for every direction `Y`.
pub fn subgradient_density(
    spec: &RiskMeasureSpec,
    x: &Outcome,
    scn: &ScenarioSet,
) -> Result<ScenarioDensity> {
    if x.len() != scn.m() {
        return Err(Error::DimensionMismatch {
            expected: scn.m(),
            actual: x.len(),
        });
    }
    let probs = scn.probs();
    match spec {
        RiskMeasureSpec::Es { alpha } => {
            RiskMeasure::compile(spec)?;
            let values = x.values();
            let mut order: Vec<usize> = (0..values.len()).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            let mut xi = vec![0.0; values.len()];
            let mut remaining = *alpha;
            for &j in &order {
                if remaining <= 0.0 {
                    break;
                }
                let w = probs[j].min(remaining);
                xi[j] = -(w / probs[j]) / alpha;
                remaining -= w;
            }
            ScenarioDensity::new(xi)
        }
        RiskMeasureSpec::Entropic { a } => {
            RiskMeasure::compile(spec)?;
            let mut mx = f64::NEG_INFINITY;
            for &v in x.values() {
                let e = -a * v;
                if !e.is_finite() {
                    return Err(Error::ExpOverflow { a: *a, exponent: e });
                }
                mx = mx.max(e);
            }
            let mut denom = 0.0;
            let mut gibbs = Vec::with_capacity(x.len());
            for (j, &v) in x.values().iter().enumerate() {
                let e = (-a * v - mx).exp();
                gibbs.push(e);
                denom += probs[j] * e;
            }
            ScenarioDensity::new(gibbs.into_iter().map(|e| -e / denom).collect())
        }
        RiskMeasureSpec::Distortion { psi } => {
            let psi = psi.build()?;
            // The loss -x sorts descending where x sorts ascending, so the
            // cumulative weights run along ascending x.
            let weights = distortion_weights(&psi, x, scn)?;
            let mut xi = vec![0.0; x.len()];
            for (j, w) in weights {
                xi[j] = -w / probs[j];
            }
            ScenarioDensity::new(xi)
        }
        RiskMeasureSpec::DistortionExponential { .. } | RiskMeasureSpec::Var { .. } => {
            Err(Error::UnsupportedMeasure {
                operation: "subgradient_density",
                kind: spec.kind().to_string(),
            })
        }
    }
}

/// Pairs a subgradient density with every position: `k_i = E[xi X_i]`.
pub fn subgradient_allocation(xi: &ScenarioDensity, scn: &ScenarioSet) -> Result<AllocationVector> {
    let values = batch::try_map_indexed(scn.n(), |i| xi.pair(&scn.position(i)?, scn))?;
    AllocationVector::new(values, AllocationKind::Subgradient, BTreeMap::new())
}

/// Centered finite-difference gradient allocation
/// `k_i = (rho(X + h X_i) - rho(X - h X_i)) / (2h)` over perturbed weights.
pub fn gradient_allocation_fd(
    spec: &RiskMeasureSpec,
    scn: &ScenarioSet,
    step: f64,
) -> Result<AllocationVector> {
    let measure = RiskMeasure::compile(spec)?;
    fd_gradient_of(
        |u| measure.evaluate(&scn.aggregate(u)?, scn),
        scn.n(),
        step,
        AllocationKind::GradientFd,
    )
}

/// Centered finite-difference gradient of any portfolio functional around
/// the all-ones portfolio.
pub fn fd_gradient_of(
    f: impl Fn(&PortfolioWeights) -> Result<f64> + Sync,
    n: usize,
    step: f64,
    kind: AllocationKind,
) -> Result<AllocationVector> {
    check_step(step)?;
    let ones = PortfolioWeights::ones(n);
    let values = batch::try_map_indexed(n, |i| {
        let up = f(&ones.perturbed(i, step)?)?;
        let down = f(&ones.perturbed(i, -step)?)?;
        Ok((up - down) / (2.0 * step))
    })?;
    let mut meta = BTreeMap::new();
    meta.insert("step".to_string(), format!("{step}"));
    AllocationVector::new(values, kind, meta)
}

fn check_step(step: f64) -> Result<()> {
    if !(step.is_finite() && step > 0.0 && step <= 0.1) {
        return Err(Error::InvalidParameter {
            name: "step",
            requirement: "0 < step <= 0.1",
            value: step,
        });
    }
    Ok(())
}

/// Closed-form gradient of the exponential-distortion risk at the all-ones
/// portfolio: `k_i = sum_k (-X_i,(k)) w_k e_k / sum_k w_k e_k` with the
/// exact discrete distortion weights `w_k` and stabilized exponentials
/// `e_k`. Differentiates the implemented measure exactly when the aggregate
/// values are pairwise distinct.
pub fn analytic_gradient_distortion_exponential(
    psi: &DistortionFunction,
    a: f64,
    scn: &ScenarioSet,
) -> Result<AllocationVector> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidParameter {
            name: "a",
            requirement: "a > 0",
            value: a,
        });
    }
    let x = scn.aggregate(&PortfolioWeights::ones(scn.n()))?;
    let weights = distortion_weights(psi, &x, scn)?;
    let mut mx = f64::NEG_INFINITY;
    for &v in x.values() {
        let e = -a * v;
        if !e.is_finite() {
            return Err(Error::ExpOverflow { a, exponent: e });
        }
        mx = mx.max(e);
    }
    let weighted: Vec<(usize, f64)> = weights
        .into_iter()
        .map(|(j, w)| (j, w * (-a * x.values()[j] - mx).exp()))
        .collect();
    let denom: f64 = weighted.iter().map(|&(_, we)| we).sum();
    let values = batch::try_map_indexed(scn.n(), |i| {
        let row = &scn.positions()[i];
        let mut num = 0.0;
        for &(j, we) in &weighted {
            num += -row[j] * we;
        }
        Ok(num / denom)
    })?;
    let mut meta = BTreeMap::new();
    meta.insert("a".to_string(), format!("{a}"));
    meta.insert("psi".to_string(), psi.name().to_string());
    AllocationVector::new(values, AllocationKind::GradientAnalytic, meta)
}

/// Closed-form gradient of the distortion risk at the all-ones portfolio:
/// the pairing of each position with the exact discrete subgradient density.
pub fn analytic_gradient_distortion(
    psi: &DistortionFunction,
    scn: &ScenarioSet,
) -> Result<AllocationVector> {
    let x = scn.aggregate(&PortfolioWeights::ones(scn.n()))?;
    let weights = distortion_weights(psi, &x, scn)?;
    let values = batch::try_map_indexed(scn.n(), |i| {
        let row = &scn.positions()[i];
        let mut acc = 0.0;
        for &(j, w) in &weights {
            acc += -row[j] * w;
        }
        Ok(acc)
    })?;
    let mut meta = BTreeMap::new();
    meta.insert("psi".to_string(), psi.name().to_string());
    AllocationVector::new(values, AllocationKind::GradientAnalytic, meta)
}

/// Closed-form gradient of the distorted reward at the all-ones portfolio:
/// `t_i = sum_k X_i,(k) * [phi(1-F_(k-1)) - phi(1-F_k)]`.
pub fn gradient_reward_allocation_distorted(
    phi: &DistortionFunction,
    scn: &ScenarioSet,
) -> Result<AllocationVector> {
    let x = scn.aggregate(&PortfolioWeights::ones(scn.n()))?;
    let weights = distorted_reward_weights(phi, &x, scn)?;
    let values = batch::try_map_indexed(scn.n(), |i| {
        let row = &scn.positions()[i];
        let mut acc = 0.0;
        for &(j, w) in &weights {
            acc += row[j] * w;
        }
        Ok(acc)
    })?;
    let mut meta = BTreeMap::new();
    meta.insert("phi".to_string(), phi.name().to_string());
    AllocationVector::new(values, AllocationKind::RewardGradient, meta)
}

/// A supergradient density of the reward measure at `x`: a `d` with
/// `theta(x + Y) <= theta(x) + E[d Y]` for every direction `Y`.
pub fn supergradient_density(
    spec: &RewardMeasureSpec,
    x: &Outcome,
    scn: &ScenarioSet,
) -> Result<ScenarioDensity> {
    if x.len() != scn.m() {
        return Err(Error::DimensionMismatch {
            expected: scn.m(),
            actual: x.len(),
        });
    }
    match spec {
        RewardMeasureSpec::Expectation => ScenarioDensity::new(vec![1.0; scn.m()]),
        RewardMeasureSpec::Robust { densities } => {
            RewardMeasure::compile(spec)?;
            let (index, _) = robust_min(densities, x, scn)?;
            ScenarioDensity::new(densities[index].clone())
        }
        RewardMeasureSpec::Distorted { phi } => {
            let phi = phi.build()?;
            let weights = distorted_reward_weights(&phi, x, scn)?;
            let mut d = vec![0.0; x.len()];
            for (j, w) in weights {
                d[j] = w / scn.probs()[j];
            }
            ScenarioDensity::new(d)
        }
    }
}

/// Full-allocation (efficiency) residual `sum_i k_i - rho_x`.
pub fn check_full_allocation(k: &AllocationVector, rho_x: f64) -> f64 {
    k.total() - rho_x
}
