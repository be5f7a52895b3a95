//! Risk and reward measures on scenario outcomes, axiom auditing, and the
//! sign-preservation condition for perturbed portfolios.
//!
//! Core capabilities:
//! - `RiskMeasureSpec` / `RewardMeasureSpec`: serializable descriptions of
//!   expected shortfall, entropic, distortion, exponential-distortion and
//!   value-at-risk measures, and of expectation, robust, and distorted
//!   rewards.
//! - `RiskMeasure` / `RewardMeasure`: compiled evaluators with collected
//!   shape warnings, reusable across many outcomes.
//! - `choquet_integral`: exact discrete Choquet integral over the distorted
//!   survival function.
//! - `check_risk_axioms` / `check_reward_axioms`: seeded randomized audits of
//!   the defining axioms, returning a reproducible witness for the first
//!   violation of each axiom.
//! - `check_condition_a`: per-position sign preservation of the risk under
//!   portfolio perturbations across a step grid.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distortion::{DistortionFunction, DistortionSpec, Shape};
use crate::error::{Error, Result};
use crate::scenario::{expectation, quantile, Outcome, PortfolioWeights, ScenarioSet};
use crate::{DEFAULT_TOL, DENSITY_PAIRING_TOL, SIGN_EPS};

/// Absolute slack for axiom inequalities, absorbing floating-point noise.
const AXIOM_SLACK: f64 = DEFAULT_TOL;

/// Serializable description of a risk measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskMeasureSpec {
    /// Expected shortfall at level `alpha` in (0,1).
    Es { alpha: f64 },
    /// Entropic measure with risk-aversion `a > 0`.
    Entropic { a: f64 },
    /// Distortion risk: Choquet integral of the loss under `psi`.
    Distortion { psi: DistortionSpec },
    /// Exponential distortion risk with distortion `psi` and aversion `a > 0`.
    DistortionExponential { psi: DistortionSpec, a: f64 },
    /// Value-at-risk at level `alpha`; deliberately non-subadditive control.
    Var { alpha: f64 },
}

impl RiskMeasureSpec {
    /// Short kind name, matching the serialized `kind` tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Es { .. } => "es",
            Self::Entropic { .. } => "entropic",
            Self::Distortion { .. } => "distortion",
            Self::DistortionExponential { .. } => "distortion_exponential",
            Self::Var { .. } => "var",
        }
    }
}

/// Serializable description of a reward measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardMeasureSpec {
    /// Plain expectation under the scenario probabilities.
    Expectation,
    /// Worst-case expectation over a finite set of scenario densities.
    Robust { densities: Vec<Vec<f64>> },
    /// Distorted expectation: Choquet integral of the gain under `phi`.
    Distorted { phi: DistortionSpec },
}

impl RewardMeasureSpec {
    /// Short kind name, matching the serialized `kind` tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Expectation => "expectation",
            Self::Robust { .. } => "robust",
            Self::Distorted { .. } => "distorted",
        }
    }
}

/// Compiled risk measure: validated parameters, built distortions, and any
/// shape warnings collected during compilation.
#[derive(Debug, Clone)]
pub struct RiskMeasure {
    kind: RiskKind,
    warnings: Vec<String>,
}

#[derive(Debug, Clone)]
enum RiskKind {
    Es { alpha: f64 },
    Entropic { a: f64 },
    Distortion { psi: DistortionFunction },
    DistortionExponential { psi: DistortionFunction, a: f64 },
    Var { alpha: f64 },
}

impl RiskMeasure {
    /// Validates a spec and builds a reusable evaluator.
    pub fn compile(spec: &RiskMeasureSpec) -> Result<Self> {
        let mut warnings = Vec::new();
        let kind = match spec {
            RiskMeasureSpec::Es { alpha } => {
                check_level(*alpha)?;
                RiskKind::Es { alpha: *alpha }
            }
            RiskMeasureSpec::Entropic { a } => {
                check_aversion(*a)?;
                RiskKind::Entropic { a: *a }
            }
            RiskMeasureSpec::Distortion { psi } => {
                let psi = psi.build()?;
                warnings.extend(psi.shape_warning(Shape::Concave));
                RiskKind::Distortion { psi }
            }
            RiskMeasureSpec::DistortionExponential { psi, a } => {
                check_aversion(*a)?;
                let psi = psi.build()?;
                warnings.extend(psi.shape_warning(Shape::Concave));
                RiskKind::DistortionExponential { psi, a: *a }
            }
            RiskMeasureSpec::Var { alpha } => {
                check_level(*alpha)?;
                RiskKind::Var { alpha: *alpha }
            }
        };
        Ok(Self { kind, warnings })
    }

    /// Shape warnings collected while compiling (never errors).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Evaluates the risk of an outcome on the scenario space.
    pub fn evaluate(&self, x: &Outcome, scn: &ScenarioSet) -> Result<f64> {
        match &self.kind {
            RiskKind::Es { alpha } => expected_shortfall(*alpha, x, scn),
            RiskKind::Entropic { a } => entropic(*a, x, scn),
            RiskKind::Distortion { psi } => choquet_integral(psi, &x.scale(-1.0), scn),
            RiskKind::DistortionExponential { psi, a } => distortion_exponential(psi, *a, x, scn),
            RiskKind::Var { alpha } => Ok(-quantile(x, scn, *alpha)?),
        }
    }
}

/// Compiled reward measure.
#[derive(Debug, Clone)]
pub struct RewardMeasure {
    kind: RewardKind,
    warnings: Vec<String>,
}

#[derive(Debug, Clone)]
enum RewardKind {
    Expectation,
    Robust { densities: Vec<Vec<f64>> },
    Distorted { phi: DistortionFunction },
}

impl RewardMeasure {
    /// Validates a spec and builds a reusable evaluator.
    pub fn compile(spec: &RewardMeasureSpec) -> Result<Self> {
        let mut warnings = Vec::new();
        let kind = match spec {
            RewardMeasureSpec::Expectation => RewardKind::Expectation,
            RewardMeasureSpec::Robust { densities } => {
                if densities.is_empty() {
                    return Err(Error::EmptyDensitySet);
                }
                for (d, density) in densities.iter().enumerate() {
                    for (j, &value) in density.iter().enumerate() {
                        if !(value.is_finite() && value >= 0.0) {
                            return Err(Error::NegativeDensity {
                                density: d,
                                scenario: j,
                                value,
                            });
                        }
                    }
                }
                RewardKind::Robust {
                    densities: densities.clone(),
                }
            }
            RewardMeasureSpec::Distorted { phi } => {
                let phi = phi.build()?;
                warnings.extend(phi.shape_warning(Shape::Convex));
                RewardKind::Distorted { phi }
            }
        };
        Ok(Self { kind, warnings })
    }

    /// Shape warnings collected while compiling (never errors).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Evaluates the reward of an outcome on the scenario space.
    pub fn evaluate(&self, x: &Outcome, scn: &ScenarioSet) -> Result<f64> {
        match &self.kind {
            RewardKind::Expectation => expectation(x, scn),
            RewardKind::Robust { densities } => Ok(robust_min(densities, x, scn)?.1),
            RewardKind::Distorted { phi } => choquet_integral(phi, x, scn),
        }
    }
}

/// Evaluates a risk spec on an outcome (compile + evaluate in one call).
pub fn evaluate_risk(spec: &RiskMeasureSpec, x: &Outcome, scn: &ScenarioSet) -> Result<f64> {
    RiskMeasure::compile(spec)?.evaluate(x, scn)
}

/// Evaluates a reward spec on an outcome (compile + evaluate in one call).
pub fn evaluate_reward(spec: &RewardMeasureSpec, x: &Outcome, scn: &ScenarioSet) -> Result<f64> {
    RewardMeasure::compile(spec)?.evaluate(x, scn)
}

fn check_level(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            requirement: "0 < alpha < 1",
            value: alpha,
        });
    }
    Ok(())
}

fn check_aversion(a: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidParameter {
            name: "a",
            requirement: "a > 0",
            value: a,
        });
    }
    Ok(())
}

/// Exact discrete Choquet integral: with distinct support values
/// `v_(1) < ... < v_(r)` and survival probabilities `S_k = P[X >= v_(k)]`,
/// returns `sum_k v_(k) * (phi(S_k) - phi(S_(k+1)))` with `S_(r+1) = 0`.
pub fn choquet_integral(phi: &DistortionFunction, x: &Outcome, scn: &ScenarioSet) -> Result<f64> {
    if x.len() != scn.m() {
        return Err(Error::DimensionMismatch {
            expected: scn.m(),
            actual: x.len(),
        });
    }
    let values = x.values();
    let probs = scn.probs();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut groups: Vec<(f64, f64)> = Vec::new();
    for &j in &order {
        match groups.last_mut() {
            Some((v, p)) if *v == values[j] => *p += probs[j],
            _ => groups.push((values[j], probs[j])),
        }
    }

    let r = groups.len();
    let mut survival = vec![0.0; r + 1];
    for k in (0..r).rev() {
        survival[k] = survival[k + 1] + groups[k].1;
    }
    let mut acc = 0.0;
    let mut phi_hi = phi.eval(survival[0].clamp(0.0, 1.0));
    for k in 0..r {
        let phi_lo = if k + 1 < r {
            phi.eval(survival[k + 1].clamp(0.0, 1.0))
        } else {
            phi.eval(0.0)
        };
        acc += groups[k].0 * (phi_hi - phi_lo);
        phi_hi = phi_lo;
    }
    Ok(acc)
}

/// Tail average of the lowest `alpha` probability mass of `x`, negated:
/// the integral of the lower quantile over (0, alpha], divided by alpha.
fn expected_shortfall(alpha: f64, x: &Outcome, scn: &ScenarioSet) -> Result<f64> {
    if x.len() != scn.m() {
        return Err(Error::DimensionMismatch {
            expected: scn.m(),
            actual: x.len(),
        });
    }
    let values = x.values();
    let probs = scn.probs();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut remaining = alpha;
    let mut acc = 0.0;
    for &j in &order {
        if remaining <= 0.0 {
            break;
        }
        let w = probs[j].min(remaining);
        acc += w * values[j];
        remaining -= w;
    }
    Ok(-acc / alpha)
}

/// Entropic risk `(1/a) ln E[exp(-a x)]`, evaluated in log-sum-exp form.
fn entropic(a: f64, x: &Outcome, scn: &ScenarioSet) -> Result<f64> {
    if x.len() != scn.m() {
        return Err(Error::DimensionMismatch {
            expected: scn.m(),
            actual: x.len(),
        });
    }
    let mx = max_exponent(a, x)?;
    let mut s = 0.0;
    for (j, &v) in x.values().iter().enumerate() {
        s += scn.probs()[j] * (-a * v - mx).exp();
    }
    Ok((mx + s.ln()) / a)
}

/// Exponential distortion risk `(1/a) ln Choquet_psi(exp(-a x))`, with the
/// exponentials stabilized by factoring out their maximum (the Choquet
/// integral is positively homogeneous).
fn distortion_exponential(
    psi: &DistortionFunction,
    a: f64,
    x: &Outcome,
    scn: &ScenarioSet,
) -> Result<f64> {
    let mx = max_exponent(a, x)?;
    let scaled = Outcome::new(x.values().iter().map(|&v| (-a * v - mx).exp()).collect())?;
    let c = choquet_integral(psi, &scaled, scn)?;
    Ok((mx + c.ln()) / a)
}

fn max_exponent(a: f64, x: &Outcome) -> Result<f64> {
    let mut mx = f64::NEG_INFINITY;
    for &v in x.values() {
        let e = -a * v;
        if !e.is_finite() {
            return Err(Error::ExpOverflow { a, exponent: e });
        }
        mx = mx.max(e);
    }
    Ok(mx)
}

/// Minimum of `E[d x]` over the density set, validating each density against
/// the scenario probabilities; ties resolve to the lowest index.
pub(crate) fn robust_min(
    densities: &[Vec<f64>],
    x: &Outcome,
    scn: &ScenarioSet,
) -> Result<(usize, f64)> {
    if densities.is_empty() {
        return Err(Error::EmptyDensitySet);
    }
    let probs = scn.probs();
    let mut best: Option<(usize, f64)> = None;
    for (d, density) in densities.iter().enumerate() {
        if density.len() != scn.m() {
            return Err(Error::DimensionMismatch {
                expected: scn.m(),
                actual: density.len(),
            });
        }
        let mut mean = 0.0;
        for (j, &value) in density.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::NegativeDensity {
                    density: d,
                    scenario: j,
                    value,
                });
            }
            mean += probs[j] * value;
        }
        if (mean - 1.0).abs() > DENSITY_PAIRING_TOL {
            return Err(Error::DensityMean { density: d, mean });
        }
        let mut pay = 0.0;
        for (j, &value) in density.iter().enumerate() {
            pay += probs[j] * value * x.values()[j];
        }
        match best {
            Some((_, lowest)) if pay < lowest => best = Some((d, pay)),
            None => best = Some((d, pay)),
            _ => {}
        }
    }
    Ok(best.expect("density set is nonempty"))
}

/// Names of the audited axioms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomId {
    /// Larger outcomes never carry more risk / less reward.
    Monotonicity,
    /// Deterministic cash shifts the measure one-for-one.
    Translation,
    /// Merging positions never increases risk.
    Subadditivity,
    /// Merging positions never decreases reward.
    Superadditivity,
    /// Scaling by a nonnegative factor scales the measure.
    PositiveHomogeneity,
    /// Risk of a mixture is at most the mixed risks.
    Convexity,
    /// Reward of a mixture is at least the mixed rewards.
    Concavity,
}

/// Concrete inputs on which an axiom inequality failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomWitness {
    /// Trial index that produced the violation.
    pub trial: usize,
    /// Left-hand side of the violated inequality.
    pub lhs: f64,
    /// Right-hand side of the violated inequality.
    pub rhs: f64,
    /// First outcome of the trial.
    pub x: Vec<f64>,
    /// Second outcome, when the axiom involves one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    /// Scaling or mixing coefficient, when the axiom involves one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Deterministic shift, when the axiom involves one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
}

/// Status of one audited axiom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AxiomStatus {
    /// Every trial satisfied the inequality within slack.
    Passed,
    /// Some trial violated the inequality; the first one is recorded.
    Failed { witness: AxiomWitness },
    /// The axiom does not apply to the audited measure.
    NotApplicable,
}

/// Outcome of one audited axiom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomResult {
    /// Which axiom was audited.
    pub axiom: AxiomId,
    /// What the audit found.
    #[serde(flatten)]
    pub status: AxiomStatus,
}

/// Full audit report for one measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    /// Seed the trial generator was started from.
    pub seed: u64,
    /// Number of trials per axiom.
    pub trials: usize,
    /// Per-axiom results, in a fixed order.
    pub results: Vec<AxiomResult>,
}

impl AxiomReport {
    /// Status of one axiom, if it was audited.
    pub fn status(&self, axiom: AxiomId) -> Option<&AxiomStatus> {
        self.results
            .iter()
            .find(|r| r.axiom == axiom)
            .map(|r| &r.status)
    }

    /// Whether every audited axiom passed.
    pub fn all_passed(&self) -> bool {
        self.results
            .iter()
            .all(|r| matches!(r.status, AxiomStatus::Passed))
    }

    /// Axioms that failed, in report order.
    pub fn failed(&self) -> Vec<AxiomId> {
        self.results
            .iter()
            .filter(|r| matches!(r.status, AxiomStatus::Failed { .. }))
            .map(|r| r.axiom)
            .collect()
    }
}

/// One generated audit trial.
struct Trial {
    x: Outcome,
    y_any: Outcome,
    y_ge: Outcome,
    shift: f64,
    lambda_pos: f64,
    lambda_unit: f64,
}

/// Deterministic per-trial generator: the tuple for `(seed, trial)` never
/// depends on earlier trials or on which axioms already failed. Trial 0
/// pairs the scenario set's first two positions (when it has at least two)
/// so constructed counterexamples are found deterministically.
fn draw_trial(scn: &ScenarioSet, seed: u64, trial: usize) -> Trial {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let m = scn.m();
    let mut draw_values =
        |lo: f64, hi: f64| -> Vec<f64> { (0..m).map(|_| rng.random_range(lo..=hi)).collect() };
    let mut x = draw_values(-10.0, 10.0);
    let mut y_any = draw_values(-10.0, 10.0);
    let nonneg = draw_values(0.0, 5.0);
    if trial == 0 && scn.n() >= 2 {
        x = scn.positions()[0].clone();
        y_any = scn.positions()[1].clone();
    }
    let y_ge: Vec<f64> = x.iter().zip(&nonneg).map(|(&a, &b)| a + b).collect();
    let shift = rng.random_range(-5.0..=5.0);
    let lambda_pos = rng.random_range(0.0..=3.0);
    let lambda_unit = rng.random_range(0.0..=1.0);
    Trial {
        x: Outcome::new(x).expect("generated values are finite"),
        y_any: Outcome::new(y_any).expect("generated values are finite"),
        y_ge: Outcome::new(y_ge).expect("generated values are finite"),
        shift,
        lambda_pos,
        lambda_unit,
    }
}

struct AxiomTracker {
    axiom: AxiomId,
    witness: Option<AxiomWitness>,
}

impl AxiomTracker {
    fn new(axiom: AxiomId) -> Self {
        Self {
            axiom,
            witness: None,
        }
    }

    fn record(&mut self, violated: bool, witness: impl FnOnce() -> AxiomWitness) {
        if violated && self.witness.is_none() {
            self.witness = Some(witness());
        }
    }

    fn into_result(self) -> AxiomResult {
        AxiomResult {
            axiom: self.axiom,
            status: match self.witness {
                Some(witness) => AxiomStatus::Failed { witness },
                None => AxiomStatus::Passed,
            },
        }
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            requirement: "trials >= 1",
            value: 0.0,
        });
    }
    Ok(())
}

/// Audits (M), (T), (S), (P), (C) for a risk measure over seeded trials.
pub fn check_risk_axioms(
    spec: &RiskMeasureSpec,
    scn: &ScenarioSet,
    trials: usize,
    seed: u64,
) -> Result<AxiomReport> {
    check_trials(trials)?;
    let measure = RiskMeasure::compile(spec)?;
    let rho = |x: &Outcome| measure.evaluate(x, scn);

    let mut mono = AxiomTracker::new(AxiomId::Monotonicity);
    let mut trans = AxiomTracker::new(AxiomId::Translation);
    let mut sub = AxiomTracker::new(AxiomId::Subadditivity);
    let mut hom = AxiomTracker::new(AxiomId::PositiveHomogeneity);
    let mut conv = AxiomTracker::new(AxiomId::Convexity);

    for trial in 0..trials {
        let t = draw_trial(scn, seed, trial);
        let rho_x = rho(&t.x)?;
        let rho_y = rho(&t.y_any)?;

        let lhs = rho(&t.y_ge)?;
        mono.record(lhs > rho_x + AXIOM_SLACK, || AxiomWitness {
            trial,
            lhs,
            rhs: rho_x,
            x: t.x.values().to_vec(),
            y: Some(t.y_ge.values().to_vec()),
            lambda: None,
            shift: None,
        });

        let lhs = rho(&t.x.shift(t.shift))?;
        let rhs = rho_x - t.shift;
        trans.record((lhs - rhs).abs() > AXIOM_SLACK, || AxiomWitness {
            trial,
            lhs,
            rhs,
            x: t.x.values().to_vec(),
            y: None,
            lambda: None,
            shift: Some(t.shift),
        });

        let lhs = rho(&t.x.add(&t.y_any)?)?;
        let rhs = rho_x + rho_y;
        sub.record(lhs > rhs + AXIOM_SLACK, || AxiomWitness {
            trial,
            lhs,
            rhs,
            x: t.x.values().to_vec(),
            y: Some(t.y_any.values().to_vec()),
            lambda: None,
            shift: None,
        });

        let lhs = rho(&t.x.scale(t.lambda_pos))?;
        let rhs = t.lambda_pos * rho_x;
        hom.record((lhs - rhs).abs() > AXIOM_SLACK, || AxiomWitness {
            trial,
            lhs,
            rhs,
            x: t.x.values().to_vec(),
            y: None,
            lambda: Some(t.lambda_pos),
            shift: None,
        });

        let mix =
            t.x.scale(t.lambda_unit)
                .add(&t.y_any.scale(1.0 - t.lambda_unit))?;
        let lhs = rho(&mix)?;
        let rhs = t.lambda_unit * rho_x + (1.0 - t.lambda_unit) * rho_y;
        conv.record(lhs > rhs + AXIOM_SLACK, || AxiomWitness {
            trial,
            lhs,
            rhs,
            x: t.x.values().to_vec(),
            y: Some(t.y_any.values().to_vec()),
            lambda: Some(t.lambda_unit),
            shift: None,
        });
    }

    Ok(AxiomReport {
        seed,
        trials,
        results: vec![
            mono.into_result(),
            trans.into_result(),
            sub.into_result(),
            hom.into_result(),
            conv.into_result(),
        ],
    })
}

/// Audits the reward mirrors: monotonicity, translation, superadditivity,
/// positive homogeneity, and concavity.
pub fn check_reward_axioms(
    spec: &RewardMeasureSpec,
    scn: &ScenarioSet,
    trials: usize,
    seed: u64,
) -> Result<AxiomReport> {
    check_trials(trials)?;
    let measure = RewardMeasure::compile(spec)?;
    let theta = |x: &Outcome| measure.evaluate(x, scn);

    let mut mono = AxiomTracker::new(AxiomId::Monotonicity);
    let mut trans = AxiomTracker::new(AxiomId::Translation);
    let mut sup = AxiomTracker::new(AxiomId::Superadditivity);
    let mut hom = AxiomTracker::new(AxiomId::PositiveHomogeneity);
    let mut conc = AxiomTracker::new(AxiomId::Concavity);

    for trial in 0..trials {
        let t = draw_trial(scn, seed, trial);
        let theta_x = theta(&t.x)?;
        let theta_y = theta(&t.y_any)?;

        let lhs = theta(&t.y_ge)?;
        mono.record(lhs < theta_x - AXIOM_SLACK, || AxiomWitness {
            trial,
            lhs,
            rhs: theta_x,
            x: t.x.values().to_vec(),
            y: Some(t.y_ge.values().to_vec()),
            lambda: None,
            shift: None,
        });

        let lhs = theta(&t.x.shift(t.shift))?;
        let rhs = theta_x + t.shift;
        trans.record((lhs - rhs).abs() > AXIOM_SLACK, || AxiomWitness {
            trial,
            lhs,
            rhs,
            x: t.x.values().to_vec(),
            y: None,
            lambda: None,
            shift: Some(t.shift),
        });

        let lhs = theta(&t.x.add(&t.y_any)?)?;
        let rhs = theta_x + theta_y;
        sup.record(lhs < rhs - AXIOM_SLACK, || AxiomWitness {
            trial,
            lhs,
            rhs,
            x: t.x.values().to_vec(),
            y: Some(t.y_any.values().to_vec()),
            lambda: None,
            shift: None,
        });

        let lhs = theta(&t.x.scale(t.lambda_pos))?;
        let rhs = t.lambda_pos * theta_x;
        hom.record((lhs - rhs).abs() > AXIOM_SLACK, || AxiomWitness {
            trial,
            lhs,
            rhs,
            x: t.x.values().to_vec(),
            y: None,
            lambda: Some(t.lambda_pos),
            shift: None,
        });

        let mix =
            t.x.scale(t.lambda_unit)
                .add(&t.y_any.scale(1.0 - t.lambda_unit))?;
        let lhs = theta(&mix)?;
        let rhs = t.lambda_unit * theta_x + (1.0 - t.lambda_unit) * theta_y;
        conc.record(lhs < rhs - AXIOM_SLACK, || AxiomWitness {
            trial,
            lhs,
            rhs,
            x: t.x.values().to_vec(),
            y: Some(t.y_any.values().to_vec()),
            lambda: Some(t.lambda_unit),
            shift: None,
        });
    }

    Ok(AxiomReport {
        seed,
        trials,
        results: vec![
            mono.into_result(),
            trans.into_result(),
            sup.into_result(),
            hom.into_result(),
            conc.into_result(),
        ],
    })
}

/// Sign preservation under perturbation: for each position `i`, whether
/// `rho(X + h X_i)` and `rho(X - h X_i)` keep the sign of `rho(X)` for every
/// step `h` in the grid.
pub fn check_condition_a(
    spec: &RiskMeasureSpec,
    scn: &ScenarioSet,
    u: &PortfolioWeights,
    h_grid: &[f64],
) -> Result<Vec<bool>> {
    let measure = RiskMeasure::compile(spec)?;
    let x = scn.aggregate(u)?;
    let rho_x = measure.evaluate(&x, scn)?;
    if rho_x.abs() < SIGN_EPS {
        return Err(Error::IndeterminateRiskSign { value: rho_x });
    }
    for &h in h_grid {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter {
                name: "h",
                requirement: "every grid step must satisfy h > 0",
                value: h,
            });
        }
    }
    let positive = rho_x > 0.0;
    let same_sign = |r: f64| if positive { r > 0.0 } else { r < 0.0 };
    let mut flags = Vec::with_capacity(scn.n());
    for i in 0..scn.n() {
        let xi = scn.position(i)?;
        let mut ok = true;
        for &h in h_grid {
            let up = measure.evaluate(&x.axpy(h, &xi)?, scn)?;
            let down = measure.evaluate(&x.axpy(-h, &xi)?, scn)?;
            if !(same_sign(up) && same_sign(down)) {
                ok = false;
                break;
            }
        }
        flags.push(ok);
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn eq2(values: [f64; 2]) -> (ScenarioSet, Outcome) {
        let scn = ScenarioSet::uniform(vec![values.to_vec()]).unwrap();
        let x = scn.position(0).unwrap();
        (scn, x)
    }

    /// Independent tail-average oracle: average the worst `alpha` mass of
    /// the losses `-x`, splitting the boundary scenario's atom.
    fn es_oracle(alpha: f64, values: &[f64], probs: &[f64]) -> f64 {
        let mut losses: Vec<(f64, f64)> =
            values.iter().zip(probs).map(|(&v, &p)| (-v, p)).collect();
        losses.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut remaining = alpha;
        let mut acc = 0.0;
        for (loss, p) in losses {
            if remaining <= 0.0 {
                break;
            }
            let w = p.min(remaining);
            acc += w * loss;
            remaining -= w;
        }
        acc / alpha
    }

    #[test]
    fn choquet_identity_is_expectation() {
        let scn = ScenarioSet::new(
            vec![0.1, 0.2, 0.3, 0.4],
            vec![vec![3.0, -1.0, 4.0, 1.5]],
            vec!["x".into()],
        )
        .unwrap();
        let x = scn.position(0).unwrap();
        let id = DistortionFunction::identity();
        assert_abs_diff_eq!(
            choquet_integral(&id, &x, &scn).unwrap(),
            expectation(&x, &scn).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn choquet_constant_is_constant() {
        let scn = ScenarioSet::uniform(vec![vec![7.5; 3]]).unwrap();
        let x = scn.position(0).unwrap();
        for phi in [
            DistortionFunction::sqrt(),
            DistortionFunction::power(2.0).unwrap(),
        ] {
            assert_abs_diff_eq!(
                choquet_integral(&phi, &x, &scn).unwrap(),
                7.5,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn choquet_square_distortion_oracle() {
        let (scn, x) = eq2([0.0, 1.0]);
        let phi = DistortionFunction::power(2.0).unwrap();
        assert_abs_diff_eq!(
            choquet_integral(&phi, &x, &scn).unwrap(),
            0.25,
            epsilon = 1e-15
        );
    }

    #[test]
    fn es_matches_tail_average_oracle() {
        let scn = ScenarioSet::uniform(vec![vec![-10.0, 0.0, 10.0, 20.0]]).unwrap();
        let x = scn.position(0).unwrap();
        let spec = RiskMeasureSpec::Es { alpha: 0.25 };
        assert_abs_diff_eq!(
            evaluate_risk(&spec, &x, &scn).unwrap(),
            10.0,
            epsilon = 1e-12
        );

        // Level strictly inside a probability atom: fractional weight.
        let spec = RiskMeasureSpec::Es { alpha: 0.3 };
        let expected = es_oracle(0.3, x.values(), scn.probs());
        assert_abs_diff_eq!(
            evaluate_risk(&spec, &x, &scn).unwrap(),
            expected,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            evaluate_risk(&spec, &x, &scn).unwrap(),
            (0.25 * 10.0 + 0.05 * 0.0) / 0.3,
            epsilon = 1e-12
        );

        // Level on an atom boundary.
        let spec = RiskMeasureSpec::Es { alpha: 0.5 };
        assert_abs_diff_eq!(
            evaluate_risk(&spec, &x, &scn).unwrap(),
            5.0,
            epsilon = 1e-12
        );

        // Non-uniform probabilities.
        let scn = ScenarioSet::new(
            vec![0.1, 0.2, 0.3, 0.4],
            vec![vec![-8.0, -2.0, 3.0, 9.0]],
            vec!["x".into()],
        )
        .unwrap();
        let x = scn.position(0).unwrap();
        for alpha in [0.05, 0.1, 0.25, 0.3, 0.75, 0.99] {
            let spec = RiskMeasureSpec::Es { alpha };
            assert_abs_diff_eq!(
                evaluate_risk(&spec, &x, &scn).unwrap(),
                es_oracle(alpha, x.values(), scn.probs()),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn entropic_matches_direct_formula() {
        let (scn, x) = eq2([1.0, -1.0]);
        let spec = RiskMeasureSpec::Entropic { a: 1.0 };
        let direct = (0.5 * ((-1.0f64).exp() + 1.0f64.exp())).ln();
        assert_abs_diff_eq!(
            evaluate_risk(&spec, &x, &scn).unwrap(),
            direct,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            evaluate_risk(&spec, &x, &scn).unwrap(),
            1.0f64.cosh().ln(),
            epsilon = 1e-14
        );

        let (scn, c) = eq2([2.5, 2.5]);
        assert_abs_diff_eq!(
            evaluate_risk(&spec, &c, &scn).unwrap(),
            -2.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn entropic_rejects_overflowing_exponent() {
        let (scn, x) = eq2([1e300, -1e300]);
        let spec = RiskMeasureSpec::Entropic { a: 1e100 };
        assert!(matches!(
            evaluate_risk(&spec, &x, &scn),
            Err(Error::ExpOverflow { .. })
        ));
    }

    #[test]
    fn distortion_risk_matches_survival_oracle() {
        let (scn, x) = eq2([0.0, 1.0]);
        let spec = RiskMeasureSpec::Distortion {
            psi: DistortionSpec::named("sqrt"),
        };
        assert_abs_diff_eq!(
            evaluate_risk(&spec, &x, &scn).unwrap(),
            -(1.0 - 0.5f64.sqrt()),
            epsilon = 1e-15
        );
    }

    #[test]
    fn distortion_exponential_reduces_to_entropic_under_identity() {
        let scn = ScenarioSet::uniform(vec![vec![1.0, -2.0, 0.5, 3.0]]).unwrap();
        let x = scn.position(0).unwrap();
        let de = RiskMeasureSpec::DistortionExponential {
            psi: DistortionSpec::named("identity"),
            a: 0.8,
        };
        let ent = RiskMeasureSpec::Entropic { a: 0.8 };
        assert_abs_diff_eq!(
            evaluate_risk(&de, &x, &scn).unwrap(),
            evaluate_risk(&ent, &x, &scn).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn var_is_negated_quantile() {
        let scn = ScenarioSet::uniform(vec![vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        let x = scn.position(0).unwrap();
        let spec = RiskMeasureSpec::Var { alpha: 0.5 };
        assert_abs_diff_eq!(evaluate_risk(&spec, &x, &scn).unwrap(), -2.0);
    }

    #[test]
    fn reward_robust_takes_the_minimum() {
        let (scn, x) = eq2([1.0, 5.0]);
        let singleton = RewardMeasureSpec::Robust {
            densities: vec![vec![1.0, 1.0]],
        };
        assert_abs_diff_eq!(
            evaluate_reward(&singleton, &x, &scn).unwrap(),
            3.0,
            epsilon = 1e-12
        );
        let two = RewardMeasureSpec::Robust {
            densities: vec![vec![1.0, 1.0], vec![2.0, 0.0]],
        };
        assert_abs_diff_eq!(
            evaluate_reward(&two, &x, &scn).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn reward_robust_validates_densities() {
        let (scn, x) = eq2([1.0, 5.0]);
        let empty = RewardMeasureSpec::Robust { densities: vec![] };
        let err = evaluate_reward(&empty, &x, &scn).unwrap_err();
        assert!(err.to_string().contains("must be non-empty"));

        let negative = RewardMeasureSpec::Robust {
            densities: vec![vec![2.5, -0.5]],
        };
        assert!(matches!(
            evaluate_reward(&negative, &x, &scn),
            Err(Error::NegativeDensity { .. })
        ));

        let wrong_mean = RewardMeasureSpec::Robust {
            densities: vec![vec![1.0, 0.5]],
        };
        assert!(matches!(
            evaluate_reward(&wrong_mean, &x, &scn),
            Err(Error::DensityMean { .. })
        ));
    }

    #[test]
    fn reward_distorted_identity_is_expectation() {
        let scn = ScenarioSet::uniform(vec![vec![3.0, 1.0, 4.0, 7.0]]).unwrap();
        let x = scn.position(0).unwrap();
        let spec = RewardMeasureSpec::Distorted {
            phi: DistortionSpec::named("identity"),
        };
        assert_abs_diff_eq!(
            evaluate_reward(&spec, &x, &scn).unwrap(),
            3.75,
            epsilon = 1e-12
        );
    }

    #[test]
    fn shape_warnings_are_surfaced_not_raised() {
        let risk = RiskMeasure::compile(&RiskMeasureSpec::Distortion {
            psi: DistortionSpec::named_with("power", 2.0),
        })
        .unwrap();
        assert_eq!(risk.warnings().len(), 1);
        let reward = RewardMeasure::compile(&RewardMeasureSpec::Distorted {
            phi: DistortionSpec::named("sqrt"),
        })
        .unwrap();
        assert_eq!(reward.warnings().len(), 1);
        let fine = RiskMeasure::compile(&RiskMeasureSpec::Distortion {
            psi: DistortionSpec::named("sqrt"),
        })
        .unwrap();
        assert!(fine.warnings().is_empty());
    }

    #[test]
    fn es_axioms_all_pass() {
        let scn = ScenarioSet::uniform(vec![
            vec![-10.0, 0.0, 10.0, 20.0],
            vec![-2.0, 1.0, 1.0, 1.0],
        ])
        .unwrap();
        let spec = RiskMeasureSpec::Es { alpha: 0.25 };
        let report = check_risk_axioms(&spec, &scn, 100, 7).unwrap();
        assert!(report.all_passed(), "failed: {:?}", report.failed());
    }

    #[test]
    fn entropic_fails_positive_homogeneity_with_witness() {
        let scn = ScenarioSet::uniform(vec![
            vec![-10.0, 0.0, 10.0, 20.0],
            vec![-2.0, 1.0, 1.0, 1.0],
        ])
        .unwrap();
        let spec = RiskMeasureSpec::Entropic { a: 1.0 };
        let report = check_risk_axioms(&spec, &scn, 200, 7).unwrap();
        for axiom in [
            AxiomId::Monotonicity,
            AxiomId::Translation,
            AxiomId::Convexity,
        ] {
            assert_eq!(
                report.status(axiom),
                Some(&AxiomStatus::Passed),
                "{axiom:?}"
            );
        }
        match report.status(AxiomId::PositiveHomogeneity) {
            Some(AxiomStatus::Failed { witness }) => {
                assert!((witness.lhs - witness.rhs).abs() > AXIOM_SLACK);
                assert!(witness.lambda.is_some());
            }
            other => panic!("expected positive homogeneity to fail, got {other:?}"),
        }
    }

    #[test]
    fn var_fails_subadditivity_on_constructed_pair() {
        let scn = ScenarioSet::uniform(vec![
            vec![-10.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, -10.0, 0.0, 0.0, 0.0],
        ])
        .unwrap();
        let spec = RiskMeasureSpec::Var { alpha: 0.25 };
        let report = check_risk_axioms(&spec, &scn, 50, 1).unwrap();
        match report.status(AxiomId::Subadditivity) {
            Some(AxiomStatus::Failed { witness }) => {
                assert_eq!(witness.trial, 0);
                assert_eq!(witness.x, scn.positions()[0]);
                assert_eq!(witness.y.as_deref(), Some(scn.positions()[1].as_slice()));
                assert_abs_diff_eq!(witness.lhs, 10.0, epsilon = 1e-12);
                assert_abs_diff_eq!(witness.rhs, 0.0, epsilon = 1e-12);
            }
            other => panic!("expected subadditivity to fail, got {other:?}"),
        }
    }

    #[test]
    fn reward_axioms_hold_for_expectation_and_robust() {
        let scn = ScenarioSet::uniform(vec![
            vec![-10.0, 0.0, 10.0, 20.0],
            vec![-2.0, 1.0, 1.0, 1.0],
        ])
        .unwrap();
        let report = check_reward_axioms(&RewardMeasureSpec::Expectation, &scn, 100, 11).unwrap();
        assert!(report.all_passed(), "failed: {:?}", report.failed());

        let robust = RewardMeasureSpec::Robust {
            densities: vec![
                vec![1.0, 1.0, 1.0, 1.0],
                vec![2.0, 1.0, 0.5, 0.5],
                vec![0.5, 1.5, 1.5, 0.5],
            ],
        };
        let report = check_reward_axioms(&robust, &scn, 100, 11).unwrap();
        assert_eq!(
            report.status(AxiomId::Superadditivity),
            Some(&AxiomStatus::Passed)
        );
        assert_eq!(
            report.status(AxiomId::PositiveHomogeneity),
            Some(&AxiomStatus::Passed)
        );
    }

    #[test]
    fn distorted_reward_with_convex_phi_is_superadditive() {
        let scn = ScenarioSet::uniform(vec![
            vec![-10.0, 0.0, 10.0, 20.0],
            vec![-2.0, 1.0, 1.0, 1.0],
        ])
        .unwrap();
        let spec = RewardMeasureSpec::Distorted {
            phi: DistortionSpec::named_with("power", 2.0),
        };
        let report = check_reward_axioms(&spec, &scn, 100, 3).unwrap();
        assert_eq!(
            report.status(AxiomId::Superadditivity),
            Some(&AxiomStatus::Passed)
        );
    }

    #[test]
    fn condition_a_on_reference_portfolio() {
        let scn = ScenarioSet::uniform(vec![
            vec![-10.0, 0.0, 10.0, 20.0],
            vec![-2.0, 1.0, 1.0, 1.0],
        ])
        .unwrap();
        let spec = RiskMeasureSpec::Es { alpha: 0.25 };
        let grid = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
        let flags = check_condition_a(&spec, &scn, &PortfolioWeights::ones(2), &grid).unwrap();
        assert_eq!(flags, vec![true, true]);
    }

    #[test]
    fn condition_a_detects_sign_flip() {
        let scn = ScenarioSet::uniform(vec![vec![-1.001, 5.0], vec![1.0, 0.0]]).unwrap();
        let spec = RiskMeasureSpec::Es { alpha: 0.5 };
        let flags = check_condition_a(&spec, &scn, &PortfolioWeights::ones(2), &[0.1]).unwrap();
        assert_eq!(flags, vec![false, false]);
        let flags = check_condition_a(&spec, &scn, &PortfolioWeights::ones(2), &[1e-6]).unwrap();
        assert_eq!(flags, vec![true, true]);
    }

    #[test]
    fn condition_a_trivial_for_zero_position() {
        let scn =
            ScenarioSet::uniform(vec![vec![-10.0, 0.0, 10.0, 20.0], vec![0.0, 0.0, 0.0, 0.0]])
                .unwrap();
        let spec = RiskMeasureSpec::Es { alpha: 0.25 };
        let grid = [1e-1, 1e-2, 1e-3];
        let flags = check_condition_a(&spec, &scn, &PortfolioWeights::ones(2), &grid).unwrap();
        assert!(flags[1]);
    }

    #[test]
    fn condition_a_rejects_indeterminate_sign() {
        let scn = ScenarioSet::uniform(vec![vec![0.0, 0.0], vec![1.0, -1.0]]).unwrap();
        let spec = RiskMeasureSpec::Es { alpha: 0.5 };
        let u = PortfolioWeights::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            check_condition_a(&spec, &scn, &u, &[0.1]),
            Err(Error::IndeterminateRiskSign { .. })
        ));
    }

    #[test]
    fn specs_round_trip_through_json() {
        let specs = [
            RiskMeasureSpec::Es { alpha: 0.25 },
            RiskMeasureSpec::Entropic { a: 1.0 },
            RiskMeasureSpec::Distortion {
                psi: DistortionSpec::named("sqrt"),
            },
            RiskMeasureSpec::DistortionExponential {
                psi: DistortionSpec::named("sqrt"),
                a: 0.8,
            },
            RiskMeasureSpec::Var { alpha: 0.25 },
        ];
        for spec in specs {
            let text = serde_json::to_string(&spec).unwrap();
            let back: RiskMeasureSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
        }
        let parsed: RiskMeasureSpec =
            serde_json::from_str(r#"{"kind":"es","alpha":0.25}"#).unwrap();
        assert_eq!(parsed, RiskMeasureSpec::Es { alpha: 0.25 });

        let rewards = [
            RewardMeasureSpec::Expectation,
            RewardMeasureSpec::Robust {
                densities: vec![vec![1.0, 1.0]],
            },
            RewardMeasureSpec::Distorted {
                phi: DistortionSpec::named_with("power", 2.0),
            },
        ];
        for spec in rewards {
            let text = serde_json::to_string(&spec).unwrap();
            let back: RewardMeasureSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
        }
        let parsed: RewardMeasureSpec = serde_json::from_str(r#"{"kind":"expectation"}"#).unwrap();
        assert_eq!(parsed, RewardMeasureSpec::Expectation);
    }

    #[test]
    fn compile_rejects_out_of_range_parameters() {
        assert!(RiskMeasure::compile(&RiskMeasureSpec::Es { alpha: 0.0 }).is_err());
        assert!(RiskMeasure::compile(&RiskMeasureSpec::Es { alpha: 1.0 }).is_err());
        assert!(RiskMeasure::compile(&RiskMeasureSpec::Entropic { a: 0.0 }).is_err());
        assert!(RiskMeasure::compile(&RiskMeasureSpec::Var { alpha: -0.1 }).is_err());
        assert!(
            RiskMeasure::compile(&RiskMeasureSpec::DistortionExponential {
                psi: DistortionSpec::named("sqrt"),
                a: -1.0,
            })
            .is_err()
        );
    }
}
