//! Grid-based verification that capital allocations send correct
//! performance signals.
//!
//! Capabilities:
//! - weak ratio-signal verification for a risk capital allocation against a
//!   reward-risk ratio (`def_3_2`)
//! - strict verification for a reward-risk allocation pair on same-sign
//!   instances (`def_3_5`)
//! - sufficient-condition checks on one-sided measure increments
//!   (`thm_3_3_conditions`, `thm_3_6_conditions`)
//! - smooth-portfolio verification around an arbitrary base portfolio with
//!   centered differences (`def_3_7`)
//! - a constant-ratio counterexample construction showing that an allocation
//!   which disagrees with the risk gradient cannot be suitable for every
//!   differentiable reward
//!
//! Every verifier approximates the existential "for all small enough steps"
//! with a descending step grid: the implication is required on each step of
//! the largest prefix (smallest steps first) on which the risk sign stays
//! stable, and this approximation is recorded in the verdict together with
//! the grid and tolerance so outcomes are replayable.

use serde::{Deserialize, Serialize};

use crate::batch;
use crate::error::{Error, Result};
use crate::measures::{RewardMeasure, RewardMeasureSpec, RiskMeasure, RiskMeasureSpec};
use crate::performance::rrr;
use crate::scenario::{Outcome, PortfolioWeights, ScenarioSet};
use crate::{DEFAULT_FD_STEP, DEFAULT_TOL, SIGN_EPS};

/// Relative agreement threshold between an allocation component and the
/// centered-difference partial derivative it is compared against.
pub const GRADIENT_MATCH_TOL: f64 = 1e-4;

const NOTE_INDETERMINATE: &str =
    "sign of rho(X) is indeterminate; sign-stability gating is impossible";
const NOTE_GATING: &str = "risk sign stability failed at every grid step";
const NOTE_DOMAIN: &str =
    "theta(X) and rho(X) do not share a strict sign; instance lies outside the admissible domain";
const NOTE_PREMISE: &str = "premise never triggered: |t_i rho(X) - k_i theta(X)| <= tol";

/// Descending grid of perturbation steps standing in for "all small h".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct HGrid {
    steps: Vec<f64>,
}

impl HGrid {
    /// Validates and wraps a strictly positive, strictly decreasing grid.
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidParameter {
                name: "h_grid",
                requirement: "grid must contain at least one step",
                value: f64::NAN,
            });
        }
        for &h in &steps {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "h_grid",
                    requirement: "every step must be finite and > 0",
                    value: h,
                });
            }
        }
        for pair in steps.windows(2) {
            // A NaN comparison must count as a failed check, not a pass.
            let decreasing = pair[1] < pair[0];
            if !decreasing {
                return Err(Error::InvalidParameter {
                    name: "h_grid",
                    requirement: "steps must be strictly decreasing",
                    value: pair[1],
                });
            }
        }
        Ok(Self { steps })
    }

    /// The steps, largest first.
    pub fn steps(&self) -> &[f64] {
        &self.steps
    }
}

impl Default for HGrid {
    fn default() -> Self {
        default_h_grid()
    }
}

impl TryFrom<Vec<f64>> for HGrid {
    type Error = Error;

    fn try_from(steps: Vec<f64>) -> Result<Self> {
        Self::new(steps)
    }
}

impl From<HGrid> for Vec<f64> {
    fn from(grid: HGrid) -> Self {
        grid.steps
    }
}

/// The standard decade grid {1e-1, ..., 1e-6}.
pub fn default_h_grid() -> HGrid {
    HGrid {
        steps: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
    }
}

/// Identifier of the criterion a verdict speaks about, as used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefinitionTag {
    /// Weak signal correctness of a risk capital allocation.
    #[serde(rename = "def_3_2")]
    Def32,
    /// Strict signal correctness of a reward-risk allocation pair.
    #[serde(rename = "def_3_5")]
    Def35,
    /// Strict two-sided signal correctness around a smooth portfolio.
    #[serde(rename = "def_3_7")]
    Def37,
    /// One-sided risk increment bounds sufficient for `def_3_2`.
    #[serde(rename = "thm_3_3_conditions")]
    Thm33Conditions,
    /// Reward and risk increment bounds sufficient for `def_3_5`.
    #[serde(rename = "thm_3_6_conditions")]
    Thm36Conditions,
    /// Coalition-level signal correctness for whole-position changes.
    #[serde(rename = "game_def_4_1")]
    GameDef41,
}

/// Replayable record of one failed implication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Step at which the conclusion failed.
    pub h: f64,
    /// The violated conclusion, written out.
    pub inequality: String,
    /// Left side of the violated conclusion.
    #[serde(
        serialize_with = "crate::performance::serialize_extended",
        deserialize_with = "crate::performance::deserialize_extended"
    )]
    pub lhs: f64,
    /// Right side of the violated conclusion.
    #[serde(
        serialize_with = "crate::performance::serialize_extended",
        deserialize_with = "crate::performance::deserialize_extended"
    )]
    pub rhs: f64,
    /// Left side of the triggering ratio premise, when one applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise_lhs: Option<f64>,
    /// Right side of the triggering ratio premise, when one applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise_rhs: Option<f64>,
}

/// Outcome of the checks for a single position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PositionOutcome {
    /// Every triggered implication held on every gated step.
    Satisfied,
    /// Some implication failed; the witness replays it.
    Violated {
        /// The failed implication.
        witness: Witness,
    },
    /// No implication was ever put to the test.
    Vacuous {
        /// Why nothing was asserted.
        note: String,
    },
}

/// Per-position outcome within a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionReport {
    /// Zero-based position index.
    pub position: usize,
    /// What the checks concluded for this position.
    #[serde(flatten)]
    pub outcome: PositionOutcome,
}

/// Aggregate reading of a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverallVerdict {
    /// At least one position satisfied and none violated.
    Satisfied,
    /// At least one position violated.
    Violated,
    /// Nothing was asserted anywhere.
    Vacuous,
}

/// Result of verifying one suitability criterion on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuitabilityVerdict {
    /// Which criterion was checked.
    pub definition: DefinitionTag,
    /// Slack (weak checks) or strictness margin (strict checks) used.
    pub tolerance: f64,
    /// Steps the existential quantifier was approximated with.
    pub grid: Vec<f64>,
    /// One report per position.
    pub positions: Vec<PositionReport>,
}

impl SuitabilityVerdict {
    /// Violated if any position is, satisfied if any position is and none
    /// are violated, vacuous otherwise.
    pub fn overall(&self) -> OverallVerdict {
        let mut any_satisfied = false;
        for report in &self.positions {
            match report.outcome {
                PositionOutcome::Violated { .. } => return OverallVerdict::Violated,
                PositionOutcome::Satisfied => any_satisfied = true,
                PositionOutcome::Vacuous { .. } => {}
            }
        }
        if any_satisfied {
            OverallVerdict::Satisfied
        } else {
            OverallVerdict::Vacuous
        }
    }

    /// Reports of positions that were found in violation.
    pub fn violations(&self) -> Vec<&PositionReport> {
        self.positions
            .iter()
            .filter(|r| matches!(r.outcome, PositionOutcome::Violated { .. }))
            .collect()
    }

    /// Number of positions whose checks all held.
    pub fn satisfied_count(&self) -> usize {
        self.positions
            .iter()
            .filter(|r| matches!(r.outcome, PositionOutcome::Satisfied))
            .count()
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            requirement: "tol must be finite and >= 0",
            value: tol,
        });
    }
    Ok(())
}

fn check_step_range(step: f64) -> Result<()> {
    if !(step.is_finite() && step > 0.0 && step <= 0.1) {
        return Err(Error::InvalidParameter {
            name: "step",
            requirement: "0 < step <= 0.1",
            value: step,
        });
    }
    Ok(())
}

fn check_alloc(name: &str, values: &[f64], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: values.len(),
        });
    }
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: format!("allocation entry {name}[{i}]"),
                value: v,
            });
        }
    }
    Ok(())
}

fn all_vacuous(n: usize, note: &str) -> Vec<PositionReport> {
    (0..n)
        .map(|position| PositionReport {
            position,
            outcome: PositionOutcome::Vacuous {
                note: note.to_string(),
            },
        })
        .collect()
}

fn violated(
    position: usize,
    h: f64,
    inequality: &str,
    lhs: f64,
    rhs: f64,
    premise: Option<(f64, f64)>,
) -> PositionReport {
    PositionReport {
        position,
        outcome: PositionOutcome::Violated {
            witness: Witness {
                h,
                inequality: inequality.to_string(),
                lhs,
                rhs,
                premise_lhs: premise.map(|p| p.0),
                premise_rhs: premise.map(|p| p.1),
            },
        },
    }
}

/// Largest grid prefix (smallest steps first) on which `rho` keeps the sign
/// of `rho_x` at `X +- h X_i`; stops at the first unstable step.
fn sign_stable_prefix(
    rho: &RiskMeasure,
    scn: &ScenarioSet,
    x: &Outcome,
    xi: &Outcome,
    rho_x: f64,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let positive = rho_x > 0.0;
    let mut gated = Vec::new();
    for &h in grid.iter().rev() {
        let up = rho.evaluate(&x.axpy(h, xi)?, scn)?;
        let down = rho.evaluate(&x.axpy(-h, xi)?, scn)?;
        let stable = if positive {
            up > 0.0 && down > 0.0
        } else {
            up < 0.0 && down < 0.0
        };
        if !stable {
            break;
        }
        gated.push(h);
    }
    Ok(gated)
}

/// Checks the one-sided risk increment bounds `h k_i <= rho(X + h X_i) -
/// rho(X)` and `h k_i >= rho(X) - rho(X - h X_i)` on every grid step, with
/// slack 1e-9. Positions where the risk sign is not stable across the whole
/// grid are reported vacuous.
pub fn check_thm33_conditions(
    k: &[f64],
    rho_spec: &RiskMeasureSpec,
    scn: &ScenarioSet,
    grid: &HGrid,
) -> Result<SuitabilityVerdict> {
    check_alloc("k", k, scn.n())?;
    let rho = RiskMeasure::compile(rho_spec)?;
    let x = scn.aggregate(&PortfolioWeights::ones(scn.n()))?;
    let rho_x = rho.evaluate(&x, scn)?;
    let tol = DEFAULT_TOL;

    let positions = if rho_x.abs() < SIGN_EPS {
        all_vacuous(scn.n(), NOTE_INDETERMINATE)
    } else {
        batch::try_map_indexed(scn.n(), |i| {
            let xi = scn.position(i)?;
            let gated = sign_stable_prefix(&rho, scn, &x, &xi, rho_x, grid.steps())?;
            if gated.len() < grid.steps().len() {
                return Ok(PositionReport {
                    position: i,
                    outcome: PositionOutcome::Vacuous {
                        note: "risk sign stability does not hold on the whole grid".to_string(),
                    },
                });
            }
            for &h in &gated {
                let up = rho.evaluate(&x.axpy(h, &xi)?, scn)?;
                let down = rho.evaluate(&x.axpy(-h, &xi)?, scn)?;
                let hk = h * k[i];
                // Negations are spelled on named bools so a NaN comparison
                // counts as a violation instead of silently passing.
                let upper = up - rho_x;
                let below_upper = hk <= upper + tol;
                if !below_upper {
                    return Ok(violated(
                        i,
                        h,
                        "h*k_i <= rho(X + h X_i) - rho(X) + tol",
                        hk,
                        upper,
                        None,
                    ));
                }
                let lower = rho_x - down;
                let above_lower = hk >= lower - tol;
                if !above_lower {
                    return Ok(violated(
                        i,
                        h,
                        "h*k_i >= rho(X) - rho(X - h X_i) - tol",
                        hk,
                        lower,
                        None,
                    ));
                }
            }
            Ok(PositionReport {
                position: i,
                outcome: PositionOutcome::Satisfied,
            })
        })?
    };
    Ok(SuitabilityVerdict {
        definition: DefinitionTag::Thm33Conditions,
        tolerance: tol,
        grid: grid.steps().to_vec(),
        positions,
    })
}

/// Checks the reward and risk increment bounds `h t_i >= theta(X + h X_i) -
/// theta(X)`, `h t_i <= theta(X) - theta(X - h X_i)`, and the two risk
/// bounds of [`check_thm33_conditions`], on every grid step with slack 1e-9.
pub fn check_thm36_conditions(
    t: &[f64],
    k: &[f64],
    theta_spec: &RewardMeasureSpec,
    rho_spec: &RiskMeasureSpec,
    scn: &ScenarioSet,
    grid: &HGrid,
) -> Result<SuitabilityVerdict> {
    check_alloc("t", t, scn.n())?;
    check_alloc("k", k, scn.n())?;
    let theta = RewardMeasure::compile(theta_spec)?;
    let rho = RiskMeasure::compile(rho_spec)?;
    let x = scn.aggregate(&PortfolioWeights::ones(scn.n()))?;
    let theta_x = theta.evaluate(&x, scn)?;
    let rho_x = rho.evaluate(&x, scn)?;
    let tol = DEFAULT_TOL;

    let positions = if rho_x.abs() < SIGN_EPS {
        all_vacuous(scn.n(), NOTE_INDETERMINATE)
    } else {
        batch::try_map_indexed(scn.n(), |i| {
            let xi = scn.position(i)?;
            let gated = sign_stable_prefix(&rho, scn, &x, &xi, rho_x, grid.steps())?;
            if gated.len() < grid.steps().len() {
                return Ok(PositionReport {
                    position: i,
                    outcome: PositionOutcome::Vacuous {
                        note: "risk sign stability does not hold on the whole grid".to_string(),
                    },
                });
            }
            for &h in &gated {
                let up = x.axpy(h, &xi)?;
                let down = x.axpy(-h, &xi)?;
                let theta_up = theta.evaluate(&up, scn)?;
                let theta_down = theta.evaluate(&down, scn)?;
                let rho_up = rho.evaluate(&up, scn)?;
                let rho_down = rho.evaluate(&down, scn)?;
                let ht = h * t[i];
                let hk = h * k[i];
                let checks = [
                    (
                        "h*t_i >= theta(X + h X_i) - theta(X) - tol",
                        ht,
                        theta_up - theta_x,
                        false,
                    ),
                    (
                        "h*t_i <= theta(X) - theta(X - h X_i) + tol",
                        ht,
                        theta_x - theta_down,
                        true,
                    ),
                    (
                        "h*k_i <= rho(X + h X_i) - rho(X) + tol",
                        hk,
                        rho_up - rho_x,
                        true,
                    ),
                    (
                        "h*k_i >= rho(X) - rho(X - h X_i) - tol",
                        hk,
                        rho_x - rho_down,
                        false,
                    ),
                ];
                for (desc, lhs, rhs, upper_bound) in checks {
                    let holds = if upper_bound {
                        lhs <= rhs + tol
                    } else {
                        lhs >= rhs - tol
                    };
                    if !holds {
                        return Ok(violated(i, h, desc, lhs, rhs, None));
                    }
                }
            }
            Ok(PositionReport {
                position: i,
                outcome: PositionOutcome::Satisfied,
            })
        })?
    };
    Ok(SuitabilityVerdict {
        definition: DefinitionTag::Thm36Conditions,
        tolerance: tol,
        grid: grid.steps().to_vec(),
        positions,
    })
}

/// Verifies the weak signal criterion for a risk capital allocation: on each
/// sign-stable step, the ratio premise `theta(X_i) rho(X) >= or <= k_i
/// theta(X)` must be answered by the matching weak ratio ordering, with
/// slack `tol`. Both premise directions fire at equality; the branch is
/// selected by the sign of `theta(X)` and both branches apply at zero.
pub fn verify_def_3_2(
    k: &[f64],
    theta_spec: &RewardMeasureSpec,
    rho_spec: &RiskMeasureSpec,
    scn: &ScenarioSet,
    grid: &HGrid,
    tol: f64,
) -> Result<SuitabilityVerdict> {
    check_tol(tol)?;
    check_alloc("k", k, scn.n())?;
    let theta = RewardMeasure::compile(theta_spec)?;
    let rho = RiskMeasure::compile(rho_spec)?;
    let x = scn.aggregate(&PortfolioWeights::ones(scn.n()))?;
    let theta_x = theta.evaluate(&x, scn)?;
    let rho_x = rho.evaluate(&x, scn)?;
    let alpha_x = rrr(theta_x, rho_x).value;

    let positions = if rho_x.abs() < SIGN_EPS {
        all_vacuous(scn.n(), NOTE_INDETERMINATE)
    } else {
        batch::try_map_indexed(scn.n(), |i| {
            let xi = scn.position(i)?;
            let theta_xi = theta.evaluate(&xi, scn)?;
            let premise_lhs = theta_xi * rho_x;
            let premise_rhs = k[i] * theta_x;
            let d = premise_lhs - premise_rhs;
            let gated = sign_stable_prefix(&rho, scn, &x, &xi, rho_x, grid.steps())?;
            if gated.is_empty() {
                return Ok(PositionReport {
                    position: i,
                    outcome: PositionOutcome::Vacuous {
                        note: NOTE_GATING.to_string(),
                    },
                });
            }
            for &h in &gated {
                let up = x.axpy(h, &xi)?;
                let down = x.axpy(-h, &xi)?;
                let alpha_up = rrr(theta.evaluate(&up, scn)?, rho.evaluate(&up, scn)?).value;
                let alpha_down = rrr(theta.evaluate(&down, scn)?, rho.evaluate(&down, scn)?).value;
                let mut checks: Vec<(&str, f64, f64)> = Vec::new();
                if theta_x >= 0.0 {
                    if d >= 0.0 {
                        checks.push(("alpha(X) >= alpha(X - h X_i) - tol", alpha_x, alpha_down));
                    }
                    if d <= 0.0 {
                        checks.push(("alpha(X) >= alpha(X + h X_i) - tol", alpha_x, alpha_up));
                    }
                }
                if theta_x <= 0.0 {
                    if d >= 0.0 {
                        checks.push(("alpha(X + h X_i) >= alpha(X) - tol", alpha_up, alpha_x));
                    }
                    if d <= 0.0 {
                        checks.push(("alpha(X - h X_i) >= alpha(X) - tol", alpha_down, alpha_x));
                    }
                }
                for (desc, lhs, rhs) in checks {
                    // NaN must count as a violation, not a pass.
                    let holds = lhs >= rhs - tol;
                    if !holds {
                        return Ok(violated(
                            i,
                            h,
                            desc,
                            lhs,
                            rhs,
                            Some((premise_lhs, premise_rhs)),
                        ));
                    }
                }
            }
            Ok(PositionReport {
                position: i,
                outcome: PositionOutcome::Satisfied,
            })
        })?
    };
    Ok(SuitabilityVerdict {
        definition: DefinitionTag::Def32,
        tolerance: tol,
        grid: grid.steps().to_vec(),
        positions,
    })
}

/// Verifies the strict signal criterion for a reward-risk allocation pair on
/// a same-sign instance: a strictly signed premise `t_i rho(X) - k_i
/// theta(X)` must force a strict ratio ordering with margin `tol` on every
/// sign-stable step. Instances where `theta(X)` and `rho(X)` do not share a
/// strict sign are vacuous, as are positions whose premise is within `tol`
/// of equality.
pub fn verify_def_3_5(
    t: &[f64],
    k: &[f64],
    theta_spec: &RewardMeasureSpec,
    rho_spec: &RiskMeasureSpec,
    scn: &ScenarioSet,
    grid: &HGrid,
    tol: f64,
) -> Result<SuitabilityVerdict> {
    check_tol(tol)?;
    check_alloc("t", t, scn.n())?;
    check_alloc("k", k, scn.n())?;
    let theta = RewardMeasure::compile(theta_spec)?;
    let rho = RiskMeasure::compile(rho_spec)?;
    let x = scn.aggregate(&PortfolioWeights::ones(scn.n()))?;
    let theta_x = theta.evaluate(&x, scn)?;
    let rho_x = rho.evaluate(&x, scn)?;
    let alpha_x = rrr(theta_x, rho_x).value;

    let same_sign = (theta_x > 0.0 && rho_x > 0.0) || (theta_x < 0.0 && rho_x < 0.0);
    let positions = if !same_sign {
        all_vacuous(scn.n(), NOTE_DOMAIN)
    } else {
        batch::try_map_indexed(scn.n(), |i| {
            let premise_lhs = t[i] * rho_x;
            let premise_rhs = k[i] * theta_x;
            let d = premise_lhs - premise_rhs;
            if d.abs() <= tol {
                return Ok(PositionReport {
                    position: i,
                    outcome: PositionOutcome::Vacuous {
                        note: NOTE_PREMISE.to_string(),
                    },
                });
            }
            let xi = scn.position(i)?;
            let gated = sign_stable_prefix(&rho, scn, &x, &xi, rho_x, grid.steps())?;
            if gated.is_empty() {
                return Ok(PositionReport {
                    position: i,
                    outcome: PositionOutcome::Vacuous {
                        note: NOTE_GATING.to_string(),
                    },
                });
            }
            for &h in &gated {
                let up = x.axpy(h, &xi)?;
                let down = x.axpy(-h, &xi)?;
                let alpha_up = rrr(theta.evaluate(&up, scn)?, rho.evaluate(&up, scn)?).value;
                let alpha_down = rrr(theta.evaluate(&down, scn)?, rho.evaluate(&down, scn)?).value;
                let (desc, lhs, rhs) = if theta_x > 0.0 {
                    if d > tol {
                        ("alpha(X) >= alpha(X - h X_i) + tol", alpha_x, alpha_down)
                    } else {
                        ("alpha(X) >= alpha(X + h X_i) + tol", alpha_x, alpha_up)
                    }
                } else if d > tol {
                    ("alpha(X + h X_i) >= alpha(X) + tol", alpha_up, alpha_x)
                } else {
                    ("alpha(X - h X_i) >= alpha(X) + tol", alpha_down, alpha_x)
                };
                // NaN must count as a violation, not a pass.
                let holds = lhs >= rhs + tol;
                if !holds {
                    return Ok(violated(
                        i,
                        h,
                        desc,
                        lhs,
                        rhs,
                        Some((premise_lhs, premise_rhs)),
                    ));
                }
            }
            Ok(PositionReport {
                position: i,
                outcome: PositionOutcome::Satisfied,
            })
        })?
    };
    Ok(SuitabilityVerdict {
        definition: DefinitionTag::Def35,
        tolerance: tol,
        grid: grid.steps().to_vec(),
        positions,
    })
}

/// Verifies the strict two-sided signal criterion around a base portfolio
/// `u` for caller-supplied smooth functionals: a strictly signed premise
/// `t_i rho_X(u) - k_i theta_X(u)` must force the monotone chain through
/// `alpha_X(u - s e_i), alpha_X(u), alpha_X(u + s e_i)` with margin 1e-9 for
/// `s` in {step, step/2, step/4}. The base and every perturbed portfolio
/// must keep `theta_X` and `rho_X` on one strict common sign, otherwise the
/// affected positions are vacuous.
pub fn verify_def_3_7<T, R>(
    t: &[f64],
    k: &[f64],
    theta_fn: T,
    rho_fn: R,
    u: &PortfolioWeights,
    step: f64,
) -> Result<SuitabilityVerdict>
where
    T: Fn(&PortfolioWeights) -> Result<f64> + Sync,
    R: Fn(&PortfolioWeights) -> Result<f64> + Sync,
{
    check_step_range(step)?;
    let n = u.len();
    check_alloc("t", t, n)?;
    check_alloc("k", k, n)?;
    let tol = DEFAULT_TOL;
    let s_grid = vec![step, step / 2.0, step / 4.0];
    let theta_u = theta_fn(u)?;
    let rho_u = rho_fn(u)?;
    let admissible = |th: f64, r: f64| (th > 0.0 && r > 0.0) || (th < 0.0 && r < 0.0);

    let positions = if !admissible(theta_u, rho_u) {
        all_vacuous(n, NOTE_DOMAIN)
    } else {
        let alpha_u = theta_u / rho_u;
        batch::try_map_indexed(n, |i| {
            let premise_lhs = t[i] * rho_u;
            let premise_rhs = k[i] * theta_u;
            let d = premise_lhs - premise_rhs;
            if d.abs() <= tol {
                return Ok(PositionReport {
                    position: i,
                    outcome: PositionOutcome::Vacuous {
                        note: NOTE_PREMISE.to_string(),
                    },
                });
            }
            for &s in s_grid.iter().rev() {
                let up = u.perturbed(i, s)?;
                let down = u.perturbed(i, -s)?;
                let theta_up = theta_fn(&up)?;
                let rho_up = rho_fn(&up)?;
                let theta_down = theta_fn(&down)?;
                let rho_down = rho_fn(&down)?;
                if !admissible(theta_up, rho_up) || !admissible(theta_down, rho_down) {
                    return Ok(PositionReport {
                        position: i,
                        outcome: PositionOutcome::Vacuous {
                            note: format!(
                                "perturbed portfolio left the admissible domain at s = {s}"
                            ),
                        },
                    });
                }
                let alpha_up = theta_up / rho_up;
                let alpha_down = theta_down / rho_down;
                let checks = if d > tol {
                    [
                        ("alpha(u + s e_i) >= alpha(u) + tol", alpha_up, alpha_u),
                        ("alpha(u) >= alpha(u - s e_i) + tol", alpha_u, alpha_down),
                    ]
                } else {
                    [
                        ("alpha(u - s e_i) >= alpha(u) + tol", alpha_down, alpha_u),
                        ("alpha(u) >= alpha(u + s e_i) + tol", alpha_u, alpha_up),
                    ]
                };
                for (desc, lhs, rhs) in checks {
                    // NaN must count as a violation, not a pass.
                    let holds = lhs >= rhs + tol;
                    if !holds {
                        return Ok(violated(
                            i,
                            s,
                            desc,
                            lhs,
                            rhs,
                            Some((premise_lhs, premise_rhs)),
                        ));
                    }
                }
            }
            Ok(PositionReport {
                position: i,
                outcome: PositionOutcome::Satisfied,
            })
        })?
    };
    Ok(SuitabilityVerdict {
        definition: DefinitionTag::Def37,
        tolerance: tol,
        grid: s_grid,
        positions,
    })
}

/// Centered-difference partial derivatives of a portfolio functional at `u`.
pub fn fd_partials<F>(f: F, u: &PortfolioWeights, step: f64) -> Result<Vec<f64>>
where
    F: Fn(&PortfolioWeights) -> Result<f64> + Sync,
{
    check_step_range(step)?;
    batch::try_map_indexed(u.len(), |i| {
        let up = f(&u.perturbed(i, step)?)?;
        let down = f(&u.perturbed(i, -step)?)?;
        Ok((up - down) / (2.0 * step))
    })
}

/// One sampled step of the constant-ratio counterexample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSample {
    /// Perturbation size along `e_i`.
    pub s: f64,
    /// Ratio at `u + s e_i` under the proportional reward.
    pub alpha_plus: f64,
    /// Ratio at `u - s e_i` under the proportional reward.
    pub alpha_minus: f64,
}

/// Evidence that an allocation component differing from the risk gradient
/// fails the strict two-sided criterion for some differentiable reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCounterexample {
    /// Position whose component disagrees with the gradient.
    pub position: usize,
    /// Scale of the proportional reward `theta_X = t_scale * rho_X`.
    pub t_scale: f64,
    /// Centered-difference partial derivative of `rho_X` at `u`.
    pub fd_partial: f64,
    /// The disputed allocation component.
    pub k_i: f64,
    /// Left side of the strict premise, `t_scale * fd_partial * rho_X(u)`.
    pub premise_lhs: f64,
    /// Right side of the strict premise, `k_i * t_scale * rho_X(u)`.
    pub premise_rhs: f64,
    /// Ratio at the base portfolio; equals `t_scale` by construction.
    pub alpha_at_u: f64,
    /// Ratios along the `e_i` line, all equal to `t_scale` up to rounding.
    pub samples: Vec<CounterexampleSample>,
    /// Largest observed |alpha - t_scale| over all samples.
    pub max_alpha_deviation: f64,
}

/// Builds the constant-ratio counterexample: with the proportional reward
/// `theta_X = t_scale * rho_X`, the strict premise for position `i` is
/// signed by `t_scale * rho_X(u) * (d rho_X/d u_i - k_i)`, yet the ratio is
/// constant along the `e_i` line, so the required strict chain cannot hold.
/// Errors when `k_i` already matches the centered-difference partial within
/// ten times the gradient tolerance.
pub fn gradient_uniqueness_counterexample<R>(
    k: &[f64],
    rho_fn: R,
    u: &PortfolioWeights,
    i: usize,
    t_scale: f64,
) -> Result<GradientCounterexample>
where
    R: Fn(&PortfolioWeights) -> Result<f64> + Sync,
{
    if !(t_scale.is_finite() && t_scale > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_scale",
            requirement: "t_scale must be finite and > 0",
            value: t_scale,
        });
    }
    check_alloc("k", k, u.len())?;
    if i >= u.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: i,
        });
    }
    let rho_u = rho_fn(u)?;
    if rho_u.abs() < SIGN_EPS {
        return Err(Error::IndeterminateRiskSign { value: rho_u });
    }
    let h = DEFAULT_FD_STEP;
    let fd_partial = {
        let up = rho_fn(&u.perturbed(i, h)?)?;
        let down = rho_fn(&u.perturbed(i, -h)?)?;
        (up - down) / (2.0 * h)
    };
    let deviation = (k[i] - fd_partial).abs();
    if deviation <= 10.0 * GRADIENT_MATCH_TOL * fd_partial.abs().max(1.0) {
        return Err(Error::AllocationIsGradient {
            component: i,
            deviation,
        });
    }
    let alpha_at_u = (t_scale * rho_u) / rho_u;
    let mut samples = Vec::new();
    let mut max_alpha_deviation = (alpha_at_u - t_scale).abs();
    for &s in &[h, h / 2.0, h / 4.0] {
        let rho_plus = rho_fn(&u.perturbed(i, s)?)?;
        let rho_minus = rho_fn(&u.perturbed(i, -s)?)?;
        let alpha_plus = (t_scale * rho_plus) / rho_plus;
        let alpha_minus = (t_scale * rho_minus) / rho_minus;
        max_alpha_deviation = max_alpha_deviation
            .max((alpha_plus - t_scale).abs())
            .max((alpha_minus - t_scale).abs());
        samples.push(CounterexampleSample {
            s,
            alpha_plus,
            alpha_minus,
        });
    }
    Ok(GradientCounterexample {
        position: i,
        t_scale,
        fd_partial,
        k_i: k[i],
        premise_lhs: t_scale * fd_partial * rho_u,
        premise_rhs: k[i] * t_scale * rho_u,
        alpha_at_u,
        samples,
        max_alpha_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocations::{
        subgradient_allocation, subgradient_density, with_without_allocation,
    };
    use crate::measures::evaluate_reward;

    fn demo() -> ScenarioSet {
        ScenarioSet::uniform(vec![
            vec![-10.0, 0.0, 10.0, 20.0],
            vec![-2.0, 1.0, 1.0, 1.0],
        ])
        .unwrap()
    }

    fn es25() -> RiskMeasureSpec {
        RiskMeasureSpec::Es { alpha: 0.25 }
    }

    fn expectation() -> RewardMeasureSpec {
        RewardMeasureSpec::Expectation
    }

    #[test]
    fn default_grid_is_the_decade_grid() {
        let grid = default_h_grid();
        assert_eq!(grid.steps(), &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]);
        assert_eq!(HGrid::default(), grid);
    }

    #[test]
    fn grid_rejects_bad_steps() {
        assert!(HGrid::new(vec![]).is_err());
        assert!(HGrid::new(vec![0.1, 0.0]).is_err());
        assert!(HGrid::new(vec![0.1, -0.01]).is_err());
        assert!(HGrid::new(vec![0.01, 0.1]).is_err());
        assert!(HGrid::new(vec![0.1, 0.1]).is_err());
        assert!(HGrid::new(vec![f64::NAN]).is_err());
        assert!(HGrid::new(vec![0.2, 0.05]).is_ok());
    }

    #[test]
    fn grid_serializes_as_bare_array() {
        let grid = HGrid::new(vec![0.1, 0.01]).unwrap();
        let json = serde_json::to_string(&grid).unwrap();
        assert_eq!(json, "[0.1,0.01]");
        let back: HGrid = serde_json::from_str(&json).unwrap();
        assert_eq!(back, grid);
        assert!(serde_json::from_str::<HGrid>("[0.01,0.1]").is_err());
    }

    #[test]
    fn subgradient_allocation_satisfies_weak_criterion_on_demo() {
        let scn = demo();
        let x = scn.aggregate(&PortfolioWeights::ones(2)).unwrap();
        let xi = subgradient_density(&es25(), &x, &scn).unwrap();
        let k = subgradient_allocation(&xi, &scn).unwrap();
        assert_eq!(k.values, vec![10.0, 2.0]);
        let verdict = verify_def_3_2(
            &k.values,
            &expectation(),
            &es25(),
            &scn,
            &default_h_grid(),
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Satisfied);
        assert_eq!(verdict.satisfied_count(), 2);
        assert_eq!(verdict.definition, DefinitionTag::Def32);
    }

    #[test]
    fn weak_premise_matches_naive_ratio_comparison_when_signs_are_plain() {
        // Oracle: with rho(X) > 0 and k_i > 0 the division-free premise
        // theta(X_i) rho(X) >= k_i theta(X) is the plain ratio comparison
        // theta(X_i)/k_i >= theta(X)/rho(X).
        let scn = demo();
        let theta = RewardMeasure::compile(&expectation()).unwrap();
        let rho = RiskMeasure::compile(&es25()).unwrap();
        let x = scn.aggregate(&PortfolioWeights::ones(2)).unwrap();
        let theta_x = theta.evaluate(&x, &scn).unwrap();
        let rho_x = rho.evaluate(&x, &scn).unwrap();
        assert!(rho_x > 0.0);
        for k_i in [0.5, 1.0, 2.0, 7.5, 40.0] {
            for i in 0..2 {
                let theta_xi = theta.evaluate(&scn.position(i).unwrap(), &scn).unwrap();
                let cross = theta_xi * rho_x >= k_i * theta_x;
                let naive = theta_xi / k_i >= theta_x / rho_x;
                assert_eq!(cross, naive, "k_i = {k_i}, position {i}");
            }
        }
    }

    #[test]
    fn perturbed_allocation_is_caught_by_weak_criterion() {
        let scn = demo();
        // delta = 0.5 * |rho(X)| = 6 pushed onto the first component.
        let k = vec![16.0, 2.0];
        let verdict = verify_def_3_2(
            &k,
            &expectation(),
            &es25(),
            &scn,
            &default_h_grid(),
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Violated);
        let violations = verdict.violations();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].position, 0);
        match &violations[0].outcome {
            PositionOutcome::Violated { witness } => {
                assert_eq!(witness.h, 1e-6);
                assert_eq!(witness.inequality, "alpha(X) >= alpha(X + h X_i) - tol");
                assert_eq!(witness.premise_lhs, Some(60.0));
                assert_eq!(witness.premise_rhs, Some(84.0));
                assert!(witness.rhs > witness.lhs);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn zero_risk_makes_weak_criterion_vacuous() {
        let scn = ScenarioSet::uniform(vec![vec![1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        let verdict = verify_def_3_2(
            &[1.0, 1.0],
            &expectation(),
            &RiskMeasureSpec::Es { alpha: 0.5 },
            &scn,
            &default_h_grid(),
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Vacuous);
        for report in &verdict.positions {
            match &report.outcome {
                PositionOutcome::Vacuous { note } => {
                    assert!(note.contains("indeterminate"), "{note}");
                }
                other => panic!("expected vacuous, got {other:?}"),
            }
        }
    }

    #[test]
    fn arbitrage_instance_satisfies_weak_criterion_trivially() {
        // theta(X) = 3 > 0 with rho(X) = -3 < 0: alpha(X) is infinite, so
        // every branch-one conclusion holds whatever the premise says.
        let scn = ScenarioSet::uniform(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let verdict = verify_def_3_2(
            &[1.0, 1.0],
            &expectation(),
            &RiskMeasureSpec::Es { alpha: 0.5 },
            &scn,
            &default_h_grid(),
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Satisfied);
        assert_eq!(verdict.satisfied_count(), 2);
    }

    #[test]
    fn supergradient_subgradient_pair_satisfies_strict_criterion() {
        let scn = demo();
        let t = vec![5.0, 0.25];
        let k = vec![10.0, 2.0];
        let verdict = verify_def_3_5(
            &t,
            &k,
            &expectation(),
            &es25(),
            &scn,
            &default_h_grid(),
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Satisfied);
        assert_eq!(verdict.satisfied_count(), 2);
        assert_eq!(verdict.definition, DefinitionTag::Def35);
    }

    #[test]
    fn strict_criterion_requires_same_sign_instance() {
        // theta(X) = -3 < 0 while rho(X) = 3 > 0.
        let scn = ScenarioSet::uniform(vec![vec![-4.0, -2.0], vec![1.0, -1.0]]).unwrap();
        let verdict = verify_def_3_5(
            &[1.0, 1.0],
            &[1.0, 1.0],
            &expectation(),
            &RiskMeasureSpec::Es { alpha: 0.5 },
            &scn,
            &default_h_grid(),
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Vacuous);
        for report in &verdict.positions {
            match &report.outcome {
                PositionOutcome::Vacuous { note } => assert!(note.contains("strict sign")),
                other => panic!("expected vacuous, got {other:?}"),
            }
        }
    }

    #[test]
    fn strict_criterion_premise_equality_is_vacuous() {
        let scn = demo();
        // t_i = k_i * theta(X) / rho(X) makes both premises exact ties.
        let t = vec![10.0 * 5.25 / 12.0, 2.0 * 5.25 / 12.0];
        let verdict = verify_def_3_5(
            &t,
            &[10.0, 2.0],
            &expectation(),
            &es25(),
            &scn,
            &default_h_grid(),
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Vacuous);
        for report in &verdict.positions {
            match &report.outcome {
                PositionOutcome::Vacuous { note } => assert!(note.contains("premise")),
                other => panic!("expected vacuous, got {other:?}"),
            }
        }
    }

    #[test]
    fn strict_criterion_catches_flipped_reward_signal() {
        let scn = demo();
        // Raising t_2 flips the premise sign while the ratio still falls
        // when the second position is scaled down.
        let t = vec![5.0, 1.5];
        let k = vec![10.0, 2.0];
        let verdict = verify_def_3_5(
            &t,
            &k,
            &expectation(),
            &es25(),
            &scn,
            &default_h_grid(),
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Violated);
        let violations = verdict.violations();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].position, 1);
        match &violations[0].outcome {
            PositionOutcome::Violated { witness } => {
                assert_eq!(witness.inequality, "alpha(X) >= alpha(X - h X_i) + tol");
                assert_eq!(witness.premise_lhs, Some(18.0));
                assert_eq!(witness.premise_rhs, Some(10.5));
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn increment_bounds_hold_for_subgradient_allocation() {
        let scn = demo();
        let verdict =
            check_thm33_conditions(&[10.0, 2.0], &es25(), &scn, &default_h_grid()).unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Satisfied);
        assert_eq!(verdict.satisfied_count(), 2);
        assert_eq!(verdict.definition, DefinitionTag::Thm33Conditions);
        assert_eq!(verdict.tolerance, DEFAULT_TOL);
    }

    #[test]
    fn with_without_violates_increment_bounds_under_entropic() {
        let scn = ScenarioSet::uniform(vec![vec![2.0, -2.0], vec![1.0, 1.0]]).unwrap();
        let spec = RiskMeasureSpec::Entropic { a: 1.0 };
        let ww = with_without_allocation(&spec, &scn).unwrap();
        let rho_x = crate::measures::evaluate_risk(
            &spec,
            &scn.aggregate(&PortfolioWeights::ones(2)).unwrap(),
            &scn,
        )
        .unwrap();
        // rho(X) = ln((exp(-3) + exp(1)) / 2); removing the constant second
        // position leaves rho(X_2) = -1 exactly, by translation.
        let expected_rho = (0.5 * ((-3.0f64).exp() + 1.0f64.exp())).ln();
        assert!((rho_x - expected_rho).abs() < 1e-12);
        assert!((ww.values[0] - (expected_rho + 1.0)).abs() < 1e-12);

        let verdict = check_thm33_conditions(&ww.values, &spec, &scn, &default_h_grid()).unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Violated);
        match &verdict.positions[0].outcome {
            PositionOutcome::Violated { witness } => {
                assert_eq!(witness.inequality, "h*k_i >= rho(X) - rho(X - h X_i) - tol");
                assert!(witness.lhs < witness.rhs);
            }
            other => panic!("expected violation, got {other:?}"),
        }
        // The second position is a constant, so both bounds are exact.
        assert!(matches!(
            verdict.positions[1].outcome,
            PositionOutcome::Satisfied
        ));
    }

    #[test]
    fn reward_and_risk_increment_bounds_hold_for_gradient_pair() {
        let scn = demo();
        let verdict = check_thm36_conditions(
            &[5.0, 0.25],
            &[10.0, 2.0],
            &expectation(),
            &es25(),
            &scn,
            &default_h_grid(),
        )
        .unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Satisfied);
        assert_eq!(verdict.satisfied_count(), 2);
        assert_eq!(verdict.definition, DefinitionTag::Thm36Conditions);
    }

    #[test]
    fn overstated_risk_component_violates_the_upper_increment_bound() {
        let scn = demo();
        let verdict = check_thm36_conditions(
            &[5.0, 0.25],
            &[10.5, 2.0],
            &expectation(),
            &es25(),
            &scn,
            &default_h_grid(),
        )
        .unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Violated);
        match &verdict.positions[0].outcome {
            PositionOutcome::Violated { witness } => {
                assert_eq!(witness.inequality, "h*k_i <= rho(X + h X_i) - rho(X) + tol");
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn understated_risk_component_violates_the_lower_increment_bound() {
        let scn = demo();
        let verdict = check_thm36_conditions(
            &[5.0, 0.25],
            &[9.5, 2.0],
            &expectation(),
            &es25(),
            &scn,
            &default_h_grid(),
        )
        .unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Violated);
        match &verdict.positions[0].outcome {
            PositionOutcome::Violated { witness } => {
                assert_eq!(witness.inequality, "h*k_i >= rho(X) - rho(X - h X_i) - tol");
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    fn smooth_pair(
        scn: &ScenarioSet,
    ) -> (
        impl Fn(&PortfolioWeights) -> Result<f64> + Sync + '_,
        impl Fn(&PortfolioWeights) -> Result<f64> + Sync + '_,
    ) {
        let theta = RewardMeasure::compile(&RewardMeasureSpec::Expectation).unwrap();
        let rho = RiskMeasure::compile(&RiskMeasureSpec::Entropic { a: 1.0 }).unwrap();
        (
            move |u: &PortfolioWeights| theta.evaluate(&scn.aggregate(u)?, scn),
            move |u: &PortfolioWeights| rho.evaluate(&scn.aggregate(u)?, scn),
        )
    }

    #[test]
    fn fd_gradient_pair_satisfies_smooth_criterion() {
        let scn = ScenarioSet::uniform(vec![vec![-3.0, 2.0], vec![-1.0, 2.5]]).unwrap();
        let (theta_fn, rho_fn) = smooth_pair(&scn);
        let u = PortfolioWeights::ones(2);
        let step = 1e-3;
        let t = fd_partials(&theta_fn, &u, step).unwrap();
        let k = fd_partials(&rho_fn, &u, step).unwrap();
        let verdict = verify_def_3_7(&t, &k, &theta_fn, &rho_fn, &u, step).unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Satisfied);
        assert_eq!(verdict.satisfied_count(), 2);
        assert_eq!(verdict.definition, DefinitionTag::Def37);
        assert_eq!(verdict.grid, vec![step, step / 2.0, step / 4.0]);
    }

    #[test]
    fn smooth_criterion_is_vacuous_outside_the_admissible_domain() {
        // theta > 0 but the entropic risk is negative: not admissible.
        let scn = ScenarioSet::uniform(vec![vec![2.0, -1.0], vec![0.5, 1.5]]).unwrap();
        let (theta_fn, rho_fn) = smooth_pair(&scn);
        let u = PortfolioWeights::ones(2);
        let verdict =
            verify_def_3_7(&[1.0, 1.0], &[1.0, 1.0], &theta_fn, &rho_fn, &u, 1e-3).unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Vacuous);
    }

    #[test]
    fn smooth_criterion_premise_tie_is_vacuous() {
        let scn = ScenarioSet::uniform(vec![vec![-3.0, 2.0], vec![-1.0, 2.5]]).unwrap();
        let (theta_fn, rho_fn) = smooth_pair(&scn);
        let u = PortfolioWeights::ones(2);
        let theta_u = theta_fn(&u).unwrap();
        let rho_u = rho_fn(&u).unwrap();
        let k = vec![1.0, 2.0];
        let t: Vec<f64> = k.iter().map(|k_i| k_i * theta_u / rho_u).collect();
        let verdict = verify_def_3_7(&t, &k, &theta_fn, &rho_fn, &u, 1e-3).unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Vacuous);
        for report in &verdict.positions {
            match &report.outcome {
                PositionOutcome::Vacuous { note } => assert!(note.contains("premise")),
                other => panic!("expected vacuous, got {other:?}"),
            }
        }
    }

    #[test]
    fn shifted_component_fails_smooth_criterion() {
        let scn = ScenarioSet::uniform(vec![vec![-3.0, 2.0], vec![-1.0, 2.5]]).unwrap();
        let (theta_fn, rho_fn) = smooth_pair(&scn);
        let u = PortfolioWeights::ones(2);
        let step = 1e-3;
        let t = fd_partials(&theta_fn, &u, step).unwrap();
        let mut k = fd_partials(&rho_fn, &u, step).unwrap();
        // Lower one risk component far enough to flip its premise positive
        // while the ratio keeps falling along that coordinate.
        k[0] -= 10.0 * (1.0 + k[0].abs());
        let verdict = verify_def_3_7(&t, &k, &theta_fn, &rho_fn, &u, step).unwrap();
        assert_eq!(verdict.overall(), OverallVerdict::Violated);
        assert_eq!(verdict.violations()[0].position, 0);
    }

    #[test]
    fn counterexample_shows_constant_ratio_with_signed_premise() {
        let scn = demo();
        let rho = RiskMeasure::compile(&es25()).unwrap();
        let rho_fn = |u: &PortfolioWeights| rho.evaluate(&scn.aggregate(u)?, &scn);
        let u = PortfolioWeights::ones(2);
        let witness = gradient_uniqueness_counterexample(&[11.0, 2.0], rho_fn, &u, 0, 2.0).unwrap();
        assert!((witness.fd_partial - 10.0).abs() < 1e-9);
        assert_eq!(witness.k_i, 11.0);
        assert!((witness.premise_lhs - 240.0).abs() < 1e-6);
        assert!((witness.premise_rhs - 264.0).abs() < 1e-6);
        assert!(witness.premise_lhs < witness.premise_rhs);
        assert_eq!(witness.alpha_at_u, 2.0);
        assert_eq!(witness.samples.len(), 3);
        assert!(witness.max_alpha_deviation <= 1e-9);
    }

    #[test]
    fn counterexample_scale_cancels_in_the_ratio() {
        let scn = demo();
        let rho = RiskMeasure::compile(&es25()).unwrap();
        let rho_fn = |u: &PortfolioWeights| rho.evaluate(&scn.aggregate(u)?, &scn);
        let u = PortfolioWeights::ones(2);
        let w2 = gradient_uniqueness_counterexample(&[11.0, 2.0], rho_fn, &u, 0, 2.0).unwrap();
        let w5 = gradient_uniqueness_counterexample(&[11.0, 2.0], rho_fn, &u, 0, 5.0).unwrap();
        assert_eq!(w2.alpha_at_u, 2.0);
        assert_eq!(w5.alpha_at_u, 5.0);
        assert_eq!(
            w2.premise_lhs < w2.premise_rhs,
            w5.premise_lhs < w5.premise_rhs
        );
        assert!(w5.max_alpha_deviation <= 1e-9);
    }

    #[test]
    fn counterexample_refuses_a_matching_gradient() {
        let scn = demo();
        let rho = RiskMeasure::compile(&es25()).unwrap();
        let rho_fn = |u: &PortfolioWeights| rho.evaluate(&scn.aggregate(u)?, &scn);
        let u = PortfolioWeights::ones(2);
        let err = gradient_uniqueness_counterexample(&[10.0, 2.0], rho_fn, &u, 0, 1.0).unwrap_err();
        match err {
            Error::AllocationIsGradient { component, .. } => assert_eq!(component, 0),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn counterexample_validates_scale_and_index() {
        let scn = demo();
        let rho = RiskMeasure::compile(&es25()).unwrap();
        let rho_fn = |u: &PortfolioWeights| rho.evaluate(&scn.aggregate(u)?, &scn);
        let u = PortfolioWeights::ones(2);
        assert!(gradient_uniqueness_counterexample(&[11.0, 2.0], rho_fn, &u, 0, 0.0).is_err());
        assert!(gradient_uniqueness_counterexample(&[11.0, 2.0], rho_fn, &u, 0, -1.0).is_err());
        assert!(gradient_uniqueness_counterexample(&[11.0, 2.0], rho_fn, &u, 7, 1.0).is_err());
    }

    #[test]
    fn satisfied_verdicts_survive_grid_refinement_to_subsets() {
        let scn = demo();
        let full = verify_def_3_2(
            &[10.0, 2.0],
            &expectation(),
            &es25(),
            &scn,
            &default_h_grid(),
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(full.overall(), OverallVerdict::Satisfied);
        let subset = HGrid::new(vec![1e-2, 1e-5]).unwrap();
        let sparse = verify_def_3_2(
            &[10.0, 2.0],
            &expectation(),
            &es25(),
            &scn,
            &subset,
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(sparse.overall(), OverallVerdict::Satisfied);
    }

    #[test]
    fn verdicts_serialize_with_tag_grid_and_witnesses() {
        let scn = demo();
        let verdict = verify_def_3_2(
            &[16.0, 2.0],
            &expectation(),
            &es25(),
            &scn,
            &HGrid::new(vec![1e-2]).unwrap(),
            DEFAULT_TOL,
        )
        .unwrap();
        let json = serde_json::to_string(&verdict).unwrap();
        assert!(json.contains("\"definition\":\"def_3_2\""));
        assert!(json.contains("\"grid\":[0.01]"));
        assert!(json.contains("\"outcome\":\"violated\""));
        assert!(json.contains("\"premise_lhs\":60.0"));
        let back: SuitabilityVerdict = serde_json::from_str(&json).unwrap();
        assert_eq!(back, verdict);

        let satisfied = verify_def_3_2(
            &[10.0, 2.0],
            &expectation(),
            &es25(),
            &scn,
            &HGrid::new(vec![1e-2]).unwrap(),
            DEFAULT_TOL,
        )
        .unwrap();
        let json = serde_json::to_string(&satisfied).unwrap();
        assert!(json.contains("\"outcome\":\"satisfied\""));
        assert!(!json.contains("premise_lhs"));
    }

    #[test]
    fn verifier_rejects_malformed_inputs() {
        let scn = demo();
        let grid = default_h_grid();
        assert!(verify_def_3_2(&[1.0], &expectation(), &es25(), &scn, &grid, 1e-9).is_err());
        assert!(
            verify_def_3_2(&[1.0, f64::NAN], &expectation(), &es25(), &scn, &grid, 1e-9).is_err()
        );
        assert!(verify_def_3_2(&[1.0, 1.0], &expectation(), &es25(), &scn, &grid, -1.0).is_err());
        let (theta_fn, rho_fn) = smooth_pair(&scn);
        let u = PortfolioWeights::ones(2);
        assert!(verify_def_3_7(&[1.0, 1.0], &[1.0, 1.0], &theta_fn, &rho_fn, &u, 0.0).is_err());
        assert!(verify_def_3_7(&[1.0, 1.0], &[1.0, 1.0], &theta_fn, &rho_fn, &u, 0.2).is_err());
    }

    #[test]
    fn reward_of_each_position_feeds_the_premise() {
        // Spot-check the premise inputs against direct evaluation.
        let scn = demo();
        let theta_x1 = evaluate_reward(&expectation(), &scn.position(0).unwrap(), &scn).unwrap();
        assert_eq!(theta_x1, 5.0);
    }
}
