//! Coalition setting for portfolios of non-divisible subportfolios.
//!
//! Capabilities:
//! - coalition reward and cost functions over subsets of positions, with the
//!   empty-coalition convention `vartheta(emptyset) = c(emptyset) = 0` and a
//!   memoized evaluation cache
//! - the admissible family of coalitions whose reward and cost share a
//!   strict sign, and the ratio `gamma(S) = vartheta(S) / c(S)` on it
//! - the marginal contribution allocation `c(S u {i}) - c(S)`, which reduces
//!   to the with-without allocation at `S = N \ {i}`
//! - whole-position suitability verification (`game_def_4_1`) and the
//!   sufficient cost-increment conditions that imply it under an additive
//!   reward function
//! - classical allocation property checks: efficiency, symmetry, and the
//!   dummy-player property, by exhaustive powerset enumeration capped at 20
//!   positions

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::batch;
use crate::error::{Error, Result};
use crate::measures::{RewardMeasure, RewardMeasureSpec, RiskMeasure, RiskMeasureSpec};
use crate::scenario::{PortfolioWeights, ScenarioSet};
use crate::suitability::{
    DefinitionTag, PositionOutcome, PositionReport, SuitabilityVerdict, Witness,
};
use crate::DEFAULT_TOL;

/// Maximum number of positions for exhaustive powerset enumeration.
pub const COALITION_CAP: usize = 20;

/// Maximum number of positions a game instance can address at all.
const MASK_CAP: usize = 32;

/// Residual threshold for the additivity, symmetry, and dummy hypotheses.
const HYPOTHESIS_TOL: f64 = 1e-9;

/// A set of position indices, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coalition {
    mask: u32,
}

impl Coalition {
    /// The empty coalition.
    pub fn empty() -> Self {
        Self { mask: 0 }
    }

    /// The grand coalition over `n` positions.
    pub fn full(n: usize) -> Result<Self> {
        if n > MASK_CAP {
            return Err(Error::CoalitionCap { n, cap: MASK_CAP });
        }
        if n == MASK_CAP {
            return Ok(Self { mask: u32::MAX });
        }
        Ok(Self {
            mask: (1u32 << n) - 1,
        })
    }

    /// Builds a coalition from member indices, each of which must be < `n`.
    pub fn from_members(members: &[usize], n: usize) -> Result<Self> {
        if n > MASK_CAP {
            return Err(Error::CoalitionCap { n, cap: MASK_CAP });
        }
        let mut mask = 0u32;
        for &member in members {
            if member >= n {
                return Err(Error::CoalitionMember { member, n });
            }
            mask |= 1 << member;
        }
        Ok(Self { mask })
    }

    /// Wraps a raw bitmask; validity against a position count is checked by
    /// the game instance that consumes it.
    pub fn from_mask(mask: u32) -> Self {
        Self { mask }
    }

    /// The raw bitmask.
    pub fn mask(&self) -> u32 {
        self.mask
    }

    /// Member indices in ascending order.
    pub fn members(&self) -> Vec<usize> {
        (0..MASK_CAP).filter(|&i| self.contains(i)).collect()
    }

    /// Whether position `i` is a member.
    pub fn contains(&self, i: usize) -> bool {
        i < MASK_CAP && self.mask & (1 << i) != 0
    }

    /// The coalition with position `i` added.
    pub fn with(&self, i: usize) -> Result<Self> {
        if i >= MASK_CAP {
            return Err(Error::CoalitionMember {
                member: i,
                n: MASK_CAP,
            });
        }
        Ok(Self {
            mask: self.mask | (1 << i),
        })
    }

    /// The coalition with position `i` removed.
    pub fn without(&self, i: usize) -> Self {
        if i >= MASK_CAP {
            return *self;
        }
        Self {
            mask: self.mask & !(1 << i),
        }
    }

    /// Number of members.
    pub fn card(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Whether the coalition is empty.
    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (pos, member) in self.members().into_iter().enumerate() {
            if pos > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{member}")?;
        }
        write!(f, "}}")
    }
}

/// A scenario set paired with compiled reward and risk measures, evaluated
/// coalition-wise with memoization.
#[derive(Debug)]
pub struct GameInstance {
    scn: ScenarioSet,
    theta_spec: RewardMeasureSpec,
    rho_spec: RiskMeasureSpec,
    theta: RewardMeasure,
    rho: RiskMeasure,
    cache: Mutex<HashMap<u32, (f64, f64)>>,
}

impl GameInstance {
    /// Compiles both measures over the scenario set.
    pub fn new(
        scn: ScenarioSet,
        theta_spec: RewardMeasureSpec,
        rho_spec: RiskMeasureSpec,
    ) -> Result<Self> {
        if scn.n() > MASK_CAP {
            return Err(Error::CoalitionCap {
                n: scn.n(),
                cap: MASK_CAP,
            });
        }
        let theta = RewardMeasure::compile(&theta_spec)?;
        let rho = RiskMeasure::compile(&rho_spec)?;
        Ok(Self {
            scn,
            theta_spec,
            rho_spec,
            theta,
            rho,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Number of positions.
    pub fn n(&self) -> usize {
        self.scn.n()
    }

    /// The underlying scenario set.
    pub fn scenarios(&self) -> &ScenarioSet {
        &self.scn
    }

    /// The reward measure specification.
    pub fn theta_spec(&self) -> &RewardMeasureSpec {
        &self.theta_spec
    }

    /// The risk measure specification.
    pub fn rho_spec(&self) -> &RiskMeasureSpec {
        &self.rho_spec
    }

    fn check_coalition(&self, s: Coalition) -> Result<()> {
        for member in s.members() {
            if member >= self.n() {
                return Err(Error::CoalitionMember {
                    member,
                    n: self.n(),
                });
            }
        }
        Ok(())
    }

    /// Reward and cost of a coalition: `(theta(sum_{i in S} X_i),
    /// rho(sum_{i in S} X_i))`, with the empty coalition mapped to `(0, 0)`.
    pub fn coalition_values(&self, s: Coalition) -> Result<(f64, f64)> {
        self.check_coalition(s)?;
        if s.is_empty() {
            return Ok((0.0, 0.0));
        }
        if let Some(&cached) = self.cache.lock().unwrap().get(&s.mask()) {
            return Ok(cached);
        }
        let mut weights = vec![0.0; self.n()];
        for member in s.members() {
            weights[member] = 1.0;
        }
        let sum = self.scn.aggregate(&PortfolioWeights::new(weights)?)?;
        let values = (
            self.theta.evaluate(&sum, &self.scn)?,
            self.rho.evaluate(&sum, &self.scn)?,
        );
        self.cache.lock().unwrap().insert(s.mask(), values);
        Ok(values)
    }

    /// Whether the coalition's reward and cost share a strict sign.
    pub fn admissible(&self, s: Coalition) -> Result<bool> {
        let (theta, cost) = self.coalition_values(s)?;
        Ok((theta > 0.0 && cost > 0.0) || (theta < 0.0 && cost < 0.0))
    }

    /// All admissible non-empty coalitions, by exhaustive enumeration.
    /// Requires at most [`COALITION_CAP`] positions; beyond that use
    /// [`GameInstance::admissible_from`] with an explicit candidate list.
    pub fn admissible_coalitions(&self) -> Result<Vec<Coalition>> {
        if self.n() > COALITION_CAP {
            return Err(Error::CoalitionCap {
                n: self.n(),
                cap: COALITION_CAP,
            });
        }
        let masks: Vec<Coalition> = (1u32..(1u32 << self.n()))
            .map(Coalition::from_mask)
            .collect();
        self.admissible_from(&masks)
    }

    /// Filters an explicit candidate list down to the admissible ones.
    pub fn admissible_from(&self, candidates: &[Coalition]) -> Result<Vec<Coalition>> {
        let flags = batch::try_map_indexed(candidates.len(), |idx| {
            let s = candidates[idx];
            Ok(!s.is_empty() && self.admissible(s)?)
        })?;
        Ok(candidates
            .iter()
            .zip(flags)
            .filter_map(|(&s, keep)| keep.then_some(s))
            .collect())
    }

    /// The ratio `gamma(S) = theta(S) / c(S)`, a plain quotient on the
    /// admissible family (where it is always strictly positive).
    pub fn gamma(&self, s: Coalition) -> Result<f64> {
        let (theta, cost) = self.coalition_values(s)?;
        if !((theta > 0.0 && cost > 0.0) || (theta < 0.0 && cost < 0.0)) {
            return Err(Error::InadmissibleCoalition {
                coalition: s.to_string(),
                reason: format!(
                    "theta(S) = {theta} and c(S) = {cost} must both be strictly positive or both strictly negative"
                ),
            });
        }
        Ok(theta / cost)
    }

    /// Marginal contribution of position `i` to coalition `S`:
    /// `c(S u {i}) - c(S)`. At `S = N \ {i}` this is the with-without
    /// allocation component for `i`.
    pub fn marginal_contribution(&self, s: Coalition, i: usize) -> Result<f64> {
        self.check_coalition(s)?;
        if i >= self.n() {
            return Err(Error::CoalitionMember {
                member: i,
                n: self.n(),
            });
        }
        if s.contains(i) {
            return Err(Error::MemberAlreadyPresent { member: i });
        }
        let (_, with) = self.coalition_values(s.with(i)?)?;
        let (_, without) = self.coalition_values(s)?;
        Ok(with - without)
    }
}

/// One row of the serialized coalition table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalitionRow {
    /// Bitmask of the coalition.
    pub mask: u32,
    /// Member indices in ascending order.
    pub members: Vec<usize>,
    /// Coalition reward `theta(S)`.
    pub theta: f64,
    /// Coalition cost `c(S)`.
    pub cost: f64,
    /// The ratio `gamma(S)`, present only on admissible coalitions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Whether reward and cost share a strict sign.
    pub admissible: bool,
}

/// Tabulates reward, cost, ratio, and admissibility for every coalition,
/// the empty one included. Capped at [`COALITION_CAP`] positions.
pub fn coalition_table(game: &GameInstance) -> Result<Vec<CoalitionRow>> {
    if game.n() > COALITION_CAP {
        return Err(Error::CoalitionCap {
            n: game.n(),
            cap: COALITION_CAP,
        });
    }
    batch::try_map_indexed(1usize << game.n(), |mask| {
        let s = Coalition::from_mask(mask as u32);
        let (theta, cost) = game.coalition_values(s)?;
        let admissible = (theta > 0.0 && cost > 0.0) || (theta < 0.0 && cost < 0.0);
        Ok(CoalitionRow {
            mask: s.mask(),
            members: s.members(),
            theta,
            cost,
            gamma: admissible.then(|| theta / cost),
            admissible,
        })
    })
}

fn check_kappa(kappa: &[f64], n: usize, tested: &[usize]) -> Result<()> {
    if kappa.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: kappa.len(),
        });
    }
    for &i in tested {
        if !kappa[i].is_finite() {
            return Err(Error::NonFinite {
                what: format!("allocation entry kappa[{i}]"),
                value: kappa[i],
            });
        }
    }
    Ok(())
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

/// Verifies whole-position suitability of a cost allocation at coalition
/// `S`: for each outside position `i`, the division-free premise
/// `theta({i}) c(S) - kappa_i theta(S)` strictly above (below) `tol` must be
/// answered by `gamma(S u {i})` strictly above (below) `gamma(S)` with
/// margin `tol`. Positions whose premise ties within `tol`, whose extended
/// coalition is inadmissible, or whose base coalition is inadmissible are
/// vacuous. The only perturbation is adding the whole subportfolio, so the
/// verdict grid is the single step `1`.
pub fn verify_def_4_1(
    game: &GameInstance,
    kappa: &[f64],
    s: Coalition,
    tol: f64,
) -> Result<SuitabilityVerdict> {
    check_tol(tol)?;
    game.check_coalition(s)?;
    let tested: Vec<usize> = (0..game.n()).filter(|&i| !s.contains(i)).collect();
    check_kappa(kappa, game.n(), &tested)?;

    let base_admissible = game.admissible(s)?;
    let positions = batch::try_map_indexed(tested.len(), |idx| {
        let i = tested[idx];
        if !base_admissible {
            return Ok(PositionReport {
                position: i,
                outcome: PositionOutcome::Vacuous {
                    note: format!("coalition {s} is not admissible"),
                },
            });
        }
        let extended = s.with(i)?;
        if !game.admissible(extended)? {
            return Ok(PositionReport {
                position: i,
                outcome: PositionOutcome::Vacuous {
                    note: format!("extended coalition {extended} is not admissible"),
                },
            });
        }
        let (theta_s, cost_s) = game.coalition_values(s)?;
        let (theta_i, _) = game.coalition_values(Coalition::from_members(&[i], game.n())?)?;
        let premise_lhs = theta_i * cost_s;
        let premise_rhs = kappa[i] * theta_s;
        let d = premise_lhs - premise_rhs;
        if d.abs() <= tol {
            return Ok(PositionReport {
                position: i,
                outcome: PositionOutcome::Vacuous {
                    note: "premise never triggered: |theta({i}) c(S) - kappa_i theta(S)| <= tol"
                        .to_string(),
                },
            });
        }
        let gamma_s = theta_s / cost_s;
        let (theta_e, cost_e) = game.coalition_values(extended)?;
        let gamma_e = theta_e / cost_e;
        let (desc, holds) = if d > tol {
            ("gamma(S u {i}) >= gamma(S) + tol", gamma_e >= gamma_s + tol)
        } else {
            ("gamma(S u {i}) <= gamma(S) - tol", gamma_e <= gamma_s - tol)
        };
        if !holds {
            return Ok(PositionReport {
                position: i,
                outcome: PositionOutcome::Violated {
                    witness: Witness {
                        h: 1.0,
                        inequality: desc.to_string(),
                        lhs: gamma_e,
                        rhs: gamma_s,
                        premise_lhs: Some(premise_lhs),
                        premise_rhs: Some(premise_rhs),
                    },
                },
            });
        }
        Ok(PositionReport {
            position: i,
            outcome: PositionOutcome::Satisfied,
        })
    })?;
    Ok(SuitabilityVerdict {
        definition: DefinitionTag::GameDef41,
        tolerance: tol,
        grid: vec![1.0],
        positions,
    })
}

/// Checks the cost-increment conditions that make an allocation suitable at
/// coalition `S` when the reward function is additive there: `kappa_i >=
/// c(S u {i}) - c(S)` where `c(S u {i}) > 0` and `kappa_i <= c(S u {i}) -
/// c(S)` where `c(S u {i}) < 0`, each with slack 1e-9. The additivity
/// hypothesis `theta(S u {i}) = theta(S) + theta({i})` is verified
/// numerically per position; where it fails, the position is vacuous with
/// the measured residual.
pub fn check_prop_4_2(
    game: &GameInstance,
    kappa: &[f64],
    s: Coalition,
) -> Result<SuitabilityVerdict> {
    game.check_coalition(s)?;
    let tested: Vec<usize> = (0..game.n()).filter(|&i| !s.contains(i)).collect();
    check_kappa(kappa, game.n(), &tested)?;
    let tol = DEFAULT_TOL;

    let base_admissible = game.admissible(s)?;
    let positions = batch::try_map_indexed(tested.len(), |idx| {
        let i = tested[idx];
        if !base_admissible {
            return Ok(PositionReport {
                position: i,
                outcome: PositionOutcome::Vacuous {
                    note: format!("coalition {s} is not admissible"),
                },
            });
        }
        let extended = s.with(i)?;
        let (theta_s, cost_s) = game.coalition_values(s)?;
        let (theta_i, _) = game.coalition_values(Coalition::from_members(&[i], game.n())?)?;
        let (theta_e, cost_e) = game.coalition_values(extended)?;
        let residual = (theta_e - theta_s - theta_i).abs();
        if residual > HYPOTHESIS_TOL {
            return Ok(PositionReport {
                position: i,
                outcome: PositionOutcome::Vacuous {
                    note: format!(
                        "additivity hypothesis fails: |theta(S u {{i}}) - theta(S) - theta({{i}})| = {residual:e}"
                    ),
                },
            });
        }
        let marginal = cost_e - cost_s;
        // Negations are spelled on named bools so a NaN comparison counts
        // as a violation instead of silently passing.
        if cost_e > tol {
            let holds = kappa[i] >= marginal - tol;
            if !holds {
                return Ok(PositionReport {
                    position: i,
                    outcome: PositionOutcome::Violated {
                        witness: Witness {
                            h: 1.0,
                            inequality: "kappa_i >= c(S u {i}) - c(S) - tol".to_string(),
                            lhs: kappa[i],
                            rhs: marginal,
                            premise_lhs: Some(cost_e),
                            premise_rhs: Some(0.0),
                        },
                    },
                });
            }
        } else if cost_e < -tol {
            let holds = kappa[i] <= marginal + tol;
            if !holds {
                return Ok(PositionReport {
                    position: i,
                    outcome: PositionOutcome::Violated {
                        witness: Witness {
                            h: 1.0,
                            inequality: "kappa_i <= c(S u {i}) - c(S) + tol".to_string(),
                            lhs: kappa[i],
                            rhs: marginal,
                            premise_lhs: Some(cost_e),
                            premise_rhs: Some(0.0),
                        },
                    },
                });
            }
        } else {
            return Ok(PositionReport {
                position: i,
                outcome: PositionOutcome::Vacuous {
                    note: "c(S u {i}) is zero within tol; neither increment condition applies"
                        .to_string(),
                },
            });
        }
        Ok(PositionReport {
            position: i,
            outcome: PositionOutcome::Satisfied,
        })
    })?;
    Ok(SuitabilityVerdict {
        definition: DefinitionTag::GameDef41,
        tolerance: tol,
        grid: vec![1.0],
        positions,
    })
}

/// Efficiency check result on the grand coalition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    /// Cost of the grand coalition, `c(N)`.
    pub cost_grand_coalition: f64,
    /// Sum of the allocation components.
    pub total_allocated: f64,
    /// Absolute difference between the two.
    pub residual: f64,
    /// Whether the residual is within `1e-9 * max(1, |c(N)|)`.
    pub passes: bool,
}

/// Symmetry check for one pair whose cost hypothesis holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryFinding {
    /// First position of the exchangeable pair.
    pub i: usize,
    /// Second position of the exchangeable pair.
    pub j: usize,
    /// Allocation component of `i`.
    pub kappa_i: f64,
    /// Allocation component of `j`.
    pub kappa_j: f64,
    /// Absolute difference of the two components.
    pub residual: f64,
    /// Whether the components agree within `1e-9 * max(1, scale)`.
    pub passes: bool,
}

/// Dummy-player check for one position whose cost hypothesis holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DummyFinding {
    /// The dummy position.
    pub position: usize,
    /// Allocation component of the dummy.
    pub kappa_i: f64,
    /// Its standalone cost `c({i})`.
    pub standalone_cost: f64,
    /// Absolute difference of the two.
    pub residual: f64,
    /// Whether the component equals the standalone cost within
    /// `1e-9 * max(1, |c({i})|)`.
    pub passes: bool,
}

/// Efficiency, symmetry, and dummy-player findings for an allocation on the
/// grand coalition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    /// Whether the allocation sums to the grand-coalition cost.
    pub efficiency: EfficiencyReport,
    /// Pairs whose symmetry hypothesis holds, with the component comparison.
    pub symmetry: Vec<SymmetryFinding>,
    /// Positions whose dummy hypothesis holds, with the component comparison.
    pub dummy: Vec<DummyFinding>,
}

fn rel_close(a: f64, b: f64) -> (f64, bool) {
    let residual = (a - b).abs();
    let pass = residual <= HYPOTHESIS_TOL * a.abs().max(b.abs()).max(1.0);
    (residual, pass)
}

/// Checks efficiency, symmetry, and the dummy-player property of an
/// allocation `kappa` on the grand coalition. Symmetry is asserted only for
/// pairs `(i, j)` with `c({i} u S) = c({j} u S)` for every `S` disjoint from
/// both, and the dummy property only for positions with `c({i} u S) =
/// c({i}) + c(S)` for every `S` not containing `i`; both hypotheses are
/// tested numerically at 1e-9 over the full powerset, capped at
/// [`COALITION_CAP`] positions.
pub fn check_allocation_properties(game: &GameInstance, kappa: &[f64]) -> Result<PropertyReport> {
    let n = game.n();
    if n > COALITION_CAP {
        return Err(Error::CoalitionCap {
            n,
            cap: COALITION_CAP,
        });
    }
    let tested: Vec<usize> = (0..n).collect();
    check_kappa(kappa, n, &tested)?;

    let (_, cost_n) = game.coalition_values(Coalition::full(n)?)?;
    let total: f64 = kappa.iter().sum();
    let (residual, passes) = rel_close(total, cost_n);
    let efficiency = EfficiencyReport {
        cost_grand_coalition: cost_n,
        total_allocated: total,
        residual,
        passes,
    };

    let full_mask = Coalition::full(n)?.mask();
    let mut symmetry = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let pair_mask = (1u32 << i) | (1u32 << j);
            let rest = full_mask & !pair_mask;
            let mut hypothesis = true;
            let mut sub = rest;
            loop {
                let s = Coalition::from_mask(sub);
                let (_, ci) = game.coalition_values(s.with(i)?)?;
                let (_, cj) = game.coalition_values(s.with(j)?)?;
                if (ci - cj).abs() > HYPOTHESIS_TOL {
                    hypothesis = false;
                    break;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
            if hypothesis {
                let (residual, passes) = rel_close(kappa[i], kappa[j]);
                symmetry.push(SymmetryFinding {
                    i,
                    j,
                    kappa_i: kappa[i],
                    kappa_j: kappa[j],
                    residual,
                    passes,
                });
            }
        }
    }

    let mut dummy = Vec::new();
    for (i, &kappa_i) in kappa.iter().enumerate() {
        let rest = full_mask & !(1u32 << i);
        let singleton = Coalition::from_members(&[i], n)?;
        let (_, cost_i) = game.coalition_values(singleton)?;
        let mut hypothesis = true;
        let mut sub = rest;
        loop {
            let s = Coalition::from_mask(sub);
            let (_, cs) = game.coalition_values(s)?;
            let (_, cis) = game.coalition_values(s.with(i)?)?;
            if (cis - cost_i - cs).abs() > HYPOTHESIS_TOL {
                hypothesis = false;
                break;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        if hypothesis {
            let (residual, passes) = rel_close(kappa_i, cost_i);
            dummy.push(DummyFinding {
                position: i,
                kappa_i,
                standalone_cost: cost_i,
                residual,
                passes,
            });
        }
    }

    Ok(PropertyReport {
        efficiency,
        symmetry,
        dummy,
    })
}
