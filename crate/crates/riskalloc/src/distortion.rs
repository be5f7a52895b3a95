//! Distortion functions on [0,1]: the built-in registry, table-based
//! interpolation, shape flags, and grid validation.
//!
//! Core capabilities:
//! - `DistortionFunction` packages an evaluation closure, a derivative
//!   closure, and convexity/concavity flags under a display name.
//! - Built-in registry: `identity`, `power(p)`, `sqrt`, `dual_power(p)`.
//! - Piecewise-linear table distortions from `(t, value)` pairs, with the
//!   derivative defined as the clamped centered difference of the table.
//! - `validate` checks the defining invariants (endpoints, monotonicity on a
//!   1e-3 grid, derivative against a centered finite difference) once,
//!   outside hot evaluation loops.
//! - `shape_warning` reports, without failing, when a distortion's shape does
//!   not match what a use-site expects (concave for risk, convex for reward).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step of the monotonicity-validation grid.
const VALIDATION_GRID_STEP: f64 = 1e-3;
/// Step of the centered finite difference used to cross-check derivatives.
const DERIV_FD_STEP: f64 = 1e-6;
/// Tolerance for the derivative against its finite-difference check.
const DERIV_TOL: f64 = 1e-4;
/// Tolerance for the endpoint conditions eval(0)=0 and eval(1)=1.
const ENDPOINT_TOL: f64 = 1e-12;

type UnaryFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Shape a use-site requires of a distortion function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Required by distorted reward measures.
    Convex,
    /// Required by distortion risk measures.
    Concave,
}

/// A non-decreasing function on [0,1] with fixed endpoints, its derivative,
/// and shape flags.
#[derive(Clone)]
pub struct DistortionFunction {
    name: String,
    eval: UnaryFn,
    deriv: UnaryFn,
    is_convex: bool,
    is_concave: bool,
}

impl fmt::Debug for DistortionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistortionFunction")
            .field("name", &self.name)
            .field("is_convex", &self.is_convex)
            .field("is_concave", &self.is_concave)
            .finish()
    }
}

impl DistortionFunction {
    /// Wraps explicit closures; the caller vouches for the shape flags.
    pub fn custom(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        is_convex: bool,
        is_concave: bool,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            is_convex,
            is_concave,
        }
    }

    /// The identity distortion, both convex and concave.
    pub fn identity() -> Self {
        Self::custom("identity", |t| t, |_| 1.0, true, true)
    }

    /// The square-root distortion, concave.
    pub fn sqrt() -> Self {
        Self::custom("sqrt", f64::sqrt, |t| 0.5 / t.sqrt(), false, true)
    }

    /// The power distortion `t^p` for `p > 0`; convex for `p >= 1`, concave
    /// for `p <= 1`.
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidParameter {
                name: "p",
                requirement: "p > 0",
                value: p,
            });
        }
        let eval: UnaryFn = match integral_exponent(p) {
            Some(k) => Arc::new(move |t: f64| t.powi(k)),
            None => Arc::new(move |t: f64| t.powf(p)),
        };
        let deriv: UnaryFn = match integral_exponent(p - 1.0) {
            Some(k) => Arc::new(move |t: f64| p * t.powi(k)),
            None => Arc::new(move |t: f64| p * t.powf(p - 1.0)),
        };
        Ok(Self {
            name: format!("power({p})"),
            eval,
            deriv,
            is_convex: p >= 1.0,
            is_concave: p <= 1.0,
        })
    }

    /// The dual-power distortion `1 - (1-t)^p` for `p > 0`; concave for
    /// `p >= 1`, convex for `p <= 1`.
    pub fn dual_power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidParameter {
                name: "p",
                requirement: "p > 0",
                value: p,
            });
        }
        let eval: UnaryFn = match integral_exponent(p) {
            Some(k) => Arc::new(move |t: f64| 1.0 - (1.0 - t).powi(k)),
            None => Arc::new(move |t: f64| 1.0 - (1.0 - t).powf(p)),
        };
        let deriv: UnaryFn = match integral_exponent(p - 1.0) {
            Some(k) => Arc::new(move |t: f64| p * (1.0 - t).powi(k)),
            None => Arc::new(move |t: f64| p * (1.0 - t).powf(p - 1.0)),
        };
        Ok(Self {
            name: format!("dual_power({p})"),
            eval,
            deriv,
            is_convex: p <= 1.0,
            is_concave: p >= 1.0,
        })
    }

    /// Piecewise-linear distortion through `(t, value)` knots spanning
    /// (0,0) to (1,1); the derivative is the clamped centered difference and
    /// the shape flags are computed from slope monotonicity.
    pub fn from_table(pairs: Vec<(f64, f64)>) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidDistortion {
            name: "table".to_string(),
            reason: reason.to_string(),
        };
        if pairs.len() < 2 {
            return Err(invalid("table needs at least two (t, value) pairs"));
        }
        for &(t, v) in &pairs {
            if !t.is_finite() || !v.is_finite() {
                return Err(invalid("table entries must be finite"));
            }
        }
        if pairs.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid("table t-coordinates must be strictly increasing"));
        }
        let first = pairs[0];
        let last = pairs[pairs.len() - 1];
        if first.0.abs() > ENDPOINT_TOL || first.1.abs() > ENDPOINT_TOL {
            return Err(invalid("table must start at (0, 0)"));
        }
        if (last.0 - 1.0).abs() > ENDPOINT_TOL || (last.1 - 1.0).abs() > ENDPOINT_TOL {
            return Err(invalid("table must end at (1, 1)"));
        }
        if pairs.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(invalid("table values must be non-decreasing"));
        }

        let slopes: Vec<f64> = pairs
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        let is_convex = slopes.windows(2).all(|s| s[1] >= s[0] - 1e-12);
        let is_concave = slopes.windows(2).all(|s| s[1] <= s[0] + 1e-12);

        let knots = Arc::new(pairs);
        let eval_knots = Arc::clone(&knots);
        let eval = move |t: f64| interpolate(&eval_knots, t);
        let deriv_knots = Arc::clone(&knots);
        let deriv = move |t: f64| {
            let lo = (t - DERIV_FD_STEP).max(0.0);
            let hi = (t + DERIV_FD_STEP).min(1.0);
            (interpolate(&deriv_knots, hi) - interpolate(&deriv_knots, lo)) / (hi - lo)
        };
        let built = Self {
            name: "table".to_string(),
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            is_convex,
            is_concave,
        };
        built.validate()?;
        Ok(built)
    }

    /// Display name.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Evaluates the distortion at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    /// Evaluates the derivative at `t`.
    pub fn deriv(&self, t: f64) -> f64 {
        (self.deriv)(t)
    }

    /// Whether the function is flagged convex.
    pub fn is_convex(&self) -> bool {
        self.is_convex
    }

    /// Whether the function is flagged concave.
    pub fn is_concave(&self) -> bool {
        self.is_concave
    }

    /// Checks the defining invariants on evaluation grids: endpoints within
    /// 1e-12, non-decreasing on a 1e-3 grid, derivative within 1e-4 of the
    /// centered finite difference (step 1e-6) on the interior grid.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidDistortion {
            name: self.name.clone(),
            reason,
        };
        // Negations are spelled on named bools so a NaN comparison counts
        // as a failed check instead of silently passing.
        let at_zero = self.eval(0.0);
        let zero_pinned = at_zero.abs() <= ENDPOINT_TOL;
        if !zero_pinned {
            return Err(fail(format!(
                "eval(0) must be 0 within 1e-12, got {at_zero}"
            )));
        }
        let at_one = self.eval(1.0);
        let one_pinned = (at_one - 1.0).abs() <= ENDPOINT_TOL;
        if !one_pinned {
            return Err(fail(format!(
                "eval(1) must be 1 within 1e-12, got {at_one}"
            )));
        }
        let steps = (1.0 / VALIDATION_GRID_STEP).round() as usize;
        let mut prev = at_zero;
        for k in 1..=steps {
            let t = k as f64 * VALIDATION_GRID_STEP;
            let v = self.eval(t);
            if !v.is_finite() {
                return Err(fail(format!("eval({t}) is not finite")));
            }
            if v < prev - 1e-12 {
                return Err(fail(format!(
                    "eval must be non-decreasing, but eval({t}) = {v} < {prev}"
                )));
            }
            prev = v;
        }
        for k in 1..steps {
            let t = k as f64 * VALIDATION_GRID_STEP;
            let fd = (self.eval(t + DERIV_FD_STEP) - self.eval(t - DERIV_FD_STEP))
                / (2.0 * DERIV_FD_STEP);
            let d = self.deriv(t);
            let matches_fd = (d - fd).abs() <= DERIV_TOL;
            if !matches_fd {
                return Err(fail(format!(
                    "deriv({t}) = {d} disagrees with centered difference {fd} beyond 1e-4"
                )));
            }
        }
        Ok(())
    }

    /// Message describing a shape mismatch for the given use-site, if any.
    pub fn shape_warning(&self, required: Shape) -> Option<String> {
        let ok = match required {
            Shape::Convex => self.is_convex,
            Shape::Concave => self.is_concave,
        };
        if ok {
            None
        } else {
            let wanted = match required {
                Shape::Convex => "convex",
                Shape::Concave => "concave",
            };
            Some(format!(
                "distortion {:?} is not {wanted}; results remain well-defined but lose the \
                 shape-dependent guarantees",
                self.name
            ))
        }
    }
}

/// Exponent fast path: `Some(k)` when `p` is a small non-negative integer.
fn integral_exponent(p: f64) -> Option<i32> {
    let rounded = p.round();
    if (p - rounded).abs() < 1e-12 && (0.0..=16.0).contains(&rounded) {
        Some(rounded as i32)
    } else {
        None
    }
}

/// Piecewise-linear interpolation through sorted knots, clamped to the
/// table's range outside it.
fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let hi = knots.partition_point(|&(kt, _)| kt < t);
    let (t0, v0) = knots[hi - 1];
    let (t1, v1) = knots[hi];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Serializable description of a distortion: a registry name with an
/// optional parameter, or an interpolation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistortionSpec {
    /// A registry entry: `identity`, `sqrt`, `power` (with `p`), or
    /// `dual_power` (with `p`).
    Named {
        name: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
    },
    /// Piecewise-linear knots from (0,0) to (1,1).
    Table { table: Vec<(f64, f64)> },
}

impl DistortionSpec {
    /// Spec for a registry entry without a parameter.
    pub fn named(name: impl Into<String>) -> Self {
        Self::Named {
            name: name.into(),
            p: None,
        }
    }

    /// Spec for a registry entry with parameter `p`.
    pub fn named_with(name: impl Into<String>, p: f64) -> Self {
        Self::Named {
            name: name.into(),
            p: Some(p),
        }
    }

    /// Builds and validates the described distortion function.
    pub fn build(&self) -> Result<DistortionFunction> {
        let built = match self {
            Self::Named { name, p } => match (name.as_str(), p) {
                ("identity", None) => DistortionFunction::identity(),
                ("sqrt", None) => DistortionFunction::sqrt(),
                ("power", Some(p)) => DistortionFunction::power(*p)?,
                ("dual_power", Some(p)) => DistortionFunction::dual_power(*p)?,
                ("identity" | "sqrt", Some(_)) => {
                    return Err(Error::InvalidDistortion {
                        name: name.clone(),
                        reason: "does not take a parameter p".to_string(),
                    })
                }
                ("power" | "dual_power", None) => {
                    return Err(Error::InvalidDistortion {
                        name: name.clone(),
                        reason: "requires a parameter p".to_string(),
                    })
                }
                _ => {
                    return Err(Error::UnknownDistortion { name: name.clone() });
                }
            },
            Self::Table { table } => DistortionFunction::from_table(table.clone())?,
        };
        built.validate()?;
        Ok(built)
    }
}
