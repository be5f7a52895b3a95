//! Reward-risk ratios with explicit extended-real conventions and portfolio
//! classification.
//!
//! Core capabilities:
//! - `rrr`: the ratio with its convention cases — 0 when reward is
//!   nonpositive against positive risk (also for 0/0), +infinity when
//!   positive reward meets nonpositive risk, plain quotient otherwise.
//! - `rorac`: the ratio of expected portfolio outcome to portfolio risk.
//! - `classify_portfolio`: the four-way sign classification (both-positive,
//!   arbitrage, irrational, both-negative) that partitions every input pair.
//! - `RatioValue` serializes +infinity as the JSON string `"inf"` and keeps
//!   the convention case alongside the value.
//!
//! The lone uncovered boundary, negative reward against exactly zero risk,
//! falls through to the plain quotient and yields IEEE -infinity; callers
//! that care can detect it through `classify_portfolio` (both-negative).

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Result;
use crate::measures::{RiskMeasure, RiskMeasureSpec};
use crate::scenario::{expectation, PortfolioWeights, ScenarioSet};

/// Which branch of the ratio definition produced the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioCase {
    /// Nonpositive reward with positive risk, or 0/0.
    ZeroConvention,
    /// Positive reward with nonpositive risk.
    InfinityConvention,
    /// Ordinary quotient of the two values.
    PlainQuotient,
}

/// A reward-risk ratio together with the convention that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioValue {
    /// The ratio; +infinity under the infinity convention.
    #[serde(
        serialize_with = "serialize_extended",
        deserialize_with = "deserialize_extended"
    )]
    pub value: f64,
    /// Branch of the definition that applied.
    pub case: RatioCase,
}

pub(crate) fn serialize_extended<S: Serializer>(
    value: &f64,
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    if value.is_finite() {
        ser.serialize_f64(*value)
    } else if value.is_nan() {
        ser.serialize_str("nan")
    } else if *value > 0.0 {
        ser.serialize_str("inf")
    } else {
        ser.serialize_str("-inf")
    }
}

pub(crate) fn deserialize_extended<'de, D: Deserializer<'de>>(
    de: D,
) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Extended {
        Number(f64),
        Text(String),
    }
    match Extended::deserialize(de)? {
        Extended::Number(v) => Ok(v),
        Extended::Text(s) => match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => Err(D::Error::custom(format!(
                "expected a number, \"inf\", \"-inf\", or \"nan\", got {other:?}"
            ))),
        },
    }
}

/// Sign classification of a (reward, risk) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortfolioClass {
    /// Positive reward, positive risk: the ordinary trade-off regime.
    BothPositive,
    /// Positive reward with nonpositive risk.
    Arbitrage,
    /// Nonpositive reward with positive risk.
    Irrational,
    /// Nonpositive reward, nonpositive risk.
    BothNegative,
}

/// Reward-risk ratio with the extended-real conventions: 0 when
/// `theta <= 0 < rho` and for 0/0, +infinity when `theta > 0 >= rho`, the
/// plain quotient otherwise. Total over all finite inputs.
pub fn rrr(theta_val: f64, rho_val: f64) -> RatioValue {
    if theta_val > 0.0 && rho_val <= 0.0 {
        return RatioValue {
            value: f64::INFINITY,
            case: RatioCase::InfinityConvention,
        };
    }
    if theta_val <= 0.0 && rho_val > 0.0 {
        return RatioValue {
            value: 0.0,
            case: RatioCase::ZeroConvention,
        };
    }
    if theta_val == 0.0 && rho_val == 0.0 {
        return RatioValue {
            value: 0.0,
            case: RatioCase::ZeroConvention,
        };
    }
    let q = theta_val / rho_val;
    RatioValue {
        // Normalize -0.0 so reports serialize one canonical zero.
        value: if q == 0.0 { 0.0 } else { q },
        case: RatioCase::PlainQuotient,
    }
}

/// Return on risk-adjusted capital: `rrr` of the expected portfolio outcome
/// against its risk.
pub fn rorac(
    spec: &RiskMeasureSpec,
    scn: &ScenarioSet,
    u: &PortfolioWeights,
) -> Result<RatioValue> {
    let measure = RiskMeasure::compile(spec)?;
    let x = scn.aggregate(u)?;
    let theta_val = expectation(&x, scn)?;
    let rho_val = measure.evaluate(&x, scn)?;
    Ok(rrr(theta_val, rho_val))
}

/// Four-way sign classification; exactly one class for every pair.
pub fn classify_portfolio(theta_val: f64, rho_val: f64) -> PortfolioClass {
    match (theta_val > 0.0, rho_val > 0.0) {
        (true, true) => PortfolioClass::BothPositive,
        (true, false) => PortfolioClass::Arbitrage,
        (false, true) => PortfolioClass::Irrational,
        (false, false) => PortfolioClass::BothNegative,
    }
}
