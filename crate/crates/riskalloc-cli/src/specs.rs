//! Compact spec-string grammar for measures and grids.
//!
//! - risk: `es:A`, `entropic:A`, `var:A`, `distortion:NAME[:P]`,
//!   `distortion_exponential:NAME[:P]:A`, or inline JSON starting with `{`
//! - reward: `expectation`, `distorted:NAME[:P]`, or inline JSON (the robust
//!   family needs explicit densities, so it is JSON-only)
//! - grids: comma-separated positive floats in strictly decreasing order
//!
//! Compact specs are validated eagerly, so a typo fails at resolution time
//! rather than halfway through a run.

use riskalloc::distortion::DistortionSpec;
use riskalloc::measures::{RewardMeasure, RewardMeasureSpec, RiskMeasure, RiskMeasureSpec};

use crate::config::CliError;

fn spec_err(what: &'static str, text: &str, message: impl ToString) -> CliError {
    CliError::Spec {
        what,
        text: text.to_string(),
        message: message.to_string(),
    }
}

fn parse_float(what: &'static str, text: &str, field: &str) -> Result<f64, CliError> {
    field
        .parse::<f64>()
        .map_err(|_| spec_err(what, text, format!("cannot parse {field:?} as a number")))
}

/// Builds a distortion spec from `NAME` or `NAME:P` segments.
fn parse_distortion(
    what: &'static str,
    text: &str,
    rest: &[&str],
) -> Result<DistortionSpec, CliError> {
    let spec = match rest {
        [name] => DistortionSpec::named(*name),
        [name, p] => DistortionSpec::named_with(*name, parse_float(what, text, p)?),
        _ => {
            return Err(spec_err(
                what,
                text,
                "expected NAME or NAME:P after the family",
            ))
        }
    };
    spec.build().map_err(|e| spec_err(what, text, e))?;
    Ok(spec)
}

/// Parses a risk spec string and validates that it compiles.
pub fn parse_risk(text: &str) -> Result<RiskMeasureSpec, CliError> {
    let what = "risk";
    let trimmed = text.trim();
    let spec = if trimmed.starts_with('{') {
        serde_json::from_str::<RiskMeasureSpec>(trimmed).map_err(|e| spec_err(what, text, e))?
    } else {
        let parts: Vec<&str> = trimmed.split(':').collect();
        match parts.as_slice() {
            ["es", alpha] => RiskMeasureSpec::Es {
                alpha: parse_float(what, text, alpha)?,
            },
            ["entropic", a] => RiskMeasureSpec::Entropic {
                a: parse_float(what, text, a)?,
            },
            ["var", alpha] => RiskMeasureSpec::Var {
                alpha: parse_float(what, text, alpha)?,
            },
            ["distortion", rest @ ..] => RiskMeasureSpec::Distortion {
                psi: parse_distortion(what, text, rest)?,
            },
            ["distortion_exponential", rest @ ..] if rest.len() >= 2 => {
                let (psi_parts, a_part) = rest.split_at(rest.len() - 1);
                RiskMeasureSpec::DistortionExponential {
                    psi: parse_distortion(what, text, psi_parts)?,
                    a: parse_float(what, text, a_part[0])?,
                }
            }
            _ => {
                return Err(spec_err(
                    what,
                    text,
                    "expected es:A, entropic:A, var:A, distortion:NAME[:P], \
                     distortion_exponential:NAME[:P]:A, or inline JSON",
                ))
            }
        }
    };
    RiskMeasure::compile(&spec).map_err(|e| spec_err(what, text, e))?;
    Ok(spec)
}

/// Parses a reward spec string and validates that it compiles.
pub fn parse_reward(text: &str) -> Result<RewardMeasureSpec, CliError> {
    let what = "reward";
    let trimmed = text.trim();
    let spec = if trimmed.starts_with('{') {
        serde_json::from_str::<RewardMeasureSpec>(trimmed).map_err(|e| spec_err(what, text, e))?
    } else {
        let parts: Vec<&str> = trimmed.split(':').collect();
        match parts.as_slice() {
            ["expectation"] => RewardMeasureSpec::Expectation,
            ["distorted", rest @ ..] => RewardMeasureSpec::Distorted {
                phi: parse_distortion(what, text, rest)?,
            },
            ["robust", ..] => {
                return Err(spec_err(
                    what,
                    text,
                    "robust rewards need explicit densities; pass inline JSON",
                ))
            }
            _ => {
                return Err(spec_err(
                    what,
                    text,
                    "expected expectation, distorted:NAME[:P], or inline JSON",
                ))
            }
        }
    };
    RewardMeasure::compile(&spec).map_err(|e| spec_err(what, text, e))?;
    Ok(spec)
}

/// Parses a comma-separated step grid; ordering is validated later by the
/// grid type itself.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|field| {
            field.trim().parse::<f64>().map_err(|_| CliError::Flag {
                what: "grid",
                text: text.to_string(),
                message: format!("cannot parse {:?} as a number", field.trim()),
            })
        })
        .collect()
}

/// Parses `INDEX:DELTA` for the suitability perturbation flag.
pub fn parse_perturb(text: &str) -> Result<(usize, f64), CliError> {
    let flag_err = |message: String| CliError::Flag {
        what: "perturbation",
        text: text.to_string(),
        message,
    };
    let (index, delta) = text
        .split_once(':')
        .ok_or_else(|| flag_err("expected INDEX:DELTA".to_string()))?;
    let index = index
        .trim()
        .parse::<usize>()
        .map_err(|_| flag_err(format!("cannot parse {index:?} as an index")))?;
    let delta = delta
        .trim()
        .parse::<f64>()
        .map_err(|_| flag_err(format!("cannot parse {delta:?} as a number")))?;
    Ok((index, delta))
}

/// Parses the comma-separated coalition member list; an empty string is the
/// empty coalition.
pub fn parse_members(text: &str) -> Result<Vec<usize>, CliError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|field| {
            field.trim().parse::<usize>().map_err(|_| CliError::Flag {
                what: "coalition",
                text: text.to_string(),
                message: format!("cannot parse {:?} as an index", field.trim()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_risk_specs_parse() {
        assert!(matches!(
            parse_risk("es:0.25").unwrap(),
            RiskMeasureSpec::Es { alpha } if alpha == 0.25
        ));
        assert!(matches!(
            parse_risk("entropic:0.5").unwrap(),
            RiskMeasureSpec::Entropic { a } if a == 0.5
        ));
        assert!(matches!(
            parse_risk("var:0.1").unwrap(),
            RiskMeasureSpec::Var { alpha } if alpha == 0.1
        ));
        assert!(matches!(
            parse_risk("distortion:sqrt").unwrap(),
            RiskMeasureSpec::Distortion { .. }
        ));
        assert!(matches!(
            parse_risk("distortion:power:2").unwrap(),
            RiskMeasureSpec::Distortion { .. }
        ));
        assert!(matches!(
            parse_risk("distortion_exponential:sqrt:0.4").unwrap(),
            RiskMeasureSpec::DistortionExponential { a, .. } if a == 0.4
        ));
        assert!(matches!(
            parse_risk("distortion_exponential:dual_power:3:0.4").unwrap(),
            RiskMeasureSpec::DistortionExponential { a, .. } if a == 0.4
        ));
    }

    #[test]
    fn inline_json_risk_specs_parse() {
        let spec = parse_risk(r#"{"kind": "es", "alpha": 0.5}"#).unwrap();
        assert!(matches!(spec, RiskMeasureSpec::Es { alpha } if alpha == 0.5));
    }

    #[test]
    fn invalid_risk_specs_are_rejected_eagerly() {
        assert!(parse_risk("es").is_err());
        assert!(parse_risk("es:nope").is_err());
        assert!(parse_risk("es:1.5").is_err());
        assert!(parse_risk("distortion:unknown_name").is_err());
        assert!(parse_risk("frobnicate:1").is_err());
    }

    #[test]
    fn reward_specs_parse_and_reject() {
        assert!(matches!(
            parse_reward("expectation").unwrap(),
            RewardMeasureSpec::Expectation
        ));
        assert!(matches!(
            parse_reward("distorted:power:2").unwrap(),
            RewardMeasureSpec::Distorted { .. }
        ));
        let err = parse_reward("robust:2").unwrap_err();
        assert!(err.to_string().contains("inline JSON"));
    }

    #[test]
    fn grids_members_and_perturbations_parse() {
        assert_eq!(parse_grid("1e-1, 1e-2").unwrap(), vec![0.1, 0.01]);
        assert!(parse_grid("1e-1,x").is_err());
        assert_eq!(parse_members("0, 2").unwrap(), vec![0, 2]);
        assert_eq!(parse_members("").unwrap(), Vec::<usize>::new());
        assert_eq!(parse_perturb("1:0.5").unwrap(), (1, 0.5));
        assert!(parse_perturb("1").is_err());
    }
}
