//! Report envelope and rendering helpers.
//!
//! - every report embeds the resolved config, so the JSON file is both the
//!   machine-readable result and a rerunnable config
//! - JSON is pretty-printed with a trailing newline and no volatile fields,
//!   which makes reruns under the same config byte-identical
//! - human tables go to stdout and are presentation only; JSON is the
//!   contract surface

use std::fs;
use std::path::Path;

use serde::Serialize;

use riskalloc::performance::RatioValue;
use riskalloc::suitability::{OverallVerdict, PositionOutcome, SuitabilityVerdict};

use crate::config::{CliError, RunConfig};

/// Envelope written to `--json`: command name, config echo, command body.
#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    /// Subcommand that produced the report.
    pub command: &'static str,
    /// Resolved configuration the run used.
    pub config: &'a RunConfig,
    /// Command-specific payload.
    #[serde(flatten)]
    pub body: T,
}

/// Serializes the report and writes it if an output path was given.
pub fn emit<T: Serialize>(report: &Report<'_, T>, json: Option<&Path>) -> Result<(), CliError> {
    if let Some(path) = json {
        let mut text = serde_json::to_string_pretty(report)?;
        text.push('\n');
        fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

/// Renders a ratio for humans, spelling out the infinite conventions.
pub fn fmt_ratio(ratio: &RatioValue) -> String {
    if ratio.value.is_nan() {
        "nan".to_string()
    } else if ratio.value == f64::INFINITY {
        "inf".to_string()
    } else if ratio.value == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{:.6}", ratio.value)
    }
}

/// Renders one suitability verdict as per-position lines plus a summary.
pub fn print_verdict(verdict: &SuitabilityVerdict, labels: &[String]) {
    for report in &verdict.positions {
        let label = labels
            .get(report.position)
            .map(String::as_str)
            .unwrap_or("?");
        match &report.outcome {
            PositionOutcome::Satisfied => {
                println!("position {} ({label}): satisfied", report.position);
            }
            PositionOutcome::Violated { witness } => {
                println!(
                    "position {} ({label}): violated at h = {:e}: {} (lhs = {:.9}, rhs = {:.9})",
                    report.position, witness.h, witness.inequality, witness.lhs, witness.rhs
                );
            }
            PositionOutcome::Vacuous { note } => {
                println!("position {} ({label}): vacuous ({note})", report.position);
            }
        }
    }
    println!("overall: {}", verdict_name(verdict.overall()));
}

/// Stable lowercase name of an overall verdict.
pub fn verdict_name(overall: OverallVerdict) -> &'static str {
    match overall {
        OverallVerdict::Satisfied => "satisfied",
        OverallVerdict::Violated => "violated",
        OverallVerdict::Vacuous => "vacuous",
    }
}

/// Exit code contract: satisfied 0, violated 3, vacuous 4.
pub fn verdict_exit(overall: OverallVerdict) -> i32 {
    match overall {
        OverallVerdict::Satisfied => 0,
        OverallVerdict::Violated => 3,
        OverallVerdict::Vacuous => 4,
    }
}
