//! Command-line surface of the `riskalloc` binary.
//!
//! - six subcommands: `measure`, `allocate`, `performance`, `suitability`,
//!   `game`, `axioms`
//! - shared flags mirror the JSON config file; flags win over file values
//! - restricted string flags (`--kind`, `--definition`) are validated by the
//!   parser itself, so bad values are usage errors rather than run errors

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Scenario-space risk measures, capital allocations, and suitability checks.
#[derive(Debug, Parser)]
#[command(name = "riskalloc", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// One analysis per subcommand; all of them share the common flags.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the reward and risk measures on the book and each position.
    Measure(MeasureArgs),
    /// Compute capital allocations and their full-allocation residuals.
    Allocate(AllocateArgs),
    /// Reward-risk ratio, RORAC, and the portfolio classification.
    Performance(PerformanceArgs),
    /// Verify a suitability criterion for a chosen allocation.
    Suitability(SuitabilityArgs),
    /// Coalition table, ratio game verdicts, and allocation properties.
    Game(GameArgs),
    /// Audit the configured measures against their defining axioms.
    Axioms(AxiomsArgs),
}

/// Flags shared by every subcommand; each mirrors a config-file field.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario CSV file (`prob` column, then one column per position).
    #[arg(long, value_name = "PATH")]
    pub scenarios: Option<PathBuf>,

    /// Risk measure spec, e.g. `es:0.25`, `entropic:0.5`, `var:0.25`,
    /// `distortion:sqrt`, `distortion_exponential:sqrt:0.4`, or inline JSON.
    #[arg(long, visible_alias = "measure", value_name = "SPEC")]
    pub risk: Option<String>,

    /// Reward measure spec, e.g. `expectation`, `distorted:power:2`,
    /// or inline JSON.
    #[arg(long, value_name = "SPEC")]
    pub reward: Option<String>,

    /// Comma-separated decreasing step grid, e.g. `1e-1,1e-2,1e-3`.
    #[arg(long, value_name = "CSV-LIST")]
    pub grid: Option<String>,

    /// Centered finite-difference step.
    #[arg(long, value_name = "FLOAT")]
    pub step: Option<f64>,

    /// Verification tolerance.
    #[arg(long, value_name = "FLOAT")]
    pub tol: Option<f64>,

    /// Seed for randomized audits.
    #[arg(long, value_name = "INT")]
    pub seed: Option<u64>,

    /// Write the JSON report to this file.
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,

    /// JSON config file; a previous `--json` report is also accepted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

/// `measure` takes only the shared flags.
#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

/// `performance` takes only the shared flags.
#[derive(Debug, Args)]
pub struct PerformanceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

/// `allocate` adds the repeatable allocation principle selector.
#[derive(Debug, Args)]
pub struct AllocateArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Allocation principle; repeat the flag to compute several.
    #[arg(
        long,
        value_name = "KIND",
        default_values = ["subgradient"],
        value_parser = [
            "individual",
            "with_without",
            "normalized_with_without",
            "subgradient",
            "gradient_fd",
            "gradient_analytic",
            "reward_gradient",
        ]
    )]
    pub kind: Vec<String>,
}

/// `suitability` selects the criterion, the capital vector, and an optional
/// perturbation used to demonstrate violations.
#[derive(Debug, Args)]
pub struct SuitabilityArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Criterion to verify.
    #[arg(
        long,
        value_name = "TAG",
        default_value = "def_3_2",
        value_parser = [
            "def_3_2",
            "def_3_5",
            "def_3_7",
            "thm_3_3_conditions",
            "thm_3_6_conditions",
        ]
    )]
    pub definition: String,

    /// Where the capital vector comes from.
    #[arg(
        long,
        value_name = "KIND",
        default_value = "subgradient",
        value_parser = [
            "individual",
            "with_without",
            "normalized_with_without",
            "subgradient",
            "gradient_fd",
        ]
    )]
    pub allocation: String,

    /// Add DELTA to capital component INDEX before verifying.
    #[arg(long, value_name = "INDEX:DELTA")]
    pub perturb: Option<String>,
}

/// `game` selects the fixed coalition the verdicts are taken from.
#[derive(Debug, Args)]
pub struct GameArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Comma-separated member indices of the fixed coalition S.
    #[arg(long, value_name = "LIST", default_value = "0")]
    pub coalition: String,
}

/// `axioms` sets the trial count for the randomized audit.
#[derive(Debug, Args)]
pub struct AxiomsArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Randomized trials per axiom.
    #[arg(long, value_name = "INT", default_value_t = 200)]
    pub trials: usize,
}
