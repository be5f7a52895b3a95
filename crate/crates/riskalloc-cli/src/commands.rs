//! Implementations of the six subcommands.
//!
//! - each command resolves its config, runs the library, prints a human
//!   table to stdout, and optionally writes the JSON report
//! - compile-time shape warnings from the measures go to stderr
//! - the returned integer is the process exit code: 0 ok/satisfied,
//!   3 suitability violated, 4 vacuous (1 and 2 arise from errors)

use std::collections::BTreeMap;

use serde::Serialize;

use riskalloc::allocations::{
    analytic_gradient_distortion, analytic_gradient_distortion_exponential, check_full_allocation,
    gradient_allocation_fd, gradient_reward_allocation_distorted, individual_allocation,
    normalized_with_without, subgradient_allocation, subgradient_density, supergradient_density,
    with_without_allocation, AllocationKind, AllocationVector,
};
use riskalloc::batch;
use riskalloc::game::{
    check_allocation_properties, coalition_table, verify_def_4_1, Coalition, CoalitionRow,
    GameInstance, PropertyReport,
};
use riskalloc::measures::{
    check_reward_axioms, check_risk_axioms, AxiomId, AxiomReport, AxiomStatus, RewardMeasure,
    RewardMeasureSpec, RiskMeasure, RiskMeasureSpec,
};
use riskalloc::performance::{classify_portfolio, rorac, rrr, PortfolioClass, RatioValue};
use riskalloc::suitability::{
    check_thm33_conditions, check_thm36_conditions, fd_partials, verify_def_3_2, verify_def_3_5,
    verify_def_3_7, OverallVerdict, SuitabilityVerdict,
};
use riskalloc::{Outcome, PortfolioWeights, ScenarioSet};

use crate::args::{
    AllocateArgs, AxiomsArgs, Cli, Command, CommonArgs, GameArgs, MeasureArgs, PerformanceArgs,
    SuitabilityArgs,
};
use crate::config::{CliError, RunConfig};
use crate::report::{emit, fmt_ratio, print_verdict, verdict_exit, Report};
use crate::specs;

/// Dispatches the parsed command line and returns the exit code.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Measure(args) => cmd_measure(&args),
        Command::Allocate(args) => cmd_allocate(&args),
        Command::Performance(args) => cmd_performance(&args),
        Command::Suitability(args) => cmd_suitability(&args),
        Command::Game(args) => cmd_game(&args),
        Command::Axioms(args) => cmd_axioms(&args),
    }
}

/// Resolved config plus everything loaded from it.
struct Context {
    config: RunConfig,
    scn: ScenarioSet,
    risk_spec: RiskMeasureSpec,
    reward_spec: RewardMeasureSpec,
}

impl Context {
    /// Resolves, loads, parses, and surfaces shape warnings on stderr.
    fn build(common: &CommonArgs) -> Result<Self, CliError> {
        let config = RunConfig::resolve(common)?;
        let scn = config.load_scenarios()?;
        let risk_spec = config.risk_spec()?;
        let reward_spec = config.reward_spec()?;
        let rho = RiskMeasure::compile(&risk_spec)?;
        for warning in rho.warnings() {
            eprintln!("warning: {warning}");
        }
        let theta = RewardMeasure::compile(&reward_spec)?;
        for warning in theta.warnings() {
            eprintln!("warning: {warning}");
        }
        Ok(Self {
            config,
            scn,
            risk_spec,
            reward_spec,
        })
    }

    /// Aggregate outcome of the all-ones portfolio.
    fn portfolio_outcome(&self) -> Result<Outcome, CliError> {
        Ok(self.scn.aggregate(&PortfolioWeights::ones(self.scn.n()))?)
    }
}

/// Stable lowercase name of a portfolio class.
fn class_name(class: PortfolioClass) -> &'static str {
    match class {
        PortfolioClass::BothPositive => "both_positive",
        PortfolioClass::Arbitrage => "arbitrage",
        PortfolioClass::Irrational => "irrational",
        PortfolioClass::BothNegative => "both_negative",
    }
}

/// Stable lowercase name of an audited axiom.
fn axiom_name(axiom: AxiomId) -> &'static str {
    match axiom {
        AxiomId::Monotonicity => "monotonicity",
        AxiomId::Translation => "translation",
        AxiomId::Subadditivity => "subadditivity",
        AxiomId::Superadditivity => "superadditivity",
        AxiomId::PositiveHomogeneity => "positive_homogeneity",
        AxiomId::Convexity => "convexity",
        AxiomId::Concavity => "concavity",
    }
}

/// Formats a float list for the human tables.
fn fmt_values(values: &[f64]) -> String {
    let rendered: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
    format!("[{}]", rendered.join(", "))
}

/// Pairs a scenario density against every position.
fn pair_all(
    density: &riskalloc::allocations::ScenarioDensity,
    scn: &ScenarioSet,
) -> riskalloc::Result<Vec<f64>> {
    batch::try_map_indexed(scn.n(), |i| density.pair(&scn.position(i)?, scn))
}

// ---------------------------------------------------------------------------
// measure
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct PositionRow {
    label: String,
    theta: f64,
    rho: f64,
}

#[derive(Debug, Serialize)]
struct PortfolioBlock {
    theta: f64,
    rho: f64,
    ratio: RatioValue,
    class: PortfolioClass,
}

#[derive(Debug, Serialize)]
struct MeasureBody {
    positions: Vec<PositionRow>,
    portfolio: PortfolioBlock,
}

fn cmd_measure(args: &MeasureArgs) -> Result<i32, CliError> {
    let ctx = Context::build(&args.common)?;
    let scn = &ctx.scn;
    let theta = RewardMeasure::compile(&ctx.reward_spec)?;
    let rho = RiskMeasure::compile(&ctx.risk_spec)?;
    let x = ctx.portfolio_outcome()?;

    let mut positions = Vec::with_capacity(scn.n());
    for i in 0..scn.n() {
        let pos = scn.position(i)?;
        positions.push(PositionRow {
            label: scn.labels()[i].clone(),
            theta: theta.evaluate(&pos, scn)?,
            rho: rho.evaluate(&pos, scn)?,
        });
    }
    let theta_x = theta.evaluate(&x, scn)?;
    let rho_x = rho.evaluate(&x, scn)?;
    let ratio = rrr(theta_x, rho_x);
    let class = classify_portfolio(theta_x, rho_x);

    println!(
        "scenario set: {} ({} scenarios, {} positions)",
        ctx.config.scenarios.display(),
        scn.m(),
        scn.n()
    );
    println!();
    let reward_col = format!("{}(X_i)", ctx.config.reward);
    let risk_col = format!("{}(X_i)", ctx.config.risk);
    println!("{:<12} {:>24} {:>24}", "position", reward_col, risk_col);
    for row in &positions {
        println!("{:<12} {:>24.6} {:>24.6}", row.label, row.theta, row.rho);
    }
    println!();
    println!(
        "portfolio: theta(X) = {:.6}   rho(X) = {:.6}   rrr = {}   class = {}",
        theta_x,
        rho_x,
        fmt_ratio(&ratio),
        class_name(class)
    );

    let body = MeasureBody {
        positions,
        portfolio: PortfolioBlock {
            theta: theta_x,
            rho: rho_x,
            ratio,
            class,
        },
    };
    emit(
        &Report {
            command: "measure",
            config: &ctx.config,
            body,
        },
        args.common.json.as_deref(),
    )?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// allocate
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct AllocationRow {
    kind: AllocationKind,
    values: Vec<f64>,
    meta: BTreeMap<String, String>,
    total: f64,
    /// Which portfolio aggregate the residual compares against.
    reference: &'static str,
    residual: f64,
}

#[derive(Debug, Serialize)]
struct FdVsAnalytic {
    deltas: Vec<f64>,
    max_abs: f64,
}

#[derive(Debug, Serialize)]
struct AllocateBody {
    theta: f64,
    rho: f64,
    allocations: Vec<AllocationRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fd_vs_analytic: Option<FdVsAnalytic>,
}

/// Builds the allocation selected by a `--kind`/`--allocation` value.
fn build_allocation(kind: &str, ctx: &Context, x: &Outcome) -> Result<AllocationVector, CliError> {
    let scn = &ctx.scn;
    let spec = &ctx.risk_spec;
    let vector = match kind {
        "individual" => individual_allocation(spec, scn)?,
        "with_without" => with_without_allocation(spec, scn)?,
        "normalized_with_without" => normalized_with_without(spec, scn)?,
        "subgradient" => {
            let xi = subgradient_density(spec, x, scn)?;
            subgradient_allocation(&xi, scn)?
        }
        "gradient_fd" => gradient_allocation_fd(spec, scn, ctx.config.step)?,
        "gradient_analytic" => match spec {
            RiskMeasureSpec::Distortion { psi } => {
                analytic_gradient_distortion(&psi.build()?, scn)?
            }
            RiskMeasureSpec::DistortionExponential { psi, a } => {
                analytic_gradient_distortion_exponential(&psi.build()?, *a, scn)?
            }
            _ => {
                return Err(CliError::Spec {
                    what: "risk",
                    text: ctx.config.risk.clone(),
                    message: "gradient_analytic needs a distortion or \
                              distortion_exponential risk measure"
                        .to_string(),
                })
            }
        },
        "reward_gradient" => match &ctx.reward_spec {
            RewardMeasureSpec::Distorted { phi } => {
                gradient_reward_allocation_distorted(&phi.build()?, scn)?
            }
            _ => {
                let eta = supergradient_density(&ctx.reward_spec, x, scn)?;
                let values = pair_all(&eta, scn)?;
                let mut meta = BTreeMap::new();
                meta.insert("source".to_string(), "supergradient pairing".to_string());
                AllocationVector::new(values, AllocationKind::RewardGradient, meta)?
            }
        },
        other => {
            return Err(CliError::Flag {
                what: "allocation kind",
                text: other.to_string(),
                message: "unknown kind".to_string(),
            })
        }
    };
    Ok(vector)
}

fn cmd_allocate(args: &AllocateArgs) -> Result<i32, CliError> {
    let ctx = Context::build(&args.common)?;
    let scn = &ctx.scn;
    let x = ctx.portfolio_outcome()?;
    let theta_x = RewardMeasure::compile(&ctx.reward_spec)?.evaluate(&x, scn)?;
    let rho_x = RiskMeasure::compile(&ctx.risk_spec)?.evaluate(&x, scn)?;

    let mut rows = Vec::with_capacity(args.kind.len());
    for kind in &args.kind {
        let vector = build_allocation(kind, &ctx, &x)?;
        let reference = if vector.kind == AllocationKind::RewardGradient {
            "theta"
        } else {
            "rho"
        };
        let total = vector.total();
        let residual = match reference {
            "theta" => total - theta_x,
            _ => check_full_allocation(&vector, rho_x),
        };
        rows.push(AllocationRow {
            kind: vector.kind,
            values: vector.values,
            meta: vector.meta,
            total,
            reference,
            residual,
        });
    }

    let fd = rows
        .iter()
        .find(|r| r.kind == AllocationKind::GradientFd)
        .map(|r| r.values.clone());
    let analytic = rows
        .iter()
        .find(|r| r.kind == AllocationKind::GradientAnalytic)
        .map(|r| r.values.clone());
    let fd_vs_analytic = match (fd, analytic) {
        (Some(fd), Some(analytic)) => {
            let deltas: Vec<f64> = fd.iter().zip(analytic.iter()).map(|(a, b)| a - b).collect();
            let max_abs = deltas.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
            Some(FdVsAnalytic { deltas, max_abs })
        }
        _ => None,
    };

    println!(
        "theta(X) = {theta_x:.6}   rho(X) = {rho_x:.6}   positions: {}",
        scn.labels().join(", ")
    );
    println!();
    for row in &rows {
        println!(
            "{:<26} total = {:>14.6}   residual vs {} = {:+.3e}",
            kind_name(row.kind),
            row.total,
            row.reference,
            row.residual
        );
        println!("    values: {}", fmt_values(&row.values));
        if !row.meta.is_empty() {
            let meta: Vec<String> = row.meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("    meta:   {}", meta.join(", "));
        }
    }
    if let Some(block) = &fd_vs_analytic {
        println!();
        println!(
            "fd vs analytic: max |delta| = {:.3e}   deltas = {}",
            block.max_abs,
            fmt_values(&block.deltas)
        );
    }

    let body = AllocateBody {
        theta: theta_x,
        rho: rho_x,
        allocations: rows,
        fd_vs_analytic,
    };
    emit(
        &Report {
            command: "allocate",
            config: &ctx.config,
            body,
        },
        args.common.json.as_deref(),
    )?;
    Ok(0)
}

/// Stable lowercase name of an allocation kind.
fn kind_name(kind: AllocationKind) -> &'static str {
    match kind {
        AllocationKind::Individual => "individual",
        AllocationKind::WithWithout => "with_without",
        AllocationKind::NormalizedWithWithout => "normalized_with_without",
        AllocationKind::Subgradient => "subgradient",
        AllocationKind::GradientFd => "gradient_fd",
        AllocationKind::GradientAnalytic => "gradient_analytic",
        AllocationKind::MarginalContribution => "marginal_contribution",
        AllocationKind::RewardGradient => "reward_gradient",
    }
}

// ---------------------------------------------------------------------------
// performance
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct PerformanceBody {
    theta: f64,
    rho: f64,
    ratio: RatioValue,
    rorac: RatioValue,
    class: PortfolioClass,
}

fn cmd_performance(args: &PerformanceArgs) -> Result<i32, CliError> {
    let ctx = Context::build(&args.common)?;
    let scn = &ctx.scn;
    let x = ctx.portfolio_outcome()?;
    let theta_x = RewardMeasure::compile(&ctx.reward_spec)?.evaluate(&x, scn)?;
    let rho_x = RiskMeasure::compile(&ctx.risk_spec)?.evaluate(&x, scn)?;
    let ratio = rrr(theta_x, rho_x);
    let rorac_value = rorac(&ctx.risk_spec, scn, &PortfolioWeights::ones(scn.n()))?;
    let class = classify_portfolio(theta_x, rho_x);

    println!("theta(X) = {theta_x:.6}   rho(X) = {rho_x:.6}");
    println!(
        "rrr = {}   rorac = {}   class = {}",
        fmt_ratio(&ratio),
        fmt_ratio(&rorac_value),
        class_name(class)
    );

    let body = PerformanceBody {
        theta: theta_x,
        rho: rho_x,
        ratio,
        rorac: rorac_value,
        class,
    };
    emit(
        &Report {
            command: "performance",
            config: &ctx.config,
            body,
        },
        args.common.json.as_deref(),
    )?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// suitability
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct PerturbEcho {
    index: usize,
    delta: f64,
}

#[derive(Debug, Serialize)]
struct SuitabilityBody {
    definition: String,
    allocation: String,
    k: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    perturb: Option<PerturbEcho>,
    verdict: SuitabilityVerdict,
    overall: OverallVerdict,
}

fn cmd_suitability(args: &SuitabilityArgs) -> Result<i32, CliError> {
    let ctx = Context::build(&args.common)?;
    let scn = &ctx.scn;
    let x = ctx.portfolio_outcome()?;
    let grid = ctx.config.hgrid()?;
    let tol = ctx.config.tol;
    let u = PortfolioWeights::ones(scn.n());

    let mut k = build_allocation(&args.allocation, &ctx, &x)?.values;
    let perturb = match &args.perturb {
        Some(text) => {
            let (index, delta) = specs::parse_perturb(text)?;
            if index >= k.len() {
                return Err(CliError::Flag {
                    what: "perturbation",
                    text: text.clone(),
                    message: format!("index {index} out of range for {} positions", k.len()),
                });
            }
            k[index] += delta;
            Some(PerturbEcho { index, delta })
        }
        None => None,
    };

    let t: Option<Vec<f64>> = match args.definition.as_str() {
        "def_3_5" | "thm_3_6_conditions" => {
            let eta = supergradient_density(&ctx.reward_spec, &x, scn)?;
            Some(pair_all(&eta, scn)?)
        }
        "def_3_7" => {
            let theta = RewardMeasure::compile(&ctx.reward_spec)?;
            Some(fd_partials(
                |w: &PortfolioWeights| theta.evaluate(&scn.aggregate(w)?, scn),
                &u,
                ctx.config.step,
            )?)
        }
        _ => None,
    };

    let verdict = match args.definition.as_str() {
        "def_3_2" => verify_def_3_2(&k, &ctx.reward_spec, &ctx.risk_spec, scn, &grid, tol)?,
        "thm_3_3_conditions" => check_thm33_conditions(&k, &ctx.risk_spec, scn, &grid)?,
        "def_3_5" => verify_def_3_5(
            t.as_deref().expect("t computed for def_3_5"),
            &k,
            &ctx.reward_spec,
            &ctx.risk_spec,
            scn,
            &grid,
            tol,
        )?,
        "thm_3_6_conditions" => check_thm36_conditions(
            t.as_deref().expect("t computed for thm_3_6_conditions"),
            &k,
            &ctx.reward_spec,
            &ctx.risk_spec,
            scn,
            &grid,
        )?,
        "def_3_7" => {
            let theta = RewardMeasure::compile(&ctx.reward_spec)?;
            let rho = RiskMeasure::compile(&ctx.risk_spec)?;
            verify_def_3_7(
                t.as_deref().expect("t computed for def_3_7"),
                &k,
                |w: &PortfolioWeights| theta.evaluate(&scn.aggregate(w)?, scn),
                |w: &PortfolioWeights| rho.evaluate(&scn.aggregate(w)?, scn),
                &u,
                ctx.config.step,
            )?
        }
        other => {
            return Err(CliError::Flag {
                what: "definition",
                text: other.to_string(),
                message: "unknown definition tag".to_string(),
            })
        }
    };

    println!(
        "definition: {}   allocation: {}   tol: {:e}",
        args.definition, args.allocation, tol
    );
    println!("k = {}", fmt_values(&k));
    if let Some(t) = &t {
        println!("t = {}", fmt_values(t));
    }
    print_verdict(&verdict, scn.labels());

    let overall = verdict.overall();
    let body = SuitabilityBody {
        definition: args.definition.clone(),
        allocation: args.allocation.clone(),
        k,
        t,
        perturb,
        verdict,
        overall,
    };
    emit(
        &Report {
            command: "suitability",
            config: &ctx.config,
            body,
        },
        args.common.json.as_deref(),
    )?;
    Ok(verdict_exit(overall))
}

// ---------------------------------------------------------------------------
// game
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct CoalitionEcho {
    mask: u32,
    members: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct GameBody {
    n: usize,
    coalition: CoalitionEcho,
    table: Vec<CoalitionRow>,
    kappa: Vec<f64>,
    def_4_1: SuitabilityVerdict,
    overall: OverallVerdict,
    with_without: AllocationVector,
    properties: PropertyReport,
}

fn cmd_game(args: &GameArgs) -> Result<i32, CliError> {
    let ctx = Context::build(&args.common)?;
    let n = ctx.scn.n();
    let members = specs::parse_members(&args.coalition)?;
    let game = GameInstance::new(
        ctx.scn.clone(),
        ctx.reward_spec.clone(),
        ctx.risk_spec.clone(),
    )?;
    let s = Coalition::from_members(&members, n)?;
    let table = coalition_table(&game)?;

    let mut kappa = vec![0.0; n];
    for (i, slot) in kappa.iter_mut().enumerate() {
        if !s.contains(i) {
            *slot = game.marginal_contribution(s, i)?;
        }
    }
    let verdict = verify_def_4_1(&game, &kappa, s, ctx.config.tol)?;
    let ww = with_without_allocation(&ctx.risk_spec, game.scenarios())?;
    let properties = check_allocation_properties(&game, &ww.values)?;

    println!(
        "coalition S = {s}   positions: {}",
        game.scenarios().labels().join(", ")
    );
    println!();
    println!(
        "{:>5} {:<14} {:>14} {:>14} {:>14} {:>11}",
        "mask", "members", "theta", "cost", "gamma", "admissible"
    );
    for row in &table {
        let gamma = match row.gamma {
            Some(g) => format!("{g:.6}"),
            None => "-".to_string(),
        };
        let members = format!("{}", Coalition::from_mask(row.mask));
        println!(
            "{:>5} {:<14} {:>14.6} {:>14.6} {:>14} {:>11}",
            row.mask,
            members,
            row.theta,
            row.cost,
            gamma,
            if row.admissible { "yes" } else { "no" }
        );
    }
    println!();
    println!("marginal contributions into S: {}", fmt_values(&kappa));
    print_verdict(&verdict, game.scenarios().labels());
    println!();
    println!(
        "with-without properties: efficiency residual = {:.3e} ({}), {} symmetry pair(s), {} dummy position(s)",
        properties.efficiency.residual,
        if properties.efficiency.passes { "passes" } else { "fails" },
        properties.symmetry.len(),
        properties.dummy.len()
    );

    let overall = verdict.overall();
    let body = GameBody {
        n,
        coalition: CoalitionEcho {
            mask: s.mask(),
            members,
        },
        table,
        kappa,
        def_4_1: verdict,
        overall,
        with_without: ww,
        properties,
    };
    emit(
        &Report {
            command: "game",
            config: &ctx.config,
            body,
        },
        args.common.json.as_deref(),
    )?;
    Ok(verdict_exit(overall))
}

// ---------------------------------------------------------------------------
// axioms
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct AxiomsBody {
    trials: usize,
    risk: AxiomReport,
    reward: AxiomReport,
}

fn print_axiom_report(title: &str, report: &AxiomReport) {
    println!("{title} ({} trials, seed {})", report.trials, report.seed);
    for result in &report.results {
        let line = match &result.status {
            AxiomStatus::Passed => "passed".to_string(),
            AxiomStatus::NotApplicable => "not applicable".to_string(),
            AxiomStatus::Failed { witness } => format!(
                "failed at trial {} (lhs = {:.6}, rhs = {:.6})",
                witness.trial, witness.lhs, witness.rhs
            ),
        };
        println!("  {:<22} {line}", axiom_name(result.axiom));
    }
}

fn cmd_axioms(args: &AxiomsArgs) -> Result<i32, CliError> {
    let ctx = Context::build(&args.common)?;
    let risk_report = check_risk_axioms(&ctx.risk_spec, &ctx.scn, args.trials, ctx.config.seed)?;
    let reward_report =
        check_reward_axioms(&ctx.reward_spec, &ctx.scn, args.trials, ctx.config.seed)?;

    print_axiom_report(&format!("risk axioms: {}", ctx.config.risk), &risk_report);
    println!();
    print_axiom_report(
        &format!("reward axioms: {}", ctx.config.reward),
        &reward_report,
    );

    let body = AxiomsBody {
        trials: args.trials,
        risk: risk_report,
        reward: reward_report,
    };
    emit(
        &Report {
            command: "axioms",
            config: &ctx.config,
            body,
        },
        args.common.json.as_deref(),
    )?;
    Ok(0)
}
