//! `mplsim` — generate fractal traffic, analyze it, evaluate the routing
//! cost rule, and run or compare simulations.
//!
//! Exit status contract: 0 success (and QoS compliant for `run`), 1 input
//! error, 2 QoS violation. All numeric stdout uses fixed 6-decimal
//! formatting and every subcommand is deterministic given its flags and
//! input files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mplsim_core::fractal::{estimate, EstimatorConfig, HurstMethod};
use mplsim_core::routing::recalc_cost;
use mplsim_core::scenario::{load_scenario_file, Scenario};
use mplsim_core::sim::{
    check_constraints, compare_modes, run_with, ComplianceReport, SimMetrics, SimMode, SlotRow,
};
use mplsim_core::trace::TraceSeries;
use mplsim_core::traffic::{
    gen_cascade, gen_fgn, gen_onoff, CascadeParams, FgnParams, OnOffParams,
};

#[derive(Parser)]
#[command(
    name = "mplsim",
    version,
    about = "Deterministic MPLS simulator with fractal-traffic-aware routing costs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic traffic trace file
    Generate {
        #[command(subcommand)]
        kind: GenerateCmd,
    },
    /// Print fractal estimates over consecutive windows of a trace, one JSON
    /// object per window
    Analyze(AnalyzeArgs),
    /// Evaluate the cost-recalculation rule once and print the branch taken
    Cost(CostArgs),
    /// Run one scenario; exit 2 when any channel violates its QoS bounds
    Run(RunArgs),
    /// Run both cost modes on one scenario and write the comparison
    Compare(CompareArgs),
}

#[derive(Args)]
struct CommonGen {
    #[arg(long)]
    seed: u64,
    /// Seconds per slot recorded in the trace header.
    #[arg(long, default_value_t = 1.0)]
    slot_width: f64,
    /// Output trace file.
    #[arg(long, short = 'o', visible_alias = "trace-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum GenerateCmd {
    /// Fractional Gaussian noise with the exact target autocorrelation
    Fgn {
        #[arg(long)]
        hurst: f64,
        #[arg(long)]
        mean: f64,
        #[arg(long)]
        std: f64,
        /// Trace length; must be a power of two.
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        common: CommonGen,
    },
    /// Superposed on-off sources with Pareto sojourns
    Onoff {
        #[arg(long)]
        sources: usize,
        /// Pareto tail index, in (1, 2).
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        min_sojourn: u64,
        #[arg(long)]
        peak_rate: f64,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        common: CommonGen,
    },
    /// Conservative binomial cascade (length 2^depth)
    Cascade {
        #[arg(long)]
        depth: u32,
        /// Mass fraction of one half, in (0, 0.5].
        #[arg(long)]
        p: f64,
        #[arg(long)]
        total_mass: f64,
        #[command(flatten)]
        common: CommonGen,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, visible_alias = "trace-in")]
    trace: PathBuf,
    /// Window length in slots.
    #[arg(long, default_value_t = 4096)]
    window: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Rs,
    Aggvar,
    Both,
}

impl From<MethodArg> for HurstMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Rs => HurstMethod::RescaledRange,
            MethodArg::Aggvar => HurstMethod::AggregatedVariance,
            MethodArg::Both => HurstMethod::AverageOfBoth,
        }
    }
}

#[derive(Args)]
struct CostArgs {
    /// Current path cost (sum of link costs).
    #[arg(long)]
    cost: f64,
    #[arg(long)]
    hurst: f64,
    /// Coefficient of variation of the window.
    #[arg(long)]
    sv: f64,
    /// Administrator update constant.
    #[arg(long)]
    c0: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Static,
    Fractal,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario's cost mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Output directory for summary.json and timeseries.csv.
    #[arg(long, short = 'o')]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, short = 'o')]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Generate { kind } => cmd_generate(kind),
        Cmd::Analyze(args) => cmd_analyze(args),
        Cmd::Cost(args) => cmd_cost(args),
        Cmd::Run(args) => cmd_run(args),
        Cmd::Compare(args) => cmd_compare(args),
    }
}

fn cmd_generate(kind: GenerateCmd) -> Result<ExitCode> {
    let (trace, common) = match kind {
        GenerateCmd::Fgn {
            hurst,
            mean,
            std,
            n,
            common,
        } => (
            gen_fgn(&FgnParams {
                hurst,
                mean,
                std,
                n,
                seed: common.seed,
            })?,
            common,
        ),
        GenerateCmd::Onoff {
            sources,
            alpha,
            min_sojourn,
            peak_rate,
            n,
            common,
        } => (
            gen_onoff(&OnOffParams {
                n_sources: sources,
                pareto_shape: alpha,
                min_sojourn,
                peak_rate,
                n,
                seed: common.seed,
            })?,
            common,
        ),
        GenerateCmd::Cascade {
            depth,
            p,
            total_mass,
            common,
        } => (
            gen_cascade(&CascadeParams {
                depth,
                multiplier_low: p,
                total_mass,
                seed: common.seed,
            })?,
            common,
        ),
    };
    let trace = TraceSeries::new(common.slot_width, trace.values().to_vec())?;
    trace
        .write_file(&common.out)
        .with_context(|| format!("writing {}", common.out.display()))?;
    let mean = trace.mean();
    let std = trace.std_pop();
    let sv = if mean > 0.0 { std / mean } else { 0.0 };
    println!("n={} mean={mean:.6} std={std:.6} s_v={sv:.6}", trace.len());
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct WindowRecord {
    window_start: usize,
    #[serde(rename = "H")]
    hurst: f64,
    #[serde(rename = "S_v")]
    coeff_var: f64,
    #[serde(rename = "S")]
    std_dev: f64,
    mean: f64,
    degenerate: bool,
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<ExitCode> {
    if args.window < 64 {
        bail!("window must be at least 64 slots");
    }
    let trace = TraceSeries::read_file(&args.trace)
        .with_context(|| format!("reading {}", args.trace.display()))?;
    let cfg = EstimatorConfig {
        method: args.method.into(),
        ..EstimatorConfig::default()
    };
    // stop quietly if the reader goes away (e.g. piped into head)
    let mut out = std::io::stdout().lock();
    let mut emit = |start: usize, values: &[f64]| -> Result<bool> {
        let window = TraceSeries::new(trace.slot_width(), values.to_vec())?;
        let e = estimate(&window, &cfg);
        let record = WindowRecord {
            window_start: start,
            hurst: e.hurst,
            coeff_var: e.coeff_var,
            std_dev: e.std_dev,
            mean: e.mean,
            degenerate: e.degenerate,
        };
        match writeln!(out, "{}", serde_json::to_string(&record)?) {
            Ok(()) => Ok(true),
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(false),
            Err(e) => Err(e.into()),
        }
    };
    if trace.len() < args.window {
        eprintln!(
            "warning: trace ({} slots) is shorter than the window ({}); emitting one degenerate record",
            trace.len(),
            args.window
        );
        emit(0, trace.values())?;
        return Ok(ExitCode::SUCCESS);
    }
    let mut start = 0;
    while start + args.window <= trace.len() {
        if !emit(start, &trace.values()[start..start + args.window])? {
            break;
        }
        start += args.window;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_cost(args: CostArgs) -> Result<ExitCode> {
    if !(args.cost.is_finite() && args.cost > 0.0) {
        bail!("--cost must be positive");
    }
    if !(args.c0.is_finite() && args.c0 > 0.0) {
        bail!("--c0 must be positive");
    }
    if !(args.hurst.is_finite() && (0.0..=1.0).contains(&args.hurst)) {
        bail!("--hurst must be in [0, 1]");
    }
    if !(args.sv.is_finite() && args.sv >= 0.0) {
        bail!("--sv must be nonnegative");
    }
    let hurst = args.hurst.clamp(0.01, 0.99);
    let (new_cost, branch) = recalc_cost(args.cost, hurst, args.sv, args.c0);
    println!("branch {branch}");
    println!("C_new {new_cost:.6}");
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RunSummaryFile<'a> {
    metrics: &'a SimMetrics,
    compliance: &'a ComplianceReport,
}

fn write_run_outputs(
    out_dir: &Path,
    prefix: &str,
    metrics: &SimMetrics,
    compliance: &ComplianceReport,
) -> Result<()> {
    let summary = serde_json::to_string_pretty(&RunSummaryFile {
        metrics,
        compliance,
    })?;
    fs::write(out_dir.join(format!("{prefix}summary.json")), summary)?;
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let mut scenario: Scenario = load_scenario_file(&args.scenario)?;
    if let Some(mode) = args.mode {
        scenario.config.mode = match mode {
            ModeArg::Static => SimMode::StaticCosts,
            ModeArg::Fractal => SimMode::FractalCosts,
        };
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let csv = fs::File::create(args.out.join("timeseries.csv"))?;
    let mut csv = BufWriter::new(csv);
    writeln!(csv, "slot,node,class,backlog,dropped,served")?;
    let mut sink_error = None;
    let metrics = {
        let mut sink = |row: &SlotRow<'_>| {
            if sink_error.is_none() {
                if let Err(e) = writeln!(
                    csv,
                    "{},{},{},{:.6},{:.6},{:.6}",
                    row.slot, row.node, row.class, row.backlog, row.dropped, row.served
                ) {
                    sink_error = Some(e);
                }
            }
        };
        run_with(&scenario, Some(&mut sink))?
    };
    if let Some(e) = sink_error {
        return Err(e).context("writing timeseries.csv");
    }
    csv.flush()?;
    let compliance = check_constraints(&metrics, &scenario.classes);
    write_run_outputs(&args.out, "", &metrics, &compliance)?;
    println!(
        "slots={} injected={:.6} delivered={:.6} dropped={:.6} loss_fraction={:.6} compliant={}",
        metrics.total_slots,
        metrics.totals.injected,
        metrics.totals.delivered,
        metrics.totals.dropped(),
        metrics.totals.loss_fraction(),
        compliance.compliant
    );
    if compliance.compliant {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn cmd_compare(args: CompareArgs) -> Result<ExitCode> {
    let scenario = load_scenario_file(&args.scenario)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let report = compare_modes(&scenario)?;
    let static_compliance = check_constraints(&report.static_metrics, &scenario.classes);
    let fractal_compliance = check_constraints(&report.fractal_metrics, &scenario.classes);
    write_run_outputs(
        &args.out,
        "static_",
        &report.static_metrics,
        &static_compliance,
    )?;
    write_run_outputs(
        &args.out,
        "fractal_",
        &report.fractal_metrics,
        &fractal_compliance,
    )?;
    fs::write(
        args.out.join("comparison.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    println!(
        "static_loss={:.6} fractal_loss={:.6} loss_delta={:.6} divergence_slot={}",
        report.static_run.total_loss_fraction,
        report.fractal_run.total_loss_fraction,
        report.loss_delta,
        report
            .first_divergence_slot
            .map_or_else(|| "none".to_string(), |s| s.to_string())
    );
    Ok(ExitCode::SUCCESS)
}
