use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use parkstate::scenario::{PenetrationRate, ScenarioConfig, ValidatedScenario};

mod commands;
mod run_dir;

use run_dir::{normalized_command, RunDir};

#[derive(Debug, Parser)]
#[command(
    name = "parkstate",
    version,
    about = "Truck parking occupancy simulation and state estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the scenario and write the event log and true occupancy.
    Simulate(SimulateArgs),
    /// Simulate, then sample app users and write the observed series.
    Observe(ObserveArgs),
    /// Run sampling and both estimators, write the label series.
    Estimate(EstimateArgs),
    /// Score an estimated label file against a true label file.
    Evaluate(EvaluateArgs),
    /// The full experiment: simulation, sampling, calibration, estimation and scoring.
    RunAll(EstimateArgs),
    /// Write the layered plot bundle of one penetration rate and method.
    ExportPlotData(PlotArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario JSON. The built-in default scenario is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Run directory. Must be empty or absent.
    #[arg(long, short = 'o')]
    out: PathBuf,
    /// Replace the contents of a non-empty run directory.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct ObserveArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    out: OutArgs,
    /// App penetration rate in (0, 1]; repeatable.
    #[arg(long = "penetration", short = 'p', required = true)]
    penetrations: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Naive,
    Meanday,
    Both,
}

#[derive(Debug, Args)]
pub struct TuningArgs {
    /// Trailing window of the naive estimator in seconds.
    #[arg(long, default_value_t = 1800)]
    window_s: u64,
    /// Hysteresis band of the estimated labels.
    #[arg(long, default_value_t = 0.02)]
    hysteresis: f64,
    /// Use the reference thresholds instead of grid-searching them.
    #[arg(long)]
    no_calibrate: bool,
    /// Grid-search the mean-day thresholds on mean-day curves.
    #[arg(long)]
    recalibrate_meanday: bool,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    out: OutArgs,
    /// App penetration rate in (0, 1]; repeatable.
    #[arg(long = "penetration", short = 'p', default_values_t = [0.1, 0.2])]
    penetrations: Vec<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Label file of the true states.
    #[arg(long)]
    truth: PathBuf,
    /// Label file of the estimated states.
    #[arg(long)]
    estimate: PathBuf,
    /// Optional run directory for the results document and table.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    #[arg(long)]
    overwrite: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long = "penetration", short = 'p', default_value_t = 0.1)]
    penetration: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Meanday)]
    method: MethodArg,
    /// Smooth the plotted observations with a centered window (offline view).
    #[arg(long)]
    centered: bool,
    #[command(flatten)]
    tuning: TuningArgs,
}

impl ScenarioArgs {
    fn load(&self) -> anyhow::Result<ValidatedScenario> {
        let config = match &self.config {
            Some(path) => ScenarioConfig::from_path(path)?,
            None => ScenarioConfig::default_scenario(),
        };
        let scenario = config.validate()?;
        Ok(match self.seed {
            Some(seed) => scenario.with_master_seed(seed),
            None => scenario,
        })
    }
}

impl MethodArg {
    fn methods(self) -> Vec<parkstate::experiment::Method> {
        use parkstate::experiment::Method;
        match self {
            MethodArg::Naive => vec![Method::Naive],
            MethodArg::Meanday => vec![Method::MeanDay],
            MethodArg::Both => vec![Method::Naive, Method::MeanDay],
        }
    }
}

fn penetration_rates(values: &[f64]) -> anyhow::Result<Vec<PenetrationRate>> {
    values
        .iter()
        .map(|p| PenetrationRate::new(*p).with_context(|| format!("--penetration {p}")))
        .collect()
}

/// Runs `body` inside a prepared run directory and always writes the
/// manifest once the directory is ours.
fn in_run_dir(
    out: &OutArgs,
    command: Vec<String>,
    body: impl FnOnce(&mut RunDir) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    let mut dir = RunDir::prepare(&out.out, out.overwrite, command)?;
    let outcome = body(&mut dir);
    dir.finish(outcome)
}

fn run(cli: Cli, command: Vec<String>) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(args) => in_run_dir(&args.out, command, |dir| {
            let scenario = args.scenario.load()?;
            commands::simulate(dir, &scenario)
        }),
        Command::Observe(args) => in_run_dir(&args.out, command, |dir| {
            let scenario = args.scenario.load()?;
            let rates = penetration_rates(&args.penetrations)?;
            commands::observe(dir, &scenario, &rates)
        }),
        Command::Estimate(args) => in_run_dir(&args.out, command, |dir| {
            let scenario = args.scenario.load()?;
            let rates = penetration_rates(&args.penetrations)?;
            let settings = commands::settings(&args.tuning);
            commands::estimate(
                dir,
                &scenario,
                &rates,
                &args.method.methods(),
                &settings,
                false,
            )
        }),
        Command::RunAll(args) => in_run_dir(&args.out, command, |dir| {
            let scenario = args.scenario.load()?;
            let rates = penetration_rates(&args.penetrations)?;
            let settings = commands::settings(&args.tuning);
            commands::estimate(
                dir,
                &scenario,
                &rates,
                &args.method.methods(),
                &settings,
                true,
            )
        }),
        Command::Evaluate(args) => {
            let json = args.format == Format::Json;
            match &args.out {
                Some(out) => {
                    let out = OutArgs {
                        out: out.clone(),
                        overwrite: args.overwrite,
                    };
                    in_run_dir(&out, command, |dir| {
                        commands::evaluate(Some(dir), &args.truth, &args.estimate, json)
                    })
                }
                None => commands::evaluate(None, &args.truth, &args.estimate, json),
            }
        }
        Command::ExportPlotData(args) => in_run_dir(&args.out, command, |dir| {
            let scenario = args.scenario.load()?;
            let rate = PenetrationRate::new(args.penetration)
                .with_context(|| format!("--penetration {}", args.penetration))?;
            let method = match args.method {
                MethodArg::Naive => parkstate::experiment::Method::Naive,
                MethodArg::Meanday => parkstate::experiment::Method::MeanDay,
                MethodArg::Both => anyhow::bail!("export-plot-data takes a single --method"),
            };
            let settings = commands::settings(&args.tuning);
            commands::export_plot(dir, &scenario, rate, method, &settings, args.centered)
        }),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&argv);
    match run(cli, normalized_command(&argv)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
