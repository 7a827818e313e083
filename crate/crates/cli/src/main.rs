use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tradediff_cli::commands::{
    self, AnalyzeArgs, CalibrateArgs, CalibrateBetaArgs, ScenarioRunArgs, SimulateArgs,
};
use tradediff_cli::CliError;
use tradediff_core::equilibrium::SolveOptions;
use tradediff_core::io::RunConfig;
use tradediff_core::scenario::Bloc;

/// Recursive-dynamic multi-region trade simulator with trade-mediated
/// technology diffusion.
#[derive(Parser)]
#[command(name = "tradediff", version, about)]
struct Cli {
    /// Run-configuration JSON supplying solver defaults and output paths.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (overrides TRADEDIFF_THREADS and the config file).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Increase log verbosity (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy, Default)]
struct SolverFlags {
    /// Convergence tolerance on relative excess demand.
    #[arg(long)]
    tol: Option<f64>,
    /// Outer iteration cap of the solver.
    #[arg(long)]
    max_iter: Option<usize>,
}

impl SolverFlags {
    fn resolve(&self, config: &RunConfig) -> Result<SolveOptions, CliError> {
        let mut opts = config.solver.unwrap_or_default();
        if let Some(tol) = self.tol {
            opts.tol = tol;
        }
        if let Some(max_iter) = self.max_iter {
            opts.max_iter = max_iter;
        }
        if !(opts.tol > 0.0) {
            return Err(CliError::Usage(format!(
                "tolerance {} must be positive",
                opts.tol
            )));
        }
        Ok(opts)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check every invariant of an economy (and optionally a flows snapshot).
    Validate {
        #[arg(long)]
        economy: PathBuf,
        #[arg(long)]
        flows: Option<PathBuf>,
    },
    /// Build a model-ready economy from a base-year flows directory.
    Calibrate {
        #[arg(long)]
        flows: PathBuf,
        /// Behavioral parameters (elasticities, diffusion settings) JSON.
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Anchored labor path CSV (region,year,value), geometrically
        /// interpolated.
        #[arg(long)]
        labor: Option<PathBuf>,
        /// Anchored population path CSV for per-capita series.
        #[arg(long)]
        population: Option<PathBuf>,
        /// Labor-productivity table; writes a productivity-proportional
        /// initial-productivity grid next to the economy.
        #[arg(long)]
        productivity: Option<PathBuf>,
        #[arg(long)]
        lambda0_out: Option<PathBuf>,
    },
    /// Sweep the diffusion sensitivity against historical growth moments.
    CalibrateBeta {
        #[arg(long)]
        economy: PathBuf,
        /// Historical panel CSV (region,year,gdp,population).
        #[arg(long)]
        historical: PathBuf,
        /// Sweep grid as start:stop:step.
        #[arg(long, default_value = "0.40:0.50:0.01")]
        grid: String,
        /// Weight on per-capita growth moments.
        #[arg(long, default_value_t = 0.5)]
        weight: f64,
        /// Loss table CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Run the dynamic simulation and write per-period records.
    Simulate {
        #[arg(long)]
        economy: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        /// Optional policy-shock JSON applied along the path.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump trade-share and expenditure grids per period.
        #[arg(long)]
        dump_grids: bool,
        /// Round emitted values to this many decimals (full precision when
        /// absent).
        #[arg(long)]
        round: Option<usize>,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Policy experiments.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
    /// Diffusion-efficiency analysis of a problem file.
    AnalyzeDiffusion {
        #[arg(long)]
        problem: PathBuf,
        /// value | optimal | actual | aleph | surface
        #[arg(long)]
        op: String,
        /// Using sector for the value operation.
        #[arg(long, default_value_t = 0)]
        using_sector: usize,
        /// Candidate shares JSON for the value operation (market shares when
        /// absent).
        #[arg(long)]
        pi: Option<PathBuf>,
        /// Source pair s,n for aleph.
        #[arg(long, default_value = "0,0", value_parser = parse_pair)]
        sources: (usize, usize),
        /// Sector pair j,p for aleph.
        #[arg(long, default_value = "0,1", value_parser = parse_pair)]
        sectors: (usize, usize),
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        round: Option<usize>,
    },
    /// Pivot one variable of a simulation run into regions x periods.
    Report {
        #[arg(long)]
        run: PathBuf,
        /// real_income | gdp | lambda
        #[arg(long)]
        var: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        round: Option<usize>,
    },
    /// Foreign-policy similarity indices and bloc assignment from votes.
    AssignBlocs {
        #[arg(long)]
        votes: PathBuf,
        #[arg(long, default_value = "usa")]
        west: String,
        #[arg(long, default_value = "chn")]
        east: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    /// Run a paired baseline/shock experiment and emit the change report.
    Run {
        #[arg(long)]
        economy: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        /// on | off
        #[arg(long, default_value = "on")]
        diffusion: Switch,
        /// Collapse to a single sector before running.
        #[arg(long)]
        single_sector: bool,
        #[arg(long)]
        horizon: Option<usize>,
        /// Comma-separated anchor regions for the trade report.
        #[arg(long, value_delimiter = ',')]
        anchors: Option<Vec<String>>,
        /// Bloc overrides as region=west|east pairs.
        #[arg(long = "override", value_parser = parse_override, value_delimiter = ',')]
        overrides: Option<Vec<(String, Bloc)>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        round: Option<usize>,
        #[command(flatten)]
        solver: SolverFlags,
    },
}

fn parse_pair(text: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("'{text}' is not a pair like 0,1"));
    }
    let a = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let b = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Switch {
    On,
    Off,
}

fn parse_override(text: &str) -> Result<(String, Bloc), String> {
    let (region, bloc) = text
        .split_once('=')
        .ok_or_else(|| format!("'{text}' is not region=west|east"))?;
    let bloc = match bloc {
        "west" => Bloc::West,
        "east" => Bloc::East,
        other => return Err(format!("'{other}' is not west|east")),
    };
    Ok((region.to_string(), bloc))
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => {
            if !p.exists() {
                return Err(CliError::Usage(format!(
                    "config '{}' does not exist",
                    p.display()
                )));
            }
            Ok(tradediff_core::io::read_json(p)?)
        }
        None => Ok(RunConfig::default()),
    }
}

fn out_dir(flag: Option<PathBuf>, config: &RunConfig, default: &str) -> PathBuf {
    flag.or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(default))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_config(cli.config.as_ref())?;
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("TRADEDIFF_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .or(config.threads);
    if let Some(threads) = threads {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    match cli.command {
        Command::Validate { economy, flows } => commands::validate(&economy, flows.as_deref()),
        Command::Calibrate {
            flows,
            params,
            out,
            labor,
            population,
            productivity,
            lambda0_out,
        } => commands::calibrate(&CalibrateArgs {
            flows: &flows,
            params: &params,
            out: &out,
            labor: labor.as_deref(),
            population: population.as_deref(),
            productivity: productivity.as_deref(),
            lambda0_out: lambda0_out.as_deref(),
        }),
        Command::CalibrateBeta {
            economy,
            historical,
            grid,
            weight,
            out,
            solver,
        } => commands::calibrate_beta(&CalibrateBetaArgs {
            economy: &economy,
            historical: &historical,
            grid: &grid,
            weight,
            out: out.as_deref(),
            solver: solver.resolve(&config)?,
        }),
        Command::Simulate {
            economy,
            horizon,
            scenario,
            out,
            dump_grids,
            round,
            solver,
        } => commands::simulate_cmd(&SimulateArgs {
            economy: &economy,
            horizon,
            scenario: scenario.as_deref(),
            out: &out_dir(out, &config, "run"),
            dump_grids,
            round,
            solver: solver.resolve(&config)?,
        }),
        Command::Scenario { action } => match action {
            ScenarioAction::Run {
                economy,
                scenario,
                diffusion,
                single_sector,
                horizon,
                anchors,
                overrides,
                out,
                round,
                solver,
            } => commands::scenario_run(&ScenarioRunArgs {
                economy: &economy,
                scenario: &scenario,
                diffusion: matches!(diffusion, Switch::On),
                single_sector,
                horizon,
                anchors,
                bloc_overrides: overrides
                    .map(|pairs| pairs.into_iter().collect::<BTreeMap<_, _>>()),
                out: &out_dir(out, &config, "report"),
                round,
                solver: solver.resolve(&config)?,
            }),
        },
        Command::AnalyzeDiffusion {
            problem,
            op,
            using_sector,
            pi,
            sources,
            sectors,
            resolution,
            out,
            round,
        } => commands::analyze_diffusion(&AnalyzeArgs {
            problem: &problem,
            op: &op,
            using_sector,
            pi: pi.as_deref(),
            sources,
            sectors,
            resolution,
            out: out.as_deref(),
            round,
        }),
        Command::Report {
            run,
            var,
            out,
            round,
        } => commands::report(&run, &var, out.as_deref(), round),
        Command::AssignBlocs {
            votes,
            west,
            east,
            out,
        } => commands::assign_blocs_cmd(&votes, &west, &east, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
