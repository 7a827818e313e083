use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use tradediff_core::calibration::{
    assign_blocs, beta_grid_search, differential_index, growth_moments_from_series,
    lambda0_from_productivity, similarity_from_votes,
};
use tradediff_core::diffusion::{
    actual_shares, aleph, diffusion_value, figure_surface, optimal_shares, DiffusionProblem,
};
use tradediff_core::dynamics::simulate;
use tradediff_core::economy::{calibrate_shares, validate_economy, CalibrationParams, Economy};
use tradediff_core::equilibrium::SolveOptions;
use tradediff_core::io;
use tradediff_core::scenario::{Bloc, ExperimentOptions, PolicyShock};

use crate::CliError;

fn must_exist(path: &Path, what: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{what} '{}' does not exist",
            path.display()
        )))
    }
}

fn read_economy_checked(path: &Path) -> Result<Economy, CliError> {
    must_exist(path, "economy file")?;
    Ok(io::read_economy(path)?)
}

/// `validate`: report every violated invariant; exit 1 when any exist.
pub fn validate(economy_path: &Path, flows_dir: Option<&Path>) -> Result<(), CliError> {
    let economy = read_economy_checked(economy_path)?;
    let mut violations = validate_economy(&economy);
    if let Some(dir) = flows_dir {
        must_exist(dir, "flows directory")?;
        let flows = io::read_flows_dir(dir)?;
        for issue in flows.check_balance() {
            violations.push(tradediff_core::economy::Violation {
                field: "flows".into(),
                indices: vec![issue.region.clone()],
                message: issue.to_string(),
                deviation: issue.gap.abs(),
            });
        }
    }
    if violations.is_empty() {
        println!("0 violations");
        Ok(())
    } else {
        for v in &violations {
            eprintln!("{v}");
        }
        Err(CliError::Domain(format!("{} violations", violations.len())))
    }
}

pub struct CalibrateArgs<'a> {
    pub flows: &'a Path,
    pub params: &'a Path,
    pub out: &'a Path,
    pub labor: Option<&'a Path>,
    pub population: Option<&'a Path>,
    pub productivity: Option<&'a Path>,
    pub lambda0_out: Option<&'a Path>,
}

/// `calibrate`: derive a model-ready economy from a flows directory.
pub fn calibrate(args: &CalibrateArgs<'_>) -> Result<(), CliError> {
    must_exist(args.flows, "flows directory")?;
    must_exist(args.params, "parameter file")?;
    let flows = io::read_flows_dir(args.flows)?;
    let mut params: CalibrationParams = io::read_json(args.params)?;
    if let Some(labor) = args.labor {
        must_exist(labor, "labor path file")?;
        params.labor_path = Some(io::read_anchored_path(
            labor,
            &flows.regions,
            params.base_year,
            params.horizon,
        )?);
    }
    if let Some(population) = args.population {
        must_exist(population, "population path file")?;
        params.population_path = Some(io::read_anchored_path(
            population,
            &flows.regions,
            params.base_year,
            params.horizon,
        )?);
    }
    let economy = calibrate_shares(&flows, &params)?;
    let violations = validate_economy(&economy);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{v}");
        }
        return Err(CliError::Domain(format!(
            "calibrated economy violates {} invariants",
            violations.len()
        )));
    }
    io::write_json(args.out, &economy)?;
    println!(
        "calibrated {} regions x {} sectors -> {}",
        economy.n_regions(),
        economy.n_sectors(),
        args.out.display()
    );

    // Productivity-proportional initial-productivity grid, written as a
    // standalone artifact: grafting it onto a flow-exact economy would break
    // the base-year fit, so the choice is left to the user.
    if let Some(productivity) = args.productivity {
        must_exist(productivity, "productivity table")?;
        let table = io::read_productivity(productivity)?;
        let grid = lambda0_from_productivity(&table, &economy.regions, &economy.sectors)?;
        let out = args
            .lambda0_out
            .map(PathBuf::from)
            .unwrap_or_else(|| args.out.with_file_name("lambda0_productivity.json"));
        io::write_json(&out, &grid)?;
        println!("productivity-based lambda0 -> {}", out.display());
    }
    Ok(())
}

pub struct CalibrateBetaArgs<'a> {
    pub economy: &'a Path,
    pub historical: &'a Path,
    pub grid: &'a str,
    pub weight: f64,
    pub out: Option<&'a Path>,
    pub solver: SolveOptions,
}

/// `calibrate-beta`: sweep the diffusion sensitivity against historical
/// growth moments.
pub fn calibrate_beta(args: &CalibrateBetaArgs<'_>) -> Result<(), CliError> {
    let mut economy = read_economy_checked(args.economy)?;
    must_exist(args.historical, "historical series")?;
    if !(0.0..=1.0).contains(&args.weight) {
        return Err(CliError::Usage(format!(
            "weight {} outside [0, 1]",
            args.weight
        )));
    }
    let series = io::read_historical(args.historical)?;
    let hist = growth_moments_from_series(&series.gdp, &series.population);
    let grid = tradediff_core::calibration::parse_grid(args.grid).map_err(CliError::Usage)?;
    // The sweep simulates the historical window.
    economy.horizon = series.years.len();
    let result = beta_grid_search(&economy, &hist, &grid, args.weight, &args.solver);

    println!(
        "historical moments: GDP {:.2}/{:.2}, per capita {:.2}/{:.2}",
        hist.gdp_mean, hist.gdp_sd, hist.gdp_pc_mean, hist.gdp_pc_sd
    );
    println!("beta,gdp_mean,gdp_sd,gdp_pc_mean,gdp_pc_sd,loss,error");
    let mut csv = String::from("beta,gdp_mean,gdp_sd,gdp_pc_mean,gdp_pc_sd,loss,error\n");
    for row in &result.rows {
        let line = match (&row.moments, row.loss, &row.error) {
            (Some(m), Some(loss), _) => format!(
                "{},{},{},{},{},{},",
                row.beta, m.gdp_mean, m.gdp_sd, m.gdp_pc_mean, m.gdp_pc_sd, loss
            ),
            (_, _, Some(err)) => format!("{},,,,,,{}", row.beta, err.replace(',', ";")),
            _ => unreachable!(),
        };
        println!("{line}");
        csv.push_str(&line);
        csv.push('\n');
    }
    if let Some(out) = args.out {
        fs::write(out, csv).map_err(|e| CliError::Usage(format!("{}: {e}", out.display())))?;
    }
    match result.best {
        Some(best) => {
            println!("minimum at beta = {best}");
            Ok(())
        }
        None => Err(CliError::Domain(
            "every grid point failed to simulate".into(),
        )),
    }
}

pub struct SimulateArgs<'a> {
    pub economy: &'a Path,
    pub horizon: Option<usize>,
    pub scenario: Option<&'a Path>,
    pub out: &'a Path,
    pub dump_grids: bool,
    pub round: Option<usize>,
    pub solver: SolveOptions,
}

/// `simulate`: run the recursive-dynamic path and write per-period records.
pub fn simulate_cmd(args: &SimulateArgs<'_>) -> Result<(), CliError> {
    let economy = read_economy_checked(args.economy)?;
    let shock = match args.scenario {
        Some(path) => {
            must_exist(path, "scenario file")?;
            let shock: PolicyShock = io::read_shock(path)?;
            Some(shock.resolve(&economy, None)?)
        }
        None => None,
    };
    let path = simulate(&economy, shock.as_ref(), args.horizon, &args.solver)?;
    fs::create_dir_all(args.out)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.out.display())))?;
    io::write_path_csv(&args.out.join("path.csv"), &path, &economy, args.round)?;
    if args.dump_grids {
        io::write_shares_csv(&args.out.join("pi.csv"), &path, &economy, args.round)?;
        io::write_expenditure_csv(
            &args.out.join("expenditure.csv"),
            &path,
            &economy,
            args.round,
        )?;
    }
    let total_iterations: usize = path
        .solutions
        .iter()
        .map(|s| s.convergence.iterations)
        .sum();
    let summary = serde_json::json!({
        "regions": economy.regions,
        "sectors": economy.sectors,
        "horizon": path.horizon(),
        "base_year": economy.base_year,
        "total_solver_iterations": total_iterations,
        "final_real_income": (0..economy.n_regions()).map(|d| path.real_income[path.horizon() - 1][d]).collect::<Vec<_>>(),
    });
    io::write_json(&args.out.join("summary.json"), &summary)?;
    println!(
        "simulated {} periods -> {}",
        path.horizon(),
        args.out.display()
    );
    Ok(())
}

pub struct ScenarioRunArgs<'a> {
    pub economy: &'a Path,
    pub scenario: &'a Path,
    pub diffusion: bool,
    pub single_sector: bool,
    pub horizon: Option<usize>,
    pub anchors: Option<Vec<String>>,
    pub bloc_overrides: Option<BTreeMap<String, Bloc>>,
    pub out: &'a Path,
    pub round: Option<usize>,
    pub solver: SolveOptions,
}

/// `scenario run`: paired baseline/shock simulation and the change report.
pub fn scenario_run(args: &ScenarioRunArgs<'_>) -> Result<(), CliError> {
    let economy = read_economy_checked(args.economy)?;
    must_exist(args.scenario, "scenario file")?;
    let shock: PolicyShock = io::read_shock(args.scenario)?;
    let options = ExperimentOptions {
        diffusion: args.diffusion,
        single_sector: args.single_sector,
        bloc_overrides: args.bloc_overrides.clone(),
        anchors: args.anchors.clone(),
        horizon: args.horizon,
        solver: args.solver,
    };
    let report = tradediff_core::scenario::run_experiment(&economy, &shock, &options)?;
    io::emit_report(args.out, &report, args.round)?;
    println!("cumulative real-income change by region:");
    for (d, region) in report.regions.iter().enumerate() {
        println!("  {region}: {:+.4}", report.welfare_hat[d]);
    }
    println!("cross-bloc trade: {:+.4}", report.cross_bloc_trade_hat);
    println!("report -> {}", args.out.display());
    Ok(())
}

pub struct AnalyzeArgs<'a> {
    pub problem: &'a Path,
    pub op: &'a str,
    pub using_sector: usize,
    pub pi: Option<&'a Path>,
    pub sources: (usize, usize),
    pub sectors: (usize, usize),
    pub resolution: usize,
    pub out: Option<&'a Path>,
    pub round: Option<usize>,
}

/// `analyze-diffusion`: the diffusion objective, planner and market shares,
/// the distortion statistic, and the plot-data surface.
pub fn analyze_diffusion(args: &AnalyzeArgs<'_>) -> Result<(), CliError> {
    must_exist(args.problem, "problem file")?;
    let problem: DiffusionProblem = io::read_json(args.problem)?;
    match args.op {
        "optimal" | "actual" => {
            let shares = if args.op == "optimal" {
                optimal_shares(&problem)
            } else {
                actual_shares(&problem)
            };
            emit_json(args.out, &shares)
        }
        "value" => {
            let pi: Vec<Vec<f64>> = match args.pi {
                Some(path) => {
                    must_exist(path, "shares file")?;
                    io::read_json(path)?
                }
                None => actual_shares(&problem),
            };
            let value = diffusion_value(&pi, &problem, args.using_sector);
            println!("{value}");
            if let Some(path) = args.out {
                io::write_json(path, &value)?;
            }
            Ok(())
        }
        "aleph" => {
            let (s, n) = args.sources;
            let (j, p) = args.sectors;
            let bounds = problem.n_regions().max(problem.n_sectors());
            if s >= problem.n_regions()
                || n >= problem.n_regions()
                || j >= problem.n_sectors()
                || p >= problem.n_sectors()
            {
                return Err(CliError::Usage(format!(
                    "aleph indices out of range for a {bounds}-sized problem"
                )));
            }
            let value = aleph(&problem, s, n, j, p);
            println!("{value}");
            if let Some(path) = args.out {
                io::write_json(path, &value)?;
            }
            Ok(())
        }
        "surface" => {
            let surface = figure_surface(&problem, args.resolution)?;
            let dir = args
                .out
                .ok_or_else(|| CliError::Usage("surface emission requires --out DIR".into()))?;
            io::write_surface(dir, &surface, args.round)?;
            println!("surface -> {}", dir.display());
            Ok(())
        }
        other => Err(CliError::Usage(format!(
            "unknown operation '{other}' (value|optimal|actual|aleph|surface)"
        ))),
    }
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    match out {
        Some(path) => Ok(io::write_json(path, value)?),
        None => {
            println!(
                "{}",
                serde_json::to_string_pretty(value).expect("serializable")
            );
            Ok(())
        }
    }
}

/// `report`: pivot one variable of a simulation run into a regions-by-periods
/// table.
pub fn report(
    run_dir: &Path,
    variable: &str,
    out: Option<&Path>,
    round: Option<usize>,
) -> Result<(), CliError> {
    let path = run_dir.join("path.csv");
    must_exist(&path, "run record")?;
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut header = None;
    // (region, sector) -> period-indexed values.
    let mut rows: BTreeMap<(String, String), BTreeMap<usize, f64>> = BTreeMap::new();
    let mut order: Vec<(String, String)> = Vec::new();
    let mut max_period = 0usize;
    for (k, line) in text.lines().enumerate() {
        if k == 0 {
            header = Some(line.to_string());
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(CliError::Usage(format!(
                "{}:{}: malformed row",
                path.display(),
                k + 1
            )));
        }
        if parts[0] != variable {
            continue;
        }
        let period: usize = parts[1]
            .parse()
            .map_err(|_| CliError::Usage(format!("{}:{}: bad period", path.display(), k + 1)))?;
        let value: f64 = parts[4]
            .parse()
            .map_err(|_| CliError::Usage(format!("{}:{}: bad value", path.display(), k + 1)))?;
        let key = (parts[2].to_string(), parts[3].to_string());
        if !rows.contains_key(&key) {
            order.push(key.clone());
        }
        rows.entry(key).or_default().insert(period, value);
        max_period = max_period.max(period);
    }
    if header.as_deref() != Some("variable,period,region,sector,value") {
        return Err(CliError::Usage(format!(
            "{}: unrecognized run record",
            path.display()
        )));
    }
    if rows.is_empty() {
        return Err(CliError::Usage(format!(
            "variable '{variable}' not present in the run (try real_income, gdp, lambda)"
        )));
    }
    let mut table = String::from("region,sector");
    for t in 0..=max_period {
        table.push_str(&format!(",p{t}"));
    }
    table.push('\n');
    for key in &order {
        let by_period = &rows[key];
        table.push_str(&key.0);
        table.push(',');
        table.push_str(&key.1);
        for t in 0..=max_period {
            let v = by_period.get(&t).copied().unwrap_or(f64::NAN);
            match round {
                Some(digits) => table.push_str(&format!(",{v:.digits$}")),
                None => table.push_str(&format!(",{v}")),
            }
        }
        table.push('\n');
    }
    match out {
        Some(path) => {
            fs::write(path, table)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            println!("table -> {}", path.display());
        }
        None => print!("{table}"),
    }
    Ok(())
}

/// `assign-blocs`: similarity indices from votes and a bloc assignment.
pub fn assign_blocs_cmd(
    votes: &Path,
    west_anchor: &str,
    east_anchor: &str,
    out: Option<&Path>,
) -> Result<(), CliError> {
    must_exist(votes, "votes file")?;
    let records = io::read_votes(votes)?;
    let similarity = similarity_from_votes(&records)?;
    let index = differential_index(&similarity, west_anchor, east_anchor)?;
    let blocs = assign_blocs(&similarity, west_anchor, east_anchor)?;
    let mut assignment = BTreeMap::new();
    for (country, value) in &index {
        assignment.insert(
            country.clone(),
            serde_json::json!({
                "differential_index": value,
                "bloc": blocs[country],
            }),
        );
    }
    for (country, value) in &index {
        println!("{country}: {value:+.4} -> {:?}", blocs[country]);
    }
    emit_json(out, &assignment)
}
