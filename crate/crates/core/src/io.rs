//! File formats: JSON documents for structured objects, CSV for grids and
//! series. All emissions are deterministic (fixed column and row order) and
//! numeric text is shortest-round-trip double precision unless a rounding is
//! requested.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::VoteRecord;
use crate::diffusion::Surface;
use crate::dynamics::SimulationPath;
use crate::economy::{BaselineFlows, Economy};
use crate::equilibrium::SolveOptions;
use crate::grid::{BilateralGrid, IoGrid, RsGrid};
use crate::scenario::{ComparisonReport, PolicyShock};

#[derive(Debug, Error)]
pub enum IoFailure {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{row}: {message}")]
    BadRecord {
        path: String,
        row: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    BadFile { path: String, message: String },
}

impl IoFailure {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn record(path: &Path, row: usize, message: impl Into<String>) -> Self {
        Self::BadRecord {
            path: path.display().to_string(),
            row,
            message: message.into(),
        }
    }

    fn file(path: &Path, message: impl Into<String>) -> Self {
        Self::BadFile {
            path: path.display().to_string(),
            message: message.into(),
        }
    }
}

fn format_value(v: f64, round: Option<usize>) -> String {
    match round {
        Some(digits) => format!("{v:.digits$}"),
        None => format!("{v}"),
    }
}

// ---------------------------------------------------------------------------
// JSON documents
// ---------------------------------------------------------------------------

pub fn read_economy(path: &Path) -> Result<Economy, IoFailure> {
    let text = fs::read_to_string(path).map_err(|e| IoFailure::io(path, e))?;
    let mut economy: Economy =
        serde_json::from_str(&text).map_err(|e| IoFailure::file(path, e.to_string()))?;
    normalize_psi(&mut economy, path);
    Ok(economy)
}

/// Input-bundle weights are stored pre-normalized; loading normalizes pairs
/// and warns (rather than rejects) on drift.
fn normalize_psi(economy: &mut Economy, path: &Path) {
    let (nr, ns) = (economy.n_regions(), economy.n_sectors());
    for d in 0..nr {
        for i in 0..ns {
            for (a, b, name) in [("psi_f", "psi_m", "bundle"), ("psi_k", "psi_l", "factor")] {
                let (x, y) = match name {
                    "bundle" => (economy.psi_f.get(d, i), economy.psi_m.get(d, i)),
                    _ => (economy.psi_k.get(d, i), economy.psi_l.get(d, i)),
                };
                let sum = x + y;
                // Drift at the last-ulp level is left alone so loading is
                // idempotent.
                if sum > 0.0 && (sum - 1.0).abs() > 1e-13 {
                    if (sum - 1.0).abs() > 1e-9 {
                        log::warn!(
                            "{}: {a}+{b} = {sum} at ({d},{i}); normalizing",
                            path.display()
                        );
                    }
                    match name {
                        "bundle" => {
                            economy.psi_f.set(d, i, x / sum);
                            economy.psi_m.set(d, i, y / sum);
                        }
                        _ => {
                            economy.psi_k.set(d, i, x / sum);
                            economy.psi_l.set(d, i, y / sum);
                        }
                    }
                }
            }
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoFailure> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| IoFailure::file(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| IoFailure::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoFailure> {
    let text = fs::read_to_string(path).map_err(|e| IoFailure::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| IoFailure::file(path, e.to_string()))
}

pub fn read_shock(path: &Path) -> Result<PolicyShock, IoFailure> {
    read_json(path)
}

/// Run configuration: file paths, solver knobs, output directory.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub economy: Option<String>,
    #[serde(default)]
    pub flows: Option<String>,
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub historical: Option<String>,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub solver: Option<SolveOptions>,
    /// Seed for test oracles only; the simulator itself is deterministic.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub verbosity: Option<u8>,
    #[serde(default)]
    pub threads: Option<usize>,
}

// ---------------------------------------------------------------------------
// Flows directory (CSV tables)
// ---------------------------------------------------------------------------

struct CsvTable {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_csv(path: &Path) -> Result<CsvTable, IoFailure> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => IoFailure::file(path, format!("cannot open: {e}")),
        _ => IoFailure::file(path, e.to_string()),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| IoFailure::file(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| IoFailure::record(path, k + 2, e.to_string()))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(CsvTable { headers, rows })
}

fn parse_positive_value(
    path: &Path,
    row: usize,
    text: &str,
    allow_zero: bool,
) -> Result<f64, IoFailure> {
    let value: f64 = text
        .trim()
        .parse()
        .map_err(|_| IoFailure::record(path, row, format!("'{text}' is not a number")))?;
    if value.is_nan() {
        return Err(IoFailure::record(path, row, "value is NaN"));
    }
    if value < 0.0 || (!allow_zero && value == 0.0) {
        return Err(IoFailure::record(
            path,
            row,
            format!("value {value} violates positivity"),
        ));
    }
    Ok(value)
}

fn expect_headers(path: &Path, table: &CsvTable, want: &[&str]) -> Result<(), IoFailure> {
    let got: Vec<&str> = table.headers.iter().map(String::as_str).collect();
    if got != want {
        return Err(IoFailure::file(
            path,
            format!("expected columns {want:?}, found {got:?}"),
        ));
    }
    Ok(())
}

/// Reads a flows snapshot from a directory of CSV tables: `trade.csv`
/// (source,dest,sector,value), `factors.csv` (region,sector,factor,value with
/// factor in labor|capital|profit), `finaldemand.csv` and `investment.csv`
/// (region,sector,value), `intermediates.csv`
/// (region,using_sector,supplying_sector,value), and optionally `tariffs.csv`
/// (source,dest,sector,value). Region and sector universes are taken from
/// `trade.csv` in order of first appearance.
pub fn read_flows_dir(dir: &Path) -> Result<BaselineFlows, IoFailure> {
    let trade_path = dir.join("trade.csv");
    let trade_table = read_csv(&trade_path)?;
    expect_headers(
        &trade_path,
        &trade_table,
        &["source", "dest", "sector", "value"],
    )?;

    let mut regions: Vec<String> = Vec::new();
    let mut sectors: Vec<String> = Vec::new();
    for row in &trade_table.rows {
        for name in [&row[0], &row[1]] {
            if !regions.contains(name) {
                regions.push(name.clone());
            }
        }
        if !sectors.contains(&row[2]) {
            sectors.push(row[2].clone());
        }
    }
    let (nr, ns) = (regions.len(), sectors.len());
    let region_of = |path: &Path, row: usize, name: &str| {
        regions
            .iter()
            .position(|r| r == name)
            .ok_or_else(|| IoFailure::record(path, row, format!("unknown region '{name}'")))
    };
    let sector_of = |path: &Path, row: usize, name: &str| {
        sectors
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| IoFailure::record(path, row, format!("unknown sector '{name}'")))
    };

    let mut trade = BilateralGrid::zeros(nr, ns);
    for (k, row) in trade_table.rows.iter().enumerate() {
        let value = parse_positive_value(&trade_path, k + 2, &row[3], true)?;
        let s = region_of(&trade_path, k + 2, &row[0])?;
        let d = region_of(&trade_path, k + 2, &row[1])?;
        let i = sector_of(&trade_path, k + 2, &row[2])?;
        trade.set(s, d, i, value);
    }

    let factors_path = dir.join("factors.csv");
    let factors_table = read_csv(&factors_path)?;
    expect_headers(
        &factors_path,
        &factors_table,
        &["region", "sector", "factor", "value"],
    )?;
    let mut labor = RsGrid::zeros(nr, ns);
    let mut capital = RsGrid::zeros(nr, ns);
    let mut profit = RsGrid::zeros(nr, ns);
    for (k, row) in factors_table.rows.iter().enumerate() {
        let value = parse_positive_value(&factors_path, k + 2, &row[3], true)?;
        let d = region_of(&factors_path, k + 2, &row[0])?;
        let i = sector_of(&factors_path, k + 2, &row[1])?;
        match row[2].as_str() {
            "labor" => labor.set(d, i, value),
            "capital" => capital.set(d, i, value),
            "profit" => profit.set(d, i, value),
            other => {
                return Err(IoFailure::record(
                    &factors_path,
                    k + 2,
                    format!("factor '{other}' is not labor|capital|profit"),
                ))
            }
        }
    }

    let simple_grid = |file: &str| -> Result<RsGrid, IoFailure> {
        let path = dir.join(file);
        let table = read_csv(&path)?;
        expect_headers(&path, &table, &["region", "sector", "value"])?;
        let mut grid = RsGrid::zeros(nr, ns);
        for (k, row) in table.rows.iter().enumerate() {
            let value = parse_positive_value(&path, k + 2, &row[2], true)?;
            let d = region_of(&path, k + 2, &row[0])?;
            let i = sector_of(&path, k + 2, &row[1])?;
            grid.set(d, i, value);
        }
        Ok(grid)
    };
    let final_demand = simple_grid("finaldemand.csv")?;
    let investment = simple_grid("investment.csv")?;

    let interm_path = dir.join("intermediates.csv");
    let interm_table = read_csv(&interm_path)?;
    expect_headers(
        &interm_path,
        &interm_table,
        &["region", "using_sector", "supplying_sector", "value"],
    )?;
    let mut intermediates = IoGrid::zeros(nr, ns);
    for (k, row) in interm_table.rows.iter().enumerate() {
        let value = parse_positive_value(&interm_path, k + 2, &row[3], true)?;
        let d = region_of(&interm_path, k + 2, &row[0])?;
        let i = sector_of(&interm_path, k + 2, &row[1])?;
        let j = sector_of(&interm_path, k + 2, &row[2])?;
        intermediates.set(d, i, j, value);
    }

    let tariff_path = dir.join("tariffs.csv");
    let tariff = if tariff_path.exists() {
        let table = read_csv(&tariff_path)?;
        expect_headers(&tariff_path, &table, &["source", "dest", "sector", "value"])?;
        let mut grid = BilateralGrid::zeros(nr, ns);
        for (k, row) in table.rows.iter().enumerate() {
            let value = parse_positive_value(&tariff_path, k + 2, &row[3], true)?;
            let s = region_of(&tariff_path, k + 2, &row[0])?;
            let d = region_of(&tariff_path, k + 2, &row[1])?;
            let i = sector_of(&tariff_path, k + 2, &row[2])?;
            grid.set(s, d, i, value);
        }
        grid
    } else {
        BilateralGrid::zeros(nr, ns)
    };

    Ok(BaselineFlows {
        regions,
        sectors,
        trade,
        labor,
        capital,
        profit,
        final_demand,
        investment,
        intermediates,
        tariff,
    })
}

/// Writes a flows snapshot as the CSV directory format of [`read_flows_dir`].
pub fn write_flows_dir(
    dir: &Path,
    flows: &BaselineFlows,
    round: Option<usize>,
) -> Result<(), IoFailure> {
    fs::create_dir_all(dir).map_err(|e| IoFailure::io(dir, e))?;
    let (nr, ns) = (flows.regions.len(), flows.sectors.len());
    let write = |file: &str, header: &str, body: String| -> Result<(), IoFailure> {
        let path = dir.join(file);
        let mut out = String::with_capacity(body.len() + header.len() + 1);
        out.push_str(header);
        out.push('\n');
        out.push_str(&body);
        fs::write(&path, out).map_err(|e| IoFailure::io(&path, e))
    };

    let mut body = String::new();
    for s in 0..nr {
        for d in 0..nr {
            for i in 0..ns {
                body.push_str(&format!(
                    "{},{},{},{}\n",
                    flows.regions[s],
                    flows.regions[d],
                    flows.sectors[i],
                    format_value(flows.trade.get(s, d, i), round)
                ));
            }
        }
    }
    write("trade.csv", "source,dest,sector,value", body)?;

    let mut body = String::new();
    for d in 0..nr {
        for i in 0..ns {
            for (factor, grid) in [
                ("labor", &flows.labor),
                ("capital", &flows.capital),
                ("profit", &flows.profit),
            ] {
                body.push_str(&format!(
                    "{},{},{},{}\n",
                    flows.regions[d],
                    flows.sectors[i],
                    factor,
                    format_value(grid.get(d, i), round)
                ));
            }
        }
    }
    write("factors.csv", "region,sector,factor,value", body)?;

    for (file, grid) in [
        ("finaldemand.csv", &flows.final_demand),
        ("investment.csv", &flows.investment),
    ] {
        let mut body = String::new();
        for d in 0..nr {
            for i in 0..ns {
                body.push_str(&format!(
                    "{},{},{}\n",
                    flows.regions[d],
                    flows.sectors[i],
                    format_value(grid.get(d, i), round)
                ));
            }
        }
        write(file, "region,sector,value", body)?;
    }

    let mut body = String::new();
    for d in 0..nr {
        for i in 0..ns {
            for j in 0..ns {
                body.push_str(&format!(
                    "{},{},{},{}\n",
                    flows.regions[d],
                    flows.sectors[i],
                    flows.sectors[j],
                    format_value(flows.intermediates.get(d, i, j), round)
                ));
            }
        }
    }
    write(
        "intermediates.csv",
        "region,using_sector,supplying_sector,value",
        body,
    )?;

    if flows.tariff.as_slice().iter().any(|&v| v != 0.0) {
        let mut body = String::new();
        for s in 0..nr {
            for d in 0..nr {
                for i in 0..ns {
                    body.push_str(&format!(
                        "{},{},{},{}\n",
                        flows.regions[s],
                        flows.regions[d],
                        flows.sectors[i],
                        format_value(flows.tariff.get(s, d, i), round)
                    ));
                }
            }
        }
        write("tariffs.csv", "source,dest,sector,value", body)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Series and table CSV formats
// ---------------------------------------------------------------------------

/// `productivity.csv`: region,sector,value (positive).
pub fn read_productivity(path: &Path) -> Result<BTreeMap<(String, String), f64>, IoFailure> {
    let table = read_csv(path)?;
    expect_headers(path, &table, &["region", "sector", "value"])?;
    let mut map = BTreeMap::new();
    for (k, row) in table.rows.iter().enumerate() {
        let value = parse_positive_value(path, k + 2, &row[2], false)?;
        map.insert((row[0].clone(), row[1].clone()), value);
    }
    Ok(map)
}

/// Historical GDP panel: one series per region over a contiguous year range.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoricalSeries {
    pub regions: Vec<String>,
    pub years: Vec<i32>,
    /// year x region.
    pub gdp: Vec<Vec<f64>>,
    pub population: Vec<Vec<f64>>,
}

/// `historical_gdp.csv`: region,year,gdp,population.
pub fn read_historical(path: &Path) -> Result<HistoricalSeries, IoFailure> {
    let table = read_csv(path)?;
    expect_headers(path, &table, &["region", "year", "gdp", "population"])?;
    let mut regions: Vec<String> = Vec::new();
    let mut years: Vec<i32> = Vec::new();
    for (k, row) in table.rows.iter().enumerate() {
        if !regions.contains(&row[0]) {
            regions.push(row[0].clone());
        }
        let year: i32 = row[1]
            .parse()
            .map_err(|_| IoFailure::record(path, k + 2, format!("bad year '{}'", row[1])))?;
        if !years.contains(&year) {
            years.push(year);
        }
    }
    years.sort_unstable();
    if years.windows(2).any(|w| w[1] - w[0] != 1) {
        return Err(IoFailure::file(path, "years are not contiguous"));
    }
    let mut gdp = vec![vec![f64::NAN; regions.len()]; years.len()];
    let mut population = vec![vec![f64::NAN; regions.len()]; years.len()];
    for (k, row) in table.rows.iter().enumerate() {
        let d = regions.iter().position(|r| r == &row[0]).unwrap();
        let year: i32 = row[1].parse().unwrap();
        let t = (year - years[0]) as usize;
        gdp[t][d] = parse_positive_value(path, k + 2, &row[2], false)?;
        population[t][d] = parse_positive_value(path, k + 2, &row[3], false)?;
    }
    for (t, row) in gdp.iter().enumerate() {
        for (d, v) in row.iter().enumerate() {
            if v.is_nan() || population[t][d].is_nan() {
                return Err(IoFailure::file(
                    path,
                    format!("missing ({}, {}) observation", regions[d], years[t]),
                ));
            }
        }
    }
    Ok(HistoricalSeries {
        regions,
        years,
        gdp,
        population,
    })
}

/// `votes.csv`: vote,country,position.
pub fn read_votes(path: &Path) -> Result<Vec<VoteRecord>, IoFailure> {
    let table = read_csv(path)?;
    expect_headers(path, &table, &["vote", "country", "position"])?;
    Ok(table
        .rows
        .iter()
        .map(|row| VoteRecord {
            vote: row[0].clone(),
            country: row[1].clone(),
            position: row[2].clone(),
        })
        .collect())
}

/// Anchored per-region paths (`region,year,value`) expanded to a contiguous
/// period grid with geometric interpolation between anchor years; values are
/// held constant outside the anchored range.
pub fn read_anchored_path(
    path: &Path,
    regions: &[String],
    base_year: i32,
    horizon: usize,
) -> Result<Vec<Vec<f64>>, IoFailure> {
    let table = read_csv(path)?;
    expect_headers(path, &table, &["region", "year", "value"])?;
    let mut anchors: BTreeMap<usize, Vec<(i32, f64)>> = BTreeMap::new();
    for (k, row) in table.rows.iter().enumerate() {
        let d = regions.iter().position(|r| r == &row[0]).ok_or_else(|| {
            IoFailure::record(path, k + 2, format!("unknown region '{}'", row[0]))
        })?;
        let year: i32 = row[1]
            .parse()
            .map_err(|_| IoFailure::record(path, k + 2, format!("bad year '{}'", row[1])))?;
        let value = parse_positive_value(path, k + 2, &row[2], false)?;
        anchors.entry(d).or_default().push((year, value));
    }
    let mut out = vec![vec![0.0; regions.len()]; horizon];
    for (d, region) in regions.iter().enumerate() {
        let mut points = anchors
            .remove(&d)
            .ok_or_else(|| IoFailure::file(path, format!("no path for region '{region}'")))?;
        points.sort_by_key(|(year, _)| *year);
        for (t, row) in out.iter_mut().enumerate() {
            let year = base_year + t as i32;
            row[d] = interpolate_geometric(&points, year);
        }
    }
    Ok(out)
}

fn interpolate_geometric(points: &[(i32, f64)], year: i32) -> f64 {
    match points.iter().position(|(y, _)| *y >= year) {
        Some(0) => points[0].1,
        None => points.last().unwrap().1,
        Some(k) => {
            let (y1, v1) = points[k - 1];
            let (y2, v2) = points[k];
            if y2 == year {
                v2
            } else {
                let f = (year - y1) as f64 / (y2 - y1) as f64;
                v1 * (v2 / v1).powf(f)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Emission of results
// ---------------------------------------------------------------------------

/// Per-period long-format series of a simulation path
/// (`variable,period,region,sector,value`).
pub fn write_path_csv(
    path: &Path,
    sim: &SimulationPath,
    economy: &Economy,
    round: Option<usize>,
) -> Result<(), IoFailure> {
    let mut out = String::from("variable,period,region,sector,value\n");
    let nr = economy.n_regions();
    let ns = economy.n_sectors();
    for t in 0..sim.horizon() {
        for d in 0..nr {
            out.push_str(&format!(
                "real_income,{t},{},,{}\n",
                economy.regions[d],
                format_value(sim.real_income[t][d], round)
            ));
        }
    }
    for t in 0..sim.horizon() {
        for d in 0..nr {
            out.push_str(&format!(
                "gdp,{t},{},,{}\n",
                economy.regions[d],
                format_value(sim.gdp[t][d], round)
            ));
        }
    }
    for t in 0..sim.horizon() {
        for d in 0..nr {
            for i in 0..ns {
                out.push_str(&format!(
                    "lambda,{t},{},{},{}\n",
                    economy.regions[d],
                    economy.sectors[i],
                    format_value(sim.states[t].lambda.get(d, i), round)
                ));
            }
        }
    }
    fs::write(path, out).map_err(|e| IoFailure::io(path, e))
}

/// Trade-share grid dump, one row per (period, source, dest, sector).
pub fn write_shares_csv(
    path: &Path,
    sim: &SimulationPath,
    economy: &Economy,
    round: Option<usize>,
) -> Result<(), IoFailure> {
    let mut out = String::from("period,source,dest,sector,value\n");
    let nr = economy.n_regions();
    let ns = economy.n_sectors();
    for (t, solution) in sim.solutions.iter().enumerate() {
        for s in 0..nr {
            for d in 0..nr {
                for i in 0..ns {
                    out.push_str(&format!(
                        "{t},{},{},{},{}\n",
                        economy.regions[s],
                        economy.regions[d],
                        economy.sectors[i],
                        format_value(solution.trade_shares.get(s, d, i), round)
                    ));
                }
            }
        }
    }
    fs::write(path, out).map_err(|e| IoFailure::io(path, e))
}

/// Expenditure dump by agent, one row per (period, region, sector, agent).
pub fn write_expenditure_csv(
    path: &Path,
    sim: &SimulationPath,
    economy: &Economy,
    round: Option<usize>,
) -> Result<(), IoFailure> {
    let mut out = String::from("period,region,sector,agent,value\n");
    for (t, solution) in sim.solutions.iter().enumerate() {
        for d in 0..economy.n_regions() {
            for i in 0..economy.n_sectors() {
                for (agent, grid) in [
                    ("consumption", &solution.expenditure_consumption),
                    ("investment", &solution.expenditure_investment),
                    ("intermediate", &solution.expenditure_intermediate),
                ] {
                    out.push_str(&format!(
                        "{t},{},{},{agent},{}\n",
                        economy.regions[d],
                        economy.sectors[i],
                        format_value(grid.get(d, i), round)
                    ));
                }
            }
        }
    }
    fs::write(path, out).map_err(|e| IoFailure::io(path, e))
}

/// Long-format report table (`variable,region,sector,value`) plus a JSON
/// summary next to it. Emission is byte-stable for identical reports.
pub fn emit_report(
    dir: &Path,
    report: &ComparisonReport,
    round: Option<usize>,
) -> Result<(), IoFailure> {
    fs::create_dir_all(dir).map_err(|e| IoFailure::io(dir, e))?;
    let csv_path = dir.join("report.csv");
    let mut out = String::from("variable,region,sector,value\n");
    for (d, region) in report.regions.iter().enumerate() {
        out.push_str(&format!(
            "welfare_hat,{region},,{}\n",
            format_value(report.welfare_hat[d], round)
        ));
    }
    for (d, region) in report.regions.iter().enumerate() {
        out.push_str(&format!(
            "domestic_share_hat,{region},,{}\n",
            format_value(report.domestic_share_hat[d], round)
        ));
    }
    for anchor in &report.trade_with_anchor_hat {
        for (d, region) in report.regions.iter().enumerate() {
            out.push_str(&format!(
                "trade_with_{},{region},,{}\n",
                anchor.anchor,
                format_value(anchor.by_region[d], round)
            ));
        }
    }
    for (d, region) in report.regions.iter().enumerate() {
        for (i, sector) in report.sectors.iter().enumerate() {
            out.push_str(&format!(
                "lambda_hat,{region},{sector},{}\n",
                format_value(report.lambda_hat.get(d, i), round)
            ));
        }
    }
    out.push_str(&format!(
        "cross_bloc_trade_hat,,,{}\n",
        format_value(report.cross_bloc_trade_hat, round)
    ));
    fs::write(&csv_path, out).map_err(|e| IoFailure::io(&csv_path, e))?;
    write_json(&dir.join("report.json"), report)
}

/// Plot-ready surface emission: `x,y,value` rows plus a small JSON with the
/// marked points.
pub fn write_surface(dir: &Path, surface: &Surface, round: Option<usize>) -> Result<(), IoFailure> {
    fs::create_dir_all(dir).map_err(|e| IoFailure::io(dir, e))?;
    let path = dir.join("surface.csv");
    let mut file = fs::File::create(&path).map_err(|e| IoFailure::io(&path, e))?;
    let mut out = String::from("x,y,value\n");
    for (a, &x) in surface.x.iter().enumerate() {
        for (b, &y) in surface.y.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                format_value(x, round),
                format_value(y, round),
                format_value(surface.values[a][b], round)
            ));
        }
    }
    file.write_all(out.as_bytes())
        .map_err(|e| IoFailure::io(&path, e))?;
    #[derive(Serialize)]
    struct Points<'a> {
        optimal: &'a crate::diffusion::MarkedPoint,
        actual: &'a crate::diffusion::MarkedPoint,
        autarky: &'a crate::diffusion::MarkedPoint,
    }
    write_json(
        &dir.join("points.json"),
        &Points {
            optimal: &surface.optimal,
            actual: &surface.actual,
            autarky: &surface.autarky,
        },
    )
}
