//! Decoupling policy experiments: shocked policy grids, paired
//! baseline/shock simulations, and the reported cumulative-change metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::profit_rebalance;
use crate::dynamics::{simulate, SimulateError, SimulationPath};
use crate::economy::{calibrate_shares, CalibrationError, CalibrationParams, Economy};
use crate::equilibrium::{harvest_flows, PolicyInputs, SolveError, SolveOptions};
use crate::grid::{BilateralGrid, IoGrid, RsGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bloc {
    West,
    East,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShockKind {
    /// Adds to the iceberg factor; revenue-dissipating.
    Iceberg,
    /// Adds to the gross tariff factor; revenue rebated to the destination.
    Tariff,
}

/// Cross-bloc trade-cost shock. Within-bloc and domestic pairs are never
/// touched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyShock {
    pub kind: ShockKind,
    /// Percentage points added to the cost factor (160 turns an iceberg
    /// factor of 1.0 into 2.6).
    pub magnitude_pp: f64,
    /// Bloc membership; every region of the economy must appear.
    pub blocs: BTreeMap<String, Bloc>,
    /// Sectors in scope; `None` shocks all sectors.
    #[serde(default)]
    pub sectors: Option<Vec<String>>,
    /// First shocked period, as a calendar year when the economy has a base
    /// year, otherwise a period index. Defaults to the first period after
    /// the base year.
    #[serde(default)]
    pub start: Option<i32>,
    /// Permanent shocks persist through the horizon; one-shot shocks apply
    /// only in the start period.
    #[serde(default = "default_true")]
    pub permanent: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown region '{0}' in bloc map")]
    UnknownRegion(String),
    #[error("region '{0}' missing from bloc map")]
    UnmappedRegion(String),
    #[error("unknown sector '{0}' in shock scope")]
    UnknownSector(String),
    #[error("shock magnitude {0} must be nonnegative")]
    NegativeMagnitude(f64),
    #[error("baseline series sums to zero; cumulative change undefined for {0}")]
    ZeroBaseline(String),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("single-sector collapse failed: {0}")]
    Collapse(String),
}

/// A shock resolved against a concrete economy: indices instead of names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedShock {
    pub kind: ShockKind,
    pub magnitude: f64,
    /// Bloc per region index.
    pub bloc_of: Vec<Bloc>,
    /// Shocked sector indices, sorted.
    pub sectors: Vec<usize>,
    pub start_period: usize,
    pub permanent: bool,
}

impl PolicyShock {
    /// Validates the shock against an economy and resolves names to indices.
    /// `bloc_overrides` reassign individual regions before resolution.
    pub fn resolve(
        &self,
        economy: &Economy,
        bloc_overrides: Option<&BTreeMap<String, Bloc>>,
    ) -> Result<ResolvedShock, ScenarioError> {
        if self.magnitude_pp < 0.0 {
            return Err(ScenarioError::NegativeMagnitude(self.magnitude_pp));
        }
        let mut blocs = self.blocs.clone();
        if let Some(overrides) = bloc_overrides {
            for (region, bloc) in overrides {
                blocs.insert(region.clone(), *bloc);
            }
        }
        for region in blocs.keys() {
            if economy.region_index(region).is_none() {
                return Err(ScenarioError::UnknownRegion(region.clone()));
            }
        }
        let bloc_of = economy
            .regions
            .iter()
            .map(|r| {
                blocs
                    .get(r)
                    .copied()
                    .ok_or_else(|| ScenarioError::UnmappedRegion(r.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sectors = match &self.sectors {
            None => (0..economy.n_sectors()).collect(),
            Some(names) => {
                let mut idx = names
                    .iter()
                    .map(|n| {
                        economy
                            .sector_index(n)
                            .ok_or_else(|| ScenarioError::UnknownSector(n.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                idx.sort_unstable();
                idx.dedup();
                idx
            }
        };
        let start_period = match self.start {
            Some(start) if economy.base_year != 0 => (start - economy.base_year).max(0) as usize,
            Some(start) => start.max(0) as usize,
            None => 1,
        };
        Ok(ResolvedShock {
            kind: self.kind,
            magnitude: self.magnitude_pp / 100.0,
            bloc_of,
            sectors,
            start_period,
            permanent: self.permanent,
        })
    }
}

/// Applies a resolved shock to one period's policy grids. Cross-bloc pairs in
/// scope get the magnitude added to the relevant cost factor once the start
/// period is reached (only in the start period for one-shot shocks).
pub fn apply_shock(baseline: &PolicyInputs, shock: &ResolvedShock, period: usize) -> PolicyInputs {
    let active = if shock.permanent {
        period >= shock.start_period
    } else {
        period == shock.start_period
    };
    if !active || shock.magnitude == 0.0 {
        return baseline.clone();
    }
    let mut policy = baseline.clone();
    let grid = match shock.kind {
        ShockKind::Iceberg => &mut policy.tau,
        ShockKind::Tariff => &mut policy.tm,
    };
    let nr = shock.bloc_of.len();
    for s in 0..nr {
        for d in 0..nr {
            if s == d || shock.bloc_of[s] == shock.bloc_of[d] {
                continue;
            }
            for &i in &shock.sectors {
                grid.set(s, d, i, grid.get(s, d, i) + shock.magnitude);
            }
        }
    }
    policy
}

/// Cumulative percentage change between a shocked and a baseline series from
/// period `start` on: `sum_t (x'_t - x_t) / sum_t x_t` (a fraction, not
/// percent).
pub fn cumulative_change(
    shocked: &[f64],
    baseline: &[f64],
    start: usize,
) -> Result<f64, ScenarioError> {
    assert_eq!(shocked.len(), baseline.len(), "series lengths differ");
    let start = start.min(baseline.len());
    let denom: f64 = baseline[start..].iter().sum();
    if denom == 0.0 {
        return Err(ScenarioError::ZeroBaseline(format!(
            "series of length {}",
            baseline.len()
        )));
    }
    let num: f64 = shocked[start..]
        .iter()
        .zip(&baseline[start..])
        .map(|(a, b)| a - b)
        .sum();
    Ok(num / denom)
}

/// Options of a policy experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOptions {
    /// Idea diffusion active; when off, both runs freeze productivity
    /// (arrival rate zero).
    pub diffusion: bool,
    /// Collapse the economy to a single sector before running.
    pub single_sector: bool,
    /// Reassign regions to blocs before resolving the shock.
    #[serde(default)]
    pub bloc_overrides: Option<BTreeMap<String, Bloc>>,
    /// Regions whose bilateral trade is reported; defaults to the first
    /// listed region of each bloc.
    #[serde(default)]
    pub anchors: Option<Vec<String>>,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default = "SolveOptions::default")]
    pub solver: SolveOptions,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            diffusion: true,
            single_sector: false,
            bloc_overrides: None,
            anchors: None,
            horizon: None,
            solver: SolveOptions::default(),
        }
    }
}

/// Cumulative changes and underlying series of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub regions: Vec<String>,
    pub sectors: Vec<String>,
    pub start_period: usize,
    pub horizon: usize,
    pub diffusion: bool,
    pub single_sector: bool,
    /// Cumulative change of real income per region.
    pub welfare_hat: Vec<f64>,
    /// Cumulative change of productivity per region x sector.
    pub lambda_hat: RsGrid,
    /// Cumulative change of bilateral trade with each anchor, per region;
    /// the anchor's own entry is its total trade with everyone else.
    pub trade_with_anchor_hat: Vec<AnchorChange>,
    /// Cumulative change of total cross-bloc trade.
    pub cross_bloc_trade_hat: f64,
    /// Cumulative change of the domestic expenditure share per region
    /// (expenditure-weighted over sectors).
    pub domestic_share_hat: Vec<f64>,
    /// Real income series, period x region.
    pub baseline_real_income: Vec<Vec<f64>>,
    pub shocked_real_income: Vec<Vec<f64>>,
    /// Productivity series, period x region x sector (flattened region-major).
    pub baseline_lambda: Vec<Vec<f64>>,
    pub shocked_lambda: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorChange {
    pub anchor: String,
    /// Cumulative change of two-way trade value with the anchor, per region.
    pub by_region: Vec<f64>,
}

/// Runs the paired experiment: one baseline simulation and one shocked
/// simulation sharing every other input, then the cumulative-change report.
/// The two simulations run concurrently; the report assembly is
/// deterministic.
pub fn run_experiment(
    economy: &Economy,
    shock: &PolicyShock,
    options: &ExperimentOptions,
) -> Result<ComparisonReport, ScenarioError> {
    let mut working = if options.single_sector {
        collapse_to_single_sector(economy, &options.solver)?
    } else {
        economy.clone()
    };
    if !options.diffusion {
        working.alpha0 = 0.0;
    }
    let resolved = shock.resolve(&working, options.bloc_overrides.as_ref())?;
    let horizon = options.horizon.unwrap_or(working.horizon);

    let (baseline, shocked) = rayon::join(
        || simulate(&working, None, Some(horizon), &options.solver),
        || simulate(&working, Some(&resolved), Some(horizon), &options.solver),
    );
    let baseline = baseline?;
    let shocked = shocked?;
    build_report(&working, &resolved, &baseline, &shocked, options)
}

fn build_report(
    economy: &Economy,
    shock: &ResolvedShock,
    baseline: &SimulationPath,
    shocked: &SimulationPath,
    options: &ExperimentOptions,
) -> Result<ComparisonReport, ScenarioError> {
    let nr = economy.n_regions();
    let ns = economy.n_sectors();
    let start = shock.start_period.min(baseline.horizon().saturating_sub(1));

    let welfare_hat = (0..nr)
        .map(|d| {
            cumulative_change(
                &shocked.real_income_series(d),
                &baseline.real_income_series(d),
                start,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut lambda_hat = RsGrid::zeros(nr, ns);
    for d in 0..nr {
        for i in 0..ns {
            let s: Vec<f64> = shocked.lambda_series(d, i);
            let b: Vec<f64> = baseline.lambda_series(d, i);
            lambda_hat.set(d, i, cumulative_change(&s, &b, start)?);
        }
    }

    let anchors: Vec<usize> = match &options.anchors {
        Some(names) => names
            .iter()
            .map(|n| {
                economy
                    .region_index(n)
                    .ok_or_else(|| ScenarioError::UnknownRegion(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => {
            // First listed region of each bloc, in economy order.
            let mut seen = Vec::new();
            let mut anchors = Vec::new();
            for d in 0..nr {
                if !seen.contains(&shock.bloc_of[d]) {
                    seen.push(shock.bloc_of[d]);
                    anchors.push(d);
                }
            }
            anchors
        }
    };
    let trade_with_anchor_hat = anchors
        .iter()
        .map(|&a| {
            let by_region = (0..nr)
                .map(|d| {
                    if d == a {
                        // The anchor row reports its trade with all others.
                        let total = |path: &SimulationPath| {
                            (0..path.horizon())
                                .map(|t| {
                                    (0..nr)
                                        .filter(|&o| o != a)
                                        .map(|o| {
                                            path.trade_values[t][a][o] + path.trade_values[t][o][a]
                                        })
                                        .sum::<f64>()
                                })
                                .collect::<Vec<f64>>()
                        };
                        cumulative_change(&total(shocked), &total(baseline), start)
                    } else {
                        cumulative_change(
                            &shocked.bilateral_trade_series(a, d),
                            &baseline.bilateral_trade_series(a, d),
                            start,
                        )
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(AnchorChange {
                anchor: economy.regions[a].clone(),
                by_region,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;

    let cross_series = |path: &SimulationPath| {
        (0..path.horizon())
            .map(|t| {
                let mut total = 0.0;
                for s in 0..nr {
                    for d in 0..nr {
                        if shock.bloc_of[s] != shock.bloc_of[d] {
                            total += path.trade_values[t][s][d];
                        }
                    }
                }
                total
            })
            .collect::<Vec<f64>>()
    };
    let cross_bloc_trade_hat =
        cumulative_change(&cross_series(shocked), &cross_series(baseline), start)?;

    let domestic_share = |path: &SimulationPath, d: usize| {
        path.solutions
            .iter()
            .map(|sol| {
                let mut spent = 0.0;
                let mut home = 0.0;
                for i in 0..ns {
                    let e = sol.expenditure(d, i);
                    spent += e;
                    home += sol.trade_shares.get(d, d, i) * e;
                }
                home / spent
            })
            .collect::<Vec<f64>>()
    };
    let domestic_share_hat = (0..nr)
        .map(|d| {
            cumulative_change(
                &domestic_share(shocked, d),
                &domestic_share(baseline, d),
                start,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    let flatten_lambda = |path: &SimulationPath| {
        path.states
            .iter()
            .map(|st| st.lambda.as_slice().to_vec())
            .collect::<Vec<Vec<f64>>>()
    };

    Ok(ComparisonReport {
        regions: economy.regions.clone(),
        sectors: economy.sectors.clone(),
        start_period: start,
        horizon: baseline.horizon(),
        diffusion: options.diffusion,
        single_sector: options.single_sector,
        welfare_hat,
        lambda_hat,
        trade_with_anchor_hat,
        cross_bloc_trade_hat,
        domestic_share_hat,
        baseline_real_income: baseline.real_income.clone(),
        shocked_real_income: shocked.real_income.clone(),
        baseline_lambda: flatten_lambda(baseline),
        shocked_lambda: flatten_lambda(shocked),
    })
}

/// Collapses a calibrated economy to a single sector: the implied base-year
/// flows are summed over sectors, the dispersion parameter becomes the
/// expenditure-weighted mean, profits are re-fit to the aggregate Bertrand
/// share, and the result is re-calibrated.
pub fn collapse_to_single_sector(
    economy: &Economy,
    opts: &SolveOptions,
) -> Result<Economy, ScenarioError> {
    let flows = harvest_flows(economy, opts)?;
    let (nr, ns) = (flows.regions.len(), flows.sectors.len());

    // Expenditure weights over sectors.
    let mut weight = vec![0.0; ns];
    let mut total = 0.0;
    for i in 0..ns {
        for d in 0..nr {
            weight[i] += flows.expenditure(d, i);
        }
        total += weight[i];
    }
    weight.iter_mut().for_each(|w| *w /= total);
    let avg = |v: &[f64]| v.iter().zip(&weight).map(|(x, w)| x * w).sum::<f64>();
    let theta_bar = avg(&economy.theta);
    let sector_name = if ns == 1 {
        economy.sectors[0].clone()
    } else {
        "all".to_string()
    };

    let sum_sectors = |g: &RsGrid| RsGrid::from_fn(nr, 1, |d, _| g.row(d).iter().sum());
    let collapsed = crate::economy::BaselineFlows {
        regions: flows.regions.clone(),
        sectors: vec![sector_name],
        trade: BilateralGrid::from_fn(nr, 1, |s, d, _| {
            (0..ns).map(|i| flows.trade.get(s, d, i)).sum()
        }),
        labor: sum_sectors(&flows.labor),
        capital: sum_sectors(&flows.capital),
        profit: sum_sectors(&flows.profit),
        final_demand: sum_sectors(&flows.final_demand),
        investment: sum_sectors(&flows.investment),
        intermediates: IoGrid::from_fn(nr, 1, |d, _, _| {
            let mut s = 0.0;
            for i in 0..ns {
                for j in 0..ns {
                    s += flows.intermediates.get(d, i, j);
                }
            }
            s
        }),
        tariff: BilateralGrid::from_fn(nr, 1, |s, d, _| {
            (0..ns).map(|i| flows.tariff.get(s, d, i)).sum()
        }),
    };

    // Aggregate profits are not the aggregate Bertrand share unless theta is
    // uniform; re-fit before calibrating.
    let rebalanced = profit_rebalance(&collapsed, &[theta_bar])
        .map_err(|e| ScenarioError::Collapse(e.to_string()))?;

    let params = CalibrationParams {
        theta: vec![theta_bar],
        sigma: Some(vec![avg(&economy.sigma)]),
        nu: Some(vec![avg(&economy.nu)]),
        rho: Some(vec![avg(&economy.rho)]),
        mu: Some(vec![avg(&economy.mu)]),
        delta: Some(economy.delta.clone()),
        beta: economy.beta,
        alpha0: economy.alpha0,
        alpha_growth: economy.alpha_growth,
        horizon: economy.horizon,
        base_year: economy.base_year,
        labor_path: Some(economy.labor_path.clone()),
        population_path: economy.population_path.clone(),
    };
    Ok(calibrate_shares(&rebalanced, &params)?)
}
