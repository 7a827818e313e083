//! The economy data model: immutable model definition, base-year accounting
//! snapshots, validation, and share calibration.
//!
//! Share parameters are read off base-year value flows with all base prices
//! normalized to one, so value shares equal quantity shares. Under that
//! convention the base-year equilibrium is reproduced exactly: the Fréchet
//! location parameters are pinned by domestic trade shares and the iceberg
//! wedges by the ratio of the exporter's home share to the bilateral share.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{BilateralGrid, IoGrid, RsGrid};
use crate::math::gamma1;

/// Relative tolerance for the accounting identities of a balanced snapshot.
pub const BALANCE_TOL: f64 = 1e-6;

/// Immutable model definition. Constructed by [`calibrate_shares`] or loaded
/// from JSON; safe to share across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Economy {
    pub regions: Vec<String>,
    pub sectors: Vec<String>,
    /// Fréchet dispersion (trade elasticity) per sector, > 0.
    pub theta: Vec<f64>,
    /// CES variety elasticity per sector, > 1.
    pub sigma: Vec<f64>,
    /// Capital-labor substitution elasticity per sector, >= 0.
    pub nu: Vec<f64>,
    /// Value-added vs intermediates substitution per sector (0 = Leontief).
    pub rho: Vec<f64>,
    /// Intermediate-mix substitution per sector (0 = Leontief).
    pub mu: Vec<f64>,
    /// Consumption shares, region x sector; rows sum to one.
    pub kappa: RsGrid,
    /// Intermediate cost shares, region x using-sector x supplying-sector;
    /// rows sum to one.
    pub eta: IoGrid,
    /// Value-added weight of the input bundle, region x sector.
    pub psi_f: RsGrid,
    /// Intermediate weight of the input bundle; `psi_f + psi_m = 1`.
    pub psi_m: RsGrid,
    /// Capital weight within value added, region x sector.
    pub psi_k: RsGrid,
    /// Labor weight within value added; `psi_k + psi_l = 1`.
    pub psi_l: RsGrid,
    /// Investment composition shares per region; rows sum to one.
    pub chi: RsGrid,
    /// Savings rate per region, in (0, 1).
    pub savings_rate: Vec<f64>,
    /// Trade-balance-to-income ratio per region. The last region absorbs the
    /// world residual when the model is solved.
    pub tb_rate: Vec<f64>,
    /// Depreciation rate per region, in [0, 1].
    pub delta: Vec<f64>,
    /// Baseline iceberg factors, source x dest x sector, >= 1 (diagonal 1).
    /// `f64::INFINITY` marks pairs with zero baseline trade.
    pub tau0: BilateralGrid,
    /// Baseline gross tariff factors, source x dest x sector, >= 1.
    pub tm0: BilateralGrid,
    /// Diffusion sensitivity, in [0, 1).
    pub beta: f64,
    /// Initial arrival rate of original ideas, >= 0 (0 switches diffusion off).
    pub alpha0: f64,
    /// Per-period growth rate of the arrival rate.
    pub alpha_growth: f64,
    /// Initial Fréchet location parameters, region x sector.
    pub lambda0: RsGrid,
    /// Initial capital stock per region (base rental rate 1).
    pub k0: Vec<f64>,
    /// Exogenous labor path, period x region (at least `horizon` rows; the
    /// last row is held constant beyond the path's end).
    pub labor_path: Vec<Vec<f64>>,
    /// Optional population path for per-capita series; defaults to labor.
    #[serde(default)]
    pub population_path: Option<Vec<Vec<f64>>>,
    /// Number of simulation periods.
    pub horizon: usize,
    /// Calendar year of period 0 (0 when periods are abstract).
    #[serde(default)]
    pub base_year: i32,
    /// World factor income in the base year; the numeraire fixes
    /// `sum_d (w_d l_d + r_d k_d)` to this value in every period.
    pub numeraire: f64,
    /// Base-year gross income per region, for validation and reporting.
    pub base_income: Vec<f64>,
}

impl Economy {
    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    pub fn region_index(&self, name: &str) -> Option<usize> {
        self.regions.iter().position(|r| r == name)
    }

    pub fn sector_index(&self, name: &str) -> Option<usize> {
        self.sectors.iter().position(|s| s == name)
    }

    /// Labor endowment per region at `period`, holding the last path row
    /// constant past the end.
    pub fn labor_at(&self, period: usize) -> &[f64] {
        let row = period.min(self.labor_path.len() - 1);
        &self.labor_path[row]
    }

    /// Population per region at `period` (labor when no separate path).
    pub fn population_at(&self, period: usize) -> &[f64] {
        match &self.population_path {
            Some(p) => &p[period.min(p.len() - 1)],
            None => self.labor_at(period),
        }
    }

    /// Initial state: period 0 with the calibrated lambda, capital, and labor.
    pub fn initial_state(&self) -> StateVector {
        StateVector {
            period: 0,
            lambda: self.lambda0.clone(),
            capital: self.k0.clone(),
            labor: self.labor_at(0).to_vec(),
            alpha: self.alpha0,
        }
    }
}

/// One period's endogenous state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub period: usize,
    /// Fréchet location parameters, region x sector.
    pub lambda: RsGrid,
    /// Capital stock per region.
    pub capital: Vec<f64>,
    /// Labor endowment per region.
    pub labor: Vec<f64>,
    /// Arrival rate of original ideas this period.
    pub alpha: f64,
}

impl StateVector {
    /// Positivity check; returns the first offending quantity.
    pub fn check_positive(&self) -> Result<(), String> {
        if let Some(((d, i), v)) = self
            .lambda
            .iter()
            .find(|&(_, v)| !(v >= 0.0) || !v.is_finite())
        {
            return Err(format!(
                "lambda[{d},{i}] = {v} is not a finite nonnegative number"
            ));
        }
        for (d, &k) in self.capital.iter().enumerate() {
            if !(k > 0.0) {
                return Err(format!("capital[{d}] = {k} is not positive"));
            }
        }
        for (d, &l) in self.labor.iter().enumerate() {
            if !(l > 0.0) {
                return Err(format!("labor[{d}] = {l} is not positive"));
            }
        }
        if !(self.alpha >= 0.0) {
            return Err(format!("alpha = {} is negative", self.alpha));
        }
        Ok(())
    }
}

/// Base-year social accounting snapshot in value terms.
///
/// `trade` is valued at the destination, tariff-inclusive, so destination
/// expenditure on a commodity is the column sum and producer sales the row
/// sum. `tariff` holds the revenue collected by the destination on each flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFlows {
    pub regions: Vec<String>,
    pub sectors: Vec<String>,
    /// Bilateral trade values, source x dest x sector.
    pub trade: BilateralGrid,
    /// Labor payments, region x sector.
    pub labor: RsGrid,
    /// Capital payments, region x sector.
    pub capital: RsGrid,
    /// Profit income, region x sector.
    pub profit: RsGrid,
    /// Final consumption spending, region x sector.
    pub final_demand: RsGrid,
    /// Investment spending, region x sector.
    pub investment: RsGrid,
    /// Intermediate purchases, region x using-sector x supplying-sector.
    pub intermediates: IoGrid,
    /// Tariff revenue, source x dest x sector (zero when absent).
    pub tariff: BilateralGrid,
}

impl BaselineFlows {
    /// Gross sales of producers in (region, sector): row sum of trade.
    pub fn sales(&self, region: usize, sector: usize) -> f64 {
        (0..self.regions.len())
            .map(|d| self.trade.get(region, d, sector))
            .sum()
    }

    /// Total expenditure of a region on a commodity: column sum of trade.
    pub fn expenditure(&self, region: usize, sector: usize) -> f64 {
        (0..self.regions.len())
            .map(|s| self.trade.get(s, region, sector))
            .sum()
    }

    /// Tariffs paid by producers of (region, sector) to foreign governments.
    pub fn tariff_paid(&self, region: usize, sector: usize) -> f64 {
        (0..self.regions.len())
            .map(|d| self.tariff.get(region, d, sector))
            .sum()
    }

    /// Tariff revenue collected by a region's government.
    pub fn tariff_received(&self, region: usize) -> f64 {
        let mut total = 0.0;
        for s in 0..self.regions.len() {
            for i in 0..self.sectors.len() {
                total += self.tariff.get(s, region, i);
            }
        }
        total
    }

    /// Gross income: factor payments, profits, and tariff revenue.
    pub fn income(&self, region: usize) -> f64 {
        let by_sector: f64 = (0..self.sectors.len())
            .map(|i| {
                self.labor.get(region, i) + self.capital.get(region, i) + self.profit.get(region, i)
            })
            .sum();
        by_sector + self.tariff_received(region)
    }

    /// Trade balance from recorded flows: export receipts net of tariffs paid
    /// minus import payments net of tariffs received.
    pub fn trade_balance(&self, region: usize) -> f64 {
        let mut balance = 0.0;
        for i in 0..self.sectors.len() {
            balance +=
                self.sales(region, i) - self.expenditure(region, i) - self.tariff_paid(region, i);
        }
        balance + self.tariff_received(region)
    }

    /// Checks every accounting identity; returns the violations found.
    pub fn check_balance(&self) -> Vec<FlowImbalance> {
        let (nr, ns) = (self.regions.len(), self.sectors.len());
        let mut issues = Vec::new();
        let scale = self.trade.as_slice().iter().sum::<f64>().max(1.0);

        // Cost identity: sales = labor + capital + profit + intermediates
        // + tariffs paid.
        for d in 0..nr {
            for i in 0..ns {
                let sales = self.sales(d, i);
                let interm: f64 = (0..ns).map(|j| self.intermediates.get(d, i, j)).sum();
                let cost = self.labor.get(d, i)
                    + self.capital.get(d, i)
                    + self.profit.get(d, i)
                    + interm
                    + self.tariff_paid(d, i);
                let gap = sales - cost;
                if gap.abs() > BALANCE_TOL * sales.abs().max(scale * 1e-9) {
                    issues.push(FlowImbalance {
                        identity: "cost".into(),
                        region: self.regions[d].clone(),
                        sector: Some(self.sectors[i].clone()),
                        gap,
                    });
                }
            }
        }

        // Use identity: expenditure = final demand + investment + intermediate
        // purchases of the commodity.
        for d in 0..nr {
            for j in 0..ns {
                let expenditure = self.expenditure(d, j);
                let interm_use: f64 = (0..ns).map(|i| self.intermediates.get(d, i, j)).sum();
                let uses = self.final_demand.get(d, j) + self.investment.get(d, j) + interm_use;
                let gap = expenditure - uses;
                if gap.abs() > BALANCE_TOL * expenditure.abs().max(scale * 1e-9) {
                    issues.push(FlowImbalance {
                        identity: "use".into(),
                        region: self.regions[d].clone(),
                        sector: Some(self.sectors[j].clone()),
                        gap,
                    });
                }
            }
        }

        // Income identity: income - consumption - investment = trade balance.
        for d in 0..nr {
            let income = self.income(d);
            let spending: f64 = (0..ns)
                .map(|i| self.final_demand.get(d, i) + self.investment.get(d, i))
                .sum();
            let gap = income - spending - self.trade_balance(d);
            if gap.abs() > BALANCE_TOL * income.abs().max(scale * 1e-9) {
                issues.push(FlowImbalance {
                    identity: "income".into(),
                    region: self.regions[d].clone(),
                    sector: None,
                    gap,
                });
            }
        }

        for (k, &v) in self.trade.as_slice().iter().enumerate() {
            if !(v >= 0.0) {
                issues.push(FlowImbalance {
                    identity: "nonnegative trade".into(),
                    region: format!("cell {k}"),
                    sector: None,
                    gap: v,
                });
            }
        }
        issues
    }

    /// Profit share targets: `profit = sales / (1 + theta_i)` per cell.
    pub fn max_profit_share_gap(&self, theta: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for d in 0..self.regions.len() {
            for i in 0..self.sectors.len() {
                let sales = self.sales(d, i);
                if sales > 0.0 {
                    let target = sales / (1.0 + theta[i]);
                    worst = worst.max((self.profit.get(d, i) - target).abs() / target);
                }
            }
        }
        worst
    }

    /// Uniform rescaling of every value in the snapshot.
    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.trade = self.trade.map(|v| v * factor);
        out.labor = self.labor.map(|v| v * factor);
        out.capital = self.capital.map(|v| v * factor);
        out.profit = self.profit.map(|v| v * factor);
        out.final_demand = self.final_demand.map(|v| v * factor);
        out.investment = self.investment.map(|v| v * factor);
        out.intermediates = IoGrid::from_fn(self.regions.len(), self.sectors.len(), |d, i, j| {
            self.intermediates.get(d, i, j) * factor
        });
        out.tariff = self.tariff.map(|v| v * factor);
        out
    }
}

/// One violated accounting identity of a flows snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowImbalance {
    pub identity: String,
    pub region: String,
    pub sector: Option<String>,
    pub gap: f64,
}

impl std::fmt::Display for FlowImbalance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.sector {
            Some(s) => write!(
                f,
                "{} identity violated at ({}, {}): gap {:.3e}",
                self.identity, self.region, s, self.gap
            ),
            None => write!(
                f,
                "{} identity violated at {}: gap {:.3e}",
                self.identity, self.region, self.gap
            ),
        }
    }
}

/// One violated model invariant, with indices and magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub indices: Vec<String>,
    pub message: String,
    pub deviation: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} [{}]: {} (deviation {:.3e})",
            self.field,
            self.indices.join(", "),
            self.message,
            self.deviation
        )
    }
}

const SHARE_TOL: f64 = 1e-8;

/// Validates every invariant of an [`Economy`]. Never aborts; returns the
/// full list of violations (empty iff the economy is valid).
pub fn validate_economy(e: &Economy) -> Vec<Violation> {
    let mut v = Vec::new();
    let (nr, ns) = (e.n_regions(), e.n_sectors());

    let mut check_share_row = |field: &str, indices: Vec<String>, sum: f64| {
        if (sum - 1.0).abs() > SHARE_TOL {
            v.push(Violation {
                field: field.into(),
                indices,
                message: format!("row sum {sum} != 1"),
                deviation: (sum - 1.0).abs(),
            });
        }
    };

    for d in 0..nr {
        check_share_row(
            "kappa",
            vec![e.regions[d].clone()],
            e.kappa.row(d).iter().sum(),
        );
        check_share_row("chi", vec![e.regions[d].clone()], e.chi.row(d).iter().sum());
        for i in 0..ns {
            check_share_row(
                "eta",
                vec![e.regions[d].clone(), e.sectors[i].clone()],
                e.eta.row(d, i).iter().sum(),
            );
            check_share_row(
                "psi_f+psi_m",
                vec![e.regions[d].clone(), e.sectors[i].clone()],
                e.psi_f.get(d, i) + e.psi_m.get(d, i),
            );
            check_share_row(
                "psi_k+psi_l",
                vec![e.regions[d].clone(), e.sectors[i].clone()],
                e.psi_k.get(d, i) + e.psi_l.get(d, i),
            );
        }
    }

    for i in 0..ns {
        if !(e.theta[i] > 0.0) {
            v.push(Violation {
                field: "theta".into(),
                indices: vec![e.sectors[i].clone()],
                message: format!("theta = {} must be positive", e.theta[i]),
                deviation: -e.theta[i],
            });
        }
        if !(e.sigma[i] > 1.0) {
            v.push(Violation {
                field: "sigma".into(),
                indices: vec![e.sectors[i].clone()],
                message: format!("sigma = {} must exceed 1", e.sigma[i]),
                deviation: 1.0 - e.sigma[i],
            });
        }
        // Convergence of the price-index integral requires theta > sigma - 1.
        if e.theta[i] <= e.sigma[i] - 1.0 {
            v.push(Violation {
                field: "theta".into(),
                indices: vec![e.sectors[i].clone()],
                message: format!("theta = {} <= sigma - 1 = {}", e.theta[i], e.sigma[i] - 1.0),
                deviation: e.sigma[i] - 1.0 - e.theta[i],
            });
        }
        for (field, val) in [("nu", e.nu[i]), ("rho", e.rho[i]), ("mu", e.mu[i])] {
            if !(val >= 0.0) {
                v.push(Violation {
                    field: field.into(),
                    indices: vec![e.sectors[i].clone()],
                    message: format!("{field} = {val} must be nonnegative"),
                    deviation: -val,
                });
            }
        }
    }

    if !(0.0..1.0).contains(&e.beta) {
        v.push(Violation {
            field: "beta".into(),
            indices: vec![],
            message: format!("beta = {} outside [0, 1)", e.beta),
            deviation: (e.beta - 1.0).abs().min(e.beta.abs()),
        });
    }
    if !(e.alpha0 >= 0.0) {
        v.push(Violation {
            field: "alpha0".into(),
            indices: vec![],
            message: format!("alpha0 = {} must be nonnegative", e.alpha0),
            deviation: -e.alpha0,
        });
    }

    for d in 0..nr {
        if !(e.savings_rate[d] > 0.0 && e.savings_rate[d] < 1.0) {
            v.push(Violation {
                field: "savings_rate".into(),
                indices: vec![e.regions[d].clone()],
                message: format!("savings rate {} outside (0, 1)", e.savings_rate[d]),
                deviation: e.savings_rate[d],
            });
        }
        if !(0.0..=1.0).contains(&e.delta[d]) {
            v.push(Violation {
                field: "delta".into(),
                indices: vec![e.regions[d].clone()],
                message: format!("depreciation {} outside [0, 1]", e.delta[d]),
                deviation: e.delta[d],
            });
        }
        if e.savings_rate[d] - e.tb_rate[d] < 0.0 {
            v.push(Violation {
                field: "tb_rate".into(),
                indices: vec![e.regions[d].clone()],
                message: "savings rate minus trade-balance rate is negative".into(),
                deviation: e.tb_rate[d] - e.savings_rate[d],
            });
        }
        if !(e.k0[d] > 0.0) {
            v.push(Violation {
                field: "k0".into(),
                indices: vec![e.regions[d].clone()],
                message: format!("initial capital {} must be positive", e.k0[d]),
                deviation: -e.k0[d],
            });
        }
        // A region may have zero lambda in some sectors (it imports
        // everything there) but not in all of them.
        let lambda_row = e.lambda0.row(d);
        if lambda_row.iter().all(|&l| l <= 0.0) {
            v.push(Violation {
                field: "lambda0".into(),
                indices: vec![e.regions[d].clone()],
                message: "zero productivity in every sector".into(),
                deviation: 0.0,
            });
        }
        for (i, &l) in lambda_row.iter().enumerate() {
            if !(l >= 0.0) || !l.is_finite() {
                v.push(Violation {
                    field: "lambda0".into(),
                    indices: vec![e.regions[d].clone(), e.sectors[i].clone()],
                    message: format!("lambda {l} must be finite and nonnegative"),
                    deviation: -l,
                });
            }
        }
    }

    for ((s, d, i), tau) in e.tau0.iter() {
        if s == d {
            if (tau - 1.0).abs() > SHARE_TOL {
                v.push(Violation {
                    field: "tau0".into(),
                    indices: vec![
                        e.regions[s].clone(),
                        e.regions[d].clone(),
                        e.sectors[i].clone(),
                    ],
                    message: format!("domestic iceberg factor {tau} != 1"),
                    deviation: (tau - 1.0).abs(),
                });
            }
        } else if !(tau >= 1.0) {
            v.push(Violation {
                field: "tau0".into(),
                indices: vec![
                    e.regions[s].clone(),
                    e.regions[d].clone(),
                    e.sectors[i].clone(),
                ],
                message: format!("iceberg factor {tau} < 1"),
                deviation: 1.0 - tau,
            });
        }
    }
    for ((s, d, i), tm) in e.tm0.iter() {
        if s == d {
            if (tm - 1.0).abs() > SHARE_TOL {
                v.push(Violation {
                    field: "tm0".into(),
                    indices: vec![
                        e.regions[s].clone(),
                        e.regions[d].clone(),
                        e.sectors[i].clone(),
                    ],
                    message: format!("domestic tariff factor {tm} != 1"),
                    deviation: (tm - 1.0).abs(),
                });
            }
        } else if !(tm >= 1.0) || !tm.is_finite() {
            v.push(Violation {
                field: "tm0".into(),
                indices: vec![
                    e.regions[s].clone(),
                    e.regions[d].clone(),
                    e.sectors[i].clone(),
                ],
                message: format!("tariff factor {tm} < 1"),
                deviation: 1.0 - tm,
            });
        }
    }

    // World trade balance at the base year.
    let world_income: f64 = e.base_income.iter().sum();
    let tb_total: f64 = e
        .tb_rate
        .iter()
        .zip(&e.base_income)
        .map(|(tb, y)| tb * y)
        .sum();
    if tb_total.abs() > BALANCE_TOL * world_income.max(1.0) {
        v.push(Violation {
            field: "tb_rate".into(),
            indices: vec![],
            message: format!("world trade balances sum to {tb_total:.6e}, not zero"),
            deviation: tb_total.abs(),
        });
    }

    if e.horizon == 0 {
        v.push(Violation {
            field: "horizon".into(),
            indices: vec![],
            message: "horizon must be at least 1".into(),
            deviation: 1.0,
        });
    }
    if e.labor_path.is_empty() || e.labor_path.iter().any(|row| row.len() != nr) {
        v.push(Violation {
            field: "labor_path".into(),
            indices: vec![],
            message: "labor path must have at least one row of one value per region".into(),
            deviation: 0.0,
        });
    }

    v
}

/// Behavioral parameters supplied alongside a flows snapshot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationParams {
    /// Per-sector Fréchet dispersion, ordered like the flows' sectors.
    pub theta: Vec<f64>,
    /// Per-sector variety elasticity; defaults to 3 when omitted.
    #[serde(default)]
    pub sigma: Option<Vec<f64>>,
    /// Per-sector factor substitution elasticity; defaults to 1 (Cobb-Douglas).
    #[serde(default)]
    pub nu: Option<Vec<f64>>,
    /// Per-sector VA/intermediates substitution; defaults to 0 (Leontief).
    #[serde(default)]
    pub rho: Option<Vec<f64>>,
    /// Per-sector intermediate-mix substitution; defaults to 0 (Leontief).
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    /// Depreciation per region, or one value for all; defaults to 0.05.
    #[serde(default)]
    pub delta: Option<Vec<f64>>,
    pub beta: f64,
    pub alpha0: f64,
    pub alpha_growth: f64,
    pub horizon: usize,
    #[serde(default)]
    pub base_year: i32,
    /// Labor path, period x region; defaults to the base-year endowment held
    /// constant.
    #[serde(default)]
    pub labor_path: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub population_path: Option<Vec<Vec<f64>>>,
}

impl CalibrationParams {
    pub fn uniform(n_sectors: usize, theta: f64, beta: f64, alpha0: f64, horizon: usize) -> Self {
        Self {
            theta: vec![theta; n_sectors],
            sigma: None,
            nu: None,
            rho: None,
            mu: None,
            delta: None,
            beta,
            alpha0,
            alpha_growth: 0.0118,
            horizon,
            base_year: 0,
            labor_path: None,
            population_path: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("unbalanced flows: {0} identity violations, first: {1}")]
    UnbalancedFlows(usize, String),
    #[error("profit income is not sales/(1+theta): worst relative gap {0:.3e}; run profit rebalancing first")]
    ProfitShareMismatch(f64),
    #[error("exporter ({region}, {sector}) sells abroad but has zero domestic share; trade costs cannot rationalize the flows")]
    ZeroDomesticShare { region: String, sector: String },
    #[error("parameter vector {0} has length {1}, expected {2}")]
    BadParameterLength(&'static str, usize, usize),
}

/// Derives a model-ready [`Economy`] from a balanced base-year snapshot.
///
/// All share parameters are base-year value shares. Base prices are
/// normalized to one, which pins the initial Fréchet location parameters to
/// `lambda = pi_dd * Gamma1^theta` and the baseline trade-cost wedges to
/// `tau * tm = (pi_ss / pi_sd)^(1/theta)`. Solving the result at the initial
/// state reproduces the snapshot to solver tolerance.
pub fn calibrate_shares(
    flows: &BaselineFlows,
    params: &CalibrationParams,
) -> Result<Economy, CalibrationError> {
    let (nr, ns) = (flows.regions.len(), flows.sectors.len());

    let issues = flows.check_balance();
    if !issues.is_empty() {
        return Err(CalibrationError::UnbalancedFlows(
            issues.len(),
            issues[0].to_string(),
        ));
    }

    let check_len = |name: &'static str, v: &[f64], want: usize| {
        if v.len() == want {
            Ok(())
        } else {
            Err(CalibrationError::BadParameterLength(name, v.len(), want))
        }
    };
    check_len("theta", &params.theta, ns)?;
    let sigma = params.sigma.clone().unwrap_or_else(|| vec![3.0; ns]);
    let nu = params.nu.clone().unwrap_or_else(|| vec![1.0; ns]);
    let rho = params.rho.clone().unwrap_or_else(|| vec![0.0; ns]);
    let mu = params.mu.clone().unwrap_or_else(|| vec![0.0; ns]);
    check_len("sigma", &sigma, ns)?;
    check_len("nu", &nu, ns)?;
    check_len("rho", &rho, ns)?;
    check_len("mu", &mu, ns)?;
    let delta = match &params.delta {
        Some(d) if d.len() == 1 => vec![d[0]; nr],
        Some(d) => {
            check_len("delta", d, nr)?;
            d.clone()
        }
        None => vec![0.05; nr],
    };

    let gap = flows.max_profit_share_gap(&params.theta);
    if gap > BALANCE_TOL {
        return Err(CalibrationError::ProfitShareMismatch(gap));
    }

    // Demand-side shares.
    let kappa = RsGrid::from_fn(nr, ns, |d, i| {
        let total: f64 = flows.final_demand.row(d).iter().sum();
        if total > 0.0 {
            flows.final_demand.get(d, i) / total
        } else {
            1.0 / ns as f64
        }
    });
    let chi = RsGrid::from_fn(nr, ns, |d, i| {
        let total: f64 = flows.investment.row(d).iter().sum();
        if total > 0.0 {
            flows.investment.get(d, i) / total
        } else {
            1.0 / ns as f64
        }
    });

    // Cost-side shares at unit prices.
    let eta = IoGrid::from_fn(nr, ns, |d, i, j| {
        let total: f64 = (0..ns).map(|jj| flows.intermediates.get(d, i, jj)).sum();
        if total > 0.0 {
            flows.intermediates.get(d, i, j) / total
        } else {
            1.0 / ns as f64
        }
    });
    let mut psi_f = RsGrid::zeros(nr, ns);
    let mut psi_m = RsGrid::zeros(nr, ns);
    let mut psi_k = RsGrid::zeros(nr, ns);
    let mut psi_l = RsGrid::zeros(nr, ns);
    for d in 0..nr {
        for i in 0..ns {
            let lab = flows.labor.get(d, i);
            let cap = flows.capital.get(d, i);
            let interm: f64 = (0..ns).map(|j| flows.intermediates.get(d, i, j)).sum();
            let bundle = lab + cap + interm;
            if bundle > 0.0 {
                psi_f.set(d, i, (lab + cap) / bundle);
                psi_m.set(d, i, interm / bundle);
            } else {
                psi_f.set(d, i, 0.5);
                psi_m.set(d, i, 0.5);
            }
            if lab + cap > 0.0 {
                psi_l.set(d, i, lab / (lab + cap));
                psi_k.set(d, i, cap / (lab + cap));
            } else {
                psi_l.set(d, i, 0.5);
                psi_k.set(d, i, 0.5);
            }
        }
    }

    // Income-side rates.
    let mut savings_rate = vec![0.0; nr];
    let mut tb_rate = vec![0.0; nr];
    let mut base_income = vec![0.0; nr];
    for d in 0..nr {
        let income = flows.income(d);
        let consumption: f64 = flows.final_demand.row(d).iter().sum();
        let investment: f64 = flows.investment.row(d).iter().sum();
        base_income[d] = income;
        savings_rate[d] = 1.0 - consumption / income;
        tb_rate[d] = savings_rate[d] - investment / income;
    }

    // Baseline tariff factors from recorded revenue: revenue is (tm-1)/tm of
    // the gross flow value.
    let tm0 = BilateralGrid::from_fn(nr, ns, |s, d, i| {
        if s == d {
            return 1.0;
        }
        let flow = flows.trade.get(s, d, i);
        let rev = flows.tariff.get(s, d, i);
        if flow > 0.0 && rev > 0.0 {
            flow / (flow - rev)
        } else {
            1.0
        }
    });

    // Trade shares, productivity levels, and iceberg wedges at unit prices.
    let mut pi_hat = BilateralGrid::zeros(nr, ns);
    for d in 0..nr {
        for i in 0..ns {
            let e = flows.expenditure(d, i);
            for s in 0..nr {
                pi_hat.set(
                    s,
                    d,
                    i,
                    if e > 0.0 {
                        flows.trade.get(s, d, i) / e
                    } else {
                        0.0
                    },
                );
            }
        }
    }
    let lambda0 = RsGrid::from_fn(nr, ns, |d, i| {
        pi_hat.get(d, d, i) * gamma1(params.theta[i], sigma[i]).powf(params.theta[i])
    });
    let mut tau0 = BilateralGrid::filled(nr, ns, 1.0);
    for s in 0..nr {
        for d in 0..nr {
            if s == d {
                continue;
            }
            for i in 0..ns {
                let share = pi_hat.get(s, d, i);
                let home = pi_hat.get(s, s, i);
                if share <= 0.0 {
                    tau0.set(s, d, i, f64::INFINITY);
                } else if home <= 0.0 {
                    return Err(CalibrationError::ZeroDomesticShare {
                        region: flows.regions[s].clone(),
                        sector: flows.sectors[i].clone(),
                    });
                } else {
                    tau0.set(
                        s,
                        d,
                        i,
                        (home / share).powf(1.0 / params.theta[i]) / tm0.get(s, d, i),
                    );
                }
            }
        }
    }

    let labor_base: Vec<f64> = (0..nr).map(|d| flows.labor.row(d).iter().sum()).collect();
    let k0: Vec<f64> = (0..nr).map(|d| flows.capital.row(d).iter().sum()).collect();
    let numeraire: f64 = labor_base.iter().sum::<f64>() + k0.iter().sum::<f64>();
    let labor_path = params
        .labor_path
        .clone()
        .unwrap_or_else(|| vec![labor_base.clone()]);

    Ok(Economy {
        regions: flows.regions.clone(),
        sectors: flows.sectors.clone(),
        theta: params.theta.clone(),
        sigma,
        nu,
        rho,
        mu,
        kappa,
        eta,
        psi_f,
        psi_m,
        psi_k,
        psi_l,
        chi,
        savings_rate,
        tb_rate,
        delta,
        tau0,
        tm0,
        beta: params.beta,
        alpha0: params.alpha0,
        alpha_growth: params.alpha_growth,
        lambda0,
        k0,
        labor_path,
        population_path: params.population_path.clone(),
        horizon: params.horizon,
        base_year: params.base_year,
        numeraire,
        base_income,
    })
}
