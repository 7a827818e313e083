//! One period's static general equilibrium.
//!
//! Given a state (productivities, capital, labor) and a policy grid, the
//! solver finds factor prices clearing labor and capital markets in every
//! region. The price/unit-cost system is a contraction and is iterated to
//! high precision inside each outer step; the income-expenditure block is
//! linear given prices and is also solved by iteration. The outer loop
//! updates wages and rentals with damped multiplicative excess-demand steps
//! (damping halves on oscillation) and renormalizes so world factor income
//! stays at its base-year value.
//!
//! Accounting conventions: destination expenditure is tariff-inclusive;
//! producers receive the gross value of their sales, pay tariffs to the
//! destination government out of their cost share, and keep the Bertrand
//! profit `1/(1+theta)` of gross sales. Tariff revenue is rebated lump-sum to
//! the destination household. The market-clearing system (goods, labor,
//! capital clearing plus the income identity and the tariff rebate) is a
//! reconstruction following standard practice; trade balances stay a fixed
//! share of income in all regions except the last, which absorbs the world
//! residual.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::economy::{Economy, StateVector};
use crate::grid::{BilateralGrid, RsGrid};
use crate::math::{ces_cost, ces_cost2, ces_value_share2, cobb_douglas_constant, gamma1};

/// Effective policy grids for one period; domestic cells are 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyInputs {
    /// Iceberg factors, source x dest x sector, >= 1.
    pub tau: BilateralGrid,
    /// Gross tariff factors, source x dest x sector, >= 1.
    pub tm: BilateralGrid,
}

impl PolicyInputs {
    /// The economy's baseline costs and tariffs.
    pub fn baseline(economy: &Economy) -> Self {
        Self {
            tau: economy.tau0.clone(),
            tm: economy.tm0.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Convergence tolerance on the maximum relative excess demand.
    pub tol: f64,
    /// Outer iteration cap.
    pub max_iter: usize,
    /// Tolerance of the inner price/unit-cost fixed point.
    pub price_tol: f64,
    /// Initial damping of the factor-price update.
    pub damping: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
            price_tol: 1e-10,
            damping: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub residual: f64,
}

/// One period's solved equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub wages: Vec<f64>,
    pub rentals: Vec<f64>,
    /// Unit input-bundle costs, region x sector.
    pub unit_costs: RsGrid,
    /// Commodity prices, region x sector.
    pub prices: RsGrid,
    /// Consumer price index per region.
    pub consumer_price: Vec<f64>,
    /// Investment price per region.
    pub investment_price: Vec<f64>,
    /// Trade shares, source x dest x sector; destination columns sum to 1.
    pub trade_shares: BilateralGrid,
    /// Expenditure by agent, region x sector.
    pub expenditure_consumption: RsGrid,
    pub expenditure_investment: RsGrid,
    pub expenditure_intermediate: RsGrid,
    /// Gross sales of producers, region x sector.
    pub sales: RsGrid,
    /// Gross income per region.
    pub income: Vec<f64>,
    /// Bertrand profits, region x sector.
    pub profits: RsGrid,
    /// Tariff revenue rebated to each region's household.
    pub transfers: Vec<f64>,
    /// Real investment quantity per region (spending over the investment price).
    pub investment: Vec<f64>,
    /// Realized trade-balance-to-income ratios (last region is the residual).
    pub tb_realized: Vec<f64>,
    pub convergence: Convergence,
}

impl EquilibriumSolution {
    /// Total expenditure of a region on a commodity.
    pub fn expenditure(&self, region: usize, sector: usize) -> f64 {
        self.expenditure_consumption.get(region, sector)
            + self.expenditure_investment.get(region, sector)
            + self.expenditure_intermediate.get(region, sector)
    }

    /// Real income `Y / P_c` per region.
    pub fn real_income(&self, region: usize) -> f64 {
        self.income[region] / self.consumer_price[region]
    }

    /// Gross bilateral trade value for one (source, dest) pair, all sectors.
    pub fn trade_value(&self, source: usize, dest: usize) -> f64 {
        (0..self.prices.sectors())
            .map(|i| self.trade_shares.get(source, dest, i) * self.expenditure(dest, i))
            .sum()
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("no convergence after {iterations} iterations: residual {residual:.3e} at {worst}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        worst: String,
    },
    #[error("price system did not converge after {0} iterations")]
    PriceSystemDiverged(usize),
    #[error("non-positive price: {0}")]
    NonPositivePrice(String),
    #[error("price index diverges: theta {theta} <= sigma - 1 = {limit}")]
    DivergentIndex { theta: f64, limit: f64 },
    #[error("negative investment in region {0}: savings below trade-balance rate")]
    NegativeInvestment(String),
    #[error("tariffs owed by producers of ({region}, {sector}) exceed their cost share of sales")]
    TariffExceedsCostShare { region: String, sector: String },
    #[error("invalid state: {0}")]
    InvalidState(String),
}

// ---------------------------------------------------------------------------
// Per-operation building blocks
// ---------------------------------------------------------------------------

/// Cost of the unit input bundle: CES(rho) over the factor-price aggregate
/// (CES(nu) of wage and rental) and the intermediate-price aggregate
/// (CES(mu) over commodity prices with cost-share weights).
#[allow(clippy::too_many_arguments)]
pub fn unit_cost(
    wage: f64,
    rental: f64,
    prices: &[f64],
    psi_f: f64,
    psi_m: f64,
    psi_k: f64,
    psi_l: f64,
    eta_row: &[f64],
    rho: f64,
    nu: f64,
    mu: f64,
) -> Result<f64, SolveError> {
    if !(wage > 0.0 && rental > 0.0) || prices.iter().any(|&p| !(p > 0.0)) {
        return Err(SolveError::NonPositivePrice(format!(
            "unit cost inputs must be positive (w={wage}, r={rental})"
        )));
    }
    let pf = ces_cost2(psi_k, rental, psi_l, wage, nu);
    let pm = ces_cost(eta_row, prices, mu);
    Ok(ces_cost2(psi_f, pf, psi_m, pm, rho))
}

/// Landed input-bundle cost `tm * tau * c`.
pub fn landed_cost(unit_cost: f64, tau: f64, tm: f64) -> f64 {
    tm * tau * unit_cost
}

/// Commodity price `Gamma1 * Phi^(-1/theta)` with
/// `Phi = sum_s lambda_s * xtilde_s^(-theta)`.
pub fn price_index(
    lambda: &[f64],
    xtilde: &[f64],
    theta: f64,
    sigma: f64,
) -> Result<f64, SolveError> {
    if theta <= sigma - 1.0 {
        return Err(SolveError::DivergentIndex {
            theta,
            limit: sigma - 1.0,
        });
    }
    let phi = phi_sum(lambda, xtilde, theta);
    if !(phi > 0.0) {
        return Err(SolveError::NonPositivePrice(format!(
            "degenerate price aggregate Phi = {phi}"
        )));
    }
    Ok(gamma1(theta, sigma) * phi.powf(-1.0 / theta))
}

fn phi_sum(lambda: &[f64], xtilde: &[f64], theta: f64) -> f64 {
    lambda
        .iter()
        .zip(xtilde)
        .map(|(&l, &x)| {
            if l > 0.0 && x.is_finite() {
                l * x.powf(-theta)
            } else {
                0.0
            }
        })
        .sum()
}

/// Expenditure shares by source, `pi_s = lambda_s xtilde_s^(-theta) / Phi`.
/// Intermediate-use shares equal final-use shares, so one grid serves all
/// agents.
pub fn trade_shares(lambda: &[f64], xtilde: &[f64], theta: f64) -> Vec<f64> {
    let phi = phi_sum(lambda, xtilde, theta);
    lambda
        .iter()
        .zip(xtilde)
        .map(|(&l, &x)| {
            if l > 0.0 && x.is_finite() {
                l * x.powf(-theta) / phi
            } else {
                0.0
            }
        })
        .collect()
}

/// Bertrand profits of a source: `1/(1+theta)` of gross sales
/// `sum_d pi_sd e_d`.
pub fn profits(pi_to_dest: &[f64], expenditure: &[f64], theta: f64) -> f64 {
    let sales: f64 = pi_to_dest.iter().zip(expenditure).map(|(p, e)| p * e).sum();
    sales / (1.0 + theta)
}

/// Cobb-Douglas consumption demands and the consumer price index.
pub fn consumer_demand(
    income: f64,
    savings: f64,
    kappa: &[f64],
    prices: &[f64],
) -> (Vec<f64>, f64) {
    let quantities = kappa
        .iter()
        .zip(prices)
        .map(|(&k, &p)| (1.0 - savings) * k * income / p)
        .collect();
    let index = cobb_douglas_constant(kappa)
        * kappa
            .iter()
            .zip(prices)
            .map(|(&k, &p)| if k > 0.0 { k * p.ln() } else { 0.0 })
            .sum::<f64>()
            .exp();
    (quantities, index)
}

/// Leontief investment: price `sum chi * p`, real quantity
/// `(s - tb) Y / p_in`, sectoral quantities `chi * in`.
pub fn investment_demand(
    income: f64,
    savings: f64,
    tb: f64,
    chi: &[f64],
    prices: &[f64],
    region: &str,
) -> Result<(f64, Vec<f64>, f64), SolveError> {
    if savings - tb < 0.0 {
        return Err(SolveError::NegativeInvestment(region.to_string()));
    }
    let p_in: f64 = chi.iter().zip(prices).map(|(c, p)| c * p).sum();
    let quantity = (savings - tb) * income / p_in;
    Ok((quantity, chi.iter().map(|c| c * quantity).collect(), p_in))
}

// ---------------------------------------------------------------------------
// Full solver
// ---------------------------------------------------------------------------

/// Scratch holding the price block solved for given factor prices.
struct PriceBlock {
    pf: RsGrid,
    unit_costs: RsGrid,
    prices: RsGrid,
    phi: RsGrid,
}

fn solve_price_block(
    economy: &Economy,
    state: &StateVector,
    policy: &PolicyInputs,
    wages: &[f64],
    rentals: &[f64],
    init: Option<&RsGrid>,
    opts: &SolveOptions,
) -> Result<PriceBlock, SolveError> {
    let (nr, ns) = (economy.n_regions(), economy.n_sectors());
    let pf = RsGrid::from_fn(nr, ns, |d, i| {
        ces_cost2(
            economy.psi_k.get(d, i),
            rentals[d],
            economy.psi_l.get(d, i),
            wages[d],
            economy.nu[i],
        )
    });
    let mut prices = init.cloned().unwrap_or_else(|| RsGrid::filled(nr, ns, 1.0));
    let mut unit_costs = RsGrid::zeros(nr, ns);
    let mut phi = RsGrid::zeros(nr, ns);
    let g1: Vec<f64> = (0..ns)
        .map(|i| gamma1(economy.theta[i], economy.sigma[i]))
        .collect();
    for i in 0..ns {
        if economy.theta[i] <= economy.sigma[i] - 1.0 {
            return Err(SolveError::DivergentIndex {
                theta: economy.theta[i],
                limit: economy.sigma[i] - 1.0,
            });
        }
    }

    for iteration in 0..100_000 {
        for d in 0..nr {
            for i in 0..ns {
                let pm = ces_cost(economy.eta.row(d, i), prices.row(d), economy.mu[i]);
                let c = ces_cost2(
                    economy.psi_f.get(d, i),
                    pf.get(d, i),
                    economy.psi_m.get(d, i),
                    pm,
                    economy.rho[i],
                );
                if !(c > 0.0) || !c.is_finite() {
                    return Err(SolveError::NonPositivePrice(format!(
                        "unit cost {c} at ({}, {})",
                        economy.regions[d], economy.sectors[i]
                    )));
                }
                unit_costs.set(d, i, c);
            }
        }
        let mut max_diff: f64 = 0.0;
        for d in 0..nr {
            for i in 0..ns {
                let mut sum = 0.0;
                for s in 0..nr {
                    let lambda = state.lambda.get(s, i);
                    if lambda > 0.0 {
                        let x =
                            policy.tm.get(s, d, i) * policy.tau.get(s, d, i) * unit_costs.get(s, i);
                        if x.is_finite() {
                            sum += lambda * x.powf(-economy.theta[i]);
                        }
                    }
                }
                if !(sum > 0.0) {
                    return Err(SolveError::NonPositivePrice(format!(
                        "no supplier reaches ({}, {})",
                        economy.regions[d], economy.sectors[i]
                    )));
                }
                phi.set(d, i, sum);
                let p = g1[i] * sum.powf(-1.0 / economy.theta[i]);
                let old = prices.get(d, i);
                max_diff = max_diff.max((p - old).abs() / old);
                prices.set(d, i, p);
            }
        }
        if max_diff < opts.price_tol {
            return Ok(PriceBlock {
                pf,
                unit_costs,
                prices,
                phi,
            });
        }
        if iteration == 99_999 {
            return Err(SolveError::PriceSystemDiverged(iteration + 1));
        }
    }
    unreachable!()
}

/// Solves one period's static equilibrium.
pub fn solve_static(
    economy: &Economy,
    state: &StateVector,
    policy: &PolicyInputs,
    opts: &SolveOptions,
) -> Result<EquilibriumSolution, SolveError> {
    solve_static_warm(economy, state, policy, opts, None)
}

/// As [`solve_static`] but optionally warm-started from a previous solution
/// (used along simulation paths; the converged result is tolerance-identical).
pub fn solve_static_warm(
    economy: &Economy,
    state: &StateVector,
    policy: &PolicyInputs,
    opts: &SolveOptions,
    warm: Option<&EquilibriumSolution>,
) -> Result<EquilibriumSolution, SolveError> {
    state.check_positive().map_err(SolveError::InvalidState)?;
    let (nr, ns) = (economy.n_regions(), economy.n_sectors());

    let mut wages: Vec<f64> = warm.map_or_else(|| vec![1.0; nr], |w| w.wages.clone());
    let mut rentals: Vec<f64> = warm.map_or_else(|| vec![1.0; nr], |w| w.rentals.clone());
    let mut price_guess: Option<RsGrid> = warm.map(|w| w.prices.clone());
    let mut expenditure = warm.map_or_else(
        || {
            RsGrid::from_fn(nr, ns, |d, i| {
                economy.base_income[d] * economy.kappa.get(d, i)
            })
        },
        |w| RsGrid::from_fn(nr, ns, |d, i| w.expenditure(d, i)),
    );

    // Rescale the start onto the numeraire.
    let anchor: f64 = (0..nr)
        .map(|d| wages[d] * state.labor[d] + rentals[d] * state.capital[d])
        .sum();
    let scale0 = economy.numeraire / anchor;
    wages.iter_mut().for_each(|w| *w *= scale0);
    rentals.iter_mut().for_each(|r| *r *= scale0);
    if let Some(p) = &mut price_guess {
        *p = p.scale(scale0);
    }
    expenditure = expenditure.scale(scale0);

    let mut damping = vec![opts.damping; 2 * nr];
    let mut prev_excess = vec![0.0; 2 * nr];
    let mut residual = f64::INFINITY;
    let mut worst = String::new();

    for iteration in 0..opts.max_iter {
        let block = solve_price_block(
            economy,
            state,
            policy,
            &wages,
            &rentals,
            price_guess.as_ref(),
            opts,
        )?;

        // Trade shares for the current prices.
        let mut pi = BilateralGrid::zeros(nr, ns);
        for d in 0..nr {
            for i in 0..ns {
                for s in 0..nr {
                    let lambda = state.lambda.get(s, i);
                    if lambda > 0.0 {
                        let x = policy.tm.get(s, d, i)
                            * policy.tau.get(s, d, i)
                            * block.unit_costs.get(s, i);
                        if x.is_finite() {
                            pi.set(
                                s,
                                d,
                                i,
                                lambda * x.powf(-economy.theta[i]) / block.phi.get(d, i),
                            );
                        }
                    }
                }
            }
        }

        // Income-expenditure block: linear in expenditure given prices.
        let mut income = vec![0.0; nr];
        let mut tb = economy.tb_rate.clone();
        let mut sales = RsGrid::zeros(nr, ns);
        let mut transfers = vec![0.0; nr];
        let inv_price: Vec<f64> = (0..nr)
            .map(|d| {
                (0..ns)
                    .map(|i| economy.chi.get(d, i) * block.prices.get(d, i))
                    .sum()
            })
            .collect();
        let mut e_next = RsGrid::zeros(nr, ns);
        let mut inner_converged = false;
        for _ in 0..100_000 {
            for s in 0..nr {
                for i in 0..ns {
                    let mut total = 0.0;
                    for d in 0..nr {
                        total += pi.get(s, d, i) * expenditure.get(d, i);
                    }
                    sales.set(s, i, total);
                }
            }
            for d in 0..nr {
                let mut t = 0.0;
                for s in 0..nr {
                    for i in 0..ns {
                        let tm = policy.tm.get(s, d, i);
                        if tm > 1.0 {
                            t += (tm - 1.0) / tm * pi.get(s, d, i) * expenditure.get(d, i);
                        }
                    }
                }
                transfers[d] = t;
            }
            for d in 0..nr {
                let profit: f64 = (0..ns)
                    .map(|i| sales.get(d, i) / (1.0 + economy.theta[i]))
                    .sum();
                income[d] = wages[d] * state.labor[d]
                    + rentals[d] * state.capital[d]
                    + transfers[d]
                    + profit;
            }
            if nr > 1 {
                let head: f64 = (0..nr - 1).map(|d| tb[d] * income[d]).sum();
                tb[nr - 1] = -head / income[nr - 1];
            } else {
                tb[0] = 0.0;
            }

            for d in 0..nr {
                if economy.savings_rate[d] - tb[d] < 0.0 {
                    return Err(SolveError::NegativeInvestment(economy.regions[d].clone()));
                }
                // Producers' input spending: cost share of gross sales minus
                // tariffs paid abroad.
                let mut interm_by_supplier = vec![0.0; ns];
                for j in 0..ns {
                    let gross = sales.get(d, j) * economy.theta[j] / (1.0 + economy.theta[j]);
                    let mut paid = 0.0;
                    for dest in 0..nr {
                        let tm = policy.tm.get(d, dest, j);
                        if tm > 1.0 {
                            paid += (tm - 1.0) / tm * pi.get(d, dest, j) * expenditure.get(dest, j);
                        }
                    }
                    let input_spend = gross - paid;
                    if input_spend < 0.0 {
                        return Err(SolveError::TariffExceedsCostShare {
                            region: economy.regions[d].clone(),
                            sector: economy.sectors[j].clone(),
                        });
                    }
                    let pm = ces_cost(economy.eta.row(d, j), block.prices.row(d), economy.mu[j]);
                    let m_share = ces_value_share2(
                        economy.psi_m.get(d, j),
                        pm,
                        block.unit_costs.get(d, j),
                        economy.rho[j],
                    );
                    let interm_total = input_spend * m_share;
                    for i in 0..ns {
                        let w = economy.eta.get(d, j, i);
                        if w > 0.0 {
                            let share = if economy.mu[j] == 1.0 {
                                w
                            } else {
                                w * (block.prices.get(d, i) / pm).powf(1.0 - economy.mu[j])
                            };
                            interm_by_supplier[i] += interm_total * share;
                        }
                    }
                }
                for i in 0..ns {
                    let consumption =
                        (1.0 - economy.savings_rate[d]) * economy.kappa.get(d, i) * income[d];
                    let invest = (economy.savings_rate[d] - tb[d])
                        * income[d]
                        * economy.chi.get(d, i)
                        * block.prices.get(d, i)
                        / inv_price[d];
                    e_next.set(d, i, consumption + invest + interm_by_supplier[i]);
                }
            }
            let diff = e_next.max_rel_diff(&expenditure);
            std::mem::swap(&mut expenditure, &mut e_next);
            if diff < 1e-12 {
                inner_converged = true;
                break;
            }
        }
        if !inner_converged {
            return Err(SolveError::NoConvergence {
                iterations: iteration,
                residual: f64::NAN,
                worst: "income-expenditure block".into(),
            });
        }

        // Factor demands from input spending.
        let mut labor_demand = vec![0.0; nr];
        let mut capital_demand = vec![0.0; nr];
        for d in 0..nr {
            for j in 0..ns {
                let gross = sales.get(d, j) * economy.theta[j] / (1.0 + economy.theta[j]);
                let mut paid = 0.0;
                for dest in 0..nr {
                    let tm = policy.tm.get(d, dest, j);
                    if tm > 1.0 {
                        paid += (tm - 1.0) / tm * pi.get(d, dest, j) * expenditure.get(dest, j);
                    }
                }
                let input_spend = gross - paid;
                let f_share = ces_value_share2(
                    economy.psi_f.get(d, j),
                    block.pf.get(d, j),
                    block.unit_costs.get(d, j),
                    economy.rho[j],
                );
                let factor_spend = input_spend * f_share;
                let l_share = ces_value_share2(
                    economy.psi_l.get(d, j),
                    wages[d],
                    block.pf.get(d, j),
                    economy.nu[j],
                );
                labor_demand[d] += factor_spend * l_share / wages[d];
                capital_demand[d] += factor_spend * (1.0 - l_share) / rentals[d];
            }
        }

        residual = 0.0;
        worst.clear();
        for d in 0..nr {
            let zl = labor_demand[d] / state.labor[d] - 1.0;
            let zk = capital_demand[d] / state.capital[d] - 1.0;
            if zl.abs() > residual {
                residual = zl.abs();
                worst = format!("labor market in {}", economy.regions[d]);
            }
            if zk.abs() > residual {
                residual = zk.abs();
                worst = format!("capital market in {}", economy.regions[d]);
            }
        }

        if residual < opts.tol {
            let mut consumer_price = vec![0.0; nr];
            let mut e_c = RsGrid::zeros(nr, ns);
            let mut e_in = RsGrid::zeros(nr, ns);
            let mut e_m = RsGrid::zeros(nr, ns);
            let mut investment = vec![0.0; nr];
            for d in 0..nr {
                let (_, index) = consumer_demand(
                    income[d],
                    economy.savings_rate[d],
                    economy.kappa.row(d),
                    block.prices.row(d),
                );
                consumer_price[d] = index;
                let (quantity, _, _) = investment_demand(
                    income[d],
                    economy.savings_rate[d],
                    tb[d],
                    economy.chi.row(d),
                    block.prices.row(d),
                    &economy.regions[d],
                )?;
                investment[d] = quantity;
                for i in 0..ns {
                    let c = (1.0 - economy.savings_rate[d]) * economy.kappa.get(d, i) * income[d];
                    let inv = (economy.savings_rate[d] - tb[d])
                        * income[d]
                        * economy.chi.get(d, i)
                        * block.prices.get(d, i)
                        / inv_price[d];
                    e_c.set(d, i, c);
                    e_in.set(d, i, inv);
                    e_m.set(d, i, expenditure.get(d, i) - c - inv);
                }
            }
            let profits_grid =
                RsGrid::from_fn(nr, ns, |d, i| sales.get(d, i) / (1.0 + economy.theta[i]));
            return Ok(EquilibriumSolution {
                wages,
                rentals,
                unit_costs: block.unit_costs,
                prices: block.prices,
                consumer_price,
                investment_price: inv_price,
                trade_shares: pi,
                expenditure_consumption: e_c,
                expenditure_investment: e_in,
                expenditure_intermediate: e_m,
                sales,
                income,
                profits: profits_grid,
                transfers,
                investment,
                tb_realized: tb,
                convergence: Convergence {
                    iterations: iteration + 1,
                    residual,
                },
            });
        }

        // Damped multiplicative update, with per-market halving on
        // oscillation and a slow recovery otherwise.
        for d in 0..nr {
            let zl = labor_demand[d] / state.labor[d] - 1.0;
            let zk = capital_demand[d] / state.capital[d] - 1.0;
            for (slot, z, price) in [(2 * d, zl, &mut wages[d]), (2 * d + 1, zk, &mut rentals[d])] {
                if prev_excess[slot] * z < 0.0 {
                    damping[slot] = (damping[slot] * 0.5).max(0.01);
                } else {
                    damping[slot] = (damping[slot] * 1.08).min(opts.damping);
                }
                prev_excess[slot] = z;
                *price *= (1.0 + z).powf(damping[slot]);
            }
        }
        let anchor: f64 = (0..nr)
            .map(|d| wages[d] * state.labor[d] + rentals[d] * state.capital[d])
            .sum();
        let scale = economy.numeraire / anchor;
        wages.iter_mut().for_each(|w| *w *= scale);
        rentals.iter_mut().for_each(|r| *r *= scale);
        expenditure = expenditure.scale(scale);
        price_guess = Some(block.prices.scale(scale));
    }

    Err(SolveError::NoConvergence {
        iterations: opts.max_iter,
        residual,
        worst,
    })
}

/// Reconstructs the base-year accounting snapshot implied by an economy:
/// solves the initial state under baseline policy and reads every flow table
/// off the solution. For a calibrated economy this reproduces the snapshot
/// the economy was built from, to solver tolerance.
pub fn harvest_flows(
    economy: &Economy,
    opts: &SolveOptions,
) -> Result<crate::economy::BaselineFlows, SolveError> {
    let state = economy.initial_state();
    let policy = PolicyInputs::baseline(economy);
    let solution = solve_static(economy, &state, &policy, opts)?;
    Ok(flows_from_solution(economy, &solution, &policy))
}

/// Reads the accounting snapshot off a solved equilibrium.
pub fn flows_from_solution(
    economy: &Economy,
    solution: &EquilibriumSolution,
    policy: &PolicyInputs,
) -> crate::economy::BaselineFlows {
    let (nr, ns) = (economy.n_regions(), economy.n_sectors());
    let trade = BilateralGrid::from_fn(nr, ns, |s, d, i| {
        solution.trade_shares.get(s, d, i) * solution.expenditure(d, i)
    });
    let tariff = BilateralGrid::from_fn(nr, ns, |s, d, i| {
        let tm = policy.tm.get(s, d, i);
        (tm - 1.0) / tm * trade.get(s, d, i)
    });
    let mut labor = RsGrid::zeros(nr, ns);
    let mut capital = RsGrid::zeros(nr, ns);
    let mut intermediates = crate::grid::IoGrid::zeros(nr, ns);
    for d in 0..nr {
        for j in 0..ns {
            let gross = solution.sales.get(d, j) * economy.theta[j] / (1.0 + economy.theta[j]);
            let paid: f64 = (0..nr).map(|dest| tariff.get(d, dest, j)).sum();
            let input_spend = gross - paid;
            let pm = ces_cost(economy.eta.row(d, j), solution.prices.row(d), economy.mu[j]);
            let pf = ces_cost2(
                economy.psi_k.get(d, j),
                solution.rentals[d],
                economy.psi_l.get(d, j),
                solution.wages[d],
                economy.nu[j],
            );
            let m_share = ces_value_share2(
                economy.psi_m.get(d, j),
                pm,
                solution.unit_costs.get(d, j),
                economy.rho[j],
            );
            let f_share = ces_value_share2(
                economy.psi_f.get(d, j),
                pf,
                solution.unit_costs.get(d, j),
                economy.rho[j],
            );
            let l_share = ces_value_share2(
                economy.psi_l.get(d, j),
                solution.wages[d],
                pf,
                economy.nu[j],
            );
            labor.set(d, j, input_spend * f_share * l_share);
            capital.set(d, j, input_spend * f_share * (1.0 - l_share));
            for i in 0..ns {
                let w = economy.eta.get(d, j, i);
                if w > 0.0 {
                    let share = if economy.mu[j] == 1.0 {
                        w
                    } else {
                        w * (solution.prices.get(d, i) / pm).powf(1.0 - economy.mu[j])
                    };
                    intermediates.set(d, j, i, input_spend * m_share * share);
                }
            }
        }
    }
    let profit = solution.profits.clone();
    crate::economy::BaselineFlows {
        regions: economy.regions.clone(),
        sectors: economy.sectors.clone(),
        trade,
        labor,
        capital,
        profit,
        final_demand: solution.expenditure_consumption.clone(),
        investment: solution.expenditure_investment.clone(),
        intermediates,
        tariff,
    }
}

/// Trade balance implied by a solution's flows: export receipts net of
/// tariffs paid minus import payments net of tariff revenue received.
pub fn trade_balance(solution: &EquilibriumSolution, policy: &PolicyInputs, region: usize) -> f64 {
    let nr = solution.wages.len();
    let ns = solution.prices.sectors();
    let mut balance = solution.transfers[region];
    for i in 0..ns {
        for other in 0..nr {
            // Exports to every destination, gross, minus tariffs paid there.
            let export =
                solution.trade_shares.get(region, other, i) * solution.expenditure(other, i);
            let tm_out = policy.tm.get(region, other, i);
            balance += export - (tm_out - 1.0) / tm_out * export;
        }
        balance -= solution.expenditure(region, i);
    }
    balance
}
