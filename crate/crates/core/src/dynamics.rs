//! State transitions across periods and full simulation paths.
//!
//! Periods are strictly sequential: each period's static equilibrium feeds
//! capital accumulation and the idea-diffusion law of motion that produce the
//! next period's state. Diffusion uses the previous period's trade shares
//! (insights take one period to materialize), so the model solves
//! recursively.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::economy::{Economy, StateVector};
use crate::equilibrium::{
    solve_static_warm, EquilibriumSolution, PolicyInputs, SolveError, SolveOptions,
};
use crate::grid::RsGrid;
use crate::math::gamma_one_minus;
use crate::scenario::{apply_shock, ResolvedShock};

/// Capital accumulation: `k_next = (1 - delta) k_prev + investment`.
pub fn capital_step(k_prev: f64, delta: f64, investment: f64) -> f64 {
    (1.0 - delta) * k_prev + investment
}

/// Growth of the idea arrival rate: `alpha * (1 + growth)`.
pub fn alpha_step(alpha_prev: f64, growth: f64) -> f64 {
    alpha_prev * (1.0 + growth)
}

/// One step of the idea-diffusion law of motion:
///
/// `lambda'_{d,i} = lambda_{d,i} + alpha * Gamma(1-beta) *
///     sum_j eta_{d,i,j} sum_s pi_{s,d,j}^(1-beta) lambda_{s,j}^beta`
///
/// `pi_prev` are the lagged trade shares (intermediate-use shares equal
/// final-use shares, so the supplying-sector grid serves every using sector).
pub fn diffusion_step(
    lambda_prev: &RsGrid,
    eta: &crate::grid::IoGrid,
    pi_prev: &crate::grid::BilateralGrid,
    alpha: f64,
    beta: f64,
) -> RsGrid {
    let (nr, ns) = (lambda_prev.regions(), lambda_prev.sectors());
    let constant = alpha * gamma_one_minus(beta);
    // Supplier quality sum_s pi^(1-beta) lambda^beta depends on (d, j) only.
    let supplier_quality = RsGrid::from_fn(nr, ns, |d, j| {
        let mut total = 0.0;
        for s in 0..nr {
            let pi = pi_prev.get(s, d, j);
            if pi > 0.0 {
                total += pi.powf(1.0 - beta) * lambda_prev.get(s, j).powf(beta);
            }
        }
        total
    });
    RsGrid::from_fn(nr, ns, |d, i| {
        let mut delta = 0.0;
        for j in 0..ns {
            let weight = eta.get(d, i, j);
            if weight > 0.0 {
                delta += weight * supplier_quality.get(d, j);
            }
        }
        lambda_prev.get(d, i) + constant * delta
    })
}

/// A solved simulation path: one state and one equilibrium per period, plus
/// derived reporting series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationPath {
    pub states: Vec<StateVector>,
    pub solutions: Vec<EquilibriumSolution>,
    /// Real income `Y / P_c`, period x region.
    pub real_income: Vec<Vec<f64>>,
    /// Nominal gross income, period x region.
    pub gdp: Vec<Vec<f64>>,
    /// Gross bilateral trade values, period x source x dest (all sectors).
    pub trade_values: Vec<Vec<Vec<f64>>>,
}

impl SimulationPath {
    pub fn horizon(&self) -> usize {
        self.states.len()
    }

    /// Real income series of one region.
    pub fn real_income_series(&self, region: usize) -> Vec<f64> {
        self.real_income.iter().map(|row| row[region]).collect()
    }

    /// Real GDP per capita series of one region.
    pub fn real_gdp_per_capita_series(&self, economy: &Economy, region: usize) -> Vec<f64> {
        self.real_income
            .iter()
            .enumerate()
            .map(|(t, row)| row[region] / economy.population_at(t)[region])
            .collect()
    }

    /// Productivity series of one (region, sector) cell.
    pub fn lambda_series(&self, region: usize, sector: usize) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| s.lambda.get(region, sector))
            .collect()
    }

    /// Trade value series between two regions (both directions summed).
    pub fn bilateral_trade_series(&self, a: usize, b: usize) -> Vec<f64> {
        self.trade_values
            .iter()
            .map(|g| g[a][b] + g[b][a])
            .collect()
    }

    /// Verifies period contiguity and the laws of motion linking consecutive
    /// states; returns the first inconsistency.
    pub fn check_consistency(&self, economy: &Economy) -> Result<(), String> {
        for (t, state) in self.states.iter().enumerate() {
            if state.period != t {
                return Err(format!("state at slot {t} has period {}", state.period));
            }
        }
        for t in 0..self.states.len().saturating_sub(1) {
            let solution = &self.solutions[t];
            let state = &self.states[t];
            let next = &self.states[t + 1];
            for d in 0..economy.n_regions() {
                let expected =
                    capital_step(state.capital[d], economy.delta[d], solution.investment[d]);
                if (next.capital[d] - expected).abs() > 1e-9 * expected.abs().max(1.0) {
                    return Err(format!(
                        "capital law of motion violated in region {d} at period {t}"
                    ));
                }
            }
            let alpha_next = alpha_step(state.alpha, economy.alpha_growth);
            let expected_lambda = diffusion_step(
                &state.lambda,
                &economy.eta,
                &solution.trade_shares,
                alpha_next,
                economy.beta,
            );
            if expected_lambda.max_rel_diff(&next.lambda) > 1e-9 {
                return Err(format!("diffusion law of motion violated at period {t}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("period {period}: {source}")]
    Solve {
        period: usize,
        #[source]
        source: SolveError,
    },
    #[error("state became invalid entering period {period}: {message}")]
    InvalidState { period: usize, message: String },
}

/// Runs the recursive-dynamic simulation: for each period, solve the static
/// equilibrium, then advance capital (accumulation), productivity (diffusion
/// with lagged shares), labor (exogenous path), and the arrival rate.
///
/// `shock` is an optional resolved policy shock; `None` simulates the
/// baseline. `horizon` overrides the economy's horizon when given.
pub fn simulate(
    economy: &Economy,
    shock: Option<&ResolvedShock>,
    horizon: Option<usize>,
    opts: &SolveOptions,
) -> Result<SimulationPath, SimulateError> {
    let horizon = horizon.unwrap_or(economy.horizon).max(1);
    let nr = economy.n_regions();
    let baseline = PolicyInputs::baseline(economy);

    let mut states = Vec::with_capacity(horizon);
    let mut solutions: Vec<EquilibriumSolution> = Vec::with_capacity(horizon);
    let mut real_income = Vec::with_capacity(horizon);
    let mut gdp = Vec::with_capacity(horizon);
    let mut trade_values = Vec::with_capacity(horizon);

    let mut state = economy.initial_state();
    for t in 0..horizon {
        state
            .check_positive()
            .map_err(|message| SimulateError::InvalidState { period: t, message })?;
        let policy = match shock {
            Some(s) => apply_shock(&baseline, s, t),
            None => baseline.clone(),
        };
        let solution = solve_static_warm(economy, &state, &policy, opts, solutions.last())
            .map_err(|source| SimulateError::Solve { period: t, source })?;

        real_income.push((0..nr).map(|d| solution.real_income(d)).collect::<Vec<_>>());
        gdp.push(solution.income.clone());
        trade_values.push(
            (0..nr)
                .map(|s| {
                    (0..nr)
                        .map(|d| solution.trade_value(s, d))
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>(),
        );

        if t + 1 < horizon {
            let alpha_next = alpha_step(state.alpha, economy.alpha_growth);
            let next = StateVector {
                period: t + 1,
                lambda: diffusion_step(
                    &state.lambda,
                    &economy.eta,
                    &solution.trade_shares,
                    alpha_next,
                    economy.beta,
                ),
                capital: (0..nr)
                    .map(|d| {
                        capital_step(state.capital[d], economy.delta[d], solution.investment[d])
                    })
                    .collect(),
                labor: economy.labor_at(t + 1).to_vec(),
                alpha: alpha_next,
            };
            states.push(std::mem::replace(&mut state, next));
        } else {
            states.push(state.clone());
        }
        solutions.push(solution);
    }

    Ok(SimulationPath {
        states,
        solutions,
        real_income,
        gdp,
        trade_values,
    })
}
