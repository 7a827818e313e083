//! Diffusion-efficiency analysis: the idea-diffusion objective, the
//! planner-optimal trade shares, the market allocation, and the
//! between-sector distortion statistic (aleph).
//!
//! All quantities describe a single destination: `lambda[s][j]` are supplier
//! productivities, `xtilde[s][j]` landed input-bundle costs into the
//! destination, and `eta[i][j]` the destination's intermediate cost shares.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::RsGrid;
use crate::math::gamma_one_minus;

/// Inputs of the diffusion analysis for one destination region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionProblem {
    /// Supplier productivities, source region x sector.
    pub lambda: RsGrid,
    /// Landed costs into the destination, source region x sector.
    pub xtilde: RsGrid,
    /// Intermediate cost shares, using-sector x supplying-sector; rows sum
    /// to one.
    pub eta: Vec<Vec<f64>>,
    /// Fréchet dispersion per sector.
    pub theta: Vec<f64>,
    /// Diffusion sensitivity, in [0, 1).
    pub beta: f64,
}

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error("problem requires {0} but has {1} regions/sectors")]
    WrongShape(&'static str, String),
    #[error("trade shares must be a simplex per (using, supplying) pair: {0}")]
    BadShares(String),
}

impl DiffusionProblem {
    pub fn n_regions(&self) -> usize {
        self.lambda.regions()
    }

    pub fn n_sectors(&self) -> usize {
        self.lambda.sectors()
    }

    fn validate(&self) -> Result<(), DiffusionError> {
        let (nr, ns) = (self.n_regions(), self.n_sectors());
        if self.xtilde.regions() != nr
            || self.xtilde.sectors() != ns
            || self.eta.len() != ns
            || self.eta.iter().any(|row| row.len() != ns)
            || self.theta.len() != ns
        {
            return Err(DiffusionError::WrongShape(
                "consistent grids",
                format!("{nr} regions x {ns} sectors"),
            ));
        }
        Ok(())
    }
}

/// The diffusion objective for one using sector:
/// `sum_j eta[i][j] sum_s pi[j][s]^(1-beta) lambda[s][j]^beta`.
///
/// `pi[j][s]` are candidate expenditure shares by supplying sector and
/// source. With `beta = 0` the value is 1 for any valid shares.
pub fn diffusion_value(pi: &[Vec<f64>], problem: &DiffusionProblem, using_sector: usize) -> f64 {
    let beta = problem.beta;
    let mut value = 0.0;
    for (j, shares) in pi.iter().enumerate() {
        let weight = problem.eta[using_sector][j];
        if weight == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for (s, &share) in shares.iter().enumerate() {
            if share > 0.0 {
                inner += share.powf(1.0 - beta) * problem.lambda.get(s, j).powf(beta);
            }
        }
        value += weight * inner;
    }
    value
}

/// The increment of the law of motion implied by candidate shares:
/// `alpha * Gamma(1-beta) * diffusion_value`.
pub fn diffusion_increment(
    pi: &[Vec<f64>],
    problem: &DiffusionProblem,
    using_sector: usize,
    alpha: f64,
) -> f64 {
    alpha * gamma_one_minus(problem.beta) * diffusion_value(pi, problem, using_sector)
}

/// Planner-optimal shares: `pi*[j][s] = lambda[s][j] / sum_k lambda[k][j]`.
/// The optimum is independent of the using sector and of the cost shares.
pub fn optimal_shares(problem: &DiffusionProblem) -> Vec<Vec<f64>> {
    let (nr, ns) = (problem.n_regions(), problem.n_sectors());
    (0..ns)
        .map(|j| {
            let total: f64 = (0..nr).map(|s| problem.lambda.get(s, j)).sum();
            (0..nr).map(|s| problem.lambda.get(s, j) / total).collect()
        })
        .collect()
}

/// Market shares implied by landed costs:
/// `pi[j][s] = lambda[s][j] xtilde[s][j]^(-theta_j) / Phi_j`.
pub fn actual_shares(problem: &DiffusionProblem) -> Vec<Vec<f64>> {
    let (nr, ns) = (problem.n_regions(), problem.n_sectors());
    (0..ns)
        .map(|j| {
            let weights: Vec<f64> = (0..nr)
                .map(|s| {
                    let x = problem.xtilde.get(s, j);
                    let l = problem.lambda.get(s, j);
                    if l > 0.0 && x.is_finite() {
                        l * x.powf(-problem.theta[j])
                    } else {
                        0.0
                    }
                })
                .collect();
            let phi: f64 = weights.iter().sum();
            weights.into_iter().map(|w| w / phi).collect()
        })
        .collect()
}

/// Between-sector distortion statistic: the ratio of the market to the
/// planner cross-sector expenditure ratios, for sources `(s, n)` and sectors
/// `(j, p)`:
///
/// `aleph = xtilde[s][j]^(-theta_j) / xtilde[n][p]^(-theta_p)
///        * (sum_k lambda[k][j]) / Phi_j * Phi_p / (sum_k lambda[k][p])`
///
/// A value of 1 means deviations from the diffusion optimum are proportional
/// across the two cells; above 1, relative spending on `(s, j)` exceeds the
/// optimum.
pub fn aleph(
    problem: &DiffusionProblem,
    source_s: usize,
    source_n: usize,
    sector_j: usize,
    sector_p: usize,
) -> f64 {
    problem.validate().expect("malformed diffusion problem");
    let phi = |j: usize| -> f64 {
        (0..problem.n_regions())
            .map(|k| {
                let x = problem.xtilde.get(k, j);
                let l = problem.lambda.get(k, j);
                if l > 0.0 && x.is_finite() {
                    l * x.powf(-problem.theta[j])
                } else {
                    0.0
                }
            })
            .sum()
    };
    let lambda_sum = |j: usize| -> f64 {
        (0..problem.n_regions())
            .map(|k| problem.lambda.get(k, j))
            .sum()
    };
    let cost_gap = problem
        .xtilde
        .get(source_s, sector_j)
        .powf(-problem.theta[sector_j])
        / problem
            .xtilde
            .get(source_n, sector_p)
            .powf(-problem.theta[sector_p]);
    cost_gap * lambda_sum(sector_j) / phi(sector_j) * phi(sector_p) / lambda_sum(sector_p)
}

/// The two-by-two form: domestic cells of both sectors (home region is
/// source 0), i.e. the three-factor product of a domestic cost gap and the
/// two industry-wise cost-induced deviations.
pub fn aleph_two_by_two(problem: &DiffusionProblem, sector_i: usize, sector_other: usize) -> f64 {
    aleph(problem, 0, 0, sector_i, sector_other)
}

/// Partial derivative of the diffusion increment with respect to the home
/// share in supplying sector `j`, for a two-region problem (foreign share is
/// the complement):
///
/// `alpha * Gamma(1-beta) * eta[i][j] * (1-beta) *
///  [pi_h^(-beta) lambda_h^beta - (1-pi_h)^(-beta) lambda_f^beta]`
pub fn two_region_marginal(
    problem: &DiffusionProblem,
    using_sector: usize,
    supplying_sector: usize,
    pi_home: f64,
    alpha: f64,
) -> f64 {
    assert_eq!(
        problem.n_regions(),
        2,
        "marginal is for two-region problems"
    );
    let beta = problem.beta;
    let lambda_h = problem.lambda.get(0, supplying_sector);
    let lambda_f = problem.lambda.get(1, supplying_sector);
    alpha
        * gamma_one_minus(beta)
        * problem.eta[using_sector][supplying_sector]
        * (1.0 - beta)
        * (pi_home.powf(-beta) * lambda_h.powf(beta)
            - (1.0 - pi_home).powf(-beta) * lambda_f.powf(beta))
}

/// Tabulated diffusion surface over the two home shares of a two-by-two
/// problem, with the optimal, market, and autarky points marked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    /// Home share grid in the own sector (x axis).
    pub x: Vec<f64>,
    /// Home share grid in the other sector (y axis).
    pub y: Vec<f64>,
    /// Values, row-major over (x, y).
    pub values: Vec<Vec<f64>>,
    pub optimal: MarkedPoint,
    pub actual: MarkedPoint,
    pub autarky: MarkedPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// Tabulates the diffusion value of using sector 0 over
/// `(pi_h^{own}, pi_h^{other})` for a 2-region, 2-sector problem. Endpoints
/// are included; `0^(1-beta) = 0` for `beta < 1`.
pub fn figure_surface(
    problem: &DiffusionProblem,
    resolution: usize,
) -> Result<Surface, DiffusionError> {
    problem.validate()?;
    if problem.n_regions() != 2 || problem.n_sectors() != 2 {
        return Err(DiffusionError::WrongShape(
            "2 regions x 2 sectors",
            format!("{} x {}", problem.n_regions(), problem.n_sectors()),
        ));
    }
    let n = resolution.max(2);
    let grid: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    let value_at = |own: f64, other: f64| {
        diffusion_value(
            &[vec![own, 1.0 - own], vec![other, 1.0 - other]],
            problem,
            0,
        )
    };

    use rayon::prelude::*;
    let values: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&own| grid.iter().map(|&other| value_at(own, other)).collect())
        .collect();

    let opt = optimal_shares(problem);
    let act = actual_shares(problem);
    let optimal = MarkedPoint {
        x: opt[0][0],
        y: opt[1][0],
        value: value_at(opt[0][0], opt[1][0]),
    };
    let actual = MarkedPoint {
        x: act[0][0],
        y: act[1][0],
        value: value_at(act[0][0], act[1][0]),
    };
    let autarky = MarkedPoint {
        x: 1.0,
        y: 1.0,
        value: value_at(1.0, 1.0),
    };
    Ok(Surface {
        x: grid.clone(),
        y: grid,
        values,
        optimal,
        actual,
        autarky,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn symmetric_2x2(beta: f64, tau: f64) -> DiffusionProblem {
        DiffusionProblem {
            lambda: RsGrid::filled(2, 2, 1.0),
            xtilde: RsGrid::from_fn(2, 2, |s, _| if s == 0 { 1.0 } else { tau }),
            eta: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            theta: vec![4.0, 4.0],
            beta,
        }
    }

    #[test]
    fn beta_zero_value_is_one() {
        let p = symmetric_2x2(0.0, 1.3);
        let pi = vec![vec![0.9, 0.1], vec![0.4, 0.6]];
        assert_relative_eq!(diffusion_value(&pi, &p, 0), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn concentrated_share_closed_form() {
        // pi = (1,0), lambda = (4,9), eta = 1, beta = 0.5: value = sqrt(4) = 2.
        let p = DiffusionProblem {
            lambda: RsGrid::from_fn(2, 1, |s, _| if s == 0 { 4.0 } else { 9.0 }),
            xtilde: RsGrid::filled(2, 1, 1.0),
            eta: vec![vec![1.0]],
            theta: vec![4.0],
            beta: 0.5,
        };
        assert_relative_eq!(
            diffusion_value(&[vec![1.0, 0.0]], &p, 0),
            2.0,
            max_relative = 1e-12
        );
        // Symmetric lambda, even split: sqrt(2 * lambda).
        let q = DiffusionProblem {
            lambda: RsGrid::filled(2, 1, 3.0),
            xtilde: RsGrid::filled(2, 1, 1.0),
            eta: vec![vec![1.0]],
            theta: vec![4.0],
            beta: 0.5,
        };
        assert_relative_eq!(
            diffusion_value(&[vec![0.5, 0.5]], &q, 0),
            (2.0f64 * 3.0).sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn optimal_shares_are_lambda_proportional() {
        let p = DiffusionProblem {
            lambda: RsGrid::from_fn(2, 1, |s, _| if s == 0 { 1.0 } else { 3.0 }),
            xtilde: RsGrid::filled(2, 1, 1.0),
            eta: vec![vec![1.0]],
            theta: vec![4.0],
            beta: 0.44,
        };
        let opt = optimal_shares(&p);
        assert_relative_eq!(opt[0][0], 0.25, max_relative = 1e-12);
        assert_relative_eq!(opt[0][1], 0.75, max_relative = 1e-12);
        let sym = optimal_shares(&symmetric_2x2(0.44, 1.2));
        assert_relative_eq!(sym[0][0], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn actual_shares_home_bias_closed_form() {
        // Symmetric 2x2 with theta=4, tau=1.2: home share 1/(1+1.2^-4).
        let p = symmetric_2x2(0.44, 1.2);
        let act = actual_shares(&p);
        let expected = 1.0 / (1.0 + 1.2f64.powf(-4.0));
        assert_relative_eq!(act[0][0], expected, max_relative = 1e-12);
        assert_relative_eq!(expected, 0.6747, max_relative = 1e-3);
        // tau = 1 gives the frictionless 1/2.
        let free = actual_shares(&symmetric_2x2(0.44, 1.0));
        assert_relative_eq!(free[0][0], 0.5, max_relative = 1e-12);
        // tau -> infinity approaches autarky.
        let closed = actual_shares(&symmetric_2x2(0.44, 1e9));
        assert!(closed[0][0] > 1.0 - 1e-12);
    }

    #[test]
    fn aleph_is_one_under_full_symmetry() {
        let p = symmetric_2x2(0.44, 1.4);
        assert_relative_eq!(aleph_two_by_two(&p, 0, 1), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn aleph_exceeds_one_with_higher_own_trade_cost() {
        // tau_i > tau_{-i}, everything else symmetric.
        let p = DiffusionProblem {
            lambda: RsGrid::filled(2, 2, 1.0),
            xtilde: RsGrid::from_fn(2, 2, |s, i| {
                if s == 0 {
                    1.0
                } else if i == 0 {
                    1.6
                } else {
                    1.2
                }
            }),
            eta: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            theta: vec![4.0, 4.0],
            beta: 0.44,
        };
        assert!(aleph_two_by_two(&p, 0, 1) > 1.0);
        assert!(aleph_two_by_two(&p, 1, 0) < 1.0);
    }

    #[test]
    fn aleph_invariances() {
        let base = DiffusionProblem {
            lambda: RsGrid::from_fn(2, 2, |s, i| 0.5 + (s + 2 * i) as f64 * 0.4),
            xtilde: RsGrid::from_fn(2, 2, |s, i| 1.0 + 0.3 * s as f64 + 0.1 * i as f64),
            eta: vec![vec![0.6, 0.4], vec![0.3, 0.7]],
            theta: vec![4.0, 6.0],
            beta: 0.44,
        };
        let reference = aleph_two_by_two(&base, 0, 1);
        let mut scaled_lambda = base.clone();
        scaled_lambda.lambda = base.lambda.scale(3.7);
        assert_relative_eq!(
            aleph_two_by_two(&scaled_lambda, 0, 1),
            reference,
            max_relative = 1e-12
        );
        let mut scaled_costs = base.clone();
        scaled_costs.xtilde = base.xtilde.scale(2.2);
        assert_relative_eq!(
            aleph_two_by_two(&scaled_costs, 0, 1),
            reference,
            max_relative = 1e-12
        );
    }

    #[test]
    fn surface_maximum_is_the_planner_point() {
        let p = symmetric_2x2(0.44, 1.3);
        let surface = figure_surface(&p, 101).unwrap();
        let mut best = f64::NEG_INFINITY;
        let mut arg = (0, 0);
        for (a, row) in surface.values.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                if v > best {
                    best = v;
                    arg = (a, b);
                }
            }
        }
        // eta = 1/2 symmetric case peaks at (1/2, 1/2).
        assert_relative_eq!(surface.x[arg.0], 0.5, epsilon = 1e-9);
        assert_relative_eq!(surface.y[arg.1], 0.5, epsilon = 1e-9);
        assert!(surface.optimal.value >= best - 1e-12);
        // Total-share-optimal diagonal is not sufficient: away from the
        // center the diagonal lies strictly below the maximum.
        let quarter = 25;
        let diag = diffusion_value(
            &[
                vec![surface.x[quarter], 1.0 - surface.x[quarter]],
                vec![1.0 - surface.x[quarter], surface.x[quarter]],
            ],
            &p,
            0,
        );
        assert!(diag < surface.optimal.value - 1e-6);
        assert!(surface.autarky.value < surface.optimal.value);
    }

    #[test]
    fn marginal_matches_difference_quotient() {
        let p = DiffusionProblem {
            lambda: RsGrid::from_fn(2, 2, |s, i| 0.8 + 0.5 * (s + i) as f64),
            xtilde: RsGrid::filled(2, 2, 1.0),
            eta: vec![vec![0.55, 0.45], vec![0.25, 0.75]],
            theta: vec![4.0, 4.0],
            beta: 0.44,
        };
        let alpha = 0.7;
        let pi0 = 0.62;
        let h = 1e-6;
        let value =
            |pi: f64| diffusion_increment(&[vec![pi, 1.0 - pi], vec![0.5, 0.5]], &p, 0, alpha);
        let fd = (value(pi0 + h) - value(pi0 - h)) / (2.0 * h);
        let analytic = two_region_marginal(&p, 0, 0, pi0, alpha);
        assert_relative_eq!(analytic, fd, max_relative = 1e-6);
    }
}
