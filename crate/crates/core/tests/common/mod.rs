// Each test target uses a subset of these helpers.
#![allow(dead_code)]

//! Shared test oracles, independent of the library's closed forms.
//!
//! The Monte Carlo market simulates varieties explicitly: top-two Fréchet
//! productivity draws per source, lowest landed cost wins, Bertrand pricing
//! against the runner-up and the monopoly markup. The diffusion oracle
//! simulates the idea-arrival source distribution directly. The planner
//! oracle maximizes the diffusion objective numerically on the simplex.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Published growth-moment rows (mean, sd) of the fine sensitivity sweep:
/// real GDP and real GDP per capita, plus the historical row, in percent.
pub const HIST_GDP: (f64, f64) = (3.60, 2.66);
pub const HIST_GDP_PC: (f64, f64) = (2.70, 2.51);
pub const SWEEP_ROWS: [(f64, (f64, f64), (f64, f64)); 11] = [
    (0.40, (3.09, 2.02), (2.20, 1.65)),
    (0.41, (3.21, 2.13), (2.32, 1.76)),
    (0.42, (3.34, 2.26), (2.44, 1.89)),
    (0.43, (3.48, 2.40), (2.59, 2.03)),
    (0.44, (3.64, 2.56), (2.75, 2.19)),
    (0.45, (3.82, 2.73), (2.92, 2.36)),
    (0.46, (4.02, 2.92), (3.12, 2.55)),
    (0.47, (4.24, 3.13), (3.34, 2.76)),
    (0.48, (4.48, 3.36), (3.58, 2.98)),
    (0.49, (4.75, 3.60), (3.84, 3.22)),
    (0.50, (5.04, 3.87), (4.13, 3.48)),
];
/// Published loss-table columns (GDP, GDP per capita, sum) for the same rows.
pub const LOSS_ROWS: [(f64, f64, f64, f64); 11] = [
    (0.40, 0.67, 1.00, 1.67),
    (0.41, 0.43, 0.72, 1.15),
    (0.42, 0.23, 0.46, 0.69),
    (0.43, 0.08, 0.25, 0.33),
    (0.44, 0.01, 0.11, 0.12),
    (0.45, 0.06, 0.07, 0.13),
    (0.46, 0.25, 0.17, 0.42),
    (0.47, 0.64, 0.46, 1.10),
    (0.48, 1.28, 0.98, 2.26),
    (0.49, 2.22, 1.79, 4.01),
    (0.50, 3.54, 2.96, 6.50),
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln()
}

/// Top-two productivity draws of one source: the arrival points `lambda /
/// z^theta` form a unit-rate Poisson process, so the best two draws are
/// `(lambda / E1)^(1/theta)` and `(lambda / (E1 + E2))^(1/theta)`.
pub fn frechet_top_two(rng: &mut ChaCha8Rng, lambda: f64, theta: f64) -> (f64, f64) {
    let t1 = exp1(rng).max(1e-300);
    let t2 = t1 + exp1(rng).max(1e-300);
    (
        (lambda / t1).powf(1.0 / theta),
        (lambda / t2).powf(1.0 / theta),
    )
}

/// Mean and batch-means standard error of `values` (100 batches).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let batches = 100.min(n);
    let per = n / batches;
    let mut batch_means = Vec::with_capacity(batches);
    for b in 0..batches {
        let slice = &values[b * per..(b + 1) * per];
        batch_means.push(slice.iter().sum::<f64>() / per as f64);
    }
    let mean = batch_means.iter().sum::<f64>() / batches as f64;
    let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

/// Result of the simulated Bertrand market for one destination.
pub struct BertrandOutcome {
    /// Expenditure share per source, with its standard error.
    pub share: Vec<(f64, f64)>,
    /// Aggregate profit-to-sales ratio with standard error.
    pub profit_ratio: (f64, f64),
    /// Empirical CES price index.
    pub price_index: f64,
}

/// Simulates `n` varieties delivered to one destination. `xtilde[s]` is the
/// landed input-bundle cost of source `s`; demand is CES with elasticity
/// `sigma`, so expenditure per variety is proportional to `p^(1-sigma)`.
pub fn simulate_bertrand_market(
    rng: &mut ChaCha8Rng,
    lambda: &[f64],
    xtilde: &[f64],
    theta: f64,
    sigma: f64,
    n: usize,
) -> BertrandOutcome {
    let markup = sigma / (sigma - 1.0);
    let sources = lambda.len();
    let mut weight_by_source = vec![vec![0.0f64; n]; sources];
    let mut weights = vec![0.0f64; n];
    let mut profit_weighted = vec![0.0f64; n];

    for variety in 0..n {
        // Best and second-best marginal cost per source.
        let mut best = (f64::INFINITY, f64::INFINITY, usize::MAX); // (mc1, mc2_own, source)
        let mut best_rival = f64::INFINITY;
        for s in 0..sources {
            let (z1, z2) = frechet_top_two(rng, lambda[s], theta);
            let mc1 = xtilde[s] / z1;
            let mc2 = xtilde[s] / z2;
            if mc1 < best.0 {
                best_rival = best_rival.min(best.0);
                best = (mc1, mc2, s);
            } else {
                best_rival = best_rival.min(mc1);
            }
        }
        let (mc, own_second, winner) = best;
        let price = (markup * mc).min(own_second).min(best_rival);
        let weight = price.powf(1.0 - sigma);
        weights[variety] = weight;
        weight_by_source[winner][variety] = weight;
        profit_weighted[variety] = (1.0 - mc / price) * weight;
    }

    let total: f64 = weights.iter().sum();
    let share = (0..sources)
        .map(|s| {
            // Ratio of sums; the standard error comes from batch means of
            // the ratio.
            summarize(&batch_ratios(&weight_by_source[s], &weights))
        })
        .collect();
    let profit_ratio = summarize(&batch_ratios(&profit_weighted, &weights));
    let price_index = (total / n as f64).powf(1.0 / (1.0 - sigma));
    BertrandOutcome {
        share,
        profit_ratio,
        price_index,
    }
}

fn batch_ratios(numerator: &[f64], denominator: &[f64]) -> Vec<f64> {
    let n = numerator.len();
    let batches = 100.min(n);
    let per = n / batches;
    (0..batches)
        .map(|b| {
            let num: f64 = numerator[b * per..(b + 1) * per].iter().sum();
            let den: f64 = denominator[b * per..(b + 1) * per].iter().sum();
            num / den
        })
        .collect()
}

fn summarize(batch_means: &[f64]) -> (f64, f64) {
    let b = batch_means.len() as f64;
    let mean = batch_means.iter().sum::<f64>() / b;
    let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

/// Simulates the idea-arrival source distribution for one destination and
/// using sector: pick a supplying sector by cost share, draw every source's
/// best producer, let the lowest landed cost win, and return the winner's
/// productivity raised to `beta * theta`. The mean times
/// `alpha` estimates the law-of-motion increment.
pub struct DiffusionDrawSetup<'a> {
    /// Supplier productivities, source x sector.
    pub lambda: &'a [Vec<f64>],
    /// Landed costs into the destination, source x sector.
    pub xtilde: &'a [Vec<f64>],
    /// Cost shares of the using sector over supplying sectors.
    pub eta_row: &'a [f64],
    pub theta: f64,
    pub beta: f64,
}

pub fn simulate_diffusion_increment(
    rng: &mut ChaCha8Rng,
    setup: &DiffusionDrawSetup<'_>,
    alpha: f64,
    n: usize,
) -> (f64, f64) {
    let sources = setup.lambda.len();
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        // Supplying sector drawn from the cost shares.
        let mut u: f64 = rng.gen();
        let mut sector = setup.eta_row.len() - 1;
        for (j, &w) in setup.eta_row.iter().enumerate() {
            if u < w {
                sector = j;
                break;
            }
            u -= w;
        }
        // Winner of the delivery competition in that sector.
        let mut best_cost = f64::INFINITY;
        let mut winner_z = f64::NAN;
        for s in 0..sources {
            let lambda = setup.lambda[s][sector];
            if lambda <= 0.0 {
                continue;
            }
            let t = exp1(rng).max(1e-300);
            let z1 = (lambda / t).powf(1.0 / setup.theta);
            let cost = setup.xtilde[s][sector] / z1;
            if cost < best_cost {
                best_cost = cost;
                winner_z = z1;
            }
        }
        samples.push(winner_z.powf(setup.beta * setup.theta));
    }
    let (mean, se) = mean_and_se(&samples);
    (alpha * mean, alpha * se)
}

/// Numerical maximizer of `sum_s pi_s^(1-beta) lambda_s^beta` on the simplex
/// via softmax-parametrized gradient ascent with backtracking. Independent of
/// the closed-form optimum it is used to check.
pub fn maximize_inner_on_simplex(lambda: &[f64], beta: f64) -> Vec<f64> {
    let n = lambda.len();
    let value = |pi: &[f64]| -> f64 {
        pi.iter()
            .zip(lambda)
            .map(|(&p, &l)| {
                if p > 0.0 {
                    p.powf(1.0 - beta) * l.powf(beta)
                } else {
                    0.0
                }
            })
            .sum()
    };
    let softmax = |u: &[f64]| -> Vec<f64> {
        let max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = u.iter().map(|&x| (x - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    };

    let mut u = vec![0.0; n];
    let mut pi = softmax(&u);
    let mut current = value(&pi);
    let mut step = 1.0;
    for _ in 0..200_000 {
        // Chain rule through the softmax.
        let grad_pi: Vec<f64> = pi
            .iter()
            .zip(lambda)
            .map(|(&p, &l)| (1.0 - beta) * p.powf(-beta) * l.powf(beta))
            .collect();
        let dot: f64 = grad_pi.iter().zip(&pi).map(|(g, p)| g * p).sum();
        let grad_u: Vec<f64> = (0..n).map(|s| pi[s] * (grad_pi[s] - dot)).collect();
        let norm: f64 = grad_u.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-14 {
            break;
        }
        let mut improved = false;
        for _ in 0..60 {
            let candidate_u: Vec<f64> = u.iter().zip(&grad_u).map(|(x, g)| x + step * g).collect();
            let candidate_pi = softmax(&candidate_u);
            let candidate_value = value(&candidate_pi);
            if candidate_value > current {
                u = candidate_u;
                pi = candidate_pi;
                current = candidate_value;
                step *= 1.3;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    pi
}
