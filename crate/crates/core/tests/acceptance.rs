//! Acceptance suite: one test per criterion, printing a pass/fail line
//! (run with `--nocapture` to see them). Tolerances are pinned here, not
//! configurable.

use std::collections::BTreeMap;

use tradediff_core::calibration::{beta_loss, growth_moments, profit_rebalance, MomentSet};
use tradediff_core::diffusion::{
    actual_shares, aleph_two_by_two, diffusion_value, optimal_shares, DiffusionProblem,
};
use tradediff_core::dynamics::{diffusion_step, simulate};
use tradediff_core::economy::{calibrate_shares, CalibrationParams};
use tradediff_core::equilibrium::{
    price_index, solve_static, trade_balance, trade_shares, PolicyInputs, SolveOptions,
};
use tradediff_core::grid::{BilateralGrid, IoGrid, RsGrid};
use tradediff_core::scenario::{run_experiment, Bloc, ExperimentOptions, PolicyShock, ShockKind};
use tradediff_core::toy;

mod common;

fn pass(criterion: &str, detail: &str) {
    println!("[acceptance] {criterion}: PASS ({detail})");
}

fn hist_moments() -> MomentSet {
    MomentSet {
        gdp_mean: common::HIST_GDP.0,
        gdp_sd: common::HIST_GDP.1,
        gdp_pc_mean: common::HIST_GDP_PC.0,
        gdp_pc_sd: common::HIST_GDP_PC.1,
    }
}

fn row_moments(gdp: (f64, f64), pc: (f64, f64)) -> MomentSet {
    MomentSet {
        gdp_mean: gdp.0,
        gdp_sd: gdp.1,
        gdp_pc_mean: pc.0,
        gdp_pc_sd: pc.1,
    }
}

/// Criterion 1: the published loss table regenerates from the published
/// moment rows within +-0.01 per cell, and the argmin sits at 0.44 for equal
/// weights and 0.45 for full weight on per-capita growth.
///
/// The +-0.01 clause cannot hold for every cell: the published loss table was
/// computed from unrounded moments, and evaluating the loss on the two-decimal
/// moment rows propagates up to 2*(|mean gap|+|sd gap|)*0.005 + 0.005 of
/// rounding error, which exceeds 0.01 for twelve of the 33 cells (worst
/// 0.026). The assertions state the criterion as written and report every
/// violating cell; the argmin clauses hold.
#[test]
fn criterion_1_loss_table_regeneration() {
    let hist = hist_moments();
    let mut violations = Vec::new();
    let mut table: Vec<(f64, f64)> = Vec::new();
    for (beta, gdp, pc) in common::SWEEP_ROWS {
        let sim = row_moments(gdp, pc);
        let gdp_loss = beta_loss(&sim, &hist, 0.0);
        let pc_loss = beta_loss(&sim, &hist, 1.0);
        let sum = gdp_loss + pc_loss;
        table.push((beta, 0.5 * sum));
        let published = common::LOSS_ROWS.iter().find(|r| r.0 == beta).unwrap();
        for (name, mine, pub_value) in [
            ("GDP", gdp_loss, published.1),
            ("GDPpc", pc_loss, published.2),
            ("Sum", sum, published.3),
        ] {
            let dev = (mine - pub_value).abs();
            if dev > 0.01 {
                violations.push(format!(
                    "beta={beta:.2} {name}: {mine:.4} vs {pub_value} (dev {dev:.4})"
                ));
            }
        }
    }

    // Argmin clauses (ties break toward smaller beta).
    let argmin = |weight: f64| {
        common::SWEEP_ROWS
            .iter()
            .map(|&(beta, gdp, pc)| (beta, beta_loss(&row_moments(gdp, pc), &hist, weight)))
            .min_by(|a, b| (a.1, a.0).partial_cmp(&(b.1, b.0)).unwrap())
            .unwrap()
            .0
    };
    assert_eq!(argmin(0.5), 0.44, "equal-weight argmin");
    assert_eq!(argmin(1.0), 0.45, "per-capita-weight argmin");
    assert_eq!(argmin(0.0), 0.44, "aggregate-weight argmin");

    assert!(
        violations.is_empty(),
        "[acceptance] criterion 1: FAIL — {} of 33 cells deviate beyond +-0.01 \
         (rounding of the published moment inputs; argmin clauses pass):\n  {}",
        violations.len(),
        violations.join("\n  ")
    );
    pass(
        "criterion 1",
        "loss table within +-0.01 and argmins at 0.44/0.45",
    );
}

/// Criterion 2: a simulated Bertrand market with one million varieties
/// reproduces the closed-form expenditure shares and profit share within
/// three Monte Carlo standard errors, and the price index within 1%.
#[test]
fn criterion_2_bertrand_monte_carlo_oracle() {
    let theta = 4.0;
    let sigma = 2.0;
    let lambda = [1.3, 0.7];
    let unit_costs = [1.0, 0.9];
    let tau = [[1.0, 1.3], [1.5, 1.0]];
    let n = 1_000_000;

    let mut rng = common::rng(2024_0002);
    for dest in 0..2 {
        let xtilde = [tau[0][dest] * unit_costs[0], tau[1][dest] * unit_costs[1]];
        let closed_shares = trade_shares(&lambda, &xtilde, theta);
        let closed_price = price_index(&lambda, &xtilde, theta, sigma).unwrap();
        let outcome = common::simulate_bertrand_market(&mut rng, &lambda, &xtilde, theta, sigma, n);
        for s in 0..2 {
            let (mean, se) = outcome.share[s];
            assert!(
                (mean - closed_shares[s]).abs() <= 3.0 * se,
                "share[{s}] into {dest}: mc {mean:.5} vs closed {:.5} (se {se:.2e})",
                closed_shares[s]
            );
        }
        let (profit, profit_se) = outcome.profit_ratio;
        let closed_profit = 1.0 / (1.0 + theta);
        assert!(
            (profit - closed_profit).abs() <= 3.0 * profit_se,
            "profit/sales into {dest}: mc {profit:.5} vs {closed_profit} (se {profit_se:.2e})"
        );
        assert!(
            (outcome.price_index / closed_price - 1.0).abs() <= 0.01,
            "price index into {dest}: mc {:.5} vs closed {closed_price:.5}",
            outcome.price_index
        );
    }
    pass(
        "criterion 2",
        "shares and profit share within 3 SE, price index within 1% at 1e6 varieties",
    );
}

/// Criterion 3: one million draws of the idea-arrival process (supplying
/// sector by cost share, winner by lowest landed cost, power-law original
/// insights integrated out) reproduce the law-of-motion increment within
/// three standard errors.
#[test]
fn criterion_3_diffusion_law_oracle() {
    // Two regions, two sectors sharing the dispersion parameter (the strict
    // arrival process and the sector-mixed law coincide only then).
    let theta = 4.0;
    let beta = 0.44;
    let alpha = 0.8;
    let lambda_grid = [[1.2, 0.8], [0.6, 1.0]]; // source x sector
    let unit_costs = [[1.0, 1.05], [0.95, 1.1]];
    let tau = [[1.0, 1.4], [1.3, 1.0]]; // source x dest (all sectors)
    let eta = [[0.6, 0.4], [0.3, 0.7]]; // using x supplying
    let dest = 0usize;
    let n = 1_000_000;

    // Closed form through the production law of motion.
    let lambda = RsGrid::from_fn(2, 2, |s, j| lambda_grid[s][j]);
    let pi = BilateralGrid::from_fn(2, 2, |s, d, j| {
        let xt: Vec<f64> = (0..2).map(|k| tau[k][d] * unit_costs[k][j]).collect();
        trade_shares(&[lambda_grid[0][j], lambda_grid[1][j]], &xt, theta)[s]
    });

    let mut rng = common::rng(2024_0003);
    for using in 0..2 {
        let lambda_one = RsGrid::from_fn(2, 2, |s, j| lambda_grid[s][j]);
        let next = diffusion_step(
            &lambda_one,
            &IoGrid::from_fn(2, 2, |_, i, j| eta[i][j]),
            &pi,
            alpha,
            beta,
        );
        let closed = next.get(dest, using) - lambda.get(dest, using);

        let xtilde: Vec<Vec<f64>> = (0..2)
            .map(|s| (0..2).map(|j| tau[s][dest] * unit_costs[s][j]).collect())
            .collect();
        let lambda_rows: Vec<Vec<f64>> = (0..2).map(|s| lambda_grid[s].to_vec()).collect();
        let setup = common::DiffusionDrawSetup {
            lambda: &lambda_rows,
            xtilde: &xtilde,
            eta_row: &eta[using],
            theta,
            beta,
        };
        let (estimate, se) = common::simulate_diffusion_increment(&mut rng, &setup, alpha, n);
        assert!(
            (estimate - closed).abs() <= 3.0 * se,
            "using sector {using}: mc {estimate:.6} vs closed {closed:.6} (se {se:.2e})"
        );
    }
    pass(
        "criterion 3",
        "law-of-motion increments within 3 SE at 1e6 draws",
    );
}

/// Criterion 4: planner-optimal shares match a numerical maximizer to 1e-6 on
/// 100 random instances, and the distortion statistic exceeds one under each
/// of the three asymmetry sweeps.
#[test]
fn criterion_4_planner_optimum_and_distortion_signs() {
    let mut rng = common::rng(2024_0004);
    use rand::Rng as _;
    for case in 0..100 {
        let regions = 2 + case % 3; // up to 4
        let sectors = 1 + case % 3; // up to 3
        let beta = 0.05 + 0.8 * rng.gen::<f64>();
        let lambda = RsGrid::from_fn(regions, sectors, |_, _| 0.2 + 2.8 * rng.gen::<f64>());
        let problem = DiffusionProblem {
            lambda: lambda.clone(),
            xtilde: RsGrid::from_fn(regions, sectors, |_, _| 1.0 + rng.gen::<f64>()),
            eta: (0..sectors)
                .map(|_| {
                    let mut row: Vec<f64> = (0..sectors).map(|_| 0.2 + rng.gen::<f64>()).collect();
                    let sum: f64 = row.iter().sum();
                    row.iter_mut().for_each(|w| *w /= sum);
                    row
                })
                .collect(),
            theta: (0..sectors).map(|_| 3.0 + 6.0 * rng.gen::<f64>()).collect(),
            beta,
        };
        let closed = optimal_shares(&problem);
        for j in 0..sectors {
            let lambda_col: Vec<f64> = (0..regions).map(|s| lambda.get(s, j)).collect();
            let numeric = common::maximize_inner_on_simplex(&lambda_col, beta);
            for s in 0..regions {
                assert!(
                    (numeric[s] - closed[j][s]).abs() <= 1e-6,
                    "case {case} sector {j} source {s}: numeric {:.9} vs closed {:.9}",
                    numeric[s],
                    closed[j][s]
                );
            }
        }
        // And the closed form dominates the numeric value everywhere it was
        // checked.
        let v_closed = diffusion_value(&closed, &problem, 0);
        let numeric_all: Vec<Vec<f64>> = (0..sectors)
            .map(|j| {
                let lambda_col: Vec<f64> = (0..regions).map(|s| lambda.get(s, j)).collect();
                common::maximize_inner_on_simplex(&lambda_col, beta)
            })
            .collect();
        assert!(diffusion_value(&numeric_all, &problem, 0) <= v_closed + 1e-9);
    }

    // Sign sweeps on the two-by-two statistic. Symmetric baseline, one
    // asymmetry at a time.
    let theta = 4.0;
    let base = |xtilde: RsGrid| DiffusionProblem {
        lambda: RsGrid::filled(2, 2, 1.0),
        xtilde,
        eta: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        theta: vec![theta, theta],
        beta: 0.44,
    };
    // Higher own-sector trade cost.
    for tau_gap in [1.05, 1.3, 1.8, 3.0] {
        let p = base(RsGrid::from_fn(2, 2, |s, i| {
            if s == 0 {
                1.0
            } else if i == 0 {
                1.2 * tau_gap
            } else {
                1.2
            }
        }));
        assert!(aleph_two_by_two(&p, 0, 1) > 1.0, "tau gap {tau_gap}");
    }
    // Higher foreign unit cost in the own sector (same trade cost).
    for cost_gap in [1.05, 1.4, 2.0] {
        let p = base(RsGrid::from_fn(2, 2, |s, i| {
            if s == 0 {
                1.0
            } else if i == 0 {
                1.3 * cost_gap
            } else {
                1.3
            }
        }));
        assert!(aleph_two_by_two(&p, 0, 1) > 1.0, "cost gap {cost_gap}");
    }
    // Higher foreign productivity in the own sector, frictions present.
    for lambda_gap in [1.2, 2.0, 4.0] {
        let mut p = base(RsGrid::from_fn(2, 2, |s, _| if s == 0 { 1.0 } else { 1.4 }));
        p.lambda = RsGrid::from_fn(2, 2, |s, i| if s == 1 && i == 0 { lambda_gap } else { 1.0 });
        assert!(aleph_two_by_two(&p, 0, 1) > 1.0, "lambda gap {lambda_gap}");
    }
    pass(
        "criterion 4",
        "planner optimum to 1e-6 on 100 instances; distortion signs on all sweeps",
    );
}

/// Criterion 5: a calibrated toy reproduces its baseline flows to 1e-6
/// relative in every cell, and profit rebalancing hits the Bertrand share
/// while keeping the snapshot balanced.
#[test]
fn criterion_5_calibration_round_trip() {
    let flows = toy::decoupling_toy().build();
    let params = toy::decoupling_params();
    let economy = calibrate_shares(&flows, &params).unwrap();
    let opts = SolveOptions {
        tol: 1e-10,
        ..SolveOptions::default()
    };
    let solution = solve_static(
        &economy,
        &economy.initial_state(),
        &PolicyInputs::baseline(&economy),
        &opts,
    )
    .unwrap();
    let mut worst: f64 = 0.0;
    for s in 0..4 {
        for d in 0..4 {
            for i in 0..3 {
                let model = solution.trade_shares.get(s, d, i) * solution.expenditure(d, i);
                let data = flows.trade.get(s, d, i);
                if data > 0.0 {
                    worst = worst.max((model - data).abs() / data);
                }
            }
        }
    }
    for d in 0..4 {
        for i in 0..3 {
            for (grid, data) in [
                (&solution.expenditure_consumption, &flows.final_demand),
                (&solution.expenditure_investment, &flows.investment),
                (&solution.profits, &flows.profit),
            ] {
                let value = data.get(d, i);
                if value > 0.0 {
                    worst = worst.max((grid.get(d, i) - value).abs() / value);
                }
            }
        }
    }
    assert!(
        worst <= 1e-6,
        "round-trip worst relative cell error {worst:.3e}"
    );

    // Rebalancing: push profit income into capital, then restore.
    let mut disturbed = flows.clone();
    for d in 0..4 {
        for i in 0..3 {
            let p = disturbed.profit.get(d, i);
            disturbed
                .capital
                .set(d, i, disturbed.capital.get(d, i) + 0.7 * p);
            disturbed.profit.set(d, i, 0.3 * p);
        }
    }
    let rebalanced = profit_rebalance(&disturbed, &params.theta).unwrap();
    assert!(rebalanced.max_profit_share_gap(&params.theta) <= 1e-6);
    assert!(rebalanced.check_balance().is_empty());
    pass(
        "criterion 5",
        &format!("round trip worst cell {worst:.2e}; rebalance on target and balanced"),
    );
}

fn decoupling_economy() -> tradediff_core::Economy {
    calibrate_shares(&toy::decoupling_toy().build(), &toy::decoupling_params()).unwrap()
}

fn bloc_map() -> BTreeMap<String, Bloc> {
    [
        ("usa", Bloc::West),
        ("lac", Bloc::West),
        ("chn", Bloc::East),
        ("ind", Bloc::East),
    ]
    .into_iter()
    .map(|(r, b)| (r.to_string(), b))
    .collect()
}

fn full_decouple() -> PolicyShock {
    PolicyShock {
        kind: ShockKind::Iceberg,
        magnitude_pp: 160.0,
        blocs: bloc_map(),
        sectors: None,
        start: Some(2021),
        permanent: true,
    }
}

/// Criterion 6: qualitative decoupling orderings on the bundled 4-region,
/// 3-sector toy with its rich-West / poor-East productivity gradient.
#[test]
fn criterion_6_decoupling_orderings() {
    let economy = decoupling_economy();
    let east: Vec<usize> = ["chn", "ind"]
        .iter()
        .map(|r| economy.region_index(r).unwrap())
        .collect();

    let diffusion_on =
        run_experiment(&economy, &full_decouple(), &ExperimentOptions::default()).unwrap();
    let diffusion_off = {
        let mut opts = ExperimentOptions::default();
        opts.diffusion = false;
        run_experiment(&economy, &full_decouple(), &opts).unwrap()
    };

    // (a) Cross-bloc trade collapses by more than 90%.
    assert!(
        diffusion_on.cross_bloc_trade_hat < -0.9,
        "cross-bloc trade change {:.4}",
        diffusion_on.cross_bloc_trade_hat
    );

    // (b) Poor-bloc losses are strictly larger with diffusion on, and the
    // cross-region dispersion of losses is larger.
    for &d in &east {
        assert!(
            diffusion_on.welfare_hat[d] < diffusion_off.welfare_hat[d],
            "{}: on {:.4} vs off {:.4}",
            economy.regions[d],
            diffusion_on.welfare_hat[d],
            diffusion_off.welfare_hat[d]
        );
    }
    let sd = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    assert!(
        sd(&diffusion_on.welfare_hat) > sd(&diffusion_off.welfare_hat),
        "dispersion on {:.5} vs off {:.5}",
        sd(&diffusion_on.welfare_hat),
        sd(&diffusion_off.welfare_hat)
    );

    // (c) The single-sector collapse understates dynamic productivity losses
    // for the poor bloc: its loss is smaller than every sectoral loss.
    let single = {
        let mut opts = ExperimentOptions::default();
        opts.single_sector = true;
        run_experiment(&economy, &full_decouple(), &opts).unwrap()
    };
    for &d in &east {
        let least_negative = diffusion_on
            .lambda_hat
            .row(d)
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            single.lambda_hat.get(d, 0) > least_negative,
            "{}: single {:.5} vs multi max {:.5}",
            economy.regions[d],
            single.lambda_hat.get(d, 0),
            least_negative
        );
        assert!(single.lambda_hat.get(d, 0) < 0.0);
    }

    // (d) Moving the middle-income region to the other bloc raises its loss.
    let switched = {
        let mut opts = ExperimentOptions::default();
        opts.bloc_overrides = Some([("lac".to_string(), Bloc::East)].into_iter().collect());
        run_experiment(&economy, &full_decouple(), &opts).unwrap()
    };
    let lac = economy.region_index("lac").unwrap();
    assert!(
        switched.welfare_hat[lac] < diffusion_on.welfare_hat[lac],
        "lac west {:.5} vs east {:.5}",
        diffusion_on.welfare_hat[lac],
        switched.welfare_hat[lac]
    );

    // (e) Electronics-only decoupling: losses strictly between zero and the
    // full-decouple losses, in every region.
    let elm_only = {
        let mut shock = full_decouple();
        shock.sectors = Some(vec!["elm".to_string()]);
        run_experiment(&economy, &shock, &ExperimentOptions::default()).unwrap()
    };
    for d in 0..economy.n_regions() {
        assert!(
            elm_only.welfare_hat[d] < 0.0 && elm_only.welfare_hat[d] > diffusion_on.welfare_hat[d],
            "{}: elm-only {:.5} vs full {:.5}",
            economy.regions[d],
            elm_only.welfare_hat[d],
            diffusion_on.welfare_hat[d]
        );
    }
    pass(
        "criterion 6",
        &format!(
            "cross-bloc {:.3}; dynamic>static in the East; single-sector understates; bloc switch and elm-only ordered",
            diffusion_on.cross_bloc_trade_hat
        ),
    );
}

/// Criterion 7a: trade shares sum to one (200 random grids and a solved toy).
#[test]
fn criterion_7_share_normalization() {
    let mut rng = common::rng(2024_0071);
    use rand::Rng as _;
    for case in 0..200 {
        let n = 2 + case % 5;
        let lambda: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen::<f64>() < 0.1 {
                    0.0
                } else {
                    0.3 + rng.gen::<f64>()
                }
            })
            .collect();
        if lambda.iter().all(|&l| l == 0.0) {
            continue;
        }
        let xtilde: Vec<f64> = (0..n).map(|_| 0.5 + 2.0 * rng.gen::<f64>()).collect();
        let theta = 2.0 + 8.0 * rng.gen::<f64>();
        let pi = trade_shares(&lambda, &xtilde, theta);
        let sum: f64 = pi.iter().sum();
        assert!(
            (sum - 1.0).abs() <= 1e-12,
            "case {case}: shares sum to {sum}"
        );
    }
    let economy = decoupling_economy();
    let solution = solve_static(
        &economy,
        &economy.initial_state(),
        &PolicyInputs::baseline(&economy),
        &SolveOptions::default(),
    )
    .unwrap();
    for d in 0..4 {
        for i in 0..3 {
            let sum: f64 = (0..4).map(|s| solution.trade_shares.get(s, d, i)).sum();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
    }
    pass(
        "criterion 7 (share normalization)",
        "200 random grids plus solved toy",
    );
}

/// Criterion 7b: with every factor market cleared to tolerance, the residual
/// region's trade-balance identity holds within ten times the tolerance.
#[test]
fn criterion_7_walras_residual() {
    let opts = SolveOptions::default();
    for seed in 0..200u64 {
        let spec = toy::random_toy(seed, 2 + (seed % 2) as usize, 1 + (seed % 3) as usize);
        let flows = spec.build();
        let mut params = CalibrationParams::uniform(spec.sectors.len(), 5.0, 0.4, 0.01, 2);
        params.theta = spec.sectors.iter().map(|s| s.theta).collect();
        let economy = calibrate_shares(&flows, &params).unwrap();
        let mut policy = PolicyInputs::baseline(&economy);
        // Random friction so the check is not at the trivial base point.
        if seed % 3 == 0 && economy.n_regions() > 1 {
            for i in 0..economy.n_sectors() {
                policy.tau.set(
                    0,
                    1,
                    i,
                    policy.tau.get(0, 1, i) + 0.2 + (seed % 7) as f64 * 0.1,
                );
                policy.tm.set(1, 0, i, policy.tm.get(1, 0, i) + 0.1);
            }
        }
        let solution = solve_static(&economy, &economy.initial_state(), &policy, &opts).unwrap();
        let residual_region = economy.n_regions() - 1;
        let tb = trade_balance(&solution, &policy, residual_region);
        let target = solution.tb_realized[residual_region] * solution.income[residual_region];
        let gap = (tb - target).abs() / solution.income[residual_region];
        assert!(
            gap <= 10.0 * opts.tol,
            "seed {seed}: residual-market gap {gap:.3e}"
        );
    }
    pass(
        "criterion 7 (Walras residual)",
        "200 solved instances within 10x tolerance",
    );
}

/// Criterion 7c: productivity is nondecreasing along the law of motion.
#[test]
fn criterion_7_lambda_monotonicity() {
    let mut rng = common::rng(2024_0073);
    use rand::Rng as _;
    for case in 0..200 {
        let nr = 1 + case % 4;
        let ns = 1 + case % 3;
        let lambda = RsGrid::from_fn(nr, ns, |_, _| 0.05 + 2.0 * rng.gen::<f64>());
        let eta = IoGrid::from_fn(nr, ns, |_, _, _| 1.0 / ns as f64);
        let pi = BilateralGrid::from_fn(nr, ns, |s, d, _| {
            if s == d {
                0.6
            } else if nr > 1 {
                0.4 / (nr - 1) as f64
            } else {
                0.4
            }
        });
        let alpha = rng.gen::<f64>() * 0.5;
        let beta = rng.gen::<f64>() * 0.95;
        let next = diffusion_step(&lambda, &eta, &pi, alpha, beta);
        for ((d, i), v) in next.iter() {
            assert!(
                v >= lambda.get(d, i),
                "case {case}: lambda decreased at ({d},{i})"
            );
        }
    }
    pass(
        "criterion 7 (lambda monotonicity)",
        "200 random diffusion steps",
    );
}

/// Criterion 7d: scaling the nominal anchor scales nominal variables and
/// leaves shares and real quantities unchanged.
#[test]
fn criterion_7_homogeneity() {
    let opts = SolveOptions::default();
    for seed in 0..200u64 {
        let spec = toy::random_toy(seed + 1000, 2, 2);
        let flows = spec.build();
        let mut params = CalibrationParams::uniform(2, 5.0, 0.4, 0.01, 2);
        params.theta = spec.sectors.iter().map(|s| s.theta).collect();
        let economy = calibrate_shares(&flows, &params).unwrap();
        let factor = 0.2 + 5.0 * ((seed % 17) as f64 / 17.0);
        let mut scaled = economy.clone();
        scaled.numeraire *= factor;

        let base = solve_static(
            &economy,
            &economy.initial_state(),
            &PolicyInputs::baseline(&economy),
            &opts,
        )
        .unwrap();
        let rescaled = solve_static(
            &scaled,
            &scaled.initial_state(),
            &PolicyInputs::baseline(&scaled),
            &opts,
        )
        .unwrap();
        for d in 0..2 {
            assert!((rescaled.wages[d] / (factor * base.wages[d]) - 1.0).abs() < 1e-7);
            assert!((rescaled.income[d] / (factor * base.income[d]) - 1.0).abs() < 1e-7);
            // Real investment quantity is scale-free.
            assert!((rescaled.investment[d] / base.investment[d] - 1.0).abs() < 1e-7);
            for i in 0..2 {
                assert!(
                    (rescaled.prices.get(d, i) / (factor * base.prices.get(d, i)) - 1.0).abs()
                        < 1e-7
                );
                for s in 0..2 {
                    let a = rescaled.trade_shares.get(s, d, i);
                    let b = base.trade_shares.get(s, d, i);
                    assert!((a - b).abs() < 1e-9, "seed {seed}: share moved {a} vs {b}");
                }
            }
        }
    }
    pass("criterion 7 (homogeneity)", "200 rescaled instances");
}

/// Criterion 7e: results are bit-identical across thread counts.
#[test]
fn criterion_7_determinism_across_threads() {
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();

    let mut rng = common::rng(2024_0075);
    use rand::Rng as _;
    for case in 0..200 {
        let problem = DiffusionProblem {
            lambda: RsGrid::from_fn(2, 2, |_, _| 0.3 + 2.0 * rng.gen::<f64>()),
            xtilde: RsGrid::from_fn(2, 2, |_, _| 1.0 + rng.gen::<f64>()),
            eta: vec![vec![0.5, 0.5], vec![0.4, 0.6]],
            theta: vec![4.0, 6.0],
            beta: 0.3 + 0.5 * rng.gen::<f64>(),
        };
        let a = single.install(|| tradediff_core::diffusion::figure_surface(&problem, 41).unwrap());
        let b = many.install(|| tradediff_core::diffusion::figure_surface(&problem, 41).unwrap());
        assert_eq!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&b).unwrap(),
            "case {case}: surface differs across thread counts"
        );
        // Confirm the actual-shares marker matches the closed form too.
        let act = actual_shares(&problem);
        assert_eq!(a.actual.x, act[0][0]);
    }

    // Full experiments and a sensitivity sweep, byte-compared.
    let economy = decoupling_economy();
    let shock = full_decouple();
    let run = |pool: &rayon::ThreadPool| {
        pool.install(|| {
            let report = run_experiment(&economy, &shock, &ExperimentOptions::default()).unwrap();
            let hist = hist_moments();
            let sweep = tradediff_core::calibration::beta_grid_search(
                &{
                    let mut quick = economy.clone();
                    quick.horizon = 4;
                    quick
                },
                &hist,
                &[0.30, 0.44, 0.55],
                0.5,
                &SolveOptions::default(),
            );
            (
                serde_json::to_vec(&report).unwrap(),
                serde_json::to_vec(&sweep.rows).unwrap(),
            )
        })
    };
    let (report_one, sweep_one) = run(&single);
    let (report_many, sweep_many) = run(&many);
    assert_eq!(
        report_one, report_many,
        "experiment report differs across thread counts"
    );
    assert_eq!(
        sweep_one, sweep_many,
        "sensitivity sweep differs across thread counts"
    );

    // The growth moments of a path are a pure function; spot-check equality
    // under both pools for one simulated path.
    let path_a =
        single.install(|| simulate(&economy, None, Some(3), &SolveOptions::default()).unwrap());
    let path_b =
        many.install(|| simulate(&economy, None, Some(3), &SolveOptions::default()).unwrap());
    assert_eq!(
        serde_json::to_vec(&growth_moments(&path_a, &economy)).unwrap(),
        serde_json::to_vec(&growth_moments(&path_b, &economy)).unwrap()
    );
    pass(
        "criterion 7 (thread determinism)",
        "200 surfaces plus reports and sweeps byte-identical",
    );
}
