//! Parametric generators for small balanced base-year snapshots.
//!
//! A toy is specified by per-region sizes and home-bias profiles plus
//! per-sector structure; the generator solves the base-year income-expenditure
//! fixed point at unit prices and emits a [`BaselineFlows`] snapshot that is
//! balanced to numerical precision and already satisfies the profit-share
//! identity, so it calibrates and round-trips exactly.

use crate::economy::{BaselineFlows, CalibrationParams};
use crate::grid::{BilateralGrid, IoGrid, RsGrid};

#[derive(Debug, Clone)]
pub struct ToyRegion {
    pub name: String,
    /// Endowment scale; sets relative income levels.
    pub size: f64,
    /// Domestic expenditure share per sector.
    pub home_share: Vec<f64>,
    /// Gravity weight as an export source.
    pub export_weight: f64,
    pub savings: f64,
    /// Trade-balance-to-income ratio. The last region's value is replaced by
    /// the world-balancing residual.
    pub tb: f64,
}

#[derive(Debug, Clone)]
pub struct ToySector {
    pub name: String,
    pub theta: f64,
    /// Consumption share (common across regions).
    pub kappa: f64,
    /// Investment composition share (common across regions).
    pub chi: f64,
    /// Intermediate share of the input bundle.
    pub psi_m: f64,
    /// Labor share within value added.
    pub psi_l: f64,
    /// Own-sector share of intermediates; the rest splits evenly.
    pub eta_own: f64,
}

#[derive(Debug, Clone)]
pub struct ToySpec {
    pub regions: Vec<ToyRegion>,
    pub sectors: Vec<ToySector>,
    /// Ad-valorem tariff rate applied to every cross-border flow at the base
    /// year (0 = free trade).
    pub baseline_tariff_rate: f64,
    /// Depreciation rate assumed when placing investment on the capital
    /// steady state.
    pub delta: f64,
    /// Override each region's savings rate so base investment equals
    /// depreciation of the base capital stock (capital income at unit
    /// rental). Keeps baseline paths free of capital-deepening trends.
    pub steady_investment: bool,
    /// Optional destination-major tilt of import sourcing:
    /// `import_affinity[d][s]` multiplies source `s`'s export weight in
    /// destination `d`'s import mix (diagonal ignored). Produces assortative
    /// trade patterns gravity weights alone cannot.
    pub import_affinity: Option<Vec<Vec<f64>>>,
}

impl ToySpec {
    /// Solves the base-year fixed point and emits the balanced snapshot.
    ///
    /// Panics on malformed specifications (shares outside (0,1), a home share
    /// below some implied bilateral share); toys are fixture code, not input
    /// handling.
    pub fn build(&self) -> BaselineFlows {
        let nr = self.regions.len();
        let ns = self.sectors.len();
        assert!(nr >= 1 && ns >= 1);
        let kappa_sum: f64 = self.sectors.iter().map(|s| s.kappa).sum();
        let chi_sum: f64 = self.sectors.iter().map(|s| s.chi).sum();
        assert!(
            (kappa_sum - 1.0).abs() < 1e-12,
            "consumption shares must sum to 1"
        );
        assert!(
            (chi_sum - 1.0).abs() < 1e-12,
            "investment shares must sum to 1"
        );

        // Expenditure shares by source: home bias plus gravity weights,
        // optionally tilted by destination-specific affinities.
        let affinity =
            |d: usize, s: usize| -> f64 { self.import_affinity.as_ref().map_or(1.0, |a| a[d][s]) };
        let mut pi = BilateralGrid::zeros(nr, ns);
        for d in 0..nr {
            for i in 0..ns {
                let home = self.regions[d].home_share[i];
                assert!(home > 0.0 && home <= 1.0);
                let weight_total: f64 = self
                    .regions
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| *s != d)
                    .map(|(s, r)| r.export_weight * affinity(d, s))
                    .sum();
                for s in 0..nr {
                    let share = if s == d {
                        home
                    } else if weight_total > 0.0 {
                        (1.0 - home) * self.regions[s].export_weight * affinity(d, s) / weight_total
                    } else {
                        0.0
                    };
                    pi.set(s, d, i, share);
                }
            }
        }
        // Exporter home share must weakly dominate each bilateral share so
        // iceberg wedges stay >= 1 after calibration.
        for s in 0..nr {
            for d in 0..nr {
                for i in 0..ns {
                    if s != d {
                        assert!(
                            pi.get(s, s, i) >= pi.get(s, d, i) - 1e-12,
                            "home share of {} in sector {} is below its share in {}",
                            self.regions[s].name,
                            self.sectors[i].name,
                            self.regions[d].name
                        );
                    }
                }
            }
        }

        let tm = 1.0 + self.baseline_tariff_rate;
        let tariff_share = self.baseline_tariff_rate / tm;

        // Income-expenditure fixed point at unit prices. The map conserves
        // world expenditure, so power iteration with sum normalization
        // converges to the unique positive fixed point.
        let world: f64 = self.regions.iter().map(|r| r.size).sum::<f64>() * 100.0;
        let mut e = RsGrid::from_fn(nr, ns, |d, i| {
            self.regions[d].size * 100.0 * self.sectors[i].kappa
        });
        let mut tb: Vec<f64> = self.regions.iter().map(|r| r.tb).collect();
        let mut savings: Vec<f64> = self.regions.iter().map(|r| r.savings).collect();
        let mut income = vec![0.0; nr];
        for iteration in 0..200_000 {
            // Sales, profits, input spending.
            let mut sales = RsGrid::zeros(nr, ns);
            let mut tariff_paid = RsGrid::zeros(nr, ns);
            for s in 0..nr {
                for i in 0..ns {
                    let mut total = 0.0;
                    let mut paid = 0.0;
                    for d in 0..nr {
                        let flow = pi.get(s, d, i) * e.get(d, i);
                        total += flow;
                        if s != d {
                            paid += tariff_share * flow;
                        }
                    }
                    sales.set(s, i, total);
                    tariff_paid.set(s, i, paid);
                }
            }
            for d in 0..nr {
                let mut y = 0.0;
                for i in 0..ns {
                    let r = sales.get(d, i);
                    let theta = self.sectors[i].theta;
                    let profit = r / (1.0 + theta);
                    let input = r * theta / (1.0 + theta) - tariff_paid.get(d, i);
                    assert!(input >= 0.0, "tariff rate too large for theta");
                    y += profit + input * (1.0 - self.sectors[i].psi_m);
                }
                // Tariff revenue collected on imports.
                for s in 0..nr {
                    if s != d {
                        for i in 0..ns {
                            y += tariff_share * pi.get(s, d, i) * e.get(d, i);
                        }
                    }
                }
                income[d] = y;
            }
            // Residual region absorbs the world trade imbalance.
            if nr > 1 {
                let head: f64 = (0..nr - 1).map(|d| tb[d] * income[d]).sum();
                tb[nr - 1] = -head / income[nr - 1];
            } else {
                tb[0] = 0.0;
            }
            if self.steady_investment {
                // Savings such that investment replaces depreciated capital.
                for d in 0..nr {
                    let capital_income: f64 = (0..ns)
                        .map(|i| {
                            let r = sales.get(d, i);
                            let input = r * self.sectors[i].theta / (1.0 + self.sectors[i].theta)
                                - tariff_paid.get(d, i);
                            input * (1.0 - self.sectors[i].psi_m) * (1.0 - self.sectors[i].psi_l)
                        })
                        .sum();
                    savings[d] = tb[d] + self.delta * capital_income / income[d];
                }
            }

            let mut next = RsGrid::zeros(nr, ns);
            for d in 0..nr {
                for i in 0..ns {
                    let consumption = (1.0 - savings[d]) * self.sectors[i].kappa * income[d];
                    let investment = (savings[d] - tb[d]) * self.sectors[i].chi * income[d];
                    let mut interm_use = 0.0;
                    for j in 0..ns {
                        let r = sales.get(d, j);
                        let theta = self.sectors[j].theta;
                        let input = r * theta / (1.0 + theta) - tariff_paid.get(d, j);
                        interm_use +=
                            input * self.sectors[j].psi_m * eta_share(&self.sectors[j], j, i, ns);
                    }
                    next.set(d, i, consumption + investment + interm_use);
                }
            }
            // Normalize world expenditure to keep the power iteration pinned.
            let total: f64 = next.sum();
            let next = next.scale(world / total);
            let diff = next.max_rel_diff(&e);
            e = next;
            if diff < 1e-14 {
                break;
            }
            assert!(iteration < 199_999, "toy fixed point did not converge");
        }

        // Assemble the snapshot from the converged expenditure grid.
        let trade = BilateralGrid::from_fn(nr, ns, |s, d, i| pi.get(s, d, i) * e.get(d, i));
        let tariff = BilateralGrid::from_fn(nr, ns, |s, d, i| {
            if s != d {
                tariff_share * pi.get(s, d, i) * e.get(d, i)
            } else {
                0.0
            }
        });
        let mut labor = RsGrid::zeros(nr, ns);
        let mut capital = RsGrid::zeros(nr, ns);
        let mut profit = RsGrid::zeros(nr, ns);
        let mut intermediates = IoGrid::zeros(nr, ns);
        for d in 0..nr {
            for i in 0..ns {
                let r: f64 = (0..nr).map(|dest| trade.get(d, dest, i)).sum();
                let paid: f64 = (0..nr)
                    .filter(|&dest| dest != d)
                    .map(|dest| tariff.get(d, dest, i))
                    .sum();
                let theta = self.sectors[i].theta;
                profit.set(d, i, r / (1.0 + theta));
                let input = r * theta / (1.0 + theta) - paid;
                let va = input * (1.0 - self.sectors[i].psi_m);
                labor.set(d, i, va * self.sectors[i].psi_l);
                capital.set(d, i, va * (1.0 - self.sectors[i].psi_l));
                for j in 0..ns {
                    intermediates.set(
                        d,
                        i,
                        j,
                        input * self.sectors[i].psi_m * eta_share(&self.sectors[i], i, j, ns),
                    );
                }
            }
        }
        let final_demand = RsGrid::from_fn(nr, ns, |d, i| {
            (1.0 - savings[d]) * self.sectors[i].kappa * income[d]
        });
        let investment = RsGrid::from_fn(nr, ns, |d, i| {
            (savings[d] - tb[d]) * self.sectors[i].chi * income[d]
        });

        BaselineFlows {
            regions: self.regions.iter().map(|r| r.name.clone()).collect(),
            sectors: self.sectors.iter().map(|s| s.name.clone()).collect(),
            trade,
            labor,
            capital,
            profit,
            final_demand,
            investment,
            intermediates,
            tariff,
        }
    }
}

fn eta_share(sector: &ToySector, own: usize, supplying: usize, ns: usize) -> f64 {
    if ns == 1 {
        1.0
    } else if supplying == own {
        sector.eta_own
    } else {
        (1.0 - sector.eta_own) / (ns - 1) as f64
    }
}

/// Symmetric-ish 2-region, 2-sector toy used across unit tests.
pub fn two_region_toy() -> ToySpec {
    ToySpec {
        regions: vec![
            ToyRegion {
                name: "alpha".into(),
                size: 1.0,
                home_share: vec![0.75, 0.7],
                export_weight: 1.0,
                savings: 0.2,
                tb: 0.0,
            },
            ToyRegion {
                name: "beta".into(),
                size: 0.6,
                home_share: vec![0.6, 0.65],
                export_weight: 0.7,
                savings: 0.25,
                tb: 0.0,
            },
        ],
        sectors: vec![
            ToySector {
                name: "goods".into(),
                theta: 4.0,
                kappa: 0.55,
                chi: 0.7,
                psi_m: 0.45,
                psi_l: 0.6,
                eta_own: 0.6,
            },
            ToySector {
                name: "services".into(),
                theta: 4.0,
                kappa: 0.45,
                chi: 0.3,
                psi_m: 0.35,
                psi_l: 0.7,
                eta_own: 0.55,
            },
        ],
        baseline_tariff_rate: 0.0,
        delta: 0.05,
        steady_investment: true,
        import_affinity: None,
    }
}

/// Four regions (two per bloc) with a rich-West / poor-East productivity
/// gradient, three sectors including electronics. This is the bundled toy the
/// decoupling experiments run on.
pub fn decoupling_toy() -> ToySpec {
    ToySpec {
        regions: vec![
            ToyRegion {
                name: "usa".into(),
                size: 1.0,
                home_share: vec![0.82, 0.74, 0.93],
                export_weight: 1.0,
                savings: 0.22,
                tb: 0.0,
            },
            ToyRegion {
                name: "lac".into(),
                size: 0.5,
                home_share: vec![0.62, 0.48, 0.88],
                export_weight: 0.5,
                savings: 0.20,
                tb: 0.0,
            },
            ToyRegion {
                name: "chn".into(),
                size: 0.6,
                home_share: vec![0.48, 0.38, 0.89],
                export_weight: 0.55,
                savings: 0.30,
                tb: 0.0,
            },
            ToyRegion {
                name: "ind".into(),
                size: 0.3,
                home_share: vec![0.40, 0.24, 0.86],
                export_weight: 0.25,
                savings: 0.24,
                tb: 0.0,
            },
        ],
        sectors: vec![
            ToySector {
                name: "pri".into(),
                theta: 10.09,
                kappa: 0.15,
                chi: 0.10,
                psi_m: 0.40,
                psi_l: 0.55,
                eta_own: 0.50,
            },
            ToySector {
                name: "elm".into(),
                theta: 7.80,
                kappa: 0.25,
                chi: 0.50,
                psi_m: 0.58,
                psi_l: 0.62,
                eta_own: 0.45,
            },
            ToySector {
                name: "ots".into(),
                theta: 2.90,
                kappa: 0.60,
                chi: 0.40,
                psi_m: 0.50,
                psi_l: 0.65,
                eta_own: 0.30,
            },
        ],
        baseline_tariff_rate: 0.0,
        delta: 0.05,
        steady_investment: true,
        // West trades mostly within-West; the East sources most of its
        // imports from the richer West.
        import_affinity: Some(vec![
            vec![1.0, 2.6, 0.45, 0.45], // into usa
            vec![2.6, 1.0, 0.45, 0.45], // into lac
            vec![1.8, 1.3, 1.0, 0.75],  // into chn
            vec![1.8, 1.3, 0.75, 1.0],  // into ind
        ]),
    }
}

/// Calibration parameters of the bundled decoupling toy. The dispersion and
/// factor-substitution elasticities match the three sectors of
/// [`decoupling_toy`]; the diffusion sensitivity is 0.44 with the arrival
/// rate growing 1.18% per year from a level chosen so baseline world real
/// income growth is about 3.6% per year. Twenty-one periods starting in 2020.
pub fn decoupling_params() -> CalibrationParams {
    CalibrationParams {
        theta: vec![10.09, 7.80, 2.90],
        sigma: Some(vec![3.0, 3.0, 3.0]),
        nu: Some(vec![0.27, 1.26, 1.42]),
        rho: Some(vec![0.0, 0.0, 0.0]),
        mu: Some(vec![0.0, 0.0, 0.0]),
        delta: Some(vec![0.05]),
        beta: 0.44,
        alpha0: DECOUPLING_ALPHA0,
        alpha_growth: 0.0118,
        horizon: 21,
        base_year: 2020,
        labor_path: None,
        population_path: None,
    }
}

/// Arrival-rate level of the bundled toy (see [`decoupling_params`]).
pub const DECOUPLING_ALPHA0: f64 = 0.039;

/// Degenerate closed economy with the given consumption and investment values.
pub fn single_region_flows(consumption: f64, investment: f64, theta: f64) -> BaselineFlows {
    let psi_m = 0.375;
    let psi_l = 0.6;
    let y = consumption + investment;
    let sales = y / (1.0 / (1.0 + theta) + theta / (1.0 + theta) * (1.0 - psi_m));
    single_region(sales, consumption, investment, theta, psi_m, psi_l)
}

/// Closed economy with the given labor/capital split inside value added.
pub fn single_region_flows_with_split(labor: f64, capital: f64, theta: f64) -> BaselineFlows {
    let va = labor + capital;
    let sales = va * (1.0 + theta) / theta;
    let profit = sales / (1.0 + theta);
    let income = va + profit;
    let savings = 0.2;
    single_region(
        sales,
        (1.0 - savings) * income,
        savings * income,
        theta,
        0.0,
        labor / va,
    )
}

fn single_region(
    sales: f64,
    consumption: f64,
    investment: f64,
    theta: f64,
    psi_m: f64,
    psi_l: f64,
) -> BaselineFlows {
    let input = sales * theta / (1.0 + theta);
    let interm = input * psi_m;
    let va = input - interm;
    let mut intermediates = IoGrid::zeros(1, 1);
    intermediates.set(0, 0, 0, interm);
    BaselineFlows {
        regions: vec!["home".into()],
        sectors: vec!["all".into()],
        trade: BilateralGrid::filled(1, 1, sales),
        labor: RsGrid::filled(1, 1, va * psi_l),
        capital: RsGrid::filled(1, 1, va * (1.0 - psi_l)),
        profit: RsGrid::filled(1, 1, sales / (1.0 + theta)),
        final_demand: RsGrid::filled(1, 1, consumption),
        investment: RsGrid::filled(1, 1, investment),
        intermediates,
        tariff: BilateralGrid::zeros(1, 1),
    }
}

/// Deterministic pseudo-random toy for property tests (xorshift; no rand
/// dependency in the library).
pub fn random_toy(seed: u64, n_regions: usize, n_sectors: usize) -> ToySpec {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).max(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let regions = (0..n_regions)
        .map(|d| ToyRegion {
            name: format!("r{d}"),
            size: 0.4 + 1.2 * next(),
            home_share: (0..n_sectors).map(|_| 0.55 + 0.35 * next()).collect(),
            export_weight: 0.3 + next(),
            savings: 0.12 + 0.2 * next(),
            tb: 0.0,
        })
        .collect();
    let mut kappa: Vec<f64> = (0..n_sectors).map(|_| 0.2 + next()).collect();
    let ksum: f64 = kappa.iter().sum();
    kappa.iter_mut().for_each(|k| *k /= ksum);
    let mut chi: Vec<f64> = (0..n_sectors).map(|_| 0.2 + next()).collect();
    let csum: f64 = chi.iter().sum();
    chi.iter_mut().for_each(|c| *c /= csum);
    let sectors = (0..n_sectors)
        .map(|i| ToySector {
            name: format!("s{i}"),
            theta: 3.0 + 5.0 * next(),
            kappa: kappa[i],
            chi: chi[i],
            psi_m: 0.25 + 0.4 * next(),
            psi_l: 0.45 + 0.3 * next(),
            eta_own: 0.3 + 0.4 * next(),
        })
        .collect();
    ToySpec {
        regions,
        sectors,
        baseline_tariff_rate: if next() > 0.7 { 0.05 } else { 0.0 },
        delta: 0.05,
        steady_investment: true,
        import_affinity: None,
    }
}
