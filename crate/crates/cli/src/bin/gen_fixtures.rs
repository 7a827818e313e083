//! Regenerates everything under `data/`: the bundled toy (flows, parameters,
//! calibrated economy), the four scenario presets, the historical growth
//! panel, the example diffusion problem, and the golden CLI outputs.
//!
//! Run from the repository root: `cargo run -p tradediff-cli --bin gen-fixtures`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use tradediff_cli::commands::{self, ScenarioRunArgs, SimulateArgs};
use tradediff_core::diffusion::DiffusionProblem;
use tradediff_core::economy::calibrate_shares;
use tradediff_core::equilibrium::SolveOptions;
use tradediff_core::grid::RsGrid;
use tradediff_core::io;
use tradediff_core::scenario::{Bloc, PolicyShock, ShockKind};
use tradediff_core::toy;

/// Per-region average annual growth rates with exact sample moments: an
/// affine rescaling of a plausibility pattern.
fn moment_matched(pattern: &[f64], mean: f64, sd: f64) -> Vec<f64> {
    let n = pattern.len() as f64;
    let pattern_mean = pattern.iter().sum::<f64>() / n;
    let pattern_sd = (pattern
        .iter()
        .map(|p| (p - pattern_mean).powi(2))
        .sum::<f64>()
        / (n - 1.0))
        .sqrt();
    pattern
        .iter()
        .map(|p| mean + (p - pattern_mean) * sd / pattern_sd)
        .collect()
}

fn write_historical(path: &Path) {
    let regions = [
        "chn", "e27", "jpn", "ind", "lac", "ode", "rwc", "rwu", "rus", "usa",
    ];
    // Plausibility patterns; the affine map pins the cross-region sample
    // moments exactly (GDP 3.60/2.66, per capita 2.70/2.51).
    let gdp_pattern = [8.9, 1.3, 0.7, 6.9, 2.6, 2.0, 4.7, 2.7, 2.3, 2.1];
    let pc_pattern = [8.3, 1.1, 0.8, 5.4, 1.5, 1.3, 2.6, 1.6, 2.2, 1.4];
    let gdp_growth = moment_matched(&gdp_pattern, 3.60, 2.66);
    let pc_growth = moment_matched(&pc_pattern, 2.70, 2.51);
    let base_gdp = [11.0, 16.0, 5.3, 2.7, 5.6, 7.9, 6.2, 7.4, 2.1, 17.4];
    let base_pop = [
        1370.0, 445.0, 127.0, 1310.0, 625.0, 185.0, 2100.0, 540.0, 144.0, 319.0,
    ];

    let mut out = String::from("region,year,gdp,population\n");
    for (k, region) in regions.iter().enumerate() {
        let g = 1.0 + gdp_growth[k] / 100.0;
        // Population growth that delivers the per-capita rate exactly.
        let p = g / (1.0 + pc_growth[k] / 100.0);
        for (t, year) in (2004..=2019).enumerate() {
            let gdp = base_gdp[k] * g.powi(t as i32);
            let pop = base_pop[k] * p.powi(t as i32);
            out.push_str(&format!("{region},{year},{gdp},{pop}\n"));
        }
    }
    std::fs::write(path, out).unwrap();
}

fn preset(
    kind: ShockKind,
    magnitude: f64,
    sectors: Option<Vec<String>>,
    lac_bloc: Bloc,
) -> PolicyShock {
    let mut blocs = BTreeMap::new();
    blocs.insert("usa".to_string(), Bloc::West);
    blocs.insert("lac".to_string(), lac_bloc);
    blocs.insert("chn".to_string(), Bloc::East);
    blocs.insert("ind".to_string(), Bloc::East);
    PolicyShock {
        kind,
        magnitude_pp: magnitude,
        blocs,
        sectors,
        start: Some(2021),
        permanent: true,
    }
}

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let data = root.join("data");

    // Bundled toy: flows directory, parameters, calibrated economy.
    let flows = toy::decoupling_toy().build();
    let params = toy::decoupling_params();
    io::write_flows_dir(&data.join("toy/flows"), &flows, None).unwrap();
    io::write_json(&data.join("toy/params.json"), &params).unwrap();
    let economy = calibrate_shares(&flows, &params).unwrap();
    io::write_json(&data.join("toy/economy.json"), &economy).unwrap();

    // Scenario presets.
    io::write_json(
        &data.join("presets/full_decouple.json"),
        &preset(ShockKind::Iceberg, 160.0, None, Bloc::West),
    )
    .unwrap();
    io::write_json(
        &data.join("presets/tariff_decouple.json"),
        &preset(ShockKind::Tariff, 32.0, None, Bloc::West),
    )
    .unwrap();
    io::write_json(
        &data.join("presets/lac_switch.json"),
        &preset(ShockKind::Iceberg, 160.0, None, Bloc::East),
    )
    .unwrap();
    io::write_json(
        &data.join("presets/elm_only.json"),
        &preset(
            ShockKind::Iceberg,
            160.0,
            Some(vec!["elm".to_string()]),
            Bloc::West,
        ),
    )
    .unwrap();

    // Historical growth panel.
    write_historical(&data.join("historical/gdp.csv"));

    // Synthetic voting records: ten delegations with graded alignment to the
    // two anchors.
    write_votes(&data.join("votes/sample.csv"));

    // Example diffusion problem: two regions, two sectors, moderate home
    // advantage and frictions.
    let problem = DiffusionProblem {
        lambda: RsGrid::try_from(vec![vec![1.0, 0.8], vec![0.7, 1.1]]).unwrap(),
        xtilde: RsGrid::try_from(vec![vec![1.0, 1.0], vec![1.3, 1.25]]).unwrap(),
        eta: vec![vec![0.55, 0.45], vec![0.35, 0.65]],
        theta: vec![4.0, 6.0],
        beta: 0.44,
    };
    io::write_json(&data.join("diffusion/two_by_two.json"), &problem).unwrap();

    // Golden outputs through the same code paths the CLI uses.
    let golden = data.join("golden");
    std::fs::create_dir_all(&golden).unwrap();
    let tmp = tempdir(&root);
    commands::simulate_cmd(&SimulateArgs {
        economy: &data.join("toy/economy.json"),
        horizon: Some(20),
        scenario: None,
        out: &tmp,
        dump_grids: false,
        round: None,
        solver: SolveOptions::default(),
    })
    .unwrap();
    commands::report(
        &tmp,
        "real_income",
        Some(&golden.join("toy_real_income.csv")),
        None,
    )
    .unwrap();

    commands::scenario_run(&ScenarioRunArgs {
        economy: &data.join("toy/economy.json"),
        scenario: &data.join("presets/full_decouple.json"),
        diffusion: true,
        single_sector: false,
        horizon: None,
        anchors: None,
        bloc_overrides: None,
        out: &tmp,
        round: None,
        solver: SolveOptions::default(),
    })
    .unwrap();
    std::fs::copy(
        tmp.join("report.csv"),
        golden.join("toy_full_decouple_report.csv"),
    )
    .unwrap();
    std::fs::remove_dir_all(&tmp).unwrap();

    println!("fixtures regenerated under {}", data.display());
}

fn write_votes(path: &Path) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    // Alignment with the usa anchor, out of 100: the chn anchor votes the
    // mirror image; everyone else follows usa on `align` of every 100 votes
    // (deterministic cycle).
    let delegations: [(&str, u32); 10] = [
        ("usa", 100),
        ("e27", 88),
        ("jpn", 86),
        ("ode", 84),
        ("rwu", 72),
        ("lac", 60),
        ("rwc", 38),
        ("ind", 34),
        ("rus", 22),
        ("chn", 0),
    ];
    let mut out = String::from("vote,country,position\n");
    for vote in 0..120u32 {
        let usa_position = if vote % 2 == 0 { "yes" } else { "no" };
        let mirror = if usa_position == "yes" { "no" } else { "yes" };
        for (country, align) in delegations {
            // Occasional abstentions keep three positions in play.
            let roll = (vote * 37 + country.len() as u32 * 13) % 100;
            let position = if roll >= 94 {
                "abstain"
            } else if (vote * 53 + 17) % 100 < align {
                usa_position
            } else {
                mirror
            };
            out.push_str(&format!("v{vote},{country},{position}\n"));
        }
    }
    std::fs::write(path, out).unwrap();
}

fn tempdir(root: &Path) -> PathBuf {
    let dir = root.join("target/gen-fixtures-scratch");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
