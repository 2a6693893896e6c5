//! Experiment-level guarantees: golden heatmap, reruns from embedded
//! metadata, and the paired simulation design.

use std::fs;
use std::path::Path;

use sgflow::experiments::{
    run_experiment, write_result, ExperimentConfig, HeatmapConfig, SimulationScale,
    TimeSweepConfig, HEATMAP_COLUMNS,
};

fn golden_config() -> HeatmapConfig {
    HeatmapConfig {
        alphas: vec![0.25, 0.5, 1.0, 1.5, 2.0],
        times: vec![0.1, 1.0, 10.0, f64::INFINITY],
        threads: 1,
        ..Default::default()
    }
}

const GOLDEN: &str = "tests/fixtures/heatmap_golden.csv";

/// Set `SGFLOW_BLESS=1` to regenerate the fixture.
#[test]
fn heatmap_matches_golden_file() {
    let result = run_experiment(&ExperimentConfig::Heatmap(golden_config())).unwrap();
    let csv = result.to_csv_string().unwrap();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(GOLDEN);
    if std::env::var_os("SGFLOW_BLESS").is_some() {
        fs::write(&path, &csv).unwrap();
    }
    let golden = fs::read_to_string(&path).expect("golden fixture missing");

    let parse = |text: &str| -> (String, Vec<Vec<f64>>) {
        let mut lines = text.lines();
        let header = lines.next().unwrap().to_string();
        let rows = lines
            .map(|l| {
                l.split(',')
                    .map(|c| {
                        if c.is_empty() {
                            f64::NAN
                        } else {
                            c.parse().unwrap()
                        }
                    })
                    .collect()
            })
            .collect();
        (header, rows)
    };
    let (gh, grows) = parse(&golden);
    let (h, rows) = parse(&csv);
    assert_eq!(h, HEATMAP_COLUMNS.join(","));
    assert_eq!(gh, h);
    assert_eq!(rows.len(), grows.len());
    assert_eq!(rows.len(), 20);
    for (r, g) in rows.iter().zip(&grows) {
        // keys exactly, values to rounding
        assert_eq!((r[0], r[1]), (g[0], g[1]));
        assert!(
            (r[2] - g[2]).abs() <= 1e-12 * g[2].abs().max(1e-12),
            "{r:?} vs {g:?}"
        );
        assert_eq!(r[3], g[3]);
    }
    // independent nested scipy quadrature of the correction formula
    for (t, alpha, value) in [
        (0.1, 0.25, 0.005754852141796255),
        (1.0, 0.5, 0.030713806450830123),
        (10.0, 2.0, 6.738387880579143e-05),
        (f64::INFINITY, 0.5, 0.02625),
    ] {
        let row = rows.iter().find(|r| r[0] == t && r[1] == alpha).unwrap();
        assert!(
            (row[2] - value).abs() <= 1e-10 * value,
            "t {t} alpha {alpha}: {} vs {value}",
            row[2]
        );
    }
    // long form sorted by (t, alpha)
    for w in rows.windows(2) {
        assert!((w[0][0], w[0][1]) < (w[1][0], w[1][1]));
    }
}

#[test]
fn results_rerun_identically_from_their_metadata() {
    let cfg = ExperimentConfig::TimeSweep(TimeSweepConfig {
        scale: SimulationScale {
            n: 16,
            d: 40,
            subsets: 5,
            ..Default::default()
        },
        alpha: 0.5,
        times: vec![0.1, 1.0, 10.0],
        finite_replicates: 6,
        seed: 9,
        threads: 1,
        ..Default::default()
    });
    let dir = tempfile::tempdir().unwrap();
    let files = write_result(&run_experiment(&cfg).unwrap(), dir.path()).unwrap();
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&files.meta).unwrap()).unwrap();
    let embedded: sgflow::experiments::TimeSweepConfig =
        serde_json::from_value(meta["config"].clone()).unwrap();
    assert_eq!(ExperimentConfig::TimeSweep(embedded.clone()), cfg);
    let again = run_experiment(&ExperimentConfig::TimeSweep(embedded)).unwrap();
    assert_eq!(
        again.to_csv_string().unwrap(),
        fs::read_to_string(&files.csv).unwrap()
    );

    // the heatmap embeds an infinite time and still round-trips
    let files = write_result(
        &run_experiment(&ExperimentConfig::Heatmap(golden_config())).unwrap(),
        dir.path(),
    )
    .unwrap();
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&files.meta).unwrap()).unwrap();
    let embedded: HeatmapConfig = serde_json::from_value(meta["config"].clone()).unwrap();
    assert_eq!(embedded, golden_config());
}

#[test]
fn paired_standard_error_beats_unpaired() {
    use sgflow::weak_features::{sgd_minus_gd_expectation, ModelParams, SimOptions};
    let params = ModelParams::new(20, 50, 10, 0.5, 1.0 / 50.0).unwrap();
    let c = sgd_minus_gd_expectation(
        &params,
        &[1.0, 10.0, 50.0],
        40,
        1,
        2,
        SimOptions {
            batch_size: 1,
            threads: 1,
        },
    )
    .unwrap();
    for k in 0..c.times.len() {
        let unpaired = (c.gd_se[k].powi(2) + c.sgd_se[k].powi(2)).sqrt();
        // GD and SGD share instance and start, so their difference is far
        // less noisy than either arm
        assert!(
            c.diff_se[k] > 0.0 && c.diff_se[k] < 0.5 * unpaired,
            "t = {}: {} vs {unpaired}",
            c.times[k],
            c.diff_se[k]
        );
        assert!((c.diff_mean[k] - (c.sgd_mean[k] - c.gd_mean[k])).abs() < 1e-12);
    }
}
