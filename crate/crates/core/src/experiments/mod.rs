//! Reproduction harness: phase and time sweeps of the SGD − GD risk gap,
//! the asymptotic `(t, α)` heatmap, GF risk curves, and SDE validation. Each
//! run returns an [`ExperimentResult`] table that [`write_result`] stores as
//! CSV plus a JSON sidecar.

mod config;
mod gf_curves;
mod grid;
mod heatmap;
mod phase;
mod result;
mod sde_validation;
mod time_sweep;

use std::time::Instant;

pub(crate) use config::grid_json;
pub use config::{
    ExperimentConfig, GfCurvesConfig, HeatmapConfig, PhaseSweepConfig, Scenario,
    SdeValidationConfig, SimulationScale, TimeSweepConfig,
};
pub use gf_curves::{run_gf_curves, GF_COLUMNS};
pub use grid::{check_sorted, linear_grid, log_grid};
pub use heatmap::{run_heatmap, HEATMAP_COLUMNS};
pub use phase::{run_phase_sweep, PHASE_COLUMNS};
pub use result::{format_cell, write_result, ExperimentResult, WrittenFiles};
pub use sde_validation::{run_sde_validation, SDE_COLUMNS};
pub use time_sweep::{regime, run_time_sweep, TIME_COLUMNS};

use crate::Result;

/// Runs any experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    match cfg {
        ExperimentConfig::PhaseSweep(c) => run_phase_sweep(c),
        ExperimentConfig::TimeSweep(c) => run_time_sweep(c),
        ExperimentConfig::Heatmap(c) => run_heatmap(c),
        ExperimentConfig::SdeValidation(c) => run_sde_validation(c),
        ExperimentConfig::GfCurves(c) => run_gf_curves(c),
    }
}

/// Adds the library version and wall time to the metadata.
fn stamp(out: &mut ExperimentResult, start: Instant) {
    out.set_meta("library", "sgflow");
    out.set_meta("version", env!("CARGO_PKG_VERSION"));
    out.set_meta("wall_time_s", start.elapsed().as_secs_f64());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_edges() {
        let cfg = HeatmapConfig {
            alphas: vec![0.5, 1.0, 1.5],
            times: vec![0.0, 1.0, f64::INFINITY],
            threads: 2,
            ..Default::default()
        };
        let r = run_heatmap(&cfg).unwrap();
        assert_eq!(r.rows.len(), 9);
        for row in &r.rows {
            if row[0] == 0.0 || (row[0].is_infinite() && row[1] >= 1.0) {
                assert_eq!(row[2], 0.0);
            }
            assert!(row[2] >= 0.0);
        }
    }

    #[test]
    fn linear_validation_is_accurate() {
        let cfg = SdeValidationConfig {
            scenario: Scenario::TimeVarying,
            mc_paths: 0,
            times: vec![0.5, 2.0],
            ..Default::default()
        };
        let r = run_sde_validation(&cfg).unwrap();
        for row in &r.rows {
            assert!(row[9] <= 1e-5 && row[10] <= 1e-5, "{row:?}");
            assert!(row[5].is_nan());
        }
    }

    #[test]
    fn small_simulation_runs_are_thread_independent() {
        let scale = SimulationScale {
            n: 20,
            d: 50,
            subsets: 6,
            ..Default::default()
        };
        let cfg = TimeSweepConfig {
            scale,
            times: vec![0.01, 1.0, 10.0],
            finite_replicates: 4,
            threads: 1,
            ..Default::default()
        };
        let a = run_time_sweep(&cfg).unwrap();
        let b = run_time_sweep(&TimeSweepConfig { threads: 3, ..cfg }).unwrap();
        assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
    }
}
