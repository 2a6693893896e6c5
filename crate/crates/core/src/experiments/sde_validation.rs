use std::time::Instant;

use nalgebra::DVector;

use super::config::{Scenario, SdeValidationConfig};
use super::grid::check_sorted;
use super::result::ExperimentResult;
use super::stamp;
use crate::parallel::mean_and_stderr;
use crate::sde::{
    fluctuation_covariance, linear_sde_exact, sample_paths, solve_ode, LinearSde1d, RecordPlan,
    SampleOptions, SdeSystem,
};
use crate::weak_features::{
    generate_instance, instance_covariance_trace, ModelParams, WeakFeaturesSgf,
};
use crate::{Error, Result};

pub const SDE_COLUMNS: [&str; 13] = [
    "t",
    "exact_mean",
    "exact_var",
    "engine_mean",
    "engine_var",
    "mc_mean",
    "mc_mean_se",
    "mc_var",
    "mc_var_se",
    "rel_err_mean",
    "rel_err_var",
    "mc_var_z",
    "mc_within_3se",
];

/// Moments of `w(t)` from the exact solution, the fluctuation engine and
/// Euler–Maruyama paths. For the weak-features scenario "mean" is the first
/// coordinate and "var" the trace of the covariance; its exact column uses
/// the closed-form GF path with the spectral covariance-trace formula.
pub fn run_sde_validation(cfg: &SdeValidationConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    check_sorted("time", &cfg.times)?;
    if !(cfg.mc_dt > 0.0) || cfg.ode_steps == 0 {
        return Err(Error::arg("mc_dt and ode_steps must be positive"));
    }
    if !(cfg.gamma >= 0.0 && cfg.gamma.is_finite()) {
        return Err(Error::arg("gamma must be finite and non-negative"));
    }
    let steps: Vec<usize> = cfg
        .times
        .iter()
        .map(|t| (t / cfg.mc_dt).round() as usize)
        .collect();
    if steps.contains(&0) || cfg.times.iter().any(|t| !t.is_finite()) {
        return Err(Error::arg(
            "times must be finite and at least one Monte Carlo step",
        ));
    }
    let mut snapped: Vec<usize> = steps.clone();
    snapped.dedup();
    let times: Vec<f64> = snapped.iter().map(|k| *k as f64 * cfg.mc_dt).collect();

    let mut out = ExperimentResult::new(
        format!("sde_validation_{}", cfg.scenario.name()),
        &SDE_COLUMNS,
    );
    match cfg.scenario {
        Scenario::WeakFeatures { n, d, p, mu } => {
            let inst = generate_instance(&ModelParams::new(n, d, p, mu, cfg.gamma)?, cfg.seed)?;
            let sys = WeakFeaturesSgf::new(&inst);
            let b0 = inst.beta0_a();
            let exact = |t: f64| -> Result<(f64, f64)> {
                let m = inst.gf_estimator(&b0, t)?[0];
                Ok((
                    m,
                    cfg.gamma * instance_covariance_trace(&inst, &b0, t, cfg.quad_panels)?,
                ))
            };
            fill(&mut out, cfg, &sys, &b0, &times, &snapped, exact)?;
            out.set_meta("delta_sq", inst.delta_sq());
        }
        scenario => {
            let sde = match scenario {
                Scenario::Constant { a, b } => {
                    LinearSde1d::constant(a, b, cfg.y, cfg.w0, cfg.gamma)
                }
                Scenario::Pinning => LinearSde1d::pinning(cfg.y, cfg.w0, cfg.gamma),
                _ => LinearSde1d::time_varying(cfg.y, cfg.w0, cfg.gamma),
            };
            let w0 = DVector::from_element(1, cfg.w0);
            fill(&mut out, cfg, &sde, &w0, &times, &snapped, |t| {
                linear_sde_exact(&sde, t)
            })?;
        }
    }
    out.set_meta("config", cfg);
    out.set_meta("seed", cfg.seed);
    stamp(&mut out, start);
    Ok(out)
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        (a - b).abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn fill<S: SdeSystem>(
    out: &mut ExperimentResult,
    cfg: &SdeValidationConfig,
    sys: &S,
    w0: &DVector<f64>,
    times: &[f64],
    steps: &[usize],
    exact: impl Fn(f64) -> Result<(f64, f64)>,
) -> Result<()> {
    let ensemble = if cfg.mc_paths >= 2 {
        let opts = SampleOptions {
            record: RecordPlan::At(steps.to_vec()),
            threads: cfg.threads,
            ..Default::default()
        };
        let last = *steps.last().expect("non-empty grid");
        Some(sample_paths(
            sys,
            w0,
            cfg.gamma,
            cfg.mc_dt,
            last,
            cfg.mc_paths,
            cfg.seed,
            &opts,
        )?)
    } else {
        None
    };
    for &t in times {
        let (em, ev) = exact(t)?;
        let traj = solve_ode(sys, w0, 0.0, t, cfg.ode_steps)?;
        let cov = fluctuation_covariance(sys, &traj, t, cfg.gamma)?.cov_w();
        let gm = traj.states.last().expect("trajectory has states")[0];
        let gv = cov.trace();
        let (mm, mse, mv, mvse) = match &ensemble {
            Some(ens) => {
                let states = ens.states_at(t)?;
                let first: Vec<f64> = states.iter().map(|s| s[0]).collect();
                let (mm, mse) = mean_and_stderr(&first);
                let r = states.len() as f64;
                let mean = states
                    .iter()
                    .fold(DVector::zeros(w0.len()), |acc, s| acc + s)
                    / r;
                // unbiased trace of the sample covariance and its standard error
                let q: Vec<f64> = states
                    .iter()
                    .map(|s| (s - &mean).norm_squared() * r / (r - 1.0))
                    .collect();
                let (mv, mvse) = mean_and_stderr(&q);
                (mm, mse, mv, mvse)
            }
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        let z = if mvse > 0.0 {
            (mv - gv) / mvse
        } else {
            f64::NAN
        };
        let within = if mvse.is_nan() {
            f64::NAN
        } else {
            ((mv - gv).abs() <= 3.0 * mvse) as u8 as f64
        };
        out.push(vec![
            t,
            em,
            ev,
            gm,
            gv,
            mm,
            mse,
            mv,
            mvse,
            rel(gm, em),
            rel(gv, ev),
            z,
            within,
        ]);
    }
    Ok(())
}
