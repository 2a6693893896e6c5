//! Property tests for the structural guarantees of each layer.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use sgflow::cli::{CliSection, ExperimentsSection, FileConfig, MpSection, WeakFeaturesSection};
use sgflow::experiments::{
    ExperimentConfig, HeatmapConfig, PhaseSweepConfig, Scenario, SdeValidationConfig,
};
use sgflow::mp::{
    f1, f1_with_nodes, f2_asymmetric, f2_with_nodes, inverse_moment_closed_form, kernel_k,
    mp_integral, sgf_correction_asymptotic, AsymptoticParams, DEFAULT_NODES,
};
use sgflow::sde::{
    fluctuation_covariance, jacobian_fd, propagator, sample_paths, solve_ode, FnSystem, RecordPlan,
    SampleOptions, SdeSystem, DEFAULT_FD_STEP,
};
use sgflow::weak_features::{
    asymptotic_risk_curve, finite_risk_curve, generate_instance, FiniteOptions, ModelParams,
    SpectrumSampler,
};

/// `dw = A(w - c)dτ + √γ G dη` with `A = -(MMᵀ + εI) + S`, `S` skew, so the
/// flow is stable.
fn linear_system(m: [f64; 4], skew: f64, g: [f64; 4], c: [f64; 2]) -> FnSystem {
    let m = DMatrix::from_row_slice(2, 2, &m);
    let s = DMatrix::from_row_slice(2, 2, &[0.0, skew, -skew, 0.0]);
    let a = -(&m * m.transpose() + DMatrix::identity(2, 2) * 0.1) + s;
    let g = DMatrix::from_row_slice(2, 2, &g);
    let c = DVector::from_column_slice(&c);
    let a2 = a.clone();
    FnSystem::new(2, 2, move |_, w| &a * (w - &c), move |_, _| g.clone())
        .with_jacobian(move |_, _| a2.clone())
}

fn entry() -> impl Strategy<Value = f64> {
    -1.5..1.5f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fluctuation_covariance_is_symmetric_psd(
        m in prop::array::uniform4(entry()),
        skew in -2.0..2.0f64,
        g in prop::array::uniform4(entry()),
        t in 0.05..4.0f64,
    ) {
        let sys = linear_system(m, skew, g, [0.3, -0.2]);
        let w0 = DVector::from_column_slice(&[1.0, 0.5]);
        let traj = solve_ode(&sys, &w0, 0.0, t, 200).unwrap();
        let cov = fluctuation_covariance(&sys, &traj, t, 0.01).unwrap().cov_z;
        prop_assert!((&cov - cov.transpose()).amax() <= 1e-12 * cov.amax().max(1e-300));
        let eig = cov.symmetric_eigen().eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        prop_assert!(lo >= -1e-10 * hi.abs(), "eigenvalues {lo} {hi}");
    }

    #[test]
    fn propagator_composes(
        m in prop::array::uniform4(entry()),
        skew in -2.0..2.0f64,
        i in 0usize..=100,
        j in 0usize..=100,
        k in 0usize..=100,
    ) {
        let sys = linear_system(m, skew, [1.0, 0.0, 0.0, 1.0], [0.0, 0.0]);
        let w0 = DVector::from_column_slice(&[1.0, -1.0]);
        let traj = solve_ode(&sys, &w0, 0.0, 2.0, 100).unwrap();
        let mut idx = [i, j, k];
        idx.sort();
        let [u, s, t] = idx.map(|x| traj.grid[x]);
        let whole = propagator(&traj, u, t).unwrap();
        let split = propagator(&traj, s, t).unwrap() * propagator(&traj, u, s).unwrap();
        prop_assert!((&whole - &split).amax() <= 1e-8 * whole.amax().max(1.0));
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences(
        a in 0.2..3.0f64,
        b in -1.0..1.0f64,
        w1 in -2.0..2.0f64,
        w2 in -2.0..2.0f64,
        tau in 0.0..5.0f64,
    ) {
        // nonlinear drift (-a w1³ + b sin w2 + cos τ, -w2 + w1 w2)
        let sys = FnSystem::new(
            2,
            1,
            move |tau, w| DVector::from_column_slice(&[-a * w[0].powi(3) + b * w[1].sin() + tau.cos(), -w[1] + w[0] * w[1]]),
            |_, _| DMatrix::from_element(2, 1, 1.0),
        )
        .with_jacobian(move |_, w| {
            DMatrix::from_row_slice(2, 2, &[-3.0 * a * w[0] * w[0], b * w[1].cos(), w[1], -1.0 + w[0]])
        });
        let w = DVector::from_column_slice(&[w1, w2]);
        let exact = sys.jacobian(tau, &w).unwrap();
        let fd = jacobian_fd(&sys, tau, &w, DEFAULT_FD_STEP);
        for (e, f) in exact.iter().zip(fd.iter()) {
            prop_assert!((e - f).abs() <= 1e-5f64.max(1e-4 * e.abs()), "{e} vs {f}");
        }
    }

    #[test]
    fn kernel_symmetric_nonnegative_with_diagonal_limit(
        t in 0.0..20.0f64,
        s1 in 1e-3..5.0f64,
        s2 in 1e-3..5.0f64,
    ) {
        let k12 = kernel_k(t, s1, s2);
        prop_assert_eq!(k12, kernel_k(t, s2, s1));
        prop_assert!(k12 >= 0.0);
        let diag = t * (-2.0 * s1 * t).exp();
        prop_assert!((kernel_k(t, s1, s1) - diag).abs() <= 1e-14 * diag.max(1e-300) + 1e-300);
        // approaching the diagonal is continuous
        let near = kernel_k(t, s1, s1 * (1.0 + 1e-9));
        prop_assert!((near - diag).abs() <= 1e-6 * diag + 1e-300);
    }

    #[test]
    fn asymptotic_sgf_correction_nonnegative(
        alpha in 0.05..3.0f64,
        extra in 0.01..3.0f64,
        mu in 0.0..2.0f64,
        gp in 0.1..4.0f64,
        t in 0.01..200.0f64,
    ) {
        let p = AsymptoticParams { alpha, psi: alpha + extra, mu, gamma_prime: gp, ..Default::default() };
        prop_assert!(sgf_correction_asymptotic(&p, t).unwrap() >= 0.0);
    }

    #[test]
    fn asymptotic_curve_decomposes(
        alpha in 0.05..2.4f64,
        mu in 0.0..1.5f64,
        t0 in 0.0..1.0f64,
    ) {
        let p = AsymptoticParams { alpha, ..Default::default() };
        let times = [t0, t0 + 1.0, t0 + 10.0];
        let curve = asymptotic_risk_curve(&AsymptoticParams { mu, ..p }, &times).unwrap();
        for r in &curve.records {
            prop_assert_eq!(r.sgf_risk, r.gf_risk + r.sgf_correction);
            prop_assert!(r.sgf_correction >= 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gf_estimator_solves_the_flow_and_keeps_null_space(
        n in 3usize..12,
        extra in 0usize..10,
        seed in any::<u64>(),
        t in 0.05..5.0f64,
    ) {
        let p = n + extra; // p ≥ n: X_A has a null space when extra > 0
        let inst = generate_instance(&ModelParams::new(n, p + 5, p, 0.5, 0.0).unwrap(), seed).unwrap();
        let b0 = inst.beta0_a();
        let h = 1e-4;
        let plus = inst.gf_estimator(&b0, t + h).unwrap();
        let minus = inst.gf_estimator(&b0, t - h).unwrap();
        let deriv = (plus - minus) / (2.0 * h);
        let b = inst.gf_estimator(&b0, t).unwrap();
        let rhs = inst.x_a.transpose() * inst.residual(&b) / n as f64;
        prop_assert!((&deriv - &rhs).norm() <= 1e-5 * rhs.norm().max(1e-8), "{} vs {}", deriv.norm(), rhs.norm());

        // movement lies in the row space of X_A
        let xxt = &inst.x_a * inst.x_a.transpose();
        let proj_row = inst.x_a.transpose() * xxt.try_inverse().unwrap() * &inst.x_a;
        let moved = &b - &b0;
        let null_part = &moved - &proj_row * &moved;
        prop_assert!(null_part.norm() <= 1e-8 * (1.0 + moved.norm()));
    }

    #[test]
    fn train_loss_never_increases(
        n in 3usize..15,
        p in 1usize..20,
        seed in any::<u64>(),
    ) {
        let inst = generate_instance(&ModelParams::new(n, p + 3, p, 0.5, 0.0).unwrap(), seed).unwrap();
        let b0 = inst.beta0_a();
        let mut last = f64::INFINITY;
        for k in 0..40 {
            let t = if k == 0 { 0.0 } else { 1e-3 * 1.5f64.powi(k) };
            let loss = inst.train_loss(&inst.gf_estimator(&b0, t).unwrap());
            prop_assert!(loss <= last * (1.0 + 1e-12) + 1e-15, "t = {t}: {loss} > {last}");
            last = loss;
        }
    }

    #[test]
    fn finite_curve_decomposes_and_correction_is_nonnegative(
        n in 4usize..30,
        alpha_frac in 0.1..2.0f64,
        seed in any::<u64>(),
    ) {
        let p = ((n as f64 * alpha_frac).round() as usize).max(1);
        let params = ModelParams::new(n, p + n, p, 0.5, 1.0 / (p + n) as f64).unwrap();
        let curve = finite_risk_curve(&params, &[0.0, 0.5, 5.0], 4, seed, FiniteOptions { threads: 1, ..Default::default() }).unwrap();
        for r in &curve.records {
            prop_assert_eq!(r.sgf_risk, r.gf_risk + r.sgf_correction);
            prop_assert!(r.sgf_correction >= 0.0);
        }
    }
}

fn opt<T: std::fmt::Debug + Clone + 'static>(
    s: impl Strategy<Value = T> + 'static,
) -> BoxedStrategy<Option<T>> {
    prop::option::of(s).boxed()
}

fn finite_f64() -> BoxedStrategy<f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        -10.0..10.0f64
    ]
    .boxed()
}

fn file_config() -> impl Strategy<Value = FileConfig> {
    let cli = (
        opt("[ -~]{0,12}"),
        opt(0..=i64::MAX as u64),
        opt(0usize..64),
    )
        .prop_map(|(out, seed, threads)| CliSection { out, seed, threads });
    let mp = (
        opt(finite_f64()),
        opt(finite_f64()),
        opt(finite_f64()),
        opt(finite_f64()),
        opt(finite_f64()),
        opt(finite_f64()),
    )
        .prop_map(
            |(alpha, psi, mu, gamma_prime, norm_beta_sq, delta_sq)| MpSection {
                alpha,
                psi,
                mu,
                gamma_prime,
                norm_beta_sq,
                delta_sq,
            },
        );
    let wf = (
        (
            opt(0usize..5000),
            opt(0usize..5000),
            opt(0usize..5000),
            opt(finite_f64()),
            opt(finite_f64()),
            opt(finite_f64()),
        ),
        (
            opt(0usize..1000),
            opt(0usize..1000),
            opt(prop_oneof![
                Just(SpectrumSampler::Dense),
                Just(SpectrumSampler::Bidiagonal)
            ]),
        ),
        (
            opt(0usize..1000),
            opt(0usize..10),
            opt(0usize..10),
            opt(0usize..100_000),
            opt(0usize..1000),
        ),
    )
        .prop_map(
            |(
                (n, d, p, mu, gamma_prime, norm_beta),
                (replicates, quad_panels, sampler),
                (subsets, sgd_seeds, batch_size, iters, record_every),
            )| {
                WeakFeaturesSection {
                    n,
                    d,
                    p,
                    mu,
                    gamma_prime,
                    norm_beta,
                    replicates,
                    quad_panels,
                    sampler,
                    subsets,
                    sgd_seeds,
                    batch_size,
                    iters,
                    record_every,
                }
            },
        );
    let ex = (
        (
            opt("[ -~]{0,20}"),
            opt("[ -~]{0,20}"),
            opt(finite_f64()),
            opt(0usize..1000),
            opt("[a-z_]{0,12}"),
        ),
        (
            opt(finite_f64()),
            opt(0usize..100_000),
            opt(finite_f64()),
            opt(0usize..100_000),
            opt(prop_oneof![
                Just("desk".to_string()),
                Just("paper".to_string())
            ]),
        ),
    )
        .prop_map(
            |(
                (t_grid, alphas, t, finite_replicates, scenario),
                (gamma, mc_paths, mc_dt, ode_steps, preset),
            )| {
                ExperimentsSection {
                    t_grid,
                    alphas,
                    t,
                    finite_replicates,
                    scenario,
                    gamma,
                    mc_paths,
                    mc_dt,
                    ode_steps,
                    preset,
                }
            },
        );
    (cli, mp, wf, ex).prop_map(
        |(cli, mp_asymptotics, weak_features, experiments)| FileConfig {
            cli,
            mp_asymptotics,
            weak_features,
            experiments,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn file_config_round_trips(cfg in file_config()) {
        let text = cfg.to_toml().unwrap();
        prop_assert_eq!(FileConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn experiment_config_round_trips_through_json(
        seed in any::<u64>(),
        threads in 0usize..16,
        alphas in prop::collection::vec(1e-3..5.0f64, 1..6),
        times in prop::collection::vec(prop_oneof![1e-3..1e3f64, Just(f64::INFINITY)], 1..6),
        psi in 0.5..5.0f64,
        gamma in 1e-4..1.0f64,
        which in 0usize..3,
    ) {
        let cfg = match which {
            0 => ExperimentConfig::PhaseSweep(PhaseSweepConfig { alphas, seed, threads, ..Default::default() }),
            1 => ExperimentConfig::Heatmap(HeatmapConfig { psi, alphas, times, threads, ..Default::default() }),
            _ => ExperimentConfig::SdeValidation(SdeValidationConfig {
                scenario: Scenario::Constant { a: psi, b: gamma },
                gamma,
                seed,
                threads,
                ..Default::default()
            }),
        };
        let text = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
    }
}

#[test]
fn marchenko_pastur_mass_mean_and_inverse_moment() {
    let grid: Vec<f64> = (0..15)
        .map(|k| 0.05 * (400f64).powf(k as f64 / 14.0))
        .collect();
    for alpha in grid {
        let mass = mp_integral(alpha, |_| 1.0, DEFAULT_NODES).unwrap();
        let mean = mp_integral(alpha, |s| s, DEFAULT_NODES).unwrap();
        assert!(
            (mass - 1f64.min(1.0 / alpha)).abs() < 1e-8,
            "alpha {alpha}: mass {mass}"
        );
        assert!((mean - 1.0).abs() < 1e-8, "alpha {alpha}: mean {mean}");
        if (alpha - 1.0).abs() > 0.05 {
            let inv = alpha * mp_integral(alpha, |s| 1.0 / s, DEFAULT_NODES).unwrap();
            let expected = if alpha < 1.0 {
                1.0 / (1.0 - alpha) - 1.0
            } else {
                1.0 / (alpha - 1.0)
            };
            assert!(
                (inv - expected).abs() < 1e-7 * expected.max(1.0),
                "alpha {alpha}: {inv} vs {expected}"
            );
            assert!(
                (inverse_moment_closed_form(alpha).unwrap() - expected).abs()
                    < 1e-12 * expected.max(1.0)
            );
        }
    }
}

#[test]
fn f2_representations_agree() {
    for alpha in [0.2, 0.5, 0.9, 1.5, 3.0] {
        for t in [0.1, 1.0, 5.0] {
            let sym = f2_with_nodes(alpha, t, DEFAULT_NODES).unwrap();
            let asym = f2_asymmetric(alpha, t, DEFAULT_NODES).unwrap();
            assert!(
                (sym - asym).abs() <= 1e-9 * sym.abs().max(1.0),
                "alpha {alpha} t {t}"
            );
        }
    }
}

#[test]
fn converged_theory_is_stable_under_node_doubling() {
    let mut converged = 0;
    for alpha in [0.25, 0.5, 2.0] {
        for t in [0.1, 1.0, 10.0, 100.0] {
            let q = f1(alpha, t).unwrap();
            if q.converged {
                converged += 1;
                let again = f1_with_nodes(alpha, t, 2 * q.nodes).unwrap();
                assert!(
                    (again - q.value).abs() <= 1e-6 * q.value.abs().max(1e-12),
                    "alpha {alpha} t {t}"
                );
            }
        }
    }
    assert!(converged >= 9, "only {converged} of 12 points converged");
}

#[test]
fn path_ensembles_ignore_the_schedule() {
    let sys = linear_system([0.5, 0.1, -0.2, 0.7], 0.3, [1.0, 0.2, 0.0, 0.5], [0.0, 1.0]);
    let w0 = DVector::from_column_slice(&[1.0, 0.0]);
    let run = |threads| {
        let opts = SampleOptions {
            threads,
            record: RecordPlan::Every(10),
            ..Default::default()
        };
        sample_paths(&sys, &w0, 0.01, 0.01, 100, 37, 9, &opts)
            .unwrap()
            .paths
    };
    assert_eq!(run(1), run(3));
}
