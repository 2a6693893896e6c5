use super::measure::{MpMeasure, QuadratureValue, DEFAULT_NODES};
use crate::Result;

const MAX_NODES: usize = 3200;
const CONVERGENCE_TOL: f64 = 1e-9;

/// `K(t, σ1, σ2) = (e^{-2σ1 t} - e^{-2σ2 t}) / (2(σ2 - σ1))`, the time
/// integral `∫₀ᵗ e^{-2σ1 τ} e^{-2σ2 (t-τ)} dτ`.
///
/// Within a relative gap of `1e-7` the removable singularity is replaced by
/// its series about the midpoint, `t e^{-2σ̄t} (1 + ((σ2 - σ1) t)² / 6)`.
pub fn kernel_k(t: f64, s1: f64, s2: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let gap = s2 - s1;
    if gap.abs() <= 1e-7 * s1.abs().max(s2.abs()).max(1.0) {
        let mid = 0.5 * (s1 + s2);
        let x = gap * t; // 2δt
        return t * (-2.0 * mid * t).exp() * (1.0 + x * x / 6.0);
    }
    ((-2.0 * s1 * t).exp() - (-2.0 * s2 * t).exp()) / (2.0 * gap)
}

fn tensor(alpha: f64, t: f64, nodes: usize, weight: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let meas = MpMeasure::new(alpha)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let (sig, w) = meas.nodes(nodes);
    let mut acc = 0.0;
    for (si, wi) in sig.iter().zip(&w) {
        let mut row = 0.0;
        for (sj, wj) in sig.iter().zip(&w) {
            row += wj * weight(*si, *sj) * kernel_k(t, *si, *sj);
        }
        acc += wi * row;
    }
    Ok(acc)
}

fn doubled(f: impl Fn(usize) -> Result<f64>) -> Result<QuadratureValue> {
    let mut n = DEFAULT_NODES;
    let mut prev = f(n)?;
    while n < MAX_NODES {
        n *= 2;
        let next = f(n)?;
        if (next - prev).abs() < CONVERGENCE_TOL * next.abs().max(1.0) {
            return Ok(QuadratureValue {
                value: next,
                nodes: n,
                converged: true,
            });
        }
        prev = next;
    }
    Ok(QuadratureValue {
        value: prev,
        nodes: n,
        converged: false,
    })
}

/// `F1(α, t) = ∬ σ1 σ2 K(t, σ1, σ2) ρ_α(dσ1) ρ_α(dσ2)` on a fixed tensor grid.
pub fn f1_with_nodes(alpha: f64, t: f64, nodes: usize) -> Result<f64> {
    tensor(alpha, t, nodes, |a, b| a * b)
}

/// `F2(α, t)` through the symmetrised weight `(σ1 + σ2)/2`.
pub fn f2_with_nodes(alpha: f64, t: f64, nodes: usize) -> Result<f64> {
    tensor(alpha, t, nodes, |a, b| 0.5 * (a + b))
}

/// `F2(α, t)` through the asymmetric weight `σ2`; equal to
/// [`f2_with_nodes`] because `K` is symmetric.
pub fn f2_asymmetric(alpha: f64, t: f64, nodes: usize) -> Result<f64> {
    tensor(alpha, t, nodes, |_, b| b)
}

/// `F1(α, t)` with node doubling until successive values agree to `1e-9`.
pub fn f1(alpha: f64, t: f64) -> Result<QuadratureValue> {
    doubled(|n| f1_with_nodes(alpha, t, n))
}

/// `F2(α, t)` with node doubling until successive values agree to `1e-9`.
pub fn f2(alpha: f64, t: f64) -> Result<QuadratureValue> {
    doubled(|n| f2_with_nodes(alpha, t, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_reference_values() {
        let want = ((-2.0f64).exp() - (-4.0f64).exp()) / 2.0;
        assert!((kernel_k(1.0, 1.0, 2.0) - want).abs() < 1e-15);
        assert!((kernel_k(1.0, 1.0, 2.0) - 0.058_509_8).abs() < 1e-7);
        for (t, s) in [(0.5f64, 0.3f64), (3.0, 1.7), (10.0, 0.01)] {
            let diag = t * (-2.0 * s * t).exp();
            assert!((kernel_k(t, s, s) - diag).abs() <= 1e-15 * diag.max(1.0));
            // both sides of the series threshold against a cancellation-free form
            let scale = s.max(1.0);
            for (rel_gap, tol) in [
                (0.5e-7, 1e-13),
                (0.999e-7, 1e-12),
                (1.001e-7, 1e-8),
                (5e-7, 1e-8),
            ] {
                let gap = rel_gap * scale;
                let accurate = (-2.0 * s * t).exp() * -(-2.0 * gap * t).exp_m1() / (2.0 * gap);
                let got = kernel_k(t, s, s + gap);
                assert!(
                    (got - accurate).abs() <= tol * accurate,
                    "t={t} s={s} gap={gap}"
                );
            }
        }
    }

    #[test]
    fn kernel_matches_direct_time_integral() {
        for (t, a, b) in [(1.0f64, 0.2f64, 3.0f64), (4.0, 1.0, 1.0), (0.3, 5.0, 0.1)] {
            let direct = crate::quadrature::adaptive(0.0, t, 1e-14, 1e-13, |tau: f64| {
                (-2.0 * a * tau).exp() * (-2.0 * b * (t - tau)).exp()
            })
            .value;
            assert!((kernel_k(t, a, b) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn f_functions_vanish_at_zero_and_infinity() {
        assert_eq!(f1(0.5, 0.0).unwrap().value, 0.0);
        assert_eq!(f2(0.5, 0.0).unwrap().value, 0.0);
        // independent reference: ∫ T₁(τ)T₁(t-τ)dτ by nested adaptive quadrature
        let late = f1(0.5, 50.0).unwrap();
        assert!(
            (late.value - 1.245_221_232_558_66e-7).abs() < 1e-12,
            "{}",
            late.value
        );
        assert!(f1(0.5, 100.0).unwrap().value.abs() < 1e-10);
    }

    #[test]
    fn f2_representations_agree() {
        for alpha in [0.3, 1.0, 2.0] {
            for t in [0.1, 1.0, 7.0] {
                let a = f2_with_nodes(alpha, t, 400).unwrap();
                let b = f2_asymmetric(alpha, t, 400).unwrap();
                assert!((a - b).abs() < 1e-12, "alpha={alpha} t={t}");
            }
        }
    }
}
