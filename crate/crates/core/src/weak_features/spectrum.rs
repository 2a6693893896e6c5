use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{sym_eigenvalues, tridiagonal_eigenvalues};
use crate::{Error, Result};

/// How the nonzero spectrum of `X_AᵀX_A / n` is sampled for a fresh Gaussian
/// `X_A ∈ R^{n×p}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSampler {
    /// Draw the dense Gaussian matrix and diagonalise the smaller Gram matrix.
    /// Cost O(n p min(n, p)).
    Dense,
    /// Draw the bidiagonal Laguerre model with chi-distributed entries, which
    /// has exactly the same eigenvalue law. Cost O(min(n, p)²).
    #[default]
    Bidiagonal,
}

fn chi(rng: &mut impl Rng, dof: usize) -> Result<f64> {
    let dist = ChiSquared::new(dof as f64)
        .map_err(|e| Error::Evaluation(format!("chi-squared({dof}): {e}")))?;
    Ok(dist.sample(rng).sqrt())
}

/// The `r = min(n, p)` eigenvalues `λ_i²/n` of `X_AᵀX_A / n` in descending
/// order, for `X_A` with i.i.d. standard normal entries.
pub fn sample_spectrum(
    n: usize,
    p: usize,
    sampler: SpectrumSampler,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    if n == 0 || p == 0 {
        return Err(Error::arg("spectrum needs n >= 1 and p >= 1"));
    }
    let scale = 1.0 / n as f64;
    let mut eig = match sampler {
        SpectrumSampler::Dense => {
            let x = DMatrix::<f64>::from_fn(n, p, |_, _| StandardNormal.sample(rng));
            let gram = if p <= n {
                x.transpose() * &x
            } else {
                &x * x.transpose()
            };
            sym_eigenvalues(&gram)
        }
        SpectrumSampler::Bidiagonal => {
            // Lower bidiagonal B with diag χ_{m}, χ_{m-1}, … and sub-diagonal
            // χ_{k-1}, χ_{k-2}, …; B Bᵀ shares the law of the k×k Wishart.
            let m = n.max(p);
            let k = n.min(p);
            let mut diag = Vec::with_capacity(k);
            let mut sub = Vec::with_capacity(k.saturating_sub(1));
            for i in 0..k {
                diag.push(chi(rng, m - i)?);
                if i + 1 < k {
                    sub.push(chi(rng, k - 1 - i)?);
                }
            }
            let t_diag: Vec<f64> = (0..k)
                .map(|i| diag[i] * diag[i] + if i > 0 { sub[i - 1] * sub[i - 1] } else { 0.0 })
                .collect();
            let t_off: Vec<f64> = (0..k.saturating_sub(1)).map(|i| diag[i] * sub[i]).collect();
            tridiagonal_eigenvalues(&t_diag, &t_off)?
        }
    };
    for v in eig.iter_mut() {
        *v = v.max(0.0) * scale;
    }
    eig.reverse();
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::{mean_and_stderr, task_rng};

    // Wishart moments: E Tr W = n p, E Tr W² = n p (n + p + 1) for W = XᵀX.
    fn moments(n: usize, p: usize, sampler: SpectrumSampler) -> ((f64, f64), (f64, f64)) {
        let reps = 4000;
        let mut m1 = Vec::with_capacity(reps);
        let mut m2 = Vec::with_capacity(reps);
        for r in 0..reps {
            let mut rng = task_rng(17, r as u64);
            let s = sample_spectrum(n, p, sampler, &mut rng).unwrap();
            let nf = n as f64;
            m1.push(s.iter().map(|x| x * nf).sum::<f64>());
            m2.push(s.iter().map(|x| (x * nf).powi(2)).sum::<f64>());
        }
        (mean_and_stderr(&m1), mean_and_stderr(&m2))
    }

    #[test]
    fn both_samplers_reproduce_wishart_moments() {
        for (n, p) in [(7usize, 3usize), (4, 9), (5, 5)] {
            let (nf, pf) = (n as f64, p as f64);
            for sampler in [SpectrumSampler::Dense, SpectrumSampler::Bidiagonal] {
                let ((a1, s1), (a2, s2)) = moments(n, p, sampler);
                assert!(
                    (a1 - nf * pf).abs() < 4.0 * s1,
                    "{sampler:?} n={n} p={p}: {a1}"
                );
                let want2 = nf * pf * (nf + pf + 1.0);
                assert!(
                    (a2 - want2).abs() < 4.0 * s2,
                    "{sampler:?} n={n} p={p}: {a2} vs {want2}"
                );
            }
        }
    }

    #[test]
    fn shape_and_order() {
        let mut rng = task_rng(1, 0);
        for sampler in [SpectrumSampler::Dense, SpectrumSampler::Bidiagonal] {
            let s = sample_spectrum(10, 4, sampler, &mut rng).unwrap();
            assert_eq!(s.len(), 4);
            assert!(s.windows(2).all(|w| w[0] >= w[1]) && s[3] > 0.0);
            assert_eq!(sample_spectrum(3, 8, sampler, &mut rng).unwrap().len(), 3);
        }
    }
}
