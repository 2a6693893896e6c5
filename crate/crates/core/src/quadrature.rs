//! One-dimensional quadrature: Gauss–Legendre rules (fixed and composite),
//! adaptive Gauss–Kronrod, and Newton–Cotes weights on uniform grids.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the rule by Newton iteration on the Legendre polynomial
    /// `P_n`, starting from the Chebyshev-like initial guesses.
    pub fn compute(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared, lazily built rule with `n` nodes.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|p| p.into_inner());
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::compute(n)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]` with this rule.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Maps the rule to `[a, b]`, returning `(points, weights)`.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let pts = self.nodes.iter().map(|x| mid + half * x).collect();
        let wts = self.weights.iter().map(|w| w * half).collect();
        (pts, wts)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (pn, pn1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * pn - pn1) / (x * x - 1.0);
    (pn, d)
}

/// Nodes per panel used by [`composite_gauss_legendre`].
pub const PANEL_NODES: usize = 8;

/// Quadrature points and weights of a composite Gauss–Legendre rule with
/// `panels` equal panels of [`PANEL_NODES`] nodes each over `[a, b]`.
pub fn composite_gauss_legendre_points(a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::cached(PANEL_NODES);
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut pts = Vec::with_capacity(panels * PANEL_NODES);
    let mut wts = Vec::with_capacity(panels * PANEL_NODES);
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let hi = if k + 1 == panels { b } else { lo + h };
        let (p, w) = rule.mapped(lo, hi);
        pts.extend(p);
        wts.extend(w);
    }
    (pts, wts)
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]`.
pub fn composite_gauss_legendre(
    a: f64,
    b: f64,
    panels: usize,
    mut f: impl FnMut(f64) -> f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let (pts, wts) = composite_gauss_legendre_points(a, b, panels);
    pts.iter().zip(&wts).map(|(x, w)| w * f(*x)).sum()
}

// Gauss-Kronrod 7/15 abscissae and weights (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod abscissae 1, 3, 5, 7.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Outcome of [`adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveResult {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Subintervals with the largest error estimate are bisected until the total
/// estimate drops below `max(abs_tol, rel_tol·|I|)`.
pub fn adaptive(
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    mut f: impl FnMut(f64) -> f64,
) -> AdaptiveResult {
    if a == b {
        return AdaptiveResult {
            value: 0.0,
            error_estimate: 0.0,
            converged: true,
        };
    }
    const MAX_INTERVALS: usize = 2000;
    let (v, e) = gk15(a, b, &mut f);
    let mut intervals = vec![(a, b, v, e)];
    loop {
        let total: f64 = intervals.iter().map(|s| s.2).sum();
        let err: f64 = intervals.iter().map(|s| s.3).sum();
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol || intervals.len() >= MAX_INTERVALS {
            return AdaptiveResult {
                value: total,
                error_estimate: err,
                converged: err <= tol,
            };
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty interval list");
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval cannot be split further in floating point.
            let total: f64 = intervals.iter().map(|s| s.2).sum::<f64>() + gk15(lo, hi, &mut f).0;
            return AdaptiveResult {
                value: total,
                error_estimate: err,
                converged: false,
            };
        }
        let (v1, e1) = gk15(lo, mid, &mut f);
        let (v2, e2) = gk15(mid, hi, &mut f);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Integration weights for samples on the uniform grid `0..=m` with spacing
/// `h`: composite Simpson when `m` is even, Simpson plus a closing 3/8 panel
/// when `m` is odd, trapezoid for `m = 1`.
pub fn uniform_grid_weights(m: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; m + 1];
    match m {
        0 => {}
        1 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
        }
        _ => {
            let simpson_end = if m.is_multiple_of(2) { m } else { m - 3 };
            let mut k = 0;
            while k < simpson_end {
                w[k] += h / 3.0;
                w[k + 1] += 4.0 * h / 3.0;
                w[k + 2] += h / 3.0;
                k += 2;
            }
            if m % 2 == 1 {
                let c = 3.0 * h / 8.0;
                w[m - 3] += c;
                w[m - 2] += 3.0 * c;
                w[m - 1] += 3.0 * c;
                w[m] += c;
            }
        }
    }
    w
}

/// Composite trapezoid weights on the uniform grid `0..=m`.
pub fn trapezoid_weights(m: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; m + 1];
    if m == 0 {
        w[0] = 0.0;
    } else {
        w[0] = 0.5 * h;
        w[m] = 0.5 * h;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 8, 17] {
            let rule = GaussLegendre::compute(n);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n={n}");
            // exact for degree 2n-1
            let deg = 2 * n - 1;
            let got = rule.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            assert!((got - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn large_rules_are_accurate() {
        let rule = GaussLegendre::compute(800);
        let got = rule.integrate(0.0, std::f64::consts::PI, f64::sin);
        assert!((got - 2.0).abs() < 1e-13);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn composite_rule_handles_exponentials() {
        let got = composite_gauss_legendre(0.0, 10.0, 64, |x| (-3.0 * x).exp());
        let exact = (1.0 - (-30.0f64).exp()) / 3.0;
        assert!((got - exact).abs() < 1e-14);
    }

    #[test]
    fn adaptive_resolves_peaks() {
        let r = adaptive(0.0, 1.0, 1e-12, 0.0, |x| 1.0 / (1e-3 + (x - 0.3).powi(2)));
        let s = 1e-3f64.sqrt();
        let exact = ((0.7 / s).atan() + (0.3 / s).atan()) / s;
        assert!(r.converged);
        assert!((r.value - exact).abs() < 1e-9, "{} vs {exact}", r.value);
    }

    #[test]
    fn grid_weights_integrate_cubics() {
        for m in 1..12usize {
            let h = 0.5;
            let w = uniform_grid_weights(m, h);
            let got: f64 = w
                .iter()
                .enumerate()
                .map(|(k, wk)| wk * (k as f64 * h).powi(if m == 1 { 1 } else { 3 }))
                .sum();
            let b = m as f64 * h;
            let exact = if m == 1 { b * b / 2.0 } else { b.powi(4) / 4.0 };
            assert!((got - exact).abs() < 1e-12, "m={m}: {got} vs {exact}");
        }
        let t = trapezoid_weights(4, 0.25);
        assert_eq!(t, vec![0.125, 0.25, 0.25, 0.25, 0.125]);
    }
}
