use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::system::SdeSystem;
use crate::linalg::expm;
use crate::{Error, Result};

/// Default relative central-difference step for [`jacobian_fd`].
pub const DEFAULT_FD_STEP: f64 = 1e-6;
const FD_FLOOR: f64 = 1e-8;

/// Deterministic flow `w_ode(τ)` on a uniform grid, with the drift Jacobian
/// cached at every node.
#[derive(Debug, Clone)]
pub struct OdeTrajectory {
    pub t0: f64,
    pub t_end: f64,
    pub grid: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub jacobians: Vec<DMatrix<f64>>,
    step_exps: OnceLock<Vec<DMatrix<f64>>>,
}

impl OdeTrajectory {
    /// Grid spacing.
    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.steps() as f64
    }

    /// Number of steps `N` (the grid has `N + 1` nodes).
    pub fn steps(&self) -> usize {
        self.grid.len() - 1
    }

    /// Index of the node nearest to `tau`, clamped to the grid.
    pub fn nearest_index(&self, tau: f64) -> usize {
        let k = ((tau - self.t0) / self.dt()).round();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.steps())
        }
    }

    /// Index of the node equal to `tau` (within rounding), or an error if
    /// `tau` is off the grid.
    pub fn index_of(&self, tau: f64) -> Result<usize> {
        let k = self.nearest_index(tau);
        let tol = 1e-9 * self.dt().max(f64::MIN_POSITIVE) + 1e-12 * tau.abs();
        if (self.grid[k] - tau).abs() > tol || tau < self.t0 - tol || tau > self.t_end + tol {
            return Err(Error::arg(format!(
                "time {tau} is not a node of the trajectory grid [{}, {}] with step {}",
                self.t0,
                self.t_end,
                self.dt()
            )));
        }
        Ok(k)
    }

    /// State at the node equal to `tau`.
    pub fn state_at(&self, tau: f64) -> Result<&DVector<f64>> {
        Ok(&self.states[self.index_of(tau)?])
    }

    /// Per-step propagators `exp(½(F_k + F_{k+1}) Δτ)`, computed once.
    ///
    /// The trapezoidal generator makes each factor exact for Jacobians that
    /// vary affinely in time and commute, and second-order accurate otherwise.
    pub fn step_exponentials(&self) -> &[DMatrix<f64>] {
        self.step_exps.get_or_init(|| {
            let dt = self.dt();
            self.jacobians
                .windows(2)
                .map(|w| expm(&((&w[0] + &w[1]) * (0.5 * dt))))
                .collect()
        })
    }
}

/// Central finite-difference Jacobian `∂f_i/∂w_j` with step
/// `max(h_rel·|w_j|, 1e-8)`.
pub fn jacobian_fd<S: SdeSystem + ?Sized>(
    system: &S,
    tau: f64,
    w: &DVector<f64>,
    h_rel: f64,
) -> DMatrix<f64> {
    let d = w.len();
    let mut jac = DMatrix::zeros(system.dim_state(), d);
    let mut wp = w.clone();
    for j in 0..d {
        let h = (h_rel * w[j].abs()).max(FD_FLOOR);
        let orig = wp[j];
        wp[j] = orig + h;
        let fp = system.drift(tau, &wp);
        wp[j] = orig - h;
        let fm = system.drift(tau, &wp);
        wp[j] = orig;
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    jac
}

fn check_finite(v: &DVector<f64>, tau: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence(format!(
            "non-finite ODE state at tau = {tau}"
        )))
    }
}

/// Integrates `dw/dτ = f(τ, w)` from `t0` to `t_end` with `steps` classical
/// Runge–Kutta steps and caches the drift Jacobian at every node.
pub fn solve_ode<S: SdeSystem + ?Sized>(
    system: &S,
    w0: &DVector<f64>,
    t0: f64,
    t_end: f64,
    steps: usize,
) -> Result<OdeTrajectory> {
    if steps == 0 {
        return Err(Error::arg("solve_ode needs at least one step"));
    }
    if !(t_end > t0) || !t0.is_finite() || !t_end.is_finite() {
        return Err(Error::arg(format!(
            "solve_ode needs finite t_end > t0, got [{t0}, {t_end}]"
        )));
    }
    if w0.len() != system.dim_state() {
        return Err(Error::arg(format!(
            "initial state has length {}, system dimension is {}",
            w0.len(),
            system.dim_state()
        )));
    }
    check_finite(w0, t0)?;
    let dt = (t_end - t0) / steps as f64;
    let mut grid = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    grid.push(t0);
    states.push(w0.clone());
    let mut w = w0.clone();
    for k in 0..steps {
        let tau = t0 + k as f64 * dt;
        let k1 = system.drift(tau, &w);
        let k2 = system.drift(tau + 0.5 * dt, &(&w + &k1 * (0.5 * dt)));
        let k3 = system.drift(tau + 0.5 * dt, &(&w + &k2 * (0.5 * dt)));
        let k4 = system.drift(tau + dt, &(&w + &k3 * dt));
        w += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let next = if k + 1 == steps {
            t_end
        } else {
            t0 + (k + 1) as f64 * dt
        };
        check_finite(&w, next)?;
        grid.push(next);
        states.push(w.clone());
    }
    let jacobians = grid
        .iter()
        .zip(&states)
        .map(|(tau, s)| {
            system
                .jacobian(*tau, s)
                .unwrap_or_else(|| jacobian_fd(system, *tau, s, DEFAULT_FD_STEP))
        })
        .collect();
    Ok(OdeTrajectory {
        t0,
        t_end,
        grid,
        states,
        jacobians,
        step_exps: OnceLock::new(),
    })
}
