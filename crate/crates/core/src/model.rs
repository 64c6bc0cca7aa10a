//! Discrete-time linear-Gaussian plant with quadratic stage cost.
//!
//! Dynamics: x' = A x + B u + w,  w ~ N(0, sigma_w)
//! Sensing:  y  = C x + v,        v ~ N(0, sigma_v)
//! Cost:     c(x, u) = x'Qx + u'Ru, discounted by gamma per step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{ensure_pd, ensure_psd, GaussianBelief};

/// Model parameters. Construct through [`LqgModel::new`] or
/// [`LqgModel::double_integrator`] so the shape and definiteness
/// invariants hold.
#[derive(Debug, Clone)]
pub struct LqgModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub sigma_w: DMatrix<f64>,
    pub sigma_v: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    /// Initial belief (m0, P0); also the fixed prior that window-restart
    /// filters restart from.
    pub prior: GaussianBelief,
    /// Discount factor, strictly inside (0, 1).
    pub gamma: f64,
}

impl LqgModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        sigma_w: DMatrix<f64>,
        sigma_v: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        prior: GaussianBelief,
        gamma: f64,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Shape(format!("A must be square, got {}x{}", n, a.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::Shape(format!("B must have {n} rows, got {}", b.nrows())));
        }
        let m = b.ncols();
        if c.ncols() != n {
            return Err(Error::Shape(format!("C must have {n} columns, got {}", c.ncols())));
        }
        let p = c.nrows();
        if sigma_w.shape() != (n, n) {
            return Err(Error::Shape(format!(
                "process noise covariance must be {n}x{n}, got {}x{}",
                sigma_w.nrows(),
                sigma_w.ncols()
            )));
        }
        if sigma_v.shape() != (p, p) {
            return Err(Error::Shape(format!(
                "observation noise covariance must be {p}x{p}, got {}x{}",
                sigma_v.nrows(),
                sigma_v.ncols()
            )));
        }
        if q.shape() != (n, n) {
            return Err(Error::Shape(format!(
                "Q must be {n}x{n}, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if r.shape() != (m, m) {
            return Err(Error::Shape(format!(
                "R must be {m}x{m}, got {}x{}",
                r.nrows(),
                r.ncols()
            )));
        }
        if prior.dim() != n {
            return Err(Error::Shape(format!(
                "prior has dimension {}, expected {n}",
                prior.dim()
            )));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Domain(format!(
                "discount factor must lie in (0, 1), got {gamma}"
            )));
        }
        let sigma_w = ensure_psd(sigma_w)?;
        let q = ensure_psd(q)?;
        let sigma_v = ensure_pd("observation noise covariance", sigma_v)?;
        let r = ensure_pd("R", r)?;
        Ok(Self { a, b, c, sigma_w, sigma_v, q, r, prior, gamma })
    }

    /// Position-velocity double integrator sampled at step `dt`:
    ///
    /// A = [[1, dt], [0, 1]], B = [dt^2/2, dt]^T, C = [1, 0].
    pub fn double_integrator(
        dt: f64,
        sigma_w: DMatrix<f64>,
        sigma_v: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        prior: GaussianBelief,
        gamma: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        let a = DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[dt * dt / 2.0, dt]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        Self::new(a, b, c, sigma_w, sigma_v, q, r, prior, gamma)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn obs_dim(&self) -> usize {
        self.c.nrows()
    }

    /// Stage cost c(x, u) = x'Qx + u'Ru.
    pub fn stage_cost(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        if x.len() != self.state_dim() {
            return Err(Error::Shape(format!(
                "state has length {}, expected {}",
                x.len(),
                self.state_dim()
            )));
        }
        if u.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has length {}, expected {}",
                u.len(),
                self.input_dim()
            )));
        }
        Ok(x.dot(&(&self.q * x)) + u.dot(&(&self.r * u)))
    }

    /// Expected stage cost under a belief:
    /// E[x'Qx] + u'Ru = m'Qm + tr(Q P) + u'Ru.
    pub fn belief_stage_cost(&self, belief: &GaussianBelief, u: &DVector<f64>) -> Result<f64> {
        if belief.dim() != self.state_dim() {
            return Err(Error::Shape(format!(
                "belief has dimension {}, expected {}",
                belief.dim(),
                self.state_dim()
            )));
        }
        if u.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has length {}, expected {}",
                u.len(),
                self.input_dim()
            )));
        }
        let m = belief.mean();
        Ok(m.dot(&(&self.q * m)) + (&self.q * belief.cov()).trace() + u.dot(&(&self.r * u)))
    }
}
