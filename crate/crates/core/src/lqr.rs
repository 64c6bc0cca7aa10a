//! Infinite-horizon discrete LQR synthesis via fixed-point iteration on the
//! discrete algebraic Riccati equation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::LqgModel;

/// Successive-iterate Frobenius change below which the iteration stops.
pub const DARE_TOL: f64 = 1e-12;

/// Iteration budget for the Riccati fixed point.
pub const DARE_MAX_ITERS: usize = 100_000;

/// Residual ceiling for a gain to be considered valid.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Certainty-equivalent LQR controller, u = -K m.
#[derive(Debug, Clone)]
pub struct LqrGain {
    pub k: DMatrix<f64>,
    /// Stabilizing Riccati solution.
    pub p_dare: DMatrix<f64>,
    /// Frobenius norm of the Riccati equation residual at `p_dare`.
    pub residual: f64,
    /// Spectral radius of A - B K.
    pub closed_loop_radius: f64,
}

/// Frobenius norm of A'PA - A'PB (R + B'PB)^{-1} B'PA + Q - P.
fn dare_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<f64> {
    let step = riccati_map(a, b, q, r, p)?;
    Ok((&step - p).norm())
}

/// One application of the Riccati map at P.
fn riccati_map(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let atp = a.transpose() * p;
    let gram = r + b.transpose() * p * b;
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Conditioning("R + B'PB is not positive definite".into()))?;
    let btpa = b.transpose() * p * a;
    let gain_term = (&atp * b) * chol.solve(&btpa);
    let next = &atp * a - gain_term + q;
    Ok((&next + next.transpose()) * 0.5)
}

/// Solves the discrete algebraic Riccati equation by iterating the Riccati
/// map from P = Q until the change drops below [`DARE_TOL`]. Returns the
/// solution and its equation residual.
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, f64)> {
    let n = a.nrows();
    if a.ncols() != n || q.shape() != (n, n) || b.nrows() != n {
        return Err(Error::Shape("A, B, Q dimensions are inconsistent".into()));
    }
    let m = b.ncols();
    if r.shape() != (m, m) {
        return Err(Error::Shape(format!(
            "R must be {m}x{m}, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    let mut p = q.clone();
    for iteration in 1..=DARE_MAX_ITERS {
        let next = riccati_map(a, b, q, r, &p)?;
        let change = (&next - &p).norm();
        p = next;
        if change < DARE_TOL {
            let residual = dare_residual(a, b, q, r, &p)?;
            if residual > RESIDUAL_TOL {
                return Err(Error::NoConvergence { iterations: iteration, residual });
            }
            return Ok((p, residual));
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::NoConvergence { iterations: iteration, residual: f64::INFINITY });
        }
    }
    let residual = dare_residual(a, b, q, r, &p)?;
    Err(Error::NoConvergence { iterations: DARE_MAX_ITERS, residual })
}

/// Largest eigenvalue magnitude.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

/// Solves the Riccati equation for the model and assembles the LQR gain
/// K = (R + B'PB)^{-1} B'PA together with diagnostics.
pub fn lqr_gain(model: &LqgModel) -> Result<LqrGain> {
    let (p_dare, residual) = solve_dare(&model.a, &model.b, &model.q, &model.r)?;
    let gram = &model.r + model.b.transpose() * &p_dare * &model.b;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Conditioning("R + B'PB is not positive definite".into()))?;
    let k = chol.solve(&(model.b.transpose() * &p_dare * &model.a));
    let closed_loop_radius = spectral_radius(&(&model.a - &model.b * &k));
    Ok(LqrGain { k, p_dare, residual, closed_loop_radius })
}
