//! Gaussian beliefs and the closed-form 2-Wasserstein distance between them.
//!
//! Covariances are accepted when they are symmetric up to [`SYM_TOL`] and
//! positive semidefinite up to [`PSD_TOL`]; small violations from floating
//! point roundoff are repaired by symmetrizing and clamping negative
//! eigenvalues to zero, larger ones are rejected.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest tolerated asymmetry max |M_ij - M_ji| before a matrix is rejected.
pub const SYM_TOL: f64 = 1e-10;

/// Eigenvalues in [-PSD_TOL, 0) are clamped to zero; anything below fails.
pub const PSD_TOL: f64 = 1e-9;

/// Gaussian distribution over the state, used as a belief.
///
/// Construction validates the covariance, so a value of this type always
/// carries a symmetric positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianBelief {
    /// Builds a belief from a mean and covariance.
    ///
    /// The covariance must match the mean dimension, be symmetric up to
    /// [`SYM_TOL`], and have no eigenvalue below -[`PSD_TOL`].
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::Shape(format!(
                "covariance must be {n}x{n} to match the mean, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let cov = ensure_psd(cov)?;
        Ok(Self { mean, cov })
    }

    /// Point mass at `mean` (zero covariance).
    pub fn dirac(mean: DVector<f64>) -> Self {
        let n = mean.len();
        Self { mean, cov: DMatrix::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Second moment E|x|^2 = |mean|^2 + tr(cov).
    pub fn second_moment(&self) -> f64 {
        self.mean.norm_squared() + self.cov.trace()
    }
}

/// Maximum absolute difference between a matrix and its transpose.
fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Validates symmetry, then returns a symmetrized copy with any eigenvalue
/// in [-PSD_TOL, 0) clamped to zero. Eigenvalues below -PSD_TOL are an error.
pub(crate) fn ensure_psd(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let asym = max_asymmetry(&m);
    if asym > SYM_TOL {
        return Err(Error::NotSymmetric { max_asymmetry: asym, tolerance: SYM_TOL });
    }
    let sym = symmetrize(&m);
    // Fast path: a successful Cholesky proves positive definiteness.
    if sym.clone().cholesky().is_some() {
        return Ok(sym);
    }
    let eig = sym.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < -PSD_TOL {
        return Err(Error::NotPsd { min_eigenvalue: min, tolerance: PSD_TOL });
    }
    let clamped = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&v| v.max(0.0)),
    );
    let rebuilt =
        &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    Ok(symmetrize(&rebuilt))
}

/// Checks that `m` is square, symmetric up to [`SYM_TOL`], and positive
/// definite (Cholesky succeeds). Returns a symmetrized copy.
pub(crate) fn ensure_pd(name: &str, m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "{name} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = max_asymmetry(&m);
    if asym > SYM_TOL {
        return Err(Error::NotSymmetric { max_asymmetry: asym, tolerance: SYM_TOL });
    }
    let sym = symmetrize(&m);
    if sym.clone().cholesky().is_none() {
        return Err(Error::NotPd(name.to_string()));
    }
    Ok(sym)
}

/// Symmetric square root of a positive semidefinite matrix.
///
/// Uses the symmetric eigendecomposition M = V diag(l) V^T and returns
/// V diag(sqrt(max(l, 0))) V^T. Asymmetry beyond [`SYM_TOL`] or an
/// eigenvalue below -[`PSD_TOL`] is an error.
pub fn sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "matrix square root needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = max_asymmetry(m);
    if asym > SYM_TOL {
        return Err(Error::NotSymmetric { max_asymmetry: asym, tolerance: SYM_TOL });
    }
    let eig = symmetrize(m).symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < -PSD_TOL {
        return Err(Error::NotPsd { min_eigenvalue: min, tolerance: PSD_TOL });
    }
    let roots = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&v| v.max(0.0).sqrt()),
    );
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
    Ok(symmetrize(&root))
}

/// 2-Wasserstein distance between two Gaussians:
///
/// W2^2 = |m1 - m2|^2 + tr(P1 + P2 - 2 (P1^{1/2} P2 P1^{1/2})^{1/2}).
///
/// The squared distance is clamped to zero when roundoff drives it slightly
/// negative (never below -1e-9 for valid inputs).
pub fn w2_gaussian(b1: &GaussianBelief, b2: &GaussianBelief) -> Result<f64> {
    if b1.dim() != b2.dim() {
        return Err(Error::Shape(format!(
            "beliefs have different dimensions: {} vs {}",
            b1.dim(),
            b2.dim()
        )));
    }
    // Identical parameters mean zero distance; skipping the trace formula
    // avoids its ~1e-8 floating point floor, so exact coincidences (like a
    // window replay reproducing the exact filter bit for bit) report 0.
    if b1 == b2 {
        return Ok(0.0);
    }
    let dm = b1.mean() - b2.mean();
    let s1 = sqrt_psd(b1.cov())?;
    let inner = symmetrize(&(&s1 * b2.cov() * &s1));
    let cross = sqrt_psd(&inner)?;
    let w2_sq = dm.norm_squared() + b1.cov().trace() + b2.cov().trace() - 2.0 * cross.trace();
    Ok(w2_sq.max(0.0).sqrt())
}
