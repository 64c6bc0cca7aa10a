//! Exact Kalman filtering and window-restart approximate beliefs.
//!
//! The exact belief is the usual Kalman recursion seeded at the model prior.
//! The finite-memory approximation keeps only the last H observations and
//! inputs: it rebuilds a boundary belief at the window start by applying a
//! single measurement update to the fixed prior (m0, P0), then replays the
//! Kalman recursion across the window. When the window covers the whole
//! history the replay reproduces the exact belief.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::GaussianBelief;
use crate::model::LqgModel;

/// A contiguous slice of realized history: observations y_s..y_t and the
/// inputs u_s..u_{t-1} applied between them.
///
/// Invariant: `observations.len() == inputs.len() + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IoWindow {
    /// Absolute time of the first observation in the window.
    pub start_time: usize,
    pub observations: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
}

impl IoWindow {
    pub fn new(
        start_time: usize,
        observations: Vec<DVector<f64>>,
        inputs: Vec<DVector<f64>>,
    ) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::Usage("a window needs at least one observation".into()));
        }
        if observations.len() != inputs.len() + 1 {
            return Err(Error::Usage(format!(
                "window must hold one more observation than inputs, got {} observations and {} inputs",
                observations.len(),
                inputs.len()
            )));
        }
        Ok(Self { start_time, observations, inputs })
    }

    /// Window ending at time `time` with at most `memory` steps of history,
    /// cut from full trajectories of observations y_0.. and inputs u_0...
    /// The window start is max(time - memory, 0).
    pub fn truncated(
        observations: &[DVector<f64>],
        inputs: &[DVector<f64>],
        time: usize,
        memory: usize,
    ) -> Result<Self> {
        if observations.len() <= time {
            return Err(Error::Usage(format!(
                "need observations up to time {time}, have {}",
                observations.len()
            )));
        }
        if inputs.len() < time {
            return Err(Error::Usage(format!(
                "need inputs up to time {}, have {}",
                time.saturating_sub(1),
                inputs.len()
            )));
        }
        let start = time.saturating_sub(memory);
        Self::new(
            start,
            observations[start..=time].to_vec(),
            inputs[start..time].to_vec(),
        )
    }

    /// Number of dynamics steps covered by the window.
    pub fn steps(&self) -> usize {
        self.inputs.len()
    }
}

fn check_obs(model: &LqgModel, y: &DVector<f64>) -> Result<()> {
    if y.len() != model.obs_dim() {
        return Err(Error::Shape(format!(
            "observation has length {}, expected {}",
            y.len(),
            model.obs_dim()
        )));
    }
    Ok(())
}

fn check_input(model: &LqgModel, u: &DVector<f64>) -> Result<()> {
    if u.len() != model.input_dim() {
        return Err(Error::Shape(format!(
            "input has length {}, expected {}",
            u.len(),
            model.input_dim()
        )));
    }
    Ok(())
}

/// Conditions a predicted belief on one observation.
///
/// Joseph-form update: with K = P C' S^{-1} and S = C P C' + sigma_v,
/// the posterior covariance is (I - KC) P (I - KC)' + K sigma_v K',
/// which stays symmetric PSD under roundoff.
fn measurement_update(
    model: &LqgModel,
    predicted: &GaussianBelief,
    y: &DVector<f64>,
) -> Result<GaussianBelief> {
    let c = &model.c;
    let p = predicted.cov();
    let s = c * p * c.transpose() + &model.sigma_v;
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::Conditioning("innovation covariance is not positive definite".into()))?;
    // K' = S^{-1} C P, so K = (S^{-1} C P)'.
    let k = chol.solve(&(c * p)).transpose();
    let innovation = y - c * predicted.mean();
    let mean = predicted.mean() + &k * innovation;
    let n = model.state_dim();
    let i_kc = DMatrix::identity(n, n) - &k * c;
    let cov = &i_kc * p * i_kc.transpose() + &k * &model.sigma_v * k.transpose();
    GaussianBelief::new(mean, cov)
}

/// One exact filter step: propagate the belief through the dynamics with
/// input `u`, then condition on the next observation `y_next`.
pub fn kalman_step(
    model: &LqgModel,
    belief: &GaussianBelief,
    u: &DVector<f64>,
    y_next: &DVector<f64>,
) -> Result<GaussianBelief> {
    if belief.dim() != model.state_dim() {
        return Err(Error::Shape(format!(
            "belief has dimension {}, expected {}",
            belief.dim(),
            model.state_dim()
        )));
    }
    check_input(model, u)?;
    check_obs(model, y_next)?;
    let mean_pred = &model.a * belief.mean() + &model.b * u;
    let cov_pred = &model.a * belief.cov() * model.a.transpose() + &model.sigma_w;
    let predicted = GaussianBelief::new(mean_pred, cov_pred)?;
    measurement_update(model, &predicted, y_next)
}

/// Belief a window-restart filter assigns to the window start: the fixed
/// prior (m0, P0) conditioned on the single observation `y`. No dynamics
/// propagation is applied to the prior.
pub fn boundary_belief(model: &LqgModel, y: &DVector<f64>) -> Result<GaussianBelief> {
    check_obs(model, y)?;
    measurement_update(model, &model.prior, y)
}

/// Finite-memory belief: boundary belief at the window start, then a Kalman
/// replay along the recorded inputs and observations.
pub fn finite_memory_belief(model: &LqgModel, window: &IoWindow) -> Result<GaussianBelief> {
    let mut belief = boundary_belief(model, &window.observations[0])?;
    for (u, y) in window.inputs.iter().zip(&window.observations[1..]) {
        belief = kalman_step(model, &belief, u, y)?;
    }
    Ok(belief)
}

/// Observation-only variant: replays the window pretending every input was
/// zero. Quantifies what dropping the input history from the window costs.
pub fn obs_only_belief(
    model: &LqgModel,
    observations: &[DVector<f64>],
    start_time: usize,
) -> Result<GaussianBelief> {
    if observations.is_empty() {
        return Err(Error::Usage("a window needs at least one observation".into()));
    }
    let zero = DVector::zeros(model.input_dim());
    let window = IoWindow::new(
        start_time,
        observations.to_vec(),
        vec![zero; observations.len() - 1],
    )?;
    finite_memory_belief(model, &window)
}
