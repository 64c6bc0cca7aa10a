//! Python bindings for the finite-memory belief laboratory: Gaussian
//! beliefs, the exact and window-restart filters, Riccati gain synthesis,
//! closed-loop rollouts, and the mismatch and cost estimators.
//!
//! Vectors cross the boundary as flat `list[float]`, matrices as row-major
//! `list[list[float]]`.

use membelief::config::SweepConfig;
use membelief::error::Error;
use membelief::filter::IoWindow;
use membelief::gaussian::GaussianBelief;
use membelief::lqr::LqrGain;
use membelief::metrics::{CostBelief, MismatchEstimate};
use membelief::model::LqgModel;
use membelief::sim::{RolloutOptions, TrajectoryRecord};
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyIOError, PyKeyError, PyValueError};
use pyo3::prelude::*;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(err) => PyIOError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("matrix needs at least one row"));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(
            "matrix rows must be non-empty and all the same length",
        ));
    }
    let data: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &data))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn vectors(rows: &[Vec<f64>]) -> Vec<DVector<f64>> {
    rows.iter().map(|r| DVector::from_vec(r.clone())).collect()
}

/// Gaussian state belief N(mean, cov) with a validated PSD covariance.
#[pyclass(name = "GaussianBelief", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGaussianBelief {
    inner: GaussianBelief,
}

#[pymethods]
impl PyGaussianBelief {
    #[new]
    fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> PyResult<Self> {
        let inner =
            GaussianBelief::new(DVector::from_vec(mean), matrix(&cov)?).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        vec_of(self.inner.mean())
    }

    #[getter]
    fn cov(&self) -> Vec<Vec<f64>> {
        matrix_rows(self.inner.cov())
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// E[x'x] = |mean|^2 + trace(cov).
    fn second_moment(&self) -> f64 {
        self.inner.second_moment()
    }

    fn __repr__(&self) -> String {
        format!("GaussianBelief(dim={}, mean={:?})", self.inner.dim(), self.mean())
    }
}

/// Linear-Gaussian control model: dynamics (A, B), observation C, noise
/// covariances, quadratic cost weights, prior belief, and discount factor.
#[pyclass(name = "LqgModel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLqgModel {
    inner: LqgModel,
}

#[pymethods]
impl PyLqgModel {
    #[new]
    #[allow(clippy::too_many_arguments)]
    fn new(
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        sigma_w: Vec<Vec<f64>>,
        sigma_v: Vec<Vec<f64>>,
        q: Vec<Vec<f64>>,
        r: Vec<Vec<f64>>,
        prior: &PyGaussianBelief,
        gamma: f64,
    ) -> PyResult<Self> {
        let inner = LqgModel::new(
            matrix(&a)?,
            matrix(&b)?,
            matrix(&c)?,
            matrix(&sigma_w)?,
            matrix(&sigma_v)?,
            matrix(&q)?,
            matrix(&r)?,
            prior.inner.clone(),
            gamma,
        )
        .map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Position-velocity double integrator observed in position only.
    #[staticmethod]
    #[allow(clippy::too_many_arguments)]
    fn double_integrator(
        dt: f64,
        sigma_w: Vec<Vec<f64>>,
        sigma_v: Vec<Vec<f64>>,
        q: Vec<Vec<f64>>,
        r: Vec<Vec<f64>>,
        prior: &PyGaussianBelief,
        gamma: f64,
    ) -> PyResult<Self> {
        let inner = LqgModel::double_integrator(
            dt,
            matrix(&sigma_w)?,
            matrix(&sigma_v)?,
            matrix(&q)?,
            matrix(&r)?,
            prior.inner.clone(),
            gamma,
        )
        .map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// The default desk-scale experiment model.
    #[staticmethod]
    fn desk() -> PyResult<Self> {
        let inner = SweepConfig::desk().build_model().map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn a(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.inner.a)
    }

    #[getter]
    fn b(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.inner.b)
    }

    #[getter]
    fn c(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.inner.c)
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn prior(&self) -> PyGaussianBelief {
        PyGaussianBelief { inner: self.inner.prior.clone() }
    }

    #[getter]
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    #[getter]
    fn obs_dim(&self) -> usize {
        self.inner.obs_dim()
    }

    fn __repr__(&self) -> String {
        format!(
            "LqgModel(state_dim={}, input_dim={}, obs_dim={}, gamma={})",
            self.inner.state_dim(),
            self.inner.input_dim(),
            self.inner.obs_dim(),
            self.inner.gamma
        )
    }
}

/// Infinite-horizon LQR solution: feedback gain and Riccati diagnostics.
#[pyclass(name = "LqrGain", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLqrGain {
    inner: LqrGain,
}

#[pymethods]
impl PyLqrGain {
    #[getter]
    fn k(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.inner.k)
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn closed_loop_radius(&self) -> f64 {
        self.inner.closed_loop_radius
    }

    fn __repr__(&self) -> String {
        format!(
            "LqrGain(k={:?}, closed_loop_radius={:.4})",
            self.k(),
            self.inner.closed_loop_radius
        )
    }
}

/// One simulated closed-loop trajectory with exact and window-restart
/// beliefs recorded at every step.
#[pyclass(name = "TrajectoryRecord", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTrajectoryRecord {
    inner: TrajectoryRecord,
}

#[pymethods]
impl PyTrajectoryRecord {
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon
    }

    #[getter]
    fn states(&self) -> Vec<Vec<f64>> {
        self.inner.states.iter().map(vec_of).collect()
    }

    #[getter]
    fn observations(&self) -> Vec<Vec<f64>> {
        self.inner.observations.iter().map(vec_of).collect()
    }

    #[getter]
    fn inputs(&self) -> Vec<Vec<f64>> {
        self.inner.inputs.iter().map(vec_of).collect()
    }

    #[getter]
    fn true_beliefs(&self) -> Vec<PyGaussianBelief> {
        self.inner
            .true_beliefs
            .iter()
            .map(|b| PyGaussianBelief { inner: b.clone() })
            .collect()
    }

    /// Memory lengths whose window-restart beliefs were recorded.
    fn memory_lengths(&self) -> Vec<usize> {
        self.inner.memory_lengths()
    }

    /// Window-restart beliefs for one memory length, one per time step.
    fn fm_beliefs(&self, memory: usize) -> PyResult<Vec<PyGaussianBelief>> {
        let beliefs = self
            .inner
            .fm_beliefs
            .get(&memory)
            .ok_or_else(|| PyKeyError::new_err(format!("memory length {memory} not recorded")))?;
        Ok(beliefs.iter().map(|b| PyGaussianBelief { inner: b.clone() }).collect())
    }

    /// Observation-only window beliefs, if the rollout recorded them.
    fn obs_only_beliefs(&self, memory: usize) -> PyResult<Vec<PyGaussianBelief>> {
        let map = self.inner.obs_only_beliefs.as_ref().ok_or_else(|| {
            PyValueError::new_err("rollout was run without include_obs_only")
        })?;
        let beliefs = map
            .get(&memory)
            .ok_or_else(|| PyKeyError::new_err(format!("memory length {memory} not recorded")))?;
        Ok(beliefs.iter().map(|b| PyGaussianBelief { inner: b.clone() }).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "TrajectoryRecord(seed={}, horizon={}, memory_lengths={:?})",
            self.inner.seed,
            self.inner.horizon,
            self.inner.memory_lengths()
        )
    }
}

/// Monte-Carlo mismatch estimate for one memory length.
#[pyclass(name = "MismatchEstimate", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMismatchEstimate {
    inner: MismatchEstimate,
}

#[pymethods]
impl PyMismatchEstimate {
    #[getter]
    fn memory(&self) -> usize {
        self.inner.memory
    }

    #[getter]
    fn epsilon_hat(&self) -> f64 {
        self.inner.epsilon_hat
    }

    #[getter]
    fn epsilon_stderr(&self) -> f64 {
        self.inner.epsilon_stderr
    }

    #[getter]
    fn argmax_time(&self) -> usize {
        self.inner.argmax_time
    }

    #[getter]
    fn per_time_mean(&self) -> Vec<f64> {
        self.inner.per_time_mean.clone()
    }

    #[getter]
    fn per_time_stderr(&self) -> Vec<f64> {
        self.inner.per_time_stderr.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "MismatchEstimate(memory={}, epsilon_hat={:.6}, argmax_time={})",
            self.inner.memory, self.inner.epsilon_hat, self.inner.argmax_time
        )
    }
}

/// Symmetric PSD square root.
#[pyfunction]
fn sqrt_psd(m: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let root = membelief::gaussian::sqrt_psd(&matrix(&m)?).map_err(to_py_err)?;
    Ok(matrix_rows(&root))
}

/// Closed-form 2-Wasserstein distance between two Gaussian beliefs.
#[pyfunction]
fn w2_gaussian(b1: &PyGaussianBelief, b2: &PyGaussianBelief) -> PyResult<f64> {
    membelief::gaussian::w2_gaussian(&b1.inner, &b2.inner).map_err(to_py_err)
}

/// Infinite-horizon discounted LQR gain for the model.
#[pyfunction]
fn lqr_gain(model: &PyLqgModel) -> PyResult<PyLqrGain> {
    let inner = membelief::lqr::lqr_gain(&model.inner).map_err(to_py_err)?;
    Ok(PyLqrGain { inner })
}

/// One exact filter step: predict through the dynamics with input `u`, then
/// condition on the next observation.
#[pyfunction]
fn kalman_step(
    model: &PyLqgModel,
    belief: &PyGaussianBelief,
    u: Vec<f64>,
    y_next: Vec<f64>,
) -> PyResult<PyGaussianBelief> {
    let inner = membelief::filter::kalman_step(
        &model.inner,
        &belief.inner,
        &DVector::from_vec(u),
        &DVector::from_vec(y_next),
    )
    .map_err(to_py_err)?;
    Ok(PyGaussianBelief { inner })
}

/// Window-start belief: the fixed prior conditioned on one observation.
#[pyfunction]
fn boundary_belief(model: &PyLqgModel, y: Vec<f64>) -> PyResult<PyGaussianBelief> {
    let inner = membelief::filter::boundary_belief(&model.inner, &DVector::from_vec(y))
        .map_err(to_py_err)?;
    Ok(PyGaussianBelief { inner })
}

/// Window-restart belief: boundary belief at the window start, then a Kalman
/// replay along the recorded inputs and observations. `observations` must
/// hold one more entry than `inputs`.
#[pyfunction]
fn finite_memory_belief(
    model: &PyLqgModel,
    start_time: usize,
    observations: Vec<Vec<f64>>,
    inputs: Vec<Vec<f64>>,
) -> PyResult<PyGaussianBelief> {
    let window = IoWindow::new(start_time, vectors(&observations), vectors(&inputs))
        .map_err(to_py_err)?;
    let inner =
        membelief::filter::finite_memory_belief(&model.inner, &window).map_err(to_py_err)?;
    Ok(PyGaussianBelief { inner })
}

/// Window-restart belief that pretends every input in the window was zero.
#[pyfunction]
fn obs_only_belief(
    model: &PyLqgModel,
    observations: Vec<Vec<f64>>,
    start_time: usize,
) -> PyResult<PyGaussianBelief> {
    let inner =
        membelief::filter::obs_only_belief(&model.inner, &vectors(&observations), start_time)
            .map_err(to_py_err)?;
    Ok(PyGaussianBelief { inner })
}

/// One seeded closed-loop rollout under `u = -K m` with exact and
/// window-restart beliefs recorded for every memory length in `h_list`.
#[pyfunction]
#[pyo3(signature = (model, gain, h_list, horizon, seed, include_obs_only = false))]
fn rollout(
    model: &PyLqgModel,
    gain: &PyLqrGain,
    h_list: Vec<usize>,
    horizon: usize,
    seed: u64,
    include_obs_only: bool,
) -> PyResult<PyTrajectoryRecord> {
    let options = RolloutOptions { include_obs_only, ..RolloutOptions::default() };
    let inner =
        membelief::sim::rollout_with(&model.inner, &gain.inner, &h_list, horizon, seed, &options)
            .map_err(to_py_err)?;
    Ok(PyTrajectoryRecord { inner })
}

/// Across-rollout mismatch estimate: per-t mean W2 between exact and
/// window-restart beliefs, maximized over t >= burn_in.
#[pyfunction]
#[pyo3(signature = (records, memory, burn_in = 0))]
fn estimate_epsilon(
    records: Vec<PyRef<PyTrajectoryRecord>>,
    memory: usize,
    burn_in: usize,
) -> PyResult<PyMismatchEstimate> {
    let owned: Vec<TrajectoryRecord> = records.iter().map(|r| r.inner.clone()).collect();
    let inner =
        membelief::metrics::estimate_epsilon(&owned, memory, burn_in).map_err(to_py_err)?;
    Ok(PyMismatchEstimate { inner })
}

/// Truncated discounted belief-cost of one rollout. `memory=None` prices the
/// exact beliefs; an integer prices the window-restart beliefs for that
/// memory length. `horizon=None` uses the full recorded horizon.
#[pyfunction]
#[pyo3(signature = (model, record, gamma, memory = None, horizon = None))]
fn discounted_cost(
    model: &PyLqgModel,
    record: &PyTrajectoryRecord,
    gamma: f64,
    memory: Option<usize>,
    horizon: Option<usize>,
) -> PyResult<f64> {
    let which = match memory {
        None => CostBelief::Exact,
        Some(h) => CostBelief::FiniteMemory(h),
    };
    membelief::metrics::discounted_cost(&model.inner, &record.inner, which, gamma, horizon)
        .map_err(to_py_err)
}

/// Least-squares fit of log mismatch against memory length. Returns
/// (rho_hat, log_intercept, r_squared).
#[pyfunction]
fn fit_exponential_decay(points: Vec<(usize, f64)>) -> PyResult<(f64, f64, f64)> {
    let fit = membelief::metrics::fit_exponential_decay(&points).map_err(to_py_err)?;
    Ok((fit.rho_hat, fit.log_intercept, fit.r_squared))
}

/// Log-log least squares of cost gap against mismatch. Returns
/// (slope, intercept, r_squared).
#[pyfunction]
fn fit_gap_scaling(points: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64)> {
    let fit = membelief::metrics::fit_gap_scaling(&points).map_err(to_py_err)?;
    Ok((fit.slope, fit.intercept, fit.r_squared))
}

#[pymodule]
fn membelief_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGaussianBelief>()?;
    m.add_class::<PyLqgModel>()?;
    m.add_class::<PyLqrGain>()?;
    m.add_class::<PyTrajectoryRecord>()?;
    m.add_class::<PyMismatchEstimate>()?;
    m.add_function(wrap_pyfunction!(sqrt_psd, m)?)?;
    m.add_function(wrap_pyfunction!(w2_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(lqr_gain, m)?)?;
    m.add_function(wrap_pyfunction!(kalman_step, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_belief, m)?)?;
    m.add_function(wrap_pyfunction!(finite_memory_belief, m)?)?;
    m.add_function(wrap_pyfunction!(obs_only_belief, m)?)?;
    m.add_function(wrap_pyfunction!(rollout, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(discounted_cost, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponential_decay, m)?)?;
    m.add_function(wrap_pyfunction!(fit_gap_scaling, m)?)?;
    Ok(())
}
