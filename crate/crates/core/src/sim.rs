//! Closed-loop simulation of the plant under the certainty-equivalent LQR
//! policy, recording exact and finite-memory beliefs side by side.
//!
//! The control input is always computed from the exact filter mean;
//! finite-memory beliefs are passive observers and never feed back into the
//! trajectory. This isolates belief mismatch from policy mismatch.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::filter::{boundary_belief, finite_memory_belief, kalman_step, obs_only_belief, IoWindow};
use crate::gaussian::{sqrt_psd, GaussianBelief};
use crate::lqr::LqrGain;
use crate::model::LqgModel;
use crate::rng::{
    sample_gaussian, standard_normal_vector, substream, STREAM_INITIAL_STATE,
    STREAM_OBSERVATION_NOISE, STREAM_PROCESS_NOISE,
};

/// Any state coordinate beyond this magnitude aborts the rollout.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// One simulated closed-loop trajectory with its belief histories.
///
/// All per-time vectors hold T+1 entries for t = 0..=T. `inputs[t]` is the
/// policy input computed at time t; `inputs[T]` is recorded for cost
/// bookkeeping but never applied to the dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    /// Number of dynamics steps T.
    pub horizon: usize,
    pub states: Vec<DVector<f64>>,
    pub observations: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    /// Exact Kalman beliefs b_t.
    pub true_beliefs: Vec<GaussianBelief>,
    /// Window-restart beliefs per memory length H.
    pub fm_beliefs: BTreeMap<usize, Vec<GaussianBelief>>,
    /// Observation-only window beliefs, when requested.
    pub obs_only_beliefs: Option<BTreeMap<usize, Vec<GaussianBelief>>>,
}

impl TrajectoryRecord {
    /// Memory lengths recorded in this rollout.
    pub fn memory_lengths(&self) -> Vec<usize> {
        self.fm_beliefs.keys().copied().collect()
    }
}

#[derive(Debug, Clone)]
pub struct RolloutOptions {
    /// Also compute observation-only window beliefs for each H.
    pub include_obs_only: bool,
    pub divergence_limit: f64,
}

impl Default for RolloutOptions {
    fn default() -> Self {
        Self { include_obs_only: false, divergence_limit: DIVERGENCE_LIMIT }
    }
}

fn validate_memory_list(h_list: &[usize]) -> Result<()> {
    if h_list.is_empty() {
        return Err(Error::Usage("memory list must not be empty".into()));
    }
    for pair in h_list.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Usage(
                "memory list must be strictly increasing with no duplicates".into(),
            ));
        }
    }
    Ok(())
}

/// Simulates T steps of the closed loop u_t = -K m_t and records the exact
/// belief trajectory plus window-restart beliefs for every H in `h_list`.
pub fn rollout(
    model: &LqgModel,
    gain: &LqrGain,
    h_list: &[usize],
    horizon: usize,
    seed: u64,
) -> Result<TrajectoryRecord> {
    rollout_with(model, gain, h_list, horizon, seed, &RolloutOptions::default())
}

pub fn rollout_with(
    model: &LqgModel,
    gain: &LqrGain,
    h_list: &[usize],
    horizon: usize,
    seed: u64,
    options: &RolloutOptions,
) -> Result<TrajectoryRecord> {
    if horizon == 0 {
        return Err(Error::Usage("horizon must be at least 1".into()));
    }
    validate_memory_list(h_list)?;
    if gain.k.shape() != (model.input_dim(), model.state_dim()) {
        return Err(Error::Shape(format!(
            "gain K must be {}x{}, got {}x{}",
            model.input_dim(),
            model.state_dim(),
            gain.k.nrows(),
            gain.k.ncols()
        )));
    }

    let sqrt_p0 = sqrt_psd(model.prior.cov())?;
    let sqrt_w = sqrt_psd(&model.sigma_w)?;
    let sqrt_v = sqrt_psd(&model.sigma_v)?;

    let mut init_rng = substream(seed, STREAM_INITIAL_STATE);
    let mut process_rng = substream(seed, STREAM_PROCESS_NOISE);
    let mut obs_rng = substream(seed, STREAM_OBSERVATION_NOISE);

    let mut states = Vec::with_capacity(horizon + 1);
    let mut observations = Vec::with_capacity(horizon + 1);
    let mut inputs = Vec::with_capacity(horizon + 1);
    let mut true_beliefs = Vec::with_capacity(horizon + 1);

    let x0 = sample_gaussian(&mut init_rng, model.prior.mean(), &sqrt_p0);
    let y0 = &model.c * &x0 + &sqrt_v * standard_normal_vector(&mut obs_rng, model.obs_dim());
    // The time-zero belief is the prior conditioned on y_0, which is exactly
    // the window-restart boundary belief. A window reaching back to t = 0
    // therefore reproduces the exact filter.
    let b0 = boundary_belief(model, &y0)?;
    states.push(x0);
    observations.push(y0);
    true_beliefs.push(b0);

    for t in 0..horizon {
        let u = -(&gain.k * true_beliefs[t].mean());
        let w = &sqrt_w * standard_normal_vector(&mut process_rng, model.state_dim());
        let x_next = &model.a * &states[t] + &model.b * &u + w;
        let worst = x_next.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if !worst.is_finite() || worst > options.divergence_limit {
            return Err(Error::Divergence { seed, step: t + 1, value: worst });
        }
        let y_next =
            &model.c * &x_next + &sqrt_v * standard_normal_vector(&mut obs_rng, model.obs_dim());
        let b_next = kalman_step(model, &true_beliefs[t], &u, &y_next)?;
        inputs.push(u);
        states.push(x_next);
        observations.push(y_next);
        true_beliefs.push(b_next);
    }
    // Terminal policy input, recorded so cost sums over t = 0..=T have an
    // input at every step. It is never applied to the dynamics.
    inputs.push(-(&gain.k * true_beliefs[horizon].mean()));

    let mut fm_beliefs = BTreeMap::new();
    for &h in h_list {
        let per_time: Result<Vec<GaussianBelief>> = (0..=horizon)
            .map(|t| {
                let window = IoWindow::truncated(&observations, &inputs, t, h)?;
                finite_memory_belief(model, &window)
            })
            .collect();
        fm_beliefs.insert(h, per_time?);
    }

    let obs_only_beliefs = if options.include_obs_only {
        let mut per_h = BTreeMap::new();
        for &h in h_list {
            let per_time: Result<Vec<GaussianBelief>> = (0..=horizon)
                .map(|t| {
                    let start = t.saturating_sub(h);
                    obs_only_belief(model, &observations[start..=t], start)
                })
                .collect();
            per_h.insert(h, per_time?);
        }
        Some(per_h)
    } else {
        None
    };

    Ok(TrajectoryRecord {
        seed,
        horizon,
        states,
        observations,
        inputs,
        true_beliefs,
        fm_beliefs,
        obs_only_beliefs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lqr::lqr_gain;
    use nalgebra::DMatrix;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn default_model() -> LqgModel {
        LqgModel::double_integrator(
            0.1,
            DMatrix::identity(2, 2) * 1e-3,
            scalar(0.1),
            DMatrix::identity(2, 2),
            scalar(0.1),
            GaussianBelief::new(
                DVector::from_row_slice(&[1.0, 0.0]),
                DMatrix::identity(2, 2),
            )
            .unwrap(),
            0.99,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_deterministic_start_stays_at_origin() {
        // Zero process noise and a point prior at the origin: the plant
        // starts at 0, the filter knows it exactly (the gain on any
        // observation is zero because the predicted covariance is zero),
        // so inputs and states stay exactly zero.
        let model = LqgModel::double_integrator(
            0.1,
            DMatrix::zeros(2, 2),
            scalar(0.1),
            DMatrix::identity(2, 2),
            scalar(0.1),
            GaussianBelief::dirac(DVector::zeros(2)),
            0.99,
        )
        .unwrap();
        let gain = lqr_gain(&model).unwrap();
        let rec = rollout(&model, &gain, &[0, 3], 40, 7).unwrap();
        for t in 0..=40 {
            assert_eq!(rec.states[t], DVector::zeros(2), "state at t={t}");
            assert_eq!(rec.inputs[t], DVector::zeros(1), "input at t={t}");
            assert_eq!(rec.true_beliefs[t].mean(), &DVector::zeros(2));
        }
    }

    #[test]
    fn record_lengths_follow_horizon() {
        let model = default_model();
        let gain = lqr_gain(&model).unwrap();
        let rec = rollout(&model, &gain, &[0, 2, 5], 25, 3).unwrap();
        assert_eq!(rec.states.len(), 26);
        assert_eq!(rec.observations.len(), 26);
        assert_eq!(rec.inputs.len(), 26);
        assert_eq!(rec.true_beliefs.len(), 26);
        assert_eq!(rec.memory_lengths(), vec![0, 2, 5]);
        for h in [0usize, 2, 5] {
            assert_eq!(rec.fm_beliefs[&h].len(), 26);
        }
        assert!(rec.obs_only_beliefs.is_none());
    }

    #[test]
    fn same_seed_reproduces_identical_rollouts() {
        let model = default_model();
        let gain = lqr_gain(&model).unwrap();
        let a = rollout(&model, &gain, &[0, 5], 60, 99).unwrap();
        let b = rollout(&model, &gain, &[0, 5], 60, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_give_different_trajectories() {
        let model = default_model();
        let gain = lqr_gain(&model).unwrap();
        let a = rollout(&model, &gain, &[0], 30, 1).unwrap();
        let b = rollout(&model, &gain, &[0], 30, 2).unwrap();
        assert_ne!(a.states, b.states);
    }

    #[test]
    fn finite_memory_tracking_is_passive() {
        // The realized trajectory must not depend on which H values are
        // being tracked alongside it.
        let model = default_model();
        let gain = lqr_gain(&model).unwrap();
        let small = rollout(&model, &gain, &[5], 50, 21).unwrap();
        let large = rollout(&model, &gain, &[0, 1, 2, 5, 10], 50, 21).unwrap();
        assert_eq!(small.states, large.states);
        assert_eq!(small.observations, large.observations);
        assert_eq!(small.inputs, large.inputs);
        assert_eq!(small.true_beliefs, large.true_beliefs);
        assert_eq!(small.fm_beliefs[&5], large.fm_beliefs[&5]);
    }

    #[test]
    fn fm_belief_matches_manual_window_replay() {
        let model = default_model();
        let gain = lqr_gain(&model).unwrap();
        let rec = rollout(&model, &gain, &[4], 30, 17).unwrap();
        for t in [0usize, 3, 4, 10, 30] {
            let window =
                IoWindow::truncated(&rec.observations, &rec.inputs, t, 4).unwrap();
            assert_eq!(window.start_time, t.saturating_sub(4));
            let manual = finite_memory_belief(&model, &window).unwrap();
            assert_eq!(manual, rec.fm_beliefs[&4][t], "t={t}");
        }
    }

    #[test]
    fn closed_loop_states_stay_bounded() {
        let model = default_model();
        let gain = lqr_gain(&model).unwrap();
        let rec = rollout(&model, &gain, &[0], 300, 5).unwrap();
        let worst = rec
            .states
            .iter()
            .map(|x| x.amax())
            .fold(0.0f64, f64::max);
        assert!(worst < 100.0, "worst |x| = {worst}");
    }

    #[test]
    fn unstable_loop_reports_divergence_with_seed_and_step() {
        // A destabilizing gain (negative feedback reversed) blows up fast.
        let model = default_model();
        let mut gain = lqr_gain(&model).unwrap();
        gain.k = -&gain.k * 50.0;
        let opts = RolloutOptions { include_obs_only: false, divergence_limit: 1e6 };
        match rollout_with(&model, &gain, &[0], 500, 33, &opts) {
            Err(Error::Divergence { seed, step, value }) => {
                assert_eq!(seed, 33);
                assert!(step >= 1 && step <= 500);
                assert!(value > 1e6);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn obs_only_beliefs_recorded_when_requested() {
        let model = default_model();
        let gain = lqr_gain(&model).unwrap();
        let opts = RolloutOptions { include_obs_only: true, ..Default::default() };
        let rec = rollout_with(&model, &gain, &[3], 20, 11, &opts).unwrap();
        let oo = rec.obs_only_beliefs.as_ref().unwrap();
        assert_eq!(oo[&3].len(), 21);
        // At t = 0 both windows hold a single observation, so they agree.
        assert_eq!(oo[&3][0], rec.fm_beliefs[&3][0]);
        // Deep in the trajectory the input history matters and they differ.
        assert_ne!(oo[&3][15], rec.fm_beliefs[&3][15]);
    }

    #[test]
    fn invalid_memory_lists_are_rejected() {
        let model = default_model();
        let gain = lqr_gain(&model).unwrap();
        assert!(matches!(rollout(&model, &gain, &[], 10, 0), Err(Error::Usage(_))));
        assert!(matches!(rollout(&model, &gain, &[3, 3], 10, 0), Err(Error::Usage(_))));
        assert!(matches!(rollout(&model, &gain, &[5, 2], 10, 0), Err(Error::Usage(_))));
        assert!(matches!(rollout(&model, &gain, &[0], 0, 0), Err(Error::Usage(_))));
    }
}
