//! Numerical laboratory for window-restart belief approximation in
//! linear-Gaussian control.
//!
//! A partially observed linear plant is driven by a certainty-equivalent
//! LQR policy while two belief trackers run side by side: the exact Kalman
//! filter, and a finite-memory approximation that keeps only the last H
//! observations and inputs, restarting from the fixed prior at the window
//! boundary. The crate measures how far the approximate belief drifts from
//! the exact one in 2-Wasserstein distance, how that mismatch decays with
//! H, and how it shows up in discounted control cost.
//!
//! Main entry points:
//! - [`gaussian::GaussianBelief`], [`gaussian::w2_gaussian`]: beliefs and
//!   the closed-form Gaussian W2 distance.
//! - [`model::LqgModel`]: plant, noise, and cost matrices; the default
//!   study plant is [`model::LqgModel::double_integrator`].
//! - [`lqr::lqr_gain`]: Riccati-based controller synthesis.
//! - [`filter`]: exact Kalman step plus window-restart beliefs.
//! - [`sim::rollout`]: closed-loop simulation recording both trackers.
//! - [`metrics`]: mismatch estimates, discounted costs, decay fits.
//! - [`sweep::run_sweep`]: the full memory-length sweep with CSV and SVG
//!   reports, as used by the `membelief` binary.

pub mod config;
pub mod error;
pub mod filter;
pub mod gaussian;
pub mod lqr;
pub mod metrics;
pub mod model;
pub mod plot;
pub mod report;
pub mod rng;
pub mod sim;
pub mod sweep;

pub use config::SweepConfig;
pub use error::{Error, Result};
pub use filter::{
    boundary_belief, finite_memory_belief, kalman_step, obs_only_belief, IoWindow,
};
pub use gaussian::{sqrt_psd, w2_gaussian, GaussianBelief};
pub use lqr::{lqr_gain, solve_dare, LqrGain};
pub use metrics::{
    discounted_cost, estimate_epsilon, fit_exponential_decay, fit_gap_scaling, CostBelief,
    CostReport, DecayFit, LogLogFit, MismatchEstimate,
};
pub use model::LqgModel;
pub use sim::{rollout, rollout_with, RolloutOptions, TrajectoryRecord};
pub use sweep::{run_prop1_demo, run_rollout_dump, run_sweep, Prop1Report, SweepReport};
