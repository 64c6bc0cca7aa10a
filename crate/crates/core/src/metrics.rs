//! Mismatch and cost statistics over collections of rollouts, plus the
//! least-squares fits used to summarize how both scale with memory.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gaussian::w2_gaussian;
use crate::model::LqgModel;
use crate::sim::TrajectoryRecord;

/// Neumaier compensated sum. Summation order is fixed by the iterator, so
/// aggregate statistics are bit-stable across serial and parallel runs as
/// long as inputs arrive in the same order.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    neumaier_sum(values.iter().copied()) / values.len() as f64
}

/// Sample mean and its standard error (ddof = 1). A single value has
/// standard error zero.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let m = mean(values);
    if n < 2 {
        return (m, 0.0);
    }
    let ss = neumaier_sum(values.iter().map(|v| (v - m) * (v - m)));
    let var = ss / (n as f64 - 1.0);
    (m, (var / n as f64).sqrt())
}

/// Mismatch profile of one memory length across a batch of rollouts.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchEstimate {
    pub memory: usize,
    /// Across-seed mean of W2(b_t, approx_t) for each t = 0..=T.
    pub per_time_mean: Vec<f64>,
    /// Across-seed standard error for each t.
    pub per_time_stderr: Vec<f64>,
    /// Max over t >= burn_in of `per_time_mean` (the mismatch estimate).
    pub epsilon_hat: f64,
    /// Standard error at the maximizing time.
    pub epsilon_stderr: f64,
    /// First time achieving the maximum.
    pub argmax_time: usize,
    pub burn_in: usize,
}

/// Estimates the worst-over-time expected mismatch for one memory length:
/// averages W2(exact, finite-memory) across records at each t, then takes
/// the max over t >= burn_in.
pub fn estimate_epsilon(
    records: &[TrajectoryRecord],
    memory: usize,
    burn_in: usize,
) -> Result<MismatchEstimate> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "mismatch estimation needs at least 2 rollouts, got {}",
            records.len()
        )));
    }
    let horizon = records[0].horizon;
    for rec in records {
        if rec.horizon != horizon {
            return Err(Error::Usage("rollouts have differing horizons".into()));
        }
        if !rec.fm_beliefs.contains_key(&memory) {
            return Err(Error::Usage(format!(
                "rollout for seed {} does not track memory length {memory}",
                rec.seed
            )));
        }
    }
    if burn_in > horizon {
        return Err(Error::Usage(format!(
            "burn-in {burn_in} exceeds horizon {horizon}"
        )));
    }
    let mut per_time_mean = Vec::with_capacity(horizon + 1);
    let mut per_time_stderr = Vec::with_capacity(horizon + 1);
    let mut distances = Vec::with_capacity(records.len());
    for t in 0..=horizon {
        distances.clear();
        for rec in records {
            distances.push(w2_gaussian(&rec.true_beliefs[t], &rec.fm_beliefs[&memory][t])?);
        }
        let (m, se) = mean_and_stderr(&distances);
        per_time_mean.push(m);
        per_time_stderr.push(se);
    }
    let mut argmax_time = burn_in;
    for t in burn_in..=horizon {
        if per_time_mean[t] > per_time_mean[argmax_time] {
            argmax_time = t;
        }
    }
    Ok(MismatchEstimate {
        memory,
        epsilon_hat: per_time_mean[argmax_time],
        epsilon_stderr: per_time_stderr[argmax_time],
        argmax_time,
        per_time_mean,
        per_time_stderr,
        burn_in,
    })
}

/// Which belief trajectory prices the cost functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostBelief {
    /// Exact Kalman beliefs.
    Exact,
    /// Window-restart beliefs with the given memory length.
    FiniteMemory(usize),
}

/// Truncated discounted belief-cost functional of one rollout:
/// sum over t = 0..=T of gamma^t (m'Qm + tr(QP) + u'Ru) with the realized
/// inputs. T defaults to the recorded horizon when `horizon` is None.
pub fn discounted_cost(
    model: &LqgModel,
    record: &TrajectoryRecord,
    which: CostBelief,
    gamma: f64,
    horizon: Option<usize>,
) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!(
            "discount factor must lie in (0, 1), got {gamma}"
        )));
    }
    let t_max = horizon.unwrap_or(record.horizon);
    if t_max > record.horizon {
        return Err(Error::Usage(format!(
            "requested horizon {t_max} exceeds recorded horizon {}",
            record.horizon
        )));
    }
    let beliefs = match which {
        CostBelief::Exact => &record.true_beliefs,
        CostBelief::FiniteMemory(h) => record.fm_beliefs.get(&h).ok_or_else(|| {
            Error::Usage(format!("rollout does not track memory length {h}"))
        })?,
    };
    let mut discount = 1.0;
    let mut terms = Vec::with_capacity(t_max + 1);
    for t in 0..=t_max {
        terms.push(discount * model.belief_stage_cost(&beliefs[t], &record.inputs[t])?);
        discount *= gamma;
    }
    Ok(neumaier_sum(terms))
}

/// Cost comparison between exact and finite-memory belief pricing, averaged
/// across rollouts.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    /// Average cost under exact beliefs.
    pub true_cost: f64,
    /// Average cost under finite-memory beliefs, per memory length.
    pub fm_cost: BTreeMap<usize, f64>,
    /// |true_cost - fm_cost| per memory length.
    pub gap: BTreeMap<usize, f64>,
    pub horizon: usize,
    pub gamma: f64,
    /// gamma^{T+1}/(1-gamma) times the largest stage cost seen; bounds what
    /// the truncation at T discards relative to the infinite sum.
    pub truncation_tail_bound: f64,
}

/// Prices every rollout under exact and finite-memory beliefs and averages.
pub fn cost_report(
    model: &LqgModel,
    records: &[TrajectoryRecord],
    gamma: f64,
) -> Result<CostReport> {
    if records.is_empty() {
        return Err(Error::InsufficientData("cost report needs at least one rollout".into()));
    }
    let horizon = records[0].horizon;
    let h_list = records[0].memory_lengths();
    let mut true_costs = Vec::with_capacity(records.len());
    let mut fm_costs: BTreeMap<usize, Vec<f64>> =
        h_list.iter().map(|&h| (h, Vec::with_capacity(records.len()))).collect();
    let mut max_stage = 0.0f64;
    for rec in records {
        if rec.horizon != horizon {
            return Err(Error::Usage("rollouts have differing horizons".into()));
        }
        true_costs.push(discounted_cost(model, rec, CostBelief::Exact, gamma, None)?);
        for &h in &h_list {
            fm_costs
                .get_mut(&h)
                .unwrap()
                .push(discounted_cost(model, rec, CostBelief::FiniteMemory(h), gamma, None)?);
        }
        for t in 0..=horizon {
            max_stage =
                max_stage.max(model.belief_stage_cost(&rec.true_beliefs[t], &rec.inputs[t])?);
        }
    }
    let true_cost = mean(&true_costs);
    let fm_cost: BTreeMap<usize, f64> =
        fm_costs.iter().map(|(&h, costs)| (h, mean(costs))).collect();
    let gap = fm_cost.iter().map(|(&h, &c)| (h, (true_cost - c).abs())).collect();
    let truncation_tail_bound =
        gamma.powi(horizon as i32 + 1) / (1.0 - gamma) * max_stage;
    Ok(CostReport { true_cost, fm_cost, gap, horizon, gamma, truncation_tail_bound })
}

/// Exponential-decay summary of mismatch against memory length, from a
/// linear fit of ln(eps) on H.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// Intercept of the line in log space.
    pub log_intercept: f64,
    /// Estimated per-step contraction factor e^{slope}.
    pub rho_hat: f64,
    pub r_squared: f64,
    /// Memory lengths that entered the fit (positive mismatch only).
    pub h_used: Vec<usize>,
}

/// Power-law summary of cost gap against mismatch, from a linear fit in
/// log-log space.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Plain least squares of y on x with R^2. Degenerate spreads fall back to
/// slope zero; R^2 of a flat fit is 1 when residuals also vanish.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let x_mean = neumaier_sum(x.iter().copied()) / n;
    let y_mean = neumaier_sum(y.iter().copied()) / n;
    let sxx = neumaier_sum(x.iter().map(|xi| (xi - x_mean) * (xi - x_mean)));
    let sxy = neumaier_sum(x.iter().zip(y).map(|(xi, yi)| (xi - x_mean) * (yi - y_mean)));
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = y_mean - slope * x_mean;
    let ss_res = neumaier_sum(
        x.iter().zip(y).map(|(xi, yi)| {
            let r = yi - (intercept + slope * xi);
            r * r
        }),
    );
    let ss_tot = neumaier_sum(y.iter().map(|yi| (yi - y_mean) * (yi - y_mean)));
    let r_squared = if ss_tot <= 1e-30 {
        if ss_res <= 1e-30 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    (slope, intercept, r_squared)
}

/// Fits ln(eps_H) = log_intercept + ln(rho_hat) H by least squares.
/// Nonpositive mismatch values cannot enter the log and are dropped with a
/// warning; at least three positive points must remain.
pub fn fit_exponential_decay(points: &[(usize, f64)]) -> Result<DecayFit> {
    let mut h_used = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(h, eps) in points {
        if eps > 0.0 {
            h_used.push(h);
            xs.push(h as f64);
            ys.push(eps.ln());
        } else {
            log::warn!("dropping H={h} from decay fit: mismatch {eps} is not positive");
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs at least 3 positive mismatch values, got {}",
            xs.len()
        )));
    }
    let (slope, intercept, r_squared) = ols(&xs, &ys);
    Ok(DecayFit { log_intercept: intercept, rho_hat: slope.exp(), r_squared, h_used })
}

/// Fits ln(gap) = intercept + slope ln(eps) by least squares. Points with
/// a nonpositive coordinate are dropped with a warning; at least three must
/// remain.
pub fn fit_gap_scaling(points: &[(f64, f64)]) -> Result<LogLogFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(eps, gap) in points {
        if eps > 0.0 && gap > 0.0 {
            xs.push(eps.ln());
            ys.push(gap.ln());
        } else {
            log::warn!(
                "dropping point (eps={eps}, gap={gap}) from gap fit: log needs positive values"
            );
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "gap fit needs at least 3 positive points, got {}",
            xs.len()
        )));
    }
    let (slope, intercept, r_squared) = ols(&xs, &ys);
    Ok(LogLogFit { slope, intercept, r_squared })
}
