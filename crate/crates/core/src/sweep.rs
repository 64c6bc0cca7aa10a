//! Experiment drivers: the memory-length sweep, the input-history
//! comparison, and single-rollout dumps.
//!
//! Rollouts are independent across seeds and run on a rayon pool, but every
//! aggregate is computed from records collected in seed order with fixed
//! summation order, so serial and parallel runs write identical bytes.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::config::SweepConfig;
use crate::error::{Error, Result};
use crate::gaussian::w2_gaussian;
use crate::lqr::{lqr_gain, LqrGain};
use crate::metrics::{
    cost_report, estimate_epsilon, fit_exponential_decay, fit_gap_scaling, mean_and_stderr,
    CostReport, DecayFit, LogLogFit, MismatchEstimate,
};
use crate::model::LqgModel;
use crate::plot::{Axis, PlotSpec, Series};
use crate::report::{
    write_fits_csv, write_prop1_csv, write_rollout_csv, write_sweep_csv, write_timeprofile_csv,
    Prop1Row, SweepRow,
};
use crate::rng::rollout_seed;
use crate::sim::{rollout_with, RolloutOptions, TrajectoryRecord};

/// Everything a sweep produced, mirroring the files written to disk.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub profiles: BTreeMap<usize, MismatchEstimate>,
    pub cost: CostReport,
    pub decay_fit: Option<DecayFit>,
    pub gap_fit: Option<LogLogFit>,
    pub config_echo: String,
    pub out_dir: PathBuf,
    pub wall_clock: Duration,
}

/// Result of the input-history comparison.
#[derive(Debug, Clone)]
pub struct Prop1Report {
    pub rows: Vec<Prop1Row>,
    pub config_echo: String,
    pub out_dir: PathBuf,
    pub wall_clock: Duration,
}

fn run_on_pool<T: Send>(jobs: usize, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if jobs == 0 {
        return job();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot build a {jobs}-thread pool: {e}")))?;
    pool.install(job)
}

/// Runs `config.seeds` independent rollouts, parallel across seeds, and
/// returns them ordered by seed index.
pub fn run_rollouts(
    model: &LqgModel,
    gain: &LqrGain,
    config: &SweepConfig,
    include_obs_only: bool,
) -> Result<Vec<TrajectoryRecord>> {
    let seeds: Vec<u64> =
        (0..config.seeds).map(|i| rollout_seed(config.root_seed, i as u64)).collect();
    let options = RolloutOptions { include_obs_only, ..Default::default() };
    run_on_pool(config.jobs, || {
        seeds
            .par_iter()
            .map(|&seed| rollout_with(model, gain, &config.h_list, config.horizon, seed, &options))
            .collect()
    })
}

fn fig1(rows: &[SweepRow], decay: Option<&DecayFit>) -> PlotSpec {
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.memory as f64, r.eps_mean)).collect();
    let errors: Vec<f64> = rows.iter().map(|r| r.eps_stderr).collect();
    let mut data = Series::line("measured mismatch", points);
    data.draw_markers = true;
    data.errors = Some(errors);
    let mut series = vec![data];
    if let Some(fit) = decay {
        let h_max = rows.last().map_or(1.0, |r| r.memory as f64);
        let line: Vec<(f64, f64)> = (0..=40)
            .map(|i| {
                let h = h_max * i as f64 / 40.0;
                (h, (fit.log_intercept + fit.rho_hat.ln() * h).exp())
            })
            .collect();
        series.push(Series::line(format!("fit, rate {:.3}", fit.rho_hat), line));
    }
    PlotSpec {
        title: "Belief mismatch vs memory length".into(),
        x_label: "memory length H".into(),
        y_label: "worst-case mean W2 mismatch".into(),
        x_axis: Axis::Linear,
        y_axis: Axis::Log,
        series,
    }
}

fn fig2(rows: &[SweepRow], fit: Option<&LogLogFit>) -> PlotSpec {
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps_mean, r.gap)).collect();
    let mut series = vec![Series::scatter("memory lengths", points.clone())];
    if let Some(fit) = fit {
        let positives: Vec<f64> =
            points.iter().map(|&(e, _)| e).filter(|&e| e > 0.0).collect();
        if let (Some(&lo), Some(&hi)) = (
            positives.iter().min_by(|a, b| a.total_cmp(b)),
            positives.iter().max_by(|a, b| a.total_cmp(b)),
        ) {
            let line: Vec<(f64, f64)> = (0..=40)
                .map(|i| {
                    let t = lo.ln() + (hi.ln() - lo.ln()) * i as f64 / 40.0;
                    (t.exp(), (fit.intercept + fit.slope * t).exp())
                })
                .collect();
            series.push(Series::line(format!("fit, slope {:.2}", fit.slope), line));
        }
    }
    PlotSpec {
        title: "Cost gap vs belief mismatch".into(),
        x_label: "mismatch eps".into(),
        y_label: "discounted cost gap".into(),
        x_axis: Axis::Log,
        y_axis: Axis::Log,
        series,
    }
}

fn fig3(profiles: &BTreeMap<usize, MismatchEstimate>) -> PlotSpec {
    let series = profiles
        .values()
        .map(|profile| {
            let points: Vec<(f64, f64)> = profile
                .per_time_mean
                .iter()
                .enumerate()
                .map(|(t, &m)| (t as f64, m))
                .collect();
            let band: Vec<(f64, f64)> = profile
                .per_time_mean
                .iter()
                .zip(&profile.per_time_stderr)
                .map(|(&m, &se)| (m - se, m + se))
                .collect();
            let mut s = Series::line(format!("H={}", profile.memory), points);
            s.band = Some(band);
            s
        })
        .collect();
    PlotSpec {
        title: "Mismatch over time".into(),
        x_label: "time step t".into(),
        y_label: "mean W2 mismatch".into(),
        x_axis: Axis::Linear,
        y_axis: Axis::Linear,
        series,
    }
}

/// Full sweep: rollouts for every seed, mismatch and cost aggregation per
/// memory length, decay and gap fits, CSV reports and figures under
/// `config.out_dir`.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let started = Instant::now();
    let model = config.build_model()?;
    let gain = lqr_gain(&model)?;
    if gain.closed_loop_radius >= 1.0 {
        return Err(Error::Domain(format!(
            "closed loop is not stable: spectral radius {}",
            gain.closed_loop_radius
        )));
    }
    let records = run_rollouts(&model, &gain, config, config.obs_only)?;

    let mut profiles = BTreeMap::new();
    for &h in &config.h_list {
        profiles.insert(h, estimate_epsilon(&records, h, config.burn_in)?);
    }
    let cost = cost_report(&model, &records, config.gamma)?;
    let rows: Vec<SweepRow> = config
        .h_list
        .iter()
        .map(|&h| SweepRow {
            memory: h,
            eps_mean: profiles[&h].epsilon_hat,
            eps_stderr: profiles[&h].epsilon_stderr,
            j_true: cost.true_cost,
            j_fm: cost.fm_cost[&h],
            gap: cost.gap[&h],
        })
        .collect();

    let decay_points: Vec<(usize, f64)> =
        rows.iter().map(|r| (r.memory, r.eps_mean)).collect();
    let decay_fit = match fit_exponential_decay(&decay_points) {
        Ok(fit) => Some(fit),
        Err(Error::InsufficientData(why)) => {
            log::warn!("skipping decay fit: {why}");
            None
        }
        Err(e) => return Err(e),
    };
    let gap_points: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps_mean, r.gap)).collect();
    let gap_fit = match fit_gap_scaling(&gap_points) {
        Ok(fit) => Some(fit),
        Err(Error::InsufficientData(why)) => {
            log::warn!("skipping gap fit: {why}");
            None
        }
        Err(e) => return Err(e),
    };

    std::fs::create_dir_all(&config.out_dir)?;
    write_sweep_csv(&config.out_dir.join("sweep.csv"), &rows)?;
    write_timeprofile_csv(&config.out_dir.join("timeprofile.csv"), &profiles)?;
    write_fits_csv(&config.out_dir.join("fits.csv"), decay_fit.as_ref(), gap_fit.as_ref())?;
    let config_echo = config.echo();
    crate::report::write_atomic(&config.out_dir.join("config.echo.txt"), config_echo.as_bytes())?;
    if config.plots {
        crate::plot::write_svg(
            &config.out_dir.join("fig1_eps_vs_H.svg"),
            &fig1(&rows, decay_fit.as_ref()),
        )?;
        crate::plot::write_svg(
            &config.out_dir.join("fig2_gap_vs_eps.svg"),
            &fig2(&rows, gap_fit.as_ref()),
        )?;
        crate::plot::write_svg(&config.out_dir.join("fig3_w2_time.svg"), &fig3(&profiles))?;
    }

    Ok(SweepReport {
        rows,
        profiles,
        cost,
        decay_fit,
        gap_fit,
        config_echo,
        out_dir: config.out_dir.clone(),
        wall_clock: started.elapsed(),
    })
}

/// Paired comparison of IO-window and observation-only beliefs under a given
/// model and gain: for each seed and each H, time-averages the W2 distance
/// to the exact belief over t >= burn_in, then pairs the two variants by
/// seed. A positive mean difference with a small standard error says the
/// input history genuinely matters.
pub fn prop1_compare(
    model: &LqgModel,
    gain: &LqrGain,
    config: &SweepConfig,
) -> Result<Vec<Prop1Row>> {
    config.validate()?;
    let records = run_rollouts(model, gain, config, true)?;
    let mut rows = Vec::with_capacity(config.h_list.len());
    for &h in &config.h_list {
        let mut io_means = Vec::with_capacity(records.len());
        let mut obs_means = Vec::with_capacity(records.len());
        for rec in &records {
            let obs_beliefs = rec
                .obs_only_beliefs
                .as_ref()
                .ok_or_else(|| Error::Usage("rollout lacks observation-only beliefs".into()))?;
            let mut io_dist = Vec::with_capacity(rec.horizon + 1 - config.burn_in);
            let mut obs_dist = Vec::with_capacity(rec.horizon + 1 - config.burn_in);
            for t in config.burn_in..=rec.horizon {
                io_dist.push(w2_gaussian(&rec.true_beliefs[t], &rec.fm_beliefs[&h][t])?);
                obs_dist.push(w2_gaussian(&rec.true_beliefs[t], &obs_beliefs[&h][t])?);
            }
            io_means.push(crate::metrics::mean(&io_dist));
            obs_means.push(crate::metrics::mean(&obs_dist));
        }
        let diffs: Vec<f64> =
            io_means.iter().zip(&obs_means).map(|(io, obs)| obs - io).collect();
        let (diff_mean, diff_stderr) = mean_and_stderr(&diffs);
        rows.push(Prop1Row {
            memory: h,
            io_mean: crate::metrics::mean(&io_means),
            obs_only_mean: crate::metrics::mean(&obs_means),
            diff_mean,
            diff_stderr,
        });
    }
    Ok(rows)
}

/// Input-history comparison under the configured model and its LQR gain.
/// Writes prop1.csv and the config echo under `config.out_dir`.
pub fn run_prop1_demo(config: &SweepConfig) -> Result<Prop1Report> {
    let started = Instant::now();
    let model = config.build_model()?;
    let gain = lqr_gain(&model)?;
    if gain.closed_loop_radius >= 1.0 {
        return Err(Error::Domain(format!(
            "closed loop is not stable: spectral radius {}",
            gain.closed_loop_radius
        )));
    }
    let rows = prop1_compare(&model, &gain, config)?;
    std::fs::create_dir_all(&config.out_dir)?;
    write_prop1_csv(&config.out_dir.join("prop1.csv"), &rows)?;
    let config_echo = config.echo();
    crate::report::write_atomic(&config.out_dir.join("config.echo.txt"), config_echo.as_bytes())?;
    Ok(Prop1Report {
        rows,
        config_echo,
        out_dir: config.out_dir.clone(),
        wall_clock: started.elapsed(),
    })
}

/// Dumps the rollout at `seed_index` to rollout_<index>.csv under
/// `config.out_dir` and returns the file path.
pub fn run_rollout_dump(config: &SweepConfig, seed_index: usize) -> Result<PathBuf> {
    config.validate()?;
    if seed_index >= config.seeds {
        return Err(Error::Usage(format!(
            "seed index {seed_index} out of range, sweep has {} seeds",
            config.seeds
        )));
    }
    let model = config.build_model()?;
    let gain = lqr_gain(&model)?;
    let seed = rollout_seed(config.root_seed, seed_index as u64);
    let record = rollout_with(
        &model,
        &gain,
        &config.h_list,
        config.horizon,
        seed,
        &RolloutOptions::default(),
    )?;
    std::fs::create_dir_all(&config.out_dir)?;
    let path = config.out_dir.join(format!("rollout_{seed_index}.csv"));
    write_rollout_csv(&path, &model, &record)?;
    Ok(path)
}
