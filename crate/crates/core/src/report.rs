//! CSV writers for sweep results.
//!
//! The column layouts here are a compatibility contract; downstream
//! notebooks parse them by header name. Floats are printed with Rust's
//! shortest round-trip formatting, which is deterministic, so identical
//! runs produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::metrics::{CostReport, DecayFit, LogLogFit, MismatchEstimate};
use crate::model::LqgModel;
use crate::sim::TrajectoryRecord;

/// Shortest decimal string that parses back to exactly this value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// One sweep.csv row: mismatch and cost summary for a memory length.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub memory: usize,
    pub eps_mean: f64,
    pub eps_stderr: f64,
    pub j_true: f64,
    pub j_fm: f64,
    pub gap: f64,
}

/// sweep.csv: columns H, eps_mean, eps_stderr, J_true, J_fm, gap.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut out = String::from("H,eps_mean,eps_stderr,J_true,J_fm,gap\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.memory,
            fmt_f64(row.eps_mean),
            fmt_f64(row.eps_stderr),
            fmt_f64(row.j_true),
            fmt_f64(row.j_fm),
            fmt_f64(row.gap)
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// timeprofile.csv: column t plus one mean-mismatch column per memory
/// length, named w2_H<value>.
pub fn write_timeprofile_csv(
    path: &Path,
    profiles: &BTreeMap<usize, MismatchEstimate>,
) -> Result<()> {
    let mut header = String::from("t");
    for h in profiles.keys() {
        header.push_str(&format!(",w2_H{h}"));
    }
    header.push('\n');
    let mut out = header;
    let t_len = profiles.values().next().map_or(0, |p| p.per_time_mean.len());
    for t in 0..t_len {
        out.push_str(&t.to_string());
        for profile in profiles.values() {
            out.push(',');
            out.push_str(&fmt_f64(profile.per_time_mean[t]));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// fits.csv: one row per fitted summary with columns
/// fit, slope, intercept, rho_hat, r_squared. The gap fit has no rho_hat.
pub fn write_fits_csv(
    path: &Path,
    decay: Option<&DecayFit>,
    gap: Option<&LogLogFit>,
) -> Result<()> {
    let mut out = String::from("fit,slope,intercept,rho_hat,r_squared\n");
    if let Some(fit) = decay {
        out.push_str(&format!(
            "eps_decay,{},{},{},{}\n",
            fmt_f64(fit.rho_hat.ln()),
            fmt_f64(fit.log_intercept),
            fmt_f64(fit.rho_hat),
            fmt_f64(fit.r_squared)
        ));
    }
    if let Some(fit) = gap {
        out.push_str(&format!(
            "gap_scaling,{},{},,{}\n",
            fmt_f64(fit.slope),
            fmt_f64(fit.intercept),
            fmt_f64(fit.r_squared)
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// prop1.csv: paired comparison of IO-window and observation-only beliefs.
#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Row {
    pub memory: usize,
    /// Across-seed mean of the per-seed time-averaged W2 to the exact belief.
    pub io_mean: f64,
    pub obs_only_mean: f64,
    /// Mean of the per-seed paired differences (obs_only - io).
    pub diff_mean: f64,
    pub diff_stderr: f64,
}

pub fn write_prop1_csv(path: &Path, rows: &[Prop1Row]) -> Result<()> {
    let mut out = String::from("H,io_mean,obs_only_mean,diff_mean,diff_stderr\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.memory,
            fmt_f64(row.io_mean),
            fmt_f64(row.obs_only_mean),
            fmt_f64(row.diff_mean),
            fmt_f64(row.diff_stderr)
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Single-rollout dump: state, observation, input, exact belief mean and
/// covariance trace, and the per-H mismatch at every time step.
pub fn write_rollout_csv(
    path: &Path,
    model: &LqgModel,
    record: &TrajectoryRecord,
) -> Result<()> {
    let n = model.state_dim();
    let p = model.obs_dim();
    let m = model.input_dim();
    let h_list = record.memory_lengths();
    let mut header = String::from("t");
    for i in 1..=n {
        header.push_str(&format!(",x_{i}"));
    }
    for i in 1..=p {
        header.push_str(&format!(",y_{i}"));
    }
    for i in 1..=m {
        header.push_str(&format!(",u_{i}"));
    }
    for i in 1..=n {
        header.push_str(&format!(",m_{i}"));
    }
    header.push_str(",trace_P");
    for h in &h_list {
        header.push_str(&format!(",w2_H{h}"));
    }
    header.push('\n');
    let mut out = header;
    for t in 0..=record.horizon {
        out.push_str(&t.to_string());
        let mut push_all = |values: &[f64]| {
            for &v in values {
                out.push(',');
                out.push_str(&fmt_f64(v));
            }
        };
        push_all(record.states[t].as_slice());
        push_all(record.observations[t].as_slice());
        push_all(record.inputs[t].as_slice());
        push_all(record.true_beliefs[t].mean().as_slice());
        out.push(',');
        out.push_str(&fmt_f64(record.true_beliefs[t].cov().trace()));
        for h in &h_list {
            let d = crate::gaussian::w2_gaussian(
                &record.true_beliefs[t],
                &record.fm_beliefs[h][t],
            )?;
            out.push(',');
            out.push_str(&fmt_f64(d));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Costs live in sweep.csv; this writes the standalone cost summary used by
/// the prop1 and dump commands when a full sweep was not run.
pub fn cost_summary_lines(report: &CostReport) -> String {
    let mut s = format!(
        "J_true = {} (T = {}, gamma = {}, truncation tail <= {})\n",
        fmt_f64(report.true_cost),
        report.horizon,
        fmt_f64(report.gamma),
        fmt_f64(report.truncation_tail_bound)
    );
    for (h, cost) in &report.fm_cost {
        s.push_str(&format!(
            "J_fm[H={h}] = {} (gap {})\n",
            fmt_f64(*cost),
            fmt_f64(report.gap[h])
        ));
    }
    s
}

/// Writes through a temp file and renames, so partially written reports
/// never shadow a previous complete one.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
