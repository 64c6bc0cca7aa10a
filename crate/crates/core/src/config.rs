//! Sweep configuration: built-in presets, a flat key = value config file
//! format, and single-key overrides.
//!
//! Precedence is preset, then config file, then individual overrides, in
//! the order they are applied.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::GaussianBelief;
use crate::model::LqgModel;
use crate::report::fmt_f64;

/// Everything a sweep needs: plant parameters, experiment scale, and
/// execution/output switches.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub dt: f64,
    pub sigma_w: DMatrix<f64>,
    pub sigma_v: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub m0: DVector<f64>,
    pub p0: DMatrix<f64>,
    pub gamma: f64,
    /// Memory lengths to sweep, strictly increasing.
    pub h_list: Vec<usize>,
    /// Number of dynamics steps T per rollout.
    pub horizon: usize,
    /// Number of independent rollouts.
    pub seeds: usize,
    pub root_seed: u64,
    /// Times before this are ignored when maximizing mismatch over time.
    pub burn_in: usize,
    pub out_dir: PathBuf,
    pub plots: bool,
    /// Also track observation-only window beliefs.
    pub obs_only: bool,
    /// Worker threads; 0 means one per core.
    pub jobs: usize,
}

impl SweepConfig {
    /// Small preset: quick desk runs and CI.
    pub fn desk() -> Self {
        Self {
            dt: 0.1,
            sigma_w: DMatrix::identity(2, 2) * 1e-3,
            sigma_v: DMatrix::from_element(1, 1, 0.1),
            q: DMatrix::identity(2, 2),
            r: DMatrix::from_element(1, 1, 0.1),
            m0: DVector::from_row_slice(&[1.0, 0.0]),
            p0: DMatrix::identity(2, 2),
            gamma: 0.99,
            h_list: vec![0, 1, 2, 5, 10, 20],
            horizon: 300,
            seeds: 20,
            root_seed: 42,
            burn_in: 0,
            out_dir: PathBuf::from("out"),
            plots: true,
            obs_only: false,
            jobs: 0,
        }
    }

    /// Full-scale preset: longer horizon, more memory lengths, more seeds.
    pub fn paper() -> Self {
        Self {
            h_list: vec![0, 1, 2, 5, 10, 20, 50, 100],
            horizon: 1000,
            seeds: 50,
            ..Self::desk()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "paper" => Ok(Self::paper()),
            other => Err(Error::Usage(format!(
                "unknown preset '{other}', expected 'desk' or 'paper'"
            ))),
        }
    }

    /// Applies every `key = value` line of a config file on top of the
    /// current values. Errors point at the offending line.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ctx = format!("{}:{}", path.display(), index + 1);
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{ctx}: expected 'key = value', got '{line}'"))
            })?;
            self.apply_set(key.trim(), value.trim(), &ctx)?;
        }
        Ok(())
    }

    /// Sets one key. `ctx` names the source (file:line or the CLI flag) in
    /// error messages.
    pub fn apply_set(&mut self, key: &str, value: &str, ctx: &str) -> Result<()> {
        match key {
            "model.dt" => self.dt = parse_f64(value, key, ctx)?,
            "model.sigma_w" => self.sigma_w = parse_mat2(value, key, ctx)?,
            "model.sigma_v" => self.sigma_v = parse_mat1(value, key, ctx)?,
            "model.q" => self.q = parse_mat2(value, key, ctx)?,
            "model.r" => self.r = parse_mat1(value, key, ctx)?,
            "model.m0" => self.m0 = parse_vec2(value, key, ctx)?,
            "model.p0" => self.p0 = parse_mat2(value, key, ctx)?,
            "model.gamma" => self.gamma = parse_f64(value, key, ctx)?,
            "sweep.h_list" => {
                self.h_list = parse_usize_list(value, key, ctx)?;
            }
            "sweep.horizon" => self.horizon = parse_usize(value, key, ctx)?,
            "sweep.seeds" => self.seeds = parse_usize(value, key, ctx)?,
            "sweep.root_seed" => {
                self.root_seed = value.parse::<u64>().map_err(|_| {
                    Error::Config(format!("{ctx}: {key} expects an unsigned integer, got '{value}'"))
                })?;
            }
            "sweep.burn_in" => self.burn_in = parse_usize(value, key, ctx)?,
            "output.dir" => self.out_dir = PathBuf::from(value),
            "run.plots" => self.plots = parse_bool(value, key, ctx)?,
            "run.obs_only" => self.obs_only = parse_bool(value, key, ctx)?,
            "run.jobs" => self.jobs = parse_usize(value, key, ctx)?,
            other => {
                return Err(Error::Config(format!("{ctx}: unknown key '{other}'")));
            }
        }
        Ok(())
    }

    /// Structural checks that do not need the model built.
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("sweep.horizon must be at least 1".into()));
        }
        if self.h_list.is_empty() {
            return Err(Error::Config("sweep.h_list must not be empty".into()));
        }
        for pair in self.h_list.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Config(
                    "sweep.h_list must be strictly increasing with no duplicates".into(),
                ));
            }
        }
        if *self.h_list.last().unwrap() > self.horizon {
            return Err(Error::Config(format!(
                "largest memory length {} exceeds sweep.horizon {}",
                self.h_list.last().unwrap(),
                self.horizon
            )));
        }
        if self.seeds < 2 {
            return Err(Error::Config("sweep.seeds must be at least 2".into()));
        }
        if self.burn_in > self.horizon {
            return Err(Error::Config(format!(
                "sweep.burn_in {} exceeds sweep.horizon {}",
                self.burn_in, self.horizon
            )));
        }
        Ok(())
    }

    /// Builds the double-integrator plant from the model keys. Model-level
    /// invariants (definiteness, gamma range) are enforced here.
    pub fn build_model(&self) -> Result<LqgModel> {
        let prior = GaussianBelief::new(self.m0.clone(), self.p0.clone())?;
        LqgModel::double_integrator(
            self.dt,
            self.sigma_w.clone(),
            self.sigma_v.clone(),
            self.q.clone(),
            self.r.clone(),
            prior,
            self.gamma,
        )
    }

    /// Canonical echo of the result-determining configuration, written next
    /// to the result files. Execution details (output directory, worker
    /// count) are omitted: they never change the numbers, and leaving them
    /// out keeps the echo byte-identical between serial and parallel runs.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# effective configuration (membelief {})", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "model.dt = {}", fmt_f64(self.dt));
        let _ = writeln!(s, "model.gamma = {}", fmt_f64(self.gamma));
        let _ = writeln!(s, "model.m0 = {}", fmt_vec(self.m0.as_slice()));
        let _ = writeln!(s, "model.p0 = {}", fmt_vec(self.p0.transpose().as_slice()));
        let _ = writeln!(s, "model.q = {}", fmt_vec(self.q.transpose().as_slice()));
        let _ = writeln!(s, "model.r = {}", fmt_vec(self.r.as_slice()));
        let _ = writeln!(s, "model.sigma_v = {}", fmt_vec(self.sigma_v.as_slice()));
        let _ = writeln!(s, "model.sigma_w = {}", fmt_vec(self.sigma_w.transpose().as_slice()));
        let _ = writeln!(s, "run.obs_only = {}", self.obs_only);
        let _ = writeln!(
            s,
            "sweep.h_list = {}",
            self.h_list.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(", ")
        );
        let _ = writeln!(s, "sweep.burn_in = {}", self.burn_in);
        let _ = writeln!(s, "sweep.horizon = {}", self.horizon);
        let _ = writeln!(s, "sweep.root_seed = {}", self.root_seed);
        let _ = writeln!(s, "sweep.seeds = {}", self.seeds);
        s
    }
}

fn fmt_vec(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(", ")
}

fn parse_f64(value: &str, key: &str, ctx: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|_| {
        Error::Config(format!("{ctx}: {key} expects a number, got '{value}'"))
    })
}

fn parse_usize(value: &str, key: &str, ctx: &str) -> Result<usize> {
    value.parse::<usize>().map_err(|_| {
        Error::Config(format!("{ctx}: {key} expects a nonnegative integer, got '{value}'"))
    })
}

fn parse_bool(value: &str, key: &str, ctx: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "{ctx}: {key} expects true or false, got '{value}'"
        ))),
    }
}

fn split_numbers(value: &str) -> Vec<&str> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_f64_list(value: &str, key: &str, ctx: &str) -> Result<Vec<f64>> {
    split_numbers(value)
        .into_iter()
        .map(|s| {
            s.parse::<f64>().map_err(|_| {
                Error::Config(format!("{ctx}: {key} contains a non-number '{s}'"))
            })
        })
        .collect()
}

fn parse_usize_list(value: &str, key: &str, ctx: &str) -> Result<Vec<usize>> {
    split_numbers(value)
        .into_iter()
        .map(|s| {
            s.parse::<usize>().map_err(|_| {
                Error::Config(format!("{ctx}: {key} contains a non-integer '{s}'"))
            })
        })
        .collect()
}

/// 2x2 matrix: one value means that multiple of the identity, four values
/// are row-major entries.
fn parse_mat2(value: &str, key: &str, ctx: &str) -> Result<DMatrix<f64>> {
    let nums = parse_f64_list(value, key, ctx)?;
    match nums.len() {
        1 => Ok(DMatrix::identity(2, 2) * nums[0]),
        4 => Ok(DMatrix::from_row_slice(2, 2, &nums)),
        n => Err(Error::Config(format!(
            "{ctx}: {key} expects 1 or 4 numbers, got {n}"
        ))),
    }
}

fn parse_mat1(value: &str, key: &str, ctx: &str) -> Result<DMatrix<f64>> {
    let nums = parse_f64_list(value, key, ctx)?;
    if nums.len() != 1 {
        return Err(Error::Config(format!(
            "{ctx}: {key} expects exactly 1 number, got {}",
            nums.len()
        )));
    }
    Ok(DMatrix::from_element(1, 1, nums[0]))
}

fn parse_vec2(value: &str, key: &str, ctx: &str) -> Result<DVector<f64>> {
    let nums = parse_f64_list(value, key, ctx)?;
    if nums.len() != 2 {
        return Err(Error::Config(format!(
            "{ctx}: {key} expects exactly 2 numbers, got {}",
            nums.len()
        )));
    }
    Ok(DVector::from_row_slice(&nums))
}
