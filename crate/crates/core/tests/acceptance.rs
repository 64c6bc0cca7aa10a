//! Acceptance suite: one test per stated criterion, each printing a single
//! PASS/FAIL line with the measured quantities before asserting. Run with
//! `cargo test --test acceptance -- --nocapture` to see every line; failing
//! criteria always show theirs.

mod support;

use membelief::config::SweepConfig;
use membelief::gaussian::{w2_gaussian, GaussianBelief};
use membelief::lqr::{lqr_gain, solve_dare, spectral_radius, LqrGain};
use membelief::metrics::{
    cost_report, estimate_epsilon, fit_exponential_decay, fit_gap_scaling, mean_and_stderr,
    CostReport, MismatchEstimate,
};
use membelief::sim::TrajectoryRecord;
use membelief::sweep::{prop1_compare, run_rollouts, run_sweep};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::{Duration, Instant};
use support::ScalarChain;

struct Fixture {
    config: SweepConfig,
    model: membelief::model::LqgModel,
    gain: LqrGain,
    records: Vec<TrajectoryRecord>,
    eps: BTreeMap<usize, MismatchEstimate>,
    cost: CostReport,
    build_time: Duration,
}

/// Desk-scale sweep computed once and shared by the criteria that read it.
fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let config = SweepConfig::desk();
        let model = config.build_model().unwrap();
        let gain = lqr_gain(&model).unwrap();
        let start = Instant::now();
        let records = run_rollouts(&model, &gain, &config, false).unwrap();
        let eps: BTreeMap<usize, MismatchEstimate> = config
            .h_list
            .iter()
            .map(|&h| (h, estimate_epsilon(&records, h, config.burn_in).unwrap()))
            .collect();
        let cost = cost_report(&model, &records, model.gamma).unwrap();
        let build_time = start.elapsed();
        Fixture { config, model, gain, records, eps, cost, build_time }
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

#[test]
fn criterion_1_exponential_forgetting() {
    let f = fixture();
    let points: Vec<(usize, f64)> =
        f.eps.iter().map(|(&h, e)| (h, e.epsilon_hat)).collect();
    let fit = fit_exponential_decay(&points).unwrap();
    let ok = fit.rho_hat > 0.0
        && fit.rho_hat < 1.0
        && fit.r_squared >= 0.90
        && f.build_time < Duration::from_secs(60);
    println!(
        "criterion 1 (exponential forgetting): {} - rho_hat {:.4} (required in (0,1)), \
         R^2 {:.4} (required >= 0.90), sweep computation {:.2?} (required < 60s)",
        verdict(ok),
        fit.rho_hat,
        fit.r_squared,
        f.build_time
    );
    assert!(ok, "decay fit rho_hat {:.4}, R^2 {:.4}", fit.rho_hat, fit.r_squared);
}

#[test]
fn criterion_2_linear_gap_scaling() {
    let f = fixture();
    let points: Vec<(f64, f64)> = f
        .config
        .h_list
        .iter()
        .map(|h| (f.eps[h].epsilon_hat, f.cost.gap[h]))
        .collect();
    let fit = fit_gap_scaling(&points).unwrap();
    let ok = (0.7..=1.3).contains(&fit.slope) && fit.r_squared >= 0.85;
    println!(
        "criterion 2 (linear gap scaling): {} - log-log slope {:.3} (required in [0.7, 1.3]), \
         R^2 {:.4} (required >= 0.85)",
        verdict(ok),
        fit.slope,
        fit.r_squared
    );
    assert!(
        ok,
        "gap-vs-mismatch log-log slope {:.3}, R^2 {:.4}",
        fit.slope, fit.r_squared
    );
}

#[test]
fn criterion_3_full_window_identity() {
    let f = fixture();
    let mut max_w2 = 0.0f64;
    let mut compared = 0usize;
    for rec in &f.records {
        for (&h, beliefs) in &rec.fm_beliefs {
            for t in 0..=h.min(rec.horizon) {
                let w = w2_gaussian(&beliefs[t], &rec.true_beliefs[t]).unwrap();
                max_w2 = max_w2.max(w);
                compared += 1;
            }
        }
    }
    let ok = max_w2 < 1e-9;
    println!(
        "criterion 3 (full-window identity): {} - max W2 over {} belief pairs with t <= H \
         is {:.3e} (required < 1e-9)",
        verdict(ok),
        compared,
        max_w2
    );
    assert!(ok, "window replay deviates from the exact filter by {max_w2:.3e}");
}

#[test]
fn criterion_4_wasserstein_correctness() {
    // 1D analytic cases: W2^2 = (m1-m2)^2 + (s1-s2)^2.
    let scalar = |m: f64, var: f64| {
        GaussianBelief::new(DVector::from_element(1, m), DMatrix::from_element(1, 1, var))
            .unwrap()
    };
    let cases: [(f64, f64, f64, f64); 4] = [
        (0.0, 1.0, 3.0, 1.0),
        (0.0, 1.0, 0.0, 4.0),
        (1.0, 4.0, -2.0, 0.25),
        (0.5, 0.09, 0.5, 0.09),
    ];
    let mut max_analytic = 0.0f64;
    for &(m1, v1, m2, v2) in &cases {
        let expected = ((m1 - m2).powi(2) + (v1.sqrt() - v2.sqrt()).powi(2)).sqrt();
        let got = w2_gaussian(&scalar(m1, v1), &scalar(m2, v2)).unwrap();
        max_analytic = max_analytic.max((got - expected).abs());
    }

    let mut rng = StdRng::seed_from_u64(41);
    let mut random_belief = |rng: &mut StdRng| {
        let mean = DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
        let g = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
        let cov = g.transpose() * &g + DMatrix::identity(2, 2) * 0.1;
        GaussianBelief::new(mean, cov).unwrap()
    };
    let rotate = |b: &GaussianBelief, theta: f64| {
        let (s, c) = theta.sin_cos();
        let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        GaussianBelief::new(&r * b.mean(), &r * b.cov() * r.transpose()).unwrap()
    };
    let mut max_rotation = 0.0f64;
    let mut max_symmetry = 0.0f64;
    let mut max_triangle = 0.0f64;
    for _ in 0..1000 {
        let b1 = random_belief(&mut rng);
        let b2 = random_belief(&mut rng);
        let b3 = random_belief(&mut rng);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let w12 = w2_gaussian(&b1, &b2).unwrap();
        let w12r = w2_gaussian(&rotate(&b1, theta), &rotate(&b2, theta)).unwrap();
        max_rotation = max_rotation.max((w12 - w12r).abs());
        max_symmetry = max_symmetry.max((w12 - w2_gaussian(&b2, &b1).unwrap()).abs());
        let w13 = w2_gaussian(&b1, &b3).unwrap();
        let w23 = w2_gaussian(&b2, &b3).unwrap();
        max_triangle = max_triangle.max(w13 - (w12 + w23));
    }
    let ok = max_analytic < 1e-10
        && max_rotation < 1e-9
        && max_symmetry < 1e-9
        && max_triangle < 1e-8;
    println!(
        "criterion 4 (Gaussian W2 correctness): {} - analytic error {:.2e} (< 1e-10), \
         rotation error {:.2e} (< 1e-9), symmetry error {:.2e}, \
         max triangle violation {:.2e} (< 1e-8), 1000 seeded pairs/triples",
        verdict(ok),
        max_analytic,
        max_rotation,
        max_symmetry,
        max_triangle
    );
    assert!(ok);
}

#[test]
fn criterion_5_filter_vs_grid_bayes() {
    let chain = ScalarChain {
        a: 0.9,
        b: 0.4,
        c: 1.0,
        var_w: 0.09,
        var_v: 0.25,
        prior_mean: 0.7,
        prior_var: 1.0,
    };
    let (km, kv, gm, gv) = chain.kalman_vs_grid(5, 11);
    let dm = (km - gm).abs();
    let dv = (kv - gv).abs();
    let ok = dm < 1e-3 && dv < 1e-3;
    println!(
        "criterion 5 (filter vs grid Bayes oracle): {} - after 5 random steps, \
         |mean diff| {:.2e} and |variance diff| {:.2e} on a 10^5-point grid (required < 1e-3)",
        verdict(ok),
        dm,
        dv
    );
    assert!(ok, "kalman ({km}, {kv}) vs grid ({gm}, {gv})");
}

#[test]
fn criterion_6_riccati_correctness() {
    let one = DMatrix::from_element(1, 1, 1.0);
    let (p, _) = solve_dare(&one, &one, &one, &one).unwrap();
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    let scalar_err = (p[(0, 0)] - golden).abs();

    let f = fixture();
    let ok = scalar_err < 1e-10 && f.gain.residual < 1e-8 && f.gain.closed_loop_radius < 1.0;
    println!(
        "criterion 6 (Riccati correctness): {} - scalar fixed point error {:.2e} (< 1e-10), \
         matrix residual {:.2e} (< 1e-8), closed-loop spectral radius {:.4} (< 1)",
        verdict(ok),
        scalar_err,
        f.gain.residual,
        f.gain.closed_loop_radius
    );
    assert!(ok);
}

/// Early-window max vs final-quartile mean of the per-t mismatch for one
/// memory length: (early max, its time, excess over the late mean, 2 * pooled
/// standard error of the comparison).
fn early_late_contrast(f: &Fixture, memory: usize) -> (f64, usize, f64, f64) {
    let horizon = f.config.horizon;
    let w2_at = |t: usize| -> Vec<f64> {
        f.records
            .iter()
            .map(|r| w2_gaussian(&r.fm_beliefs[&memory][t], &r.true_beliefs[t]).unwrap())
            .collect()
    };
    let early_end = (5 * memory).min(horizon + 1);
    let mut best_t = 0;
    let mut best_mean = f64::NEG_INFINITY;
    for t in 0..early_end {
        let (m, _) = mean_and_stderr(&w2_at(t));
        if m > best_mean {
            best_mean = m;
            best_t = t;
        }
    }
    let (early_mean, early_se) = mean_and_stderr(&w2_at(best_t));
    let quartile_start = horizon - horizon / 4;
    let per_seed_late: Vec<f64> = f
        .records
        .iter()
        .map(|r| {
            let acc: f64 = (quartile_start..=horizon)
                .map(|t| w2_gaussian(&r.fm_beliefs[&memory][t], &r.true_beliefs[t]).unwrap())
                .sum();
            acc / (horizon - quartile_start + 1) as f64
        })
        .collect();
    let (late_mean, late_se) = mean_and_stderr(&per_seed_late);
    let pooled = (early_se * early_se + late_se * late_se).sqrt();
    (early_mean, best_t, early_mean - late_mean, 2.0 * pooled)
}

#[test]
fn criterion_7_time_profile_shape() {
    let f = fixture();
    let (max1, t1, excess1, bar1) = early_late_contrast(f, 1);
    let (max5, t5, excess5, bar5) = early_late_contrast(f, 5);
    let ok = excess1 >= bar1 && excess5 >= bar5;
    println!(
        "criterion 7 (time-profile shape): {} - H=1: early max {:.4} at t={}, excess over \
         final quartile {:+.4} (required >= 2*pooled SE = {:.4}); H=5: early max {:.4} at t={}, \
         excess {:+.4} (required >= {:.4})",
        verdict(ok),
        max1,
        t1,
        excess1,
        bar1,
        max5,
        t5,
        excess5,
        bar5
    );
    assert!(
        ok,
        "early-transient excess H=1: {excess1:+.4} vs {bar1:.4}, H=5: {excess5:+.4} vs {bar5:.4}"
    );
}

#[test]
fn criterion_8_input_history_necessity() {
    let f = fixture();
    let mut config = f.config.clone();
    config.h_list = vec![5];

    let feedback = prop1_compare(&f.model, &f.gain, &config).unwrap();
    let fb = &feedback[0];
    let feedback_ok = fb.diff_mean > 2.0 * fb.diff_stderr;

    // Null arm of the "B = 0 or u = 0" disjunction: a zero gain makes every
    // input zero, so the two window families replay identical data.
    let zero_gain = LqrGain {
        k: DMatrix::zeros(f.model.input_dim(), f.model.state_dim()),
        p_dare: DMatrix::zeros(f.model.state_dim(), f.model.state_dim()),
        residual: 0.0,
        closed_loop_radius: spectral_radius(&f.model.a),
    };
    let null = prop1_compare(&f.model, &zero_gain, &config).unwrap();
    let nl = &null[0];
    let null_ok = nl.diff_mean.abs() <= nl.diff_stderr + 1e-12;

    let ok = feedback_ok && null_ok;
    println!(
        "criterion 8 (input history necessity): {} - H=5 under feedback: obs-only minus IO \
         mismatch {:+.4e} ({:.1} SE, required > 2 SE); under u = 0: {:+.4e} \
         (required < 1 SE = {:.1e})",
        verdict(ok),
        fb.diff_mean,
        fb.diff_mean / fb.diff_stderr.max(1e-300),
        nl.diff_mean,
        nl.diff_stderr
    );
    assert!(ok);
}

#[test]
fn criterion_9_deterministic_outputs() {
    let base = {
        let mut c = SweepConfig::desk();
        c.plots = false;
        c
    };
    let artifacts = ["sweep.csv", "timeprofile.csv", "fits.csv", "config.echo.txt"];
    let run = |jobs: usize| {
        let dir = tempfile::tempdir().unwrap();
        let mut c = base.clone();
        c.jobs = jobs;
        c.out_dir = dir.path().to_path_buf();
        run_sweep(&c).unwrap();
        let bytes: Vec<Vec<u8>> = artifacts
            .iter()
            .map(|name| std::fs::read(dir.path().join(name)).unwrap())
            .collect();
        bytes
    };
    let serial = run(1);
    let parallel = run(3);
    let repeat = run(1);
    let ok = serial == parallel && serial == repeat;
    println!(
        "criterion 9 (deterministic outputs): {} - {} artifacts byte-identical across a \
         repeated serial run and a 3-worker parallel run",
        verdict(ok),
        artifacts.len()
    );
    assert!(ok, "outputs differ across reruns or worker counts");
}

#[test]
fn invariant_gap_bounded_by_mismatch_envelope() {
    let f = fixture();
    let (&h_ref, _) = f
        .eps
        .iter()
        .max_by(|a, b| a.1.epsilon_hat.total_cmp(&b.1.epsilon_hat))
        .unwrap();
    let constant = f.cost.gap[&h_ref] / f.eps[&h_ref].epsilon_hat;
    // The fitted point has zero margin by construction; report the rest.
    let mut min_margin = f64::INFINITY;
    for h in &f.config.h_list {
        if *h == h_ref {
            continue;
        }
        let bound = constant * f.eps[h].epsilon_hat;
        min_margin = min_margin.min(bound - f.cost.gap[h]);
    }
    let ok = min_margin >= -1e-9;
    println!(
        "invariant (one-sided envelope): {} - with constant {:.2} fitted at H={}, every gap \
         stays below constant * mismatch; smallest margin {:+.3}",
        verdict(ok),
        constant,
        h_ref,
        min_margin
    );
    assert!(ok, "gap exceeds the linear envelope by {:.3e}", -min_margin);
}

#[test]
fn invariant_mismatch_nonincreasing_in_memory() {
    let f = fixture();
    let mut worst = f64::NEG_INFINITY;
    for pair in f.config.h_list.windows(2) {
        let (lo, hi) = (&f.eps[&pair[0]], &f.eps[&pair[1]]);
        let pooled =
            (lo.epsilon_stderr.powi(2) + hi.epsilon_stderr.powi(2)).sqrt();
        worst = worst.max(hi.epsilon_hat - lo.epsilon_hat - 2.0 * pooled);
    }
    let ok = worst <= 0.0;
    println!(
        "invariant (mismatch non-increasing in memory): {} - largest increase beyond \
         2 pooled SE across consecutive H: {:+.4}",
        verdict(ok),
        worst
    );
    assert!(ok);
}

#[test]
fn invariant_mismatch_below_second_moment_ceiling() {
    let f = fixture();
    let mut max_moment = 0.0f64;
    for rec in &f.records {
        for b in &rec.true_beliefs {
            max_moment = max_moment.max(b.second_moment());
        }
        for beliefs in rec.fm_beliefs.values() {
            for b in beliefs {
                max_moment = max_moment.max(b.second_moment());
            }
        }
    }
    let ceiling = 2.0 * max_moment.sqrt();
    let worst = f
        .eps
        .values()
        .map(|e| e.epsilon_hat)
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = worst <= ceiling + 1e-12;
    println!(
        "invariant (second-moment ceiling): {} - max mismatch {:.4} <= 2 sqrt(max second \
         moment) = {:.4}",
        verdict(ok),
        worst,
        ceiling
    );
    assert!(ok);
}
