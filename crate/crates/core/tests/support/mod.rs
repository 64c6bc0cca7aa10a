//! Brute-force reference computations shared by integration tests.
//!
//! Everything here recomputes answers from first principles (grid-discretized
//! Bayes rule, direct quadrature) without touching the library's filter path,
//! so agreement is evidence rather than tautology.

#![allow(dead_code)]

use membelief::filter::kalman_step;
use membelief::gaussian::GaussianBelief;
use membelief::model::LqgModel;
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Densities on a fixed uniform grid. Mass is kept normalized so moments can
/// be read off by quadrature at any point.
pub struct Grid1d {
    pub lo: f64,
    pub step: f64,
    pub density: Vec<f64>,
}

impl Grid1d {
    pub fn gaussian(mean: f64, var: f64, lo: f64, hi: f64, n: usize) -> Self {
        assert!(hi > lo && n > 1 && var > 0.0);
        let step = (hi - lo) / (n - 1) as f64;
        let density = (0..n)
            .map(|i| {
                let x = lo + i as f64 * step;
                (-(x - mean) * (x - mean) / (2.0 * var)).exp()
            })
            .collect();
        let mut grid = Grid1d { lo, step, density };
        grid.normalize();
        grid
    }

    fn normalize(&mut self) {
        let mass: f64 = self.density.iter().sum::<f64>() * self.step;
        assert!(mass > 0.0, "grid lost all mass");
        for d in &mut self.density {
            *d /= mass;
        }
    }

    fn x(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }

    /// Density sampled at an arbitrary point by linear interpolation, zero
    /// outside the grid.
    fn sample(&self, x: f64) -> f64 {
        let pos = (x - self.lo) / self.step;
        if pos < 0.0 || pos > (self.density.len() - 1) as f64 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.density.len() {
            return self.density[i];
        }
        let frac = pos - i as f64;
        self.density[i] * (1.0 - frac) + self.density[i + 1] * frac
    }

    /// Chapman-Kolmogorov step for x' = a x + shift + w, w ~ N(0, var_w):
    /// pushforward through the affine map, then convolution with the noise
    /// kernel (FFT, zero-padded so nothing wraps around).
    pub fn predict(&mut self, a: f64, shift: f64, var_w: f64) {
        assert!(a != 0.0 && var_w > 0.0);
        let n = self.density.len();
        let pushed: Vec<f64> = (0..n)
            .map(|j| self.sample((self.x(j) - shift) / a) / a.abs())
            .collect();

        let half = ((8.0 * var_w.sqrt()) / self.step).ceil() as usize;
        let kernel: Vec<f64> = (0..=2 * half)
            .map(|i| {
                let dx = (i as f64 - half as f64) * self.step;
                (-dx * dx / (2.0 * var_w)).exp() * self.step
                    / (2.0 * std::f64::consts::PI * var_w).sqrt()
            })
            .collect();

        let len = (n + kernel.len()).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(len);
        let ifft = planner.plan_fft_inverse(len);

        let mut fa: Vec<Complex<f64>> = pushed
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(len)
            .collect();
        let mut fb: Vec<Complex<f64>> = kernel
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(len)
            .collect();
        fft.process(&mut fa);
        fft.process(&mut fb);
        for (va, vb) in fa.iter_mut().zip(&fb) {
            *va *= vb;
        }
        ifft.process(&mut fa);

        for (j, d) in self.density.iter_mut().enumerate() {
            *d = (fa[j + half].re / len as f64).max(0.0);
        }
        self.normalize();
    }

    /// Bayes measurement update for y = c x + v, v ~ N(0, var_v).
    pub fn update(&mut self, c: f64, y: f64, var_v: f64) {
        assert!(var_v > 0.0);
        for (i, d) in self.density.iter_mut().enumerate() {
            let resid = y - c * (self.lo + i as f64 * self.step);
            *d *= (-resid * resid / (2.0 * var_v)).exp();
        }
        self.normalize();
    }

    pub fn mean(&self) -> f64 {
        self.density
            .iter()
            .enumerate()
            .map(|(i, d)| self.x(i) * d)
            .sum::<f64>()
            * self.step
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.density
            .iter()
            .enumerate()
            .map(|(i, d)| (self.x(i) - m) * (self.x(i) - m) * d)
            .sum::<f64>()
            * self.step
    }

    /// Largest density at either edge, relative to the peak. Drivers assert
    /// this is negligible so truncation cannot contaminate the moments.
    pub fn edge_mass_ratio(&self) -> f64 {
        let peak = self.density.iter().cloned().fold(0.0, f64::max);
        let edge = self.density[0].max(*self.density.last().unwrap());
        edge / peak
    }
}

/// Posterior mean and variance of a scalar linear-Gaussian chain after
/// conditioning on the given inputs and observations, computed entirely on
/// the grid. Steps mirror the filter's event order: push through the
/// dynamics with u_t, then condition on y_{t+1}.
pub struct ScalarChain {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub var_w: f64,
    pub var_v: f64,
    pub prior_mean: f64,
    pub prior_var: f64,
}

impl ScalarChain {
    pub fn model(&self) -> LqgModel {
        LqgModel::new(
            DMatrix::from_element(1, 1, self.a),
            DMatrix::from_element(1, 1, self.b),
            DMatrix::from_element(1, 1, self.c),
            DMatrix::from_element(1, 1, self.var_w),
            DMatrix::from_element(1, 1, self.var_v),
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            GaussianBelief::new(
                DVector::from_element(1, self.prior_mean),
                DMatrix::from_element(1, 1, self.prior_var),
            )
            .unwrap(),
            0.95,
        )
        .unwrap()
    }

    /// Runs the library filter and the grid oracle on identical seeded data;
    /// returns (kalman mean, kalman var, grid mean, grid var).
    pub fn kalman_vs_grid(&self, steps: usize, seed: u64) -> (f64, f64, f64, f64) {
        let mut rng = StdRng::seed_from_u64(seed);
        let inputs: Vec<f64> = (0..steps).map(|_| rng.random_range(-1.0..1.0)).collect();
        let observations: Vec<f64> = (0..steps).map(|_| rng.random_range(-2.0..2.0)).collect();

        let model = self.model();
        let mut belief = model.prior.clone();
        for (u, y) in inputs.iter().zip(&observations) {
            belief = kalman_step(
                &model,
                &belief,
                &DVector::from_element(1, *u),
                &DVector::from_element(1, *y),
            )
            .unwrap();
        }
        let (gm, gv) = self.grid_posterior(&inputs, &observations);
        (belief.mean()[0], belief.cov()[(0, 0)], gm, gv)
    }

    pub fn grid_posterior(&self, inputs: &[f64], observations: &[f64]) -> (f64, f64) {
        assert_eq!(inputs.len(), observations.len());
        // Conservative support: prior spread plus worst-case drift and noise
        // accumulated over the run, scaled by ten.
        let drift: f64 = inputs.iter().map(|u| (self.b * u).abs()).sum::<f64>()
            + observations.iter().map(|y| y.abs()).fold(0.0, f64::max) / self.c.abs();
        let sigma = self.prior_var.sqrt()
            + self.var_w.sqrt() * inputs.len() as f64
            + self.var_v.sqrt();
        let half = 10.0 * (sigma + drift);
        let center = self.prior_mean;
        let mut grid = Grid1d::gaussian(
            self.prior_mean,
            self.prior_var,
            center - half,
            center + half,
            100_000,
        );
        for (u, y) in inputs.iter().zip(observations) {
            grid.predict(self.a, self.b * u, self.var_w);
            grid.update(self.c, *y, self.var_v);
            assert!(
                grid.edge_mass_ratio() < 1e-12,
                "grid support too narrow for this run"
            );
        }
        (grid.mean(), grid.variance())
    }
}
