//! Phase-retrieval baseline: positive reflectivity from its Fourier modulus.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;
use serde::Serialize;
use std::f64::consts::PI;

use crate::cint::{ImageProfile, Method, TwoPointMatrix};
use crate::fourier::spectral_diag;
use crate::medium::derive_seed;

pub const DEFAULT_ITERATIONS: usize = 2000;
pub const DEFAULT_RESTARTS: usize = 8;

/// Target Fourier modulus on the DFT bins of a periodic grid of `n` points
/// with spacing `dy`. Bins with `|k| > band` are outside the band.
#[derive(Debug, Clone)]
pub struct FourierModulus {
    /// Length `n`, FFT bin order.
    pub values: Vec<f64>,
    pub band: usize,
    pub dy: f64,
}

impl FourierModulus {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn in_band(&self, bin: usize) -> bool {
        let n = self.n();
        bin.min(n - bin) <= self.band
    }
}

/// Band edge `|κ| < 3/h` in bins for a periodic grid.
pub fn band_bins(n: usize, dy: f64, h: f64) -> usize {
    let dk = 2.0 * PI / (n as f64 * dy);
    let b = ((3.0 / h) / dk).ceil() as usize;
    b.saturating_sub(1).min((n - 1) / 2)
}

/// Modulus `sqrt(P(κ, 0))` of the two-point matrix, envelope divided out,
/// sampled on the DFT bins of the display grid. The quadratic phase of the
/// data is left in place: locally it is a slow modulation of each peak.
pub fn modulus_from_matrix(m: &TwoPointMatrix, h: f64, n: usize, dy: f64) -> FourierModulus {
    let band = band_bins(n, dy, h);
    let dk = 2.0 * PI / (n as f64 * dy);
    let freqs: Vec<f64> = (0..=band).map(|b| b as f64 * dk).collect();
    let origin = m.grid[0];
    let p = spectral_diag(m, &freqs, origin, false);
    let mut values = vec![0.0; n];
    for (b, (&pk, &kk)) in p.iter().zip(&freqs).enumerate() {
        let v = (pk * (0.5 * kk * kk * h * h).exp()).max(0.0).sqrt() / dy;
        values[b] = v;
        if b > 0 {
            values[n - b] = v;
        }
    }
    FourierModulus { values, band, dy }
}

/// Modulus of the DFT of a sampled profile, restricted to the band.
pub fn modulus_of_profile(values: &[f64], band: usize, dy: f64) -> FourierModulus {
    let spec = fft(values.iter().map(|&x| Complex64::new(x, 0.0)).collect(), false);
    let n = values.len();
    let mut out = vec![0.0; n];
    for (b, v) in spec.iter().enumerate() {
        if b.min(n - b) <= band {
            out[b] = v.norm();
        }
    }
    FourierModulus { values: out, band, dy }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(n: usize) -> Plans {
        let mut planner = FftPlanner::new();
        Plans { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn run(&self, data: Vec<Complex64>, inverse: bool) -> Vec<Complex64> {
        run_plan(if inverse { &self.inverse } else { &self.forward }, data, inverse)
    }
}

fn run_plan(plan: &Arc<dyn Fft<f64>>, mut data: Vec<Complex64>, inverse: bool) -> Vec<Complex64> {
    plan.process(&mut data);
    if inverse {
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
    data
}

fn fft(data: Vec<Complex64>, inverse: bool) -> Vec<Complex64> {
    Plans::new(data.len()).run(data, inverse)
}

#[derive(Debug, Clone, Serialize)]
pub struct PrState {
    /// Best iterate after the positivity projection.
    pub rho: Vec<f64>,
    /// Band-limited iterate that produced `rho`, before clamping.
    pub band_limited: Vec<f64>,
    /// Relative modulus mismatch of each iterate.
    pub residuals: Vec<f64>,
    pub best_iteration: usize,
    pub iterations: usize,
    pub seed: u64,
}

fn residual(spec: &[Complex64], target: &FourierModulus, tnorm: f64) -> f64 {
    let s: f64 = spec
        .iter()
        .enumerate()
        .map(|(b, v)| {
            let t = if target.in_band(b) { target.values[b] } else { 0.0 };
            (v.norm() - t).powi(2)
        })
        .sum();
    s.sqrt() / tnorm
}

/// Error-reduction iteration with a positivity constraint, from a seeded
/// uniform random start; returns the iterate with the smallest modulus residual.
pub fn pr_reconstruct(target: &FourierModulus, iterations: usize, seed: u64) -> PrState {
    let n = target.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rho: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut pre = rho.clone();
    let tnorm = target.values.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mut residuals = Vec::with_capacity(iterations + 1);
    let mut best = (f64::INFINITY, 0usize, rho.clone(), pre.clone());
    let plans = Plans::new(n);
    for it in 0..=iterations {
        let mut spec = plans.run(rho.iter().map(|&x| Complex64::new(x, 0.0)).collect(), false);
        let r = residual(&spec, target, tnorm);
        residuals.push(r);
        if r < best.0 {
            best = (r, it, rho.clone(), pre.clone());
        }
        if it == iterations {
            break;
        }
        for (b, v) in spec.iter_mut().enumerate() {
            if target.in_band(b) {
                let m = v.norm();
                *v = if m > 0.0 { *v * (target.values[b] / m) } else { Complex64::new(target.values[b], 0.0) };
            } else {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        pre = plans.run(spec, true).iter().map(|v| v.re).collect();
        rho = pre.iter().map(|&x| x.max(0.0)).collect();
    }
    PrState { rho: best.2, band_limited: best.3, residuals, best_iteration: best.1, iterations, seed }
}

/// Independent restarts with seeds derived from `seed`, run in parallel;
/// the run with the smallest best residual wins (earliest restart on ties).
pub fn pr_restarts(target: &FourierModulus, iterations: usize, seed: u64, restarts: usize) -> PrState {
    let runs: Vec<PrState> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|i| pr_reconstruct(target, iterations, derive_seed(seed, i)))
        .collect();
    runs.into_iter()
        .reduce(|a, b| if b.residuals[b.best_iteration] < a.residuals[a.best_iteration] { b } else { a })
        .expect("at least one restart")
}

pub fn pr_image(state: &PrState, grid: &[f64]) -> ImageProfile {
    ImageProfile::from_real(grid.to_vec(), &state.rho, Method::Pr)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Alignment {
    /// `aligned[p] = candidate[(p + shift) mod n]`, after the optional reflection.
    pub shift: usize,
    pub reflected: bool,
    /// Normalized cross-correlation at the optimum.
    pub score: f64,
}

/// Best circular shift and optional reflection of `candidate` against `reference`.
pub fn align_for_scoring(candidate: &ImageProfile, reference: &ImageProfile) -> (ImageProfile, Alignment) {
    let c = candidate.real();
    let r = reference.real();
    let n = c.len();
    let norm = (c.iter().map(|v| v * v).sum::<f64>() * r.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let plans = Plans::new(n);
    let rs = plans.run(r.iter().map(|&x| Complex64::new(x, 0.0)).collect(), false);
    let mut best = Alignment { shift: 0, reflected: false, score: f64::NEG_INFINITY };
    for reflected in [false, true] {
        let src: Vec<f64> = if reflected { c.iter().rev().copied().collect() } else { c.clone() };
        let cs = plans.run(src.iter().map(|&x| Complex64::new(x, 0.0)).collect(), false);
        let prod: Vec<Complex64> = cs.iter().zip(&rs).map(|(a, b)| a * b.conj()).collect();
        let corr = plans.run(prod, true);
        for (s, v) in corr.iter().enumerate() {
            let score = if norm > 0.0 { v.re / norm } else { 0.0 };
            if score > best.score + 1e-12 {
                best = Alignment { shift: s, reflected, score };
            }
        }
    }
    let src: Vec<f64> = if best.reflected { c.iter().rev().copied().collect() } else { c };
    let aligned: Vec<f64> = (0..n).map(|p| src[(p + best.shift) % n]).collect();
    let img = ImageProfile::from_real(candidate.grid.clone(), &aligned, candidate.method);
    (img, best)
}
