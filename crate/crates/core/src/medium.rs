//! Gaussian travel-time screen over the sensor track.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;
use crate::scene::{decoherence_length, Scene};

/// One realization of the screen: `tau[n]` is the phase `omega0 * tau_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TravelTimeScreen {
    pub tau: Vec<f64>,
    pub seed: u64,
}

/// Covariance of the phase at two sensors separated by `dx`.
pub fn tau_covariance(dx: f64, scene: &Scene) -> f64 {
    let s2 = scene.sigma_tau * scene.sigma_tau;
    if s2 == 0.0 {
        return 0.0;
    }
    let r = dx / scene.ell;
    s2 * quad::integrate(|s| (-0.5 * (r * s).powi(2)).exp(), 0.0, 1.0, 1e-10)
}

/// Deterministic per-realization seed derived from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Cached square root of the sensor covariance, reused across realizations.
pub struct ScreenSampler {
    factor: Option<DMatrix<f64>>,
    n: usize,
}

impl ScreenSampler {
    pub fn new(scene: &Scene) -> Result<ScreenSampler> {
        let n = scene.N;
        if scene.sigma_tau == 0.0 {
            return Ok(ScreenSampler { factor: None, n });
        }
        let x = scene.sensors();
        // Stationary covariance: one quadrature per distinct lag.
        let step = x[1] - x[0];
        let lags: Vec<f64> = (0..n).map(|k| tau_covariance(k as f64 * step, scene)).collect();
        let gram = DMatrix::from_fn(n, n, |i, j| lags[i.abs_diff(j)]);
        let chol = gram.clone().cholesky().or_else(|| {
            let jitter = 1e-12 * scene.sigma_tau * scene.sigma_tau;
            (gram + DMatrix::identity(n, n) * jitter).cholesky()
        });
        match chol {
            Some(c) => Ok(ScreenSampler { factor: Some(c.l()), n }),
            None => Err(Error::Factorization),
        }
    }

    pub fn sample(&self, seed: u64) -> TravelTimeScreen {
        let tau = match &self.factor {
            None => vec![0.0; self.n],
            Some(l) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let z = DVector::from_fn(self.n, |_, _| StandardNormal.sample(&mut rng));
                (l * z).iter().copied().collect()
            }
        };
        TravelTimeScreen { tau, seed }
    }
}

pub fn sample_screen(scene: &Scene, seed: u64) -> Result<TravelTimeScreen> {
    Ok(ScreenSampler::new(scene)?.sample(seed))
}

#[derive(Debug, Clone, Serialize)]
pub struct CoherenceRow {
    pub dx: f64,
    pub empirical: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoherenceReport {
    pub rows: Vec<CoherenceRow>,
    /// |E[exp(i omega0 tau)]| at the central sensor.
    pub mean_phasor: f64,
    pub mean_phasor_predicted: f64,
    /// Sample variance of omega0 tau pooled over sensors.
    pub variance: f64,
}

/// Monte Carlo check of the second moments of the screen.
///
/// Offsets are taken as integer multiples of the sensor spacing closest to
/// `{0, Xd/2, Xd, 2 Xd}`; the coherence is averaged over all sensor pairs at
/// that lag.
pub fn coherence_check(scene: &Scene, n_realizations: usize, seed: u64) -> Result<CoherenceReport> {
    let sampler = ScreenSampler::new(scene)?;
    let x = scene.sensors();
    let step = x[1] - x[0];
    let xd = decoherence_length(scene);
    let targets = [0.0, 0.5, 1.0, 2.0];
    let lags: Vec<usize> = targets
        .iter()
        .map(|t| if xd.is_finite() { (t * xd / step).round() as usize } else { 0 })
        .map(|k| k.min(scene.N - 1))
        .collect();
    let mid = scene.N / 2;
    let n = scene.N;

    struct Acc {
        coh: Vec<Complex64>,
        phasor: Complex64,
        sum: f64,
        sum2: f64,
    }
    let per: Vec<Acc> = (0..n_realizations)
        .into_par_iter()
        .map(|i| {
            let s = sampler.sample(derive_seed(seed, i as u64));
            let coh = lags
                .iter()
                .map(|&k| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for p in 0..n - k {
                        acc += Complex64::from_polar(1.0, 2.0 * (s.tau[p + k] - s.tau[p]));
                    }
                    acc / (n - k) as f64
                })
                .collect();
            Acc {
                coh,
                phasor: Complex64::from_polar(1.0, s.tau[mid]),
                sum: s.tau.iter().sum(),
                sum2: s.tau.iter().map(|t| t * t).sum(),
            }
        })
        .collect();

    let m = n_realizations as f64;
    let rows = lags
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let dx = k as f64 * step;
            let e: Complex64 = per.iter().map(|a| a.coh[j]).sum::<Complex64>() / m;
            let predicted = if xd.is_finite() { (-dx * dx / (2.0 * xd * xd)).exp() } else { 1.0 };
            CoherenceRow { dx, empirical: e.norm(), predicted }
        })
        .collect();
    let phasor = per.iter().map(|a| a.phasor).sum::<Complex64>() / m;
    let total = m * n as f64;
    let mean = per.iter().map(|a| a.sum).sum::<f64>() / total;
    let variance = per.iter().map(|a| a.sum2).sum::<f64>() / total - mean * mean;
    Ok(CoherenceReport {
        rows,
        mean_phasor: phasor.norm(),
        mean_phasor_predicted: (-scene.sigma_tau.powi(2) / 2.0).exp(),
        variance,
    })
}

/// CSV text with columns `n,x_n,tau_n`.
pub fn screen_csv(scene: &Scene, screen: &TravelTimeScreen) -> String {
    let mut out = String::from("n,x_n,tau_n\n");
    for (n, (x, t)) in scene.sensors().iter().zip(&screen.tau).enumerate() {
        out.push_str(&format!("{n},{x:.12e},{t:.17e}\n"));
    }
    out
}
