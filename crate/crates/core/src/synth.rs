//! Time-harmonic Born records and the matched reference field.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::medium::TravelTimeScreen;
use crate::scene::Scene;

#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub r: Vec<Complex64>,
    pub screen_seed: u64,
    pub noise_seed: u64,
    /// Absolute noise standard deviation actually used.
    pub sigma_w_abs: f64,
}

/// Far-field Green's function of the homogeneous medium between a scene
/// point `z = (cross-range, range)` and a sensor `x`.
pub fn greens_ref(z: (f64, f64), x: (f64, f64), k: f64) -> Result<Complex64> {
    let r = (z.0 - x.0).hypot(z.1 - x.1);
    if r == 0.0 {
        return Err(Error::Singular);
    }
    Ok(Complex64::from_polar(1.0 / (8.0 * PI * k * r).sqrt(), k * r + FRAC_PI_4))
}

fn g2(y: f64, x: f64, scene: &Scene) -> Complex64 {
    // Scene points sit at range 0 and sensors at range L, so r >= L > 0.
    let g = greens_ref((y, 0.0), (x, scene.L), scene.k0()).expect("r >= L");
    g * g
}

/// Noiseless signal for the given screen.
pub fn clean_signal(scene: &Scene, screen: &TravelTimeScreen) -> Vec<Complex64> {
    let refl = scene.reflectors();
    scene
        .sensors()
        .iter()
        .zip(&screen.tau)
        .map(|(&x, &tau)| {
            let s: Complex64 = refl.iter().map(|r| r.rho * g2(r.z, x, scene)).sum();
            s * Complex64::from_polar(1.0, 2.0 * tau)
        })
        .collect()
}

pub fn synthesize_record(scene: &Scene, screen: &TravelTimeScreen, noise_seed: u64) -> Record {
    let mut r = clean_signal(scene, screen);
    let peak = r.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let sigma_w_abs = scene.sigma_W * peak;
    if sigma_w_abs > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let s = sigma_w_abs / 2f64.sqrt();
        for v in r.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v += Complex64::new(re, im) * s;
        }
    }
    Record {
        r,
        screen_seed: screen.seed,
        noise_seed,
        sigma_w_abs,
    }
}

/// `F_n(y)` for every sensor: squared Green's function with Gaussian apodization.
pub fn reference_field(y: f64, scene: &Scene) -> Vec<Complex64> {
    let a2 = scene.a * scene.a;
    scene
        .sensors()
        .iter()
        .map(|&x| g2(y, x, scene) * (-x * x / a2).exp())
        .collect()
}

/// `conj(F_n(y_p)) * r_n` laid out sensor-major: entry `[n * G + p]`.
pub fn matched_products(record: &Record, scene: &Scene, grid: &[f64]) -> Vec<Complex64> {
    let g = grid.len();
    let a2 = scene.a * scene.a;
    let sensors = scene.sensors();
    let mut out = vec![Complex64::new(0.0, 0.0); sensors.len() * g];
    out.par_chunks_mut(g)
        .zip(sensors.par_iter().zip(record.r.par_iter()))
        .for_each(|(row, (&x, &rn))| {
            let w = (-x * x / a2).exp();
            for (o, &y) in row.iter_mut().zip(grid) {
                *o = rn * (g2(y, x, scene) * w).conj();
            }
        });
    out
}
