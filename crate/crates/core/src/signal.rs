//! Small signal-processing helpers shared by the imaging methods.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Tukey window on `|t| <= 1` with cosine tapers covering the outer
/// `taper` fraction of the full width.
pub fn tukey(t: f64, taper: f64) -> f64 {
    let t = t.abs();
    if t > 1.0 {
        return 0.0;
    }
    let edge = 1.0 - taper;
    if taper <= 0.0 || t <= edge {
        1.0
    } else {
        0.5 * (1.0 + (PI * (t - edge) / taper).cos())
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

const LANCZOS_A: f64 = 8.0;

/// Band-limited (Lanczos-windowed sinc) interpolation of samples on the
/// uniform grid `y0 + p*dy` at the points `at`.
pub fn sinc_interp(values: &[Complex64], y0: f64, dy: f64, at: &[f64]) -> Vec<Complex64> {
    let n = values.len() as isize;
    at.iter()
        .map(|&y| {
            let u = (y - y0) / dy;
            let lo = (u - LANCZOS_A).ceil() as isize;
            let hi = (u + LANCZOS_A).floor() as isize;
            let mut acc = Complex64::new(0.0, 0.0);
            for p in lo.max(0)..=hi.min(n - 1) {
                let d = u - p as f64;
                acc += values[p as usize] * (sinc(d) * sinc(d / LANCZOS_A));
            }
            acc
        })
        .collect()
}

/// Rotate `v` by the global phase maximizing the energy of its real part,
/// then flip the sign so the entry of largest magnitude is positive.
///
/// `sum Re(e^{-i phi} v)^2 = (S + Re(e^{-2 i phi} Q))/2` with `S = sum |v|^2`
/// and `Q = sum v^2`, so the optimum is `phi = arg(Q)/2` in closed form.
pub fn rotate_to_real(v: &[Complex64]) -> Vec<f64> {
    let q: Complex64 = v.iter().map(|z| z * z).sum();
    let phi = 0.5 * q.arg();
    let rot = Complex64::from_polar(1.0, -phi);
    let mut out: Vec<f64> = v.iter().map(|z| (z * rot).re).collect();
    let imax = out
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i);
    if let Some(i) = imax {
        if out[i] < 0.0 {
            out.iter_mut().for_each(|x| *x = -*x);
        }
    }
    out
}
