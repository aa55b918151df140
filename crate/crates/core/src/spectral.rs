//! Leading eigenpair of the two-point matrix and the spectral image.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cint::{ImageProfile, Method, TwoPointMatrix};
use crate::scene::Scene;
use crate::signal::{rotate_to_real, sinc_interp};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 5000;

#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub value: f64,
    #[serde(skip)]
    pub vector: Vec<Complex64>,
    pub iterations: usize,
    /// `‖Mv − λv‖ / ‖Mv‖` at the returned vector.
    pub residual: f64,
    pub converged: bool,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn start_vector(g: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..g)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let n = norm(&v);
    v.iter_mut().for_each(|z| *z /= n);
    v
}

/// Power iteration, optionally restricted to the orthogonal complement of
/// `deflate` (unit vectors).
fn power(m: &TwoPointMatrix, tol: f64, max_iter: usize, seed: u64, deflate: &[&[Complex64]]) -> EigenResult {
    let g = m.len();
    let project = |v: &mut Vec<Complex64>| {
        for d in deflate {
            let c = dot(d, v);
            v.iter_mut().zip(d.iter()).for_each(|(x, y)| *x -= c * y);
        }
    };
    let mut v = start_vector(g, seed);
    project(&mut v);
    let n0 = norm(&v);
    v.iter_mut().for_each(|z| *z /= n0);
    let mut result = EigenResult { value: 0.0, vector: v.clone(), iterations: 0, residual: f64::INFINITY, converged: false };
    for it in 1..=max_iter {
        let mut w = m.apply(&v);
        project(&mut w);
        let lambda = dot(&v, &w).re;
        let wn = norm(&w);
        if wn == 0.0 {
            result = EigenResult { value: 0.0, vector: v, iterations: it, residual: 0.0, converged: true };
            return result;
        }
        let r: f64 = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / wn;
        result = EigenResult { value: lambda, vector: v.clone(), iterations: it, residual: r, converged: r <= tol };
        if r <= tol {
            return result;
        }
        v = w.iter().map(|z| z / wn).collect();
    }
    result
}

/// Leading eigenpair by power iteration. Non-convergence is reported through
/// `converged` and `residual`.
pub fn power_leading(m: &TwoPointMatrix, tol: f64, max_iter: usize, seed: u64) -> EigenResult {
    power(m, tol, max_iter, seed, &[])
}

/// Second eigenpair, by deflating the leading one.
pub fn power_second(m: &TwoPointMatrix, first: &EigenResult, tol: f64, max_iter: usize, seed: u64) -> EigenResult {
    power(m, tol, max_iter, seed, &[&first.vector])
}

/// Spectral image on the display grid.
pub fn sp_image(eig: &EigenResult, m: &TwoPointMatrix, scene: &Scene) -> ImageProfile {
    let real = rotate_to_real(&eig.vector);
    let v: Vec<Complex64> = real.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let grid = scene.display_grid();
    let values = sinc_interp(&v, m.grid[0], m.dy(), &grid);
    ImageProfile::normalized(grid, values, Method::Sp)
}
