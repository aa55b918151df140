//! SAR image, two-point CINT matrix and the CINT image.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::medium::{derive_seed, ScreenSampler};
use crate::metrics::cov_statistic;
use crate::scene::{uniform_grid, Scene};
use crate::signal::sinc_interp;
use crate::synth::{matched_products, synthesize_record, Record};

/// Upper bound on the number of window-quadrature nodes.
pub const NODE_CAP: usize = 20_000;

/// Window support beyond the sensor track, in units of the threshold.
const NODE_EXTENSION: f64 = 3.0;

/// Window taps further than this many thresholds from a node are below
/// `exp(-36)` and skipped.
const TAP_REACH: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sar,
    Ci,
    Sp,
    Op,
    Pr,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Sar, Method::Ci, Method::Sp, Method::Op, Method::Pr];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sar => "sar",
            Method::Ci => "ci",
            Method::Sp => "sp",
            Method::Op => "op",
            Method::Pr => "pr",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Unknown { field: "method", value: s.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageProfile {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub method: Method,
    /// Scale divided out so that the largest modulus is 1.
    pub norm: f64,
}

impl ImageProfile {
    pub fn normalized(grid: Vec<f64>, mut values: Vec<Complex64>, method: Method) -> ImageProfile {
        let norm = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        ImageProfile { grid, values, method, norm }
    }

    pub fn from_real(grid: Vec<f64>, values: &[f64], method: Method) -> ImageProfile {
        let v = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        ImageProfile::normalized(grid, v, method)
    }

    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("y,re,im,abs\n");
        for (y, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{y:.6},{:.17e},{:.17e},{:.17e}\n", v.re, v.im, v.norm()));
        }
        out
    }
}

/// Two-point CINT matrix on a uniform cross-range grid.
///
/// The factors satisfy `M = factorsᴴ · factors`, with
/// `factors[(m, p)] = sqrt(w_m) Σ_n exp(-(x''_m - x_n)²/X²) conj(r_n) F_n(y_p)`,
/// so that `M[(p, q)] = Σ_{n,n'} r_n conj(F_n(y_p)) conj(r_n') F_n'(y_q) exp(-(x_n - x_n')²/(2X²))`.
#[derive(Debug, Clone)]
pub struct TwoPointMatrix {
    pub grid: Vec<f64>,
    pub factors: Option<DMatrix<Complex64>>,
    pub dense: DMatrix<Complex64>,
    pub x_used: f64,
    pub norm: f64,
    /// Rate `c` of the quadratic phase `exp(-i c y²)` carried by the image
    /// coordinates of the data (`k/L` for simulated records, 0 for analytic kernels).
    pub chirp_rate: f64,
}

impl TwoPointMatrix {
    pub fn from_dense(grid: Vec<f64>, dense: DMatrix<Complex64>, x_used: f64, chirp_rate: f64) -> Self {
        TwoPointMatrix { grid, factors: None, dense, x_used, norm: 1.0, chirp_rate }
    }

    pub fn dy(&self) -> f64 {
        if self.grid.len() > 1 {
            self.grid[1] - self.grid[0]
        } else {
            1.0
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `M v`, using the factored form when present.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        match &self.factors {
            Some(f) => {
                let x = nalgebra::DVector::from_column_slice(v);
                let t = f * x;
                (f.adjoint() * t).iter().copied().collect()
            }
            None => {
                let x = nalgebra::DVector::from_column_slice(v);
                (&self.dense * x).iter().copied().collect()
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.len()).map(|p| self.dense[(p, p)].re).collect()
    }
}

/// Matrix grid over the scene domain with spacing `dy`.
pub fn matrix_grid(scene: &Scene, dy: f64) -> Vec<f64> {
    uniform_grid(scene.domain, dy)
}

pub fn sar_image(record: &Record, scene: &Scene) -> ImageProfile {
    let grid = scene.display_grid();
    let q = matched_products(record, scene, &grid);
    let g = grid.len();
    let mut values = vec![Complex64::new(0.0, 0.0); g];
    for row in q.chunks(g) {
        for (v, x) in values.iter_mut().zip(row) {
            *v += x;
        }
    }
    ImageProfile::normalized(grid, values, Method::Sar)
}

struct Window {
    nodes: Vec<f64>,
    sqrt_w: f64,
}

fn window_nodes(sensors: &[f64], x: f64) -> Result<Window> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::NonFinite("threshold X"));
    }
    let lo = sensors[0] - NODE_EXTENSION * x;
    let hi = sensors[sensors.len() - 1] + NODE_EXTENSION * x;
    let needed = ((hi - lo) / (0.5 * x)).ceil() as usize + 1;
    if needed > NODE_CAP {
        return Err(Error::TooManyNodes { needed, cap: NODE_CAP });
    }
    let step = (hi - lo) / (needed - 1) as f64;
    let nodes = (0..needed).map(|m| lo + m as f64 * step).collect();
    let w = 2f64.sqrt() / (PI.sqrt() * x) * step;
    Ok(Window { nodes, sqrt_w: w.sqrt() })
}

/// Factor rows for the given grid: `K × G`, row-major per node.
fn factor_rows(q: &[Complex64], sensors: &[f64], grid_len: usize, x: f64) -> Result<(Vec<Complex64>, usize)> {
    let win = window_nodes(sensors, x)?;
    let k = win.nodes.len();
    let g = grid_len;
    let mut out = vec![Complex64::new(0.0, 0.0); k * g];
    out.par_chunks_mut(g).zip(win.nodes.par_iter()).for_each(|(row, &xm)| {
        for (n, &xn) in sensors.iter().enumerate() {
            let d = xm - xn;
            if d.abs() > TAP_REACH * x {
                continue;
            }
            let wgt = win.sqrt_w * (-(d * d) / (x * x)).exp();
            for (o, s) in row.iter_mut().zip(&q[n * g..(n + 1) * g]) {
                *o += s.conj() * wgt;
            }
        }
    });
    Ok((out, k))
}

pub fn two_point_cint(record: &Record, scene: &Scene, x_used: f64, grid: &[f64]) -> Result<TwoPointMatrix> {
    let sensors = scene.sensors();
    let q = matched_products(record, scene, grid);
    let (rows, k) = factor_rows(&q, &sensors, grid.len(), x_used)?;
    let f = DMatrix::from_row_slice(k, grid.len(), &rows);
    let dense = f.adjoint() * &f;
    Ok(TwoPointMatrix {
        grid: grid.to_vec(),
        factors: Some(f),
        dense,
        x_used,
        norm: 1.0,
        chirp_rate: scene.k0() / scene.L,
    })
}

/// Direct `O(N² G²)` evaluation of the thresholded double sum (validation only).
pub fn two_point_direct(record: &Record, scene: &Scene, x_used: f64, grid: &[f64]) -> DMatrix<Complex64> {
    let sensors = scene.sensors();
    let n = sensors.len();
    let g = grid.len();
    let q = matched_products(record, scene, grid);
    let s = DMatrix::from_row_slice(n, g, &q);
    let w = DMatrix::from_fn(n, n, |i, j| {
        let d = sensors[i] - sensors[j];
        Complex64::new((-(d * d) / (2.0 * x_used * x_used)).exp(), 0.0)
    });
    s.transpose() * w * s.map(|z| z.conj())
}

/// Diagonal of the two-point matrix: the CINT image before the square root.
pub fn cint_diagonal(m: &TwoPointMatrix) -> Vec<f64> {
    m.diagonal()
}

/// `sqrt(max(Re M_pp, 0))`, interpolated to the display grid and normalized.
pub fn cint_image(m: &TwoPointMatrix, scene: &Scene) -> ImageProfile {
    let d: Vec<Complex64> = m
        .diagonal()
        .iter()
        .map(|&v| Complex64::new(v.max(0.0).sqrt(), 0.0))
        .collect();
    let grid = scene.display_grid();
    let mut values = sinc_interp(&d, m.grid[0], m.dy(), &grid);
    values.iter_mut().for_each(|v| *v = Complex64::new(v.re.max(0.0), 0.0));
    ImageProfile::normalized(grid, values, Method::Ci)
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityRow {
    pub x: f64,
    pub peak_y: f64,
    pub mean: f64,
    pub std: f64,
    pub cov: f64,
    /// Large-sample standard error of the coefficient of variation.
    pub cov_se: f64,
}

/// Coefficient of variation of the two-point matrix at its dominant diagonal
/// peak across medium realizations (fixed reflectivity, no additive noise).
///
/// The peak is located on the ensemble-mean diagonal, evaluated on a matrix
/// grid of spacing `h/3` restricted to the reflector span padded by 40.
pub fn stability_sweep(scene: &Scene, n_realizations: usize, x_values: &[f64], seed: u64) -> Result<Vec<StabilityRow>> {
    let mut quiet = scene.clone();
    quiet.sigma_W = 0.0;
    let refl = quiet.reflectors();
    let zmin = refl.iter().map(|r| r.z).fold(f64::INFINITY, f64::min);
    let zmax = refl.iter().map(|r| r.z).fold(f64::NEG_INFINITY, f64::max);
    let h = quiet.L / (quiet.k0() * quiet.a);
    let lo = (zmin - 40.0).max(quiet.domain.0);
    let hi = (zmax + 40.0).min(quiet.domain.1);
    let grid = uniform_grid((lo, hi), h / 3.0);
    let sampler = ScreenSampler::new(&quiet)?;
    let sensors = quiet.sensors();
    let records: Vec<Vec<Complex64>> = (0..n_realizations)
        .into_par_iter()
        .map(|i| {
            let screen = sampler.sample(derive_seed(seed, i as u64));
            let rec = synthesize_record(&quiet, &screen, 0);
            matched_products(&rec, &quiet, &grid)
        })
        .collect();
    let g = grid.len();
    x_values
        .iter()
        .map(|&x| {
            let diags: Vec<Vec<f64>> = records
                .par_iter()
                .map(|q| {
                    let (rows, k) = factor_rows(q, &sensors, g, x)?;
                    let mut d = vec![0.0; g];
                    for m in 0..k {
                        for (dp, v) in d.iter_mut().zip(&rows[m * g..(m + 1) * g]) {
                            *dp += v.norm_sqr();
                        }
                    }
                    Ok(d)
                })
                .collect::<Result<_>>()?;
            let mut mean_diag = vec![0.0; g];
            for d in &diags {
                for (m, v) in mean_diag.iter_mut().zip(d) {
                    *m += v;
                }
            }
            let p = mean_diag
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let samples: Vec<Complex64> = diags.iter().map(|d| Complex64::new(d[p], 0.0)).collect();
            let n = samples.len() as f64;
            let mean = samples.iter().map(|s| s.re).sum::<f64>() / n;
            let std = (samples.iter().map(|s| (s.re - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            let cov = cov_statistic(&samples);
            let cov_se = cov / (2.0 * n).sqrt() * (1.0 + 2.0 * cov * cov).sqrt();
            Ok(StabilityRow { x, peak_y: grid[p], mean, std, cov, cov_se })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::sample_screen;

    fn fig1_record() -> (Scene, Record) {
        let s = Scene::named("fig1").unwrap();
        let t = sample_screen(&s, 0).unwrap();
        let r = synthesize_record(&s, &t, 0);
        (s, r)
    }

    #[test]
    fn factored_matches_direct() {
        let (s, r) = fig1_record();
        let grid = uniform_grid((110.0, 156.0), 0.25);
        for x in [s.a, 150.0] {
            let m = two_point_cint(&r, &s, x, &grid).unwrap();
            let d = two_point_direct(&r, &s, x, &grid);
            let rel = (&m.dense - &d).norm() / d.norm();
            assert!(rel < 1e-6, "X={x}: {rel}");
        }
    }

    #[test]
    fn hermitian_and_phase_invariant() {
        let (s, mut r) = fig1_record();
        let grid = uniform_grid((115.0, 150.0), 0.5);
        let m = two_point_cint(&r, &s, 150.0, &grid).unwrap();
        let herm = (&m.dense - m.dense.adjoint()).norm() / m.dense.norm();
        assert!(herm < 1e-12);
        r.r.iter_mut().for_each(|v| *v *= Complex64::from_polar(2.0, 0.7));
        let m2 = two_point_cint(&r, &s, 150.0, &grid).unwrap();
        let rel = (&m2.dense - &m.dense * Complex64::new(4.0, 0.0)).norm() / m2.dense.norm();
        assert!(rel < 1e-12);
    }

    #[test]
    fn sar_single_reflector_peak() {
        let mut s = Scene::named("fig1").unwrap();
        s.reflectors = vec![(117.3, 1.0)];
        let t = sample_screen(&s, 0).unwrap();
        let img = sar_image(&synthesize_record(&s, &t, 0), &s);
        let a = img.abs();
        let i = a.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).unwrap().0;
        assert!((img.grid[i] - 117.3).abs() <= s.grid_dy);
    }

    #[test]
    fn zero_scene_images_are_zero() {
        let mut s = Scene::named("fig1").unwrap();
        s.reflectors.clear();
        let t = sample_screen(&s, 0).unwrap();
        let r = synthesize_record(&s, &t, 0);
        assert!(sar_image(&r, &s).values.iter().all(|v| v.norm() == 0.0));
        let m = two_point_cint(&r, &s, 100.0, &uniform_grid((100.0, 140.0), 1.0)).unwrap();
        assert!(cint_image(&m, &s).values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn node_cap_enforced() {
        let (s, r) = fig1_record();
        let e = two_point_cint(&r, &s, 0.5, &[100.0]).unwrap_err();
        assert!(matches!(e, Error::TooManyNodes { .. }));
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.as_str()).unwrap(), m);
        }
        assert!(Method::parse("xyz").is_err());
    }
}
