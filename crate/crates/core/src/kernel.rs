//! Analytic expectation kernels and the Hermite eigen-machinery for the
//! single- and multi-reflector operators.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::cint::TwoPointMatrix;
use crate::error::{Error, Result};
use crate::quad;
use crate::scene::Reflector;

#[derive(Debug, Clone, PartialEq)]
#[allow(non_snake_case)]
pub struct GaussKernelParams {
    pub H: f64,
    pub h: f64,
    pub reflectors: Vec<Reflector>,
}

impl GaussKernelParams {
    #[allow(non_snake_case)]
    pub fn new(H: f64, h: f64, reflectors: Vec<Reflector>) -> Result<Self> {
        if !(h > 0.0 && H > h / 2.0) || !H.is_finite() {
            return Err(Error::InvalidScene(format!("kernel needs H > h/2 > 0, got H={H}, h={h}")));
        }
        Ok(GaussKernelParams { H, h, reflectors })
    }

    /// Eigenvalue ratio `(H - h/2)/(H + h/2)`.
    pub fn ratio(&self) -> f64 {
        (self.H - self.h / 2.0) / (self.H + self.h / 2.0)
    }
}

/// Normalized Gaussian `K_α(x)`.
pub fn k_alpha(x: f64, alpha: f64) -> f64 {
    (-(x * x) / (2.0 * alpha * alpha)).exp() / ((2.0 * PI).sqrt() * alpha)
}

/// Blurred two-point kernel with unit constant.
pub fn kernel_k(y: f64, yp: f64, p: &GaussKernelParams) -> f64 {
    let mut acc = 0.0;
    for r in &p.reflectors {
        for s in &p.reflectors {
            acc += r.rho * s.rho
                * k_alpha((r.z + s.z) / 2.0 - (y + yp) / 2.0, p.H)
                * k_alpha((r.z - s.z) - (y - yp), p.h);
        }
    }
    acc
}

/// Single-reflector kernel.
pub fn kernel_single(y: f64, yp: f64, r: Reflector, p: &GaussKernelParams) -> f64 {
    r.rho * r.rho * k_alpha(r.z - (y + yp) / 2.0, p.H) * k_alpha(yp - y, p.h)
}

/// Expected noise contribution with unit constant.
pub fn noise_kernel(y: f64, yp: f64, h: f64) -> f64 {
    (-(y - yp).powi(2) / (2.0 * h * h)).exp()
}

/// `Δy · K(y_p, y_q)` on a uniform grid.
pub fn discretized_kernel(p: &GaussKernelParams, grid: &[f64]) -> DMatrix<f64> {
    let dy = grid[1] - grid[0];
    let g = grid.len();
    DMatrix::from_fn(g, g, |i, j| dy * kernel_k(grid[i], grid[j], p))
}

/// The analytic kernel as a two-point matrix (no quadratic phase).
pub fn analytic_two_point(p: &GaussKernelParams, grid: &[f64]) -> TwoPointMatrix {
    let g = grid.len();
    let dense = DMatrix::from_fn(g, g, |i, j| Complex64::new(kernel_k(grid[i], grid[j], p), 0.0));
    TwoPointMatrix::from_dense(grid.to_vec(), dense, f64::NAN, 0.0)
}

/// Probabilists' Hermite polynomial by the three-term recurrence.
pub fn hermite_he(n: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        let c = x * b - k as f64 * a;
        a = b;
        b = c;
    }
    b
}

#[derive(Debug, Clone)]
pub struct HermiteTable {
    pub n_max: usize,
    /// Monomial coefficients: `He_n(ξ) = Σ_i theta[n][i] ξ^i`.
    pub theta: Vec<Vec<i128>>,
    /// Inverse: `ξ^i = Σ_l theta_inv[i][l] He_l(ξ)`.
    pub theta_inv: Vec<Vec<i128>>,
    pub dcal: Vec<f64>,
    pub dmat: Vec<f64>,
    /// Eigenpolynomial coefficients, unit lower triangular.
    pub gamma: Vec<Vec<f64>>,
    /// Scaled eigenvalues `((H - h/2)/(H + h/2))^n`.
    pub lambda_tilde: Vec<f64>,
}

fn theta_rows(n_max: usize) -> Vec<Vec<i128>> {
    let mut t = vec![vec![0i128; n_max + 1]; n_max + 1];
    t[0][0] = 1;
    if n_max >= 1 {
        t[1][1] = 1;
    }
    for n in 1..n_max {
        for i in 0..=n + 1 {
            let shifted = if i > 0 { t[n][i - 1] } else { 0 };
            t[n + 1][i] = shifted - n as i128 * t[n - 1][i];
        }
    }
    t
}

fn invert_unit_lower(t: &[Vec<i128>]) -> Vec<Vec<i128>> {
    // Diagonal entries of the Hermite matrix are all 1.
    let n = t.len();
    let mut inv = vec![vec![0i128; n]; n];
    for c in 0..n {
        inv[c][c] = 1;
        for r in c + 1..n {
            let s: i128 = (c..r).map(|k| t[r][k] * inv[k][c]).sum();
            inv[r][c] = -s;
        }
    }
    inv
}

pub fn hermite_table(n_max: usize, p: &GaussKernelParams) -> Result<HermiteTable> {
    if n_max > 30 {
        return Err(Error::InvalidScene("hermite table limited to degree 30".into()));
    }
    let (big_h, h) = (p.H, p.h);
    let lo = big_h - h / 2.0;
    if lo <= 0.0 {
        return Err(Error::Degenerate);
    }
    let hi = big_h + h / 2.0;
    let mid = (big_h * big_h + h * h / 4.0).sqrt();
    let theta = theta_rows(n_max);
    let theta_inv = invert_unit_lower(&theta);
    let n = n_max + 1;
    let dcal: Vec<f64> = (0..n).map(|l| (mid / hi).powi(l as i32)).collect();
    let dmat: Vec<f64> = (0..n).map(|q| (lo / mid).powi(q as i32)).collect();
    // T = Θ⁻¹ 𝓓 Θ D, lower triangular.
    let mut t = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for l in 0..=i {
            let s: f64 = (l..=i)
                .map(|k| theta_inv[i][k] as f64 * dcal[k] * theta[k][l] as f64)
                .sum();
            t[i][l] = s * dmat[l];
        }
    }
    let lambda_tilde: Vec<f64> = (0..n).map(|k| (lo / hi).powi(k as i32)).collect();
    let mut gamma = vec![vec![0.0f64; n]; n];
    for row in 0..n {
        gamma[row][row] = 1.0;
        for l in (0..row).rev() {
            let gap = lambda_tilde[row] - lambda_tilde[l];
            if gap == 0.0 {
                return Err(Error::Degenerate);
            }
            let s: f64 = (l + 1..=row).map(|q| gamma[row][q] * t[q][l]).sum();
            gamma[row][l] = s / gap;
        }
    }
    Ok(HermiteTable { n_max, theta, theta_inv, dcal, dmat, gamma, lambda_tilde })
}

impl HermiteTable {
    /// Eigenpolynomial `p_n(ξ)`.
    pub fn p(&self, n: usize, xi: f64) -> f64 {
        self.gamma[n][..=n].iter().rev().fold(0.0, |acc, &c| acc * xi + c)
    }
}

/// Normalized eigenfunction of a single-reflector operator.
#[derive(Debug, Clone)]
pub struct EigenFunction {
    pub z: f64,
    pub root_hh: f64,
    pub coeffs: Vec<f64>,
    pub scale: f64,
}

impl EigenFunction {
    pub fn unscaled(&self, y: f64) -> f64 {
        let xi = (y - self.z) / self.root_hh;
        let p = self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * xi + c);
        (-0.5 * xi * xi).exp() * p
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.scale * self.unscaled(y)
    }
}

/// Closed-form eigenpair `(Λ_{j,n}, V_{j,n})` with unit constant.
pub fn closed_eigenpair(j: usize, n: usize, p: &GaussKernelParams, table: &HermiteTable) -> (f64, EigenFunction) {
    let r = p.reflectors[j];
    let lambda = r.rho * r.rho / ((2.0 * PI).sqrt() * (p.H + p.h / 2.0)) * p.ratio().powi(n as i32);
    let root_hh = (p.H * p.h).sqrt();
    let mut f = EigenFunction { z: r.z, root_hh, coeffs: table.gamma[n][..=n].to_vec(), scale: 1.0 };
    let norm2 = quad::integrate_line(|y| f.unscaled(y).powi(2), r.z, root_hh, 1e-12);
    f.scale = 1.0 / norm2.sqrt();
    (lambda, f)
}

/// Sum of weighted single-reflector eigenfunctions, normalized.
#[derive(Debug, Clone)]
pub struct CompositeFunction {
    pub parts: Vec<(f64, EigenFunction)>,
    pub scale: f64,
}

impl CompositeFunction {
    pub fn eval(&self, y: f64) -> f64 {
        self.scale * self.parts.iter().map(|(w, f)| w * f.eval(y)).sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct CompositeSpectrum {
    pub values: Vec<f64>,
    pub functions: Vec<CompositeFunction>,
    /// Separation measure of the reflector set; the closed form assumes it exceeds 1.
    pub zeta: f64,
}

pub fn composite_spectrum(p: &GaussKernelParams, table: &HermiteTable, n_terms: usize) -> CompositeSpectrum {
    let m = p.reflectors.len();
    let mut gap = f64::INFINITY;
    for i in 0..m {
        for k in i + 1..m {
            gap = gap.min((p.reflectors[i].z - p.reflectors[k].z).abs());
        }
    }
    let zeta = gap / (3.0 * p.H);
    let zs: Vec<f64> = p.reflectors.iter().map(|r| r.z).collect();
    let lo = zs.iter().copied().fold(f64::INFINITY, f64::min) - 40.0 * p.H;
    let hi = zs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 40.0 * p.H;
    let mut values = Vec::new();
    let mut functions = Vec::new();
    for n in 0..n_terms {
        let mut total = 0.0;
        let mut parts = Vec::new();
        for j in 0..m {
            let (l, f) = closed_eigenpair(j, n, p, table);
            total += l;
            parts.push((p.reflectors[j].rho, f));
        }
        let mut cf = CompositeFunction { parts, scale: 1.0 };
        let breaks: Vec<f64> = (0..=64).map(|i| lo + (hi - lo) * i as f64 / 64.0).collect();
        let norm2 = quad::integrate_pieces(|y| cf.eval(y).powi(2), &breaks, 1e-12);
        cf.scale = 1.0 / norm2.sqrt();
        values.push(total);
        functions.push(cf);
    }
    CompositeSpectrum { values, functions, zeta }
}

#[allow(clippy::too_many_arguments)]
fn lhs_integral(big_h: f64, h: f64, zj: f64, zjp: f64, eta: f64, y: f64, n: usize) -> f64 {
    let c = (zj + zjp) / 2.0;
    let d = zj - zjp;
    let hh = big_h * h;
    let f = |yp: f64| {
        k_alpha((y + yp) / 2.0 - c, big_h)
            * k_alpha((y - yp) - d, h)
            * (-(yp - eta).powi(2) / (2.0 * hh)).exp()
            * hermite_he(n, (yp - eta) / hh.sqrt())
    };
    quad::integrate_line(f, y - d, h, 1e-13)
}

fn rhs_closed(big_h: f64, h: f64, zj: f64, zjp: f64, eta: f64, y: f64, n: usize) -> f64 {
    let hi = big_h + h / 2.0;
    let lo = big_h - h / 2.0;
    let m2 = big_h * big_h + h * h / 4.0;
    let hh = big_h * h;
    let pref = m2.powf(n as f64 / 2.0) / ((2.0 * PI).sqrt() * hi.powi(n as i32 + 1));
    let e = -(zjp - eta).powi(2) / (2.0 * hi * hi) - (y - zj + (zjp - eta) * lo / hi).powi(2) / (2.0 * hh);
    let arg = (y - zj) * lo / (hh * m2).sqrt() + (zjp - eta) * m2.sqrt() / (hh.sqrt() * hi);
    pref * e.exp() * hermite_he(n, arg)
}

fn residual(lhs: f64, rhs: f64) -> f64 {
    if rhs == 0.0 {
        lhs.abs()
    } else {
        (lhs - rhs).abs() / rhs.abs()
    }
}

/// Relative residual of the Gaussian convolution identity (degree-0 case).
#[allow(non_snake_case)]
pub fn identity_b6_check(H: f64, h: f64, zj: f64, zjp: f64, eta: f64, y: f64) -> f64 {
    lemma_b10_check(0, H, h, zj, zjp, eta, y)
}

/// Relative residual of the Hermite-weighted convolution identity.
#[allow(non_snake_case)]
pub fn lemma_b10_check(n: usize, H: f64, h: f64, zj: f64, zjp: f64, eta: f64, y: f64) -> f64 {
    residual(lhs_integral(H, h, zj, zjp, eta, y, n), rhs_closed(H, h, zj, zjp, eta, y, n))
}
