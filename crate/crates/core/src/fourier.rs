//! Fourier cross-products of the two-point matrix, phase estimation and the
//! optimization image.
//!
//! Products are indexed by pairs `(i, j)` of points of a single frequency grid
//! `κ_i = i δ`: `P(i, j) ≈ ρ̂(κ_i) conj(ρ̂(κ_j))`, which sits at
//! `κ = (κ_i + κ_j)/2`, `κ̃ = κ_i − κ_j`. Frequencies are measured from
//! `origin` (the domain center), so `ρ̂(κ) = Σ ρ_j exp(−iκ(z_j − origin))`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::cint::{ImageProfile, Method, TwoPointMatrix};
use crate::error::{Error, Result};
use crate::signal::{rotate_to_real, tukey};

/// Envelope exponent bound: products with `κ²h² + κ̃²H² > ENVELOPE_BOUND²`
/// are dropped.
pub const ENVELOPE_BOUND: f64 = 3.0;

pub const TUKEY_TAPER: f64 = 0.25;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProductEntry {
    pub i: i32,
    pub j: i32,
    pub value: Complex64,
}

#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
pub struct FourierProducts {
    /// Spacing of the frequency grid.
    pub delta: f64,
    /// The grid is `i δ` for `|i| <= half_len`.
    pub half_len: usize,
    pub entries: Vec<ProductEntry>,
    pub origin: f64,
    pub chirp_rate: f64,
    pub envelope_corrected: bool,
    pub h_est: f64,
    pub H: f64,
    pub h: f64,
    pub warnings: Vec<String>,
    #[serde(skip)]
    lookup: Vec<Option<usize>>,
}

impl FourierProducts {
    pub fn len(&self) -> usize {
        2 * self.half_len + 1
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn kappa_grid(&self) -> Vec<f64> {
        let k = self.half_len as i32;
        (-k..=k).map(|i| i as f64 * self.delta).collect()
    }

    fn slot(&self, i: i32, j: i32) -> Option<usize> {
        let k = self.half_len as i32;
        if i.abs() > k || j.abs() > k {
            return None;
        }
        let n = self.len();
        Some((i + k) as usize * n + (j + k) as usize)
    }

    pub fn get(&self, i: i32, j: i32) -> Option<Complex64> {
        self.slot(i, j).and_then(|s| self.lookup[s]).map(|e| self.entries[e].value)
    }

    pub fn kappa(&self, e: &ProductEntry) -> f64 {
        0.5 * (e.i + e.j) as f64 * self.delta
    }

    pub fn kappa_tilde(&self, e: &ProductEntry) -> f64 {
        (e.i - e.j) as f64 * self.delta
    }

    /// `sqrt(max(P(κ, 0), 0))` over the frequency grid.
    pub fn modulus(&self) -> Vec<f64> {
        let k = self.half_len as i32;
        (-k..=k)
            .map(|i| self.get(i, i).map(|v| v.re.max(0.0).sqrt()).unwrap_or(0.0))
            .collect()
    }

    pub fn energy(&self) -> f64 {
        self.entries.iter().map(|e| e.value.norm_sqr()).sum()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("kappa,kappa_tilde,re,im\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.17e},{:.17e}\n",
                self.kappa(e),
                self.kappa_tilde(e),
                e.value.re,
                e.value.im
            ));
        }
        out
    }
}

/// `Eᴴ M E Δy²` with `E[(q, j)] = d_q exp(i f_j (y_q − origin))`, where `d` is
/// the quadratic-phase correction (identity when `deramp` is false).
pub fn spectral_gram(m: &TwoPointMatrix, freqs: &[f64], origin: f64, deramp: bool) -> DMatrix<Complex64> {
    let e = phase_matrix(m, freqs, origin, deramp);
    let dy2 = m.dy() * m.dy();
    let g = match &m.factors {
        Some(f) => {
            let b = f * &e;
            b.adjoint() * b
        }
        None => e.adjoint() * (&m.dense * &e),
    };
    g * Complex64::new(dy2, 0.0)
}

/// Diagonal of [`spectral_gram`].
pub fn spectral_diag(m: &TwoPointMatrix, freqs: &[f64], origin: f64, deramp: bool) -> Vec<f64> {
    let e = phase_matrix(m, freqs, origin, deramp);
    let dy2 = m.dy() * m.dy();
    match &m.factors {
        Some(f) => {
            let b = f * &e;
            b.column_iter().map(|c| c.norm_squared() * dy2).collect()
        }
        None => {
            let b = &m.dense * &e;
            (0..freqs.len())
                .map(|j| (e.column(j).adjoint() * b.column(j))[(0, 0)].re * dy2)
                .collect()
        }
    }
}

fn phase_matrix(m: &TwoPointMatrix, freqs: &[f64], origin: f64, deramp: bool) -> DMatrix<Complex64> {
    let c = if deramp { m.chirp_rate } else { 0.0 };
    DMatrix::from_fn(m.len(), freqs.len(), |q, j| {
        let y = m.grid[q];
        Complex64::from_polar(1.0, freqs[j] * (y - origin) - c * y * y)
    })
}

/// Cross-products over `|κ_i|, |κ_j| <= 1/h_est` with `|κ̃| <= 3/H`, envelope divided out.
#[allow(non_snake_case)]
pub fn fourier_products(m: &TwoPointMatrix, H: f64, h: f64, h_est: f64) -> Result<FourierProducts> {
    if !(H > 0.0 && h > 0.0 && h_est > 0.0) || m.len() < 2 {
        return Err(Error::InvalidScene("fourier products need positive scales and a grid".into()));
    }
    let mut warnings = Vec::new();
    if h_est < 2.0 * h || H < 2.0 * h_est {
        warnings.push(format!("H >> h_est >> h not satisfied (H={H:.3}, h_est={h_est:.3}, h={h:.3})"));
    }
    let span = m.grid[m.len() - 1] - m.grid[0] + m.dy();
    let delta = PI / span;
    let origin = 0.5 * (m.grid[0] + m.grid[m.len() - 1]);
    let half_len = ((1.0 / h_est) / delta).floor() as usize;
    let reach = ((ENVELOPE_BOUND / H) / delta).floor() as i32;
    let k = half_len as i32;
    let freqs: Vec<f64> = (-k..=k).map(|i| i as f64 * delta).collect();
    let gram = spectral_gram(m, &freqs, origin, true);
    let n = freqs.len();
    let mut entries = Vec::new();
    let mut lookup = vec![None; n * n];
    let mut clipped = 0usize;
    for i in -k..=k {
        for j in (i - reach).max(-k)..=(i + reach).min(k) {
            let kap = 0.5 * (i + j) as f64 * delta;
            let kt = (i - j) as f64 * delta;
            let expo = kap * kap * h * h + kt * kt * H * H;
            if expo > ENVELOPE_BOUND * ENVELOPE_BOUND {
                clipped += 1;
                continue;
            }
            let (a, b) = ((i + k) as usize, (j + k) as usize);
            // Hermitian part, so the conjugate symmetry holds exactly.
            let v = gram[(a, b)] + gram[(b, a)].conj();
            lookup[a * n + b] = Some(entries.len());
            entries.push(ProductEntry { i, j, value: 0.5 * v * (0.5 * expo).exp() });
        }
    }
    if clipped > 0 {
        warnings.push(format!("{clipped} products beyond the envelope bound were dropped"));
    }
    Ok(FourierProducts {
        delta,
        half_len,
        entries,
        origin,
        chirp_rate: m.chirp_rate,
        envelope_corrected: true,
        h_est,
        H,
        h,
        warnings,
        lookup,
    })
}

/// Estimate `ρ̂` on the frequency grid by marching outward from the center.
/// The gauge is `ρ̂(anchor) = sqrt(P(anchor, anchor)) > 0` with the anchor the
/// grid point nearest zero whose modulus clears `floor * max`.
pub fn recursive_estimate(p: &FourierProducts, floor: f64) -> Result<Vec<Complex64>> {
    let k = p.half_len as i32;
    let modulus = p.modulus();
    let top = modulus.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Err(Error::NoAnchor);
    }
    let viable = |i: i32| modulus[(i + k) as usize] >= floor * top;
    let anchor = (0..=k)
        .flat_map(|d| [d, -d])
        .find(|&i| viable(i))
        .ok_or(Error::NoAnchor)?;
    let n = p.len();
    let mut est: Vec<Option<Complex64>> = vec![None; n];
    est[(anchor + k) as usize] = Some(Complex64::new(modulus[(anchor + k) as usize], 0.0));
    let mut order: Vec<i32> = (-k..=k).filter(|&i| i != anchor).collect();
    order.sort_by_key(|&i| ((i - anchor).abs(), i));
    for i in order {
        // Pivot on the known estimate with the largest modulus.
        let mut best: Option<(f64, Complex64)> = None;
        for (q, e) in est.iter().enumerate() {
            let Some(rq) = e else { continue };
            let qi = q as i32 - k;
            if rq.norm() < floor * top {
                continue;
            }
            if let Some(v) = p.get(i, qi) {
                if best.is_none_or(|(m, _)| rq.norm() > m) {
                    best = Some((rq.norm(), v / rq.conj()));
                }
            }
        }
        let (_, v) = best.ok_or(Error::NoAnchor)?;
        est[(i + k) as usize] = Some(v);
    }
    Ok(est.into_iter().map(|e| e.unwrap_or_default()).collect())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OptSettings {
    pub max_iter: usize,
    /// Stop when the gradient norm of the normalized objective falls below this.
    pub grad_tol: f64,
    pub history: usize,
    /// Stop when the objective fell by less than this fraction over the last
    /// `STALL_WINDOW` accepted steps.
    pub stall_tol: f64,
}

const STALL_WINDOW: usize = 100;

impl Default for OptSettings {
    fn default() -> Self {
        OptSettings { max_iter: 20_000, grad_tol: 1e-13, history: 12, stall_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseEstimate {
    pub theta: Vec<f64>,
    /// Objective after each accepted step, normalized by `Σ|P|²`.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub line_search_failed: bool,
}

impl PhaseEstimate {
    pub fn objective(&self) -> f64 {
        self.history.last().copied().unwrap_or(f64::NAN)
    }
}

struct Objective<'a> {
    p: &'a FourierProducts,
    modulus: Vec<f64>,
    energy: f64,
}

impl Objective<'_> {
    fn eval(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let k = self.p.half_len as i32;
        let unit: Vec<Complex64> = theta
            .iter()
            .zip(&self.modulus)
            .map(|(&t, &m)| Complex64::from_polar(m, t))
            .collect();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut f = 0.0;
        for e in &self.p.entries {
            let (a, b) = ((e.i + k) as usize, (e.j + k) as usize);
            let model = unit[a] * unit[b].conj();
            let r = e.value - model;
            f += r.norm_sqr();
            let d = 2.0 * (r.conj() * Complex64::new(0.0, -1.0) * model).re;
            grad[a] += d;
            grad[b] -= d;
        }
        let s = 1.0 / self.energy;
        grad.iter_mut().for_each(|g| *g *= s);
        // Gauge: the center phase is fixed.
        grad[k as usize] = 0.0;
        f * s
    }
}

/// Normalized objective `Σ|P − m m' e^{i(θ−θ')}|² / Σ|P|²`.
pub fn phase_objective(p: &FourierProducts, theta: &[f64]) -> f64 {
    let obj = Objective { p, modulus: p.modulus(), energy: p.energy().max(f64::MIN_POSITIVE) };
    let mut g = vec![0.0; theta.len()];
    obj.eval(theta, &mut g)
}

fn dotr(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimize the phase objective by L-BFGS with backtracking, gauge `θ(0) = 0`.
pub fn optimize_phase(p: &FourierProducts, init: Option<&[f64]>, settings: OptSettings) -> PhaseEstimate {
    let n = p.len();
    let k = p.half_len;
    let energy = p.energy();
    let mut theta = init.map(|t| t.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let c0 = theta[k];
    theta.iter_mut().for_each(|t| *t -= c0);
    if energy == 0.0 {
        return PhaseEstimate { theta, history: vec![0.0], iterations: 0, line_search_failed: false };
    }
    let obj = Objective { p, modulus: p.modulus(), energy };
    let mut g = vec![0.0; n];
    let mut f = obj.eval(&theta, &mut g);
    let mut history = vec![f];
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut failed = false;
    let mut it = 0;
    let mut g_new = vec![0.0; n];
    while it < settings.max_iter && dotr(&g, &g).sqrt() > settings.grad_tol {
        it += 1;
        // Two-loop recursion.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, y) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / dotr(y, s);
            let a = rho * dotr(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push((a, rho));
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dotr(s, y) / dotr(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y), (a, rho)) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let b = rho * dotr(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dotr(&g, &dir);
        if slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dotr(&g, &g);
        }
        let mut step = if s_hist.is_empty() { 1.0 / dotr(&g, &g).sqrt().max(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let ft = obj.eval(&trial, &mut g_new);
            if ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, ft)) = accepted else {
            failed = true;
            break;
        };
        let s: Vec<f64> = trial.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dotr(&s, &y) > 1e-300 {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > settings.history {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        theta = trial;
        f = ft;
        std::mem::swap(&mut g, &mut g_new);
        history.push(f);
        if history.len() > STALL_WINDOW {
            let old = history[history.len() - 1 - STALL_WINDOW];
            if old - f <= settings.stall_tol * old {
                break;
            }
        }
    }
    PhaseEstimate { theta, history, iterations: it, line_search_failed: failed }
}

/// `Σ_i w_i |ρ̂_i| e^{iθ_i} e^{iκ_i (y − origin)} δ/2π` on `grid` with a Tukey window
/// of the given taper, rotated to real.
pub fn op_image_with_taper(p: &FourierProducts, theta: &[f64], grid: &[f64], taper: f64) -> ImageProfile {
    let modulus = p.modulus();
    let kap = p.kappa_grid();
    let kmax = p.half_len as f64 * p.delta;
    let coef: Vec<Complex64> = kap
        .iter()
        .zip(&modulus)
        .zip(theta)
        .map(|((&kk, &m), &t)| {
            let w = if kmax > 0.0 { tukey(kk / kmax, taper) } else { 1.0 };
            Complex64::from_polar(w * m * p.delta / (2.0 * PI), t)
        })
        .collect();
    let values: Vec<Complex64> = grid
        .iter()
        .map(|&y| {
            let s: Complex64 = coef
                .iter()
                .zip(&kap)
                .map(|(c, &kk)| c * Complex64::from_polar(1.0, kk * (y - p.origin)))
                .sum();
            s * Complex64::from_polar(1.0, -p.chirp_rate * y * y)
        })
        .collect();
    ImageProfile::from_real(grid.to_vec(), &rotate_to_real(&values), Method::Op)
}

pub fn op_image(p: &FourierProducts, theta: &[f64], grid: &[f64]) -> ImageProfile {
    op_image_with_taper(p, theta, grid, TUKEY_TAPER)
}
