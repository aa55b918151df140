//! Peak finding, sign recovery and ensemble statistics.

use num_complex::Complex64;
use serde::Serialize;

use crate::cint::{ImageProfile, Method};

#[derive(Debug, Clone, Serialize)]
pub struct Peak {
    pub location: f64,
    /// Signed value for real images, modulus for complex ones.
    pub value: f64,
    /// Gaussian std fitted on the half-maximum neighborhood (0 if too narrow).
    pub width: f64,
    /// Height above the higher of the two bases, relative to the image maximum.
    pub prominence: f64,
}

/// Local maxima less prominent than this fraction of the maximum are ripple.
pub const MIN_PROMINENCE: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct PeakReport {
    pub peaks: Vec<Peak>,
    pub threshold: f64,
    pub method: Method,
}

impl PeakReport {
    pub fn locations(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.location).collect()
    }

    /// Peaks with `|value| >= frac * max|value|`.
    pub fn above(&self, frac: f64) -> Vec<&Peak> {
        let top = self.peaks.first().map(|p| p.value.abs()).unwrap_or(0.0);
        self.peaks.iter().filter(|p| p.value.abs() >= frac * top).collect()
    }
}

fn is_real(img: &ImageProfile) -> bool {
    img.values.iter().all(|v| v.im.abs() <= 1e-12 * v.norm().max(1e-300))
}

/// Drop from `m[i]` to the higher of the lowest points reached on each side
/// before meeting a higher sample (or the end of the profile).
fn prominence(m: &[f64], i: usize) -> f64 {
    let mut left = m[i];
    for j in (0..i).rev() {
        if m[j] > m[i] {
            break;
        }
        left = left.min(m[j]);
    }
    let mut right = m[i];
    for &v in &m[i + 1..] {
        if v > m[i] {
            break;
        }
        right = right.min(v);
    }
    m[i] - left.max(right)
}

/// Local maxima of `|values|` above `rel_threshold * max` and at least
/// [`MIN_PROMINENCE`] prominent.
pub fn find_peaks(img: &ImageProfile, rel_threshold: f64) -> PeakReport {
    let m = img.abs();
    let real = is_real(img);
    let top = m.iter().copied().fold(0.0, f64::max);
    let mut peaks = Vec::new();
    if top > 0.0 && m.len() >= 3 {
        let dy = img.grid[1] - img.grid[0];
        for i in 1..m.len() - 1 {
            if !(m[i] >= m[i - 1] && m[i] > m[i + 1] && m[i] >= rel_threshold * top) {
                continue;
            }
            let prom = prominence(&m, i) / top;
            if prom < MIN_PROMINENCE {
                continue;
            }
            let denom = m[i - 1] - 2.0 * m[i] + m[i + 1];
            let off = if denom < 0.0 { 0.5 * (m[i - 1] - m[i + 1]) / denom } else { 0.0 };
            let location = img.grid[i] + off.clamp(-0.5, 0.5) * dy;
            let value = if real { img.values[i].re } else { m[i] };
            peaks.push(Peak { location, value, width: fit_width(&img.grid, &m, i), prominence: prom });
        }
    }
    peaks.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()));
    PeakReport { peaks, threshold: rel_threshold, method: img.method }
}

/// Weighted least-squares fit of `log m = α + β y + γ y²` on the contiguous
/// half-maximum neighborhood of sample `i`.
fn fit_width(y: &[f64], m: &[f64], i: usize) -> f64 {
    let half = 0.5 * m[i];
    let mut lo = i;
    while lo > 0 && m[lo - 1] >= half && m[lo - 1] <= m[lo] {
        lo -= 1;
    }
    let mut hi = i;
    while hi + 1 < m.len() && m[hi + 1] >= half && m[hi + 1] <= m[hi] {
        hi += 1;
    }
    if hi - lo < 2 {
        return 0.0;
    }
    let yc = y[i];
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for j in lo..=hi {
        let t = y[j] - yc;
        let w = m[j] * m[j];
        let basis = [1.0, t, t * t];
        let l = m[j].ln();
        for r in 0..3 {
            b[r] += w * basis[r] * l;
            for c in 0..3 {
                a[r][c] += w * basis[r] * basis[c];
            }
        }
    }
    let gamma = solve3(a, b)[2];
    if gamma < 0.0 {
        (-0.5 / gamma).sqrt()
    } else {
        0.0
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for k in 0..3 {
        let p = (k..3).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..3 {
            let f = a[i][k] / a[k][k];
            for j in k..3 {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = [0.0; 3];
    for k in (0..3).rev() {
        let s: f64 = (k + 1..3).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Sign of the real image at the grid point nearest each location.
pub fn sign_at(img: &ImageProfile, locations: &[f64]) -> Vec<f64> {
    locations
        .iter()
        .map(|&z| {
            let i = nearest(&img.grid, z);
            let v = img.values[i].re;
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect()
}

pub fn nearest(grid: &[f64], z: f64) -> usize {
    grid.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - z).abs().total_cmp(&(b.1 - z).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// `std/|mean|`, with the std pooled over real and imaginary parts.
pub fn cov_statistic(samples: &[Complex64]) -> f64 {
    let n = samples.len() as f64;
    let mean: Complex64 = samples.iter().sum::<Complex64>() / n;
    let var = samples.iter().map(|s| (s - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
    if mean.norm() == 0.0 {
        return f64::INFINITY;
    }
    var.sqrt() / mean.norm()
}

/// Strict local maxima of a `rows × cols` surface (8-neighborhood) above
/// `rel_threshold * max`. Returns `(row, col, value)`.
pub fn surface_peaks(values: &[f64], rows: usize, cols: usize, rel_threshold: f64) -> Vec<(usize, usize, f64)> {
    let top = values.iter().copied().fold(0.0, f64::max);
    let at = |r: usize, c: usize| values[r * cols + c];
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = at(r, c);
            if v < rel_threshold * top || v <= 0.0 {
                continue;
            }
            let mut is_max = true;
            'nb: for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    if rr < 0 || cc < 0 || rr >= rows as isize || cc >= cols as isize {
                        continue;
                    }
                    let w = at(rr as usize, cc as usize);
                    // Ties are broken toward the earlier index.
                    let earlier = (dr, dc) < (0, 0);
                    if w > v || (earlier && w == v) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                out.push((r, c, v));
            }
        }
    }
    out
}
