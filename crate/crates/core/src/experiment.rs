//! End-to-end scenarios, validation suites and ensemble sweeps.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::cint::{cint_image, matrix_grid, sar_image, stability_sweep, two_point_cint, ImageProfile, Method, TwoPointMatrix};
use crate::error::{Error, Result};
use crate::fourier::{fourier_products, op_image, optimize_phase, FourierProducts, OptSettings};
use crate::io::{atomic_write, read_twopoint, write_twopoint};
use crate::kernel::{analytic_two_point, closed_eigenpair, composite_spectrum, discretized_kernel, hermite_table, GaussKernelParams};
use crate::medium::{coherence_check, derive_seed, screen_csv, ScreenSampler};
use crate::metrics::{find_peaks, surface_peaks, PeakReport};
use crate::pr::{modulus_from_matrix, pr_image, pr_restarts, DEFAULT_ITERATIONS, DEFAULT_RESTARTS};
use crate::scene::{derive_scales, uniform_grid, Reflector, Scales, Scene};
use crate::spectral::{power_leading, sp_image, EigenResult, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::synth::{synthesize_record, Record};

/// Peak threshold used for reports and for counting surface peaks.
pub const PEAK_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: String,
    pub scene: Scene,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub out: PathBuf,
    pub h_est: Option<f64>,
}

impl ScenarioSpec {
    pub fn named(name: &str, seed: u64, out: &Path) -> Result<ScenarioSpec> {
        Ok(ScenarioSpec {
            name: name.to_string(),
            scene: Scene::named(name)?,
            methods: Method::ALL.to_vec(),
            seed,
            out: out.to_path_buf(),
            h_est: None,
        })
    }
}

/// Matrix grid spacing: a third of the cross-range resolution.
pub fn matrix_spacing(scales: &Scales) -> f64 {
    scales.h / 3.0
}

/// `0.8 h` for homogeneous noiseless scenes, `2` otherwise.
pub fn default_h_est(scene: &Scene, scales: &Scales) -> f64 {
    if scene.sigma_tau == 0.0 && scene.sigma_W == 0.0 {
        0.8 * scales.h
    } else {
        2.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub start: f64,
    pub dy: f64,
    pub len: usize,
}

impl GridInfo {
    fn of(grid: &[f64]) -> GridInfo {
        let dy = if grid.len() > 1 { grid[1] - grid[0] } else { 0.0 };
        GridInfo { start: grid[0], dy, len: grid.len() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Seeds {
    pub master: u64,
    pub screen: u64,
    pub noise: u64,
    pub power: u64,
    pub phase_retrieval: u64,
}

impl Seeds {
    pub fn from_master(master: u64) -> Seeds {
        Seeds {
            master,
            screen: derive_seed(master, 0),
            noise: derive_seed(master, 1),
            power: derive_seed(master, 2),
            phase_retrieval: derive_seed(master, 3),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OpDiagnostics {
    pub objective: f64,
    pub iterations: usize,
    pub line_search_failed: bool,
    pub products: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrDiagnostics {
    pub best_residual: f64,
    pub best_iteration: usize,
    pub iterations: usize,
    pub band_bins: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub eigen: Option<EigenResult>,
    pub op: Option<OpDiagnostics>,
    pub pr: Option<PrDiagnostics>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub scene: Scene,
    pub scales: Scales,
    pub seeds: Seeds,
    pub sigma_w_abs: f64,
    pub x_used: f64,
    pub chirp_rate: f64,
    pub h_est: f64,
    pub matrix_grid: GridInfo,
    pub display_grid: GridInfo,
    pub surface_peaks: usize,
    pub peaks: BTreeMap<String, PeakReport>,
    pub diagnostics: Diagnostics,
}

pub struct ScenarioOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub record: Record,
    pub matrix: TwoPointMatrix,
    pub products: Option<FourierProducts>,
    pub images: Vec<ImageProfile>,
}

pub struct Images {
    pub images: Vec<ImageProfile>,
    pub products: Option<FourierProducts>,
    pub diagnostics: Diagnostics,
}

/// Compute the requested images from a record and its two-point matrix.
pub fn compute_images(
    record: &Record,
    m: &TwoPointMatrix,
    scene: &Scene,
    scales: &Scales,
    h_est: f64,
    methods: &[Method],
    seeds: &Seeds,
) -> Result<Images> {
    let mut images = Vec::new();
    let mut diag = Diagnostics::default();
    let mut products = None;
    for &method in methods {
        let img = match method {
            Method::Sar => sar_image(record, scene),
            Method::Ci => cint_image(m, scene),
            Method::Sp => {
                let eig = power_leading(m, DEFAULT_TOL, DEFAULT_MAX_ITER, seeds.power);
                if !eig.converged {
                    diag.warnings.push(format!("power iteration stopped at residual {:.3e}", eig.residual));
                }
                let img = sp_image(&eig, m, scene);
                diag.eigen = Some(eig);
                img
            }
            Method::Op => {
                let fp = fourier_products(m, scales.H, scales.h, h_est)?;
                diag.warnings.extend(fp.warnings.iter().cloned());
                let th = optimize_phase(&fp, None, OptSettings::default());
                if th.line_search_failed {
                    diag.warnings.push("phase optimization line search failed".into());
                }
                diag.op = Some(OpDiagnostics {
                    objective: th.objective(),
                    iterations: th.iterations,
                    line_search_failed: th.line_search_failed,
                    products: fp.entries.len(),
                });
                let img = op_image(&fp, &th.theta, &scene.display_grid());
                products = Some(fp);
                img
            }
            Method::Pr => {
                let grid = scene.display_grid();
                let target = modulus_from_matrix(m, scales.h, grid.len(), scene.grid_dy);
                let st = pr_restarts(&target, DEFAULT_ITERATIONS, seeds.phase_retrieval, DEFAULT_RESTARTS);
                diag.pr = Some(PrDiagnostics {
                    best_residual: st.residuals[st.best_iteration],
                    best_iteration: st.best_iteration,
                    iterations: st.iterations,
                    band_bins: target.band,
                    seed: st.seed,
                });
                pr_image(&st, &grid)
            }
        };
        images.push(img);
    }
    Ok(Images { images, products, diagnostics: diag })
}

/// Number of local maxima of `|M|` above the peak threshold.
pub fn count_surface_peaks(m: &TwoPointMatrix) -> usize {
    let g = m.len();
    let abs: Vec<f64> = m.dense.iter().map(|v| v.norm()).collect();
    // Column-major storage is the transpose; the count is unaffected.
    surface_peaks(&abs, g, g, PEAK_THRESHOLD).len()
}

fn record_csv(scene: &Scene, record: &Record) -> String {
    let mut out = String::from("n,x_n,re,im\n");
    for (n, (x, r)) in scene.sensors().iter().zip(&record.r).enumerate() {
        out.push_str(&format!("{n},{x:.12e},{:.17e},{:.17e}\n", r.re, r.im));
    }
    out
}

/// Parse a record written by [`run_scenario`].
pub fn parse_record_csv(text: &str) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::Format(format!("record line {}", i + 1));
        if f.len() != 4 {
            return Err(bad());
        }
        let re: f64 = f[2].trim().parse().map_err(|_| bad())?;
        let im: f64 = f[3].trim().parse().map_err(|_| bad())?;
        out.push(Complex64::new(re, im));
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    atomic_write(path, s.as_bytes())
}

pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioOutput> {
    let scene = &spec.scene;
    scene.validate()?;
    let scales = derive_scales(scene)?;
    let seeds = Seeds::from_master(spec.seed);
    let h_est = spec.h_est.unwrap_or_else(|| default_h_est(scene, &scales));
    let screen = ScreenSampler::new(scene)?.sample(seeds.screen);
    let record = synthesize_record(scene, &screen, seeds.noise);
    let grid = matrix_grid(scene, matrix_spacing(&scales));
    let matrix = two_point_cint(&record, scene, scales.X, &grid)?;
    let out = compute_images(&record, &matrix, scene, &scales, h_est, &spec.methods, &seeds)?;
    let dir = spec.out.join(&spec.name);
    std::fs::create_dir_all(&dir)?;
    let mut peaks = BTreeMap::new();
    for img in &out.images {
        atomic_write(&dir.join(format!("image_{}.csv", img.method.as_str())), img.csv().as_bytes())?;
        peaks.insert(img.method.as_str().to_string(), find_peaks(img, PEAK_THRESHOLD));
    }
    if let Some(fp) = &out.products {
        atomic_write(&dir.join("products.csv"), fp.csv().as_bytes())?;
    }
    write_twopoint(&dir.join("twopoint.bin"), &matrix.dense, matrix.x_used)?;
    atomic_write(&dir.join("screen.csv"), screen_csv(scene, &screen).as_bytes())?;
    atomic_write(&dir.join("record.csv"), record_csv(scene, &record).as_bytes())?;
    let manifest = Manifest {
        scenario: spec.name.clone(),
        scene: scene.clone(),
        scales,
        seeds,
        sigma_w_abs: record.sigma_w_abs,
        x_used: matrix.x_used,
        chirp_rate: matrix.chirp_rate,
        h_est,
        matrix_grid: GridInfo::of(&grid),
        display_grid: GridInfo::of(&scene.display_grid()),
        surface_peaks: count_surface_peaks(&matrix),
        peaks,
        diagnostics: out.diagnostics,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(ScenarioOutput { dir, manifest, record, matrix, products: out.products, images: out.images })
}

/// Recompute images from a scenario directory written by [`run_scenario`].
pub fn image_from_dir(dir: &Path, methods: &[Method]) -> Result<BTreeMap<String, PeakReport>> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let field = |name: &'static str| v.get(name).cloned().ok_or(Error::Format(format!("manifest lacks {name}")));
    let scene: Scene = serde_json::from_value(field("scene")?)?;
    let scales = derive_scales(&scene)?;
    let num = |name: &'static str| field(name).and_then(|x| x.as_f64().ok_or(Error::Format(format!("{name} not a number"))));
    let h_est = num("h_est")?;
    let chirp = num("chirp_rate")?;
    let master = field("seeds")?
        .get("master")
        .and_then(|x| x.as_u64())
        .ok_or(Error::Format("manifest lacks seeds.master".into()))?;
    let g = field("matrix_grid")?;
    let start = g.get("start").and_then(|x| x.as_f64());
    let dy = g.get("dy").and_then(|x| x.as_f64());
    let len = g.get("len").and_then(|x| x.as_u64());
    let (Some(start), Some(dy), Some(len)) = (start, dy, len) else {
        return Err(Error::Format("manifest matrix_grid incomplete".into()));
    };
    let (dense, x_used) = read_twopoint(&dir.join("twopoint.bin"))?;
    if dense.nrows() != len as usize {
        return Err(Error::Format("twopoint.bin size disagrees with manifest".into()));
    }
    let grid: Vec<f64> = (0..len as usize).map(|i| start + i as f64 * dy).collect();
    let m = TwoPointMatrix::from_dense(grid, dense, x_used, chirp);
    let r = parse_record_csv(&std::fs::read_to_string(dir.join("record.csv"))?)?;
    let seeds = Seeds::from_master(master);
    let record = Record { r, screen_seed: seeds.screen, noise_seed: seeds.noise, sigma_w_abs: f64::NAN };
    let out = compute_images(&record, &m, &scene, &scales, h_est, methods, &seeds)?;
    let mut peaks = BTreeMap::new();
    for img in &out.images {
        atomic_write(&dir.join(format!("image_{}.csv", img.method.as_str())), img.csv().as_bytes())?;
        peaks.insert(img.method.as_str().to_string(), find_peaks(img, PEAK_THRESHOLD));
    }
    if let Some(fp) = &out.products {
        atomic_write(&dir.join("products.csv"), fp.csv().as_bytes())?;
    }
    Ok(peaks)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Check {
        Check { name: name.into(), passed: value <= threshold, value, threshold }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Check {
        Check { name: name.into(), passed: value >= threshold, value, threshold }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub const SUITES: [&str; 4] = ["moments", "spectral", "fourier", "stability"];

pub fn validate(suite: &str) -> Result<SuiteReport> {
    let checks = match suite {
        "moments" => moments_suite()?,
        "spectral" => spectral_suite()?,
        "fourier" => fourier_suite()?,
        "stability" => stability_suite()?,
        other => return Err(Error::Unknown { field: "suite", value: other.to_string() }),
    };
    Ok(SuiteReport { suite: suite.to_string(), passed: checks.iter().all(|c| c.passed), checks })
}

fn moments_suite() -> Result<Vec<Check>> {
    let scene = Scene::named("fig2")?;
    let rep = coherence_check(&scene, 10_000, 7)?;
    let s2 = scene.sigma_tau * scene.sigma_tau;
    let at_xd = rep.rows.iter().find(|r| (r.dx - derive_scales(&scene).map(|s| s.Xd).unwrap_or(0.0)).abs() < 20.0);
    let coh = at_xd.map(|r| (r.empirical - (-0.5f64).exp()).abs()).unwrap_or(f64::INFINITY);
    Ok(vec![
        Check::at_most("variance relative error", (rep.variance - s2).abs() / s2, 0.05),
        Check::at_most("mean phasor modulus", rep.mean_phasor, 0.05),
        Check::at_most("coherence at decoherence length", coh, 0.03),
    ])
}

/// Dense eigenpairs of the discretized kernel, descending.
pub fn dense_spectrum(p: &GaussKernelParams, grid: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let k = discretized_kernel(p, grid);
    let e = SymmetricEigen::new(k);
    let mut idx: Vec<usize> = (0..grid.len()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(grid.len(), grid.len(), |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

fn spectral_suite() -> Result<Vec<Check>> {
    let (big_h, h) = (11.36, 1.0);
    let one = GaussKernelParams::new(big_h, h, vec![Reflector { z: 0.0, rho: 1.0 }])?;
    let grid = uniform_grid((-8.0 * big_h, 8.0 * big_h), h / 4.0);
    let (vals, vecs) = dense_spectrum(&one, &grid);
    let ratio = one.ratio();
    let mut worst = 0.0f64;
    for n in 0..5 {
        worst = worst.max((vals[n + 1] / vals[n] / ratio - 1.0).abs());
    }
    let table = hermite_table(6, &one)?;
    let mut top5 = 0.0f64;
    for n in 0..5 {
        let (l, _) = closed_eigenpair(0, n, &one, &table);
        top5 = top5.max((vals[n] / l - 1.0).abs());
    }
    let dy = h / 4.0;
    let (_, v0) = closed_eigenpair(0, 0, &one, &table);
    let overlap: f64 = grid.iter().enumerate().map(|(i, &y)| vecs[(i, 0)] * v0.eval(y) * dy.sqrt()).sum::<f64>().abs();

    let sep = 3.5 * big_h;
    let two = GaussKernelParams::new(
        big_h,
        h,
        vec![Reflector { z: -sep / 2.0, rho: 1.0 }, Reflector { z: sep / 2.0, rho: 1.0 }],
    )?;
    let grid2 = uniform_grid((-sep / 2.0 - 8.0 * big_h, sep / 2.0 + 8.0 * big_h), h / 4.0);
    let (vals2, _) = dense_spectrum(&two, &grid2);
    let comp = composite_spectrum(&two, &hermite_table(2, &two)?, 1);
    let composite = (comp.values[0] / vals2[0] - 1.0).abs();

    let mut odd = two.clone();
    odd.reflectors[1].rho = -1.0;
    let (_, vecs3) = dense_spectrum(&odd, &grid2);
    let at = |z: f64| vecs3[(crate::metrics::nearest(&grid2, z), 0)];
    let flips = at(-sep / 2.0) * at(sep / 2.0) < 0.0;

    Ok(vec![
        Check::at_most("eigenvalue ratio law, n=0..4", worst, 1e-3),
        Check::at_most("top-5 eigenvalues vs closed form", top5, 1e-3),
        Check::at_least("leading eigenvector overlap", overlap, 0.999),
        Check::at_most("two-reflector composite leading eigenvalue", composite, 1e-3),
        Check::at_least("opposite reflectors change sign", f64::from(u8::from(flips)), 1.0),
    ])
}

/// Analytic three-reflector model used by the Fourier suite.
pub fn fourier_model() -> Result<(TwoPointMatrix, GaussKernelParams)> {
    let p = GaussKernelParams::new(
        11.36,
        1.0,
        vec![Reflector { z: 123.0, rho: 1.3 }, Reflector { z: 133.0, rho: 2.2 }, Reflector { z: 143.0, rho: 0.8 }],
    )?;
    let grid = uniform_grid((0.0, 245.0), 1.0 / 3.0);
    Ok((analytic_two_point(&p, &grid), p))
}

/// `ρ̂(κ) = Σ ρ_j exp(−iκ(z_j − origin))`.
pub fn rho_hat(refl: &[Reflector], kappa: f64, origin: f64) -> Complex64 {
    refl.iter().map(|r| Complex64::from_polar(r.rho, -kappa * (r.z - origin))).sum()
}

fn fourier_suite() -> Result<Vec<Check>> {
    let (m, p) = fourier_model()?;
    let fp = fourier_products(&m, p.H, p.h, 2.0)?;
    let kap = fp.kappa_grid();
    let truth: Vec<Complex64> = kap.iter().map(|&k| rho_hat(&p.reflectors, k, fp.origin)).collect();
    let top = truth.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let k = fp.half_len as i32;
    let modulus_err = (-k..=k)
        .map(|i| (fp.get(i, i).unwrap().re - truth[(i + k) as usize].norm_sqr()).abs() / top)
        .fold(0.0, f64::max);
    let est = crate::fourier::recursive_estimate(&fp, 1e-6)?;
    let phase_err = est
        .iter()
        .zip(&truth)
        .filter(|(_, t)| t.norm_sqr() > 1e-4 * top)
        .map(|(e, t)| (e / t).arg().abs())
        .fold(0.0, f64::max);
    let th = optimize_phase(&fp, None, OptSettings::default());
    Ok(vec![
        Check::at_most("P(kappa,0) vs |rho_hat|^2", modulus_err, 1e-6),
        Check::at_most("recursive phase error [rad]", phase_err, 1e-3),
        Check::at_most("optimized objective / sum|P|^2", th.objective(), 1e-10),
    ])
}

fn stability_suite() -> Result<Vec<Check>> {
    let scene = Scene::named("fig2")?;
    let s = derive_scales(&scene)?;
    let xs = [scene.a, s.Xd, s.Xd / 3.0, s.Xd / 10.0];
    let rows = stability_sweep(&scene, 50, &xs, 11)?;
    let mut checks = Vec::new();
    for w in rows.windows(2) {
        let excess = w[1].cov - w[0].cov;
        let allowed = 2.0 * (w[0].cov_se.powi(2) + w[1].cov_se.powi(2)).sqrt();
        checks.push(Check::at_most(&format!("CoV(X={:.1}) - CoV(X={:.1})", w[1].x, w[0].x), excess, allowed));
    }
    Ok(checks)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub x: f64,
    pub peak_y: f64,
    pub mean: f64,
    pub std: f64,
    pub cov: f64,
    pub cov_se: f64,
    pub sar_location_error: f64,
    pub ci_location_error: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("axis,value,X,peak_y,mean,std,cov,cov_se,sar_location_error,ci_location_error\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.10e},{:.10e},{:.10e},{:.10e},{:.6},{:.6}\n",
            r.axis, r.value, r.x, r.peak_y, r.mean, r.std, r.cov, r.cov_se, r.sar_location_error, r.ci_location_error
        ));
    }
    out
}

/// Mean over true reflectors of the distance to the nearest reported peak.
fn location_error(img: &ImageProfile, refl: &[Reflector]) -> f64 {
    let rep = find_peaks(img, PEAK_THRESHOLD);
    let locs: Vec<f64> = rep.peaks.iter().take(refl.len()).map(|p| p.location).collect();
    if locs.is_empty() {
        return f64::INFINITY;
    }
    refl.iter()
        .map(|r| locs.iter().map(|l| (l - r.z).abs()).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / refl.len() as f64
}

fn location_errors(scene: &Scene, x: f64, n: usize, seed: u64) -> Result<(f64, f64)> {
    let sampler = ScreenSampler::new(scene)?;
    let refl = scene.reflectors();
    let zmin = refl.iter().map(|r| r.z).fold(f64::INFINITY, f64::min);
    let zmax = refl.iter().map(|r| r.z).fold(f64::NEG_INFINITY, f64::max);
    let h = scene.L / (scene.k0() * scene.a);
    let mut local = scene.clone();
    local.domain = ((zmin - 40.0).max(scene.domain.0), (zmax + 40.0).min(scene.domain.1));
    local.grid_dy = h / 3.0;
    let grid = local.display_grid();
    let errs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let s = sampler.sample(derive_seed(seed, 2 * i as u64));
            let rec = synthesize_record(&local, &s, derive_seed(seed, 2 * i as u64 + 1));
            let sar = sar_image(&rec, &local);
            let m = two_point_cint(&rec, &local, x, &grid)?;
            Ok((location_error(&sar, &refl), location_error(&cint_image(&m, &local), &refl)))
        })
        .collect::<Result<_>>()?;
    let k = errs.len() as f64;
    Ok((errs.iter().map(|e| e.0).sum::<f64>() / k, errs.iter().map(|e| e.1).sum::<f64>() / k))
}

/// Ensemble statistics over `values` of one axis (`X`, `sigma_tau` or `sigma_W`).
pub fn sweep(scene: &Scene, axis: &str, values: &[f64], n: usize, seed: u64) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidScene("sweep needs at least one value".into()));
    }
    if n < 2 {
        return Err(Error::InvalidScene("sweep needs at least two realizations".into()));
    }
    let mut rows = Vec::new();
    for &v in values {
        let mut s = scene.clone();
        let x = match axis {
            "X" => v,
            "sigma_tau" => {
                s.sigma_tau = v;
                derive_scales(&s)?.X
            }
            "sigma_W" => {
                s.sigma_W = v;
                derive_scales(&s)?.X
            }
            other => return Err(Error::Unknown { field: "axis", value: other.to_string() }),
        };
        s.validate()?;
        let st = stability_sweep(&s, n, &[x], seed)?.remove(0);
        let (sar_e, ci_e) = location_errors(&s, x, n, seed)?;
        rows.push(SweepRow {
            axis: axis.to_string(),
            value: v,
            x,
            peak_y: st.peak_y,
            mean: st.mean,
            std: st.std,
            cov: st.cov,
            cov_se: st.cov_se,
            sar_location_error: sar_e,
            ci_location_error: ci_e,
        });
    }
    Ok(rows)
}
