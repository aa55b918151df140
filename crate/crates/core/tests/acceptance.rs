//! Acceptance report: one PASS/FAIL line per criterion, with the measured
//! values and the wall time. Runs as a plain binary (`harness = false`).
//!
//! Criteria that are not met print FAIL and are listed at the end. The
//! process exits nonzero on a failure only when `ACCEPTANCE_STRICT=1`, so
//! that the rest of the test suite keeps running in CI.

use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cintlab::cint::{matrix_grid, two_point_cint, stability_sweep};
use cintlab::experiment::{compute_images, fourier_model, matrix_spacing, run_scenario, ScenarioSpec, Seeds};
use cintlab::fourier::{fourier_products, optimize_phase, recursive_estimate, OptSettings};
use cintlab::kernel::{
    composite_spectrum, discretized_kernel, hermite_table, identity_b6_check, lemma_b10_check, GaussKernelParams,
};
use cintlab::medium::{coherence_check, ScreenSampler};
use cintlab::metrics::{find_peaks, nearest, sign_at};
use cintlab::pr::align_for_scoring;
use cintlab::scene::uniform_grid;
use cintlab::synth::{matched_products, synthesize_record};
use cintlab::{derive_scales, ImageProfile, Method, Reflector, Scene};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Eigenpairs of a real symmetric matrix, descending.
fn eig_desc(k: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = k.nrows();
    let e = SymmetricEigen::new(k);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

fn truth(scene: &Scene) -> Vec<f64> {
    scene.reflectors().iter().map(|r| r.z).collect()
}

/// Every true location has one of the `k` strongest peaks within `tol`.
fn all_found(img: &ImageProfile, locs: &[f64], k: usize, tol: f64) -> (bool, Vec<f64>) {
    let rep = find_peaks(img, 0.1);
    let top: Vec<f64> = rep.peaks.iter().take(k).map(|p| p.location).collect();
    let ok = locs.iter().all(|z| top.iter().any(|l| (l - z).abs() <= tol));
    (ok, top)
}

fn scales_criterion() -> Outcome {
    let h2 = derive_scales(&Scene::named("fig2").unwrap()).unwrap();
    let h4 = derive_scales(&Scene::named("fig4").unwrap()).unwrap();
    let e2 = (h2.H / 11.36 - 1.0).abs();
    let e4 = (h4.H / 14.615 - 1.0).abs();
    let eh = (h2.h - 1.0).abs();
    outcome(
        e2 <= 0.01 && e4 <= 0.01 && eh <= 1e-9,
        format!("H(3.1)={:.4} rel {e2:.2e}; H(4)={:.4} rel {e4:.2e}; |h-1|={eh:.1e}", h2.H, h4.H),
    )
}

fn single_reflector_criterion() -> Outcome {
    let (big_h, h) = (11.36, 1.0);
    let p = GaussKernelParams::new(big_h, h, vec![Reflector { z: 0.0, rho: 1.0 }]).unwrap();
    let dy = h / 4.0;
    let grid = uniform_grid((-8.0 * big_h, 8.0 * big_h), dy);
    let (vals, vecs) = eig_desc(discretized_kernel(&p, &grid));
    let ratio = (big_h - h / 2.0) / (big_h + h / 2.0);
    let worst = (0..5).map(|n| (vals[n + 1] / vals[n] / ratio - 1.0).abs()).fold(0.0, f64::max);
    let quoted = (ratio / 0.91568 - 1.0).abs();
    let s2 = big_h * h;
    let g: Vec<f64> = grid.iter().map(|y| (-y * y / (2.0 * s2)).exp()).collect();
    let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let overlap = (0..grid.len()).map(|i| vecs[(i, 0)] * g[i]).sum::<f64>().abs() / gn;
    outcome(
        worst <= 1e-3 && quoted <= 1e-5 && overlap >= 0.999,
        format!("ratio {ratio:.6}; worst law error {worst:.2e}; Gaussian std {:.4} overlap {overlap:.9}", s2.sqrt()),
    )
}

fn hermite_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst6 = 0.0f64;
    let mut worst10 = 0.0f64;
    for _ in 0..20 {
        let h = rng.random_range(0.5..2.0);
        let big_h = rng.random_range(h..15.0);
        let zj = rng.random_range(-10.0..10.0);
        let zjp = rng.random_range(-10.0..10.0);
        let eta = zjp + rng.random_range(-3.0..3.0);
        let y = zj + rng.random_range(-6.0..6.0);
        let n = rng.random_range(1..=6usize);
        worst6 = worst6.max(identity_b6_check(big_h, h, zj, zjp, eta, y));
        worst10 = worst10.max(lemma_b10_check(n, big_h, h, zj, zjp, eta, y));
    }
    outcome(worst6 < 1e-7 && worst10 < 1e-7, format!("max residual: degree 0 {worst6:.2e}, Hermite {worst10:.2e}"))
}

fn two_reflector_criterion() -> Outcome {
    let (big_h, h) = (11.36, 1.0);
    let sep = 3.5 * big_h;
    let two = GaussKernelParams::new(
        big_h,
        h,
        vec![Reflector { z: -sep / 2.0, rho: 1.0 }, Reflector { z: sep / 2.0, rho: 1.0 }],
    )
    .unwrap();
    let grid = uniform_grid((-sep / 2.0 - 8.0 * big_h, sep / 2.0 + 8.0 * big_h), h / 4.0);
    let (vals, _) = eig_desc(discretized_kernel(&two, &grid));
    let comp = composite_spectrum(&two, &hermite_table(2, &two).unwrap(), 1);
    let rel = (comp.values[0] / vals[0] - 1.0).abs();
    let mut odd = two.clone();
    odd.reflectors[1].rho = -1.0;
    let (_, vecs) = eig_desc(discretized_kernel(&odd, &grid));
    let left = vecs[(nearest(&grid, -sep / 2.0), 0)];
    let right = vecs[(nearest(&grid, sep / 2.0), 0)];
    let flips = left * right < 0.0;
    let zeta = sep / (3.0 * big_h);
    outcome(
        rel <= 1e-3 && flips,
        format!(
            "zeta {zeta:.3}, exp(-9 zeta^2/2) = {:.2e}; composite {:.6e} dense {:.6e} rel {rel:.3e} (limit 1e-3); sign change {flips}",
            (-4.5 * zeta * zeta).exp(),
            comp.values[0],
            vals[0]
        ),
    )
}

fn moments_criterion() -> Outcome {
    let scene = Scene::named("fig2").unwrap();
    let xd = derive_scales(&scene).unwrap().Xd;
    let rep = coherence_check(&scene, 10_000, 7).unwrap();
    let s2 = scene.sigma_tau.powi(2);
    let var = (rep.variance - s2).abs() / s2;
    let row = rep.rows.iter().min_by(|a, b| (a.dx - xd).abs().total_cmp(&(b.dx - xd).abs())).unwrap();
    let coh = (row.empirical - (-0.5f64).exp()).abs();
    outcome(
        var <= 0.05 && rep.mean_phasor < 0.05 && coh <= 0.03,
        format!(
            "variance rel {var:.4}; |E phasor| {:.4}; coherence at dx={:.1} is {:.4} (|diff| {coh:.4})",
            rep.mean_phasor, row.dx, row.empirical
        ),
    )
}

fn cint_structure_criterion() -> Outcome {
    let scene = Scene::named("fig2").unwrap();
    let s = derive_scales(&scene).unwrap();
    let grid = uniform_grid((108.0, 158.0), 1.0 / 6.0);
    let sampler = ScreenSampler::new(&scene).unwrap();
    let worst: Vec<(f64, f64)> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let seeds = Seeds::from_master(100 + i);
            let rec = synthesize_record(&scene, &sampler.sample(seeds.screen), seeds.noise);
            let m = two_point_cint(&rec, &scene, s.X, &grid).unwrap().dense;
            let herm = (&m - m.adjoint()).norm() / m.norm();
            let ev = SymmetricEigen::new(m.clone()).eigenvalues;
            let top = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let bottom = ev.iter().copied().fold(f64::INFINITY, f64::min);
            (herm, bottom / top)
        })
        .collect();
    let herm = worst.iter().map(|w| w.0).fold(0.0, f64::max);
    let min_ritz = worst.iter().map(|w| w.1).fold(f64::INFINITY, f64::min);

    let quiet = Scene::named("fig1").unwrap();
    let flat = ScreenSampler::new(&quiet).unwrap().sample(0);
    let rec = synthesize_record(&quiet, &flat, 0);
    let x = 10.0 * quiet.a;
    let m = two_point_cint(&rec, &quiet, x, &grid).unwrap().dense;
    let q = matched_products(&rec, &quiet, &grid);
    let g = grid.len();
    let sar: Vec<Complex64> = (0..g).map(|p| (0..quiet.N).map(|n| q[n * g + p]).sum()).collect();
    let outer = DMatrix::from_fn(g, g, |p, r| sar[p] * sar[r].conj());
    let fact = (&m - &outer).norm() / outer.norm();
    outcome(
        herm <= 1e-12 && min_ritz >= -1e-10 && fact <= 1e-6,
        format!(
            "G={g}; max Hermitian defect {herm:.1e}; min eig/max eig {min_ritz:.2e}; X=10a vs SAR outer product rel Frobenius {fact:.3e} (limit 1e-6)"
        ),
    )
}

/// Gaussian bumps of width `h` at the true locations, weighted by `|rho|`.
fn truth_profile(scene: &Scene, h: f64) -> ImageProfile {
    let grid = scene.display_grid();
    let refl = scene.reflectors();
    let v: Vec<f64> = grid
        .iter()
        .map(|y| refl.iter().map(|r| r.rho.abs() * (-(y - r.z).powi(2) / (2.0 * h * h)).exp()).sum())
        .collect();
    ImageProfile::from_real(grid, &v, Method::Pr)
}

fn fig1_criterion() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let spec = ScenarioSpec::named("fig1", 1, dir.path()).unwrap();
    let out = run_scenario(&spec).unwrap();
    let locs = truth(&spec.scene);
    let mut ok = true;
    let mut parts = Vec::new();
    for img in &out.images {
        let img = if img.method == Method::Pr {
            align_for_scoring(img, &truth_profile(&spec.scene, out.manifest.scales.h)).0
        } else {
            img.clone()
        };
        let (found, top) = all_found(&img, &locs, 3, 0.5);
        ok &= found;
        let shown: Vec<String> = top.iter().map(|l| format!("{l:.2}")).collect();
        parts.push(format!("{} [{}]", img.method.as_str(), shown.join(" ")));
    }
    let surf = out.manifest.surface_peaks;
    outcome(ok && surf == 9, format!("{}; surface peaks {surf}", parts.join("; ")))
}

fn fig2_criterion() -> Outcome {
    let scene = Scene::named("fig2").unwrap();
    let s = derive_scales(&scene).unwrap();
    let locs = truth(&scene);
    let sampler = ScreenSampler::new(&scene).unwrap();
    let grid = matrix_grid(&scene, matrix_spacing(&s));
    let runs: Vec<(bool, bool, bool)> = (1..=20u64)
        .into_par_iter()
        .map(|master| {
            let seeds = Seeds::from_master(master);
            let rec = synthesize_record(&scene, &sampler.sample(seeds.screen), seeds.noise);
            let m = two_point_cint(&rec, &scene, s.X, &grid).unwrap();
            let methods = [Method::Sar, Method::Sp, Method::Op];
            let out = compute_images(&rec, &m, &scene, &s, 2.0, &methods, &seeds).unwrap();
            let sp_unresolved = find_peaks(&out.images[1], 0.5).peaks.len() < 3;
            let op_ok = all_found(&out.images[2], &locs, 3, 2.0).0;
            let sar_miss = !all_found(&out.images[0], &locs, 3, 3.0).0;
            (sp_unresolved, op_ok, sar_miss)
        })
        .collect();
    let n = runs.len() as f64;
    let sp = runs.iter().filter(|r| r.0).count() as f64 / n;
    let op = runs.iter().filter(|r| r.1).count() as f64 / n;
    let sar = runs.iter().filter(|r| r.2).count() as f64 / n;
    outcome(
        sp >= 0.8 && op >= 0.8 && sar >= 0.5,
        format!("SP unresolved {sp:.2} (>=0.8); OP within 2 {op:.2} (>=0.8); SAR miss >3 {sar:.2} (>=0.5)"),
    )
}

fn fig4_criterion() -> Outcome {
    let scene = Scene::named("fig4").unwrap();
    let s = derive_scales(&scene).unwrap();
    let locs = truth(&scene);
    let sampler = ScreenSampler::new(&scene).unwrap();
    let grid = matrix_grid(&scene, matrix_spacing(&s));
    let hits: Vec<bool> = (1..=20u64)
        .into_par_iter()
        .map(|master| {
            let seeds = Seeds::from_master(master);
            let rec = synthesize_record(&scene, &sampler.sample(seeds.screen), seeds.noise);
            let m = two_point_cint(&rec, &scene, s.X, &grid).unwrap();
            let out = compute_images(&rec, &m, &scene, &s, 2.0, &[Method::Sp], &seeds).unwrap();
            let img = &out.images[0];
            let signs = sign_at(img, &locs);
            let mag: Vec<f64> = locs.iter().map(|&z| img.values[nearest(&img.grid, z)].re.abs()).collect();
            signs == [1.0, -1.0, 1.0] && mag[0] > mag[2] && mag[2] > mag[1]
        })
        .collect();
    let frac = hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64;
    outcome(frac >= 0.8, format!("signs (+,-,+) and order 2>1.5>1 in {frac:.2} of 20 runs (>=0.8)"))
}

fn fourier_criterion() -> Outcome {
    let (m, p) = fourier_model().unwrap();
    let fp = fourier_products(&m, p.H, p.h, 2.0).unwrap();
    let rho_hat = |kappa: f64| -> Complex64 {
        p.reflectors.iter().map(|r| r.rho * Complex64::new(0.0, -kappa * (r.z - fp.origin)).exp()).sum()
    };
    let kap = fp.kappa_grid();
    let truth: Vec<Complex64> = kap.iter().map(|&k| rho_hat(k)).collect();
    let top = truth.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let k = fp.half_len as i32;
    let modulus = (-k..=k)
        .map(|i| (fp.get(i, i).unwrap().re - truth[(i + k) as usize].norm_sqr()).abs() / top)
        .fold(0.0, f64::max);
    let est = recursive_estimate(&fp, 1e-6).unwrap();
    let phase = est
        .iter()
        .zip(&truth)
        .filter(|(_, t)| t.norm_sqr() > 1e-4 * top)
        .map(|(e, t)| (e / t).arg().abs())
        .fold(0.0, f64::max);
    let obj = optimize_phase(&fp, None, OptSettings::default()).objective();
    outcome(
        modulus <= 1e-6 && phase <= 1e-3 && obj <= 1e-10,
        format!("{} products; modulus rel {modulus:.2e}; phase {phase:.2e} rad; objective {obj:.2e}", fp.len()),
    )
}

fn stability_criterion() -> Outcome {
    let scene = Scene::named("fig2").unwrap();
    let s = derive_scales(&scene).unwrap();
    let xs = [scene.a, s.Xd, s.Xd / 3.0, s.Xd / 10.0];
    let rows = stability_sweep(&scene, 50, &xs, 11).unwrap();
    let mut ok = true;
    for w in rows.windows(2) {
        let allowed = 2.0 * (w[0].cov_se.powi(2) + w[1].cov_se.powi(2)).sqrt();
        ok &= w[1].cov - w[0].cov <= allowed;
    }
    let shown: Vec<String> = rows.iter().map(|r| format!("X={:.1}: {:.4}±{:.4}", r.x, r.cov, r.cov_se)).collect();
    outcome(ok, format!("CoV {}", shown.join(", ")))
}

fn main() {
    let criteria: [(&str, f64, fn() -> Outcome); 11] = [
        ("scale reproduction", 1.0, scales_criterion),
        ("single-reflector spectrum", 60.0, single_reflector_criterion),
        ("Hermite convolution identities", 60.0, hermite_criterion),
        ("separated-reflector spectrum", 60.0, two_reflector_criterion),
        ("screen moments", 120.0, moments_criterion),
        ("two-point matrix structure", 120.0, cint_structure_criterion),
        ("fig1 homogeneous scene", 300.0, fig1_criterion),
        ("fig2 ensemble", 1800.0, fig2_criterion),
        ("fig4 sign recovery", 900.0, fig4_criterion),
        ("Fourier products", 300.0, fourier_criterion),
        ("stability sweep", 1800.0, stability_criterion),
    ];
    let mut failed = Vec::new();
    for (name, budget, run) in criteria {
        let t = Instant::now();
        let o = run();
        let secs = t.elapsed().as_secs_f64();
        let pass = o.passed && secs < budget;
        println!(
            "{} {name}: {} [{secs:.1}s, budget {budget:.0}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !pass {
            failed.push(name);
        }
    }
    println!("{} of 11 criteria passed", 11 - failed.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        if std::env::var("ACCEPTANCE_STRICT").as_deref() == Ok("1") {
            std::process::exit(1);
        }
    }
}
