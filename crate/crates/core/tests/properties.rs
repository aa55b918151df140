use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use statrs::function::erf::erf;
use std::f64::consts::PI;

use cintlab::cint::{two_point_cint, two_point_direct};
use cintlab::experiment::rho_hat;
use cintlab::fourier::{fourier_products, phase_objective, recursive_estimate};
use cintlab::io::{decode_twopoint, encode_twopoint};
use cintlab::kernel::{analytic_two_point, kernel_k, GaussKernelParams};
use cintlab::medium::{tau_covariance, ScreenSampler};
use cintlab::metrics::find_peaks;
use cintlab::pr::modulus_of_profile;
use cintlab::scene::{separation_zeta, uniform_grid};
use cintlab::signal::{rotate_to_real, tukey};
use cintlab::synth::{greens_ref, synthesize_record};
use cintlab::{derive_scales, ImageProfile, Method, Reflector, Scene};

fn two_reflector_products(z1: f64, z2: f64) -> cintlab::fourier::FourierProducts {
    let p = GaussKernelParams::new(
        11.36,
        1.0,
        vec![Reflector { z: z1, rho: 1.0 }, Reflector { z: z2, rho: 0.7 }],
    )
    .unwrap();
    let m = analytic_two_point(&p, &uniform_grid((0.0, 245.0), 1.0 / 3.0));
    fourier_products(&m, p.H, p.h, 2.0).unwrap()
}

fn true_phase(fp: &cintlab::fourier::FourierProducts, refl: &[Reflector]) -> Vec<f64> {
    fp.kappa_grid().iter().map(|&k| rho_hat(refl, k, fp.origin).arg()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariance_matches_erf_form(dx in 1.0f64..2.0e4, sigma in 0.1f64..5.0) {
        let mut s = Scene::named("fig2").unwrap();
        s.sigma_tau = sigma;
        let r = dx / s.ell;
        let oracle = sigma * sigma * (PI / 2.0).sqrt() * erf(r / 2f64.sqrt()) / r;
        let got = tau_covariance(dx, &s);
        prop_assert!((got / oracle - 1.0).abs() < 1e-8);
        prop_assert_eq!(got, tau_covariance(-dx, &s));
        prop_assert!(tau_covariance(1.1 * dx, &s) <= got);
    }

    #[test]
    fn greens_modulus_and_phase(r in 10.0f64..1.0e5) {
        let k = 2.0 * PI;
        let g = greens_ref((0.0, 0.0), (0.0, r), k).unwrap();
        let g2 = greens_ref((0.0, 0.0), (0.0, 2.0 * r), k).unwrap();
        prop_assert!((g.norm() / g2.norm() - 2f64.sqrt()).abs() < 1e-12);
        let want = Complex64::from_polar(1.0, k * r + PI / 4.0);
        prop_assert!((g / g.norm() - want).norm() < 1e-9);
    }

    #[test]
    fn scales_invariants(sigma in 0.0f64..8.0, ell_frac in 0.1f64..2.0) {
        let mut s = Scene::named("fig2").unwrap();
        s.sigma_tau = sigma;
        s.ell = ell_frac * s.a;
        let sc = derive_scales(&s).unwrap();
        prop_assert!(sc.H >= sc.h / 2.0);
        prop_assert!(sc.X <= s.a);
        let mut wide = sc.clone();
        wide.H *= 2.0;
        let z = separation_zeta(&s, &sc);
        prop_assert!((separation_zeta(&s, &wide) - z / 2.0).abs() <= 1e-12 * z);
    }

    #[test]
    fn tukey_bounded_and_even(t in -2.0f64..2.0, taper in 0.0f64..1.0) {
        let w = tukey(t, taper);
        prop_assert!((0.0..=1.0).contains(&w));
        prop_assert_eq!(w, tukey(-t, taper));
    }

    #[test]
    fn rotation_ignores_global_phase(phi in -PI..PI, seed in 0u64..1000) {
        let v: Vec<Complex64> = (0..40)
            .map(|i| Complex64::from_polar(1.0 + ((i as u64 * 7 + seed) % 11) as f64, 0.1 * i as f64))
            .collect();
        let rot: Vec<Complex64> = v.iter().map(|z| z * Complex64::from_polar(1.0, phi)).collect();
        let a = rotate_to_real(&v);
        let b = rotate_to_real(&rot);
        let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9);
    }

    #[test]
    fn kernel_symmetric(y in -50.0f64..50.0, yp in -50.0f64..50.0) {
        let p = GaussKernelParams::new(11.36, 1.0, vec![Reflector { z: 3.0, rho: 1.0 }, Reflector { z: -9.0, rho: -0.5 }]).unwrap();
        prop_assert!((kernel_k(y, yp, &p) - kernel_k(yp, y, &p)).abs() < 1e-15);
    }

    #[test]
    fn twopoint_bytes_roundtrip(g in 1usize..6, seed in any::<u64>(), x in -1e6f64..1e6) {
        let m = DMatrix::from_fn(g, g, |p, q| {
            let s = seed.wrapping_mul(31).wrapping_add((p * g + q) as u64) as f64;
            Complex64::new(s.sin() * 1e10, s.cos() * 1e-10)
        });
        let (back, xb) = decode_twopoint(&encode_twopoint(&m, x)).unwrap();
        prop_assert_eq!(back, m);
        prop_assert_eq!(xb, x);
    }

    #[test]
    fn modulus_shift_invariant(shift in 0usize..256) {
        let v: Vec<f64> = (0..256).map(|i| (-((i as f64 - 70.0) / 3.0).powi(2)).exp() + 0.4 * (-((i as f64 - 110.0) / 2.0).powi(2)).exp()).collect();
        let s: Vec<f64> = (0..256).map(|i| v[(i + shift) % 256]).collect();
        let a = modulus_of_profile(&v, 60, 1.0);
        let b = modulus_of_profile(&s, 60, 1.0);
        let err = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10);
    }

    #[test]
    fn peak_location_equivariant(c in 40.0f64..60.0, d in -5.0f64..5.0) {
        let grid: Vec<f64> = (0..4000).map(|i| i as f64 * 0.03).collect();
        let mk = |z: f64| {
            let v: Vec<f64> = grid.iter().map(|y| (-(y - z).powi(2) / 8.0).exp()).collect();
            ImageProfile::from_real(grid.clone(), &v, Method::Sp)
        };
        let a = find_peaks(&mk(c), 0.1).peaks[0].location;
        let b = find_peaks(&mk(c + d), 0.1).peaks[0].location;
        prop_assert!((b - a - d).abs() < 0.01);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn objective_gauge_invariant(c in -10.0f64..10.0) {
        let fp = two_reflector_products(120.0, 137.0);
        let th: Vec<f64> = (0..fp.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let shifted: Vec<f64> = th.iter().map(|t| t + c).collect();
        prop_assert!((phase_objective(&fp, &th) - phase_objective(&fp, &shifted)).abs() < 1e-12);
    }

    #[test]
    fn products_conjugate_symmetric(z1 in 100.0f64..130.0, gap in 8.0f64..40.0) {
        let fp = two_reflector_products(z1, z1 + gap);
        let scale = fp.entries.iter().map(|e| e.value.norm()).fold(0.0, f64::max);
        for e in &fp.entries {
            let mirror = fp.get(e.j, e.i).unwrap();
            prop_assert!((e.value - mirror.conj()).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn recursion_tracks_shift(d in -6.0f64..6.0) {
        let a = recursive_estimate(&two_reflector_products(120.0, 137.0), 1e-6).unwrap();
        let b = recursive_estimate(&two_reflector_products(120.0 + d, 137.0 + d), 1e-6).unwrap();
        let fp = two_reflector_products(120.0, 137.0);
        for ((k, x), y) in fp.kappa_grid().iter().zip(&a).zip(&b) {
            if x.norm() > 1e-3 {
                let want = Complex64::from_polar(1.0, -k * d);
                prop_assert!(((y / x) / (y / x).norm() - want).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn cint_hermitian_psd_and_factored(seed in 0u64..1000) {
        let mut s = Scene::named("fig2").unwrap();
        s.domain = (120.0, 146.0);
        let grid = uniform_grid(s.domain, 0.25);
        let rec = synthesize_record(&s, &ScreenSampler::new(&s).unwrap().sample(seed), seed + 1);
        let x = derive_scales(&s).unwrap().X;
        let m = two_point_cint(&rec, &s, x, &grid).unwrap();
        let direct = two_point_direct(&rec, &s, x, &grid);
        prop_assert!((&m.dense - &direct).norm() <= 1e-6 * direct.norm());
        prop_assert!((&m.dense - m.dense.adjoint()).norm() <= 1e-12 * m.dense.norm());
        let ev = nalgebra::SymmetricEigen::new(m.dense.clone()).eigenvalues;
        let top = ev.max();
        prop_assert!(ev.min() >= -1e-10 * top);
    }
}

#[test]
fn linear_phase_raises_objective() {
    let refl = [Reflector { z: 120.0, rho: 1.0 }, Reflector { z: 137.0, rho: 0.7 }];
    let fp = two_reflector_products(120.0, 137.0);
    let th = true_phase(&fp, &refl);
    let base = phase_objective(&fp, &th);
    assert!(base < 1e-12, "{base}");
    for alpha in [-1.0, -0.5, 0.5, 1.0] {
        let tilted: Vec<f64> = th.iter().zip(fp.kappa_grid()).map(|(t, k)| t + alpha * k).collect();
        assert!(phase_objective(&fp, &tilted) > base + 1e-6, "alpha {alpha}");
    }
}
