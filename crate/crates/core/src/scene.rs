//! Scene description and the derived resolution scales.
//!
//! All lengths are in units of the reference wavelength. The scene JSON uses
//! the field names below verbatim and rejects anything else.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};

/// Half-width of the sensor track in units of the aperture `a`.
///
/// The Gaussian apodization `exp(-x^2/a^2)` defines the effective aperture,
/// so the track is laid out wide enough that the weight at its ends is
/// below 2e-3.
pub const TRACK_HALF_WIDTH: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reflector {
    pub z: f64,
    pub rho: f64,
}

impl From<(f64, f64)> for Reflector {
    fn from((z, rho): (f64, f64)) -> Self {
        Reflector { z, rho }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct Scene {
    pub lambda0: f64,
    pub L: f64,
    pub a: f64,
    pub N: usize,
    pub ell: f64,
    pub sigma_tau: f64,
    pub sigma_W: f64,
    pub reflectors: Vec<(f64, f64)>,
    pub domain: (f64, f64),
    pub grid_dy: f64,
    pub seed: u64,
    /// Optional broadband parameters; only used for the range-direction scales.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub B: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub Omega: Option<f64>,
}

impl Scene {
    /// The common setup shared by the named scenarios.
    pub fn baseline() -> Scene {
        let l = 2.0e4;
        let a = l / (2.0 * PI);
        Scene {
            lambda0: 1.0,
            L: l,
            a,
            N: 400,
            ell: a / 2.0,
            sigma_tau: 0.0,
            sigma_W: 0.0,
            reflectors: vec![(133.0, 2.2), (123.0, 1.3), (143.0, 0.8)],
            domain: (0.0, 245.0),
            grid_dy: 0.03,
            seed: 0,
            B: None,
            c: None,
            Omega: None,
        }
    }

    /// Named scenarios: `fig1` .. `fig4`.
    pub fn named(name: &str) -> Result<Scene> {
        let mut s = Scene::baseline();
        match name {
            "fig1" => {}
            "fig2" => {
                s.sigma_tau = 3.1;
                s.sigma_W = 0.1;
            }
            "fig3" => {
                s.sigma_tau = 3.1;
                s.sigma_W = 0.1;
                s.reflectors = vec![
                    (93.7, 2.0),
                    (101.0, 2.0),
                    (130.0, 3.0),
                    (159.0, 1.5),
                    (196.0, 2.0),
                ];
            }
            "fig4" => {
                s.sigma_tau = 4.0;
                s.sigma_W = 0.1;
                s.reflectors = vec![(93.7, 2.0), (123.0, -1.0), (152.0, 1.5)];
            }
            other => {
                return Err(Error::Unknown {
                    field: "scenario",
                    value: other.to_string(),
                })
            }
        }
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Scene> {
        let s: Scene = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scene> {
        Scene::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn k0(&self) -> f64 {
        2.0 * PI / self.lambda0
    }

    pub fn reflectors(&self) -> Vec<Reflector> {
        self.reflectors.iter().map(|&r| r.into()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.lambda0,
            self.L,
            self.a,
            self.ell,
            self.sigma_tau,
            self.sigma_W,
            self.domain.0,
            self.domain.1,
            self.grid_dy,
        ];
        if finite.iter().any(|v| !v.is_finite())
            || self.reflectors.iter().any(|r| !r.0.is_finite() || !r.1.is_finite())
        {
            return Err(Error::NonFinite("scene"));
        }
        let bad = |m: &str| Err(Error::InvalidScene(m.to_string()));
        if self.lambda0 <= 0.0 {
            return bad("lambda0 must be positive");
        }
        if self.a <= 0.0 {
            return bad("a must be positive");
        }
        if self.L <= self.a {
            return bad("L must be much larger than a");
        }
        if self.N < 2 {
            return bad("N must be at least 2");
        }
        if self.ell <= 0.0 {
            return bad("ell must be positive");
        }
        if self.grid_dy <= 0.0 {
            return bad("grid_dy must be positive");
        }
        if self.domain.1 <= self.domain.0 {
            return bad("domain is empty");
        }
        if self.sigma_tau < 0.0 || self.sigma_W < 0.0 {
            return bad("sigma_tau and sigma_W must be nonnegative");
        }
        Ok(())
    }

    /// Sensor cross-range positions, uniform and centered on the origin.
    pub fn sensors(&self) -> Vec<f64> {
        let half = TRACK_HALF_WIDTH * self.a;
        let step = 2.0 * half / (self.N - 1) as f64;
        (0..self.N).map(|n| -half + n as f64 * step).collect()
    }

    /// Display grid over the domain with spacing `grid_dy`.
    pub fn display_grid(&self) -> Vec<f64> {
        uniform_grid(self.domain, self.grid_dy)
    }
}

/// Points `y0, y0 + dy, ...` strictly below `y1` (half-open domain).
pub fn uniform_grid(domain: (f64, f64), dy: f64) -> Vec<f64> {
    let n = ((domain.1 - domain.0) / dy - 1e-9).ceil().max(1.0) as usize;
    (0..n).map(|i| domain.0 + i as f64 * dy).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct Scales {
    pub k0: f64,
    pub Xd: f64,
    pub X: f64,
    pub H: f64,
    pub h: f64,
    pub Hpar: Option<f64>,
    pub hpar: Option<f64>,
    pub Omega_d: Option<f64>,
    pub Omega: Option<f64>,
    pub B: Option<f64>,
    pub c: Option<f64>,
    /// Minimum reflector gap over 3H.
    pub zeta: f64,
    /// Minimum reflector gap over H.
    pub gap_over_H: f64,
}

/// Center-point resolution for a given threshold and decoherence length.
#[allow(non_snake_case)]
pub fn center_resolution(scene: &Scene, x: f64, xd: f64) -> f64 {
    let inv = |v: f64| if v.is_infinite() { 0.0 } else { 1.0 / (v * v) };
    scene.L / (2.0 * scene.k0()) * (inv(x) + inv(xd) + inv(scene.a)).sqrt()
}

pub fn decoherence_length(scene: &Scene) -> f64 {
    if scene.sigma_tau > 0.0 {
        3f64.sqrt() * scene.ell / (2.0 * scene.sigma_tau)
    } else {
        f64::INFINITY
    }
}

pub fn derive_scales(scene: &Scene) -> Result<Scales> {
    scene.validate()?;
    let x = scene.a.min(decoherence_length(scene) / 3.0);
    derive_scales_with(scene, x)
}

/// Scales with an explicit sensor-offset threshold `x` (may be infinite).
#[allow(non_snake_case)]
pub fn derive_scales_with(scene: &Scene, x: f64) -> Result<Scales> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::NonFinite("threshold X"));
    }
    let k0 = scene.k0();
    let xd = decoherence_length(scene);
    let H = center_resolution(scene, x, xd);
    let h = scene.L / (k0 * scene.a);
    let (Hpar, hpar, Omega_d) = match (scene.B, scene.c, scene.Omega) {
        (Some(b), Some(c), Some(om)) => {
            let om_d = if scene.sigma_tau > 0.0 {
                c * k0 / (2.0 * scene.sigma_tau)
            } else {
                f64::INFINITY
            };
            let inv = |v: f64| if v.is_infinite() { 0.0 } else { 1.0 / (v * v) };
            let hp = c / 2.0 * (inv(om) + inv(om_d) + inv(b)).sqrt();
            (Some(hp), Some(c / b), Some(om_d))
        }
        _ => (None, None, None),
    };
    let gap = min_gap(&scene.reflectors());
    Ok(Scales {
        k0,
        Xd: xd,
        X: x,
        H,
        h,
        Hpar,
        hpar,
        Omega_d,
        Omega: scene.Omega,
        B: scene.B,
        c: scene.c,
        zeta: gap / (3.0 * H),
        gap_over_H: gap / H,
    })
}

fn min_gap(refl: &[Reflector]) -> f64 {
    let mut gap = f64::INFINITY;
    for (i, r) in refl.iter().enumerate() {
        for s in &refl[i + 1..] {
            let d = (r.z - s.z).abs();
            if d > 0.0 {
                gap = gap.min(d);
            }
        }
    }
    gap
}

pub fn separation_zeta(scene: &Scene, scales: &Scales) -> f64 {
    min_gap(&scene.reflectors()) / (3.0 * scales.H)
}
