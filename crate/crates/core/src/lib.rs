//! Coherent interferometric SAR imaging through a random phase screen.
//!
//! Lengths are in units of the reference wavelength. The pipeline is
//! [`scene`] → [`medium`] → [`synth`] → [`cint`], followed by the imaging
//! methods in [`spectral`], [`fourier`] and [`pr`]; [`kernel`] holds the
//! analytic expectation model and its eigen-machinery.

pub mod cint;
pub mod error;
pub mod experiment;
pub mod fourier;
pub mod io;
pub mod kernel;
pub mod medium;
pub mod metrics;
pub mod pr;
pub mod quad;
pub mod scene;
pub mod signal;
pub mod spectral;
pub mod synth;

pub use cint::{ImageProfile, Method, TwoPointMatrix};
pub use error::{Error, Result};
pub use scene::{derive_scales, Reflector, Scales, Scene};
