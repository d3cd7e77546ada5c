//! Differentiable 2D Gaussian splatting for reflective surface reconstruction.
//!
//! The pipeline renders oriented Gaussian disks into per-pixel attribute
//! buffers, shades them with a split-sum physically-based model, and trains
//! scene parameters against photographs plus matte "clay" renderings of the
//! same geometry. Clay supervision carries the geometry while the reflective
//! branch carries appearance; gradient routing between the two branches is
//! configurable per training variant.
//!
//! Everything runs on the CPU in `f64`; backward passes are written by hand
//! and checked against finite differences.

pub mod clay;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod img;
pub mod optimize;
pub mod scene;
pub mod shading;
pub mod splat;

pub use error::{Error, Result};

/// 3-component column vector, world units unless stated otherwise.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3x3 matrix.
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Number of spherical-harmonic coefficients carried per color channel
/// (degree 2, i.e. bands l = 0..=2).
pub const SH_COEFFS: usize = 9;

/// Worker-thread cap read from `CLAYSPLAT_THREADS` (0 or unset = automatic).
pub fn configured_threads() -> usize {
    std::env::var("CLAYSPLAT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0)
}
