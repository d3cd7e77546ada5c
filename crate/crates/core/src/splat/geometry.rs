//! Ray-disk intersection in the disk's local frame, forward and backward.
//!
//! The formulas treat the tangent vectors as free 3-vectors: `n =
//! normalize(t_u x t_v)`, `t = (p - o).n / (d.n)`, `u = (X - p).t_u / s_u`.
//! On orthonormal frames this is the exact inverse of the disk
//! parameterization; the backward pass differentiates exactly these
//! expressions.

use crate::scene::{GaussianPrimitive, SUPPORT_CUTOFF_SQ};
use crate::Vec3;

/// Rays closer than this to the camera are discarded (world units).
pub const NEAR_PLANE: f64 = 0.01;
/// A ray this close to parallel with the disk plane misses.
pub const RAY_PARALLEL_EPS: f64 = 1e-9;

/// One ray-disk hit with everything the compositor and backward need.
#[derive(Debug, Clone, Copy)]
pub struct DiskHit {
    /// Depth along the unit ray direction.
    pub t: f64,
    pub u: f64,
    pub v: f64,
    /// Gaussian weight exp(-(u^2+v^2)/2).
    pub g: f64,
    /// +1 or -1: multiplied into the normal so it faces the camera.
    pub flip: f64,
}

/// Intersect a camera ray with a disk plane. `apply_cutoff` disables the
/// 3-sigma support test for the frozen-trace replay used by gradient
/// checks.
#[inline]
pub fn intersect_disk(
    g: &GaussianPrimitive,
    origin: Vec3,
    dir: Vec3,
    apply_cutoff: bool,
) -> Option<DiskHit> {
    let cross = g.tangent_u.cross(&g.tangent_v);
    let cross_norm = cross.norm();
    if cross_norm < 1e-12 {
        return None;
    }
    let n = cross / cross_norm;
    let denom = dir.dot(&n);
    if denom.abs() < RAY_PARALLEL_EPS {
        return None;
    }
    let t = (g.position - origin).dot(&n) / denom;
    if t <= NEAR_PLANE {
        return None;
    }
    let delta = origin + dir * t - g.position;
    let u = delta.dot(&g.tangent_u) / g.scale_u;
    let v = delta.dot(&g.tangent_v) / g.scale_v;
    let r2 = u * u + v * v;
    if apply_cutoff && r2 > SUPPORT_CUTOFF_SQ {
        return None;
    }
    let flip = if n.dot(&dir) > 0.0 { -1.0 } else { 1.0 };
    Some(DiskHit {
        t,
        u,
        v,
        g: (-r2 / 2.0).exp(),
        flip,
    })
}

/// Gradients of one hit w.r.t. the owning Gaussian's geometric fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct HitGrads {
    pub position: Vec3,
    pub tangent_u: Vec3,
    pub tangent_v: Vec3,
    pub scale_u: f64,
    pub scale_v: f64,
}

/// Backward through [`intersect_disk`]. `d_u`, `d_v`, `d_t` are upstream
/// gradients on the local coordinates and ray depth; `d_n_eff` is the
/// upstream gradient on the camera-facing normal `flip * n` coming from the
/// composited normal channel.
pub fn intersect_disk_backward(
    g: &GaussianPrimitive,
    origin: Vec3,
    dir: Vec3,
    hit: &DiskHit,
    d_u: f64,
    d_v: f64,
    d_t: f64,
    d_n_eff: Vec3,
) -> HitGrads {
    let cross = g.tangent_u.cross(&g.tangent_v);
    let cross_norm = cross.norm();
    let n = cross / cross_norm;
    let denom = dir.dot(&n);
    let delta = origin + dir * hit.t - g.position;

    // u = delta . t_u / s_u, delta = o + t d - p
    let mut grads = HitGrads::default();
    let du_ddelta = g.tangent_u / g.scale_u;
    let dv_ddelta = g.tangent_v / g.scale_v;

    // total gradient on t: direct (depth channel) plus through delta
    let d_t_total = d_t + d_u * du_ddelta.dot(&dir) + d_v * dv_ddelta.dot(&dir);

    // t = (p - o) . n / denom
    grads.position += n * (d_t_total / denom);
    // delta's explicit -p term
    grads.position -= du_ddelta * d_u + dv_ddelta * d_v;

    // direct tangent dependence of u, v
    grads.tangent_u += delta * (d_u / g.scale_u);
    grads.tangent_v += delta * (d_v / g.scale_v);
    grads.scale_u = -d_u * hit.u / g.scale_u;
    grads.scale_v = -d_v * hit.v / g.scale_v;

    // gradient on n: normal channel (through flip) plus ray depth
    let mut d_n = d_n_eff * hit.flip;
    d_n += ((g.position - origin) - dir * hit.t) * (d_t_total / denom);

    // n = cross / |cross|
    let d_cross = (d_n - n * n.dot(&d_n)) / cross_norm;
    // cross = t_u x t_v
    grads.tangent_u += g.tangent_v.cross(&d_cross);
    grads.tangent_v += d_cross.cross(&g.tangent_u);

    grads
}
