//! Binary reflection-ray visibility by marching the Gaussian opacity
//! field.
//!
//! Stands in for mesh ray tracing: the reflected ray accumulates the
//! opacity-weighted Gaussian falloff of every disk it crosses within the
//! march range (64 steps of scene_radius / 32, i.e. two scene radii,
//! starting half a step out to skip the emitting surface). The point is
//! visible to the environment when the remaining transmittance stays
//! above one half.

use crate::scene::{SceneGaussians, SUPPORT_CUTOFF_SQ};
use crate::Vec3;

pub const VISIBILITY_STEPS: usize = 64;
pub const VISIBILITY_THRESHOLD: f64 = 0.5;

/// Precomputed march range for a scene.
#[derive(Debug, Clone, Copy)]
pub struct VisibilityRange {
    pub t_min: f64,
    pub t_max: f64,
}

impl VisibilityRange {
    pub fn for_scene(scene: &SceneGaussians) -> Self {
        let step = scene.bounding_radius() / 32.0;
        Self {
            t_min: 0.5 * step,
            t_max: VISIBILITY_STEPS as f64 * step,
        }
    }
}

/// 1 when the reflected ray escapes the scene, 0 when it is blocked.
pub fn visibility(scene: &SceneGaussians, range: VisibilityRange, point: Vec3, dir: Vec3) -> u8 {
    let normals: Vec<Vec3> = scene
        .gaussians
        .iter()
        .map(|g| {
            let c = g.tangent_u.cross(&g.tangent_v);
            let n = c.norm();
            if n > 1e-12 {
                c / n
            } else {
                Vec3::zeros()
            }
        })
        .collect();
    visibility_cached(scene, &normals, range, point, dir)
}

/// Visibility with plane normals hoisted out (one traversal of the scene
/// per query point).
pub fn visibility_cached(
    scene: &SceneGaussians,
    normals: &[Vec3],
    range: VisibilityRange,
    point: Vec3,
    dir: Vec3,
) -> u8 {
    let mut transmittance = 1.0;
    for (gi, g) in scene.gaussians.iter().enumerate() {
        let n = normals[gi];
        if n == Vec3::zeros() || g.opacity == 0.0 {
            continue;
        }
        let denom = dir.dot(&n);
        if denom.abs() < 1e-9 {
            continue;
        }
        let t = (g.position - point).dot(&n) / denom;
        if t <= range.t_min || t > range.t_max {
            continue;
        }
        let delta = point + dir * t - g.position;
        let u = delta.dot(&g.tangent_u) / g.scale_u;
        let v = delta.dot(&g.tangent_v) / g.scale_v;
        let r2 = u * u + v * v;
        if r2 > SUPPORT_CUTOFF_SQ {
            continue;
        }
        transmittance *= 1.0 - g.opacity * (-r2 / 2.0).exp();
        if transmittance <= VISIBILITY_THRESHOLD {
            return 0;
        }
    }
    1
}
