//! Frozen-trace forward pass for finite-difference oracles.
//!
//! The rasterizer has discrete decisions (support cutoff, near-plane
//! misses, depth sort order) that carry no gradient by definition. To
//! compare the analytic backward against finite differences, the forward
//! must be differentiated with those decisions held fixed: this replay
//! re-evaluates every traced (pixel, gaussian) pair on a perturbed scene
//! in the traced order, skipping the cutoff and miss tests.

use crate::scene::{Camera, SceneGaussians};
use crate::Vec3;

use super::geometry::DiskHit;
use super::{composite_hits, GBuffer, PlaneCache};

/// Replay the contributor lists of `trace` against a (possibly perturbed)
/// scene. Panics if the trace does not use the camera's image size.
pub fn render_gbuffer_frozen(
    scene: &SceneGaussians,
    camera: &Camera,
    trace: &GBuffer,
) -> GBuffer {
    assert_eq!((trace.width, trace.height), (camera.width, camera.height));
    let cache = PlaneCache::build(scene);
    let origin = camera.center();
    let mut pixels = Vec::with_capacity(trace.pixels.len());
    for (p, traced) in trace.pixels.iter().enumerate() {
        let y = p / trace.width;
        let x = p % trace.width;
        let dir = camera.ray_dir(x as f64 + 0.5, y as f64 + 0.5);
        let hits: Vec<(u32, DiskHit)> = traced
            .contribs
            .iter()
            .map(|c| {
                let g = &scene.gaussians[c.gaussian as usize];
                let hit = frozen_hit(g, origin, dir, c.flip);
                (c.gaussian, hit)
            })
            .collect();
        pixels.push(composite_hits(scene, &cache, &hits));
    }
    GBuffer {
        width: trace.width,
        height: trace.height,
        pixels,
    }
}

/// Ray-plane evaluation with every discrete test removed; `flip` is pinned
/// from the base trace.
fn frozen_hit(
    g: &crate::scene::GaussianPrimitive,
    origin: Vec3,
    dir: Vec3,
    flip: f64,
) -> DiskHit {
    let n = g.tangent_u.cross(&g.tangent_v).normalize();
    let denom = dir.dot(&n);
    let t = (g.position - origin).dot(&n) / denom;
    let delta = origin + dir * t - g.position;
    let u = delta.dot(&g.tangent_u) / g.scale_u;
    let v = delta.dot(&g.tangent_v) / g.scale_v;
    DiskHit {
        t,
        u,
        v,
        g: (-(u * u + v * v) / 2.0).exp(),
        flip,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splat::render_gbuffer;

    #[test]
    fn frozen_replay_reproduces_base_forward() {
        let (scene, cam) = crate::splat::tests::opaque_disk_scene();
        let base = render_gbuffer(&scene, &cam);
        let replay = render_gbuffer_frozen(&scene, &cam, &base);
        for (a, b) in base.pixels.iter().zip(&replay.pixels) {
            assert_eq!(a.albedo, b.albedo);
            assert_eq!(a.accum_alpha, b.accum_alpha);
            assert_eq!(a.normal, b.normal);
            assert_eq!(a.depth, b.depth);
            assert_eq!(a.indirect, b.indirect);
        }
    }
}
