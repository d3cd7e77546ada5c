//! Forward rasterization of oriented Gaussian disks into per-pixel
//! attribute buffers, and the analytic backward pass.
//!
//! Per pixel the rasterizer intersects the ray with every candidate disk,
//! sorts hits front to back, and alpha-composites the attribute vector
//! [albedo, metallic, roughness, camera-facing normal, clay color, depth]
//! with weights alpha_i * G_i. Indirect-light SH coefficients are
//! composited in the same depth order but with opacity-only weights
//! (no Gaussian falloff), matching the indirect-light blending rule.

pub mod backward;
pub mod composite;
mod frozen;
pub mod geometry;
mod reference;

pub use backward::{backward_gbuffer, GBufferUpstream, SplatGradients};
pub use composite::{backward_alpha_scan, composite_pixel};
pub use frozen::render_gbuffer_frozen;
pub use geometry::{intersect_disk, intersect_disk_backward, DiskHit, NEAR_PLANE};
pub use reference::render_gbuffer_reference;

use rayon::prelude::*;

use crate::scene::{Camera, GaussianPrimitive, SceneGaussians};
use crate::{Vec3, SH_COEFFS};

/// Foreground threshold on accumulated alpha.
pub const ACCUM_EPS: f64 = 1e-4;
/// Pixels per culling tile edge.
const TILE: usize = 16;
/// Rows per parallel work chunk; fixed so reductions are order-stable.
pub(crate) const ROWS_PER_CHUNK: usize = 8;

/// One retained contribution, enough to replay the blend in the backward
/// pass without re-intersecting.
#[derive(Debug, Clone, Copy)]
pub struct Contribution {
    pub gaussian: u32,
    pub t: f64,
    pub u: f64,
    pub v: f64,
    /// Gaussian weight G at (u, v).
    pub g: f64,
    /// Normal orientation sign for this ray.
    pub flip: f64,
    /// Blend weight alpha * G * transmittance.
    pub w: f64,
}

/// Composited attributes of one pixel.
#[derive(Debug, Clone)]
pub struct GPixel {
    pub albedo: Vec3,
    pub metallic: f64,
    pub roughness: f64,
    /// Unit normal where the pixel is foreground, zero otherwise.
    pub normal: Vec3,
    /// Composited normal before re-normalization.
    pub normal_raw: Vec3,
    pub clay: Vec3,
    /// Indirect-light SH coefficients composited with opacity-only weights.
    pub indirect: [Vec3; SH_COEFFS],
    pub accum_alpha: f64,
    /// Alpha-weighted mean ray depth (0 where background).
    pub depth: f64,
    /// Sum of w_i * t_i before normalization.
    pub depth_raw: f64,
    pub contribs: Vec<Contribution>,
}

impl Default for GPixel {
    fn default() -> Self {
        GPixel {
            albedo: Vec3::zeros(),
            metallic: 0.0,
            roughness: 0.0,
            normal: Vec3::zeros(),
            normal_raw: Vec3::zeros(),
            clay: Vec3::zeros(),
            indirect: [Vec3::zeros(); SH_COEFFS],
            accum_alpha: 0.0,
            depth: 0.0,
            depth_raw: 0.0,
            contribs: Vec::new(),
        }
    }
}

impl GPixel {
    #[inline]
    pub fn is_foreground(&self) -> bool {
        self.accum_alpha > ACCUM_EPS
    }
}

/// Per-pixel composited attribute buffers for one camera.
#[derive(Debug, Clone)]
pub struct GBuffer {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<GPixel>,
}

impl GBuffer {
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &GPixel {
        &self.pixels[y * self.width + x]
    }
}

/// Project a pixel onto a disk's local plane: returns (u, v, ray depth) or
/// `None` when the ray is parallel to the plane or the hit is in front of
/// the near plane. `pixel` is in continuous image coordinates.
pub fn pixel_to_local(
    camera: &Camera,
    gaussian: &GaussianPrimitive,
    pixel: (f64, f64),
) -> Option<(f64, f64, f64)> {
    let dir = camera.ray_dir(pixel.0, pixel.1);
    intersect_disk(gaussian, camera.center(), dir, false).map(|h| (h.u, h.v, h.t))
}

/// Conservative per-tile candidate lists from projected disk extents.
fn tile_candidates(scene: &SceneGaussians, camera: &Camera) -> (usize, usize, Vec<Vec<u32>>) {
    let tiles_x = camera.width.div_ceil(TILE);
    let tiles_y = camera.height.div_ceil(TILE);
    let mut tiles = vec![Vec::new(); tiles_x * tiles_y];
    // below this camera-space depth the projected AABB is unreliable;
    // fall back to every tile
    const SAFE_Z: f64 = 0.1;
    for (idx, g) in scene.gaussians.iter().enumerate() {
        let eu = g.tangent_u * (3.0 * g.scale_u);
        let ev = g.tangent_v * (3.0 * g.scale_v);
        let corners = [
            g.position + eu + ev,
            g.position + eu - ev,
            g.position - eu + ev,
            g.position - eu - ev,
        ];
        let mut min_x = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        let mut safe = true;
        for c in corners {
            let pc = camera.rotation * c + camera.translation;
            if pc.z <= SAFE_Z {
                safe = false;
                break;
            }
            let px = camera.fx * pc.x / pc.z + camera.cx;
            let py = camera.fy * pc.y / pc.z + camera.cy;
            min_x = min_x.min(px);
            max_x = max_x.max(px);
            min_y = min_y.min(py);
            max_y = max_y.max(py);
        }
        let (tx0, tx1, ty0, ty1) = if safe {
            // pad half a pixel: hits land exactly on pixel centers, the
            // corner AABB bounds those centers already
            let x0 = ((min_x - 0.5).floor().max(0.0)) as usize / TILE;
            let y0 = ((min_y - 0.5).floor().max(0.0)) as usize / TILE;
            let x1 = (max_x + 0.5).ceil().max(0.0) as usize;
            let y1 = (max_y + 0.5).ceil().max(0.0) as usize;
            if min_x - 0.5 > camera.width as f64 || min_y - 0.5 > camera.height as f64 {
                continue;
            }
            (
                x0.min(tiles_x - 1),
                (x1 / TILE).min(tiles_x - 1),
                y0.min(tiles_y - 1),
                (y1 / TILE).min(tiles_y - 1),
            )
        } else {
            (0, tiles_x - 1, 0, tiles_y - 1)
        };
        for ty in ty0..=ty1 {
            for tx in tx0..=tx1 {
                tiles[ty * tiles_x + tx].push(idx as u32);
            }
        }
    }
    (tiles_x, tiles_y, tiles)
}

/// Per-scene constants hoisted out of the pixel loops.
pub(crate) struct PlaneCache {
    /// Unit plane normal per Gaussian, normalize(t_u x t_v).
    pub normals: Vec<Vec3>,
    /// Whether any indirect SH coefficient is nonzero.
    pub has_sh: Vec<bool>,
}

impl PlaneCache {
    pub fn build(scene: &SceneGaussians) -> Self {
        let normals = scene
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
        let has_sh = scene
            .gaussians
            .iter()
            .map(|g| g.indirect_sh.iter().any(|v| *v != Vec3::zeros()))
            .collect();
        Self { normals, has_sh }
    }
}

/// Ray-disk hit with the plane normal precomputed; same arithmetic as
/// [`intersect_disk`].
#[inline]
fn hit_cached(
    g: &GaussianPrimitive,
    n: Vec3,
    origin: Vec3,
    dir: Vec3,
) -> Option<DiskHit> {
    if n == Vec3::zeros() {
        return None;
    }
    let denom = dir.dot(&n);
    if denom.abs() < geometry::RAY_PARALLEL_EPS {
        return None;
    }
    let t = (g.position - origin).dot(&n) / denom;
    if t <= geometry::NEAR_PLANE {
        return None;
    }
    let delta = origin + dir * t - g.position;
    let u = delta.dot(&g.tangent_u) / g.scale_u;
    let v = delta.dot(&g.tangent_v) / g.scale_v;
    let r2 = u * u + v * v;
    if r2 > crate::scene::SUPPORT_CUTOFF_SQ {
        return None;
    }
    let flip = if denom > 0.0 { -1.0 } else { 1.0 };
    Some(DiskHit {
        t,
        u,
        v,
        g: (-r2 / 2.0).exp(),
        flip,
    })
}

/// Rasterize one pixel over the given candidate set (indices in ascending
/// order). Shared by the tiled renderer and the cull-free reference.
pub(crate) fn rasterize_pixel(
    scene: &SceneGaussians,
    cache: &PlaneCache,
    candidates: &[u32],
    origin: Vec3,
    dir: Vec3,
    hits: &mut Vec<(u32, DiskHit)>,
) -> GPixel {
    hits.clear();
    for &gi in candidates {
        let g = &scene.gaussians[gi as usize];
        if let Some(hit) = hit_cached(g, cache.normals[gi as usize], origin, dir) {
            hits.push((gi, hit));
        }
    }
    hits.sort_unstable_by(|a, b| {
        a.1.t
            .partial_cmp(&b.1.t)
            .unwrap()
            .then_with(|| a.0.cmp(&b.0))
    });
    composite_hits(scene, cache, hits)
}

/// Blend sorted hits into a pixel. Also the replay entry point for the
/// frozen-trace forward used by gradient checks.
pub(crate) fn composite_hits(
    scene: &SceneGaussians,
    cache: &PlaneCache,
    hits: &[(u32, DiskHit)],
) -> GPixel {
    let mut px = GPixel::default();
    let mut transmittance = 1.0;
    px.contribs.reserve_exact(hits.len());
    for &(gi, hit) in hits {
        let g = &scene.gaussians[gi as usize];
        let a = g.opacity * hit.g;
        let w = a * transmittance;
        let n_eff = cache.normals[gi as usize] * hit.flip;
        px.albedo += g.albedo * w;
        px.metallic += g.metallic * w;
        px.roughness += g.roughness * w;
        px.normal_raw += n_eff * w;
        px.clay += g.clay_color * w;
        px.depth_raw += hit.t * w;
        px.accum_alpha += w;
        transmittance *= 1.0 - a;
        px.contribs.push(Contribution {
            gaussian: gi,
            t: hit.t,
            u: hit.u,
            v: hit.v,
            g: hit.g,
            flip: hit.flip,
            w,
        });
    }

    // indirect light: same depth order, opacity-only weights; skipping
    // all-zero coefficient blocks only removes exact no-op adds
    let mut t_ind = 1.0;
    for &(gi, _) in hits {
        let g = &scene.gaussians[gi as usize];
        if cache.has_sh[gi as usize] {
            let w = g.opacity * t_ind;
            for k in 0..SH_COEFFS {
                px.indirect[k] += g.indirect_sh[k] * w;
            }
        }
        t_ind *= 1.0 - g.opacity;
    }

    if px.accum_alpha > ACCUM_EPS {
        px.depth = px.depth_raw / px.accum_alpha;
        let n = px.normal_raw.norm();
        if n > 1e-12 {
            px.normal = px.normal_raw / n;
        }
    }
    px
}

/// Render the composited attribute buffers for one camera.
pub fn render_gbuffer(scene: &SceneGaussians, camera: &Camera) -> GBuffer {
    let (tiles_x, _tiles_y, tiles) = tile_candidates(scene, camera);
    let cache = PlaneCache::build(scene);
    let origin = camera.center();
    let width = camera.width;
    let height = camera.height;
    let mut pixels: Vec<GPixel> = vec![GPixel::default(); width * height];

    pixels
        .par_chunks_mut(ROWS_PER_CHUNK * width)
        .enumerate()
        .for_each(|(chunk, slab)| {
            let y_base = chunk * ROWS_PER_CHUNK;
            let mut hits = Vec::new();
            for (i, px) in slab.iter_mut().enumerate() {
                let y = y_base + i / width;
                let x = i % width;
                let tile = (y / TILE) * tiles_x + x / TILE;
                let dir = camera.ray_dir(x as f64 + 0.5, y as f64 + 0.5);
                *px = rasterize_pixel(scene, &cache, &tiles[tile], origin, dir, &mut hits);
            }
        });

    GBuffer {
        width,
        height,
        pixels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::gram_schmidt;
    use approx::assert_relative_eq;

    pub(crate) fn opaque_disk_scene() -> (SceneGaussians, Camera) {
        let g = GaussianPrimitive {
            position: Vec3::zeros(),
            tangent_u: Vec3::x(),
            tangent_v: Vec3::y(),
            scale_u: 1.0,
            scale_v: 1.0,
            opacity: 1.0,
            albedo: Vec3::new(0.7, 0.2, 0.1),
            metallic: 0.3,
            roughness: 0.6,
            clay_color: Vec3::new(0.5, 0.5, 0.4),
            indirect_sh: [Vec3::zeros(); SH_COEFFS],
        };
        let cam = Camera::look_at(
            33,
            33,
            45.0,
            Vec3::new(0.0, 0.0, -4.0),
            Vec3::zeros(),
            Vec3::y(),
        );
        (SceneGaussians::new(vec![g]), cam)
    }

    #[test]
    fn empty_scene_renders_zero() {
        let (_, cam) = opaque_disk_scene();
        let gb = render_gbuffer(&SceneGaussians::default(), &cam);
        assert!(gb.pixels.iter().all(|p| p.accum_alpha == 0.0 && p.depth == 0.0));
    }

    #[test]
    fn single_opaque_disk_center_pixel() {
        let (scene, cam) = opaque_disk_scene();
        let gb = render_gbuffer(&scene, &cam);
        // 33x33 image: center pixel (16,16) has its center exactly on the
        // principal point, so u = v = 0, G = 1, w = 1
        let px = gb.pixel(16, 16);
        let g = &scene.gaussians[0];
        assert_relative_eq!(px.accum_alpha, 1.0, epsilon = 1e-12);
        assert_relative_eq!((px.albedo - g.albedo).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(px.metallic, g.metallic, epsilon = 1e-12);
        assert_relative_eq!(px.roughness, g.roughness, epsilon = 1e-12);
        assert_relative_eq!((px.clay - g.clay_color).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(px.depth, 4.0, epsilon = 1e-12);
        // disk normal is +z (t_u x t_v); the camera looks from -z toward
        // +z, so the camera-facing normal flips to -z
        assert_relative_eq!((px.normal - Vec3::new(0.0, 0.0, -1.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_opacity_gaussian_is_invisible() {
        let (mut scene, cam) = opaque_disk_scene();
        let base = render_gbuffer(&scene, &cam);
        let mut ghost = scene.gaussians[0].clone();
        ghost.opacity = 0.0;
        ghost.position = Vec3::new(0.1, -0.1, -0.5);
        scene.gaussians.push(ghost);
        let with_ghost = render_gbuffer(&scene, &cam);
        for (a, b) in base.pixels.iter().zip(&with_ghost.pixels) {
            assert_eq!(a.albedo, b.albedo);
            assert_eq!(a.accum_alpha, b.accum_alpha);
            assert_eq!(a.depth, b.depth);
            assert_eq!(a.normal, b.normal);
        }
    }

    #[test]
    fn pixel_to_local_principal_point() {
        let (scene, cam) = opaque_disk_scene();
        let (u, v, t) = pixel_to_local(&cam, &scene.gaussians[0], (cam.cx, cam.cy)).unwrap();
        assert_relative_eq!(u, 0.0, epsilon = 1e-12);
        assert_relative_eq!(v, 0.0, epsilon = 1e-12);
        assert_relative_eq!(t, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn accum_alpha_stays_in_unit_interval() {
        let mut state = 4242u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let cam = Camera::look_at(
            24,
            24,
            50.0,
            Vec3::new(0.0, 0.0, -3.5),
            Vec3::zeros(),
            Vec3::y(),
        );
        for _ in 0..5 {
            let gaussians: Vec<_> = (0..12)
                .map(|_| {
                    let (t_u, t_v) = gram_schmidt(
                        Vec3::new(next() - 0.5, next() - 0.5, next() - 0.5),
                        Vec3::new(next() - 0.5, next() - 0.5, next() - 0.5),
                    );
                    GaussianPrimitive {
                        position: Vec3::new(next() - 0.5, next() - 0.5, next() - 0.5),
                        tangent_u: t_u,
                        tangent_v: t_v,
                        scale_u: 0.05 + next() * 0.5,
                        scale_v: 0.05 + next() * 0.5,
                        opacity: next(),
                        albedo: Vec3::new(next(), next(), next()),
                        metallic: next(),
                        roughness: next(),
                        clay_color: Vec3::new(next(), next(), next()),
                        indirect_sh: [Vec3::zeros(); SH_COEFFS],
                    }
                })
                .collect();
            let gb = render_gbuffer(&SceneGaussians::new(gaussians), &cam);
            for p in &gb.pixels {
                assert!((0.0..=1.0 + 1e-12).contains(&p.accum_alpha));
                let w_sum: f64 = p.contribs.iter().map(|c| c.w).sum();
                assert_relative_eq!(w_sum, p.accum_alpha, epsilon = 1e-9);
            }
        }
    }
}
