//! Backward pass: per-pixel attribute gradients to per-Gaussian parameter
//! gradients, replaying the retained contributor lists.
//!
//! Gradients are with respect to the natural-space Gaussian fields; the
//! optimizer chains them through its own reparameterization. Accumulation
//! is chunked over fixed row blocks and merged in block order, so the
//! result is bit-identical for any worker count.

use rayon::prelude::*;

use crate::scene::{Camera, SceneGaussians};
use crate::{Vec3, SH_COEFFS};

use super::geometry::{intersect_disk_backward, DiskHit};
use super::{backward_alpha_scan, GBuffer, PlaneCache, ROWS_PER_CHUNK};

/// Per-pixel gradients of a scalar loss w.r.t. every G-buffer channel.
/// `normal` is w.r.t. the re-normalized unit normal and `depth` w.r.t. the
/// alpha-normalized depth, matching what [`super::render_gbuffer`] exposes.
#[derive(Debug, Clone)]
pub struct GBufferUpstream {
    pub width: usize,
    pub height: usize,
    pub albedo: Vec<Vec3>,
    pub metallic: Vec<f64>,
    pub roughness: Vec<f64>,
    pub normal: Vec<Vec3>,
    pub clay: Vec<Vec3>,
    pub indirect: Vec<[Vec3; SH_COEFFS]>,
    pub accum_alpha: Vec<f64>,
    pub depth: Vec<f64>,
}

impl GBufferUpstream {
    pub fn zeros(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            albedo: vec![Vec3::zeros(); n],
            metallic: vec![0.0; n],
            roughness: vec![0.0; n],
            normal: vec![Vec3::zeros(); n],
            clay: vec![Vec3::zeros(); n],
            indirect: vec![[Vec3::zeros(); SH_COEFFS]; n],
            accum_alpha: vec![0.0; n],
            depth: vec![0.0; n],
        }
    }

    /// Zero out the normal channel (used to split gradient sources when
    /// routing between branches).
    pub fn with_normal_only(&self) -> Self {
        let mut out = Self::zeros(self.width, self.height);
        out.normal = self.normal.clone();
        out
    }

    pub fn without_normal(&self) -> Self {
        let mut out = self.clone();
        out.normal = vec![Vec3::zeros(); self.width * self.height];
        out
    }

    pub fn scale_normal(&mut self, factor: f64) {
        for n in &mut self.normal {
            *n *= factor;
        }
    }
}

/// Per-Gaussian loss gradients, natural parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct SplatGradients {
    pub position: Vec<Vec3>,
    pub tangent_u: Vec<Vec3>,
    pub tangent_v: Vec<Vec3>,
    pub scale_u: Vec<f64>,
    pub scale_v: Vec<f64>,
    pub opacity: Vec<f64>,
    pub albedo: Vec<Vec3>,
    pub metallic: Vec<f64>,
    pub roughness: Vec<f64>,
    pub clay_color: Vec<Vec3>,
    pub indirect_sh: Vec<[Vec3; SH_COEFFS]>,
}

impl SplatGradients {
    pub fn zeros(n: usize) -> Self {
        Self {
            position: vec![Vec3::zeros(); n],
            tangent_u: vec![Vec3::zeros(); n],
            tangent_v: vec![Vec3::zeros(); n],
            scale_u: vec![0.0; n],
            scale_v: vec![0.0; n],
            opacity: vec![0.0; n],
            albedo: vec![Vec3::zeros(); n],
            metallic: vec![0.0; n],
            roughness: vec![0.0; n],
            clay_color: vec![Vec3::zeros(); n],
            indirect_sh: vec![[Vec3::zeros(); SH_COEFFS]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }

    /// self += other * scale
    pub fn axpy(&mut self, other: &SplatGradients, scale: f64) {
        let n = self.len();
        assert_eq!(n, other.len());
        for i in 0..n {
            self.position[i] += other.position[i] * scale;
            self.tangent_u[i] += other.tangent_u[i] * scale;
            self.tangent_v[i] += other.tangent_v[i] * scale;
            self.scale_u[i] += other.scale_u[i] * scale;
            self.scale_v[i] += other.scale_v[i] * scale;
            self.opacity[i] += other.opacity[i] * scale;
            self.albedo[i] += other.albedo[i] * scale;
            self.metallic[i] += other.metallic[i] * scale;
            self.roughness[i] += other.roughness[i] * scale;
            self.clay_color[i] += other.clay_color[i] * scale;
            for k in 0..SH_COEFFS {
                self.indirect_sh[i][k] += other.indirect_sh[i][k] * scale;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.position.iter().all(|v| v.iter().all(|c| c.is_finite()))
            && self.tangent_u.iter().all(|v| v.iter().all(|c| c.is_finite()))
            && self.tangent_v.iter().all(|v| v.iter().all(|c| c.is_finite()))
            && self.scale_u.iter().all(|c| c.is_finite())
            && self.scale_v.iter().all(|c| c.is_finite())
            && self.opacity.iter().all(|c| c.is_finite())
            && self.albedo.iter().all(|v| v.iter().all(|c| c.is_finite()))
            && self.metallic.iter().all(|c| c.is_finite())
            && self.roughness.iter().all(|c| c.is_finite())
            && self.clay_color.iter().all(|v| v.iter().all(|c| c.is_finite()))
            && self
                .indirect_sh
                .iter()
                .all(|sh| sh.iter().all(|v| v.iter().all(|c| c.is_finite())))
    }

    /// Euclidean norm over the position block.
    pub fn position_norm(&self) -> f64 {
        self.position.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt()
    }

    /// Euclidean norm over the material block (albedo, metallic, roughness).
    pub fn material_norm(&self) -> f64 {
        let s: f64 = self.albedo.iter().map(|v| v.norm_squared()).sum::<f64>()
            + self.metallic.iter().map(|v| v * v).sum::<f64>()
            + self.roughness.iter().map(|v| v * v).sum::<f64>();
        s.sqrt()
    }
}

/// Propagate per-pixel G-buffer gradients to the scene parameters.
///
/// Panics if the G-buffer was not produced for the same image size: the
/// retained contributor lists are the contract between the passes.
pub fn backward_gbuffer(
    scene: &SceneGaussians,
    camera: &Camera,
    gbuffer: &GBuffer,
    upstream: &GBufferUpstream,
) -> SplatGradients {
    assert_eq!(
        (gbuffer.width, gbuffer.height),
        (upstream.width, upstream.height),
        "upstream dims must match the gbuffer"
    );
    assert_eq!(
        (gbuffer.width, gbuffer.height),
        (camera.width, camera.height),
        "gbuffer was rendered with a different camera size"
    );
    let origin = camera.center();
    let cache = PlaneCache::build(scene);
    let width = gbuffer.width;

    let chunks: Vec<SplatGradients> = gbuffer
        .pixels
        .par_chunks(ROWS_PER_CHUNK * width)
        .enumerate()
        .map(|(chunk, slab)| {
            let mut grads = SplatGradients::zeros(scene.len());
            let mut a_buf: Vec<f64> = Vec::new();
            let mut w_buf: Vec<f64> = Vec::new();
            let mut dot_buf: Vec<f64> = Vec::new();
            let y_base = chunk * ROWS_PER_CHUNK;
            for (i, px) in slab.iter().enumerate() {
                if px.contribs.is_empty() {
                    continue;
                }
                let p = (y_base * width + i) as usize;
                let y = p / width;
                let x = p % width;
                backward_pixel(
                    scene,
                    &cache,
                    origin,
                    camera.ray_dir(x as f64 + 0.5, y as f64 + 0.5),
                    px,
                    upstream,
                    p,
                    &mut grads,
                    &mut a_buf,
                    &mut w_buf,
                    &mut dot_buf,
                );
            }
            grads
        })
        .collect();

    let mut total = SplatGradients::zeros(scene.len());
    for g in &chunks {
        total.axpy(g, 1.0);
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn backward_pixel(
    scene: &SceneGaussians,
    cache: &PlaneCache,
    origin: Vec3,
    dir: Vec3,
    px: &super::GPixel,
    upstream: &GBufferUpstream,
    p: usize,
    grads: &mut SplatGradients,
    a_buf: &mut Vec<f64>,
    w_buf: &mut Vec<f64>,
    dot_buf: &mut Vec<f64>,
) {
    let fg = px.is_foreground();

    // chain through normal re-normalization and depth normalization
    let mut d_normal_raw = Vec3::zeros();
    let mut d_accum = upstream.accum_alpha[p];
    let mut d_depth_raw = 0.0;
    if fg {
        let raw_norm = px.normal_raw.norm();
        if raw_norm > 1e-12 {
            let up_n = upstream.normal[p];
            d_normal_raw = (up_n - px.normal * px.normal.dot(&up_n)) / raw_norm;
        }
        let d_depth = upstream.depth[p];
        d_depth_raw = d_depth / px.accum_alpha;
        d_accum -= px.depth / px.accum_alpha * d_depth;
    }

    let d_albedo = upstream.albedo[p];
    let d_metallic = upstream.metallic[p];
    let d_roughness = upstream.roughness[p];
    let d_clay = upstream.clay[p];
    let d_ind = &upstream.indirect[p];

    // main blend: attribute channels with alpha * G weights
    let n = px.contribs.len();
    a_buf.clear();
    w_buf.clear();
    dot_buf.clear();
    for c in &px.contribs {
        let g = &scene.gaussians[c.gaussian as usize];
        let n_eff = cache.normals[c.gaussian as usize] * c.flip;
        let dot = d_albedo.dot(&g.albedo)
            + d_metallic * g.metallic
            + d_roughness * g.roughness
            + d_normal_raw.dot(&n_eff)
            + d_clay.dot(&g.clay_color)
            + d_depth_raw * c.t
            + d_accum;
        a_buf.push(g.opacity * c.g);
        w_buf.push(c.w);
        dot_buf.push(dot);

        // channel gradients scale with the blend weight
        let gi = c.gaussian as usize;
        grads.albedo[gi] += d_albedo * c.w;
        grads.metallic[gi] += d_metallic * c.w;
        grads.roughness[gi] += d_roughness * c.w;
        grads.clay_color[gi] += d_clay * c.w;
    }

    let mut d_a = vec![0.0; n];
    backward_alpha_scan(a_buf, w_buf, dot_buf, |i, g| d_a[i] = g);

    for (i, c) in px.contribs.iter().enumerate() {
        let gi = c.gaussian as usize;
        let g = &scene.gaussians[gi];
        grads.opacity[gi] += d_a[i] * c.g;
        let d_g = d_a[i] * g.opacity;
        // G = exp(-(u^2+v^2)/2)
        let d_u = -c.u * c.g * d_g;
        let d_v = -c.v * c.g * d_g;

        let d_n_eff = d_normal_raw * c.w;
        let d_t = d_depth_raw * c.w;
        let hit = DiskHit {
            t: c.t,
            u: c.u,
            v: c.v,
            g: c.g,
            flip: c.flip,
        };
        let hg = intersect_disk_backward(g, origin, dir, &hit, d_u, d_v, d_t, d_n_eff);
        grads.position[gi] += hg.position;
        grads.tangent_u[gi] += hg.tangent_u;
        grads.tangent_v[gi] += hg.tangent_v;
        grads.scale_u[gi] += hg.scale_u;
        grads.scale_v[gi] += hg.scale_v;
    }

    // indirect blend: opacity-only weights in the same depth order
    let any_ind = d_ind.iter().any(|v| *v != Vec3::zeros());
    if any_ind {
        a_buf.clear();
        w_buf.clear();
        dot_buf.clear();
        let mut t_ind = 1.0;
        for c in &px.contribs {
            let g = &scene.gaussians[c.gaussian as usize];
            let w = g.opacity * t_ind;
            t_ind *= 1.0 - g.opacity;
            let mut dot = 0.0;
            for k in 0..SH_COEFFS {
                dot += d_ind[k].dot(&g.indirect_sh[k]);
            }
            a_buf.push(g.opacity);
            w_buf.push(w);
            dot_buf.push(dot);
            let gi = c.gaussian as usize;
            for k in 0..SH_COEFFS {
                grads.indirect_sh[gi][k] += d_ind[k] * w;
            }
        }
        backward_alpha_scan(a_buf, w_buf, dot_buf, |i, g| {
            let gi = px.contribs[i].gaussian as usize;
            grads.opacity[gi] += g;
        });
    }
}
