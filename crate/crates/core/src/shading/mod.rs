//! Physically-based deferred shading of composited G-buffers.
//!
//! Foreground pixels get diffuse irradiance plus a split-sum GGX specular
//! term; the specular light is either the prefiltered environment (when
//! the reflected ray escapes the scene) or the composited indirect SH
//! radiance (when it is blocked). Everything is differentiable except the
//! binary visibility, which is treated as a constant in the backward pass.

pub mod ggx;
pub mod ibl;
pub mod lut;
pub mod mc;
pub mod prefilter;
pub mod sh;
pub mod visibility;

pub use ggx::{fresnel_schlick, ggx_d, smith_g, specular_brdf};
pub use ibl::{EnvironmentMap, ROUGHNESS_FLOOR};
pub use lut::{bake_brdf_lut, BrdfLut};
pub use prefilter::{eval_irradiance, project_irradiance_sh, PrefilterOp};
pub use sh::eval_indirect;
pub use visibility::{visibility, visibility_cached, VisibilityRange};

use rayon::prelude::*;

use crate::img::ImageRgb;
use crate::scene::{Camera, SceneGaussians};
use crate::splat::{GBuffer, GBufferUpstream, GPixel};
use crate::{Vec3, SH_COEFFS};

use crate::splat::ROWS_PER_CHUNK;

/// Dielectric normal-incidence reflectance in the metallic workflow.
pub const F0_DIELECTRIC: f64 = 0.04;
const COS_EPS: f64 = 1e-4;

/// Everything shading needs for one surface point, unpremultiplied.
#[derive(Debug, Clone)]
pub struct ShadingSample {
    pub normal: Vec3,
    pub w_o: Vec3,
    pub albedo: Vec3,
    pub metallic: f64,
    pub roughness: f64,
    pub indirect: [Vec3; SH_COEFFS],
    pub chi_v: u8,
}

impl ShadingSample {
    /// Unpremultiply a foreground G-buffer pixel.
    pub fn from_gpixel(px: &GPixel, w_o: Vec3, chi_v: u8) -> Self {
        let inv = 1.0 / px.accum_alpha;
        Self {
            normal: px.normal,
            w_o,
            albedo: px.albedo * inv,
            metallic: px.metallic * inv,
            roughness: px.roughness * inv,
            indirect: px.indirect,
            chi_v,
        }
    }

    pub fn f0(&self) -> Vec3 {
        Vec3::repeat(F0_DIELECTRIC * (1.0 - self.metallic)) + self.albedo * self.metallic
    }
}

/// Lambertian term (albedo / pi) (1 - metallic) E(N).
pub fn eval_diffuse(sample: &ShadingSample, env: &EnvironmentMap) -> Vec3 {
    let e = eval_irradiance(&env.irradiance, sample.normal);
    sample.albedo.component_mul(&e) * ((1.0 - sample.metallic) / std::f64::consts::PI)
}

/// Split-sum specular against the prefiltered environment:
/// (F0 A + B) * prefiltered(reflect(-w_o, N), roughness).
pub fn eval_specular_direct(sample: &ShadingSample, env: &EnvironmentMap) -> Vec3 {
    let n = sample.normal;
    let cos_raw = n.dot(&sample.w_o);
    let cos_v = cos_raw.clamp(COS_EPS, 1.0);
    let r_c = sample.roughness.clamp(ROUGHNESS_FLOOR, 1.0);
    let (a, b) = env.lut.lookup(cos_v, r_c);
    let refl = n * (2.0 * cos_raw) - sample.w_o;
    let l_dir = env.sample_prefiltered(refl, r_c);
    let f0 = sample.f0();
    Vec3::new(
        (f0.x * a + b) * l_dir.x,
        (f0.y * a + b) * l_dir.y,
        (f0.z * a + b) * l_dir.z,
    )
}

/// Per-pixel shading state kept between the forward and backward passes.
#[derive(Debug, Clone)]
pub struct ShadeAux {
    pub width: usize,
    pub height: usize,
    /// Binary reflection visibility per pixel (1 = environment visible).
    pub chi: Vec<u8>,
    /// Foreground decision per pixel, frozen for gradient-check replays.
    pub fg: Vec<bool>,
}

/// Loss gradients w.r.t. the learned base radiance grid.
#[derive(Debug, Clone)]
pub struct EnvGradient {
    pub base: Vec<Vec3>,
}

impl EnvGradient {
    pub fn zeros(env: &EnvironmentMap) -> Self {
        Self {
            base: vec![Vec3::zeros(); env.base.width * env.base.height],
        }
    }

    pub fn all_finite(&self) -> bool {
        self.base.iter().all(|v| v.iter().all(|c| c.is_finite()))
    }

    pub fn axpy(&mut self, other: &EnvGradient, scale: f64) {
        for (a, b) in self.base.iter_mut().zip(&other.base) {
            *a += b * scale;
        }
    }
}

/// Shade a G-buffer, computing visibility live.
pub fn shade(
    gbuffer: &GBuffer,
    env: &EnvironmentMap,
    scene: &SceneGaussians,
    camera: &Camera,
) -> (ImageRgb, ShadeAux) {
    shade_impl(gbuffer, env, scene, camera, None)
}

/// Shade with frozen per-pixel visibility and foreground decisions, for
/// finite-difference replays of a perturbed scene.
pub fn shade_frozen(
    gbuffer: &GBuffer,
    env: &EnvironmentMap,
    scene: &SceneGaussians,
    camera: &Camera,
    aux: &ShadeAux,
) -> ImageRgb {
    shade_impl(gbuffer, env, scene, camera, Some(aux)).0
}

fn shade_impl(
    gbuffer: &GBuffer,
    env: &EnvironmentMap,
    scene: &SceneGaussians,
    camera: &Camera,
    frozen: Option<&ShadeAux>,
) -> (ImageRgb, ShadeAux) {
    let width = gbuffer.width;
    let height = gbuffer.height;
    let range = VisibilityRange::for_scene(scene);
    let plane_normals: Vec<Vec3> = scene
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
    let origin = camera.center();

    let results: Vec<(Vec3, u8, bool)> = gbuffer
        .pixels
        .par_chunks(ROWS_PER_CHUNK * width)
        .enumerate()
        .flat_map_iter(|(chunk, slab)| {
            let y_base = chunk * ROWS_PER_CHUNK;
            let plane_normals = &plane_normals;
            slab.iter().enumerate().map(move |(i, px)| {
                let p = y_base * width + i;
                let y = p / width;
                let x = p % width;
                let dir = camera.ray_dir(x as f64 + 0.5, y as f64 + 0.5);
                let fg = match frozen {
                    Some(aux) => aux.fg[p],
                    None => px.is_foreground(),
                };
                if !fg {
                    let bg = env.base.sample(dir) * (1.0 - px.accum_alpha);
                    return (bg, 1u8, false);
                }
                let chi = match frozen {
                    Some(aux) => aux.chi[p],
                    None => {
                        let cos_raw = px.normal.dot(&(-dir));
                        let refl = px.normal * (2.0 * cos_raw) + dir;
                        visibility_cached(scene, plane_normals, range, origin + dir * px.depth, refl)
                    }
                };
                (shade_pixel(px, env, dir, chi), chi, true)
            })
        })
        .collect();

    let mut img = ImageRgb::new(width, height);
    let mut aux = ShadeAux {
        width,
        height,
        chi: vec![1; width * height],
        fg: vec![false; width * height],
    };
    for (p, (rgb, chi, fg)) in results.into_iter().enumerate() {
        img.data[p * 3] = rgb.x;
        img.data[p * 3 + 1] = rgb.y;
        img.data[p * 3 + 2] = rgb.z;
        aux.chi[p] = chi;
        aux.fg[p] = fg;
    }
    (img, aux)
}

/// Forward shading of one foreground pixel:
/// out = a * (diffuse + (F0 A + B)(L_dir chi + L_ind (1 - chi))) + (1 - a) * env(ray).
fn shade_pixel(px: &GPixel, env: &EnvironmentMap, dir: Vec3, chi: u8) -> Vec3 {
    let a_acc = px.accum_alpha;
    let sample = ShadingSample::from_gpixel(px, -dir, chi);
    let n = sample.normal;

    let cos_raw = n.dot(&sample.w_o);
    let cos_v = cos_raw.clamp(COS_EPS, 1.0);
    let r_c = sample.roughness.clamp(ROUGHNESS_FLOOR, 1.0);
    let lut_s = env.lut.lookup_with_grad(cos_v, r_c);
    let f0 = sample.f0();
    let refl = n * (2.0 * cos_raw) - sample.w_o;

    let spec_light = if chi == 1 {
        env.sample_prefiltered(refl, r_c)
    } else {
        sh::eval_indirect(&sample.indirect, refl)
    };

    let e_irr = eval_irradiance(&env.irradiance, n);
    let k_d = (1.0 - sample.metallic) / std::f64::consts::PI;
    let diffuse = sample.albedo.component_mul(&e_irr) * k_d;

    let fg_color = Vec3::new(
        diffuse.x + (f0.x * lut_s.a + lut_s.b) * spec_light.x,
        diffuse.y + (f0.y * lut_s.a + lut_s.b) * spec_light.y,
        diffuse.z + (f0.z * lut_s.a + lut_s.b) * spec_light.z,
    );

    let bg = env.base.sample(dir);
    fg_color * a_acc + bg * (1.0 - a_acc)
}

/// Backward through [`shade`]: per-pixel G-buffer channel gradients plus
/// the gradient w.r.t. the base environment grid. Binary visibility is a
/// constant.
pub fn shade_backward(
    gbuffer: &GBuffer,
    env: &EnvironmentMap,
    camera: &Camera,
    aux: &ShadeAux,
    d_rgb: &ImageRgb,
) -> (GBufferUpstream, EnvGradient) {
    let width = gbuffer.width;
    let height = gbuffer.height;
    assert_eq!((d_rgb.width, d_rgb.height), (width, height));
    let n_mips = env.n_mips();
    let texels = env.base.width * env.base.height;

    struct ChunkOut {
        upstream_rows: Vec<PixelUpstream>,
        d_mips: Vec<Vec<Vec3>>,
        d_irr: [Vec3; SH_COEFFS],
    }

    let chunk_results: Vec<ChunkOut> = gbuffer
        .pixels
        .par_chunks(ROWS_PER_CHUNK * width)
        .enumerate()
        .map(|(chunk, slab)| {
            let y_base = chunk * ROWS_PER_CHUNK;
            let mut out = ChunkOut {
                upstream_rows: Vec::with_capacity(slab.len()),
                d_mips: vec![vec![Vec3::zeros(); texels]; n_mips],
                d_irr: [Vec3::zeros(); SH_COEFFS],
            };
            for (i, px) in slab.iter().enumerate() {
                let p = y_base * width + i;
                let y = p / width;
                let x = p % width;
                let dir = camera.ray_dir(x as f64 + 0.5, y as f64 + 0.5);
                let d_out = Vec3::new(
                    d_rgb.data[p * 3],
                    d_rgb.data[p * 3 + 1],
                    d_rgb.data[p * 3 + 2],
                );
                let up = shade_pixel_backward(
                    px,
                    env,
                    dir,
                    aux.fg[p],
                    aux.chi[p],
                    d_out,
                    &mut out.d_mips,
                    &mut out.d_irr,
                );
                out.upstream_rows.push(up);
            }
            out
        })
        .collect();

    let mut upstream = GBufferUpstream::zeros(width, height);
    let mut d_mips = vec![vec![Vec3::zeros(); texels]; n_mips];
    let mut d_irr = [Vec3::zeros(); SH_COEFFS];
    for (chunk, result) in chunk_results.iter().enumerate() {
        let base = chunk * ROWS_PER_CHUNK * width;
        for (i, up) in result.upstream_rows.iter().enumerate() {
            let p = base + i;
            upstream.albedo[p] = up.albedo;
            upstream.metallic[p] = up.metallic;
            upstream.roughness[p] = up.roughness;
            upstream.normal[p] = up.normal;
            upstream.indirect[p] = up.indirect;
            upstream.accum_alpha[p] = up.accum;
        }
        for k in 0..n_mips {
            for t in 0..texels {
                d_mips[k][t] += result.d_mips[k][t];
            }
        }
        for k in 0..SH_COEFFS {
            d_irr[k] += result.d_irr[k];
        }
    }

    let mut env_grad = EnvGradient::zeros(env);
    env.mips_transpose(&d_mips, &mut env_grad.base);
    prefilter::project_irradiance_sh_transpose(&d_irr, &env.base, &mut env_grad.base);
    (upstream, env_grad)
}

#[derive(Debug, Clone, Copy)]
struct PixelUpstream {
    albedo: Vec3,
    metallic: f64,
    roughness: f64,
    normal: Vec3,
    indirect: [Vec3; SH_COEFFS],
    accum: f64,
}

impl PixelUpstream {
    fn zeros() -> Self {
        Self {
            albedo: Vec3::zeros(),
            metallic: 0.0,
            roughness: 0.0,
            normal: Vec3::zeros(),
            indirect: [Vec3::zeros(); SH_COEFFS],
            accum: 0.0,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn shade_pixel_backward(
    px: &GPixel,
    env: &EnvironmentMap,
    dir: Vec3,
    fg: bool,
    chi: u8,
    d_out: Vec3,
    d_mips: &mut [Vec<Vec3>],
    d_irr: &mut [Vec3; SH_COEFFS],
) -> PixelUpstream {
    let mut up = PixelUpstream::zeros();
    let (bg, bg_tap) = env.base.sample_with_grad(dir);
    let a_acc = px.accum_alpha;

    if !fg {
        // out = (1 - a) * bg
        let w = 1.0 - a_acc;
        for (t, tw) in bg_tap.taps {
            d_mips[0][t] += d_out * (w * tw);
        }
        up.accum = -bg.dot(&d_out);
        return up;
    }

    // ---- replay the forward quantities ----
    let inv = 1.0 / a_acc;
    let w_o = -dir;
    let albedo = px.albedo * inv;
    let metallic = px.metallic * inv;
    let rough_raw = px.roughness * inv;
    let n = px.normal;
    let cos_raw = n.dot(&w_o);
    let cos_v = cos_raw.clamp(COS_EPS, 1.0);
    let r_c = rough_raw.clamp(ROUGHNESS_FLOOR, 1.0);
    let lut_s = env.lut.lookup_with_grad(cos_v, r_c);
    let f0 = Vec3::repeat(F0_DIELECTRIC * (1.0 - metallic)) + albedo * metallic;
    let refl = n * (2.0 * cos_raw) - w_o;
    let basis = sh::sh_basis(refl);

    let pre = env.sample_prefiltered_with_grad(refl, r_c);
    let mut ind_pre = Vec3::zeros();
    for k in 0..SH_COEFFS {
        ind_pre += px.indirect[k] * basis[k];
    }
    let spec_light = if chi == 1 {
        pre.value
    } else {
        ind_pre.map(|v| v.max(0.0))
    };

    let basis_n = sh::sh_basis(n);
    let mut e_irr_pre = Vec3::zeros();
    for k in 0..SH_COEFFS {
        e_irr_pre += env.irradiance[k] * (sh::COSINE_LOBE[k] * basis_n[k]);
    }
    let e_irr = e_irr_pre.map(|v| v.max(0.0));
    let k_d = (1.0 - metallic) / std::f64::consts::PI;
    let diffuse = albedo.component_mul(&e_irr) * k_d;
    let spec_scale = Vec3::new(
        f0.x * lut_s.a + lut_s.b,
        f0.y * lut_s.a + lut_s.b,
        f0.z * lut_s.a + lut_s.b,
    );
    let fg_color = diffuse + spec_scale.component_mul(&spec_light);

    // ---- backward ----
    // out = a * fg_color + (1 - a) * bg
    let d_fg = d_out * a_acc;
    let mut d_accum = (fg_color - bg).dot(&d_out);
    for (t, tw) in bg_tap.taps {
        d_mips[0][t] += d_out * ((1.0 - a_acc) * tw);
    }

    // diffuse = albedo * E * k_d, componentwise
    let mut d_albedo = e_irr.component_mul(&d_fg) * k_d;
    let mut d_metallic = -albedo.component_mul(&e_irr).dot(&d_fg) / std::f64::consts::PI;
    let mut d_n = Vec3::zeros();
    let d_e = Vec3::new(
        if e_irr_pre.x > 0.0 { d_fg.x * albedo.x * k_d } else { 0.0 },
        if e_irr_pre.y > 0.0 { d_fg.y * albedo.y * k_d } else { 0.0 },
        if e_irr_pre.z > 0.0 { d_fg.z * albedo.z * k_d } else { 0.0 },
    );
    {
        let gb = sh::sh_basis_grad(n);
        for k in 0..SH_COEFFS {
            d_irr[k] += d_e * (sh::COSINE_LOBE[k] * basis_n[k]);
            d_n += gb[k] * (sh::COSINE_LOBE[k] * env.irradiance[k].dot(&d_e));
        }
    }

    // specular scale and light
    let d_spec_scale = spec_light.component_mul(&d_fg);
    let d_spec_light = spec_scale.component_mul(&d_fg);
    let d_f0 = d_spec_scale * lut_s.a;
    let d_a = f0.dot(&d_spec_scale);
    let d_b = d_spec_scale.x + d_spec_scale.y + d_spec_scale.z;
    d_albedo += d_f0 * metallic;
    d_metallic += d_f0.dot(&(albedo - Vec3::repeat(F0_DIELECTRIC)));
    let d_cos_lut = d_a * lut_s.da_dcos + d_b * lut_s.db_dcos;
    let mut d_rc = d_a * lut_s.da_drough + d_b * lut_s.db_drough;

    let mut d_refl = Vec3::zeros();
    if chi == 1 {
        for (t, tw) in pre.tap0.taps {
            d_mips[pre.level0][t] += d_spec_light * (pre.w0 * tw);
        }
        for (t, tw) in pre.tap1.taps {
            d_mips[pre.level1][t] += d_spec_light * (pre.w1 * tw);
        }
        for c in 0..3 {
            let g0 = pre.tap0.dfu_ddir * pre.tap0.dval_dfu[c]
                + pre.tap0.dfv_ddir * pre.tap0.dval_dfv[c];
            let g1 = pre.tap1.dfu_ddir * pre.tap1.dval_dfu[c]
                + pre.tap1.dfv_ddir * pre.tap1.dval_dfv[c];
            d_refl += (g0 * pre.w0 + g1 * pre.w1) * d_spec_light[c];
        }
        d_rc += (pre.v1 - pre.v0).dot(&d_spec_light) * pre.dlevel_drough;
    } else {
        let gb = sh::sh_basis_grad(refl);
        let d_ind_pre = Vec3::new(
            if ind_pre.x > 0.0 { d_spec_light.x } else { 0.0 },
            if ind_pre.y > 0.0 { d_spec_light.y } else { 0.0 },
            if ind_pre.z > 0.0 { d_spec_light.z } else { 0.0 },
        );
        for k in 0..SH_COEFFS {
            up.indirect[k] = d_ind_pre * basis[k];
            d_refl += gb[k] * px.indirect[k].dot(&d_ind_pre);
        }
    }

    // refl = 2 (n.w_o) n - w_o
    d_n += d_refl * (2.0 * cos_raw) + w_o * (2.0 * n.dot(&d_refl));
    // LUT cosine coordinate (identity inside the clamp range)
    if cos_raw > COS_EPS && cos_raw < 1.0 {
        d_n += w_o * d_cos_lut;
    }
    // roughness floor
    let d_rough_raw = if rough_raw > ROUGHNESS_FLOOR && rough_raw < 1.0 {
        d_rc
    } else {
        0.0
    };

    // unpremultiplied attributes: value = raw / a
    up.albedo = d_albedo * inv;
    up.metallic = d_metallic * inv;
    up.roughness = d_rough_raw * inv;
    d_accum -= (d_albedo.dot(&albedo) + d_metallic * metallic + d_rough_raw * rough_raw) * inv;
    up.normal = d_n;
    up.accum = d_accum;
    up
}
