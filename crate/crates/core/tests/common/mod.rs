//! Shared fixtures and the finite-difference harness for integration
//! tests.
//!
//! The rasterizer and shader contain discrete decisions (depth sort,
//! support cutoff, near-plane misses, binary visibility, the foreground
//! threshold) that carry no gradient by definition. Finite differences
//! therefore replay the pipeline with those decisions frozen from the
//! base pass: the frozen forward is the smooth function whose derivative
//! the analytic backward computes.

#![allow(dead_code)]

use claysplat_core::img::ImageRgb;
use claysplat_core::optimize::{clay_channel_image, clay_loss, rgb_loss, RawParams, TrainConfig};
use claysplat_core::scene::{gram_schmidt, Camera, EnvGrid, GaussianPrimitive, SceneGaussians};
use claysplat_core::shading::sh::sh_basis;
use claysplat_core::shading::{
    bake_brdf_lut, shade, shade_backward, shade_frozen, EnvironmentMap, ShadeAux,
};
use claysplat_core::splat::{
    backward_gbuffer, render_gbuffer, render_gbuffer_frozen, GBuffer, GBufferUpstream,
    SplatGradients,
};
use claysplat_core::{Vec3, SH_COEFFS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic single-threaded rayon pool for acceptance runs; first
/// caller wins, later calls are no-ops.
pub fn force_single_thread() {
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build_global();
}

/// Well-conditioned random scene: bounded attributes away from clamp
/// boundaries, camera-facing layout, positive indirect DC term so the
/// SH clamp stays inactive.
pub fn random_scene(seed: u64, count: usize) -> SceneGaussians {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussians = (0..count)
        .map(|_| {
            let (t_u, t_v) = gram_schmidt(
                Vec3::new(
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                ),
                Vec3::new(
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                ),
            );
            let mut indirect_sh = [Vec3::zeros(); SH_COEFFS];
            indirect_sh[0] = Vec3::new(
                1.2 + rng.gen::<f64>(),
                1.2 + rng.gen::<f64>(),
                1.2 + rng.gen::<f64>(),
            );
            for c in indirect_sh.iter_mut().skip(1) {
                *c = Vec3::new(
                    (rng.gen::<f64>() - 0.5) * 0.1,
                    (rng.gen::<f64>() - 0.5) * 0.1,
                    (rng.gen::<f64>() - 0.5) * 0.1,
                );
            }
            GaussianPrimitive {
                position: Vec3::new(
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() * 0.8 - 0.4,
                ),
                tangent_u: t_u,
                tangent_v: t_v,
                scale_u: 0.15 + rng.gen::<f64>() * 0.35,
                scale_v: 0.15 + rng.gen::<f64>() * 0.35,
                opacity: 0.35 + rng.gen::<f64>() * 0.55,
                albedo: Vec3::new(
                    0.2 + rng.gen::<f64>() * 0.6,
                    0.2 + rng.gen::<f64>() * 0.6,
                    0.2 + rng.gen::<f64>() * 0.6,
                ),
                metallic: 0.15 + rng.gen::<f64>() * 0.7,
                roughness: 0.15 + rng.gen::<f64>() * 0.7,
                clay_color: Vec3::new(
                    0.2 + rng.gen::<f64>() * 0.6,
                    0.2 + rng.gen::<f64>() * 0.6,
                    0.2 + rng.gen::<f64>() * 0.6,
                ),
                indirect_sh,
            }
        })
        .collect();
    SceneGaussians::new(gaussians)
}

/// Smooth positive environment from a random low-order SH expansion.
/// Bilinear-interpolation facets of a smooth grid keep finite
/// differences clean.
pub fn smooth_random_env(seed: u64, width: usize, height: usize) -> EnvGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<Vec3> = (0..SH_COEFFS)
        .map(|k| {
            if k == 0 {
                Vec3::new(
                    1.5 + rng.gen::<f64>(),
                    1.5 + rng.gen::<f64>(),
                    1.5 + rng.gen::<f64>(),
                )
            } else {
                Vec3::new(
                    (rng.gen::<f64>() - 0.5) * 0.4,
                    (rng.gen::<f64>() - 0.5) * 0.4,
                    (rng.gen::<f64>() - 0.5) * 0.4,
                )
            }
        })
        .collect();
    let mut env = EnvGrid::new(width, height);
    for row in 0..height {
        for col in 0..width {
            let d = env.texel_dir(col, row);
            let basis = sh_basis(d);
            let mut v = Vec3::zeros();
            for k in 0..SH_COEFFS {
                v += coeffs[k] * basis[k];
            }
            env.set_texel(col, row, v.map(|x| x.max(0.05)));
        }
    }
    env
}

pub fn test_camera(width: usize, height: usize, seed: u64) -> Camera {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let azim = rng.gen::<f64>() * std::f64::consts::TAU;
    let elev = (rng.gen::<f64>() - 0.5) * 0.8;
    let eye = Vec3::new(
        3.0 * elev.cos() * azim.cos(),
        3.0 * elev.sin(),
        3.0 * elev.cos() * azim.sin(),
    );
    Camera::look_at(width, height, 35.0, eye, Vec3::zeros(), Vec3::y())
}

/// Targets offset from the base render by a margin so the L1 kink never
/// sits inside an FD step.
pub fn margin_target(base: &ImageRgb, seed: u64) -> ImageRgb {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = base.clone();
    for v in &mut out.data {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        *v += sign * (0.1 + rng.gen::<f64>() * 0.2);
    }
    out
}

/// Fixed discrete state of one base pass.
pub struct FrozenPipeline {
    pub scene: SceneGaussians,
    pub camera: Camera,
    pub env: EnvironmentMap,
    pub trace: GBuffer,
    pub aux: ShadeAux,
    pub target_rgb: ImageRgb,
    pub target_clay: ImageRgb,
    pub lambda_clay: f64,
}

impl FrozenPipeline {
    pub fn build(seed: u64, gaussians: usize, image: usize) -> Self {
        let scene = random_scene(seed, gaussians);
        let camera = test_camera(image, image, seed ^ 0xCA11);
        let base_env = smooth_random_env(seed ^ 0xE17, 16, 8);
        let lut = bake_brdf_lut(16, 256).expect("lut");
        let env = EnvironmentMap::prepare(base_env, 4, lut).expect("env");
        let trace = render_gbuffer(&scene, &camera);
        let (rgb, aux) = shade(&trace, &env, &scene, &camera);
        let target_rgb = margin_target(&rgb, seed ^ 0x7A6);
        let clay_img = clay_channel_image(&trace);
        let target_clay = margin_target(&clay_img, seed ^ 0xC1A);
        Self {
            scene,
            camera,
            env,
            trace,
            aux,
            target_rgb,
            target_clay,
            lambda_clay: 0.5,
        }
    }

    /// Total loss of the frozen pipeline at the given raw parameters and
    /// environment grid.
    pub fn loss(&mut self, raw: &RawParams, env_params: &EnvGrid) -> f64 {
        let scene = raw.to_scene();
        self.env.base = claysplat_core::optimize::env_from_params(env_params);
        self.env.refresh();
        let gb = render_gbuffer_frozen(&scene, &self.camera, &self.trace);
        let rgb = shade_frozen(&gb, &self.env, &scene, &self.camera, &self.aux);
        let (l_rgb, _) = rgb_loss(&rgb, &self.target_rgb, None).expect("rgb loss");
        let clay_img = clay_channel_image(&gb);
        let (l_clay, _) = clay_loss(&clay_img, &self.target_clay, 0.8, None).expect("clay loss");
        l_rgb + self.lambda_clay * l_clay
    }

    /// Analytic gradient of [`Self::loss`] via the hand-written backward
    /// stack (full reflective pass plus weighted clay pass, no routing).
    pub fn analytic_gradients(
        &mut self,
        raw: &RawParams,
        env_params: &EnvGrid,
    ) -> (RawParams, Vec<f64>) {
        let scene = raw.to_scene();
        self.env.base = claysplat_core::optimize::env_from_params(env_params);
        self.env.refresh();
        let gb = render_gbuffer(&scene, &self.camera);
        let (rgb, aux) = shade(&gb, &self.env, &scene, &self.camera);
        let (_, d_rgb) = rgb_loss(&rgb, &self.target_rgb, None).expect("rgb loss");
        let (upstream, env_grad) = shade_backward(&gb, &self.env, &self.camera, &aux, &d_rgb);
        let mut nat: SplatGradients = backward_gbuffer(&scene, &self.camera, &gb, &upstream);

        let clay_img = clay_channel_image(&gb);
        let (_, d_clay) = clay_loss(&clay_img, &self.target_clay, 0.8, None).expect("clay loss");
        let mut clay_up = GBufferUpstream::zeros(gb.width, gb.height);
        for (p, g) in clay_up.clay.iter_mut().enumerate() {
            *g = Vec3::new(
                d_clay.data[p * 3] * self.lambda_clay,
                d_clay.data[p * 3 + 1] * self.lambda_clay,
                d_clay.data[p * 3 + 2] * self.lambda_clay,
            );
        }
        let clay_nat = backward_gbuffer(&scene, &self.camera, &gb, &clay_up);
        nat.axpy(&clay_nat, 1.0);

        let raw_grads = raw.chain_gradients(&scene, &nat);
        let env_raw =
            claysplat_core::optimize::params::env_grad_through_rectifier(env_params, &env_grad.base);
        (raw_grads, env_raw)
    }
}

/// Flatten raw params into one vector (positions, attributes, env).
pub fn flatten_all(raw: &RawParams, env: &EnvGrid) -> Vec<f64> {
    let mut v = raw.flatten_positions();
    v.extend(raw.flatten_attributes());
    v.extend_from_slice(&env.data);
    v
}

pub fn unflatten_all(template: &RawParams, env_dims: (usize, usize), flat: &[f64]) -> (RawParams, EnvGrid) {
    let n = template.len();
    let mut raw = template.clone();
    raw.unflatten_positions(&flat[..n * 3]);
    let attr_len = n * claysplat_core::optimize::params::ATTR_FLOATS;
    raw.unflatten_attributes(&flat[n * 3..n * 3 + attr_len]);
    let env = EnvGrid {
        width: env_dims.0,
        height: env_dims.1,
        data: flat[n * 3 + attr_len..].to_vec(),
    };
    (raw, env)
}

/// Relative-or-absolute agreement test per the acceptance tolerance.
pub fn grads_agree(analytic: f64, fd: f64, rel_tol: f64, abs_tol: f64) -> bool {
    let diff = (analytic - fd).abs();
    if diff <= abs_tol {
        return true;
    }
    diff / analytic.abs().max(fd.abs()) <= rel_tol
}

pub fn default_config() -> TrainConfig {
    TrainConfig::default()
}
