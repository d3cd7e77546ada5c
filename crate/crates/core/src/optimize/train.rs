//! The dual-branch training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::img::ImageRgb;
use crate::scene::{EnvGrid, SceneGaussians, TrainView};
use crate::shading::{shade, shade_backward, EnvironmentMap};
use crate::splat::{backward_gbuffer, render_gbuffer, GBuffer, SplatGradients};
use crate::{Error, Result};

use super::adam::AdamState;
use super::config::TrainConfig;
use super::loss::{alpha_mask_loss, clay_loss, rgb_loss, MASK_LOSS_WEIGHT};
use super::params::{env_from_params, env_grad_through_rectifier, RawParams};
use super::routing::{normal_gradient_scale, route_gradients, RgbBranchGradients};

/// Per-iteration record written to the loss log.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub iter: usize,
    pub l_rgb: f64,
    /// Present only during the clay phase.
    pub l_clay: Option<f64>,
    pub l_total: f64,
    pub grad_norm_pos: f64,
    pub grad_norm_mat: f64,
}

impl LossReport {
    pub const CSV_HEADER: &'static str = "iter,L_rgb,L_clay,L_total,grad_norm_pos,grad_norm_mat";

    pub fn csv_row(&self) -> String {
        let clay = match self.l_clay {
            Some(v) => format!("{v:.17e}"),
            None => String::new(),
        };
        format!(
            "{},{:.17e},{},{:.17e},{:.17e},{:.17e}",
            self.iter, self.l_rgb, clay, self.l_total, self.grad_norm_pos, self.grad_norm_mat
        )
    }
}

/// All optimizable state plus optimizer moments.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub raw: RawParams,
    pub env_params: EnvGrid,
    pub iter: usize,
    pub config: TrainConfig,
    adam_position: AdamState,
    adam_scales: AdamState,
    adam_attributes: AdamState,
    adam_env: AdamState,
}

impl TrainState {
    pub fn new(scene: &SceneGaussians, env: &EnvGrid, config: TrainConfig) -> Self {
        let raw = RawParams::from_scene(scene);
        let n = raw.len();
        Self {
            adam_position: AdamState::new(n * 3),
            adam_scales: AdamState::new(n * 2),
            adam_attributes: AdamState::new(n * super::params::ATTR_FLOATS),
            adam_env: AdamState::new(env.data.len()),
            raw,
            env_params: env.clone(),
            iter: 0,
            config,
        }
    }

    pub fn scene(&self) -> SceneGaussians {
        self.raw.to_scene()
    }

    pub fn env_grid(&self) -> EnvGrid {
        env_from_params(&self.env_params)
    }
}

/// One full dual-branch forward/backward for a single view.
pub struct DualBranchEval {
    pub l_rgb: f64,
    pub l_clay: Option<f64>,
    pub l_total: f64,
    pub rgb_branch: RgbBranchGradients,
    pub clay_grads: SplatGradients,
    /// Routed natural-space gradients.
    pub merged: SplatGradients,
    /// Gradient w.r.t. the rectified base environment texels.
    pub env_grad: Vec<crate::Vec3>,
    pub gbuffer: GBuffer,
    pub rendered: ImageRgb,
}

/// Render, compute both losses, run the split backward passes and route.
pub fn evaluate_dual_branch(
    scene: &SceneGaussians,
    env: &EnvironmentMap,
    view: &TrainView,
    t: usize,
    config: &TrainConfig,
) -> Result<DualBranchEval> {
    let cam = &view.camera;
    let gbuffer = render_gbuffer(scene, cam);
    let (rendered, aux) = shade(&gbuffer, env, scene, cam);

    let mask = if config.masked {
        view.mask.as_ref()
    } else {
        None
    };
    let (mut l_rgb, d_rgb) = rgb_loss(&rendered, &view.rgb, mask)?;
    let (mut upstream, env_grad_struct) = shade_backward(&gbuffer, env, cam, &aux, &d_rgb);

    let clay_phase = t < config.t_clay;

    // coverage regularizer: counted inside L_rgb, but its gradient is
    // silhouette supervision and bypasses the detach sets. During the
    // clay phase it rides on the clay-side backward pass; afterwards
    // routing is the identity and it can join the reflective upstream.
    let mut mask_accum_grad: Option<Vec<f64>> = None;
    if let Some(m) = mask {
        let (l_mask, d_accum) = alpha_mask_loss(&gbuffer, m);
        l_rgb += MASK_LOSS_WEIGHT * l_mask;
        if clay_phase {
            mask_accum_grad = Some(d_accum);
        } else {
            for (u, d) in upstream.accum_alpha.iter_mut().zip(&d_accum) {
                *u += MASK_LOSS_WEIGHT * d;
            }
        }
    }
    let scale = normal_gradient_scale(config.variant, t, config.t_clay);

    // reflective branch, split by upstream source when the tangent frame
    // is detached (backward is linear in the upstream)
    let need_split = clay_phase && config.variant.detach_tangent() && scale != 0.0;
    let (grads_geom, grads_norm) = if need_split {
        let geom_up = upstream.without_normal();
        let mut norm_up = upstream.with_normal_only();
        norm_up.scale_normal(scale);
        (
            backward_gbuffer(scene, cam, &gbuffer, &geom_up),
            backward_gbuffer(scene, cam, &gbuffer, &norm_up),
        )
    } else {
        upstream.scale_normal(scale);
        (
            backward_gbuffer(scene, cam, &gbuffer, &upstream),
            SplatGradients::zeros(scene.len()),
        )
    };
    let rgb_branch = RgbBranchGradients {
        geometry: grads_geom,
        normal: grads_norm,
    };

    // clay branch
    let (l_clay, clay_grads) = if clay_phase {
        let clay_target = view
            .clay
            .as_ref()
            .ok_or_else(|| Error::Config("clay phase requires clay targets on every view".into()))?;
        let clay_img = clay_channel_image(&gbuffer);
        let (l_clay, d_clay) = clay_loss(&clay_img, clay_target, config.lambda_dssim, mask)?;
        let mut clay_up = crate::splat::GBufferUpstream::zeros(gbuffer.width, gbuffer.height);
        for (p, g) in clay_up.clay.iter_mut().enumerate() {
            *g = crate::Vec3::new(
                d_clay.data[p * 3] * config.lambda_clay,
                d_clay.data[p * 3 + 1] * config.lambda_clay,
                d_clay.data[p * 3 + 2] * config.lambda_clay,
            );
        }
        if let Some(d_accum) = &mask_accum_grad {
            for (u, d) in clay_up.accum_alpha.iter_mut().zip(d_accum) {
                *u += MASK_LOSS_WEIGHT * d;
            }
        }
        (
            Some(l_clay),
            backward_gbuffer(scene, cam, &gbuffer, &clay_up),
        )
    } else {
        (None, SplatGradients::zeros(scene.len()))
    };

    let merged = route_gradients(&rgb_branch, &clay_grads, config.variant, t, config.t_clay);
    let l_total = l_rgb + config.lambda_clay * l_clay.unwrap_or(0.0);

    Ok(DualBranchEval {
        l_rgb,
        l_clay,
        l_total,
        rgb_branch,
        clay_grads,
        merged,
        env_grad: env_grad_struct.base,
        gbuffer,
        rendered,
    })
}

/// The clay channel of a G-buffer as an image (the clay branch render).
pub fn clay_channel_image(gbuffer: &GBuffer) -> ImageRgb {
    let mut img = ImageRgb::new(gbuffer.width, gbuffer.height);
    for (p, px) in gbuffer.pixels.iter().enumerate() {
        img.data[p * 3] = px.clay.x;
        img.data[p * 3 + 1] = px.clay.y;
        img.data[p * 3 + 2] = px.clay.z;
    }
    img
}

/// Outcome of a training run.
pub struct TrainResult {
    pub state: TrainState,
    pub scene: SceneGaussians,
    pub env: EnvGrid,
    pub log: Vec<LossReport>,
}

/// Run the schedule: clay-supervised for t < T_clay, reflective-only
/// after, sampling views round-robin over a seeded per-epoch shuffle.
pub fn train(
    scene_init: &SceneGaussians,
    views: &[TrainView],
    env_init: &EnvGrid,
    config: TrainConfig,
) -> Result<TrainResult> {
    if views.is_empty() {
        return Err(Error::Config("training needs at least one view".into()));
    }
    let mut state = TrainState::new(scene_init, env_init, config.clone());
    if config.t_total == 0 {
        return Ok(TrainResult {
            state,
            scene: scene_init.clone(),
            env: env_init.clone(),
            log: Vec::new(),
        });
    }
    let mut env = EnvironmentMap::prepare_default(state.env_grid())?;
    let mut log = Vec::with_capacity(config.t_total);

    let mut order: Vec<usize> = (0..views.len()).collect();
    let mut initial_l_rgb: Option<f64> = None;
    let mut over_threshold_run = 0usize;
    const DIVERGENCE_WINDOW: usize = 500;

    for t in 0..config.t_total {
        if t % views.len() == 0 {
            let epoch = t / views.len();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(epoch as u64));
            order.shuffle(&mut rng);
        }
        let view = &views[order[t % views.len()]];

        let scene = state.raw.to_scene();
        env.base = state.env_grid();
        env.refresh();

        let eval = evaluate_dual_branch(&scene, &env, view, t, &config)?;
        let raw_grads = state.raw.chain_gradients(&scene, &eval.merged);
        raw_grads.ensure_finite()?;
        let env_raw_grad = env_grad_through_rectifier(&state.env_params, &eval.env_grad);

        log.push(LossReport {
            iter: t,
            l_rgb: eval.l_rgb,
            l_clay: eval.l_clay,
            l_total: eval.l_total,
            grad_norm_pos: eval.merged.position_norm(),
            grad_norm_mat: eval.merged.material_norm(),
        });

        // divergence guard; the floor keeps near-converged starts from
        // tripping on small absolute fluctuations
        let threshold = 10.0 * initial_l_rgb.get_or_insert(eval.l_rgb).max(1e-2);
        if eval.l_rgb > threshold {
            over_threshold_run += 1;
            if over_threshold_run >= DIVERGENCE_WINDOW {
                return Err(Error::Diverged {
                    threshold,
                    window: DIVERGENCE_WINDOW,
                    iter: t,
                });
            }
        } else {
            over_threshold_run = 0;
        }

        // parameter update
        let mut flat_pos = state.raw.flatten_positions();
        let grad_pos = raw_grads.flatten_positions();
        state
            .adam_position
            .step(&mut flat_pos, &grad_pos, config.position_lr(t));
        state.raw.unflatten_positions(&flat_pos);

        let mut flat_scale = state.raw.flatten_scales();
        let grad_scale = raw_grads.flatten_scales();
        state
            .adam_scales
            .step(&mut flat_scale, &grad_scale, config.scale_lr(t));
        state.raw.unflatten_scales(&flat_scale);

        let mut flat_attr = state.raw.flatten_attributes();
        let grad_attr = raw_grads.flatten_attributes();
        state
            .adam_attributes
            .step(&mut flat_attr, &grad_attr, config.attributes_lr(t));
        state.raw.unflatten_attributes(&flat_attr);

        state
            .adam_env
            .step(&mut state.env_params.data, &env_raw_grad, config.env_lr(t));

        state.iter = t + 1;
        if config.stop_after_clay && state.iter >= config.t_clay {
            break;
        }
    }

    let scene = state.scene();
    let env_final = state.env_grid();
    Ok(TrainResult {
        state,
        scene,
        env: env_final,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_iterations_returns_init_unchanged() {
        let g = crate::scene::GaussianPrimitive {
            position: crate::Vec3::new(0.0, 0.0, 0.0),
            tangent_u: crate::Vec3::x(),
            tangent_v: crate::Vec3::y(),
            scale_u: 0.5,
            scale_v: 0.5,
            opacity: 0.9,
            albedo: crate::Vec3::repeat(0.5),
            metallic: 0.2,
            roughness: 0.7,
            clay_color: crate::Vec3::repeat(0.5),
            indirect_sh: [crate::Vec3::zeros(); crate::SH_COEFFS],
        };
        let scene = SceneGaussians::new(vec![g]);
        let env = EnvGrid::constant(16, 8, crate::Vec3::repeat(0.5));
        let cam = crate::scene::Camera::look_at(
            16,
            16,
            45.0,
            crate::Vec3::new(0.0, 0.0, -3.0),
            crate::Vec3::zeros(),
            crate::Vec3::y(),
        );
        let view = TrainView {
            camera: cam,
            rgb: ImageRgb::new(16, 16),
            clay: Some(ImageRgb::new(16, 16)),
            mask: None,
        };
        let config = TrainConfig {
            t_total: 0,
            ..TrainConfig::default()
        };
        let result = train(&scene, &[view], &env, config).unwrap();
        assert_eq!(result.scene, scene);
        assert!(result.log.is_empty());
        assert_eq!(result.env, env);
    }
}
