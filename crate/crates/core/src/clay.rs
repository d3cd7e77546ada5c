//! Clay branch: matte supervision targets and the clay render.
//!
//! The clay oracle renders ground-truth geometry with all materials
//! forced matte (metallic 0, roughness 1, plaster-white albedo, no
//! indirect lobe), standing in for an image-to-clay translator on
//! synthetic scenes. `corrupt_clay` injects seeded noise plus a
//! low-frequency bias so translator error can be emulated in tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::img::ImageRgb;
use crate::optimize::clay_channel_image;
use crate::scene::{Camera, SceneGaussians};
use crate::shading::{shade, EnvironmentMap};
use crate::splat::render_gbuffer;
use crate::{Vec3, SH_COEFFS};

/// Plaster-white clay albedo: near-white with a slight warm cast.
pub const CLAY_ALBEDO: Vec3 = Vec3::new(0.85, 0.85, 0.83);

/// Copy of a scene with every material forced to matte clay. Geometry,
/// opacity and the clay color channel are untouched.
pub fn clayify(scene: &SceneGaussians) -> SceneGaussians {
    let mut out = scene.clone();
    for g in &mut out.gaussians {
        g.metallic = 0.0;
        g.roughness = 1.0;
        g.albedo = CLAY_ALBEDO;
        g.indirect_sh = [Vec3::zeros(); SH_COEFFS];
    }
    out
}

/// Pseudo ground-truth clay image: the fully shaded render of the
/// clay-forced scene.
pub fn clay_oracle(gt_scene: &SceneGaussians, camera: &Camera, env: &EnvironmentMap) -> ImageRgb {
    let clay_scene = clayify(gt_scene);
    let gbuffer = render_gbuffer(&clay_scene, camera);
    shade(&gbuffer, env, &clay_scene, camera).0
}

/// The clay branch render: alpha-composited per-Gaussian clay colors,
/// i.e. the clay channel of the attribute G-buffer. View-independent in
/// the attributes; only the blend weights change with the camera.
pub fn render_clay(scene: &SceneGaussians, camera: &Camera) -> ImageRgb {
    clay_channel_image(&render_gbuffer(scene, camera))
}

/// Emulated translator error: seeded Gaussian pixel noise plus a smooth
/// bias field, clamped back to [0,1]. `sigma == 0` is the exact identity.
pub fn corrupt_clay(image: &ImageRgb, sigma: f64, seed: u64) -> ImageRgb {
    if sigma == 0.0 {
        return image.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // two low-order cosine modes per channel, amplitudes within sigma/2
    let modes: Vec<[f64; 4]> = (0..6)
        .map(|_| {
            [
                (rng.gen::<f64>() - 0.5) * sigma,
                rng.gen::<f64>() * 2.0 + 0.5,
                rng.gen::<f64>() * 2.0 + 0.5,
                rng.gen::<f64>() * std::f64::consts::TAU,
            ]
        })
        .collect();
    let mut out = image.clone();
    let (w, h) = (image.width as f64, image.height as f64);
    for y in 0..image.height {
        for x in 0..image.width {
            for c in 0..3 {
                let idx = (y * image.width + x) * 3 + c;
                // Box-Muller from two uniforms
                let u1: f64 = rng.gen::<f64>().max(1e-12);
                let u2: f64 = rng.gen::<f64>();
                let noise = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos() * sigma;
                let mut bias = 0.0;
                for m in &modes[c * 2..c * 2 + 2] {
                    let phase = m[1] * std::f64::consts::PI * x as f64 / w
                        + m[2] * std::f64::consts::PI * y as f64 / h
                        + m[3];
                    bias += 0.5 * m[0] * phase.cos();
                }
                out.data[idx] = (out.data[idx] + noise + bias).clamp(0.0, 1.0);
            }
        }
    }
    out
}
