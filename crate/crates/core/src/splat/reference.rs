//! Cull-free reference rasterizer: every pixel tests every Gaussian.
//!
//! Slow by design; exists so the tiled renderer can be checked bit-for-bit
//! against an implementation with no spatial data structures.

use crate::scene::{Camera, SceneGaussians};

use super::{rasterize_pixel, GBuffer, PlaneCache};

pub fn render_gbuffer_reference(scene: &SceneGaussians, camera: &Camera) -> GBuffer {
    let all: Vec<u32> = (0..scene.len() as u32).collect();
    let cache = PlaneCache::build(scene);
    let origin = camera.center();
    let mut pixels = Vec::with_capacity(camera.width * camera.height);
    let mut hits = Vec::new();
    for y in 0..camera.height {
        for x in 0..camera.width {
            let dir = camera.ray_dir(x as f64 + 0.5, y as f64 + 0.5);
            pixels.push(rasterize_pixel(scene, &cache, &all, origin, dir, &mut hits));
        }
    }
    GBuffer {
        width: camera.width,
        height: camera.height,
        pixels,
    }
}
