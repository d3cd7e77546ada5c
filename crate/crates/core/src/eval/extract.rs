//! Point extraction from trained scenes by depth back-projection.

use std::collections::HashSet;

use crate::scene::{Camera, PointCloud, SceneGaussians};
use crate::splat::render_gbuffer;
use crate::Vec3;

/// Foreground threshold on accumulated alpha for extraction.
const EXTRACT_ALPHA: f64 = 0.5;
/// Voxel resolution as a fraction of the scene radius.
const VOXEL_DIVISOR: f64 = 256.0;

/// Back-project every confident foreground pixel of every view into world
/// space, attach the composited normal, and deduplicate on a voxel grid.
pub fn extract_points(scene: &SceneGaussians, cameras: &[Camera]) -> PointCloud {
    let voxel = scene.bounding_radius() / VOXEL_DIVISOR;
    let mut occupied: HashSet<(i64, i64, i64)> = HashSet::new();
    let mut points = Vec::new();
    let mut normals = Vec::new();

    for cam in cameras {
        let gb = render_gbuffer(scene, cam);
        let origin = cam.center();
        for y in 0..gb.height {
            for x in 0..gb.width {
                let px = gb.pixel(x, y);
                if px.accum_alpha <= EXTRACT_ALPHA || px.normal == Vec3::zeros() {
                    continue;
                }
                let dir = cam.ray_dir(x as f64 + 0.5, y as f64 + 0.5);
                let p = origin + dir * px.depth;
                let key = (
                    (p.x / voxel).floor() as i64,
                    (p.y / voxel).floor() as i64,
                    (p.z / voxel).floor() as i64,
                );
                if occupied.insert(key) {
                    points.push(p);
                    normals.push(px.normal);
                }
            }
        }
    }

    PointCloud {
        points,
        normals: Some(normals),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::GaussianPrimitive;
    use crate::SH_COEFFS;

    #[test]
    fn empty_scene_extracts_nothing() {
        let cam = Camera::look_at(
            16,
            16,
            45.0,
            Vec3::new(0.0, 0.0, -3.0),
            Vec3::zeros(),
            Vec3::y(),
        );
        let cloud = extract_points(&SceneGaussians::default(), &[cam]);
        assert!(cloud.is_empty());
    }

    #[test]
    fn single_disk_points_lie_on_its_plane() {
        let g = GaussianPrimitive {
            position: Vec3::new(0.0, 0.0, 0.5),
            tangent_u: Vec3::x(),
            tangent_v: Vec3::y(),
            scale_u: 0.8,
            scale_v: 0.8,
            opacity: 1.0,
            albedo: Vec3::repeat(0.5),
            metallic: 0.0,
            roughness: 1.0,
            clay_color: Vec3::repeat(0.5),
            indirect_sh: [Vec3::zeros(); SH_COEFFS],
        };
        let scene = SceneGaussians::new(vec![g]);
        let cam = Camera::look_at(
            48,
            48,
            45.0,
            Vec3::new(0.3, -0.2, -3.0),
            Vec3::new(0.0, 0.0, 0.5),
            Vec3::y(),
        );
        let cloud = extract_points(&scene, &[cam]);
        assert!(cloud.len() > 50, "too few points: {}", cloud.len());
        for p in &cloud.points {
            // plane z = 0.5
            assert!(
                (p.z - 0.5).abs() < 1e-3,
                "point {p} off the disk plane"
            );
        }
    }
}
