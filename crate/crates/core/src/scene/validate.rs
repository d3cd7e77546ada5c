//! Scene invariant checks. Violations are data, not errors: callers decide
//! whether to reject.

use super::camera::Camera;
use super::gaussian::{GaussianPrimitive, SceneGaussians};

/// One failed invariant, with the Gaussian index and field it names.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub field: &'static str,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "gaussian {}: {} ({})", self.index, self.message, self.field)
    }
}

fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

fn check_gaussian(index: usize, g: &GaussianPrimitive, out: &mut Vec<Violation>) {
    let mut push = |field: &'static str, message: String| {
        out.push(Violation {
            index,
            field,
            message,
        })
    };

    let all_finite = g.position.iter().all(|c| c.is_finite())
        && g.tangent_u.iter().all(|c| c.is_finite())
        && g.tangent_v.iter().all(|c| c.is_finite())
        && g.scale_u.is_finite()
        && g.scale_v.is_finite()
        && g.opacity.is_finite()
        && g.albedo.iter().all(|c| c.is_finite())
        && g.metallic.is_finite()
        && g.roughness.is_finite()
        && g.clay_color.iter().all(|c| c.is_finite())
        && g.indirect_sh.iter().all(|c| c.iter().all(|x| x.is_finite()));
    if !all_finite {
        push("finite", "non-finite parameter".into());
        return;
    }

    if (g.tangent_u.norm() - 1.0).abs() > 1e-6 {
        push("tangent_u", format!("non-unit tangent_u (|t_u| = {})", g.tangent_u.norm()));
    }
    if (g.tangent_v.norm() - 1.0).abs() > 1e-6 {
        push("tangent_v", format!("non-unit tangent_v (|t_v| = {})", g.tangent_v.norm()));
    }
    if g.tangent_u.cross(&g.tangent_v).norm() < 1e-6 {
        push("tangent_frame", "degenerate tangent frame".into());
    }
    if g.scale_u <= 0.0 {
        push("scale_u", format!("non-positive scale ({})", g.scale_u));
    }
    if g.scale_v <= 0.0 {
        push("scale_v", format!("non-positive scale ({})", g.scale_v));
    }
    if !in_unit(g.opacity) {
        push("opacity", format!("opacity {} outside [0,1]", g.opacity));
    }
    if !g.albedo.iter().all(|c| in_unit(*c)) {
        push("albedo", "albedo outside [0,1]".into());
    }
    if !in_unit(g.metallic) {
        push("metallic", format!("metallic {} outside [0,1]", g.metallic));
    }
    if !in_unit(g.roughness) {
        push("roughness", format!("roughness {} outside [0,1]", g.roughness));
    }
    if !g.clay_color.iter().all(|c| in_unit(*c)) {
        push("clay_color", "clay color outside [0,1]".into());
    }
}

/// Check every Gaussian of a scene against the type invariants.
pub fn validate_scene(scene: &SceneGaussians) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, g) in scene.gaussians.iter().enumerate() {
        check_gaussian(i, g, &mut out);
    }
    out
}

/// Camera invariant check; the index is always 0.
pub fn validate_camera(cam: &Camera) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field: &'static str, message: String| {
        out.push(Violation {
            index: 0,
            field,
            message,
        })
    };
    let rt = cam.rotation * cam.rotation.transpose();
    if (rt - crate::Mat3::identity()).norm() > 1e-6 {
        push("rotation", "rotation is not orthonormal".into());
    }
    if cam.fx <= 0.0 || cam.fy <= 0.0 {
        push("focal", format!("non-positive focal ({}, {})", cam.fx, cam.fy));
    }
    if !(0.0..cam.width as f64).contains(&cam.cx) || !(0.0..cam.height as f64).contains(&cam.cy) {
        push("principal_point", "principal point outside image".into());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Vec3, SH_COEFFS};

    fn unit_disk() -> GaussianPrimitive {
        GaussianPrimitive {
            position: Vec3::zeros(),
            tangent_u: Vec3::x(),
            tangent_v: Vec3::y(),
            scale_u: 1.0,
            scale_v: 1.0,
            opacity: 0.5,
            albedo: Vec3::new(0.5, 0.5, 0.5),
            metallic: 0.0,
            roughness: 1.0,
            clay_color: Vec3::new(0.5, 0.5, 0.5),
            indirect_sh: [Vec3::zeros(); SH_COEFFS],
        }
    }

    #[test]
    fn canonical_disk_is_clean() {
        let scene = SceneGaussians::new(vec![unit_disk()]);
        assert!(validate_scene(&scene).is_empty());
    }

    #[test]
    fn degenerate_frame_detected() {
        let mut g = unit_disk();
        g.tangent_v = g.tangent_u;
        let v = validate_scene(&SceneGaussians::new(vec![g]));
        assert!(v.iter().any(|v| v.field == "tangent_frame"), "{v:?}");
    }

    #[test]
    fn zero_scale_detected() {
        let mut g = unit_disk();
        g.scale_u = 0.0;
        let v = validate_scene(&SceneGaussians::new(vec![g]));
        assert!(v.iter().any(|v| v.field == "scale_u"));
        assert!(v[0].message.contains("non-positive scale"));
    }

    #[test]
    fn opacity_out_of_range_names_field() {
        let mut g = unit_disk();
        g.opacity = 1.2;
        let v = validate_scene(&SceneGaussians::new(vec![g]));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "opacity");
    }
}
