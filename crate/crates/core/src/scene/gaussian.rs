//! Oriented 2D Gaussian disk primitives and their parameterization.
//!
//! A disk lives on a local tangent plane: point(u,v) = p + s_u*t_u*u +
//! s_v*t_v*v, with a unit weight exp(-(u^2+v^2)/2) over the plane. The
//! surface normal is always derived as normalize(t_u x t_v).
//!
//! Two spaces exist for every bounded field. The *natural* space is what
//! files and the public API carry (opacity in [0,1], positive scales,
//! orthonormal tangents). The *raw* space is what the optimizer updates:
//! logits for [0,1] fields, log scales, and an unconstrained 3x2 tangent
//! matrix that is re-orthonormalized (Gram-Schmidt, t_u first) whenever a
//! natural primitive is materialized.

use crate::{Vec3, SH_COEFFS};

/// Floats per serialized Gaussian record (see [`crate::scene::io`]).
pub const GAUSSIAN_RECORD_FLOATS: usize = 47;

/// One oriented 2D Gaussian disk with shading attributes, natural space.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrimitive {
    pub position: Vec3,
    pub tangent_u: Vec3,
    pub tangent_v: Vec3,
    pub scale_u: f64,
    pub scale_v: f64,
    pub opacity: f64,
    pub albedo: Vec3,
    pub metallic: f64,
    pub roughness: f64,
    pub clay_color: Vec3,
    /// Indirect radiance SH coefficients, one RGB triple per basis function.
    pub indirect_sh: [Vec3; SH_COEFFS],
}

impl GaussianPrimitive {
    /// Derived surface normal `normalize(t_u x t_v)`.
    #[inline]
    pub fn normal(&self) -> Vec3 {
        self.tangent_u.cross(&self.tangent_v).normalize()
    }

    /// Point on the disk plane at local coordinates (u, v).
    #[inline]
    pub fn disk_point(&self, u: f64, v: f64) -> Vec3 {
        self.position + self.tangent_u * (self.scale_u * u) + self.tangent_v * (self.scale_v * v)
    }
}

/// Gaussian weight over the local plane, `exp(-(u^2+v^2)/2)` in (0,1].
#[inline]
pub fn gaussian_weight(u: f64, v: f64) -> f64 {
    (-(u * u + v * v) / 2.0).exp()
}

/// Squared local radius beyond which a disk contributes nothing (3 sigma).
pub const SUPPORT_CUTOFF_SQ: f64 = 9.0;

/// All Gaussians of a scene.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneGaussians {
    pub gaussians: Vec<GaussianPrimitive>,
}

impl SceneGaussians {
    pub fn new(gaussians: Vec<GaussianPrimitive>) -> Self {
        Self { gaussians }
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn centroid(&self) -> Vec3 {
        if self.is_empty() {
            return Vec3::zeros();
        }
        let mut c = Vec3::zeros();
        for g in &self.gaussians {
            c += g.position;
        }
        c / self.len() as f64
    }

    /// Radius of the bounding sphere around the centroid; 1.0 for scenes
    /// without extent so downstream step sizes stay finite.
    pub fn bounding_radius(&self) -> f64 {
        let c = self.centroid();
        let r = self
            .gaussians
            .iter()
            .map(|g| (g.position - c).norm())
            .fold(0.0, f64::max);
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse sigmoid, clamped away from the asymptotes.
#[inline]
pub fn logit(y: f64) -> f64 {
    let y = y.clamp(1e-9, 1.0 - 1e-9);
    (y / (1.0 - y)).ln()
}

/// d sigmoid(x) / dx expressed through the output value.
#[inline]
pub fn sigmoid_grad_from_value(y: f64) -> f64 {
    y * (1.0 - y)
}

/// Orthonormalize a raw 3x2 tangent matrix: t_u = normalize(w_u),
/// t_v = normalize(w_v - (w_v . t_u) t_u).
pub fn gram_schmidt(w_u: Vec3, w_v: Vec3) -> (Vec3, Vec3) {
    let t_u = w_u.normalize();
    let t_v = (w_v - t_u * w_v.dot(&t_u)).normalize();
    (t_u, t_v)
}

/// Backward through [`gram_schmidt`]: given gradients w.r.t. the
/// orthonormal outputs, return gradients w.r.t. the raw columns.
pub fn gram_schmidt_backward(
    w_u: Vec3,
    w_v: Vec3,
    d_t_u: Vec3,
    d_t_v: Vec3,
) -> (Vec3, Vec3) {
    let nu = w_u.norm();
    let t_u = w_u / nu;
    let proj = w_v.dot(&t_u);
    let r = w_v - t_u * proj; // un-normalized t_v
    let nr = r.norm();
    let t_v = r / nr;

    // t_v = r / |r|  =>  dL/dr = (I - t_v t_v^T) / |r| * dL/dt_v
    let d_r = (d_t_v - t_v * t_v.dot(&d_t_v)) / nr;
    // r = w_v - (w_v . t_u) t_u
    let d_w_v = d_r - t_u * t_u.dot(&d_r);
    // through t_u in r: dr = -(w_v . dt_u) t_u - (w_v . t_u) dt_u
    let d_t_u_total = d_t_u - (d_r * proj + w_v * t_u.dot(&d_r));
    // t_u = w_u / |w_u|
    let d_w_u = (d_t_u_total - t_u * t_u.dot(&d_t_u_total)) / nu;
    (d_w_u, d_w_v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn disk_point_center_is_position() {
        let g = test_gaussian();
        assert_eq!(g.disk_point(0.0, 0.0), g.position);
    }

    #[test]
    fn disk_point_axis_aligned() {
        let g = GaussianPrimitive {
            position: Vec3::zeros(),
            tangent_u: Vec3::x(),
            tangent_v: Vec3::y(),
            scale_u: 2.0,
            scale_v: 1.0,
            ..test_gaussian()
        };
        assert_eq!(g.disk_point(1.0, 1.0), Vec3::new(2.0, 1.0, 0.0));
    }

    #[test]
    fn disk_point_norm_identity() {
        // |disk_point(g,1,0) - p| = s_u for any orthonormal frame
        let mut rng = 77u64;
        for _ in 0..20 {
            let g = random_gaussian(&mut rng);
            let d = (g.disk_point(1.0, 0.0) - g.position).norm();
            assert_relative_eq!(d, g.scale_u, epsilon = 1e-12);
        }
    }

    #[test]
    fn weight_closed_forms() {
        assert_eq!(gaussian_weight(0.0, 0.0), 1.0);
        assert_relative_eq!(gaussian_weight(1.0, 0.0), (-0.5f64).exp(), epsilon = 1e-15);
        let mut rng = 3u64;
        for _ in 0..50 {
            let u = next_unit(&mut rng) * 4.0 - 2.0;
            let v = next_unit(&mut rng) * 4.0 - 2.0;
            assert_eq!(gaussian_weight(u, v), gaussian_weight(-u, -v));
        }
    }

    #[test]
    fn gram_schmidt_orthonormal() {
        let mut rng = 11u64;
        for _ in 0..50 {
            let w_u = random_vec(&mut rng);
            let w_v = random_vec(&mut rng);
            if w_u.cross(&w_v).norm() < 1e-3 {
                continue;
            }
            let (t_u, t_v) = gram_schmidt(w_u, w_v);
            assert_relative_eq!(t_u.norm(), 1.0, epsilon = 1e-12);
            assert_relative_eq!(t_v.norm(), 1.0, epsilon = 1e-12);
            assert_relative_eq!(t_u.dot(&t_v), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gram_schmidt_backward_matches_finite_differences() {
        let mut rng = 5u64;
        for _ in 0..10 {
            let w_u = random_vec(&mut rng);
            let w_v = random_vec(&mut rng);
            if w_u.cross(&w_v).norm() < 1e-2 {
                continue;
            }
            let g_u = random_vec(&mut rng);
            let g_v = random_vec(&mut rng);
            let loss = |a: Vec3, b: Vec3| {
                let (t_u, t_v) = gram_schmidt(a, b);
                t_u.dot(&g_u) + t_v.dot(&g_v)
            };
            let (d_w_u, d_w_v) = gram_schmidt_backward(w_u, w_v, g_u, g_v);
            let h = 1e-6;
            for k in 0..3 {
                let mut e = Vec3::zeros();
                e[k] = h;
                let fd_u = (loss(w_u + e, w_v) - loss(w_u - e, w_v)) / (2.0 * h);
                let fd_v = (loss(w_u, w_v + e) - loss(w_u, w_v - e)) / (2.0 * h);
                assert_relative_eq!(d_w_u[k], fd_u, epsilon = 1e-5, max_relative = 1e-5);
                assert_relative_eq!(d_w_v[k], fd_v, epsilon = 1e-5, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn sigmoid_logit_inverse() {
        for &y in &[0.01, 0.3, 0.5, 0.77, 0.99] {
            assert_relative_eq!(sigmoid(logit(y)), y, epsilon = 1e-12);
        }
    }

    fn next_unit(state: &mut u64) -> f64 {
        // xorshift, test-only
        *state ^= *state << 13;
        *state ^= *state >> 7;
        *state ^= *state << 17;
        (*state >> 11) as f64 / (1u64 << 53) as f64
    }

    fn random_vec(state: &mut u64) -> Vec3 {
        Vec3::new(
            next_unit(state) * 2.0 - 1.0,
            next_unit(state) * 2.0 - 1.0,
            next_unit(state) * 2.0 - 1.0,
        )
    }

    fn random_gaussian(state: &mut u64) -> GaussianPrimitive {
        let (t_u, t_v) = gram_schmidt(random_vec(state), random_vec(state));
        GaussianPrimitive {
            position: random_vec(state),
            tangent_u: t_u,
            tangent_v: t_v,
            scale_u: 0.1 + next_unit(state),
            scale_v: 0.1 + next_unit(state),
            ..test_gaussian()
        }
    }

    fn test_gaussian() -> GaussianPrimitive {
        GaussianPrimitive {
            position: Vec3::new(0.0, 0.0, 2.0),
            tangent_u: Vec3::x(),
            tangent_v: Vec3::y(),
            scale_u: 1.0,
            scale_v: 1.0,
            opacity: 0.9,
            albedo: Vec3::new(0.5, 0.5, 0.5),
            metallic: 0.0,
            roughness: 1.0,
            clay_color: Vec3::new(0.5, 0.5, 0.5),
            indirect_sh: [Vec3::zeros(); SH_COEFFS],
        }
    }
}
