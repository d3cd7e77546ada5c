//! Real spherical harmonics, bands l = 0..=2.

use crate::{Vec3, SH_COEFFS};

// basis normalization constants
const C0: f64 = 0.282_094_791_773_878_14; // 0.5 sqrt(1/pi)
const C1: f64 = 0.488_602_511_902_919_9; // sqrt(3/(4 pi))
const C2: f64 = 1.092_548_430_592_079_2; // sqrt(15/(4 pi))
const C3: f64 = 0.315_391_565_252_520_05; // 0.25 sqrt(5/pi)
const C4: f64 = 0.546_274_215_296_039_6; // 0.25 sqrt(15/pi)

/// Cosine-lobe convolution factors per coefficient (pi, 2pi/3, pi/4 by band).
pub const COSINE_LOBE: [f64; SH_COEFFS] = [
    std::f64::consts::PI,
    2.094_395_102_393_195_4,
    2.094_395_102_393_195_4,
    2.094_395_102_393_195_4,
    std::f64::consts::FRAC_PI_4,
    std::f64::consts::FRAC_PI_4,
    std::f64::consts::FRAC_PI_4,
    std::f64::consts::FRAC_PI_4,
    std::f64::consts::FRAC_PI_4,
];

/// Evaluate the 9 basis functions at a unit direction.
#[inline]
pub fn sh_basis(d: Vec3) -> [f64; SH_COEFFS] {
    let (x, y, z) = (d.x, d.y, d.z);
    [
        C0,
        C1 * y,
        C1 * z,
        C1 * x,
        C2 * x * y,
        C2 * y * z,
        C3 * (3.0 * z * z - 1.0),
        C2 * x * z,
        C4 * (x * x - y * y),
    ]
}

/// Gradient of each basis function w.r.t. the direction components.
#[inline]
pub fn sh_basis_grad(d: Vec3) -> [Vec3; SH_COEFFS] {
    let (x, y, z) = (d.x, d.y, d.z);
    [
        Vec3::zeros(),
        Vec3::new(0.0, C1, 0.0),
        Vec3::new(0.0, 0.0, C1),
        Vec3::new(C1, 0.0, 0.0),
        Vec3::new(C2 * y, C2 * x, 0.0),
        Vec3::new(0.0, C2 * z, C2 * y),
        Vec3::new(0.0, 0.0, C3 * 6.0 * z),
        Vec3::new(C2 * z, 0.0, C2 * x),
        Vec3::new(C4 * 2.0 * x, -C4 * 2.0 * y, 0.0),
    ]
}

/// Evaluate an RGB SH expansion at a direction, clamped at zero per
/// channel (negative lobes carry no radiance).
pub fn eval_indirect(coeffs: &[Vec3; SH_COEFFS], dir: Vec3) -> Vec3 {
    let basis = sh_basis(dir);
    let mut out = Vec3::zeros();
    for (c, b) in coeffs.iter().zip(basis.iter()) {
        out += c * *b;
    }
    out.map(|v| v.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fib_dirs(n: usize) -> Vec<Vec3> {
        let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
        (0..n)
            .map(|i| {
                let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - y * y).sqrt();
                let phi = 2.0 * std::f64::consts::PI * (i as f64 / golden).fract();
                Vec3::new(r * phi.cos(), y, r * phi.sin())
            })
            .collect()
    }

    #[test]
    fn basis_is_orthonormal() {
        let dirs = fib_dirs(20000);
        let w = 4.0 * std::f64::consts::PI / dirs.len() as f64;
        let mut gram = [[0.0; SH_COEFFS]; SH_COEFFS];
        for d in &dirs {
            let b = sh_basis(*d);
            for i in 0..SH_COEFFS {
                for j in 0..SH_COEFFS {
                    gram[i][j] += b[i] * b[j] * w;
                }
            }
        }
        for i in 0..SH_COEFFS {
            for j in 0..SH_COEFFS {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(gram[i][j], expect, epsilon = 5e-3);
            }
        }
    }

    #[test]
    fn dc_only_expansion_is_constant() {
        let mut coeffs = [Vec3::zeros(); SH_COEFFS];
        coeffs[0] = Vec3::new(2.0, 1.0, 0.5);
        for d in fib_dirs(32) {
            let v = eval_indirect(&coeffs, d);
            assert_relative_eq!(v.x, 2.0 * C0, epsilon = 1e-12);
            assert_relative_eq!(v.z, 0.5 * C0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_coeffs_evaluate_to_zero() {
        let coeffs = [Vec3::zeros(); SH_COEFFS];
        assert_eq!(eval_indirect(&coeffs, Vec3::y()), Vec3::zeros());
    }

    #[test]
    fn rotation_consistency() {
        // projecting a smooth function, rotating coefficients via
        // re-projection, and evaluating at the rotated direction agrees
        // with evaluating the original at the original direction
        let f = |d: Vec3| 0.5 + 0.3 * d.x + 0.2 * d.y * d.z;
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -0.7, 1.1);
        let dirs = fib_dirs(40000);
        let w = 4.0 * std::f64::consts::PI / dirs.len() as f64;
        let mut coeffs = [Vec3::zeros(); SH_COEFFS];
        let mut coeffs_rot = [Vec3::zeros(); SH_COEFFS];
        for d in &dirs {
            let b = sh_basis(*d);
            let b_val = f(*d);
            // rotated function g(d) = f(R^-1 d)
            let g_val = f(rot.inverse() * *d);
            for k in 0..SH_COEFFS {
                coeffs[k].x += b_val * b[k] * w;
                coeffs_rot[k].x += g_val * b[k] * w;
            }
        }
        for probe in fib_dirs(17) {
            let orig = eval_indirect(&coeffs, probe).x;
            let rotated = eval_indirect(&coeffs_rot, rot * probe).x;
            assert_relative_eq!(orig, rotated, epsilon = 1e-4);
        }
    }

    #[test]
    fn basis_gradient_matches_fd() {
        let d = Vec3::new(0.3, -0.5, 0.81).normalize();
        let grads = sh_basis_grad(d);
        let h = 1e-6;
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            let plus = sh_basis(d + e);
            let minus = sh_basis(d - e);
            for i in 0..SH_COEFFS {
                let fd = (plus[i] - minus[i]) / (2.0 * h);
                assert_relative_eq!(grads[i][k], fd, epsilon = 1e-8);
            }
        }
    }
}
