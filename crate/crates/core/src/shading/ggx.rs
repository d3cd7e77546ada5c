//! GGX microfacet terms: normal distribution, height-correlated Smith
//! masking-shadowing, Schlick Fresnel, and the importance sampler shared
//! by the LUT bake, the prefilter, and the Monte-Carlo oracles.
//!
//! Throughout, `alpha_g = roughness^2`.

use crate::Vec3;

/// GGX normal distribution evaluated from cos(theta_h) = N.H.
#[inline]
pub fn ggx_d_from_cos(cos_nh: f64, roughness: f64) -> f64 {
    let a = roughness * roughness;
    let a2 = a * a;
    let denom = cos_nh * cos_nh * (a2 - 1.0) + 1.0;
    a2 / (std::f64::consts::PI * denom * denom)
}

/// GGX normal distribution D(N, H).
#[inline]
pub fn ggx_d(n: Vec3, h: Vec3, roughness: f64) -> f64 {
    ggx_d_from_cos(n.dot(&h), roughness)
}

/// Height-correlated Smith visibility from the two cosines.
#[inline]
pub fn smith_g_from_cos(cos_ni: f64, cos_no: f64, roughness: f64) -> f64 {
    let a = roughness * roughness;
    let a2 = a * a;
    let lo = cos_no * (a2 + (1.0 - a2) * cos_ni * cos_ni).sqrt();
    let li = cos_ni * (a2 + (1.0 - a2) * cos_no * cos_no).sqrt();
    2.0 * cos_ni * cos_no / (lo + li)
}

/// Height-correlated Smith G(N, omega_i, omega_o).
#[inline]
pub fn smith_g(n: Vec3, w_i: Vec3, w_o: Vec3, roughness: f64) -> f64 {
    smith_g_from_cos(n.dot(&w_i), n.dot(&w_o), roughness)
}

/// Schlick Fresnel approximation.
#[inline]
pub fn fresnel_schlick(f0: Vec3, cos_theta: f64) -> Vec3 {
    let c = (1.0 - cos_theta).clamp(0.0, 1.0).powi(5);
    f0 + (Vec3::new(1.0, 1.0, 1.0) - f0) * c
}

/// Full specular BRDF f_s = D G F / (4 (N.wo)(N.wi)).
pub fn specular_brdf(n: Vec3, w_i: Vec3, w_o: Vec3, f0: Vec3, roughness: f64) -> Vec3 {
    let h = (w_i + w_o).normalize();
    let d = ggx_d(n, h, roughness);
    let g = smith_g(n, w_i, w_o, roughness);
    let f = fresnel_schlick(f0, w_o.dot(&h).clamp(0.0, 1.0));
    f * (d * g / (4.0 * n.dot(&w_o).max(1e-9) * n.dot(&w_i).max(1e-9)))
}

/// Van der Corput radical inverse, base 2.
#[inline]
fn radical_inverse_vdc(mut bits: u32) -> f64 {
    bits = bits.rotate_right(16);
    bits = ((bits & 0x55555555) << 1) | ((bits & 0xAAAAAAAA) >> 1);
    bits = ((bits & 0x33333333) << 2) | ((bits & 0xCCCCCCCC) >> 2);
    bits = ((bits & 0x0F0F0F0F) << 4) | ((bits & 0xF0F0F0F0) >> 4);
    bits = ((bits & 0x00FF00FF) << 8) | ((bits & 0xFF00FF00) >> 8);
    bits as f64 * 2.328_306_436_538_696e-10
}

/// Deterministic low-discrepancy point set on the unit square.
#[inline]
pub fn hammersley(i: u32, n: u32) -> (f64, f64) {
    (i as f64 / n as f64, radical_inverse_vdc(i))
}

/// Orthonormal frame with `n` as the third axis.
#[inline]
pub fn tangent_frame(n: Vec3) -> (Vec3, Vec3) {
    let up = if n.z.abs() < 0.999 {
        Vec3::z()
    } else {
        Vec3::x()
    };
    let t = up.cross(&n).normalize();
    let b = n.cross(&t);
    (t, b)
}

/// Importance-sample a GGX half-vector around `n`.
/// pdf(h) = D(h) (n.h).
#[inline]
pub fn sample_ggx_half_vector(xi: (f64, f64), n: Vec3, roughness: f64) -> Vec3 {
    let a = roughness * roughness;
    let phi = 2.0 * std::f64::consts::PI * xi.0;
    let cos_theta = ((1.0 - xi.1) / (1.0 + (a * a - 1.0) * xi.1)).max(0.0).sqrt();
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let local = Vec3::new(sin_theta * phi.cos(), sin_theta * phi.sin(), cos_theta);
    let (t, b) = tangent_frame(n);
    t * local.x + b * local.y + n * local.z
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn d_closed_forms() {
        // N = H, roughness 1: alpha = 1, denom = 1 -> D = 1/pi
        let n = Vec3::z();
        assert_relative_eq!(ggx_d(n, n, 1.0), 1.0 / std::f64::consts::PI, epsilon = 1e-15);
        // N.H = 0: D = a2/pi
        let h = Vec3::x();
        for &r in &[0.2, 0.5, 0.9] {
            let a2 = (r * r) * (r * r);
            assert_relative_eq!(ggx_d(n, h, r), a2 / std::f64::consts::PI, epsilon = 1e-15);
        }
    }

    #[test]
    fn d_normalizes_over_hemisphere() {
        // integral of D(h) (n.h) dh == 1; integrate in x = cos^2(theta)
        // with stratified-jittered samples (the integrand is smooth in x)
        for &r in &[0.1f64, 0.5, 1.0] {
            let n = 100_000u64;
            let mut state = 0x9e3779b97f4a7c15u64 ^ r.to_bits();
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let mut sum = 0.0;
            for i in 0..n {
                let x = (i as f64 + next()) / n as f64; // cos^2 theta
                sum += ggx_d_from_cos(x.sqrt(), r);
            }
            // d(omega) cos(theta) = pi dx after substitution
            let integral = std::f64::consts::PI * sum / n as f64;
            assert!(
                (integral - 1.0).abs() < 0.02,
                "D normalization {integral} for roughness {r}"
            );
        }
    }

    #[test]
    fn smith_limits() {
        let n = Vec3::z();
        let w = Vec3::new(0.3, 0.2, 0.9).normalize();
        // smooth limit
        assert_relative_eq!(smith_g(n, w, w, 1e-6), 1.0, epsilon = 1e-6);
        // normal incidence at roughness 1 (regression value of the chosen
        // height-correlated form)
        assert_relative_eq!(smith_g(n, n, n, 1.0), 1.0, epsilon = 1e-12);
        // non-increasing in roughness
        let w_i = Vec3::new(-0.5, 0.1, 0.6).normalize();
        let w_o = Vec3::new(0.4, 0.3, 0.85).normalize();
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let r = 0.05 + 0.95 * k as f64 / 19.0;
            let g = smith_g(n, w_i, w_o, r);
            assert!(g <= prev + 1e-12, "G increased with roughness");
            assert!(g > 0.0 && g <= 1.0);
            prev = g;
        }
    }

    #[test]
    fn fresnel_closed_forms() {
        let f0 = Vec3::new(0.04, 0.04, 0.04);
        assert_eq!(fresnel_schlick(f0, 1.0), f0);
        let grazing = fresnel_schlick(f0, 0.0);
        assert_relative_eq!(grazing.x, 1.0, epsilon = 1e-12);
        let mid = fresnel_schlick(f0, 0.5);
        assert_relative_eq!(mid.x, 0.04 + 0.96 * 0.5f64.powi(5), epsilon = 1e-12);
        assert_relative_eq!(mid.x, 0.07, epsilon = 1e-12);
    }

    #[test]
    fn ggx_sampler_matches_density() {
        // histogram check: fraction of samples with cos(theta_h) above a
        // threshold matches the analytic CDF of pdf = D cos(theta)
        let r: f64 = 0.5;
        let n = Vec3::z();
        let count = 20000u32;
        let threshold = 0.9;
        let mut above = 0;
        for i in 0..count {
            let h = sample_ggx_half_vector(hammersley(i, count), n, r);
            if h.z > threshold {
                above += 1;
            }
        }
        // from the sampler's inverse CDF: P(cos > c) = (1 - c^2) / (1 + (a2 - 1) c^2)
        let a2v = (r * r) * (r * r);
        let c2 = threshold * threshold;
        let expected = (1.0 - c2) / (c2 * (a2v - 1.0) + 1.0);
        let got = above as f64 / count as f64;
        assert_relative_eq!(got, expected, max_relative = 0.05);
    }
}
