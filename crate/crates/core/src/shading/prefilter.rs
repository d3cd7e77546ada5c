//! Environment prefiltering and irradiance projection.
//!
//! Each mip level is a fixed sparse linear operator applied to the base
//! map: texel rows are baked once from GGX importance sampling with a
//! deterministic Hammersley pattern, then re-applied whenever the learned
//! base radiance changes. Keeping the operator linear makes the backward
//! pass an exact transpose and keeps finite-difference checks honest.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::scene::EnvGrid;
use crate::{Vec3, SH_COEFFS};

use super::ggx::{hammersley, sample_ggx_half_vector};
use super::sh::{sh_basis, COSINE_LOBE};

/// Sparse linear map from base texels to one mip's texels.
#[derive(Debug, Clone)]
pub struct PrefilterOp {
    pub width: usize,
    pub height: usize,
    /// One row per output texel: (base texel index, coefficient), sorted.
    rows: Vec<Vec<(u32, f64)>>,
}

fn bilinear_taps(grid_w: usize, grid_h: usize, dir: Vec3) -> [(usize, f64); 4] {
    // mirror of EnvGrid::tap_indices for operator construction
    let phi = dir.x.atan2(dir.z);
    let theta = dir.y.clamp(-1.0, 1.0).acos();
    let fu = (phi / (2.0 * std::f64::consts::PI) + 0.5) * grid_w as f64 - 0.5;
    let fv = theta / std::f64::consts::PI * grid_h as f64 - 0.5;
    let c0 = fu.floor() as isize;
    let r0f = fv.floor();
    let wu = fu - c0 as f64;
    let wv = fv - r0f;
    let h = grid_h as isize;
    let r0 = (r0f as isize).clamp(0, h - 1);
    let r1 = (r0f as isize + 1).clamp(0, h - 1);
    let wrap = |c: isize| c.rem_euclid(grid_w as isize) as usize;
    let idx = |c: usize, r: isize| r as usize * grid_w + c;
    [
        (idx(wrap(c0), r0), (1.0 - wu) * (1.0 - wv)),
        (idx(wrap(c0 + 1), r0), wu * (1.0 - wv)),
        (idx(wrap(c0), r1), (1.0 - wu) * wv),
        (idx(wrap(c0 + 1), r1), wu * wv),
    ]
}

impl PrefilterOp {
    /// Build the GGX convolution operator for one roughness level.
    pub fn build(width: usize, height: usize, roughness: f64, samples: u32) -> Self {
        let probe = EnvGrid::new(width, height);
        let rows: Vec<Vec<(u32, f64)>> = (0..width * height)
            .into_par_iter()
            .map(|t| {
                let col = t % width;
                let row = t / width;
                let n = probe.texel_dir(col, row);
                let mut acc: HashMap<u32, f64> = HashMap::new();
                let mut weight_sum = 0.0;
                for s in 0..samples {
                    let h = sample_ggx_half_vector(hammersley(s, samples), n, roughness);
                    let l = h * (2.0 * n.dot(&h)) - n;
                    let cos_l = n.dot(&l);
                    if cos_l <= 0.0 {
                        continue;
                    }
                    for (tap, w) in bilinear_taps(width, height, l) {
                        *acc.entry(tap as u32).or_insert(0.0) += w * cos_l;
                    }
                    weight_sum += cos_l;
                }
                if weight_sum <= 0.0 {
                    // degenerate (never happens for roughness > 0); identity
                    return vec![(t as u32, 1.0)];
                }
                let mut row_entries: Vec<(u32, f64)> = acc
                    .into_iter()
                    .map(|(k, v)| (k, v / weight_sum))
                    .collect();
                row_entries.sort_unstable_by_key(|(k, _)| *k);
                row_entries
            })
            .collect();
        Self {
            width,
            height,
            rows,
        }
    }

    pub fn apply(&self, base: &EnvGrid) -> EnvGrid {
        assert_eq!((base.width, base.height), (self.width, self.height));
        let mut out = EnvGrid::new(self.width, self.height);
        for (t, row) in self.rows.iter().enumerate() {
            let mut v = Vec3::zeros();
            for &(src, c) in row {
                let s = src as usize * 3;
                v += Vec3::new(base.data[s], base.data[s + 1], base.data[s + 2]) * c;
            }
            out.data[t * 3] = v.x;
            out.data[t * 3 + 1] = v.y;
            out.data[t * 3 + 2] = v.z;
        }
        out
    }

    /// Accumulate the transpose action: d_base += op^T d_mip.
    pub fn apply_transpose(&self, d_mip: &[Vec3], d_base: &mut [Vec3]) {
        for (t, row) in self.rows.iter().enumerate() {
            let g = d_mip[t];
            if g == Vec3::zeros() {
                continue;
            }
            for &(src, c) in row {
                d_base[src as usize] += g * c;
            }
        }
    }
}

/// Project a radiance grid onto the 9-coefficient SH basis.
pub fn project_irradiance_sh(base: &EnvGrid) -> [Vec3; SH_COEFFS] {
    let mut coeffs = [Vec3::zeros(); SH_COEFFS];
    for row in 0..base.height {
        let sa = base.texel_solid_angle(row);
        for col in 0..base.width {
            let b = sh_basis(base.texel_dir(col, row));
            let v = base.texel(col, row) * sa;
            for k in 0..SH_COEFFS {
                coeffs[k] += v * b[k];
            }
        }
    }
    coeffs
}

/// Transpose of [`project_irradiance_sh`]: scatter coefficient gradients
/// back to base texels.
pub fn project_irradiance_sh_transpose(
    d_coeffs: &[Vec3; SH_COEFFS],
    base: &EnvGrid,
    d_base: &mut [Vec3],
) {
    for row in 0..base.height {
        let sa = base.texel_solid_angle(row);
        for col in 0..base.width {
            let b = sh_basis(base.texel_dir(col, row));
            let mut g = Vec3::zeros();
            for k in 0..SH_COEFFS {
                g += d_coeffs[k] * (b[k] * sa);
            }
            d_base[row * base.width + col] += g;
        }
    }
}

/// Diffuse irradiance E(n) from projected coefficients (cosine-convolved).
pub fn eval_irradiance(coeffs: &[Vec3; SH_COEFFS], n: Vec3) -> Vec3 {
    let basis = sh_basis(n);
    let mut e = Vec3::zeros();
    for k in 0..SH_COEFFS {
        e += coeffs[k] * (COSINE_LOBE[k] * basis[k]);
    }
    e.map(|v| v.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_base_prefilters_to_constant() {
        let base = EnvGrid::constant(24, 12, Vec3::new(0.7, 0.4, 0.1));
        for &r in &[0.25, 0.6, 1.0] {
            let op = PrefilterOp::build(24, 12, r, 128);
            let mip = op.apply(&base);
            for t in 0..24 * 12 {
                assert_relative_eq!(mip.data[t * 3], 0.7, epsilon = 1e-9);
                assert_relative_eq!(mip.data[t * 3 + 2], 0.1, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn single_texel_energy_approximately_preserved() {
        let mut base = EnvGrid::new(32, 16);
        base.set_texel(10, 8, Vec3::new(50.0, 50.0, 50.0));
        let base_energy = base.total_energy().x;
        for &r in &[0.33, 0.66, 1.0] {
            let op = PrefilterOp::build(32, 16, r, 512);
            let mip = op.apply(&base);
            let e = mip.total_energy().x;
            assert!(
                (e - base_energy).abs() / base_energy < 0.05,
                "energy {e} vs {base_energy} at roughness {r}"
            );
        }
    }

    #[test]
    fn roughness_one_matches_cosine_average() {
        // smooth low-frequency environment
        let mut base = EnvGrid::new(32, 16);
        for row in 0..16 {
            for col in 0..32 {
                let d = base.texel_dir(col, row);
                base.set_texel(
                    col,
                    row,
                    Vec3::new(0.6 + 0.4 * d.y, 0.5 + 0.2 * d.x, 0.5 - 0.3 * d.z),
                );
            }
        }
        let op = PrefilterOp::build(32, 16, 1.0, 512);
        let mip = op.apply(&base);
        // cosine-weighted average via dense quadrature
        for &(c, r) in &[(4usize, 4usize), (16, 8), (25, 12)] {
            let n = base.texel_dir(c, r);
            let mut num = Vec3::zeros();
            let mut den = 0.0;
            for row in 0..16 {
                let sa = base.texel_solid_angle(row);
                for col in 0..32 {
                    let d = base.texel_dir(col, row);
                    let w = n.dot(&d).max(0.0) * sa;
                    num += base.texel(col, row) * w;
                    den += w;
                }
            }
            let expect = num / den;
            let got = mip.texel(c, r);
            for ch in 0..3 {
                assert!(
                    (got[ch] - expect[ch]).abs() / expect[ch] < 0.03,
                    "channel {ch}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn transpose_is_adjoint() {
        // <Ax, y> == <x, A^T y> for random x, y
        let op = PrefilterOp::build(16, 8, 0.5, 64);
        let mut state = 7u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut x = EnvGrid::new(16, 8);
        for v in &mut x.data {
            *v = next();
        }
        let y: Vec<Vec3> = (0..16 * 8)
            .map(|_| Vec3::new(next(), next(), next()))
            .collect();
        let ax = op.apply(&x);
        let mut lhs = 0.0;
        for t in 0..16 * 8 {
            lhs += ax.texel(t % 16, t / 16).dot(&y[t]);
        }
        let mut aty = vec![Vec3::zeros(); 16 * 8];
        op.apply_transpose(&y, &mut aty);
        let mut rhs = 0.0;
        for t in 0..16 * 8 {
            rhs += x.texel(t % 16, t / 16).dot(&aty[t]);
        }
        assert_relative_eq!(lhs, rhs, epsilon = 1e-9);
    }

    #[test]
    fn constant_env_gives_pi_irradiance() {
        let base = EnvGrid::constant(32, 16, Vec3::new(1.0, 1.0, 1.0));
        let coeffs = project_irradiance_sh(&base);
        for &dir in &[Vec3::y(), Vec3::x(), Vec3::new(0.5, -0.5, 0.7).normalize()] {
            let e = eval_irradiance(&coeffs, dir);
            assert_relative_eq!(e.x, std::f64::consts::PI, max_relative = 5e-3);
        }
    }

    #[test]
    fn irradiance_transpose_is_adjoint() {
        let mut base = EnvGrid::new(16, 8);
        for (i, v) in base.data.iter_mut().enumerate() {
            *v = 0.5 + 0.4 * ((i as f64) * 0.7).sin();
        }
        let coeffs = project_irradiance_sh(&base);
        let d_coeffs: [Vec3; SH_COEFFS] =
            std::array::from_fn(|k| Vec3::new(k as f64 * 0.1, 0.2, -0.05 * k as f64));
        let mut lhs = 0.0;
        for k in 0..SH_COEFFS {
            lhs += coeffs[k].dot(&d_coeffs[k]);
        }
        let mut d_base = vec![Vec3::zeros(); 16 * 8];
        project_irradiance_sh_transpose(&d_coeffs, &base, &mut d_base);
        let mut rhs = 0.0;
        for t in 0..16 * 8 {
            rhs += base.texel(t % 16, t / 16).dot(&d_base[t]);
        }
        assert_relative_eq!(lhs, rhs, epsilon = 1e-9);
    }
}
