//! Prepared image-based lighting state: base radiance, prefiltered mip
//! chain, BRDF lookup table, and diffuse irradiance coefficients.

use crate::scene::envmap::EnvTapGrad;
use crate::scene::EnvGrid;
use crate::{Error, Result, Vec3, SH_COEFFS};

use super::lut::{bake_brdf_lut, BrdfLut};
use super::prefilter::{project_irradiance_sh, PrefilterOp};

/// Samples per texel when building prefilter operators.
pub const PREFILTER_SAMPLES: u32 = 512;
/// Samples per texel for the default LUT bake.
pub const LUT_SAMPLES: u32 = 1024;
/// Default mip count (roughness levels 0, 0.25, 0.5, 0.75, 1).
pub const DEFAULT_MIPS: usize = 5;
/// Default LUT resolution.
pub const DEFAULT_LUT_RES: usize = 32;
/// Roughness floor applied before LUT and mip lookups.
pub const ROUGHNESS_FLOOR: f64 = 0.03;

#[derive(Debug, Clone)]
pub struct EnvironmentMap {
    pub base: EnvGrid,
    /// `mips[0]` is the base map; level k targets roughness k/(n-1).
    pub mips: Vec<EnvGrid>,
    pub lut: BrdfLut,
    pub irradiance: [Vec3; SH_COEFFS],
    ops: Vec<PrefilterOp>,
}

/// Trilinear prefiltered lookup together with its backward footprint.
#[derive(Debug, Clone, Copy)]
pub struct PrefilteredSample {
    pub value: Vec3,
    pub level0: usize,
    pub level1: usize,
    pub w0: f64,
    pub w1: f64,
    pub tap0: EnvTapGrad,
    pub tap1: EnvTapGrad,
    /// Per-level sample values, for the roughness derivative.
    pub v0: Vec3,
    pub v1: Vec3,
    /// d(level)/d(roughness), zero when pinned to an end of the chain.
    pub dlevel_drough: f64,
}

impl EnvironmentMap {
    /// Build operators, mips, LUT and irradiance from a base radiance grid.
    pub fn prepare(base: EnvGrid, n_mips: usize, lut: BrdfLut) -> Result<Self> {
        if n_mips < 2 {
            return Err(Error::Config(format!(
                "mip count {n_mips} below the minimum of 2"
            )));
        }
        let mut ops = Vec::with_capacity(n_mips);
        for k in 0..n_mips {
            if k == 0 {
                // level 0 is the identity; keep a placeholder so indices line up
                ops.push(PrefilterOp::build(1, 1, 1.0, 1));
            } else {
                let roughness = k as f64 / (n_mips - 1) as f64;
                ops.push(PrefilterOp::build(
                    base.width,
                    base.height,
                    roughness,
                    PREFILTER_SAMPLES,
                ));
            }
        }
        let mut env = Self {
            base,
            mips: Vec::new(),
            lut,
            irradiance: [Vec3::zeros(); SH_COEFFS],
            ops,
        };
        env.refresh();
        Ok(env)
    }

    /// Convenience constructor with default LUT and mip settings.
    pub fn prepare_default(base: EnvGrid) -> Result<Self> {
        let lut = bake_brdf_lut(DEFAULT_LUT_RES, LUT_SAMPLES)?;
        Self::prepare(base, DEFAULT_MIPS, lut)
    }

    /// Recompute mips and irradiance after the base radiance changed.
    /// Linear in the base map, so gradients flow through exactly.
    pub fn refresh(&mut self) {
        let n = self.ops.len();
        let mut mips = Vec::with_capacity(n);
        mips.push(self.base.clone());
        for op in self.ops.iter().skip(1) {
            mips.push(op.apply(&self.base));
        }
        self.mips = mips;
        self.irradiance = project_irradiance_sh(&self.base);
    }

    pub fn n_mips(&self) -> usize {
        self.mips.len()
    }

    pub fn mip_roughness(&self, level: usize) -> f64 {
        level as f64 / (self.n_mips() - 1) as f64
    }

    /// Scatter per-mip texel gradients back to the base map.
    pub fn mips_transpose(&self, d_mips: &[Vec<Vec3>], d_base: &mut [Vec3]) {
        for t in 0..self.base.width * self.base.height {
            d_base[t] += d_mips[0][t];
        }
        for (k, d_mip) in d_mips.iter().enumerate().skip(1) {
            self.ops[k].apply_transpose(d_mip, d_base);
        }
    }

    /// Trilinear lookup across the mip chain at a clamped roughness.
    pub fn sample_prefiltered(&self, dir: Vec3, roughness: f64) -> Vec3 {
        self.sample_prefiltered_with_grad(dir, roughness).value
    }

    pub fn sample_prefiltered_with_grad(&self, dir: Vec3, roughness: f64) -> PrefilteredSample {
        let n = self.n_mips();
        let level = roughness.clamp(0.0, 1.0) * (n - 1) as f64;
        let l0 = (level.floor() as usize).min(n - 1);
        let l1 = (l0 + 1).min(n - 1);
        let frac = level - l0 as f64;
        let (v0, tap0) = self.mips[l0].sample_with_grad(dir);
        let (v1, tap1) = self.mips[l1].sample_with_grad(dir);
        let dlevel = if (0.0..=1.0).contains(&roughness) && l0 != l1 {
            (n - 1) as f64
        } else {
            0.0
        };
        PrefilteredSample {
            value: v0 * (1.0 - frac) + v1 * frac,
            level0: l0,
            level1: l1,
            w0: 1.0 - frac,
            w1: frac,
            tap0,
            tap1,
            v0,
            v1,
            dlevel_drough: dlevel,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = self.base.validate();
        if self.n_mips() < 2 {
            out.push(format!("mip count {} below 2", self.n_mips()));
        }
        out.extend(self.lut.validate());
        out
    }
}
