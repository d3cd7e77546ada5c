//! Gradient routing between the reflective and clay branches.
//!
//! During the clay phase, geometry fields in the active variant's detach
//! set take gradients only from the clay branch. Opacity always hears
//! both branches. The surface-normal path from the reflective branch is
//! special: it is scaled by the smooth-normal factor (or severed entirely
//! under the full-detach variant) and is the only reflective-branch signal
//! allowed into the tangent frame when tangents are detached.

use crate::splat::SplatGradients;
use crate::{Error, Result, Vec3};

/// Detach-set variants for the clay phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoutingVariant {
    /// No detaching; both branches reach every shared field.
    None,
    /// Detach positions from the reflective branch.
    P,
    /// Detach positions, tangents and scales; no normal-gradient ramp.
    Ptr,
    /// Detach positions, tangents and scales; ramp the normal gradient.
    PtrSmooth,
    /// Detach positions, tangents, scales and the surface normal.
    Ptrn,
}

impl RoutingVariant {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "p" => Ok(Self::P),
            "ptr" | "p,t,r" => Ok(Self::Ptr),
            "ptr+smooth" | "ptr_smooth" | "ptr-smooth" => Ok(Self::PtrSmooth),
            "ptrn" | "p,t,r,n" => Ok(Self::Ptrn),
            other => Err(Error::Config(format!("unknown routing variant '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::P => "p",
            Self::Ptr => "ptr",
            Self::PtrSmooth => "ptr+smooth",
            Self::Ptrn => "ptrn",
        }
    }

    pub fn detach_position(&self) -> bool {
        !matches!(self, Self::None)
    }

    pub fn detach_tangent(&self) -> bool {
        matches!(self, Self::Ptr | Self::PtrSmooth | Self::Ptrn)
    }

    pub fn detach_scale(&self) -> bool {
        matches!(self, Self::Ptr | Self::PtrSmooth | Self::Ptrn)
    }

    /// How the reflective branch's pixel-normal gradient is treated.
    pub fn normal_mode(&self) -> NormalMode {
        match self {
            Self::Ptr => NormalMode::Full,
            Self::Ptrn => NormalMode::Detached,
            _ => NormalMode::Smooth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalMode {
    /// Normal gradients pass unscaled.
    Full,
    /// Normal gradients scaled by min(t / T_clay, 1).
    Smooth,
    /// No reflective-branch normal gradients at all.
    Detached,
}

/// Forward half of the smooth-normal schedule: the blended value
/// (1 - lambda) sg(N) + lambda N is algebraically N, so the forward pass
/// is the identity, bit for bit.
#[inline]
pub fn smooth_normal(n: Vec3, _t: usize, _t_clay: usize) -> Vec3 {
    n
}

/// Backward scale of the smooth-normal schedule, min(t / T_clay, 1).
#[inline]
pub fn smooth_normal_factor(t: usize, t_clay: usize) -> f64 {
    if t_clay == 0 {
        1.0
    } else {
        (t as f64 / t_clay as f64).min(1.0)
    }
}

/// Scale applied to the pixel-level normal upstream of the reflective
/// branch before its backward pass.
pub fn normal_gradient_scale(variant: RoutingVariant, t: usize, t_clay: usize) -> f64 {
    if t >= t_clay {
        return 1.0;
    }
    match variant.normal_mode() {
        NormalMode::Full => 1.0,
        NormalMode::Smooth => smooth_normal_factor(t, t_clay),
        NormalMode::Detached => 0.0,
    }
}

/// Reflective-branch gradients split by upstream source. `geometry`
/// comes from a backward pass with the pixel-normal channel zeroed;
/// `normal` from a pass with only that channel (already scaled by the
/// smooth factor). Their sum is the full reflective-branch gradient.
#[derive(Debug, Clone)]
pub struct RgbBranchGradients {
    pub geometry: SplatGradients,
    pub normal: SplatGradients,
}

/// Merge the branch gradients for iteration `t` under a variant's detach
/// policy. `clay` must already carry the clay-loss weight; pass zeros
/// after the clay phase.
pub fn route_gradients(
    rgb: &RgbBranchGradients,
    clay: &SplatGradients,
    variant: RoutingVariant,
    t: usize,
    t_clay: usize,
) -> SplatGradients {
    let n = rgb.geometry.len();
    let mut merged = SplatGradients::zeros(n);
    merged.axpy(&rgb.geometry, 1.0);
    merged.axpy(&rgb.normal, 1.0);

    if t >= t_clay {
        // phase exit: reflective branch only
        return merged;
    }

    let clay_phase_fields = |merged: &mut SplatGradients| {
        for i in 0..n {
            // opacity and clay color always hear the clay branch;
            // appearance fields (albedo, metallic, roughness, indirect SH)
            // never do, which holds by construction since the clay loss
            // has no upstream on those channels
            merged.opacity[i] += clay.opacity[i];
            merged.clay_color[i] += clay.clay_color[i];
        }
    };
    clay_phase_fields(&mut merged);

    for i in 0..n {
        merged.position[i] = if variant.detach_position() {
            clay.position[i]
        } else {
            merged.position[i] + clay.position[i]
        };
        if variant.detach_scale() {
            merged.scale_u[i] = clay.scale_u[i];
            merged.scale_v[i] = clay.scale_v[i];
        } else {
            merged.scale_u[i] += clay.scale_u[i];
            merged.scale_v[i] += clay.scale_v[i];
        }
        if variant.detach_tangent() {
            // tangents keep the clay branch plus (only) the reflective
            // branch's normal-path contribution
            merged.tangent_u[i] = clay.tangent_u[i] + rgb.normal.tangent_u[i];
            merged.tangent_v[i] = clay.tangent_v[i] + rgb.normal.tangent_v[i];
        } else {
            merged.tangent_u[i] += clay.tangent_u[i];
            merged.tangent_v[i] += clay.tangent_v[i];
        }
    }
    merged
}
