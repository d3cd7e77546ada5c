//! Unconstrained parameter space for optimization.
//!
//! Bounded fields live as logits, scales as logs, tangent frames as free
//! 3x2 matrices re-orthonormalized on materialization. The environment
//! grid is unconstrained and rectified at render time.

use crate::scene::{
    gram_schmidt, gram_schmidt_backward, logit, sigmoid, sigmoid_grad_from_value, EnvGrid,
    GaussianPrimitive, SceneGaussians,
};
use crate::splat::SplatGradients;
use crate::{Error, Result, Vec3, SH_COEFFS};

/// Raw (pre-reparameterization) per-Gaussian parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RawParams {
    pub position: Vec<Vec3>,
    pub tangent_u: Vec<Vec3>,
    pub tangent_v: Vec<Vec3>,
    pub log_scale_u: Vec<f64>,
    pub log_scale_v: Vec<f64>,
    pub opacity_logit: Vec<f64>,
    pub albedo_logit: Vec<Vec3>,
    pub metallic_logit: Vec<f64>,
    pub roughness_logit: Vec<f64>,
    pub clay_logit: Vec<Vec3>,
    pub indirect_sh: Vec<[Vec3; SH_COEFFS]>,
}

/// Floats per Gaussian in the attribute group (everything but position
/// and scales).
pub const ATTR_FLOATS: usize = 42;

impl RawParams {
    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }

    pub fn from_scene(scene: &SceneGaussians) -> Self {
        let n = scene.len();
        let mut raw = RawParams {
            position: Vec::with_capacity(n),
            tangent_u: Vec::with_capacity(n),
            tangent_v: Vec::with_capacity(n),
            log_scale_u: Vec::with_capacity(n),
            log_scale_v: Vec::with_capacity(n),
            opacity_logit: Vec::with_capacity(n),
            albedo_logit: Vec::with_capacity(n),
            metallic_logit: Vec::with_capacity(n),
            roughness_logit: Vec::with_capacity(n),
            clay_logit: Vec::with_capacity(n),
            indirect_sh: Vec::with_capacity(n),
        };
        for g in &scene.gaussians {
            raw.position.push(g.position);
            raw.tangent_u.push(g.tangent_u);
            raw.tangent_v.push(g.tangent_v);
            raw.log_scale_u.push(g.scale_u.ln());
            raw.log_scale_v.push(g.scale_v.ln());
            raw.opacity_logit.push(logit(g.opacity));
            raw.albedo_logit.push(g.albedo.map(logit));
            raw.metallic_logit.push(logit(g.metallic));
            raw.roughness_logit.push(logit(g.roughness));
            raw.clay_logit.push(g.clay_color.map(logit));
            raw.indirect_sh.push(g.indirect_sh);
        }
        raw
    }

    /// Materialize natural-space Gaussians (orthonormal tangents, bounded
    /// attributes).
    pub fn to_scene(&self) -> SceneGaussians {
        let gaussians = (0..self.len())
            .map(|i| {
                let (t_u, t_v) = gram_schmidt(self.tangent_u[i], self.tangent_v[i]);
                GaussianPrimitive {
                    position: self.position[i],
                    tangent_u: t_u,
                    tangent_v: t_v,
                    scale_u: self.log_scale_u[i].exp(),
                    scale_v: self.log_scale_v[i].exp(),
                    opacity: sigmoid(self.opacity_logit[i]),
                    albedo: self.albedo_logit[i].map(sigmoid),
                    metallic: sigmoid(self.metallic_logit[i]),
                    roughness: sigmoid(self.roughness_logit[i]),
                    clay_color: self.clay_logit[i].map(sigmoid),
                    indirect_sh: self.indirect_sh[i],
                }
            })
            .collect();
        SceneGaussians::new(gaussians)
    }

    /// Chain natural-space gradients through the reparameterization.
    /// `scene` must be the materialization of `self`.
    pub fn chain_gradients(&self, scene: &SceneGaussians, nat: &SplatGradients) -> RawGrads {
        let n = self.len();
        assert_eq!(nat.len(), n);
        let mut out = RawGrads::zeros(n);
        for i in 0..n {
            let g = &scene.gaussians[i];
            out.position[i] = nat.position[i];
            let (d_wu, d_wv) = gram_schmidt_backward(
                self.tangent_u[i],
                self.tangent_v[i],
                nat.tangent_u[i],
                nat.tangent_v[i],
            );
            out.tangent_u[i] = d_wu;
            out.tangent_v[i] = d_wv;
            out.log_scale_u[i] = nat.scale_u[i] * g.scale_u;
            out.log_scale_v[i] = nat.scale_v[i] * g.scale_v;
            out.opacity_logit[i] = nat.opacity[i] * sigmoid_grad_from_value(g.opacity);
            out.albedo_logit[i] = Vec3::new(
                nat.albedo[i].x * sigmoid_grad_from_value(g.albedo.x),
                nat.albedo[i].y * sigmoid_grad_from_value(g.albedo.y),
                nat.albedo[i].z * sigmoid_grad_from_value(g.albedo.z),
            );
            out.metallic_logit[i] = nat.metallic[i] * sigmoid_grad_from_value(g.metallic);
            out.roughness_logit[i] = nat.roughness[i] * sigmoid_grad_from_value(g.roughness);
            out.clay_logit[i] = Vec3::new(
                nat.clay_color[i].x * sigmoid_grad_from_value(g.clay_color.x),
                nat.clay_color[i].y * sigmoid_grad_from_value(g.clay_color.y),
                nat.clay_color[i].z * sigmoid_grad_from_value(g.clay_color.z),
            );
            out.indirect_sh[i] = nat.indirect_sh[i];
        }
        out
    }

    /// Flatten positions for the optimizer.
    pub fn flatten_positions(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len() * 3);
        for p in &self.position {
            v.extend_from_slice(&[p.x, p.y, p.z]);
        }
        v
    }

    pub fn unflatten_positions(&mut self, flat: &[f64]) {
        for (i, p) in self.position.iter_mut().enumerate() {
            *p = Vec3::new(flat[i * 3], flat[i * 3 + 1], flat[i * 3 + 2]);
        }
    }

    /// Flatten the log scales for their own optimizer group.
    pub fn flatten_scales(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len() * 2);
        for i in 0..self.len() {
            v.push(self.log_scale_u[i]);
            v.push(self.log_scale_v[i]);
        }
        v
    }

    pub fn unflatten_scales(&mut self, flat: &[f64]) {
        for i in 0..self.len() {
            self.log_scale_u[i] = flat[i * 2];
            self.log_scale_v[i] = flat[i * 2 + 1];
        }
    }

    /// Flatten every non-position, non-scale Gaussian attribute.
    pub fn flatten_attributes(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len() * ATTR_FLOATS);
        for i in 0..self.len() {
            push_vec3(&mut v, self.tangent_u[i]);
            push_vec3(&mut v, self.tangent_v[i]);
            v.push(self.opacity_logit[i]);
            push_vec3(&mut v, self.albedo_logit[i]);
            v.push(self.metallic_logit[i]);
            v.push(self.roughness_logit[i]);
            push_vec3(&mut v, self.clay_logit[i]);
            for k in 0..SH_COEFFS {
                push_vec3(&mut v, self.indirect_sh[i][k]);
            }
        }
        v
    }

    pub fn unflatten_attributes(&mut self, flat: &[f64]) {
        let mut r = Reader { flat, pos: 0 };
        for i in 0..self.len() {
            self.tangent_u[i] = r.vec3();
            self.tangent_v[i] = r.vec3();
            self.opacity_logit[i] = r.f64();
            self.albedo_logit[i] = r.vec3();
            self.metallic_logit[i] = r.f64();
            self.roughness_logit[i] = r.f64();
            self.clay_logit[i] = r.vec3();
            for k in 0..SH_COEFFS {
                self.indirect_sh[i][k] = r.vec3();
            }
        }
    }
}

/// Gradients in the raw parameter space, same layout as [`RawParams`].
pub type RawGrads = RawParams;

impl RawParams {
    pub fn zeros(n: usize) -> Self {
        Self {
            position: vec![Vec3::zeros(); n],
            tangent_u: vec![Vec3::zeros(); n],
            tangent_v: vec![Vec3::zeros(); n],
            log_scale_u: vec![0.0; n],
            log_scale_v: vec![0.0; n],
            opacity_logit: vec![0.0; n],
            albedo_logit: vec![Vec3::zeros(); n],
            metallic_logit: vec![0.0; n],
            roughness_logit: vec![0.0; n],
            clay_logit: vec![Vec3::zeros(); n],
            indirect_sh: vec![[Vec3::zeros(); SH_COEFFS]; n],
        }
    }

    /// Error if any entry is non-finite, naming the parameter group.
    pub fn ensure_finite(&self) -> Result<()> {
        let check3 = |vs: &[Vec3], name: &str| -> Result<()> {
            for (i, v) in vs.iter().enumerate() {
                if !v.iter().all(|c| c.is_finite()) {
                    return Err(Error::NanGradient {
                        param: name.to_string(),
                        index: i,
                    });
                }
            }
            Ok(())
        };
        let check1 = |vs: &[f64], name: &str| -> Result<()> {
            for (i, v) in vs.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NanGradient {
                        param: name.to_string(),
                        index: i,
                    });
                }
            }
            Ok(())
        };
        check3(&self.position, "position")?;
        check3(&self.tangent_u, "tangent_u")?;
        check3(&self.tangent_v, "tangent_v")?;
        check1(&self.log_scale_u, "scale_u")?;
        check1(&self.log_scale_v, "scale_v")?;
        check1(&self.opacity_logit, "opacity")?;
        check3(&self.albedo_logit, "albedo")?;
        check1(&self.metallic_logit, "metallic")?;
        check1(&self.roughness_logit, "roughness")?;
        check3(&self.clay_logit, "clay_color")?;
        for (i, sh) in self.indirect_sh.iter().enumerate() {
            if !sh.iter().all(|v| v.iter().all(|c| c.is_finite())) {
                return Err(Error::NanGradient {
                    param: "indirect_sh".to_string(),
                    index: i,
                });
            }
        }
        Ok(())
    }
}

fn push_vec3(v: &mut Vec<f64>, x: Vec3) {
    v.extend_from_slice(&[x.x, x.y, x.z]);
}

struct Reader<'a> {
    flat: &'a [f64],
    pos: usize,
}

impl Reader<'_> {
    fn f64(&mut self) -> f64 {
        let v = self.flat[self.pos];
        self.pos += 1;
        v
    }
    fn vec3(&mut self) -> Vec3 {
        Vec3::new(self.f64(), self.f64(), self.f64())
    }
}

/// Rectify the learned grid into a valid radiance map.
pub fn env_from_params(params: &EnvGrid) -> EnvGrid {
    let mut env = params.clone();
    for v in &mut env.data {
        *v = v.max(0.0);
    }
    env
}

/// Pass environment gradients through the rectifier.
pub fn env_grad_through_rectifier(params: &EnvGrid, grad: &[Vec3]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grad.len() * 3);
    for (t, g) in grad.iter().enumerate() {
        for c in 0..3 {
            let active = params.data[t * 3 + c] > 0.0;
            out.push(if active { g[c] } else { 0.0 });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_round_trips_through_raw_space() {
        let g = GaussianPrimitive {
            position: Vec3::new(0.3, -0.2, 1.5),
            tangent_u: Vec3::x(),
            tangent_v: Vec3::y(),
            scale_u: 0.25,
            scale_v: 0.75,
            opacity: 0.9,
            albedo: Vec3::new(0.2, 0.5, 0.8),
            metallic: 0.3,
            roughness: 0.6,
            clay_color: Vec3::new(0.85, 0.85, 0.83),
            indirect_sh: [Vec3::repeat(0.1); SH_COEFFS],
        };
        let scene = SceneGaussians::new(vec![g]);
        let raw = RawParams::from_scene(&scene);
        let back = raw.to_scene();
        let orig = &scene.gaussians[0];
        let rt = &back.gaussians[0];
        assert!((orig.opacity - rt.opacity).abs() < 1e-12);
        assert!((orig.scale_u - rt.scale_u).abs() < 1e-12);
        assert!((orig.albedo - rt.albedo).norm() < 1e-12);
        assert!((orig.tangent_u - rt.tangent_u).norm() < 1e-12);
    }

    #[test]
    fn attribute_flattening_round_trips() {
        let scene = SceneGaussians::new(vec![
            GaussianPrimitive {
                position: Vec3::new(1.0, 2.0, 3.0),
                tangent_u: Vec3::x(),
                tangent_v: Vec3::y(),
                scale_u: 0.5,
                scale_v: 0.25,
                opacity: 0.7,
                albedo: Vec3::new(0.1, 0.2, 0.3),
                metallic: 0.9,
                roughness: 0.1,
                clay_color: Vec3::new(0.4, 0.5, 0.6),
                indirect_sh: [Vec3::new(0.01, 0.02, 0.03); SH_COEFFS],
            };
            3
        ]);
        let raw = RawParams::from_scene(&scene);
        let flat = raw.flatten_attributes();
        assert_eq!(flat.len(), 3 * ATTR_FLOATS);
        let mut raw2 = RawParams::zeros(3);
        raw2.position = raw.position.clone();
        raw2.unflatten_attributes(&flat);
        raw2.unflatten_scales(&raw.flatten_scales());
        assert_eq!(raw, raw2);
    }
}
