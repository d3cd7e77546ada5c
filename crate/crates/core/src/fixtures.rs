//! Synthetic fixtures: analytic surfaces covered with Gaussian disks,
//! camera rings, environment presets, and paired reflective/clay views.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clay::{clay_oracle, corrupt_clay};
use crate::img::ImageGray;
use crate::scene::{
    gram_schmidt, Camera, EnvGrid, GaussianPrimitive, PointCloud, SceneGaussians, TrainView,
};
use crate::shading::{shade, EnvironmentMap};
use crate::splat::render_gbuffer;
use crate::{Error, Result, Vec3, SH_COEFFS};

pub const GT_CLOUD_SAMPLES: usize = 10_000;
/// Disk scale as a fraction of the mean neighbor spacing; half keeps the
/// surface watertight without inflating ray support.
const SCALE_SPACING_RATIO: f64 = 0.5;
const INIT_OPACITY: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureShape {
    Sphere,
    Torus,
    Plane,
    TwoSpheres,
}

impl FixtureShape {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sphere" => Ok(Self::Sphere),
            "torus" => Ok(Self::Torus),
            "plane" => Ok(Self::Plane),
            "two-spheres" | "twospheres" => Ok(Self::TwoSpheres),
            other => Err(Error::Config(format!("unknown shape '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaterialPreset {
    /// Polished metal: metallic 1, roughness 0.05.
    Mirror,
    /// Matte dielectric: metallic 0, roughness 1.
    Diffuse,
    /// Per-Gaussian sampling: roughness U(0.03, 0.3), 70% metallic.
    PaperDist,
}

impl MaterialPreset {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mirror" => Ok(Self::Mirror),
            "diffuse" => Ok(Self::Diffuse),
            "paper-dist" | "paperdist" => Ok(Self::PaperDist),
            other => Err(Error::Config(format!("unknown material preset '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvPreset {
    /// Uniform gray radiance.
    Constant,
    /// Dim base with three smooth bright lobes; drives hard reflections.
    ThreePoint,
    /// Load a lat-long PFM from disk.
    HdrFile(std::path::PathBuf),
}

impl EnvPreset {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" => Ok(Self::Constant),
            "three-point" | "threepoint" => Ok(Self::ThreePoint),
            other => {
                let p = std::path::PathBuf::from(other);
                if p.extension().map_or(false, |e| e == "pfm") {
                    Ok(Self::HdrFile(p))
                } else {
                    Err(Error::Config(format!("unknown env preset '{other}'")))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub shape: FixtureShape,
    pub gaussian_count: usize,
    pub material: MaterialPreset,
    pub env: EnvPreset,
    pub camera_count: usize,
    pub camera_radius: f64,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            shape: FixtureShape::Sphere,
            gaussian_count: 400,
            material: MaterialPreset::Mirror,
            env: EnvPreset::ThreePoint,
            camera_count: 16,
            camera_radius: 3.0,
            seed: 0,
        }
    }
}

/// A generated scene with its analytic ground truth.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub scene: SceneGaussians,
    pub gt_cloud: PointCloud,
    /// Mean neighbor spacing used for disk scales.
    pub spacing: f64,
}

/// Points and normals of the analytic surface at a given sample index.
fn surface_sample(shape: FixtureShape, i: usize, n: usize) -> (Vec3, Vec3) {
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    let frac = |x: f64| x - x.floor();
    match shape {
        FixtureShape::Sphere => {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).max(0.0).sqrt();
            let phi = std::f64::consts::TAU * frac(i as f64 / golden);
            let p = Vec3::new(r * phi.cos(), y, r * phi.sin());
            (p, p)
        }
        FixtureShape::TwoSpheres => {
            let half = n / 2;
            let (j, m, center) = if i < half {
                (i, half, Vec3::new(-0.8, 0.0, 0.0))
            } else {
                (i - half, n - half, Vec3::new(0.8, 0.0, 0.0))
            };
            let y = 1.0 - 2.0 * (j as f64 + 0.5) / m as f64;
            let r = (1.0 - y * y).max(0.0).sqrt();
            let phi = std::f64::consts::TAU * frac(j as f64 / golden);
            let unit = Vec3::new(r * phi.cos(), y, r * phi.sin());
            (center + unit * 0.6, unit)
        }
        FixtureShape::Plane => {
            // fibonacci lattice on [-1,1]^2 in xz, normal +y
            let u = (i as f64 + 0.5) / n as f64;
            let v = frac(i as f64 / golden);
            (
                Vec3::new(u * 2.0 - 1.0, 0.0, v * 2.0 - 1.0),
                Vec3::y(),
            )
        }
        FixtureShape::Torus => {
            // area-uniform enough at desk scale: golden-spiral angles with
            // a radial acceptance wobble folded into the tube angle
            let ring = std::f64::consts::TAU * (i as f64 + 0.5) / n as f64 * 7.0;
            let tube = std::f64::consts::TAU * frac(i as f64 / golden);
            let (major, minor) = (0.7, 0.3);
            let p = Vec3::new(
                (major + minor * tube.cos()) * ring.cos(),
                minor * tube.sin(),
                (major + minor * tube.cos()) * ring.sin(),
            );
            let n_vec = Vec3::new(
                tube.cos() * ring.cos(),
                tube.sin(),
                tube.cos() * ring.sin(),
            );
            (p, n_vec)
        }
    }
}

fn surface_area(shape: FixtureShape) -> f64 {
    match shape {
        FixtureShape::Sphere => 4.0 * std::f64::consts::PI,
        FixtureShape::TwoSpheres => 2.0 * 4.0 * std::f64::consts::PI * 0.6 * 0.6,
        FixtureShape::Plane => 4.0,
        FixtureShape::Torus => {
            std::f64::consts::TAU * 0.7 * std::f64::consts::TAU * 0.3
        }
    }
}

fn sample_material(
    preset: MaterialPreset,
    rng: &mut ChaCha8Rng,
) -> (Vec3, f64, f64) {
    match preset {
        MaterialPreset::Mirror => (Vec3::new(0.95, 0.95, 0.95), 1.0, 0.05),
        MaterialPreset::Diffuse => (Vec3::new(0.8, 0.8, 0.8), 0.0, 1.0),
        MaterialPreset::PaperDist => {
            let albedo = Vec3::new(
                0.3 + 0.5 * rng.gen::<f64>(),
                0.3 + 0.5 * rng.gen::<f64>(),
                0.3 + 0.5 * rng.gen::<f64>(),
            );
            let metallic = if rng.gen::<f64>() < 0.7 {
                1.0
            } else {
                rng.gen::<f64>()
            };
            let roughness = 0.03 + rng.gen::<f64>() * 0.27;
            (albedo, metallic, roughness)
        }
    }
}

/// Build the Gaussian scene plus analytic ground truth for a spec.
pub fn make_scene(spec: &FixtureSpec) -> Fixture {
    let n = spec.gaussian_count.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let spacing = (surface_area(spec.shape) / n as f64).sqrt();
    let scale = spacing * SCALE_SPACING_RATIO;

    let gaussians = (0..n)
        .map(|i| {
            let (p, normal) = surface_sample(spec.shape, i, n);
            let helper = if normal.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
            let (t_u, t_v) = gram_schmidt(helper.cross(&normal), normal.cross(&helper.cross(&normal)));
            // ensure t_u x t_v points along the analytic normal
            let (t_u, t_v) = if t_u.cross(&t_v).dot(&normal) < 0.0 {
                (t_v, t_u)
            } else {
                (t_u, t_v)
            };
            let (albedo, metallic, roughness) = sample_material(spec.material, &mut rng);
            GaussianPrimitive {
                position: p,
                tangent_u: t_u,
                tangent_v: t_v,
                scale_u: scale,
                scale_v: scale,
                opacity: INIT_OPACITY,
                albedo,
                metallic,
                roughness,
                clay_color: Vec3::repeat(0.5),
                indirect_sh: [Vec3::zeros(); SH_COEFFS],
            }
        })
        .collect();

    let mut gt_points = Vec::with_capacity(GT_CLOUD_SAMPLES);
    let mut gt_normals = Vec::with_capacity(GT_CLOUD_SAMPLES);
    for i in 0..GT_CLOUD_SAMPLES {
        let (p, nrm) = surface_sample(spec.shape, i, GT_CLOUD_SAMPLES);
        gt_points.push(p);
        gt_normals.push(nrm.normalize());
    }

    Fixture {
        scene: SceneGaussians::new(gaussians),
        gt_cloud: PointCloud {
            points: gt_points,
            normals: Some(gt_normals),
        },
        spacing,
    }
}

/// Environment grid for a preset at the given resolution.
pub fn make_env(preset: &EnvPreset, width: usize, height: usize) -> Result<EnvGrid> {
    match preset {
        EnvPreset::Constant => Ok(EnvGrid::constant(width, height, Vec3::repeat(0.7))),
        EnvPreset::ThreePoint => {
            // dim base with lobes peaking near unit radiance, so mirror
            // reflections stay inside the LDR target range
            let mut g = EnvGrid::constant(width, height, Vec3::repeat(0.01));
            let lights = [
                (Vec3::new(0.5, 0.65, 0.45).normalize(), 1.0, 0.12),
                (Vec3::new(-0.65, 0.3, -0.35).normalize(), 0.3, 0.3),
                (Vec3::new(0.1, 0.15, -0.95).normalize(), 0.6, 0.15),
            ];
            for row in 0..height {
                for col in 0..width {
                    let d = g.texel_dir(col, row);
                    let mut v = g.texel(col, row);
                    for (ldir, power, width_param) in lights {
                        let cos = d.dot(&ldir);
                        let falloff = ((cos - (1.0 - width_param)) / width_param).max(0.0);
                        v += Vec3::repeat(power * falloff * falloff);
                    }
                    g.set_texel(col, row, v);
                }
            }
            Ok(g)
        }
        EnvPreset::HdrFile(path) => EnvGrid::load_pfm(path),
    }
}

/// Cameras on a ring around the origin with alternating elevation.
pub fn make_cameras(
    count: usize,
    radius: f64,
    width: usize,
    height: usize,
) -> Vec<Camera> {
    (0..count)
        .map(|i| {
            let azim = std::f64::consts::TAU * i as f64 / count as f64;
            let elev: f64 = if i % 2 == 0 { 0.42 } else { -0.28 };
            let eye = Vec3::new(
                radius * elev.cos() * azim.cos(),
                radius * elev.sin(),
                radius * elev.cos() * azim.sin(),
            );
            Camera::look_at(width, height, 40.0, eye, Vec3::zeros(), Vec3::y())
        })
        .collect()
}

/// Render paired reflective/clay training views with masks.
/// `clay_sigma > 0` corrupts the clay targets with seeded noise.
pub fn make_views(
    spec: &FixtureSpec,
    scene: &SceneGaussians,
    env: &EnvironmentMap,
    image_size: usize,
    clay_sigma: f64,
) -> Vec<TrainView> {
    let cameras = make_cameras(spec.camera_count, spec.camera_radius, image_size, image_size);
    cameras
        .into_iter()
        .enumerate()
        .map(|(i, camera)| {
            let gbuffer = render_gbuffer(scene, &camera);
            let (rgb, _) = shade(&gbuffer, env, scene, &camera);
            let rgb = rgb.clamped01();
            let clay = {
                let img = clay_oracle(scene, &camera, env).clamped01();
                if clay_sigma > 0.0 {
                    corrupt_clay(&img, clay_sigma, spec.seed.wrapping_add(i as u64))
                } else {
                    img
                }
            };
            let mut mask = ImageGray::new(image_size, image_size);
            for (p, px) in gbuffer.pixels.iter().enumerate() {
                mask.data[p] = if px.accum_alpha > 0.5 { 1.0 } else { 0.0 };
            }
            TrainView {
                camera,
                rgb,
                clay: Some(clay),
                mask: Some(mask),
            }
        })
        .collect()
}

/// Reconstruction starting point: jitter positions by a fraction of the
/// scene radius and randomize materials, keeping frames and scales.
pub fn perturb_scene(scene: &SceneGaussians, sigma_frac: f64, seed: u64) -> SceneGaussians {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = sigma_frac * scene.bounding_radius();
    let mut out = scene.clone();
    for g in &mut out.gaussians {
        let mut normal = || {
            let u1: f64 = rng.gen::<f64>().max(1e-12);
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        };
        g.position += Vec3::new(normal(), normal(), normal()) * sigma;
        g.albedo = Vec3::new(
            0.2 + 0.6 * rng.gen::<f64>(),
            0.2 + 0.6 * rng.gen::<f64>(),
            0.2 + 0.6 * rng.gen::<f64>(),
        );
        g.metallic = rng.gen::<f64>();
        g.roughness = 0.1 + 0.8 * rng.gen::<f64>();
        g.clay_color = Vec3::repeat(0.5);
        g.indirect_sh = [Vec3::zeros(); SH_COEFFS];
    }
    out
}
