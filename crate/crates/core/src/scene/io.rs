//! Scene persistence.
//!
//! Gaussians go to a little-endian binary file: magic `CSPL`, u32 version,
//! u32 count, then one fixed-width record of 47 f32 per Gaussian in field
//! order (position, tangent_u, tangent_v, scale_u, scale_v, opacity,
//! albedo, metallic, roughness, clay_color, indirect_sh). The derived
//! normal is never stored. A full scene on disk is a directory holding
//! `scene.cspl`, `env.pfm`, `cameras.json` and the view images it names.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::img::{read_png_gray, read_png_rgb, write_png_gray, write_png_rgb};
use crate::{Error, Result, Vec3, SH_COEFFS};

use super::camera::Camera;
use super::envmap::EnvGrid;
use super::gaussian::{GaussianPrimitive, SceneGaussians, GAUSSIAN_RECORD_FLOATS};
use super::validate::validate_scene;
use super::view::TrainView;

pub const SCENE_MAGIC: &[u8; 4] = b"CSPL";
pub const SCENE_VERSION: u32 = 1;
pub const SCENE_FILE: &str = "scene.cspl";
pub const ENV_FILE: &str = "env.pfm";
pub const CAMERAS_FILE: &str = "cameras.json";

/// Gaussians, environment and training views loaded together.
#[derive(Debug, Clone)]
pub struct SceneBundle {
    pub gaussians: SceneGaussians,
    pub env: EnvGrid,
    pub views: Vec<TrainView>,
}

struct RecordWriter {
    buf: Vec<u8>,
}

impl RecordWriter {
    fn new() -> Self {
        Self { buf: Vec::new() }
    }
    fn f32(&mut self, v: f64) {
        self.buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fn vec3(&mut self, v: Vec3) {
        self.f32(v.x);
        self.f32(v.y);
        self.f32(v.z);
    }
}

/// Serialize Gaussians to the binary scene format.
pub fn save_gaussians(scene: &SceneGaussians, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SCENE_MAGIC)?;
    w.write_all(&SCENE_VERSION.to_le_bytes())?;
    w.write_all(&(scene.len() as u32).to_le_bytes())?;
    let mut rec = RecordWriter::new();
    for g in &scene.gaussians {
        rec.buf.clear();
        rec.vec3(g.position);
        rec.vec3(g.tangent_u);
        rec.vec3(g.tangent_v);
        rec.f32(g.scale_u);
        rec.f32(g.scale_v);
        rec.f32(g.opacity);
        rec.vec3(g.albedo);
        rec.f32(g.metallic);
        rec.f32(g.roughness);
        rec.vec3(g.clay_color);
        for c in &g.indirect_sh {
            rec.vec3(*c);
        }
        debug_assert_eq!(rec.buf.len(), GAUSSIAN_RECORD_FLOATS * 4);
        w.write_all(&rec.buf)?;
    }
    Ok(())
}

struct RecordReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> RecordReader<'a> {
    fn f32(&mut self) -> Result<f64> {
        let off = self.pos;
        let bytes: [u8; 4] = self
            .data
            .get(off..off + 4)
            .ok_or_else(|| Error::parse(off as u64, "truncated gaussian record"))?
            .try_into()
            .unwrap();
        self.pos += 4;
        let v = f32::from_le_bytes(bytes);
        if v.is_nan() {
            return Err(Error::parse(off as u64, "NaN parameter"));
        }
        Ok(v as f64)
    }
    fn vec3(&mut self) -> Result<Vec3> {
        Ok(Vec3::new(self.f32()?, self.f32()?, self.f32()?))
    }
}

/// Load Gaussians from the binary scene format, rejecting files that break
/// any type invariant.
pub fn load_gaussians(path: &Path) -> Result<SceneGaussians> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() < 12 {
        return Err(Error::parse(bytes.len() as u64, "file shorter than header"));
    }
    if &bytes[0..4] != SCENE_MAGIC {
        return Err(Error::parse(0, format!("bad magic {:?}, expected CSPL", &bytes[0..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != SCENE_VERSION {
        return Err(Error::parse(4, format!("unsupported version {version}")));
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = 12 + count * GAUSSIAN_RECORD_FLOATS * 4;
    if bytes.len() != expected {
        return Err(Error::parse(
            bytes.len().min(expected) as u64,
            format!("expected {expected} bytes for {count} gaussians, found {}", bytes.len()),
        ));
    }

    let mut r = RecordReader {
        data: &bytes,
        pos: 12,
    };
    let mut gaussians = Vec::with_capacity(count);
    for _ in 0..count {
        let position = r.vec3()?;
        let tangent_u = r.vec3()?;
        let tangent_v = r.vec3()?;
        let scale_u = r.f32()?;
        let scale_v = r.f32()?;
        let opacity = r.f32()?;
        let albedo = r.vec3()?;
        let metallic = r.f32()?;
        let roughness = r.f32()?;
        let clay_color = r.vec3()?;
        let mut indirect_sh = [Vec3::zeros(); SH_COEFFS];
        for c in indirect_sh.iter_mut() {
            *c = r.vec3()?;
        }
        gaussians.push(GaussianPrimitive {
            position,
            tangent_u,
            tangent_v,
            scale_u,
            scale_v,
            opacity,
            albedo,
            metallic,
            roughness,
            clay_color,
            indirect_sh,
        });
    }

    let scene = SceneGaussians::new(gaussians);
    if let Some(v) = validate_scene(&scene).into_iter().next() {
        return Err(Error::Invariant(v.to_string()));
    }
    Ok(scene)
}

#[derive(Debug, Serialize, Deserialize)]
struct ViewRecord {
    camera: Camera,
    rgb: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    clay: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    mask: Option<String>,
}

/// Write a full scene directory (gaussians, environment, views).
pub fn save_scene_dir(bundle: &SceneBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("views"))?;
    save_gaussians(&bundle.gaussians, &dir.join(SCENE_FILE))?;
    bundle.env.save_pfm(&dir.join(ENV_FILE))?;

    let mut records = Vec::new();
    for (i, view) in bundle.views.iter().enumerate() {
        let rgb = format!("views/view_{i:03}_rgb.png");
        write_png_rgb(&dir.join(&rgb), &view.rgb)?;
        let clay = match &view.clay {
            Some(img) => {
                let p = format!("views/view_{i:03}_clay.png");
                write_png_rgb(&dir.join(&p), img)?;
                Some(p)
            }
            None => None,
        };
        let mask = match &view.mask {
            Some(img) => {
                let p = format!("views/view_{i:03}_mask.png");
                write_png_gray(&dir.join(&p), img)?;
                Some(p)
            }
            None => None,
        };
        records.push(ViewRecord {
            camera: view.camera.clone(),
            rgb,
            clay,
            mask,
        });
    }
    let json = serde_json::to_string_pretty(&records)
        .map_err(|e| Error::Other(format!("cameras.json encode: {e}")))?;
    fs::write(dir.join(CAMERAS_FILE), json)?;
    Ok(())
}

/// Load a scene directory written by [`save_scene_dir`].
pub fn load_scene_dir(dir: &Path) -> Result<SceneBundle> {
    let gaussians = load_gaussians(&dir.join(SCENE_FILE))?;
    let env = EnvGrid::load_pfm(&dir.join(ENV_FILE))?;
    let cams_path = dir.join(CAMERAS_FILE);
    let views = if cams_path.exists() {
        let json = fs::read_to_string(&cams_path)?;
        let records: Vec<ViewRecord> = serde_json::from_str(&json)
            .map_err(|e| Error::parse(0, format!("cameras.json: {e}")))?;
        let mut views = Vec::with_capacity(records.len());
        for rec in records {
            let rgb = read_png_rgb(&dir.join(&rec.rgb))?;
            let clay = rec
                .clay
                .as_ref()
                .map(|p| read_png_rgb(&dir.join(p)))
                .transpose()?;
            let mask = rec
                .mask
                .as_ref()
                .map(|p| read_png_gray(&dir.join(p)))
                .transpose()?;
            let view = TrainView {
                camera: rec.camera,
                rgb,
                clay,
                mask,
            };
            view.validate()?;
            views.push(view);
        }
        views
    } else {
        Vec::new()
    };
    Ok(SceneBundle {
        gaussians,
        env,
        views,
    })
}

/// Mask image reinterpreted as a binary foreground mask.
pub fn binarize_mask(mask: &crate::img::ImageGray) -> crate::img::ImageGray {
    let mut out = mask.clone();
    for v in &mut out.data {
        *v = if *v > 0.5 { 1.0 } else { 0.0 };
    }
    out
}

pub fn scene_file_path(dir: &Path) -> PathBuf {
    dir.join(SCENE_FILE)
}
