//! `render`: shade every stored view; optionally the clay branch and raw
//! G-buffer channels.

use std::path::Path;

use claysplat_core::clay::{clay_oracle, render_clay};
use claysplat_core::img::{write_pfm_gray, write_pfm_rgb, write_png_rgb, ImageGray, ImageRgb};
use claysplat_core::scene::{load_scene_dir, EnvGrid};
use claysplat_core::shading::{shade, EnvironmentMap};
use claysplat_core::splat::render_gbuffer;
use claysplat_core::{Error, Result, Vec3};

use crate::manifest::Manifest;

pub fn run(
    scene_dir: &Path,
    env_override: Option<&Path>,
    clay: bool,
    gbuffer: bool,
    out: &Path,
) -> Result<()> {
    let bundle = load_scene_dir(scene_dir)?;
    if bundle.views.is_empty() {
        return Err(Error::Config(format!(
            "scene {} has no views to render",
            scene_dir.display()
        )));
    }
    let env_grid = match env_override {
        Some(p) => EnvGrid::load_pfm(p)?,
        None => bundle.env.clone(),
    };
    let env = EnvironmentMap::prepare_default(env_grid)?;
    std::fs::create_dir_all(out)?;

    let mut manifest = Manifest::new("render", out);
    manifest
        .config("scene", scene_dir.display())
        .config("clay", clay)
        .config("gbuffer", gbuffer);

    for (i, view) in bundle.views.iter().enumerate() {
        let gb = render_gbuffer(&bundle.gaussians, &view.camera);
        let (rgb, _) = shade(&gb, &env, &bundle.gaussians, &view.camera);
        let rgb_path = out.join(format!("render_{i:03}.png"));
        write_png_rgb(&rgb_path, &rgb.clamped01())?;
        manifest.output(&rgb_path);

        if clay {
            let predicted = render_clay(&bundle.gaussians, &view.camera);
            let target = clay_oracle(&bundle.gaussians, &view.camera, &env);
            let p1 = out.join(format!("clay_{i:03}_render.png"));
            let p2 = out.join(format!("clay_{i:03}_oracle.png"));
            write_png_rgb(&p1, &predicted.clamped01())?;
            write_png_rgb(&p2, &target.clamped01())?;
            manifest.output(&p1);
            manifest.output(&p2);
        }

        if gbuffer {
            let mut normal = ImageRgb::new(gb.width, gb.height);
            let mut depth = ImageGray::new(gb.width, gb.height);
            let mut alpha = ImageGray::new(gb.width, gb.height);
            for (p, px) in gb.pixels.iter().enumerate() {
                let enc = (px.normal + Vec3::repeat(1.0)) * 0.5;
                normal.data[p * 3] = enc.x;
                normal.data[p * 3 + 1] = enc.y;
                normal.data[p * 3 + 2] = enc.z;
                depth.data[p] = px.depth;
                alpha.data[p] = px.accum_alpha;
            }
            let pn = out.join(format!("gbuffer_{i:03}_normal.pfm"));
            let pd = out.join(format!("gbuffer_{i:03}_depth.pfm"));
            let pa = out.join(format!("gbuffer_{i:03}_alpha.pfm"));
            write_pfm_rgb(&pn, &normal)?;
            write_pfm_gray(&pd, &depth)?;
            write_pfm_gray(&pa, &alpha)?;
            manifest.output(&pn).output(&pd).output(&pa);
        }
    }
    println!("rendered {} views -> {}", bundle.views.len(), out.display());
    manifest.write()
}
