//! `make-scene`: synthesize a fixture directory.

use std::path::PathBuf;

use claysplat_core::eval::write_ply;
use claysplat_core::fixtures::{
    make_env, make_scene, make_views, EnvPreset, FixtureShape, FixtureSpec, MaterialPreset,
};
use claysplat_core::img::write_pfm_rgb;
use claysplat_core::scene::{save_scene_dir, SceneBundle};
use claysplat_core::shading::EnvironmentMap;
use claysplat_core::splat::render_gbuffer;
use claysplat_core::{Result, Vec3};

use crate::manifest::Manifest;

pub struct Args {
    pub shape: String,
    pub preset: String,
    pub env: String,
    pub count: usize,
    pub views: usize,
    pub res: usize,
    pub clay_sigma: f64,
    pub seed: u64,
    pub out: PathBuf,
}

/// Environment grid resolution for generated fixtures.
const ENV_W: usize = 32;
const ENV_H: usize = 16;

pub fn run(args: Args) -> Result<()> {
    let spec = FixtureSpec {
        shape: FixtureShape::parse(&args.shape)?,
        gaussian_count: args.count,
        material: MaterialPreset::parse(&args.preset)?,
        env: EnvPreset::parse(&args.env)?,
        camera_count: args.views,
        camera_radius: 3.0,
        seed: args.seed,
    };
    std::fs::create_dir_all(&args.out)?;

    let fixture = make_scene(&spec);
    let env_grid = make_env(&spec.env, ENV_W, ENV_H)?;
    let env = EnvironmentMap::prepare_default(env_grid.clone())?;
    let views = make_views(&spec, &fixture.scene, &env, args.res, args.clay_sigma);

    let bundle = SceneBundle {
        gaussians: fixture.scene.clone(),
        env: env_grid,
        views,
    };
    save_scene_dir(&bundle, &args.out)?;

    let gt_path = args.out.join("gt.ply");
    write_ply(&fixture.gt_cloud, &gt_path)?;

    // per-view ground-truth normal maps, encoded (n+1)/2, plus depth
    for (i, view) in bundle.views.iter().enumerate() {
        let gb = render_gbuffer(&fixture.scene, &view.camera);
        let mut normal_img = claysplat_core::img::ImageRgb::new(gb.width, gb.height);
        for (p, px) in gb.pixels.iter().enumerate() {
            let enc = (px.normal + Vec3::repeat(1.0)) * 0.5;
            normal_img.data[p * 3] = enc.x;
            normal_img.data[p * 3 + 1] = enc.y;
            normal_img.data[p * 3 + 2] = enc.z;
        }
        write_pfm_rgb(&args.out.join(format!("views/view_{i:03}_normal.pfm")), &normal_img)?;
    }

    println!(
        "fixture: {} gaussians on a {} ({} views at {}x{}) -> {}",
        fixture.scene.len(),
        args.shape,
        args.views,
        args.res,
        args.res,
        args.out.display()
    );

    let mut manifest = Manifest::new("make-scene", &args.out);
    manifest
        .seed(args.seed)
        .config("shape", &args.shape)
        .config("preset", &args.preset)
        .config("env", &args.env)
        .config("count", args.count)
        .config("views", args.views)
        .config("res", args.res)
        .config("clay_sigma", args.clay_sigma)
        .output(&args.out.join("scene.cspl"))
        .output(&args.out.join("env.pfm"))
        .output(&args.out.join("cameras.json"))
        .output(&gt_path);
    manifest.write()
}
