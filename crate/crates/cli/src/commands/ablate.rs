//! `ablate`: train the detach-set variants from a perturbed init and
//! tabulate geometry metrics per variant.

use std::io::Write;
use std::path::PathBuf;

use claysplat_core::eval::{chamfer_l1, extract_points, normal_mae, read_ply};
use claysplat_core::fixtures::perturb_scene;
use claysplat_core::img::read_pfm_rgb;
use claysplat_core::splat::render_gbuffer;
use claysplat_core::optimize::{train, RoutingVariant, TrainConfig};
use claysplat_core::scene::{load_scene_dir, EnvGrid};
use claysplat_core::{Result, Vec3};

use crate::manifest::Manifest;

pub struct Args {
    pub scene: PathBuf,
    pub config: Option<PathBuf>,
    pub variants: String,
    pub seeds: String,
    pub init_sigma: f64,
    /// Start from the stored environment instead of a neutral gray one.
    pub gt_env: bool,
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let bundle = load_scene_dir(&args.scene)?;
    let gt_cloud = read_ply(&args.scene.join("gt.ply"))?;
    let base_config = match &args.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    let variants: Vec<RoutingVariant> = args
        .variants
        .split(',')
        .map(RoutingVariant::parse)
        .collect::<Result<_>>()?;
    let seeds: Vec<u64> = args
        .seeds
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| claysplat_core::Error::Config(format!("bad seed '{s}'")))
        })
        .collect::<Result<_>>()?;
    std::fs::create_dir_all(&args.out)?;

    let cameras: Vec<_> = bundle.views.iter().map(|v| v.camera.clone()).collect();
    let csv_path = args.out.join("ablation.csv");
    let mut csv = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    writeln!(csv, "variant,seed,chamfer_l1,normal_mae_deg,final_l_rgb")?;

    let mut manifest = Manifest::new("ablate", &args.out);
    manifest
        .config("scene", args.scene.display())
        .config("variants", &args.variants)
        .config("seeds", &args.seeds)
        .config("init_sigma", args.init_sigma);

    // reconstruction setting: illumination is unknown unless asked for
    let env_init = if args.gt_env {
        bundle.env.clone()
    } else {
        EnvGrid::constant(bundle.env.width, bundle.env.height, Vec3::repeat(0.3))
    };

    for variant in &variants {
        for &seed in &seeds {
            let mut config = base_config.clone();
            config.variant = *variant;
            config.seed = seed;
            let init = perturb_scene(&bundle.gaussians, args.init_sigma, seed);
            let result = train(&init, &bundle.views, &env_init, config)?;
            let cloud = extract_points(&result.scene, &cameras);
            let chamfer = chamfer_l1(&cloud, &gt_cloud)?;
            let mae = mean_normal_mae(&result.scene, &args.scene, &bundle)?;
            let final_l_rgb = result.log.last().map(|r| r.l_rgb).unwrap_or(f64::NAN);
            writeln!(
                csv,
                "{},{},{:.8},{:.4},{:.8e}",
                variant.name(),
                seed,
                chamfer,
                mae,
                final_l_rgb
            )?;
            println!(
                "variant {:>10} seed {seed}: chamfer {:.6}, normal MAE {:.2} deg, final L_rgb {:.3e}",
                variant.name(),
                chamfer,
                mae,
                final_l_rgb
            );

            let log_path = args
                .out
                .join(format!("loss_{}_{seed}.csv", variant.name().replace('+', "_")));
            super::train::write_loss_log(&log_path, &result.log)?;
            manifest.output(&log_path);
            let scene_path = args
                .out
                .join(format!("scene_{}_{seed}.cspl", variant.name().replace('+', "_")));
            claysplat_core::scene::save_gaussians(&result.scene, &scene_path)?;
            manifest.output(&scene_path);
        }
    }
    drop(csv);

    manifest.output(&csv_path);
    manifest.write()
}

/// Mean angular normal error of a trained scene against the fixture's
/// stored per-view normal maps, over pixels solid in both.
fn mean_normal_mae(
    scene: &claysplat_core::scene::SceneGaussians,
    fixture_dir: &std::path::Path,
    bundle: &claysplat_core::scene::SceneBundle,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, view) in bundle.views.iter().enumerate() {
        let path = fixture_dir.join(format!("views/view_{i:03}_normal.pfm"));
        if !path.exists() {
            continue;
        }
        let enc = read_pfm_rgb(&path)?;
        let gb = render_gbuffer(scene, &view.camera);
        let mut pred = Vec::with_capacity(gb.pixels.len());
        let mut gt = Vec::with_capacity(gb.pixels.len());
        let mut mask = claysplat_core::img::ImageGray::new(gb.width, gb.height);
        for (p, px) in gb.pixels.iter().enumerate() {
            let g = claysplat_core::Vec3::new(
                enc.data[p * 3],
                enc.data[p * 3 + 1],
                enc.data[p * 3 + 2],
            ) * 2.0
                - claysplat_core::Vec3::repeat(1.0);
            let valid = px.accum_alpha > 0.5
                && g.norm() > 0.5
                && px.normal != claysplat_core::Vec3::zeros();
            mask.data[p] = if valid { 1.0 } else { 0.0 };
            pred.push(px.normal);
            gt.push(if valid {
                g.normalize()
            } else {
                claysplat_core::Vec3::y()
            });
        }
        if mask.data.iter().any(|v| *v > 0.5) {
            sum += normal_mae(&pred, &gt, &mask)?;
            count += 1;
        }
    }
    Ok(if count > 0 { sum / count as f64 } else { f64::NAN })
}
