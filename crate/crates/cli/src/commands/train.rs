//! `train`: optimize a scene against its stored views.

use std::io::Write;
use std::path::{Path, PathBuf};

use claysplat_core::optimize::{train, LossReport, RoutingVariant, TrainConfig};
use claysplat_core::scene::{load_scene_dir, save_gaussians};
use claysplat_core::Result;

use crate::manifest::Manifest;

pub struct Args {
    pub scene: PathBuf,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub variant: Option<String>,
    pub stop_after_clay: Option<bool>,
    pub out: PathBuf,
}

pub fn write_loss_log(path: &Path, log: &[LossReport]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{}", LossReport::CSV_HEADER)?;
    for row in log {
        writeln!(f, "{}", row.csv_row())?;
    }
    Ok(())
}

pub fn run(args: Args) -> Result<()> {
    let bundle = load_scene_dir(&args.scene)?;
    let mut config = match &args.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(v) = &args.variant {
        config.variant = RoutingVariant::parse(v)?;
    }
    if let Some(s) = args.stop_after_clay {
        config.stop_after_clay = s;
    }
    std::fs::create_dir_all(&args.out)?;

    let result = train(&bundle.gaussians, &bundle.views, &bundle.env, config.clone())?;

    let scene_path = args.out.join("scene.cspl");
    save_gaussians(&result.scene, &scene_path)?;
    let env_path = args.out.join("env.pfm");
    result.env.save_pfm(&env_path)?;
    let log_path = args.out.join("loss_log.csv");
    write_loss_log(&log_path, &result.log)?;
    let config_path = args.out.join("config.txt");
    std::fs::write(&config_path, config.to_text())?;

    if let Some(last) = result.log.last() {
        println!(
            "trained {} iterations (variant {}), final L_rgb {:.3e}",
            result.log.len(),
            config.variant.name(),
            last.l_rgb
        );
    }

    let mut manifest = Manifest::new("train", &args.out);
    manifest
        .seed(config.seed)
        .config("scene", args.scene.display())
        .config("variant", config.variant.name())
        .config("t_clay", config.t_clay)
        .config("t_total", config.t_total)
        .config("lambda_clay", config.lambda_clay)
        .config("stop_after_clay", config.stop_after_clay)
        .output(&scene_path)
        .output(&env_path)
        .output(&log_path)
        .output(&config_path);
    manifest.write()
}
