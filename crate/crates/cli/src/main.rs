//! Command-line driver: fixture generation, rendering, training,
//! evaluation, and the detach-variant ablation.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "claysplat",
    version,
    about = "Clay-guided reflective Gaussian splatting on the CPU"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bake the split-sum BRDF lookup table to a PFM file.
    PrecomputeLut {
        /// Table resolution (cos(theta) x roughness).
        #[arg(long, default_value_t = 32)]
        res: usize,
        /// Importance samples per texel.
        #[arg(long, default_value_t = 1024)]
        samples: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic fixture: scene, environment, views, ground truth.
    MakeScene {
        /// sphere | torus | plane | two-spheres
        #[arg(long, default_value = "sphere")]
        shape: String,
        /// mirror | diffuse | paper-dist
        #[arg(long, default_value = "mirror")]
        preset: String,
        /// constant | three-point | path to a .pfm
        #[arg(long, default_value = "three-point")]
        env: String,
        /// Number of Gaussians.
        #[arg(long, default_value_t = 400)]
        count: usize,
        /// Number of training views.
        #[arg(long, default_value_t = 16)]
        views: usize,
        /// View resolution (square).
        #[arg(long, default_value_t = 64)]
        res: usize,
        /// Noise level applied to clay targets (0 = clean).
        #[arg(long, default_value_t = 0.0)]
        clay_sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render the views of a scene directory.
    Render {
        #[arg(long)]
        scene: PathBuf,
        /// Optional environment override (.pfm).
        #[arg(long)]
        env: Option<PathBuf>,
        /// Also emit the clay-branch render next to the oracle target.
        #[arg(long, default_value_t = false)]
        clay: bool,
        /// Dump G-buffer channels (normals, depth, alpha) as PFM.
        #[arg(long, default_value_t = false)]
        gbuffer: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimize a scene against its stored views.
    Train {
        #[arg(long)]
        scene: PathBuf,
        /// Flat key = value config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Routing variant override (none | p | ptr | ptr+smooth | ptrn).
        #[arg(long)]
        variant: Option<String>,
        /// Stop when the clay phase ends.
        #[arg(long)]
        stop_after_clay: Option<bool>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Metrics for a trained scene against fixture ground truth.
    Eval {
        /// Trained scene directory (gaussians + env).
        #[arg(long)]
        scene: PathBuf,
        /// Fixture directory holding views and gt.ply.
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train several routing variants and tabulate geometry metrics.
    Ablate {
        /// Fixture directory from make-scene.
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated variant list.
        #[arg(long, default_value = "none,ptr+smooth,ptrn")]
        variants: String,
        /// Comma-separated seeds (one run per variant per seed).
        #[arg(long, default_value = "0")]
        seeds: String,
        /// Position jitter for the perturbed init, fraction of radius.
        #[arg(long, default_value_t = 0.05)]
        init_sigma: f64,
        /// Start from the stored (ground-truth) environment map.
        #[arg(long, default_value_t = false)]
        gt_env: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let threads = claysplat_core::configured_threads();
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let cli = Cli::parse();
    let result = match cli.command {
        Command::PrecomputeLut { res, samples, out } => {
            commands::precompute_lut::run(res, samples, &out)
        }
        Command::MakeScene {
            shape,
            preset,
            env,
            count,
            views,
            res,
            clay_sigma,
            seed,
            out,
        } => commands::make_scene::run(commands::make_scene::Args {
            shape,
            preset,
            env,
            count,
            views,
            res,
            clay_sigma,
            seed,
            out,
        }),
        Command::Render {
            scene,
            env,
            clay,
            gbuffer,
            out,
        } => commands::render::run(&scene, env.as_deref(), clay, gbuffer, &out),
        Command::Train {
            scene,
            config,
            seed,
            variant,
            stop_after_clay,
            out,
        } => commands::train::run(commands::train::Args {
            scene,
            config,
            seed,
            variant,
            stop_after_clay,
            out,
        }),
        Command::Eval {
            scene,
            fixture,
            out,
        } => commands::eval::run(&scene, &fixture, &out),
        Command::Ablate {
            scene,
            config,
            variants,
            seeds,
            init_sigma,
            gt_env,
            out,
        } => commands::ablate::run(commands::ablate::Args {
            scene,
            config,
            variants,
            seeds,
            init_sigma,
            gt_env,
            out,
        }),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
