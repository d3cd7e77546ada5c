//! `eval`: geometry and photometric metrics against fixture ground truth.

use std::io::Write;
use std::path::Path;

use claysplat_core::eval::{
    chamfer_l1, extract_points, normal_mae, psnr, read_ply, MetricReport, ViewMetrics,
};
use claysplat_core::img::read_pfm_rgb;
use claysplat_core::optimize::ssim;
use claysplat_core::scene::{load_gaussians, load_scene_dir, EnvGrid};
use claysplat_core::shading::{shade, EnvironmentMap};
use claysplat_core::splat::render_gbuffer;
use claysplat_core::{Result, Vec3};

use crate::manifest::Manifest;

pub fn run(scene_dir: &Path, fixture_dir: &Path, out: &Path) -> Result<()> {
    // trained gaussians + env; cameras and targets come from the fixture
    let trained = load_gaussians(&scene_dir.join("scene.cspl"))?;
    let env_grid = EnvGrid::load_pfm(&scene_dir.join("env.pfm"))?;
    let fixture = load_scene_dir(fixture_dir)?;
    let gt_cloud = read_ply(&fixture_dir.join("gt.ply"))?;
    std::fs::create_dir_all(out)?;

    let env = EnvironmentMap::prepare_default(env_grid)?;
    let cameras: Vec<_> = fixture.views.iter().map(|v| v.camera.clone()).collect();

    let predicted_cloud = extract_points(&trained, &cameras);
    let chamfer = chamfer_l1(&predicted_cloud, &gt_cloud)?;

    let mut per_view = Vec::new();
    let mut psnr_sum = 0.0;
    let mut ssim_sum = 0.0;
    let mut mae_sum = 0.0;
    let mut mae_count = 0usize;
    for (i, view) in fixture.views.iter().enumerate() {
        let gb = render_gbuffer(&trained, &view.camera);
        let (rgb, _) = shade(&gb, &env, &trained, &view.camera);
        let rgb = rgb.clamped01();
        let p = psnr(&rgb, &view.rgb)?;
        let (s, _) = ssim(&rgb, &view.rgb)?;
        psnr_sum += p;
        ssim_sum += s;
        per_view.push(ViewMetrics {
            view: i,
            psnr_db: p,
            ssim: s,
        });

        // normal MAE against the stored ground-truth normal map, over the
        // intersection of both foregrounds
        let gt_normal_path = fixture_dir.join(format!("views/view_{i:03}_normal.pfm"));
        if gt_normal_path.exists() {
            let enc = read_pfm_rgb(&gt_normal_path)?;
            let mut pred = Vec::with_capacity(gb.pixels.len());
            let mut gt = Vec::with_capacity(gb.pixels.len());
            let mut mask = claysplat_core::img::ImageGray::new(gb.width, gb.height);
            for (p, px) in gb.pixels.iter().enumerate() {
                let g = Vec3::new(enc.data[p * 3], enc.data[p * 3 + 1], enc.data[p * 3 + 2])
                    * 2.0
                    - Vec3::repeat(1.0);
                let valid = px.accum_alpha > 0.5 && g.norm() > 0.5 && px.normal != Vec3::zeros();
                mask.data[p] = if valid { 1.0 } else { 0.0 };
                pred.push(px.normal);
                gt.push(if valid { g.normalize() } else { Vec3::y() });
            }
            if mask.data.iter().any(|v| *v > 0.5) {
                mae_sum += normal_mae(&pred, &gt, &mask)?;
                mae_count += 1;
            }
        }
    }

    let n = fixture.views.len() as f64;
    let report = MetricReport {
        chamfer_l1: chamfer,
        normal_mae_deg: (mae_count > 0).then(|| mae_sum / mae_count as f64),
        psnr_db: psnr_sum / n,
        ssim: ssim_sum / n,
        per_view,
    };

    let json_path = out.join("metrics.json");
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&report).expect("metrics encode"),
    )?;
    let csv_path = out.join("metrics.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    writeln!(f, "{}", MetricReport::CSV_HEADER)?;
    writeln!(f, "{}", report.csv_row())?;
    drop(f);

    println!(
        "chamfer {:.6}  psnr {:.2} dB  ssim {:.4}  normal MAE {}",
        report.chamfer_l1,
        report.psnr_db,
        report.ssim,
        report
            .normal_mae_deg
            .map(|v| format!("{v:.2} deg"))
            .unwrap_or_else(|| "n/a".into())
    );

    let mut manifest = Manifest::new("eval", out);
    manifest
        .config("scene", scene_dir.display())
        .config("fixture", fixture_dir.display())
        .output(&json_path)
        .output(&csv_path);
    manifest.write()
}
