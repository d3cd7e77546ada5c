//! `precompute-lut`: bake and dump the split-sum BRDF table.

use std::path::Path;

use claysplat_core::img::{write_pfm_rgb, ImageRgb};
use claysplat_core::shading::bake_brdf_lut;
use claysplat_core::Result;

use crate::manifest::Manifest;

pub fn run(res: usize, samples: u32, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let lut = bake_brdf_lut(res, samples)?;

    // (A, B) in the red/green channels, row = roughness, column = cos(theta)
    let mut img = ImageRgb::new(res, res);
    for (i, (a, b)) in lut.data.iter().enumerate() {
        img.data[i * 3] = *a;
        img.data[i * 3 + 1] = *b;
    }
    let path = out.join("brdf_lut.pfm");
    write_pfm_rgb(&path, &img)?;
    println!("baked {res}x{res} LUT with {samples} samples/texel -> {}", path.display());

    let mut manifest = Manifest::new("precompute-lut", out);
    manifest
        .config("res", res)
        .config("samples", samples)
        .output(&path);
    manifest.write()
}
