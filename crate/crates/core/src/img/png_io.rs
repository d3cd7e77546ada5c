//! 8-bit PNG I/O for LDR images and binary masks.

use std::path::Path;

use image::{GrayImage, ImageReader, RgbImage};

use super::{ImageGray, ImageRgb};
use crate::{Error, Result};

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_png_rgb(path: &Path, img: &ImageRgb) -> Result<()> {
    let mut out = RgbImage::new(img.width as u32, img.height as u32);
    for y in 0..img.height {
        for x in 0..img.width {
            let i = img.idx(x, y);
            out.put_pixel(
                x as u32,
                y as u32,
                image::Rgb([
                    to_u8(img.data[i]),
                    to_u8(img.data[i + 1]),
                    to_u8(img.data[i + 2]),
                ]),
            );
        }
    }
    out.save(path)
        .map_err(|e| Error::Other(format!("png write {}: {e}", path.display())))
}

pub fn read_png_rgb(path: &Path) -> Result<ImageRgb> {
    let decoded = ImageReader::open(path)?
        .decode()
        .map_err(|e| Error::Other(format!("png read {}: {e}", path.display())))?
        .to_rgb8();
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let mut img = ImageRgb::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let p = decoded.get_pixel(x as u32, y as u32);
            let i = img.idx(x, y);
            img.data[i] = p.0[0] as f64 / 255.0;
            img.data[i + 1] = p.0[1] as f64 / 255.0;
            img.data[i + 2] = p.0[2] as f64 / 255.0;
        }
    }
    Ok(img)
}

pub fn write_png_gray(path: &Path, img: &ImageGray) -> Result<()> {
    let mut out = GrayImage::new(img.width as u32, img.height as u32);
    for y in 0..img.height {
        for x in 0..img.width {
            out.put_pixel(x as u32, y as u32, image::Luma([to_u8(img.get(x, y))]));
        }
    }
    out.save(path)
        .map_err(|e| Error::Other(format!("png write {}: {e}", path.display())))
}

pub fn read_png_gray(path: &Path) -> Result<ImageGray> {
    let decoded = ImageReader::open(path)?
        .decode()
        .map_err(|e| Error::Other(format!("png read {}: {e}", path.display())))?
        .to_luma8();
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let mut img = ImageGray::new(w, h);
    for y in 0..h {
        for x in 0..w {
            img.set(x, y, decoded.get_pixel(x as u32, y as u32).0[0] as f64 / 255.0);
        }
    }
    Ok(img)
}
