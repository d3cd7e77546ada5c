//! Portable float map reader/writer (little-endian, `PF`/`Pf` headers).
//!
//! Rows are stored bottom-to-top as the format requires; a negative scale
//! marks little-endian data.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ImageGray, ImageRgb};
use crate::{Error, Result};

fn read_token<R: Read>(r: &mut R, offset: &mut u64) -> Result<String> {
    let mut tok = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return Err(Error::parse(*offset, "unexpected end of PFM header"));
        }
        *offset += 1;
        if byte[0].is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(byte[0]);
    }
    String::from_utf8(tok).map_err(|_| Error::parse(*offset, "non-ascii PFM header"))
}

fn read_header<R: Read>(r: &mut R) -> Result<(bool, usize, usize, f64, u64)> {
    let mut offset = 0u64;
    let magic = read_token(r, &mut offset)?;
    let rgb = match magic.as_str() {
        "PF" => true,
        "Pf" => false,
        other => {
            return Err(Error::parse(
                0,
                format!("bad PFM magic '{other}', expected 'PF' or 'Pf'"),
            ))
        }
    };
    let w: usize = read_token(r, &mut offset)?
        .parse()
        .map_err(|_| Error::parse(offset, "bad PFM width"))?;
    let h: usize = read_token(r, &mut offset)?
        .parse()
        .map_err(|_| Error::parse(offset, "bad PFM height"))?;
    let scale: f64 = read_token(r, &mut offset)?
        .parse()
        .map_err(|_| Error::parse(offset, "bad PFM scale"))?;
    if w == 0 || h == 0 {
        return Err(Error::parse(offset, "zero PFM dimension"));
    }
    Ok((rgb, w, h, scale, offset))
}

fn read_floats<R: Read>(r: &mut R, count: usize, le: bool, offset: u64) -> Result<Vec<f64>> {
    let mut raw = vec![0u8; count * 4];
    r.read_exact(&mut raw)
        .map_err(|_| Error::parse(offset, format!("PFM truncated, expected {count} floats")))?;
    let mut out = Vec::with_capacity(count);
    for (i, chunk) in raw.chunks_exact(4).enumerate() {
        let bytes = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if le {
            f32::from_le_bytes(bytes)
        } else {
            f32::from_be_bytes(bytes)
        };
        if v.is_nan() {
            return Err(Error::parse(offset + 4 * i as u64, "NaN in PFM data"));
        }
        out.push(v as f64);
    }
    Ok(out)
}

pub fn read_pfm_rgb(path: &Path) -> Result<ImageRgb> {
    let mut r = BufReader::new(File::open(path)?);
    let (rgb, w, h, scale, offset) = read_header(&mut r)?;
    if !rgb {
        return Err(Error::parse(0, "expected 3-channel PFM ('PF')"));
    }
    let vals = read_floats(&mut r, w * h * 3, scale < 0.0, offset)?;
    let mag = scale.abs();
    let mut img = ImageRgb::new(w, h);
    for row in 0..h {
        let src = (h - 1 - row) * w * 3;
        let dst = row * w * 3;
        for i in 0..w * 3 {
            img.data[dst + i] = vals[src + i] * mag;
        }
    }
    Ok(img)
}

pub fn read_pfm_gray(path: &Path) -> Result<ImageGray> {
    let mut r = BufReader::new(File::open(path)?);
    let (rgb, w, h, scale, offset) = read_header(&mut r)?;
    if rgb {
        return Err(Error::parse(0, "expected 1-channel PFM ('Pf')"));
    }
    let vals = read_floats(&mut r, w * h, scale < 0.0, offset)?;
    let mag = scale.abs();
    let mut img = ImageGray::new(w, h);
    for row in 0..h {
        let src = (h - 1 - row) * w;
        let dst = row * w;
        for i in 0..w {
            img.data[dst + i] = vals[src + i] * mag;
        }
    }
    Ok(img)
}

pub fn write_pfm_rgb(path: &Path, img: &ImageRgb) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "PF\n{} {}\n-1.0\n", img.width, img.height)?;
    for row in (0..img.height).rev() {
        for i in 0..img.width * 3 {
            let v = img.data[row * img.width * 3 + i] as f32;
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_pfm_gray(path: &Path, img: &ImageGray) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "Pf\n{} {}\n-1.0\n", img.width, img.height)?;
    for row in (0..img.height).rev() {
        for i in 0..img.width {
            let v = img.data[row * img.width + i] as f32;
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}
