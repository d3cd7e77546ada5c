//! ASCII PLY I/O for point clouds (x y z nx ny nz).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::scene::PointCloud;
use crate::{Error, Result, Vec3};

pub fn write_ply(cloud: &PointCloud, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let has_normals = cloud.normals.is_some();
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", cloud.len())?;
    writeln!(w, "property float x")?;
    writeln!(w, "property float y")?;
    writeln!(w, "property float z")?;
    if has_normals {
        writeln!(w, "property float nx")?;
        writeln!(w, "property float ny")?;
        writeln!(w, "property float nz")?;
    }
    writeln!(w, "end_header")?;
    for (i, p) in cloud.points.iter().enumerate() {
        if let Some(normals) = &cloud.normals {
            let n = normals[i];
            writeln!(w, "{} {} {} {} {} {}", p.x, p.y, p.z, n.x, n.y, n.z)?;
        } else {
            writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
        }
    }
    Ok(())
}

pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let mut vertex_count = 0usize;
    let mut props = 0usize;
    let mut offset = 0u64;

    // header
    loop {
        let line = lines
            .next()
            .ok_or_else(|| Error::parse(offset, "unexpected end of PLY header"))??;
        offset += line.len() as u64 + 1;
        let line = line.trim().to_string();
        if line == "end_header" {
            break;
        }
        if let Some(rest) = line.strip_prefix("element vertex ") {
            vertex_count = rest
                .trim()
                .parse()
                .map_err(|_| Error::parse(offset, "bad vertex count"))?;
        } else if line.starts_with("property float") {
            props += 1;
        }
    }
    if props != 3 && props != 6 {
        return Err(Error::parse(
            offset,
            format!("expected 3 or 6 float properties, found {props}"),
        ));
    }

    let mut points = Vec::with_capacity(vertex_count);
    let mut normals = if props == 6 {
        Some(Vec::with_capacity(vertex_count))
    } else {
        None
    };
    for _ in 0..vertex_count {
        let line = lines
            .next()
            .ok_or_else(|| Error::parse(offset, "truncated PLY body"))??;
        offset += line.len() as u64 + 1;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(offset, "bad float in PLY body"))?;
        if vals.len() != props {
            return Err(Error::parse(offset, "wrong value count in PLY row"));
        }
        points.push(Vec3::new(vals[0], vals[1], vals[2]));
        if let Some(ns) = &mut normals {
            ns.push(Vec3::new(vals[3], vals[4], vals[5]));
        }
    }
    Ok(PointCloud { points, normals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cloud = PointCloud {
            points: vec![Vec3::new(0.5, -1.25, 3.0), Vec3::new(0.0, 0.0, 1.0)],
            normals: Some(vec![Vec3::z(), Vec3::y()]),
        };
        let path = std::env::temp_dir().join(format!("claysplat_ply_{}.ply", std::process::id()));
        write_ply(&cloud, &path).unwrap();
        let back = read_ply(&path).unwrap();
        assert_eq!(cloud, back);
        std::fs::remove_file(path).ok();
    }
}
