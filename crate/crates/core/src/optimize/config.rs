//! Training configuration, parsed from flat `key = value` text.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

use super::routing::RoutingVariant;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Iterations with clay supervision.
    pub t_clay: usize,
    /// Total iterations.
    pub t_total: usize,
    /// Weight of the clay loss in the total.
    pub lambda_clay: f64,
    /// D-SSIM weight inside the clay loss.
    pub lambda_dssim: f64,
    pub variant: RoutingVariant,
    pub seed: u64,
    /// Position learning rate, decayed exponentially to `lr_position_final`.
    pub lr_position: f64,
    pub lr_position_final: f64,
    /// Learning rate for all other Gaussian attributes, decayed
    /// exponentially to `lr_attributes_final`.
    pub lr_attributes: f64,
    pub lr_attributes_final: f64,
    /// Log-scale learning rate, kept below the attribute rate so disks
    /// cannot balloon into billboards without pruning to cull them.
    pub lr_scale: f64,
    pub lr_scale_final: f64,
    /// Learning rate for the environment grid, decayed exponentially to
    /// `lr_env_final`.
    pub lr_env: f64,
    pub lr_env_final: f64,
    /// End training when the clay phase ends.
    pub stop_after_clay: bool,
    /// Use view masks in the losses.
    pub masked: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            t_clay: 10_000,
            t_total: 50_000,
            lambda_clay: 0.5,
            lambda_dssim: 0.8,
            variant: RoutingVariant::PtrSmooth,
            seed: 0,
            lr_position: 1.6e-4,
            lr_position_final: 1.6e-6,
            lr_attributes: 5e-3,
            lr_attributes_final: 5e-5,
            lr_scale: 1e-3,
            lr_scale_final: 1e-5,
            lr_env: 1e-2,
            lr_env_final: 1e-4,
            stop_after_clay: false,
            masked: false,
        }
    }
}

fn parse_bool(v: &str, key: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean '{v}' for {key}"))),
    }
}

impl TrainConfig {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let num = |v: &str| -> Result<f64> {
                v.parse()
                    .map_err(|_| Error::Config(format!("bad number '{v}' for {key}")))
            };
            match key {
                "t_clay" => cfg.t_clay = num(value)? as usize,
                "t_total" => cfg.t_total = num(value)? as usize,
                "lambda_clay" => cfg.lambda_clay = num(value)?,
                "lambda_dssim" => cfg.lambda_dssim = num(value)?,
                "variant" => cfg.variant = RoutingVariant::parse(value)?,
                "seed" => cfg.seed = num(value)? as u64,
                "lrs" => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    if parts.len() != 3 {
                        return Err(Error::Config(
                            "lrs expects 'position, attributes, env'".into(),
                        ));
                    }
                    cfg.lr_position = num(parts[0])?;
                    cfg.lr_attributes = num(parts[1])?;
                    cfg.lr_env = num(parts[2])?;
                    cfg.lr_attributes_final = cfg.lr_attributes * 1e-2;
                    cfg.lr_env_final = cfg.lr_env * 1e-2;
                }
                "lr_position" => cfg.lr_position = num(value)?,
                "lr_position_final" => cfg.lr_position_final = num(value)?,
                "lr_attributes" => cfg.lr_attributes = num(value)?,
                "lr_attributes_final" => cfg.lr_attributes_final = num(value)?,
                "lr_scale" => cfg.lr_scale = num(value)?,
                "lr_scale_final" => cfg.lr_scale_final = num(value)?,
                "lr_env" => cfg.lr_env = num(value)?,
                "lr_env_final" => cfg.lr_env_final = num(value)?,
                "stop_after_clay" => cfg.stop_after_clay = parse_bool(value, key)?,
                "masked" => cfg.masked = parse_bool(value, key)?,
                other => {
                    return Err(Error::Config(format!(
                        "unknown config key '{other}' on line {}",
                        lineno + 1
                    )))
                }
            }
        }
        if cfg.t_clay == 0 && cfg.lambda_clay != 0.0 {
            // harmless, but t = 0 would make the smooth factor degenerate
            cfg.t_clay = 1;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "t_clay = {}", self.t_clay);
        let _ = writeln!(s, "t_total = {}", self.t_total);
        let _ = writeln!(s, "lambda_clay = {}", self.lambda_clay);
        let _ = writeln!(s, "lambda_dssim = {}", self.lambda_dssim);
        let _ = writeln!(s, "variant = {}", self.variant.name());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(
            s,
            "lrs = {}, {}, {}",
            self.lr_position, self.lr_attributes, self.lr_env
        );
        let _ = writeln!(s, "lr_position_final = {}", self.lr_position_final);
        let _ = writeln!(s, "lr_attributes_final = {}", self.lr_attributes_final);
        let _ = writeln!(s, "lr_scale = {}", self.lr_scale);
        let _ = writeln!(s, "lr_scale_final = {}", self.lr_scale_final);
        let _ = writeln!(s, "lr_env_final = {}", self.lr_env_final);
        let _ = writeln!(s, "stop_after_clay = {}", self.stop_after_clay);
        let _ = writeln!(s, "masked = {}", self.masked);
        s
    }

    /// Exponentially decayed position learning rate at iteration t.
    pub fn position_lr(&self, t: usize) -> f64 {
        decayed(self.lr_position, self.lr_position_final, t, self.t_total)
    }

    /// Decayed attribute learning rate; the schedule keeps Adam's
    /// sign-scale steps from random-walking once the fit is tight.
    pub fn attributes_lr(&self, t: usize) -> f64 {
        decayed(self.lr_attributes, self.lr_attributes_final, t, self.t_total)
    }

    pub fn env_lr(&self, t: usize) -> f64 {
        decayed(self.lr_env, self.lr_env_final, t, self.t_total)
    }

    pub fn scale_lr(&self, t: usize) -> f64 {
        decayed(self.lr_scale, self.lr_scale_final, t, self.t_total)
    }
}

fn decayed(lr0: f64, lr_final: f64, t: usize, t_total: usize) -> f64 {
    if t_total == 0 {
        return lr0;
    }
    let frac = t as f64 / t_total as f64;
    lr0 * (lr_final / lr0).powf(frac)
}
