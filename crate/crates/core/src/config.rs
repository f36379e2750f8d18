//! Flat `key = value` configuration files.
//!
//! ```text
//! # comment
//! hvs.kind = gaussian          # gaussian | nasanen
//! hvs.sigma = 2.0
//! hvs.radius = 6
//! hvs.scale = 2000
//! hvs.size = 23
//! metric.omega_s = 0.006
//! train.omega_a = 0.002
//! train.batch = 4
//! train.crop = 32
//! train.iterations = 200
//! train.lr_max = 0.0003
//! train.lr_min = 0.00001
//! train.seed = 0
//! train.brightness_jitter = 0.9
//! policy.blocks = 4
//! policy.channels = 16
//! ```
//!
//! Unknown keys are errors. `to_text` writes every key, so a snapshot is
//! a complete description.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hvs::{
    HvsFilter, DEFAULT_GAUSSIAN_RADIUS, DEFAULT_GAUSSIAN_SIGMA, DEFAULT_NASANEN_SCALE, DEFAULT_NASANEN_SIZE,
};
use crate::marl::TrainConfig;
use crate::metrics::{ErrorMetricConfig, DEFAULT_OMEGA_S};
use crate::policy::Architecture;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvsChoice {
    Gaussian,
    Nasanen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub hvs_kind: HvsChoice,
    pub hvs_sigma: f64,
    pub hvs_radius: usize,
    pub hvs_scale: f64,
    pub hvs_size: usize,
    pub omega_s: f64,
    pub omega_a: f64,
    pub batch: usize,
    pub crop: usize,
    pub iterations: u64,
    pub lr_max: f64,
    pub lr_min: f64,
    pub seed: u64,
    pub brightness_jitter: f64,
    pub blocks: usize,
    pub channels: usize,
}

impl Default for Config {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            hvs_kind: HvsChoice::Gaussian,
            hvs_sigma: DEFAULT_GAUSSIAN_SIGMA,
            hvs_radius: DEFAULT_GAUSSIAN_RADIUS,
            hvs_scale: DEFAULT_NASANEN_SCALE,
            hvs_size: DEFAULT_NASANEN_SIZE,
            omega_s: DEFAULT_OMEGA_S,
            omega_a: t.omega_a,
            batch: t.batch,
            crop: t.crop,
            iterations: t.iterations,
            lr_max: t.lr_max,
            lr_min: t.lr_min,
            seed: t.seed,
            brightness_jitter: t.brightness_jitter,
            blocks: t.arch.blocks,
            channels: t.arch.channels,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::MalformedConfig(format!("bad value '{value}' for {key}")))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::MalformedConfig(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "hvs.kind" => {
                self.hvs_kind = match value {
                    "gaussian" => HvsChoice::Gaussian,
                    "nasanen" => HvsChoice::Nasanen,
                    _ => return Err(Error::MalformedConfig(format!("unknown hvs.kind '{value}'"))),
                }
            }
            "hvs.sigma" => self.hvs_sigma = parse_value(key, value)?,
            "hvs.radius" => self.hvs_radius = parse_value(key, value)?,
            "hvs.scale" => self.hvs_scale = parse_value(key, value)?,
            "hvs.size" => self.hvs_size = parse_value(key, value)?,
            "metric.omega_s" => self.omega_s = parse_value(key, value)?,
            "train.omega_a" => self.omega_a = parse_value(key, value)?,
            "train.batch" => self.batch = parse_value(key, value)?,
            "train.crop" => self.crop = parse_value(key, value)?,
            "train.iterations" => self.iterations = parse_value(key, value)?,
            "train.lr_max" => self.lr_max = parse_value(key, value)?,
            "train.lr_min" => self.lr_min = parse_value(key, value)?,
            "train.seed" => self.seed = parse_value(key, value)?,
            "train.brightness_jitter" => self.brightness_jitter = parse_value(key, value)?,
            "policy.blocks" => self.blocks = parse_value(key, value)?,
            "policy.channels" => self.channels = parse_value(key, value)?,
            _ => return Err(Error::MalformedConfig(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let kind = match self.hvs_kind {
            HvsChoice::Gaussian => "gaussian",
            HvsChoice::Nasanen => "nasanen",
        };
        let _ = writeln!(s, "hvs.kind = {kind}");
        let _ = writeln!(s, "hvs.sigma = {}", self.hvs_sigma);
        let _ = writeln!(s, "hvs.radius = {}", self.hvs_radius);
        let _ = writeln!(s, "hvs.scale = {}", self.hvs_scale);
        let _ = writeln!(s, "hvs.size = {}", self.hvs_size);
        let _ = writeln!(s, "metric.omega_s = {}", self.omega_s);
        let _ = writeln!(s, "train.omega_a = {}", self.omega_a);
        let _ = writeln!(s, "train.batch = {}", self.batch);
        let _ = writeln!(s, "train.crop = {}", self.crop);
        let _ = writeln!(s, "train.iterations = {}", self.iterations);
        let _ = writeln!(s, "train.lr_max = {}", self.lr_max);
        let _ = writeln!(s, "train.lr_min = {}", self.lr_min);
        let _ = writeln!(s, "train.seed = {}", self.seed);
        let _ = writeln!(s, "train.brightness_jitter = {}", self.brightness_jitter);
        let _ = writeln!(s, "policy.blocks = {}", self.blocks);
        let _ = writeln!(s, "policy.channels = {}", self.channels);
        s
    }

    pub fn hvs(&self) -> Result<HvsFilter> {
        match self.hvs_kind {
            HvsChoice::Gaussian => HvsFilter::gaussian(self.hvs_sigma, self.hvs_radius),
            HvsChoice::Nasanen => HvsFilter::nasanen(self.hvs_scale, self.hvs_size),
        }
    }

    pub fn metric(&self) -> Result<ErrorMetricConfig> {
        let m = ErrorMetricConfig {
            omega_s: self.omega_s,
            ..ErrorMetricConfig::with_hvs(self.hvs()?)
        };
        m.validate()?;
        Ok(m)
    }

    pub fn train(&self) -> Result<TrainConfig> {
        let t = TrainConfig {
            omega_s: self.omega_s,
            omega_a: self.omega_a,
            batch: self.batch,
            crop: self.crop,
            iterations: self.iterations,
            lr_max: self.lr_max,
            lr_min: self.lr_min,
            seed: self.seed,
            brightness_jitter: self.brightness_jitter,
            hvs: self.hvs()?,
            arch: Architecture::new(self.blocks, self.channels)?,
        };
        t.validate()?;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_defaults() {
        let c = Config::default();
        assert_eq!(Config::parse(&c.to_text()).unwrap(), c);
        assert_eq!(c.train().unwrap(), TrainConfig::default());
    }

    #[test]
    fn parses_values() {
        let c = Config::parse("# x\nhvs.kind = nasanen\n\ntrain.batch=8 # inline\npolicy.blocks = 16\n").unwrap();
        assert_eq!(c.hvs_kind, HvsChoice::Nasanen);
        assert_eq!(c.batch, 8);
        assert_eq!(c.blocks, 16);
        assert!(c.hvs().is_ok());
    }

    #[test]
    fn errors() {
        assert!(matches!(Config::parse("nope = 1"), Err(Error::MalformedConfig(_))));
        assert!(matches!(Config::parse("train.batch = x"), Err(Error::MalformedConfig(_))));
        assert!(matches!(Config::parse("train.batch"), Err(Error::MalformedConfig(_))));
        assert!(matches!(Config::parse("hvs.kind = box"), Err(Error::MalformedConfig(_))));
    }
}
