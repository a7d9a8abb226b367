//! Flat key = value run configuration.
//!
//! Unknown keys are hard errors so typos cannot silently fall back to
//! defaults; constraint violations name the violated constraint.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use mhd_core::norms;
use mhd_core::picard::PicardConfig;
use mhd_core::presets::PRESET_NAMES;
use mhd_core::state::PhysicsConfig;

/// Everything a run needs: physics, iteration, grid, initial data, and
/// output plumbing.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub physics: PhysicsConfig,
    pub picard: PicardConfig,
    pub resolution: usize,
    pub box_length: f64,
    /// Named preset, unless a snapshot file is given.
    pub preset: String,
    /// Initial condition from a snapshot file instead of a preset.
    pub snapshot: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Write every k-th time level when dumping trajectories.
    pub cadence: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            physics: PhysicsConfig::default(),
            picard: PicardConfig::default(),
            resolution: 16,
            box_length: std::f64::consts::TAU,
            preset: "small-data".to_string(),
            snapshot: None,
            output_dir: PathBuf::from("out"),
            cadence: 1,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "pressure_coeff",
    "gamma",
    "mu",
    "lambda",
    "horizon",
    "dt",
    "tol",
    "max_sweeps",
    "damping",
    "ball_radius_factor",
    "substeps",
    "div_tol",
    "q",
    "linear_tol",
    "linear_max_iters",
    "resolution",
    "box_length",
    "preset",
    "snapshot",
    "output_dir",
    "cadence",
];

fn parse_f64(key: &str, value: &str) -> Result<f64, String> {
    value
        .parse::<f64>()
        .map_err(|_| format!("key '{key}': expected a number, got '{value}'"))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, String> {
    value
        .parse::<usize>()
        .map_err(|_| format!("key '{key}': expected a non-negative integer, got '{value}'"))
}

impl RunConfig {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut seen: HashMap<&str, String> = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                format!("line {}: expected 'key = value', got '{line}'", lineno + 1)
            })?;
            let key = key.trim();
            let value = value.trim();
            let known = KNOWN_KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| format!("line {}: unknown key '{key}'", lineno + 1))?;
            if seen.insert(known, value.to_string()).is_some() {
                return Err(format!("line {}: duplicate key '{key}'", lineno + 1));
            }
        }
        let mut cfg = RunConfig::default();
        for (key, value) in &seen {
            match *key {
                "pressure_coeff" => cfg.physics.pressure_coeff = parse_f64(key, value)?,
                "gamma" => cfg.physics.gamma = parse_f64(key, value)?,
                "mu" => cfg.physics.mu = parse_f64(key, value)?,
                "lambda" => cfg.physics.lambda = parse_f64(key, value)?,
                "horizon" => cfg.picard.horizon = parse_f64(key, value)?,
                "dt" => cfg.picard.dt = parse_f64(key, value)?,
                "tol" => cfg.picard.tol = parse_f64(key, value)?,
                "max_sweeps" => cfg.picard.max_sweeps = parse_usize(key, value)?,
                "damping" => cfg.picard.damping = parse_f64(key, value)?,
                "ball_radius_factor" => cfg.picard.ball_radius_factor = parse_f64(key, value)?,
                "substeps" => cfg.picard.substeps = parse_usize(key, value)?,
                "div_tol" => cfg.picard.div_tol = parse_f64(key, value)?,
                "q" => cfg.picard.q = parse_f64(key, value)?,
                "linear_tol" => cfg.picard.linear_tol = parse_f64(key, value)?,
                "linear_max_iters" => cfg.picard.linear_max_iters = parse_usize(key, value)?,
                "resolution" => cfg.resolution = parse_usize(key, value)?,
                "box_length" => cfg.box_length = parse_f64(key, value)?,
                "preset" => cfg.preset = value.to_string(),
                "snapshot" => cfg.snapshot = Some(PathBuf::from(value)),
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "cadence" => cfg.cadence = parse_usize(key, value)?,
                other => unreachable!("key '{other}' passed the known-key filter"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config '{}': {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.physics.validate().map_err(|e| e.to_string())?;
        self.picard.validate().map_err(|e| e.to_string())?;
        norms::validate_q(self.picard.q).map_err(|e| e.to_string())?;
        if self.resolution < 4 {
            return Err(format!(
                "constraint 'resolution >= 4' violated: got {}",
                self.resolution
            ));
        }
        if !(self.box_length > 0.0) {
            return Err(format!(
                "constraint 'box_length > 0' violated: got {}",
                self.box_length
            ));
        }
        if self.cadence == 0 {
            return Err("constraint 'cadence >= 1' violated: got 0".to_string());
        }
        if self.snapshot.is_none() && !PRESET_NAMES.contains(&self.preset.as_str()) {
            return Err(format!(
                "unknown preset '{}', expected one of {:?}",
                self.preset, PRESET_NAMES
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let cfg = RunConfig::parse("preset = rest\nresolution = 8 # comment\n").unwrap();
        assert_eq!(cfg.preset, "rest");
        assert_eq!(cfg.resolution, 8);

        assert!(RunConfig::parse("unknown_key = 1").is_err());
        assert!(RunConfig::parse("gamma = 1.0").is_err()); // gamma must exceed 1
        assert!(RunConfig::parse("mu = 0").is_err());
        assert!(RunConfig::parse("preset = nope").is_err());
        assert!(RunConfig::parse("dt = abc").is_err());
        assert!(RunConfig::parse("dt = 0.01\ndt = 0.02").is_err());
    }

    #[test]
    fn viscosity_constraint_is_named() {
        let err = RunConfig::parse("lambda = -5").unwrap_err();
        assert!(err.contains("2*mu + 3*lambda"), "message: {err}");
    }
}
