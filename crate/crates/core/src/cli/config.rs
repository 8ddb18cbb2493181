//! Run configuration: defaults, then an optional TOML key/value file, then
//! command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::conv_metrics::{DdurMode, MetricsConfig};
use crate::error::{Error, Result};
use crate::features::LldConfig;
use crate::ranker::RankerConfig;

/// Keys accepted in a config file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub c: Option<f64>,
    pub n_similar: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub mcep_order: Option<usize>,
    pub ddur_mode: Option<DdurMode>,
    pub include_c0: Option<bool>,
    pub lld_frame_ms: Option<f64>,
    pub lld_hop_ms: Option<f64>,
    pub f0_min: Option<f64>,
    pub f0_max: Option<f64>,
    pub voicing_threshold: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::NotFound(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .unwrap_or(0),
            message: e.message().to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub features: LldConfig,
    pub ranker: RankerConfig,
    pub n_similar: Option<usize>,
    pub seed: u64,
    pub jobs: usize,
    pub metrics: MetricsConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            features: LldConfig::default(),
            ranker: RankerConfig::default(),
            n_similar: None,
            seed: 0,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            metrics: MetricsConfig::default(),
            output_dir: None,
        }
    }
}

impl Config {
    /// Overlays every key present in `file`.
    pub fn apply(&mut self, file: &ConfigFile) {
        if let Some(c) = file.c {
            self.ranker.c = c;
        }
        if file.n_similar.is_some() {
            self.n_similar = file.n_similar;
        }
        if let Some(seed) = file.seed {
            self.seed = seed;
        }
        if let Some(jobs) = file.jobs {
            self.jobs = jobs;
        }
        if let Some(order) = file.mcep_order {
            self.metrics.mcep.order = order;
        }
        if let Some(mode) = file.ddur_mode {
            self.metrics.ddur_mode = mode;
        }
        if let Some(c0) = file.include_c0 {
            self.metrics.include_c0 = c0;
        }
        if let Some(ms) = file.lld_frame_ms {
            self.features.frame_ms = ms;
        }
        if let Some(ms) = file.lld_hop_ms {
            self.features.hop_ms = ms;
        }
        for pitch in [&mut self.features.pitch, &mut self.metrics.pitch] {
            if let Some(v) = file.f0_min {
                pitch.f0_min = v;
            }
            if let Some(v) = file.f0_max {
                pitch.f0_max = v;
            }
            if let Some(v) = file.voicing_threshold {
                pitch.voicing_threshold = v;
            }
        }
        if file.output_dir.is_some() {
            self.output_dir = file.output_dir.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.ranker.c > 0.0 && self.ranker.c.is_finite()) {
            return bad(format!(
                "c must be positive and finite, got {}",
                self.ranker.c
            ));
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        let order = self.metrics.mcep.order;
        if order < 1 || order >= self.metrics.mcep.n_bands {
            return bad(format!(
                "mcep_order must lie in 1..{}",
                self.metrics.mcep.n_bands
            ));
        }
        if !(self.features.frame_ms > 0.0 && self.features.hop_ms > 0.0) {
            return bad("LLD frame and hop must be positive".into());
        }
        self.features.pitch.validate()?;
        self.metrics.pitch.validate()
    }

    /// Places relative output paths under `output_dir` when one is set.
    pub fn output_path(&self, out: &Path) -> Result<PathBuf> {
        match &self.output_dir {
            Some(dir) if out.is_relative() => {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                Ok(dir.join(out))
            }
            _ => Ok(out.to_path_buf()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(
            &path,
            "c = 0.5\nseed = 9\nmcep_order = 12\nddur_mode = \"span\"\nf0_max = 500.0\n",
        )
        .unwrap();
        let mut cfg = Config::default();
        cfg.apply(&ConfigFile::load(&path).unwrap());
        assert_eq!(cfg.ranker.c, 0.5);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.metrics.mcep.order, 12);
        assert_eq!(cfg.metrics.ddur_mode, DdurMode::Span);
        assert_eq!(cfg.features.pitch.f0_max, 500.0);
        assert_eq!(cfg.metrics.pitch.f0_max, 500.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "c = 1.0\nlearning_rate = 0.1\n").unwrap();
        assert!(matches!(
            ConfigFile::load(&path),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn out_of_range_values_fail_validation() {
        let mut cfg = Config::default();
        cfg.ranker.c = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = Config::default();
        cfg.metrics.mcep.order = 40;
        assert!(cfg.validate().is_err());
        let cfg = Config {
            jobs: 0,
            ..Config::default()
        };
        assert!(cfg.validate().is_err());
    }
}
