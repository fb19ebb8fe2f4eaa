//! Run configuration: a JSON document merged with command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Shift,
    Linear,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Shift => "shift",
            ModelKind::Linear => "linear",
        }
    }
}

/// Every field is optional so that a file and the flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub model: Option<ModelKind>,
    pub p: Option<u64>,
    pub n: Option<usize>,
    pub resolution: Option<u32>,
    pub horizon: Option<u32>,
    pub max_k: Option<u32>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub n_max: Option<u32>,
    pub out: Option<PathBuf>,
}

impl PartialConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// `self` wins over `base`.
    pub fn over(self, base: PartialConfig) -> PartialConfig {
        PartialConfig {
            model: self.model.or(base.model),
            p: self.p.or(base.p),
            n: self.n.or(base.n),
            resolution: self.resolution.or(base.resolution),
            horizon: self.horizon.or(base.horizon),
            max_k: self.max_k.or(base.max_k),
            seed: self.seed.or(base.seed),
            samples: self.samples.or(base.samples),
            n_max: self.n_max.or(base.n_max),
            out: self.out.or(base.out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    /// `None` lets batteries cover both models.
    pub model: Option<ModelKind>,
    pub p: u64,
    pub n: usize,
    pub resolution: u32,
    pub horizon: u32,
    pub max_k: u32,
    pub seed: u64,
    pub samples: usize,
    pub n_max: u32,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(c: PartialConfig) -> Result<Self> {
        let cfg = RunConfig {
            model: c.model,
            p: c.p.unwrap_or(2),
            n: c.n.unwrap_or(2),
            resolution: c.resolution.unwrap_or(3),
            horizon: c.horizon.unwrap_or(10),
            max_k: c.max_k.unwrap_or(10),
            seed: c.seed.unwrap_or(0),
            samples: c.samples.unwrap_or(20),
            n_max: c.n_max.unwrap_or(8),
            out: c.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if ![2, 3, 5, 7].contains(&self.p) {
            bail!("p must be one of 2, 3, 5, 7 (got {})", self.p);
        }
        if !(1..=4).contains(&self.n) {
            bail!("n must lie in 1..=4 (got {})", self.n);
        }
        if self.resolution > 8 {
            bail!("resolution must be at most 8 (got {})", self.resolution);
        }
        if !(1..=64).contains(&self.horizon) {
            bail!("horizon must lie in 1..=64 (got {})", self.horizon);
        }
        if self.max_k > 32 {
            bail!("max-k must be at most 32 (got {})", self.max_k);
        }
        if !(1..=10_000).contains(&self.samples) {
            bail!("samples must lie in 1..=10000 (got {})", self.samples);
        }
        if self.n_max > 16 {
            bail!("n-max must be at most 16 (got {})", self.n_max);
        }
        Ok(())
    }

    pub fn model_or_shift(&self) -> ModelKind {
        self.model.unwrap_or(ModelKind::Shift)
    }

    /// The models a battery runs on.
    pub fn models(&self) -> Vec<ModelKind> {
        match self.model {
            Some(m) => vec![m],
            None => vec![ModelKind::Shift, ModelKind::Linear],
        }
    }
}
