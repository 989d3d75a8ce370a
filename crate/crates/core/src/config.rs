//! `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment line. Unknown keys are an
//! error. Command-line flags override file values, which override the
//! defaults.

use std::path::PathBuf;
use std::str::FromStr;

use crate::embedding::EmbedConfig;
use crate::error::{Error, Result};
use crate::pipeline::{FeatureConfig, TrainConfig};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// `seed` of this config is ignored; the effective embedding seed is
    /// derived from [`RunConfig::seed`].
    pub embed: EmbedConfig,
    pub features: FeatureConfig,
    /// `seed` of this config is ignored likewise.
    pub train: TrainConfig,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            embed: EmbedConfig::default(),
            features: FeatureConfig::default(),
            train: TrainConfig::default(),
            out_dir: PathBuf::from("."),
        }
    }
}

pub const KEYS: &[&str] = &[
    "seed",
    "dim",
    "minn",
    "maxn",
    "window",
    "negatives",
    "embed_epochs",
    "embed_lr",
    "bucket_count",
    "min_count",
    "subsample_t",
    "epochs",
    "batch_size",
    "val_fraction",
    "max_seq_len",
    "hidden",
    "lang_tag",
    "bidirectional",
    "out_dir",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for {key}"))),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "dim" => self.embed.dim = parse(key, value)?,
            "minn" => self.embed.minn = parse(key, value)?,
            "maxn" => self.embed.maxn = parse(key, value)?,
            "window" => self.embed.window = parse(key, value)?,
            "negatives" => self.embed.negatives = parse(key, value)?,
            "embed_epochs" => self.embed.epochs = parse(key, value)?,
            "embed_lr" => self.embed.initial_lr = parse(key, value)?,
            "bucket_count" => self.embed.bucket_count = parse(key, value)?,
            "min_count" => self.embed.min_count = parse(key, value)?,
            "subsample_t" => self.embed.subsample_t = parse(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "batch_size" => self.train.batch_size = parse(key, value)?,
            "val_fraction" => self.train.val_fraction = parse(key, value)?,
            "max_seq_len" => self.train.max_seq_len = parse(key, value)?,
            "hidden" => self.train.hidden = parse(key, value)?,
            "lang_tag" => self.features.use_lang_tag = parse_bool(key, value)?,
            "bidirectional" => self.features.bidirectional = parse_bool(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Embedding config with its seed derived from the run seed.
    pub fn embed_config(&self) -> EmbedConfig {
        EmbedConfig {
            seed: derive_seed(self.seed, "embed"),
            ..self.embed.clone()
        }
    }

    /// Training config carrying the run seed; the pipeline derives its own
    /// split, init and shuffle sub-seeds from it.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }
}
