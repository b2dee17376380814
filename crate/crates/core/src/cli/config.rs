//! Run configuration: one flat key-value text format that covers every
//! pipeline knob, with a canonical serialization whose FNV-1a hash identifies
//! stage artifacts.
//!
//! The format is `key = value`, one per line; `#` starts a comment. Unknown
//! keys are rejected. `SPDFUSE_OUTPUT_DIR`, when set, overrides `output_dir`.

use super::CliError;
use crate::harness::{PipelineConfig, Protocol, ReferenceMode, Representation};
use crate::seqnet::Pooling;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Aggregated run configuration for the batch pipeline.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset_root: PathBuf,
    pub output_dir: PathBuf,
    /// Channel roster; empty means every channel found on disk.
    pub channels: Vec<String>,
    pub protocol: Protocol,
    pub seed: u64,
    pub pipeline: PipelineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset_root: PathBuf::from("data"),
            output_dir: PathBuf::from("out"),
            channels: Vec::new(),
            protocol: Protocol::Loso,
            seed: 42,
            pipeline: PipelineConfig::default(),
        }
    }
}

fn repr_str(r: Representation) -> &'static str {
    match r {
        Representation::SampleCov => "S",
        Representation::CrossCov => "C",
        Representation::BlockSpd => "P",
    }
}

fn reference_str(r: ReferenceMode) -> &'static str {
    match r {
        ReferenceMode::PerSubject => "per-subject",
        ReferenceMode::TrainGlobal => "train-global",
    }
}

fn pooling_str(p: Pooling) -> &'static str {
    match p {
        Pooling::FinalStep => "final",
        Pooling::MeanOverTime => "mean",
    }
}

impl RunConfig {
    /// Canonical text: every key, sorted, one per line. Two configs are
    /// interchangeable iff their canonical texts are equal, and a run is
    /// reproducible from this text alone.
    pub fn canonical_text(&self) -> String {
        let p = &self.pipeline;
        let t = &p.train;
        let mut pairs: Vec<(&str, String)> = vec![
            ("adam_eps", format!("{:e}", t.eps)),
            ("batch_size", t.batch_size.to_string()),
            ("beta1", t.beta1.to_string()),
            ("beta2", t.beta2.to_string()),
            ("centering", p.spd.centering.to_string()),
            ("channels", self.channels.join(",")),
            ("common_rate", p.common_rate.to_string()),
            ("dataset_root", self.dataset_root.display().to_string()),
            ("dropout", t.dropout_rate.to_string()),
            ("epochs", t.epochs.to_string()),
            ("hidden", t.hidden.to_string()),
            ("layers", t.layers.to_string()),
            ("lr", t.lr.to_string()),
            ("mean_max_iters", p.mean.max_iters.to_string()),
            ("mean_step", p.mean.step.to_string()),
            ("mean_tol", format!("{:e}", p.mean.tol)),
            ("metric", p.metric.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("pooling", pooling_str(t.pooling).to_string()),
            ("positive_weight", t.positive_weight.to_string()),
            ("protocol", self.protocol.to_string()),
            ("reference", reference_str(p.reference).to_string()),
            ("representation", repr_str(p.representation).to_string()),
            ("seed", self.seed.to_string()),
            ("segment_seconds", p.segment_seconds.to_string()),
            ("select_k", p.select_k.to_string()),
            ("selection_global", p.selection_global.to_string()),
            ("seq_len", p.seq_len.to_string()),
            ("spd_m", p.spd.m.to_string()),
            ("spd_shrinkage", format!("{:e}", p.spd.shrinkage)),
            ("train_seed", t.seed.to_string()),
        ];
        pairs.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// FNV-1a 64 hash of the canonical text, as fixed-width hex.
    pub fn config_hash(&self) -> String {
        format!("{:016x}", fnv1a64(self.canonical_text().as_bytes()))
    }

    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let usage = |msg: String| CliError::Usage(msg);
        let bad = |key: &str, value: &str, err: String| {
            CliError::Usage(format!("bad value `{value}` for `{key}`: {err}"))
        };
        let p = &mut self.pipeline;
        match key {
            "dataset_root" => self.dataset_root = PathBuf::from(value),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "channels" => {
                self.channels = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            "protocol" => self.protocol = value.parse().map_err(|e: String| bad(key, value, e))?,
            "seed" => {
                self.seed = value.parse().map_err(|e: std::num::ParseIntError| {
                    bad(key, value, e.to_string())
                })?;
                p.train.seed = self.seed;
            }
            "train_seed" => {
                p.train.seed = value
                    .parse()
                    .map_err(|e: std::num::ParseIntError| bad(key, value, e.to_string()))?
            }
            "common_rate" => p.common_rate = parse_f64(key, value)?,
            "segment_seconds" => p.segment_seconds = parse_f64(key, value)?,
            "centering" => {
                p.spd.centering = value.parse().map_err(|e: String| bad(key, value, e))?
            }
            "spd_m" => p.spd.m = parse_usize(key, value)?,
            "spd_shrinkage" => p.spd.shrinkage = parse_f64(key, value)?,
            "representation" => {
                p.representation = value.parse().map_err(|e: String| bad(key, value, e))?
            }
            "metric" => p.metric = value.parse().map_err(|e: String| bad(key, value, e))?,
            "seq_len" => p.seq_len = parse_usize(key, value)?,
            "reference" => p.reference = value.parse().map_err(|e: String| bad(key, value, e))?,
            "select_k" => p.select_k = parse_usize(key, value)?,
            "selection_global" => {
                p.selection_global = value
                    .parse()
                    .map_err(|e: std::str::ParseBoolError| bad(key, value, e.to_string()))?
            }
            "lr" => p.train.lr = parse_f64(key, value)?,
            "beta1" => p.train.beta1 = parse_f64(key, value)?,
            "beta2" => p.train.beta2 = parse_f64(key, value)?,
            "adam_eps" => p.train.eps = parse_f64(key, value)?,
            "epochs" => p.train.epochs = parse_usize(key, value)?,
            "dropout" => p.train.dropout_rate = parse_f64(key, value)?,
            "batch_size" => p.train.batch_size = parse_usize(key, value)?,
            "hidden" => p.train.hidden = parse_usize(key, value)?,
            "layers" => p.train.layers = parse_usize(key, value)?,
            "pooling" => {
                p.train.pooling = value.parse().map_err(|e: String| bad(key, value, e))?
            }
            "positive_weight" => p.train.positive_weight = parse_f64(key, value)?,
            "mean_max_iters" => p.mean.max_iters = parse_usize(key, value)?,
            "mean_tol" => p.mean.tol = parse_f64(key, value)?,
            "mean_step" => p.mean.step = parse_f64(key, value)?,
            other => return Err(usage(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Parse the key-value text format.
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_text(&text)?;
        cfg.apply_env();
        Ok(cfg)
    }

    /// Apply environment overrides (`SPDFUSE_OUTPUT_DIR`).
    pub fn apply_env(&mut self) {
        if let Ok(dir) = std::env::var("SPDFUSE_OUTPUT_DIR") {
            if !dir.is_empty() {
                self.output_dir = PathBuf::from(dir);
            }
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse()
        .map_err(|e: std::num::ParseFloatError| {
            CliError::Usage(format!("bad value `{value}` for `{key}`: {e}"))
        })
}

fn parse_usize(key: &str, value: &str) -> Result<usize, CliError> {
    value
        .parse()
        .map_err(|e: std::num::ParseIntError| {
            CliError::Usage(format!("bad value `{value}` for `{key}`: {e}"))
        })
}

/// FNV-1a, 64-bit.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_through_canonical_text() {
        let mut cfg = RunConfig::default();
        cfg.set("spd_m", "3").unwrap();
        cfg.set("metric", "log-euclidean").unwrap();
        cfg.set("protocol", "kfold:10").unwrap();
        cfg.set("representation", "C").unwrap();
        cfg.set("epochs", "7").unwrap();
        let text = cfg.canonical_text();
        let back = RunConfig::from_text(&text).unwrap();
        assert_eq!(back.canonical_text(), text);
        assert_eq!(back.config_hash(), cfg.config_hash());
    }

    #[test]
    fn unknown_key_rejected() {
        let mut cfg = RunConfig::default();
        assert!(matches!(
            cfg.set("no_such_key", "1"),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let cfg = RunConfig::from_text("# comment\n\nseq_len = 7 # trailing\n").unwrap();
        assert_eq!(cfg.pipeline.seq_len, 7);
    }

    #[test]
    fn hash_changes_with_config() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        b.set("seed", "43").unwrap();
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn seed_key_drives_training_seed() {
        let cfg = RunConfig::from_text("seed = 9\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.pipeline.train.seed, 9);
    }
}
