//! `spdfuse` — batch CLI for the SPD-fusion pipeline.
//!
//! Subcommands: `synth`, `ingest-check`, `build-spd`, `map-tangent`,
//! `train`, `evaluate`, `ablate`, `heatmap`. Exit codes: 0 success,
//! 1 usage, 2 data error, 3 numerical error.

use clap::{Args, Parser, Subcommand};
use spdfuse::cli::stages::{self, HeatmapSource};
use spdfuse::cli::{ClassGen, CliError, RunConfig, SyntheticSpec};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "spdfuse", version, about = "Multimodal SPD-fusion pipeline")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Configuration shared by the pipeline subcommands. Precedence:
/// built-in defaults, then `--config` file, then `--data`/`--out`, then
/// repeated `--set key=value`, then `SPDFUSE_OUTPUT_DIR`.
#[derive(Args)]
struct CommonOpts {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset root (overrides `dataset_root`).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any configuration key, repeatable: --set spd_m=3 --set metric=affine
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl CommonOpts {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(data) = &self.data {
            cfg.dataset_root = data.clone();
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        for pair in &self.set {
            let (k, v) = pair.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("--set expects KEY=VALUE, got `{pair}`"))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.apply_env();
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset in the ingest layout.
    Synth {
        /// Dataset root to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        subjects: usize,
        #[arg(long, default_value_t = 4)]
        trials: usize,
        /// Trial duration in seconds.
        #[arg(long, default_value_t = 480.0)]
        duration: f64,
        /// Slow mean-envelope amplitude of class 0.
        #[arg(long, default_value_t = 0.0)]
        class0_amp: f64,
        /// Slow mean-envelope amplitude of class 1.
        #[arg(long, default_value_t = 0.28)]
        class1_amp: f64,
        /// Noise covariance scale of class 0.
        #[arg(long, default_value_t = 1.0)]
        class0_cov: f64,
        /// Noise covariance scale of class 1.
        #[arg(long, default_value_t = 1.0)]
        class1_cov: f64,
        /// Envelope period in seconds.
        #[arg(long, default_value_t = 80.0)]
        period: f64,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Generate the null-effect variant (classes share all parameters).
        #[arg(long, default_value_t = false)]
        null: bool,
    },
    /// Validate a dataset tree and report every problem.
    IngestCheck {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated channel roster; unknown channels are rejected.
        #[arg(long)]
        channels: Option<String>,
    },
    /// Segment the dataset and write the SPD matrix artifact.
    BuildSpd {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Map an SPD artifact to tangent vectors at per-subject references.
    MapTangent {
        /// SPD artifact directory (default: <output_dir>/spd).
        #[arg(long)]
        spd: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Train the sequence classifier on a tangent artifact.
    Train {
        /// Tangent artifact directory (default: <output_dir>/tangent).
        #[arg(long)]
        tangent: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the subject-independent protocol and write the fold reports.
    Evaluate {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the S / C / P(m) ablation grid.
    Ablate {
        /// Comma-separated representations, e.g. S,C,P2,P3,P4.
        #[arg(long, default_value = "S,C,P2,P3,P4")]
        grid: String,
        /// Comma-separated metrics: affine, log-euclidean.
        #[arg(long, default_value = "affine")]
        metrics: String,
        /// Semicolon-separated physio channel subsets ("all" or name lists).
        #[arg(long, default_value = "all")]
        modalities: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Render one SPD matrix (or the geometric mean) as CSV + PGM heatmap.
    Heatmap {
        /// SPD artifact directory.
        #[arg(long)]
        spd: PathBuf,
        /// Matrix index within the artifact.
        #[arg(long, conflicts_with = "mean")]
        index: Option<usize>,
        /// Use the geometric mean of all matrices instead of one index.
        #[arg(long, default_value_t = false)]
        mean: bool,
        /// Output path prefix; writes <out>.csv, <out>.pgm, <out>.labels.txt.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Synth {
            out,
            subjects,
            trials,
            duration,
            class0_amp,
            class1_amp,
            class0_cov,
            class1_cov,
            period,
            noise,
            seed,
            null,
        } => {
            let mut spec = SyntheticSpec {
                subjects,
                trials_per_subject: trials,
                duration_seconds: duration,
                class0: ClassGen {
                    covariance_scale: class0_cov,
                    envelope_amplitude: class0_amp,
                },
                class1: ClassGen {
                    covariance_scale: class1_cov,
                    envelope_amplitude: class1_amp,
                },
                envelope_period_seconds: period,
                noise_level: noise,
                seed,
            };
            if null {
                spec = spec.null_effect();
            }
            stages::cmd_synth(&spec, &out)
        }
        Cmd::IngestCheck { data, channels } => {
            let roster: Vec<String> = channels
                .unwrap_or_default()
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            stages::cmd_ingest_check(&data, &roster)
        }
        Cmd::BuildSpd { common } => {
            let cfg = common.resolve()?;
            stages::cmd_build_spd(&cfg).map(|_| ())
        }
        Cmd::MapTangent { spd, common } => {
            let cfg = common.resolve()?;
            let spd_dir = spd.unwrap_or_else(|| cfg.output_dir.join("spd"));
            stages::cmd_map_tangent(&cfg, &spd_dir).map(|_| ())
        }
        Cmd::Train { tangent, common } => {
            let cfg = common.resolve()?;
            let tangent_dir = tangent.unwrap_or_else(|| cfg.output_dir.join("tangent"));
            stages::cmd_train(&cfg, &tangent_dir).map(|_| ())
        }
        Cmd::Evaluate { common } => {
            let cfg = common.resolve()?;
            stages::cmd_evaluate(&cfg).map(|_| ())
        }
        Cmd::Ablate {
            grid,
            metrics,
            modalities,
            common,
        } => {
            let cfg = common.resolve()?;
            stages::cmd_ablate(&cfg, &grid, &metrics, &modalities).map(|_| ())
        }
        Cmd::Heatmap {
            spd,
            index,
            mean,
            out,
        } => {
            let source = if mean {
                HeatmapSource::GeometricMean
            } else {
                HeatmapSource::Index(index.unwrap_or(0))
            };
            stages::cmd_heatmap(&spd, source, &out)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            std::process::exit(if is_help { 0 } else { 1 });
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
