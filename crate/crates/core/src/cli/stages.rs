//! Stage implementations behind the CLI subcommands. Each stage reads the
//! previous stage's artifact directory, writes its own with a config-hash
//! manifest, and is a byte-wise no-op when re-run with unchanged inputs and
//! config.

use super::artifacts::{self, EntryMeta};
use super::config::fnv1a64;
use super::dataset;
use super::heatmap;
use super::synth::SyntheticSpec;
use super::{CliError, RunConfig};
use crate::harness::{
    self, fit_selection, plan_folds, pooled_metrics, segment_representation, AblationCell,
    AblationSpec, FoldReport, Metrics, PreparedRecording, ReferenceMode, Representation,
};
use crate::manifold::TangentBase;
use crate::seqnet::{self, VectorSequence};
use crate::signals::{assemble_segments, stacked_channel_names, Channel, Recording, Standardizer};
use crate::spdrep::{Segment, SpdMatrix};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Chain a stage's identity from its own config and the parent artifact.
fn stage_hash(stage: &str, config_hash: &str, parent_hash: &str) -> String {
    let text = format!("{stage}\n{config_hash}\n{parent_hash}\n");
    format!("{:016x}", fnv1a64(text.as_bytes()))
}

pub fn cmd_synth(spec: &SyntheticSpec, out: &Path) -> Result<(), CliError> {
    super::synth::generate(spec, out)?;
    println!(
        "wrote synthetic dataset: {} subjects x {} trials under {}",
        spec.subjects,
        spec.trials_per_subject,
        out.display()
    );
    Ok(())
}

pub fn cmd_ingest_check(root: &Path, roster: &[String]) -> Result<(), CliError> {
    let (ok, issues) = dataset::ingest_check(root, roster)?;
    println!("{ok} trial(s) valid");
    for issue in &issues {
        println!("issue: {issue}");
    }
    if issues.is_empty() {
        Ok(())
    } else {
        Err(CliError::BadData {
            file: root.to_path_buf(),
            detail: format!("{} trial(s) failed validation", issues.len()),
        })
    }
}

/// Segments paired with their provenance, plus the stacked channel names.
type LoadedSegments = (Vec<(Segment, EntryMeta)>, Vec<String>);

/// Load, prepare, and (optionally, stage semantics) select globally; returns
/// standardized segments with their metadata and the stacked channel names.
fn load_segments(cfg: &RunConfig) -> Result<LoadedSegments, CliError> {
    let bundles = dataset::ingest(&cfg.dataset_root, &cfg.channels)?;
    let prepared = harness::prepare(&bundles, cfg.pipeline.common_rate)?;

    // The staged chain has no folds; selection and standardization are fitted
    // on the whole dataset here. The `evaluate` and `ablate` commands refit
    // both inside every training fold instead.
    let selection = if cfg.pipeline.select_k > 0 {
        let all: Vec<&PreparedRecording> = prepared.iter().collect();
        Some(fit_selection(&all, cfg.pipeline.select_k, "global")?)
    } else {
        None
    };

    let mut segments = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for rec in &prepared {
        let extra: Vec<Channel> = match &selection {
            Some(model) => model
                .selected_indices
                .iter()
                .map(|&i| rec.distances[i].clone())
                .collect(),
            None => Vec::new(),
        };
        let recording = Recording::new(
            rec.subject_id.clone(),
            rec.trial_id.clone(),
            rec.label,
            rec.physio.clone(),
        )?;
        if names.is_empty() {
            names = stacked_channel_names(&recording, &extra);
        }
        for seg in assemble_segments(
            &recording,
            &extra,
            cfg.pipeline.segment_seconds,
            cfg.pipeline.common_rate,
            cfg.pipeline.spd.centering,
        )? {
            let meta = EntryMeta {
                subject_id: seg.subject_id.clone(),
                trial_id: seg.trial_id.clone(),
                label: seg.label.unwrap_or(false),
                start_index: seg.start_index,
            };
            segments.push((seg, meta));
        }
    }

    let standardizer = Standardizer::fit(
        &segments.iter().map(|(s, _)| s.clone()).collect::<Vec<_>>(),
    )?;
    let segments = segments
        .into_iter()
        .map(|(s, m)| (standardizer.apply(&s), m))
        .collect();
    Ok((segments, names))
}

pub fn cmd_build_spd(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.output_dir.join("spd");
    let hash = stage_hash("build-spd", &cfg.config_hash(), "dataset");
    if artifacts::up_to_date(&dir, "spd", &hash) {
        println!("spd artifact up to date: {}", dir.display());
        return Ok(dir);
    }
    let (segments, names) = load_segments(cfg)?;
    let mut matrices = Vec::with_capacity(segments.len());
    let mut entries = Vec::with_capacity(segments.len());
    for (seg, meta) in &segments {
        matrices.push(segment_representation(seg, &cfg.pipeline)?);
        entries.push(meta.clone());
    }
    artifacts::write_spd_artifact(
        &dir,
        &matrices,
        &entries,
        &names,
        &cfg.canonical_text(),
        &hash,
    )?;
    println!(
        "wrote {} SPD matrices of dim {} to {}",
        matrices.len(),
        matrices.first().map(|m| m.dim()).unwrap_or(0),
        dir.display()
    );
    Ok(dir)
}

pub fn cmd_map_tangent(cfg: &RunConfig, spd_dir: &Path) -> Result<PathBuf, CliError> {
    let dir = cfg.output_dir.join("tangent");
    let (matrices, index) = artifacts::read_spd_artifact(spd_dir)?;
    let hash = stage_hash("map-tangent", &cfg.config_hash(), &index.config_hash);
    if artifacts::up_to_date(&dir, "tangent", &hash) {
        println!("tangent artifact up to date: {}", dir.display());
        return Ok(dir);
    }

    let mut by_subject: BTreeMap<String, Vec<&SpdMatrix>> = BTreeMap::new();
    for (m, e) in matrices.iter().zip(&index.entries) {
        by_subject.entry(e.subject_id.clone()).or_default().push(m);
    }
    let mut bases: BTreeMap<String, TangentBase> = BTreeMap::new();
    let mut references = Vec::new();
    match cfg.pipeline.reference {
        ReferenceMode::PerSubject => {
            for (subject, spds) in &by_subject {
                let owned: Vec<SpdMatrix> = spds.iter().map(|m| (*m).clone()).collect();
                let mean = harness::subject_reference(&owned, cfg.pipeline.metric, &cfg.pipeline.mean)?;
                references.push((subject.clone(), mean.clone()));
                bases.insert(subject.clone(), TangentBase::new(&mean, subject.clone())?);
            }
        }
        ReferenceMode::TrainGlobal => {
            let mean =
                harness::subject_reference(&matrices, cfg.pipeline.metric, &cfg.pipeline.mean)?;
            references.push(("global".into(), mean.clone()));
            let base = TangentBase::new(&mean, "global")?;
            for subject in by_subject.keys() {
                bases.insert(subject.clone(), base.clone());
            }
        }
    }

    let mut vectors = Vec::with_capacity(matrices.len());
    for (m, e) in matrices.iter().zip(&index.entries) {
        vectors.push(bases[&e.subject_id].map(m, cfg.pipeline.metric)?.values);
    }
    let matrix_dim = matrices.first().map(|m| m.dim()).unwrap_or(0);
    artifacts::write_tangent_artifact(
        &dir,
        &vectors,
        &references,
        &index.entries,
        &index.channel_names,
        matrix_dim,
        &cfg.canonical_text(),
        &hash,
    )?;
    println!(
        "wrote {} tangent vectors of dim {} to {}",
        vectors.len(),
        vectors.first().map(|v| v.len()).unwrap_or(0),
        dir.display()
    );
    Ok(dir)
}

/// Group tangent vectors into per-trial sliding windows of `seq_len`.
fn windows_from_entries(
    vectors: &[Vec<f64>],
    entries: &[EntryMeta],
    seq_len: usize,
) -> Vec<VectorSequence> {
    let mut trials: BTreeMap<(String, String), Vec<(usize, usize)>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        trials
            .entry((e.subject_id.clone(), e.trial_id.clone()))
            .or_default()
            .push((e.start_index, i));
    }
    let t_len = seq_len.max(1);
    let mut out = Vec::new();
    for ((subject, _trial), mut idx) in trials {
        idx.sort();
        if idx.len() < t_len {
            continue;
        }
        for w in 0..=(idx.len() - t_len) {
            out.push(VectorSequence {
                steps: idx[w..w + t_len]
                    .iter()
                    .map(|&(_, i)| vectors[i].clone())
                    .collect(),
                label: entries[idx[w].1].label,
                subject_id: subject.clone(),
            });
        }
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelManifest {
    kind: String,
    config_hash: String,
    config_text: String,
    version: String,
    sequences: usize,
    final_loss: f64,
}

pub fn cmd_train(cfg: &RunConfig, tangent_dir: &Path) -> Result<PathBuf, CliError> {
    let dir = cfg.output_dir.join("model");
    let art = artifacts::read_tangent_artifact(tangent_dir)?;
    let hash = stage_hash("train", &cfg.config_hash(), &art.index.config_hash);
    let manifest_path = dir.join("model.json");
    if manifest_path.is_file() {
        if let Ok(m) = serde_json::from_str::<ModelManifest>(
            &std::fs::read_to_string(&manifest_path).unwrap_or_default(),
        ) {
            if m.config_hash == hash {
                println!("model up to date: {}", dir.display());
                return Ok(dir);
            }
        }
    }
    let sequences = windows_from_entries(&art.vectors, &art.index.entries, cfg.pipeline.seq_len);
    let outcome = seqnet::train(&sequences, &cfg.pipeline.train)?;
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    artifacts::write_checkpoint(&dir.join("checkpoint.bin"), &outcome.params)?;
    artifacts::write_loss_curve(&dir.join("loss.csv"), &outcome.epoch_losses)?;
    let manifest = ModelManifest {
        kind: "model".into(),
        config_hash: hash,
        config_text: cfg.canonical_text(),
        version: env!("CARGO_PKG_VERSION").into(),
        sequences: sequences.len(),
        final_loss: outcome.epoch_losses.last().copied().unwrap_or(f64::NAN),
    };
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).unwrap(),
    )
    .map_err(|source| CliError::Io {
        path: manifest_path,
        source,
    })?;
    println!(
        "trained on {} sequences; final epoch loss {:.6}",
        manifest.sequences, manifest.final_loss
    );
    Ok(dir)
}

/// The JSON run manifest of `evaluate`: config, seed, versions, per-fold
/// details. Byte-identical across identical runs.
#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluateManifest {
    pub kind: String,
    pub config_hash: String,
    pub config_text: String,
    pub version: String,
    pub seed: u64,
    pub protocol: String,
    pub pooled: Metrics,
    pub fold_mean_accuracy: f64,
    pub fold_mean_f1: f64,
    pub folds: Vec<FoldReport>,
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.output_dir.join("evaluate");
    let bundles = dataset::ingest(&cfg.dataset_root, &cfg.channels)?;
    let prepared = harness::prepare(&bundles, cfg.pipeline.common_rate)?;
    let subjects: Vec<String> = prepared.iter().map(|r| r.subject_id.clone()).collect();
    let plan = plan_folds(&subjects, cfg.protocol, cfg.seed)?;
    let folds = harness::run_protocol(&prepared, &plan, &cfg.pipeline)?;
    let pooled = pooled_metrics(&folds);
    let (fm_acc, fm_f1) = harness::fold_mean_metrics(&folds);
    let manifest = EvaluateManifest {
        kind: "evaluate".into(),
        config_hash: cfg.config_hash(),
        config_text: cfg.canonical_text(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        protocol: cfg.protocol.to_string(),
        pooled,
        fold_mean_accuracy: fm_acc,
        fold_mean_f1: fm_f1,
        folds,
    };
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let path = dir.join("report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).map_err(|source| {
        CliError::Io { path, source }
    })?;
    println!(
        "evaluate: pooled accuracy {:.4}, pooled F1 {:.4} over {} folds",
        manifest.pooled.accuracy,
        manifest.pooled.f1,
        manifest.folds.len()
    );
    Ok(dir)
}

/// Parse a grid string like `S,C,P2,P3,P4` into representation/m pairs.
pub fn parse_grid(grid: &str) -> Result<Vec<(Representation, Option<usize>)>, CliError> {
    let mut out = Vec::new();
    for tok in grid.split(',').map(|t| t.trim()).filter(|t| !t.is_empty()) {
        let (repr, m) = match tok {
            "S" | "s" => (Representation::SampleCov, None),
            "C" | "c" => (Representation::CrossCov, None),
            t if t.starts_with('P') || t.starts_with('p') => {
                let m: usize = if t.len() > 1 {
                    t[1..]
                        .parse()
                        .map_err(|_| CliError::Usage(format!("bad grid token `{t}`")))?
                } else {
                    2
                };
                (Representation::BlockSpd, Some(m))
            }
            other => return Err(CliError::Usage(format!("bad grid token `{other}`"))),
        };
        out.push((repr, m));
    }
    if out.is_empty() {
        return Err(CliError::Usage("empty ablation grid".into()));
    }
    Ok(out)
}

/// Pivot the cells into the table layout: one row per representation, one
/// column pair (accuracy, f1) per modality × metric, pooled metrics shown.
fn ablation_csv(cells: &[AblationCell]) -> String {
    let mut columns: Vec<(String, String)> = Vec::new();
    for c in cells {
        let key = (c.spec.modality.clone(), c.spec.metric.to_string());
        if !columns.contains(&key) {
            columns.push(key);
        }
    }
    let mut rows: Vec<String> = Vec::new();
    for c in cells {
        let label = c.spec.row_label();
        if !rows.contains(&label) {
            rows.push(label);
        }
    }
    let mut out = String::from("representation");
    for (modality, metric) in &columns {
        out.push_str(&format!(
            ",{modality}|{metric}|accuracy,{modality}|{metric}|f1"
        ));
    }
    out.push('\n');
    for row in &rows {
        out.push_str(row);
        for (modality, metric) in &columns {
            let cell = cells.iter().find(|c| {
                &c.spec.row_label() == row
                    && &c.spec.modality == modality
                    && &c.spec.metric.to_string() == metric
            });
            match cell {
                Some(c) => out.push_str(&format!(
                    ",{:.4},{:.4}",
                    c.pooled.accuracy, c.pooled.f1
                )),
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
struct AblationManifest<'a> {
    kind: String,
    config_hash: String,
    config_text: String,
    version: String,
    seed: u64,
    cells: &'a [AblationCell],
}

pub fn cmd_ablate(
    cfg: &RunConfig,
    grid: &str,
    metrics: &str,
    modalities: &str,
) -> Result<PathBuf, CliError> {
    let dir = cfg.output_dir.join("ablate");
    let reprs = parse_grid(grid)?;
    let metric_list: Vec<crate::manifold::Metric> = metrics
        .split(',')
        .map(|m| m.trim().parse().map_err(CliError::Usage))
        .collect::<Result<_, _>>()?;
    let modality_list: Vec<String> = modalities
        .split(';')
        .map(|m| m.trim().to_string())
        .filter(|m| !m.is_empty())
        .collect();
    let mut specs = Vec::new();
    for (repr, m) in &reprs {
        for modality in &modality_list {
            for metric in &metric_list {
                specs.push(AblationSpec {
                    representation: *repr,
                    m: *m,
                    modality: modality.clone(),
                    metric: *metric,
                });
            }
        }
    }

    let bundles = dataset::ingest(&cfg.dataset_root, &cfg.channels)?;
    let prepared = harness::prepare(&bundles, cfg.pipeline.common_rate)?;
    let subjects: Vec<String> = prepared.iter().map(|r| r.subject_id.clone()).collect();
    let plan = plan_folds(&subjects, cfg.protocol, cfg.seed)?;
    let cells = harness::run_ablation(&specs, &prepared, &plan, &cfg.pipeline)?;

    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let csv_path = dir.join("ablation.csv");
    std::fs::write(&csv_path, ablation_csv(&cells)).map_err(|source| CliError::Io {
        path: csv_path,
        source,
    })?;
    let manifest = AblationManifest {
        kind: "ablate".into(),
        config_hash: cfg.config_hash(),
        config_text: cfg.canonical_text(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        cells: &cells,
    };
    let json_path = dir.join("manifest.json");
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&manifest).unwrap(),
    )
    .map_err(|source| CliError::Io {
        path: json_path,
        source,
    })?;
    for c in &cells {
        println!(
            "{:<18} {:<12} {:<16} accuracy {:.4} f1 {:.4}",
            c.spec.row_label(),
            c.spec.modality,
            c.spec.metric.to_string(),
            c.pooled.accuracy,
            c.pooled.f1
        );
    }
    Ok(dir)
}

/// Which SPD the heatmap renders.
pub enum HeatmapSource {
    Index(usize),
    GeometricMean,
}

pub fn cmd_heatmap(
    spd_dir: &Path,
    source: HeatmapSource,
    out_prefix: &Path,
) -> Result<(), CliError> {
    let (matrices, index) = artifacts::read_spd_artifact(spd_dir)?;
    let chosen: SpdMatrix = match source {
        HeatmapSource::Index(i) => matrices
            .get(i)
            .cloned()
            .ok_or_else(|| CliError::Usage(format!("index {i} out of range (count {})", matrices.len())))?,
        HeatmapSource::GeometricMean => {
            crate::manifold::geometric_mean(&matrices, &crate::manifold::MeanConfig::default())?
        }
    };
    let corr = heatmap::correlation_scale(chosen.sym());
    let csv = out_prefix.with_extension("csv");
    let pgm = out_prefix.with_extension("pgm");
    let labels = out_prefix.with_extension("labels.txt");
    heatmap::write_csv(&csv, &corr)?;
    heatmap::write_pgm(&pgm, &corr)?;
    heatmap::write_labels(&labels, &heatmap::block_labels(&index.channel_names, corr.n()))?;
    println!(
        "wrote {}, {}, {}",
        csv.display(),
        pgm.display(),
        labels.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_tokens_parse() {
        let grid = parse_grid("S,C,P2,P3,P4").unwrap();
        assert_eq!(grid.len(), 5);
        assert_eq!(grid[0], (Representation::SampleCov, None));
        assert_eq!(grid[2], (Representation::BlockSpd, Some(2)));
        assert_eq!(grid[4], (Representation::BlockSpd, Some(4)));
        assert!(parse_grid("Q").is_err());
        assert!(parse_grid("").is_err());
    }

    #[test]
    fn stage_hash_chains() {
        let a = stage_hash("build-spd", "c1", "dataset");
        let b = stage_hash("build-spd", "c2", "dataset");
        let c = stage_hash("map-tangent", "c1", &a);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, stage_hash("build-spd", "c1", "dataset"));
    }
}
