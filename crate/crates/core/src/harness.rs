//! Subject-independent evaluation: LOSO and k-fold plans over subjects,
//! the per-fold pipeline (selection → segmentation → standardization → SPD →
//! per-subject tangent referencing → classifier), accuracy/F1 reporting, and
//! the S / C / P(m) ablation grid.
//!
//! Every fitted statistic — feature selection, channel standardization, and
//! the classifier — is a pure function of training-fold data. Tangent
//! references are per-subject geometric means computed without label access,
//! so they apply identically to held-out subjects.

use crate::manifold::{
    mean_for_metric, ManifoldError, MeanConfig, Metric, TangentBase,
};
use crate::seqnet::{self, SeqNetError, TrainConfig, VectorSequence};
use crate::signals::{
    anova_select, assemble_segments, pairwise_distances, resample, Channel, LandmarkFrames,
    Recording, SelectionModel, SignalError, Standardizer,
};
use crate::spdrep::{
    cross_covariance, segment_to_spd_auto, Segment, SpdConfig, SpdError, SpdMatrix,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("need at least 2 subjects, got {got}")]
    TooFewSubjects { got: usize },
    #[error("k-fold needs 2 ≤ k ≤ subject count, got k = {k} for {subjects} subjects")]
    BadFoldCount { k: usize, subjects: usize },
    #[error("fold {fold} does not exist (plan has {folds})")]
    NoSuchFold { fold: usize, folds: usize },
    #[error("no recordings supplied")]
    NoData,
    #[error("ablation spec invalid: {reason}")]
    BadAblationSpec { reason: String },
    #[error("selection requested (k = {k}) but recordings carry no distance channels")]
    NoDistanceChannels { k: usize },
    #[error("fold worker panicked")]
    WorkerPanic,
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Spd(#[from] SpdError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    SeqNet(#[from] SeqNetError),
}

/// Cross-validation protocol over subjects (never over samples).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Loso,
    KFold(usize),
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Protocol::Loso => f.write_str("loso"),
            Protocol::KFold(k) => write!(f, "kfold:{k}"),
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "loso" {
            return Ok(Protocol::Loso);
        }
        if let Some(k) = s.strip_prefix("kfold:") {
            let k: usize = k.parse().map_err(|_| format!("bad fold count in `{s}`"))?;
            return Ok(Protocol::KFold(k));
        }
        Err(format!("unknown protocol `{s}` (expected loso or kfold:K)"))
    }
}

/// Assignment of every subject to exactly one fold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    pub protocol: Protocol,
    pub seed: u64,
    pub n_folds: usize,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn test_subjects(&self, fold: usize) -> Vec<String> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(s, _)| s.clone())
            .collect()
    }
}

/// Build a fold plan: LOSO yields one fold per subject (in sorted order);
/// k-fold shuffles subjects with the seed and deals them round-robin.
pub fn plan_folds(
    subjects: &[String],
    protocol: Protocol,
    seed: u64,
) -> Result<FoldPlan, HarnessError> {
    let mut unique: Vec<String> = subjects.to_vec();
    unique.sort();
    unique.dedup();
    if unique.len() < 2 {
        return Err(HarnessError::TooFewSubjects { got: unique.len() });
    }
    let mut assignments = BTreeMap::new();
    let n_folds = match protocol {
        Protocol::Loso => {
            for (i, s) in unique.iter().enumerate() {
                assignments.insert(s.clone(), i);
            }
            unique.len()
        }
        Protocol::KFold(k) => {
            if k < 2 || k > unique.len() {
                return Err(HarnessError::BadFoldCount {
                    k,
                    subjects: unique.len(),
                });
            }
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut shuffled = unique.clone();
            shuffled.shuffle(&mut rng);
            for (i, s) in shuffled.iter().enumerate() {
                assignments.insert(s.clone(), i % k);
            }
            k
        }
    };
    Ok(FoldPlan {
        protocol,
        seed,
        n_folds,
        assignments,
    })
}

/// Which per-segment matrix representation feeds the manifold pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    /// Sample covariance only (the `m = 1` block).
    SampleCov,
    /// Cross-covariance only, spectrum-floored to the SPD cone.
    CrossCov,
    /// The block matrix of `S` and `C` with multiplicity `m`.
    BlockSpd,
}

impl std::str::FromStr for Representation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "S" | "s" => Ok(Representation::SampleCov),
            "C" | "c" => Ok(Representation::CrossCov),
            "P" | "p" => Ok(Representation::BlockSpd),
            other => Err(format!("unknown representation `{other}`")),
        }
    }
}

/// Where tangent references come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMode {
    /// Geometric mean of each subject's own SPD matrices (label-free, so
    /// valid at test time).
    PerSubject,
    /// Single geometric mean of the training fold's matrices.
    TrainGlobal,
}

impl std::str::FromStr for ReferenceMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-subject" => Ok(ReferenceMode::PerSubject),
            "train-global" | "global" => Ok(ReferenceMode::TrainGlobal),
            other => Err(format!("unknown reference mode `{other}`")),
        }
    }
}

/// Everything one fold needs to run, start to finish.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub spd: SpdConfig,
    pub representation: Representation,
    pub metric: Metric,
    /// Sequence length T: consecutive segment matrices per classifier sample,
    /// sliding with stride 1 within a trial.
    pub seq_len: usize,
    pub segment_seconds: f64,
    pub common_rate: f64,
    pub train: TrainConfig,
    pub reference: ReferenceMode,
    /// Number of landmark-distance channels to keep (0 disables selection
    /// and drops distance channels entirely).
    pub select_k: usize,
    /// Fit selection on all recordings instead of the training fold only
    /// (mimics a global fit; leaks by construction, off by default).
    pub selection_global: bool,
    pub mean: MeanConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            spd: SpdConfig::default(),
            representation: Representation::BlockSpd,
            metric: Metric::AffineInvariant,
            seq_len: 5,
            segment_seconds: 10.0,
            common_rate: 4.0,
            train: TrainConfig::default(),
            reference: ReferenceMode::PerSubject,
            select_k: 0,
            selection_global: false,
            mean: MeanConfig::default(),
        }
    }
}

/// A recording with its channels already at the common rate, landmark
/// distances precomputed as candidate channels. Preparation is label-free
/// and fold-independent.
#[derive(Debug, Clone)]
pub struct PreparedRecording {
    pub subject_id: String,
    pub trial_id: String,
    pub label: bool,
    pub physio: Vec<Channel>,
    pub distances: Vec<Channel>,
}

/// A raw recording plus optional landmark frames.
#[derive(Debug, Clone)]
pub struct RecordingBundle {
    pub recording: Recording,
    pub landmarks: Option<LandmarkFrames>,
}

/// Resample every channel to the common rate and expand landmarks into
/// pairwise-distance candidate channels.
pub fn prepare(
    bundles: &[RecordingBundle],
    common_rate: f64,
) -> Result<Vec<PreparedRecording>, HarnessError> {
    if bundles.is_empty() {
        return Err(HarnessError::NoData);
    }
    let mut out = Vec::with_capacity(bundles.len());
    for b in bundles {
        let physio = b
            .recording
            .channels
            .iter()
            .map(|c| resample(c, common_rate))
            .collect::<Result<Vec<_>, _>>()?;
        let distances = match &b.landmarks {
            Some(frames) => pairwise_distances(frames)?
                .iter()
                .map(|c| resample(c, common_rate))
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        out.push(PreparedRecording {
            subject_id: b.recording.subject_id.clone(),
            trial_id: b.recording.trial_id.clone(),
            label: b.recording.label,
            physio,
            distances,
        });
    }
    Ok(out)
}

/// Karcher mean of one subject's SPD matrices — the tangent reference of
/// that subject. Labels are never consulted.
pub fn subject_reference(
    spds: &[SpdMatrix],
    metric: Metric,
    cfg: &MeanConfig,
) -> Result<SpdMatrix, HarnessError> {
    Ok(mean_for_metric(metric, spds, cfg)?)
}

/// One evaluated window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplePrediction {
    pub subject_id: String,
    pub trial_id: String,
    pub window: usize,
    pub label: bool,
    pub prob: f64,
    pub predicted: bool,
}

/// Confusion counts with derived metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub accuracy: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let total = tp + fp + tn + fn_;
        let accuracy = if total == 0 {
            0.0
        } else {
            (tp + tn) as f64 / total as f64
        };
        let denom = 2 * tp + fp + fn_;
        let f1 = if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        };
        Self {
            tp,
            fp,
            tn,
            fn_,
            accuracy,
            f1,
        }
    }

    pub fn from_predictions(preds: &[SamplePrediction]) -> Self {
        let mut tp = 0;
        let mut fp = 0;
        let mut tn = 0;
        let mut fn_ = 0;
        for p in preds {
            match (p.label, p.predicted) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (false, false) => tn += 1,
                (true, false) => fn_ += 1,
            }
        }
        Self::from_counts(tp, fp, tn, fn_)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Per-fold outcome: confusion counts, metrics, raw predictions, and the
/// fitted selection (for leakage auditing).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_subjects: Vec<String>,
    pub skipped: bool,
    pub skip_reason: Option<String>,
    pub metrics: Metrics,
    pub predictions: Vec<SamplePrediction>,
    /// Names of the selected distance channels, when selection ran.
    pub selected_distances: Option<Vec<String>>,
}

impl FoldReport {
    pub fn from_predictions(
        fold: usize,
        test_subjects: Vec<String>,
        predictions: Vec<SamplePrediction>,
        selected_distances: Option<Vec<String>>,
    ) -> Self {
        Self {
            fold,
            test_subjects,
            skipped: false,
            skip_reason: None,
            metrics: Metrics::from_predictions(&predictions),
            predictions,
            selected_distances,
        }
    }

    fn skipped(fold: usize, test_subjects: Vec<String>, reason: String) -> Self {
        Self {
            fold,
            test_subjects,
            skipped: true,
            skip_reason: Some(reason),
            metrics: Metrics::from_counts(0, 0, 0, 0),
            predictions: Vec::new(),
            selected_distances: None,
        }
    }
}

/// Metrics over all predictions of all non-skipped folds pooled together.
pub fn pooled_metrics(reports: &[FoldReport]) -> Metrics {
    let all: Vec<SamplePrediction> = reports
        .iter()
        .filter(|r| !r.skipped)
        .flat_map(|r| r.predictions.iter().cloned())
        .collect();
    Metrics::from_predictions(&all)
}

/// Unweighted mean of per-fold accuracy and F1 over non-empty folds.
pub fn fold_mean_metrics(reports: &[FoldReport]) -> (f64, f64) {
    let useful: Vec<&FoldReport> = reports
        .iter()
        .filter(|r| !r.skipped && r.metrics.total() > 0)
        .collect();
    if useful.is_empty() {
        return (0.0, 0.0);
    }
    let n = useful.len() as f64;
    (
        useful.iter().map(|r| r.metrics.accuracy).sum::<f64>() / n,
        useful.iter().map(|r| r.metrics.f1).sum::<f64>() / n,
    )
}

/// Fit ANOVA selection on the given recordings' distance channels: one
/// sample per time instant, labelled by the recording's class.
pub fn fit_selection(
    recordings: &[&PreparedRecording],
    k: usize,
    fitted_on: &str,
) -> Result<SelectionModel, HarnessError> {
    let n_dist = recordings
        .first()
        .map(|r| r.distances.len())
        .unwrap_or(0);
    if n_dist == 0 {
        return Err(HarnessError::NoDistanceChannels { k });
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for rec in recordings {
        let len = rec
            .distances
            .iter()
            .map(|c| c.samples.len())
            .min()
            .unwrap_or(0);
        for t in 0..len {
            features.push(rec.distances.iter().map(|c| c.samples[t]).collect());
            labels.push(rec.label);
        }
    }
    Ok(anova_select(&features, &labels, k, fitted_on)?)
}

/// Build the configured per-segment matrix representation: `S` (the m = 1
/// block with ridge), the spectrum-floored `C`, or the full block `P`.
pub fn segment_representation(
    seg: &Segment,
    cfg: &PipelineConfig,
) -> Result<SpdMatrix, HarnessError> {
    match cfg.representation {
        Representation::SampleCov => {
            let s_cfg = SpdConfig {
                m: 1,
                ..cfg.spd.clone()
            };
            Ok(segment_to_spd_auto(seg, &s_cfg)?.0)
        }
        Representation::CrossCov => {
            let owned;
            let seg = if cfg.spd.centering == crate::spdrep::Centering::PerSegment {
                owned = seg.centered_per_segment();
                &owned
            } else {
                seg
            };
            let c = cross_covariance(seg);
            Ok(SpdMatrix::from_sym_floored(&c, cfg.spd.shrinkage.max(1e-8))?)
        }
        Representation::BlockSpd => Ok(segment_to_spd_auto(seg, &cfg.spd)?.0),
    }
}

/// Run one fold end to end. Selection, standardization, and the classifier
/// are fitted on training subjects only; tangent references follow
/// `cfg.reference`. A training fold with a single class yields a skipped
/// report rather than an error.
pub fn run_fold(
    prepared: &[PreparedRecording],
    plan: &FoldPlan,
    fold: usize,
    cfg: &PipelineConfig,
) -> Result<FoldReport, HarnessError> {
    if fold >= plan.n_folds {
        return Err(HarnessError::NoSuchFold {
            fold,
            folds: plan.n_folds,
        });
    }
    let test_subjects = plan.test_subjects(fold);
    let is_test = |s: &str| plan.assignments.get(s) == Some(&fold);

    let train_recs: Vec<&PreparedRecording> = prepared
        .iter()
        .filter(|r| !is_test(&r.subject_id))
        .collect();
    let test_recs: Vec<&PreparedRecording> = prepared
        .iter()
        .filter(|r| is_test(&r.subject_id))
        .collect();
    if train_recs.is_empty() || test_recs.is_empty() {
        return Ok(FoldReport::skipped(
            fold,
            test_subjects,
            "fold has an empty train or test side".into(),
        ));
    }
    if !train_recs.iter().any(|r| r.label) || !train_recs.iter().any(|r| !r.label) {
        return Ok(FoldReport::skipped(
            fold,
            test_subjects,
            "training fold contains a single class".into(),
        ));
    }

    // Feature selection on training distances (or globally when configured).
    let (selection, selected_names) = if cfg.select_k > 0 {
        let fit_on: Vec<&PreparedRecording> = if cfg.selection_global {
            prepared.iter().collect()
        } else {
            train_recs.clone()
        };
        let model = fit_selection(&fit_on, cfg.select_k, &format!("fold-{fold}"))?;
        let names: Vec<String> = model
            .selected_indices
            .iter()
            .map(|&i| fit_on[0].distances[i].name.clone())
            .collect();
        (Some(model), Some(names))
    } else {
        (None, None)
    };

    // Segment every recording with the selected extra channels stacked first.
    let mut train_segments: Vec<Segment> = Vec::new();
    let mut test_segments: Vec<Segment> = Vec::new();
    for rec in prepared {
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
        let segs = assemble_segments(
            &recording,
            &extra,
            cfg.segment_seconds,
            cfg.common_rate,
            cfg.spd.centering,
        )?;
        if is_test(&rec.subject_id) {
            test_segments.extend(segs);
        } else {
            train_segments.extend(segs);
        }
    }

    // Standardize with training-fold statistics only.
    let standardizer = Standardizer::fit(&train_segments)?;
    let train_segments: Vec<Segment> = train_segments.iter().map(|s| standardizer.apply(s)).collect();
    let test_segments: Vec<Segment> = test_segments.iter().map(|s| standardizer.apply(s)).collect();

    // SPD matrices, grouped by subject and trial in segment order.
    type TrialKey = (String, String); // (subject, trial)
    let mut trials: BTreeMap<TrialKey, Vec<(usize, SpdMatrix, bool)>> = BTreeMap::new();
    let mut by_subject: BTreeMap<String, Vec<SpdMatrix>> = BTreeMap::new();
    let mut train_spds: Vec<SpdMatrix> = Vec::new();
    for seg in train_segments.iter().chain(test_segments.iter()) {
        let spd = segment_representation(seg, cfg)?;
        by_subject
            .entry(seg.subject_id.clone())
            .or_default()
            .push(spd.clone());
        if !is_test(&seg.subject_id) {
            train_spds.push(spd.clone());
        }
        trials
            .entry((seg.subject_id.clone(), seg.trial_id.clone()))
            .or_default()
            .push((seg.start_index, spd, seg.label.unwrap_or(false)));
    }

    // Tangent references.
    let mut bases: BTreeMap<String, TangentBase> = BTreeMap::new();
    match cfg.reference {
        ReferenceMode::PerSubject => {
            for (subject, spds) in &by_subject {
                let mean = subject_reference(spds, cfg.metric, &cfg.mean)?;
                bases.insert(subject.clone(), TangentBase::new(&mean, subject.clone())?);
            }
        }
        ReferenceMode::TrainGlobal => {
            let mean = subject_reference(&train_spds, cfg.metric, &cfg.mean)?;
            let base = TangentBase::new(&mean, "train-global")?;
            for subject in by_subject.keys() {
                bases.insert(subject.clone(), base.clone());
            }
        }
    }

    // Tangent vectors → sliding windows of seq_len within each trial.
    let mut train_seqs: Vec<VectorSequence> = Vec::new();
    let mut test_seqs: Vec<(TrialKey, usize, VectorSequence)> = Vec::new();
    for ((subject, trial), mut entries) in trials {
        entries.sort_by_key(|(start, _, _)| *start);
        let base = &bases[&subject];
        let vectors: Vec<Vec<f64>> = entries
            .iter()
            .map(|(_, spd, _)| base.map(spd, cfg.metric).map(|t| t.values))
            .collect::<Result<_, _>>()?;
        let label = entries[0].2;
        let t_len = cfg.seq_len.max(1);
        if vectors.len() < t_len {
            continue; // trial too short for one window
        }
        for w in 0..=(vectors.len() - t_len) {
            let seq = VectorSequence {
                steps: vectors[w..w + t_len].to_vec(),
                label,
                subject_id: subject.clone(),
            };
            if is_test(&subject) {
                test_seqs.push(((subject.clone(), trial.clone()), w, seq));
            } else {
                train_seqs.push(seq);
            }
        }
    }

    if !train_seqs.iter().any(|s| s.label) || !train_seqs.iter().any(|s| !s.label) {
        return Ok(FoldReport::skipped(
            fold,
            test_subjects,
            "training fold sequences contain a single class".into(),
        ));
    }

    let outcome = seqnet::train(&train_seqs, &cfg.train)?;
    let seqs_only: Vec<VectorSequence> = test_seqs.iter().map(|(_, _, s)| s.clone()).collect();
    let preds = seqnet::predict(&outcome.params, &seqs_only)?;

    let predictions: Vec<SamplePrediction> = test_seqs
        .iter()
        .zip(&preds)
        .map(|(((subject, trial), window, seq), p)| SamplePrediction {
            subject_id: subject.clone(),
            trial_id: trial.clone(),
            window: *window,
            label: seq.label,
            prob: p.prob,
            predicted: p.label,
        })
        .collect();

    Ok(FoldReport::from_predictions(
        fold,
        test_subjects,
        predictions,
        selected_names,
    ))
}

/// Run every fold of the plan; folds execute in parallel and merge in fold
/// order, so the output is independent of scheduling.
pub fn run_protocol(
    prepared: &[PreparedRecording],
    plan: &FoldPlan,
    cfg: &PipelineConfig,
) -> Result<Vec<FoldReport>, HarnessError> {
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(plan.n_folds.max(1));
    if threads <= 1 || plan.n_folds <= 1 {
        return (0..plan.n_folds)
            .map(|f| run_fold(prepared, plan, f, cfg))
            .collect();
    }
    let mut results: Vec<Option<Result<FoldReport, HarnessError>>> =
        (0..plan.n_folds).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for _ in 0..threads {
            let next = &next;
            handles.push(scope.spawn(move || {
                let mut out = Vec::new();
                loop {
                    let f = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if f >= plan.n_folds {
                        break;
                    }
                    out.push((f, run_fold(prepared, plan, f, cfg)));
                }
                out
            }));
        }
        for h in handles {
            match h.join() {
                Ok(list) => {
                    for (f, r) in list {
                        results[f] = Some(r);
                    }
                }
                Err(_) => {
                    for slot in results.iter_mut() {
                        if slot.is_none() {
                            *slot = Some(Err(HarnessError::WorkerPanic));
                        }
                    }
                }
            }
        }
    });
    results
        .into_iter()
        .map(|r| r.unwrap_or(Err(HarnessError::WorkerPanic)))
        .collect()
}

/// One cell of the ablation grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationSpec {
    pub representation: Representation,
    /// Block multiplicity; present iff `representation` is `BlockSpd`.
    pub m: Option<usize>,
    /// Physio channel subset: "all", or a comma-separated name list.
    pub modality: String,
    pub metric: Metric,
}

impl AblationSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        match (self.representation, self.m) {
            (Representation::BlockSpd, Some(m)) if m >= 1 => Ok(()),
            (Representation::BlockSpd, _) => Err(HarnessError::BadAblationSpec {
                reason: "P requires m ≥ 1".into(),
            }),
            (_, None) => Ok(()),
            (_, Some(_)) => Err(HarnessError::BadAblationSpec {
                reason: "m is only meaningful for representation P".into(),
            }),
        }
    }

    /// Row label in the ablation table.
    pub fn row_label(&self) -> String {
        match self.representation {
            Representation::SampleCov => "with S".into(),
            Representation::CrossCov => "with C".into(),
            Representation::BlockSpd => format!("with P (m = {})", self.m.unwrap_or(1)),
        }
    }
}

/// One evaluated grid cell: the spec, pooled metrics, and fold-mean metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationCell {
    pub spec: AblationSpec,
    pub pooled: Metrics,
    pub fold_mean_accuracy: f64,
    pub fold_mean_f1: f64,
    pub folds: Vec<FoldReport>,
}

fn filter_modality(
    prepared: &[PreparedRecording],
    modality: &str,
) -> Result<Vec<PreparedRecording>, HarnessError> {
    if modality == "all" || modality.is_empty() {
        return Ok(prepared.to_vec());
    }
    let keep: Vec<&str> = modality.split(',').map(|s| s.trim()).collect();
    let out: Vec<PreparedRecording> = prepared
        .iter()
        .map(|r| {
            let physio: Vec<Channel> = r
                .physio
                .iter()
                .filter(|c| keep.contains(&c.name.as_str()))
                .cloned()
                .collect();
            PreparedRecording {
                subject_id: r.subject_id.clone(),
                trial_id: r.trial_id.clone(),
                label: r.label,
                physio,
                distances: r.distances.clone(),
            }
        })
        .collect();
    if out.iter().any(|r| r.physio.is_empty() && r.distances.is_empty()) {
        return Err(HarnessError::BadAblationSpec {
            reason: format!("modality `{modality}` matches no channels"),
        });
    }
    Ok(out)
}

/// Evaluate every cell of the grid under the same fold plan and base config.
pub fn run_ablation(
    grid: &[AblationSpec],
    prepared: &[PreparedRecording],
    plan: &FoldPlan,
    base: &PipelineConfig,
) -> Result<Vec<AblationCell>, HarnessError> {
    let mut cells = Vec::with_capacity(grid.len());
    for spec in grid {
        spec.validate()?;
        let mut cfg = base.clone();
        cfg.representation = spec.representation;
        if let Some(m) = spec.m {
            cfg.spd.m = m;
        }
        cfg.metric = spec.metric;
        let data = filter_modality(prepared, &spec.modality)?;
        let folds = run_protocol(&data, plan, &cfg)?;
        let pooled = pooled_metrics(&folds);
        let (fm_acc, fm_f1) = fold_mean_metrics(&folds);
        cells.push(AblationCell {
            spec: spec.clone(),
            pooled,
            fold_mean_accuracy: fm_acc,
            fold_mean_f1: fm_f1,
            folds,
        });
    }
    Ok(cells)
}
