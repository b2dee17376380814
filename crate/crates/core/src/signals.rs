//! Raw recordings to model-ready segments: anti-aliased resampling, facial
//! landmark pairwise distances, ANOVA F-value feature selection, per-channel
//! standardization, and non-overlapping segmentation.

use crate::spdrep::{Centering, Segment, SpdError};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SignalError {
    #[error("channel `{name}` is empty")]
    EmptyChannel { name: String },
    #[error("channel `{name}` has non-positive rate {rate}")]
    BadRate { name: String, rate: f64 },
    #[error("duplicate channel name `{name}`")]
    DuplicateChannel { name: String },
    #[error("channel `{name}` contains a non-finite sample at index {index}")]
    NonFinite { name: String, index: usize },
    #[error("frame {frame} has {got} landmarks, expected {expected}")]
    InconsistentLandmarkCount {
        frame: usize,
        expected: usize,
        got: usize,
    },
    #[error("pairwise distances need at least 2 landmarks, got {got}")]
    TooFewLandmarks { got: usize },
    #[error("feature selection needs both classes present")]
    SingleClass,
    #[error("cannot select k = {k} of {features} features")]
    BadK { k: usize, features: usize },
    #[error("feature matrix is empty or ragged")]
    BadFeatureMatrix,
    #[error("channel `{name}` is at {rate} Hz, expected the common rate {expected} Hz")]
    RateMismatch {
        name: String,
        rate: f64,
        expected: f64,
    },
    #[error("segment length {samples} samples is too small (need at least 2)")]
    BadSegmentLength { samples: usize },
    #[error("recording too short: {available} samples, need {needed} for one segment")]
    TooShort { needed: usize, available: usize },
    #[error(transparent)]
    Segment(#[from] SpdError),
}

/// A single named channel sampled at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    /// Samples per second.
    pub rate: f64,
    pub samples: Vec<f64>,
}

impl Channel {
    pub fn new(name: impl Into<String>, rate: f64, samples: Vec<f64>) -> Result<Self, SignalError> {
        let name = name.into();
        if samples.is_empty() {
            return Err(SignalError::EmptyChannel { name });
        }
        if rate.is_nan() || rate <= 0.0 {
            return Err(SignalError::BadRate { name, rate });
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite { name, index });
        }
        Ok(Self { name, rate, samples })
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }
}

/// One labelled trial of one subject: a set of uniquely named channels.
#[derive(Debug, Clone)]
pub struct Recording {
    pub subject_id: String,
    pub trial_id: String,
    /// `true` is the positive class.
    pub label: bool,
    pub channels: Vec<Channel>,
}

impl Recording {
    pub fn new(
        subject_id: impl Into<String>,
        trial_id: impl Into<String>,
        label: bool,
        channels: Vec<Channel>,
    ) -> Result<Self, SignalError> {
        let mut seen = std::collections::BTreeSet::new();
        for ch in &channels {
            if !seen.insert(ch.name.clone()) {
                return Err(SignalError::DuplicateChannel {
                    name: ch.name.clone(),
                });
            }
        }
        Ok(Self {
            subject_id: subject_id.into(),
            trial_id: trial_id.into(),
            label,
            channels,
        })
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }
}

/// Facial landmark coordinates per video frame, with a fixed landmark count
/// across frames. Coordinates may be 2-D or 3-D.
#[derive(Debug, Clone)]
pub struct LandmarkFrames {
    pub frame_rate: f64,
    landmarks: usize,
    dim: usize,
    /// Frame-major: `coords[frame][landmark*dim + axis]` flattened.
    coords: Vec<f64>,
}

impl LandmarkFrames {
    pub fn new(frame_rate: f64, landmarks: usize, dim: usize) -> Self {
        Self {
            frame_rate,
            landmarks,
            dim,
            coords: Vec::new(),
        }
    }

    pub fn push_frame(&mut self, frame: &[f64]) -> Result<(), SignalError> {
        if frame.len() != self.landmarks * self.dim {
            return Err(SignalError::InconsistentLandmarkCount {
                frame: self.frames(),
                expected: self.landmarks,
                got: frame.len() / self.dim.max(1),
            });
        }
        if let Some(index) = frame.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite {
                name: "landmarks".into(),
                index,
            });
        }
        self.coords.extend_from_slice(frame);
        Ok(())
    }

    pub fn frames(&self) -> usize {
        if self.landmarks == 0 {
            0
        } else {
            self.coords.len() / (self.landmarks * self.dim)
        }
    }

    pub fn landmarks(&self) -> usize {
        self.landmarks
    }

    fn point(&self, frame: usize, landmark: usize) -> &[f64] {
        let base = frame * self.landmarks * self.dim + landmark * self.dim;
        &self.coords[base..base + self.dim]
    }
}

/// Euclidean distance between every landmark pair, one channel per pair,
/// named `d_<i>_<j>`. For `L` landmarks this yields `L(L−1)/2` channels at
/// the video frame rate.
pub fn pairwise_distances(frames: &LandmarkFrames) -> Result<Vec<Channel>, SignalError> {
    let l = frames.landmarks();
    if l < 2 {
        return Err(SignalError::TooFewLandmarks { got: l });
    }
    let f = frames.frames();
    let mut channels = Vec::with_capacity(l * (l - 1) / 2);
    for i in 0..l {
        for j in (i + 1)..l {
            let mut samples = Vec::with_capacity(f);
            for frame in 0..f {
                let a = frames.point(frame, i);
                let b = frames.point(frame, j);
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                samples.push(d2.sqrt());
            }
            channels.push(Channel::new(
                format!("d_{i}_{j}"),
                frames.frame_rate,
                samples,
            )?);
        }
    }
    Ok(channels)
}

/// A fitted feature selection: the top-`k` feature indices by one-way ANOVA
/// F-value, in descending-score order.
#[derive(Debug, Clone)]
pub struct SelectionModel {
    /// Distinct indices sorted by descending F-score (ties broken by lower
    /// index).
    pub selected_indices: Vec<usize>,
    /// F-value per input feature; `+∞` flags zero within-group variance with
    /// separated means.
    pub f_scores: Vec<f64>,
    /// Identifier of the fold the model was fitted on.
    pub fitted_on: String,
}

/// One-way ANOVA F-value selection over a samples×features matrix with
/// binary labels: `F = MS_between / MS_within`, top `k` kept.
pub fn anova_select(
    features: &[Vec<f64>],
    labels: &[bool],
    k: usize,
    fitted_on: impl Into<String>,
) -> Result<SelectionModel, SignalError> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(SignalError::BadFeatureMatrix);
    }
    let n_features = features[0].len();
    if features.iter().any(|row| row.len() != n_features) {
        return Err(SignalError::BadFeatureMatrix);
    }
    if k > n_features {
        return Err(SignalError::BadK {
            k,
            features: n_features,
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(SignalError::SingleClass);
    }

    let n = labels.len() as f64;
    let mut f_scores = Vec::with_capacity(n_features);
    for fi in 0..n_features {
        let mut sum_pos = 0.0;
        let mut sum_neg = 0.0;
        for (row, &lab) in features.iter().zip(labels) {
            if lab {
                sum_pos += row[fi];
            } else {
                sum_neg += row[fi];
            }
        }
        let mean_pos = sum_pos / n_pos as f64;
        let mean_neg = sum_neg / n_neg as f64;
        let grand = (sum_pos + sum_neg) / n;
        let ssb = n_pos as f64 * (mean_pos - grand).powi(2)
            + n_neg as f64 * (mean_neg - grand).powi(2);
        let mut ssw = 0.0;
        for (row, &lab) in features.iter().zip(labels) {
            let m = if lab { mean_pos } else { mean_neg };
            ssw += (row[fi] - m).powi(2);
        }
        let df2 = n - 2.0;
        // df1 = 1 for two groups, so MS_between = SSB.
        let score = if df2 <= 0.0 || ssw == 0.0 {
            if ssb > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            ssb / (ssw / df2)
        };
        f_scores.push(score);
    }

    let mut order: Vec<usize> = (0..n_features).collect();
    order.sort_by(|&a, &b| {
        f_scores[b]
            .partial_cmp(&f_scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    Ok(SelectionModel {
        selected_indices: order,
        f_scores,
        fitted_on: fitted_on.into(),
    })
}

/// Resample a channel to `target_rate`: an anti-aliasing moving average at
/// the decimation factor, then linear interpolation at the target instants.
/// Upsampling skips the filter (factor 1). Output length is
/// `floor(duration·target_rate)`.
pub fn resample(channel: &Channel, target_rate: f64) -> Result<Channel, SignalError> {
    if channel.samples.is_empty() {
        return Err(SignalError::EmptyChannel {
            name: channel.name.clone(),
        });
    }
    if target_rate.is_nan() || target_rate <= 0.0 {
        return Err(SignalError::BadRate {
            name: channel.name.clone(),
            rate: target_rate,
        });
    }
    let n = channel.samples.len();
    let factor = channel.rate / target_rate;
    let window = if factor > 1.0 {
        factor.round().max(1.0) as usize
    } else {
        1
    };

    let smoothed: Vec<f64> = if window <= 1 {
        channel.samples.clone()
    } else {
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub((window - 1) / 2);
                let hi = (i + window / 2).min(n - 1);
                let slice = &channel.samples[lo..=hi];
                slice.iter().sum::<f64>() / slice.len() as f64
            })
            .collect()
    };

    let out_len = (channel.duration_seconds() * target_rate).floor() as usize;
    let mut samples = Vec::with_capacity(out_len);
    for k in 0..out_len {
        let p = k as f64 * factor;
        let i0 = (p.floor() as usize).min(n - 1);
        let i1 = (i0 + 1).min(n - 1);
        let frac = p - i0 as f64;
        samples.push(smoothed[i0] * (1.0 - frac) + smoothed[i1] * frac);
    }
    Channel::new(channel.name.clone(), target_rate, samples)
}

/// Stack a recording's channels (plus `extra` channels, placed first) into
/// non-overlapping `D×N` segments of `segment_seconds` at `common_rate`,
/// dropping the trailing remainder. Per-trial centering, when configured,
/// removes each channel's mean over the whole recording before slicing.
pub fn assemble_segments(
    rec: &Recording,
    extra: &[Channel],
    segment_seconds: f64,
    common_rate: f64,
    centering: Centering,
) -> Result<Vec<Segment>, SignalError> {
    let n = (segment_seconds * common_rate).round() as usize;
    if n < 2 {
        return Err(SignalError::BadSegmentLength { samples: n });
    }
    let stacked: Vec<&Channel> = extra.iter().chain(rec.channels.iter()).collect();
    for ch in &stacked {
        if (ch.rate - common_rate).abs() > 1e-9 * common_rate {
            return Err(SignalError::RateMismatch {
                name: ch.name.clone(),
                rate: ch.rate,
                expected: common_rate,
            });
        }
    }
    let d = stacked.len();
    let min_len = stacked
        .iter()
        .map(|c| c.samples.len())
        .min()
        .unwrap_or(0);
    let n_segments = min_len / n;
    if n_segments == 0 {
        return Err(SignalError::TooShort {
            needed: n,
            available: min_len,
        });
    }

    let rows: Vec<Vec<f64>> = stacked
        .iter()
        .map(|ch| {
            if centering == Centering::PerTrial {
                let mean = ch.samples.iter().sum::<f64>() / ch.samples.len() as f64;
                ch.samples.iter().map(|v| v - mean).collect()
            } else {
                ch.samples.clone()
            }
        })
        .collect();

    let mut segments = Vec::with_capacity(n_segments);
    for s in 0..n_segments {
        let mut data = Vec::with_capacity(d * n);
        for row in &rows {
            data.extend_from_slice(&row[s * n..(s + 1) * n]);
        }
        segments.push(Segment::new(
            d,
            n,
            data,
            rec.subject_id.clone(),
            rec.trial_id.clone(),
            s * n,
            Some(rec.label),
        )?);
    }
    Ok(segments)
}

/// Channel order produced by [`assemble_segments`], for labelling outputs.
pub fn stacked_channel_names(rec: &Recording, extra: &[Channel]) -> Vec<String> {
    extra
        .iter()
        .chain(rec.channels.iter())
        .map(|c| c.name.clone())
        .collect()
}

/// Per-channel z-scoring statistics, fitted on training-fold segments only
/// and applied to everything downstream.
#[derive(Debug, Clone)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(segments: &[Segment]) -> Result<Self, SignalError> {
        let d = match segments.first() {
            Some(s) => s.channels(),
            None => return Err(SignalError::BadFeatureMatrix),
        };
        let mut sums = vec![0.0; d];
        let mut sq_sums = vec![0.0; d];
        let mut count = 0usize;
        for seg in segments {
            for c in 0..d {
                for &v in seg.channel_row(c) {
                    sums[c] += v;
                    sq_sums[c] += v * v;
                }
            }
            count += seg.samples();
        }
        let n = count as f64;
        let means: Vec<f64> = sums.iter().map(|s| s / n).collect();
        let stds: Vec<f64> = sq_sums
            .iter()
            .zip(&means)
            .map(|(sq, m)| {
                let var = (sq / n - m * m).max(0.0);
                let sd = var.sqrt();
                if sd < 1e-12 {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self { means, stds })
    }

    pub fn apply(&self, seg: &Segment) -> Segment {
        seg.standardized(&self.means, &self.stds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resample_constant_is_exact() {
        let ch = Channel::new("c", 32.0, vec![3.5; 64]).unwrap();
        let out = resample(&ch, 4.0).unwrap();
        assert_eq!(out.samples.len(), 8);
        for v in &out.samples {
            assert_eq!(*v, 3.5);
        }
    }

    #[test]
    fn resample_ramp_hand_evaluation() {
        // 8 Hz ramp 0..7 to 4 Hz: window-2 average then interpolate at
        // positions 0, 2, 4, 6 of the smoothed sequence.
        let ch = Channel::new("r", 8.0, (0..8).map(|i| i as f64).collect()).unwrap();
        let out = resample(&ch, 4.0).unwrap();
        assert_eq!(out.samples.len(), 4);
        for w in out.samples.windows(2) {
            assert!(w[0] < w[1], "resampled ramp not monotone: {:?}", out.samples);
        }
        let expect = [0.5, 2.5, 4.5, 6.5];
        for (got, want) in out.samples.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn upsampling_interpolates_without_filter() {
        let ch = Channel::new("u", 2.0, vec![0.0, 1.0]).unwrap();
        let out = resample(&ch, 4.0).unwrap();
        assert_eq!(out.samples.len(), 4);
        assert_eq!(out.samples[0], 0.0);
        assert!((out.samples[1] - 0.5).abs() < 1e-12);
        assert_eq!(out.samples[2], 1.0);
        assert_eq!(out.samples[3], 1.0); // clamped past the last sample
    }

    #[test]
    fn resample_preserves_envelope() {
        let samples: Vec<f64> = (0..64)
            .map(|i| (i as f64 * 0.3).sin() * 2.0 + 1.0)
            .collect();
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ch = Channel::new("e", 16.0, samples).unwrap();
        let out = resample(&ch, 4.0).unwrap();
        for v in &out.samples {
            assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }
    }

    fn frames_from(points: &[&[(f64, f64)]]) -> LandmarkFrames {
        let l = points[0].len();
        let mut f = LandmarkFrames::new(30.0, l, 2);
        for frame in points {
            let flat: Vec<f64> = frame.iter().flat_map(|&(x, y)| [x, y]).collect();
            f.push_frame(&flat).unwrap();
        }
        f
    }

    #[test]
    fn pairwise_distance_examples() {
        let f = frames_from(&[&[(0.0, 0.0), (3.0, 4.0)]]);
        let chans = pairwise_distances(&f).unwrap();
        assert_eq!(chans.len(), 1);
        assert_eq!(chans[0].name, "d_0_1");
        assert_eq!(chans[0].samples[0], 5.0);

        let coincident = frames_from(&[&[(1.0, 1.0), (1.0, 1.0)]]);
        assert_eq!(pairwise_distances(&coincident).unwrap()[0].samples[0], 0.0);

        let four = frames_from(&[&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]]);
        assert_eq!(pairwise_distances(&four).unwrap().len(), 6);
    }

    #[test]
    fn landmark_count_must_be_consistent() {
        let mut f = LandmarkFrames::new(30.0, 2, 2);
        f.push_frame(&[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            f.push_frame(&[0.0, 0.0]),
            Err(SignalError::InconsistentLandmarkCount { .. })
        ));
    }

    #[test]
    fn anova_hand_example() {
        // Feature with class-0 values {0, 2} and class-1 values {1, 3}:
        // SSB = 1 (df 1), SSW = 4 (df 2), F = 1 / 2 = 0.5.
        let features = vec![vec![0.0], vec![2.0], vec![1.0], vec![3.0]];
        let labels = vec![false, false, true, true];
        let model = anova_select(&features, &labels, 1, "test").unwrap();
        assert!((model.f_scores[0] - 0.5).abs() < 1e-12);
        assert_eq!(model.selected_indices, vec![0]);
    }

    #[test]
    fn discriminative_feature_outranks_noise() {
        // Feature 0: identical distribution in both classes. Feature 1:
        // cleanly separated.
        let features = vec![
            vec![1.0, 0.0],
            vec![2.0, 0.1],
            vec![1.0, 5.0],
            vec![2.0, 5.1],
        ];
        let labels = vec![false, false, true, true];
        let model = anova_select(&features, &labels, 1, "test").unwrap();
        assert_eq!(model.selected_indices, vec![1]);
        assert!(model.f_scores[1] > model.f_scores[0]);
    }

    #[test]
    fn select_all_orders_by_score() {
        let features = vec![
            vec![0.0, 0.0, 0.0],
            vec![0.1, 1.0, 0.0],
            vec![5.0, 1.1, 0.0],
            vec![5.1, 2.0, 0.0],
        ];
        let labels = vec![false, false, true, true];
        let model = anova_select(&features, &labels, 3, "test").unwrap();
        assert_eq!(model.selected_indices.len(), 3);
        for w in model.selected_indices.windows(2) {
            assert!(model.f_scores[w[0]] >= model.f_scores[w[1]]);
        }
    }

    #[test]
    fn zero_within_variance_ranks_first() {
        let features = vec![
            vec![0.0, 0.3],
            vec![0.0, 0.9],
            vec![1.0, 0.1],
            vec![1.0, 1.2],
        ];
        let labels = vec![false, false, true, true];
        let model = anova_select(&features, &labels, 2, "test").unwrap();
        assert!(model.f_scores[0].is_infinite());
        assert_eq!(model.selected_indices[0], 0);
    }

    #[test]
    fn single_class_rejected() {
        let features = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            anova_select(&features, &[true, true], 1, "t"),
            Err(SignalError::SingleClass)
        ));
    }

    #[test]
    fn anova_is_permutation_equivariant() {
        let features = vec![
            vec![0.0, 2.0],
            vec![1.0, 0.5],
            vec![4.0, 0.6],
            vec![5.0, 2.2],
            vec![4.5, 0.0],
        ];
        let labels = vec![false, false, true, true, true];
        let base = anova_select(&features, &labels, 2, "t").unwrap();
        let perm = [4, 2, 0, 3, 1];
        let pf: Vec<Vec<f64>> = perm.iter().map(|&i| features[i].clone()).collect();
        let pl: Vec<bool> = perm.iter().map(|&i| labels[i]).collect();
        let permuted = anova_select(&pf, &pl, 2, "t").unwrap();
        assert_eq!(base.selected_indices, permuted.selected_indices);
        for (a, b) in base.f_scores.iter().zip(&permuted.f_scores) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn test_recording(seconds: f64, rate: f64) -> Recording {
        let n = (seconds * rate) as usize;
        let a: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin() + 2.0).collect();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.05).cos() - 1.0).collect();
        Recording::new(
            "s1",
            "t1",
            true,
            vec![
                Channel::new("a", rate, a).unwrap(),
                Channel::new("b", rate, b).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn segmentation_drops_trailing_remainder() {
        let rec = test_recording(35.0, 4.0);
        let segs = assemble_segments(&rec, &[], 10.0, 4.0, Centering::None).unwrap();
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[0].samples(), 40);
        assert_eq!(segs[2].start_index, 80);
    }

    #[test]
    fn segment_shape_matches_config() {
        let rec = test_recording(1.0, 4.0);
        let segs = assemble_segments(&rec, &[], 1.0, 4.0, Centering::None).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].channels(), 2);
        assert_eq!(segs[0].samples(), 4);
        assert_eq!(segs[0].label, Some(true));
        assert_eq!(segs[0].subject_id, "s1");
    }

    #[test]
    fn per_trial_centering_zeroes_trial_mean() {
        let rec = test_recording(30.0, 4.0);
        let segs = assemble_segments(&rec, &[], 10.0, 4.0, Centering::PerTrial).unwrap();
        // Full trial length is a multiple of the segment length here, so
        // concatenated segments cover the whole centered trial.
        for c in 0..2 {
            let total: f64 = segs.iter().flat_map(|s| s.channel_row(c)).sum();
            let count: usize = segs.iter().map(|s| s.samples()).sum();
            assert!((total / count as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn segmentation_is_lossless_modulo_remainder() {
        let rec = test_recording(25.0, 4.0);
        let segs = assemble_segments(&rec, &[], 10.0, 4.0, Centering::None).unwrap();
        for (c, ch) in rec.channels.iter().enumerate() {
            let rebuilt: Vec<f64> = segs.iter().flat_map(|s| s.channel_row(c).to_vec()).collect();
            assert_eq!(rebuilt.len(), 80);
            assert_eq!(&ch.samples[..80], &rebuilt[..]);
        }
    }

    #[test]
    fn too_short_recording_rejected() {
        let rec = test_recording(5.0, 4.0);
        assert!(matches!(
            assemble_segments(&rec, &[], 10.0, 4.0, Centering::None),
            Err(SignalError::TooShort { .. })
        ));
    }

    #[test]
    fn rate_mismatch_rejected() {
        let rec = test_recording(20.0, 8.0);
        assert!(matches!(
            assemble_segments(&rec, &[], 10.0, 4.0, Centering::None),
            Err(SignalError::RateMismatch { .. })
        ));
    }

    #[test]
    fn extra_channels_come_first() {
        let rec = test_recording(10.0, 4.0);
        let extra = vec![Channel::new("d_0_1", 4.0, vec![7.0; 40]).unwrap()];
        let names = stacked_channel_names(&rec, &extra);
        assert_eq!(names, vec!["d_0_1", "a", "b"]);
        let segs = assemble_segments(&rec, &extra, 10.0, 4.0, Centering::None).unwrap();
        assert_eq!(segs[0].channels(), 3);
        assert_eq!(segs[0].value(0, 0), 7.0);
    }

    #[test]
    fn standardizer_zero_means_unit_stds() {
        let rec = test_recording(30.0, 4.0);
        let segs = assemble_segments(&rec, &[], 10.0, 4.0, Centering::None).unwrap();
        let std = Standardizer::fit(&segs).unwrap();
        let out: Vec<Segment> = segs.iter().map(|s| std.apply(s)).collect();
        let refit = Standardizer::fit(&out).unwrap();
        for c in 0..2 {
            assert!(refit.means[c].abs() < 1e-12);
            assert!((refit.stds[c] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn standardizer_handles_constant_channel() {
        let rec = Recording::new(
            "s",
            "t",
            false,
            vec![
                Channel::new("k", 4.0, vec![5.0; 40]).unwrap(),
                Channel::new("v", 4.0, (0..40).map(|i| i as f64).collect()).unwrap(),
            ],
        )
        .unwrap();
        let segs = assemble_segments(&rec, &[], 10.0, 4.0, Centering::None).unwrap();
        let std = Standardizer::fit(&segs).unwrap();
        assert_eq!(std.stds[0], 1.0);
        let out = std.apply(&segs[0]);
        assert!(out.value(0, 0).abs() < 1e-12);
    }
}
