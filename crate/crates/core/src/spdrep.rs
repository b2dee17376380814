//! Multimodal SPD representation of channel-stacked segments: sample
//! covariance `S`, cross-covariance `C` over distinct timestamps, and the
//! block matrix `P` with `S` on the diagonal blocks and `C` elsewhere.

use crate::symmat::{eig_sym, SymMatrix, SymmatError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest block dimension `m·D` the pipeline accepts; beyond this the
/// tangent dimension `n(n+1)/2` blows up quadratically.
pub const MAX_BLOCK_DIM: usize = 128;

#[derive(Debug, Clone, Error)]
pub enum SpdError {
    #[error("segment needs at least 2 channels, got {channels}")]
    TooFewChannels { channels: usize },
    #[error("segment needs at least 2 samples, got {samples}")]
    DegenerateSegment { samples: usize },
    #[error("segment data length {len} does not match {channels}x{samples}")]
    BadShape {
        channels: usize,
        samples: usize,
        len: usize,
    },
    #[error("segment entry is not finite (channel {channel}, sample {sample})")]
    NonFinite { channel: usize, sample: usize },
    #[error("S and C dimensions differ: {s_dim} vs {c_dim}")]
    BlockMismatch { s_dim: usize, c_dim: usize },
    #[error("block dimension m·D = {m}·{d} exceeds the cap of {MAX_BLOCK_DIM}")]
    BlockTooLarge { m: usize, d: usize },
    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error(transparent)]
    Kernel(#[from] SymmatError),
}

/// How channel means are removed before covariance estimation.
///
/// Per-segment centering forces `C = −S/N` exactly (the cross terms then
/// carry nothing beyond `S`), so the default is per-trial: each channel's
/// mean over the whole recording is subtracted before segmentation, leaving
/// segment-level mean structure visible to `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[derive(Default)]
pub enum Centering {
    #[default]
    PerTrial,
    PerSegment,
    None,
}


impl std::fmt::Display for Centering {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Centering::PerTrial => "per-trial",
            Centering::PerSegment => "per-segment",
            Centering::None => "none",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Centering {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-trial" => Ok(Centering::PerTrial),
            "per-segment" => Ok(Centering::PerSegment),
            "none" => Ok(Centering::None),
            other => Err(format!("unknown centering mode `{other}`")),
        }
    }
}

/// A `D×N` block of `D` synchronized channels over `N` time instants,
/// with provenance.
#[derive(Debug, Clone)]
pub struct Segment {
    channels: usize,
    samples: usize,
    /// Channel-major: `data[c*samples + i]` is channel `c` at instant `i`.
    data: Vec<f64>,
    pub subject_id: String,
    pub trial_id: String,
    /// Sample offset of the segment start within its trial.
    pub start_index: usize,
    /// Binary class; `true` is the positive class.
    pub label: Option<bool>,
}

impl Segment {
    pub fn new(
        channels: usize,
        samples: usize,
        data: Vec<f64>,
        subject_id: impl Into<String>,
        trial_id: impl Into<String>,
        start_index: usize,
        label: Option<bool>,
    ) -> Result<Self, SpdError> {
        if channels < 2 {
            return Err(SpdError::TooFewChannels { channels });
        }
        if samples < 2 {
            return Err(SpdError::DegenerateSegment { samples });
        }
        if data.len() != channels * samples {
            return Err(SpdError::BadShape {
                channels,
                samples,
                len: data.len(),
            });
        }
        for (idx, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(SpdError::NonFinite {
                    channel: idx / samples,
                    sample: idx % samples,
                });
            }
        }
        Ok(Self {
            channels,
            samples,
            data,
            subject_id: subject_id.into(),
            trial_id: trial_id.into(),
            start_index,
            label,
        })
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn samples(&self) -> usize {
        self.samples
    }

    #[inline]
    pub fn value(&self, channel: usize, sample: usize) -> f64 {
        self.data[channel * self.samples + sample]
    }

    pub fn channel_row(&self, channel: usize) -> &[f64] {
        &self.data[channel * self.samples..(channel + 1) * self.samples]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Copy with each channel's mean over this segment removed.
    pub fn centered_per_segment(&self) -> Segment {
        let mut out = self.clone();
        for c in 0..self.channels {
            let row = &mut out.data[c * self.samples..(c + 1) * self.samples];
            let mean = row.iter().sum::<f64>() / self.samples as f64;
            for v in row.iter_mut() {
                *v -= mean;
            }
        }
        out
    }

    /// Copy with every channel shifted and scaled: `x ← (x − offset)/scale`.
    pub fn standardized(&self, offsets: &[f64], scales: &[f64]) -> Segment {
        let mut out = self.clone();
        for c in 0..self.channels {
            let row = &mut out.data[c * self.samples..(c + 1) * self.samples];
            for v in row.iter_mut() {
                *v = (*v - offsets[c]) / scales[c];
            }
        }
        out
    }
}

/// Configuration for the block SPD construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpdConfig {
    /// Block multiplicity of the representation: `P` holds `m` diagonal
    /// blocks of `S` and `m(m−1)` off-diagonal blocks of `C`. `m = 1`
    /// degenerates to `S` alone.
    pub m: usize,
    /// Relative ridge coefficient; `ε·trace(S)/D` is added to the diagonal
    /// of `S` before assembly so near-constant channels cannot produce a
    /// singular block.
    pub shrinkage: f64,
    pub centering: Centering,
}

impl Default for SpdConfig {
    fn default() -> Self {
        Self {
            m: 2,
            shrinkage: 1e-6,
            centering: Centering::PerTrial,
        }
    }
}

impl SpdConfig {
    /// Reject configurations whose block dimension would exceed the cap.
    pub fn validate_for_channels(&self, d: usize) -> Result<(), SpdError> {
        if self.m == 0 || self.m * d > MAX_BLOCK_DIM {
            return Err(SpdError::BlockTooLarge { m: self.m, d });
        }
        Ok(())
    }
}

/// A symmetric positive definite matrix with its smallest eigenvalue cached
/// at construction; `min_eig > 0` is validated, never assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    mat: SymMatrix,
    min_eig: f64,
}

impl SpdMatrix {
    /// Validate positive definiteness by full eigendecomposition.
    pub fn from_sym(mat: SymMatrix) -> Result<Self, SpdError> {
        let eig = eig_sym(&mat)?;
        let min_eig = eig.values.first().copied().unwrap_or(0.0);
        if min_eig <= 0.0 {
            return Err(SpdError::NotPositiveDefinite {
                min_eigenvalue: min_eig,
            });
        }
        Ok(Self { mat, min_eig })
    }

    /// Force positive definiteness by flooring the spectrum at
    /// `rel_floor·max|λ|`. Used for representations (the cross-covariance
    /// baseline) that are symmetric but not guaranteed definite.
    pub fn from_sym_floored(mat: &SymMatrix, rel_floor: f64) -> Result<Self, SpdError> {
        let eig = eig_sym(mat)?;
        let max_abs = eig
            .values
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
            .max(1e-30);
        let floor = rel_floor.max(1e-12) * max_abs;
        let mapped: Vec<f64> = eig.values.iter().map(|&l| l.max(floor)).collect();
        let min_eig = mapped.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Self {
            mat: eig.reconstruct(&mapped),
            min_eig,
        })
    }

    fn from_validated(mat: SymMatrix, min_eig: f64) -> Self {
        Self { mat, min_eig }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.n()
    }

    pub fn sym(&self) -> &SymMatrix {
        &self.mat
    }

    #[inline]
    pub fn min_eig(&self) -> f64 {
        self.min_eig
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }
}

/// Sample covariance `S = (1/(N−1))·Σᵢ xᵢxᵢᵀ` of a segment whose centering
/// has already been applied upstream.
pub fn covariance(seg: &Segment) -> SymMatrix {
    let d = seg.channels;
    let n = seg.samples;
    let mut data = vec![0.0; d * d];
    for a in 0..d {
        let ra = seg.channel_row(a);
        for b in a..d {
            let rb = seg.channel_row(b);
            let dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
            let v = dot / (n as f64 - 1.0);
            data[a * d + b] = v;
            data[b * d + a] = v;
        }
    }
    SymMatrix::from_raw(d, data).expect("covariance of a finite segment is finite")
}

/// Cross-covariance `C = (1/(N²−N))·Σ_{i≠j} xᵢxⱼᵀ`, evaluated through the
/// identity `Σ_{i≠j} xᵢxⱼᵀ = s·sᵀ − Σᵢxᵢxᵢᵀ` with `s = Σᵢxᵢ`, which is
/// O(D²N) instead of the O(D²N²) double sum.
pub fn cross_covariance(seg: &Segment) -> SymMatrix {
    let d = seg.channels;
    let n = seg.samples as f64;
    let sums: Vec<f64> = (0..d)
        .map(|c| seg.channel_row(c).iter().sum::<f64>())
        .collect();
    let s = covariance(seg);
    let denom = n * n - n;
    let mut data = vec![0.0; d * d];
    for a in 0..d {
        for b in a..d {
            let v = (sums[a] * sums[b] - (n - 1.0) * s.get(a, b)) / denom;
            data[a * d + b] = v;
            data[b * d + a] = v;
        }
    }
    SymMatrix::from_raw(d, data).expect("cross-covariance of a finite segment is finite")
}

/// Assemble the `(m·D)×(m·D)` block matrix with `S` on the diagonal blocks
/// and `C` elsewhere, after applying the ridge `S ← S + ε·trace(S)/D·I`.
///
/// Positive definiteness is validated through the exact block eigenstructure:
/// the spectrum of `P` is `eig(S+(m−1)C) ∪ eig(S−C)` (the latter with
/// multiplicity `m−1`), so two `D×D` eigendecompositions replace one
/// `(mD)×(mD)` one.
pub fn block_p(s: &SymMatrix, c: &SymMatrix, cfg: &SpdConfig) -> Result<SpdMatrix, SpdError> {
    let d = s.n();
    if c.n() != d {
        return Err(SpdError::BlockMismatch {
            s_dim: d,
            c_dim: c.n(),
        });
    }
    cfg.validate_for_channels(d)?;
    let ridge = cfg.shrinkage * s.trace() / d as f64;
    let s = s.add_scaled_identity(ridge);
    let m = cfg.m;

    if m == 1 {
        let eig = eig_sym(&s)?;
        let min_eig = eig.values[0];
        if min_eig <= 0.0 {
            return Err(SpdError::NotPositiveDefinite {
                min_eigenvalue: min_eig,
            });
        }
        return Ok(SpdMatrix::from_validated(s, min_eig));
    }

    let sum_block = s.add(&c.scale((m - 1) as f64))?;
    let diff_block = s.sub(c)?;
    let min_sum = eig_sym(&sum_block)?.values[0];
    let min_diff = eig_sym(&diff_block)?.values[0];
    let min_eig = min_sum.min(min_diff);
    if min_eig <= 0.0 {
        return Err(SpdError::NotPositiveDefinite {
            min_eigenvalue: min_eig,
        });
    }

    let nd = m * d;
    let mut data = vec![0.0; nd * nd];
    for bi in 0..m {
        for bj in 0..m {
            let block = if bi == bj { &s } else { c };
            for i in 0..d {
                for j in 0..d {
                    data[(bi * d + i) * nd + (bj * d + j)] = block.get(i, j);
                }
            }
        }
    }
    let mat = SymMatrix::from_raw(nd, data)?;
    Ok(SpdMatrix::from_validated(mat, min_eig))
}

/// End-to-end segment → SPD composition: per-segment centering if configured,
/// then covariance, cross-covariance, and block assembly.
pub fn segment_to_spd(seg: &Segment, cfg: &SpdConfig) -> Result<SpdMatrix, SpdError> {
    let owned;
    let seg = if cfg.centering == Centering::PerSegment {
        owned = seg.centered_per_segment();
        &owned
    } else {
        seg
    };
    let s = covariance(seg);
    let c = cross_covariance(seg);
    block_p(&s, &c, cfg)
}

/// Like [`segment_to_spd`] but retries with a tenfold-increased ridge when
/// the block fails positive definiteness, up to `ε = 1`. Returns the matrix
/// together with the shrinkage that succeeded.
pub fn segment_to_spd_auto(seg: &Segment, cfg: &SpdConfig) -> Result<(SpdMatrix, f64), SpdError> {
    let mut eps = cfg.shrinkage;
    loop {
        let attempt = SpdConfig {
            shrinkage: eps,
            ..cfg.clone()
        };
        match segment_to_spd(seg, &attempt) {
            Ok(p) => return Ok((p, eps)),
            Err(SpdError::NotPositiveDefinite { .. }) if eps < 1.0 => {
                eps = if eps <= 0.0 { 1e-8 } else { eps * 10.0 };
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seg_from_columns(cols: &[Vec<f64>]) -> Segment {
        let n = cols.len();
        let d = cols[0].len();
        let mut data = vec![0.0; d * n];
        for (i, col) in cols.iter().enumerate() {
            for (c, &v) in col.iter().enumerate() {
                data[c * n + i] = v;
            }
        }
        Segment::new(d, n, data, "s", "t", 0, None).unwrap()
    }

    /// O(N²) double sum of the cross-covariance definition; the regression
    /// oracle for the fast formula.
    fn cross_covariance_brute(seg: &Segment) -> SymMatrix {
        let d = seg.channels();
        let n = seg.samples();
        let mut acc = vec![0.0; d * d];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for a in 0..d {
                    for b in 0..d {
                        acc[a * d + b] += seg.value(a, i) * seg.value(b, j);
                    }
                }
            }
        }
        let denom = (n * n - n) as f64;
        for v in acc.iter_mut() {
            *v /= denom;
        }
        SymMatrix::from_raw(d, acc).unwrap()
    }

    fn random_segment(rng: &mut ChaCha8Rng) -> Segment {
        let d = rng.random_range(2..=4);
        let n = rng.random_range(2..=12);
        let data: Vec<f64> = (0..d * n).map(|_| rng.random_range(-3.0..3.0)).collect();
        Segment::new(d, n, data, "s", "t", 0, None).unwrap()
    }

    #[test]
    fn covariance_hand_examples() {
        let s = covariance(&seg_from_columns(&[vec![1.0, 1.0], vec![-1.0, -1.0]]));
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(s.get(i, j), 2.0);
            }
        }

        let z = covariance(&seg_from_columns(&[vec![0.0, 0.0], vec![0.0, 0.0]]));
        assert_eq!(z.frobenius(), 0.0);

        let e = covariance(&seg_from_columns(&[vec![1.0, 0.0], vec![0.0, 1.0]]));
        assert_eq!(e.get(0, 0), 1.0);
        assert_eq!(e.get(1, 1), 1.0);
        assert_eq!(e.get(0, 1), 0.0);
    }

    #[test]
    fn cross_covariance_hand_examples() {
        let c = cross_covariance(&seg_from_columns(&[vec![1.0, 1.0], vec![-1.0, -1.0]]));
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(c.get(i, j), -1.0);
            }
        }

        let c3 = cross_covariance(&seg_from_columns(&[
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 0.0],
        ]));
        assert!((c3.get(0, 0) - 1.0).abs() < 1e-15);
        assert!(c3.get(0, 1).abs() < 1e-15);
        assert!(c3.get(1, 1).abs() < 1e-15);
    }

    #[test]
    fn fast_formula_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let seg = random_segment(&mut rng);
            let fast = cross_covariance(&seg);
            let brute = cross_covariance_brute(&seg);
            let diff = fast.sub(&brute).unwrap().frobenius();
            assert!(diff < 1e-12, "fast vs brute differ by {diff}");
        }
    }

    #[test]
    fn per_segment_centering_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let seg = random_segment(&mut rng).centered_per_segment();
            let s = covariance(&seg);
            let c = cross_covariance(&seg);
            let n = seg.samples() as f64;
            let expect = s.scale(-1.0 / n);
            let diff = c.sub(&expect).unwrap().frobenius();
            assert!(diff < 1e-12, "C != -S/N: {diff}");
        }
    }

    #[test]
    fn covariance_is_positive_semidefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let seg = random_segment(&mut rng);
            let s = covariance(&seg);
            let min = eig_sym(&s).unwrap().values[0];
            assert!(min >= -1e-10 * s.trace().max(1.0), "min eig {min}");
        }
    }

    #[test]
    fn block_p_m1_is_s() {
        let s = SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let c = SymMatrix::from_rows(&[vec![9.0, 9.0], vec![9.0, 9.0]]).unwrap();
        let cfg = SpdConfig {
            m: 1,
            shrinkage: 0.0,
            centering: Centering::None,
        };
        let p = block_p(&s, &c, &cfg).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.sym(), &s);
    }

    #[test]
    fn block_p_eigenvalues_match_formula() {
        let s = SymMatrix::from_diag(&[2.0, 2.0]);
        let c = SymMatrix::from_diag(&[1.0, 1.0]);
        let cfg = SpdConfig {
            m: 2,
            shrinkage: 0.0,
            centering: Centering::None,
        };
        let p = block_p(&s, &c, &cfg).unwrap();
        let eig = eig_sym(p.sym()).unwrap();
        let expect = [1.0, 1.0, 3.0, 3.0];
        for (got, want) in eig.values.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((p.min_eig() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn block_eigenstructure_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let d = rng.random_range(2..=4);
            let m = rng.random_range(2..=4);
            // Diagonally dominant S keeps every draw positive definite.
            let s = SymMatrix::from_raw(
                d,
                (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect(),
            )
            .unwrap()
            .add_scaled_identity(3.0 + m as f64);
            let c = SymMatrix::from_raw(
                d,
                (0..d * d).map(|_| rng.random_range(-0.5..0.5)).collect(),
            )
            .unwrap();
            let cfg = SpdConfig {
                m,
                shrinkage: 0.0,
                centering: Centering::None,
            };
            let p = block_p(&s, &c, &cfg).unwrap();
            let mut full = eig_sym(p.sym()).unwrap().values;
            let mut formula = eig_sym(&s.add(&c.scale((m - 1) as f64)).unwrap())
                .unwrap()
                .values;
            let diff_eigs = eig_sym(&s.sub(&c).unwrap()).unwrap().values;
            for _ in 0..(m - 1) {
                formula.extend_from_slice(&diff_eigs);
            }
            formula.sort_by(|a, b| a.partial_cmp(b).unwrap());
            full.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (f, g) in full.iter().zip(&formula) {
                assert!((f - g).abs() < 1e-9 * (1.0 + g.abs()), "{f} vs {g}");
            }
        }
    }

    #[test]
    fn singular_s_rejected_without_shrinkage() {
        let s = SymMatrix::from_rows(&[vec![2.0, 2.0], vec![2.0, 2.0]]).unwrap();
        let c = SymMatrix::zeros(2);
        for m in 1..=3 {
            let cfg = SpdConfig {
                m,
                shrinkage: 0.0,
                centering: Centering::None,
            };
            match block_p(&s, &c, &cfg) {
                Err(SpdError::NotPositiveDefinite { min_eigenvalue }) => {
                    assert!(min_eigenvalue.abs() < 1e-12)
                }
                other => panic!("expected NotPositiveDefinite, got {other:?}"),
            }
        }
    }

    #[test]
    fn block_dimension_cap_enforced() {
        let cfg = SpdConfig {
            m: 13,
            shrinkage: 0.0,
            centering: Centering::None,
        };
        // 13 · 10 = 130 > 128.
        assert!(matches!(
            cfg.validate_for_channels(10),
            Err(SpdError::BlockTooLarge { .. })
        ));
        let s = SymMatrix::identity(10);
        let c = SymMatrix::zeros(10);
        assert!(matches!(
            block_p(&s, &c, &cfg),
            Err(SpdError::BlockTooLarge { .. })
        ));
    }

    #[test]
    fn scaling_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let seg = random_segment(&mut rng);
        let alpha = 2.5;
        let scaled = Segment::new(
            seg.channels(),
            seg.samples(),
            seg.data().iter().map(|v| v * alpha).collect(),
            "s",
            "t",
            0,
            None,
        )
        .unwrap();
        let a2 = alpha * alpha;
        let ds = covariance(&scaled)
            .sub(&covariance(&seg).scale(a2))
            .unwrap()
            .frobenius();
        let dc = cross_covariance(&scaled)
            .sub(&cross_covariance(&seg).scale(a2))
            .unwrap()
            .frobenius();
        assert!(ds < 1e-10 && dc < 1e-10, "S or C not α²-equivariant");
        let cfg = SpdConfig {
            m: 2,
            shrinkage: 1e-6,
            centering: Centering::None,
        };
        if let (Ok(p), Ok(ps)) = (segment_to_spd(&seg, &cfg), segment_to_spd(&scaled, &cfg)) {
            let dp = ps.sym().sub(&p.sym().scale(a2)).unwrap().frobenius();
            assert!(
                dp < 1e-8 * (1.0 + p.sym().frobenius()),
                "P not α²-equivariant"
            );
        }
    }

    #[test]
    fn iid_noise_yields_near_identity_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut gauss = move || {
            // Box–Muller from two uniforms.
            let u1: f64 = rng.random_range(1e-12..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let d = 2;
        let n = 100;
        let data: Vec<f64> = (0..d * n).map(|_| gauss()).collect();
        let seg = Segment::new(d, n, data, "s", "t", 0, None).unwrap();
        let cfg = SpdConfig {
            m: 2,
            shrinkage: 1e-6,
            centering: Centering::PerTrial,
        };
        let p = segment_to_spd(&seg, &cfg).unwrap();
        assert_eq!(p.dim(), 4);
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (p.get(i, j) - target).abs() < 0.5,
                    "diagonal block entry ({i},{j}) = {} too far from identity",
                    p.get(i, j)
                );
                assert!((p.get(i + 2, j + 2) - target).abs() < 0.5);
            }
        }
    }

    #[test]
    fn zero_variance_channel_survives_with_shrinkage() {
        let n = 20;
        let mut data = vec![0.0; 2 * n];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..n {
            data[i] = rng.random_range(-1.0..1.0);
            data[n + i] = 0.0; // dead channel
        }
        let seg = Segment::new(2, n, data, "s", "t", 0, None).unwrap();
        let cfg = SpdConfig {
            m: 2,
            shrinkage: 1e-6,
            centering: Centering::None,
        };
        let p = segment_to_spd(&seg, &cfg).unwrap();
        assert!(p.min_eig() > 0.0);
    }

    #[test]
    fn auto_retry_raises_shrinkage() {
        let n = 10;
        // Identical channels: S is exactly singular.
        let base: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut data = base.clone();
        data.extend_from_slice(&base);
        let seg = Segment::new(2, n, data, "s", "t", 0, None).unwrap();
        let cfg = SpdConfig {
            m: 2,
            shrinkage: 0.0,
            centering: Centering::PerSegment,
        };
        let (p, eps) = segment_to_spd_auto(&seg, &cfg).unwrap();
        assert!(p.min_eig() > 0.0);
        assert!(eps > 0.0);
    }

    #[test]
    fn floored_spd_from_indefinite() {
        let c = SymMatrix::from_diag(&[3.0, -1.0]);
        let p = SpdMatrix::from_sym_floored(&c, 1e-6).unwrap();
        assert!(p.min_eig() > 0.0);
        assert!((p.get(0, 0) - 3.0).abs() < 1e-9);
    }
}
