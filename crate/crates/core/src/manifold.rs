//! Riemannian geometry of SPD matrices: geodesic distance, geometric
//! (Karcher) mean, tangent-space projection at a reference point, and the
//! √2-weighted upper-triangle vectorization that preserves the Frobenius
//! norm. A log-Euclidean variant of each ships as an alternative metric
//! for ablation.

use crate::spdrep::{SpdError, SpdMatrix};
use crate::symmat::{eig_sym, mat_fn, MatFn, SymMatrix, SymmatError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ManifoldError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("geometric mean of an empty set")]
    EmptySet,
    #[error("invalid mean configuration: {reason}")]
    BadMeanConfig { reason: String },
    #[error("tangent vector length {len} is not n(n+1)/2 for any n")]
    BadVectorLength { len: usize },
    #[error(
        "Karcher iteration did not reach tolerance: residual {residual:e} after {iters} iterations"
    )]
    NoConvergence {
        residual: f64,
        iters: usize,
        /// Last iterate; callers may accept it or abort.
        iterate: Box<SpdMatrix>,
    },
    #[error(transparent)]
    Kernel(#[from] SymmatError),
    #[error(transparent)]
    Spd(#[from] SpdError),
}

/// Which SPD metric drives distances, means, and tangent maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[derive(Default)]
pub enum Metric {
    /// `δ(P,Q) = ‖log(P^{-1/2} Q P^{-1/2})‖_F`, invariant under congruence.
    #[default]
    AffineInvariant,
    /// `δ(P,Q) = ‖log P − log Q‖_F`.
    LogEuclidean,
}


impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::AffineInvariant => "affine-invariant",
            Metric::LogEuclidean => "log-euclidean",
        })
    }
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "affine-invariant" | "affine" => Ok(Metric::AffineInvariant),
            "log-euclidean" | "le" => Ok(Metric::LogEuclidean),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

/// A tangent-space vector of length `n(n+1)/2`, tagged with the identifier
/// of the reference point it was computed at. The √2 off-diagonal weighting
/// makes its Euclidean norm equal the Frobenius norm of the symmetric matrix
/// it encodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub values: Vec<f64>,
    /// Dimension `n` of the underlying symmetric matrix.
    pub matrix_dim: usize,
    /// Identifier of the reference SPD matrix (e.g. a subject id).
    pub reference: String,
}

impl TangentVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Karcher iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanConfig {
    pub max_iters: usize,
    /// Convergence threshold on the Frobenius norm of the mean whitened log.
    pub tol: f64,
    /// Initial step size; halved whenever the residual increases.
    pub step: f64,
}

impl Default for MeanConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-8,
            step: 1.0,
        }
    }
}

impl MeanConfig {
    fn validate(&self) -> Result<(), ManifoldError> {
        if self.max_iters < 1 {
            return Err(ManifoldError::BadMeanConfig {
                reason: "max_iters must be at least 1".into(),
            });
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(ManifoldError::BadMeanConfig {
                reason: "tol must be positive".into(),
            });
        }
        if self.step.is_nan() || self.step <= 0.0 || self.step > 1.0 {
            return Err(ManifoldError::BadMeanConfig {
                reason: "step must lie in (0, 1]".into(),
            });
        }
        Ok(())
    }
}

/// Row-major upper-triangle vectorization with unit diagonal weights and √2
/// off-diagonal weights: `[p₁₁, √2·p₁₂, …, p₂₂, √2·p₂₃, …, pₙₙ]`.
///
/// The scan order is frozen; serialized tangent vectors depend on it.
pub fn vec_sym(a: &SymMatrix) -> Vec<f64> {
    let n = a.n();
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        out.push(a.get(i, i));
        for j in (i + 1)..n {
            out.push(sqrt2 * a.get(i, j));
        }
    }
    out
}

/// Inverse of [`vec_sym`].
pub fn unvec_sym(values: &[f64]) -> Result<SymMatrix, ManifoldError> {
    let len = values.len();
    // n(n+1)/2 = len  =>  n = (sqrt(8·len+1) − 1)/2
    let n = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    if n * (n + 1) / 2 != len {
        return Err(ManifoldError::BadVectorLength { len });
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut m = SymMatrix::zeros(n);
    let mut idx = 0;
    for i in 0..n {
        m.set_sym(i, i, values[idx]);
        idx += 1;
        for j in (i + 1)..n {
            m.set_sym(i, j, values[idx] / sqrt2);
            idx += 1;
        }
    }
    Ok(m)
}

fn check_dims(a: &SpdMatrix, b: &SpdMatrix) -> Result<(), ManifoldError> {
    if a.dim() != b.dim() {
        return Err(ManifoldError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// Geodesic distance `‖log(Pᵢ⁻¹Pⱼ)‖_F`, evaluated in the symmetric form
/// `‖log(Pᵢ^{-1/2}·Pⱼ·Pᵢ^{-1/2})‖_F` (same value, numerically stable):
/// the squared distance is the sum of squared log-eigenvalues of the
/// whitened matrix.
pub fn geodesic_distance(pi: &SpdMatrix, pj: &SpdMatrix) -> Result<f64, ManifoldError> {
    check_dims(pi, pj)?;
    let inv_sqrt = mat_fn(pi.sym(), MatFn::InvSqrt)?;
    let whitened = pj.sym().conjugate_by(&inv_sqrt)?;
    let eig = eig_sym(&whitened)?;
    let mut sum = 0.0;
    for &l in &eig.values {
        if l <= 0.0 {
            return Err(ManifoldError::Spd(SpdError::NotPositiveDefinite {
                min_eigenvalue: l,
            }));
        }
        let ll = l.ln();
        sum += ll * ll;
    }
    Ok(sum.sqrt())
}

/// `‖log P − log Q‖_F`.
pub fn log_euclidean_distance(pi: &SpdMatrix, pj: &SpdMatrix) -> Result<f64, ManifoldError> {
    check_dims(pi, pj)?;
    let li = mat_fn(pi.sym(), MatFn::Log)?;
    let lj = mat_fn(pj.sym(), MatFn::Log)?;
    Ok(li.sub(&lj)?.frobenius())
}

/// Distance under the selected metric.
pub fn distance(metric: Metric, pi: &SpdMatrix, pj: &SpdMatrix) -> Result<f64, ManifoldError> {
    match metric {
        Metric::AffineInvariant => geodesic_distance(pi, pj),
        Metric::LogEuclidean => log_euclidean_distance(pi, pj),
    }
}

/// Karcher (geometric) mean: the minimizer of `Σᵢ δ(P, Pᵢ)²`, found by the
/// fixed-point flow `P ← P^{1/2}·exp(step·M)·P^{1/2}` with
/// `M = (1/I)·Σᵢ log(P^{-1/2}·Pᵢ·P^{-1/2})`, initialized at the arithmetic
/// mean. At return the first-order optimality residual `‖M‖_F` is ≤ `tol`.
pub fn geometric_mean(set: &[SpdMatrix], cfg: &MeanConfig) -> Result<SpdMatrix, ManifoldError> {
    cfg.validate()?;
    let first = set.first().ok_or(ManifoldError::EmptySet)?;
    let n = first.dim();
    for p in set {
        if p.dim() != n {
            return Err(ManifoldError::DimensionMismatch {
                left: n,
                right: p.dim(),
            });
        }
    }
    if set.len() == 1 {
        return Ok(set[0].clone());
    }

    let count = set.len() as f64;
    let mut acc = SymMatrix::zeros(n);
    for p in set {
        acc = acc.add(p.sym())?;
    }
    let mut current = SpdMatrix::from_sym(acc.scale(1.0 / count))?;

    let mut step = cfg.step;
    let mut prev_residual = f64::INFINITY;
    for iter in 0..=cfg.max_iters {
        let inv_sqrt = mat_fn(current.sym(), MatFn::InvSqrt)?;
        let sqrt = mat_fn(current.sym(), MatFn::Sqrt)?;
        let mut mean_log = SymMatrix::zeros(n);
        for p in set {
            let whitened = p.sym().conjugate_by(&inv_sqrt)?;
            mean_log = mean_log.add(&mat_fn(&whitened, MatFn::Log)?)?;
        }
        mean_log = mean_log.scale(1.0 / count);
        let residual = mean_log.frobenius();
        if residual <= cfg.tol {
            return Ok(current);
        }
        if iter == cfg.max_iters {
            return Err(ManifoldError::NoConvergence {
                residual,
                iters: iter,
                iterate: Box::new(current),
            });
        }
        if residual > prev_residual {
            step *= 0.5;
        }
        prev_residual = residual;
        let update = mat_fn(&mean_log.scale(step), MatFn::Exp)?;
        current = SpdMatrix::from_sym(update.conjugate_by(&sqrt)?)?;
    }
    unreachable!("loop returns or errors at iter == max_iters")
}

/// `exp((1/I)·Σ log Pᵢ)` — the closed-form mean under the log-Euclidean
/// metric.
pub fn log_euclidean_mean(set: &[SpdMatrix]) -> Result<SpdMatrix, ManifoldError> {
    let first = set.first().ok_or(ManifoldError::EmptySet)?;
    let n = first.dim();
    let mut acc = SymMatrix::zeros(n);
    for p in set {
        if p.dim() != n {
            return Err(ManifoldError::DimensionMismatch {
                left: n,
                right: p.dim(),
            });
        }
        acc = acc.add(&mat_fn(p.sym(), MatFn::Log)?)?;
    }
    let mean_log = acc.scale(1.0 / set.len() as f64);
    Ok(SpdMatrix::from_sym(mat_fn(&mean_log, MatFn::Exp)?)?)
}

/// Mean under the selected metric.
pub fn mean_for_metric(
    metric: Metric,
    set: &[SpdMatrix],
    cfg: &MeanConfig,
) -> Result<SpdMatrix, ManifoldError> {
    match metric {
        Metric::AffineInvariant => geometric_mean(set, cfg),
        Metric::LogEuclidean => log_euclidean_mean(set),
    }
}

/// A tangent-space reference point with its whitening factors precomputed,
/// so that mapping many matrices at the same reference costs one
/// eigendecomposition each instead of three.
#[derive(Debug, Clone)]
pub struct TangentBase {
    pub id: String,
    reference: SpdMatrix,
    sqrt: SymMatrix,
    inv_sqrt: SymMatrix,
    log_ref: SymMatrix,
}

impl TangentBase {
    pub fn new(reference: &SpdMatrix, id: impl Into<String>) -> Result<Self, ManifoldError> {
        Ok(Self {
            id: id.into(),
            sqrt: mat_fn(reference.sym(), MatFn::Sqrt)?,
            inv_sqrt: mat_fn(reference.sym(), MatFn::InvSqrt)?,
            log_ref: mat_fn(reference.sym(), MatFn::Log)?,
            reference: reference.clone(),
        })
    }

    pub fn reference(&self) -> &SpdMatrix {
        &self.reference
    }

    /// Project `P` to the tangent space at this reference. Under the
    /// affine-invariant metric this is `vec(log(R^{-1/2}·P·R^{-1/2}))`, the
    /// whitened simplification of the sandwiched logarithm map; under
    /// log-Euclidean it is `vec(log P − log R)`.
    pub fn map(&self, p: &SpdMatrix, metric: Metric) -> Result<TangentVector, ManifoldError> {
        check_dims(p, &self.reference)?;
        let sym = match metric {
            Metric::AffineInvariant => {
                let whitened = p.sym().conjugate_by(&self.inv_sqrt)?;
                mat_fn(&whitened, MatFn::Log)?
            }
            Metric::LogEuclidean => mat_fn(p.sym(), MatFn::Log)?.sub(&self.log_ref)?,
        };
        Ok(TangentVector {
            values: vec_sym(&sym),
            matrix_dim: p.dim(),
            reference: self.id.clone(),
        })
    }

    /// Inverse of [`TangentBase::map`].
    pub fn unmap(&self, s: &TangentVector, metric: Metric) -> Result<SpdMatrix, ManifoldError> {
        let sym = unvec_sym(&s.values)?;
        if sym.n() != self.reference.dim() {
            return Err(ManifoldError::DimensionMismatch {
                left: sym.n(),
                right: self.reference.dim(),
            });
        }
        let out = match metric {
            Metric::AffineInvariant => mat_fn(&sym, MatFn::Exp)?.conjugate_by(&self.sqrt)?,
            Metric::LogEuclidean => mat_fn(&self.log_ref.add(&sym)?, MatFn::Exp)?,
        };
        Ok(SpdMatrix::from_sym(out)?)
    }
}

/// One-shot affine-invariant tangent projection of `pi` at `pref`.
pub fn tangent_map(
    pi: &SpdMatrix,
    pref: &SpdMatrix,
    ref_id: impl Into<String>,
) -> Result<TangentVector, ManifoldError> {
    TangentBase::new(pref, ref_id)?.map(pi, Metric::AffineInvariant)
}

/// One-shot inverse: `Pref^{1/2}·exp(unvec(s))·Pref^{1/2}`.
pub fn tangent_unmap(s: &TangentVector, pref: &SpdMatrix) -> Result<SpdMatrix, ManifoldError> {
    TangentBase::new(pref, "unmap")?.unmap(s, Metric::AffineInvariant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> SymMatrix {
        SymMatrix::from_raw(
            n,
            (0..n * n).map(|_| rng.random_range(-scale..scale)).collect(),
        )
        .unwrap()
    }

    /// Well-conditioned random SPD matrix: exp of a bounded symmetric matrix.
    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> SpdMatrix {
        SpdMatrix::from_sym(mat_fn(&random_sym(n, 1.0, rng), MatFn::Exp).unwrap()).unwrap()
    }

    fn spd_from_diag(d: &[f64]) -> SpdMatrix {
        SpdMatrix::from_sym(SymMatrix::from_diag(d)).unwrap()
    }

    /// Plain row-major matmul, independent of the library internals.
    fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += a[i * n + k] * b[k * n + j];
                }
                out[i * n + j] = s;
            }
        }
        out
    }

    /// Congruence `A·P·Aᵀ` for a general invertible `A`.
    fn congruence(a: &[f64], p: &SpdMatrix, n: usize) -> SpdMatrix {
        let mut at = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                at[i * n + j] = a[j * n + i];
            }
        }
        let tmp = matmul(a, p.sym().data(), n);
        let out = matmul(&tmp, &at, n);
        SpdMatrix::from_sym(SymMatrix::from_raw(n, out).unwrap()).unwrap()
    }

    /// Random invertible matrix: exp of a symmetric matrix times a Givens
    /// rotation.
    fn random_invertible(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let spd = mat_fn(&random_sym(n, 0.7, rng), MatFn::Exp).unwrap();
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let (i, j) = (0, n - 1);
        let mut rot = vec![0.0; n * n];
        for k in 0..n {
            rot[k * n + k] = 1.0;
        }
        rot[i * n + i] = theta.cos();
        rot[j * n + j] = theta.cos();
        rot[i * n + j] = -theta.sin();
        rot[j * n + i] = theta.sin();
        matmul(spd.data(), &rot, n)
    }

    #[test]
    fn distance_identity_examples() {
        let eye = spd_from_diag(&[1.0, 1.0]);
        assert_eq!(geodesic_distance(&eye, &eye).unwrap(), 0.0);

        let four = spd_from_diag(&[4.0, 4.0]);
        let d = geodesic_distance(&eye, &four).unwrap();
        let expect = 2.0_f64.sqrt() * 4.0_f64.ln();
        assert!((d - expect).abs() < 1e-12, "{d} vs {expect}");
    }

    #[test]
    fn distance_is_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.random_range(2..=6);
            let p = random_spd(n, &mut rng);
            let q = random_spd(n, &mut rng);
            let a = random_invertible(n, &mut rng);
            let d0 = geodesic_distance(&p, &q).unwrap();
            let d1 = geodesic_distance(&congruence(&a, &p, n), &congruence(&a, &q, n)).unwrap();
            assert!((d0 - d1).abs() < 1e-8 * (1.0 + d0), "{d0} vs {d1}");
        }
    }

    #[test]
    fn distance_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..30 {
            let n = rng.random_range(2..=12);
            let p = random_spd(n, &mut rng);
            let q = random_spd(n, &mut rng);
            let r = random_spd(n, &mut rng);
            let dpq = geodesic_distance(&p, &q).unwrap();
            let dqp = geodesic_distance(&q, &p).unwrap();
            assert!((dpq - dqp).abs() < 1e-10, "symmetry violated");
            let dpr = geodesic_distance(&p, &r).unwrap();
            let dqr = geodesic_distance(&q, &r).unwrap();
            assert!(dpq <= dpr + dqr + 1e-8, "triangle inequality violated");
            assert!(geodesic_distance(&p, &p).unwrap() < 1e-8);
        }
    }

    #[test]
    fn mean_singleton_and_constant_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = random_spd(4, &mut rng);
        let cfg = MeanConfig::default();
        let single = geometric_mean(std::slice::from_ref(&a), &cfg).unwrap();
        assert_eq!(single.sym(), a.sym());
        let triple = geometric_mean(&[a.clone(), a.clone(), a.clone()], &cfg).unwrap();
        let diff = triple.sym().sub(a.sym()).unwrap().frobenius();
        assert!(diff < 1e-8, "mean of {{A,A,A}} drifted by {diff}");
    }

    #[test]
    fn mean_of_commuting_pair_is_geometric() {
        let a = spd_from_diag(&[1.0, 1.0]);
        let b = spd_from_diag(&[4.0, 4.0]);
        let m = geometric_mean(&[a, b], &MeanConfig::default()).unwrap();
        assert!((m.get(0, 0) - 2.0).abs() < 1e-8);
        assert!((m.get(1, 1) - 2.0).abs() < 1e-8);
        assert!(m.get(0, 1).abs() < 1e-8);
    }

    /// Closed-form geodesic midpoint `A #_{1/2} B`, written against the
    /// kernel only — the oracle for two-point means.
    fn midpoint_oracle(a: &SpdMatrix, b: &SpdMatrix) -> SymMatrix {
        let sa = mat_fn(a.sym(), MatFn::Sqrt).unwrap();
        let isa = mat_fn(a.sym(), MatFn::InvSqrt).unwrap();
        let inner = b.sym().conjugate_by(&isa).unwrap();
        mat_fn(&inner, MatFn::Sqrt).unwrap().conjugate_by(&sa).unwrap()
    }

    #[test]
    fn two_point_mean_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let cfg = MeanConfig {
            tol: 1e-10,
            ..MeanConfig::default()
        };
        for _ in 0..20 {
            let n = rng.random_range(2..=6);
            let a = random_spd(n, &mut rng);
            let b = random_spd(n, &mut rng);
            let m = geometric_mean(&[a.clone(), b.clone()], &cfg).unwrap();
            let oracle = midpoint_oracle(&a, &b);
            let diff = m.sym().sub(&oracle).unwrap().frobenius();
            assert!(diff < 1e-8, "midpoint off by {diff}");
        }
    }

    #[test]
    fn karcher_optimality_and_permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let cfg = MeanConfig {
            tol: 1e-10,
            ..MeanConfig::default()
        };
        let set: Vec<SpdMatrix> = (0..7).map(|_| random_spd(5, &mut rng)).collect();
        let mean = geometric_mean(&set, &cfg).unwrap();

        // First-order optimality: tangent vectors at the mean sum to ~zero.
        let base = TangentBase::new(&mean, "m").unwrap();
        let mut sum = [0.0; 5 * 6 / 2];
        for p in &set {
            let t = base.map(p, Metric::AffineInvariant).unwrap();
            for (s, v) in sum.iter_mut().zip(&t.values) {
                *s += v;
            }
        }
        let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(
            norm <= set.len() as f64 * cfg.tol * 10.0,
            "tangent sum {norm} not near zero"
        );

        let mut permuted = set.clone();
        permuted.reverse();
        permuted.swap(0, 3);
        let mean2 = geometric_mean(&permuted, &cfg).unwrap();
        let diff = mean.sym().sub(mean2.sym()).unwrap().frobenius();
        assert!(diff < 1e-8, "permutation changed the mean by {diff}");
    }

    #[test]
    fn tangent_map_examples() {
        let eye = spd_from_diag(&[1.0, 1.0]);
        let at_base = tangent_map(&eye, &eye, "i").unwrap();
        assert!(at_base.norm() < 1e-14, "log at base point not zero");

        let e2 = std::f64::consts::E * std::f64::consts::E;
        let p = spd_from_diag(&[e2, 1.0]);
        let s = tangent_map(&p, &eye, "i").unwrap();
        assert!((s.values[0] - 2.0).abs() < 1e-12);
        assert!(s.values[1].abs() < 1e-12);
        assert!(s.values[2].abs() < 1e-12);
    }

    #[test]
    fn tangent_norm_matches_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..20 {
            let n = rng.random_range(2..=8);
            let p = random_spd(n, &mut rng);
            let r = random_spd(n, &mut rng);
            let s = tangent_map(&p, &r, "r").unwrap();
            let d = geodesic_distance(&p, &r).unwrap();
            assert!((s.norm() - d).abs() < 1e-9 * (1.0 + d), "{} vs {d}", s.norm());
        }
    }

    #[test]
    fn tangent_unmap_examples_and_roundtrip() {
        let eye = spd_from_diag(&[1.0, 1.0]);
        let zero = TangentVector {
            values: vec![0.0, 0.0, 0.0],
            matrix_dim: 2,
            reference: "i".into(),
        };
        let back = tangent_unmap(&zero, &eye).unwrap();
        assert!(back.sym().sub(eye.sym()).unwrap().frobenius() < 1e-12);

        let s = TangentVector {
            values: vec![2.0, 0.0, 0.0],
            matrix_dim: 2,
            reference: "i".into(),
        };
        let p = tangent_unmap(&s, &eye).unwrap();
        let e2 = std::f64::consts::E * std::f64::consts::E;
        assert!((p.get(0, 0) - e2).abs() < 1e-10);
        assert!((p.get(1, 1) - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..50 {
            let n = rng.random_range(2..=6);
            let p = random_spd(n, &mut rng);
            let r = random_spd(n, &mut rng);
            let s = tangent_map(&p, &r, "r").unwrap();
            let back = tangent_unmap(&s, &r).unwrap();
            let rel = back.sym().sub(p.sym()).unwrap().frobenius() / p.sym().frobenius();
            assert!(rel < 1e-8, "roundtrip relative error {rel}");
        }
    }

    #[test]
    fn log_euclidean_roundtrip_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let r = random_spd(4, &mut rng);
        let p = random_spd(4, &mut rng);
        let base = TangentBase::new(&r, "r").unwrap();
        let s = base.map(&p, Metric::LogEuclidean).unwrap();
        let back = base.unmap(&s, Metric::LogEuclidean).unwrap();
        let rel = back.sym().sub(p.sym()).unwrap().frobenius() / p.sym().frobenius();
        assert!(rel < 1e-8);
        assert!(
            (s.norm() - log_euclidean_distance(&p, &r).unwrap()).abs() < 1e-9,
            "LE tangent norm vs LE distance"
        );

        let a = spd_from_diag(&[1.0, 1.0]);
        let b = spd_from_diag(&[4.0, 4.0]);
        let m = log_euclidean_mean(&[a, b]).unwrap();
        assert!((m.get(0, 0) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn vec_examples_and_norm_preservation() {
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let v = vec_sym(&a);
        assert_eq!(v.len(), 3);
        assert_eq!(v[0], 1.0);
        assert!((v[1] - 2.0 * 2.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!(v[2], 3.0);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 18.0_f64.sqrt()).abs() < 1e-15);
        assert!((norm - a.frobenius()).abs() < 1e-15);

        let eye = vec_sym(&SymMatrix::identity(2));
        assert_eq!(eye, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn vec_unvec_are_mutually_inverse_and_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        for _ in 0..30 {
            let n = rng.random_range(2..=9);
            let a = random_sym(n, 5.0, &mut rng);
            let b = random_sym(n, 5.0, &mut rng);
            let back = unvec_sym(&vec_sym(&a)).unwrap();
            assert!(back.sub(&a).unwrap().frobenius() < 1e-14);
            // Linearity: vec(a + 2b) = vec(a) + 2·vec(b).
            let lhs = vec_sym(&a.add(&b.scale(2.0)).unwrap());
            let rhs: Vec<f64> = vec_sym(&a)
                .iter()
                .zip(vec_sym(&b))
                .map(|(x, y)| x + 2.0 * y)
                .collect();
            for (l, r) in lhs.iter().zip(&rhs) {
                assert!((l - r).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn empty_set_and_bad_config_rejected() {
        assert!(matches!(
            geometric_mean(&[], &MeanConfig::default()),
            Err(ManifoldError::EmptySet)
        ));
        let bad = MeanConfig {
            step: 0.0,
            ..MeanConfig::default()
        };
        let a = spd_from_diag(&[1.0, 2.0]);
        assert!(matches!(
            geometric_mean(&[a], &bad),
            Err(ManifoldError::BadMeanConfig { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = spd_from_diag(&[1.0, 2.0]);
        let b = spd_from_diag(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            geodesic_distance(&a, &b),
            Err(ManifoldError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            tangent_map(&a, &b, "x"),
            Err(ManifoldError::DimensionMismatch { .. })
        ));
    }
}
