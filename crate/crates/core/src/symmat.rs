//! Dense symmetric-matrix kernel: cyclic Jacobi eigendecomposition and
//! spectral matrix functions (log, exp, sqrt, inverse sqrt, powers).
//!
//! Matrices here are small (dimension up to ~128), stored fully in row-major
//! order, and symmetrized on every construction so that drift from repeated
//! products cannot accumulate. All arithmetic is `f64`.

use thiserror::Error;

/// Errors from the symmetric-matrix kernel.
#[derive(Debug, Clone, Error)]
pub enum SymmatError {
    #[error("entry ({row},{col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("entries length {len} does not match {n}x{n}")]
    BadShape { n: usize, len: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal sum {off_sum:e})")]
    NoConvergence { sweeps: usize, off_sum: f64 },
    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },
}

/// A real symmetric matrix, stored fully in row-major order.
///
/// Construction symmetrizes the input as `(A + Aᵀ)/2` and rejects non-finite
/// entries, so a value of this type always satisfies
/// `entries[i][j] == entries[j][i]` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Build from a row-major buffer of `n*n` entries, symmetrizing.
    pub fn from_raw(n: usize, mut data: Vec<f64>) -> Result<Self, SymmatError> {
        if data.len() != n * n {
            return Err(SymmatError::BadShape { n, len: data.len() });
        }
        for (idx, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(SymmatError::NonFinite {
                    row: idx / n,
                    col: idx % n,
                });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = m;
                data[j * n + i] = m;
            }
        }
        Ok(Self { n, data })
    }

    /// Build from explicit rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SymmatError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(SymmatError::BadShape {
                    n,
                    len: row.len() * n,
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_raw(n, data)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Set entry (i, j) and its mirror (j, i).
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    pub fn add(&self, other: &Self) -> Result<Self, SymmatError> {
        if self.n != other.n {
            return Err(SymmatError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self { n: self.n, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SymmatError> {
        if self.n != other.n {
            return Err(SymmatError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self { n: self.n, data })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// `self + c·I`.
    pub fn add_scaled_identity(&self, c: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += c;
        }
        out
    }

    /// Conjugation `B·A·B` with both factors symmetric; the result is
    /// symmetric and re-symmetrized to kill rounding drift.
    pub fn conjugate_by(&self, b: &Self) -> Result<Self, SymmatError> {
        if self.n != b.n {
            return Err(SymmatError::DimensionMismatch {
                left: self.n,
                right: b.n,
            });
        }
        let t = mul_raw(&b.data, &self.data, self.n);
        let r = mul_raw(&t, &b.data, self.n);
        Self::from_raw(self.n, r)
    }

    /// Frobenius norm, `sqrt(Σ entries²)`.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Row-major `n×n` product of two raw buffers.
fn mul_raw(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    out
}

/// Eigendecomposition of a symmetric matrix: `A = V·diag(λ)·Vᵀ` with
/// eigenvalues ascending and orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenPair {
    n: usize,
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Row-major `n×n`; column `k` is the eigenvector for `values[k]`.
    pub vectors: Vec<f64>,
}

impl EigenPair {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Component `i` of eigenvector `k`.
    #[inline]
    pub fn vector_component(&self, i: usize, k: usize) -> f64 {
        self.vectors[i * self.n + k]
    }

    /// Assemble `V·diag(f(λ))·Vᵀ` for per-eigenvalue mapped values.
    pub fn reconstruct(&self, mapped: &[f64]) -> SymMatrix {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let sum: f64 = mapped
                    .iter()
                    .enumerate()
                    .map(|(k, &m)| self.vectors[i * n + k] * m * self.vectors[j * n + k])
                    .sum();
                data[i * n + j] = sum;
                data[j * n + i] = sum;
            }
        }
        SymMatrix { n, data }
    }
}

/// Sweep cap for the cyclic Jacobi iteration.
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigendecomposition by cyclic Jacobi rotations.
///
/// The sweep order is fixed (row-major over the strict upper triangle) and the
/// off-diagonal threshold schedule follows the classic recipe: `0.2·off/n²`
/// for the first three sweeps, zero afterwards. Identical input therefore
/// yields bit-identical output.
pub fn eig_sym(a: &SymMatrix) -> Result<EigenPair, SymmatError> {
    let n = a.n;
    if n == 0 {
        return Ok(EigenPair {
            n,
            values: vec![],
            vectors: vec![],
        });
    }
    let mut m = a.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    // d: current eigenvalue estimates, b/z: accumulators per Numerical
    // Recipes' jacobi to limit rounding in the diagonal updates.
    let mut d: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    for sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off_sum = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off_sum += m[p * n + q].abs();
            }
        }
        if off_sum == 0.0 {
            return Ok(finish_eigen(n, d, v));
        }
        let tresh = if sweep < 3 {
            0.2 * off_sum / (n * n) as f64
        } else {
            0.0
        };

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let g = 100.0 * apq.abs();
                // After a few sweeps, flush entries that no longer affect
                // the diagonal at working precision.
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    m[p * n + q] = 0.0;
                    continue;
                }
                if apq.abs() <= tresh {
                    continue;
                }
                let h = d[q] - d[p];
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        t = -t;
                    }
                    t
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                m[p * n + q] = 0.0;
                let rotate = |m: &mut [f64], i1: usize, j1: usize, i2: usize, j2: usize| {
                    let g = m[i1 * n + j1];
                    let h = m[i2 * n + j2];
                    m[i1 * n + j1] = g - s * (h + g * tau);
                    m[i2 * n + j2] = h + s * (g - h * tau);
                };
                for j in 0..p {
                    rotate(&mut m, j, p, j, q);
                }
                for j in (p + 1)..q {
                    rotate(&mut m, p, j, j, q);
                }
                for j in (q + 1)..n {
                    rotate(&mut m, p, j, q, j);
                }
                for j in 0..n {
                    rotate(&mut v, j, p, j, q);
                }
            }
        }
        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }

    let mut off_sum = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            off_sum += m[p * n + q].abs();
        }
    }
    Err(SymmatError::NoConvergence {
        sweeps: JACOBI_MAX_SWEEPS,
        off_sum,
    })
}

/// Sort eigenvalues ascending (stable in the original index on ties) and fix
/// each eigenvector's sign so its largest-magnitude component is positive.
fn finish_eigen(n: usize, d: Vec<f64>, v: Vec<f64>) -> EigenPair {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap().then(i.cmp(&j)));
    let mut values = Vec::with_capacity(n);
    let mut vectors = vec![0.0; n * n];
    for (k, &src) in order.iter().enumerate() {
        values.push(d[src]);
        let mut max_abs = 0.0;
        let mut sign = 1.0;
        for i in 0..n {
            let c = v[i * n + src];
            if c.abs() > max_abs {
                max_abs = c.abs();
                sign = if c < 0.0 { -1.0 } else { 1.0 };
            }
        }
        for i in 0..n {
            vectors[i * n + k] = sign * v[i * n + src];
        }
    }
    EigenPair { n, values, vectors }
}

/// Scalar functions liftable to symmetric matrices through the spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatFn {
    Log,
    Exp,
    Sqrt,
    InvSqrt,
    /// Real power `λ ↦ λ^p`; requires a positive spectrum.
    Power(f64),
}

impl MatFn {
    fn requires_positive(self) -> bool {
        !matches!(self, MatFn::Exp)
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            MatFn::Log => x.ln(),
            MatFn::Exp => x.exp(),
            MatFn::Sqrt => x.sqrt(),
            MatFn::InvSqrt => 1.0 / x.sqrt(),
            MatFn::Power(p) => x.powf(p),
        }
    }
}

/// Spectral matrix function `V·diag(f(λ))·Vᵀ`, re-symmetrized.
pub fn mat_fn(a: &SymMatrix, f: MatFn) -> Result<SymMatrix, SymmatError> {
    let eig = eig_sym(a)?;
    if f.requires_positive() {
        let min = eig.values.first().copied().unwrap_or(0.0);
        if min <= 0.0 {
            return Err(SymmatError::NotPositiveDefinite {
                min_eigenvalue: min,
            });
        }
    }
    let mapped: Vec<f64> = eig.values.iter().map(|&l| f.apply(l)).collect();
    Ok(eig.reconstruct(&mapped))
}

/// Frobenius norm of a symmetric matrix.
pub fn frobenius(a: &SymMatrix) -> f64 {
    a.frobenius()
}
