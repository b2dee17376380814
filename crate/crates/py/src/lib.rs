//! Python bindings for the SPD-fusion pipeline: segment statistics (S, C,
//! block P), Riemannian operations (distance, geometric mean, tangent maps),
//! and the LSTM sequence classifier.
//!
//! Matrices cross the boundary as lists of row lists; segment data as one
//! row list per channel.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use spdfuse::manifold;
use spdfuse::seqnet;
use spdfuse::spdrep;
use spdfuse::symmat;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn sym_from_rows(rows: &[Vec<f64>]) -> PyResult<symmat::SymMatrix> {
    symmat::SymMatrix::from_rows(rows).map_err(value_err)
}

fn sym_to_rows(m: &symmat::SymMatrix) -> Vec<Vec<f64>> {
    let n = m.n();
    (0..n)
        .map(|i| (0..n).map(|j| m.get(i, j)).collect())
        .collect()
}

fn segment_from_rows(rows: &[Vec<f64>]) -> PyResult<spdrep::Segment> {
    let d = rows.len();
    let n = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("ragged channel rows"));
    }
    let mut data = Vec::with_capacity(d * n);
    for row in rows {
        data.extend_from_slice(row);
    }
    spdrep::Segment::new(d, n, data, "py", "py", 0, None).map_err(value_err)
}

fn parse_centering(s: &str) -> PyResult<spdrep::Centering> {
    s.parse().map_err(value_err)
}

/// A validated symmetric positive definite matrix.
#[pyclass(name = "SpdMatrix", frozen, from_py_object)]
#[derive(Clone)]
struct PySpdMatrix {
    inner: spdrep::SpdMatrix,
}

#[pymethods]
impl PySpdMatrix {
    /// Build from row lists; rejects non-positive-definite input.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let sym = sym_from_rows(&rows)?;
        Ok(Self {
            inner: spdrep::SpdMatrix::from_sym(sym).map_err(value_err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn min_eig(&self) -> f64 {
        self.inner.min_eig()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        sym_to_rows(self.inner.sym())
    }

    fn __repr__(&self) -> String {
        format!(
            "SpdMatrix(dim={}, min_eig={:.3e})",
            self.inner.dim(),
            self.inner.min_eig()
        )
    }
}

/// Eigendecomposition of a symmetric matrix: ascending eigenvalues and the
/// eigenvector matrix as rows (row i, column k = component i of vector k).
#[pyfunction]
fn eig_sym(rows: Vec<Vec<f64>>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let a = sym_from_rows(&rows)?;
    let e = symmat::eig_sym(&a).map_err(runtime_err)?;
    let n = e.n();
    let vectors = (0..n)
        .map(|i| (0..n).map(|k| e.vector_component(i, k)).collect())
        .collect();
    Ok((e.values, vectors))
}

/// Sample covariance of channel-major segment data.
#[pyfunction]
fn covariance(data: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(sym_to_rows(&spdrep::covariance(&segment_from_rows(&data)?)))
}

/// Cross-covariance over distinct timestamps of channel-major segment data.
#[pyfunction]
fn cross_covariance(data: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(sym_to_rows(&spdrep::cross_covariance(&segment_from_rows(
        &data,
    )?)))
}

/// Full segment → block-SPD construction.
#[pyfunction]
#[pyo3(signature = (data, m=2, shrinkage=1e-6, centering="per-segment"))]
fn segment_to_spd(
    data: Vec<Vec<f64>>,
    m: usize,
    shrinkage: f64,
    centering: &str,
) -> PyResult<PySpdMatrix> {
    let seg = segment_from_rows(&data)?;
    let cfg = spdrep::SpdConfig {
        m,
        shrinkage,
        centering: parse_centering(centering)?,
    };
    Ok(PySpdMatrix {
        inner: spdrep::segment_to_spd(&seg, &cfg).map_err(runtime_err)?,
    })
}

/// Affine-invariant geodesic distance.
#[pyfunction]
fn geodesic_distance(a: &PySpdMatrix, b: &PySpdMatrix) -> PyResult<f64> {
    manifold::geodesic_distance(&a.inner, &b.inner).map_err(runtime_err)
}

/// Log-Euclidean distance.
#[pyfunction]
fn log_euclidean_distance(a: &PySpdMatrix, b: &PySpdMatrix) -> PyResult<f64> {
    manifold::log_euclidean_distance(&a.inner, &b.inner).map_err(runtime_err)
}

/// Karcher (geometric) mean of a set of SPD matrices.
#[pyfunction]
#[pyo3(signature = (mats, max_iters=50, tol=1e-8))]
fn geometric_mean(mats: Vec<PySpdMatrix>, max_iters: usize, tol: f64) -> PyResult<PySpdMatrix> {
    let set: Vec<spdrep::SpdMatrix> = mats.into_iter().map(|m| m.inner).collect();
    let cfg = manifold::MeanConfig {
        max_iters,
        tol,
        step: 1.0,
    };
    Ok(PySpdMatrix {
        inner: manifold::geometric_mean(&set, &cfg).map_err(runtime_err)?,
    })
}

/// Tangent-space projection of `p` at reference `reference` (affine-invariant
/// whitened log), as the √2-weighted upper-triangle vector.
#[pyfunction]
fn tangent_map(p: &PySpdMatrix, reference: &PySpdMatrix) -> PyResult<Vec<f64>> {
    Ok(manifold::tangent_map(&p.inner, &reference.inner, "py")
        .map_err(runtime_err)?
        .values)
}

/// Inverse of `tangent_map`.
#[pyfunction]
fn tangent_unmap(values: Vec<f64>, reference: &PySpdMatrix) -> PyResult<PySpdMatrix> {
    let dim = reference.inner.dim();
    let t = manifold::TangentVector {
        values,
        matrix_dim: dim,
        reference: "py".into(),
    };
    Ok(PySpdMatrix {
        inner: manifold::tangent_unmap(&t, &reference.inner).map_err(runtime_err)?,
    })
}

/// √2-weighted upper-triangle vectorization of a symmetric matrix.
#[pyfunction]
fn vec_sym(rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    Ok(manifold::vec_sym(&sym_from_rows(&rows)?))
}

/// Inverse of `vec_sym`.
#[pyfunction]
fn unvec_sym(values: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
    Ok(sym_to_rows(&manifold::unvec_sym(&values).map_err(value_err)?))
}

/// A trained LSTM sequence classifier.
#[pyclass(name = "SequenceModel")]
struct PySequenceModel {
    params: seqnet::NetParams,
    loss_curve: Vec<f64>,
}

#[pymethods]
impl PySequenceModel {
    /// Train on sequences (each a list of equal-length step vectors) with
    /// binary labels.
    #[staticmethod]
    #[pyo3(signature = (sequences, labels, hidden=128, layers=2, epochs=50, lr=0.001,
                        dropout=0.5, batch_size=32, seed=42))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        sequences: Vec<Vec<Vec<f64>>>,
        labels: Vec<bool>,
        hidden: usize,
        layers: usize,
        epochs: usize,
        lr: f64,
        dropout: f64,
        batch_size: usize,
        seed: u64,
    ) -> PyResult<Self> {
        if sequences.len() != labels.len() {
            return Err(PyValueError::new_err("sequences and labels differ in length"));
        }
        let data: Vec<seqnet::VectorSequence> = sequences
            .into_iter()
            .zip(&labels)
            .map(|(steps, &label)| seqnet::VectorSequence {
                steps,
                label,
                subject_id: String::new(),
            })
            .collect();
        let cfg = seqnet::TrainConfig {
            hidden,
            layers,
            epochs,
            lr,
            dropout_rate: dropout,
            batch_size,
            seed,
            ..seqnet::TrainConfig::default()
        };
        let out = seqnet::train(&data, &cfg).map_err(runtime_err)?;
        Ok(Self {
            params: out.params,
            loss_curve: out.epoch_losses,
        })
    }

    /// Probability of the positive class for one sequence.
    fn predict_proba(&self, sequence: Vec<Vec<f64>>) -> PyResult<f64> {
        let seq = seqnet::VectorSequence {
            steps: sequence,
            label: false,
            subject_id: String::new(),
        };
        seqnet::forward(&self.params, &seq, None).map_err(runtime_err)
    }

    /// `(label, probability)` per sequence; `p >= 0.5` maps to `True`.
    fn predict(&self, sequences: Vec<Vec<Vec<f64>>>) -> PyResult<Vec<(bool, f64)>> {
        let data: Vec<seqnet::VectorSequence> = sequences
            .into_iter()
            .map(|steps| seqnet::VectorSequence {
                steps,
                label: false,
                subject_id: String::new(),
            })
            .collect();
        let preds = seqnet::predict(&self.params, &data).map_err(runtime_err)?;
        Ok(preds.into_iter().map(|p| (p.label, p.prob)).collect())
    }

    #[getter]
    fn loss_curve(&self) -> Vec<f64> {
        self.loss_curve.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "SequenceModel(input_dim={}, hidden={}, layers={})",
            self.params.input_dim(),
            self.params.hidden(),
            self.params.layers.len()
        )
    }
}

#[pymodule]
fn spdfuse_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PySpdMatrix>()?;
    m.add_class::<PySequenceModel>()?;
    m.add_function(wrap_pyfunction!(eig_sym, m)?)?;
    m.add_function(wrap_pyfunction!(covariance, m)?)?;
    m.add_function(wrap_pyfunction!(cross_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(segment_to_spd, m)?)?;
    m.add_function(wrap_pyfunction!(geodesic_distance, m)?)?;
    m.add_function(wrap_pyfunction!(log_euclidean_distance, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_mean, m)?)?;
    m.add_function(wrap_pyfunction!(tangent_map, m)?)?;
    m.add_function(wrap_pyfunction!(tangent_unmap, m)?)?;
    m.add_function(wrap_pyfunction!(vec_sym, m)?)?;
    m.add_function(wrap_pyfunction!(unvec_sym, m)?)?;
    Ok(())
}
