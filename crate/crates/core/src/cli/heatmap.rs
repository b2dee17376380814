//! Correlation-scaled views of an SPD matrix: exact values as CSV, a
//! portable grayscale PGM image (pixel = 255·|r|), and a sidecar file with
//! one row label per line.

use super::CliError;
use crate::symmat::SymMatrix;
use std::path::Path;

/// Scale to correlation form: `R_ij = A_ij / √(A_ii·A_jj)`.
pub fn correlation_scale(a: &SymMatrix) -> SymMatrix {
    let n = a.n();
    let mut out = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let d = (a.get(i, i) * a.get(j, j)).sqrt();
            let v = if d > 0.0 { a.get(i, j) / d } else { 0.0 };
            out.set_sym(i, j, v);
        }
    }
    out
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_csv(path: &Path, m: &SymMatrix) -> Result<(), CliError> {
    let n = m.n();
    let mut body = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", m.get(i, j))).collect();
        body.push_str(&row.join(","));
        body.push('\n');
    }
    std::fs::write(path, body).map_err(io_err(path))
}

/// Binary PGM (P5), maxval 255; pixel value is `round(255·|m_ij|)` clamped,
/// so an identity matrix renders as a uniform bright diagonal on black.
pub fn write_pgm(path: &Path, m: &SymMatrix) -> Result<(), CliError> {
    let n = m.n();
    let mut bytes = format!("P5\n{n} {n}\n255\n").into_bytes();
    for i in 0..n {
        for j in 0..n {
            let v = (m.get(i, j).abs() * 255.0).round().clamp(0.0, 255.0) as u8;
            bytes.push(v);
        }
    }
    std::fs::write(path, bytes).map_err(io_err(path))
}

pub fn write_labels(path: &Path, labels: &[String]) -> Result<(), CliError> {
    std::fs::write(path, labels.join("\n") + "\n").map_err(io_err(path))
}

/// Row labels for a block matrix: the stacked channel names repeated per
/// block, `b<block>:<channel>`.
pub fn block_labels(channel_names: &[String], dim: usize) -> Vec<String> {
    let d = channel_names.len().max(1);
    let blocks = (dim / d).max(1);
    let mut out = Vec::with_capacity(dim);
    for b in 0..blocks {
        for name in channel_names {
            out.push(format!("b{b}:{name}"));
        }
    }
    while out.len() < dim {
        out.push(format!("row{}", out.len()));
    }
    out
}
