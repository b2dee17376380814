//! Stage artifacts on disk. Matrix and vector payloads are little-endian
//! 64-bit floats behind an 8-byte magic, with a JSON index carrying the
//! metadata and the producing config (text + hash) so every stage output is
//! self-describing and byte-reproducible.
//!
//! Layouts (all integers little-endian u64, all floats little-endian f64):
//!
//! * `matrices.bin` — magic `SPDM0001`, count, dim, then `count` dense
//!   `dim×dim` matrices row-major.
//! * `vectors.bin` — magic `TANV0001`, count, dim, then `count` vectors.
//! * `refs.bin` — magic `SREF0001`, count, dim, then `count` dense matrices
//!   (the tangent reference points).
//! * `checkpoint.bin` — magic `SEQN0001`, input_dim, hidden, layers, pooling
//!   (0 = final step, 1 = mean over time), parameter count, then the
//!   parameters in canonical flattening order.

use super::CliError;
use crate::seqnet::{NetParams, Pooling};
use crate::spdrep::SpdMatrix;
use crate::symmat::SymMatrix;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

const SPD_MAGIC: &[u8; 8] = b"SPDM0001";
const VEC_MAGIC: &[u8; 8] = b"TANV0001";
const REF_MAGIC: &[u8; 8] = b"SREF0001";
const NET_MAGIC: &[u8; 8] = b"SEQN0001";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn corrupt(path: &Path, detail: impl Into<String>) -> CliError {
    CliError::BadArtifact {
        file: path.to_path_buf(),
        detail: detail.into(),
    }
}

struct BinWriter {
    buf: Vec<u8>,
}

impl BinWriter {
    fn new(magic: &[u8; 8]) -> Self {
        Self {
            buf: magic.to_vec(),
        }
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        for v in vs {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    fn write(self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, &self.buf).map_err(io_err(path))
    }
}

struct BinReader {
    data: Vec<u8>,
    pos: usize,
    path: PathBuf,
}

impl BinReader {
    fn open(path: &Path, magic: &[u8; 8]) -> Result<Self, CliError> {
        let data = std::fs::read(path).map_err(io_err(path))?;
        if data.len() < 8 || &data[..8] != magic {
            return Err(corrupt(path, "bad magic"));
        }
        Ok(Self {
            data,
            pos: 8,
            path: path.to_path_buf(),
        })
    }

    fn u64(&mut self) -> Result<u64, CliError> {
        let end = self.pos + 8;
        if end > self.data.len() {
            return Err(corrupt(&self.path, "truncated"));
        }
        let v = u64::from_le_bytes(self.data[self.pos..end].try_into().unwrap());
        self.pos = end;
        Ok(v)
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>, CliError> {
        let end = self.pos + count * 8;
        if end > self.data.len() {
            return Err(corrupt(&self.path, "truncated"));
        }
        let out = self.data[self.pos..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        self.pos = end;
        Ok(out)
    }

    fn finish(self) -> Result<(), CliError> {
        if self.pos != self.data.len() {
            return Err(corrupt(&self.path, "trailing bytes"));
        }
        Ok(())
    }
}

/// Provenance of one segment-level entry, shared by the SPD and tangent
/// artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryMeta {
    pub subject_id: String,
    pub trial_id: String,
    pub label: bool,
    pub start_index: usize,
}

/// JSON index common to all stage artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactIndex {
    pub kind: String,
    pub config_hash: String,
    pub config_text: String,
    pub version: String,
    pub dim: usize,
    pub count: usize,
    pub channel_names: Vec<String>,
    pub entries: Vec<EntryMeta>,
    /// Tangent artifacts: subject id per reference matrix in `refs.bin`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference_subjects: Vec<String>,
}

fn write_index(dir: &Path, index: &ArtifactIndex) -> Result<(), CliError> {
    let path = dir.join("index.json");
    let text = serde_json::to_string_pretty(index).map_err(|e| corrupt(&path, e.to_string()))?;
    std::fs::write(&path, text).map_err(io_err(&path))
}

pub fn read_index(dir: &Path) -> Result<ArtifactIndex, CliError> {
    let path = dir.join("index.json");
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(|e| corrupt(&path, e.to_string()))
}

/// True when `dir` already holds an artifact produced by the same config —
/// the stage can then be skipped byte-identically.
pub fn up_to_date(dir: &Path, kind: &str, config_hash: &str) -> bool {
    match read_index(dir) {
        Ok(idx) => idx.kind == kind && idx.config_hash == config_hash,
        Err(_) => false,
    }
}

pub fn write_spd_artifact(
    dir: &Path,
    matrices: &[SpdMatrix],
    entries: &[EntryMeta],
    channel_names: &[String],
    config_text: &str,
    config_hash: &str,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let dim = matrices.first().map(|m| m.dim()).unwrap_or(0);
    let mut w = BinWriter::new(SPD_MAGIC);
    w.u64(matrices.len() as u64);
    w.u64(dim as u64);
    for m in matrices {
        w.f64s(m.sym().data());
    }
    w.write(&dir.join("matrices.bin"))?;
    write_index(
        dir,
        &ArtifactIndex {
            kind: "spd".into(),
            config_hash: config_hash.into(),
            config_text: config_text.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            dim,
            count: matrices.len(),
            channel_names: channel_names.to_vec(),
            entries: entries.to_vec(),
            reference_subjects: Vec::new(),
        },
    )
}

pub fn read_spd_artifact(dir: &Path) -> Result<(Vec<SpdMatrix>, ArtifactIndex), CliError> {
    let index = read_index(dir)?;
    if index.kind != "spd" {
        return Err(corrupt(&dir.join("index.json"), "not an SPD artifact"));
    }
    let path = dir.join("matrices.bin");
    let mut r = BinReader::open(&path, SPD_MAGIC)?;
    let count = r.u64()? as usize;
    let dim = r.u64()? as usize;
    if count != index.count || dim != index.dim {
        return Err(corrupt(&path, "index and payload disagree"));
    }
    let mut matrices = Vec::with_capacity(count);
    for _ in 0..count {
        let data = r.f64s(dim * dim)?;
        let sym = SymMatrix::from_raw(dim, data).map_err(|e| corrupt(&path, e.to_string()))?;
        matrices.push(SpdMatrix::from_sym(sym).map_err(|e| corrupt(&path, e.to_string()))?);
    }
    r.finish()?;
    Ok((matrices, index))
}

pub struct TangentArtifact {
    pub vectors: Vec<Vec<f64>>,
    pub references: Vec<(String, SpdMatrix)>,
    pub index: ArtifactIndex,
}

#[allow(clippy::too_many_arguments)]
pub fn write_tangent_artifact(
    dir: &Path,
    vectors: &[Vec<f64>],
    references: &[(String, SpdMatrix)],
    entries: &[EntryMeta],
    channel_names: &[String],
    matrix_dim: usize,
    config_text: &str,
    config_hash: &str,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let dim = vectors.first().map(|v| v.len()).unwrap_or(0);
    let mut w = BinWriter::new(VEC_MAGIC);
    w.u64(vectors.len() as u64);
    w.u64(dim as u64);
    for v in vectors {
        w.f64s(v);
    }
    w.write(&dir.join("vectors.bin"))?;

    let mut rw = BinWriter::new(REF_MAGIC);
    rw.u64(references.len() as u64);
    rw.u64(matrix_dim as u64);
    for (_, m) in references {
        rw.f64s(m.sym().data());
    }
    rw.write(&dir.join("refs.bin"))?;

    write_index(
        dir,
        &ArtifactIndex {
            kind: "tangent".into(),
            config_hash: config_hash.into(),
            config_text: config_text.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            dim,
            count: vectors.len(),
            channel_names: channel_names.to_vec(),
            entries: entries.to_vec(),
            reference_subjects: references.iter().map(|(s, _)| s.clone()).collect(),
        },
    )
}

pub fn read_tangent_artifact(dir: &Path) -> Result<TangentArtifact, CliError> {
    let index = read_index(dir)?;
    if index.kind != "tangent" {
        return Err(corrupt(&dir.join("index.json"), "not a tangent artifact"));
    }
    let path = dir.join("vectors.bin");
    let mut r = BinReader::open(&path, VEC_MAGIC)?;
    let count = r.u64()? as usize;
    let dim = r.u64()? as usize;
    if count != index.count || dim != index.dim {
        return Err(corrupt(&path, "index and payload disagree"));
    }
    let mut vectors = Vec::with_capacity(count);
    for _ in 0..count {
        vectors.push(r.f64s(dim)?);
    }
    r.finish()?;

    let rpath = dir.join("refs.bin");
    let mut rr = BinReader::open(&rpath, REF_MAGIC)?;
    let rcount = rr.u64()? as usize;
    let rdim = rr.u64()? as usize;
    if rcount != index.reference_subjects.len() {
        return Err(corrupt(&rpath, "reference count mismatch"));
    }
    let mut references = Vec::with_capacity(rcount);
    for subject in &index.reference_subjects {
        let data = rr.f64s(rdim * rdim)?;
        let sym = SymMatrix::from_raw(rdim, data).map_err(|e| corrupt(&rpath, e.to_string()))?;
        let spd = SpdMatrix::from_sym(sym).map_err(|e| corrupt(&rpath, e.to_string()))?;
        references.push((subject.clone(), spd));
    }
    rr.finish()?;

    Ok(TangentArtifact {
        vectors,
        references,
        index,
    })
}

pub fn write_checkpoint(path: &Path, params: &NetParams) -> Result<(), CliError> {
    let mut w = BinWriter::new(NET_MAGIC);
    w.u64(params.input_dim() as u64);
    w.u64(params.hidden() as u64);
    w.u64(params.layers.len() as u64);
    w.u64(match params.pooling {
        Pooling::FinalStep => 0,
        Pooling::MeanOverTime => 1,
    });
    let flat = params.flatten();
    w.u64(flat.len() as u64);
    w.f64s(&flat);
    w.write(path)
}

pub fn read_checkpoint(path: &Path) -> Result<NetParams, CliError> {
    let mut r = BinReader::open(path, NET_MAGIC)?;
    let input_dim = r.u64()? as usize;
    let hidden = r.u64()? as usize;
    let layers = r.u64()? as usize;
    let pooling = match r.u64()? {
        0 => Pooling::FinalStep,
        1 => Pooling::MeanOverTime,
        other => return Err(corrupt(path, format!("bad pooling tag {other}"))),
    };
    let count = r.u64()? as usize;
    let mut params = NetParams::zeros(input_dim, hidden, layers, pooling);
    let flat = r.f64s(count)?;
    r.finish()?;
    if flat.len() != params.flatten().len() {
        return Err(corrupt(path, "parameter count does not match dimensions"));
    }
    params.assign_from_flat(&flat);
    Ok(params)
}

/// Per-epoch loss curve as `epoch,loss` CSV.
pub fn write_loss_curve(path: &Path, losses: &[f64]) -> Result<(), CliError> {
    let mut body = String::from("epoch,loss\n");
    for (e, l) in losses.iter().enumerate() {
        body.push_str(&format!("{e},{l}\n"));
    }
    std::fs::write(path, body).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> SpdMatrix {
        let b = SymMatrix::from_raw(n, (0..n * n).map(|_| rng.random_range(-0.8..0.8)).collect())
            .unwrap();
        SpdMatrix::from_sym(crate::symmat::mat_fn(&b, crate::symmat::MatFn::Exp).unwrap()).unwrap()
    }

    #[test]
    fn spd_artifact_roundtrips_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let matrices: Vec<SpdMatrix> = (0..5).map(|_| random_spd(4, &mut rng)).collect();
        let entries: Vec<EntryMeta> = (0..5)
            .map(|i| EntryMeta {
                subject_id: format!("s{}", i % 2),
                trial_id: "t0".into(),
                label: i % 2 == 0,
                start_index: i * 40,
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        write_spd_artifact(
            dir.path(),
            &matrices,
            &entries,
            &["a".into(), "b".into()],
            "cfg",
            "hash",
        )
        .unwrap();
        let (back, index) = read_spd_artifact(dir.path()).unwrap();
        assert_eq!(index.entries, entries);
        for (a, b) in matrices.iter().zip(&back) {
            assert_eq!(a.sym().data(), b.sym().data(), "payload not bit-exact");
        }
        assert!(up_to_date(dir.path(), "spd", "hash"));
        assert!(!up_to_date(dir.path(), "spd", "other"));
    }

    #[test]
    fn tangent_artifact_roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let vectors: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..10).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let refs = vec![
            ("s0".to_string(), random_spd(4, &mut rng)),
            ("s1".to_string(), random_spd(4, &mut rng)),
        ];
        let entries: Vec<EntryMeta> = (0..4)
            .map(|i| EntryMeta {
                subject_id: format!("s{}", i % 2),
                trial_id: "t".into(),
                label: false,
                start_index: i,
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        write_tangent_artifact(dir.path(), &vectors, &refs, &entries, &[], 4, "cfg", "h").unwrap();
        let art = read_tangent_artifact(dir.path()).unwrap();
        assert_eq!(art.vectors, vectors);
        assert_eq!(art.references.len(), 2);
        assert_eq!(art.references[1].0, "s1");
        assert_eq!(
            art.references[0].1.sym().data(),
            refs[0].1.sym().data()
        );
    }

    #[test]
    fn checkpoint_roundtrips_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = NetParams::init(6, 5, 2, Pooling::MeanOverTime, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.bin");
        write_checkpoint(&path, &params).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back.pooling, params.pooling);
        let (a, b) = (params.flatten(), back.flatten());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn corrupt_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.bin");
        std::fs::write(&path, b"NOTMAGIC0000").unwrap();
        assert!(matches!(
            read_checkpoint(&path),
            Err(CliError::BadArtifact { .. })
        ));
    }
}
