//! Dataset ingestion: the generic on-disk layout is
//! `root/<subject>/<trial>/<channel>.csv` with header `t,value`, plus one
//! `meta.json` per trial carrying the binary label and per-channel sample
//! rates. An optional `landmarks.csv` (header `t,x0,y0[,z0],x1,…`) provides
//! facial landmark coordinates per frame.

use super::CliError;
use crate::harness::RecordingBundle;
use crate::signals::{Channel, LandmarkFrames, Recording};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, serde::Deserialize)]
struct TrialMeta {
    label: u8,
    rates: BTreeMap<String, f64>,
}

fn read_dir_sorted(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    Ok(entries)
}

fn parse_value_csv(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != "t,value" {
        return Err(CliError::BadHeader {
            file: path.to_path_buf(),
            detail: format!("expected `t,value`, found `{header}`"),
        });
    }
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (Some(_t), Some(v), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(CliError::BadHeader {
                file: path.to_path_buf(),
                detail: format!("line {}: expected two columns", lineno + 2),
            });
        };
        let v: f64 = v.trim().parse().map_err(|e| CliError::BadHeader {
            file: path.to_path_buf(),
            detail: format!("line {}: bad value: {e}", lineno + 2),
        })?;
        values.push(v);
    }
    Ok(values)
}

fn parse_landmarks_csv(path: &Path, rate: f64) -> Result<LandmarkFrames, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.first() != Some(&"t") || cols.len() < 5 {
        return Err(CliError::BadHeader {
            file: path.to_path_buf(),
            detail: "expected `t,x0,y0[,z0],x1,…` with at least two landmarks".into(),
        });
    }
    let coord_cols = &cols[1..];
    let dim = if coord_cols.iter().any(|c| c.starts_with('z')) {
        3
    } else {
        2
    };
    if !coord_cols.len().is_multiple_of(dim) {
        return Err(CliError::BadHeader {
            file: path.to_path_buf(),
            detail: format!("{} coordinate columns is not a multiple of {dim}", coord_cols.len()),
        });
    }
    let landmarks = coord_cols.len() / dim;
    let mut frames = LandmarkFrames::new(rate, landmarks, dim);
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(CliError::BadHeader {
                file: path.to_path_buf(),
                detail: format!("line {}: expected {} columns", lineno + 2, cols.len()),
            });
        }
        let coords: Vec<f64> = fields[1..]
            .iter()
            .map(|f| f.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::BadHeader {
                file: path.to_path_buf(),
                detail: format!("line {}: bad coordinate: {e}", lineno + 2),
            })?;
        frames
            .push_frame(&coords)
            .map_err(|e| CliError::BadHeader {
                file: path.to_path_buf(),
                detail: format!("line {}: {e}", lineno + 2),
            })?;
    }
    Ok(frames)
}

fn ingest_trial(
    subject: &str,
    trial_dir: &Path,
    roster: &[String],
) -> Result<RecordingBundle, CliError> {
    let trial = trial_dir
        .file_name()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_default();
    let meta_path = trial_dir.join("meta.json");
    if !meta_path.is_file() {
        return Err(CliError::LabelMissing { file: meta_path });
    }
    let meta: TrialMeta = serde_json::from_str(
        &std::fs::read_to_string(&meta_path).map_err(|source| CliError::Io {
            path: meta_path.clone(),
            source,
        })?,
    )
    .map_err(|e| CliError::BadData {
        file: meta_path.clone(),
        detail: format!("unreadable meta.json: {e}"),
    })?;

    let mut channels = Vec::new();
    let mut landmarks = None;
    let mut found = Vec::new();
    for path in read_dir_sorted(trial_dir)? {
        let Some(ext) = path.extension() else { continue };
        if ext != "csv" {
            continue;
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        let rate = *meta.rates.get(&name).ok_or_else(|| CliError::BadHeader {
            file: meta_path.clone(),
            detail: format!("no rate for channel `{name}`"),
        })?;
        if name == "landmarks" {
            landmarks = Some(parse_landmarks_csv(&path, rate)?);
            continue;
        }
        if !roster.is_empty() && !roster.iter().any(|r| r == &name) {
            return Err(CliError::UnknownChannel { file: path });
        }
        found.push(name.clone());
        let samples = parse_value_csv(&path)?;
        channels.push(
            Channel::new(name, rate, samples).map_err(|e| CliError::BadData {
                file: path,
                detail: e.to_string(),
            })?,
        );
    }
    for want in roster {
        if !found.iter().any(|f| f == want) {
            return Err(CliError::MissingChannel {
                file: trial_dir.join(format!("{want}.csv")),
            });
        }
    }
    if channels.is_empty() {
        return Err(CliError::MissingChannel {
            file: trial_dir.join("*.csv"),
        });
    }

    // Channels may run at different rates but must span the same time range
    // (within one sample period of the slowest channel).
    let durations: Vec<(String, f64)> = channels
        .iter()
        .map(|c| (c.name.clone(), c.duration_seconds()))
        .chain(landmarks.iter().map(|l: &LandmarkFrames| {
            ("landmarks".to_string(), l.frames() as f64 / l.frame_rate)
        }))
        .collect();
    let min_rate = channels.iter().map(|c| c.rate).fold(f64::INFINITY, f64::min);
    let lo = durations.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
    let hi = durations
        .iter()
        .map(|d| d.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > 1.5 / min_rate {
        let detail = durations
            .iter()
            .map(|(n, d)| format!("{n}: {d:.3}s"))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(CliError::BadData {
            file: trial_dir.to_path_buf(),
            detail: format!("channel durations differ: {detail}"),
        });
    }

    let recording = Recording::new(subject, trial, meta.label != 0, channels).map_err(|e| {
        CliError::BadData {
            file: trial_dir.to_path_buf(),
            detail: e.to_string(),
        }
    })?;
    Ok(RecordingBundle {
        recording,
        landmarks,
    })
}

/// Ingest a dataset tree, failing on the first problem.
pub fn ingest(root: &Path, roster: &[String]) -> Result<Vec<RecordingBundle>, CliError> {
    let mut out = Vec::new();
    for subject_dir in read_dir_sorted(root)? {
        if !subject_dir.is_dir() {
            continue;
        }
        let subject = subject_dir
            .file_name()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        for trial_dir in read_dir_sorted(&subject_dir)? {
            if !trial_dir.is_dir() {
                continue;
            }
            out.push(ingest_trial(&subject, &trial_dir, roster)?);
        }
    }
    if out.is_empty() {
        return Err(CliError::BadData {
            file: root.to_path_buf(),
            detail: "no trials found under the dataset root".into(),
        });
    }
    Ok(out)
}

/// Walk the whole tree and collect every problem instead of stopping at the
/// first; returns `(trials_ok, issues)`.
pub fn ingest_check(root: &Path, roster: &[String]) -> Result<(usize, Vec<String>), CliError> {
    let mut ok = 0usize;
    let mut issues = Vec::new();
    for subject_dir in read_dir_sorted(root)? {
        if !subject_dir.is_dir() {
            continue;
        }
        let subject = subject_dir
            .file_name()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        for trial_dir in read_dir_sorted(&subject_dir)? {
            if !trial_dir.is_dir() {
                continue;
            }
            match ingest_trial(&subject, &trial_dir, roster) {
                Ok(_) => ok += 1,
                Err(e) => issues.push(e.to_string()),
            }
        }
    }
    Ok((ok, issues))
}
