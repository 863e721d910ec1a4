//! On-disk state: a JSON manifest plus one JSON-lines scoreboard per stage.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::PipelineError;

pub const MANIFEST: &str = "manifest.json";
pub const STAGE1: &str = "stage1_generated.jsonl";
pub const STAGE2: &str = "stage2_paths.jsonl";
pub const STAGE3: &str = "stage3_expressibility.jsonl";
pub const STAGE4: &str = "stage4_queries.jsonl";
pub const TIMINGS: &str = "stage4_timings.jsonl";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: u32,
    pub fingerprint: String,
    pub device_fingerprint: String,
    pub ground_energy: f64,
    pub config: String,
    pub completed: Vec<String>,
}

/// Stage 1: circuits are regenerated from `seed`, `gate_dist` and `p_nonlocal`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratedRecord {
    pub id: usize,
    pub seed: u64,
    pub gate_dist: [f64; 3],
    pub p_nonlocal: f64,
    pub ebits: u32,
    pub n_params: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathRecord {
    pub id: usize,
    /// Decimal string; counts overflow 64 bits.
    pub paths: String,
    pub rank: usize,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExprRecord {
    pub id: usize,
    pub expressibility: f64,
    pub n_samples: usize,
    pub n_bins: usize,
    pub seed: u64,
    pub path_rank: usize,
    pub rank: usize,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRecord {
    pub query: usize,
    pub id: usize,
    pub ebits: u32,
    pub restart_energies: Vec<f64>,
    pub iterations: Vec<usize>,
    pub best_energy: f64,
    pub solved: bool,
    pub best_so_far: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingRecord {
    pub query: usize,
    pub id: usize,
    pub wall_seconds: f64,
}

fn io_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Parses JSON-lines text. Blank lines are skipped.
pub fn parse_records<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, (usize, String)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e.to_string())))
        .collect()
}

pub fn render_records<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_records(&text).map_err(|(line, message)| PipelineError::Corrupt {
        path: path.to_path_buf(),
        line,
        message,
    })
}

/// Writes via a temporary file and rename, so a stage file is either absent or complete.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), PipelineError> {
    let tmp = tmp_path(path);
    {
        let f = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        let mut w = BufWriter::new(f);
        w.write_all(contents.as_bytes())
            .map_err(|e| io_err(&tmp, e))?;
        let f = w.into_inner().map_err(|e| io_err(&tmp, e.into_error()))?;
        f.sync_all().map_err(|e| io_err(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

pub fn write_records<T: Serialize>(path: &Path, records: &[T]) -> Result<(), PipelineError> {
    write_atomic(path, &render_records(records))
}

/// Reads an append-only file, dropping a torn final line left by an interrupted write.
pub fn read_appended<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    if complete.len() != text.len() {
        fs::write(path, complete).map_err(|e| io_err(path, e))?;
    }
    parse_records(complete).map_err(|(line, message)| PipelineError::Corrupt {
        path: path.to_path_buf(),
        line,
        message,
    })
}

/// Keeps only the first `n` lines of an append-only file.
pub fn truncate_lines(path: &Path, n: usize) -> Result<(), PipelineError> {
    if !path.exists() {
        return Ok(());
    }
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let kept: String = text.split_inclusive('\n').take(n).collect();
    if kept.len() != text.len() {
        fs::write(path, kept).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

pub fn append_record<T: Serialize>(path: &Path, record: &T) -> Result<(), PipelineError> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| io_err(path, e))?;
    let mut line = serde_json::to_string(record).expect("records serialize");
    line.push('\n');
    f.write_all(line.as_bytes()).map_err(|e| io_err(path, e))?;
    f.sync_data().map_err(|e| io_err(path, e))
}

pub fn read_manifest(dir: &Path) -> Result<Option<Manifest>, PipelineError> {
    let path = dir.join(MANIFEST);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| PipelineError::Corrupt {
            path,
            line: e.line(),
            message: e.to_string(),
        })
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(m).expect("manifest serializes");
    text.push('\n');
    write_atomic(&dir.join(MANIFEST), &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.jsonl");
        let r = TimingRecord {
            query: 0,
            id: 3,
            wall_seconds: 1.5,
        };
        append_record(&p, &r).unwrap();
        let mut text = fs::read_to_string(&p).unwrap();
        text.push_str("{\"query\":1,");
        fs::write(&p, text).unwrap();
        let back: Vec<TimingRecord> = read_appended(&p).unwrap();
        assert_eq!(back, vec![r]);
        assert!(fs::read_to_string(&p).unwrap().ends_with("}\n"));
    }

    #[test]
    fn records_round_trip() {
        let recs = vec![PathRecord {
            id: 1,
            paths: "123456789012345678901234567890".into(),
            rank: 0,
            selected: true,
        }];
        let text = render_records(&recs);
        assert_eq!(parse_records::<PathRecord>(&text).unwrap(), recs);
        assert!(parse_records::<PathRecord>("{\"id\":1}\n").is_err());
    }
}
