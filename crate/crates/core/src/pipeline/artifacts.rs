use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineError, Stage};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Provenance stamped on every artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Header {
    fn csv_line(&self) -> String {
        format!("# stage={} config_hash={} seed={}\n", self.stage, self.config_hash, self.seed)
    }
}

/// A JSON artifact: header plus payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub header: Header,
    pub body: T,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: Header,
}

/// Artifact locations. Everything lives under `root` except where a command points
/// elsewhere.
#[derive(Clone, Debug)]
pub struct Workspace {
    pub root: PathBuf,
    pub dataset: PathBuf,
    pub labels: PathBuf,
    pub report: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        let root = root.into();
        Workspace {
            dataset: root.join("dataset"),
            labels: root.join("labels").join("labels.jsonl"),
            report: root.join("report"),
            root,
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn timings_path(&self) -> PathBuf {
        self.root.join("timings.json")
    }

    /// Manifest key: relative to the root when inside it, otherwise the path as given.
    pub fn key(&self, p: &Path) -> String {
        let s = p.strip_prefix(&self.root).unwrap_or(p);
        s.to_string_lossy().replace('\\', "/")
    }
}

fn show(p: &Path) -> String {
    p.display().to_string()
}

fn format_err(p: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Format { path: show(p), message: e.to_string() }
}

/// Reads an upstream artifact; absence names the stage that produces it.
pub(crate) fn read_input(p: &Path, producer: Stage) -> Result<Vec<u8>, PipelineError> {
    match fs::read(p) {
        Ok(b) => Ok(b),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(PipelineError::MissingPrerequisite { path: show(p), stage: producer.name() })
        }
        Err(source) => Err(PipelineError::Io { path: show(p), source }),
    }
}

pub(crate) fn write_file(p: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(dir) = p.parent() {
        fs::create_dir_all(dir).map_err(|source| PipelineError::Io { path: show(dir), source })?;
    }
    fs::write(p, bytes).map_err(|source| PipelineError::Io { path: show(p), source })
}

pub(crate) fn json_bytes<T: Serialize>(header: &Header, body: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&Envelope { header: header.clone(), body }).expect("artifact serializes");
    out.push(b'\n');
    out
}

pub(crate) fn parse_json<T: DeserializeOwned>(p: &Path, bytes: &[u8]) -> Result<Envelope<T>, PipelineError> {
    serde_json::from_slice(bytes).map_err(|e| format_err(p, e))
}

pub(crate) fn read_json<T: DeserializeOwned>(p: &Path, producer: Stage) -> Result<Envelope<T>, PipelineError> {
    parse_json(p, &read_input(p, producer)?)
}

/// JSON lines with the header on the first line.
pub(crate) fn jsonl_bytes<T: Serialize>(header: &Header, items: &[T]) -> Vec<u8> {
    let mut out = serde_json::to_vec(&HeaderLine { header: header.clone() }).expect("header serializes");
    out.push(b'\n');
    for it in items {
        out.extend(serde_json::to_vec(it).expect("record serializes"));
        out.push(b'\n');
    }
    out
}

pub(crate) fn read_jsonl<T: DeserializeOwned>(p: &Path, producer: Stage) -> Result<(Header, Vec<T>), PipelineError> {
    let bytes = read_input(p, producer)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| format_err(p, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines.next().ok_or_else(|| format_err(p, "empty file"))?;
    let header = serde_json::from_str::<HeaderLine>(first).map_err(|e| format_err(p, e))?.header;
    let items = lines
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format_err(p, format!("line {}: {e}", i + 2))))
        .collect::<Result<_, _>>()?;
    Ok((header, items))
}

/// CSV with a `#` comment line carrying the header.
pub(crate) fn csv_bytes<T: Serialize>(header: &Header, rows: &[T]) -> Vec<u8> {
    let mut out = header.csv_line().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in rows {
            w.serialize(r).expect("row serializes");
        }
        w.flush().expect("in-memory write");
    }
    out
}

pub(crate) fn read_csv<T: DeserializeOwned>(p: &Path, producer: Stage) -> Result<Vec<T>, PipelineError> {
    let bytes = read_input(p, producer)?;
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(bytes.as_slice())
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| format_err(p, e))
}

/// What one stage consumed and produced.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub config_hash: String,
    pub seed: u64,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

/// Content hashes of every stage's inputs and outputs. Holds no timestamps, so reruns
/// with identical configuration reproduce it byte for byte.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    pub fn load(ws: &Workspace) -> Result<Self, PipelineError> {
        let p = ws.manifest_path();
        match fs::read(&p) {
            Ok(b) => serde_json::from_slice(&b).map_err(|e| format_err(&p, e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Manifest::default()),
            Err(source) => Err(PipelineError::Io { path: show(&p), source }),
        }
    }

    pub fn save(&self, ws: &Workspace) -> Result<(), PipelineError> {
        let mut out = serde_json::to_vec_pretty(self).expect("manifest serializes");
        out.push(b'\n');
        write_file(&ws.manifest_path(), &out)
    }

    /// True when `stage` last ran with this config and these inputs and its outputs are
    /// still on disk unchanged.
    pub fn is_current(&self, ws: &Workspace, stage: &str, config_hash: &str, inputs: &BTreeMap<String, String>) -> bool {
        let Some(rec) = self.stages.get(stage) else { return false };
        rec.config_hash == config_hash
            && &rec.inputs == inputs
            && rec.outputs.iter().all(|(k, h)| fs::read(ws.path(k)).map(|b| sha256_hex(&b) == *h).unwrap_or(false))
    }
}

/// Wall-clock seconds per stage. Kept apart from the manifest and never hashed.
pub(crate) fn record_timing(ws: &Workspace, stage: &str, seconds: f64) -> Result<(), PipelineError> {
    let p = ws.timings_path();
    let mut t: BTreeMap<String, f64> = fs::read(&p).ok().and_then(|b| serde_json::from_slice(&b).ok()).unwrap_or_default();
    t.insert(stage.to_string(), seconds);
    let mut out = serde_json::to_vec_pretty(&t).expect("timings serialize");
    out.push(b'\n');
    write_file(&p, &out)
}
