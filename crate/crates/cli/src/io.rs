//! JSONL artifacts, content digests and run manifests.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ingredient_core::BugCorpus;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| CliError::data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(item);
    }
    Ok(out)
}

/// A corpus file that already passed ingest. Any invalid record is an error.
pub fn read_corpus(path: &Path) -> Result<BugCorpus, CliError> {
    let report = ingredient_core::corpus::ingest(open(path)?).map_err(|e| CliError::data(e.to_string()))?;
    if let Some(r) = report.rejects.first() {
        return Err(CliError::data(format!(
            "{}:{}: {} (run `ingr ingest` first)",
            path.display(),
            r.line_no,
            r.reason
        )));
    }
    Ok(report.corpus)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<(), CliError> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| CliError::data(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::data(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut h = Sha256::new();
    let mut r = open(path)?;
    std::io::copy(&mut r, &mut h)?;
    Ok(hex::encode(h.finalize()))
}

/// `dir/stem.suffix` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command: its argv, the effective
/// configuration (seeds included) and digests of what it read and wrote.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub argv: Vec<String>,
    pub config: &'a RunConfig,
    pub config_sha256: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub stats: serde_json::Value,
}

pub struct ManifestBuilder<'a> {
    command: &'a str,
    config: &'a RunConfig,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    stats: serde_json::Map<String, serde_json::Value>,
}

impl<'a> ManifestBuilder<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig) -> Self {
        Self {
            command,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            stats: serde_json::Map::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn stat(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.stats.insert(key.to_string(), serde_json::to_value(value).expect("stat serializes"));
        self
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let digests = |paths: &[PathBuf]| -> Result<Vec<FileDigest>, CliError> {
            paths
                .iter()
                .map(|p| {
                    Ok(FileDigest {
                        path: p.display().to_string(),
                        sha256: sha256_file(p)?,
                    })
                })
                .collect()
        };
        let config_json = serde_json::to_vec(self.config).expect("config serializes");
        let manifest = Manifest {
            tool: "ingr",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            argv: std::env::args().skip(1).collect(),
            config: self.config,
            config_sha256: hex::encode(Sha256::digest(&config_json)),
            inputs: digests(&self.inputs)?,
            outputs: digests(&self.outputs)?,
            stats: serde_json::Value::Object(self.stats.clone()),
        };
        write_json(path, &manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_appends_to_file_name() {
        assert_eq!(sibling(Path::new("out/x.jsonl"), ".manifest.json"), PathBuf::from("out/x.jsonl.manifest.json"));
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.jsonl");
        write_jsonl(&p, &[1u32, 2, 3]).unwrap();
        assert_eq!(read_jsonl::<u32>(&p).unwrap(), vec![1, 2, 3]);
        assert_eq!(sha256_file(&p).unwrap().len(), 64);
    }
}
