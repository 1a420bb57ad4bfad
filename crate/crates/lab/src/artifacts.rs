//! CSV, JSON and JSONL writers. Every file records the config digest and
//! seed it came from; nothing time-dependent is written into a file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

/// Provenance stamped into every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stamp {
    pub config_digest: String,
    pub seed: u64,
}

impl Stamp {
    pub fn comment_line(&self) -> String {
        format!("# config_digest={} seed={}\n", self.config_digest, self.seed)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| LabError::io(format!("creating {}", path.display()), e))
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> LabError + '_ {
    move |e| LabError::io(format!("writing {}", path.display()), e)
}

/// Header comment line, then one CSV record per row.
pub fn write_csv<T: Serialize>(path: &Path, stamp: &Stamp, rows: &[T]) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(stamp.comment_line().as_bytes()).map_err(io_at(path))?;
    let mut w = csv::Writer::from_writer(f);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_at(path))?;
    Ok(())
}

/// Pretty JSON object with the stamp merged in under `"provenance"`.
pub fn write_json<T: Serialize>(path: &Path, stamp: &Stamp, value: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Wrapped<'a, T> {
        provenance: &'a Stamp,
        #[serde(flatten)]
        body: &'a T,
    }
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, &Wrapped { provenance: stamp, body: value })?;
    f.write_all(b"\n").map_err(io_at(path))?;
    f.flush().map_err(io_at(path))?;
    Ok(())
}

/// First line `{"provenance": …}`, then one JSON record per line.
pub fn write_jsonl<T: Serialize>(path: &Path, stamp: &Stamp, rows: &[T]) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer(&mut f, &serde_json::json!({ "provenance": stamp }))?;
    f.write_all(b"\n").map_err(io_at(path))?;
    for r in rows {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n").map_err(io_at(path))?;
    }
    f.flush().map_err(io_at(path))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_of<T: Serialize>(value: &T) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("value serializes"))
}

/// `--out` when given, else `<base>/<UTC timestamp>-<digest prefix>`.
pub fn run_dir(out: Option<&Path>, base: &str, digest: &str) -> Result<PathBuf> {
    let dir = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let ts = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
            Path::new(base).join(format!("{ts}-{}", &digest[..12]))
        }
    };
    std::fs::create_dir_all(&dir)
        .map_err(|e| LabError::io(format!("creating {}", dir.display()), e))?;
    Ok(dir)
}
