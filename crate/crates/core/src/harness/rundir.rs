//! Run directory bookkeeping and the manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::Value;

use crate::error::{Error, Result};

pub struct RunDir {
    root: PathBuf,
    artifacts: Vec<String>,
    started: Instant,
}

impl RunDir {
    /// Creates `parent/name`, clearing files from a previous run of the same
    /// name so the manifest stays complete.
    pub fn create(parent: &Path, name: &str) -> Result<Self> {
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(Error::InvalidArgument(format!("bad run name `{name}`")));
        }
        let root = parent.join(name);
        if root.exists() {
            fs::remove_dir_all(&root).map_err(|e| Error::Io(format!("{}: {e}", root.display())))?;
        }
        fs::create_dir_all(&root).map_err(|e| Error::Io(format!("{}: {e}", root.display())))?;
        Ok(Self {
            root,
            artifacts: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Writes `rel` through `fill` and records it.
    pub fn write<F>(&mut self, rel: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let file = fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        fill(&mut w)?;
        w.flush()?;
        self.artifacts.push(rel.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, rel: &str, value: &Value) -> Result<()> {
        self.write(rel, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }

    /// Records files written by other code under the run directory.
    pub fn record(&mut self, rels: impl IntoIterator<Item = String>) {
        self.artifacts.extend(rels);
    }

    /// Writes `manifest.json` listing every artifact, itself included;
    /// `error` marks a failed run.
    pub fn finish(mut self, command: &str, config: &Value, threads: usize, error: Option<&str>) -> Result<PathBuf> {
        self.artifacts.push("manifest.json".into());
        self.artifacts.sort();
        let manifest = serde_json::json!({
            "command": command,
            "status": if error.is_some() { "failed" } else { "ok" },
            "error": error,
            "config": config,
            "artifacts": self.artifacts,
            "threads": threads,
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_seconds": self.started.elapsed().as_secs_f64(),
        });
        let path = self.root.join("manifest.json");
        let mut w = BufWriter::new(fs::File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, &manifest)?;
        writeln!(w)?;
        w.flush()?;
        Ok(self.root)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
