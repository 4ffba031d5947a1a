use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Files written into an output directory during one command. Unless the
/// command commits them, they are removed again on drop, together with the
/// directory itself when this run created it.
pub struct Artifacts {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
    committed: bool,
}

impl Artifacts {
    pub fn open(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            files: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        self.files.push(path.clone());
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Serialize rows with a header into `name`.
    pub fn write_csv<R: serde::Serialize>(&mut self, name: &str, rows: &[R]) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().context("flushing csv")?;
        self.write(name, bytes)
    }

    pub fn write_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.files)
    }
}

impl Drop for Artifacts {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}
