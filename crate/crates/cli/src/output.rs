use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tempfile::NamedTempFile;

use crate::config::Format;

/// Output directory plus the formats the run asked for.
pub struct Output {
    dir: PathBuf,
    formats: Vec<Format>,
}

impl Output {
    pub fn new(dir: PathBuf, formats: Vec<Format>) -> Result<Self> {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Output { dir, formats })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `name` under the output directory and reports the path on stderr.
    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.path(name);
        write_atomic(&path, contents.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<Option<PathBuf>> {
        if !self.wants(Format::Json) {
            return Ok(None);
        }
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text).map(Some)
    }

    pub fn write_if(&self, f: Format, name: &str, contents: &str) -> Result<Option<PathBuf>> {
        if !self.wants(f) {
            return Ok(None);
        }
        self.write(name, contents).map(Some)
    }
}

/// Temp file in the target directory, then rename over the destination.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn formats_gate_writes() {
        let dir = tempfile::tempdir().unwrap();
        let out = Output::new(dir.path().join("sub"), vec![Format::Csv]).unwrap();
        assert!(out.write_json("x.json", &serde_json::json!({})).unwrap().is_none());
        assert!(out.write_if(Format::Csv, "x.csv", "a\n").unwrap().is_some());
        assert!(out.path("x.csv").exists());
    }
}
