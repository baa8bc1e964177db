//! Output directory handling. Reports are deterministic; wall-clock
//! timestamps go to `run.log` only.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|source| CliError::Write {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn note_written(&mut self, name: &str) {
        self.written.push(name.to_string());
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|source| CliError::Write { path, source })?;
        self.note_written(name);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        self.write_text(name, &(text + "\n"))
    }

    /// Appends a timestamped line to `run.log`.
    pub fn log(&self, message: &str) {
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        let path = self.path("run.log");
        if let Ok(mut f) = OpenOptions::new().create(true).append(true).open(path) {
            let _ = writeln!(f, "[{stamp:.3}] {message}");
        }
    }

    /// `manifest.json`: command, resolved configuration, outputs, verdict.
    pub fn finish<C: Serialize>(mut self, command: &str, config: &C, passed: bool) -> CliResult<()> {
        #[derive(Serialize)]
        struct Manifest<'a, C> {
            command: &'a str,
            config: &'a C,
            outputs: &'a [String],
            passed: bool,
        }
        let outputs = self.written.clone();
        self.write_json(
            "manifest.json",
            &Manifest {
                command,
                config,
                outputs: &outputs,
                passed,
            },
        )?;
        self.log(&format!("{command} finished, passed = {passed}"));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_outputs_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutDir::create(&dir.path().join("run")).unwrap();
        out.write_text("a.csv", "x\n").unwrap();
        out.write_json("b.json", &[1, 2]).unwrap();
        out.finish("test", &serde_json::json!({"k": 1}), true).unwrap();
        let text = fs::read_to_string(dir.path().join("run/manifest.json")).unwrap();
        let m: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(m["outputs"], serde_json::json!(["a.csv", "b.json"]));
        assert_eq!(m["config"]["k"], 1);
        assert!(text.ends_with("}\n"));
    }
}
