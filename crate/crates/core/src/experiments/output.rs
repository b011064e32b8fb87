use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::ExperimentConfig;
use crate::dynamics::fmt_f64;
use crate::error::Result;

/// Output directory of one run; remembers the files written into it.
#[derive(Debug)]
pub struct RunDirectory {
    pub path: PathBuf,
    files: std::cell::RefCell<Vec<String>>,
    started: Instant,
}

impl RunDirectory {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        std::fs::create_dir_all(&path)?;
        Ok(RunDirectory {
            path,
            files: Default::default(),
            started: Instant::now(),
        })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.file(name);
        std::fs::write(&p, text)?;
        self.files.borrow_mut().push(name.to_string());
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf> {
        let p = self.file(name);
        write_csv_rows(&p, header, rows)?;
        self.files.borrow_mut().push(name.to_string());
        Ok(p)
    }

    pub fn files(&self) -> Vec<String> {
        self.files.borrow().clone()
    }

    /// Writes `manifest.json` last, listing everything written before it.
    pub fn finish(&self, config: &ExperimentConfig, inputs: &[String]) -> Result<Manifest> {
        let manifest = Manifest {
            tool: "zeno".into(),
            version: crate::VERSION.into(),
            experiment: config.experiment,
            seed: config.seed,
            inputs: inputs.to_vec(),
            outputs: self.files(),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            config: serde_json::to_value(config)?,
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: super::ExperimentKind,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
    pub config: serde_json::Value,
}

/// Comma-separated, header row, LF endings, 17 significant digits.
pub fn write_csv_rows(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|&x| fmt_f64(x)))?;
    }
    w.flush()?;
    Ok(())
}
