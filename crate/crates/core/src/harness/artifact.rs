//! Result persistence: one directory per run holding data files, the
//! `artifact.json` summary and a separate `timing.json`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotAccount {
    /// Single-shot measurements taken on the (simulated) device.
    pub quantum: u64,
    /// Single-shot outcomes drawn classically from shot models.
    pub resampled: u64,
}

impl std::ops::AddAssign for ShotAccount {
    fn add_assign(&mut self, o: Self) {
        self.quantum += o.quantum;
        self.resampled += o.resampled;
    }
}

/// Everything a run persists except wall-clock timing, which lives in
/// `timing.json` so that reruns compare bitwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub shots: ShotAccount,
    pub summary: serde_json::Value,
    /// Data files written next to the artifact, relative to the run directory.
    pub files: Vec<String>,
}

impl RunArtifact {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(dir.join(ARTIFACT_FILE))?)?)
    }
}

pub const ARTIFACT_FILE: &str = "artifact.json";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub experiment: ExperimentKind,
    pub wall_seconds: f64,
    pub phases: Vec<(String, f64)>,
}

/// Run directory writer that records every file it creates.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
    start: Instant,
    phases: Vec<(String, f64)>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new(), start: Instant::now(), phases: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Registers a file or directory created by other code.
    pub fn record(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn mark(&mut self, phase: &str) {
        self.phases.push((phase.to_string(), self.start.elapsed().as_secs_f64()));
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.record(name);
        std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
        Ok(())
    }

    pub fn write_jsonl<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.record(name))?);
        for row in rows {
            serde_json::to_writer(&mut w, &row)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn csv(&mut self, name: &str) -> Result<csv::Writer<File>> {
        Ok(csv::Writer::from_path(self.record(name))?)
    }

    /// Writes `artifact.json` and `timing.json`.
    pub fn finish(
        self,
        experiment: ExperimentKind,
        config: &ExperimentConfig,
        shots: ShotAccount,
        summary: serde_json::Value,
    ) -> Result<RunArtifact> {
        let artifact = RunArtifact { experiment, config: config.clone(), shots, summary, files: self.files };
        std::fs::write(self.dir.join(ARTIFACT_FILE), serde_json::to_string_pretty(&artifact)? + "\n")?;
        let timing = Timing { experiment, wall_seconds: self.start.elapsed().as_secs_f64(), phases: self.phases };
        std::fs::write(self.dir.join(TIMING_FILE), serde_json::to_string_pretty(&timing)? + "\n")?;
        Ok(artifact)
    }
}
