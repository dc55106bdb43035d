use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use modescent::SolverConfig;
use serde::Serialize;

/// Record of one invocation, written as `manifest.json` next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub problem: Option<String>,
    pub problem_file: Option<PathBuf>,
    pub config: Option<SolverConfig>,
    pub outputs: Vec<PathBuf>,
    pub started: String,
    pub finished: String,
    pub termination: String,
    pub exit_code: u8,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String]) -> Self {
        Self {
            command: command.to_string(),
            argv: argv.to_vec(),
            problem: None,
            problem_file: None,
            config: None,
            outputs: Vec::new(),
            started: now(),
            finished: String::new(),
            termination: String::new(),
            exit_code: 0,
        }
    }

    pub fn write(
        mut self,
        dir: &Path,
        termination: String,
        exit_code: u8,
    ) -> std::io::Result<PathBuf> {
        self.finished = now();
        self.termination = termination;
        self.exit_code = exit_code;
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self).map_err(std::io::Error::other)?;
        modescent::io::write_text(&path, &text)?;
        Ok(path)
    }
}
