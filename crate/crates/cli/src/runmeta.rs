//! Run manifest: the success marker written after all other artifacts.

use crate::CliError;
use oilpore_core::config::ConfigDoc;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub struct RunMeta {
    command: String,
    seed: Option<u64>,
    config_echo: String,
    artifacts: Vec<PathBuf>,
    started: Instant,
}

impl RunMeta {
    pub fn start(command: &str, config: &ConfigDoc, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            seed,
            config_echo: config.to_text(),
            artifacts: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn add_artifact(&mut self, path: &Path) {
        self.artifacts.push(path.to_path_buf());
    }

    /// Write `run_manifest.txt` into the output directory. Must be the
    /// last file written by a successful run.
    pub fn finish(self, out_dir: &Path) -> Result<(), CliError> {
        let mut text = String::new();
        text.push_str(&format!("command = {}\n", self.command));
        text.push_str(&format!("tool_version = {}\n", env!("CARGO_PKG_VERSION")));
        text.push_str(&format!(
            "hardware = {}\n",
            oilpore_eval::hardware_descriptor()
        ));
        if let Some(seed) = self.seed {
            text.push_str(&format!("seed = {seed}\n"));
        }
        text.push_str(&format!(
            "wall_clock_s = {:.3}\n",
            self.started.elapsed().as_secs_f64()
        ));
        text.push_str("artifacts:\n");
        for artifact in &self.artifacts {
            text.push_str(&format!("  {}\n", artifact.display()));
        }
        text.push_str("config:\n");
        for line in self.config_echo.lines() {
            text.push_str(&format!("  {line}\n"));
        }
        std::fs::write(out_dir.join("run_manifest.txt"), text)?;
        Ok(())
    }
}
