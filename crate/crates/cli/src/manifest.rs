use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use fplm_core::fplm::RoundStats;

/// Record of one command run: the fully resolved configuration, wall-clock
/// time per stage and every file written.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub timings_ms: BTreeMap<String, f64>,
    pub outputs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingSummary {
    pub rounds_run: usize,
    pub branch: fplm_core::Branch,
    pub seed_simplex: Option<usize>,
    /// Seed simplex of a closed mesh; excluded when auditing.
    pub removed_simplex: Option<usize>,
    pub fixed_round1: Vec<usize>,
    pub fixed_round2: Option<Vec<usize>>,
    pub rounds: Vec<RoundStats>,
    pub max_convex_residual: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        RunManifest {
            tool: "fplm".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            timings_ms: BTreeMap::new(),
            outputs: Vec::new(),
            embedding: None,
        }
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings_ms
            .insert(stage.into(), start.elapsed().as_secs_f64() * 1e3);
        out
    }

    /// Writes the manifest (listing itself among the outputs).
    pub fn write(mut self, path: &Path) -> anyhow::Result<()> {
        self.outputs.push(path.to_path_buf());
        let text = serde_json::to_string_pretty(&self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
