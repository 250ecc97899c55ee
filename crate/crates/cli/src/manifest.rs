use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use swrc::simbench::ExperimentSpec;
use swrc::{Error, Result};

/// Resolved settings of an `estimate` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub data: String,
    pub d: usize,
    pub algo: String,
    pub k: usize,
    pub m: usize,
    pub iters: usize,
    pub radius: f64,
    pub seed: u64,
}

/// Resolved settings of a `simulate` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub spec: ExperimentSpec,
    pub svg: bool,
}

/// Resolved settings of a `flow` run. `lambdas` has one entry per sweep
/// point; plain runs carry a single entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowRunConfig {
    pub data: Option<String>,
    pub law: String,
    pub d: usize,
    pub n: usize,
    pub kappa: f64,
    pub k: usize,
    pub m: usize,
    pub particles: usize,
    pub lambdas: Vec<f64>,
    pub h: f64,
    pub t: usize,
    pub radius: f64,
    pub seed: u64,
    pub svg: bool,
}

/// Resolved settings of a `causal` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CausalRunConfig {
    pub data: String,
    pub p: usize,
    pub epsilon: f64,
    pub k: usize,
    pub m: usize,
    pub t: usize,
    pub radius: f64,
    pub raw: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "lowercase")]
pub enum CommandConfig {
    Estimate(EstimateConfig),
    Simulate(SimulateConfig),
    Flow(FlowRunConfig),
    Causal(CausalRunConfig),
}

/// Written alongside every run's artifacts; feeding it back through
/// `--from-manifest` reproduces the run byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub command: CommandConfig,
    /// Artifact file names, relative to the output directory.
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn new(command: CommandConfig, artifacts: Vec<String>) -> Self {
        Manifest {
            tool: "swrc".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            artifacts,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut body = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("manifest serialization failed: {e}")))?;
        body.push('\n');
        fs::write(path, body)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let body = fs::read_to_string(path)?;
        serde_json::from_str(&body)
            .map_err(|e| Error::Data(format!("{} is not a run manifest: {e}", path.display())))
    }
}
