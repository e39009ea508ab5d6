//! Workloads that drive the simulated stack and report per-phase bandwidth
//! and RPC counts.
//!
//! * [`synthetic`]: N-to-1 shared-file writes and reads (CN-W, SN-W, CC-R,
//!   CS-R).
//! * [`scr`]: checkpoint/restart with partner copies.
//! * [`dl`]: preloaded random sample reads for training.

pub mod dl;
mod report;
pub mod scr;
pub mod synthetic;

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::exec::ExecError;
use crate::layers::LayerKind;
use crate::sim::{SimConfig, SimError};

pub use dl::{run_dl, DlConfig, Scaling};
pub use report::{plot_script, write_csv, BenchResult, CsvRow, PhaseResult};
pub use scr::{run_scr, ScrConfig};
pub use synthetic::{gen_offsets, run_synthetic, Pattern, Phase, Shape, WorkloadConfig};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid workload: {0}")]
    Config(String),
    #[error("need at least 3 nodes (got {0})")]
    TooFewNodes(u32),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Contents of a run-config file: the layer, cost-model overrides and
/// any workload sections.
///
/// ```toml
/// version = 1
/// consistency_model = "session"
///
/// [sim]
/// rpc_latency = 20e-6
///
/// [synthetic]
/// shape = "ccr"
/// nodes = 4
/// p = 2
/// s = 8192
/// ```
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub consistency_model: LayerKind,
    pub sim: SimConfig,
    pub synthetic: Option<synthetic::SyntheticSection>,
    pub scr: Option<ScrConfig>,
    pub dl: Option<DlConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRunConfig {
    version: u32,
    consistency_model: Option<LayerKind>,
    sim: Option<toml::Table>,
    synthetic: Option<synthetic::SyntheticSection>,
    scr: Option<ScrConfig>,
    dl: Option<DlConfig>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, BenchError> {
        let raw: RawRunConfig =
            toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        if raw.version != crate::sim::CONFIG_VERSION {
            return Err(BenchError::Config(format!("unsupported config version {}", raw.version)));
        }
        let mut sim_table = raw.sim.unwrap_or_default();
        sim_table.insert("version".into(), toml::Value::Integer(raw.version as i64));
        Ok(Self {
            consistency_model: raw.consistency_model.unwrap_or(LayerKind::Session),
            sim: SimConfig::from_table(sim_table)?,
            synthetic: raw.synthetic,
            scr: raw.scr,
            dl: raw.dl,
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            consistency_model: LayerKind::Session,
            sim: SimConfig::default(),
            synthetic: None,
            scr: None,
            dl: None,
        }
    }
}

/// Bytes per second, or zero for an empty interval.
pub(crate) fn bandwidth(bytes: u64, secs: f64) -> f64 {
    if secs > 0.0 {
        bytes as f64 / secs
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_overlays_sim_and_sections() {
        let cfg = RunConfig::from_toml_str(
            "version = 1\nconsistency_model = \"commit\"\n[sim]\nrpc_latency = 2e-5\n\
             [synthetic]\nshape = \"ccr\"\nnodes = 4\np = 2\ns = 8192\n",
        )
        .unwrap();
        assert_eq!(cfg.consistency_model, LayerKind::Commit);
        assert_eq!(cfg.sim.rpc_latency, 2e-5);
        assert_eq!(cfg.sim.ssd_write_bw, SimConfig::default().ssd_write_bw);
        let syn = cfg.synthetic.unwrap();
        assert_eq!(syn.shape, Shape::Ccr);
        assert!(RunConfig::from_toml_str("version = 2").is_err());
        assert!(RunConfig::from_toml_str("version = 1\nbogus = 1").is_err());
    }
}
