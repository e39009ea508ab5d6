use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;

/// The shipped calibration; [`SimConfig::default`] is parsed from it.
pub const CALIBRATION: &str = include_str!("../../calibration.toml");

pub const CONFIG_VERSION: u32 = 1;

/// Cost-model parameters. Times are in seconds, bandwidths in bytes/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub rpc_latency: f64,
    pub rpc_per_byte: f64,
    pub ssd_write_bw: f64,
    pub ssd_read_bw: f64,
    pub ssd_op_latency: f64,
    pub pfs_read_bw: f64,
    pub pfs_write_bw: f64,
    pub pfs_op_latency: f64,
    pub mem_bw: f64,
    pub server_workers: u32,
    pub server_op_time: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::from_toml_str(CALIBRATION).expect("shipped calibration parses")
    }
}

impl SimConfig {
    /// Parses a versioned key/value file. Keys that are absent keep their
    /// calibration value.
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let table: toml::Table = text.parse().map_err(|e| SimError::Config(format!("{e}")))?;
        Self::from_table(table)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| SimError::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub(crate) fn from_table(mut table: toml::Table) -> Result<Self, SimError> {
        match table.remove("version") {
            Some(toml::Value::Integer(v)) if v == CONFIG_VERSION as i64 => {}
            Some(v) => return Err(SimError::Config(format!("unsupported config version {v}"))),
            None => return Err(SimError::Config("missing `version` key".into())),
        }
        let mut merged: toml::Table = CALIBRATION.parse().expect("shipped calibration parses");
        merged.remove("version");
        for (k, v) in table {
            merged.insert(k, v);
        }
        let cfg: SimConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        let mut table = toml::Table::new();
        table.insert("version".into(), toml::Value::Integer(CONFIG_VERSION as i64));
        if let toml::Value::Table(fields) = toml::Value::try_from(self).expect("serializable") {
            table.extend(fields);
        }
        toml::to_string(&table).expect("serializable")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let rates = [
            ("ssd_write_bw", self.ssd_write_bw),
            ("ssd_read_bw", self.ssd_read_bw),
            ("pfs_read_bw", self.pfs_read_bw),
            ("pfs_write_bw", self.pfs_write_bw),
            ("mem_bw", self.mem_bw),
        ];
        for (name, v) in rates {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        let latencies = [
            ("rpc_latency", self.rpc_latency),
            ("rpc_per_byte", self.rpc_per_byte),
            ("ssd_op_latency", self.ssd_op_latency),
            ("pfs_op_latency", self.pfs_op_latency),
            ("server_op_time", self.server_op_time),
        ];
        for (name, v) in latencies {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.server_workers == 0 {
            return Err(SimError::Config("server_workers must be >= 1".into()));
        }
        Ok(())
    }

    /// Same calibration with every fixed latency zeroed, leaving pure
    /// bandwidth costs.
    pub fn without_latencies(mut self) -> Self {
        self.rpc_latency = 0.0;
        self.ssd_op_latency = 0.0;
        self.pfs_op_latency = 0.0;
        self.server_op_time = 0.0;
        self
    }
}
