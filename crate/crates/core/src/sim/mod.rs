//! Deterministic discrete-event substrate for the simulated cluster.

mod config;
mod fabric;
mod time;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use config::{SimConfig, CALIBRATION, CONFIG_VERSION};
pub use fabric::{
    Actor, DeviceId, DeviceKind, DeviceStats, Direction, Entity, Fabric, Message, MsgKind,
};
pub use time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("unknown entity {0:?}")]
    UnknownEntity(Entity),
    #[error("deadlock: processes {0:?} still blocked with no pending events")]
    Deadlock(Vec<u32>),
    #[error("config error: {0}")]
    Config(String),
}

/// Per-entity counters. All of them only ever grow.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Accounting {
    pub rpc_sent: u64,
    pub rpc_recv: u64,
    pub sent_by_kind: BTreeMap<MsgKind, u64>,
    pub recv_by_kind: BTreeMap<MsgKind, u64>,
    pub bytes_written_ssd: u64,
    pub bytes_read_ssd: u64,
    pub bytes_client_to_client: u64,
    pub busy_time: SimTime,
}
