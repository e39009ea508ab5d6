//! Checkpoint/restart with partner copies.
//!
//! Nodes `0..n-1` compute and node `n-1` is a spare. Every rank writes its
//! particle arrays to a file of its own in the node-local memory tier, then
//! copies the whole checkpoint to the partner node `(node + 1) mod (n - 1)`.
//! Node 0 then fails; the survivors restart from their local copies and
//! node 1 ships node 0's copy to the spare.

use serde::Deserialize;

use super::{BenchError, BenchResult, PhaseResult};
use crate::basefs::{BufferTier, ClientId, Cluster, Payload};
use crate::exec::{Step, World};
use crate::layers::LayerKind;
use crate::sim::SimConfig;

/// Arrays per rank: position, velocity and force in three dimensions.
pub const ARRAYS: u64 = 9;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScrConfig {
    pub nodes: u32,
    pub ppn: u32,
    pub particles: u64,
    pub value_size: u64,
    pub model: Option<LayerKind>,
    pub seed: u64,
}

impl Default for ScrConfig {
    fn default() -> Self {
        Self { nodes: 4, ppn: 4, particles: 10_000_000, value_size: 4, model: None, seed: 0 }
    }
}

impl ScrConfig {
    pub fn new(nodes: u32, model: LayerKind) -> Self {
        Self { nodes, model: Some(model), ..Self::default() }
    }

    pub fn array_bytes(&self) -> u64 {
        self.particles * self.value_size
    }

    pub fn rank_bytes(&self) -> u64 {
        ARRAYS * self.array_bytes()
    }

    fn kind(&self) -> LayerKind {
        self.model.unwrap_or(LayerKind::Session)
    }
}

fn file_of(c: ClientId) -> String {
    format!("ckpt.{}.{}", c.node, c.rank)
}

/// Phases: `checkpoint` (all compute nodes) and `restart` (surviving nodes).
pub fn run_scr(cfg: &ScrConfig, sim: &SimConfig) -> Result<BenchResult, BenchError> {
    if cfg.nodes < 3 {
        return Err(BenchError::TooFewNodes(cfg.nodes));
    }
    if cfg.ppn == 0 || cfg.array_bytes() == 0 {
        return Err(BenchError::Config("empty checkpoint".into()));
    }
    let kind = cfg.kind();
    let compute = cfg.nodes - 1;
    let cluster = Cluster::new(sim.clone(), cfg.nodes, cfg.ppn, BufferTier::Memory, false);
    let (mut programs, mut ckpt, mut restart) = (Vec::new(), Vec::new(), Vec::new());

    for node in 0..compute {
        for rank in 0..cfg.ppn {
            let client = ClientId::new(node, rank);
            let file = file_of(client);
            let mut steps = vec![Step::Open { file: file.clone() }];
            if kind == LayerKind::Session {
                steps.push(Step::SessionOpen { file: file.clone() });
            }
            steps.push(Step::Barrier { id: 0 });
            steps.push(Step::mark("ckpt_start"));
            for a in 0..ARRAYS {
                steps.push(Step::write(&file, a * cfg.array_bytes(), Payload::Sized(cfg.array_bytes())));
            }
            steps.push(Step::CopyToNode { node: (node + 1) % compute, bytes: cfg.rank_bytes() });
            match kind {
                LayerKind::Commit => steps.push(Step::Commit { file: file.clone() }),
                LayerKind::Session => steps.push(Step::SessionClose { file: file.clone() }),
                LayerKind::Posix => {}
            }
            steps.push(Step::mark("ckpt_end"));
            steps.push(Step::Barrier { id: 1 });
            ckpt.push((programs.len(), node));

            if node > 0 {
                steps.push(Step::Barrier { id: 2 });
                steps.push(Step::mark("restart_start"));
                if kind == LayerKind::Session {
                    steps.push(Step::SessionOpen { file: file.clone() });
                }
                for a in 0..ARRAYS {
                    steps.push(Step::read(&file, a * cfg.array_bytes(), cfg.array_bytes()));
                }
                if kind == LayerKind::Session {
                    steps.push(Step::SessionClose { file: file.clone() });
                }
                steps.push(Step::mark("restart_end"));
                if node == 1 {
                    steps.push(Step::CopyToNode { node: compute, bytes: cfg.rank_bytes() });
                }
                restart.push((programs.len(), node));
            }
            programs.push((client, steps));
        }
    }

    let mut world = World::new(cluster, kind, programs)?;
    let elapsed = world.run()?;
    let procs = (compute * cfg.ppn) as u64;
    let phases = vec![
        PhaseResult::measure(&world, "checkpoint", &ckpt, "ckpt_start", "ckpt_end", procs * cfg.rank_bytes()),
        PhaseResult::measure(
            &world,
            "restart",
            &restart,
            "restart_start",
            "restart_end",
            restart.len() as u64 * cfg.rank_bytes(),
        ),
    ];
    Ok(BenchResult::from_world(
        &world,
        "scr",
        kind,
        (cfg.nodes, cfg.ppn, cfg.array_bytes(), cfg.seed),
        phases,
        elapsed,
    ))
}
