//! Training-style reads: a dataset is preloaded into one shared file, then
//! every epoch visits all samples in a seeded random order. Each global
//! batch is split evenly across processes, so most samples are fetched from
//! the node that preloaded them.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BenchError, BenchResult, PhaseResult};
use crate::basefs::{BufferTier, ClientId, Cluster, Payload};
use crate::exec::{Step, World};
use crate::layers::LayerKind;
use crate::sim::SimConfig;

pub const FILE: &str = "dataset.bin";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// Fixed dataset and global batch.
    Strong,
    /// Dataset and batch grow with the process count.
    Weak,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DlConfig {
    pub nodes: u32,
    pub ppn: u32,
    pub sample_size: u64,
    pub scaling: Scaling,
    /// Overrides the dataset size implied by `scaling`.
    pub samples: Option<u64>,
    pub epochs: u32,
    pub model: Option<LayerKind>,
    pub seed: u64,
}

impl Default for DlConfig {
    fn default() -> Self {
        Self {
            nodes: 4,
            ppn: 4,
            sample_size: 116 * 1024,
            scaling: Scaling::Strong,
            samples: None,
            epochs: 2,
            model: None,
            seed: 0,
        }
    }
}

impl DlConfig {
    pub fn new(nodes: u32, scaling: Scaling, model: LayerKind) -> Self {
        Self { nodes, scaling, model: Some(model), ..Self::default() }
    }

    pub fn procs(&self) -> u64 {
        (self.nodes * self.ppn) as u64
    }

    pub fn total_samples(&self) -> u64 {
        self.samples.unwrap_or(match self.scaling {
            Scaling::Strong => 8192,
            Scaling::Weak => 256 * self.procs(),
        })
    }

    pub fn batch(&self) -> u64 {
        match self.scaling {
            Scaling::Strong => 1024,
            Scaling::Weak => 32 * self.procs(),
        }
        .min(self.total_samples())
    }

    fn kind(&self) -> LayerKind {
        self.model.unwrap_or(LayerKind::Session)
    }
}

/// Sample indices process `p` reads in `epoch`, in order.
pub fn epoch_samples(cfg: &DlConfig, epoch: u32, p: u64) -> Vec<u64> {
    let mut order: Vec<u64> = (0..cfg.total_samples()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(epoch as u64)));
    let procs = cfg.procs();
    order
        .chunks(cfg.batch() as usize)
        .flat_map(|b| {
            let n = b.len() as u64;
            b[(p * n / procs) as usize..((p + 1) * n / procs) as usize].to_vec()
        })
        .collect()
}

/// Phases: `preload`, then `epoch0`, `epoch1`, ...
pub fn run_dl(cfg: &DlConfig, sim: &SimConfig) -> Result<BenchResult, BenchError> {
    if cfg.nodes == 0 || cfg.ppn == 0 || cfg.sample_size == 0 || cfg.epochs == 0 {
        return Err(BenchError::Config("empty training run".into()));
    }
    let kind = cfg.kind();
    let session = kind == LayerKind::Session;
    let (procs, total, size) = (cfg.procs(), cfg.total_samples(), cfg.sample_size);
    if total < procs {
        return Err(BenchError::Config(format!("{total} samples for {procs} processes")));
    }
    let file = FILE.to_string();
    let cluster = Cluster::new(sim.clone(), cfg.nodes, cfg.ppn, BufferTier::Ssd, false);
    let mut programs = Vec::new();
    let mut members = Vec::new();
    for p in 0..procs {
        let client = ClientId::new((p / cfg.ppn as u64) as u32, (p % cfg.ppn as u64) as u32);
        let mut steps = vec![Step::Open { file: file.clone() }];
        if session {
            steps.push(Step::SessionOpen { file: file.clone() });
        }
        steps.push(Step::mark("preload_start"));
        for k in p * total / procs..(p + 1) * total / procs {
            steps.push(Step::write(&file, k * size, Payload::Sized(size)));
        }
        match kind {
            LayerKind::Commit => steps.push(Step::Commit { file: file.clone() }),
            LayerKind::Session => steps.push(Step::SessionClose { file: file.clone() }),
            LayerKind::Posix => {}
        }
        steps.push(Step::mark("preload_end"));
        for e in 0..cfg.epochs {
            steps.push(Step::Barrier { id: e as u64 });
            steps.push(Step::mark(&format!("epoch{e}_start")));
            if session {
                steps.push(Step::SessionOpen { file: file.clone() });
            }
            for k in epoch_samples(cfg, e, p) {
                steps.push(Step::read(&file, k * size, size));
            }
            if session {
                steps.push(Step::SessionClose { file: file.clone() });
            }
            steps.push(Step::mark(&format!("epoch{e}_end")));
        }
        members.push((programs.len(), client.node));
        programs.push((client, steps));
    }

    let mut world = World::new(cluster, kind, programs)?;
    let elapsed = world.run()?;
    let mut phases =
        vec![PhaseResult::measure(&world, "preload", &members, "preload_start", "preload_end", total * size)];
    for e in 0..cfg.epochs {
        phases.push(PhaseResult::measure(
            &world,
            &format!("epoch{e}"),
            &members,
            &format!("epoch{e}_start"),
            &format!("epoch{e}_end"),
            total * size,
        ));
    }
    let name = match cfg.scaling {
        Scaling::Strong => "dl-strong",
        Scaling::Weak => "dl-weak",
    };
    Ok(BenchResult::from_world(&world, name, kind, (cfg.nodes, cfg.ppn, size, cfg.seed), phases, elapsed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epochs_cover_every_sample_once() {
        let cfg = DlConfig { samples: Some(100), ..DlConfig::new(2, Scaling::Strong, LayerKind::Session) };
        let mut all: Vec<u64> = (0..cfg.procs()).flat_map(|p| epoch_samples(&cfg, 1, p)).collect();
        all.sort();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_ne!(epoch_samples(&cfg, 0, 0), epoch_samples(&cfg, 1, 0));
    }

    #[test]
    fn weak_scaling_sizes() {
        let cfg = DlConfig::new(2, Scaling::Weak, LayerKind::Commit);
        assert_eq!((cfg.total_samples(), cfg.batch()), (2048, 256));
    }

    #[test]
    fn session_queries_once_per_epoch() {
        let sim = SimConfig::default();
        let base = DlConfig { samples: Some(64), sample_size: 4096, ..DlConfig::default() };
        let s = run_dl(&DlConfig { model: Some(LayerKind::Session), ..base.clone() }, &sim).unwrap();
        let c = run_dl(&DlConfig { model: Some(LayerKind::Commit), ..base }, &sim).unwrap();
        assert_eq!(s.phase("epoch0").unwrap().query_rpcs, 16);
        assert_eq!(c.phase("epoch0").unwrap().query_rpcs, 64);
        assert!(s.phase("epoch1").unwrap().bandwidth > c.phase("epoch1").unwrap().bandwidth);
    }
}
