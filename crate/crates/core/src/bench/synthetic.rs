//! N-to-1 synthetic workloads on one shared file.
//!
//! | shape | writers | readers | write pattern | read pattern |
//! |-------|---------|---------|---------------|--------------|
//! | CN-W  | n       | 0       | contiguous    |              |
//! | SN-W  | n       | 0       | strided       |              |
//! | CC-R  | n/2     | n/2     | contiguous    | contiguous   |
//! | CS-R  | n/2     | n/2     | contiguous    | strided      |
//!
//! Writers run on the first `n_w` nodes and readers on the rest; the read
//! phase starts after a barrier that follows the write phase.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BenchError, BenchResult, PhaseResult};
use crate::basefs::{BufferTier, ClientId, Cluster, Payload};
use crate::exec::{Step, World};
use crate::layers::LayerKind;
use crate::sim::SimConfig;

pub const FILE: &str = "shared.dat";
pub const DEFAULT_OPS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Contiguous,
    Strided,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    #[serde(alias = "cn-w")]
    Cnw,
    #[serde(alias = "sn-w")]
    Snw,
    #[serde(alias = "cc-r")]
    Ccr,
    #[serde(alias = "cs-r")]
    Csr,
}

impl Shape {
    pub const ALL: [Shape; 4] = [Shape::Cnw, Shape::Snw, Shape::Ccr, Shape::Csr];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Cnw => "cn-w",
            Shape::Snw => "sn-w",
            Shape::Ccr => "cc-r",
            Shape::Csr => "cs-r",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "cnw" => Ok(Shape::Cnw),
            "snw" => Ok(Shape::Snw),
            "ccr" => Ok(Shape::Ccr),
            "csr" => Ok(Shape::Csr),
            _ => Err(BenchError::Config(format!("unknown shape `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Write,
    Read,
}

/// Parameters of a synthetic run. `n_w` and `n_r` count nodes; every node
/// runs `p` processes, each issuing `m_w` writes or `m_r` reads of `s`
/// bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    pub name: String,
    pub n_w: u32,
    pub n_r: u32,
    pub p: u32,
    pub m_w: u32,
    pub m_r: u32,
    pub s: u64,
    pub write_pattern: Pattern,
    pub read_pattern: Pattern,
    pub model: LayerKind,
    pub seed: u64,
}

impl WorkloadConfig {
    /// One of the four standard shapes on `n` nodes.
    pub fn shape(shape: Shape, model: LayerKind, n: u32, p: u32, s: u64) -> Self {
        let (n_w, n_r) = match shape {
            Shape::Cnw | Shape::Snw => (n, 0),
            Shape::Ccr | Shape::Csr => (n / 2, n - n / 2),
        };
        Self {
            name: shape.name().to_string(),
            n_w,
            n_r,
            p,
            m_w: DEFAULT_OPS,
            m_r: if n_r == 0 { 0 } else { DEFAULT_OPS },
            s,
            write_pattern: if shape == Shape::Snw { Pattern::Strided } else { Pattern::Contiguous },
            read_pattern: if shape == Shape::Csr { Pattern::Strided } else { Pattern::Contiguous },
            model,
            seed: 0,
        }
    }

    pub fn with_ops(mut self, m_w: u32, m_r: u32) -> Self {
        self.m_w = m_w;
        self.m_r = if self.n_r == 0 { 0 } else { m_r };
        self
    }

    pub fn nodes(&self) -> u32 {
        self.n_w + self.n_r
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.s == 0 {
            return Err(BenchError::Config("request size must be at least 1 byte".into()));
        }
        if self.n_w == 0 || self.p == 0 {
            return Err(BenchError::Config("need at least one writer node and process".into()));
        }
        if self.n_r > 0 && self.m_r == 0 {
            return Err(BenchError::Config("reader nodes but no reads".into()));
        }
        Ok(())
    }

    fn procs(&self, phase: Phase) -> (u64, u64) {
        match phase {
            Phase::Write => ((self.n_w * self.p) as u64, self.m_w as u64),
            Phase::Read => ((self.n_r * self.p) as u64, self.m_r as u64),
        }
    }
}

/// Offsets process `i` of `phase` accesses, in issue order.
pub fn gen_offsets(cfg: &WorkloadConfig, phase: Phase, i: u32) -> Vec<u64> {
    let (procs, m) = cfg.procs(phase);
    let (i, s) = (i as u64, cfg.s);
    let pattern = match phase {
        Phase::Write => cfg.write_pattern,
        Phase::Read => cfg.read_pattern,
    };
    match pattern {
        Pattern::Contiguous => (0..m).map(|k| (i * m + k) * s).collect(),
        Pattern::Strided => (0..m).map(|k| (k * procs + i) * s).collect(),
        Pattern::Random => {
            let salt = match phase {
                Phase::Write => 0x5752_4954,
                Phase::Read => 0x5245_4144,
            };
            let mut slots: Vec<u64> = (0..procs * m).collect();
            slots.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed ^ salt));
            slots[(i * m) as usize..((i + 1) * m) as usize].iter().map(|k| k * s).collect()
        }
    }
}

/// Run-config `[synthetic]` section.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    pub shape: Shape,
    pub nodes: u32,
    pub p: u32,
    pub s: u64,
    pub m_w: Option<u32>,
    pub m_r: Option<u32>,
    pub seed: Option<u64>,
}

impl SyntheticSection {
    pub fn workload(&self, model: LayerKind) -> WorkloadConfig {
        let mut w = WorkloadConfig::shape(self.shape, model, self.nodes, self.p, self.s);
        let m_w = self.m_w.unwrap_or(w.m_w);
        w = w.with_ops(m_w, self.m_r.unwrap_or(DEFAULT_OPS));
        w.seed = self.seed.unwrap_or(0);
        w
    }
}

pub fn run_synthetic(cfg: &WorkloadConfig, sim: &SimConfig) -> Result<BenchResult, BenchError> {
    cfg.validate()?;
    let file = FILE.to_string();
    let session = cfg.model == LayerKind::Session;
    let has_read = cfg.n_r > 0;
    let cluster = Cluster::new(sim.clone(), cfg.nodes(), cfg.p, BufferTier::Ssd, false);
    let mut programs = Vec::new();
    let mut writers = Vec::new();
    let mut readers = Vec::new();

    for i in 0..cfg.n_w * cfg.p {
        let client = ClientId::new(i / cfg.p, i % cfg.p);
        let mut steps = vec![Step::Open { file: file.clone() }];
        if session {
            // an empty file has nothing to snapshot; keep it out of the timed phase
            steps.push(Step::SessionOpen { file: file.clone() });
        }
        steps.push(Step::Barrier { id: 0 });
        steps.push(Step::mark("write_start"));
        for off in gen_offsets(cfg, Phase::Write, i) {
            steps.push(Step::Write { file: file.clone(), offset: off, data: Payload::Sized(cfg.s) });
        }
        match cfg.model {
            LayerKind::Commit => steps.push(Step::Commit { file: file.clone() }),
            LayerKind::Session => steps.push(Step::SessionClose { file: file.clone() }),
            LayerKind::Posix => {}
        }
        steps.push(Step::mark("write_end"));
        if has_read {
            steps.push(Step::Barrier { id: 1 });
        }
        writers.push((programs.len(), client.node));
        programs.push((client, steps));
    }
    for j in 0..cfg.n_r * cfg.p {
        let client = ClientId::new(cfg.n_w + j / cfg.p, j % cfg.p);
        let mut steps = vec![
            Step::Open { file: file.clone() },
            Step::Barrier { id: 0 },
            Step::Barrier { id: 1 },
            Step::mark("read_start"),
        ];
        if session {
            steps.push(Step::SessionOpen { file: file.clone() });
        }
        for off in gen_offsets(cfg, Phase::Read, j) {
            steps.push(Step::read(&file, off, cfg.s));
        }
        if session {
            steps.push(Step::SessionClose { file: file.clone() });
        }
        steps.push(Step::mark("read_end"));
        readers.push((programs.len(), client.node));
        programs.push((client, steps));
    }

    let mut world = World::new(cluster, cfg.model, programs)?;
    let elapsed = world.run()?;
    let (wp, wm) = cfg.procs(Phase::Write);
    let mut phases = vec![PhaseResult::measure(
        &world,
        "write",
        &writers,
        "write_start",
        "write_end",
        wp * wm * cfg.s,
    )];
    if has_read {
        let (rp, rm) = cfg.procs(Phase::Read);
        phases.push(PhaseResult::measure(
            &world,
            "read",
            &readers,
            "read_start",
            "read_end",
            rp * rm * cfg.s,
        ));
    }
    Ok(BenchResult::from_world(
        &world,
        &cfg.name,
        cfg.model,
        (cfg.nodes(), cfg.p, cfg.s, cfg.seed),
        phases,
        elapsed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pattern: Pattern, procs: u32, m: u32, s: u64) -> WorkloadConfig {
        let mut c = WorkloadConfig::shape(Shape::Cnw, LayerKind::Commit, procs, 1, s).with_ops(m, 0);
        c.write_pattern = pattern;
        c
    }

    #[test]
    fn offsets_follow_the_layouts() {
        assert_eq!(gen_offsets(&cfg(Pattern::Contiguous, 1, 2, 8), Phase::Write, 0), vec![0, 8]);
        assert_eq!(gen_offsets(&cfg(Pattern::Strided, 2, 2, 8), Phase::Write, 1), vec![8, 24]);
        let mut c = cfg(Pattern::Random, 4, 3, 8);
        c.seed = 11;
        let all: Vec<u64> = (0..4).flat_map(|i| gen_offsets(&c, Phase::Write, i)).collect();
        let again: Vec<u64> = (0..4).flat_map(|i| gen_offsets(&c, Phase::Write, i)).collect();
        assert_eq!(all, again);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, (0..12).map(|k| k * 8).collect::<Vec<_>>());
    }

    #[test]
    fn shapes() {
        let c = WorkloadConfig::shape(Shape::Csr, LayerKind::Session, 4, 2, 64);
        assert_eq!((c.n_w, c.n_r, c.nodes()), (2, 2, 4));
        assert_eq!(c.read_pattern, Pattern::Strided);
        assert_eq!("CS-R".parse::<Shape>().unwrap(), Shape::Csr);
        assert!("xyz".parse::<Shape>().is_err());
    }

    #[test]
    fn ccr_read_query_counts() {
        let sim = SimConfig::default();
        // n_r * p * m_r for commit, n_r * p for session
        for (model, expect) in [(LayerKind::Commit, 40), (LayerKind::Session, 4)] {
            let c = WorkloadConfig::shape(Shape::Ccr, model, 4, 2, 8192).with_ops(10, 10);
            let r = run_synthetic(&c, &sim).unwrap();
            assert_eq!(r.phase("read").unwrap().query_rpcs, expect, "{model}");
        }
    }
}
