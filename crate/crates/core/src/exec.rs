//! Runs per-process step lists on a [`Cluster`] under one consistency
//! layer, in simulated time, and records the layer-level execution trace.
//!
//! Each process has its own clock. The process whose next step is due
//! earliest runs that one step; messages and barriers block until they can
//! complete.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::basefs::{BufferTier, ClientId, Cluster, KernelError, Payload, ReadOut};
use crate::layers::{LayerError, LayerHandle, LayerKind};
use crate::model::{
    project_so, ExecutionTrace, ModelError, OpKind, Outcome, ProgOp, Program, ProgramEvent,
    StorageOp,
};
use crate::range::ByteRange;
use crate::sim::{DeviceId, Direction, Entity, MsgKind, SimConfig, SimError, SimTime};
use crate::trace_io::{OpRecord, RecordKind, SoRecord, TraceRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("process {process}, step {step}: {source}")]
    Layer {
        process: usize,
        step: usize,
        source: LayerError,
    },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("bad step list: {0}")]
    BadSteps(String),
}

/// Target of a raw device access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Device {
    LocalSsd,
    LocalMemory,
    Pfs,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Open { file: String },
    Write { file: String, offset: u64, data: Payload },
    Read { file: String, offset: u64, len: u64 },
    Commit { file: String },
    SessionOpen { file: String },
    SessionClose { file: String },
    Close { file: String },
    /// Message of `bytes` to the process that receives `tag`.
    Send { tag: u64, bytes: u64 },
    Recv { tag: u64 },
    /// Waits for every process whose list contains this barrier id.
    Barrier { id: u64 },
    /// Notes the current clock under `label`.
    Mark { label: String },
    Compute { duration: SimTime },
    DeviceIo { device: Device, dir: Direction, bytes: u64 },
    /// Copies `bytes` into the memory of `node` and waits for it to land.
    CopyToNode { node: u32, bytes: u64 },
}

impl Step {
    pub fn write(file: &str, offset: u64, data: impl Into<Payload>) -> Step {
        Step::Write { file: file.into(), offset, data: data.into() }
    }

    pub fn read(file: &str, offset: u64, len: u64) -> Step {
        Step::Read { file: file.into(), offset, len }
    }

    pub fn mark(label: &str) -> Step {
        Step::Mark { label: label.into() }
    }
}

/// What one process observed.
#[derive(Debug, Clone, Default)]
pub struct ProcessLog {
    /// `(step index, result)` for every read.
    pub reads: Vec<(usize, ReadOut)>,
    pub marks: Vec<(String, SimTime)>,
    pub finished_at: SimTime,
}

impl ProcessLog {
    pub fn mark(&self, label: &str) -> Option<SimTime> {
        self.marks.iter().find(|(l, _)| l == label).map(|&(_, t)| t)
    }
}

#[derive(Debug, Clone)]
struct TraceOp {
    process: u32,
    kind: RecordKind,
    file: String,
    range: Option<ByteRange>,
    start: SimTime,
    end: SimTime,
    undefined: bool,
}

struct Proc {
    client: ClientId,
    steps: Vec<Step>,
    pc: usize,
    handles: BTreeMap<String, LayerHandle>,
    waiting: bool,
    log: ProcessLog,
    events: Vec<ProgramEvent>,
}

pub struct World {
    cluster: Cluster,
    kind: LayerKind,
    procs: Vec<Proc>,
    receiver: BTreeMap<u64, usize>,
    sent: BTreeMap<u64, SimTime>,
    barrier_size: BTreeMap<u64, usize>,
    arrived: BTreeMap<u64, Vec<usize>>,
    ops: Vec<TraceOp>,
}

impl World {
    /// One process per `(client, steps)` entry, all using layer `kind`.
    pub fn new(
        cluster: Cluster,
        kind: LayerKind,
        programs: Vec<(ClientId, Vec<Step>)>,
    ) -> Result<Self, ExecError> {
        let mut receiver = BTreeMap::new();
        let mut senders = BTreeSet::new();
        let mut barrier_size: BTreeMap<u64, usize> = BTreeMap::new();
        for (p, (client, steps)) in programs.iter().enumerate() {
            cluster.index_of(*client)?;
            let mut barriers = BTreeSet::new();
            for s in steps {
                match s {
                    Step::Recv { tag } if receiver.insert(*tag, p).is_some() => {
                        return Err(ExecError::BadSteps(format!("tag {tag} received twice")));
                    }
                    Step::Send { tag, .. } if !senders.insert(*tag) => {
                        return Err(ExecError::BadSteps(format!("tag {tag} sent twice")));
                    }
                    Step::Barrier { id } if !barriers.insert(*id) => {
                        return Err(ExecError::BadSteps(format!(
                            "process {p} enters barrier {id} twice"
                        )));
                    }
                    Step::Barrier { id } => *barrier_size.entry(*id).or_default() += 1,
                    _ => {}
                }
            }
        }
        if let Some(t) = senders.iter().find(|t| !receiver.contains_key(t)) {
            return Err(ExecError::BadSteps(format!("tag {t} is never received")));
        }
        let procs = programs
            .into_iter()
            .map(|(client, steps)| Proc {
                client,
                steps,
                pc: 0,
                handles: BTreeMap::new(),
                waiting: false,
                log: ProcessLog::default(),
                events: Vec::new(),
            })
            .collect();
        Ok(Self {
            cluster,
            kind,
            procs,
            receiver,
            sent: BTreeMap::new(),
            barrier_size,
            arrived: BTreeMap::new(),
            ops: Vec::new(),
        })
    }

    pub fn cluster(&self) -> &Cluster {
        &self.cluster
    }

    pub fn cluster_mut(&mut self) -> &mut Cluster {
        &mut self.cluster
    }

    pub fn into_cluster(self) -> Cluster {
        self.cluster
    }

    pub fn log(&self, process: usize) -> &ProcessLog {
        &self.procs[process].log
    }

    pub fn logs(&self) -> impl Iterator<Item = &ProcessLog> + '_ {
        self.procs.iter().map(|p| &p.log)
    }

    /// Runs every process to completion; returns the latest finish time.
    pub fn run(&mut self) -> Result<SimTime, ExecError> {
        for p in 0..self.procs.len() {
            let t = self.cluster.clock(self.procs[p].client)?;
            self.cluster.fabric_mut().schedule_wake(t, p as u32);
        }
        while let Some(p) = self.cluster.fabric_mut().next_wake() {
            self.step(p as usize)?;
        }
        let blocked: Vec<u32> = (0..self.procs.len())
            .filter(|&p| self.procs[p].pc < self.procs[p].steps.len())
            .map(|p| p as u32)
            .collect();
        if !blocked.is_empty() {
            return Err(SimError::Deadlock(blocked).into());
        }
        Ok(self.procs.iter().map(|p| p.log.finished_at).max().unwrap_or(SimTime::ZERO))
    }

    fn handle(&mut self, p: usize, file: &str) -> Result<&mut LayerHandle, ExecError> {
        self.procs[p]
            .handles
            .get_mut(file)
            .ok_or_else(|| ExecError::BadSteps(format!("process {p} uses `{file}` before opening it")))
    }

    fn record(&mut self, p: usize, kind: RecordKind, file: &str, range: Option<ByteRange>, start: SimTime, undefined: bool) -> Result<(), ExecError> {
        let end = self.cluster.clock(self.procs[p].client)?;
        let idx = self.ops.len();
        self.ops.push(TraceOp {
            process: p as u32,
            kind,
            file: file.to_string(),
            range,
            start,
            end,
            undefined,
        });
        self.procs[p].events.push(ProgramEvent::Storage(idx));
        Ok(())
    }

    fn layer_call<T>(
        &mut self,
        p: usize,
        file: &str,
        f: impl FnOnce(&mut LayerHandle, &mut crate::basefs::Client<'_>) -> Result<T, LayerError>,
    ) -> Result<T, ExecError> {
        let pc = self.procs[p].pc;
        let client = self.procs[p].client;
        let mut h = self.handle(p, file)?.clone();
        let mut view = self.cluster.client(client)?;
        let out = f(&mut h, &mut view).map_err(|source| ExecError::Layer { process: p, step: pc, source })?;
        self.procs[p].handles.insert(file.to_string(), h);
        Ok(out)
    }

    fn advance(&mut self, p: usize) -> Result<(), ExecError> {
        let proc = &mut self.procs[p];
        proc.pc += 1;
        let t = self.cluster.clock(proc.client)?;
        if proc.pc < proc.steps.len() {
            self.cluster.fabric_mut().schedule_wake(t, p as u32);
        } else {
            proc.log.finished_at = t;
        }
        Ok(())
    }

    fn step(&mut self, p: usize) -> Result<(), ExecError> {
        let now = self.cluster.fabric().now();
        let client = self.procs[p].client;
        let start = self.cluster.advance_clock(client, now)?;
        let pc = self.procs[p].pc;
        let step = self.procs[p].steps[pc].clone();
        let me = Entity::Client(self.cluster.index_of(client)? as u32);
        match step {
            Step::Open { file } => {
                let kind = self.kind;
                let mut view = self.cluster.client(client)?;
                let h = LayerHandle::open(&mut view, kind, &file)
                    .map_err(|source| ExecError::Layer { process: p, step: pc, source })?;
                self.procs[p].handles.insert(file, h);
            }
            Step::Write { file, offset, data } => {
                let len = data.len();
                self.layer_call(p, &file, |h, v| h.write(v, offset, data))?;
                if len > 0 {
                    let range = ByteRange::from_offset_size(offset, len).map_err(KernelError::from)?;
                    self.record(p, RecordKind::Write, &file, Some(range), start, false)?;
                }
            }
            Step::Read { file, offset, len } => {
                let out = self.layer_call(p, &file, |h, v| h.read(v, offset, len))?;
                let range = ByteRange::from_offset_size(offset, len).map_err(KernelError::from)?;
                self.record(p, RecordKind::Read, &file, Some(range), start, out.undefined)?;
                self.procs[p].log.reads.push((pc, out));
            }
            Step::Commit { file } => {
                self.layer_call(p, &file, |h, v| h.commit(v))?;
                self.record(p, RecordKind::Sync("commit".into()), &file, None, start, false)?;
            }
            Step::SessionOpen { file } => {
                self.layer_call(p, &file, |h, v| h.session_open(v))?;
                self.record(p, RecordKind::Sync("session_open".into()), &file, None, start, false)?;
            }
            Step::SessionClose { file } => {
                self.layer_call(p, &file, |h, v| h.session_close(v))?;
                self.record(p, RecordKind::Sync("session_close".into()), &file, None, start, false)?;
            }
            Step::Close { file } => {
                let h = self.handle(p, &file)?.clone();
                let in_session = h.in_session();
                let mut view = self.cluster.client(client)?;
                h.close(&mut view)
                    .map_err(|source| ExecError::Layer { process: p, step: pc, source })?;
                self.procs[p].handles.remove(&file);
                if in_session {
                    self.record(p, RecordKind::Sync("session_close".into()), &file, None, start, false)?;
                }
            }
            Step::Send { tag, bytes } => {
                let q = self.receiver[&tag];
                let to = Entity::Client(self.cluster.index_of(self.procs[q].client)? as u32);
                let at = self.cluster.fabric_mut().send_rpc_at(me, to, MsgKind::Transfer, bytes, start)?;
                self.sent.insert(tag, at);
                self.procs[p].events.push(ProgramEvent::Send(tag));
                if self.procs[q].waiting {
                    self.procs[q].waiting = false;
                    self.cluster.fabric_mut().schedule_wake(at, q as u32);
                }
            }
            Step::Recv { tag } => match self.sent.get(&tag) {
                Some(&at) => {
                    self.cluster.advance_clock(client, at)?;
                    self.procs[p].events.push(ProgramEvent::Recv(tag));
                }
                None => {
                    self.procs[p].waiting = true;
                    return Ok(());
                }
            },
            Step::Barrier { id } => {
                let arrived = self.arrived.entry(id).or_default();
                arrived.push(p);
                if arrived.len() < self.barrier_size[&id] {
                    return Ok(());
                }
                let members = self.arrived.remove(&id).expect("present");
                let mut latest = SimTime::ZERO;
                for &q in &members {
                    latest = latest.max(self.cluster.clock(self.procs[q].client)?);
                }
                let release = latest + self.cluster.fabric().rpc_cost(0);
                for q in members {
                    self.cluster.advance_clock(self.procs[q].client, release)?;
                    self.procs[q].events.push(ProgramEvent::Barrier(id));
                    self.advance(q)?;
                }
                return Ok(());
            }
            Step::Mark { label } => self.procs[p].log.marks.push((label, start)),
            Step::Compute { duration } => {
                self.cluster.advance_clock(client, start + duration)?;
            }
            Step::DeviceIo { device, dir, bytes } => {
                let dev = match device {
                    Device::LocalSsd => DeviceId::ssd(client.node),
                    Device::LocalMemory => DeviceId::memory(client.node),
                    Device::Pfs => DeviceId::pfs(),
                };
                let done = self.cluster.fabric_mut().device_io_at(dev, dir, bytes, start, me);
                self.cluster.advance_clock(client, done)?;
            }
            Step::CopyToNode { node, bytes } => {
                let target = self.cluster.index_of(ClientId::new(node, 0))?;
                let them = Entity::Client(target as u32);
                let fabric = self.cluster.fabric_mut();
                let arrive = fabric.send_rpc_at(me, them, MsgKind::Transfer, bytes, start)?;
                let done = fabric.device_io_at(DeviceId::memory(node), Direction::Write, bytes, arrive, them);
                self.cluster.advance_clock(client, done)?;
            }
        }
        self.advance(p)
    }

    /// Synchronization edges between recorded ops, derived from the
    /// messages and barriers that connected them.
    pub fn so_edges(&self) -> Vec<(usize, usize)> {
        let events: Vec<Vec<ProgramEvent>> = self.procs.iter().map(|p| p.events.clone()).collect();
        project_so(&events)
    }

    /// The layer-level trace: ops in execution order, then so edges.
    pub fn trace_records(&self) -> Vec<TraceRecord> {
        let mut out: Vec<TraceRecord> = self
            .ops
            .iter()
            .enumerate()
            .map(|(i, o)| {
                TraceRecord::Op(OpRecord {
                    seq: i as u64,
                    process: o.process,
                    kind: o.kind.clone(),
                    file: o.file.clone(),
                    range: o.range,
                    start: o.start,
                    end: o.end,
                    undefined: o.undefined,
                })
            })
            .collect();
        let base = out.len() as u64;
        out.extend(self.so_edges().into_iter().enumerate().map(|(i, (a, b))| {
            TraceRecord::So(SoRecord { seq: base + i as u64, from: a as u64, to: b as u64 })
        }));
        out
    }

    pub fn execution_trace(&self) -> Result<ExecutionTrace, ExecError> {
        let ops = self
            .ops
            .iter()
            .enumerate()
            .map(|(i, o)| StorageOp {
                id: i as u64,
                process: o.process,
                kind: match &o.kind {
                    RecordKind::Read => OpKind::Read,
                    RecordKind::Write => OpKind::Write,
                    RecordKind::Sync(n) => OpKind::Sync(n.clone()),
                },
                file: o.file.clone(),
                range: o.range,
            })
            .collect();
        Ok(ExecutionTrace::new(ops, self.so_edges())?)
    }
}

/// Steps that run `program` under `kind`: each process first opens every
/// file it touches. Returns the steps and, per process, how many open steps
/// were put in front.
pub fn program_steps(program: &Program) -> Result<Vec<(Vec<Step>, usize)>, ExecError> {
    program.validate()?;
    program
        .processes
        .iter()
        .map(|ops| {
            let files: BTreeSet<&String> = ops
                .iter()
                .filter_map(|op| match op {
                    ProgOp::Write { file, .. } | ProgOp::Read { file, .. } | ProgOp::Sync { file, .. } => Some(file),
                    _ => None,
                })
                .collect();
            let mut steps: Vec<Step> = files.iter().map(|f| Step::Open { file: (*f).clone() }).collect();
            let lead = steps.len();
            for op in ops {
                steps.push(match op {
                    ProgOp::Write { file, offset, data } => Step::write(file, *offset, data.clone()),
                    ProgOp::Read { file, offset, len } => Step::read(file, *offset, *len),
                    ProgOp::Sync { name, file } => match name.as_str() {
                        "commit" => Step::Commit { file: file.clone() },
                        "session_open" => Step::SessionOpen { file: file.clone() },
                        "session_close" => Step::SessionClose { file: file.clone() },
                        other => {
                            return Err(ExecError::BadSteps(format!(
                                "no layer implements sync op `{other}`"
                            )))
                        }
                    },
                    ProgOp::Send { tag } => Step::Send { tag: *tag, bytes: 0 },
                    ProgOp::Recv { tag } => Step::Recv { tag: *tag },
                });
            }
            Ok((steps, lead))
        })
        .collect()
}

/// Rebuilds per-process steps from a layer-level trace so it can be run
/// again. Every so edge becomes a zero-byte message sent right after its
/// source op and received right before its target. Processes come out in
/// ascending id order, paired with their id.
pub fn replay_steps(records: &[TraceRecord]) -> Result<Vec<(u32, Vec<Step>)>, ExecError> {
    let mut ops: BTreeMap<u32, Vec<&OpRecord>> = BTreeMap::new();
    let mut where_is = BTreeMap::new();
    for r in records {
        if let TraceRecord::Op(o) = r {
            let list = ops.entry(o.process).or_default();
            where_is.insert(o.seq, (o.process, list.len()));
            list.push(o);
        }
    }
    let mut sends: BTreeMap<(u32, usize), Vec<u64>> = BTreeMap::new();
    let mut recvs: BTreeMap<(u32, usize), Vec<u64>> = BTreeMap::new();
    for r in records {
        if let TraceRecord::So(e) = r {
            let find = |id: u64| {
                where_is.get(&id).copied().ok_or_else(|| {
                    ExecError::BadSteps(format!("so record {} names missing op {id}", e.seq))
                })
            };
            sends.entry(find(e.from)?).or_default().push(e.seq);
            recvs.entry(find(e.to)?).or_default().push(e.seq);
        }
    }
    let mut out = Vec::new();
    for (process, list) in ops {
        let files: BTreeSet<&String> = list.iter().map(|o| &o.file).collect();
        let mut steps: Vec<Step> = files.into_iter().map(|f| Step::Open { file: f.clone() }).collect();
        for (i, o) in list.iter().enumerate() {
            for &tag in recvs.get(&(process, i)).into_iter().flatten() {
                steps.push(Step::Recv { tag });
            }
            let file = o.file.clone();
            let range = |o: &OpRecord| {
                o.range.ok_or_else(|| ExecError::BadSteps(format!("op {} has no range", o.seq)))
            };
            steps.push(match &o.kind {
                RecordKind::Write => {
                    let r = range(o)?;
                    Step::Write { file, offset: r.start(), data: Payload::Sized(r.len()) }
                }
                RecordKind::Read => {
                    let r = range(o)?;
                    Step::Read { file, offset: r.start(), len: r.len() }
                }
                RecordKind::Sync(n) => match n.as_str() {
                    "commit" => Step::Commit { file },
                    "session_open" => Step::SessionOpen { file },
                    "session_close" => Step::SessionClose { file },
                    other => {
                        return Err(ExecError::BadSteps(format!("cannot replay sync op `{other}`")))
                    }
                },
            });
            for &tag in sends.get(&(process, i)).into_iter().flatten() {
                steps.push(Step::Send { tag, bytes: 0 });
            }
        }
        out.push((process, steps));
    }
    Ok(out)
}

/// Runs a trace again under `kind`, one process per node, and returns the
/// finished world.
pub fn replay(records: &[TraceRecord], kind: LayerKind, config: SimConfig) -> Result<World, ExecError> {
    let steps = replay_steps(records)?;
    let cluster = Cluster::new(config, (steps.len() as u32).max(1), 1, BufferTier::Ssd, false);
    let programs = steps
        .into_iter()
        .enumerate()
        .map(|(node, (_, s))| (ClientId::new(node as u32, 0), s))
        .collect();
    let mut world = World::new(cluster, kind, programs)?;
    world.run()?;
    Ok(world)
}

/// Result of running a small program on the simulated stack.
#[derive(Debug, Clone)]
pub struct ProgramRun {
    /// Same shape as the SC oracle's outcomes.
    pub outcome: Outcome,
    /// The recorded layer-level execution.
    pub trace: ExecutionTrace,
    pub records: Vec<TraceRecord>,
}

/// Runs `program` with one process per node under `kind`. Final file
/// contents are read afterwards by a fresh client that starts after every
/// process has finished.
pub fn run_program(program: &Program, kind: LayerKind, config: SimConfig) -> Result<ProgramRun, ExecError> {
    let steps = program_steps(program)?;
    let n = steps.len() as u32;
    let cluster = Cluster::new(config, n.max(1), 1, BufferTier::Ssd, true);
    let leads: Vec<usize> = steps.iter().map(|(_, l)| *l).collect();
    let programs = steps
        .into_iter()
        .enumerate()
        .map(|(p, (s, _))| (ClientId::new(p as u32, 0), s))
        .collect();
    let mut world = World::new(cluster, kind, programs)?;
    let end = world.run()?;

    let mut outcome = Outcome::default();
    for (p, log) in world.logs().enumerate() {
        for (step, out) in &log.reads {
            let bytes = out.data.bytes().expect("materialized").to_vec();
            outcome.reads.insert((p as u32, step - leads[p]), bytes);
        }
    }
    let files: BTreeSet<String> = program
        .processes
        .iter()
        .flatten()
        .filter_map(|op| match op {
            ProgOp::Write { file, .. } | ProgOp::Read { file, .. } => Some(file.clone()),
            _ => None,
        })
        .collect();
    let records = world.trace_records();
    let trace = world.execution_trace()?;
    let mut cluster = world.into_cluster();
    let observer = cluster.add_client(0);
    cluster.advance_clock(observer, end)?;
    let mut view = cluster.client(observer)?;
    for file in files {
        let lift = |source| ExecError::Layer { process: n as usize, step: 0, source };
        let mut h = LayerHandle::open(&mut view, kind, &file).map_err(lift)?;
        if kind == LayerKind::Session {
            h.session_open(&mut view).map_err(lift)?;
        }
        let size = crate::basefs::BaseFs::bfs_stat(&mut view, h.kernel_handle())?;
        if size > 0 {
            let out = h.read(&mut view, 0, size).map_err(lift)?;
            outcome.files.insert(file, out.data.bytes().expect("materialized").to_vec());
        }
    }
    Ok(ProgramRun { outcome, trace, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_properly_synchronized, enumerate_sc_results, load_builtin_model};

    fn w(off: u64, v: u8) -> ProgOp {
        ProgOp::Write { file: "f".into(), offset: off, data: vec![v] }
    }
    fn r(off: u64) -> ProgOp {
        ProgOp::Read { file: "f".into(), offset: off, len: 1 }
    }
    fn sync(name: &str) -> ProgOp {
        ProgOp::Sync { name: name.into(), file: "f".into() }
    }

    #[test]
    fn commit_handoff_is_race_free_and_sc() {
        let prog = Program::new(vec![
            vec![w(0, 7), sync("commit"), ProgOp::Send { tag: 1 }],
            vec![ProgOp::Recv { tag: 1 }, r(0)],
        ])
        .unwrap();
        let run = run_program(&prog, LayerKind::Commit, SimConfig::default()).unwrap();
        let model = load_builtin_model("commit").unwrap();
        let reports = check_properly_synchronized(&run.trace, &model).unwrap();
        assert!(reports.iter().all(|r| !r.is_race()), "{reports:?}");
        assert_eq!(run.outcome.reads[&(1, 1)], vec![7]);
        assert!(enumerate_sc_results(&prog).unwrap().contains(&run.outcome));
    }

    #[test]
    fn missing_commit_is_a_race() {
        let prog = Program::new(vec![
            vec![w(0, 7), ProgOp::Send { tag: 1 }, sync("commit")],
            vec![ProgOp::Recv { tag: 1 }, r(0)],
        ])
        .unwrap();
        let run = run_program(&prog, LayerKind::Commit, SimConfig::default()).unwrap();
        let model = load_builtin_model("commit").unwrap();
        let reports = check_properly_synchronized(&run.trace, &model).unwrap();
        assert!(reports.iter().any(|r| r.is_race()));
    }

    #[test]
    fn late_commit_leaves_reader_with_stale_bytes() {
        let cluster = Cluster::new(SimConfig::default(), 2, 1, BufferTier::Ssd, true);
        let f = || Step::Open { file: "f".into() };
        let programs = vec![
            (
                ClientId::new(0, 0),
                vec![
                    f(),
                    Step::write("f", 0, vec![7]),
                    Step::Send { tag: 1, bytes: 0 },
                    Step::Compute { duration: SimTime::from_secs(1e-2) },
                    Step::Commit { file: "f".into() },
                ],
            ),
            (ClientId::new(1, 0), vec![f(), Step::Recv { tag: 1 }, Step::read("f", 0, 1)]),
        ];
        let mut world = World::new(cluster, LayerKind::Commit, programs).unwrap();
        world.run().unwrap();
        assert_eq!(world.log(1).reads[0].1.data, Payload::Bytes(vec![0]));
    }

    #[test]
    fn barrier_releases_after_latest_arrival() {
        let cluster = Cluster::new(SimConfig::default(), 2, 1, BufferTier::Ssd, false);
        let programs = vec![
            (ClientId::new(0, 0), vec![Step::Compute { duration: SimTime::from_secs(1e-3) }, Step::Barrier { id: 0 }, Step::mark("after")]),
            (ClientId::new(1, 0), vec![Step::Barrier { id: 0 }, Step::mark("after")]),
        ];
        let mut world = World::new(cluster, LayerKind::Posix, programs).unwrap();
        world.run().unwrap();
        let expect = SimTime::from_secs(1e-3) + world.cluster().fabric().rpc_cost(0);
        assert_eq!(world.log(0).mark("after"), Some(expect));
        assert_eq!(world.log(1).mark("after"), Some(expect));
    }

    #[test]
    fn unmatched_recv_deadlocks() {
        let cluster = Cluster::new(SimConfig::default(), 2, 1, BufferTier::Ssd, false);
        let programs = vec![
            (ClientId::new(0, 0), vec![Step::Recv { tag: 1 }]),
            (ClientId::new(1, 0), vec![Step::Recv { tag: 2 }, Step::Send { tag: 1, bytes: 0 }]),
        ];
        let mut world = World::new(cluster, LayerKind::Posix, programs).unwrap();
        assert_eq!(world.run(), Err(ExecError::Sim(SimError::Deadlock(vec![0, 1]))));
    }

    #[test]
    fn replay_reproduces_the_trace() {
        let program = Program::new(vec![
            vec![w(0, 7), ProgOp::Sync { name: "commit".into(), file: "f".into() }, ProgOp::Send { tag: 1 }],
            vec![ProgOp::Recv { tag: 1 }, ProgOp::Read { file: "f".into(), offset: 0, len: 1 }],
        ])
        .unwrap();
        let first = run_program(&program, LayerKind::Commit, SimConfig::default()).unwrap();
        let again = replay(&first.records, LayerKind::Commit, SimConfig::default()).unwrap();
        let strip = |rs: Vec<TraceRecord>| -> Vec<String> {
            rs.into_iter()
                .map(|r| match r {
                    TraceRecord::Op(o) => format!("{} {:?} {:?}", o.process, o.kind, o.range),
                    TraceRecord::So(e) => format!("{}->{}", e.from, e.to),
                })
                .collect()
        };
        assert_eq!(strip(again.trace_records()), strip(first.records));
    }
}
