use std::collections::{BTreeMap, HashMap, VecDeque};

use super::{ExecutionTrace, ModelError, OpKind, StorageOp};
use crate::range::ByteRange;

/// One step of a small multi-process I/O program.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProgOp {
    Write { file: String, offset: u64, data: Vec<u8> },
    Read { file: String, offset: u64, len: u64 },
    Sync { name: String, file: String },
    /// Message to whichever process receives `tag`.
    Send { tag: u64 },
    /// Blocks until the matching `Send` has happened.
    Recv { tag: u64 },
}

impl ProgOp {
    pub fn is_storage(&self) -> bool {
        matches!(self, ProgOp::Write { .. } | ProgOp::Read { .. } | ProgOp::Sync { .. })
    }
}

/// A program: one op list per process, in program order. Each `Send` tag is
/// received exactly once, by a different process; these pairs are the
/// program's synchronization order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub processes: Vec<Vec<ProgOp>>,
}

/// Per-process event, for deriving synchronization edges between storage
/// ops from the communication that connects them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProgramEvent {
    /// Index of a storage op in the trace being built.
    Storage(usize),
    Send(u64),
    Recv(u64),
    /// All processes carrying the same barrier id meet here.
    Barrier(u64),
}

impl Program {
    pub fn new(processes: Vec<Vec<ProgOp>>) -> Result<Self, ModelError> {
        let p = Self { processes };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut sends: HashMap<u64, usize> = HashMap::new();
        let mut recvs: HashMap<u64, usize> = HashMap::new();
        for (pid, ops) in self.processes.iter().enumerate() {
            for op in ops {
                match op {
                    ProgOp::Write { data, .. } if data.is_empty() => {
                        return Err(ModelError::BadProgram("empty write".into()))
                    }
                    ProgOp::Read { len: 0, .. } => {
                        return Err(ModelError::BadProgram("empty read".into()))
                    }
                    ProgOp::Send { tag } => {
                        if sends.insert(*tag, pid).is_some() {
                            return Err(ModelError::BadProgram(format!("tag {tag} sent twice")));
                        }
                    }
                    ProgOp::Recv { tag } => {
                        if recvs.insert(*tag, pid).is_some() {
                            return Err(ModelError::BadProgram(format!(
                                "tag {tag} received twice"
                            )));
                        }
                    }
                    _ => {}
                }
            }
        }
        for (tag, rp) in &recvs {
            match sends.get(tag) {
                None => {
                    return Err(ModelError::BadProgram(format!("tag {tag} is never sent")))
                }
                Some(sp) if sp == rp => {
                    return Err(ModelError::BadProgram(format!(
                        "tag {tag} sent and received by the same process"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn num_ops(&self) -> usize {
        self.processes.iter().map(Vec::len).sum()
    }

    /// The execution trace every run of this program produces: storage ops
    /// in process-major order, plus the synchronization edges implied by its
    /// messages. Also returns, per process, the trace index of each op (or
    /// `None` for message ops).
    pub fn to_trace(&self) -> Result<(ExecutionTrace, Vec<Vec<Option<usize>>>), ModelError> {
        self.validate()?;
        let mut ops = Vec::new();
        let mut events = Vec::new();
        let mut index = Vec::new();
        for (pid, prog) in self.processes.iter().enumerate() {
            let mut ev = Vec::new();
            let mut idx = Vec::new();
            for op in prog {
                let storage = match op {
                    ProgOp::Write { file, offset, data } => Some((
                        OpKind::Write,
                        file,
                        Some(ByteRange::from_offset_size(*offset, data.len() as u64).map_err(
                            |e| ModelError::BadProgram(e.to_string()),
                        )?),
                    )),
                    ProgOp::Read { file, offset, len } => Some((
                        OpKind::Read,
                        file,
                        Some(
                            ByteRange::from_offset_size(*offset, *len)
                                .map_err(|e| ModelError::BadProgram(e.to_string()))?,
                        ),
                    )),
                    ProgOp::Sync { name, file } => Some((OpKind::Sync(name.clone()), file, None)),
                    ProgOp::Send { tag } => {
                        ev.push(ProgramEvent::Send(*tag));
                        None
                    }
                    ProgOp::Recv { tag } => {
                        ev.push(ProgramEvent::Recv(*tag));
                        None
                    }
                };
                match storage {
                    Some((kind, file, range)) => {
                        let i = ops.len();
                        ops.push(StorageOp {
                            id: i as u64,
                            process: pid as u32,
                            kind,
                            file: file.clone(),
                            range,
                        });
                        ev.push(ProgramEvent::Storage(i));
                        idx.push(Some(i));
                    }
                    None => idx.push(None),
                }
            }
            events.push(ev);
            index.push(idx);
        }
        let so = project_so(&events);
        Ok((ExecutionTrace::new(ops, so)?, index))
    }
}

/// Derives synchronization edges between storage ops of different processes
/// from per-process event sequences. Storage op `u` gets an edge to the
/// earliest storage op of each other process reachable from it through
/// program order, messages and barriers.
pub fn project_so(per_process: &[Vec<ProgramEvent>]) -> Vec<(usize, usize)> {
    let mut node_of = Vec::new();
    let mut nodes = 0usize;
    for ev in per_process {
        node_of.push((nodes..nodes + ev.len()).collect::<Vec<_>>());
        nodes += ev.len();
    }
    let mut hubs: BTreeMap<(u8, u64), usize> = BTreeMap::new();
    let mut hub = |key: (u8, u64), nodes: &mut usize| {
        *hubs.entry(key).or_insert_with(|| {
            *nodes += 1;
            *nodes - 1
        })
    };
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut extra: Vec<(usize, usize)> = Vec::new();
    for (p, ev) in per_process.iter().enumerate() {
        for (j, e) in ev.iter().enumerate() {
            let n = node_of[p][j];
            if j + 1 < ev.len() {
                extra.push((n, node_of[p][j + 1]));
            }
            match *e {
                ProgramEvent::Send(tag) => {
                    let h = hub((0, tag), &mut nodes);
                    extra.push((n, h));
                }
                ProgramEvent::Recv(tag) => {
                    let h = hub((0, tag), &mut nodes);
                    extra.push((h, n));
                }
                ProgramEvent::Barrier(id) => {
                    let h = hub((1, id), &mut nodes);
                    extra.push((n, h));
                    if j + 1 < ev.len() {
                        extra.push((h, node_of[p][j + 1]));
                    }
                }
                ProgramEvent::Storage(_) => {}
            }
        }
    }
    succ.resize(nodes, Vec::new());
    for (a, b) in extra {
        succ[a].push(b);
    }
    // node -> (process, storage op index)
    let mut storage_at: Vec<Option<(usize, usize)>> = vec![None; nodes];
    for (p, ev) in per_process.iter().enumerate() {
        for (j, e) in ev.iter().enumerate() {
            if let ProgramEvent::Storage(i) = *e {
                storage_at[node_of[p][j]] = Some((p, i));
            }
        }
    }

    let mut edges = Vec::new();
    for (p, ev) in per_process.iter().enumerate() {
        for (j, e) in ev.iter().enumerate() {
            let ProgramEvent::Storage(src) = *e else { continue };
            // only the last storage op before a communication point can
            // reach further than its successors in program order do
            let next_comm = ev[j + 1..]
                .iter()
                .position(|e| !matches!(e, ProgramEvent::Storage(_)));
            let next_storage = ev[j + 1..]
                .iter()
                .position(|e| matches!(e, ProgramEvent::Storage(_)));
            match (next_comm, next_storage) {
                (Some(c), Some(s)) if c < s => {}
                (Some(_), None) => {}
                _ => continue,
            }
            let mut seen = vec![false; nodes];
            let mut first: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
            let mut queue = VecDeque::from([node_of[p][j]]);
            seen[node_of[p][j]] = true;
            while let Some(v) = queue.pop_front() {
                if let Some((q, op)) = storage_at[v] {
                    if q != p {
                        let pos = v - node_of[q][0];
                        let slot = first.entry(q).or_insert((pos, op));
                        if pos < slot.0 {
                            *slot = (pos, op);
                        }
                        continue;
                    }
                }
                for &w in &succ[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            for (_, (_, dst)) in first {
                edges.push((src, dst));
            }
        }
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_hb;

    fn w(off: u64) -> ProgOp {
        ProgOp::Write { file: "f".into(), offset: off, data: vec![1] }
    }
    fn r(off: u64) -> ProgOp {
        ProgOp::Read { file: "f".into(), offset: off, len: 1 }
    }

    #[test]
    fn message_chain_through_storage_free_process() {
        // P0: w; send 1     P1: recv 1; send 2     P2: recv 2; r
        let prog = Program::new(vec![
            vec![w(0), ProgOp::Send { tag: 1 }],
            vec![ProgOp::Recv { tag: 1 }, ProgOp::Send { tag: 2 }],
            vec![ProgOp::Recv { tag: 2 }, r(0)],
        ])
        .unwrap();
        let (trace, idx) = prog.to_trace().unwrap();
        let hb = build_hb(&trace).unwrap();
        let (wi, ri) = (idx[0][0].unwrap(), idx[2][1].unwrap());
        assert!(hb.hb(wi, ri));
        assert!(!hb.hb(ri, wi));
    }

    #[test]
    fn barrier_orders_everything_across_it() {
        let ev = vec![
            vec![ProgramEvent::Storage(0), ProgramEvent::Barrier(7), ProgramEvent::Storage(1)],
            vec![ProgramEvent::Storage(2), ProgramEvent::Barrier(7), ProgramEvent::Storage(3)],
        ];
        let mut so = project_so(&ev);
        so.sort();
        assert_eq!(so, vec![(0, 3), (2, 1)]);
    }

    #[test]
    fn rejects_bad_message_pairs() {
        assert!(Program::new(vec![vec![ProgOp::Recv { tag: 1 }]]).is_err());
        assert!(Program::new(vec![vec![ProgOp::Send { tag: 1 }, ProgOp::Recv { tag: 1 }]]).is_err());
        assert!(Program::new(vec![vec![ProgOp::Read { file: "f".into(), offset: 0, len: 0 }]]).is_err());
    }
}
