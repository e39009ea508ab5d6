//! Properly-synchronized consistency models and storage race detection.
//!
//! A model is a set of synchronization operation names plus one or more
//! minimum synchronization constructs (MSCs). Two conflicting data operations
//! are properly synchronized when the first is a read that happens before the
//! second, or the first is a write and some MSC of the model links the two in
//! happens-before order. Anything else is a storage race.

mod checker;
mod hb;
pub mod litmus;
mod msc;
mod program;
mod sc;

use std::fmt;

use thiserror::Error;

use crate::range::ByteRange;

pub use checker::{check_properly_synchronized, find_conflicts, RaceReport, Verdict, Witness};
pub use hb::{build_hb, HbRelation};
pub use msc::{load_builtin_model, match_msc, EdgeRel, ModelDef, MscPattern, BUILTIN_MODELS};
pub use program::{project_so, Program, ProgramEvent, ProgOp};
pub use sc::{enumerate_sc_results, Outcome, MAX_OPS_PER_PROCESS, MAX_PROCESSES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("program order plus synchronization order contains a cycle")]
    CyclicOrder,
    #[error("operation {op} uses synchronization `{name}` outside the model's set")]
    UnknownSyncOp { op: u64, name: String },
    #[error("unknown consistency model `{0}`")]
    UnknownModel(String),
    #[error("malformed operation {op}: {msg}")]
    MalformedOp { op: u64, msg: String },
    #[error("synchronization edge {from} -> {to} is invalid: {msg}")]
    InvalidSo { from: usize, to: usize, msg: String },
    #[error("program too large for exhaustive enumeration: {0}")]
    TooLarge(String),
    #[error("bad MSC pattern `{0}`")]
    BadPattern(String),
    #[error("bad program: {0}")]
    BadProgram(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OpKind {
    Read,
    Write,
    Sync(String),
}

/// One storage operation of an execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorageOp {
    pub id: u64,
    pub process: u32,
    pub kind: OpKind,
    /// The synchronization object: every op names the file it targets.
    pub file: String,
    pub range: Option<ByteRange>,
}

impl StorageOp {
    pub fn is_data(&self) -> bool {
        matches!(self.kind, OpKind::Read | OpKind::Write)
    }

    pub fn is_write(&self) -> bool {
        self.kind == OpKind::Write
    }

    pub fn sync_name(&self) -> Option<&str> {
        match &self.kind {
            OpKind::Sync(n) => Some(n),
            _ => None,
        }
    }
}

impl fmt::Display for StorageOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.kind, self.range) {
            (OpKind::Sync(n), _) => write!(f, "#{} P{} {}({})", self.id, self.process, n, self.file),
            (k, Some(r)) => write!(
                f,
                "#{} P{} {} {}{}",
                self.id,
                self.process,
                if *k == OpKind::Read { "read" } else { "write" },
                self.file,
                r
            ),
            (_, None) => write!(f, "#{} P{} <malformed>", self.id, self.process),
        }
    }
}

/// Operations of one execution with program order (list order within each
/// process) and synchronization order (explicit cross-process edges, as op
/// indices).
#[derive(Debug, Clone, Default)]
pub struct ExecutionTrace {
    ops: Vec<StorageOp>,
    so: Vec<(usize, usize)>,
    po_index: Vec<usize>,
}

impl ExecutionTrace {
    pub fn new(ops: Vec<StorageOp>, so: Vec<(usize, usize)>) -> Result<Self, ModelError> {
        for op in &ops {
            match (&op.kind, op.range) {
                (OpKind::Read | OpKind::Write, None) => {
                    return Err(ModelError::MalformedOp {
                        op: op.id,
                        msg: "data operation without a range".into(),
                    })
                }
                (OpKind::Sync(_), Some(_)) => {
                    return Err(ModelError::MalformedOp {
                        op: op.id,
                        msg: "synchronization operation with a range".into(),
                    })
                }
                _ => {}
            }
        }
        for &(from, to) in &so {
            if from >= ops.len() || to >= ops.len() {
                return Err(ModelError::InvalidSo {
                    from,
                    to,
                    msg: "endpoint out of range".into(),
                });
            }
            if ops[from].process == ops[to].process {
                return Err(ModelError::InvalidSo {
                    from,
                    to,
                    msg: "endpoints belong to the same process".into(),
                });
            }
        }
        let mut counters = std::collections::HashMap::new();
        let po_index = ops
            .iter()
            .map(|op| {
                let c = counters.entry(op.process).or_insert(0usize);
                *c += 1;
                *c - 1
            })
            .collect();
        let trace = Self { ops, so, po_index };
        build_hb(&trace)?;
        Ok(trace)
    }

    pub fn ops(&self) -> &[StorageOp] {
        &self.ops
    }

    pub fn op(&self, i: usize) -> &StorageOp {
        &self.ops[i]
    }

    pub fn so(&self) -> &[(usize, usize)] {
        &self.so
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Position of op `i` in its process's program order.
    pub fn po_index(&self, i: usize) -> usize {
        self.po_index[i]
    }

    /// `a` precedes `b` in the program order of one process.
    pub fn po(&self, a: usize, b: usize) -> bool {
        self.ops[a].process == self.ops[b].process && self.po_index[a] < self.po_index[b]
    }

    /// Same trace with extra synchronization edges.
    pub fn with_extra_so(&self, extra: &[(usize, usize)]) -> Result<Self, ModelError> {
        let mut so = self.so.clone();
        so.extend_from_slice(extra);
        Self::new(self.ops.clone(), so)
    }
}
