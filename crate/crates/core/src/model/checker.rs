use std::fmt;

use serde::Serialize;

use super::{build_hb, match_msc, ExecutionTrace, HbRelation, ModelDef, ModelError, OpKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ProperlySynchronized,
    Race,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `from` is a read that happens before `to`.
    ReadHappensBefore { from: u64, to: u64 },
    /// An MSC instance from `from` to `to`; `syncs` are the matched op ids.
    Msc {
        from: u64,
        to: u64,
        pattern: String,
        syncs: Vec<u64>,
    },
    /// Neither op happens before the other, so no construct can link them.
    Unordered,
    /// Ordered, but no clause holds in the ordered direction.
    NoConstruct { from: u64, to: u64 },
}

/// Verdict for one conflicting pair. `first` and `second` are op ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RaceReport {
    pub first: u64,
    pub second: u64,
    pub verdict: Verdict,
    pub witness: Witness,
}

impl RaceReport {
    pub fn is_race(&self) -> bool {
        self.verdict == Verdict::Race
    }

    pub fn describe(&self, trace: &ExecutionTrace) -> String {
        let find = |id| {
            trace
                .ops()
                .iter()
                .find(|o| o.id == id)
                .map(ToString::to_string)
                .unwrap_or_else(|| format!("#{id}"))
        };
        let what = match &self.witness {
            Witness::ReadHappensBefore { .. } => "read happens before".to_string(),
            Witness::Msc { pattern, syncs, .. } => format!("MSC `{pattern}` via {syncs:?}"),
            Witness::Unordered => "unordered by happens-before".to_string(),
            Witness::NoConstruct { .. } => "ordered but no MSC matches".to_string(),
        };
        let tag = match self.verdict {
            Verdict::Race => "race",
            Verdict::ProperlySynchronized => "ok",
        };
        format!("{tag}: {} vs {} ({what})", find(self.first), find(self.second))
    }
}

impl fmt::Display for RaceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} #{} #{}", self.verdict, self.first, self.second)
    }
}

/// Every unordered pair of same-file data ops whose ranges overlap and at
/// least one of which writes, as op indices `(a, b)` with `a < b`.
pub fn find_conflicts(trace: &ExecutionTrace) -> Vec<(usize, usize)> {
    let data: Vec<usize> = (0..trace.len()).filter(|&i| trace.op(i).is_data()).collect();
    let mut out = Vec::new();
    for (n, &a) in data.iter().enumerate() {
        let x = trace.op(a);
        for &b in &data[n + 1..] {
            let y = trace.op(b);
            if x.file != y.file || !(x.is_write() || y.is_write()) {
                continue;
            }
            if let (Some(rx), Some(ry)) = (x.range, y.range) {
                if rx.overlaps(&ry) {
                    out.push((a, b));
                }
            }
        }
    }
    out
}

/// The properly-synchronized relation in one direction, with its witness.
fn ps(
    trace: &ExecutionTrace,
    hb: &HbRelation,
    model: &ModelDef,
    x: usize,
    y: usize,
) -> Option<Witness> {
    let (xid, yid) = (trace.op(x).id, trace.op(y).id);
    match trace.op(x).kind {
        OpKind::Read => hb.hb(x, y).then_some(Witness::ReadHappensBefore { from: xid, to: yid }),
        OpKind::Write => model.patterns.iter().find_map(|p| {
            match_msc(trace, hb, x, y, p).map(|syncs| Witness::Msc {
                from: xid,
                to: yid,
                pattern: p.to_string(),
                syncs: syncs.iter().map(|&s| trace.op(s).id).collect(),
            })
        }),
        OpKind::Sync(_) => None,
    }
}

/// Classifies every conflicting pair of the execution under `model`.
pub fn check_properly_synchronized(
    trace: &ExecutionTrace,
    model: &ModelDef,
) -> Result<Vec<RaceReport>, ModelError> {
    for op in trace.ops() {
        if let Some(name) = op.sync_name() {
            if !model.sync_ops.contains(name) {
                return Err(ModelError::UnknownSyncOp {
                    op: op.id,
                    name: name.to_string(),
                });
            }
        }
    }
    let hb = build_hb(trace)?;
    let reports = find_conflicts(trace)
        .into_iter()
        .map(|(a, b)| {
            let (first, second) = (trace.op(a).id, trace.op(b).id);
            let found = ps(trace, &hb, model, a, b).or_else(|| ps(trace, &hb, model, b, a));
            match found {
                Some(witness) => RaceReport {
                    first,
                    second,
                    verdict: Verdict::ProperlySynchronized,
                    witness,
                },
                None => RaceReport {
                    first,
                    second,
                    verdict: Verdict::Race,
                    witness: if hb.hb(a, b) {
                        Witness::NoConstruct { from: first, to: second }
                    } else if hb.hb(b, a) {
                        Witness::NoConstruct { from: second, to: first }
                    } else {
                        Witness::Unordered
                    },
                },
            }
        })
        .collect();
    Ok(reports)
}
