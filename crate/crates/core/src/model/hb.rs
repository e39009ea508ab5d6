use std::collections::{HashMap, VecDeque};

use super::{ExecutionTrace, ModelError};

/// Happens-before: the transitive closure of program order and
/// synchronization order, stored as one reachability bitset per op.
#[derive(Debug, Clone)]
pub struct HbRelation {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl HbRelation {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `a` happens before `b`.
    pub fn hb(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    /// Either op happens before the other.
    pub fn ordered(&self, a: usize, b: usize) -> bool {
        self.hb(a, b) || self.hb(b, a)
    }

    fn set(&mut self, a: usize, b: usize) {
        self.bits[a * self.words + b / 64] |= 1 << (b % 64);
    }

    fn or_row(&mut self, dst: usize, src: usize) {
        let (w, d, s) = (self.words, dst * self.words, src * self.words);
        for k in 0..w {
            let v = self.bits[s + k];
            self.bits[d + k] |= v;
        }
    }
}

/// Direct successor edges: consecutive ops of each process plus `so`.
fn edges(trace: &ExecutionTrace) -> Vec<Vec<usize>> {
    let n = trace.len();
    let mut succ = vec![Vec::new(); n];
    let mut last: HashMap<u32, usize> = HashMap::new();
    for (i, op) in trace.ops().iter().enumerate() {
        if let Some(prev) = last.insert(op.process, i) {
            succ[prev].push(i);
        }
    }
    for &(a, b) in trace.so() {
        succ[a].push(b);
    }
    succ
}

pub fn build_hb(trace: &ExecutionTrace) -> Result<HbRelation, ModelError> {
    let n = trace.len();
    let succ = edges(trace);
    let mut indeg = vec![0usize; n];
    for s in &succ {
        for &b in s {
            indeg[b] += 1;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut ready: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    while let Some(v) = ready.pop_front() {
        order.push(v);
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.push_back(w);
            }
        }
    }
    if order.len() != n {
        return Err(ModelError::CyclicOrder);
    }
    let words = n.div_ceil(64).max(1);
    let mut rel = HbRelation {
        n,
        words,
        bits: vec![0; n * words],
    };
    for &v in order.iter().rev() {
        for &w in &succ[v] {
            rel.set(v, w);
            rel.or_row(v, w);
        }
    }
    Ok(rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{OpKind, StorageOp};
    use crate::range::ByteRange;

    fn data(id: u64, process: u32, kind: OpKind) -> StorageOp {
        StorageOp {
            id,
            process,
            kind,
            file: "f".into(),
            range: Some(ByteRange::new(0, 0).unwrap()),
        }
    }

    #[test]
    fn single_process_hb_is_po() {
        let ops = (0..4).map(|i| data(i, 0, OpKind::Write)).collect();
        let t = ExecutionTrace::new(ops, vec![]).unwrap();
        let hb = build_hb(&t).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(hb.hb(a, b), a < b);
            }
        }
    }

    #[test]
    fn weak_ordering_example() {
        // P1: x = 100 (0); flag = 1 (1)    P2: while(!flag) (2); y = x (3)
        let ops = vec![
            data(0, 1, OpKind::Write),
            StorageOp { range: None, ..data(1, 1, OpKind::Sync("flag".into())) },
            StorageOp { range: None, ..data(2, 2, OpKind::Sync("flag".into())) },
            data(3, 2, OpKind::Read),
        ];
        let t = ExecutionTrace::new(ops.clone(), vec![]).unwrap();
        assert!(!build_hb(&t).unwrap().ordered(0, 3));
        let t = ExecutionTrace::new(ops, vec![(1, 2)]).unwrap();
        let hb = build_hb(&t).unwrap();
        assert!(hb.hb(0, 3));
        assert!(!hb.hb(3, 0));
    }

    #[test]
    fn cycle_detected() {
        let ops = vec![
            data(0, 0, OpKind::Write),
            data(1, 0, OpKind::Write),
            data(2, 1, OpKind::Write),
            data(3, 1, OpKind::Write),
        ];
        assert_eq!(
            ExecutionTrace::new(ops, vec![(1, 2), (3, 0)]).unwrap_err(),
            ModelError::CyclicOrder
        );
    }
}
