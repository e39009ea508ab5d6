//! Exhaustive sequential-consistency oracle for small programs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use super::{ModelError, ProgOp, Program};

pub const MAX_PROCESSES: usize = 4;
pub const MAX_OPS_PER_PROCESS: usize = 8;

/// Result of one execution: what every read returned, keyed by
/// `(process, op index)`, and the final contents of every non-empty file.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Outcome {
    pub reads: BTreeMap<(u32, usize), Vec<u8>>,
    pub files: BTreeMap<String, Vec<u8>>,
}

type Files = BTreeMap<String, Vec<u8>>;
type Key = (Vec<u8>, Vec<(String, Vec<u8>)>);

struct Enumerator<'a> {
    program: &'a Program,
    sends: HashMap<u64, (usize, usize)>,
    memo: HashMap<Key, Rc<BTreeSet<Outcome>>>,
}

impl Enumerator<'_> {
    fn enabled(&self, pcs: &[u8], p: usize) -> bool {
        match self.program.processes[p].get(pcs[p] as usize) {
            None => false,
            Some(ProgOp::Recv { tag }) => {
                let (sp, spos) = self.sends[tag];
                pcs[sp] as usize > spos
            }
            Some(_) => true,
        }
    }

    fn run(&mut self, pcs: &mut Vec<u8>, files: &mut Files) -> Rc<BTreeSet<Outcome>> {
        let key: Key = (
            pcs.clone(),
            files.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        );
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let done = (0..pcs.len()).all(|p| pcs[p] as usize == self.program.processes[p].len());
        let mut out = BTreeSet::new();
        if done {
            out.insert(Outcome {
                reads: BTreeMap::new(),
                files: files.iter().filter(|(_, v)| !v.is_empty()).map(|(k, v)| (k.clone(), v.clone())).collect(),
            });
        } else {
            for p in 0..pcs.len() {
                if !self.enabled(pcs, p) {
                    continue;
                }
                let at = pcs[p] as usize;
                let op = &self.program.processes[p][at];
                let mut read_value = None;
                let mut undo: Option<(String, Vec<u8>)> = None;
                match op {
                    ProgOp::Write { file, offset, data } => {
                        let buf = files.entry(file.clone()).or_default();
                        undo = Some((file.clone(), buf.clone()));
                        let end = *offset as usize + data.len();
                        if buf.len() < end {
                            buf.resize(end, 0);
                        }
                        buf[*offset as usize..end].copy_from_slice(data);
                    }
                    ProgOp::Read { file, offset, len } => {
                        let mut v = vec![0u8; *len as usize];
                        if let Some(buf) = files.get(file) {
                            for (i, b) in v.iter_mut().enumerate() {
                                if let Some(x) = buf.get(*offset as usize + i) {
                                    *b = *x;
                                }
                            }
                        }
                        read_value = Some(v);
                    }
                    _ => {}
                }
                pcs[p] += 1;
                let sub = self.run(pcs, files);
                pcs[p] -= 1;
                if let Some((file, old)) = undo {
                    if old.is_empty() {
                        files.remove(&file);
                    } else {
                        files.insert(file, old);
                    }
                }
                match read_value {
                    None => out.extend(sub.iter().cloned()),
                    Some(v) => out.extend(sub.iter().map(|o| {
                        let mut o = o.clone();
                        o.reads.insert((p as u32, at), v.clone());
                        o
                    })),
                }
            }
        }
        let out = Rc::new(out);
        self.memo.insert(key, out.clone());
        out
    }
}

/// All outcomes of sequentially consistent executions of `program`: every
/// interleaving that respects program order and message order, executed
/// against byte-array files that start out empty (unwritten bytes read as
/// zero). Identical outcomes are collapsed.
pub fn enumerate_sc_results(program: &Program) -> Result<BTreeSet<Outcome>, ModelError> {
    program.validate()?;
    if program.processes.len() > MAX_PROCESSES {
        return Err(ModelError::TooLarge(format!(
            "{} processes (limit {MAX_PROCESSES})",
            program.processes.len()
        )));
    }
    if let Some(ops) = program.processes.iter().map(Vec::len).find(|&l| l > MAX_OPS_PER_PROCESS) {
        return Err(ModelError::TooLarge(format!(
            "{ops} ops in one process (limit {MAX_OPS_PER_PROCESS})"
        )));
    }
    let mut sends = HashMap::new();
    for (p, ops) in program.processes.iter().enumerate() {
        for (i, op) in ops.iter().enumerate() {
            if let ProgOp::Send { tag } = op {
                sends.insert(*tag, (p, i));
            }
        }
    }
    let mut e = Enumerator {
        program,
        sends,
        memo: HashMap::new(),
    };
    let mut pcs = vec![0u8; program.processes.len()];
    let result = e.run(&mut pcs, &mut Files::new());
    if result.is_empty() {
        return Err(ModelError::CyclicOrder);
    }
    Ok((*result).clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(file: &str, off: u64, v: u8) -> ProgOp {
        ProgOp::Write { file: file.into(), offset: off, data: vec![v] }
    }
    fn r(file: &str, off: u64) -> ProgOp {
        ProgOp::Read { file: file.into(), offset: off, len: 1 }
    }

    #[test]
    fn single_process_has_one_outcome() {
        let p = Program::new(vec![vec![w("f", 0, 5), r("f", 0), w("f", 0, 6)]]).unwrap();
        let out = enumerate_sc_results(&p).unwrap();
        assert_eq!(out.len(), 1);
        let o = out.iter().next().unwrap();
        assert_eq!(o.reads[&(0, 1)], vec![5]);
        assert_eq!(o.files["f"], vec![6]);
    }

    #[test]
    fn disjoint_writers_commute() {
        let p = Program::new(vec![vec![w("f", 0, 1)], vec![w("f", 1, 2)]]).unwrap();
        let out = enumerate_sc_results(&p).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.iter().next().unwrap().files["f"], vec![1, 2]);
    }

    #[test]
    fn messages_constrain_interleavings() {
        let p = Program::new(vec![
            vec![w("f", 0, 9), ProgOp::Send { tag: 1 }],
            vec![ProgOp::Recv { tag: 1 }, r("f", 0)],
        ])
        .unwrap();
        let out = enumerate_sc_results(&p).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.iter().next().unwrap().reads[&(1, 1)], vec![9]);
    }

    #[test]
    fn guards_size_and_deadlock() {
        let big = Program::new(vec![vec![r("f", 0)]; 5]).unwrap();
        assert!(matches!(enumerate_sc_results(&big), Err(ModelError::TooLarge(_))));
        let long = Program::new(vec![vec![r("f", 0); 9]]).unwrap();
        assert!(matches!(enumerate_sc_results(&long), Err(ModelError::TooLarge(_))));
        let stuck = Program::new(vec![
            vec![ProgOp::Recv { tag: 2 }, ProgOp::Send { tag: 1 }],
            vec![ProgOp::Recv { tag: 1 }, ProgOp::Send { tag: 2 }],
        ])
        .unwrap();
        assert_eq!(enumerate_sc_results(&stuck), Err(ModelError::CyclicOrder));
    }
}
