//! Small hand-checked executions with known verdicts.
//!
//! Each case is a trace, the model to judge it under, and the exact set of
//! conflicting pairs that must come out as races (by op label).

use super::{ExecutionTrace, ModelError, OpKind, StorageOp};
use crate::range::ByteRange;

#[derive(Debug, Clone)]
pub struct LitmusCase {
    pub name: &'static str,
    pub model: &'static str,
    pub trace: ExecutionTrace,
    /// Label of every op, indexed by op id.
    pub labels: Vec<&'static str>,
    /// Racing pairs, each as (earlier label, later label) in op-id order.
    pub races: Vec<(&'static str, &'static str)>,
}

impl LitmusCase {
    pub fn label(&self, id: u64) -> &'static str {
        self.labels[id as usize]
    }
}

#[derive(Default)]
struct Builder {
    ops: Vec<StorageOp>,
    labels: Vec<&'static str>,
    so: Vec<(usize, usize)>,
}

impl Builder {
    fn push(&mut self, label: &'static str, process: u32, kind: OpKind, file: &str, range: Option<ByteRange>) -> usize {
        let id = self.ops.len();
        self.ops.push(StorageOp { id: id as u64, process, kind, file: file.into(), range });
        self.labels.push(label);
        id
    }

    fn w(&mut self, label: &'static str, p: u32, file: &str) -> usize {
        self.push(label, p, OpKind::Write, file, Some(ByteRange::new(0, 8).expect("valid")))
    }

    fn r(&mut self, label: &'static str, p: u32, file: &str) -> usize {
        self.push(label, p, OpKind::Read, file, Some(ByteRange::new(4, 12).expect("valid")))
    }

    fn s(&mut self, label: &'static str, p: u32, name: &str, file: &str) -> usize {
        self.push(label, p, OpKind::Sync(name.into()), file, None)
    }

    fn so(&mut self, a: usize, b: usize) -> &mut Self {
        self.so.push((a, b));
        self
    }

    fn case(
        self,
        name: &'static str,
        model: &'static str,
        races: &[(&'static str, &'static str)],
    ) -> Result<LitmusCase, ModelError> {
        Ok(LitmusCase {
            name,
            model,
            trace: ExecutionTrace::new(self.ops, self.so)?,
            labels: self.labels,
            races: races.to_vec(),
        })
    }
}

/// Two processes each write one file and read the other's (the classic
/// store-then-load pattern), with no ordering between them.
fn load_after_store() -> Result<LitmusCase, ModelError> {
    let mut b = Builder::default();
    b.w("P0.write x", 0, "x");
    b.r("P0.read y", 0, "y");
    b.w("P1.write y", 1, "y");
    b.r("P1.read x", 1, "x");
    b.case("load_after_store", "posix", &[("P0.write x", "P1.read x"), ("P0.read y", "P1.write y")])
}

/// Data written, then a flag written; the other side reads the flag, then
/// the data.
fn flag_handoff(ordered: bool) -> Result<LitmusCase, ModelError> {
    let mut b = Builder::default();
    b.w("P0.write data", 0, "data");
    let wf = b.w("P0.write flag", 0, "flag");
    let rf = b.r("P1.read flag", 1, "flag");
    b.r("P1.read data", 1, "data");
    if ordered {
        b.so(wf, rf);
        b.case("flag_handoff_ordered", "posix", &[])
    } else {
        b.case(
            "flag_handoff_unordered",
            "posix",
            &[("P0.write data", "P1.read data"), ("P0.write flag", "P1.read flag")],
        )
    }
}

/// Two files, only one of them committed. Reading the committed one is
/// fine; reading the other is not.
fn per_file_commit(read_other: bool) -> Result<LitmusCase, ModelError> {
    let mut b = Builder::default();
    b.w("P0.write w", 0, "w");
    b.w("P0.write x", 0, "x");
    let c = b.s("P0.commit x", 0, "commit", "x");
    let rx = b.r("P1.read x", 1, "x");
    b.so(c, rx);
    if read_other {
        b.r("P1.read w", 1, "w");
        b.case("per_file_commit_other_file", "commit", &[("P0.write w", "P1.read w")])
    } else {
        b.case("per_file_commit_same_file", "commit", &[])
    }
}

fn posix_pair(ordered: bool) -> Result<LitmusCase, ModelError> {
    let mut b = Builder::default();
    let w = b.w("P0.write", 0, "f");
    let r = b.r("P1.read", 1, "f");
    if ordered {
        b.so(w, r);
        b.case("posix_ordered", "posix", &[])
    } else {
        b.case("posix_unordered", "posix", &[("P0.write", "P1.read")])
    }
}

fn commit_by_writer() -> Result<LitmusCase, ModelError> {
    let mut b = Builder::default();
    b.w("P0.write", 0, "f");
    let c = b.s("P0.commit", 0, "commit", "f");
    let r = b.r("P1.read", 1, "f");
    b.so(c, r);
    b.case("commit_by_writer", "commit", &[])
}

/// The writer hands off to P1, which commits, then P2 reads.
fn commit_by_third(model: &'static str) -> Result<LitmusCase, ModelError> {
    let mut b = Builder::default();
    let w = b.w("P0.write", 0, "f");
    let c = b.s("P1.commit", 1, "commit", "f");
    let r = b.r("P2.read", 2, "f");
    b.so(w, c).so(c, r);
    if model == "commit" {
        b.case("commit_by_third_process", model, &[("P0.write", "P2.read")])
    } else {
        b.case("commit_relaxed_by_third_process", model, &[])
    }
}

fn commit_missing() -> Result<LitmusCase, ModelError> {
    let mut b = Builder::default();
    let w = b.w("P0.write", 0, "f");
    let r = b.r("P1.read", 1, "f");
    b.so(w, r);
    b.case("commit_missing", "commit", &[("P0.write", "P1.read")])
}

fn session(ordered: bool) -> Result<LitmusCase, ModelError> {
    let mut b = Builder::default();
    b.w("P0.write", 0, "f");
    let c = b.s("P0.close", 0, "session_close", "f");
    let o = b.s("P1.open", 1, "session_open", "f");
    b.r("P1.read", 1, "f");
    if ordered {
        b.so(c, o);
        b.case("session_close_open", "session", &[])
    } else {
        b.case("session_no_order", "session", &[("P0.write", "P1.read")])
    }
}

fn session_close_by_third() -> Result<LitmusCase, ModelError> {
    let mut b = Builder::default();
    let w = b.w("P0.write", 0, "f");
    let c = b.s("P1.close", 1, "session_close", "f");
    let o = b.s("P2.open", 2, "session_open", "f");
    b.r("P2.read", 2, "f");
    b.so(w, c).so(c, o);
    b.case("session_close_by_third_process", "session", &[("P0.write", "P2.read")])
}

fn session_read_before_open() -> Result<LitmusCase, ModelError> {
    let mut b = Builder::default();
    b.w("P0.write", 0, "f");
    let c = b.s("P0.close", 0, "session_close", "f");
    b.r("P1.read", 1, "f");
    let o = b.s("P1.open", 1, "session_open", "f");
    b.so(c, o);
    b.case("session_read_before_open", "session", &[("P0.write", "P1.read")])
}

fn mpiio(first: &'static str, second: &'static str, name: &'static str) -> Result<LitmusCase, ModelError> {
    let mut b = Builder::default();
    b.w("P0.write", 0, "f");
    let s1 = b.s("P0.s1", 0, first, "f");
    let s2 = b.s("P1.s2", 1, second, "f");
    b.r("P1.read", 1, "f");
    b.so(s1, s2);
    b.case(name, "mpiio", &[])
}

fn mpiio_reader_unsynced() -> Result<LitmusCase, ModelError> {
    let mut b = Builder::default();
    b.w("P0.write", 0, "f");
    let s = b.s("P0.sync", 0, "MPI_File_sync", "f");
    let r = b.r("P1.read", 1, "f");
    b.so(s, r);
    b.case("mpiio_reader_without_sync", "mpiio", &[("P0.write", "P1.read")])
}

/// The full corpus, 20 cases.
pub fn litmus_corpus() -> Vec<LitmusCase> {
    [
        load_after_store(),
        flag_handoff(false),
        flag_handoff(true),
        per_file_commit(false),
        per_file_commit(true),
        posix_pair(true),
        posix_pair(false),
        commit_by_writer(),
        commit_by_third("commit"),
        commit_by_third("commit-relaxed"),
        commit_missing(),
        session(true),
        session(false),
        session_close_by_third(),
        session_read_before_open(),
        mpiio("MPI_File_close", "MPI_File_open", "mpiio_close_open"),
        mpiio("MPI_File_close", "MPI_File_sync", "mpiio_close_sync"),
        mpiio("MPI_File_sync", "MPI_File_sync", "mpiio_sync_sync"),
        mpiio("MPI_File_sync", "MPI_File_open", "mpiio_sync_open"),
        mpiio_reader_unsynced(),
    ]
    .into_iter()
    .collect::<Result<_, _>>()
    .expect("litmus cases are well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_properly_synchronized, load_builtin_model};

    #[test]
    fn corpus_verdicts() {
        let corpus = litmus_corpus();
        assert_eq!(corpus.len(), 20);
        for case in &corpus {
            let model = load_builtin_model(case.model).unwrap();
            let mut got: Vec<_> = check_properly_synchronized(&case.trace, &model)
                .unwrap()
                .into_iter()
                .filter(|r| r.is_race())
                .map(|r| (case.label(r.first), case.label(r.second)))
                .collect();
            got.sort();
            let mut want = case.races.clone();
            want.sort();
            assert_eq!(got, want, "{}", case.name);
        }
    }
}
