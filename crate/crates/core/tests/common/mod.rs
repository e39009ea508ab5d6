//! Oracles and generators shared by the integration tests and the
//! acceptance target.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scnf::exec::run_program;
use scnf::interval::{GlobalInterval, GlobalTree, IntervalError, LocalTree};
use scnf::layers::LayerKind;
use scnf::model::{
    check_properly_synchronized, enumerate_sc_results, load_builtin_model, EdgeRel,
    ExecutionTrace, ModelDef, OpKind, ProgOp, Program, StorageOp, BUILTIN_MODELS,
};
use scnf::sim::SimConfig;
use scnf::ByteRange;

pub const SPACE: u64 = 512;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rand_range(rng: &mut ChaCha8Rng) -> ByteRange {
    let start = rng.random_range(0..SPACE);
    let len = rng.random_range(1..=64);
    ByteRange::from_offset_size(start, len).unwrap()
}

// ---- interval trees against a per-byte array ----

/// Maximal runs of equal `Some` values inside `r`.
fn runs<T: Copy + PartialEq>(bytes: &[Option<T>], r: ByteRange, joins: impl Fn(T, T) -> bool) -> Vec<(u64, u64, T)> {
    let mut out: Vec<(u64, u64, T)> = Vec::new();
    for b in r.start()..=r.end() {
        let Some(v) = bytes[b as usize] else { continue };
        match out.last_mut() {
            Some((_, end, last)) if *end + 1 == b && joins(*last, v) => {
                *end = b;
                *last = v;
            }
            _ => out.push((b, b, v)),
        }
    }
    out
}

fn first_values<T: Copy + PartialEq>(bytes: &[Option<T>], r: ByteRange, joins: impl Fn(T, T) -> bool) -> Vec<(u64, u64, T)> {
    // like runs, but remembers each run's first value
    let mut out: Vec<(u64, u64, T, T)> = Vec::new();
    for b in r.start()..=r.end() {
        let Some(v) = bytes[b as usize] else { continue };
        match out.last_mut() {
            Some((_, end, _, last)) if *end + 1 == b && joins(*last, v) => {
                *end = b;
                *last = v;
            }
            _ => out.push((b, b, v, v)),
        }
    }
    out.into_iter().map(|(s, e, f, _)| (s, e, f)).collect()
}

pub fn global_tree_sequence(seed: u64) -> Result<(), String> {
    let mut rng = rng(seed);
    let mut tree: GlobalTree<u8> = GlobalTree::new();
    let mut bytes: Vec<Option<u8>> = vec![None; (SPACE + 64) as usize];
    let whole = ByteRange::new(0, SPACE + 63).unwrap();
    let ops = rng.random_range(1..=64);
    for step in 0..ops {
        let r = rand_range(&mut rng);
        let owner = rng.random_range(0..4u8);
        if rng.random_bool(0.6) {
            tree.insert(GlobalInterval { range: r, owner });
            for b in r.start()..=r.end() {
                bytes[b as usize] = Some(owner);
            }
        } else {
            tree.remove_if_owner(r, owner);
            for b in r.start()..=r.end() {
                if bytes[b as usize] == Some(owner) {
                    bytes[b as usize] = None;
                }
            }
        }
        let got: Vec<(u64, u64, u8)> = tree.iter().map(|i| (i.range.start(), i.range.end(), i.owner)).collect();
        let want = runs(&bytes, whole, |a, b| a == b);
        if got != want {
            return Err(format!("seed {seed} step {step}: tree {got:?} != oracle {want:?}"));
        }
        let q = rand_range(&mut rng);
        let got: Vec<(u64, u64, u8)> = tree.query(q).iter().map(|i| (i.range.start(), i.range.end(), i.owner)).collect();
        if got != runs(&bytes, q, |a, b| a == b) {
            return Err(format!("seed {seed} step {step}: query {q} gave {got:?}"));
        }
        let who = rng.random_range(0..4u8);
        let all = (q.start()..=q.end()).all(|b| bytes[b as usize] == Some(who));
        if tree.owns_all(q, who) != all {
            return Err(format!("seed {seed} step {step}: owns_all({q}, {who}) wrong"));
        }
        let extent = bytes.iter().rposition(Option::is_some).map(|i| i as u64 + 1).unwrap_or(0);
        if tree.extent() != extent {
            return Err(format!("seed {seed} step {step}: extent {} != {extent}", tree.extent()));
        }
    }
    Ok(())
}

/// Per byte: (buffer offset, attached).
type LocalByte = Option<(u64, bool)>;

fn local_joins(a: (u64, bool), b: (u64, bool)) -> bool {
    a.0 + 1 == b.0 && a.1 == b.1
}

pub fn local_tree_sequence(seed: u64) -> Result<(), String> {
    let mut rng = rng(seed);
    let mut tree = LocalTree::new();
    let mut bytes: Vec<LocalByte> = vec![None; (SPACE + 64) as usize];
    let whole = ByteRange::new(0, SPACE + 63).unwrap();
    let mut cursor = 0u64;
    let ops = rng.random_range(1..=64);
    for step in 0..ops {
        let r = rand_range(&mut rng);
        let span = || r.start()..=r.end();
        match rng.random_range(0..4) {
            0 | 1 => {
                let buf = ByteRange::from_offset_size(cursor, r.len()).unwrap();
                tree.insert_write(r, buf).map_err(|e| format!("seed {seed}: {e}"))?;
                for (k, b) in span().enumerate() {
                    bytes[b as usize] = Some((cursor + k as u64, false));
                }
                cursor += r.len();
            }
            2 => {
                let unwritten = span().any(|b| bytes[b as usize].is_none());
                let all_attached = span().all(|b| matches!(bytes[b as usize], Some((_, true))));
                let res = tree.mark_attached(r);
                let ok = match res {
                    Err(IntervalError::UnwrittenBytes(_)) => unwritten,
                    Err(IntervalError::AlreadyAttached(_)) => !unwritten && all_attached,
                    Ok(()) => !unwritten && !all_attached,
                    Err(_) => false,
                };
                if !ok {
                    return Err(format!("seed {seed} step {step}: mark_attached({r}) -> {res:?}"));
                }
                if res.is_ok() {
                    for b in span() {
                        if let Some((o, _)) = bytes[b as usize] {
                            bytes[b as usize] = Some((o, true));
                        }
                    }
                }
            }
            _ => {
                if rng.random_bool(0.5) {
                    tree.mark_detached(r);
                    for b in span() {
                        if let Some((o, _)) = bytes[b as usize] {
                            bytes[b as usize] = Some((o, false));
                        }
                    }
                } else {
                    tree.carve(r);
                    for b in span() {
                        bytes[b as usize] = None;
                    }
                }
            }
        }
        let dump = |ivs: Vec<scnf::interval::LocalInterval>| -> Vec<(u64, u64, (u64, bool))> {
            ivs.iter()
                .map(|i| (i.file_range.start(), i.file_range.end(), (i.buffer_range.start(), i.attached)))
                .collect()
        };
        let got = dump(tree.iter().collect());
        let want = first_values(&bytes, whole, local_joins);
        if got != want {
            return Err(format!("seed {seed} step {step}: tree {got:?} != oracle {want:?}"));
        }
        let q = rand_range(&mut rng);
        if dump(tree.lookup(q)) != first_values(&bytes, q, local_joins) {
            return Err(format!("seed {seed} step {step}: lookup {q} mismatch"));
        }
        if tree.covers(q) != (q.start()..=q.end()).all(|b| bytes[b as usize].is_some()) {
            return Err(format!("seed {seed} step {step}: covers {q} mismatch"));
        }
    }
    Ok(())
}

// ---- race checker against brute force ----

fn closure(trace: &ExecutionTrace) -> Vec<Vec<bool>> {
    let n = trace.len();
    let mut m = vec![vec![false; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            if trace.op(a).process == trace.op(b).process {
                m[a][b] = true;
            }
        }
    }
    for &(a, b) in trace.so() {
        m[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if m[i][k] {
                for j in 0..n {
                    if m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
    }
    m
}

fn edge(trace: &ExecutionTrace, hb: &[Vec<bool>], rel: EdgeRel, a: usize, b: usize) -> bool {
    match rel {
        EdgeRel::Po => trace.op(a).process == trace.op(b).process && a < b,
        EdgeRel::Hb => hb[a][b],
    }
}

/// Tries every assignment of sync ops to the pattern slots.
fn msc_exists(trace: &ExecutionTrace, hb: &[Vec<bool>], model: &ModelDef, x: usize, y: usize) -> bool {
    fn go(
        trace: &ExecutionTrace,
        hb: &[Vec<bool>],
        syncs: &[String],
        edges: &[EdgeRel],
        at: usize,
        y: usize,
        file: &str,
    ) -> bool {
        let Some(name) = syncs.first() else {
            return edge(trace, hb, edges[0], at, y);
        };
        (0..trace.len()).any(|s| {
            let op = trace.op(s);
            op.sync_name() == Some(name.as_str())
                && op.file == file
                && edge(trace, hb, edges[0], at, s)
                && go(trace, hb, &syncs[1..], &edges[1..], s, y, file)
        })
    }
    let file = trace.op(x).file.clone();
    model.patterns.iter().any(|p| go(trace, hb, p.syncs(), p.edges(), x, y, &file))
}

/// Racing pairs by definition, with nothing shared with the checker.
pub fn brute_force_races(trace: &ExecutionTrace, model: &ModelDef) -> BTreeSet<(u64, u64)> {
    let hb = closure(trace);
    let ps = |x: usize, y: usize| match trace.op(x).kind {
        OpKind::Read => hb[x][y],
        OpKind::Write => msc_exists(trace, &hb, model, x, y),
        OpKind::Sync(_) => false,
    };
    let mut out = BTreeSet::new();
    for a in 0..trace.len() {
        for b in a + 1..trace.len() {
            let (x, y) = (trace.op(a), trace.op(b));
            let conflict = x.is_data()
                && y.is_data()
                && x.file == y.file
                && (x.is_write() || y.is_write())
                && x.range.unwrap().overlaps(&y.range.unwrap());
            if conflict && !ps(a, b) && !ps(b, a) {
                out.insert((x.id, y.id));
            }
        }
    }
    out
}

/// A random acyclic trace: ops are drawn in a global order and so edges
/// only point forward in it.
pub fn random_trace(rng: &mut ChaCha8Rng, model: &ModelDef) -> ExecutionTrace {
    let syncs: Vec<&String> = model.sync_ops.iter().collect();
    let procs = rng.random_range(1..=3u32);
    let n = rng.random_range(1..=10usize);
    let files = ["f", "g"];
    let ops: Vec<StorageOp> = (0..n)
        .map(|i| {
            let file = files[if rng.random_bool(0.8) { 0 } else { 1 }].to_string();
            let process = rng.random_range(0..procs);
            let pick = rng.random_range(0..if syncs.is_empty() { 2 } else { 4 });
            let (kind, range) = match pick {
                0 => (OpKind::Write, Some(ByteRange::from_offset_size(rng.random_range(0..8), rng.random_range(1..4)).unwrap())),
                1 => (OpKind::Read, Some(ByteRange::from_offset_size(rng.random_range(0..8), rng.random_range(1..4)).unwrap())),
                _ => (OpKind::Sync(syncs[rng.random_range(0..syncs.len())].clone()), None),
            };
            StorageOp { id: i as u64, process, kind, file, range }
        })
        .collect();
    let mut so = Vec::new();
    for _ in 0..rng.random_range(0..=5) {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a < b && ops[a].process != ops[b].process {
            so.push((a, b));
        }
    }
    ExecutionTrace::new(ops, so).expect("forward edges are acyclic")
}

/// Compares checker and brute force on `count` random traces.
pub fn race_checker_agrees(seed: u64, count: usize) -> Result<(), String> {
    let mut rng = rng(seed);
    let models: Vec<ModelDef> = BUILTIN_MODELS.iter().map(|m| load_builtin_model(m).unwrap()).collect();
    for i in 0..count {
        let model = &models[i % models.len()];
        let trace = random_trace(&mut rng, model);
        let got: BTreeSet<(u64, u64)> = check_properly_synchronized(&trace, model)
            .map_err(|e| e.to_string())?
            .into_iter()
            .filter(|r| r.is_race())
            .map(|r| (r.first, r.second))
            .collect();
        let want = brute_force_races(&trace, model);
        if got != want {
            return Err(format!("trace {i} under {}: checker {got:?} != brute force {want:?}\n{trace:?}", model.name));
        }
    }
    Ok(())
}

// ---- properly-synchronized programs run end to end ----

/// A random program whose cross-process accesses are meant to be ordered
/// by release/acquire handoffs. Not guaranteed race free; callers filter
/// with the checker.
pub fn random_synced_program(rng: &mut ChaCha8Rng, kind: LayerKind) -> Option<Program> {
    let procs = rng.random_range(2..=4usize);
    let mut ops: Vec<Vec<ProgOp>> = vec![Vec::new(); procs];
    let sync = |name: &str| ProgOp::Sync { name: name.into(), file: "f".into() };
    let session = kind == LayerKind::Session;
    if session {
        for p in ops.iter_mut() {
            p.push(sync("session_open"));
        }
    }
    let mut tag = 0;
    let mut value = 1u8;
    for _ in 0..rng.random_range(2..=7) {
        let p = rng.random_range(0..procs);
        match rng.random_range(0..3) {
            0 => {
                let len = rng.random_range(1..=3);
                let data = (0..len).map(|k| value.wrapping_add(k)).collect();
                value = value.wrapping_add(len);
                ops[p].push(ProgOp::Write { file: "f".into(), offset: rng.random_range(0..6), data });
            }
            1 => ops[p].push(ProgOp::Read { file: "f".into(), offset: rng.random_range(0..6), len: rng.random_range(1..=3) }),
            _ => {
                let q = (p + rng.random_range(1..procs)) % procs;
                ops[p].push(sync(if session { "session_close" } else { "commit" }));
                if session {
                    ops[p].push(sync("session_open"));
                }
                ops[p].push(ProgOp::Send { tag });
                ops[q].push(ProgOp::Recv { tag });
                if session {
                    ops[q].push(sync("session_close"));
                    ops[q].push(sync("session_open"));
                }
                tag += 1;
            }
        }
    }
    for p in ops.iter_mut() {
        p.push(sync(if session { "session_close" } else { "commit" }));
    }
    if ops.iter().any(|p| p.len() > scnf::model::MAX_OPS_PER_PROCESS) {
        return None;
    }
    Program::new(ops).ok()
}

pub struct ScnfStats {
    pub checked: usize,
    pub generated: usize,
}

/// Runs `count` race-free random programs under `kind` and checks every
/// outcome is one of the sequentially consistent ones.
pub fn scnf_holds(seed: u64, kind: LayerKind, count: usize) -> Result<ScnfStats, String> {
    let mut rng = rng(seed);
    let model = load_builtin_model(kind.model_name()).unwrap();
    let mut stats = ScnfStats { checked: 0, generated: 0 };
    while stats.checked < count {
        stats.generated += 1;
        if stats.generated > count * 200 {
            return Err(format!("only {} race-free programs in {} tries", stats.checked, stats.generated));
        }
        let Some(program) = random_synced_program(&mut rng, kind) else { continue };
        let (trace, _) = program.to_trace().map_err(|e| e.to_string())?;
        let reports = check_properly_synchronized(&trace, &model).map_err(|e| e.to_string())?;
        if reports.iter().any(|r| r.is_race()) || reports.is_empty() {
            continue;
        }
        let sc = enumerate_sc_results(&program).map_err(|e| e.to_string())?;
        let run = run_program(&program, kind, SimConfig::default()).map_err(|e| e.to_string())?;
        if !sc.contains(&run.outcome) {
            return Err(format!(
                "{kind}: outcome {:?} not sequentially consistent\nprogram {:?}\nSC outcomes {sc:?}",
                run.outcome, program.processes
            ));
        }
        stats.checked += 1;
    }
    Ok(stats)
}
