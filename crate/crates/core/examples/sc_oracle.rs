//! Sequentially consistent outcomes of a small program, and what the commit
//! layer actually produces for it.

use scnf::exec::run_program;
use scnf::layers::LayerKind;
use scnf::model::{enumerate_sc_results, ProgOp, Program};
use scnf::sim::SimConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let w = |f: &str| ProgOp::Write { file: f.into(), offset: 0, data: vec![100] };
    let r = |f: &str| ProgOp::Read { file: f.into(), offset: 0, len: 1 };
    let racy = Program::new(vec![vec![w("x"), r("y")], vec![w("y"), r("x")]])?;
    println!("store then load, no synchronization:");
    for o in enumerate_sc_results(&racy)? {
        println!("  P0 reads y={}, P1 reads x={}", o.reads[&(0, 1)][0], o.reads[&(1, 1)][0]);
    }

    let commit = |f: &str| ProgOp::Sync { name: "commit".into(), file: f.into() };
    let synced = Program::new(vec![
        vec![w("x"), commit("x"), ProgOp::Send { tag: 0 }],
        vec![ProgOp::Recv { tag: 0 }, r("x")],
    ])?;
    let sc = enumerate_sc_results(&synced)?;
    let run = run_program(&synced, LayerKind::Commit, SimConfig::default())?;
    println!("commit handoff: {} SC outcome(s), run reads x={}, SC: {}",
        sc.len(), run.outcome.reads[&(1, 1)][0], sc.contains(&run.outcome));
    Ok(())
}
