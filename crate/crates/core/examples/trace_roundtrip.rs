//! Record a run, write the trace, read it back and check it.
//!
//!     cargo run --example trace_roundtrip [out.trace]

use scnf::exec::run_program;
use scnf::layers::LayerKind;
use scnf::model::{check_properly_synchronized, load_builtin_model, ProgOp, Program};
use scnf::sim::SimConfig;
use scnf::trace_io::{read_trace, write_trace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        std::env::temp_dir().join("roundtrip.trace").display().to_string()
    });
    let sync = |n: &str| ProgOp::Sync { name: n.into(), file: "log".into() };
    let program = Program::new(vec![
        vec![sync("session_open"), ProgOp::Write { file: "log".into(), offset: 0, data: b"entry".to_vec() },
             sync("session_close"), ProgOp::Send { tag: 1 }],
        vec![ProgOp::Recv { tag: 1 }, sync("session_open"), ProgOp::Read { file: "log".into(), offset: 0, len: 5 },
             sync("session_close")],
    ])?;
    let run = run_program(&program, LayerKind::Session, SimConfig::default())?;
    write_trace(&path, &run.records)?;
    print!("{}", std::fs::read_to_string(&path)?);

    let trace = read_trace(&path)?;
    for model in ["session", "commit-relaxed"] {
        let def = load_builtin_model(model)?;
        match check_properly_synchronized(&trace, &def) {
            Ok(reports) => println!("{model}: {} race(s)", reports.iter().filter(|r| r.is_race()).count()),
            Err(e) => println!("{model}: rejected ({e})"),
        }
    }
    Ok(())
}
