//! Checkpoint, lose node 0, restart from partner copies.
//!
//!     cargo run --release --example scr_restart

use scnf::bench::{run_scr, ScrConfig};
use scnf::layers::LayerKind;
use scnf::sim::SimConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = SimConfig::default();
    println!("{:>5} {:>8} {:>12} {:>14} {:>14}", "nodes", "model", "ckpt GB/s", "restart s/node", "server busy s");
    for model in [LayerKind::Commit, LayerKind::Session] {
        for n in [4, 8, 12, 16] {
            let r = run_scr(&ScrConfig::new(n, model), &sim)?;
            let (c, rs) = (r.phase("checkpoint").unwrap(), r.phase("restart").unwrap());
            println!(
                "{n:>5} {model:>8} {:>12.2} {:>14.6} {:>14.6}",
                c.bandwidth / 1e9,
                rs.per_node_secs,
                r.server_busy.as_secs()
            );
        }
    }
    Ok(())
}
