//! CC-R read bandwidth for commit and session as the node count grows.
//!
//!     cargo run --release --example synthetic_bandwidth [size]

use scnf::bench::{run_synthetic, Shape, WorkloadConfig};
use scnf::layers::LayerKind;
use scnf::sim::SimConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let size: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(8192);
    let sim = SimConfig::default();
    println!("{:>5} {:>14} {:>14} {:>7}", "nodes", "commit MB/s", "session MB/s", "ratio");
    for n in [2, 4, 8, 16] {
        let mut bw = Vec::new();
        for model in [LayerKind::Commit, LayerKind::Session] {
            let cfg = WorkloadConfig::shape(Shape::Ccr, model, n, 4, size);
            bw.push(run_synthetic(&cfg, &sim)?.phase("read").unwrap().bandwidth / 1e6);
        }
        println!("{n:>5} {:>14.1} {:>14.1} {:>7.2}", bw[0], bw[1], bw[1] / bw[0]);
    }
    Ok(())
}
