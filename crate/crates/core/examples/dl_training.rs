//! Shuffled sample reads over a preloaded dataset, weak and strong scaling.

use scnf::bench::{run_dl, write_csv, DlConfig, Scaling};
use scnf::layers::LayerKind;
use scnf::sim::SimConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = SimConfig::default();
    let mut results = Vec::new();
    for scaling in [Scaling::Strong, Scaling::Weak] {
        for model in [LayerKind::Commit, LayerKind::Session] {
            for nodes in [2, 4, 8] {
                results.push(run_dl(&DlConfig::new(nodes, scaling, model), &sim)?);
            }
        }
    }
    write_csv(std::io::stdout().lock(), &results)?;
    Ok(())
}
