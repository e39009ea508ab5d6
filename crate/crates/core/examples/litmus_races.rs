//! Race verdicts for the built-in litmus corpus, with witnesses.

use scnf::model::litmus::litmus_corpus;
use scnf::model::{check_properly_synchronized, load_builtin_model};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for case in litmus_corpus() {
        let model = load_builtin_model(case.model)?;
        let reports = check_properly_synchronized(&case.trace, &model)?;
        let races = reports.iter().filter(|r| r.is_race()).count();
        println!("{:<34} {:<15} {} conflict(s), {} race(s)", case.name, case.model, reports.len(), races);
        for r in &reports {
            println!("    {}", r.describe(&case.trace));
        }
    }
    Ok(())
}
