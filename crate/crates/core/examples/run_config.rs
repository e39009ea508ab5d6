//! Drive a run from a TOML run-config and emit a CSV plus a gnuplot script.

use scnf::bench::{plot_script, run_synthetic, write_csv, RunConfig};

const CONFIG: &str = r#"
version = 1
consistency_model = "commit"

[sim]
rpc_latency = 20e-6
server_workers = 8

[synthetic]
shape = "cs-r"
nodes = 8
p = 4
s = 65536
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = RunConfig::from_toml_str(CONFIG)?;
    let workload = config.synthetic.as_ref().unwrap().workload(config.consistency_model);
    let result = run_synthetic(&workload, &config.sim)?;
    let dir = std::env::temp_dir();
    let csv = dir.join("cs-r.csv");
    write_csv(std::fs::File::create(&csv)?, std::slice::from_ref(&result))?;
    std::fs::write(dir.join("cs-r.gp"), plot_script(&csv.display().to_string(), "cs-r.png"))?;
    for p in &result.phases {
        println!("{:>5}: {:8.1} MB/s, {} queries", p.name, p.bandwidth / 1e6, p.query_rpcs);
    }
    println!("wrote {}", csv.display());
    Ok(())
}
