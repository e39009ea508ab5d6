//! Command-line front end: run benchmarks, check traces, replay traces.
//!
//! Exit status is 0 on success, 2 when a checked trace has a race and 1 on
//! any error.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scnf::bench::{
    plot_script, run_dl, run_scr, run_synthetic, write_csv, BenchResult, DlConfig, RunConfig,
    Scaling, Shape, WorkloadConfig,
};
use scnf::exec::replay;
use scnf::layers::LayerKind;
use scnf::model::{check_properly_synchronized, load_builtin_model, ExecutionTrace};
use scnf::trace_io::{read_records, records_to_trace, write_trace};

type Error = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(name = "scnf", version, about = "Burst-buffer consistency layers: benchmarks and race checking")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a workload on the simulated cluster and print per-phase CSV.
    Bench {
        #[command(subcommand)]
        workload: BenchCmd,
    },
    /// Check whether a trace is properly synchronized under a model.
    Check {
        /// posix, commit, commit-relaxed, session or mpiio
        #[arg(long)]
        model: String,
        #[arg(long)]
        trace: PathBuf,
        /// Print every conflicting pair as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Re-run a trace on the simulated stack and check the new execution.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        /// posix, commit or session
        #[arg(long)]
        model: LayerKind,
        /// Where to write the replayed trace.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    Synthetic {
        /// cnw, snw, ccr or csr (default ccr)
        #[arg(long)]
        shape: Option<Shape>,
        /// Nodes per phase.
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        p: Option<u32>,
        /// Request size in bytes.
        #[arg(long)]
        size: Option<u64>,
        #[arg(long)]
        m_w: Option<u32>,
        #[arg(long)]
        m_r: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    Scr {
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        particles: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    Dl {
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, value_parser = parse_scaling)]
        scaling: Option<Scaling>,
        #[arg(long)]
        epochs: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    model: Option<LayerKind>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run-config TOML: model, [sim] overrides and workload sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the execution trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write a gnuplot script for the CSV here.
    #[arg(long)]
    plot: Option<PathBuf>,
}

fn parse_scaling(s: &str) -> Result<Scaling, String> {
    match s {
        "strong" => Ok(Scaling::Strong),
        "weak" => Ok(Scaling::Weak),
        _ => Err(format!("expected strong or weak, got `{s}`")),
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, Error> {
    Ok(match path {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    })
}

fn bench(workload: BenchCmd) -> Result<ExitCode, Error> {
    let (result, common) = match workload {
        BenchCmd::Synthetic { shape, n, p, size, m_w, m_r, common } => {
            let rc = load_config(&common.config)?;
            let sec = rc.synthetic.as_ref();
            let model = common.model.unwrap_or(rc.consistency_model);
            let mut cfg = WorkloadConfig::shape(
                shape.or(sec.map(|s| s.shape)).unwrap_or(Shape::Ccr),
                model,
                n.or(sec.map(|s| s.nodes)).unwrap_or(4),
                p.or(sec.map(|s| s.p)).unwrap_or(4),
                size.or(sec.map(|s| s.s)).unwrap_or(8192),
            );
            let m_w = m_w.or(sec.and_then(|s| s.m_w)).unwrap_or(cfg.m_w);
            let m_r = m_r.or(sec.and_then(|s| s.m_r)).unwrap_or(cfg.m_r);
            cfg = cfg.with_ops(m_w, m_r);
            cfg.seed = common.seed.or(sec.and_then(|s| s.seed)).unwrap_or(0);
            (run_synthetic(&cfg, &rc.sim)?, common)
        }
        BenchCmd::Scr { n, particles, common } => {
            let rc = load_config(&common.config)?;
            let mut cfg = rc.scr.clone().unwrap_or_default();
            cfg.model = Some(common.model.or(cfg.model).unwrap_or(rc.consistency_model));
            cfg.nodes = n.unwrap_or(cfg.nodes);
            cfg.particles = particles.unwrap_or(cfg.particles);
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            (run_scr(&cfg, &rc.sim)?, common)
        }
        BenchCmd::Dl { n, scaling, epochs, common } => {
            let rc = load_config(&common.config)?;
            let mut cfg: DlConfig = rc.dl.clone().unwrap_or_default();
            cfg.model = Some(common.model.or(cfg.model).unwrap_or(rc.consistency_model));
            cfg.nodes = n.unwrap_or(cfg.nodes);
            cfg.scaling = scaling.unwrap_or(cfg.scaling);
            cfg.epochs = epochs.unwrap_or(cfg.epochs);
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            (run_dl(&cfg, &rc.sim)?, common)
        }
    };
    emit(&result, &common)?;
    Ok(ExitCode::SUCCESS)
}

fn emit(result: &BenchResult, common: &Common) -> Result<(), Error> {
    let results = std::slice::from_ref(result);
    match &common.csv {
        Some(path) => write_csv(File::create(path)?, results)?,
        None => write_csv(io::stdout().lock(), results)?,
    }
    if let Some(path) = &common.trace {
        write_trace(path, &result.trace)?;
    }
    if let Some(path) = &common.plot {
        let csv = common.csv.as_ref().map(|p| p.display().to_string()).unwrap_or("bench.csv".into());
        let png = path.with_extension("png").display().to_string();
        std::fs::write(path, plot_script(&csv, &png))?;
    }
    Ok(())
}

/// Prints the verdict and returns 2 if any conflict is a race.
fn report(trace: &ExecutionTrace, model: &str, json: bool) -> Result<ExitCode, Error> {
    let def = load_builtin_model(model)?;
    let reports = check_properly_synchronized(trace, &def)?;
    let races = reports.iter().filter(|r| r.is_race()).count();
    let mut out = io::stdout().lock();
    if json {
        serde_json::to_writer_pretty(&mut out, &serde_json::json!({
            "model": model,
            "ops": trace.len(),
            "conflicts": reports.len(),
            "races": races,
            "reports": reports,
        }))?;
        writeln!(out)?;
    } else {
        for r in reports.iter().filter(|r| r.is_race()) {
            writeln!(out, "race: {}", r.describe(trace))?;
        }
        writeln!(
            out,
            "{}: {} ops, {} conflicting pairs, {} races under {model}",
            if races == 0 { "properly synchronized" } else { "NOT properly synchronized" },
            trace.len(),
            reports.len(),
            races
        )?;
    }
    Ok(if races == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Bench { workload } => bench(workload),
        Cmd::Check { model, trace, json } => {
            let records = read_records(BufReader::new(File::open(trace)?))?;
            report(&records_to_trace(&records)?, &model, json)
        }
        Cmd::Replay { trace, model, out, config, json } => {
            let rc = load_config(&config)?;
            let records = read_records(BufReader::new(File::open(trace)?))?;
            let world = replay(&records, model, rc.sim)?;
            let fresh = world.trace_records();
            if let Some(path) = out {
                write_trace(path, &fresh)?;
            }
            report(&records_to_trace(&fresh)?, model.model_name(), json)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("scnf: {e}");
            ExitCode::from(1)
        }
    }
}
