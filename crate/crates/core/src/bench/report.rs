use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::{bandwidth, BenchError};
use crate::exec::World;
use crate::layers::LayerKind;
use crate::sim::{Entity, Fabric, MsgKind, SimTime};
use crate::trace_io::TraceRecord;

/// Measurements of one timed phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseResult {
    pub name: String,
    pub bytes: u64,
    pub start: SimTime,
    pub end: SimTime,
    /// `bytes / (end - start)`, bytes per second.
    pub bandwidth: f64,
    /// Mean over participating nodes of (node's last finish - start).
    pub per_node_secs: f64,
    pub query_rpcs: u64,
    pub attach_rpcs: u64,
    pub fetch_rpcs: u64,
}

impl PhaseResult {
    pub fn elapsed(&self) -> SimTime {
        self.end.saturating_sub(self.start)
    }

    /// Builds the result for processes `members` (with their nodes) between
    /// their `from` and `to` marks. The phase starts at the earliest `from`
    /// and ends at the latest `to`; RPCs sent in that window are counted.
    pub(crate) fn measure(
        world: &World,
        name: &str,
        members: &[(usize, u32)],
        from: &str,
        to: &str,
        bytes: u64,
    ) -> PhaseResult {
        let mark = |p: usize, l: &str| {
            world
                .log(p)
                .mark(l)
                .unwrap_or_else(|| panic!("process {p} has no `{l}` mark"))
        };
        let start = members.iter().map(|&(p, _)| mark(p, from)).min().unwrap_or(SimTime::ZERO);
        let end = members.iter().map(|&(p, _)| mark(p, to)).max().unwrap_or(start);
        let mut per_node: BTreeMap<u32, SimTime> = BTreeMap::new();
        for &(p, node) in members {
            let e = per_node.entry(node).or_insert(start);
            *e = (*e).max(mark(p, to));
        }
        let per_node_secs = if per_node.is_empty() {
            0.0
        } else {
            per_node.values().map(|t| t.saturating_sub(start).as_secs()).sum::<f64>()
                / per_node.len() as f64
        };
        let fabric = world.cluster().fabric();
        PhaseResult {
            name: name.to_string(),
            bytes,
            start,
            end,
            bandwidth: bandwidth(bytes, end.saturating_sub(start).as_secs()),
            per_node_secs,
            query_rpcs: server_msgs(fabric, MsgKind::Query, start, end),
            attach_rpcs: server_msgs(fabric, MsgKind::Attach, start, end),
            fetch_rpcs: count_msgs(fabric, MsgKind::Fetch, start, end, |_| true),
        }
    }
}

fn count_msgs(
    fabric: &Fabric,
    kind: MsgKind,
    start: SimTime,
    end: SimTime,
    to: impl Fn(Entity) -> bool,
) -> u64 {
    fabric
        .messages()
        .iter()
        .filter(|m| m.kind == kind && to(m.to) && m.sent_at >= start && m.sent_at <= end)
        .count() as u64
}

fn server_msgs(fabric: &Fabric, kind: MsgKind, start: SimTime, end: SimTime) -> u64 {
    count_msgs(fabric, kind, start, end, |e| e == Entity::Server)
}

/// Outcome of one benchmark run.
#[derive(Debug, Clone)]
pub struct BenchResult {
    pub workload: String,
    pub model: LayerKind,
    pub nodes: u32,
    pub ppn: u32,
    /// Request size in bytes.
    pub size: u64,
    pub seed: u64,
    pub phases: Vec<PhaseResult>,
    pub elapsed: SimTime,
    pub server_busy: SimTime,
    /// Requests the server received over the whole run, by kind.
    pub server_requests: BTreeMap<MsgKind, u64>,
    /// Layer-level execution trace.
    pub trace: Vec<TraceRecord>,
}

impl BenchResult {
    pub(crate) fn from_world(
        world: &World,
        workload: &str,
        model: LayerKind,
        (nodes, ppn, size, seed): (u32, u32, u64, u64),
        phases: Vec<PhaseResult>,
        elapsed: SimTime,
    ) -> Self {
        let fabric = world.cluster().fabric();
        Self {
            workload: workload.to_string(),
            model,
            nodes,
            ppn,
            size,
            seed,
            phases,
            elapsed,
            server_busy: fabric.server_busy_time(),
            server_requests: fabric
                .accounting(Entity::Server)
                .map(|a| a.recv_by_kind.clone())
                .unwrap_or_default(),
            trace: world.trace_records(),
        }
    }

    pub fn phase(&self, name: &str) -> Option<&PhaseResult> {
        self.phases.iter().find(|p| p.name == name)
    }

    pub fn rows(&self) -> Vec<CsvRow> {
        self.phases
            .iter()
            .map(|p| CsvRow {
                workload: self.workload.clone(),
                model: self.model.to_string(),
                nodes: self.nodes,
                ppn: self.ppn,
                size: self.size,
                seed: self.seed,
                phase: p.name.clone(),
                bytes: p.bytes,
                start_s: p.start.as_secs(),
                elapsed_s: p.elapsed().as_secs(),
                bandwidth_bps: p.bandwidth,
                per_node_s: p.per_node_secs,
                query_rpcs: p.query_rpcs,
                attach_rpcs: p.attach_rpcs,
                fetch_rpcs: p.fetch_rpcs,
                server_busy_s: self.server_busy.as_secs(),
            })
            .collect()
    }
}

/// One CSV line: a phase of a run. Column order is the header order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub workload: String,
    pub model: String,
    pub nodes: u32,
    pub ppn: u32,
    pub size: u64,
    pub seed: u64,
    pub phase: String,
    pub bytes: u64,
    pub start_s: f64,
    pub elapsed_s: f64,
    pub bandwidth_bps: f64,
    pub per_node_s: f64,
    pub query_rpcs: u64,
    pub attach_rpcs: u64,
    pub fetch_rpcs: u64,
    pub server_busy_s: f64,
}

/// Writes a header row and one row per phase of every result.
pub fn write_csv<W: Write>(w: W, results: &[BenchResult]) -> Result<(), BenchError> {
    let mut out = csv::Writer::from_writer(w);
    for r in results {
        for row in r.rows() {
            out.serialize(row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// A gnuplot script plotting bandwidth against node count, one line per
/// model and phase, from a CSV written by [`write_csv`].
pub fn plot_script(csv_path: &str, png_path: &str) -> String {
    format!(
        r#"# bandwidth vs. nodes, one line per (model, phase)
set datafile separator ","
set terminal pngcairo size 900,600
set output "{png_path}"
set xlabel "nodes"
set ylabel "bandwidth (MB/s)"
set logscale y
set key outside
models = "posix commit session"
phases = system("tail -n +2 '{csv_path}' | cut -d, -f7 | sort -u | tr '\n' ' '")
plot for [m in models] for [ph in phases] \
    "< awk -F, -v m=".m." -v ph=".ph." 'NR>1 && $2==m && $7==ph' '{csv_path}'" \
    using 3:($11/1e6) with linespoints title m." ".ph
"#
    )
}
