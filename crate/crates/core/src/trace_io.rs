//! Line-oriented execution trace format (`.trace`).
//!
//! ```text
//! scnf-trace 1.0
//! op <seq> <process> <kind> <file> <offset> <size> <start_ps> <end_ps> <flags>
//! so <seq> <from_seq> <to_seq>
//! ```
//!
//! Fields are separated by single tabs. `kind` is `read`, `write` or
//! `sync:<name>`; sync records carry `-` for offset and size. File and sync
//! names are percent-encoded outside `[A-Za-z0-9._/-]`. `flags` is `-` or a
//! comma-separated list (`undef` marks a read that touched bytes past EOF).
//! Sequence numbers strictly increase, and every `so` edge names two `op`
//! records of the same file.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::model::{ExecutionTrace, ModelError, OpKind, StorageOp};
use crate::range::ByteRange;
use crate::sim::SimTime;

pub const FORMAT_NAME: &str = "scnf-trace";
pub const MAJOR_VERSION: u32 = 1;
pub const MINOR_VERSION: u32 = 0;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported trace version {0}")]
    Version(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordKind {
    Read,
    Write,
    Sync(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpRecord {
    pub seq: u64,
    pub process: u32,
    pub kind: RecordKind,
    pub file: String,
    /// Present exactly for reads and writes.
    pub range: Option<ByteRange>,
    pub start: SimTime,
    pub end: SimTime,
    pub undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SoRecord {
    pub seq: u64,
    pub from: u64,
    pub to: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceRecord {
    Op(OpRecord),
    So(SoRecord),
}

impl TraceRecord {
    pub fn seq(&self) -> u64 {
        match self {
            TraceRecord::Op(o) => o.seq,
            TraceRecord::So(s) => s.seq,
        }
    }
}

pub fn header() -> String {
    format!("{FORMAT_NAME} {MAJOR_VERSION}.{MINOR_VERSION}")
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || b"._/-".contains(&b) {
            out.push(b as char);
        } else {
            let _ = write!(out, "%{b:02X}");
        }
    }
    if out.is_empty() {
        out.push('%');
    }
    out
}

fn unescape(s: &str) -> Result<String, String> {
    if s == "%" {
        return Ok(String::new());
    }
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s.get(i + 1..i + 3).ok_or("truncated escape")?;
            out.push(u8::from_str_radix(hex, 16).map_err(|_| format!("bad escape %{hex}"))?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| "escaped name is not UTF-8".to_string())
}

/// Renders one record as a line (without the trailing newline).
pub fn encode(record: &TraceRecord) -> String {
    match record {
        TraceRecord::So(s) => format!("so\t{}\t{}\t{}", s.seq, s.from, s.to),
        TraceRecord::Op(o) => {
            let kind = match &o.kind {
                RecordKind::Read => "read".to_string(),
                RecordKind::Write => "write".to_string(),
                RecordKind::Sync(name) => format!("sync:{}", escape(name)),
            };
            let (offset, size) = match o.range {
                Some(r) => (r.start().to_string(), r.len().to_string()),
                None => ("-".to_string(), "-".to_string()),
            };
            let flags = if o.undefined { "undef" } else { "-" };
            format!(
                "op\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                o.seq,
                o.process,
                kind,
                escape(&o.file),
                offset,
                size,
                o.start.as_picos(),
                o.end.as_picos(),
                flags
            )
        }
    }
}

fn num<T: std::str::FromStr>(field: &str, what: &str) -> Result<T, String> {
    field
        .parse()
        .map_err(|_| format!("bad {what} `{field}`"))
}

/// Parses one record line.
pub fn decode(line: &str) -> Result<TraceRecord, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    match fields.first().copied() {
        Some("so") => {
            if fields.len() != 4 {
                return Err(format!("so record needs 4 fields, got {}", fields.len()));
            }
            Ok(TraceRecord::So(SoRecord {
                seq: num(fields[1], "seq")?,
                from: num(fields[2], "from id")?,
                to: num(fields[3], "to id")?,
            }))
        }
        Some("op") => {
            if fields.len() != 10 {
                return Err(format!("op record needs 10 fields, got {}", fields.len()));
            }
            let kind = match fields[3] {
                "read" => RecordKind::Read,
                "write" => RecordKind::Write,
                k => match k.strip_prefix("sync:") {
                    Some(name) => RecordKind::Sync(unescape(name)?),
                    None => return Err(format!("unknown op kind `{k}`")),
                },
            };
            let range = match (&kind, fields[5], fields[6]) {
                (RecordKind::Sync(_), "-", "-") => None,
                (RecordKind::Sync(_), _, _) => {
                    return Err("sync record must not carry a range".into())
                }
                (_, off, size) => {
                    let off: u64 = num(off, "offset")?;
                    let size: u64 = num(size, "size")?;
                    Some(ByteRange::from_offset_size(off, size).map_err(|e| e.to_string())?)
                }
            };
            let undefined = match fields[9] {
                "-" => false,
                flags => {
                    let mut undef = false;
                    for f in flags.split(',') {
                        match f {
                            "undef" => undef = true,
                            other => return Err(format!("unknown flag `{other}`")),
                        }
                    }
                    undef
                }
            };
            Ok(TraceRecord::Op(OpRecord {
                seq: num(fields[1], "seq")?,
                process: num(fields[2], "process")?,
                kind,
                file: unescape(fields[4])?,
                range,
                start: SimTime(num(fields[7], "start time")?),
                end: SimTime(num(fields[8], "end time")?),
                undefined,
            }))
        }
        _ => Err(format!("unknown record `{}`", fields[0])),
    }
}

pub fn write_records<W: Write>(mut w: W, records: &[TraceRecord]) -> std::io::Result<()> {
    writeln!(w, "{}", header())?;
    for r in records {
        writeln!(w, "{}", encode(r))?;
    }
    w.flush()
}

pub fn write_trace(path: impl AsRef<Path>, records: &[TraceRecord]) -> std::io::Result<()> {
    let f = std::fs::File::create(path)?;
    write_records(std::io::BufWriter::new(f), records)
}

fn check_header(line: &str) -> Result<(), TraceError> {
    let version = line
        .strip_prefix(FORMAT_NAME)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| TraceError::Parse {
            line: 1,
            msg: format!("expected `{}` header", header()),
        })?;
    let major = version.split('.').next().and_then(|m| m.parse::<u32>().ok());
    if major != Some(MAJOR_VERSION) {
        return Err(TraceError::Version(version.to_string()));
    }
    Ok(())
}

/// Reads and validates records: header, increasing sequence numbers, and
/// `so` edges whose endpoints exist.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<TraceRecord>, TraceError> {
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if i == 0 {
            check_header(&line)?;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let rec = decode(&line).map_err(|msg| TraceError::Parse { line: lineno, msg })?;
        if let Some(prev) = records.last().map(TraceRecord::seq) {
            if rec.seq() <= prev {
                return Err(TraceError::Parse {
                    line: lineno,
                    msg: format!("sequence number {} does not increase past {prev}", rec.seq()),
                });
            }
        }
        records.push(rec);
        lines.push(lineno);
    }
    let ops: HashMap<u64, ()> = records
        .iter()
        .filter_map(|r| match r {
            TraceRecord::Op(o) => Some((o.seq, ())),
            _ => None,
        })
        .collect();
    for (r, &lineno) in records.iter().zip(&lines) {
        if let TraceRecord::So(s) = r {
            for end in [s.from, s.to] {
                if !ops.contains_key(&end) {
                    return Err(TraceError::Parse {
                        line: lineno,
                        msg: format!("so-edge refers to missing op {end}"),
                    });
                }
            }
        }
    }
    Ok(records)
}

/// Builds the execution trace (ops, program order, synchronization order)
/// from records, checking that program order plus synchronization order is
/// acyclic.
pub fn records_to_trace(records: &[TraceRecord]) -> Result<ExecutionTrace, TraceError> {
    let mut ops = Vec::new();
    let mut index = HashMap::new();
    for r in records {
        if let TraceRecord::Op(o) = r {
            index.insert(o.seq, ops.len());
            ops.push(StorageOp {
                id: o.seq,
                process: o.process,
                kind: match &o.kind {
                    RecordKind::Read => OpKind::Read,
                    RecordKind::Write => OpKind::Write,
                    RecordKind::Sync(n) => OpKind::Sync(n.clone()),
                },
                file: o.file.clone(),
                range: o.range,
            });
        }
    }
    let mut so = Vec::new();
    for r in records {
        if let TraceRecord::So(s) = r {
            let missing = |id| TraceError::Parse {
                line: 0,
                msg: format!("so-edge refers to missing op {id}"),
            };
            let from = *index.get(&s.from).ok_or_else(|| missing(s.from))?;
            let to = *index.get(&s.to).ok_or_else(|| missing(s.to))?;
            so.push((from, to));
        }
    }
    Ok(ExecutionTrace::new(ops, so)?)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<ExecutionTrace, TraceError> {
    let f = std::fs::File::open(path)?;
    let records = read_records(std::io::BufReader::new(f))?;
    records_to_trace(&records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn op(seq: u64, process: u32, kind: RecordKind, range: Option<(u64, u64)>) -> TraceRecord {
        TraceRecord::Op(OpRecord {
            seq,
            process,
            kind,
            file: "f".into(),
            range: range.map(|(o, s)| ByteRange::from_offset_size(o, s).unwrap()),
            start: SimTime(seq * 10),
            end: SimTime(seq * 10 + 5),
            undefined: false,
        })
    }

    fn parse(text: &str) -> Result<Vec<TraceRecord>, TraceError> {
        read_records(text.as_bytes())
    }

    #[test]
    fn empty_file_is_empty_trace() {
        let recs = parse(&format!("{}\n", header())).unwrap();
        assert!(recs.is_empty());
        let t = records_to_trace(&recs).unwrap();
        assert_eq!(t.len(), 0);
    }

    #[test]
    fn encodes_known_line() {
        let r = op(3, 1, RecordKind::Sync("session close".into()), None);
        assert_eq!(encode(&r), "op\t3\t1\tsync:session%20close\tf\t-\t-\t30\t35\t-");
        assert_eq!(decode(&encode(&r)).unwrap(), r);
    }

    #[test]
    fn dangling_so_edge_names_missing_op() {
        let text = format!(
            "{}\n{}\nso\t2\t1\t17\n",
            header(),
            encode(&op(1, 0, RecordKind::Write, Some((0, 4))))
        );
        let err = parse(&text).unwrap_err();
        match err {
            TraceError::Parse { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("17"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_other_major_versions_and_bad_seq() {
        assert!(matches!(
            parse("scnf-trace 2.0\n"),
            Err(TraceError::Version(_))
        ));
        assert!(parse("scnf-trace 1.7\n").is_ok());
        assert!(matches!(parse("garbage\n"), Err(TraceError::Parse { line: 1, .. })));
        let text = format!(
            "{}\n{}\n{}\n",
            header(),
            encode(&op(2, 0, RecordKind::Read, Some((0, 1)))),
            encode(&op(2, 1, RecordKind::Read, Some((0, 1))))
        );
        assert!(matches!(parse(&text), Err(TraceError::Parse { line: 3, .. })));
    }

    #[test]
    fn cyclic_so_rejected() {
        let recs = vec![
            op(1, 0, RecordKind::Write, Some((0, 4))),
            op(2, 0, RecordKind::Write, Some((0, 4))),
            op(3, 1, RecordKind::Read, Some((0, 4))),
            TraceRecord::So(SoRecord { seq: 4, from: 2, to: 3 }),
            TraceRecord::So(SoRecord { seq: 5, from: 3, to: 1 }),
        ];
        assert!(matches!(
            records_to_trace(&recs),
            Err(TraceError::Model(ModelError::CyclicOrder))
        ));
    }

    fn arb_name() -> impl Strategy<Value = String> {
        prop::string::string_regex("[a-z _%\t/.é]{0,8}").unwrap()
    }

    fn arb_record() -> impl Strategy<Value = TraceRecord> {
        let op = (
            any::<u64>(),
            any::<u32>(),
            prop_oneof![
                Just(RecordKind::Read),
                Just(RecordKind::Write),
                arb_name().prop_map(RecordKind::Sync)
            ],
            arb_name(),
            0u64..1 << 40,
            1u64..1 << 30,
            any::<u64>(),
            any::<u64>(),
            any::<bool>(),
        )
            .prop_map(|(seq, process, kind, file, off, size, s, e, undefined)| {
                let range = match kind {
                    RecordKind::Sync(_) => None,
                    _ => Some(ByteRange::from_offset_size(off, size).unwrap()),
                };
                TraceRecord::Op(OpRecord {
                    seq,
                    process,
                    kind,
                    file,
                    range,
                    start: SimTime(s),
                    end: SimTime(e),
                    undefined,
                })
            });
        let so = (any::<u64>(), any::<u64>(), any::<u64>())
            .prop_map(|(seq, from, to)| TraceRecord::So(SoRecord { seq, from, to }));
        prop_oneof![4 => op, 1 => so]
    }

    proptest! {
        #[test]
        fn roundtrip_identity(r in arb_record()) {
            let line = encode(&r);
            prop_assert!(!line.contains('\n'));
            prop_assert_eq!(decode(&line).unwrap(), r);
        }
    }
}
