use std::collections::BTreeSet;
use std::fmt;

use super::{ExecutionTrace, HbRelation, ModelError};

/// Edge constraint between consecutive elements of an MSC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeRel {
    /// Same process, earlier in program order.
    Po,
    /// Happens before.
    Hb,
}

impl EdgeRel {
    pub fn holds(self, trace: &ExecutionTrace, hb: &HbRelation, a: usize, b: usize) -> bool {
        match self {
            EdgeRel::Po => trace.po(a, b),
            EdgeRel::Hb => hb.hb(a, b),
        }
    }
}

impl fmt::Display for EdgeRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeRel::Po => "->po",
            EdgeRel::Hb => "->hb",
        })
    }
}

/// `r_0 S_1 r_1 ... S_k r_k`: k synchronization ops and k+1 edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MscPattern {
    syncs: Vec<String>,
    edges: Vec<EdgeRel>,
}

impl MscPattern {
    pub fn new(syncs: Vec<String>, edges: Vec<EdgeRel>) -> Result<Self, ModelError> {
        if edges.len() != syncs.len() + 1 {
            return Err(ModelError::BadPattern(format!(
                "{} sync ops need {} edges, got {}",
                syncs.len(),
                syncs.len() + 1,
                edges.len()
            )));
        }
        Ok(Self { syncs, edges })
    }

    /// Parses `->po commit ->hb` style text; `→` and bare `po`/`hb` also work.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut syncs = Vec::new();
        let mut edges = Vec::new();
        for tok in text.split_whitespace() {
            let bare = tok.trim_start_matches("->").trim_start_matches('→');
            match bare {
                "po" => edges.push(EdgeRel::Po),
                "hb" => edges.push(EdgeRel::Hb),
                name => {
                    if edges.len() != syncs.len() + 1 {
                        return Err(ModelError::BadPattern(text.to_string()));
                    }
                    syncs.push(name.to_string());
                }
            }
            if edges.len() > syncs.len() + 1 {
                return Err(ModelError::BadPattern(text.to_string()));
            }
        }
        Self::new(syncs, edges).map_err(|_| ModelError::BadPattern(text.to_string()))
    }

    pub fn syncs(&self) -> &[String] {
        &self.syncs
    }

    pub fn edges(&self) -> &[EdgeRel] {
        &self.edges
    }

    pub fn k(&self) -> usize {
        self.syncs.len()
    }
}

impl fmt::Display for MscPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.edges.iter().enumerate() {
            if i > 0 {
                write!(f, " {} ", self.syncs[i - 1])?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// A properly-synchronized consistency model: the synchronization set and
/// its minimum synchronization constructs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDef {
    pub name: String,
    pub sync_ops: BTreeSet<String>,
    pub patterns: Vec<MscPattern>,
}

impl ModelDef {
    pub fn new(name: &str, sync_ops: &[&str], patterns: &[&str]) -> Result<Self, ModelError> {
        let def = Self {
            name: name.to_string(),
            sync_ops: sync_ops.iter().map(|s| s.to_string()).collect(),
            patterns: patterns
                .iter()
                .map(|p| MscPattern::parse(p))
                .collect::<Result<_, _>>()?,
        };
        for p in &def.patterns {
            if let Some(s) = p.syncs().iter().find(|s| !def.sync_ops.contains(*s)) {
                return Err(ModelError::BadPattern(format!(
                    "pattern `{p}` uses `{s}` which is not in the model's set"
                )));
            }
        }
        Ok(def)
    }
}

pub const BUILTIN_MODELS: [&str; 5] = ["posix", "commit", "commit-relaxed", "session", "mpiio"];

pub fn load_builtin_model(name: &str) -> Result<ModelDef, ModelError> {
    let def = match name {
        "posix" => ModelDef::new("posix", &[], &["->hb"]),
        "commit" => ModelDef::new("commit", &["commit"], &["->po commit ->hb"]),
        "commit-relaxed" => ModelDef::new("commit-relaxed", &["commit"], &["->hb commit ->hb"]),
        "session" => ModelDef::new(
            "session",
            &["session_close", "session_open"],
            &["->po session_close ->hb session_open ->po"],
        ),
        "mpiio" => ModelDef::new(
            "mpiio",
            &["MPI_File_sync", "MPI_File_close", "MPI_File_open"],
            &[
                "->po MPI_File_close ->hb MPI_File_open ->po",
                "->po MPI_File_close ->hb MPI_File_sync ->po",
                "->po MPI_File_sync ->hb MPI_File_sync ->po",
                "->po MPI_File_sync ->hb MPI_File_open ->po",
            ],
        ),
        other => return Err(ModelError::UnknownModel(other.to_string())),
    };
    Ok(def.expect("built-in models are well formed"))
}

/// Finds synchronization ops `s_1..s_k` (named as in `pattern`, on the same
/// file as `x`) such that `x r_0 s_1 r_1 ... s_k r_k y` holds. Returns the
/// op indices, or `None` when no assignment exists.
pub fn match_msc(
    trace: &ExecutionTrace,
    hb: &HbRelation,
    x: usize,
    y: usize,
    pattern: &MscPattern,
) -> Option<Vec<usize>> {
    let file = &trace.op(x).file;
    // frontier of (op, parent index into previous layer)
    let mut layers: Vec<Vec<(usize, usize)>> = vec![vec![(x, 0)]];
    for (i, name) in pattern.syncs().iter().enumerate() {
        let rel = pattern.edges()[i];
        let prev = layers.last().expect("non-empty");
        let mut next = Vec::new();
        for (s, op) in trace.ops().iter().enumerate() {
            if op.sync_name() != Some(name.as_str()) || &op.file != file {
                continue;
            }
            if let Some(parent) = prev.iter().position(|&(p, _)| rel.holds(trace, hb, p, s)) {
                next.push((s, parent));
            }
        }
        if next.is_empty() {
            return None;
        }
        layers.push(next);
    }
    let last_rel = *pattern.edges().last().expect("k+1 edges");
    let last = layers.last().expect("non-empty");
    let mut at = last.iter().position(|&(p, _)| last_rel.holds(trace, hb, p, y))?;
    let mut witness = Vec::with_capacity(pattern.k());
    for layer in layers.iter().skip(1).rev() {
        let (op, parent) = layer[at];
        witness.push(op);
        at = parent;
    }
    witness.reverse();
    Some(witness)
}
