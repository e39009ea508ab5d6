//! POSIX, commit and session consistency, each written against [`BaseFs`]
//! alone.
//!
//! | layer   | write                  | read                 | sync                                   |
//! |---------|------------------------|----------------------|----------------------------------------|
//! | posix   | `bfs_write; bfs_attach`| `bfs_query; bfs_read`| none                                   |
//! | commit  | `bfs_write`            | `bfs_query; bfs_read`| commit = `bfs_attach_file`             |
//! | session | `bfs_write`            | `bfs_read`           | open = `bfs_query_file`, close = `bfs_attach_file` |
//!
//! Reads that span several owners are split here, one `bfs_read` per owner;
//! bytes nobody owns come from the PFS.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basefs::{BaseFs, ClientId, FileHandle, KernelError, Owned, Payload, ReadOut, Whence};
use crate::range::ByteRange;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Posix,
    Commit,
    Session,
}

impl LayerKind {
    pub const ALL: [LayerKind; 3] = [LayerKind::Posix, LayerKind::Commit, LayerKind::Session];

    /// Name of the matching checker model.
    pub fn model_name(self) -> &'static str {
        match self {
            LayerKind::Posix => "posix",
            LayerKind::Commit => "commit",
            LayerKind::Session => "session",
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.model_name())
    }
}

impl FromStr for LayerKind {
    type Err = LayerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "posix" => Ok(LayerKind::Posix),
            "commit" => Ok(LayerKind::Commit),
            "session" => Ok(LayerKind::Session),
            other => Err(LayerError::UnknownLayer(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayerError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("no session is open on this handle")]
    SessionNotOpen,
    #[error("a session is already open on this handle")]
    SessionAlreadyOpen,
    #[error("`{op}` is not part of the {kind} layer")]
    WrongLayer { op: &'static str, kind: LayerKind },
    #[error("unknown consistency layer `{0}`")]
    UnknownLayer(String),
    #[error("bad range: {0}")]
    Range(#[from] crate::range::RangeError),
}

/// An open file under one consistency layer.
#[derive(Debug, Clone)]
pub struct LayerHandle {
    fh: FileHandle,
    kind: LayerKind,
    /// Ownership map taken at session open.
    snapshot: Option<Vec<Owned>>,
}

/// Splits `range` into maximal pieces, each served by one owner or, where
/// nobody owns the bytes, by the PFS (`None`).
pub fn split_by_owner(range: ByteRange, owned: &[Owned]) -> Vec<(ByteRange, Option<ClientId>)> {
    let mut pieces: Vec<(ByteRange, ClientId)> = owned
        .iter()
        .filter_map(|iv| iv.range.intersect(&range).map(|r| (r, iv.owner)))
        .collect();
    pieces.sort_by_key(|(r, _)| r.start());
    let mut out = Vec::new();
    let mut next = Some(range.start());
    for (r, owner) in pieces {
        let at = next.expect("pieces are disjoint and inside range");
        if r.start() > at {
            out.push((ByteRange::new(at, r.start() - 1).expect("ordered"), None));
        }
        out.push((r, Some(owner)));
        next = r.end().checked_add(1);
    }
    if let Some(at) = next.filter(|&at| at <= range.end()) {
        out.push((ByteRange::new(at, range.end()).expect("ordered"), None));
    }
    out
}

impl LayerHandle {
    pub fn open(fs: &mut dyn BaseFs, kind: LayerKind, path: &str) -> Result<Self, LayerError> {
        Ok(Self {
            fh: fs.bfs_open(path)?,
            kind,
            snapshot: None,
        })
    }

    /// Session-layer spelling of open: opens the file and its session.
    pub fn open_session(fs: &mut dyn BaseFs, path: &str) -> Result<Self, LayerError> {
        let mut h = Self::open(fs, LayerKind::Session, path)?;
        h.session_open(fs)?;
        Ok(h)
    }

    pub fn kind(&self) -> LayerKind {
        self.kind
    }

    pub fn kernel_handle(&self) -> FileHandle {
        self.fh
    }

    pub fn in_session(&self) -> bool {
        self.snapshot.is_some()
    }

    fn require_session(&self) -> Result<&[Owned], LayerError> {
        self.snapshot.as_deref().ok_or(LayerError::SessionNotOpen)
    }

    pub fn write(&mut self, fs: &mut dyn BaseFs, offset: u64, data: Payload) -> Result<u64, LayerError> {
        if self.kind == LayerKind::Session {
            self.require_session()?;
        }
        let len = data.len();
        fs.bfs_seek(self.fh, offset as i64, Whence::Set)?;
        fs.bfs_write(self.fh, data)?;
        if self.kind == LayerKind::Posix && len > 0 {
            fs.bfs_attach(self.fh, offset, len)?;
        }
        Ok(len)
    }

    pub fn read(&mut self, fs: &mut dyn BaseFs, offset: u64, len: u64) -> Result<ReadOut, LayerError> {
        let range = ByteRange::from_offset_size(offset, len)?;
        let owned = match self.kind {
            LayerKind::Posix | LayerKind::Commit => fs.bfs_query(self.fh, offset, len)?,
            LayerKind::Session => self.require_session()?.to_vec(),
        };
        let mut data = Vec::new();
        let mut undefined = false;
        for (piece, owner) in split_by_owner(range, &owned) {
            fs.bfs_seek(self.fh, piece.start() as i64, Whence::Set)?;
            let out = fs.bfs_read(self.fh, piece.len(), owner)?;
            undefined |= out.undefined;
            data.push(out.data);
        }
        Ok(ReadOut { data: Payload::concat(data), undefined })
    }

    pub fn commit(&mut self, fs: &mut dyn BaseFs) -> Result<(), LayerError> {
        if self.kind != LayerKind::Commit {
            return Err(LayerError::WrongLayer { op: "commit", kind: self.kind });
        }
        fs.bfs_attach_file(self.fh)?;
        Ok(())
    }

    pub fn session_open(&mut self, fs: &mut dyn BaseFs) -> Result<(), LayerError> {
        if self.kind != LayerKind::Session {
            return Err(LayerError::WrongLayer { op: "session_open", kind: self.kind });
        }
        if self.snapshot.is_some() {
            return Err(LayerError::SessionAlreadyOpen);
        }
        self.snapshot = Some(fs.bfs_query_file(self.fh)?);
        Ok(())
    }

    pub fn session_close(&mut self, fs: &mut dyn BaseFs) -> Result<(), LayerError> {
        if self.kind != LayerKind::Session {
            return Err(LayerError::WrongLayer { op: "session_close", kind: self.kind });
        }
        self.require_session()?;
        fs.bfs_attach_file(self.fh)?;
        self.snapshot = None;
        Ok(())
    }

    /// Closes the file; an open session is closed first.
    pub fn close(mut self, fs: &mut dyn BaseFs) -> Result<(), LayerError> {
        if self.snapshot.is_some() {
            self.session_close(fs)?;
        }
        fs.bfs_close(self.fh)?;
        Ok(())
    }
}
