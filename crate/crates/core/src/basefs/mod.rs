//! The base file system: one global server keeping per-file ownership maps
//! and many clients buffering writes on node-local devices.
//!
//! [`Cluster`] holds all state. A client sees it only through [`BaseFs`],
//! which exposes nothing but the `bfs_*` primitives.

mod kernel;
mod payload;

use thiserror::Error;

use crate::interval::IntervalError;
use crate::range::ByteRange;
use crate::sim::SimError;

pub use kernel::{BufferTier, Client, ClientId, Cluster, FileHandle, ReadOut, Whence};
pub use payload::Payload;
pub(crate) use payload::Store;

/// Ownership record as returned by the query primitives.
pub type Owned = crate::interval::GlobalInterval<ClientId>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("handle {0} is closed")]
    ClosedHandle(u64),
    #[error("unknown handle {0}")]
    UnknownHandle(u64),
    #[error("empty path")]
    EmptyPath,
    #[error("{owner} does not own all of {range}")]
    NotOwner { owner: ClientId, range: ByteRange },
    #[error("range {0} was never attached by this client")]
    NotAttached(ByteRange),
    #[error("seek to negative position {0}")]
    NegativePosition(i128),
    #[error("unknown client {0}")]
    UnknownClient(ClientId),
    #[error("bad range: {0}")]
    Range(#[from] crate::range::RangeError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// The primitives a client process may call. Sizes and offsets are bytes;
/// every call advances the calling client's simulated clock by its cost.
pub trait BaseFs {
    fn id(&self) -> ClientId;
    fn bfs_open(&mut self, path: &str) -> Result<FileHandle, KernelError>;
    fn bfs_close(&mut self, fh: FileHandle) -> Result<(), KernelError>;
    fn bfs_write(&mut self, fh: FileHandle, data: Payload) -> Result<u64, KernelError>;
    /// `owner = None` reads straight from the PFS.
    fn bfs_read(
        &mut self,
        fh: FileHandle,
        size: u64,
        owner: Option<ClientId>,
    ) -> Result<ReadOut, KernelError>;
    fn bfs_attach(&mut self, fh: FileHandle, offset: u64, size: u64) -> Result<(), KernelError>;
    fn bfs_attach_file(&mut self, fh: FileHandle) -> Result<(), KernelError>;
    fn bfs_detach(&mut self, fh: FileHandle, offset: u64, size: u64) -> Result<(), KernelError>;
    fn bfs_detach_file(&mut self, fh: FileHandle) -> Result<(), KernelError>;
    fn bfs_query(&mut self, fh: FileHandle, offset: u64, size: u64)
        -> Result<Vec<Owned>, KernelError>;
    fn bfs_query_file(&mut self, fh: FileHandle) -> Result<Vec<Owned>, KernelError>;
    fn bfs_flush(&mut self, fh: FileHandle, offset: u64, size: u64) -> Result<(), KernelError>;
    fn bfs_flush_file(&mut self, fh: FileHandle) -> Result<(), KernelError>;
    fn bfs_seek(&mut self, fh: FileHandle, offset: i64, whence: Whence)
        -> Result<u64, KernelError>;
    fn bfs_tell(&self, fh: FileHandle) -> Result<u64, KernelError>;
    fn bfs_stat(&mut self, fh: FileHandle) -> Result<u64, KernelError>;
}
