//! Byte-range interval trees: the server's ownership map ([`GlobalTree`]) and
//! each client's map of buffered writes ([`LocalTree`]).
//!
//! Both are balanced search trees (B-trees) keyed by interval start and kept
//! in canonical form: disjoint, with mergeable neighbours always merged.

mod global;
mod local;

use thiserror::Error;

use crate::range::ByteRange;

pub use global::{GlobalInterval, GlobalTree};
pub use local::{LocalInterval, LocalTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("range {0} contains bytes that were never written locally")]
    UnwrittenBytes(ByteRange),
    #[error("range {0} is already attached")]
    AlreadyAttached(ByteRange),
    #[error("file range of {file} bytes mapped onto buffer range of {buffer} bytes")]
    LengthMismatch { file: u64, buffer: u64 },
}
