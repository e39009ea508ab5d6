//! A layered consistency stack for burst-buffer parallel file systems.
//!
//! * [`interval`]: ownership and write-buffer interval trees.
//! * [`sim`]: deterministic discrete-event cost model (clock, RPCs, devices).
//! * [`basefs`]: the base file system primitives (write, read-from-owner,
//!   attach, detach, query, flush) over one global server and many clients.
//! * [`layers`]: POSIX, commit and session consistency built only from those
//!   primitives.
//! * [`model`]: consistency models as synchronization sets plus minimum
//!   synchronization constructs, happens-before construction, storage race
//!   detection and a sequential-consistency enumeration oracle.
//! * [`trace_io`]: the line-oriented `.trace` format.
//! * [`bench`]: synthetic N-to-1, checkpoint/restart and deep-learning
//!   workloads with CSV reporting.

pub mod basefs;
pub mod bench;
pub mod exec;
pub mod interval;
pub mod layers;
pub mod model;
pub mod range;
pub mod sim;
pub mod trace_io;

pub use range::{ByteRange, RangeError};
