use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

const PS_PER_SEC: f64 = 1e12;

/// Simulated time (or a span of it) in integer picoseconds, so runs are
/// bit-for-bit reproducible.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs(secs: f64) -> SimTime {
        SimTime((secs * PS_PER_SEC).round() as u64)
    }

    pub fn from_micros(us: u64) -> SimTime {
        SimTime(us * 1_000_000)
    }

    /// Time to move `bytes` at `bytes_per_sec`.
    pub fn transfer(bytes: u64, bytes_per_sec: f64) -> SimTime {
        SimTime((bytes as f64 * PS_PER_SEC / bytes_per_sec).round() as u64)
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / PS_PER_SEC
    }

    pub fn as_picos(self) -> u64 {
        self.0
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}s", self.as_secs())
    }
}
