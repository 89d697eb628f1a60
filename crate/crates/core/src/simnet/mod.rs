//! Deterministic discrete-event network.
//!
//! Virtual time is an integer nanosecond count so that event ordering is
//! exact and identical on every platform. Ties are broken by insertion
//! sequence.

mod link;
mod queue;
mod world;

use std::fmt;
use std::ops::{Add, Sub};
use std::time::Duration;

pub use link::{Link, LinkId, LinkStats, Transmission};
pub use queue::{EventQueue, QueueError};
pub use world::{Event, MessageSizes, RunOutcome, Trace, TraceRecord, World};

/// A point in virtual time, in nanoseconds since the start of the run.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub fn from_secs_f64(s: f64) -> SimTime {
        SimTime((s * 1e9).round() as u64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn saturating_sub(self, rhs: SimTime) -> Duration {
        Duration::from_nanos(self.0.saturating_sub(rhs.0))
    }
}

impl Add<Duration> for SimTime {
    type Output = SimTime;
    fn add(self, rhs: Duration) -> SimTime {
        SimTime(self.0.saturating_add(rhs.as_nanos() as u64))
    }
}

impl Sub for SimTime {
    type Output = Duration;
    fn sub(self, rhs: SimTime) -> Duration {
        Duration::from_nanos(self.0 - rhs.0)
    }
}

impl fmt::Debug for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}s", self.as_secs_f64())
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}", self.as_secs_f64())
    }
}

/// Time to clock `bits` onto a link of `capacity_bps`, rounded to the
/// nearest nanosecond.
pub fn serialization_time(bits: u64, capacity_bps: u64) -> Duration {
    let ns = (bits as u128 * 1_000_000_000 + capacity_bps as u128 / 2) / capacity_bps as u128;
    Duration::from_nanos(ns as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_arithmetic() {
        // 5 KB payload plus 150 bytes of overhead on 5 Mbps.
        assert_eq!(serialization_time(42_160, 5_000_000), Duration::from_nanos(8_432_000));
        assert_eq!(serialization_time(1, 3), Duration::from_nanos(333_333_333));
    }

    #[test]
    fn time_conversions() {
        assert_eq!(SimTime::from_secs_f64(0.4096).as_nanos(), 409_600_000);
        assert_eq!(SimTime(1_500_000_000) + Duration::from_millis(500), SimTime(2_000_000_000));
        assert_eq!(SimTime(5) - SimTime(2), Duration::from_nanos(3));
    }
}
