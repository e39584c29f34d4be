//! Storage-access instrumentation and space accounting.
//!
//! Every structure counts its logical storage touches (entry or word reads
//! and writes) in relaxed atomics so `&self` query paths can record costs.
//! The differential runner snapshots the counters around each operation to
//! assert per-op cost budgets.

use std::sync::atomic::{AtomicU64, Ordering::Relaxed};

#[derive(Debug, Default)]
pub struct OpCounters {
    reads: AtomicU64,
    writes: AtomicU64,
}

impl OpCounters {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn count_read(&self) {
        self.reads.fetch_add(1, Relaxed);
    }

    #[inline]
    pub fn count_write(&self) {
        self.writes.fetch_add(1, Relaxed);
    }

    pub fn snapshot(&self) -> OpStats {
        OpStats {
            reads: self.reads.load(Relaxed),
            writes: self.writes.load(Relaxed),
        }
    }

    pub fn reset(&self) {
        self.reads.store(0, Relaxed);
        self.writes.store(0, Relaxed);
    }
}

impl Clone for OpCounters {
    fn clone(&self) -> Self {
        let s = self.snapshot();
        OpCounters {
            reads: AtomicU64::new(s.reads),
            writes: AtomicU64::new(s.writes),
        }
    }
}

/// Cumulative logical storage accesses since the last reset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpStats {
    pub reads: u64,
    pub writes: u64,
}

impl OpStats {
    pub fn delta_since(&self, earlier: OpStats) -> OpStats {
        OpStats {
            reads: self.reads - earlier.reads,
            writes: self.writes - earlier.writes,
        }
    }
}

/// Itemized bit counts for a built structure, split into payload components
/// (the encoding itself) and metadata (lengths, offsets, parameters).
#[derive(Debug, Clone)]
pub struct SpaceReport {
    pub components: Vec<(String, u64)>,
    pub metadata_bits: u64,
    /// Claimed payload budget in bits (floor of the analytic bound, which is
    /// exact for integer payloads), plus a human-readable formula.
    pub bound_bits: u64,
    pub bound_desc: String,
}

impl SpaceReport {
    pub fn payload_bits(&self) -> u64 {
        self.components.iter().map(|(_, b)| b).sum()
    }

    pub fn within_bound(&self) -> bool {
        self.payload_bits() <= self.bound_bits
    }
}
