use crate::stats::{OpCounters, SpaceReport};

/// A dynamic prefix-sum structure over an array A[1..=n] of k-bit values.
///
/// Indices are 1-based. Callers must keep every element inside `[0, 2^k)`;
/// implementations panic on out-of-range indices or overflowing updates.
pub trait PartialSums {
    /// Number of elements n.
    fn len(&self) -> u64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Element width k in bits.
    fn value_width(&self) -> u32;

    /// A[1] + ... + A[i]; sum(0) = 0.
    fn sum(&self, i: u64) -> u64;

    /// A[i] += delta. The result must stay inside [0, 2^k).
    fn update(&mut self, i: u64, delta: i64);

    /// Smallest i with sum(i) >= j, or n+1 when even sum(n) falls short.
    fn search(&self, j: u64) -> u64;

    /// A[i], i.e. sum(i) - sum(i-1).
    fn access(&self, i: u64) -> u64 {
        self.sum(i) - self.sum(i - 1)
    }

    fn total(&self) -> u64 {
        self.sum(self.len())
    }

    /// Read/write tallies for the structure's primary storage.
    fn counters(&self) -> &OpCounters;

    /// Current memory footprint against the structure's own space bound.
    fn space(&self) -> SpaceReport;

    /// Short structure tag used in CLI output ("classic", "layered", ...).
    fn name(&self) -> &'static str;
}

/// One trace operation. `Update` carries a signed delta; the other three
/// produce a `u64` the differential runner compares across structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Sum { i: u64 },
    Update { i: u64, delta: i64 },
    Search { j: u64 },
    Access { i: u64 },
}

impl Op {
    pub fn kind(&self) -> OpKind {
        match self {
            Op::Sum { .. } => OpKind::Sum,
            Op::Update { .. } => OpKind::Update,
            Op::Search { .. } => OpKind::Search,
            Op::Access { .. } => OpKind::Access,
        }
    }

    /// Applies the op; queries return Some(answer), updates None.
    pub fn apply(&self, s: &mut dyn PartialSums) -> Option<u64> {
        match *self {
            Op::Sum { i } => Some(s.sum(i)),
            Op::Update { i, delta } => {
                s.update(i, delta);
                None
            }
            Op::Search { j } => Some(s.search(j)),
            Op::Access { i } => Some(s.access(i)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Sum,
    Update,
    Search,
    Access,
}

impl OpKind {
    pub const ALL: [OpKind; 4] = [OpKind::Sum, OpKind::Update, OpKind::Search, OpKind::Access];

    pub fn label(self) -> &'static str {
        match self {
            OpKind::Sum => "sum",
            OpKind::Update => "update",
            OpKind::Search => "search",
            OpKind::Access => "access",
        }
    }
}
