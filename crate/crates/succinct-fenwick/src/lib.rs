//! Dynamic partial sums over fixed-width integer arrays.
//!
//! Four interchangeable structures maintain an array A[1..=n] of k-bit
//! values under `sum` (prefix sum), `update` (point add), `search` (smallest
//! prefix reaching a target), and `access`:
//!
//! * [`ClassicFenwick`]: the textbook binary indexed tree, one word per slot.
//! * [`LayeredFenwick`]: a branching-factor-b level decomposition whose
//!   entries are bit-packed at per-level widths, nk + O(n log b) bits.
//! * [`SampledFenwick`]: keeps every d-th prefix in a layered tree and the
//!   rest as raw k-bit values, nk + o(nk) bits at the price of O(d)-element
//!   scans.
//! * [`PackedFenwick`]: the sampled layout with buffered counters packed
//!   many-per-word, so an update touches O(1) words per level.
//!
//! All of them implement [`PartialSums`] and can be replayed against the
//! [`oracle`] reference for differential testing. The `sfen` binary exposes
//! build/query/verify/bench/space over files.

pub mod bits;
pub mod classic;
pub mod cli;
pub mod layered;
pub mod packed;
pub mod sampled;
pub mod error;
pub mod files;
pub mod oracle;
pub mod stats;
mod traits;

pub use classic::ClassicFenwick;
pub use layered::LayeredFenwick;
pub use packed::{PackedFenwick, PackedParams};
pub use sampled::{derive_sample_rate, SampledFenwick};
pub use error::{Error, Result};
pub use files::{AnyStructure, StructureKind};
pub use stats::{OpCounters, OpStats, SpaceReport};
pub use traits::{Op, OpKind, PartialSums};
