//! b-ary layered prefix-sum tree with bit-packed entries.
//!
//! The array is cut into blocks of b; level j (1 = top) stores, for each
//! block of b units at scale b^(l+1-j), the first b-1 running prefix sums of
//! that block. Block totals are the units of the level above, so each prefix
//! sum needs one stored entry per nonzero digit of the index written in
//! base b, and an update touches at most b-1 entries per level.
//!
//! Entries at level j never exceed their coverage total, so they fit in
//! k + (l-j+2)*ceil(log2 b) bits, clamped to k + ceil(log2 n); packing each
//! level at that width gives the n*k + O(n log b) payload.

use crate::bits::{ceil_log2, mask, PackedIntArray};
use crate::error::{Error, Result};
use crate::stats::{OpCounters, SpaceReport};
use crate::traits::PartialSums;

/// Largest supported array length; keeps every block arithmetic inside u64.
pub const MAX_N: u64 = 1 << 40;
/// Largest supported branching factor.
pub const MAX_B: u64 = 1 << 20;

/// Shape of one level: entry count, packed entry width, and the number of
/// array elements behind one unit at this level (b^(l+1-j)).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelGeom {
    pub size: u64,
    pub width: u32,
    pub scale: u64,
}

/// Index arithmetic for an (n, k, b) level decomposition. Levels are
/// numbered 1 (top) through l+1 (bottom, scale 1); offsets within a level
/// are 1-based. Entry (level j, offset o) sits in block B = (o-1)/(b-1) as
/// in-block rank q = o - (b-1)B and covers elements
/// [B*b*s + 1, (B*b + q)*s] at scale s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Geometry {
    n: u64,
    k: u32,
    b: u64,
    /// ceil(log2 b): bits per base-b digit.
    c: u32,
    /// ceil(log_b n): smallest e with b^e >= n.
    ell: u32,
    levels: Vec<LevelGeom>,
}

impl Geometry {
    pub fn new(n: u64, k: u32, b: u64) -> Result<Geometry> {
        if !(1..=MAX_N).contains(&n) {
            return Err(Error::invalid(format!("length {n} outside 1..={MAX_N}")));
        }
        if !(1..=63).contains(&k) {
            return Err(Error::invalid(format!("element width {k} outside 1..=63")));
        }
        if !(2..=MAX_B).contains(&b) {
            return Err(Error::invalid(format!("branching factor {b} outside 2..={MAX_B}")));
        }
        if ceil_log2(n) + k > 63 {
            return Err(Error::invalid(format!(
                "total capacity overflows: ceil(log2 {n}) + {k} > 63"
            )));
        }
        let c = ceil_log2(b);
        let mut ell = 0u32;
        let mut top = 1u64;
        while top < n {
            top *= b; // top <= n*b <= 2^60: no overflow
            ell += 1;
        }
        // entry values never exceed min(their coverage total, the whole sum)
        let width_cap = k + ceil_log2(n);
        let mut levels = Vec::with_capacity(ell as usize + 1);
        let mut scale = top; // b^(l+1-j), starting at j = 1
        for j in 1..=ell + 1 {
            let units = n / scale;
            let size = units - units / b;
            let width = (k + (ell + 2 - j) * c).min(width_cap);
            levels.push(LevelGeom { size, width, scale });
            scale /= b;
        }
        debug_assert_eq!(levels.iter().map(|lv| lv.size).sum::<u64>(), n);
        Ok(Geometry { n, k, b, c, ell, levels })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    /// ceil(log2 b).
    pub fn digit_bits(&self) -> u32 {
        self.c
    }

    /// ceil(log_b n).
    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn num_levels(&self) -> u32 {
        self.ell + 1
    }

    pub fn levels(&self) -> &[LevelGeom] {
        &self.levels
    }

    pub fn level(&self, j: u32) -> &LevelGeom {
        &self.levels[j as usize - 1]
    }

    /// Base-b digits of i, most significant first, always l+1 of them.
    pub fn digits(&self, i: u64) -> Vec<u64> {
        assert!(i <= self.n, "index {i} out of 0..={}", self.n);
        let mut out = Vec::with_capacity(self.levels.len());
        let mut rest = i;
        for lv in &self.levels {
            out.push(rest / lv.scale);
            rest %= lv.scale;
        }
        out
    }

    /// Calls f(level j, block B, rank q) for the one entry per nonzero digit
    /// of i whose coverages partition [1, i].
    #[inline]
    pub fn for_each_sum_pos(&self, i: u64, mut f: impl FnMut(u32, u64, u32)) {
        debug_assert!(i <= self.n);
        let mut prefix = 0u64; // digits x_1..x_{j-1} of i as an integer
        let mut rest = i;
        for (t, lv) in self.levels.iter().enumerate() {
            let x = rest / lv.scale;
            rest %= lv.scale;
            if x != 0 {
                f(t as u32 + 1, prefix, x as u32);
            }
            prefix = prefix * self.b + x;
        }
    }

    /// The (level, offset) entries summed by `sum(i)`.
    pub fn sum_offsets(&self, i: u64) -> Vec<(u32, u64)> {
        assert!(i <= self.n, "index {i} out of 0..={}", self.n);
        let mut out = Vec::new();
        self.for_each_sum_pos(i, |j, block, q| {
            out.push((j, (self.b - 1) * block + q as u64));
        });
        out
    }

    /// Calls f(level j, block B, q_lo, q_hi) for every level where update(i)
    /// must touch entries; the affected entries are the materialized ranks
    /// q_lo..=q_hi of one block. Derived from the digits of i-1: at level j
    /// the entries covering i are exactly the block-(prefix of i-1) ranks
    /// above digit y_j.
    #[inline]
    pub fn for_each_update_range(&self, i: u64, mut f: impl FnMut(u32, u64, u32, u32)) {
        debug_assert!(i >= 1 && i <= self.n);
        let mut prefix = 0u64; // digits y_1..y_{j-1} of i-1 as an integer
        let mut rest = i - 1;
        for (t, lv) in self.levels.iter().enumerate() {
            let y = rest / lv.scale;
            rest %= lv.scale;
            let q_lo = y as u32 + 1;
            // ranks present in block `prefix`, capped by the level size
            let avail = lv.size.saturating_sub((self.b - 1) * prefix).min(self.b - 1) as u32;
            if q_lo <= avail {
                f(t as u32 + 1, prefix, q_lo, avail);
            }
            prefix = prefix * self.b + y;
        }
    }

    /// The (level, offset) entries adjusted by `update(i, _)`: every
    /// materialized entry whose coverage interval contains i.
    pub fn update_targets(&self, i: u64) -> Vec<(u32, u64)> {
        assert!(i >= 1 && i <= self.n, "index {i} out of 1..={}", self.n);
        let mut out = Vec::new();
        self.for_each_update_range(i, |j, block, q_lo, q_hi| {
            for q in q_lo..=q_hi {
                out.push((j, (self.b - 1) * block + q as u64));
            }
        });
        out
    }

    /// Coverage interval [lo, hi] of entry (level j, offset o).
    pub fn coverage(&self, j: u32, offset: u64) -> (u64, u64) {
        let lv = self.level(j);
        assert!(offset >= 1 && offset <= lv.size, "offset {offset} out of level {j}");
        let block = (offset - 1) / (self.b - 1);
        let q = offset - (self.b - 1) * block;
        let lo = block * self.b * lv.scale + 1;
        let hi = (block * self.b + q) * lv.scale;
        (lo, hi)
    }

    /// Number of materialized ranks in block B of level j (0..=b-1).
    pub fn block_ranks(&self, j: u32, block: u64) -> u32 {
        let lv = self.level(j);
        lv.size.saturating_sub((self.b - 1) * block).min(self.b - 1) as u32
    }

    /// Payload of one level and the whole tree, in bits.
    pub fn payload_bits(&self) -> u64 {
        self.levels.iter().map(|lv| lv.size * lv.width as u64).sum()
    }
}

/// Builds the per-level packed entry arrays for `values`, reusing one
/// scratch vector of unit sums per level.
pub(crate) fn build_levels(geo: &Geometry, values: &[u64]) -> Vec<PackedIntArray> {
    let b = geo.b();
    let mut arrays: Vec<PackedIntArray> = geo
        .levels()
        .iter()
        .map(|lv| PackedIntArray::new(lv.size, lv.width))
        .collect();
    let mut cur: Vec<u64> = values.to_vec();
    for t in (0..geo.num_levels()).rev() {
        let arr = &mut arrays[t as usize];
        let units = cur.len() as u64;
        debug_assert_eq!(units, geo.n() / geo.levels()[t as usize].scale);
        let mut acc = 0u64;
        let mut rank = 0u64;
        for u in 1..=units {
            if (u - 1) % b == 0 {
                acc = 0;
            }
            acc += cur[u as usize - 1];
            if u % b != 0 {
                rank += 1;
                arr.set(rank, acc);
            }
        }
        debug_assert_eq!(rank, arr.len());
        // block totals become the units of the level above
        let full_blocks = units / b;
        for blk in 0..full_blocks {
            let base = (blk * b) as usize;
            cur[blk as usize] = cur[base..base + b as usize].iter().sum();
        }
        cur.truncate(full_blocks as usize);
    }
    arrays
}

#[derive(Debug, Clone)]
pub struct LayeredFenwick {
    geo: Geometry,
    levels: Vec<PackedIntArray>,
    counters: OpCounters,
}

impl LayeredFenwick {
    pub fn new(values: &[u64], k: u32, b: u64) -> Result<LayeredFenwick> {
        let geo = Geometry::new(values.len() as u64, k, b)?;
        if let Some(&v) = values.iter().find(|&&v| v > mask(k)) {
            return Err(Error::ValueOverflow { value: v, width: k });
        }
        let levels = build_levels(&geo, values);
        Ok(LayeredFenwick {
            geo,
            levels,
            counters: OpCounters::new(),
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geo
    }

    /// Entry value without touching the instrumentation (diagnostics only).
    pub fn peek_entry(&self, j: u32, offset: u64) -> u64 {
        self.levels[j as usize - 1].get(offset)
    }

    pub(crate) fn level_arrays(&self) -> &[PackedIntArray] {
        &self.levels
    }

    pub(crate) fn from_parts(geo: Geometry, levels: Vec<PackedIntArray>) -> LayeredFenwick {
        debug_assert_eq!(geo.levels().len(), levels.len());
        LayeredFenwick {
            geo,
            levels,
            counters: OpCounters::new(),
        }
    }

    #[inline]
    fn read_entry(&self, level_idx: u32, offset: u64) -> u64 {
        self.counters.count_read();
        self.levels[level_idx as usize - 1].get(offset)
    }

    pub(crate) fn sum_uncounted(&self, i: u64) -> u64 {
        let mut acc = 0u64;
        self.geo.for_each_sum_pos(i, |j, block, q| {
            acc += self.levels[j as usize - 1].get((self.geo.b() - 1) * block + q as u64);
        });
        acc
    }
}

impl PartialSums for LayeredFenwick {
    fn len(&self) -> u64 {
        self.geo.n()
    }

    fn value_width(&self) -> u32 {
        self.geo.k()
    }

    fn sum(&self, i: u64) -> u64 {
        assert!(i <= self.len(), "sum index {i} out of 0..={}", self.len());
        let mut acc = 0u64;
        self.geo.for_each_sum_pos(i, |j, block, q| {
            acc += self.read_entry(j, (self.geo.b() - 1) * block + q as u64);
        });
        acc
    }

    fn update(&mut self, i: u64, delta: i64) {
        assert!(i >= 1 && i <= self.len(), "index {i} out of 1..={}", self.len());
        let cur = self.sum_uncounted(i) - self.sum_uncounted(i - 1);
        let next = cur
            .checked_add_signed(delta)
            .expect("update drives element negative");
        assert!(next <= mask(self.geo.k()), "update overflows {} bits", self.geo.k());
        let LayeredFenwick { geo, levels, counters } = self;
        let b = geo.b();
        geo.for_each_update_range(i, |j, block, q_lo, q_hi| {
            let arr = &mut levels[j as usize - 1];
            for q in q_lo..=q_hi {
                let o = (b - 1) * block + q as u64;
                let v = arr.get(o).checked_add_signed(delta).unwrap();
                counters.count_write();
                arr.set(o, v);
            }
        });
    }

    fn search(&self, j: u64) -> u64 {
        assert!(j >= 1, "search target must be >= 1");
        let b = self.geo.b();
        let mut prefix = 0u64; // unit index chosen so far, also the digit prefix
        let mut acc = 0u64; // sum(prefix * scale), always < j
        for lvl in 1..=self.geo.num_levels() {
            let avail = self.geo.block_ranks(lvl, prefix);
            // largest rank q with acc + entry(q) < j (entry(0) = 0); the
            // value at the chosen rank rides along to avoid a reread
            let (mut lo, mut hi, mut lo_val) = (0u32, avail, 0u64);
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                let v = self.read_entry(lvl, (b - 1) * prefix + mid as u64);
                if acc + v < j {
                    lo = mid;
                    lo_val = v;
                } else {
                    hi = mid - 1;
                }
            }
            prefix = prefix * b + lo as u64;
            acc += lo_val;
        }
        prefix + 1
    }

    fn counters(&self) -> &OpCounters {
        &self.counters
    }

    fn space(&self) -> SpaceReport {
        let geo = &self.geo;
        let components = geo
            .levels()
            .iter()
            .enumerate()
            .map(|(t, lv)| {
                (
                    format!("level {} ({} x {}b)", t + 1, lv.size, lv.width),
                    lv.size * lv.width as u64,
                )
            })
            .collect();
        let bound = geo.n() * geo.k() as u64 + 2 * geo.n() * geo.digit_bits() as u64;
        SpaceReport {
            components,
            metadata_bits: 64 + 32 + 64,
            bound_bits: bound,
            bound_desc: format!("n*k + 2*n*ceil(log2 b) = {bound}"),
        }
    }

    fn name(&self) -> &'static str {
        "layered"
    }
}
