//! Word-packed structure: buffered counters over the sampled layout.
//!
//! The tree over group totals is the same level decomposition as
//! [`LayeredFenwick`], but instead of rewriting up to b-1 entries per level,
//! an update adds its delta to a per-block pending word holding b-1
//! bias-encoded counters (one SWAR suffix add), then transfers exactly one
//! counter to its entry in round-robin order. With b-1 chosen so that the
//! worst accumulation between flushes fits a counter field, every level
//! costs O(1) word operations and counters never overflow.
//!
//! The kept elements live in a word-aligned base (floor(w/k) elements per
//! word, no straddling) so group scans are word-parallel prefix sums.
//!
//! On counting: the structure's primary counters track tree words only
//! (entry and pending accesses); base words and flush cursors are tallied
//! separately in [`PackedFenwick::aux_counters`], matching how the per-level
//! word budgets are stated.

use crate::bits::{ceil_log2, mask, FieldedWord, PackedIntArray, WORD_BITS};
use crate::error::{Error, Result};
use crate::layered::{build_levels, Geometry};
use crate::stats::{OpCounters, SpaceReport};
use crate::traits::PartialSums;

/// Derived shape of the packed structure for machine word w = 64.
///
/// b-1 balances two pressures: more counters per word means fewer levels,
/// but each counter must hold (b-1) deltas of delta_bits magnitude plus a
/// sign, so (b-1)(delta_bits + ceil(log2(b-1)) + 1) <= w.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PackedParams {
    /// Max update magnitude bits: |delta| < 2^delta_bits.
    pub delta_bits: u32,
    /// Tree branching factor; b-1 counters share one pending word.
    pub b: u64,
    /// Counter field width floor(w/(b-1)).
    pub f: u32,
    /// Base sample rate.
    pub d: u64,
}

impl PackedParams {
    pub fn derive(n: u64, k: u32, delta_bits: u32) -> Result<PackedParams> {
        let w = WORD_BITS;
        if n < 1 {
            return Err(Error::invalid("length 0 outside 1..".to_string()));
        }
        if delta_bits < 1 || delta_bits >= w {
            return Err(Error::invalid(format!(
                "delta width {delta_bits} violates 1 <= delta_bits < {w}"
            )));
        }
        if k < 1 || k > w / 2 {
            return Err(Error::invalid(format!(
                "element width {k} violates 1 <= k <= w/2 = {}",
                w / 2
            )));
        }
        let bm1 = (w / (2 * (ceil_log2(w as u64) + delta_bits))).max(1) as u64;
        let f = w / bm1 as u32;
        let need = bm1 as u32 * (delta_bits + ceil_log2(bm1.max(1)) + 1);
        if need > w {
            return Err(Error::invalid(format!(
                "counter overflow inequality violated: \
                 (b-1)*(delta_bits + ceil(log2(b-1)) + 1) = {need} > {w}"
            )));
        }
        // d = round(w log2 n / (k log2(w/delta))), kept inside [1, n] so at
        // least one full group exists
        let num = w as f64 * (n as f64).log2();
        let den = k as f64 * (w as f64 / delta_bits as f64).log2();
        let d = ((num / den).round() as u64).clamp(1, n);
        Ok(PackedParams { delta_bits, b: bm1 + 1, f, d })
    }

    /// Bias added to pending counters so negative deltas stay unsigned.
    #[inline]
    pub fn bias(&self) -> u64 {
        1u64 << (self.f - 1)
    }
}

/// Kept base elements, floor(w/k) per word with no straddling.
#[derive(Debug, Clone, PartialEq, Eq)]
struct WordBase {
    words: Vec<u64>,
    count: u64,
    k: u32,
    per_word: u32,
}

impl WordBase {
    fn new(count: u64, k: u32) -> WordBase {
        let per_word = WORD_BITS / k;
        let words = count.div_ceil(per_word as u64) as usize;
        WordBase { words: vec![0; words], count, k, per_word }
    }

    /// Word index and in-word field of slot t (1-based).
    #[inline]
    fn locate(&self, t: u64) -> (usize, u32) {
        debug_assert!(t >= 1 && t <= self.count);
        (
            ((t - 1) / self.per_word as u64) as usize,
            ((t - 1) % self.per_word as u64) as u32 + 1,
        )
    }

    #[inline]
    fn view(&self, widx: usize) -> FieldedWord {
        FieldedWord::new(self.words[widx], self.k)
    }

    fn get(&self, t: u64) -> u64 {
        let (widx, q) = self.locate(t);
        self.view(widx).field(q)
    }

    fn set(&mut self, t: u64, v: u64) {
        let (widx, q) = self.locate(t);
        self.words[widx] = self.view(widx).set_field(q, v).word();
    }

    fn payload_bits(&self) -> u64 {
        self.words.len() as u64 * 64
    }
}

#[derive(Debug, Clone)]
pub struct PackedFenwick {
    params: PackedParams,
    n: u64,
    k: u32,
    /// Full-group count floor(n/d).
    groups: u64,
    /// Level decomposition over the group totals.
    geo: Geometry,
    entries: Vec<PackedIntArray>,
    /// One pending word per block of b-1 entries, per level.
    pending: Vec<Vec<u64>>,
    /// Round-robin flush position minus one, per block, per level.
    cursors: Vec<PackedIntArray>,
    base: WordBase,
    /// Tree words: entry and pending accesses.
    tree_counters: OpCounters,
    /// Everything else: cursor and base-word accesses.
    aux_counters: OpCounters,
    /// Peak decoded |counter| ever observed (instrumentation).
    max_pending: u64,
}

impl PackedFenwick {
    pub fn new(values: &[u64], k: u32, delta_bits: u32) -> Result<PackedFenwick> {
        let n = values.len() as u64;
        let params = PackedParams::derive(n, k, delta_bits)?;
        if let Some(&v) = values.iter().find(|&&v| v > mask(k)) {
            return Err(Error::ValueOverflow { value: v, width: k });
        }
        let d = params.d;
        let groups = n / d;
        let totals: Vec<u64> = (0..groups)
            .map(|g| values[(g * d) as usize..((g + 1) * d) as usize].iter().sum())
            .collect();
        let geo = Geometry::new(groups, k + ceil_log2(d), params.b)?;
        let entries = build_levels(&geo, &totals);
        let bm1 = params.b - 1;
        let idle = FieldedWord::from_fields(&vec![params.bias(); bm1 as usize], params.f).word();
        let pending: Vec<Vec<u64>> = geo
            .levels()
            .iter()
            .map(|lv| vec![idle; lv.size.div_ceil(bm1) as usize])
            .collect();
        let cursor_width = ceil_log2(bm1).max(1);
        let cursors = geo
            .levels()
            .iter()
            .map(|lv| PackedIntArray::new(lv.size.div_ceil(bm1), cursor_width))
            .collect();
        let mut base = WordBase::new(n - groups, k);
        let mut slot = 0;
        for (t, &v) in values.iter().enumerate() {
            let i = t as u64 + 1;
            if !i.is_multiple_of(d) || i > groups * d {
                slot += 1;
                base.set(slot, v);
            }
        }
        debug_assert_eq!(slot, base.count);
        Ok(PackedFenwick {
            params,
            n,
            k,
            groups,
            geo,
            entries,
            pending,
            cursors,
            base,
            tree_counters: OpCounters::new(),
            aux_counters: OpCounters::new(),
            max_pending: 0,
        })
    }

    pub fn params(&self) -> &PackedParams {
        &self.params
    }

    pub fn sample_rate(&self) -> u64 {
        self.params.d
    }

    /// Counters for cursor and base-word traffic (tree words are in
    /// `counters()`).
    pub fn aux_counters(&self) -> &OpCounters {
        &self.aux_counters
    }

    /// Largest decoded pending-counter magnitude seen so far; stays below
    /// 2^(f-1) by construction.
    pub fn max_pending_seen(&self) -> u64 {
        self.max_pending
    }

    #[inline]
    fn decode(&self, field: u64) -> i64 {
        let sh = 64 - self.params.f;
        ((field.wrapping_sub(self.params.bias()) << sh) as i64) >> sh
    }

    #[inline]
    fn pending_word(&self, level_idx: usize, block: u64) -> FieldedWord {
        FieldedWord::new(self.pending[level_idx][block as usize], self.params.f)
    }

    /// Entry value as the world sees it: stored plus decoded pending.
    pub fn true_entry(&self, j: u32, offset: u64) -> u64 {
        let bm1 = self.params.b - 1;
        let block = (offset - 1) / bm1;
        let q = (offset - (bm1 * block)) as u32;
        let stored = self.entries[j as usize - 1].get(offset);
        let dec = self.decode(self.pending_word(j as usize - 1, block).field(q));
        stored.checked_add_signed(dec).unwrap()
    }

    #[cfg(test)]
    fn decoded_pending(&self, j: u32, block: u64) -> Vec<i64> {
        let w = self.pending_word(j as usize - 1, block);
        (1..=self.geo.block_ranks(j, block))
            .map(|q| self.decode(w.field(q)))
            .collect()
    }

    /// Brute-force invariant check against the current plain array: every
    /// materialized entry's stored + pending equals its coverage sum, and
    /// the base holds exactly the kept elements.
    pub fn verify_read_through(&self, values: &[u64]) -> std::result::Result<(), String> {
        assert_eq!(values.len() as u64, self.n);
        let d = self.params.d;
        let prefix: Vec<u64> = std::iter::once(0)
            .chain(values.iter().scan(0u64, |acc, &v| {
                *acc += v;
                Some(*acc)
            }))
            .collect();
        for j in 1..=self.geo.num_levels() {
            for o in 1..=self.geo.level(j).size {
                let (lo_g, hi_g) = self.geo.coverage(j, o);
                let want = prefix[(hi_g * d) as usize] - prefix[((lo_g - 1) * d) as usize];
                let got = self.true_entry(j, o);
                if got != want {
                    return Err(format!(
                        "level {j} offset {o}: stored+pending {got} != coverage sum {want}"
                    ));
                }
            }
        }
        let mut slot = 0;
        for (t, &v) in values.iter().enumerate() {
            let i = t as u64 + 1;
            if !i.is_multiple_of(d) || i > self.groups * d {
                slot += 1;
                if self.base.get(slot) != v {
                    return Err(format!("base slot {slot}: {} != element {v}", self.base.get(slot)));
                }
            }
        }
        Ok(())
    }

    /// Prefix over the tree of group totals, reading one entry and one
    /// pending word per nonzero digit.
    fn tree_sum(&self, g: u64, counted: bool) -> u64 {
        let bm1 = self.params.b - 1;
        let mut acc = 0i64;
        self.geo.for_each_sum_pos(g, |j, block, q| {
            if counted {
                self.tree_counters.count_read(); // entry
                self.tree_counters.count_read(); // pending word
            }
            let stored = self.entries[j as usize - 1].get(bm1 * block + q as u64);
            let dec = self.decode(self.pending_word(j as usize - 1, block).field(q));
            acc += stored as i64 + dec;
        });
        acc as u64
    }

    /// Sum of base slots lo..=hi (0 when lo > hi) via word-parallel prefix
    /// sums: at most one word per floor(w/k) slots, plus one for alignment.
    fn base_range_sum(&self, lo: u64, hi: u64, counted: bool) -> u64 {
        if lo > hi {
            return 0;
        }
        let (w_lo, q_lo) = self.base.locate(lo);
        let (w_hi, q_hi) = self.base.locate(hi);
        let mut acc = 0u64;
        for widx in w_lo..=w_hi {
            if counted {
                self.aux_counters.count_read();
            }
            let word = self.base.view(widx);
            let a = if widx == w_lo { q_lo } else { 1 };
            let z = if widx == w_hi { q_hi } else { word.nfields() };
            acc += word.prefix_sum(z) - word.prefix_sum(a - 1);
        }
        acc
    }

    fn access_uncounted(&self, i: u64) -> u64 {
        let d = self.params.d;
        if !i.is_multiple_of(d) {
            let g = (i - 1) / d;
            return self.base.get(g * (d - 1) + (i - g * d));
        }
        let g = i / d;
        let group_total = self.tree_sum(g, false) - self.tree_sum(g - 1, false);
        group_total - self.base_range_sum((g - 1) * (d - 1) + 1, g * (d - 1), false)
    }
}

impl PartialSums for PackedFenwick {
    fn len(&self) -> u64 {
        self.n
    }

    fn value_width(&self) -> u32 {
        self.k
    }

    fn sum(&self, i: u64) -> u64 {
        assert!(i <= self.n, "sum index {i} out of 0..={}", self.n);
        let d = self.params.d;
        let g = i / d;
        let r = i - g * d;
        let slot0 = g * (d - 1);
        self.tree_sum(g, true) + self.base_range_sum(slot0 + 1, slot0 + r, true)
    }

    fn update(&mut self, i: u64, delta: i64) {
        assert!(i >= 1 && i <= self.n, "index {i} out of 1..={}", self.n);
        assert!(
            delta.unsigned_abs() < 1u64 << self.params.delta_bits,
            "delta {delta} too large: |delta| must stay below 2^{}",
            self.params.delta_bits
        );
        let cur = self.access_uncounted(i);
        let next = cur
            .checked_add_signed(delta)
            .expect("update drives element negative");
        assert!(next <= mask(self.k), "update overflows {} bits", self.k);

        let d = self.params.d;
        let bm1 = self.params.b - 1;
        let g = i.div_ceil(d);
        if g <= self.groups {
            let PackedFenwick {
                params,
                geo,
                entries,
                pending,
                cursors,
                tree_counters,
                aux_counters,
                max_pending,
                ..
            } = self;
            let bias = params.bias();
            let sh = 64 - params.f;
            geo.for_each_update_range(g, |j, block, q_lo, q_hi| {
                let lidx = j as usize - 1;
                tree_counters.count_read();
                let word = FieldedWord::new(pending[lidx][block as usize], params.f);
                // one SWAR add over the suffix of materialized ranks
                let mut word = if delta >= 0 {
                    word.range_add(q_lo, q_hi, delta as u64)
                } else {
                    word.range_sub(q_lo, q_hi, delta.unsigned_abs())
                };
                for q in 1..=q_hi {
                    let mag = (((word.field(q).wrapping_sub(bias) << sh) as i64) >> sh)
                        .unsigned_abs();
                    *max_pending = (*max_pending).max(mag);
                    debug_assert!(mag < 1u64 << (params.f - 1), "pending counter overflow");
                }
                // cyclic flush: move one counter into its entry
                aux_counters.count_read();
                let cur = cursors[lidx].get(block + 1) as u32 + 1;
                let q_c = cur.min(q_hi);
                let dec = ((word.field(q_c).wrapping_sub(bias) << sh) as i64) >> sh;
                let o = bm1 * block + q_c as u64;
                tree_counters.count_read();
                let stored = entries[lidx].get(o).checked_add_signed(dec).unwrap();
                tree_counters.count_write();
                entries[lidx].set(o, stored);
                word = word.set_field(q_c, bias);
                tree_counters.count_write();
                pending[lidx][block as usize] = word.word();
                aux_counters.count_write();
                cursors[lidx].set(block + 1, (cur % q_hi) as u64);
            });
        }
        if !i.is_multiple_of(d) {
            let gg = (i - 1) / d;
            let slot = gg * (d - 1) + (i - gg * d);
            let (widx, q) = self.base.locate(slot);
            self.aux_counters.count_read();
            let word = self.base.view(widx);
            self.aux_counters.count_write();
            self.base.words[widx] = word.set_field(q, next).word();
        }
    }

    fn search(&self, j: u64) -> u64 {
        assert!(j >= 1, "search target must be >= 1");
        let d = self.params.d;
        let bm1 = self.params.b - 1;
        // descend the tree on true values (stored + pending)
        let mut prefix = 0u64;
        let mut acc = 0u64;
        for lvl in 1..=self.geo.num_levels() {
            let avail = self.geo.block_ranks(lvl, prefix);
            let (mut lo, mut hi, mut lo_val) = (0u32, avail, 0u64);
            if avail > 0 {
                self.tree_counters.count_read(); // block's pending word
            }
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                self.tree_counters.count_read();
                let stored = self.entries[lvl as usize - 1].get(bm1 * prefix + mid as u64);
                let dec = self.decode(self.pending_word(lvl as usize - 1, prefix).field(mid));
                let v = stored.checked_add_signed(dec).unwrap();
                if acc + v < j {
                    lo = mid;
                    lo_val = v;
                } else {
                    hi = mid - 1;
                }
            }
            prefix = prefix * self.params.b + lo as u64;
            acc += lo_val;
        }
        let g = prefix + 1; // candidate group, tree sentinel included
        // acc is already the sum of the g-1 prior groups, no second pass
        let (prior, limit) = if g <= self.groups {
            (acc, d - 1)
        } else {
            (acc, self.n - self.groups * d)
        };
        let first = (g - 1).min(self.groups) * d;
        let slot0 = (g - 1).min(self.groups) * (d - 1);
        // word-parallel scan of the group's kept slots
        let mut acc = prior;
        let mut t = 1;
        while t <= limit {
            let (widx, q_a) = self.base.locate(slot0 + t);
            self.aux_counters.count_read();
            let word = self.base.view(widx);
            let span = ((word.nfields() - q_a + 1) as u64).min(limit - t + 1) as u32;
            let before = word.prefix_sum(q_a - 1);
            let chunk = word.prefix_sum(q_a + span - 1) - before;
            if acc + chunk >= j {
                let q = word.search(j - acc + before);
                return first + t + (q - q_a) as u64;
            }
            acc += chunk;
            t += span as u64;
        }
        if g <= self.groups {
            // kept slots fell short: the group's dropped element carries it
            g * d
        } else {
            self.n + 1
        }
    }

    fn access(&self, i: u64) -> u64 {
        assert!(i >= 1 && i <= self.n, "index {i} out of 1..={}", self.n);
        self.sum(i) - self.sum(i - 1)
    }

    fn counters(&self) -> &OpCounters {
        &self.tree_counters
    }

    fn space(&self) -> SpaceReport {
        let mut components = vec![(
            format!("base words ({} x {}b kept)", self.base.count, self.k),
            self.base.payload_bits(),
        )];
        for (t, lv) in self.geo.levels().iter().enumerate() {
            components.push((
                format!("level {} entries ({} x {}b)", t + 1, lv.size, lv.width),
                lv.size * lv.width as u64,
            ));
        }
        let blocks: u64 = self.pending.iter().map(|p| p.len() as u64).sum();
        components.push((format!("pending words ({blocks})"), blocks * 64));
        let cursor_bits: u64 = self.cursors.iter().map(|c| c.payload_bits()).sum();
        components.push((format!("flush cursors ({blocks})"), cursor_bits));
        // measured-constant form of the packed space expression, c = 4
        let dd = self.params.d;
        let over = 4 * self.n * (self.params.delta_bits + ceil_log2(64)) as u64 / dd;
        let bound = self.n * self.k as u64 + over;
        SpaceReport {
            components,
            metadata_bits: 64 + 32 + 32 + 64 + 32 + 64,
            bound_bits: bound,
            bound_desc: format!("n*k + 4*n*(delta_bits + log2 w)/d = {bound}"),
        }
    }

    fn name(&self) -> &'static str {
        "packed"
    }
}

pub(crate) mod parts {
    //! Raw-buffer access for serialization.
    use super::*;

    pub struct PackedParts<'a> {
        pub params: PackedParams,
        pub entries: &'a [PackedIntArray],
        pub pending: &'a [Vec<u64>],
        pub cursors: &'a [PackedIntArray],
        pub base_words: &'a [u64],
    }

    impl PackedFenwick {
        pub(crate) fn parts(&self) -> PackedParts<'_> {
            PackedParts {
                params: self.params,
                entries: &self.entries,
                pending: &self.pending,
                cursors: &self.cursors,
                base_words: &self.base.words,
            }
        }

        pub(crate) fn from_parts(
            params: PackedParams,
            n: u64,
            k: u32,
            entries: Vec<PackedIntArray>,
            pending: Vec<Vec<u64>>,
            cursors: Vec<PackedIntArray>,
            base_words: Vec<u64>,
        ) -> Result<PackedFenwick> {
            let groups = n / params.d;
            let geo = Geometry::new(groups, k + ceil_log2(params.d), params.b)?;
            let count = n - groups;
            let per_word = WORD_BITS / k;
            if base_words.len() as u64 != count.div_ceil(per_word as u64) {
                return Err(Error::invalid("base word count mismatch".to_string()));
            }
            Ok(PackedFenwick {
                params,
                n,
                k,
                groups,
                geo,
                entries,
                pending,
                cursors,
                base: WordBase { words: base_words, count, k, per_word },
                tree_counters: OpCounters::new(),
                aux_counters: OpCounters::new(),
                max_pending: 0,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{differential_run, gen_array, gen_trace, NaiveArray, TraceConfig};
    use crate::sampled::SampledFenwick;
    use crate::traits::{Op, OpKind};

    #[test]
    fn derived_parameters_frozen() {
        let p = PackedParams::derive(1 << 20, 8, 8).unwrap();
        assert_eq!(p.b - 1, 2);
        assert_eq!(p.f, 32);
        assert_eq!(p.d, 53);
        assert_eq!(p.bias(), 1 << 31);

        let p = PackedParams::derive(1 << 20, 8, 1).unwrap();
        assert_eq!(p.b - 1, 4);
        assert_eq!(p.f, 16);

        let p = PackedParams::derive(1 << 20, 8, 4).unwrap();
        assert_eq!(p.b - 1, 3);
        assert_eq!(p.f, 21);

        // d clamps into [1, n]
        assert_eq!(PackedParams::derive(4, 4, 8).unwrap().d, 4);
        assert_eq!(PackedParams::derive(1, 8, 8).unwrap().d, 1);

        // large delta degenerates to one counter per block
        let p = PackedParams::derive(100, 8, 26).unwrap();
        assert_eq!(p.b - 1, 1);
        assert_eq!(p.f, 64);

        assert!(PackedParams::derive(10, 8, 0).is_err());
        assert!(PackedParams::derive(10, 8, 64).is_err());
        assert!(PackedParams::derive(10, 33, 8).is_err());
        assert!(PackedParams::derive(0, 8, 8).is_err());
    }

    #[test]
    fn fresh_build_matches_sampled() {
        for (n, k, db) in [(100u64, 8u32, 8u32), (37, 4, 1), (200, 8, 4), (1, 8, 8)] {
            let vals = gen_array(n, k, n + k as u64);
            let p = PackedFenwick::new(&vals, k, db).unwrap();
            let s = SampledFenwick::new(&vals, k, p.params().b, p.params().d).unwrap();
            for i in 0..=n {
                assert_eq!(p.sum(i), s.sum(i), "n={n} db={db} sum({i})");
            }
            let total = s.sum(n);
            for j in (1..=total + 2).step_by((total as usize / 17).max(1)) {
                assert_eq!(p.search(j), s.search(j), "n={n} db={db} search({j})");
            }
            p.verify_read_through(&vals).unwrap();
        }
    }

    #[test]
    fn single_update_full_sweep() {
        let mut vals = gen_array(60, 8, 77);
        let mut p = PackedFenwick::new(&vals, 8, 4).unwrap();
        p.update(23, -(vals[22] as i64).min(15));
        vals[22] -= (vals[22] as i64).min(15) as u64;
        let o = NaiveArray::new(&vals, 8);
        for i in 0..=60 {
            assert_eq!(p.sum(i), o.sum(i), "sum({i})");
        }
        for i in 1..=60 {
            assert_eq!(p.access(i), o.access(i), "access({i})");
        }
        p.verify_read_through(&vals).unwrap();
    }

    #[test]
    fn update_zero_is_observably_identity() {
        let vals = gen_array(80, 8, 5);
        let mut p = PackedFenwick::new(&vals, 8, 8).unwrap();
        let before: Vec<u64> = (0..=80).map(|i| p.sum(i)).collect();
        for i in [1u64, 40, 53, 80] {
            p.update(i, 0);
        }
        let after: Vec<u64> = (0..=80).map(|i| p.sum(i)).collect();
        assert_eq!(before, after);
        p.verify_read_through(&vals).unwrap();
    }

    #[test]
    fn consecutive_block_updates_flush_every_counter() {
        // hammer one spot: after b-1 updates every counter in its blocks has
        // been flushed at least once, so pending decodes back to zero
        let vals = vec![7u64; 64];
        let mut p = PackedFenwick::new(&vals, 8, 8).unwrap();
        let bm1 = p.params().b - 1;
        let d = p.params().d;
        let i = d; // group 1's total changes, tree path gets touched
        for _ in 0..bm1 {
            p.update(i, 1);
        }
        for j in 1..=p.geo.num_levels() {
            let blocks = p.pending[j as usize - 1].len() as u64;
            for blk in 0..blocks {
                for (q, dec) in p.decoded_pending(j, blk).iter().enumerate() {
                    // counters on the updated path were flushed; untouched
                    // blocks never left zero
                    assert!(
                        dec.unsigned_abs() < p.params().bias(),
                        "level {j} block {blk} field {q}"
                    );
                }
            }
        }
        assert!(p.max_pending_seen() < p.params().bias());
        let mut shadow = vals;
        shadow[i as usize - 1] += bm1;
        p.verify_read_through(&shadow).unwrap();
    }

    #[test]
    fn all_ones_search_is_identity() {
        let vals = vec![1u64; 150];
        let p = PackedFenwick::new(&vals, 4, 8).unwrap();
        for t in 1..=150 {
            assert_eq!(p.search(t), t);
        }
        assert_eq!(p.search(151), 151);
    }

    #[test]
    fn differential_against_oracle() {
        for n in [1u64, 2, 3, 5, 26, 52, 53, 54, 100, 200] {
            for db in [1u32, 4, 8, 26] {
                for k in [4u32, 8] {
                    let seed = n * 71 + db as u64 * 13 + k as u64;
                    let init = gen_array(n, k, seed);
                    let cfg = TraceConfig {
                        delta_bits: Some(db),
                        ..TraceConfig::uniform(n, k, 600, seed + 1)
                    };
                    let ops = gen_trace(&cfg, &init);
                    let mut p = PackedFenwick::new(&init, k, db).unwrap();
                    let report = differential_run(&init, k, &ops, &mut p);
                    assert!(report.ok(), "n={n} db={db} k={k}: {:?}", report.divergence);
                    assert!(p.max_pending_seen() < p.params().bias());
                }
            }
        }
    }

    #[test]
    fn read_through_holds_mid_trace() {
        let n = 300u64;
        let init = gen_array(n, 8, 9);
        let cfg = TraceConfig {
            delta_bits: Some(4),
            mix: [1, 4, 1, 1],
            ..TraceConfig::uniform(n, 8, 2000, 10)
        };
        let ops = gen_trace(&cfg, &init);
        let mut p = PackedFenwick::new(&init, 8, 4).unwrap();
        let mut shadow = init;
        for (t, op) in ops.iter().enumerate() {
            op.apply(&mut p);
            if let Op::Update { i, delta } = *op {
                let v = &mut shadow[i as usize - 1];
                *v = v.checked_add_signed(delta).unwrap();
            }
            if t % 97 == 0 {
                p.verify_read_through(&shadow).unwrap();
            }
        }
        p.verify_read_through(&shadow).unwrap();
    }

    #[test]
    fn tree_word_costs_meet_budgets() {
        for (n, db) in [(200u64, 8u32), (1024, 1), (2000, 4)] {
            let init = gen_array(n, 8, 3);
            let cfg = TraceConfig {
                delta_bits: Some(db),
                ..TraceConfig::uniform(n, 8, 2000, 4)
            };
            let ops = gen_trace(&cfg, &init);
            let mut p = PackedFenwick::new(&init, 8, db).unwrap();
            let report = differential_run(&init, 8, &ops, &mut p);
            assert!(report.ok(), "n={n} db={db}");
            // levels budget from n itself, as the top-level bound states
            let b = p.params().b;
            let mut levels = 1u64;
            let mut top = 1u64;
            while top < n {
                top *= b;
                levels += 1;
            }
            assert!(report.max_cost_of(OpKind::Sum).reads <= 2 * levels, "n={n} db={db}");
            assert!(report.max_cost_of(OpKind::Update).writes <= 2 * levels, "n={n} db={db}");
        }
    }

    #[test]
    fn space_constant_four_holds() {
        let n = 1u64 << 14;
        let vals = gen_array(n, 8, 8);
        let p = PackedFenwick::new(&vals, 8, 8).unwrap();
        let sp = p.space();
        assert!(
            sp.within_bound(),
            "payload {} > bound {}",
            sp.payload_bits(),
            sp.bound_bits
        );
    }

    #[test]
    fn rejects_bad_deltas() {
        let mut p = PackedFenwick::new(&gen_array(50, 8, 1), 8, 4).unwrap();
        let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            p.update(1, 16);
        }));
        assert!(r.is_err(), "delta 16 must violate delta_bits = 4");
    }
}
