//! Sampled layout: group totals in a layered tree, raw elements in a k-bit
//! base array.
//!
//! The array is cut into groups of d. Each of the G = floor(n/d) full groups
//! contributes its total to a [`LayeredFenwick`] over G values of width
//! k + ceil(log2 d); the base array keeps the first d-1 elements of every
//! full group (the d-th is redundant given the tree) plus the whole partial
//! tail. That stores n*k bits of elements minus k per full group, and the
//! tree adds n*(ceil(log2 d) + 2*ceil(log2 b))/d bits, so redundancy shrinks
//! as d grows; queries pay an O(d) scan over one group.

use crate::bits::{ceil_log2, mask, PackedIntArray};
use crate::error::{Error, Result};
use crate::layered::LayeredFenwick;
use crate::stats::{OpCounters, SpaceReport};
use crate::traits::PartialSums;

#[derive(Debug, Clone)]
pub struct SampledFenwick {
    n: u64,
    k: u32,
    d: u64,
    /// Full-group count floor(n/d); groups G+1.. form the tail.
    groups: u64,
    /// Prefix sums over the G full-group totals.
    tree: LayeredFenwick,
    /// Kept elements: d-1 per full group, then the whole tail.
    base: PackedIntArray,
}

/// Sample rate from the redundancy knob: d ~ (1/eps) * log_b n, clamped to
/// [1, n]. eps = 1 targets the n*log(b d)/d redundancy the structure is
/// built around.
pub fn derive_sample_rate(n: u64, b: u64, eps: f64) -> Result<u64> {
    // NaN fails is_finite, so both it and eps <= 0 are rejected here
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::invalid(format!("epsilon {eps} must be a positive real")));
    }
    if n < 1 || b < 2 {
        return Err(Error::invalid("sample rate needs n >= 1 and b >= 2".to_string()));
    }
    let log_b_n = (n as f64).ln() / (b as f64).ln();
    Ok(((log_b_n / eps).round() as u64).clamp(1, n))
}

impl SampledFenwick {
    pub fn new(values: &[u64], k: u32, b: u64, d: u64) -> Result<SampledFenwick> {
        let n = values.len() as u64;
        if n < 1 {
            return Err(Error::invalid("length 0 outside 1..".to_string()));
        }
        if !(1..=32).contains(&k) {
            return Err(Error::invalid(format!("element width {k} outside 1..=32")));
        }
        if d < 1 || d > n {
            return Err(Error::invalid(format!("sample rate {d} outside 1..={n}")));
        }
        if let Some(&v) = values.iter().find(|&&v| v > mask(k)) {
            return Err(Error::ValueOverflow { value: v, width: k });
        }
        let groups = n / d;
        let totals: Vec<u64> = (0..groups)
            .map(|g| values[(g * d) as usize..((g + 1) * d) as usize].iter().sum())
            .collect();
        let tree = LayeredFenwick::new(&totals, k + ceil_log2(d), b)?;
        let mut base = PackedIntArray::new(n - groups, k);
        let mut idx = 0;
        for (t, &v) in values.iter().enumerate() {
            let i = t as u64 + 1;
            if !i.is_multiple_of(d) || i > groups * d {
                idx += 1;
                base.set(idx, v);
            }
        }
        debug_assert_eq!(idx, base.len());
        Ok(SampledFenwick { n, k, d, groups, tree, base })
    }

    pub fn with_epsilon(values: &[u64], k: u32, b: u64, eps: f64) -> Result<SampledFenwick> {
        let d = derive_sample_rate(values.len() as u64, b, eps)?;
        SampledFenwick::new(values, k, b, d)
    }

    pub fn sample_rate(&self) -> u64 {
        self.d
    }

    pub fn branching(&self) -> u64 {
        self.tree.geometry().b()
    }

    pub fn tree(&self) -> &LayeredFenwick {
        &self.tree
    }

    pub(crate) fn base_array(&self) -> &PackedIntArray {
        &self.base
    }

    pub(crate) fn from_parts(
        n: u64,
        k: u32,
        d: u64,
        tree: LayeredFenwick,
        base: PackedIntArray,
    ) -> SampledFenwick {
        SampledFenwick { n, k, d, groups: n / d, tree, base }
    }

    /// Base-array slot of element i, valid when i is kept (i % d != 0).
    #[inline]
    fn base_slot(&self, i: u64) -> u64 {
        debug_assert!(!i.is_multiple_of(self.d));
        let g = (i - 1) / self.d;
        g * (self.d - 1) + (i - g * self.d)
    }

    #[inline]
    fn read_base(&self, slot: u64) -> u64 {
        self.tree.counters().count_read();
        self.base.get(slot)
    }

    fn access_uncounted(&self, i: u64) -> u64 {
        if !i.is_multiple_of(self.d) {
            return self.base.get(self.base_slot(i));
        }
        // dropped element: group total minus its kept siblings
        let g = i / self.d;
        let group_total = self.tree.sum_uncounted(g) - self.tree.sum_uncounted(g - 1);
        let kept: u64 = (1..self.d)
            .map(|r| self.base.get((g - 1) * (self.d - 1) + r))
            .sum();
        group_total - kept
    }
}

impl PartialSums for SampledFenwick {
    fn len(&self) -> u64 {
        self.n
    }

    fn value_width(&self) -> u32 {
        self.k
    }

    fn sum(&self, i: u64) -> u64 {
        assert!(i <= self.n, "sum index {i} out of 0..={}", self.n);
        let g = i / self.d;
        let r = i - g * self.d;
        let mut acc = if g >= 1 { self.tree.sum(g) } else { 0 };
        let slot0 = g * (self.d - 1);
        for t in 1..=r {
            acc += self.read_base(slot0 + t);
        }
        acc
    }

    fn update(&mut self, i: u64, delta: i64) {
        assert!(i >= 1 && i <= self.n, "index {i} out of 1..={}", self.n);
        let cur = self.access_uncounted(i);
        let next = cur
            .checked_add_signed(delta)
            .expect("update drives element negative");
        assert!(next <= mask(self.k), "update overflows {} bits", self.k);
        let g = i.div_ceil(self.d);
        if g <= self.groups {
            self.tree.update(g, delta);
        }
        if !i.is_multiple_of(self.d) {
            let slot = self.base_slot(i);
            let old = self.read_base(slot);
            self.tree.counters().count_write();
            self.base.set(slot, old.checked_add_signed(delta).unwrap());
        }
    }

    fn search(&self, j: u64) -> u64 {
        assert!(j >= 1, "search target must be >= 1");
        let g = self.tree.search(j);
        let (prior, limit) = if g <= self.groups {
            // answer lies in group g: its kept elements, or its dropped last
            (if g >= 2 { self.tree.sum(g - 1) } else { 0 }, self.d - 1)
        } else {
            // tree total falls short: the tail or past the end
            (self.tree.sum(self.groups), self.n - self.groups * self.d)
        };
        let first = (g - 1).min(self.groups) * self.d;
        let slot0 = (g - 1).min(self.groups) * (self.d - 1);
        let mut acc = prior;
        for t in 1..=limit {
            acc += self.read_base(slot0 + t);
            if acc >= j {
                return first + t;
            }
        }
        if g <= self.groups {
            // kept elements fell short, so the group's dropped last element
            // carries the target (the tree said this group reaches j)
            g * self.d
        } else {
            self.n + 1
        }
    }

    fn access(&self, i: u64) -> u64 {
        assert!(i >= 1 && i <= self.n, "index {i} out of 1..={}", self.n);
        if !i.is_multiple_of(self.d) {
            self.read_base(self.base_slot(i))
        } else {
            self.sum(i) - self.sum(i - 1)
        }
    }

    fn counters(&self) -> &OpCounters {
        self.tree.counters()
    }

    fn space(&self) -> SpaceReport {
        let mut components = vec![(
            format!("base ({} x {}b)", self.base.len(), self.k),
            self.base.payload_bits(),
        )];
        components.extend(self.tree.space().components.into_iter().map(|(name, bits)| {
            (format!("tree {name}"), bits)
        }));
        let c = self.tree.geometry().digit_bits() as u64;
        let overhead = self.n * (ceil_log2(self.d) as u64 + 2 * c) / self.d;
        let bound = self.n * self.k as u64 + overhead;
        SpaceReport {
            components,
            metadata_bits: 64 + 32 + 64 + 64,
            bound_bits: bound,
            bound_desc: format!("n*k + n*(ceil(log2 d) + 2*ceil(log2 b))/d = {bound}"),
        }
    }

    fn name(&self) -> &'static str {
        "sampled"
    }
}
