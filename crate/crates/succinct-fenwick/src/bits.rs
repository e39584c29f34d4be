//! Word-packed storage substrate.
//!
//! Two layouts live here. [`PackedIntArray`] packs fixed-width fields
//! back-to-back in a word buffer; fields may straddle word boundaries, so
//! space is exactly `ceil(count*width/64)` words and every access touches at
//! most two words. [`FieldedWord`] packs `floor(64/width)` fields into a
//! single word with no straddling, which is what makes the SWAR kernels
//! (parallel add, prefix sum, in-word search) single-word operations.
//!
//! Field 1 always sits at the least-significant bits; buffers use
//! little-endian word order.

/// Machine word size in bits. Formulas use this symbolically.
pub const WORD_BITS: u32 = 64;

/// Low `width` bits set. `width` may be 0..=64.
#[inline]
pub const fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Smallest e with 2^e >= x; 0 for x <= 1.
#[inline]
pub const fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// A word with 1 in the lowest bit of each `width`-bit field
/// (floor(64/width) fields).
#[inline]
pub const fn ones_pattern(width: u32) -> u64 {
    ONES_PATTERNS[width as usize]
}

const ONES_PATTERNS: [u64; 65] = {
    let mut t = [0u64; 65];
    let mut f = 1u32;
    while f <= 64 {
        let n = 64 / f;
        let mut q = 0;
        let mut pat = 0u64;
        while q < n {
            pat |= 1u64 << (q * f);
            q += 1;
        }
        t[f as usize] = pat;
        f += 1;
    }
    t
};

/// Reads `width` bits at absolute bit offset `bit` (little-endian words,
/// LSB-first). At most two word reads.
#[inline]
pub fn get_bits(words: &[u64], bit: u64, width: u32) -> u64 {
    debug_assert!((1..=64).contains(&width));
    let w = (bit / 64) as usize;
    let off = (bit % 64) as u32;
    let lo = words[w] >> off;
    if off + width <= 64 {
        lo & mask(width)
    } else {
        // straddles into the next word; off > 0 here so the shift is < 64
        (lo | (words[w + 1] << (64 - off))) & mask(width)
    }
}

/// Writes `width` bits at absolute bit offset `bit`. At most two word writes.
#[inline]
pub fn set_bits(words: &mut [u64], bit: u64, width: u32, v: u64) {
    debug_assert!((1..=64).contains(&width));
    debug_assert!(v <= mask(width), "value {v} wider than {width} bits");
    let w = (bit / 64) as usize;
    let off = (bit % 64) as u32;
    let m = mask(width);
    words[w] = (words[w] & !(m << off)) | (v << off);
    if off + width > 64 {
        let hi = off + width - 64;
        words[w + 1] = (words[w + 1] & !mask(hi)) | (v >> (64 - off));
    }
}

/// Fixed-width integer array packed in `ceil(count*width/64)` words.
///
/// Indices are 1-based like everything else in this crate. Values must fit
/// `width` bits; out-of-range indices or values panic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedIntArray {
    count: u64,
    width: u32,
    words: Vec<u64>,
}

impl PackedIntArray {
    pub fn new(count: u64, width: u32) -> PackedIntArray {
        assert!(
            (1..=WORD_BITS).contains(&width),
            "field width must be in 1..={WORD_BITS}, got {width}"
        );
        let bits = count as u128 * width as u128;
        let nwords = bits.div_ceil(64) as usize;
        PackedIntArray {
            count,
            width,
            words: vec![0u64; nwords],
        }
    }

    pub fn from_values(values: &[u64], width: u32) -> PackedIntArray {
        let mut a = PackedIntArray::new(values.len() as u64, width);
        for (t, &v) in values.iter().enumerate() {
            a.set(t as u64 + 1, v);
        }
        a
    }

    #[inline]
    pub fn len(&self) -> u64 {
        self.count
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn get(&self, i: u64) -> u64 {
        assert!(i >= 1 && i <= self.count, "index {i} out of 1..={}", self.count);
        get_bits(&self.words, (i - 1) * self.width as u64, self.width)
    }

    #[inline]
    pub fn set(&mut self, i: u64, v: u64) {
        assert!(i >= 1 && i <= self.count, "index {i} out of 1..={}", self.count);
        assert!(v <= mask(self.width), "value {v} wider than {} bits", self.width);
        set_bits(&mut self.words, (i - 1) * self.width as u64, self.width, v);
    }

    /// Exact payload size: count * width bits (pad bits excluded).
    pub fn payload_bits(&self) -> u64 {
        self.count * self.width as u64
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Rebuilds from a serialized word buffer; pad bits must be zero.
    pub fn from_raw(count: u64, width: u32, words: Vec<u64>) -> Option<PackedIntArray> {
        let bits = count as u128 * width as u128;
        if !(1..=64).contains(&width) || words.len() != bits.div_ceil(64) as usize {
            return None;
        }
        let used = (bits % 64) as u32;
        if used != 0 {
            if let Some(&last) = words.last() {
                if last & !mask(used) != 0 {
                    return None;
                }
            }
        }
        Some(PackedIntArray { count, width, words })
    }
}

/// One word holding `floor(64/width)` fields of `width` bits each, field 1
/// at the least-significant end. Bits beyond `nfields*width` are pad and
/// stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldedWord {
    word: u64,
    width: u32,
}

impl FieldedWord {
    #[inline]
    pub fn new(word: u64, width: u32) -> FieldedWord {
        assert!((1..=WORD_BITS).contains(&width));
        let fw = FieldedWord { word, width };
        debug_assert!(word & !fw.used_mask() == 0, "pad bits must be zero");
        fw
    }

    pub fn from_fields(fields: &[u64], width: u32) -> FieldedWord {
        assert!((1..=WORD_BITS).contains(&width));
        assert!(fields.len() as u32 <= 64 / width);
        let mut word = 0u64;
        for (q, &v) in fields.iter().enumerate() {
            assert!(v <= mask(width));
            word |= v << (q as u32 * width);
        }
        FieldedWord { word, width }
    }

    #[inline]
    pub fn nfields(&self) -> u32 {
        64 / self.width
    }

    #[inline]
    pub fn word(&self) -> u64 {
        self.word
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    fn used_mask(&self) -> u64 {
        mask(self.nfields() * self.width)
    }

    /// Value of field q (1-based).
    #[inline]
    pub fn field(&self, q: u32) -> u64 {
        assert!(q >= 1 && q <= self.nfields(), "field {q} out of range");
        (self.word >> ((q - 1) * self.width)) & mask(self.width)
    }

    pub fn fields(&self) -> Vec<u64> {
        (1..=self.nfields()).map(|q| self.field(q)).collect()
    }

    /// Adds `addend` to every field q >= start via one mask multiply.
    /// Caller guarantees no field overflows (debug-checked).
    #[inline]
    pub fn suffix_add(&self, start: u32, addend: u64) -> FieldedWord {
        self.range_add(start, self.nfields(), addend)
    }

    /// Adds `addend` to fields start..=end in one multiply-add. No field may
    /// overflow `width` bits, otherwise the carry would corrupt a neighbour.
    #[inline]
    pub fn range_add(&self, start: u32, end: u32, addend: u64) -> FieldedWord {
        let pat = self.range_pattern(start, end);
        debug_assert!(addend <= mask(self.width));
        #[cfg(debug_assertions)]
        for q in start..=end {
            debug_assert!(
                self.field(q) + addend <= mask(self.width),
                "field {q} overflows on add"
            );
        }
        FieldedWord {
            word: self.word.wrapping_add(addend.wrapping_mul(pat)),
            width: self.width,
        }
    }

    /// Subtracts `sub` from fields start..=end. Every field must be >= sub,
    /// otherwise the borrow would corrupt a neighbour (debug-checked).
    #[inline]
    pub fn range_sub(&self, start: u32, end: u32, sub: u64) -> FieldedWord {
        let pat = self.range_pattern(start, end);
        debug_assert!(sub <= mask(self.width));
        #[cfg(debug_assertions)]
        for q in start..=end {
            debug_assert!(self.field(q) >= sub, "field {q} underflows on sub");
        }
        FieldedWord {
            word: self.word.wrapping_sub(sub.wrapping_mul(pat)),
            width: self.width,
        }
    }

    #[inline]
    fn range_pattern(&self, start: u32, end: u32) -> u64 {
        assert!(start >= 1 && start <= end && end <= self.nfields());
        // ones at the base of fields start..=end
        (ones_pattern(self.width) << ((start - 1) * self.width)) & mask(end * self.width)
    }

    /// Replaces field q with `v`.
    #[inline]
    pub fn set_field(&self, q: u32, v: u64) -> FieldedWord {
        assert!(q >= 1 && q <= self.nfields());
        assert!(v <= mask(self.width));
        let sh = (q - 1) * self.width;
        FieldedWord {
            word: (self.word & !(mask(self.width) << sh)) | (v << sh),
            width: self.width,
        }
    }

    /// Sum of fields 1..=r without a per-field loop: pairwise folds widen
    /// fields into a double-width scratch until one multiply by the all-ones
    /// field pattern can accumulate every slot carry-free.
    #[inline]
    pub fn prefix_sum(&self, r: u32) -> u64 {
        assert!(r <= self.nfields(), "prefix of {r} fields out of range");
        if r == 0 {
            return 0;
        }
        let masked = self.word & mask(r * self.width);
        if self.width == 1 {
            return masked.count_ones() as u64;
        }
        sum_fields(masked as u128, self.width, r)
    }

    /// Smallest r with prefix_sum(r) >= target, or nfields+1 if the total is
    /// too small. Bisects on prefix_sum, so no storage is touched.
    pub fn search(&self, target: u64) -> u32 {
        assert!(target >= 1);
        let n = self.nfields();
        if self.prefix_sum(n) < target {
            return n + 1;
        }
        let (mut lo, mut hi) = (1, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.prefix_sum(mid) >= target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }
}

/// `unit` repeated every `stride` bits, `times` instances, built by shift
/// doubling (O(log times) steps).
#[inline]
fn repeat_u128(unit: u128, stride: u32, times: u32) -> u128 {
    debug_assert!(times >= 1 && times as u64 * stride as u64 <= 128);
    let mut pat = unit;
    let mut have = 1u32;
    while have < times {
        pat |= pat << (have * stride);
        have *= 2;
    }
    if (times * stride) < 128 {
        pat &= (1u128 << (times * stride)) - 1;
    }
    pat
}

/// Sums `count` fields of `width` bits held in the low bits of `v`.
/// Folds adjacent fields into double-width slots until the remaining slots
/// can be accumulated by a single multiply with the all-ones slot pattern.
fn sum_fields(mut v: u128, mut width: u32, mut count: u32) -> u64 {
    let mut val_bits = width; // max bits of any slot value
    while count > 1 {
        if val_bits + ceil_log2(count as u64) <= width && count * width <= 128 {
            let pat = repeat_u128(1, width, count);
            let prod = v.wrapping_mul(pat);
            // top slot accumulates every field; lower slots cannot carry into
            // it because the whole total fits one slot
            return (prod >> ((count - 1) * width)) as u64 & mask(width);
        }
        let m = repeat_u128(mask(width) as u128, 2 * width, count.div_ceil(2));
        v = (v & m) + ((v >> width) & m);
        count = count.div_ceil(2);
        width *= 2;
        val_bits += 1;
    }
    v as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // independent bit-by-bit reference for the packed array
    fn naive_get(bits: &[bool], i: u64, width: u32) -> u64 {
        let start = ((i - 1) * width as u64) as usize;
        let mut v = 0u64;
        for t in 0..width as usize {
            if bits[start + t] {
                v |= 1 << t;
            }
        }
        v
    }

    fn naive_set(bits: &mut [bool], i: u64, width: u32, v: u64) {
        let start = ((i - 1) * width as u64) as usize;
        for t in 0..width as usize {
            bits[start + t] = (v >> t) & 1 == 1;
        }
    }

    #[test]
    fn empty_array_has_no_words() {
        let a = PackedIntArray::new(0, 8);
        assert_eq!(a.word_count(), 0);
        assert_eq!(a.payload_bits(), 0);
    }

    #[test]
    fn three_sevens_fit_one_word() {
        let a = PackedIntArray::new(3, 7);
        assert_eq!(a.word_count(), 1);
        for i in 1..=3 {
            assert_eq!(a.get(i), 0);
        }
    }

    #[test]
    fn hundred_thirteens_read_zero() {
        let a = PackedIntArray::new(100, 13);
        assert_eq!(a.word_count(), (100u64 * 13).div_ceil(64) as usize);
        for i in 1..=100 {
            assert_eq!(a.get(i), 0);
        }
    }

    #[test]
    fn set_then_get_round_trips() {
        let mut a = PackedIntArray::new(4, 8);
        a.set(1, 0);
        assert_eq!(a.get(1), 0);
        a.set(3, 255);
        assert_eq!(a.get(3), 255);
        assert_eq!(a.get(2), 0);
    }

    #[test]
    fn width5_straddles_word_boundary() {
        // index 13 occupies bits 60..65, across the first word boundary
        let mut a = PackedIntArray::new(20, 5);
        a.set(13, 31);
        assert_eq!(a.get(13), 31);
        for i in (1..=20).filter(|&i| i != 13) {
            assert_eq!(a.get(i), 0);
        }
    }

    #[test]
    fn small_packing_layout_frozen() {
        // width 5, values [1,2,3]: 1 | 2<<5 | 3<<10 = 3137
        let a = PackedIntArray::from_values(&[1, 2, 3], 5);
        assert_eq!(a.words(), &[3137]);
        // 1..=20 at width 5: every index reads itself back
        let v: Vec<u64> = (1..=20).collect();
        let a = PackedIntArray::from_values(&v, 5);
        assert_eq!(a.get(13), 13);
    }

    #[test]
    #[should_panic(expected = "field width")]
    fn zero_width_rejected() {
        PackedIntArray::new(4, 0);
    }

    #[test]
    #[should_panic(expected = "wider than")]
    fn overwide_value_rejected() {
        let mut a = PackedIntArray::new(4, 3);
        a.set(1, 8);
    }

    #[test]
    #[should_panic(expected = "out of")]
    fn out_of_bounds_index_rejected() {
        PackedIntArray::new(4, 3).get(5);
    }

    proptest! {
        #[test]
        fn packed_matches_bit_reference(
            width in 1u32..=64,
            writes in prop::collection::vec((1u64..=97, any::<u64>()), 1..200),
        ) {
            let count = 97u64;
            let mut a = PackedIntArray::new(count, width);
            let mut bits = vec![false; (count * width as u64) as usize];
            for (i, raw) in writes {
                let v = raw & mask(width);
                a.set(i, v);
                naive_set(&mut bits, i, width, v);
                // frame property: every index agrees with the reference
                for t in 1..=count {
                    prop_assert_eq!(a.get(t), naive_get(&bits, t, width));
                }
            }
            prop_assert_eq!(a.word_count() as u64, (count * width as u64).div_ceil(64));
        }
    }

    #[test]
    fn fielded_word_layout() {
        let x = FieldedWord::from_fields(&[1, 2, 3, 4], 8);
        assert_eq!(x.word(), 0x0403_0201);
        assert_eq!(x.nfields(), 8);
        assert_eq!(x.field(3), 3);
        assert_eq!(FieldedWord::new(0, 13).nfields(), 4);
        let z = FieldedWord::new(0, 16);
        for q in 1..=4 {
            assert_eq!(z.field(q), 0);
        }
    }

    #[test]
    fn suffix_add_hand_cases() {
        let x = FieldedWord::from_fields(&[1, 2, 3, 4], 8);
        let y = x.suffix_add(3, 5);
        assert_eq!(y.fields()[..4], [1, 2, 8, 9]);
        // the suffix really is every field from start on, zeros included
        assert_eq!(y.fields()[4..], [5, 5, 5, 5]);
        assert_eq!(x.suffix_add(1, 0), x);
    }

    #[test]
    fn range_sub_undoes_range_add() {
        let x = FieldedWord::from_fields(&[9, 9, 9, 9], 16);
        let y = x.range_add(2, 3, 7);
        assert_eq!(y.fields(), vec![9, 16, 16, 9]);
        assert_eq!(y.range_sub(2, 3, 7), x);
    }

    #[test]
    fn prefix_sum_hand_cases() {
        let x = FieldedWord::from_fields(&[1, 2, 3, 4], 8);
        assert_eq!(x.prefix_sum(0), 0);
        assert_eq!(x.prefix_sum(2), 3);
        assert_eq!(x.prefix_sum(4), 10);
        assert_eq!(x.prefix_sum(8), 10);
    }

    #[test]
    fn search_hand_cases() {
        let x = FieldedWord::from_fields(&[1, 2, 3, 4], 8);
        assert_eq!(x.search(3), 2);
        assert_eq!(x.search(10), 4);
        assert_eq!(x.search(11), 9); // sentinel: nfields + 1
        let z = FieldedWord::from_fields(&[0, 0, 7], 8);
        assert_eq!(z.search(1), 3);
    }

    // loop references for the SWAR kernels
    fn ref_prefix(x: &FieldedWord, r: u32) -> u64 {
        (1..=r).map(|q| x.field(q)).sum()
    }

    fn ref_search(x: &FieldedWord, target: u64) -> u32 {
        let mut acc = 0;
        for q in 1..=x.nfields() {
            acc += x.field(q);
            if acc >= target {
                return q;
            }
        }
        x.nfields() + 1
    }

    proptest! {
        #[test]
        fn swar_kernels_match_loop_references(
            raw in any::<u64>(),
            width in prop::sample::select(vec![4u32, 8, 13, 16, 21, 32]),
            start in 1u32..=4,
            addend_raw in any::<u64>(),
        ) {
            let n = 64 / width;
            let used = mask(n * width);
            // leave headroom so suffix_add cannot overflow any field
            let x = FieldedWord::new((raw & used) >> 1 & used, width);
            let head: u64 = (1..=n).map(|q| mask(width) - x.field(q)).min().unwrap();
            let addend = if head == 0 { 0 } else { addend_raw % (head + 1) };
            let s = start.min(n);

            let got = x.suffix_add(s, addend);
            for q in 1..=n {
                let want = x.field(q) + if q >= s { addend } else { 0 };
                prop_assert_eq!(got.field(q), want);
            }
            for r in 0..=n {
                prop_assert_eq!(x.prefix_sum(r), ref_prefix(&x, r));
            }
            let total = ref_prefix(&x, n);
            for t in [1, total / 2 + 1, total.max(1), total + 1] {
                prop_assert_eq!(x.search(t), ref_search(&x, t));
            }
        }
    }

    #[test]
    fn prefix_sum_all_widths() {
        // every legal width, max-valued fields: the widening path must not
        // lose carries anywhere
        for width in 1..=64 {
            let n = 64 / width;
            let x = FieldedWord::new(mask(n * width), width);
            assert_eq!(x.prefix_sum(n), n as u64 * mask(width), "width {width}");
            for r in 0..=n {
                assert_eq!(x.prefix_sum(r), r as u64 * mask(width), "width {width} r {r}");
            }
        }
    }
}
