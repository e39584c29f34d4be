//! Textbook binary indexed tree, one 64-bit slot per element.
//!
//! Slot i stores the sum of the lsb(i) elements ending at i. Queries walk
//! the implicit tree by clearing or adding the lowest set bit, so every
//! operation touches at most floor(log2 n) + 1 slots. This is the speed and
//! correctness baseline the packed structures are measured against; its
//! space is the full n words.

use crate::bits::mask;
use crate::error::{Error, Result};
use crate::stats::{OpCounters, SpaceReport};
use crate::traits::PartialSums;

#[derive(Debug, Clone)]
pub struct ClassicFenwick {
    n: u64,
    k: u32,
    /// data[0] unused; data[i] covers (i - lsb(i), i].
    data: Vec<u64>,
    counters: OpCounters,
}

#[inline]
fn lsb(i: u64) -> u64 {
    i & i.wrapping_neg()
}

impl ClassicFenwick {
    pub fn new(values: &[u64], k: u32) -> Result<ClassicFenwick> {
        if !(1..=32).contains(&k) {
            return Err(Error::invalid(format!("element width {k} outside 1..=32")));
        }
        if let Some(&v) = values.iter().find(|&&v| v > mask(k)) {
            return Err(Error::ValueOverflow { value: v, width: k });
        }
        let n = values.len() as u64;
        let mut data = Vec::with_capacity(values.len() + 1);
        data.push(0);
        data.extend_from_slice(values);
        // in-place accumulation: push each slot into its parent once
        for i in 1..=n {
            let j = i + lsb(i);
            if j <= n {
                data[j as usize] += data[i as usize];
            }
        }
        Ok(ClassicFenwick {
            n,
            k,
            data,
            counters: OpCounters::new(),
        })
    }

    #[inline]
    fn read(&self, i: u64) -> u64 {
        self.counters.count_read();
        self.data[i as usize]
    }

    /// Prefix sum without touching the instrumentation; used only to check
    /// the update precondition.
    fn sum_uncounted(&self, i: u64) -> u64 {
        let mut acc = 0;
        let mut t = i;
        while t > 0 {
            acc += self.data[t as usize];
            t -= lsb(t);
        }
        acc
    }

    /// Internal slots data[1..=n] (slot 0 is padding), for serialization.
    pub(crate) fn slots(&self) -> &[u64] {
        &self.data[1..]
    }

    pub(crate) fn from_slots(k: u32, slots: Vec<u64>) -> ClassicFenwick {
        let n = slots.len() as u64;
        let mut data = Vec::with_capacity(slots.len() + 1);
        data.push(0);
        data.extend(slots);
        ClassicFenwick {
            n,
            k,
            data,
            counters: OpCounters::new(),
        }
    }

    #[cfg(test)]
    pub(crate) fn raw(&self) -> &[u64] {
        &self.data
    }
}

impl PartialSums for ClassicFenwick {
    fn len(&self) -> u64 {
        self.n
    }

    fn value_width(&self) -> u32 {
        self.k
    }

    fn sum(&self, i: u64) -> u64 {
        assert!(i <= self.n, "sum index {i} out of 0..={}", self.n);
        let mut acc = 0;
        let mut t = i;
        while t > 0 {
            acc += self.read(t);
            t -= lsb(t);
        }
        acc
    }

    fn update(&mut self, i: u64, delta: i64) {
        assert!(i >= 1 && i <= self.n, "index {i} out of 1..={}", self.n);
        let cur = self.sum_uncounted(i) - self.sum_uncounted(i - 1);
        let next = cur
            .checked_add_signed(delta)
            .expect("update drives element negative");
        assert!(next <= mask(self.k), "update overflows {} bits", self.k);
        let mut t = i;
        while t <= self.n {
            let v = self.data[t as usize].checked_add_signed(delta).unwrap();
            self.counters.count_write();
            self.data[t as usize] = v;
            t += lsb(t);
        }
    }

    fn search(&self, j: u64) -> u64 {
        assert!(j >= 1, "search target must be >= 1");
        // binary lifting: grow a prefix whose sum stays strictly below j, so
        // the next index is the smallest one reaching j (ties included);
        // lands at n + 1 when even the full sum falls short
        let mut pos = 0u64;
        let mut rem = j;
        let mut step = if self.n == 0 {
            0
        } else {
            1u64 << (63 - self.n.leading_zeros())
        };
        while step > 0 {
            let next = pos + step;
            if next <= self.n {
                let v = self.read(next);
                if v < rem {
                    rem -= v;
                    pos = next;
                }
            }
            step >>= 1;
        }
        pos + 1
    }

    fn access(&self, i: u64) -> u64 {
        assert!(i >= 1 && i <= self.n, "index {i} out of 1..={}", self.n);
        self.sum(i) - self.sum(i - 1)
    }

    fn counters(&self) -> &OpCounters {
        &self.counters
    }

    fn space(&self) -> SpaceReport {
        SpaceReport {
            components: vec![("slots".into(), self.n * 64)],
            metadata_bits: 64 + 32,
            bound_bits: self.n * 64,
            bound_desc: format!("n*w = {}", self.n * 64),
        }
    }

    fn name(&self) -> &'static str {
        "classic"
    }
}
