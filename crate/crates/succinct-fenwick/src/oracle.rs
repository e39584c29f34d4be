//! Reference implementation and differential test harness.
//!
//! [`NaiveArray`] answers every operation by scanning a plain `Vec<u64>`, so
//! its correctness is visible by inspection; the succinct structures are
//! validated by replaying identical operation traces against it and
//! comparing every answer. [`gen_trace`] produces reproducible random traces
//! whose updates are always legal for the declared element width.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::mask;
use crate::stats::{OpCounters, OpStats, SpaceReport};
use crate::traits::{Op, OpKind, PartialSums};

/// The obviously-correct baseline: a flat array, every query a linear scan.
#[derive(Debug, Clone)]
pub struct NaiveArray {
    a: Vec<u64>,
    k: u32,
    counters: OpCounters,
}

impl NaiveArray {
    pub fn new(values: &[u64], k: u32) -> NaiveArray {
        assert!((1..=64).contains(&k), "element width must be in 1..=64");
        assert!(
            values.iter().all(|&v| v <= mask(k)),
            "initial value exceeds {k} bits"
        );
        NaiveArray {
            a: values.to_vec(),
            k,
            counters: OpCounters::new(),
        }
    }

    pub fn values(&self) -> &[u64] {
        &self.a
    }
}

impl PartialSums for NaiveArray {
    fn len(&self) -> u64 {
        self.a.len() as u64
    }

    fn value_width(&self) -> u32 {
        self.k
    }

    fn sum(&self, i: u64) -> u64 {
        assert!(i <= self.len(), "sum index {i} out of 0..={}", self.len());
        self.a[..i as usize].iter().sum()
    }

    fn update(&mut self, i: u64, delta: i64) {
        assert!(i >= 1 && i <= self.len(), "index {i} out of 1..={}", self.len());
        let slot = &mut self.a[i as usize - 1];
        let next = slot
            .checked_add_signed(delta)
            .expect("update drives element negative");
        assert!(next <= mask(self.k), "update overflows {} bits", self.k);
        *slot = next;
    }

    fn search(&self, j: u64) -> u64 {
        assert!(j >= 1, "search target must be >= 1");
        let mut acc = 0u64;
        for (t, &v) in self.a.iter().enumerate() {
            acc += v;
            if acc >= j {
                return t as u64 + 1;
            }
        }
        self.len() + 1
    }

    fn access(&self, i: u64) -> u64 {
        assert!(i >= 1 && i <= self.len(), "index {i} out of 1..={}", self.len());
        self.a[i as usize - 1]
    }

    fn counters(&self) -> &OpCounters {
        &self.counters
    }

    fn space(&self) -> SpaceReport {
        let n = self.len();
        SpaceReport {
            components: vec![("elements".into(), n * 64)],
            metadata_bits: 64 + 32,
            bound_bits: n * 64,
            bound_desc: format!("n*64 = {}", n * 64),
        }
    }

    fn name(&self) -> &'static str {
        "naive"
    }
}

/// Parameters for [`gen_array`] / [`gen_trace`]. `mix` weights the four op
/// kinds (sum, update, search, access); `delta_bits` caps |delta| below
/// 2^delta_bits when set.
#[derive(Debug, Clone)]
pub struct TraceConfig {
    pub n: u64,
    pub k: u32,
    pub ops: usize,
    pub mix: [u32; 4],
    pub seed: u64,
    pub delta_bits: Option<u32>,
}

impl TraceConfig {
    pub fn uniform(n: u64, k: u32, ops: usize, seed: u64) -> TraceConfig {
        TraceConfig {
            n,
            k,
            ops,
            mix: [1, 1, 1, 1],
            seed,
            delta_bits: None,
        }
    }
}

/// n values uniform in [0, 2^k), reproducible from the seed.
pub fn gen_array(n: u64, k: u32, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen::<u64>() & mask(k)).collect()
}

/// Random trace over an array that starts as `initial`. A shadow copy keeps
/// every update inside [0, 2^k); search targets overshoot the running total
/// by up to ~1/8 so the past-the-end answer gets exercised.
pub fn gen_trace(cfg: &TraceConfig, initial: &[u64]) -> Vec<Op> {
    assert_eq!(initial.len() as u64, cfg.n);
    assert!(cfg.n >= 1, "traces need at least one element");
    let wsum: u32 = cfg.mix.iter().sum();
    assert!(wsum > 0, "op mix must have positive weight");
    let delta_cap = cfg.delta_bits.map_or(mask(cfg.k), |db| {
        assert!((1..=63).contains(&db));
        mask(db)
    });

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut shadow = initial.to_vec();
    let mut total: u64 = shadow.iter().sum();
    let mut ops = Vec::with_capacity(cfg.ops);
    for _ in 0..cfg.ops {
        let mut pick = rng.gen_range(0..wsum);
        let kind = OpKind::ALL
            .iter()
            .zip(cfg.mix)
            .find_map(|(&kd, w)| {
                if pick < w {
                    Some(kd)
                } else {
                    pick -= w;
                    None
                }
            })
            .unwrap();
        let op = match kind {
            OpKind::Sum => Op::Sum {
                i: rng.gen_range(1..=cfg.n),
            },
            OpKind::Access => Op::Access {
                i: rng.gen_range(1..=cfg.n),
            },
            OpKind::Update => {
                let i = rng.gen_range(1..=cfg.n);
                let cur = shadow[i as usize - 1];
                let lo = -(cur.min(delta_cap) as i64);
                let hi = (mask(cfg.k) - cur).min(delta_cap) as i64;
                let delta = rng.gen_range(lo..=hi);
                shadow[i as usize - 1] = cur.checked_add_signed(delta).unwrap();
                total = total.checked_add_signed(delta).unwrap();
                Op::Update { i, delta }
            }
            OpKind::Search => {
                let hi = total + (total / 8).max(1);
                Op::Search {
                    j: rng.gen_range(1..=hi),
                }
            }
        };
        ops.push(op);
    }
    ops
}

/// First answer mismatch between the subject and the oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub op_index: usize,
    pub op: Op,
    pub expected: u64,
    pub got: u64,
}

/// Outcome of a differential replay, including the worst per-op storage
/// touch counts the subject exhibited for each op kind.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub ops_executed: usize,
    pub divergence: Option<Divergence>,
    pub max_cost: [(OpKind, OpStats); 4],
}

impl RunReport {
    pub fn ok(&self) -> bool {
        self.divergence.is_none()
    }

    pub fn max_cost_of(&self, kind: OpKind) -> OpStats {
        self.max_cost
            .iter()
            .find(|(kd, _)| *kd == kind)
            .map(|(_, st)| *st)
            .unwrap()
    }
}

/// Replays `ops` on the subject and on a fresh [`NaiveArray`] built from
/// `initial`, comparing every query answer. Stops at the first divergence.
pub fn differential_run(
    initial: &[u64],
    k: u32,
    ops: &[Op],
    subject: &mut dyn PartialSums,
) -> RunReport {
    assert_eq!(subject.len(), initial.len() as u64);
    let mut oracle = NaiveArray::new(initial, k);
    let mut max_cost = OpKind::ALL.map(|kd| (kd, OpStats::default()));
    let mut executed = 0;
    for (t, op) in ops.iter().enumerate() {
        let before = subject.counters().snapshot();
        let got = op.apply(subject);
        let cost = subject.counters().snapshot().delta_since(before);
        let slot = &mut max_cost[OpKind::ALL.iter().position(|&kd| kd == op.kind()).unwrap()].1;
        slot.reads = slot.reads.max(cost.reads);
        slot.writes = slot.writes.max(cost.writes);
        let expected = op.apply(&mut oracle);
        executed = t + 1;
        if let (Some(e), Some(g)) = (expected, got) {
            if e != g {
                return RunReport {
                    ops_executed: executed,
                    divergence: Some(Divergence {
                        op_index: t,
                        op: *op,
                        expected: e,
                        got: g,
                    }),
                    max_cost,
                };
            }
        }
    }
    RunReport {
        ops_executed: executed,
        divergence: None,
        max_cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // A[1..=5] = [3, 0, 7, 2, 5]: fixed values every oracle answer below is
    // computed from by hand.
    fn fixture() -> NaiveArray {
        NaiveArray::new(&[3, 0, 7, 2, 5], 4)
    }

    #[test]
    fn sums_by_hand() {
        let o = fixture();
        assert_eq!(o.sum(0), 0);
        assert_eq!(o.sum(1), 3);
        assert_eq!(o.sum(2), 3);
        assert_eq!(o.sum(3), 10);
        assert_eq!(o.sum(4), 12);
        assert_eq!(o.sum(5), 17);
        assert_eq!(o.total(), 17);
    }

    #[test]
    fn search_picks_smallest_index_on_ties() {
        let o = fixture();
        assert_eq!(o.search(1), 1);
        assert_eq!(o.search(3), 1); // sum(1) = sum(2) = 3: smallest wins
        assert_eq!(o.search(4), 3);
        assert_eq!(o.search(10), 3);
        assert_eq!(o.search(11), 4);
        assert_eq!(o.search(17), 5);
        assert_eq!(o.search(18), 6); // past the end: n + 1
    }

    #[test]
    fn search_on_all_zeros_is_past_the_end() {
        let o = NaiveArray::new(&[0, 0, 0], 4);
        assert_eq!(o.search(1), 4);
    }

    #[test]
    fn update_moves_later_sums_only() {
        let mut o = fixture();
        o.update(3, -7);
        assert_eq!(o.sum(2), 3);
        assert_eq!(o.sum(3), 3);
        assert_eq!(o.access(3), 0);
        o.update(3, 15);
        assert_eq!(o.sum(5), 25);
    }

    #[test]
    #[should_panic(expected = "overflows")]
    fn update_past_width_panics() {
        let mut o = fixture();
        o.update(1, 13); // 3 + 13 = 16 needs 5 bits
    }

    #[test]
    #[should_panic(expected = "negative")]
    fn update_below_zero_panics() {
        let mut o = fixture();
        o.update(2, -1);
    }

    #[test]
    fn generated_traces_are_reproducible_and_legal() {
        let cfg = TraceConfig {
            delta_bits: Some(3),
            ..TraceConfig::uniform(50, 6, 4000, 7)
        };
        let init = gen_array(cfg.n, cfg.k, cfg.seed);
        assert!(init.iter().all(|&v| v < 64));
        let t1 = gen_trace(&cfg, &init);
        let t2 = gen_trace(&cfg, &init);
        assert_eq!(t1, t2);
        assert_eq!(t1.len(), 4000);
        // replaying on the oracle itself must never assert
        let mut o = NaiveArray::new(&init, cfg.k);
        let mut seen = [false; 4];
        for op in &t1 {
            if let Op::Update { delta, .. } = op {
                assert!(delta.unsigned_abs() < 8);
            }
            seen[OpKind::ALL.iter().position(|&kd| kd == op.kind()).unwrap()] = true;
            op.apply(&mut o);
        }
        assert!(seen.iter().all(|&s| s), "mix must produce all four op kinds");
        assert_ne!(gen_trace(&TraceConfig { seed: 8, ..cfg }, &init), t1);
    }

    #[test]
    fn differential_run_flags_a_broken_subject() {
        let init = gen_array(40, 8, 3);
        let cfg = TraceConfig::uniform(40, 8, 500, 4);
        let ops = gen_trace(&cfg, &init);
        // identical twin passes
        let mut twin = NaiveArray::new(&init, 8);
        assert!(differential_run(&init, 8, &ops, &mut twin).ok());
        // a subject that silently drops one update diverges
        let mut broken = NaiveTamper {
            inner: NaiveArray::new(&init, 8),
            dropped: false,
        };
        let report = differential_run(&init, 8, &ops, &mut broken);
        assert!(report.divergence.is_some());
        let d = report.divergence.unwrap();
        assert!(matches!(d.op, Op::Sum { .. } | Op::Search { .. } | Op::Access { .. }));
        assert_ne!(d.expected, d.got);
    }

    // subject that ignores the first nonzero update it sees
    struct NaiveTamper {
        inner: NaiveArray,
        dropped: bool,
    }

    impl PartialSums for NaiveTamper {
        fn len(&self) -> u64 {
            self.inner.len()
        }
        fn value_width(&self) -> u32 {
            self.inner.value_width()
        }
        fn sum(&self, i: u64) -> u64 {
            self.inner.sum(i)
        }
        fn update(&mut self, i: u64, delta: i64) {
            if delta != 0 && !self.dropped {
                self.dropped = true;
                return;
            }
            self.inner.update(i, delta);
        }
        fn search(&self, j: u64) -> u64 {
            self.inner.search(j)
        }
        fn access(&self, i: u64) -> u64 {
            self.inner.access(i)
        }
        fn counters(&self) -> &OpCounters {
            self.inner.counters()
        }
        fn space(&self) -> SpaceReport {
            self.inner.space()
        }
        fn name(&self) -> &'static str {
            "tamper"
        }
    }
}
