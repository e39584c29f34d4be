//! Replays one seeded random trace on every structure and diffs each answer
//! against the naive O(n) oracle, reporting the worst per-op storage touch
//! counts seen along the way.

use succinct_fenwick::oracle::{differential_run, gen_array, gen_trace, TraceConfig};
use succinct_fenwick::{
    ClassicFenwick, LayeredFenwick, OpKind, PackedFenwick, PartialSums, SampledFenwick,
};

fn main() {
    let (n, k, ops, seed) = (3000u64, 8u32, 30_000usize, 1u64);
    let values = gen_array(n, k, seed);

    let mut cfg = TraceConfig::uniform(n, k, ops, seed);
    let plain = gen_trace(&cfg, &values);
    // packed caps |delta| below 2^delta_bits, so its trace honors that too
    cfg.delta_bits = Some(8);
    let capped = gen_trace(&cfg, &values);

    let mut subjects: Vec<(Box<dyn PartialSums>, &[_])> = vec![
        (Box::new(ClassicFenwick::new(&values, k).unwrap()), &plain[..]),
        (Box::new(LayeredFenwick::new(&values, k, 3).unwrap()), &plain[..]),
        (Box::new(SampledFenwick::new(&values, k, 3, 7).unwrap()), &plain[..]),
        (Box::new(PackedFenwick::new(&values, k, 8).unwrap()), &capped[..]),
    ];

    for (s, trace) in &mut subjects {
        let report = differential_run(&values, k, trace, s.as_mut());
        assert!(report.ok(), "{} diverged: {:?}", s.name(), report.divergence);
        print!("{:<8} ok over {} ops; max touches", s.name(), report.ops_executed);
        for kind in OpKind::ALL {
            let st = report.max_cost_of(kind);
            print!("  {}: {}r/{}w", kind.label(), st.reads, st.writes);
        }
        println!();
    }
}
