//! Space accounting across the structures on n = 3^9 elements: payload bits
//! per component, the applicable bound, and redundancy over the raw n*k.
//!
//! The point of the layered/sampled/packed trio is the shrinking (payload -
//! n*k)/n column: from one machine word per element down to a fraction of a
//! bit.

use succinct_fenwick::oracle::gen_array;
use succinct_fenwick::{
    ClassicFenwick, LayeredFenwick, PackedFenwick, PartialSums, SampledFenwick,
};

fn main() {
    let (n, k, b) = (19_683u64, 8u32, 3u64);
    let values = gen_array(n, k, 0);

    let structures: Vec<Box<dyn PartialSums>> = vec![
        Box::new(ClassicFenwick::new(&values, k).unwrap()),
        Box::new(LayeredFenwick::new(&values, k, b).unwrap()),
        Box::new(SampledFenwick::with_epsilon(&values, k, b, 1.0).unwrap()),
        Box::new(PackedFenwick::new(&values, k, 8).unwrap()),
    ];

    println!("n = {n}, k = {k}, raw payload n*k = {} bits", n * k as u64);
    for s in &structures {
        let report = s.space();
        println!("\n{}", s.name());
        for (part, bits) in &report.components {
            println!("  {part:<32} {bits:>10} bits");
        }
        let payload = report.payload_bits();
        println!("  {:<32} {payload:>10} bits", "payload total");
        println!("  bound  {}", report.bound_desc);
        println!(
            "  redundancy {:+.3} bits/element, within bound: {}",
            (payload as f64 - (n * k as u64) as f64) / n as f64,
            if report.within_bound() { "yes" } else { "no" }
        );
    }
}
