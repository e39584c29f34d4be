//! The four structures answering the same queries on one array.
//!
//! sum(i) is the prefix total through i, search(j) the smallest i whose
//! prefix reaches j (n+1 when none does), update adds a signed delta, and
//! access reads one element back.

use succinct_fenwick::{
    ClassicFenwick, LayeredFenwick, PackedFenwick, PartialSums, SampledFenwick,
};

fn main() {
    let values = [3u64, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8, 9, 7, 9, 3];
    let k = 4;

    let mut structures: Vec<Box<dyn PartialSums>> = vec![
        Box::new(ClassicFenwick::new(&values, k).unwrap()),
        Box::new(LayeredFenwick::new(&values, k, 4).unwrap()),
        Box::new(SampledFenwick::new(&values, k, 4, 3).unwrap()),
        Box::new(PackedFenwick::new(&values, k, 4).unwrap()),
    ];

    println!("A = {values:?}");
    for s in &mut structures {
        s.update(7, 5);
        s.update(7, -4);
        println!(
            "{:<8} sum(5)={} sum(16)={} search(20)={} search(999)={} access(7)={}",
            s.name(),
            s.sum(5),
            s.sum(16),
            s.search(20),
            s.search(999),
            s.access(7),
        );
    }
}
