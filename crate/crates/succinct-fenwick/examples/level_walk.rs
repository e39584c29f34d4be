//! Walks the layered tree's index arithmetic on the n=27, b=3 instance:
//! which stored entries a prefix sum reads, and which an update rewrites.
//!
//! sum(i) reads one entry per nonzero base-b digit of i; update(i, delta)
//! rewrites every entry whose coverage contains i, at most b-1 per level.

use succinct_fenwick::LayeredFenwick;

fn main() {
    // prefix(18) = 89 and A[19] = 3, so sum(19) = 92
    let mut values = vec![5u64; 27];
    values[0] = 4;
    values[18] = 3;
    let tree = LayeredFenwick::new(&values, 4, 3).unwrap();
    let geo = tree.geometry();

    let i = 19;
    println!("n = {}, b = {}, levels = {}", geo.n(), geo.b(), geo.num_levels());
    println!("digits({i}) base {} = {:?}", geo.b(), geo.digits(i));

    let mut total = 0;
    for (j, offset) in geo.sum_offsets(i) {
        let v = tree.peek_entry(j, offset);
        let (lo, hi) = geo.coverage(j, offset);
        println!("  level {j} offset {offset} covers [{lo}, {hi}] -> {v}");
        total += v;
    }
    println!("sum({i}) = {total}");

    println!("update({i}, d) rewrites:");
    for (j, offset) in geo.update_targets(i) {
        let (lo, hi) = geo.coverage(j, offset);
        println!("  level {j} offset {offset} covering [{lo}, {hi}]");
    }
}
