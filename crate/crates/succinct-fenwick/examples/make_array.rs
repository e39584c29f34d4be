//! Writes a seeded random array file, the input `sfen build` consumes.
//!
//!     cargo run --example make_array -- out.psar 1000 8 42

use std::path::Path;

use succinct_fenwick::files::write_array_file;
use succinct_fenwick::oracle::gen_array;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let path = args.get(1).map(String::as_str).unwrap_or("array.psar");
    let n: u64 = args.get(2).map_or(1000, |s| s.parse().expect("n"));
    let k: u32 = args.get(3).map_or(8, |s| s.parse().expect("k"));
    let seed: u64 = args.get(4).map_or(0, |s| s.parse().expect("seed"));

    let values = gen_array(n, k, seed);
    write_array_file(Path::new(path), &values, k).expect("write");
    let total: u64 = values.iter().sum();
    println!("{path}: n={n} k={k} seed={seed} total={total}");
}
