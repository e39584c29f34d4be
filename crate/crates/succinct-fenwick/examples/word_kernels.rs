//! The single-word kernels the packed structure is built from: one 64-bit
//! word holds many small fields, and one add/multiply/compare works on all
//! of them at once.

use succinct_fenwick::bits::FieldedWord;

fn main() {
    // eight 8-bit fields
    let w = FieldedWord::from_fields(&[3, 1, 4, 1, 5, 9, 2, 6], 8);
    println!("fields        {:?}", w.fields());
    println!("word          {:#018x}", w.word());

    // add 7 to every field from position 4 on, one multiply + one add
    let w2 = w.suffix_add(4, 7);
    println!("suffix_add(4,7) -> {:?}", w2.fields());

    // prefix sums inside the word, one multiply
    for r in [1, 4, 8] {
        println!("prefix_sum({r})  = {}", w2.prefix_sum(r));
    }

    // smallest field position whose prefix reaches the target
    for j in [4, 9, 100, 1000] {
        println!("search({j:<4})  = {}", w2.search(j));
    }

    // the same word machinery at a different field width
    let narrow = FieldedWord::from_fields(&[1u64; 16], 4);
    println!("16 x 4-bit ones: prefix_sum(16) = {}", narrow.prefix_sum(16));
}
