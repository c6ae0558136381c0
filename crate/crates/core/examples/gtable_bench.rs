//! Timing probe for the segment solver at the sizes the test suite needs.
//!
//! Run: cargo run --example gtable_bench -p apfree [n_max] [k]

use std::time::Instant;

use apfree::{g_table, GTable};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_max: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(108);
    let k: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3);
    let mut cache = GTable::new();
    let start = Instant::now();
    let table = g_table(k, n_max, &mut cache).expect("table");
    let elapsed = start.elapsed();
    let values: Vec<usize> = table.iter().map(|r| r.value).collect();
    println!("k={k} n_max={n_max} elapsed={elapsed:?}");
    println!("values={values:?}");
}
