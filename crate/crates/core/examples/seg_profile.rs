//! Per-length profile of the segment prover: time and whether the step
//! was a witness find (fast path) or an exhaustive refutation.
//!
//! Run: cargo run --example seg_profile -p apfree [n_max] [k]

use std::time::Instant;

use apfree::{g_table, GTable};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_max: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(80);
    let k: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3);
    let mut cache = GTable::new();
    let mut prev = 0usize;
    for n in 1..=n_max {
        let start = Instant::now();
        let table = g_table(k, n, &mut cache).expect("table");
        let elapsed = start.elapsed();
        let value = table[n as usize - 1].value;
        if elapsed.as_millis() > 200 {
            let kind = if value > prev { "find" } else { "refute" };
            println!("n={n:3} g={value:3} {kind} {elapsed:?}");
        }
        prev = value;
    }
}
