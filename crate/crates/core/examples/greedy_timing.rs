use std::time::Instant;

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    for p in 3..=5 {
        let t = Instant::now();
        let mut g = apfree::greedy::GreedyGenerator::new(p).unwrap();
        for _ in 0..n {
            g.next_term().unwrap();
        }
        println!("p={p} n={n} last={} bits={} elapsed={:?}", g.cursor(), g.allocated_bits(), t.elapsed());
    }
}
