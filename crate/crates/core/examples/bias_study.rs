//! Mean empirical bias of every estimator over replicated benchmark datasets.
//!
//! `cargo run --release -p nof1-apte --example bias_study -- [H] [m] [workers] [seed]`

use std::time::Instant;

use nof1_apte::harness::{replicate, Study};
use nof1_apte::SeedSpec;

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let h = args.first().copied().unwrap_or(100);
    let m = args.get(1).copied().unwrap_or(220);
    let mut study = Study::benchmark(h, m);
    study.workers = args.get(2).copied().unwrap_or(4);
    if let Some(&s) = args.get(3) {
        study.seed = SeedSpec::new(s as u64);
    }
    let t0 = Instant::now();
    let rep = replicate(&study).expect("replication");
    println!("H = {h}, m = {m}, true APTE = {}, {:.1?}", rep.true_apte, t0.elapsed());
    for s in &rep.summary {
        println!(
            "{:>9}  bias {:+.4}  ({:+.4}, {:+.4})  n = {}  failures = {}",
            s.method, s.mean_bias, s.ci_lo, s.ci_hi, s.n, s.failures
        );
    }
}
