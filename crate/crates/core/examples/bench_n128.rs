use nsbound::channel;
use nsbound::type_reduction::{reduced_max_size_with, ReducedOptions};
use std::time::Instant;

fn main() {
    let bsc = channel::bsc(0.11).unwrap();
    let opts = ReducedOptions { direct_limit: 0, colgen_max_iterations: 60, ..ReducedOptions::default() };
    let t0 = Instant::now();
    match reduced_max_size_with(&bsc, 16, 0.05, &opts) {
        Ok(r) => println!("ok log2={:.6} gap={:.2e} time={:.2}s", r.m_beta.log2(), r.stats.certified_gap, t0.elapsed().as_secs_f64()),
        Err(e) => println!("ERR {e} ({:.2}s)", t0.elapsed().as_secs_f64()),
    }
}
