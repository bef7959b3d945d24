//! Shared fixtures for the benchmarks.

use pavlov::graph::{sample_gnp, Family, Graph};

pub fn cycle(n: usize) -> Graph {
    Family::Cycle.generate(n).unwrap()
}

pub fn sparse_random(n: usize, seed: u64) -> Graph {
    sample_gnp(n, 2.5 / n as f64, seed).unwrap()
}
