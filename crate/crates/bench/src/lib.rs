//! Shared fixtures for the benchmark suite.

use hgoe::synth::{generate, SynthCollection, SynthConfig};

/// A mid-sized deterministic collection for benchmarking.
pub fn bench_collection(docs: usize) -> SynthCollection {
    generate(&SynthConfig {
        docs,
        entities: 50,
        topics_per_task: 10,
        seed: 42,
    })
    .expect("valid benchmark config")
}
