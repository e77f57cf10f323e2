//! Shared fixtures for the benchmarks.

use calimetr::{synth, EnsemblePredictions, PredictionSet, SynthConfig};

/// Seeded synthetic set with `n` instances over `k` classes.
pub fn fixture(n: usize, k: usize) -> PredictionSet {
    synth::generate(&SynthConfig::new(n, k, 0.5, 7)).expect("valid synthetic config")
}

/// `m` independently seeded members sharing one label vector.
pub fn ensemble(n: usize, k: usize, m: usize) -> EnsemblePredictions {
    let first = fixture(n, k);
    let labels = first.labels().to_vec();
    let mut members = vec![first];
    for seed in 1..m as u64 {
        let set = synth::generate(&SynthConfig::new(n, k, 0.5, 7 + seed)).expect("valid synthetic config");
        members.push(set.with_labels(labels.clone()).expect("same length"));
    }
    EnsemblePredictions::new(members).expect("members agree")
}
