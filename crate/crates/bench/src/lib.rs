//! Benchmark inputs, built once per seed so runs are comparable.

use fmean_core::fixtures;
use fmean_core::{
    Filtration, FiniteProbSpace, MarkovChainModel, MeanFunction, Partition, PhiloxStream,
    RandomVariable,
};

/// A space with `n` outcomes, a variable valid for `f`, and a filtration of
/// `depth` partitions.
pub struct Scenario {
    pub space: FiniteProbSpace,
    pub variable: RandomVariable,
    pub filtration: Filtration,
}

impl Scenario {
    pub fn new(f: &MeanFunction, n: usize, depth: usize, seed: u64) -> Self {
        let mut rng = PhiloxStream::new(seed, 0);
        Self {
            space: fixtures::random_space(&mut rng, n, false),
            variable: fixtures::random_variable(&mut rng, f, n),
            filtration: Filtration::new(fixtures::random_filtration(&mut rng, n, depth))
                .expect("generated filtrations are nested"),
        }
    }

    pub fn finest(&self) -> &Partition {
        self.filtration.partitions().last().expect("nonempty")
    }
}

pub fn chain(f: &MeanFunction, states: usize, seed: u64) -> MarkovChainModel {
    let mut rng = PhiloxStream::new(seed, 1);
    fixtures::random_chain(&mut rng, f, states)
}
