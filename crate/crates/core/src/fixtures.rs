//! Seeded generators of random instances: spaces, partitions, filtrations,
//! variables and chains. Used by the property tests, the acceptance suite
//! and the benchmarks, so every instance is reproducible from a seed.

use crate::function::{MeanFunction, MeanMap};
use crate::interval::Interval;
use crate::pricing::MarkovChainModel;
use crate::prob::{FiniteProbSpace, Partition, RandomVariable};
use crate::rng::PhiloxStream;

/// One representative of every catalog family, with both signs of the
/// exponent where the sign changes the shape.
pub fn catalog() -> Vec<MeanFunction> {
    vec![
        MeanFunction::identity(),
        MeanFunction::power(0.5).unwrap(),
        MeanFunction::power(2.0).unwrap(),
        MeanFunction::power(-1.5).unwrap(),
        MeanFunction::neg_inverse(),
        MeanFunction::cara(1.0).unwrap(),
        MeanFunction::exp(1.0).unwrap(),
        MeanFunction::exp(-0.5).unwrap(),
        MeanFunction::log(),
        MeanFunction::sinh(),
        MeanFunction::normal_cdf(),
    ]
}

/// A bounded, well-conditioned stretch of `interval`, or `None` if it is empty.
pub fn range_within(interval: Option<Interval>) -> Option<(f64, f64)> {
    let i = interval?;
    Some(match (i.lo.is_finite(), i.hi.is_finite()) {
        (false, false) => (-3.0, 3.0),
        (true, false) => (i.lo + 0.2, i.lo + 5.0),
        (false, true) => (i.hi - 5.0, i.hi - 0.2),
        (true, true) => {
            let pad = 0.05 * (i.hi - i.lo);
            (i.lo + pad, i.hi - pad)
        }
    })
}

/// Where random values for `f` are drawn from.
pub fn value_range<M: MeanMap + ?Sized>(f: &M) -> (f64, f64) {
    range_within(Some(f.domain())).expect("domains are nonempty")
}

/// Values valid for both `f` and `f⁻¹`, if `I ∩ J` is nonempty.
pub fn jensen_range<M: MeanMap + ?Sized>(f: &M) -> Option<(f64, f64)> {
    range_within(f.domain().intersect(&f.codomain()))
}

/// Random probabilities on `n` outcomes; with `allow_null`, some outcomes
/// may get probability zero (at least one stays positive).
pub fn random_space(rng: &mut PhiloxStream, n: usize, allow_null: bool) -> FiniteProbSpace {
    let mut weights: Vec<f64> = (0..n)
        .map(|_| {
            if allow_null && n > 1 && rng.uniform() < 0.15 {
                0.0
            } else {
                rng.range(0.05, 1.0)
            }
        })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        weights[0] = 1.0;
    }
    let total: f64 = weights.iter().sum();
    FiniteProbSpace::new(weights.iter().map(|w| w / total).collect()).expect("normalized")
}

pub fn random_partition(rng: &mut PhiloxStream, n: usize) -> Partition {
    let k = 1 + rng.index(n);
    let labels: Vec<usize> = (0..n).map(|_| rng.index(k)).collect();
    Partition::from_labels(&labels)
}

/// Merges blocks of `fine` at random.
pub fn coarsen(rng: &mut PhiloxStream, fine: &Partition) -> Partition {
    let k = 1 + rng.index(fine.n_blocks());
    let merged: Vec<usize> = (0..fine.n_blocks()).map(|_| rng.index(k)).collect();
    let labels: Vec<usize> = (0..fine.n_outcomes())
        .map(|w| merged[fine.block_of(w)])
        .collect();
    Partition::from_labels(&labels)
}

/// `m` partitions ordered from coarse to fine.
pub fn random_filtration(rng: &mut PhiloxStream, n: usize, m: usize) -> Vec<Partition> {
    let mut chain = vec![random_partition(rng, n)];
    for _ in 1..m {
        let next = coarsen(rng, chain.last().unwrap());
        chain.push(next);
    }
    chain.reverse();
    chain
}

pub fn random_variable<M: MeanMap + ?Sized>(
    rng: &mut PhiloxStream,
    f: &M,
    n: usize,
) -> RandomVariable {
    let (lo, hi) = value_range(f);
    RandomVariable::new((0..n).map(|_| rng.range(lo, hi)).collect()).unwrap()
}

/// A chain whose rows are random (occasionally with zero entries) and whose
/// state values lie in the domain of `f`.
pub fn random_chain<M: MeanMap + ?Sized>(
    rng: &mut PhiloxStream,
    f: &M,
    n_states: usize,
) -> MarkovChainModel {
    let transition = (0..n_states)
        .map(|_| {
            let mut row: Vec<f64> = (0..n_states)
                .map(|_| {
                    if n_states > 1 && rng.uniform() < 0.1 {
                        0.0
                    } else {
                        rng.range(0.05, 1.0)
                    }
                })
                .collect();
            if row.iter().all(|&p| p == 0.0) {
                row[rng.index(n_states)] = 1.0;
            }
            let total: f64 = row.iter().sum();
            row.iter().map(|p| p / total).collect()
        })
        .collect();
    let (lo, hi) = value_range(f);
    let values = (0..n_states).map(|_| rng.range(lo, hi)).collect();
    MarkovChainModel::new(transition, values, rng.index(n_states)).expect("valid chain")
}
