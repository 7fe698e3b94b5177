//! Quasi-arithmetic (f-) means on finite probability spaces: conditional
//! f-expectations, certainty-equivalent pricing and the sampling theory of the
//! empirical f-mean.

pub mod error;
pub mod fixtures;
pub mod function;
pub mod interval;
pub mod means;
pub mod pricing;
pub mod prob;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use function::{Convexity, Inverse, MeanFunction, MeanMap};
pub use interval::Interval;
pub use means::{PointSet, WeightedDiscreteDistribution};
pub use pricing::{AdaptedProcess, CeSchedule, Filtration, MarkovChainModel, Preference};
pub use prob::{FiniteProbSpace, Partition, RandomVariable};
pub use rng::PhiloxStream;
pub use stats::SamplerSpec;
