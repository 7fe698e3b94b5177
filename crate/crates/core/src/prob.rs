//! Finite probability spaces, partitions as σ-algebras, and the classical and
//! f-conditional expectation operators built on them.
//!
//! On a finite space every sub-σ-algebra is generated by a partition of the
//! outcomes, so conditioning reduces to blockwise averaging. Blocks of zero
//! probability carry no information; the conditional value there is set to
//! the unconditional mean (`E[X]` or `E_f[X]`), one of the many versions that
//! agree almost surely.

use crate::error::{Error, Result};
use crate::function::{Convexity, Inverse, MeanFunction, MeanMap};
use crate::interval::Interval;
use crate::means::PROBABILITY_ATOL;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProbSpace {
    probs: Vec<f64>,
}

impl FiniteProbSpace {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty("probability space"));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidProbabilities(format!(
                "probability {p} is not a finite nonnegative number"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_ATOL {
            return Err(Error::InvalidProbabilities(format!(
                "probabilities sum to {total}, expected 1 within {PROBABILITY_ATOL:e}"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("probability space"));
        }
        Ok(Self {
            probs: vec![1.0 / n as f64; n],
        })
    }

    /// Product measure; outcome `(i, j)` has index `i * right.len() + j`.
    pub fn product(left: &Self, right: &Self) -> Self {
        let probs = left
            .probs
            .iter()
            .flat_map(|p| right.probs.iter().map(move |q| p * q))
            .collect();
        Self { probs }
    }

    /// The conditional law on `outcomes`, renormalized.
    pub fn restrict(&self, outcomes: &[usize]) -> Result<Self> {
        let mass: f64 = outcomes.iter().map(|&w| self.probs[w]).sum();
        if mass <= 0.0 {
            return Err(Error::InvalidProbabilities(
                "cannot condition on a null event".into(),
            ));
        }
        Ok(Self {
            probs: outcomes.iter().map(|&w| self.probs[w] / mass).collect(),
        })
    }

    pub fn n_outcomes(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, outcome: usize) -> f64 {
        self.probs[outcome]
    }

    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.probs.iter().zip(values).map(|(p, x)| p * x).sum()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n == self.probs.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.probs.len(),
                found: n,
            })
        }
    }
}

/// Disjoint nonempty blocks of outcome indices covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    pub fn new(n_outcomes: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut block_of = vec![usize::MAX; n_outcomes];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {b} is empty")));
            }
            for &w in block {
                if w >= n_outcomes {
                    return Err(Error::InvalidPartition(format!(
                        "outcome {w} out of range for {n_outcomes} outcomes"
                    )));
                }
                if block_of[w] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "outcome {w} appears in blocks {} and {b}",
                        block_of[w]
                    )));
                }
                block_of[w] = b;
            }
        }
        if let Some(w) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidPartition(format!(
                "outcome {w} is not covered"
            )));
        }
        Ok(Self { blocks, block_of })
    }

    /// Groups outcomes by label; blocks are ordered by first appearance.
    pub fn from_labels<T: PartialEq>(labels: &[T]) -> Self {
        let mut seen: Vec<&T> = Vec::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = Vec::with_capacity(labels.len());
        for (w, label) in labels.iter().enumerate() {
            let b = match seen.iter().position(|s| *s == label) {
                Some(b) => b,
                None => {
                    seen.push(label);
                    blocks.push(Vec::new());
                    blocks.len() - 1
                }
            };
            blocks[b].push(w);
            block_of.push(b);
        }
        Self { blocks, block_of }
    }

    /// `{Ω}`: no information.
    pub fn trivial(n_outcomes: usize) -> Self {
        Self {
            blocks: vec![(0..n_outcomes).collect()],
            block_of: vec![0; n_outcomes],
        }
    }

    /// Full information.
    pub fn singletons(n_outcomes: usize) -> Self {
        Self {
            blocks: (0..n_outcomes).map(|w| vec![w]).collect(),
            block_of: (0..n_outcomes).collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_outcomes(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self, outcome: usize) -> usize {
        self.block_of[outcome]
    }

    /// True iff every block of `fine` sits inside a block of `self`.
    pub fn is_refined_by(&self, fine: &Partition) -> bool {
        fine.blocks.iter().all(|block| {
            let b = self.block_of[block[0]];
            block.iter().all(|&w| self.block_of[w] == b)
        })
    }
}

/// Whether `fine` generates a σ-algebra containing the one generated by `coarse`.
pub fn refine_check(coarse: &Partition, fine: &Partition) -> Result<bool> {
    if coarse.n_outcomes() != fine.n_outcomes() {
        return Err(Error::LengthMismatch {
            expected: coarse.n_outcomes(),
            found: fine.n_outcomes(),
        });
    }
    Ok(coarse.is_refined_by(fine))
}

/// One real value per outcome, tagged with the interval it must live in.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVariable {
    values: Vec<f64>,
    domain: Interval,
}

impl RandomVariable {
    /// A real-valued variable; values must be finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_domain(values, Interval::real_line())
    }

    pub fn with_domain(values: Vec<f64>, domain: Interval) -> Result<Self> {
        if let Some(&v) = values.iter().find(|v| !domain.contains(**v)) {
            return Err(Error::OutOfDomain {
                value: v,
                domain: domain.to_string(),
            });
        }
        Ok(Self { values, domain })
    }

    pub fn constant(n_outcomes: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n_outcomes])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, outcome: usize) -> f64 {
        self.values[outcome]
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Constant on every block of `partition`.
    pub fn is_measurable(&self, partition: &Partition) -> bool {
        partition.n_outcomes() == self.len()
            && partition.blocks().iter().all(|block| {
                block
                    .iter()
                    .all(|&w| self.values[w] == self.values[block[0]])
            })
    }

    /// Pointwise sum; the result is tagged with the real line.
    pub fn add(&self, other: &RandomVariable) -> Result<RandomVariable> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        RandomVariable::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Pointwise product; the result is tagged with the real line.
    pub fn mul(&self, other: &RandomVariable) -> Result<RandomVariable> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        RandomVariable::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        )
    }
}

fn check_variable<M: MeanMap + ?Sized>(
    f: &M,
    space: &FiniteProbSpace,
    x: &RandomVariable,
) -> Result<()> {
    space.check_len(x.len())?;
    x.values.iter().try_for_each(|&v| f.check_domain(v))
}

fn check_partition(space: &FiniteProbSpace, g: &Partition) -> Result<()> {
    space.check_len(g.n_outcomes())
}

/// Per block: `(P(B), Σ_{ω∈B} p_ω v_ω / P(B))`, the average being `None` on null blocks.
fn block_averages(
    space: &FiniteProbSpace,
    values: &[f64],
    g: &Partition,
) -> Vec<(f64, Option<f64>)> {
    g.blocks()
        .iter()
        .map(|block| {
            let mass: f64 = block.iter().map(|&w| space.probs[w]).sum();
            let avg = (mass > 0.0).then(|| {
                block
                    .iter()
                    .map(|&w| space.probs[w] * values[w])
                    .sum::<f64>()
                    / mass
            });
            (mass, avg)
        })
        .collect()
}

/// Range of `values` over the positive-probability outcomes of `outcomes`.
fn hull(space: &FiniteProbSpace, values: &[f64], outcomes: &[usize]) -> (f64, f64) {
    outcomes
        .iter()
        .filter(|&&w| space.probs[w] > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &w| {
            (lo.min(values[w]), hi.max(values[w]))
        })
}

fn spread(g: &Partition, per_block: &[f64]) -> Vec<f64> {
    (0..g.n_outcomes())
        .map(|w| per_block[g.block_of(w)])
        .collect()
}

/// Classical `E[X|G]`, blockwise probability-weighted averages.
pub fn cond_expectation(
    space: &FiniteProbSpace,
    x: &RandomVariable,
    g: &Partition,
) -> Result<RandomVariable> {
    space.check_len(x.len())?;
    check_partition(space, g)?;
    let overall = space.expectation(&x.values);
    let per_block: Vec<f64> = block_averages(space, &x.values, g)
        .into_iter()
        .map(|(_, avg)| avg.unwrap_or(overall))
        .collect();
    RandomVariable::new(spread(g, &per_block))
}

/// `d_f(X, Y) = sqrt(E[(f(X) − f(Y))²])`.
pub fn f_distance_rv<M: MeanMap + ?Sized>(
    f: &M,
    space: &FiniteProbSpace,
    x: &RandomVariable,
    y: &RandomVariable,
) -> Result<f64> {
    check_variable(f, space, x)?;
    check_variable(f, space, y)?;
    let sq: Vec<f64> = x
        .values
        .iter()
        .zip(&y.values)
        .map(|(&a, &b)| (f.apply(a) - f.apply(b)).powi(2))
        .collect();
    Ok(space.expectation(&sq).sqrt())
}

/// `E_f[X] = f⁻¹(E[f(X)])`, the constant closest to `X` in the f-distance.
pub fn f_expectation<M: MeanMap + ?Sized>(
    f: &M,
    space: &FiniteProbSpace,
    x: &RandomVariable,
) -> Result<f64> {
    check_variable(f, space, x)?;
    unconditional_f_mean(f, space, x)
}

fn unconditional_f_mean<M: MeanMap + ?Sized>(
    f: &M,
    space: &FiniteProbSpace,
    x: &RandomVariable,
) -> Result<f64> {
    let fx: Vec<f64> = x.values.iter().map(|&v| f.apply(v)).collect();
    let (lo, hi) = hull(space, &x.values, &(0..x.len()).collect::<Vec<_>>());
    Ok(f.invert(space.expectation(&fx))?.clamp(lo, hi))
}

/// `E_f[X|G] = f⁻¹(E[f(X)|G])`, the G-measurable best predictor of `X` in
/// the f-distance.
pub fn f_cond_expectation<M: MeanMap + ?Sized>(
    f: &M,
    space: &FiniteProbSpace,
    x: &RandomVariable,
    g: &Partition,
) -> Result<RandomVariable> {
    check_variable(f, space, x)?;
    check_partition(space, g)?;
    let fx: Vec<f64> = x.values.iter().map(|&v| f.apply(v)).collect();
    let mut fallback = None;
    let per_block = block_averages(space, &fx, g)
        .into_iter()
        .zip(g.blocks())
        .map(|((_, avg), block)| match avg {
            Some(avg) => {
                let (lo, hi) = hull(space, &x.values, block);
                Ok(f.invert(avg)?.clamp(lo, hi))
            }
            None => match fallback {
                Some(v) => Ok(v),
                None => {
                    let v = unconditional_f_mean(f, space, x)?;
                    fallback = Some(v);
                    Ok(v)
                }
            },
        })
        .collect::<Result<Vec<f64>>>()?;
    RandomVariable::with_domain(spread(g, &per_block), f.domain())
}

/// `σ_f²(X) = E[(f(X) − E[f(X)])²]`.
pub fn f_variance<M: MeanMap + ?Sized>(
    f: &M,
    space: &FiniteProbSpace,
    x: &RandomVariable,
) -> Result<f64> {
    check_variable(f, space, x)?;
    let fx: Vec<f64> = x.values.iter().map(|&v| f.apply(v)).collect();
    let mean = space.expectation(&fx);
    let dev: Vec<f64> = fx.iter().map(|v| (v - mean).powi(2)).collect();
    Ok(space.expectation(&dev))
}

/// Blockwise variance of `f(X)` given `G`; zero on null blocks.
pub fn f_cond_variance<M: MeanMap + ?Sized>(
    f: &M,
    space: &FiniteProbSpace,
    x: &RandomVariable,
    g: &Partition,
) -> Result<RandomVariable> {
    check_variable(f, space, x)?;
    check_partition(space, g)?;
    let fx: Vec<f64> = x.values.iter().map(|&v| f.apply(v)).collect();
    let per_block: Vec<f64> = block_averages(space, &fx, g)
        .into_iter()
        .zip(g.blocks())
        .map(|((mass, avg), block)| match avg {
            Some(m) => {
                block
                    .iter()
                    .map(|&w| space.probs[w] * (fx[w] - m).powi(2))
                    .sum::<f64>()
                    / mass
            }
            None => 0.0,
        })
        .collect();
    RandomVariable::new(spread(g, &per_block))
}

/// Both sides of `σ_f²(X) = E[σ_f²(X|G)] + σ_f²(E_f[X|G])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalVariance {
    /// `σ_f²(X)`.
    pub lhs: f64,
    /// `E[σ_f²(X|G)]`.
    pub within: f64,
    /// `σ_f²(E_f[X|G])`.
    pub between: f64,
}

impl TotalVariance {
    pub fn rhs(&self) -> f64 {
        self.within + self.between
    }

    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs()).abs()
    }
}

pub fn total_variance_check<M: MeanMap + ?Sized>(
    f: &M,
    space: &FiniteProbSpace,
    x: &RandomVariable,
    g: &Partition,
) -> Result<TotalVariance> {
    let lhs = f_variance(f, space, x)?;
    let within = space.expectation(f_cond_variance(f, space, x, g)?.values());
    let predictor = f_cond_expectation(f, space, x, g)?;
    let between = f_variance(f, space, &predictor)?;
    Ok(TotalVariance {
        lhs,
        within,
        between,
    })
}

/// Whether `E_f[X|G] = E_f[X]` within `tol` on every positive-probability block.
pub fn f_independent<M: MeanMap + ?Sized>(
    f: &M,
    space: &FiniteProbSpace,
    x: &RandomVariable,
    g: &Partition,
    tol: f64,
) -> Result<bool> {
    let overall = f_expectation(f, space, x)?;
    let conditional = f_cond_expectation(f, space, x, g)?;
    Ok(g.blocks().iter().all(|block| {
        let mass: f64 = block.iter().map(|&w| space.probs[w]).sum();
        mass == 0.0 || (conditional.values[block[0]] - overall).abs() <= tol
    }))
}

/// `E[|f(X)|^p]`; finite on every finite space, reported for diagnostics.
pub fn f_abs_moment<M: MeanMap + ?Sized>(
    f: &M,
    space: &FiniteProbSpace,
    x: &RandomVariable,
    p: f64,
) -> Result<f64> {
    check_variable(f, space, x)?;
    let m: Vec<f64> = x.values.iter().map(|&v| f.apply(v).abs().powf(p)).collect();
    Ok(space.expectation(&m))
}

/// The three predictors `E_f[X|G]`, `E[X|G]` and `E_{f⁻¹}[X|G]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JensenOrdering {
    pub convexity: Convexity,
    pub f_predictor: RandomVariable,
    pub classical: RandomVariable,
    pub inverse_predictor: RandomVariable,
}

impl JensenOrdering {
    /// Outcomes where the ordering implied by the convexity tag fails by more
    /// than `tol · max(1, |E[X|G]|)`.
    pub fn violations(&self, tol: f64) -> Vec<usize> {
        let (lower, upper) = match self.convexity {
            Convexity::Concave => (&self.f_predictor, &self.inverse_predictor),
            _ => (&self.inverse_predictor, &self.f_predictor),
        };
        (0..self.classical.len())
            .filter(|&w| {
                let mid = self.classical.values[w];
                let slack = tol * mid.abs().max(1.0);
                lower.values[w] > mid + slack || mid > upper.values[w] + slack
            })
            .collect()
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.violations(tol).is_empty()
    }
}

/// Computes the Jensen-ordered predictors for a concave or convex `f`.
///
/// `X` must take values in `I ∩ J` so that both `f` and `f⁻¹` apply.
pub fn jensen_order_check(
    f: &MeanFunction,
    space: &FiniteProbSpace,
    x: &RandomVariable,
    g: &Partition,
) -> Result<JensenOrdering> {
    let convexity = f.convexity();
    if convexity == Convexity::Neither {
        return Err(Error::Convexity {
            name: f.to_string(),
            found: convexity.as_str(),
            required: "concave or convex",
        });
    }
    let inverse = Inverse(f);
    check_variable(&inverse, space, x)?;
    Ok(JensenOrdering {
        convexity,
        f_predictor: f_cond_expectation(f, space, x, g)?,
        classical: cond_expectation(space, x, g)?,
        inverse_predictor: f_cond_expectation(&inverse, space, x, g)?,
    })
}
