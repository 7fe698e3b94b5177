//! Deterministic f-means of point sets, weighted collections and discrete
//! distributions, and the f-distorted distance they minimize.

use crate::error::{Error, Result};
use crate::function::MeanMap;

/// Tolerance on the total mass of a discrete distribution.
pub const PROBABILITY_ATOL: f64 = 1e-12;

/// A nonempty collection of `d`-vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().ok_or(Error::Empty("point set"))?.len();
        if dim == 0 {
            return Err(Error::Empty("point dimension"));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        Ok(Self { points, dim })
    }

    /// One-dimensional points.
    pub fn scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Atoms `(value, probability)` with optional per-atom weights `w(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDiscreteDistribution {
    atoms: Vec<(f64, f64)>,
    weights: Option<Vec<f64>>,
}

impl WeightedDiscreteDistribution {
    pub fn new(atoms: Vec<(f64, f64)>, weights: Option<Vec<f64>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Empty("distribution atoms"));
        }
        if let Some(&(_, p)) = atoms.iter().find(|(_, p)| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidProbabilities(format!(
                "atom probability {p} is not a finite nonnegative number"
            )));
        }
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > PROBABILITY_ATOL {
            return Err(Error::InvalidProbabilities(format!(
                "probabilities sum to {total}, expected 1 within {PROBABILITY_ATOL:e}"
            )));
        }
        if let Some(w) = &weights {
            if w.len() != atoms.len() {
                return Err(Error::LengthMismatch {
                    expected: atoms.len(),
                    found: w.len(),
                });
            }
            if let Some(&bad) = w.iter().find(|w| !w.is_finite() || **w < 0.0) {
                return Err(Error::NegativeWeight(bad));
            }
            if !atoms.iter().zip(w).any(|((_, p), w)| p * w > 0.0) {
                return Err(Error::ZeroWeightMass);
            }
        }
        Ok(Self { atoms, weights })
    }

    /// A single atom carrying all the mass.
    pub fn point_mass(x: f64) -> Self {
        Self {
            atoms: vec![(x, 1.0)],
            weights: None,
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }
}

fn check_all<M: MeanMap + ?Sized>(f: &M, values: impl IntoIterator<Item = f64>) -> Result<()> {
    values.into_iter().try_for_each(|x| f.check_domain(x))
}

/// Inverts `y` and clamps onto `[lo, hi]`, the hull the exact mean must lie in.
pub(crate) fn invert_within<M: MeanMap + ?Sized>(f: &M, y: f64, lo: f64, hi: f64) -> Result<f64> {
    let x = f.invert(y)?;
    Ok(x.clamp(lo, hi))
}

/// `d_f(x, y) = ‖f(x) − f(y)‖₂` with `f` applied componentwise.
pub fn f_distance<M: MeanMap + ?Sized>(f: &M, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    check_all(f, x.iter().chain(y).copied())?;
    Ok(x.iter()
        .zip(y)
        .map(|(&a, &b)| (f.apply(a) - f.apply(b)).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Componentwise `f⁻¹((1/N) Σ f(x_j))`, the minimizer of `Σ_j d_f(x_j, z)²`.
pub fn f_mean_points<M: MeanMap + ?Sized>(f: &M, pts: &PointSet) -> Result<Vec<f64>> {
    check_all(f, pts.points.iter().flatten().copied())?;
    let n = pts.len() as f64;
    (0..pts.dim)
        .map(|k| {
            let column = pts.points.iter().map(|p| p[k]);
            let (lo, hi) = column
                .clone()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                });
            let avg = column.map(|x| f.apply(x)).sum::<f64>() / n;
            invert_within(f, avg, lo, hi)
        })
        .collect()
}

/// `f⁻¹(Σ w_k f(x_k) / Σ w_k)`.
pub fn weighted_f_mean<M: MeanMap + ?Sized>(f: &M, values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("values"));
    }
    if values.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: values.len(),
            found: weights.len(),
        });
    }
    if let Some(&w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::NegativeWeight(w));
    }
    let mass: f64 = weights.iter().sum();
    if mass <= 0.0 {
        return Err(Error::ZeroWeightMass);
    }
    check_all(f, values.iter().copied())?;
    weighted_average_inverted(f, values.iter().zip(weights).map(|(&x, &w)| (x, w)), mass)
}

/// `f⁻¹(Σ w(x_i) f(x_i) p_i / Σ w(x_i) p_i)`, with `w ≡ 1` when no weights are given.
pub fn weighted_distribution_f_mean<M: MeanMap + ?Sized>(
    f: &M,
    dist: &WeightedDiscreteDistribution,
) -> Result<f64> {
    check_all(f, dist.atoms.iter().map(|(x, _)| *x))?;
    let masses: Vec<(f64, f64)> = match &dist.weights {
        Some(w) => dist
            .atoms
            .iter()
            .zip(w)
            .map(|(&(x, p), &w)| (x, w * p))
            .collect(),
        None => dist.atoms.clone(),
    };
    let mass: f64 = masses.iter().map(|(_, m)| m).sum();
    if mass <= 0.0 {
        return Err(Error::ZeroWeightMass);
    }
    weighted_average_inverted(f, masses.into_iter(), mass)
}

fn weighted_average_inverted<M: MeanMap + ?Sized>(
    f: &M,
    pairs: impl Iterator<Item = (f64, f64)> + Clone,
    mass: f64,
) -> Result<f64> {
    let (lo, hi) = pairs
        .clone()
        .filter(|(_, w)| *w > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
            (lo.min(x), hi.max(x))
        });
    let avg = pairs.map(|(x, w)| w * f.apply(x)).sum::<f64>() / mass;
    invert_within(f, avg, lo, hi)
}
