//! The catalog of mean-generating functions.
//!
//! A [`MeanFunction`] is a strictly increasing continuous map `f: I -> J`
//! between intervals together with its inverse. Every quasi-arithmetic mean
//! in this crate is computed as `f⁻¹(average of f(x))`, so the catalog entry
//! carries everything the averaging code needs: the forward map, an inverse
//! (closed form where one exists, bisection otherwise), the domain `I`, the
//! codomain `J` and a convexity tag used by the Jensen ordering checks.
//!
//! | name          | f(x)                 | I        | J        | shape   |
//! |---------------|----------------------|----------|----------|---------|
//! | `identity`    | x                    | ℝ        | ℝ        | neither |
//! | `power(a)`    | x^a (−x^a for a < 0) | (0, ∞)   | ±(0, ∞)  | by a    |
//! | `neg_inverse` | −1/x                 | (0, ∞)   | (−∞, 0)  | concave |
//! | `cara(a)`     | 1 − e^(−ax)          | (0, ∞)   | (0, 1)   | concave |
//! | `exp(a)`      | e^(ax) (−e^(ax), a<0)| ℝ        | ±(0, ∞)  | by a    |
//! | `log`         | ln x                 | (0, ∞)   | ℝ        | concave |
//! | `sinh`        | sinh x               | ℝ        | ℝ        | neither |
//! | `normal_cdf`  | Φ(x)                 | ℝ        | (0, 1)   | neither |

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, Placement};

/// Absolute tolerance on `|f(x) − y|` promised by numeric inverses.
pub const INVERSION_ATOL: f64 = 1e-10;

/// Bracket width at which bisection stops.
pub const BISECTION_XTOL: f64 = 1e-13;

const NORMAL_BRACKET: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convexity {
    Concave,
    Convex,
    Neither,
}

impl Convexity {
    pub fn as_str(self) -> &'static str {
        match self {
            Convexity::Concave => "concave",
            Convexity::Convex => "convex",
            Convexity::Neither => "neither",
        }
    }
}

impl fmt::Display for Convexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A strictly increasing bijection between two intervals.
///
/// Implemented by [`MeanFunction`] and by [`Inverse`], which swaps the roles
/// of the forward map and its inverse.
pub trait MeanMap {
    fn name(&self) -> String;

    /// Forward map. Callers guarantee `x` lies in [`MeanMap::domain`].
    fn apply(&self, x: f64) -> f64;

    /// Inverse map, rejecting values off the codomain.
    fn invert(&self, y: f64) -> Result<f64>;

    fn domain(&self) -> Interval;

    fn codomain(&self) -> Interval;

    fn check_domain(&self, x: f64) -> Result<()> {
        if self.domain().contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                value: x,
                domain: self.domain().to_string(),
            })
        }
    }
}

impl<M: MeanMap + ?Sized> MeanMap for &M {
    fn name(&self) -> String {
        (**self).name()
    }
    fn apply(&self, x: f64) -> f64 {
        (**self).apply(x)
    }
    fn invert(&self, y: f64) -> Result<f64> {
        (**self).invert(y)
    }
    fn domain(&self) -> Interval {
        (**self).domain()
    }
    fn codomain(&self) -> Interval {
        (**self).codomain()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Identity,
    Power(f64),
    NegInverse,
    Cara(f64),
    Exp(f64),
    Log,
    Sinh,
    NormalCdf,
}

/// A catalog entry: the map `f`, its inverse, `I = domain`, `J = f(I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFunction {
    kind: Kind,
    name: String,
    params: Vec<f64>,
    domain: Interval,
    codomain: Interval,
    convexity: Convexity,
    has_closed_inverse: bool,
}

/// Names accepted by [`MeanFunction::from_name`].
pub const CATALOG_NAMES: [&str; 8] = [
    "identity",
    "power",
    "neg_inverse",
    "cara",
    "exp",
    "log",
    "sinh",
    "normal_cdf",
];

fn expect_params(name: &str, params: &[f64], n: usize) -> Result<()> {
    if params.len() != n {
        return Err(Error::InvalidParameter {
            name: name.to_string(),
            reason: format!("expected {n} parameter(s), got {}", params.len()),
        });
    }
    if let Some(p) = params.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter {
            name: name.to_string(),
            reason: format!("parameter {p} is not finite"),
        });
    }
    Ok(())
}

fn invalid(name: &str, reason: &str) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.to_string(),
    }
}

impl MeanFunction {
    /// Builds a catalog entry by name, e.g. `("power", [0.5])` or `("log", [])`.
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let (kind, domain, codomain, convexity) = match name {
            "identity" => {
                expect_params(name, params, 0)?;
                (
                    Kind::Identity,
                    Interval::real_line(),
                    Interval::real_line(),
                    Convexity::Neither,
                )
            }
            "power" => {
                expect_params(name, params, 1)?;
                let a = params[0];
                if a == 0.0 {
                    return Err(invalid(name, "exponent must be nonzero"));
                }
                let (codomain, convexity) = if a < 0.0 {
                    (Interval::negative(), Convexity::Concave)
                } else if a < 1.0 {
                    (Interval::positive(), Convexity::Concave)
                } else if a > 1.0 {
                    (Interval::positive(), Convexity::Convex)
                } else {
                    (Interval::positive(), Convexity::Neither)
                };
                (Kind::Power(a), Interval::positive(), codomain, convexity)
            }
            "neg_inverse" => {
                expect_params(name, params, 0)?;
                (
                    Kind::NegInverse,
                    Interval::positive(),
                    Interval::negative(),
                    Convexity::Concave,
                )
            }
            "cara" => {
                expect_params(name, params, 1)?;
                let a = params[0];
                if a <= 0.0 {
                    return Err(invalid(name, "risk aversion must be positive"));
                }
                (
                    Kind::Cara(a),
                    Interval::positive(),
                    Interval::unit_open(),
                    Convexity::Concave,
                )
            }
            "exp" => {
                expect_params(name, params, 1)?;
                let a = params[0];
                if a == 0.0 {
                    return Err(invalid(name, "rate must be nonzero"));
                }
                let (codomain, convexity) = if a > 0.0 {
                    (Interval::positive(), Convexity::Convex)
                } else {
                    (Interval::negative(), Convexity::Concave)
                };
                (Kind::Exp(a), Interval::real_line(), codomain, convexity)
            }
            "log" => {
                expect_params(name, params, 0)?;
                (
                    Kind::Log,
                    Interval::positive(),
                    Interval::real_line(),
                    Convexity::Concave,
                )
            }
            "sinh" => {
                expect_params(name, params, 0)?;
                (
                    Kind::Sinh,
                    Interval::real_line(),
                    Interval::real_line(),
                    Convexity::Neither,
                )
            }
            "normal_cdf" => {
                expect_params(name, params, 0)?;
                (
                    Kind::NormalCdf,
                    Interval::real_line(),
                    Interval::unit_open(),
                    Convexity::Neither,
                )
            }
            other => return Err(Error::UnknownMeanFunction(other.to_string())),
        };
        Ok(Self {
            kind,
            name: name.to_string(),
            params: params.to_vec(),
            domain,
            codomain,
            convexity,
            has_closed_inverse: kind != Kind::NormalCdf,
        })
    }

    pub fn identity() -> Self {
        Self::from_name("identity", &[]).unwrap()
    }

    pub fn log() -> Self {
        Self::from_name("log", &[]).unwrap()
    }

    pub fn neg_inverse() -> Self {
        Self::from_name("neg_inverse", &[]).unwrap()
    }

    pub fn sinh() -> Self {
        Self::from_name("sinh", &[]).unwrap()
    }

    pub fn normal_cdf() -> Self {
        Self::from_name("normal_cdf", &[]).unwrap()
    }

    pub fn power(a: f64) -> Result<Self> {
        Self::from_name("power", &[a])
    }

    pub fn cara(a: f64) -> Result<Self> {
        Self::from_name("cara", &[a])
    }

    pub fn exp(a: f64) -> Result<Self> {
        Self::from_name("exp", &[a])
    }

    /// Catalog name without parameters, e.g. `power`.
    pub fn family(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn convexity(&self) -> Convexity {
        self.convexity
    }

    pub fn has_closed_inverse(&self) -> bool {
        self.has_closed_inverse
    }

    /// Closed form of `E_f[X]` in terms of ordinary expectations.
    pub fn mean_formula(&self) -> String {
        match self.kind {
            Kind::Identity => "E[X]".into(),
            Kind::Power(a) => format!("(E[X^{a}])^(1/{a})"),
            Kind::NegInverse => "(E[1/X])^(-1)".into(),
            Kind::Cara(a) => format!("-(1/{a}) ln(E[exp(-{a}X)])"),
            Kind::Exp(a) => format!("(1/{a}) ln(E[exp({a}X)])"),
            Kind::Log => "exp(E[ln X])".into(),
            Kind::Sinh => "asinh(E[sinh X])".into(),
            Kind::NormalCdf => "q(E[Phi(X)])".into(),
        }
    }

    fn closed_inverse(&self, y: f64) -> Result<f64> {
        Ok(match self.kind {
            Kind::Identity => y,
            Kind::Power(a) if a > 0.0 => y.powf(1.0 / a),
            Kind::Power(a) => (-y).powf(1.0 / a),
            Kind::NegInverse => -1.0 / y,
            Kind::Cara(a) => -(-y).ln_1p() / a,
            Kind::Exp(a) if a > 0.0 => y.ln() / a,
            Kind::Exp(a) => (-y).ln() / a,
            Kind::Log => y.exp(),
            Kind::Sinh => y.asinh(),
            Kind::NormalCdf => quantile_by_bisection(y)?,
        })
    }
}

impl MeanMap for MeanFunction {
    fn name(&self) -> String {
        if self.params.is_empty() {
            self.name.clone()
        } else {
            let ps: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
            format!("{}({})", self.name, ps.join(", "))
        }
    }

    fn apply(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Identity => x,
            Kind::Power(a) if a > 0.0 => x.powf(a),
            Kind::Power(a) => -x.powf(a),
            Kind::NegInverse => -1.0 / x,
            Kind::Cara(a) => -(-a * x).exp_m1(),
            Kind::Exp(a) if a > 0.0 => (a * x).exp(),
            Kind::Exp(a) => -(a * x).exp(),
            Kind::Log => x.ln(),
            Kind::Sinh => x.sinh(),
            Kind::NormalCdf => normal_cdf(x),
        }
    }

    fn invert(&self, y: f64) -> Result<f64> {
        match self.codomain.place(y) {
            Placement::Inside => self.closed_inverse(y),
            Placement::Boundary => Err(Error::CodomainBoundary {
                value: y,
                codomain: self.codomain.to_string(),
            }),
            Placement::Outside => Err(Error::OutsideCodomain {
                value: y,
                codomain: self.codomain.to_string(),
            }),
        }
    }

    fn domain(&self) -> Interval {
        self.domain
    }

    fn codomain(&self) -> Interval {
        self.codomain
    }
}

impl fmt::Display for MeanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&MeanMap::name(self))
    }
}

/// `f⁻¹` viewed as a mean-generating map on `J`, with `f` as its inverse.
#[derive(Debug, Clone, Copy)]
pub struct Inverse<'a, M: ?Sized>(pub &'a M);

impl<M: MeanMap + ?Sized> MeanMap for Inverse<'_, M> {
    fn name(&self) -> String {
        format!("inverse of {}", self.0.name())
    }

    fn apply(&self, x: f64) -> f64 {
        self.0.invert(x).unwrap_or(f64::NAN)
    }

    fn invert(&self, y: f64) -> Result<f64> {
        self.0.check_domain(y)?;
        Ok(self.0.apply(y))
    }

    fn domain(&self) -> Interval {
        self.0.codomain()
    }

    fn codomain(&self) -> Interval {
        self.0.domain()
    }
}

/// Standard normal CDF, `Φ(x) = erfc(−x/√2)/2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Bisection for an increasing `g` on `[lo, hi]` with `g(lo) ≤ target ≤ g(hi)`.
///
/// Stops once the bracket is narrower than `xtol` or can no longer shrink.
pub fn bisect_increasing<G: Fn(f64) -> f64>(
    g: G,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
) -> f64 {
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn quantile_by_bisection(y: f64) -> Result<f64> {
    let (mut lo, mut hi) = (-NORMAL_BRACKET, NORMAL_BRACKET);
    let mut expansions = 0;
    while normal_cdf(lo) > y || normal_cdf(hi) < y {
        expansions += 1;
        if expansions > 16 {
            return Err(Error::NoBracket { target: y });
        }
        if normal_cdf(lo) > y {
            lo *= 2.0;
        }
        if normal_cdf(hi) < y {
            hi *= 2.0;
        }
    }
    let x = bisect_increasing(normal_cdf, y, lo, hi, BISECTION_XTOL);
    // one Newton step removes the leftover bracket width where the density allows
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let polished = x - (normal_cdf(x) - y) / density;
    Ok(
        if polished.is_finite() && (normal_cdf(polished) - y).abs() < (normal_cdf(x) - y).abs() {
            polished
        } else {
            x
        },
    )
}
