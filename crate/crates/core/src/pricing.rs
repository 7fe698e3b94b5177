//! Pricing by conditional certainty equivalents.
//!
//! An investor with utility `u` values a terminal payoff `X_T` at
//! `C(T) = u⁻¹(E[u(X_T)])` and, once the information `G_k` is available, at
//! `C(T|G_k) = E_u[X_T|G_k]`. The sequence `π_k = C(T|G_k)` is a u-martingale:
//! `E_u[π_{k+1}|G_k] = π_k`. For Markov cash flows the conditional value is a
//! function of the current state, `C_k(s) = u⁻¹((P^{N−k} u(v))(s))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{Convexity, MeanFunction, MeanMap};
use crate::means::PROBABILITY_ATOL;
use crate::prob::{
    cond_expectation, f_cond_expectation, f_expectation, refine_check, FiniteProbSpace, Partition,
    RandomVariable,
};
use crate::rng::{Categorical, PhiloxStream};

/// Relative gap below which two expected utilities count as equal.
pub const PREFERENCE_RTOL: f64 = 1e-12;

/// Largest path space [`unroll`] will build.
pub const MAX_UNROLLED_PATHS: usize = 4096;

/// Increasing information `G_1 ⊆ … ⊆ G_m` over one space.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    partitions: Vec<Partition>,
}

impl Filtration {
    pub fn new(partitions: Vec<Partition>) -> Result<Self> {
        let first = partitions.first().ok_or(Error::Empty("filtration"))?;
        let n = first.n_outcomes();
        for (k, pair) in partitions.windows(2).enumerate() {
            if pair[1].n_outcomes() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: pair[1].n_outcomes(),
                });
            }
            if !refine_check(&pair[0], &pair[1])? {
                return Err(Error::NotRefinement { block: k + 1 });
            }
        }
        Ok(Self { partitions })
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn n_outcomes(&self) -> usize {
        self.partitions[0].n_outcomes()
    }
}

/// `X_1, …, X_m` with `X_k` measurable with respect to `G_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProcess {
    variables: Vec<RandomVariable>,
}

impl AdaptedProcess {
    pub fn new(filtration: &Filtration, variables: Vec<RandomVariable>) -> Result<Self> {
        if variables.len() != filtration.len() {
            return Err(Error::LengthMismatch {
                expected: filtration.len(),
                found: variables.len(),
            });
        }
        for (k, (x, g)) in variables.iter().zip(filtration.partitions()).enumerate() {
            if !x.is_measurable(g) {
                return Err(Error::NotMeasurable {
                    what: format!("X_{}", k + 1),
                });
            }
        }
        Ok(Self { variables })
    }

    pub fn variables(&self) -> &[RandomVariable] {
        &self.variables
    }

    pub fn terminal(&self) -> &RandomVariable {
        self.variables.last().expect("nonempty by construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preference {
    XPreferred,
    YPreferred,
    Indifferent,
}

/// Outcome-wise comparison of `E_u[X|G]` and `E_u[Y|G]`, done on the
/// expected utilities `E[u(X)|G]` and `E[u(Y)|G]`.
pub fn prefer<M: MeanMap + ?Sized>(
    u: &M,
    space: &FiniteProbSpace,
    x: &RandomVariable,
    y: &RandomVariable,
    g: &Partition,
) -> Result<Vec<Preference>> {
    let ux = expected_utility(u, space, x, g)?;
    let uy = expected_utility(u, space, y, g)?;
    Ok(ux
        .values()
        .iter()
        .zip(uy.values())
        .map(|(&a, &b)| {
            let scale = a.abs().max(b.abs()).max(1.0);
            if (a - b).abs() <= PREFERENCE_RTOL * scale {
                Preference::Indifferent
            } else if a > b {
                Preference::XPreferred
            } else {
                Preference::YPreferred
            }
        })
        .collect())
}

fn expected_utility<M: MeanMap + ?Sized>(
    u: &M,
    space: &FiniteProbSpace,
    x: &RandomVariable,
    g: &Partition,
) -> Result<RandomVariable> {
    x.values().iter().try_for_each(|&v| u.check_domain(v))?;
    let ux = RandomVariable::new(x.values().iter().map(|&v| u.apply(v)).collect())?;
    cond_expectation(space, &ux, g)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Consistency {
    /// `Y` is weakly preferred on every block of the coarse partition too.
    Consistent,
    /// Outcomes where the coarse comparison prefers `X` despite the hypothesis.
    Inconsistent { outcomes: Vec<usize> },
    /// Outcomes where `X` is preferred under the fine partition, so the
    /// hypothesis of the check does not hold.
    HypothesisNotMet { outcomes: Vec<usize> },
}

/// If `Y` is weakly preferred to `X` given the finer `g2`, it must also be
/// weakly preferred given the coarser `g1`.
pub fn preference_consistency_check<M: MeanMap + ?Sized>(
    u: &M,
    space: &FiniteProbSpace,
    x: &RandomVariable,
    y: &RandomVariable,
    g1: &Partition,
    g2: &Partition,
) -> Result<Consistency> {
    if !refine_check(g1, g2)? {
        return Err(Error::NotRefinement { block: 2 });
    }
    let x_wins = |prefs: Vec<Preference>| -> Vec<usize> {
        prefs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == Preference::XPreferred)
            .map(|(w, _)| w)
            .collect()
    };
    let fine = x_wins(prefer(u, space, x, y, g2)?);
    if !fine.is_empty() {
        return Ok(Consistency::HypothesisNotMet { outcomes: fine });
    }
    let coarse = x_wins(prefer(u, space, x, y, g1)?);
    Ok(if coarse.is_empty() {
        Consistency::Consistent
    } else {
        Consistency::Inconsistent { outcomes: coarse }
    })
}

/// `C(T) = u⁻¹(E[u(X_T)])`.
pub fn certainty_equivalent<M: MeanMap + ?Sized>(
    u: &M,
    space: &FiniteProbSpace,
    x_t: &RandomVariable,
) -> Result<f64> {
    f_expectation(u, space, x_t)
}

/// `C(T|G_k) = u⁻¹(E[u(X_T)|G_k])`.
pub fn conditional_certainty_equivalent<M: MeanMap + ?Sized>(
    u: &M,
    space: &FiniteProbSpace,
    x_t: &RandomVariable,
    g_k: &Partition,
) -> Result<RandomVariable> {
    f_cond_expectation(u, space, x_t, g_k)
}

/// `E[X_T|G_k] − E_u[X_T|G_k]`, nonnegative for concave `u`.
pub fn pratt_premium(
    u: &MeanFunction,
    space: &FiniteProbSpace,
    x_t: &RandomVariable,
    g_k: &Partition,
) -> Result<RandomVariable> {
    if u.convexity() != Convexity::Concave {
        return Err(Error::Convexity {
            name: u.to_string(),
            found: u.convexity().as_str(),
            required: "concave",
        });
    }
    let ce = conditional_certainty_equivalent(u, space, x_t, g_k)?;
    let mean = cond_expectation(space, x_t, g_k)?;
    RandomVariable::new(
        mean.values()
            .iter()
            .zip(ce.values())
            .map(|(m, c)| m - c)
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleReport {
    /// `π_0, …, π_m`; `π_0` is conditioned on the trivial σ-algebra.
    pub prices: Vec<RandomVariable>,
    /// `|π_0 − C(T)|`.
    pub initial_residual: f64,
    /// Per step `k`: max over outcomes of `|E_u[π_{k+1}|G_k] − π_k| / max(1, |π_k|)`.
    pub step_residuals: Vec<f64>,
    pub tol: f64,
}

impl MartingaleReport {
    pub fn max_residual(&self) -> f64 {
        self.step_residuals
            .iter()
            .copied()
            .fold(self.initial_residual, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_residual() <= self.tol
    }
}

/// Computes `π_k = C(T|G_k)` along the filtration (with `G_0 = {Ω}`
/// prepended) and measures how far it is from a u-martingale.
pub fn u_martingale_check<M: MeanMap + ?Sized>(
    u: &M,
    space: &FiniteProbSpace,
    filtration: &Filtration,
    x_t: &RandomVariable,
    tol: f64,
) -> Result<MartingaleReport> {
    let n = space.n_outcomes();
    if filtration.n_outcomes() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: filtration.n_outcomes(),
        });
    }
    let mut algebras = vec![Partition::trivial(n)];
    algebras.extend(filtration.partitions().iter().cloned());
    let prices = algebras
        .iter()
        .map(|g| conditional_certainty_equivalent(u, space, x_t, g))
        .collect::<Result<Vec<_>>>()?;

    let c_t = certainty_equivalent(u, space, x_t)?;
    let initial_residual = (prices[0].value(0) - c_t).abs() / c_t.abs().max(1.0);
    let step_residuals = (0..prices.len() - 1)
        .map(|k| {
            let projected = f_cond_expectation(u, space, &prices[k + 1], &algebras[k])?;
            Ok(projected
                .values()
                .iter()
                .zip(prices[k].values())
                .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MartingaleReport {
        prices,
        initial_residual,
        step_residuals,
        tol,
    })
}

/// `C(T|G_n) = E_u[W_T + X_T|G_n] − W_n`: the sure amount that, added to
/// current wealth, matches the expected utility of terminal wealth.
pub fn wealth_adjusted_ce<M: MeanMap + ?Sized>(
    u: &M,
    space: &FiniteProbSpace,
    w_n: &RandomVariable,
    w_t: &RandomVariable,
    x_t: &RandomVariable,
    g_n: &Partition,
) -> Result<RandomVariable> {
    if !w_n.is_measurable(g_n) {
        return Err(Error::NotMeasurable {
            what: "current wealth W_n".into(),
        });
    }
    let terminal = w_t.add(x_t)?;
    let ce = f_cond_expectation(u, space, &terminal, g_n)?;
    RandomVariable::new(
        ce.values()
            .iter()
            .zip(w_n.values())
            .map(|(c, w)| c - w)
            .collect(),
    )
}

/// A finite Markov chain whose state at time `N` pays `state_values[s]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovChainModel {
    transition: Vec<Vec<f64>>,
    state_values: Vec<f64>,
    initial_state: usize,
}

impl MarkovChainModel {
    pub fn new(
        transition: Vec<Vec<f64>>,
        state_values: Vec<f64>,
        initial_state: usize,
    ) -> Result<Self> {
        let n = transition.len();
        if n == 0 {
            return Err(Error::InvalidChain("no states".into()));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidChain(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
                return Err(Error::InvalidChain(format!("row {i} has entry {p}")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > PROBABILITY_ATOL {
                return Err(Error::InvalidChain(format!(
                    "row {i} sums to {total}, expected 1 within {PROBABILITY_ATOL:e}"
                )));
            }
        }
        if state_values.len() != n {
            return Err(Error::InvalidChain(format!(
                "{} state values for {n} states",
                state_values.len()
            )));
        }
        if initial_state >= n {
            return Err(Error::InvalidChain(format!(
                "initial state {initial_state} out of range"
            )));
        }
        Ok(Self {
            transition,
            state_values,
            initial_state,
        })
    }

    pub fn n_states(&self) -> usize {
        self.transition.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn state_values(&self) -> &[f64] {
        &self.state_values
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    /// `(P g)(s) = Σ_t P(s, t) g(t)`.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        self.transition
            .iter()
            .map(|row| row.iter().zip(g).map(|(p, v)| p * v).sum())
            .collect()
    }
}

/// `C_k(s)` for `k = 0..=N`; row `N` is the payoff itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeSchedule {
    pub horizon: usize,
    pub values: Vec<Vec<f64>>,
}

impl CeSchedule {
    pub fn at(&self, k: usize, state: usize) -> f64 {
        self.values[k][state]
    }

    /// Smallest and largest value over times `0..=last` and all states.
    pub fn extent(&self, last: usize) -> (f64, f64) {
        self.values[..=last]
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| {
                (lo.min(c), hi.max(c))
            })
    }
}

/// Conditional certainty equivalents of the payoff `v(X_N)` of a Markov chain:
/// `C_k = u⁻¹(P^{N−k} u(v))`, computed by backward iteration.
pub fn markov_ce_schedule<M: MeanMap + ?Sized>(
    u: &M,
    chain: &MarkovChainModel,
    horizon: usize,
) -> Result<CeSchedule> {
    if horizon == 0 {
        return Err(Error::InvalidArgument(
            "horizon N must be at least 1".into(),
        ));
    }
    let v = chain.state_values();
    v.iter().try_for_each(|&x| u.check_domain(x))?;
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });

    let mut values = vec![v.to_vec()];
    let mut utility: Vec<f64> = v.iter().map(|&x| u.apply(x)).collect();
    for _ in 0..horizon {
        utility = chain.apply(&utility);
        let ce = utility
            .iter()
            .map(|&g| Ok(u.invert(g)?.clamp(lo, hi)))
            .collect::<Result<Vec<f64>>>()?;
        values.push(ce);
    }
    values.reverse();
    Ok(CeSchedule { horizon, values })
}

/// `P(T_L ≤ horizon)` for `T_L = min{k : C_k(X_k) < L}`, by forward dynamic
/// programming over the mass not yet stopped.
pub fn exit_probability_exact(
    schedule: &CeSchedule,
    chain: &MarkovChainModel,
    level: f64,
    horizon: usize,
) -> f64 {
    let n = chain.n_states();
    let mut alive = vec![0.0; n];
    alive[chain.initial_state()] = 1.0;
    let mut stopped = 0.0;
    for k in 0..=horizon {
        if k > 0 {
            let mut next = vec![0.0; n];
            for (s, &mass) in alive.iter().enumerate() {
                if mass > 0.0 {
                    for (t, &p) in chain.transition()[s].iter().enumerate() {
                        next[t] += mass * p;
                    }
                }
            }
            alive = next;
        }
        for (s, mass) in alive.iter_mut().enumerate() {
            if schedule.at(k, s) < level {
                stopped += *mass;
                *mass = 0.0;
            }
        }
    }
    stopped
}

/// Number of simulated paths (out of `n_paths`) with `T_L ≤ horizon`.
///
/// Path `i` draws from Philox stream `(seed, i)`, so the count does not
/// depend on how the paths are spread over threads.
pub fn exit_hits_monte_carlo(
    schedule: &CeSchedule,
    chain: &MarkovChainModel,
    level: f64,
    horizon: usize,
    n_paths: u64,
    seed: u64,
) -> u64 {
    let rows: Vec<Categorical> = chain
        .transition()
        .iter()
        .map(|r| Categorical::new(r))
        .collect();
    (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = PhiloxStream::new(seed, path);
            let mut state = chain.initial_state();
            for k in 0..=horizon {
                if k > 0 {
                    state = rows[state].draw(&mut rng);
                }
                if schedule.at(k, state) < level {
                    return 1;
                }
            }
            0
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitTimeReport {
    pub level: f64,
    pub horizon: usize,
    pub n_paths: u64,
    pub seed: u64,
    pub exact_prob: f64,
    pub mc_prob: f64,
    /// 95% normal-approximation half-width of the Monte Carlo estimate.
    pub ci_halfwidth: f64,
}

impl ExitTimeReport {
    /// `|exact − mc| ≤ max(3 · ci_halfwidth, 1e−3)`.
    pub fn agrees(&self) -> bool {
        (self.exact_prob - self.mc_prob).abs() <= (3.0 * self.ci_halfwidth).max(1e-3)
    }
}

/// Exact and simulated probability that the conditional certainty equivalent
/// of a Markov cash flow drops below `level` by time `horizon ≤ N`.
pub fn exit_time_analysis<M: MeanMap + ?Sized>(
    u: &M,
    chain: &MarkovChainModel,
    n: usize,
    level: f64,
    horizon: usize,
    n_paths: u64,
    seed: u64,
) -> Result<ExitTimeReport> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be positive".into()));
    }
    if horizon > n {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} exceeds N = {n}"
        )));
    }
    if !level.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "level {level} is not finite"
        )));
    }
    let schedule = markov_ce_schedule(u, chain, n)?;
    let report = |p: f64, mc: f64, half: f64| ExitTimeReport {
        level,
        horizon,
        n_paths,
        seed,
        exact_prob: p,
        mc_prob: mc,
        ci_halfwidth: half,
    };
    let (lo, hi) = schedule.extent(horizon);
    if level <= lo {
        return Ok(report(0.0, 0.0, 0.0));
    }
    if level > hi {
        return Ok(report(1.0, 1.0, 0.0));
    }
    let exact = exit_probability_exact(&schedule, chain, level, horizon);
    let hits = exit_hits_monte_carlo(&schedule, chain, level, horizon, n_paths, seed);
    let p = hits as f64 / n_paths as f64;
    let half = 1.96 * (p * (1.0 - p) / n_paths as f64).sqrt();
    Ok(report(exact, p, half))
}

/// The chain unrolled into a finite probability space of paths.
#[derive(Debug, Clone)]
pub struct UnrolledChain {
    pub space: FiniteProbSpace,
    /// `paths[ω] = (s_0, …, s_N)`.
    pub paths: Vec<Vec<usize>>,
    /// `G_1, …, G_N`, where `G_k` is generated by `(s_0, …, s_k)`.
    pub filtration: Filtration,
    /// `v(s_N)`.
    pub payoff: RandomVariable,
}

/// Enumerates every path of length `depth` from the initial state.
pub fn unroll(chain: &MarkovChainModel, depth: usize) -> Result<UnrolledChain> {
    let n = chain.n_states();
    let count = (n as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    if count > MAX_UNROLLED_PATHS as u128 {
        return Err(Error::EnumerationTooLarge {
            size: count,
            limit: MAX_UNROLLED_PATHS as u128,
        });
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let mut paths = vec![vec![chain.initial_state()]];
    let mut probs = vec![1.0];
    for _ in 0..depth {
        let mut next_paths = Vec::with_capacity(paths.len() * n);
        let mut next_probs = Vec::with_capacity(paths.len() * n);
        for (path, p) in paths.iter().zip(&probs) {
            let last = *path.last().unwrap();
            for t in 0..n {
                let mut extended = path.clone();
                extended.push(t);
                next_paths.push(extended);
                next_probs.push(p * chain.transition()[last][t]);
            }
        }
        paths = next_paths;
        probs = next_probs;
    }
    let total: f64 = probs.iter().sum();
    let space = FiniteProbSpace::new(probs.iter().map(|p| p / total).collect())?;
    let filtration = Filtration::new(
        (1..=depth)
            .map(|k| {
                let prefixes: Vec<&[usize]> = paths.iter().map(|p| &p[..=k]).collect();
                Partition::from_labels(&prefixes)
            })
            .collect(),
    )?;
    let payoff = RandomVariable::new(
        paths
            .iter()
            .map(|p| chain.state_values()[p[depth]])
            .collect(),
    )?;
    Ok(UnrolledChain {
        space,
        paths,
        filtration,
        payoff,
    })
}
