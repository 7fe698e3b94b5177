//! Sampling and the empirical f-mean estimator: f-unbiasedness, the law of
//! large numbers and the central limit theorem for `m̂_N = f⁻¹(avg f(X_k))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{normal_cdf, MeanFunction, MeanMap};
use crate::means::weighted_f_mean;
use crate::prob::{f_expectation, f_variance, FiniteProbSpace, Partition, RandomVariable};
use crate::rng::{Categorical, PhiloxStream};

/// Largest number of N-tuples [`f_unbiasedness_check`] will enumerate.
pub const MAX_ENUMERATION: u128 = 1_000_000;

/// Standard normal quantiles reported alongside the empirical ones.
pub const REPORT_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

/// I.i.d. draws of `X` under the space's probabilities.
#[derive(Debug, Clone)]
pub struct SamplerSpec {
    space: FiniteProbSpace,
    variable: RandomVariable,
    seed: u64,
    n: usize,
}

impl SamplerSpec {
    pub fn new(
        space: FiniteProbSpace,
        variable: RandomVariable,
        seed: u64,
        n: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "sample size must be at least 1".into(),
            ));
        }
        if variable.len() != space.n_outcomes() {
            return Err(Error::LengthMismatch {
                expected: space.n_outcomes(),
                found: variable.len(),
            });
        }
        Ok(Self {
            space,
            variable,
            seed,
            n,
        })
    }

    pub fn space(&self) -> &FiniteProbSpace {
        &self.space
    }

    pub fn variable(&self) -> &RandomVariable {
        &self.variable
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn sampler(&self) -> Categorical {
        Categorical::new(self.space.probs())
    }
}

/// `n` draws from stream 0 of the spec's seed.
pub fn sample(spec: &SamplerSpec) -> Vec<f64> {
    let picker = spec.sampler();
    let mut rng = PhiloxStream::new(spec.seed, 0);
    (0..spec.n)
        .map(|_| spec.variable.value(picker.draw(&mut rng)))
        .collect()
}

/// `m̂_N = f⁻¹((1/N) Σ f(x_k))`.
pub fn empirical_f_mean<M: MeanMap + ?Sized>(f: &M, sample: &[f64]) -> Result<f64> {
    weighted_f_mean(f, sample, &vec![1.0; sample.len()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unbiasedness {
    pub n: usize,
    /// `E_f[m̂_N]` by exact enumeration of all N-tuples.
    pub lhs: f64,
    /// `E_f[X]`.
    pub rhs: f64,
}

impl Unbiasedness {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.rhs.abs().max(1.0)
    }
}

/// Checks `E_f[m̂_N(X)] = E_f[X]` by summing over all `|Ω|^N` samples.
pub fn f_unbiasedness_check<M: MeanMap + ?Sized>(
    f: &M,
    space: &FiniteProbSpace,
    x: &RandomVariable,
    n: usize,
) -> Result<Unbiasedness> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let rhs = f_expectation(f, space, x)?;
    let k = space.n_outcomes();
    let size = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > MAX_ENUMERATION {
        return Err(Error::EnumerationTooLarge {
            size,
            limit: MAX_ENUMERATION,
        });
    }
    let fx: Vec<f64> = x.values().iter().map(|&v| f.apply(v)).collect();
    let probs = space.probs();
    let mut tuple = vec![0usize; n];
    let mut expected = 0.0;
    for _ in 0..size {
        let weight: f64 = tuple.iter().map(|&w| probs[w]).product();
        if weight > 0.0 {
            let avg = tuple.iter().map(|&w| fx[w]).sum::<f64>() / n as f64;
            expected += weight * avg;
        }
        for digit in tuple.iter_mut() {
            *digit += 1;
            if *digit < k {
                break;
            }
            *digit = 0;
        }
    }
    let (lo, hi) = x
        .values()
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| {
            (lo.min(v), hi.max(v))
        });
    let lhs = f.invert(expected)?.clamp(lo, hi);
    Ok(Unbiasedness { n, lhs, rhs })
}

/// Central-difference estimate of `f′(x)`, shrinking the step to stay inside
/// the domain.
pub fn derivative<M: MeanMap + ?Sized>(f: &M, x: f64) -> f64 {
    let mut h = 1e-6 * x.abs().max(1.0);
    let domain = f.domain();
    while !(domain.contains(x - h) && domain.contains(x + h)) {
        h *= 0.5;
    }
    (f.apply(x + h) - f.apply(x - h)) / (2.0 * h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlnRow {
    pub n: usize,
    pub estimate: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlnReport {
    pub target: f64,
    pub sigma_f: f64,
    pub derivative: f64,
    /// `4 σ_f / (|f′(E_f[X])| √N_max)`.
    pub bound: f64,
    pub rows: Vec<LlnRow>,
}

impl LlnReport {
    pub fn final_error(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.error)
    }

    pub fn passed(&self) -> bool {
        self.final_error() <= self.bound
    }
}

/// Running `m̂_N` along one sample path, reported at each checkpoint and at
/// the spec's sample size.
pub fn lln_diagnostic<M: MeanMap + ?Sized>(
    f: &M,
    spec: &SamplerSpec,
    checkpoints: &[usize],
) -> Result<LlnReport> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "checkpoints must be strictly increasing".into(),
        ));
    }
    if let Some(&c) = checkpoints.iter().find(|&&c| c == 0 || c > spec.n) {
        return Err(Error::InvalidArgument(format!(
            "checkpoint {c} outside 1..={}",
            spec.n
        )));
    }
    let target = f_expectation(f, &spec.space, &spec.variable)?;
    let sigma_f = f_variance(f, &spec.space, &spec.variable)?.sqrt();
    let slope = derivative(f, target);
    let bound = 4.0 * sigma_f / (slope.abs() * (spec.n as f64).sqrt());

    let mut marks: Vec<usize> = checkpoints.to_vec();
    if marks.last() != Some(&spec.n) {
        marks.push(spec.n);
    }
    let picker = spec.sampler();
    let mut rng = PhiloxStream::new(spec.seed, 0);
    let mut sum = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut rows = Vec::with_capacity(marks.len());
    let mut next = marks.iter().peekable();
    for k in 1..=spec.n {
        let v = spec.variable.value(picker.draw(&mut rng));
        lo = lo.min(v);
        hi = hi.max(v);
        sum += f.apply(v);
        if next.peek() == Some(&&k) {
            next.next();
            let estimate = f.invert(sum / k as f64)?.clamp(lo, hi);
            rows.push(LlnRow {
                n: k,
                estimate,
                error: (estimate - target).abs(),
            });
        }
    }
    Ok(LlnReport {
        target,
        sigma_f,
        derivative: slope,
        bound,
        rows,
    })
}

/// [`lln_diagnostic`] for `X` conditioned on one block of `g`.
pub fn conditional_lln_diagnostic<M: MeanMap + ?Sized>(
    f: &M,
    spec: &SamplerSpec,
    g: &Partition,
    block: usize,
    checkpoints: &[usize],
) -> Result<LlnReport> {
    if g.n_outcomes() != spec.space.n_outcomes() {
        return Err(Error::LengthMismatch {
            expected: spec.space.n_outcomes(),
            found: g.n_outcomes(),
        });
    }
    let outcomes = g
        .blocks()
        .get(block)
        .ok_or_else(|| Error::InvalidArgument(format!("no block {block}")))?;
    let space = spec.space.restrict(outcomes)?;
    let variable = RandomVariable::new(outcomes.iter().map(|&w| spec.variable.value(w)).collect())?;
    let sub = SamplerSpec::new(space, variable, spec.seed, spec.n)?;
    lln_diagnostic(f, &sub, checkpoints)
}

/// One-sample Kolmogorov–Smirnov distance between the empirical distribution
/// of `samples` and the standard normal.
pub fn ks_statistic_normal(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let cdf = normal_cdf(z);
            ((i + 1) as f64 / n - cdf).max(cdf - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub level: f64,
    pub empirical: f64,
    pub normal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub n_replicates: usize,
    pub n_per_replicate: usize,
    /// `E_f[X]`.
    pub mu_f: f64,
    /// Centering of the sums, `E[f(X)] = f(μ_f)`.
    pub center: f64,
    pub sigma_f: f64,
    pub ks_statistic: f64,
    /// `1.63 / √n_replicates`.
    pub critical_value: f64,
    pub quantiles: Vec<QuantileRow>,
}

impl CltReport {
    pub fn passed(&self) -> bool {
        self.ks_statistic <= self.critical_value
    }
}

/// Standardized sums `Z = Σ (f(X_k) − E[f(X)]) / (σ_f √n)` over independent
/// replicates, compared with the standard normal. Replicate `r` draws from
/// stream `r` of the seed.
pub fn clt_check<M: MeanMap + ?Sized>(
    f: &M,
    spec: &SamplerSpec,
    n_replicates: usize,
    n_per_replicate: usize,
) -> Result<CltReport> {
    if n_replicates == 0 || n_per_replicate == 0 {
        return Err(Error::InvalidArgument(
            "replicate counts must be positive".into(),
        ));
    }
    let mu_f = f_expectation(f, &spec.space, &spec.variable)?;
    let fx: Vec<f64> = spec.variable.values().iter().map(|&v| f.apply(v)).collect();
    let mut support = fx.iter().zip(spec.space.probs()).filter(|(_, &p)| p > 0.0);
    let first = *support.next().expect("valid space has positive mass").0;
    if support.all(|(&v, _)| v == first) {
        return Err(Error::DegenerateVariance);
    }
    let center = spec.space.expectation(&fx);
    let sigma_f = f_variance(f, &spec.space, &spec.variable)?.sqrt();
    let scale = sigma_f * (n_per_replicate as f64).sqrt();

    let picker = spec.sampler();
    let z: Vec<f64> = (0..n_replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = PhiloxStream::new(spec.seed, r);
            let s: f64 = (0..n_per_replicate)
                .map(|_| fx[picker.draw(&mut rng)] - center)
                .sum();
            s / scale
        })
        .collect();

    let ks_statistic = ks_statistic_normal(&z);
    let mut sorted = z;
    sorted.sort_by(f64::total_cmp);
    let standard = MeanFunction::normal_cdf();
    let quantiles = REPORT_LEVELS
        .iter()
        .map(|&level| {
            let idx = ((level * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
            Ok(QuantileRow {
                level,
                empirical: sorted[idx],
                normal: standard.invert(level)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CltReport {
        n_replicates,
        n_per_replicate,
        mu_f,
        center,
        sigma_f,
        ks_statistic,
        critical_value: 1.63 / (n_replicates as f64).sqrt(),
        quantiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(probs: &[f64], values: &[f64], seed: u64, n: usize) -> SamplerSpec {
        SamplerSpec::new(
            FiniteProbSpace::new(probs.to_vec()).unwrap(),
            RandomVariable::new(values.to_vec()).unwrap(),
            seed,
            n,
        )
        .unwrap()
    }

    #[test]
    fn sampling_examples() {
        let one = spec(&[1.0], &[3.5], 1, 100);
        assert!(sample(&one).iter().all(|&v| v == 3.5));
        let s = spec(&[0.1, 0.2, 0.3, 0.4], &[1.0, 2.0, 3.0, 4.0], 42, 100_000);
        let a = sample(&s);
        assert_eq!(a, sample(&s));
        for (i, &p) in s.space().probs().iter().enumerate() {
            let freq = a.iter().filter(|&&v| v == (i + 1) as f64).count() as f64 / a.len() as f64;
            let bound = 4.0 * (p * (1.0 - p) / a.len() as f64).sqrt();
            assert!((freq - p).abs() <= bound, "atom {i}: {freq} vs {p}");
        }
        // zero-probability atoms never appear
        let z = spec(&[0.5, 0.0, 0.5], &[1.0, 2.0, 3.0], 3, 10_000);
        assert!(sample(&z).iter().all(|&v| v != 2.0));
        assert!(SamplerSpec::new(
            FiniteProbSpace::uniform(2).unwrap(),
            RandomVariable::new(vec![1.0, 2.0]).unwrap(),
            0,
            0
        )
        .is_err());
    }

    #[test]
    fn empirical_mean_examples() {
        let log = MeanFunction::log();
        assert_eq!(empirical_f_mean(&log, &[7.0]).unwrap(), 7.0);
        assert_relative_eq!(
            empirical_f_mean(&log, &[1.0, 4.0, 16.0, 64.0]).unwrap(),
            4.0f64.powf(1.5),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            empirical_f_mean(&MeanFunction::identity(), &[1.0, 2.0, 6.0]).unwrap(),
            3.0,
            max_relative = 1e-15
        );
        assert!(empirical_f_mean(&log, &[]).is_err());
    }

    #[test]
    fn unbiasedness_examples() {
        let two = FiniteProbSpace::uniform(2).unwrap();
        let x = RandomVariable::new(vec![1.0, 4.0]).unwrap();
        let log = MeanFunction::log();
        let r = f_unbiasedness_check(&log, &two, &x, 3).unwrap();
        assert_relative_eq!(r.lhs, 2.0, max_relative = 1e-14);
        assert_relative_eq!(r.rhs, 2.0, max_relative = 1e-14);

        // Oracle for N = 2: average the four pairwise f-means by hand.
        let g = |a: f64, b: f64| (a * b).sqrt();
        let pairs = [g(1.0, 1.0), g(1.0, 4.0), g(4.0, 1.0), g(4.0, 4.0)];
        let lhs = (pairs.iter().map(|v| v.ln()).sum::<f64>() / 4.0).exp();
        assert_relative_eq!(
            f_unbiasedness_check(&log, &two, &x, 2).unwrap().lhs,
            lhs,
            max_relative = 1e-14
        );

        let id = MeanFunction::identity();
        let r = f_unbiasedness_check(&id, &two, &x, 1).unwrap();
        assert_eq!(r.lhs, r.rhs);

        let big = FiniteProbSpace::uniform(11).unwrap();
        let y = RandomVariable::new(vec![1.0; 11]).unwrap();
        assert!(matches!(
            f_unbiasedness_check(&id, &big, &y, 6),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn lln_examples() {
        let checkpoints = [10, 100, 1000, 10_000];
        let degenerate = spec(&[1.0], &[2.5], 9, 10_000);
        let r = lln_diagnostic(&MeanFunction::log(), &degenerate, &checkpoints).unwrap();
        assert!(r.rows.iter().all(|row| row.error == 0.0));
        assert!(r.passed());

        let coin = spec(&[0.5, 0.5], &[0.0, 1.0], 5, 100_000);
        let r = lln_diagnostic(&MeanFunction::identity(), &coin, &checkpoints).unwrap();
        assert_eq!(r.rows.len(), 5);
        assert!(r.passed(), "{r:?}");

        let pair = spec(&[0.5, 0.5], &[1.0, 4.0], 6, 1_000_000);
        let r = lln_diagnostic(&MeanFunction::log(), &pair, &[]).unwrap();
        assert_relative_eq!(r.target, 2.0, max_relative = 1e-14);
        assert_relative_eq!(r.derivative, 0.5, max_relative = 1e-8);
        assert!(r.passed(), "{r:?}");

        assert!(lln_diagnostic(&MeanFunction::log(), &pair, &[5, 5]).is_err());
        assert!(lln_diagnostic(&MeanFunction::log(), &pair, &[2_000_000]).is_err());
    }

    #[test]
    fn conditional_lln_uses_block() {
        let s = spec(&[0.25; 4], &[1.0, 4.0, 100.0, 400.0], 2, 100_000);
        let g = Partition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let r = conditional_lln_diagnostic(&MeanFunction::log(), &s, &g, 1, &[1000]).unwrap();
        assert_relative_eq!(r.target, 200.0, max_relative = 1e-13);
        assert!(r
            .rows
            .iter()
            .all(|row| (100.0..=400.0).contains(&row.estimate)));
        assert!(r.passed());
        assert!(conditional_lln_diagnostic(&MeanFunction::log(), &s, &g, 2, &[]).is_err());
    }

    // Oracle: sup of |F_n − Φ| evaluated on both sides of every jump, O(n²).
    fn ks_brute(samples: &[f64]) -> f64 {
        let n = samples.len() as f64;
        samples
            .iter()
            .map(|&z| {
                let below = samples.iter().filter(|&&s| s < z).count() as f64 / n;
                let upto = samples.iter().filter(|&&s| s <= z).count() as f64 / n;
                let c = normal_cdf(z);
                (c - below).abs().max((upto - c).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn ks_matches_brute_force() {
        let mut rng = PhiloxStream::new(8, 0);
        for n in [1, 2, 7, 50, 300] {
            let z: Vec<f64> = (0..n).map(|_| rng.range(-3.0, 3.0)).collect();
            assert_relative_eq!(ks_statistic_normal(&z), ks_brute(&z), max_relative = 1e-14);
        }
        assert_relative_eq!(ks_statistic_normal(&[0.0]), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn clt_examples() {
        let constant = spec(&[0.5, 0.5], &[2.0, 2.0], 1, 1);
        assert!(matches!(
            clt_check(&MeanFunction::identity(), &constant, 10, 10),
            Err(Error::DegenerateVariance)
        ));

        let positive = spec(&[0.3, 0.7], &[1.0, 5.0], 4, 1);
        let logs = spec(&[0.3, 0.7], &[0.0, 5.0f64.ln()], 4, 1);
        let a = clt_check(&MeanFunction::log(), &positive, 200, 50).unwrap();
        let b = clt_check(&MeanFunction::identity(), &logs, 200, 50).unwrap();
        assert_relative_eq!(a.ks_statistic, b.ks_statistic, max_relative = 1e-9);
        assert_relative_eq!(a.sigma_f, b.sigma_f, max_relative = 1e-14);
        assert_eq!(
            a,
            clt_check(&MeanFunction::log(), &positive, 200, 50).unwrap()
        );
    }

    // S_n for a ±1 coin lives on a lattice; the empirical CDF jumps by
    // P(S_n = 0) at zero while Φ is continuous, so the KS distance cannot fall
    // below half that jump no matter how many replicates are drawn.
    #[test]
    fn clt_lattice_coin_has_ks_floor() {
        let n = 1000;
        let ln_atom: f64 = (1..=n / 2)
            .map(|k| ((n / 2 + k) as f64 / k as f64).ln())
            .sum::<f64>()
            - n as f64 * 2.0f64.ln();
        let floor = 0.5 * ln_atom.exp();
        assert!((floor - 0.0126).abs() < 1e-4);

        let coin = spec(&[0.5, 0.5], &[-1.0, 1.0], 2024, 1);
        let r = clt_check(&MeanFunction::identity(), &coin, 10_000, n).unwrap();
        assert!(r.ks_statistic >= floor, "{} < {floor}", r.ks_statistic);
        assert!(r.ks_statistic <= floor + r.critical_value);
    }

    #[test]
    fn clt_smooth_distribution_passes() {
        let s = spec(
            &[0.1, 0.25, 0.3, 0.2, 0.15],
            &[0.5, 0.9, 1.4, 2.0, 2.7],
            2024,
            1,
        );
        for f in [
            MeanFunction::identity(),
            MeanFunction::log(),
            MeanFunction::exp(1.0).unwrap(),
        ] {
            let r = clt_check(&f, &s, 10_000, 1000).unwrap();
            assert!(
                r.passed(),
                "{f}: ks = {} > {}",
                r.ks_statistic,
                r.critical_value
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn estimator_internality(seed in any::<u64>()) {
            let mut rng = PhiloxStream::new(seed, 20);
            for f in fixtures::catalog() {
                let (lo, hi) = fixtures::value_range(&f);
                let n = 1 + rng.index(20);
                let xs: Vec<f64> = (0..n).map(|_| rng.range(lo, hi)).collect();
                let m = empirical_f_mean(&f, &xs).unwrap();
                let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(min <= m && m <= max);
            }
        }

        #[test]
        fn population_sample_matches_expectation(seed in any::<u64>()) {
            // Equal-probability atoms repeated in proportion.
            let mut rng = PhiloxStream::new(seed, 21);
            for f in fixtures::catalog() {
                let k = 1 + rng.index(5);
                let counts: Vec<usize> = (0..k).map(|_| 1 + rng.index(4)).collect();
                let total: usize = counts.iter().sum();
                let space = FiniteProbSpace::new(counts.iter().map(|&c| c as f64 / total as f64).collect()).unwrap();
                let x = fixtures::random_variable(&mut rng, &f, k);
                let population: Vec<f64> = counts.iter().zip(x.values()).flat_map(|(&c, &v)| std::iter::repeat_n(v, c)).collect();
                let a = empirical_f_mean(&f, &population).unwrap();
                let b = f_expectation(&f, &space, &x).unwrap();
                prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{f}: {a} vs {b}");
            }
        }

        #[test]
        fn unbiasedness_small_spaces(seed in any::<u64>()) {
            let mut rng = PhiloxStream::new(seed, 22);
            for f in fixtures::catalog() {
                let k = 2 + rng.index(2);
                let n = 1 + rng.index(6);
                let space = fixtures::random_space(&mut rng, k, false);
                let x = fixtures::random_variable(&mut rng, &f, k);
                let r = f_unbiasedness_check(&f, &space, &x, n).unwrap();
                prop_assert!(r.residual() <= 1e-10, "{f}: {r:?}");
            }
        }

        #[test]
        fn seed_determinism(seed in any::<u64>()) {
            let s = spec(&[0.2, 0.5, 0.3], &[1.0, 2.0, 7.0], seed, 500);
            let a = lln_diagnostic(&MeanFunction::log(), &s, &[10, 100]).unwrap();
            let b = lln_diagnostic(&MeanFunction::log(), &s, &[10, 100]).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
