//! One function per command: resolve the scenario, call the core, fill a report.

use fmean_core::function::Convexity;
use fmean_core::means::{f_mean_points, weighted_distribution_f_mean, weighted_f_mean};
use fmean_core::pricing::{
    certainty_equivalent, conditional_certainty_equivalent, exit_time_analysis, markov_ce_schedule,
    pratt_premium, prefer, preference_consistency_check, u_martingale_check, wealth_adjusted_ce,
    Consistency,
};
use fmean_core::prob::{cond_expectation, f_cond_expectation, f_expectation, total_variance_check};
use fmean_core::stats::{
    clt_check, conditional_lln_diagnostic, empirical_f_mean, f_unbiasedness_check, lln_diagnostic,
    sample,
};
use fmean_core::{
    FiniteProbSpace, MeanFunction, PointSet, Preference, SamplerSpec, WeightedDiscreteDistribution,
};

use crate::config::{require, Command, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::report::{Cell, Report, Table};

/// Default residual tolerance for the identity checks.
pub const DEFAULT_TOL: f64 = 1e-10;

pub fn execute(command: Command, cfg: &ScenarioConfig) -> Result<Report> {
    let f = cfg.function()?;
    let mut report = Report::new(command, cfg.mean_function.clone());
    log::info!("running {} with {f}", command.as_str());
    match command {
        Command::Mean => mean(cfg, &f, &mut report)?,
        Command::Wmean => wmean(cfg, &f, &mut report)?,
        Command::CondMean => cond_mean(cfg, &f, &mut report)?,
        Command::VarDecomp => var_decomp(cfg, &f, &mut report)?,
        Command::Prefer => preferences(cfg, &f, &mut report)?,
        Command::Ce => ce(cfg, &f, &mut report)?,
        Command::CeSchedule => ce_schedule(cfg, &f, &mut report)?,
        Command::MartingaleCheck => martingale(cfg, &f, &mut report)?,
        Command::ExitTime => exit_time(cfg, &f, &mut report)?,
        Command::Estimate => estimate(cfg, &f, &mut report)?,
        Command::Lln => lln(cfg, &f, &mut report)?,
        Command::Clt => clt(cfg, &f, &mut report)?,
    }
    Ok(report)
}

fn tol(cfg: &ScenarioConfig) -> f64 {
    cfg.options.tol.unwrap_or(DEFAULT_TOL)
}

fn per_outcome(name: &str, space: &FiniteProbSpace, columns: &[(&str, &[f64])]) -> Table {
    let mut header = vec!["outcome", "prob"];
    header.extend(columns.iter().map(|(c, _)| *c));
    let mut t = Table::new(name, &header);
    for w in 0..space.n_outcomes() {
        let mut row: Vec<Cell> = vec![w.into(), space.prob(w).into()];
        row.extend(columns.iter().map(|(_, v)| Cell::from(v[w])));
        t.push(row);
    }
    t
}

fn mean(cfg: &ScenarioConfig, f: &MeanFunction, r: &mut Report) -> Result<()> {
    let points = require(&cfg.options.points, "options.points")?;
    let set = PointSet::new(points.iter().map(|p| p.coords()).collect())?;
    let m = f_mean_points(f, &set)?;
    if let [x] = m.as_slice() {
        r.value("mean", *x);
    } else {
        let mut t = Table::new("mean", &["coordinate", "mean"]);
        for (i, x) in m.iter().enumerate() {
            t.push(vec![i.into(), (*x).into()]);
        }
        r.tables.push(t);
    }
    r.value("points", set.len());
    Ok(())
}

fn wmean(cfg: &ScenarioConfig, f: &MeanFunction, r: &mut Report) -> Result<()> {
    let m = match &cfg.options.values {
        Some(values) => {
            let weights = require(&cfg.options.weights, "options.weights")?;
            weighted_f_mean(f, values, &weights)?
        }
        None => {
            // distribution form: atoms from X under the space, optional weights
            let space = cfg.space()?;
            let x = cfg.variable(cfg.x_name())?;
            let atoms = x
                .values()
                .iter()
                .copied()
                .zip(space.probs().iter().copied())
                .collect();
            let dist = WeightedDiscreteDistribution::new(atoms, cfg.options.weights.clone())?;
            weighted_distribution_f_mean(f, &dist)?
        }
    };
    r.value("weighted_mean", m);
    Ok(())
}

fn cond_mean(cfg: &ScenarioConfig, f: &MeanFunction, r: &mut Report) -> Result<()> {
    let space = cfg.space()?;
    let x = cfg.variable(cfg.x_name())?;
    let g = cfg.partition(
        &require(&cfg.options.partition, "options.partition")?,
        space.n_outcomes(),
    )?;
    let fm = f_cond_expectation(f, &space, &x, &g)?;
    let classical = cond_expectation(&space, &x, &g)?;
    r.value("f_expectation", f_expectation(f, &space, &x)?);
    r.tables.push(per_outcome(
        "conditional",
        &space,
        &[
            ("x", x.values()),
            ("f_cond", fm.values()),
            ("cond", classical.values()),
        ],
    ));
    Ok(())
}

fn var_decomp(cfg: &ScenarioConfig, f: &MeanFunction, r: &mut Report) -> Result<()> {
    let space = cfg.space()?;
    let x = cfg.variable(cfg.x_name())?;
    let g = cfg.partition(
        &require(&cfg.options.partition, "options.partition")?,
        space.n_outcomes(),
    )?;
    let tv = total_variance_check(f, &space, &x, &g)?;
    r.passed = Some(tv.residual() <= tol(cfg));
    r.value("variance", tv.lhs)
        .value("within", tv.within)
        .value("between", tv.between)
        .value("residual", tv.residual());
    Ok(())
}

fn preference_label(p: Preference) -> &'static str {
    match p {
        Preference::XPreferred => "x-preferred",
        Preference::YPreferred => "y-preferred",
        Preference::Indifferent => "indifferent",
    }
}

fn preferences(cfg: &ScenarioConfig, f: &MeanFunction, r: &mut Report) -> Result<()> {
    let space = cfg.space()?;
    let n = space.n_outcomes();
    let x = cfg.variable(cfg.x_name())?;
    let y = cfg.variable(cfg.y_name())?;
    let g = cfg.partition(&require(&cfg.options.partition, "options.partition")?, n)?;
    let prefs = prefer(f, &space, &x, &y, &g)?;
    let cx = f_cond_expectation(f, &space, &x, &g)?;
    let cy = f_cond_expectation(f, &space, &y, &g)?;
    let mut t = Table::new("preference", &["outcome", "ce_x", "ce_y", "preference"]);
    for (w, p) in prefs.iter().enumerate() {
        t.push(vec![
            w.into(),
            cx.value(w).into(),
            cy.value(w).into(),
            preference_label(*p).into(),
        ]);
    }
    r.tables.push(t);
    if let Some(coarse) = &cfg.options.coarse {
        let g1 = cfg.partition(coarse, n)?;
        let outcome = preference_consistency_check(f, &space, &x, &y, &g1, &g)?;
        let (label, outcomes) = match outcome {
            Consistency::Consistent => ("consistent", vec![]),
            Consistency::Inconsistent { outcomes } => ("inconsistent", outcomes),
            Consistency::HypothesisNotMet { outcomes } => ("hypothesis-not-met", outcomes),
        };
        r.passed = Some(label != "inconsistent");
        r.value("consistency", label);
        if !outcomes.is_empty() {
            let list: Vec<String> = outcomes.iter().map(usize::to_string).collect();
            r.value("consistency_outcomes", list.join(" "));
        }
    }
    Ok(())
}

fn ce(cfg: &ScenarioConfig, f: &MeanFunction, r: &mut Report) -> Result<()> {
    let space = cfg.space()?;
    let n = space.n_outcomes();
    let x = cfg.variable(cfg.x_name())?;
    r.value("certainty_equivalent", certainty_equivalent(f, &space, &x)?);
    if f.convexity() == Convexity::Concave {
        let g = fmean_core::Partition::trivial(n);
        r.value("risk_premium", pratt_premium(f, &space, &x, &g)?.value(0));
    }
    let Some(name) = &cfg.options.partition else {
        return Ok(());
    };
    let g = cfg.partition(name, n)?;
    let c = conditional_certainty_equivalent(f, &space, &x, &g)?;
    let mut columns: Vec<(&str, Vec<f64>)> =
        vec![("x", x.values().to_vec()), ("ce", c.into_values())];
    if f.convexity() == Convexity::Concave {
        columns.push(("premium", pratt_premium(f, &space, &x, &g)?.into_values()));
    }
    if let (Some(w_n), Some(w_t)) = (&cfg.options.w_n, &cfg.options.w_t) {
        let wn = cfg.variable(w_n)?;
        let wt = cfg.variable(w_t)?;
        columns.push((
            "wealth_ce",
            wealth_adjusted_ce(f, &space, &wn, &wt, &x, &g)?.into_values(),
        ));
    }
    let borrowed: Vec<(&str, &[f64])> = columns.iter().map(|(n, v)| (*n, v.as_slice())).collect();
    r.tables.push(per_outcome("conditional", &space, &borrowed));
    Ok(())
}

fn ce_schedule(cfg: &ScenarioConfig, f: &MeanFunction, r: &mut Report) -> Result<()> {
    let chain = cfg.chain()?;
    let horizon = require(&cfg.options.horizon, "options.N")?;
    let s = markov_ce_schedule(f, &chain, horizon)?;
    let states: Vec<String> = (0..chain.n_states())
        .map(|i| format!("state_{i}"))
        .collect();
    let mut header = vec!["k"];
    header.extend(states.iter().map(String::as_str));
    let mut t = Table::new("schedule", &header);
    for (k, row) in s.values.iter().enumerate() {
        let mut cells: Vec<Cell> = vec![k.into()];
        cells.extend(row.iter().map(|&c| Cell::from(c)));
        t.push(cells);
    }
    r.value("N", horizon)
        .value("initial_value", s.at(0, chain.initial_state()));
    r.tables.push(t);
    Ok(())
}

fn martingale(cfg: &ScenarioConfig, f: &MeanFunction, r: &mut Report) -> Result<()> {
    let space = cfg.space()?;
    let x = cfg.variable(cfg.x_name())?;
    let filtration = cfg.filtration(space.n_outcomes())?;
    let report = u_martingale_check(f, &space, &filtration, &x, tol(cfg))?;
    r.passed = Some(report.passed());
    r.value("max_residual", report.max_residual())
        .value("initial_residual", report.initial_residual)
        .value("certainty_equivalent", report.prices[0].value(0));
    let mut header = vec!["outcome".to_string()];
    header.extend((0..report.prices.len()).map(|k| format!("price_{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new("prices", &header);
    for w in 0..space.n_outcomes() {
        let mut row: Vec<Cell> = vec![w.into()];
        row.extend(report.prices.iter().map(|p| Cell::from(p.value(w))));
        t.push(row);
    }
    r.tables.push(t);
    Ok(())
}

fn exit_time(cfg: &ScenarioConfig, f: &MeanFunction, r: &mut Report) -> Result<()> {
    let chain = cfg.chain()?;
    let o = &cfg.options;
    let horizon = require(&o.horizon, "options.N")?;
    let level = require(&o.level, "options.L")?;
    let seed = require(&o.seed, "options.seed")?;
    let n_paths = o.n_paths.unwrap_or(100_000);
    let window = o.window.unwrap_or(horizon);
    let e = exit_time_analysis(f, &chain, horizon, level, window, n_paths, seed)?;
    r.seed = Some(seed);
    r.passed = Some(e.agrees());
    r.value("level", level)
        .value("window", window)
        .value("n_paths", n_paths)
        .value("exact_prob", e.exact_prob)
        .value("mc_prob", e.mc_prob)
        .value("ci_halfwidth", e.ci_halfwidth);
    Ok(())
}

fn sampler(cfg: &ScenarioConfig) -> Result<SamplerSpec> {
    let space = cfg.space()?;
    let x = cfg.variable(cfg.x_name())?;
    let seed = require(&cfg.options.seed, "options.seed")?;
    let n = require(&cfg.options.n, "options.n")?;
    Ok(SamplerSpec::new(space, x, seed, n)?)
}

fn estimate(cfg: &ScenarioConfig, f: &MeanFunction, r: &mut Report) -> Result<()> {
    let spec = sampler(cfg)?;
    let draws = sample(&spec);
    let m = empirical_f_mean(f, &draws)?;
    let target = f_expectation(f, spec.space(), spec.variable())?;
    r.seed = Some(spec.seed());
    r.value("n", spec.n())
        .value("estimate", m)
        .value("f_expectation", target)
        .value("error", (m - target).abs());
    if let Some(n) = cfg.options.unbiased_n {
        let u = f_unbiasedness_check(f, spec.space(), spec.variable(), n)?;
        r.passed = Some(u.residual() <= tol(cfg));
        r.value("unbiased_n", n)
            .value("unbiased_lhs", u.lhs)
            .value("unbiased_residual", u.residual());
    }
    Ok(())
}

fn lln(cfg: &ScenarioConfig, f: &MeanFunction, r: &mut Report) -> Result<()> {
    let spec = sampler(cfg)?;
    let checkpoints = cfg.options.checkpoints.clone().unwrap_or_default();
    let report = match (&cfg.options.partition, cfg.options.block) {
        (Some(name), Some(block)) => {
            let g = cfg.partition(name, spec.space().n_outcomes())?;
            conditional_lln_diagnostic(f, &spec, &g, block, &checkpoints)?
        }
        (None, None) => lln_diagnostic(f, &spec, &checkpoints)?,
        (None, Some(_)) => return Err(CliError::Missing("options.partition")),
        (Some(_), None) => return Err(CliError::Missing("options.block")),
    };
    r.seed = Some(spec.seed());
    r.passed = Some(report.passed());
    r.value("f_expectation", report.target)
        .value("sigma_f", report.sigma_f)
        .value("derivative", report.derivative)
        .value("bound", report.bound)
        .value("final_error", report.final_error());
    let mut t = Table::new("path", &["n", "estimate", "error"]);
    for row in &report.rows {
        t.push(vec![row.n.into(), row.estimate.into(), row.error.into()]);
    }
    r.tables.push(t);
    Ok(())
}

fn clt(cfg: &ScenarioConfig, f: &MeanFunction, r: &mut Report) -> Result<()> {
    let space = cfg.space()?;
    let x = cfg.variable(cfg.x_name())?;
    let seed = require(&cfg.options.seed, "options.seed")?;
    let spec = SamplerSpec::new(space, x, seed, 1)?;
    let reps = cfg.options.n_replicates.unwrap_or(10_000);
    let per = cfg.options.n_per_replicate.unwrap_or(1000);
    let c = clt_check(f, &spec, reps, per)?;
    r.seed = Some(seed);
    r.passed = Some(c.passed());
    r.value("n_replicates", reps)
        .value("n_per_replicate", per)
        .value("mu_f", c.mu_f)
        .value("center", c.center)
        .value("sigma_f", c.sigma_f)
        .value("ks_statistic", c.ks_statistic)
        .value("critical_value", c.critical_value);
    let mut t = Table::new("quantiles", &["level", "empirical", "normal"]);
    for q in &c.quantiles {
        t.push(vec![q.level.into(), q.empirical.into(), q.normal.into()]);
    }
    r.tables.push(t);
    Ok(())
}
