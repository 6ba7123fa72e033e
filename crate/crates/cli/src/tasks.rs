//! Task runners. Each returns the files to write and the checks to report.

use std::fmt::Write;

use fed_core::operators::{log_trace_density_exp, DIMENSION_CAP};
use fed_core::oracle::{binary_rate, ising_pressure, ClassicalChain};
use fed_core::pressure::{
    extrapolate_limit, golden_thompson_gap, interaction_pressure, log_partition_z, p_tilde_sequence,
    pressure_sequence, s_n_observable, PressureSequence, ScalarFunction,
};
use fed_core::random;
use fed_core::states::{fcs_alpha, relative_entropy, StateModel};
use fed_core::variational::{
    finite_variational_identity, grid_spacing, legendre_round_trip_error, rate_function,
    variational_pressure, Ansatz,
};
use fed_core::{ChainOperator, Interval};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ModelSource, ObservableSource, Quantity, Task};

pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x > 0.0 {
        "inf".into()
    } else if x < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
}

/// One residual compared against its tolerance.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtMost, bound }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtLeast, bound }
    }

    pub fn pass(&self) -> bool {
        match self.relation {
            Relation::AtMost => self.value <= self.bound,
            Relation::AtLeast => self.value >= self.bound,
        }
    }

    pub fn line(&self) -> String {
        let op = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        };
        format!(
            "{} {} {} {op} {}",
            if self.pass() { "PASS" } else { "FAIL" },
            self.name,
            num(self.value),
            num(self.bound)
        )
    }
}

#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(Check::pass)
    }

    pub fn summary(&self, task: Task, cfg: &ExperimentConfig) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# task = {}", task.name());
        let _ = writeln!(out, "# model = {}", cfg.state.describe());
        let _ = writeln!(out, "# seed = {}", cfg.seed);
        for c in &self.checks {
            let _ = writeln!(out, "{}", c.line());
        }
        let failed = self.checks.iter().filter(|c| !c.pass()).count();
        let _ = writeln!(out, "# {} checks, {failed} failed", self.checks.len());
        out
    }
}

pub fn run(task: Task, cfg: &ExperimentConfig) -> fed_core::Result<Report> {
    match task {
        Task::Pressure => pressure(cfg),
        Task::Rate => rate(cfg),
        Task::Variational => variational(cfg),
        Task::Check => check(cfg),
        Task::Oracle => oracle(cfg),
    }
}

fn gibbs_interaction(cfg: &ExperimentConfig) -> fed_core::Result<&fed_core::interactions::Interaction> {
    match &cfg.model {
        ModelSource::Gibbs { interaction, .. } => Ok(interaction),
        _ => Err(fed_core::Error::InvalidArgument(
            "quantity = interaction needs a local_gibbs or buffered_gibbs model".into(),
        )),
    }
}

/// Volumes at which an observable of length `len` fits.
fn usable_ns(cfg: &ExperimentConfig) -> Vec<usize> {
    let len = cfg.observable.window().len();
    cfg.ns.iter().copied().filter(|&n| n >= len).collect()
}

/// Single-site density when the model is a product of one-site blocks.
fn product_block(cfg: &ExperimentConfig) -> Option<ChainOperator> {
    match &cfg.model {
        ModelSource::Tracial(_) | ModelSource::Product => cfg.state.local_density(1).ok(),
        _ => None,
    }
}

/// `log Tr(ρ e^{-A})` per site when the model is a product and `A` acts on one site.
fn product_oracle(cfg: &ExperimentConfig) -> fed_core::Result<Option<f64>> {
    if cfg.observable.window().len() != 1 || !matches!(cfg.function, ScalarFunction::Identity) {
        return Ok(None);
    }
    let Some(rho) = product_block(cfg) else {
        return Ok(None);
    };
    let a = cfg.observable.embed(rho.window())?;
    Ok(Some(log_trace_density_exp(&rho, &a)?))
}

fn sequence(cfg: &ExperimentConfig) -> fed_core::Result<PressureSequence> {
    match cfg.quantity {
        Quantity::Perturbed => pressure_sequence(&cfg.state, &cfg.observable, &cfg.function, &usable_ns(cfg)),
        Quantity::Tilde => p_tilde_sequence(&cfg.state, &cfg.observable, &usable_ns(cfg)),
        Quantity::Interaction => interaction_pressure(gibbs_interaction(cfg)?, &cfg.ns),
    }
}

fn pressure(cfg: &ExperimentConfig) -> fed_core::Result<Report> {
    let mut report = Report::default();
    let mut seq = sequence(cfg)?;
    let fit = if seq.len() >= 3 {
        let fit = extrapolate_limit(&mut seq)?;
        report.checks.push(Check::at_most("fit_residual", fit.residual, cfg.tolerances.fit));
        Some(fit)
    } else {
        None
    };
    if cfg.quantity == Quantity::Interaction {
        if let (ModelSource::Gibbs { ising: Some((j, h)), .. }, Some(fit)) = (&cfg.model, fit) {
            let exact = ising_pressure(*j, *h)?;
            report.checks.push(Check::at_most(
                "transfer_matrix_error",
                (fit.limit - exact).abs(),
                cfg.tolerances.oracle,
            ));
        }
    } else if cfg.quantity == Quantity::Perturbed {
        if let Some(exact) = product_oracle(cfg)? {
            let worst = seq.values().iter().map(|v| (v - exact).abs()).fold(0.0, f64::max);
            report.checks.push(Check::at_most("product_closed_form_error", worst, cfg.tolerances.identity));
        }
    }
    report.files.push(("pressure.csv".into(), seq.to_csv()));
    Ok(report)
}

fn binary_reference(cfg: &ExperimentConfig) -> bool {
    let z = match &cfg.observable_source {
        ObservableSource::Pauli(t) => t.split_whitespace().collect::<Vec<_>>() == ["z"]
            || t.split_whitespace().collect::<Vec<_>>() == ["1", "z"],
        ObservableSource::Diagonal(v) => v == &[1.0, -1.0],
        ObservableSource::BondEnergy => false,
    };
    z && matches!(cfg.model, ModelSource::Tracial(2))
}

fn rate(cfg: &ExperimentConfig) -> fed_core::Result<Report> {
    let mut report = Report::default();
    let grid = rate_function(&cfg.state, &cfg.observable, &cfg.t_grid, &usable_ns(cfg), &cfg.x_grid)?;
    let (_, min) = grid.minimum();
    report.checks.push(Check::at_most("rate_minimum", min.abs(), cfg.tolerances.rate));
    let bound = 2.0 * grid_spacing(&grid.t) * grid_spacing(&grid.x);
    let round_trip = legendre_round_trip_error(&grid.t, &grid.pressures, &grid.x)?;
    report.checks.push(Check::at_most("legendre_round_trip", round_trip, bound));
    if binary_reference(cfg) {
        let worst = [0.0, 0.25, -0.25, 0.5, -0.5]
            .iter()
            .map(|&x| (grid.value_at(x) - binary_rate(x)).abs())
            .fold(0.0, f64::max);
        report.checks.push(Check::at_most("binary_rate_error", worst, cfg.tolerances.rate));
    }
    let mut pressures = String::from("t,value\n");
    for (t, g) in grid.t.iter().zip(&grid.pressures) {
        let _ = writeln!(pressures, "{},{}", num(*t), num(*g));
    }
    report.files.push(("rate.csv".into(), grid.to_csv()));
    report.files.push(("rate_pressures.csv".into(), pressures));
    Ok(report)
}

/// `(1/n) log Z_n + ω(f(s_n A)) + S(ω_n, φ_n)/n`, non-negative for every state ω.
fn lower_bound_slack(
    cfg: &ExperimentConfig,
    omega: &StateModel,
    n: usize,
    log_z: f64,
) -> fed_core::Result<f64> {
    let s = s_n_observable(&cfg.observable, n)?;
    let fs = s.matrix_function(|x| cfg.function.eval(x))?;
    let on = omega.local_density(n)?;
    let entropy = relative_entropy(&on, &cfg.state.local_density(n)?)?;
    Ok(log_z / n as f64 + fs.expectation(&on)? + entropy / n as f64)
}

fn variational(cfg: &ExperimentConfig) -> fed_core::Result<Report> {
    let mut report = Report::default();
    let mut ansatz = Ansatz::new(cfg.period, cfg.state.site_dim());
    ansatz.restarts = cfg.restarts;
    ansatz.seed = cfg.seed;
    ansatz.verbose = cfg.verbose;
    let best = variational_pressure(&cfg.state, &cfg.observable, &cfg.function, &ansatz)?;
    let ns = usable_ns(cfg);
    let mut seq = pressure_sequence(&cfg.state, &cfg.observable, &cfg.function, &ns)?;
    let limit = if seq.len() >= 3 {
        extrapolate_limit(&mut seq)?.limit
    } else {
        seq.last_value().unwrap_or(f64::NAN)
    };
    report
        .checks
        .push(Check::at_most("variational_minus_pressure", best.value - limit, cfg.tolerances.sandwich));
    let omega = StateModel::periodized_average(best.block.clone())?;
    let values = seq.values();
    for (&n, v) in ns.iter().zip(&values) {
        let slack = lower_bound_slack(cfg, &omega, n, v * n as f64)?;
        report
            .checks
            .push(Check::at_least(format!("lower_bound_slack n={n}"), slack, -cfg.tolerances.inequality));
    }
    let mut table = String::from("key,value\n");
    for (k, v) in [
        ("variational_value", best.value),
        ("extrapolated_pressure", limit),
        ("mean", best.mean),
        ("entropy_rate", best.entropy_rate),
    ] {
        let _ = writeln!(table, "{k},{}", num(v));
    }
    let _ = writeln!(table, "sweeps,{}", best.sweeps);
    let _ = writeln!(table, "converged,{}", best.converged);
    for (i, p) in best.parameters.iter().enumerate() {
        let _ = writeln!(table, "theta_{i},{}", num(*p));
    }
    report.files.push(("variational.csv".into(), table));
    report.files.push(("pressure.csv".into(), seq.to_csv()));
    if cfg.verbose {
        let mut trace = best.trace.join("\n");
        trace.push('\n');
        report.files.push(("variational_trace.txt".into(), trace));
    }
    Ok(report)
}

fn identity_checks(cfg: &ExperimentConfig) -> fed_core::Result<Vec<Check>> {
    let mut rng = random::seeded(cfg.seed);
    let d = cfg.state.site_dim();
    let mut worst: f64 = 0.0;
    let mut dominated = 0.0f64;
    for i in 0..20u64 {
        let sites = 1 + (i as usize) % 3;
        if fed_core::operators::chain_dimension(d, sites)? > 64 {
            break;
        }
        let h = random::hermitian_operator(&mut rng, Interval::sites(sites)?, d, 2.0)?;
        let r = finite_variational_identity(&h, cfg.seed.wrapping_add(i))?;
        worst = worst.max(r.residual);
        dominated = dominated.max(r.best_trial - r.log_z);
    }
    Ok(vec![
        Check::at_most("finite_variational_identity", worst, cfg.tolerances.identity),
        Check::at_most("random_states_minus_log_z", dominated, 0.0),
    ])
}

fn per_volume_checks(cfg: &ExperimentConfig, n: usize) -> fed_core::Result<Vec<Check>> {
    let tol = cfg.tolerances.inequality;
    let a = &cfg.observable;
    let id = ScalarFunction::Identity;
    let mut out = Vec::new();
    let gap = golden_thompson_gap(&cfg.state, a, n)?;
    out.push(Check::at_least(format!("golden_thompson_gap n={n}"), gap.gap, -tol));

    let mut rng = random::seeded(cfg.seed.wrapping_add(n as u64));
    let noise = random::hermitian_operator(&mut rng, a.window(), a.site_dim(), 0.2)?;
    let b = a.add(&noise)?;
    let pa = log_partition_z(&cfg.state, a, &id, n)? / n as f64;
    let pb = log_partition_z(&cfg.state, &b, &id, n)? / n as f64;
    out.push(Check::at_least(
        format!("lipschitz_slack n={n}"),
        noise.operator_norm() - (pa - pb).abs(),
        -tol,
    ));

    let p = |t: f64| -> fed_core::Result<f64> { Ok(log_partition_z(&cfg.state, &a.scale(t), &id, n)? / n as f64) };
    let second = p(0.5)? + p(1.5)? - 2.0 * pa;
    out.push(Check::at_least(format!("convexity n={n}"), second, -tol));

    let tracial = StateModel::tracial(cfg.state.site_dim())?;
    let log_z = log_partition_z(&cfg.state, a, &cfg.function, n)?;
    let slack = lower_bound_slack(cfg, &tracial, n, log_z)?;
    if slack.is_finite() {
        out.push(Check::at_least(format!("tracial_lower_bound_slack n={n}"), slack, -tol));
    }

    if let StateModel::QuantumMarkov(q) = &cfg.state {
        if n <= 6 && fed_core::operators::chain_dimension(q.site_dim(), n)? <= DIMENSION_CAP / 4 {
            let diff = q.local_density(n)?.sub(&q.to_fcs()?.density(n)?)?.max_abs();
            out.push(Check::at_most(format!("qms_fcs_density n={n}"), diff, cfg.tolerances.identity));
        }
    }
    Ok(out)
}

fn check(cfg: &ExperimentConfig) -> fed_core::Result<Report> {
    let mut report = Report::default();
    report.checks.extend(identity_checks(cfg)?);
    let per_n: Vec<Vec<Check>> = usable_ns(cfg)
        .par_iter()
        .map(|&n| per_volume_checks(cfg, n))
        .collect::<fed_core::Result<_>>()?;
    report.checks.extend(per_n.into_iter().flatten());
    let mut table = String::from("name,value,relation,bound,status\n");
    for c in &report.checks {
        let _ = writeln!(
            table,
            "{},{},{},{},{}",
            c.name,
            num(c.value),
            if c.relation == Relation::AtMost { "<=" } else { ">=" },
            num(c.bound),
            if c.pass() { "PASS" } else { "FAIL" }
        );
    }
    report.files.push(("check.csv".into(), table));
    Ok(report)
}

fn oracle(cfg: &ExperimentConfig) -> fed_core::Result<Report> {
    let mut report = Report::default();
    let mut table = String::from("quantity,n,numeric,oracle\n");
    match &cfg.model {
        ModelSource::Gibbs { interaction, ising: Some((j, h)), .. } => {
            let exact = ising_pressure(*j, *h)?;
            let mut seq = interaction_pressure(interaction, &cfg.ns)?;
            let limit = if seq.len() >= 3 {
                extrapolate_limit(&mut seq)?.limit
            } else {
                seq.last_value().unwrap_or(f64::NAN)
            };
            for (n, v) in seq.entries() {
                let _ = writeln!(table, "interaction_pressure,{n},{},{}", num(*v), num(exact));
            }
            let _ = writeln!(table, "interaction_pressure,inf,{},{}", num(limit), num(exact));
            report
                .checks
                .push(Check::at_most("transfer_matrix_error", (limit - exact).abs(), cfg.tolerances.oracle));
        }
        ModelSource::ClassicalMarkov(p) => {
            let pi = fed_core::states::stationary_distribution(p)?;
            let exact = ClassicalChain::new(p.clone(), pi)?.factorization_constant();
            let StateModel::QuantumMarkov(q) = &cfg.state else {
                unreachable!("classical_markov models are built as QMS");
            };
            let fcs = q.to_fcs()?;
            let mut worst: f64 = 0.0;
            for n in 1..=3 {
                let alpha = fcs_alpha(&fcs, n)?;
                let _ = writeln!(table, "factorization_constant,{n},{},{}", num(alpha), num(exact));
                worst = worst.max((alpha - exact).abs());
            }
            report
                .checks
                .push(Check::at_most("factorization_constant_error", worst, cfg.tolerances.identity));
        }
        _ => {
            let Some(exact) = product_oracle(cfg)? else {
                return Err(fed_core::Error::InvalidArgument(
                    "no closed-form oracle for this model: use an Ising Gibbs, classical_markov, \
                     or product model with a one-site observable and f = identity"
                        .into(),
                ));
            };
            let seq = pressure_sequence(&cfg.state, &cfg.observable, &ScalarFunction::Identity, &cfg.ns)?;
            let mut worst: f64 = 0.0;
            for (n, v) in seq.entries() {
                let _ = writeln!(table, "product_pressure,{n},{},{}", num(*v), num(exact));
                worst = worst.max((v - exact).abs());
            }
            report
                .checks
                .push(Check::at_most("product_closed_form_error", worst, cfg.tolerances.identity));
        }
    }
    report.files.push(("oracle.csv".into(), table));
    Ok(report)
}

/// One-site `σ_z` on site 1, for tests.
#[cfg(test)]
fn sigma_z_observable() -> ChainOperator {
    fed_core::operators::site_operator(1, fed_core::operators::pauli::sigma_z()).unwrap()
}
