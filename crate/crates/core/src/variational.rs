//! Legendre transforms, rate functions and the variational side of the
//! functional free energy.

use std::fmt::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operators::{chain_dimension, ChainOperator, Interval, C64};
use crate::pressure::{extrapolate_limit, pressure_sequence, PressureSequence, ScalarFunction};
use crate::random;
use crate::states::{entropy, gibbs_density, Reference, ErgodicMixture, StateModel};
use crate::text::fmt_f64;

/// Uniform grid of `count` points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

pub const DEFAULT_X_POINTS: usize = 201;
pub const DEFAULT_T_POINTS: usize = 1201;
pub const DEFAULT_T_MAX: f64 = 30.0;

pub fn default_t_grid() -> Vec<f64> {
    uniform_grid(-DEFAULT_T_MAX, DEFAULT_T_MAX, DEFAULT_T_POINTS)
}

/// `I(x) = max_t {-t x - g(t)}` over the t-grid.
pub fn legendre_transform(t: &[f64], g: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if t.is_empty() || x.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if t.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            got: g.len(),
        });
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("g must be finite on the t-grid".into()));
    }
    Ok(x.iter()
        .map(|&xv| {
            t.iter()
                .zip(g)
                .map(|(&tv, &gv)| -tv * xv - gv)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// `g(t) = max_x {-t x - I(x)}`, skipping infinite values of `I`.
pub fn inverse_legendre(x: &[f64], rate: &[f64], t: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() || t.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if x.len() != rate.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: rate.len(),
        });
    }
    Ok(t.iter()
        .map(|&tv| {
            x.iter()
                .zip(rate)
                .filter(|(_, r)| r.is_finite())
                .map(|(&xv, &r)| -tv * xv - r)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Largest deviation of the double transform from `g` on interior t-points.
///
/// A t-point is interior when the central-difference slope `-g'(t)` lies
/// between the second and the second-to-last x-grid points, so its
/// conjugate is bracketed by grid cells on both sides.
pub fn legendre_round_trip_error(t: &[f64], g: &[f64], x: &[f64]) -> Result<f64> {
    let rate = legendre_transform(t, g, x)?;
    let back = inverse_legendre(x, &rate, t)?;
    if t.len() < 3 || x.len() < 3 {
        return Ok(0.0);
    }
    let (lo, hi) = (x[1], x[x.len() - 2]);
    let mut err: f64 = 0.0;
    for i in 1..t.len() - 1 {
        let slope = -(g[i + 1] - g[i - 1]) / (t[i + 1] - t[i - 1]);
        if slope >= lo && slope <= hi {
            err = err.max((back[i] - g[i]).abs());
        }
    }
    Ok(err)
}

/// Largest spacing of a sorted grid.
pub fn grid_spacing(grid: &[f64]) -> f64 {
    grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct RateGrid {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub t: Vec<f64>,
    /// Extrapolated `p_φ(tA)` on the t-grid.
    pub pressures: Vec<f64>,
    /// `[λ_min(A), λ_max(A)]`; the rate is `+∞` outside.
    pub range: (f64, f64),
    pub metadata: Vec<(String, String)>,
}

impl RateGrid {
    /// Rate at `x`: `+∞` off the spectral range, linear interpolation on it.
    pub fn value_at(&self, x: f64) -> f64 {
        let tol = 1e-12 * (1.0 + x.abs());
        if x < self.range.0 - tol || x > self.range.1 + tol {
            return f64::INFINITY;
        }
        if let Some(i) = self.x.iter().position(|&g| (g - x).abs() <= tol) {
            return self.values[i];
        }
        let hi = self.x.partition_point(|&g| g < x);
        if hi == 0 || hi == self.x.len() {
            return f64::INFINITY;
        }
        let (x0, x1) = (self.x[hi - 1], self.x[hi]);
        let w = (x - x0) / (x1 - x0);
        (1.0 - w) * self.values[hi - 1] + w * self.values[hi]
    }

    /// `(x, I(x))` at the smallest finite value.
    pub fn minimum(&self) -> (f64, f64) {
        self.x
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| (x, v))
            .fold((f64::NAN, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,I\n");
        for (x, v) in self.x.iter().zip(&self.values) {
            let v = if v.is_finite() { fmt_f64(*v) } else { "inf".into() };
            let _ = writeln!(out, "{},{v}", fmt_f64(*x));
        }
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out
    }
}

/// Extrapolated pressure, or the last value when there are too few points to fit.
fn limit_of(mut seq: PressureSequence) -> Result<f64> {
    if seq.len() >= 3 {
        Ok(extrapolate_limit(&mut seq)?.limit)
    } else {
        seq.last_value().ok_or(Error::EmptyGrid)
    }
}

/// `I_A(x) = sup_t {-t x - p_φ(tA)}` with `p_φ(tA)` from extrapolated pressure sequences.
pub fn rate_function(
    phi: &StateModel,
    a: &ChainOperator,
    t: &[f64],
    ns: &[usize],
    x: &[f64],
) -> Result<RateGrid> {
    if t.is_empty() || x.is_empty() || ns.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let spectrum = a.eigenvalues()?;
    let range = (spectrum[0], spectrum[spectrum.len() - 1]);
    let pressures = t
        .par_iter()
        .map(|&tv| {
            let seq = pressure_sequence(phi, &a.scale(tv), &ScalarFunction::Identity, ns)?;
            limit_of(seq)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut values = legendre_transform(t, &pressures, x)?;
    let tol = 1e-12 * (1.0 + range.0.abs().max(range.1.abs()));
    for (v, &xv) in values.iter_mut().zip(x) {
        if xv < range.0 - tol || xv > range.1 + tol {
            *v = f64::INFINITY;
        }
    }
    let metadata = vec![
        ("state".to_string(), phi.describe()),
        ("observable_window".to_string(), a.window().to_string()),
        ("n_values".to_string(), crate::text::join(ns)),
        (
            "t_grid".to_string(),
            format!("{} points on [{}, {}]", t.len(), t[0], t[t.len() - 1]),
        ),
    ];
    Ok(RateGrid {
        x: x.to_vec(),
        values,
        t: t.to_vec(),
        pressures,
        range,
        metadata,
    })
}

/// `E_{A,f}(ω) = Σ_j ν_j f(ψ_j(A))`.
pub fn expected_f(omega: &ErgodicMixture, a: &ChainOperator, f: &ScalarFunction) -> Result<f64> {
    omega
        .components()
        .iter()
        .map(|(w, psi)| Ok(w * f.eval(psi.expectation(a)?)))
        .sum()
}

/// Generalized Gell-Mann basis of traceless Hermitian `dim × dim` matrices.
pub fn hermitian_basis(dim: usize) -> Vec<DMatrix<C64>> {
    let mut out = Vec::with_capacity(dim * dim - 1);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    for j in 0..dim {
        for k in j + 1..dim {
            let mut s = DMatrix::zeros(dim, dim);
            s[(j, k)] = one;
            s[(k, j)] = one;
            out.push(s);
            let mut a = DMatrix::zeros(dim, dim);
            a[(j, k)] = -i;
            a[(k, j)] = i;
            out.push(a);
        }
    }
    for l in 1..dim {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut d = DMatrix::zeros(dim, dim);
        for q in 0..l {
            d[(q, q)] = C64::new(norm, 0.0);
        }
        d[(l, l)] = C64::new(-(l as f64) * norm, 0.0);
        out.push(d);
    }
    out
}

/// Periodized-average ansatz with block densities `e^{G(θ)} / Tr e^{G(θ)}` on `[1, m]`.
#[derive(Clone, Debug)]
pub struct Ansatz {
    pub period: usize,
    pub site_dim: usize,
    /// Volumes `j·m` used to estimate the mean relative entropy.
    pub entropy_blocks: Vec<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    pub verbose: bool,
}

impl Ansatz {
    pub fn new(period: usize, site_dim: usize) -> Self {
        Self {
            period,
            site_dim,
            entropy_blocks: vec![1, 2, 3],
            restarts: 3,
            seed: 0,
            max_sweeps: 200,
            verbose: false,
        }
    }

    fn block_dim(&self) -> Result<usize> {
        chain_dimension(self.site_dim, self.period)
    }

    pub fn parameter_count(&self) -> Result<usize> {
        Ok(self.block_dim()?.pow(2) - 1)
    }

    /// Block density at parameters `θ`.
    pub fn block(&self, basis: &[DMatrix<C64>], theta: &[f64]) -> Result<ChainOperator> {
        let dim = self.block_dim()?;
        let mut g = DMatrix::<C64>::zeros(dim, dim);
        for (b, &th) in basis.iter().zip(theta) {
            g += b * C64::new(-th, 0.0);
        }
        gibbs_density(&ChainOperator::hermitian(Interval::sites(self.period)?, self.site_dim, g)?)
    }
}

#[derive(Clone, Debug)]
pub struct VariationalResult {
    pub value: f64,
    pub block: ChainOperator,
    pub mean: f64,
    pub entropy_rate: f64,
    pub parameters: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub trace: Vec<String>,
}

struct Evaluation {
    value: f64,
    mean: f64,
    entropy_rate: f64,
}

/// `-f(ψ̄(A)) - S_M(ψ̄, φ)` with `S_M` from the 1/n fit over the ansatz volumes.
fn references(phi: &StateModel, ansatz: &Ansatz) -> Result<Vec<(usize, Reference)>> {
    ansatz
        .entropy_blocks
        .iter()
        .map(|&j| {
            let n = j * ansatz.period;
            Ok((n, Reference::new(&phi.local_density(n)?)?))
        })
        .collect()
}

fn evaluate(
    refs: &[(usize, Reference)],
    a: &ChainOperator,
    f: &ScalarFunction,
    block: &ChainOperator,
) -> Result<Evaluation> {
    let psi_bar = StateModel::periodized_average(block.clone())?;
    let mean = psi_bar.expectation(a)?;
    let psi = StateModel::product(block.clone())?;
    let mut seq = PressureSequence::new("mean relative entropy");
    for (n, reference) in refs {
        let n = *n;
        let s = reference.relative_entropy(&psi.local_density(n)?)?;
        if !s.is_finite() {
            return Ok(Evaluation {
                value: f64::NEG_INFINITY,
                mean,
                entropy_rate: f64::INFINITY,
            });
        }
        seq.push(n, s / n as f64)?;
    }
    let entropy_rate = limit_of(seq)?.max(0.0);
    Ok(Evaluation {
        value: -f.eval(mean) - entropy_rate,
        mean,
        entropy_rate,
    })
}

fn golden_section(mut objective: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = objective(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

struct Search {
    theta: Vec<f64>,
    value: f64,
    sweeps: usize,
    converged: bool,
    trace: Vec<String>,
}

fn coordinate_search(
    objective: &(dyn Fn(&[f64]) -> f64 + Sync),
    start: Vec<f64>,
    max_sweeps: usize,
    verbose: bool,
    label: &str,
) -> Search {
    let mut theta = start;
    let mut best = objective(&theta);
    let mut width = 4.0;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let before = best;
        for k in 0..theta.len() {
            let centre = theta[k];
            let mut probe = theta.clone();
            let (arg, val) = golden_section(
                |x| {
                    probe[k] = x;
                    objective(&probe)
                },
                centre - width,
                centre + width,
                1e-6,
            );
            if val > best {
                theta[k] = arg;
                best = val;
                if verbose {
                    trace.push(format!(
                        "{label} sweep={sweeps} coord={k} theta={} value={}",
                        fmt_f64(arg),
                        fmt_f64(val)
                    ));
                }
            }
        }
        let improvement = best - before;
        if width <= 0.05 && improvement < 1e-8 {
            converged = true;
            break;
        }
        width = (width * 0.5).max(0.05);
    }
    Search {
        theta,
        value: best,
        sweeps,
        converged,
        trace,
    }
}

/// Lower bound on `p_φ(A, f)` from the periodized-average ansatz.
///
/// Starts from `θ = 0` and `restarts` random points; the best search wins.
/// Non-convergence is reported through `converged`, never hidden.
pub fn variational_pressure(
    phi: &StateModel,
    a: &ChainOperator,
    f: &ScalarFunction,
    ansatz: &Ansatz,
) -> Result<VariationalResult> {
    if ansatz.site_dim != phi.site_dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.site_dim(),
            got: ansatz.site_dim,
        });
    }
    let basis = hermitian_basis(ansatz.block_dim()?);
    let refs = references(phi, ansatz)?;
    // Surface errors from the observable once, outside the search.
    evaluate(&refs, a, f, &ansatz.block(&basis, &vec![0.0; basis.len()])?)?;
    let objective = |theta: &[f64]| -> f64 {
        ansatz
            .block(&basis, theta)
            .and_then(|b| evaluate(&refs, a, f, &b))
            .map(|e| e.value)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let mut rng = random::seeded(ansatz.seed);
    let mut starts = vec![vec![0.0; basis.len()]];
    for _ in 0..ansatz.restarts {
        starts.push((0..basis.len()).map(|_| rng.random_range(-2.0..2.0)).collect());
    }
    let searches: Vec<Search> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| {
            coordinate_search(&objective, s, ansatz.max_sweeps, ansatz.verbose, &format!("start={i}"))
        })
        .collect();
    let best = searches
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.value.total_cmp(&y.1.value))
        .map(|(i, _)| i)
        .unwrap();
    let trace = searches.iter().flat_map(|s| s.trace.clone()).collect();
    let winner = &searches[best];
    let block = ansatz.block(&basis, &winner.theta)?;
    let eval = evaluate(&refs, a, f, &block)?;
    Ok(VariationalResult {
        value: eval.value,
        block,
        mean: eval.mean,
        entropy_rate: eval.entropy_rate,
        parameters: winner.theta.clone(),
        sweeps: winner.sweeps,
        converged: winner.converged,
        trace,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct VariationalIdentity {
    pub log_z: f64,
    /// `-ω_G(H) + S(ω_G)`.
    pub gibbs_value: f64,
    pub residual: f64,
    /// Largest `-ω(H) + S(ω)` over the random trial states.
    pub best_trial: f64,
    pub trials: usize,
}

impl VariationalIdentity {
    pub fn dominated(&self) -> bool {
        self.best_trial < self.log_z
    }
}

/// `log Tr e^{-H} = -ω_G(H) + S(ω_G)` and dominance over 20 random states.
pub fn finite_variational_identity(h: &ChainOperator, seed: u64) -> Result<VariationalIdentity> {
    let identity = ChainOperator::identity(h.window(), h.site_dim())?;
    let state = crate::operators::perturbed_trace_exp(&identity, h)?;
    let gibbs_value = -h.expectation(&state.density)? + entropy(&state.density)?;
    let mut rng = random::seeded(seed);
    let trials = 20;
    let mut best_trial = f64::NEG_INFINITY;
    for _ in 0..trials {
        let omega = random::density_operator(&mut rng, h.window(), h.site_dim())?;
        best_trial = best_trial.max(-h.expectation(&omega)? + entropy(&omega)?);
    }
    Ok(VariationalIdentity {
        log_z: state.log_z,
        gibbs_value,
        residual: (state.log_z - gibbs_value).abs(),
        best_trial,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{pauli::*, real_diag, site_operator};

    fn binary_rate(x: f64) -> f64 {
        let h = |p: f64| if p > 0.0 { p * p.ln() } else { 0.0 };
        h((1.0 + x) / 2.0) + h((1.0 - x) / 2.0) + 2f64.ln()
    }

    #[test]
    fn gaussian_pair() {
        let t = uniform_grid(-5.0, 5.0, 1001);
        let g: Vec<f64> = t.iter().map(|t| 0.5 * t * t).collect();
        let x = [-1.0, 0.0, 0.7];
        let rate = legendre_transform(&t, &g, &x).unwrap();
        for (xv, r) in x.iter().zip(rate) {
            assert!((r - 0.5 * xv * xv).abs() < 1e-4);
        }
        assert!(legendre_transform(&[], &[], &x).is_err());
    }

    #[test]
    fn log_cosh_pair() {
        let t = default_t_grid();
        let g: Vec<f64> = t.iter().map(|t: &f64| t.cosh().ln()).collect();
        let rate = legendre_transform(&t, &g, &[0.0, 1.0]).unwrap();
        assert!(rate[0].abs() < 1e-15);
        assert!((rate[1] - 2f64.ln()).abs() < 1e-3);
        let x = uniform_grid(-1.0, 1.0, DEFAULT_X_POINTS);
        let err = legendre_round_trip_error(&t, &g, &x).unwrap();
        assert!(err <= 2.0 * grid_spacing(&t) * grid_spacing(&x));
    }

    #[test]
    fn tracial_rate_is_binary_entropy() {
        let phi = StateModel::tracial(2).unwrap();
        let a = site_operator(1, sigma_z()).unwrap();
        let x = uniform_grid(-1.0, 1.0, DEFAULT_X_POINTS);
        let grid = rate_function(&phi, &a, &default_t_grid(), &[1, 2], &x).unwrap();
        for xv in [0.0, 0.25, -0.25, 0.5, -0.5] {
            assert!((grid.value_at(xv) - binary_rate(xv)).abs() < 1e-3);
        }
        assert!((binary_rate(0.5) - 0.130812).abs() < 1e-6);
        assert!(grid.value_at(0.0) < 1e-6);
        assert_eq!(grid.value_at(1.5), f64::INFINITY);
        assert!(grid.to_csv().starts_with("x,I\n"));
    }

    #[test]
    fn biased_rate_vanishes_at_mean() {
        let phi = StateModel::product(site_operator(1, real_diag(&[0.9, 0.1])).unwrap()).unwrap();
        let a = site_operator(1, sigma_z()).unwrap();
        let x = uniform_grid(-1.0, 1.0, DEFAULT_X_POINTS);
        let grid = rate_function(&phi, &a, &default_t_grid(), &[1], &x).unwrap();
        let (argmin, min) = grid.minimum();
        assert!((argmin - 0.8).abs() < 1e-12);
        assert!(min <= 1e-6);
    }

    #[test]
    fn expected_f_examples() {
        let up = StateModel::product(site_operator(1, real_diag(&[0.65, 0.35])).unwrap()).unwrap();
        let down = StateModel::product(site_operator(1, real_diag(&[0.35, 0.65])).unwrap()).unwrap();
        let a = site_operator(1, sigma_z()).unwrap();
        let single = ErgodicMixture::new(vec![(1.0, up.clone())]).unwrap();
        assert!((expected_f(&single, &a, &ScalarFunction::Square).unwrap() - 0.09).abs() < 1e-15);
        let mix = ErgodicMixture::new(vec![(0.5, up), (0.5, down)]).unwrap();
        assert!((expected_f(&mix, &a, &ScalarFunction::Square).unwrap() - 0.09).abs() < 1e-15);
        assert!(expected_f(&mix, &a, &ScalarFunction::Identity).unwrap().abs() < 1e-15);
    }

    #[test]
    fn gell_mann_basis_is_orthogonal() {
        let b = hermitian_basis(3);
        assert_eq!(b.len(), 8);
        for (i, x) in b.iter().enumerate() {
            assert!(x.trace().norm() < 1e-15);
            for (j, y) in b.iter().enumerate() {
                let ip = (x * y).trace().re;
                let expected = if i == j { 2.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gibbs_ansatz_attains_product_pressure() {
        let phi = StateModel::tracial(2).unwrap();
        let a = site_operator(1, real_diag(&[0.4, -0.9])).unwrap();
        let r = variational_pressure(&phi, &a, &ScalarFunction::Identity, &Ansatz::new(1, 2)).unwrap();
        let oracle = (((-0.4f64).exp() + 0.9f64.exp()) / 2.0).ln();
        assert!(r.value <= oracle + 1e-10);
        assert!(oracle - r.value < 1e-8, "{} vs {oracle}", r.value);
        assert!(r.converged);
    }

    #[test]
    fn constant_and_square_f() {
        let phi = StateModel::tracial(2).unwrap();
        let a = site_operator(1, sigma_z()).unwrap();
        let r = variational_pressure(&phi, &a, &ScalarFunction::Constant(0.3), &Ansatz::new(1, 2)).unwrap();
        assert!((r.value + 0.3).abs() < 1e-10);
        assert!(r.entropy_rate < 1e-10);
        let r = variational_pressure(&phi, &a, &ScalarFunction::Square, &Ansatz::new(1, 2)).unwrap();
        assert!(r.value.abs() < 1e-10);
    }

    #[test]
    fn verbose_search_records_accepted_steps() {
        let phi = StateModel::tracial(2).unwrap();
        let a = site_operator(1, sigma_x()).unwrap();
        let mut ansatz = Ansatz::new(1, 2);
        ansatz.verbose = true;
        ansatz.restarts = 0;
        let r = variational_pressure(&phi, &a, &ScalarFunction::Identity, &ansatz).unwrap();
        assert!(!r.trace.is_empty());
        assert!(r.trace[0].starts_with("start=0 sweep=1"));
    }

    #[test]
    fn finite_identity_examples() {
        let zero = ChainOperator::zeros(Interval::sites(2).unwrap(), 2).unwrap();
        let r = finite_variational_identity(&zero, 1).unwrap();
        assert!((r.log_z - 4f64.ln()).abs() < 1e-14);
        assert!(r.residual < 1e-14);
        let mut rng = random::seeded(5);
        let h = random::hermitian_operator(&mut rng, Interval::sites(2).unwrap(), 2, 1.0).unwrap();
        let r = finite_variational_identity(&h, 2).unwrap();
        assert!(r.residual <= 1e-10);
        assert!(r.dominated());
    }
}
