//! Partition functions and pressure sequences.
//!
//! Everything is computed in log space:
//! `log Z_φ(n, A, f) = log Tr exp(log D(φ_n) - n f(s_n(A)))`, with the
//! support projection of `D(φ_n)` handling singular densities.

mod sequence;

pub use sequence::*;

use crate::error::{Error, Result};
use crate::interactions::Interaction;
use crate::operators::{
    log_trace_density_exp, perturbed_trace_exp, ChainOperator, Interval, PerturbedState,
};
use crate::states::StateModel;

/// Scalar functions applied to `s_n(A)` by spectral calculus.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarFunction {
    Identity,
    Square,
    Constant(f64),
    /// `Σ c_k x^k`, lowest order first.
    Polynomial(Vec<f64>),
}

impl ScalarFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Identity => x,
            Self::Square => x * x,
            Self::Constant(c) => *c,
            Self::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck),
        }
    }

    /// `t·f`.
    pub fn scaled(&self, t: f64) -> Self {
        match self {
            Self::Identity => Self::Polynomial(vec![0.0, t]),
            Self::Square => Self::Polynomial(vec![0.0, 0.0, t]),
            Self::Constant(c) => Self::Constant(t * c),
            Self::Polynomial(c) => Self::Polynomial(c.iter().map(|x| t * x).collect()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::Square => "square".into(),
            Self::Constant(c) => format!("constant({c})"),
            Self::Polynomial(c) => format!(
                "polynomial({})",
                c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            ),
        }
    }
}

/// `s_n(A) = (1/n) Σ_{k=0}^{n-ℓ} γ^k(A)` on `[1, n]`, with `A` moved to start at site 1.
pub fn s_n_observable(a: &ChainOperator, n: usize) -> Result<ChainOperator> {
    let len = a.window().len();
    if n < len {
        return Err(Error::InvalidArgument(format!(
            "n = {n} is smaller than the observable length {len}"
        )));
    }
    let base = a.translated(1 - a.window().start());
    let mut s = ChainOperator::zeros(Interval::sites(n)?, a.site_dim())?;
    for k in 0..=(n - len) as i64 {
        s.add_embedded(&base, k, 1.0 / n as f64)?;
    }
    s.into_hermitian()
}

/// `n·f(s_n(A))`.
fn mean_field_term(a: &ChainOperator, f: &ScalarFunction, n: usize) -> Result<ChainOperator> {
    let s = s_n_observable(a, n)?;
    let scale = n as f64;
    match f {
        ScalarFunction::Identity => Ok(s.scale(scale)),
        _ => s.matrix_function(|x| scale * f.eval(x)),
    }
}

/// Perturbed state `[φ_n^{n f(s_n(A))}]` together with `log Z_φ(n, A, f)`.
pub fn perturbed_state(
    phi: &StateModel,
    a: &ChainOperator,
    f: &ScalarFunction,
    n: usize,
) -> Result<PerturbedState> {
    let d = phi.local_density(n)?;
    perturbed_trace_exp(&d, &mean_field_term(a, f, n)?)
}

pub fn log_partition_z(
    phi: &StateModel,
    a: &ChainOperator,
    f: &ScalarFunction,
    n: usize,
) -> Result<f64> {
    Ok(perturbed_state(phi, a, f, n)?.log_z)
}

/// `Z_φ(n, A, f)`; prefer [`log_partition_z`] for large `n`.
pub fn partition_z(phi: &StateModel, a: &ChainOperator, f: &ScalarFunction, n: usize) -> Result<f64> {
    Ok(log_partition_z(phi, a, f, n)?.exp())
}

fn base_sequence(label: &str, phi: &StateModel, a: &ChainOperator) -> PressureSequence {
    let mut seq = PressureSequence::new(label)
        .with_meta("state", phi.describe())
        .with_meta("observable_window", a.window());
    if let StateModel::BufferedGibbs { buffer, .. } = phi {
        seq.push_meta("buffer_requested", buffer);
    }
    seq
}

fn note_buffer(seq: &mut PressureSequence, phi: &StateModel, n: usize) {
    if let Some(m) = phi.effective_buffer(n) {
        seq.push_meta(format!("buffer_effective_n{n}"), m);
    }
}

/// Entries `(n, (1/n) log Z_φ(n, A, f))`.
pub fn pressure_sequence(
    phi: &StateModel,
    a: &ChainOperator,
    f: &ScalarFunction,
    ns: &[usize],
) -> Result<PressureSequence> {
    let mut seq = base_sequence("p", phi, a).with_meta("f", f.describe());
    for &n in ns {
        seq.push(n, log_partition_z(phi, a, f, n)? / n as f64)?;
        note_buffer(&mut seq, phi, n);
    }
    Ok(seq)
}

/// `(1/n) log φ_n(exp(-n s_n(A)))`.
pub fn p_tilde_value(phi: &StateModel, a: &ChainOperator, n: usize) -> Result<f64> {
    let d = phi.local_density(n)?;
    let b = s_n_observable(a, n)?.scale(n as f64);
    Ok(log_trace_density_exp(&d, &b)? / n as f64)
}

pub fn p_tilde_sequence(
    phi: &StateModel,
    a: &ChainOperator,
    ns: &[usize],
) -> Result<PressureSequence> {
    let mut seq = base_sequence("p_tilde", phi, a).with_meta("sign", "exp(-sum gamma^k A)");
    for &n in ns {
        seq.push(n, p_tilde_value(phi, a, n)?)?;
        note_buffer(&mut seq, phi, n);
    }
    Ok(seq)
}

/// `(1/n) log Tr e^{-H_[1,n](Φ)}`.
pub fn interaction_pressure(phi: &Interaction, ns: &[usize]) -> Result<PressureSequence> {
    let mut seq = PressureSequence::new("P")
        .with_meta("site_dim", phi.site_dim())
        .with_meta("range", phi.range());
    for &n in ns {
        let window = Interval::sites(n)?;
        let h = phi.local_hamiltonian(window)?;
        let identity = ChainOperator::identity(window, phi.site_dim())?;
        seq.push(n, perturbed_trace_exp(&identity, &h)?.log_z / n as f64)?;
    }
    Ok(seq)
}

#[derive(Clone, Debug)]
pub struct PerturbedPressure {
    pub sequence: PressureSequence,
    /// `P(Φ+Ψ) - P(Φ)` the sequence is compared against.
    pub target: f64,
    /// `|extrapolated limit - target|`.
    pub identity_residual: f64,
}

/// `(1/n) log Tr exp(log D(φ_n) - H_[1,n](Ψ))` for a Gibbs-type reference `φ`.
///
/// Without an explicit `target`, `P(Φ+Ψ) - P(Φ)` is taken from extrapolated
/// interaction pressures over the same `ns`.
pub fn perturbed_interaction_pressure(
    phi: &StateModel,
    psi: &Interaction,
    ns: &[usize],
    target: Option<f64>,
) -> Result<PerturbedPressure> {
    let mut seq = PressureSequence::new("P_phi(Psi)")
        .with_meta("state", phi.describe())
        .with_meta("psi_range", psi.range());
    for &n in ns {
        let d = phi.local_density(n)?;
        let h = psi.local_hamiltonian(Interval::sites(n)?)?;
        seq.push(n, perturbed_trace_exp(&d, &h)?.log_z / n as f64)?;
        note_buffer(&mut seq, phi, n);
    }
    let limit = extrapolate_limit(&mut seq)?.limit;
    let target = match target {
        Some(t) => t,
        None => {
            let base = match phi {
                StateModel::LocalGibbs(i) | StateModel::BufferedGibbs { interaction: i, .. } => i,
                _ => {
                    return Err(Error::InvalidArgument(
                        "a target is required unless the reference is a Gibbs state".into(),
                    ))
                }
            };
            let mut total = interaction_pressure(&base.add(psi)?, ns)?;
            let mut alone = interaction_pressure(base, ns)?;
            extrapolate_limit(&mut total)?.limit - extrapolate_limit(&mut alone)?.limit
        }
    };
    let identity_residual = (limit - target).abs();
    seq.push_meta("target", target);
    seq.push_meta("identity_residual", identity_residual);
    Ok(PerturbedPressure {
        sequence: seq,
        target,
        identity_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoldenThompsonGap {
    pub p: f64,
    pub p_tilde: f64,
    pub gap: f64,
}

/// `p̃_n - p_n` with `f = id`.
pub fn golden_thompson_gap(phi: &StateModel, a: &ChainOperator, n: usize) -> Result<GoldenThompsonGap> {
    let p = log_partition_z(phi, a, &ScalarFunction::Identity, n)? / n as f64;
    let p_tilde = p_tilde_value(phi, a, n)?;
    Ok(GoldenThompsonGap {
        p,
        p_tilde,
        gap: p_tilde - p,
    })
}
