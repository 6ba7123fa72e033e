//! Brute-force and closed-form references.
//!
//! Nothing here calls into `pressure` or `variational`; `s_n(A)` is rebuilt
//! locally so the two code paths stay independent.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::{log_sum_exp, ChainOperator, Eigenvectors, Interval};
use crate::states::StateModel;

const STOCHASTIC_TOL: f64 = 1e-12;

/// Classical Markov chain with row-stochastic `P` and stationary `π`.
#[derive(Clone, Debug)]
pub struct ClassicalChain {
    p: DMatrix<f64>,
    pi: Vec<f64>,
}

impl ClassicalChain {
    pub fn new(p: DMatrix<f64>, pi: Vec<f64>) -> Result<Self> {
        let k = p.nrows();
        if p.ncols() != k || pi.len() != k || k == 0 {
            return Err(Error::InvalidModel("transition matrix must be square".into()));
        }
        for i in 0..k {
            let row: f64 = p.row(i).sum();
            if (row - 1.0).abs() > STOCHASTIC_TOL || p.row(i).iter().any(|&x| x < 0.0) {
                return Err(Error::InvalidModel(format!("row {i} is not a distribution")));
            }
        }
        for j in 0..k {
            let flow: f64 = (0..k).map(|i| pi[i] * p[(i, j)]).sum();
            if (flow - pi[j]).abs() > 1e-10 {
                return Err(Error::InvalidModel("π is not stationary".into()));
            }
        }
        Ok(Self { p, pi })
    }

    /// Two-state chain with flip probabilities `a` (0→1) and `b` (1→0).
    pub fn two_state(a: f64, b: f64) -> Result<Self> {
        let p = DMatrix::from_row_slice(2, 2, &[1.0 - a, a, b, 1.0 - b]);
        Self::new(p, vec![b / (a + b), a / (a + b)])
    }

    pub fn states(&self) -> usize {
        self.pi.len()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// `π_{i₁} Π P_{i_r i_{r+1}}` for every path of `len` states, first state most significant.
    pub fn path_probabilities(&self, len: usize) -> Vec<f64> {
        let k = self.states();
        let mut probs: Vec<(usize, f64)> = (0..k).map(|i| (i, self.pi[i])).collect();
        for _ in 1..len {
            probs = probs
                .iter()
                .flat_map(|&(last, w)| (0..k).map(move |j| (j, w * self.p[(last, j)])))
                .collect();
        }
        probs.into_iter().map(|(_, w)| w).collect()
    }

    /// Least `α` with `P_{ij} ≤ α π_j`, the factorization constant of the path measure.
    pub fn factorization_constant(&self) -> f64 {
        let k = self.states();
        let mut alpha: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                alpha = alpha.max(self.p[(i, j)] / self.pi[j]);
            }
        }
        alpha
    }
}

/// `log λ_max` of `[e^{-ε(a,b)}]` for a real symmetric energy matrix.
pub fn transfer_matrix_pressure(energy: &DMatrix<f64>) -> Result<f64> {
    let k = energy.nrows();
    if energy.ncols() != k || k == 0 {
        return Err(Error::InvalidArgument("energy matrix must be square".into()));
    }
    if (energy - energy.transpose()).amax() > 1e-14 || energy.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("energy matrix must be finite and symmetric".into()));
    }
    let shift = energy.min();
    let t = energy.map(|e| (shift - e).exp());
    let top = t.symmetric_eigenvalues().max();
    Ok(top.ln() - shift)
}

/// Pressure of the classical chain `H = -K Σ s_i s_{i+1} - h Σ s_i`, `s = ±1`.
pub fn ising_pressure(coupling: f64, field: f64) -> Result<f64> {
    let spins = [1.0, -1.0];
    let energy = DMatrix::from_fn(2, 2, |a, b| {
        -coupling * spins[a] * spins[b] - 0.5 * field * (spins[a] + spins[b])
    });
    transfer_matrix_pressure(&energy)
}

/// `Σ_i π_i Σ_j P_ij log(P_ij / Q_ij)`, `+∞` on a support violation.
pub fn markov_kl_rate(p: &DMatrix<f64>, q: &DMatrix<f64>, pi: &[f64]) -> Result<f64> {
    if p.shape() != q.shape() || p.nrows() != pi.len() {
        return Err(Error::DimensionMismatch {
            expected: p.nrows(),
            got: q.nrows(),
        });
    }
    let mut rate = 0.0;
    for i in 0..pi.len() {
        for j in 0..p.ncols() {
            let (pij, qij) = (p[(i, j)], q[(i, j)]);
            if pij > 0.0 && pi[i] > 0.0 {
                if qij <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                rate += pi[i] * pij * (pij / qij).ln();
            }
        }
    }
    Ok(rate.max(0.0))
}

/// `x ↦ ((1+x)/2) log(1+x) + ((1-x)/2) log(1-x)`, the fair-coin rate for `σ_z`.
pub fn binary_rate(x: f64) -> f64 {
    if x.abs() > 1.0 {
        return f64::INFINITY;
    }
    let term = |y: f64| if y > 0.0 { 0.5 * y * y.ln() } else { 0.0 };
    term(1.0 + x) + term(1.0 - x)
}

/// Translation average rebuilt independently of the pressure module.
fn translation_average(a: &ChainOperator, n: usize) -> Result<ChainOperator> {
    let len = a.window().len();
    if n < len {
        return Err(Error::InvalidArgument("n below observable length".into()));
    }
    let target = Interval::sites(n)?;
    let mut acc = ChainOperator::zeros(target, a.site_dim())?;
    for k in 0..=(n - len) as i64 {
        let shifted = a.embed_shift(target, 1 + k - a.window().start())?;
        acc = acc.add_scaled(&shifted, 1.0 / n as f64)?;
    }
    Ok(acc)
}

/// Discrete distribution of `s_n(A)` in a commuting state.
#[derive(Clone, Debug)]
pub struct SpectralMeasure {
    /// `(x, weight)` sorted by `x`.
    pub atoms: Vec<(f64, f64)>,
}

impl SpectralMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `log ∫ e^{-g(x)} dμ`.
    pub fn log_integral(&self, g: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .atoms
            .iter()
            .filter(|a| a.1 > 0.0)
            .map(|&(x, w)| w.ln() - g(x))
            .collect();
        log_sum_exp(&terms)
    }
}

/// Spectral measure of `s_n(A)` in `φ_n`; rejects non-commuting input.
pub fn commuting_spectral_measure(
    phi: &StateModel,
    a: &ChainOperator,
    n: usize,
) -> Result<SpectralMeasure> {
    let s = translation_average(a, n)?;
    let d = phi.local_density(n)?;
    let comm = s.commutator_norm(&d)?;
    if comm > 1e-10 {
        return Err(Error::NonCommuting(comm));
    }
    let spec = s.eigh()?;
    let weights: Vec<f64> = match &spec.eigenvectors {
        Eigenvectors::Permutation(p) => p.iter().map(|&i| d.entry(i, i).re).collect(),
        Eigenvectors::Dense(u) => {
            let du = d.to_dense() * u;
            (0..u.ncols())
                .map(|k| u.column(k).dotc(&du.column(k)).re)
                .collect()
        }
    };
    let scale = spec
        .eigenvalues
        .iter()
        .fold(1.0f64, |m, x| m.max(x.abs()));
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for (&x, &w) in spec.eigenvalues.iter().zip(&weights) {
        match atoms.last_mut() {
            Some(last) if (x - last.0).abs() <= 1e-10 * scale => last.1 += w,
            _ => atoms.push((x, w)),
        }
    }
    Ok(SpectralMeasure { atoms })
}

#[derive(Clone, Copy, Debug)]
pub struct VaradhanCheck {
    /// `(1/n) log ∫ e^{-n f} dμ_n`.
    pub laplace: f64,
    /// `max_x {-f(x) - I(x)}` over the rate grid.
    pub variational: f64,
    pub gap: f64,
}

/// Compares the Laplace integral of `μ_n` with the variational value from a rate grid.
pub fn varadhan_check(
    measure: &SpectralMeasure,
    n: usize,
    f: impl Fn(f64) -> f64,
    x: &[f64],
    rate: &[f64],
) -> Result<VaradhanCheck> {
    if x.is_empty() || x.len() != rate.len() {
        return Err(Error::EmptyGrid);
    }
    let laplace = measure.log_integral(|y| n as f64 * f(y)) / n as f64;
    let variational = x
        .iter()
        .zip(rate)
        .filter(|(_, r)| r.is_finite())
        .map(|(&xv, &r)| -f(xv) - r)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(VaradhanCheck {
        laplace,
        variational,
        gap: laplace - variational,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{pauli::sigma_z, site_operator};

    #[test]
    fn transfer_matrix_examples() {
        assert!((transfer_matrix_pressure(&DMatrix::zeros(2, 2)).unwrap() - 2f64.ln()).abs() < 1e-15);
        let v = ising_pressure(0.5, 0.0).unwrap();
        assert!((v - (2.0 * 0.5f64.cosh()).ln()).abs() < 1e-14);
        assert!((v - 0.813262).abs() < 1e-6);
        let one = DMatrix::from_element(1, 1, 0.37);
        assert!((transfer_matrix_pressure(&one).unwrap() + 0.37).abs() < 1e-15);
    }

    #[test]
    fn field_pressure_matches_closed_form() {
        let (k, h) = (0.4f64, 0.3f64);
        let lambda = k.exp() * h.cosh() + (k.exp().powi(2) * h.sinh().powi(2) + (-2.0 * k).exp()).sqrt();
        assert!((ising_pressure(k, h).unwrap() - lambda.ln()).abs() < 1e-14);
    }

    #[test]
    fn kl_rate_examples() {
        let p = DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.2, 0.8]);
        assert_eq!(markov_kl_rate(&p, &p, &[0.4, 0.6]).unwrap(), 0.0);
        let id = DMatrix::identity(2, 2);
        let coin = DMatrix::from_element(2, 2, 0.5);
        assert!((markov_kl_rate(&id, &coin, &[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(markov_kl_rate(&coin, &id, &[0.5, 0.5]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn chain_paths_and_alpha() {
        let c = ClassicalChain::two_state(0.2, 0.6).unwrap();
        let paths = c.path_probabilities(3);
        assert_eq!(paths.len(), 8);
        assert!((paths.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((c.factorization_constant() - 0.4 / 0.25).abs() < 1e-15);
        assert!(ClassicalChain::new(DMatrix::from_element(2, 2, 0.6), vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn tracial_binomial_measure() {
        let phi = StateModel::tracial(2).unwrap();
        let a = site_operator(1, sigma_z()).unwrap();
        let mu = commuting_spectral_measure(&phi, &a, 2).unwrap();
        assert_eq!(mu.atoms.len(), 3);
        for ((x, w), (ex, ew)) in mu.atoms.iter().zip([(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]) {
            assert!((x - ex).abs() < 1e-15 && (w - ew).abs() < 1e-15);
        }
        let mu1 = commuting_spectral_measure(&phi, &a, 1).unwrap();
        assert_eq!(mu1.atoms, vec![(-1.0, 0.5), (1.0, 0.5)]);
        assert!((mu.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_commuting_measure_is_rejected() {
        let rho = crate::operators::real_diag(&[0.5, 0.5]) + crate::operators::pauli::sigma_x() * crate::C64::new(0.2, 0.0);
        let phi = StateModel::product(site_operator(1, rho).unwrap()).unwrap();
        let a = site_operator(1, sigma_z()).unwrap();
        assert!(matches!(
            commuting_spectral_measure(&phi, &a, 2),
            Err(Error::NonCommuting(_))
        ));
    }

    #[test]
    fn binary_rate_values() {
        assert_eq!(binary_rate(0.0), 0.0);
        assert!((binary_rate(0.5) - 0.130812).abs() < 1e-6);
        assert!((binary_rate(1.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(binary_rate(1.1), f64::INFINITY);
    }
}
