use crate::error::{Error, Result};
use crate::operators::{ChainOperator, Eigenvectors, Interval, SpectralDecomposition, SUPPORT_CUTOFF};
use crate::pressure::PressureSequence;

use super::StateModel;

/// Weight of the first density outside the support of the second above
/// which relative entropy is reported as infinite.
pub const LEAKAGE_TOL: f64 = 1e-10;

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Von Neumann entropy `-Tr D log D`.
pub fn entropy(d: &ChainOperator) -> Result<f64> {
    let values = d.eigenvalues()?;
    Ok(-values.iter().map(|&x| xlogx(x)).sum::<f64>())
}

/// Diagonal of `d` in the eigenbasis of a spectral decomposition.
fn diagonal_in_basis(d: &ChainOperator, vectors: &Eigenvectors) -> Vec<f64> {
    match vectors {
        Eigenvectors::Permutation(p) => p.iter().map(|&i| d.entry(i, i).re).collect(),
        Eigenvectors::Dense(u) => {
            let du = d.to_dense() * u;
            (0..u.ncols())
                .map(|k| u.column(k).dotc(&du.column(k)).re)
                .collect()
        }
    }
}

/// `S(D1, D2) = Tr D1 (log D1 - log D2)`, `+∞` on a support violation.
pub fn relative_entropy(d1: &ChainOperator, d2: &ChainOperator) -> Result<f64> {
    Reference::new(d2)?.relative_entropy(d1)
}

/// Second argument of `S(·, D2)` with its spectral decomposition cached,
/// for repeated evaluation against a fixed reference.
#[derive(Clone, Debug)]
pub struct Reference {
    window: Interval,
    spectrum: SpectralDecomposition,
}

impl Reference {
    pub fn new(d2: &ChainOperator) -> Result<Self> {
        let spectrum = d2.eigh()?;
        if spectrum.eigenvalues.last().copied().unwrap_or(0.0) <= 0.0 {
            return Err(Error::ZeroOperator);
        }
        Ok(Self {
            window: d2.window(),
            spectrum,
        })
    }

    pub fn relative_entropy(&self, d1: &ChainOperator) -> Result<f64> {
        if d1.window() != self.window {
            return Err(Error::IntervalMismatch(format!("{} vs {}", d1.window(), self.window)));
        }
        let first = -entropy(d1)?;
        let values = &self.spectrum.eigenvalues;
        let max = values.last().copied().unwrap_or(0.0);
        let weights = diagonal_in_basis(d1, &self.spectrum.eigenvectors);
        let mut leak = 0.0;
        let mut cross = 0.0;
        for (w, mu) in weights.iter().zip(values) {
            if *mu > SUPPORT_CUTOFF * max {
                cross += w * mu.ln();
            } else {
                leak += w;
            }
        }
        if leak > LEAKAGE_TOL {
            return Ok(f64::INFINITY);
        }
        Ok((first - cross).max(0.0))
    }
}

/// `(1/n) S(ω_n, φ_n)` over `ns`.
pub fn mean_relative_entropy_estimate(
    omega: &StateModel,
    phi: &StateModel,
    ns: &[usize],
) -> Result<PressureSequence> {
    let mut seq = PressureSequence::new("mean relative entropy")
        .with_meta("omega", omega.describe())
        .with_meta("phi", phi.describe());
    for &n in ns {
        let s = relative_entropy(&omega.local_density(n)?, &phi.local_density(n)?)?;
        if !s.is_finite() {
            return Err(Error::InfiniteEntropy { n });
        }
        seq.push(n, s / n as f64)?;
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{real_diag, site_operator};
    use crate::random;
    use crate::Interval;

    fn diag(v: &[f64]) -> ChainOperator {
        site_operator(1, real_diag(v)).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let tracial = ChainOperator::tracial(Interval::sites(2).unwrap(), 2).unwrap();
        assert!((entropy(&tracial).unwrap() - 4f64.ln()).abs() < 1e-14);
        assert_eq!(entropy(&diag(&[1.0, 0.0])).unwrap(), 0.0);
        let expected = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((entropy(&diag(&[0.75, 0.25])).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.562335).abs() < 1e-6);
    }

    #[test]
    fn relative_entropy_examples() {
        let a = diag(&[0.5, 0.5]);
        assert_eq!(relative_entropy(&a, &a).unwrap(), 0.0);
        assert_eq!(
            relative_entropy(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])).unwrap(),
            f64::INFINITY
        );
        let s = relative_entropy(&a, &diag(&[0.75, 0.25])).unwrap();
        let expected = 0.5 * (2.0f64 / 3.0).ln() + 0.5 * 2f64.ln();
        assert!((s - expected).abs() < 1e-15);
        assert!((s - 0.143841).abs() < 1e-6);
    }

    #[test]
    fn relative_entropy_of_random_states_is_positive() {
        let mut rng = random::seeded(3);
        let w = Interval::sites(2).unwrap();
        for _ in 0..10 {
            let a = random::density_operator(&mut rng, w, 2).unwrap();
            let b = random::density_operator(&mut rng, w, 2).unwrap();
            assert!(relative_entropy(&a, &b).unwrap() > 0.0);
            assert!(relative_entropy(&a, &a).unwrap() < 1e-12);
        }
    }
}
