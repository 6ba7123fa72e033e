//! Seeded random fixtures.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::operators::{chain_dimension, ChainOperator, Interval, C64};

pub type FixtureRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> FixtureRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_entry<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Hermitian matrix `(X + X†)/2 · scale` with uniform complex entries.
pub fn hermitian_matrix<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> DMatrix<C64> {
    let x = DMatrix::from_fn(dim, dim, |_, _| complex_entry(rng));
    (&x + x.adjoint()) * C64::new(0.5 * scale, 0.0)
}

/// Full-rank density `G G† / Tr(G G†)`.
pub fn density_matrix<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| complex_entry(rng));
    let p = &g * g.adjoint();
    let tr = p.trace();
    p / tr
}

/// Real diagonal density with weights bounded away from zero.
pub fn diagonal_density<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

pub fn hermitian_operator<R: Rng>(
    rng: &mut R,
    window: Interval,
    site_dim: usize,
    scale: f64,
) -> Result<ChainOperator> {
    let dim = chain_dimension(site_dim, window.len())?;
    ChainOperator::hermitian(window, site_dim, hermitian_matrix(rng, dim, scale))
}

pub fn density_operator<R: Rng>(
    rng: &mut R,
    window: Interval,
    site_dim: usize,
) -> Result<ChainOperator> {
    let dim = chain_dimension(site_dim, window.len())?;
    ChainOperator::hermitian(window, site_dim, density_matrix(rng, dim))
}
