//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use fed_core::operators::{real_diag, site_operator};
use fed_core::states::{QmsBlock, QmsData, StateModel};
use fed_core::{ChainOperator, Interval, C64};
use nalgebra::DMatrix;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn window(a: i64, b: i64) -> Interval {
    Interval::new(a, b).unwrap()
}

pub fn product_state(diag: &[f64]) -> StateModel {
    StateModel::product(site_operator(1, real_diag(diag)).unwrap()).unwrap()
}

pub fn one_site(m: DMatrix<C64>) -> ChainOperator {
    site_operator(1, m).unwrap()
}

/// Two blocks `(d, m) = (1, 2)` and `(1, 1)`: site dimension 3 with a
/// non-commutative right factor in the first block.
pub fn quantum_qms() -> QmsData {
    let t00 = DMatrix::from_row_slice(2, 2, &[c(0.30, 0.0), c(0.05, 0.04), c(0.05, -0.04), c(0.25, 0.0)]);
    let t01 = DMatrix::from_row_slice(2, 2, &[c(0.25, 0.0), c(-0.03, 0.02), c(-0.03, -0.02), c(0.20, 0.0)]);
    let t10 = DMatrix::from_element(1, 1, c(0.35, 0.0));
    let t11 = DMatrix::from_element(1, 1, c(0.65, 0.0));
    let blocks = vec![QmsBlock::new(1, 2), QmsBlock::new(1, 1)];
    QmsData::with_stationary_weights(blocks, vec![vec![t00, t01], vec![t10, t11]]).unwrap()
}

/// Blocks `(2, 1)` and `(1, 2)`: site dimension 4, both factors of the
/// first block non-trivial on the left.
pub fn wide_qms() -> QmsData {
    let t00 = DMatrix::from_row_slice(2, 2, &[c(0.35, 0.0), c(0.05, -0.05), c(0.05, 0.05), c(0.25, 0.0)]);
    let t01 = DMatrix::from_element(1, 1, c(0.4, 0.0));
    let t10 = DMatrix::from_row_slice(4, 4, &[
        c(0.12, 0.0), c(0.01, 0.0), c(0.0, 0.01), c(0.0, 0.0),
        c(0.01, 0.0), c(0.10, 0.0), c(0.0, 0.0), c(0.01, 0.0),
        c(0.0, -0.01), c(0.0, 0.0), c(0.14, 0.0), c(0.0, 0.0),
        c(0.0, 0.0), c(0.01, 0.0), c(0.0, 0.0), c(0.09, 0.0),
    ]);
    let t11 = DMatrix::from_row_slice(2, 2, &[c(0.30, 0.0), c(0.02, 0.03), c(0.02, -0.03), c(0.25, 0.0)]);
    let blocks = vec![QmsBlock::new(2, 1), QmsBlock::new(1, 2)];
    QmsData::with_stationary_weights(blocks, vec![vec![t00, t01], vec![t10, t11]]).unwrap()
}

/// Classical chain as a QMS with scalar blocks.
pub fn classical_qms(p: &DMatrix<f64>) -> QmsData {
    let pi = fed_core::states::stationary_distribution(p).unwrap();
    QmsData::classical(p, &pi).unwrap()
}
