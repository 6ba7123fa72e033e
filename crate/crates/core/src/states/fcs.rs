//! Finitely correlated states given by a triple `(B, E, ρ)`.
//!
//! `B` is a block-diagonal subalgebra of `M_D`. The map `E: M_d ⊗ M_D → M_D`
//! is stored as a `D² × (dD)²` matrix acting on row-major vectorizations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operators::{chain_dimension, eigh_dense, ChainOperator, Interval, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const VALIDATION_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct FcsTriple {
    site_dim: usize,
    blocks: Vec<usize>,
    map: DMatrix<C64>,
    rho: DMatrix<C64>,
}

impl FcsTriple {
    pub fn new(
        site_dim: usize,
        blocks: Vec<usize>,
        map: DMatrix<C64>,
        rho: DMatrix<C64>,
    ) -> Result<Self> {
        let dm: usize = blocks.iter().sum();
        let big = site_dim * dm;
        if map.nrows() != dm * dm || map.ncols() != big * big {
            return Err(Error::InvalidModel(format!(
                "map must be {}x{}, got {}x{}",
                dm * dm,
                big * big,
                map.nrows(),
                map.ncols()
            )));
        }
        if rho.nrows() != dm || rho.ncols() != dm {
            return Err(Error::InvalidModel("memory state has the wrong dimension".into()));
        }
        let f = Self {
            site_dim,
            blocks,
            map,
            rho,
        };
        f.validate()?;
        Ok(f)
    }

    /// Builds `E(X) = Σ_k V_k† X V_k` from Kraus operators `V_k: C^D → C^{dD}`.
    pub fn from_kraus(
        site_dim: usize,
        blocks: Vec<usize>,
        kraus: &[DMatrix<C64>],
        rho: DMatrix<C64>,
    ) -> Result<Self> {
        let map = kraus_superoperator(site_dim, blocks.iter().sum(), kraus)?;
        Self::new(site_dim, blocks, map, rho)
    }

    /// Like [`FcsTriple::from_kraus`] with `ρ` solved from stationarity.
    pub fn from_kraus_stationary(
        site_dim: usize,
        blocks: Vec<usize>,
        kraus: &[DMatrix<C64>],
    ) -> Result<Self> {
        let dm: usize = blocks.iter().sum();
        let map = kraus_superoperator(site_dim, dm, kraus)?;
        let rho = stationary_memory_state(site_dim, dm, &map)?;
        Self::new(site_dim, blocks, map, rho)
    }

    /// Trivial memory `B = C` with `E(A ⊗ b) = Tr(ρ₀ A) b`.
    pub fn product(rho0: &DMatrix<C64>) -> Result<Self> {
        let d = rho0.nrows();
        let map = DMatrix::from_fn(1, d * d, |_, c| rho0[(c % d, c / d)]);
        Self::new(d, vec![1], map, DMatrix::from_element(1, 1, C64::new(1.0, 0.0)))
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn memory_dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn map(&self) -> &DMatrix<C64> {
        &self.map
    }

    pub fn memory_state(&self) -> &DMatrix<C64> {
        &self.rho
    }

    /// `E(X)` for `X ∈ M_{dD}`.
    pub fn apply(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let dm = self.memory_dim();
        let big = self.site_dim * dm;
        let v = DVector::from_fn(big * big, |k, _| x[(k / big, k % big)]);
        let out = &self.map * v;
        DMatrix::from_fn(dm, dm, |i, j| out[i * dm + j])
    }

    /// Matrix of `b ↦ E(E_ab ⊗ b)` on row-major vectorizations of `M_D`.
    fn unit_map(&self, a: usize, b: usize) -> DMatrix<C64> {
        let dm = self.memory_dim();
        let big = self.site_dim * dm;
        DMatrix::from_fn(dm * dm, dm * dm, |o, pq| {
            let (p, q) = (pq / dm, pq % dm);
            self.map[(o, (a * dm + p) * big + b * dm + q)]
        })
    }

    /// Choi matrix `Σ E_rc ⊗ E(E_rc)`.
    pub fn choi_matrix(&self) -> DMatrix<C64> {
        let dm = self.memory_dim();
        let big = self.site_dim * dm;
        let mut choi = DMatrix::from_element(big * dm, big * dm, ZERO);
        for r in 0..big {
            for c in 0..big {
                let col = r * big + c;
                for p in 0..dm {
                    for q in 0..dm {
                        choi[(r * dm + p, c * dm + q)] = self.map[(p * dm + q, col)];
                    }
                }
            }
        }
        choi
    }

    fn block_of(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(i, &b)| std::iter::repeat_n(i, b))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let dm = self.memory_dim();
        let big = self.site_dim * dm;
        let choi = self.choi_matrix();
        let asym = (&choi - choi.adjoint()).camax();
        if asym > VALIDATION_TOL {
            return Err(Error::InvalidModel(format!(
                "map is not Hermiticity preserving (Choi asymmetry {asym:e})"
            )));
        }
        let min = eigh_dense(&((&choi + choi.adjoint()) * C64::new(0.5, 0.0))).values[0];
        if min < -VALIDATION_TOL {
            return Err(Error::InvalidModel(format!(
                "map is not completely positive (Choi eigenvalue {min:e})"
            )));
        }
        let unit = self.apply(&DMatrix::identity(big, big));
        let err = (unit - DMatrix::<C64>::identity(dm, dm)).camax();
        if err > VALIDATION_TOL {
            return Err(Error::InvalidModel(format!("map is not unital (error {err:e})")));
        }
        let block = self.block_of();
        let rho_ok = (0..dm).all(|i| (0..dm).all(|j| block[i] == block[j] || self.rho[(i, j)] == ZERO));
        if !rho_ok {
            return Err(Error::InvalidModel("memory state is not block diagonal".into()));
        }
        let rho_h = ChainOperator::hermitian(Interval::new(0, 0)?, dm, self.rho.clone())
            .map_err(|_| Error::InvalidModel("memory state is not Hermitian".into()))?;
        let eig = rho_h.eigenvalues()?;
        if eig[0] < -VALIDATION_TOL || (rho_h.trace().re - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::InvalidModel("memory state is not a density".into()));
        }
        // ρ(E(1 ⊗ b)) = ρ(b) on matrix units inside the blocks.
        let transfer = self.transfer_matrix();
        let r0 = self.rho_functional();
        let lhs = r0.transpose() * &transfer;
        for p in 0..dm {
            for q in 0..dm {
                if block[p] != block[q] {
                    continue;
                }
                let k = p * dm + q;
                if (lhs[k] - r0[k]).norm() > VALIDATION_TOL {
                    return Err(Error::InvalidModel(format!(
                        "memory state is not stationary (unit {p},{q})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Matrix of `b ↦ E(1 ⊗ b)`.
    pub fn transfer_matrix(&self) -> DMatrix<C64> {
        let dm = self.memory_dim();
        let mut t = DMatrix::from_element(dm * dm, dm * dm, ZERO);
        for a in 0..self.site_dim {
            t += self.unit_map(a, a);
        }
        t
    }

    /// Coefficients `r` with `ρ(x) = Σ r[(a,b)] x[a,b]`.
    fn rho_functional(&self) -> DVector<C64> {
        let dm = self.memory_dim();
        DVector::from_fn(dm * dm, |k, _| self.rho[(k % dm, k / dm)])
    }

    /// Density of the restriction to `[1, n]`, assembled from the values on matrix units.
    pub fn density(&self, n: usize) -> Result<ChainOperator> {
        let d = self.site_dim;
        let dim = chain_dimension(d, n)?;
        let dm = self.memory_dim();
        let units: Vec<DMatrix<C64>> = (0..d * d).map(|e| self.unit_map(e / d, e % d)).collect();
        let unit_trace: Vec<usize> = (0..dm).map(|a| a * dm + a).collect();
        let mut dens = DMatrix::from_element(dim, dim, ZERO);

        // Depth-first over sites; the leftmost site is the outermost map.
        struct Frame<'a> {
            units: &'a [DMatrix<C64>],
            unit_trace: &'a [usize],
            d: usize,
            n: usize,
        }
        fn walk(
            f: &Frame<'_>,
            depth: usize,
            r: &nalgebra::RowDVector<C64>,
            row: usize,
            col: usize,
            dens: &mut DMatrix<C64>,
        ) {
            if depth == f.n {
                let v: C64 = f.unit_trace.iter().map(|&k| r[k]).sum();
                // φ(E_{IJ}) = D[J, I]
                dens[(col, row)] = v;
                return;
            }
            for e in 0..f.d * f.d {
                let next = r * &f.units[e];
                if next.iter().all(|z| *z == ZERO) {
                    continue;
                }
                walk(f, depth + 1, &next, row * f.d + e / f.d, col * f.d + e % f.d, dens);
            }
        }
        let frame = Frame {
            units: &units,
            unit_trace: &unit_trace,
            d,
            n,
        };
        let r0 = self.rho_functional().transpose();
        walk(&frame, 0, &r0, 0, 0, &mut dens);
        ChainOperator::hermitian(Interval::sites(n)?, d, dens)
    }
}

fn kraus_superoperator(site_dim: usize, dm: usize, kraus: &[DMatrix<C64>]) -> Result<DMatrix<C64>> {
    let big = site_dim * dm;
    for v in kraus {
        if v.nrows() != big || v.ncols() != dm {
            return Err(Error::InvalidModel(format!(
                "Kraus operators must be {big}x{dm}"
            )));
        }
    }
    // E(E_rc)[p,q] = Σ_k conj(V_k[r,p]) V_k[c,q]
    Ok(DMatrix::from_fn(dm * dm, big * big, |o, col| {
        let (p, q) = (o / dm, o % dm);
        let (r, c) = (col / big, col % big);
        kraus.iter().map(|v| v[(r, p)].conj() * v[(c, q)]).sum()
    }))
}

/// Solves `ρ(E(1 ⊗ b)) = ρ(b)`, `Tr ρ = 1` by least squares.
fn stationary_memory_state(site_dim: usize, dm: usize, map: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let big = site_dim * dm;
    let mut transfer = DMatrix::from_element(dm * dm, dm * dm, ZERO);
    for a in 0..site_dim {
        transfer += DMatrix::from_fn(dm * dm, dm * dm, |o, pq| {
            let (p, q) = (pq / dm, pq % dm);
            map[(o, (a * dm + p) * big + a * dm + q)]
        });
    }
    let k = dm * dm;
    let mut system = DMatrix::from_element(k + 1, k, ZERO);
    let tt = transfer.transpose() - DMatrix::identity(k, k);
    system.view_mut((0, 0), (k, k)).copy_from(&tt);
    for a in 0..dm {
        system[(k, a * dm + a)] = C64::new(1.0, 0.0);
    }
    let mut rhs = DVector::from_element(k + 1, ZERO);
    rhs[k] = C64::new(1.0, 0.0);
    let r = system
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidModel(e.to_string()))?;
    let mut rho = DMatrix::from_fn(dm, dm, |i, j| r[j * dm + i]);
    let adj = rho.adjoint();
    rho = (rho + adj) * C64::new(0.5, 0.0);
    Ok(rho)
}

/// Least `α ≥ 1` with `D_joint ≤ α D_left ⊗ D_right`; `+∞` when the joint
/// density has weight outside the support of the product.
pub fn upper_factorization_constant(
    joint: &ChainOperator,
    left: &ChainOperator,
    right: &ChainOperator,
) -> Result<f64> {
    let product = left.kron(right)?;
    if product.window() != joint.window() {
        return Err(Error::IntervalMismatch(format!(
            "{} vs {}",
            joint.window(),
            product.window()
        )));
    }
    let cutoff = crate::operators::SUPPORT_CUTOFF;
    if joint.is_diagonal() && product.is_diagonal() {
        let (j, p) = (joint.diagonal(), product.diagonal());
        let pmax = p.iter().fold(0.0f64, |m, z| m.max(z.re));
        let mut alpha: f64 = 1.0;
        for (a, b) in j.iter().zip(p.iter()) {
            if b.re > cutoff * pmax {
                alpha = alpha.max(a.re / b.re);
            } else if a.re > VALIDATION_TOL {
                return Ok(f64::INFINITY);
            }
        }
        return Ok(alpha);
    }
    let spec = product.eigh()?;
    let max = spec.eigenvalues.last().copied().unwrap_or(0.0);
    let u = spec.unitary();
    let inner = u.adjoint() * joint.to_dense() * &u;
    let support: Vec<usize> = (0..spec.dim())
        .filter(|&k| spec.eigenvalues[k] > cutoff * max)
        .collect();
    let leak: f64 = (0..spec.dim())
        .filter(|k| !support.contains(k))
        .map(|k| inner[(k, k)].re)
        .sum();
    if leak > VALIDATION_TOL {
        return Ok(f64::INFINITY);
    }
    let s = support.len();
    let scaled = DMatrix::from_fn(s, s, |a, b| {
        let (ka, kb) = (support[a], support[b]);
        inner[(ka, kb)] / (spec.eigenvalues[ka] * spec.eigenvalues[kb]).sqrt()
    });
    let top = eigh_dense(&((&scaled + scaled.adjoint()) * C64::new(0.5, 0.0)))
        .values
        .last()
        .copied()
        .unwrap_or(1.0);
    Ok(top.max(1.0))
}

/// Upper factorization constant of an FCS at the split `[1,n] | [n+1,2n]`.
pub fn fcs_alpha(f: &FcsTriple, n: usize) -> Result<f64> {
    let joint = f.density(2 * n)?;
    let half = f.density(n)?;
    let right = half.translated(n as i64);
    upper_factorization_constant(&joint, &half, &right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::real_diag;

    #[test]
    fn trivial_memory_gives_product_density() {
        let rho0 = real_diag(&[0.3, 0.7]);
        let f = FcsTriple::product(&rho0).unwrap();
        let d3 = f.density(3).unwrap();
        let expected = rho0.kronecker(&rho0).kronecker(&rho0);
        assert!((d3.to_dense() - expected).camax() < 1e-15);
        assert!((fcs_alpha(&f, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_unital_map() {
        let rho0 = real_diag(&[0.3, 0.6]);
        let map = DMatrix::from_fn(1, 4, |_, c| rho0[(c % 2, c / 2)]);
        assert!(matches!(
            FcsTriple::new(2, vec![1], map, DMatrix::identity(1, 1)),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn kraus_construction_is_compatible() {
        // A two-dimensional memory with an amplitude-damping flavoured isometry.
        let (d, dm) = (2usize, 2usize);
        let g = 0.35f64;
        let mut v = DMatrix::from_element(d * dm, dm, ZERO);
        // V: C^2 → C^2 ⊗ C^2, columns orthonormal so that E is unital.
        v[(0, 0)] = C64::new((1.0 - g).sqrt(), 0.0);
        v[(3, 0)] = C64::new(g.sqrt(), 0.0);
        v[(1, 1)] = C64::new(0.6, 0.0);
        v[(2, 1)] = C64::new(0.0, 0.8);
        let f = FcsTriple::from_kraus_stationary(d, vec![dm], &[v]).unwrap();
        for n in 1..5 {
            let dn = f.density(n).unwrap();
            assert!((dn.trace().re - 1.0).abs() < 1e-12);
            let next = f.density(n + 1).unwrap();
            let left = next.partial_trace(Interval::sites(n).unwrap()).unwrap();
            assert!((left.to_dense() - dn.to_dense()).camax() < 1e-12);
            let right = next
                .partial_trace(Interval::new(2, n as i64 + 1).unwrap())
                .unwrap();
            assert!((right.to_dense() - dn.to_dense()).camax() < 1e-12);
            assert!(dn.eigenvalues().unwrap()[0] > -1e-12);
        }
        assert!(fcs_alpha(&f, 1).unwrap() >= 1.0);
    }
}
