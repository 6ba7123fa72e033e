//! Quantum Markov states given by block data `{(d_i, m_i)}`, transition
//! densities `T_ij` on `M_{m_i} ⊗ M_{d_j}` and weights on the blocks.
//!
//! The site space is `⊕_i C^{d_i} ⊗ C^{m_i}`: block `i` starts at offset
//! `o_i` and its internal index is `a·m_i + b` with `a < d_i`, `b < m_i`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operators::{
    chain_dimension, eigh_dense, ChainOperator, Interval, C64, DENSE_DIMENSION_CAP,
};

use super::fcs::FcsTriple;

const ZERO: C64 = C64::new(0.0, 0.0);
const VALIDATION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QmsBlock {
    pub d: usize,
    pub m: usize,
}

impl QmsBlock {
    pub fn new(d: usize, m: usize) -> Self {
        Self { d, m }
    }

    fn size(&self) -> usize {
        self.d * self.m
    }
}

#[derive(Clone, Debug)]
pub struct QmsData {
    blocks: Vec<QmsBlock>,
    transitions: Vec<Vec<DMatrix<C64>>>,
    weights: Vec<f64>,
    /// `ρ_j = Σ_i π_i Tr_{m_i} T_ij` on `M_{d_j}`.
    heads: Vec<DMatrix<C64>>,
    /// `σ_i = Σ_j Tr_{d_j} T_ij` on `M_{m_i}`.
    tails: Vec<DMatrix<C64>>,
    diagonal: bool,
}

fn offsets(sizes: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut acc = 0;
    sizes
        .map(|s| {
            let o = acc;
            acc += s;
            o
        })
        .collect()
}

/// Trace over the first factor of `M_p ⊗ M_q`.
fn trace_first(t: &DMatrix<C64>, p: usize, q: usize) -> DMatrix<C64> {
    DMatrix::from_fn(q, q, |a, b| (0..p).map(|k| t[(k * q + a, k * q + b)]).sum())
}

/// Trace over the second factor of `M_p ⊗ M_q`.
fn trace_second(t: &DMatrix<C64>, p: usize, q: usize) -> DMatrix<C64> {
    DMatrix::from_fn(p, p, |a, b| (0..q).map(|k| t[(a * q + k, b * q + k)]).sum())
}

fn is_exactly_diagonal(m: &DMatrix<C64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == ZERO))
}

/// Every index path of length `len` over `k` blocks, first block most significant.
fn paths(k: usize, len: usize) -> Vec<Vec<usize>> {
    let count = k.pow(len as u32);
    (0..count)
        .map(|mut x| {
            let mut p = vec![0; len];
            for slot in (0..len).rev() {
                p[slot] = x % k;
                x /= k;
            }
            p
        })
        .collect()
}

/// All indices `Σ_s (offset_s + local_s) · stride_s` in mixed-radix order.
fn scatter(ranges: &[(usize, usize)], strides: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for (&(offset, size), &stride) in ranges.iter().zip(strides) {
        let mut next = Vec::with_capacity(out.len() * size);
        for &base in &out {
            for l in 0..size {
                next.push(base + (offset + l) * stride);
            }
        }
        out = next;
    }
    out
}

fn kron_all(factors: &[&DMatrix<C64>]) -> DMatrix<C64> {
    let mut acc = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for f in factors {
        acc = acc.kronecker(*f);
    }
    acc
}

impl QmsData {
    pub fn new(
        blocks: Vec<QmsBlock>,
        transitions: Vec<Vec<DMatrix<C64>>>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let k = blocks.len();
        if k == 0 || transitions.len() != k || weights.len() != k {
            return Err(Error::InvalidModel("block table sizes disagree".into()));
        }
        for (i, row) in transitions.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidModel(format!("transition row {i} has wrong length")));
            }
            for (j, t) in row.iter().enumerate() {
                let dim = blocks[i].m * blocks[j].d;
                if t.nrows() != dim || t.ncols() != dim {
                    return Err(Error::InvalidModel(format!(
                        "T[{i}][{j}] must be {dim}x{dim}"
                    )));
                }
                let asym = (t - t.adjoint()).camax();
                if asym > VALIDATION_TOL {
                    return Err(Error::InvalidModel(format!("T[{i}][{j}] is not Hermitian")));
                }
                let min = eigh_dense(&((t + t.adjoint()) * C64::new(0.5, 0.0))).values[0];
                if min <= 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "T[{i}][{j}] is not strictly positive (min eigenvalue {min:e})"
                    )));
                }
            }
        }
        if weights.iter().any(|&w| w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel("block weights must be a probability vector".into()));
        }
        let heads = (0..k)
            .map(|j| {
                let mut acc = DMatrix::from_element(blocks[j].d, blocks[j].d, ZERO);
                for i in 0..k {
                    acc += trace_first(&transitions[i][j], blocks[i].m, blocks[j].d)
                        * C64::new(weights[i], 0.0);
                }
                acc
            })
            .collect::<Vec<_>>();
        let tails = (0..k)
            .map(|i| {
                let mut acc = DMatrix::from_element(blocks[i].m, blocks[i].m, ZERO);
                for j in 0..k {
                    acc += trace_second(&transitions[i][j], blocks[i].m, blocks[j].d);
                }
                acc
            })
            .collect::<Vec<_>>();
        let diagonal = transitions.iter().flatten().all(is_exactly_diagonal);
        let q = Self {
            blocks,
            transitions,
            weights,
            heads,
            tails,
            diagonal,
        };
        q.validate()?;
        Ok(q)
    }

    /// Weights solved from `πP = π` with `P_ij = Tr T_ij`.
    pub fn with_stationary_weights(
        blocks: Vec<QmsBlock>,
        transitions: Vec<Vec<DMatrix<C64>>>,
    ) -> Result<Self> {
        let k = blocks.len();
        let p = DMatrix::from_fn(k, k, |i, j| transitions[i][j].trace().re);
        let weights = stationary_distribution(&p)?;
        Self::new(blocks, transitions, weights)
    }

    /// Classical chain with scalar blocks `T_ij = P_ij`.
    pub fn classical(p: &DMatrix<f64>, pi: &[f64]) -> Result<Self> {
        let k = p.nrows();
        let blocks = vec![QmsBlock::new(1, 1); k];
        let transitions = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| DMatrix::from_element(1, 1, C64::new(p[(i, j)], 0.0)))
                    .collect()
            })
            .collect();
        Self::new(blocks, transitions, pi.to_vec())
    }

    fn validate(&self) -> Result<()> {
        for n in 1..=4 {
            if chain_dimension(self.site_dim(), n + 1).is_err() {
                break;
            }
            let dn = self.local_density(n)?;
            if (dn.trace().re - 1.0).abs() > VALIDATION_TOL {
                return Err(Error::InvalidModel(format!(
                    "density on [1,{n}] has trace {}",
                    dn.trace().re
                )));
            }
            if dn.eigenvalues()?[0] < -VALIDATION_TOL {
                return Err(Error::InvalidModel(format!("density on [1,{n}] is not positive")));
            }
            let next = self.local_density(n + 1)?;
            let left = next.partial_trace(Interval::sites(n)?)?;
            let right = next.partial_trace(Interval::new(2, n as i64 + 1)?)?;
            let err = left.sub(&dn)?.max_abs().max(right.translated(-1).sub(&dn)?.max_abs());
            if err > VALIDATION_TOL {
                return Err(Error::InvalidModel(format!(
                    "densities on [1,{n}] and [1,{}] are not compatible (error {err:e})",
                    n + 1
                )));
            }
        }
        Ok(())
    }

    pub fn blocks(&self) -> &[QmsBlock] {
        &self.blocks
    }

    pub fn transition(&self, i: usize, j: usize) -> &DMatrix<C64> {
        &self.transitions[i][j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn site_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.size()).sum()
    }

    /// `P_ij = Tr T_ij`.
    pub fn stochastic_matrix(&self) -> DMatrix<f64> {
        let k = self.blocks.len();
        DMatrix::from_fn(k, k, |i, j| self.transitions[i][j].trace().re)
    }

    fn site_offsets(&self) -> Vec<usize> {
        offsets(self.blocks.iter().map(|b| b.size()))
    }

    /// Density on `[1, n]`: the sum over block paths of
    /// `ρ_{i₁} ⊗ T_{i₁i₂} ⊗ … ⊗ T_{i_{n-1}i_n} ⊗ σ_{i_n}`.
    pub fn local_density(&self, n: usize) -> Result<ChainOperator> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        let d = self.site_dim();
        let dim = chain_dimension(d, n)?;
        let offs = self.site_offsets();
        let strides: Vec<usize> = (0..n).map(|s| d.pow((n - 1 - s) as u32)).collect();
        let window = Interval::sites(n)?;
        let k = self.blocks.len();
        let diagonal = self.diagonal
            && self.heads.iter().all(is_exactly_diagonal)
            && self.tails.iter().all(is_exactly_diagonal);
        if !diagonal && dim > DENSE_DIMENSION_CAP {
            return Err(Error::DimensionOverflow {
                dim,
                cap: DENSE_DIMENSION_CAP,
            });
        }
        let mut diag = DVector::from_element(if diagonal { dim } else { 0 }, ZERO);
        let mut dense = DMatrix::from_element(if diagonal { 0 } else { dim }, if diagonal { 0 } else { dim }, ZERO);
        for path in paths(k, n) {
            let mut factors: Vec<&DMatrix<C64>> = vec![&self.heads[path[0]]];
            for w in path.windows(2) {
                factors.push(&self.transitions[w[0]][w[1]]);
            }
            factors.push(&self.tails[path[n - 1]]);
            let ranges: Vec<(usize, usize)> = path
                .iter()
                .map(|&i| (offs[i], self.blocks[i].size()))
                .collect();
            let idx = scatter(&ranges, &strides);
            if diagonal {
                let mut values = vec![C64::new(1.0, 0.0)];
                for f in &factors {
                    let mut next = Vec::with_capacity(values.len() * f.nrows());
                    for v in &values {
                        for a in 0..f.nrows() {
                            next.push(v * f[(a, a)]);
                        }
                    }
                    values = next;
                }
                for (x, v) in idx.iter().zip(values) {
                    diag[*x] += v;
                }
            } else {
                let block = kron_all(&factors);
                for (a, &x) in idx.iter().enumerate() {
                    for (b, &y) in idx.iter().enumerate() {
                        dense[(x, y)] += block[(a, b)];
                    }
                }
            }
        }
        if diagonal {
            let values: Vec<f64> = diag.iter().map(|z| z.re).collect();
            ChainOperator::from_real_diagonal(window, d, &values)
        } else {
            ChainOperator::hermitian(window, d, dense)
        }
    }

    pub fn tilde_layout(&self, len: usize) -> Result<TildeLayout> {
        if len < 2 {
            return Err(Error::InvalidArgument(
                "the tilde algebra of a single site is trivial".into(),
            ));
        }
        Ok(TildeLayout {
            blocks: self.blocks.clone(),
            len,
        })
    }

    /// Density of the restriction to the tilde algebra on `[m, n]`.
    pub fn tilde_density(&self, window: Interval) -> Result<TildeOperator> {
        let layout = self.tilde_layout(window.len())?;
        let k = self.blocks.len();
        let mut path_list = Vec::new();
        let mut blocks = Vec::new();
        for path in paths(k, window.len()) {
            let factors: Vec<&DMatrix<C64>> = path
                .windows(2)
                .map(|w| &self.transitions[w[0]][w[1]])
                .collect();
            let block = kron_all(&factors) * C64::new(self.weights[path[0]], 0.0);
            path_list.push(path);
            blocks.push(block);
        }
        Ok(TildeOperator {
            layout,
            window,
            paths: path_list,
            blocks,
        })
    }

    /// The same state as a finitely correlated triple.
    pub fn to_fcs(&self) -> Result<FcsTriple> {
        let d = self.site_dim();
        let memory: Vec<usize> = self.blocks.iter().map(|b| b.d).collect();
        let dm: usize = memory.iter().sum();
        let big = d * dm;
        let site_offs = self.site_offsets();
        let mem_offs = offsets(memory.iter().copied());
        let locate_site = |s: usize| {
            let i = site_offs.iter().rposition(|&o| o <= s).unwrap();
            let local = s - site_offs[i];
            (i, local / self.blocks[i].m, local % self.blocks[i].m)
        };
        let locate_mem = |p: usize| {
            let j = mem_offs.iter().rposition(|&o| o <= p).unwrap();
            (j, p - mem_offs[j])
        };
        // Pinch the site onto its blocks and the memory onto B, then apply
        // id_{d_i} ⊗ Tr(T_ij ·) to the (m_i, d_j) part.
        let mut map = DMatrix::from_element(dm * dm, big * big, ZERO);
        for r in 0..big {
            for c in 0..big {
                let (i1, a1, b1) = locate_site(r / dm);
                let (i2, a2, b2) = locate_site(c / dm);
                let (j1, c1) = locate_mem(r % dm);
                let (j2, c2) = locate_mem(c % dm);
                if i1 != i2 || j1 != j2 {
                    continue;
                }
                let (i, j) = (i1, j1);
                let t = &self.transitions[i][j];
                let dj = self.blocks[j].d;
                let value = t[(b2 * dj + c2, b1 * dj + c1)];
                let out = (mem_offs[i] + a1) * dm + mem_offs[i] + a2;
                map[(out, r * big + c)] = value;
            }
        }
        let mut rho = DMatrix::from_element(dm, dm, ZERO);
        for (j, head) in self.heads.iter().enumerate() {
            let scale = self.tails[j].trace();
            let o = mem_offs[j];
            for a in 0..head.nrows() {
                for b in 0..head.ncols() {
                    rho[(o + a, o + b)] = head[(a, b)] * scale;
                }
            }
        }
        FcsTriple::new(d, memory, map, rho)
    }

    /// Commutant of the tilde density inside the tilde algebra on `window`.
    pub fn centralizer(&self, window: Interval) -> Result<CentralizerBasis> {
        self.tilde_density(window)?.centralizer()
    }
}

/// Solves `πP = π`, `Σπ = 1`.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let k = p.nrows();
    let mut system = DMatrix::zeros(k + 1, k);
    for i in 0..k {
        for j in 0..k {
            system[(i, j)] = p[(j, i)] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..k {
        system[(k, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let pi = system
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidModel(e.to_string()))?;
    Ok(pi.iter().copied().collect())
}

/// Coordinates of the tilde algebra `B' ⊗ A_{[m+1,n-1]} ⊗ B` on a window
/// of `len` sites: `(⊕ C^{m_i}) ⊗ (C^d)^{⊗(len-2)} ⊗ (⊕ C^{d_j})`.
#[derive(Clone, Debug)]
pub struct TildeLayout {
    blocks: Vec<QmsBlock>,
    len: usize,
}

impl TildeLayout {
    fn first_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.m).sum()
    }

    fn last_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.d).sum()
    }

    fn site_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.size()).sum()
    }

    pub fn dim(&self) -> usize {
        self.first_dim() * self.site_dim().pow((self.len - 2) as u32) * self.last_dim()
    }

    fn slot_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.first_dim()];
        s.extend(std::iter::repeat_n(self.site_dim(), self.len - 2));
        s.push(self.last_dim());
        s
    }

    fn strides(&self) -> Vec<usize> {
        let sizes = self.slot_sizes();
        let mut strides = vec![1usize; sizes.len()];
        for s in (0..sizes.len() - 1).rev() {
            strides[s] = strides[s + 1] * sizes[s + 1];
        }
        strides
    }

    /// Tilde indices of the block belonging to a path.
    fn path_indices(&self, path: &[usize]) -> Vec<usize> {
        let first = offsets(self.blocks.iter().map(|b| b.m));
        let mid = offsets(self.blocks.iter().map(|b| b.size()));
        let last = offsets(self.blocks.iter().map(|b| b.d));
        let l = path.len();
        let mut ranges = vec![(first[path[0]], self.blocks[path[0]].m)];
        for &i in &path[1..l - 1] {
            ranges.push((mid[i], self.blocks[i].size()));
        }
        ranges.push((last[path[l - 1]], self.blocks[path[l - 1]].d));
        scatter(&ranges, &self.strides())
    }

    /// (block, index inside block) of a first-slot coordinate.
    fn first_block(&self, f: usize) -> (usize, usize) {
        let offs = offsets(self.blocks.iter().map(|b| b.m));
        let i = offs.iter().rposition(|&o| o <= f).unwrap();
        (i, f - offs[i])
    }

    fn last_block(&self, l: usize) -> (usize, usize) {
        let offs = offsets(self.blocks.iter().map(|b| b.d));
        let j = offs.iter().rposition(|&o| o <= l).unwrap();
        (j, l - offs[j])
    }

    fn embed(&self, x: &DMatrix<C64>, window: Interval, normalize: bool) -> Result<ChainOperator> {
        if window.len() != self.len {
            return Err(Error::IntervalMismatch(format!(
                "tilde layout has {} sites, window {window}",
                self.len
            )));
        }
        if x.nrows() != self.dim() || x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.nrows(),
            });
        }
        let d = self.site_dim();
        let full = chain_dimension(d, self.len)?;
        if full > DENSE_DIMENSION_CAP {
            return Err(Error::DimensionOverflow {
                dim: full,
                cap: DENSE_DIMENSION_CAP,
            });
        }
        let site_offs = offsets(self.blocks.iter().map(|b| b.size()));
        let mid_size = d.pow((self.len - 2) as u32);
        let last_dim = self.last_dim();
        let outer = d.pow((self.len - 1) as u32);
        let split = |t: usize| {
            let f = t / (mid_size * last_dim);
            let mid = (t / last_dim) % mid_size;
            let l = t % last_dim;
            (f, mid, l)
        };
        let mut out = DMatrix::from_element(full, full, ZERO);
        for t1 in 0..self.dim() {
            for t2 in 0..self.dim() {
                let v = x[(t1, t2)];
                if v == ZERO {
                    continue;
                }
                let (f1, mid1, l1) = split(t1);
                let (f2, mid2, l2) = split(t2);
                let (i1, b1) = self.first_block(f1);
                let (i2, b2) = self.first_block(f2);
                let (j1, a1) = self.last_block(l1);
                let (j2, a2) = self.last_block(l2);
                if i1 != i2 || j1 != j2 {
                    return Err(Error::InvalidArgument(
                        "operator is not in the tilde algebra (mixes boundary blocks)".into(),
                    ));
                }
                let (bi, bj) = (self.blocks[i1], self.blocks[j1]);
                let mut v = v;
                if normalize {
                    v /= (bi.d * bj.m) as f64;
                }
                for a in 0..bi.d {
                    let s1 = site_offs[i1] + a * bi.m + b1;
                    let s2 = site_offs[i1] + a * bi.m + b2;
                    for b in 0..bj.m {
                        let e1 = site_offs[j1] + a1 * bj.m + b;
                        let e2 = site_offs[j1] + a2 * bj.m + b;
                        let row = (s1 * mid_size + mid1) * d + e1;
                        let col = (s2 * mid_size + mid2) * d + e2;
                        debug_assert!(row < outer * d && col < outer * d);
                        out[(row, col)] += v;
                    }
                }
            }
        }
        ChainOperator::new(window, d, out)
    }

    /// Observable embedding: `B'` factors become `I_{d_i} ⊗ X`, `B` factors `Y ⊗ I_{m_j}`.
    pub fn embed_observable(&self, x: &DMatrix<C64>, window: Interval) -> Result<ChainOperator> {
        self.embed(x, window, false)
    }

    /// Density embedding with the boundary identities normalized to unit trace.
    pub fn embed_density(&self, x: &DMatrix<C64>, window: Interval) -> Result<ChainOperator> {
        self.embed(x, window, true)
    }
}

/// Block-diagonal operator on the tilde coordinates, one block per path.
#[derive(Clone, Debug)]
pub struct TildeOperator {
    layout: TildeLayout,
    window: Interval,
    paths: Vec<Vec<usize>>,
    blocks: Vec<DMatrix<C64>>,
}

impl TildeOperator {
    pub fn layout(&self) -> &TildeLayout {
        &self.layout
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn paths(&self) -> &[Vec<usize>] {
        &self.paths
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.blocks
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .blocks
            .iter()
            .flat_map(|b| eigh_dense(b).values)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = self.layout.dim();
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for (path, block) in self.paths.iter().zip(&self.blocks) {
            let idx = self.layout.path_indices(path);
            for (a, &x) in idx.iter().enumerate() {
                for (b, &y) in idx.iter().enumerate() {
                    m[(x, y)] = block[(a, b)];
                }
            }
        }
        m
    }

    /// Spectral projections refined by path, grouped into the eigenspaces
    /// of each pair of boundary blocks.
    pub fn centralizer(&self) -> Result<CentralizerBasis> {
        let dim = self.layout.dim();
        let global_max = self
            .blocks
            .iter()
            .map(|b| b.camax())
            .fold(0.0f64, f64::max);
        let tol = 1e-10 * global_max.max(f64::MIN_POSITIVE);
        let mut pieces: Vec<SpectralPiece> = Vec::new();
        for (path, block) in self.paths.iter().zip(&self.blocks) {
            let idx = self.layout.path_indices(path);
            let eig = eigh_dense(block);
            let mut c = 0;
            while c < eig.values.len() {
                let mut e = c + 1;
                while e < eig.values.len() && eig.values[e] - eig.values[c] <= tol {
                    e += 1;
                }
                let mut vectors = DMatrix::from_element(dim, e - c, ZERO);
                for col in c..e {
                    for (a, &x) in idx.iter().enumerate() {
                        vectors[(x, col - c)] = eig.vectors[(a, col)];
                    }
                }
                let mean = eig.values[c..e].iter().sum::<f64>() / (e - c) as f64;
                pieces.push(SpectralPiece {
                    eigenvalue: mean,
                    path: path.clone(),
                    vectors,
                });
                c = e;
            }
        }
        let ends = |p: &SpectralPiece| (p.path[0], p.path[p.path.len() - 1]);
        pieces.sort_by(|a, b| ends(a).cmp(&ends(b)).then(a.eigenvalue.total_cmp(&b.eigenvalue)));
        let mut groups: Vec<CentralizerGroup> = Vec::new();
        for p in &pieces {
            let join = groups.last().is_some_and(|g| {
                (g.first_block, g.last_block) == ends(p) && (p.eigenvalue - g.eigenvalue) <= tol
            });
            if join {
                let g = groups.last_mut().unwrap();
                let mut cols = g.vectors.clone().resize_horizontally(
                    g.vectors.ncols() + p.vectors.ncols(),
                    ZERO,
                );
                cols.view_mut((0, g.vectors.ncols()), (dim, p.vectors.ncols()))
                    .copy_from(&p.vectors);
                g.vectors = cols;
            } else {
                groups.push(CentralizerGroup {
                    eigenvalue: p.eigenvalue,
                    first_block: p.path[0],
                    last_block: p.path[p.path.len() - 1],
                    vectors: p.vectors.clone(),
                });
            }
        }
        Ok(CentralizerBasis {
            layout: self.layout.clone(),
            window: self.window,
            pieces,
            groups,
        })
    }
}

#[derive(Clone, Debug)]
struct SpectralPiece {
    eigenvalue: f64,
    path: Vec<usize>,
    vectors: DMatrix<C64>,
}

/// One eigenspace of the tilde density inside a pair of boundary blocks.
#[derive(Clone, Debug)]
pub struct CentralizerGroup {
    pub eigenvalue: f64,
    pub first_block: usize,
    pub last_block: usize,
    /// Orthonormal columns spanning the eigenspace.
    pub vectors: DMatrix<C64>,
}

impl CentralizerGroup {
    pub fn projection(&self) -> DMatrix<C64> {
        &self.vectors * self.vectors.adjoint()
    }

    pub fn rank(&self) -> usize {
        self.vectors.ncols()
    }
}

#[derive(Clone, Debug)]
pub struct CentralizerBasis {
    layout: TildeLayout,
    window: Interval,
    pieces: Vec<SpectralPiece>,
    groups: Vec<CentralizerGroup>,
}

impl CentralizerBasis {
    pub fn layout(&self) -> &TildeLayout {
        &self.layout
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn groups(&self) -> &[CentralizerGroup] {
        &self.groups
    }

    /// Spectral projections of the tilde density refined by path.
    pub fn projections(&self) -> Vec<DMatrix<C64>> {
        self.pieces
            .iter()
            .map(|p| &p.vectors * p.vectors.adjoint())
            .collect()
    }

    /// Dimension of the commutant, `Σ rank²` over groups.
    pub fn dimension(&self) -> usize {
        self.groups.iter().map(|g| g.rank() * g.rank()).sum()
    }

    /// Matrix units `|u_a⟩⟨u_b|` inside each group.
    pub fn basis(&self) -> Vec<DMatrix<C64>> {
        let mut out = Vec::with_capacity(self.dimension());
        for g in &self.groups {
            for a in 0..g.rank() {
                for b in 0..g.rank() {
                    out.push(g.vectors.column(a) * g.vectors.column(b).adjoint());
                }
            }
        }
        out
    }
}
