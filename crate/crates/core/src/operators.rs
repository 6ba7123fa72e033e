//! Operators on finite windows of a spin chain.
//!
//! A window `[a, b]` carries the Hilbert space `(C^d)^{⊗(b-a+1)}` with the
//! leftmost site as the most significant tensor factor. Operators are stored
//! either as a full matrix or, when every off-diagonal entry is exactly zero,
//! as their diagonal. Classical fixtures stay diagonal through every operation
//! that preserves diagonality, which keeps `2^14`-dimensional windows cheap.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest local dimension `d^n` accepted anywhere.
pub const DIMENSION_CAP: usize = 16384;

/// Largest dimension stored as a full matrix.
pub const DENSE_DIMENSION_CAP: usize = 4096;

/// Relative tolerance for the Hermitian check at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues below this fraction of the largest are outside the support.
pub const SUPPORT_CUTOFF: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    start: i64,
    end: i64,
}

impl Interval {
    pub fn new(start: i64, end: i64) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidArgument(format!(
                "interval [{start},{end}] is empty"
            )));
        }
        Ok(Self { start, end })
    }

    /// The window `[1, n]`.
    pub fn sites(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("window needs at least one site".into()));
        }
        Ok(Self { start: 1, end: n as i64 })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shift(&self, k: i64) -> Self {
        Self {
            start: self.start + k,
            end: self.end + k,
        }
    }

    pub fn contains(&self, site: i64) -> bool {
        self.start <= site && site <= self.end
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

/// `d^sites`, rejecting anything above [`DIMENSION_CAP`].
pub fn chain_dimension(site_dim: usize, sites: usize) -> Result<usize> {
    if site_dim == 0 {
        return Err(Error::InvalidArgument("site dimension must be positive".into()));
    }
    let mut dim: usize = 1;
    for _ in 0..sites {
        dim = dim.saturating_mul(site_dim);
        if dim > DIMENSION_CAP {
            return Err(Error::DimensionOverflow {
                dim,
                cap: DIMENSION_CAP,
            });
        }
    }
    Ok(dim)
}

fn check_dense_dim(dim: usize) -> Result<()> {
    if dim > DENSE_DIMENSION_CAP {
        return Err(Error::DimensionOverflow {
            dim,
            cap: DENSE_DIMENSION_CAP,
        });
    }
    Ok(())
}

#[derive(Clone, Debug)]
enum Storage {
    Diagonal(DVector<C64>),
    Dense(DMatrix<C64>),
}

impl Storage {
    fn dim(&self) -> usize {
        match self {
            Storage::Diagonal(v) => v.len(),
            Storage::Dense(m) => m.nrows(),
        }
    }

    /// Collapses a full matrix to its diagonal when all off-diagonal entries vanish.
    fn normalized(self) -> Self {
        match self {
            Storage::Dense(m) if is_exactly_diagonal(&m) => Storage::Diagonal(m.diagonal()),
            other => other,
        }
    }

    fn to_dense(&self) -> DMatrix<C64> {
        match self {
            Storage::Diagonal(v) => DMatrix::from_diagonal(v),
            Storage::Dense(m) => m.clone(),
        }
    }
}

fn is_exactly_diagonal(m: &DMatrix<C64>) -> bool {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)] != ZERO {
                return false;
            }
        }
    }
    true
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn max_asymmetry(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn symmetrize(m: &mut DMatrix<C64>) {
    let n = m.nrows();
    for j in 0..n {
        m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
        for i in 0..j {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Operator on a window of sites.
#[derive(Clone, Debug)]
pub struct ChainOperator {
    window: Interval,
    site_dim: usize,
    storage: Storage,
    hermitian: bool,
}

impl ChainOperator {
    fn from_storage(window: Interval, site_dim: usize, storage: Storage, hermitian: bool) -> Self {
        Self {
            window,
            site_dim,
            storage: storage.normalized(),
            hermitian,
        }
    }

    /// General (not necessarily Hermitian) operator.
    pub fn new(window: Interval, site_dim: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = chain_dimension(site_dim, window.len())?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        let storage = Storage::Dense(matrix).normalized();
        if let Storage::Dense(_) = storage {
            check_dense_dim(dim)?;
        }
        Ok(Self {
            window,
            site_dim,
            storage,
            hermitian: false,
        })
    }

    /// Hermitian operator; the input is validated and then symmetrized.
    pub fn hermitian(window: Interval, site_dim: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let mut op = Self::new(window, site_dim, matrix)?;
        op.make_hermitian()?;
        Ok(op)
    }

    /// Real diagonal operator.
    pub fn from_real_diagonal(window: Interval, site_dim: usize, diag: &[f64]) -> Result<Self> {
        let dim = chain_dimension(site_dim, window.len())?;
        if diag.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: diag.len(),
            });
        }
        let v = DVector::from_iterator(dim, diag.iter().map(|&x| C64::new(x, 0.0)));
        Ok(Self {
            window,
            site_dim,
            storage: Storage::Diagonal(v),
            hermitian: true,
        })
    }

    pub fn identity(window: Interval, site_dim: usize) -> Result<Self> {
        let dim = chain_dimension(site_dim, window.len())?;
        Self::from_real_diagonal(window, site_dim, &vec![1.0; dim])
    }

    pub fn zeros(window: Interval, site_dim: usize) -> Result<Self> {
        let dim = chain_dimension(site_dim, window.len())?;
        Self::from_real_diagonal(window, site_dim, &vec![0.0; dim])
    }

    /// Maximally mixed density `I / d^n`.
    pub fn tracial(window: Interval, site_dim: usize) -> Result<Self> {
        let dim = chain_dimension(site_dim, window.len())?;
        Self::from_real_diagonal(window, site_dim, &vec![1.0 / dim as f64; dim])
    }

    fn make_hermitian(&mut self) -> Result<()> {
        if let Storage::Dense(m) = &mut self.storage {
            let asym = max_asymmetry(m);
            if asym > HERMITIAN_TOL * max_abs(m).max(1.0) {
                return Err(Error::NotHermitian(asym));
            }
            symmetrize(m);
        } else if let Storage::Diagonal(v) = &mut self.storage {
            let asym = v.iter().fold(0.0f64, |acc, z| acc.max(2.0 * z.im.abs()));
            let scale = v.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
            if asym > HERMITIAN_TOL * scale {
                return Err(Error::NotHermitian(asym));
            }
            for z in v.iter_mut() {
                z.im = 0.0;
            }
        }
        self.hermitian = true;
        Ok(())
    }

    /// Symmetrizes `(M + M†)/2` after checking the drift is within tolerance.
    pub fn into_hermitian(mut self) -> Result<Self> {
        self.make_hermitian()?;
        Ok(self)
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn dim(&self) -> usize {
        self.storage.dim()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.storage, Storage::Diagonal(_))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.storage.to_dense()
    }

    /// Diagonal entries, whatever the storage.
    pub fn diagonal(&self) -> DVector<C64> {
        match &self.storage {
            Storage::Diagonal(v) => v.clone(),
            Storage::Dense(m) => m.diagonal(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        match &self.storage {
            Storage::Diagonal(v) => {
                if i == j {
                    v[i]
                } else {
                    ZERO
                }
            }
            Storage::Dense(m) => m[(i, j)],
        }
    }

    pub fn trace(&self) -> C64 {
        match &self.storage {
            Storage::Diagonal(v) => v.iter().sum(),
            Storage::Dense(m) => m.trace(),
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        match &self.storage {
            Storage::Diagonal(v) => v.iter().fold(0.0, |acc, z| acc.max(z.norm())),
            Storage::Dense(m) => max_abs(m),
        }
    }

    /// Largest entry modulus of `M - M†`.
    pub fn asymmetry(&self) -> f64 {
        match &self.storage {
            Storage::Diagonal(v) => v.iter().fold(0.0, |acc, z| acc.max(2.0 * z.im.abs())),
            Storage::Dense(m) => max_asymmetry(m),
        }
    }

    /// Operator norm: spectral radius for Hermitian input, largest singular value otherwise.
    pub fn operator_norm(&self) -> f64 {
        match &self.storage {
            Storage::Diagonal(v) => v.iter().fold(0.0, |acc, z| acc.max(z.norm())),
            Storage::Dense(m) => {
                if self.hermitian {
                    let eig = eigh_dense(m);
                    eig.values
                        .iter()
                        .fold(0.0, |acc: f64, x: &f64| acc.max(x.abs()))
                } else {
                    m.clone().svd(false, false).singular_values.max()
                }
            }
        }
    }

    fn check_compatible(&self, other: &ChainOperator) -> Result<()> {
        if self.window != other.window {
            return Err(Error::IntervalMismatch(format!(
                "{} vs {}",
                self.window, other.window
            )));
        }
        if self.site_dim != other.site_dim {
            return Err(Error::InvalidArgument(format!(
                "site dimensions differ: {} vs {}",
                self.site_dim, other.site_dim
            )));
        }
        Ok(())
    }

    fn zip_with(
        &self,
        other: &ChainOperator,
        f: impl Fn(C64, C64) -> C64,
    ) -> Result<ChainOperator> {
        self.check_compatible(other)?;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Diagonal(a), Storage::Diagonal(b)) => {
                Storage::Diagonal(a.zip_map(b, &f))
            }
            _ => {
                check_dense_dim(self.dim())?;
                Storage::Dense(self.to_dense().zip_map(&other.to_dense(), &f))
            }
        };
        Ok(Self::from_storage(
            self.window,
            self.site_dim,
            storage,
            self.hermitian && other.hermitian,
        ))
    }

    pub fn add(&self, other: &ChainOperator) -> Result<ChainOperator> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ChainOperator) -> Result<ChainOperator> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &ChainOperator, c: f64) -> Result<ChainOperator> {
        self.zip_with(other, |a, b| a + b * c)
    }

    pub fn scale(&self, c: f64) -> ChainOperator {
        let storage = match &self.storage {
            Storage::Diagonal(v) => Storage::Diagonal(v * C64::new(c, 0.0)),
            Storage::Dense(m) => Storage::Dense(m * C64::new(c, 0.0)),
        };
        Self::from_storage(self.window, self.site_dim, storage, self.hermitian)
    }

    pub fn adjoint(&self) -> ChainOperator {
        let storage = match &self.storage {
            Storage::Diagonal(v) => Storage::Diagonal(v.map(|z| z.conj())),
            Storage::Dense(m) => Storage::Dense(m.adjoint()),
        };
        Self::from_storage(self.window, self.site_dim, storage, self.hermitian)
    }

    pub fn matmul(&self, other: &ChainOperator) -> Result<ChainOperator> {
        self.check_compatible(other)?;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Diagonal(a), Storage::Diagonal(b)) => Storage::Diagonal(a.component_mul(b)),
            (Storage::Diagonal(a), Storage::Dense(b)) => {
                let mut m = b.clone();
                for (i, mut row) in m.row_iter_mut().enumerate() {
                    row *= a[i];
                }
                Storage::Dense(m)
            }
            (Storage::Dense(a), Storage::Diagonal(b)) => {
                let mut m = a.clone();
                for (j, mut col) in m.column_iter_mut().enumerate() {
                    col *= b[j];
                }
                Storage::Dense(m)
            }
            (Storage::Dense(a), Storage::Dense(b)) => Storage::Dense(a * b),
        };
        Ok(Self::from_storage(self.window, self.site_dim, storage, false))
    }

    /// `Tr(self · other)`.
    pub fn trace_product(&self, other: &ChainOperator) -> Result<C64> {
        self.check_compatible(other)?;
        Ok(match (&self.storage, &other.storage) {
            (Storage::Diagonal(a), Storage::Diagonal(b)) => a.dot(b),
            (Storage::Diagonal(a), Storage::Dense(b)) | (Storage::Dense(b), Storage::Diagonal(a)) => {
                (0..a.len()).map(|i| a[i] * b[(i, i)]).sum()
            }
            (Storage::Dense(a), Storage::Dense(b)) => {
                let n = a.nrows();
                let mut acc = ZERO;
                for i in 0..n {
                    for k in 0..n {
                        acc += a[(i, k)] * b[(k, i)];
                    }
                }
                acc
            }
        })
    }

    /// Real part of `Tr(density · self)`.
    pub fn expectation(&self, density: &ChainOperator) -> Result<f64> {
        Ok(density.trace_product(self)?.re)
    }

    /// Max-norm of the commutator `[self, other]`.
    pub fn commutator_norm(&self, other: &ChainOperator) -> Result<f64> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        Ok(ab.sub(&ba)?.max_abs())
    }

    /// Tensor product with an operator on the window immediately to the right.
    pub fn kron(&self, right: &ChainOperator) -> Result<ChainOperator> {
        if self.site_dim != right.site_dim {
            return Err(Error::InvalidArgument("site dimensions differ".into()));
        }
        if right.window.start != self.window.end + 1 {
            return Err(Error::IntervalMismatch(format!(
                "{} is not adjacent to {}",
                right.window, self.window
            )));
        }
        let window = Interval::new(self.window.start, right.window.end)?;
        chain_dimension(self.site_dim, window.len())?;
        let storage = match (&self.storage, &right.storage) {
            (Storage::Diagonal(a), Storage::Diagonal(b)) => Storage::Diagonal(a.kronecker(b)),
            _ => {
                check_dense_dim(self.dim() * right.dim())?;
                Storage::Dense(self.to_dense().kronecker(&right.to_dense()))
            }
        };
        Ok(Self::from_storage(
            window,
            self.site_dim,
            storage,
            self.hermitian && right.hermitian,
        ))
    }

    /// The same matrix moved to the window shifted by `k`.
    pub fn translated(&self, k: i64) -> ChainOperator {
        let mut out = self.clone();
        out.window = self.window.shift(k);
        out
    }

    /// Relabels the window without touching the matrix; lengths must agree.
    pub fn on_window(&self, window: Interval) -> Result<ChainOperator> {
        if window.len() != self.window.len() {
            return Err(Error::IntervalMismatch(format!(
                "cannot move {} onto {}",
                self.window, window
            )));
        }
        let mut out = self.clone();
        out.window = window;
        Ok(out)
    }

    /// `γ^k(self)` padded with identities to `target`.
    pub fn embed_shift(&self, target: Interval, k: i64) -> Result<ChainOperator> {
        let placed = self.window.shift(k);
        if !target.contains_interval(&placed) {
            return Err(Error::WindowOutOfRange {
                inner: self.window,
                shift: k,
                target,
            });
        }
        let left = (placed.start - target.start) as usize;
        let right = (target.end - placed.end) as usize;
        let dl = chain_dimension(self.site_dim, left)?;
        let dr = chain_dimension(self.site_dim, right)?;
        let total = chain_dimension(self.site_dim, target.len())?;
        let dk = self.dim();
        let storage = match &self.storage {
            Storage::Diagonal(v) => {
                let mut out = DVector::from_element(total, ZERO);
                for l in 0..dl {
                    for i in 0..dk {
                        let base = (l * dk + i) * dr;
                        for r in 0..dr {
                            out[base + r] = v[i];
                        }
                    }
                }
                Storage::Diagonal(out)
            }
            Storage::Dense(m) => {
                check_dense_dim(total)?;
                let mut out = DMatrix::from_element(total, total, ZERO);
                for l in 0..dl {
                    for j in 0..dk {
                        for i in 0..dk {
                            let z = m[(i, j)];
                            if z == ZERO {
                                continue;
                            }
                            let row = (l * dk + i) * dr;
                            let col = (l * dk + j) * dr;
                            for r in 0..dr {
                                out[(row + r, col + r)] = z;
                            }
                        }
                    }
                }
                Storage::Dense(out)
            }
        };
        Ok(Self::from_storage(target, self.site_dim, storage, self.hermitian))
    }

    /// Adds `coeff · γ^k(op)` in place, padding `op` with identities.
    pub fn add_embedded(&mut self, op: &ChainOperator, k: i64, coeff: f64) -> Result<()> {
        let placed = op.window.shift(k);
        if !self.window.contains_interval(&placed) || op.site_dim != self.site_dim {
            return Err(Error::WindowOutOfRange {
                inner: op.window,
                shift: k,
                target: self.window,
            });
        }
        let dl = chain_dimension(self.site_dim, (placed.start - self.window.start) as usize)?;
        let dr = chain_dimension(self.site_dim, (self.window.end - placed.end) as usize)?;
        let dk = op.dim();
        let c = C64::new(coeff, 0.0);
        if let (Storage::Diagonal(acc), Storage::Diagonal(v)) = (&mut self.storage, &op.storage) {
            for l in 0..dl {
                for i in 0..dk {
                    let z = v[i] * c;
                    let base = (l * dk + i) * dr;
                    for r in 0..dr {
                        acc[base + r] += z;
                    }
                }
            }
        } else {
            if let Storage::Diagonal(acc) = &self.storage {
                check_dense_dim(acc.len())?;
                self.storage = Storage::Dense(DMatrix::from_diagonal(acc));
            }
            let Storage::Dense(acc) = &mut self.storage else {
                unreachable!()
            };
            let m = op.to_dense();
            for l in 0..dl {
                for j in 0..dk {
                    for i in 0..dk {
                        let z = m[(i, j)];
                        if z == ZERO {
                            continue;
                        }
                        let z = z * c;
                        let row = (l * dk + i) * dr;
                        let col = (l * dk + j) * dr;
                        for r in 0..dr {
                            acc[(row + r, col + r)] += z;
                        }
                    }
                }
            }
        }
        self.hermitian = self.hermitian && op.hermitian;
        Ok(())
    }

    pub fn embed(&self, target: Interval) -> Result<ChainOperator> {
        self.embed_shift(target, 0)
    }

    /// Traces out every site of the window outside `keep`.
    pub fn partial_trace(&self, keep: Interval) -> Result<ChainOperator> {
        if !self.window.contains_interval(&keep) {
            return Err(Error::IntervalMismatch(format!(
                "{} is not inside {}",
                keep, self.window
            )));
        }
        let dl = chain_dimension(self.site_dim, (keep.start - self.window.start) as usize)?;
        let dk = chain_dimension(self.site_dim, keep.len())?;
        let dr = chain_dimension(self.site_dim, (self.window.end - keep.end) as usize)?;
        let storage = match &self.storage {
            Storage::Diagonal(v) => {
                let mut out = DVector::from_element(dk, ZERO);
                for l in 0..dl {
                    for i in 0..dk {
                        let base = (l * dk + i) * dr;
                        for r in 0..dr {
                            out[i] += v[base + r];
                        }
                    }
                }
                Storage::Diagonal(out)
            }
            Storage::Dense(m) => {
                let mut out = DMatrix::from_element(dk, dk, ZERO);
                for j in 0..dk {
                    for i in 0..dk {
                        let mut acc = ZERO;
                        for l in 0..dl {
                            let row = (l * dk + i) * dr;
                            let col = (l * dk + j) * dr;
                            for r in 0..dr {
                                acc += m[(row + r, col + r)];
                            }
                        }
                        out[(i, j)] = acc;
                    }
                }
                Storage::Dense(out)
            }
        };
        Ok(Self::from_storage(keep, self.site_dim, storage, self.hermitian))
    }

    pub fn eigh(&self) -> Result<SpectralDecomposition> {
        if !self.hermitian {
            return Err(Error::NotHermitian(self.asymmetry()));
        }
        Ok(match &self.storage {
            Storage::Diagonal(v) => {
                let mut order: Vec<usize> = (0..v.len()).collect();
                order.sort_by(|&a, &b| v[a].re.total_cmp(&v[b].re));
                SpectralDecomposition {
                    eigenvalues: order.iter().map(|&i| v[i].re).collect(),
                    eigenvectors: Eigenvectors::Permutation(order),
                }
            }
            Storage::Dense(m) => {
                let eig = eigh_dense(m);
                SpectralDecomposition {
                    eigenvalues: eig.values,
                    eigenvectors: Eigenvectors::Dense(eig.vectors),
                }
            }
        })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigh()?.eigenvalues)
    }

    /// `f(self)` through the spectral decomposition.
    pub fn matrix_function(&self, f: impl Fn(f64) -> f64) -> Result<ChainOperator> {
        let spec = self.eigh()?;
        let values: Vec<f64> = spec.eigenvalues.iter().map(|&x| f(x)).collect();
        let storage = spec.reconstruct(&values);
        Ok(Self::from_storage(self.window, self.site_dim, storage, true))
    }
}

/// Eigenvectors of a [`SpectralDecomposition`].
#[derive(Clone, Debug)]
pub enum Eigenvectors {
    /// Column `k` is the standard basis vector `e_{perm[k]}`.
    Permutation(Vec<usize>),
    Dense(DMatrix<C64>),
}

/// Ascending eigenvalues with matching eigenvectors.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Eigenvectors,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn unitary(&self) -> DMatrix<C64> {
        match &self.eigenvectors {
            Eigenvectors::Dense(u) => u.clone(),
            Eigenvectors::Permutation(p) => {
                let n = p.len();
                let mut u = DMatrix::from_element(n, n, ZERO);
                for (k, &i) in p.iter().enumerate() {
                    u[(i, k)] = ONE;
                }
                u
            }
        }
    }

    fn reconstruct(&self, values: &[f64]) -> Storage {
        match &self.eigenvectors {
            Eigenvectors::Permutation(p) => {
                let mut v = DVector::from_element(p.len(), ZERO);
                for (k, &i) in p.iter().enumerate() {
                    v[i] = C64::new(values[k], 0.0);
                }
                Storage::Diagonal(v)
            }
            Eigenvectors::Dense(u) => {
                let mut m = conjugate_diagonal(u, values);
                symmetrize(&mut m);
                Storage::Dense(m)
            }
        }
    }

    /// `U diag(values) U†` as a full matrix.
    pub fn reconstruct_dense(&self, values: &[f64]) -> DMatrix<C64> {
        self.reconstruct(values).to_dense()
    }
}

/// `U diag(values) U†`.
fn conjugate_diagonal(u: &DMatrix<C64>, values: &[f64]) -> DMatrix<C64> {
    let mut scaled = u.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= C64::new(values[k], 0.0);
    }
    scaled * u.adjoint()
}

pub(crate) struct DenseEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

/// Hermitian eigensolver that first splits the matrix into the connected
/// components of its nonzero pattern.
pub(crate) fn eigh_dense(m: &DMatrix<C64>) -> DenseEigen {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..n {
        for i in 0..j {
            if m[(i, j)] != ZERO || m[(j, i)] != ZERO {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }

    let mut unsorted: Vec<f64> = Vec::with_capacity(n);
    let mut vectors_full = DMatrix::from_element(n, n, ZERO);
    let mut col = 0;
    for idx in &groups {
        let k = idx.len();
        if k == 1 {
            unsorted.push(m[(idx[0], idx[0])].re);
            vectors_full[(idx[0], col)] = ONE;
            col += 1;
            continue;
        }
        let sub = DMatrix::from_fn(k, k, |a, b| m[(idx[a], idx[b])]);
        let eig = sub.symmetric_eigen();
        for c in 0..k {
            unsorted.push(eig.eigenvalues[c]);
            for (a, &i) in idx.iter().enumerate() {
                vectors_full[(i, col)] = eig.eigenvectors[(a, c)];
            }
            col += 1;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| unsorted[a].total_cmp(&unsorted[b]));
    let values = order.iter().map(|&c| unsorted[c]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, k| vectors_full[(i, order[k])]);
    DenseEigen { values, vectors }
}

/// `log Σ exp(x_i)` over a non-empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Eigenbasis of a positive semidefinite operator restricted to its support.
#[derive(Clone, Debug)]
pub struct SupportFrame {
    window: Interval,
    site_dim: usize,
    dim: usize,
    log_eigs: Vec<f64>,
    basis: SupportBasis,
}

#[derive(Clone, Debug)]
enum SupportBasis {
    /// Support vectors are standard basis vectors.
    Indices(Vec<usize>),
    /// Columns are orthonormal support vectors.
    Vectors(DMatrix<C64>),
}

/// An observable compressed to a support frame, `P B P` in the frame basis.
#[derive(Clone, Debug)]
pub enum Compressed {
    Diagonal(Vec<f64>),
    Dense(DMatrix<C64>),
}

/// Output of [`perturbed_trace_exp`].
#[derive(Clone, Debug)]
pub struct PerturbedState {
    pub log_z: f64,
    pub density: ChainOperator,
}

impl PerturbedState {
    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }
}

impl SupportFrame {
    pub fn new(d: &ChainOperator) -> Result<Self> {
        let spec = d.eigh()?;
        let max = spec.eigenvalues.last().copied().unwrap_or(0.0);
        if max <= 0.0 {
            return Err(Error::ZeroOperator);
        }
        let min = spec.eigenvalues[0];
        if min < -SUPPORT_CUTOFF * max {
            return Err(Error::NegativeEigenvalue(min));
        }
        let keep: Vec<usize> = (0..spec.dim())
            .filter(|&k| spec.eigenvalues[k] > SUPPORT_CUTOFF * max)
            .collect();
        let log_eigs = keep.iter().map(|&k| spec.eigenvalues[k].ln()).collect();
        let basis = match &spec.eigenvectors {
            Eigenvectors::Permutation(p) => {
                SupportBasis::Indices(keep.iter().map(|&k| p[k]).collect())
            }
            Eigenvectors::Dense(u) => {
                SupportBasis::Vectors(DMatrix::from_fn(u.nrows(), keep.len(), |i, c| {
                    u[(i, keep[c])]
                }))
            }
        };
        Ok(Self {
            window: d.window,
            site_dim: d.site_dim,
            dim: d.dim(),
            log_eigs,
            basis,
        })
    }

    pub fn rank(&self) -> usize {
        self.log_eigs.len()
    }

    pub fn compress(&self, b: &ChainOperator) -> Result<Compressed> {
        if b.window != self.window || b.site_dim != self.site_dim {
            return Err(Error::IntervalMismatch(format!(
                "observable on {} against density on {}",
                b.window, self.window
            )));
        }
        if !b.hermitian {
            return Err(Error::NotHermitian(b.asymmetry()));
        }
        Ok(match (&self.basis, &b.storage) {
            (SupportBasis::Indices(idx), Storage::Diagonal(v)) => {
                Compressed::Diagonal(idx.iter().map(|&i| v[i].re).collect())
            }
            (SupportBasis::Indices(idx), Storage::Dense(m)) => {
                let k = idx.len();
                let mut sub = DMatrix::from_fn(k, k, |a, c| m[(idx[a], idx[c])]);
                symmetrize(&mut sub);
                Compressed::Dense(sub)
            }
            (SupportBasis::Vectors(v), storage) => {
                let bv = match storage {
                    Storage::Diagonal(diag) => {
                        let mut bv = v.clone();
                        for (i, mut row) in bv.row_iter_mut().enumerate() {
                            row *= diag[i];
                        }
                        bv
                    }
                    Storage::Dense(m) => m * v,
                };
                let mut sub = v.adjoint() * bv;
                symmetrize(&mut sub);
                Compressed::Dense(sub)
            }
        })
    }

    /// `log Tr P exp(P log D P - scale · P B P)`.
    pub fn log_trace_exp(&self, b: &Compressed, scale: f64) -> f64 {
        match b {
            Compressed::Diagonal(bd) => {
                let xs: Vec<f64> = self
                    .log_eigs
                    .iter()
                    .zip(bd)
                    .map(|(l, x)| l - scale * x)
                    .collect();
                log_sum_exp(&xs)
            }
            Compressed::Dense(bm) => {
                let k = self.compressed_generator(bm, scale);
                log_sum_exp(&eigh_dense(&k).values)
            }
        }
    }

    fn compressed_generator(&self, bm: &DMatrix<C64>, scale: f64) -> DMatrix<C64> {
        let mut k = bm * C64::new(-scale, 0.0);
        for (i, l) in self.log_eigs.iter().enumerate() {
            k[(i, i)] += C64::new(*l, 0.0);
        }
        k
    }

    /// The perturbed partition function and normalized perturbed density.
    pub fn perturb(&self, b: &Compressed, scale: f64) -> Result<PerturbedState> {
        let (log_z, storage) = match b {
            Compressed::Diagonal(bd) => {
                let xs: Vec<f64> = self
                    .log_eigs
                    .iter()
                    .zip(bd)
                    .map(|(l, x)| l - scale * x)
                    .collect();
                let log_z = log_sum_exp(&xs);
                let weights: Vec<f64> = xs.iter().map(|x| (x - log_z).exp()).collect();
                (log_z, self.lift_diagonal(&weights)?)
            }
            Compressed::Dense(bm) => {
                let k = self.compressed_generator(bm, scale);
                let eig = eigh_dense(&k);
                let log_z = log_sum_exp(&eig.values);
                let weights: Vec<f64> = eig.values.iter().map(|x| (x - log_z).exp()).collect();
                let inner = conjugate_diagonal(&eig.vectors, &weights);
                (log_z, self.lift_dense(&inner)?)
            }
        };
        let mut density = ChainOperator::from_storage(self.window, self.site_dim, storage, false);
        density.make_hermitian()?;
        Ok(PerturbedState { log_z, density })
    }

    /// Embeds a diagonal operator given in the support frame.
    fn lift_diagonal(&self, weights: &[f64]) -> Result<Storage> {
        match &self.basis {
            SupportBasis::Indices(idx) => {
                let mut v = DVector::from_element(self.dim, ZERO);
                for (&i, &w) in idx.iter().zip(weights) {
                    v[i] = C64::new(w, 0.0);
                }
                Ok(Storage::Diagonal(v))
            }
            SupportBasis::Vectors(vecs) => {
                check_dense_dim(self.dim)?;
                Ok(Storage::Dense(conjugate_diagonal(vecs, weights)))
            }
        }
    }

    fn lift_dense(&self, inner: &DMatrix<C64>) -> Result<Storage> {
        check_dense_dim(self.dim)?;
        match &self.basis {
            SupportBasis::Indices(idx) => {
                let mut m = DMatrix::from_element(self.dim, self.dim, ZERO);
                for (a, &i) in idx.iter().enumerate() {
                    for (c, &j) in idx.iter().enumerate() {
                        m[(i, j)] = inner[(a, c)];
                    }
                }
                Ok(Storage::Dense(m))
            }
            SupportBasis::Vectors(vecs) => Ok(Storage::Dense(vecs * inner * vecs.adjoint())),
        }
    }
}

/// `Tr P exp(P log D P - P B P)` with `P` the support projection of `D`,
/// together with the normalized perturbed density.
pub fn perturbed_trace_exp(d: &ChainOperator, b: &ChainOperator) -> Result<PerturbedState> {
    let frame = SupportFrame::new(d)?;
    let compressed = frame.compress(b)?;
    frame.perturb(&compressed, 1.0)
}

/// `log Tr(D exp(-B))` for `D ≥ 0` and Hermitian `B`.
pub fn log_trace_density_exp(d: &ChainOperator, b: &ChainOperator) -> Result<f64> {
    d.check_compatible(b)?;
    let spec = b.eigh()?;
    // Diagonal of D in the eigenbasis of B gives the weights of each exponential.
    let weights: Vec<f64> = match &spec.eigenvectors {
        Eigenvectors::Permutation(p) => p.iter().map(|&i| d.entry(i, i).re).collect(),
        Eigenvectors::Dense(u) => {
            let du = match &d.storage {
                Storage::Diagonal(v) => {
                    let mut du = u.clone();
                    for (i, mut row) in du.row_iter_mut().enumerate() {
                        row *= v[i];
                    }
                    du
                }
                Storage::Dense(m) => m * u,
            };
            (0..u.ncols())
                .map(|k| u.column(k).dotc(&du.column(k)).re)
                .collect()
        }
    };
    let xs: Vec<f64> = weights
        .iter()
        .zip(&spec.eigenvalues)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, e)| w.ln() - e)
        .collect();
    if xs.is_empty() {
        return Err(Error::ZeroOperator);
    }
    Ok(log_sum_exp(&xs))
}

/// Least `λ ≥ 1` with `D_ref/λ ≤ D_test ≤ λ D_ref`.
pub fn min_dominating_lambda(d_ref: &ChainOperator, d_test: &ChainOperator) -> Result<f64> {
    d_ref.check_compatible(d_test)?;
    let ref_spec = d_ref.eigh()?;
    let test_min = d_test.eigh()?.eigenvalues[0];
    if ref_spec.eigenvalues[0] <= 1e-13 {
        return Err(Error::SingularDensity(ref_spec.eigenvalues[0]));
    }
    if test_min <= 1e-13 {
        return Err(Error::SingularDensity(test_min));
    }
    let inv_sqrt: Vec<f64> = ref_spec.eigenvalues.iter().map(|x| 1.0 / x.sqrt()).collect();
    let (lo, hi) = match (&ref_spec.eigenvectors, &d_test.storage) {
        (Eigenvectors::Permutation(p), Storage::Diagonal(t)) => {
            let ratios = p
                .iter()
                .enumerate()
                .map(|(k, &i)| t[i].re * inv_sqrt[k] * inv_sqrt[k]);
            ratios.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)))
        }
        _ => {
            let u = ref_spec.unitary();
            let mut w = u.clone();
            for (k, mut col) in w.column_iter_mut().enumerate() {
                col *= C64::new(inv_sqrt[k], 0.0);
            }
            let mut m = w.adjoint() * d_test.to_dense() * w;
            symmetrize(&mut m);
            let values = eigh_dense(&m).values;
            (values[0], *values.last().unwrap())
        }
    };
    Ok(hi.max(1.0 / lo).max(1.0))
}

/// Pauli matrices and other small single-site helpers.
pub mod pauli {
    use super::*;

    pub fn sigma_x() -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn sigma_y() -> DMatrix<C64> {
        let i = C64::new(0.0, 1.0);
        DMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO])
    }

    pub fn sigma_z() -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }
}

/// Real diagonal matrix.
pub fn real_diag(values: &[f64]) -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&x| C64::new(x, 0.0)),
    ))
}

/// Single-site operator on `[site, site]`.
pub fn site_operator(site: i64, matrix: DMatrix<C64>) -> Result<ChainOperator> {
    let d = matrix.nrows();
    ChainOperator::hermitian(Interval::new(site, site)?, d, matrix)
}
