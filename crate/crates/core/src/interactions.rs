//! Translation-invariant finite-range interactions.
//!
//! Each translation orbit of supports is represented by the set `X` with
//! `min X = 0`; the term for `X + k` is the generator moved `k` sites right.

use std::fmt::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::{chain_dimension, pauli, ChainOperator, Interval, C64};
use crate::text::{self, Lines};

#[derive(Clone, Debug)]
pub struct InteractionTerm {
    support: Vec<i64>,
    local: DMatrix<C64>,
    op: ChainOperator,
}

impl InteractionTerm {
    /// `local` acts on the sites of `support` in increasing order.
    pub fn new(support: &[i64], local: DMatrix<C64>, site_dim: usize) -> Result<Self> {
        let mut support = support.to_vec();
        support.sort_unstable();
        support.dedup();
        let first = *support
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty support".into()))?;
        for s in &mut support {
            *s -= first;
        }
        let dim = chain_dimension(site_dim, support.len())?;
        if local.nrows() != dim || local.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: local.nrows(),
            });
        }
        let positions: Vec<usize> = support.iter().map(|&s| s as usize).collect();
        let hull_len = positions[positions.len() - 1] + 1;
        let hull = embed_on_sites(&local, site_dim, &positions, hull_len)?;
        let op = ChainOperator::hermitian(Interval::new(0, hull_len as i64 - 1)?, site_dim, hull)?;
        let local = op_local_hermitian(local);
        Ok(Self { support, local, op })
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn diameter(&self) -> usize {
        *self.support.last().unwrap() as usize
    }

    /// Matrix on the support sites.
    pub fn local(&self) -> &DMatrix<C64> {
        &self.local
    }

    /// Identity-padded operator on the hull `[0, diameter]`.
    pub fn operator(&self) -> &ChainOperator {
        &self.op
    }

    fn is_zero(&self) -> bool {
        self.local.iter().all(|z| z.norm() == 0.0)
    }
}

fn op_local_hermitian(mut m: DMatrix<C64>) -> DMatrix<C64> {
    let adj = m.adjoint();
    m += adj;
    m * C64::new(0.5, 0.0)
}

/// Places an operator acting on `positions` (relative to a hull of
/// `hull_len` sites) into the hull, acting as identity elsewhere.
pub fn embed_on_sites(
    local: &DMatrix<C64>,
    site_dim: usize,
    positions: &[usize],
    hull_len: usize,
) -> Result<DMatrix<C64>> {
    let total = chain_dimension(site_dim, hull_len)?;
    let complement: Vec<usize> = (0..hull_len).filter(|p| !positions.contains(p)).collect();
    let n_comp = chain_dimension(site_dim, complement.len())?;
    let n_sub = local.nrows();
    // index[c][s] = full index with support digits s and complement digits c
    let mut index = vec![vec![0usize; n_sub]; n_comp];
    for x in 0..total {
        let (mut s, mut c) = (0usize, 0usize);
        for p in 0..hull_len {
            let digit = (x / site_dim.pow((hull_len - 1 - p) as u32)) % site_dim;
            if positions.contains(&p) {
                s = s * site_dim + digit;
            } else {
                c = c * site_dim + digit;
            }
        }
        index[c][s] = x;
    }
    let mut out = DMatrix::from_element(total, total, C64::new(0.0, 0.0));
    for row in &index {
        for a in 0..n_sub {
            for b in 0..n_sub {
                out[(row[a], row[b])] = local[(a, b)];
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Interaction {
    site_dim: usize,
    terms: Vec<InteractionTerm>,
}

impl Interaction {
    pub fn zero(site_dim: usize) -> Self {
        Self {
            site_dim,
            terms: Vec::new(),
        }
    }

    /// Builds an interaction, summing generators that share a support.
    pub fn new(site_dim: usize, terms: Vec<InteractionTerm>) -> Result<Self> {
        let mut out = Self::zero(site_dim);
        for t in terms {
            out.push_term(t)?;
        }
        Ok(out)
    }

    fn push_term(&mut self, term: InteractionTerm) -> Result<()> {
        if term.op.site_dim() != self.site_dim {
            return Err(Error::InvalidArgument("term site dimension differs".into()));
        }
        if let Some(existing) = self.terms.iter_mut().find(|t| t.support == term.support) {
            let local = &existing.local + &term.local;
            *existing = InteractionTerm::new(&existing.support.clone(), local, self.site_dim)?;
        } else {
            self.terms.push(term);
        }
        self.terms.retain(|t| !t.is_zero());
        self.terms.sort_by(|a, b| {
            (a.support.len(), &a.support).cmp(&(b.support.len(), &b.support))
        });
        Ok(())
    }

    pub fn with_term(mut self, support: &[i64], local: DMatrix<C64>) -> Result<Self> {
        let term = InteractionTerm::new(support, local, self.site_dim)?;
        self.push_term(term)?;
        Ok(self)
    }

    /// Single-site interaction with generator `h`.
    pub fn one_site(h: DMatrix<C64>) -> Result<Self> {
        let d = h.nrows();
        Self::zero(d).with_term(&[0], h)
    }

    /// `Φ({0,1}) = -J σz⊗σz`, `Φ({0}) = -h σz`.
    pub fn ising(coupling: f64, field: f64) -> Self {
        let zz = pauli::sigma_z().kronecker(&pauli::sigma_z());
        Self::zero(2)
            .with_term(&[0, 1], zz * C64::new(-coupling, 0.0))
            .and_then(|i| i.with_term(&[0], pauli::sigma_z() * C64::new(-field, 0.0)))
            .expect("Ising generators are valid")
    }

    /// `Φ({0,1}) = -J σz⊗σz`, `Φ({0}) = -g σx`.
    pub fn transverse_ising(coupling: f64, transverse: f64) -> Self {
        let zz = pauli::sigma_z().kronecker(&pauli::sigma_z());
        Self::zero(2)
            .with_term(&[0, 1], zz * C64::new(-coupling, 0.0))
            .and_then(|i| i.with_term(&[0], pauli::sigma_x() * C64::new(-transverse, 0.0)))
            .expect("transverse Ising generators are valid")
    }

    /// `Ψ_A` with `Ψ_A([k+1, k+ℓ]) = γ^k(A)`.
    pub fn from_observable(a: &ChainOperator) -> Result<Self> {
        if !a.is_hermitian() {
            return Err(Error::NotHermitian(a.asymmetry()));
        }
        let support: Vec<i64> = (0..a.window().len() as i64).collect();
        Self::zero(a.site_dim()).with_term(&support, a.to_dense())
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn terms(&self) -> &[InteractionTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest diameter among nonzero generators.
    pub fn range(&self) -> usize {
        self.terms.iter().map(|t| t.diameter()).max().unwrap_or(0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                InteractionTerm::new(&t.support, &t.local * C64::new(c, 0.0), self.site_dim)
                    .expect("scaling keeps terms valid")
            })
            .collect();
        let mut out = Self {
            site_dim: self.site_dim,
            terms,
        };
        out.terms.retain(|t| !t.is_zero());
        out
    }

    pub fn add(&self, other: &Interaction) -> Result<Self> {
        if self.site_dim != other.site_dim {
            return Err(Error::InvalidArgument("site dimensions differ".into()));
        }
        let mut out = self.clone();
        for t in &other.terms {
            out.push_term(t.clone())?;
        }
        Ok(out)
    }

    /// `H_Λ = Σ_{X ⊆ Λ} Φ(X)`.
    pub fn local_hamiltonian(&self, window: Interval) -> Result<ChainOperator> {
        let mut h = ChainOperator::zeros(window, self.site_dim)?;
        for t in &self.terms {
            let diam = t.diameter() as i64;
            for k in window.start()..=window.end() - diam {
                h.add_embedded(&t.op, k, 1.0)?;
            }
        }
        h.into_hermitian()
    }

    /// Translates `(term index, shift)` of the generators that meet both `Λ` and its complement.
    pub fn surface_terms(&self, window: Interval) -> Vec<(usize, i64)> {
        let mut out = Vec::new();
        for (idx, t) in self.terms.iter().enumerate() {
            let diam = t.diameter() as i64;
            for k in window.start() - diam..=window.end() {
                let inside = t.support.iter().any(|&x| window.contains(x + k));
                let outside = t.support.iter().any(|&x| !window.contains(x + k));
                if inside && outside {
                    out.push((idx, k));
                }
            }
        }
        out
    }

    /// Surface energy `W_Λ`, on the window `Λ` widened by the range on both sides.
    pub fn surface_energy(&self, window: Interval) -> Result<ChainOperator> {
        let r = self.range() as i64;
        let collar = Interval::new(window.start() - r, window.end() + r)?;
        let mut w = ChainOperator::zeros(collar, self.site_dim)?;
        for (idx, k) in self.surface_terms(window) {
            w.add_embedded(&self.terms[idx].op, k, 1.0)?;
        }
        w.into_hermitian()
    }

    /// Terms crossing the bond between sites 0 and 1, on `[1-N₀, N₀]`.
    pub fn bond_energy(&self) -> Result<ChainOperator> {
        let r = self.range().max(1) as i64;
        let window = Interval::new(1 - r, r)?;
        let mut w = ChainOperator::zeros(window, self.site_dim)?;
        for t in &self.terms {
            let diam = t.diameter() as i64;
            for k in -diam..=0 {
                let crosses = t.support.iter().any(|&x| x + k <= 0)
                    && t.support.iter().any(|&x| x + k >= 1);
                if crosses {
                    w.add_embedded(&t.op, k, 1.0)?;
                }
            }
        }
        w.into_hermitian()
    }

    /// `A_Φ = Σ_{X ∋ 0} Φ(X)/|X|` on `[-N₀, N₀]`.
    pub fn mean_energy_observable(&self) -> Result<ChainOperator> {
        let r = self.range() as i64;
        let window = Interval::new(-r, r)?;
        let mut a = ChainOperator::zeros(window, self.site_dim)?;
        for t in &self.terms {
            let weight = 1.0 / t.support.len() as f64;
            for &x in &t.support {
                a.add_embedded(&t.op, -x, weight)?;
            }
        }
        a.into_hermitian()
    }

    /// `‖Φ‖₀ = Σ_{X ∋ 0} ‖Φ(X)‖ + sup_n ‖W_[1,n]‖`.
    pub fn norm(&self) -> Result<f64> {
        let mut local = 0.0;
        for t in &self.terms {
            let local_op = ChainOperator::hermitian(
                Interval::new(0, t.support.len() as i64 - 1)?,
                self.site_dim,
                t.local.clone(),
            )?;
            local += t.support.len() as f64 * local_op.operator_norm();
        }
        let r = self.range();
        if r == 0 {
            return Ok(local);
        }
        let mut sup: f64 = 0.0;
        for n in 1..2 * r {
            let w = self.surface_energy(Interval::sites(n)?)?;
            sup = sup.max(w.operator_norm());
        }
        // Beyond 2N₀ the two boundary parts act on disjoint sites and are translates.
        let bond = self.bond_energy()?.eigenvalues()?;
        let (lo, hi) = (bond[0], bond[bond.len() - 1]);
        sup = sup.max((2.0 * lo).abs()).max((2.0 * hi).abs());
        Ok(local + sup)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "interaction site_dim={} terms={}",
            self.site_dim,
            self.terms.len()
        );
        for t in &self.terms {
            let _ = writeln!(out, "term support={}", text::join(&t.support));
            text::write_matrix(&mut out, &t.local);
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let mut lines = Lines::new(s);
        Self::read(&mut lines)
    }

    pub(crate) fn read(lines: &mut Lines<'_>) -> Result<Self> {
        let (no, line) = lines.next_line()?;
        let head = text::header(no, line, "interaction")?;
        let d: usize = text::parse_num(no, text::field(&head, no, "site_dim")?)?;
        let count: usize = text::parse_num(no, text::field(&head, no, "terms")?)?;
        let mut out = Self::zero(d);
        for _ in 0..count {
            let (no, line) = lines.next_line()?;
            let head = text::header(no, line, "term")?;
            let support: Vec<i64> = text::parse_list(no, text::field(&head, no, "support")?)?;
            let dim = chain_dimension(d, support.len())?;
            let local = text::read_matrix(lines, dim, dim)?;
            let term = InteractionTerm::new(&support, local, d)
                .map_err(|e| text::parse_error(no, e.to_string()))?;
            out.push_term(term)?;
        }
        text::expect_end(lines)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{pauli::*, real_diag};
    use std::collections::BTreeSet;

    fn w(a: i64, b: i64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn id2() -> DMatrix<C64> {
        DMatrix::identity(2, 2)
    }

    fn zz() -> DMatrix<C64> {
        sigma_z().kronecker(&sigma_z())
    }

    fn close(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> bool {
        (a - b).camax() <= tol
    }

    #[test]
    fn ising_hamiltonian_two_and_three_sites() {
        let j = 0.7;
        let phi = Interaction::ising(j, 0.0);
        let h2 = phi.local_hamiltonian(w(1, 2)).unwrap();
        assert!(close(&h2.to_dense(), &(zz() * C64::new(-j, 0.0)), 1e-15));
        let h3 = phi.local_hamiltonian(w(1, 3)).unwrap();
        let expected = (zz().kronecker(&id2()) + id2().kronecker(&zz())) * C64::new(-j, 0.0);
        assert!(close(&h3.to_dense(), &expected, 1e-15));
    }

    #[test]
    fn zero_interaction_gives_zero_hamiltonian() {
        let h = Interaction::zero(2).local_hamiltonian(w(1, 3)).unwrap();
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn nearest_neighbour_surface_energy() {
        let phi = Interaction::transverse_ising(1.0, 0.4);
        let w5 = phi.surface_energy(w(1, 5)).unwrap();
        assert_eq!(w5.window(), w(0, 6));
        assert_eq!(phi.surface_terms(w(1, 5)).len(), 2);
        let bond = phi.terms().iter().find(|t| t.support() == [0, 1]).unwrap();
        let mut expected = ChainOperator::zeros(w(0, 6), 2).unwrap();
        expected.add_embedded(bond.operator(), 0, 1.0).unwrap();
        expected.add_embedded(bond.operator(), 5, 1.0).unwrap();
        assert!(close(&w5.to_dense(), &expected.to_dense(), 1e-15));
        assert!(w5.operator_norm() <= 2.0 * bond.operator().operator_norm() + 1e-12);
    }

    #[test]
    fn one_site_interaction_has_no_surface() {
        let phi = Interaction::one_site(real_diag(&[0.3, -1.0])).unwrap();
        assert_eq!(phi.surface_energy(w(1, 4)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn range_three_surface_terms_match_enumeration() {
        let d = 2;
        let mut phi = Interaction::zero(d);
        for support in [vec![0, 3], vec![0, 1, 3], vec![0, 2], vec![0, 1]] {
            let dim = 2usize.pow(support.len() as u32);
            let local = real_diag(&(0..dim).map(|i| i as f64 + 1.0).collect::<Vec<_>>());
            phi = phi.with_term(&support, local).unwrap();
        }
        let lambda = w(1, 6);
        // Enumerate every translate X + k meeting the window, independently of the library.
        let mut expected = BTreeSet::new();
        for t in phi.terms() {
            for k in -10..=10i64 {
                let set: Vec<i64> = t.support().iter().map(|x| x + k).collect();
                let inside = set.iter().filter(|&&x| (1..=6).contains(&x)).count();
                if inside > 0 && inside < set.len() {
                    expected.insert(set);
                }
            }
        }
        let got: BTreeSet<Vec<i64>> = phi
            .surface_terms(lambda)
            .into_iter()
            .map(|(i, k)| phi.terms()[i].support().iter().map(|x| x + k).collect())
            .collect();
        assert_eq!(got, expected);
        assert_eq!(got.len(), 18);
    }

    #[test]
    fn mean_energy_of_nearest_neighbour_term() {
        let t = sigma_x().kronecker(&sigma_x()) + zz() * C64::new(0.5, 0.0);
        let phi = Interaction::zero(2).with_term(&[0, 1], t.clone()).unwrap();
        let a = phi.mean_energy_observable().unwrap();
        assert_eq!(a.window(), w(-1, 1));
        let half = C64::new(0.5, 0.0);
        let expected = (t.kronecker(&id2()) + id2().kronecker(&t)) * half;
        assert!(close(&a.to_dense(), &expected, 1e-15));
    }

    #[test]
    fn mean_energy_of_one_site_term_and_zero() {
        let h = real_diag(&[2.0, -0.5]);
        let a = Interaction::one_site(h.clone()).unwrap().mean_energy_observable().unwrap();
        assert!(close(&a.to_dense(), &h, 1e-15));
        let z = Interaction::zero(2).mean_energy_observable().unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn observable_interaction_reproduces_translation_sum() {
        let a = ChainOperator::hermitian(w(1, 2), 2, zz()).unwrap();
        let psi = Interaction::from_observable(&a).unwrap();
        assert_eq!(psi.terms().len(), 1);
        let h3 = psi.local_hamiltonian(w(1, 3)).unwrap();
        let expected = zz().kronecker(&id2()) + id2().kronecker(&zz());
        assert!(close(&h3.to_dense(), &expected, 1e-15));

        let one = ChainOperator::hermitian(w(1, 1), 2, sigma_x()).unwrap();
        let psi = Interaction::from_observable(&one).unwrap();
        let h = psi.local_hamiltonian(w(1, 3)).unwrap();
        let mut sum = ChainOperator::zeros(w(1, 3), 2).unwrap();
        for k in 0..3 {
            sum.add_embedded(&one, k, 1.0).unwrap();
        }
        assert!(close(&h.to_dense(), &sum.to_dense(), 1e-15));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(Interaction::zero(2).norm().unwrap(), 0.0);
        let phi = Interaction::one_site(real_diag(&[0.5, -2.0])).unwrap();
        assert!((phi.norm().unwrap() - 2.0).abs() < 1e-14);
        // Two translates of σzσz contain the origin; W has at most two terms of norm one.
        let ising = Interaction::ising(1.0, 0.0);
        assert!((ising.norm().unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn block_decomposition_of_hamiltonian() {
        let phi = Interaction::transverse_ising(0.8, 0.3);
        let (m, j) = (2usize, 3usize);
        let n = (m * j) as i64;
        let h = phi.local_hamiltonian(w(1, n)).unwrap();
        let hm = phi.local_hamiltonian(w(1, m as i64)).unwrap();
        let bond = phi.bond_energy().unwrap();
        let mut assembled = ChainOperator::zeros(w(1, n), 2).unwrap();
        for i in 0..j as i64 {
            assembled.add_embedded(&hm, i * m as i64, 1.0).unwrap();
        }
        for i in 1..j as i64 {
            assembled.add_embedded(&bond, i * m as i64, 1.0).unwrap();
        }
        assert!(close(&h.to_dense(), &assembled.to_dense(), 1e-14));
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let phi = Interaction::transverse_ising(0.1 + 0.2, 1.0 / 3.0)
            .with_term(&[0, 2], sigma_y().kronecker(&sigma_y()) * C64::new(0.7, 0.0))
            .unwrap();
        let text = phi.to_text();
        let back = Interaction::from_text(&text).unwrap();
        assert_eq!(back.terms().len(), phi.terms().len());
        for (a, b) in phi.terms().iter().zip(back.terms()) {
            assert_eq!(a.support(), b.support());
            assert_eq!(a.local(), b.local());
        }
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn text_errors_carry_line_numbers() {
        let bad = "interaction site_dim=2 terms=1\nterm support=0\n1 0 0 0\n0 0 x 0\nend\n";
        match Interaction::from_text(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }
}
