//! Translation-invariant states with computable local densities.

pub mod entropy;
pub mod fcs;
pub mod qms;

use std::fmt::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::interactions::Interaction;
use crate::operators::{perturbed_trace_exp, ChainOperator, Interval, C64, DIMENSION_CAP};
use crate::text::{self, Lines};

pub use entropy::{entropy, mean_relative_entropy_estimate, relative_entropy, Reference, LEAKAGE_TOL};
pub use fcs::{fcs_alpha, upper_factorization_constant, FcsTriple};
pub use qms::{
    stationary_distribution, CentralizerBasis, CentralizerGroup, QmsBlock, QmsData, TildeLayout,
    TildeOperator,
};

/// Largest buffered window dimension when the Hamiltonian is not diagonal.
pub const BUFFERED_DENSE_CAP: usize = 1024;

/// Default buffer `2·range·⌈log(1/tol)⌉` at `tol = 1e-6`.
pub fn default_buffer(interaction: &Interaction) -> usize {
    let steps = (1e6f64).ln().ceil() as usize;
    2 * interaction.range().max(1) * steps
}

#[derive(Clone, Debug)]
pub enum StateModel {
    /// `⊗_ℤ block` with the block on `[1, m]`; compatible along multiples of `m`.
    Product { block: ChainOperator },
    /// Average of the product over its `m` translates.
    PeriodizedAverage { block: ChainOperator },
    /// `e^{-H_[1,n]} / Tr e^{-H_[1,n]}`.
    LocalGibbs(Interaction),
    /// Local Gibbs state on `[1-M, n+M]` restricted to `[1, n]`.
    BufferedGibbs { interaction: Interaction, buffer: usize },
    FinitelyCorrelated(FcsTriple),
    QuantumMarkov(QmsData),
}

fn check_block(block: &ChainOperator) -> Result<()> {
    if block.window() != Interval::sites(block.window().len())? {
        return Err(Error::InvalidModel(format!(
            "block must live on [1,m], got {}",
            block.window()
        )));
    }
    if !block.is_hermitian() || (block.trace().re - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidModel("block is not a unit-trace density".into()));
    }
    let min = block.eigenvalues()?[0];
    if min < -1e-10 {
        return Err(Error::InvalidModel(format!(
            "block has negative eigenvalue {min:e}"
        )));
    }
    Ok(())
}

/// Normalized Gibbs density of `h`.
pub fn gibbs_density(h: &ChainOperator) -> Result<ChainOperator> {
    let identity = ChainOperator::identity(h.window(), h.site_dim())?;
    Ok(perturbed_trace_exp(&identity, h)?.density)
}

/// Density of `⊗_ℤ block` (blocks on `[jm+1, jm+m]`) composed with `γ^phase`, on `window`.
pub fn product_window(block: &ChainOperator, phase: i64, window: Interval) -> Result<ChainOperator> {
    let m = block.window().len() as i64;
    let shifted = window.shift(phase);
    let mut out: Option<ChainOperator> = None;
    let mut site = shifted.start();
    while site <= shifted.end() {
        let tile = (site - 1).div_euclid(m);
        let tile_start = tile * m + 1;
        let stop = (tile_start + m - 1).min(shifted.end());
        let keep = Interval::new(site - tile_start + 1, stop - tile_start + 1)?;
        let piece = block.partial_trace(keep)?.translated(tile_start - 1);
        out = Some(match out {
            None => piece,
            Some(acc) => acc.kron(&piece)?,
        });
        site = stop + 1;
    }
    let out = out.ok_or_else(|| Error::InvalidArgument("empty window".into()))?;
    Ok(out.translated(-phase))
}

impl StateModel {
    pub fn product(block: ChainOperator) -> Result<Self> {
        check_block(&block)?;
        Ok(Self::Product { block })
    }

    /// `⊗ I/d`.
    pub fn tracial(site_dim: usize) -> Result<Self> {
        Self::product(ChainOperator::tracial(Interval::sites(1)?, site_dim)?)
    }

    pub fn periodized_average(block: ChainOperator) -> Result<Self> {
        check_block(&block)?;
        Ok(Self::PeriodizedAverage { block })
    }

    pub fn local_gibbs(interaction: Interaction) -> Self {
        Self::LocalGibbs(interaction)
    }

    pub fn buffered_gibbs(interaction: Interaction) -> Self {
        let buffer = default_buffer(&interaction);
        Self::BufferedGibbs { interaction, buffer }
    }

    pub fn buffered_gibbs_with(interaction: Interaction, buffer: usize) -> Self {
        Self::BufferedGibbs { interaction, buffer }
    }

    pub fn site_dim(&self) -> usize {
        match self {
            Self::Product { block } | Self::PeriodizedAverage { block } => block.site_dim(),
            Self::LocalGibbs(i) | Self::BufferedGibbs { interaction: i, .. } => i.site_dim(),
            Self::FinitelyCorrelated(f) => f.site_dim(),
            Self::QuantumMarkov(q) => q.site_dim(),
        }
    }

    /// Product states are invariant only under translations by their period.
    pub fn is_translation_invariant(&self) -> bool {
        match self {
            Self::Product { block } => block.window().len() == 1,
            Self::LocalGibbs(_) => false,
            _ => true,
        }
    }

    /// Buffer actually used at volume `n`: the requested one, shrunk until
    /// the buffered window fits the dimension cap.
    pub fn effective_buffer(&self, n: usize) -> Option<usize> {
        let Self::BufferedGibbs {
            interaction,
            buffer,
        } = self
        else {
            return None;
        };
        let diagonal = interaction
            .terms()
            .iter()
            .all(|t| t.operator().is_diagonal());
        let cap = if diagonal {
            DIMENSION_CAP
        } else {
            BUFFERED_DENSE_CAP
        };
        let d = interaction.site_dim().max(2) as f64;
        let max_sites = (cap as f64).log(d).floor() as usize;
        let room = max_sites.saturating_sub(n) / 2;
        Some((*buffer).min(room))
    }

    /// Density on `[1, n]`.
    pub fn local_density(&self, n: usize) -> Result<ChainOperator> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        let window = Interval::sites(n)?;
        match self {
            Self::Product { block } => product_window(block, 0, window),
            Self::PeriodizedAverage { block } => {
                let m = block.window().len();
                let mut acc = ChainOperator::zeros(window, block.site_dim())?;
                for k in 0..m {
                    acc = acc.add_scaled(&product_window(block, k as i64, window)?, 1.0 / m as f64)?;
                }
                acc.into_hermitian()
            }
            Self::LocalGibbs(interaction) => gibbs_density(&interaction.local_hamiltonian(window)?),
            Self::BufferedGibbs { interaction, .. } => {
                let m = self.effective_buffer(n).unwrap_or(0) as i64;
                let wide = Interval::new(1 - m, n as i64 + m)?;
                gibbs_density(&interaction.local_hamiltonian(wide)?)?.partial_trace(window)
            }
            Self::FinitelyCorrelated(f) => f.density(n),
            Self::QuantumMarkov(q) => q.local_density(n),
        }
    }

    /// Density on an arbitrary window.
    pub fn density_on(&self, window: Interval) -> Result<ChainOperator> {
        match self {
            Self::Product { block } => product_window(block, 0, window),
            _ => Ok(self
                .local_density(window.len())?
                .translated(window.start() - 1)),
        }
    }

    /// `ω(A)` for Hermitian `A`.
    pub fn expectation(&self, a: &ChainOperator) -> Result<f64> {
        a.expectation(&self.density_on(a.window())?)
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Product { block } => format!(
                "product(d={}, period={})",
                block.site_dim(),
                block.window().len()
            ),
            Self::PeriodizedAverage { block } => format!(
                "periodized_average(d={}, period={})",
                block.site_dim(),
                block.window().len()
            ),
            Self::LocalGibbs(i) => format!(
                "local_gibbs(d={}, range={}, terms={})",
                i.site_dim(),
                i.range(),
                i.terms().len()
            ),
            Self::BufferedGibbs {
                interaction,
                buffer,
            } => format!(
                "buffered_gibbs(d={}, range={}, buffer={buffer})",
                interaction.site_dim(),
                interaction.range()
            ),
            Self::FinitelyCorrelated(f) => format!(
                "finitely_correlated(d={}, memory={})",
                f.site_dim(),
                text::join(f.blocks())
            ),
            Self::QuantumMarkov(q) => format!(
                "quantum_markov(d={}, blocks={})",
                q.site_dim(),
                q.blocks()
                    .iter()
                    .map(|b| format!("{}x{}", b.d, b.m))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            Self::Product { block } | Self::PeriodizedAverage { block } => {
                let kind = if matches!(self, Self::Product { .. }) {
                    "product"
                } else {
                    "periodized_average"
                };
                let _ = writeln!(
                    out,
                    "state kind={kind} site_dim={} period={}",
                    block.site_dim(),
                    block.window().len()
                );
                text::write_matrix(&mut out, &block.to_dense());
            }
            Self::LocalGibbs(i) => {
                out.push_str("state kind=local_gibbs\n");
                out.push_str(&i.to_text());
            }
            Self::BufferedGibbs {
                interaction,
                buffer,
            } => {
                let _ = writeln!(out, "state kind=buffered_gibbs buffer={buffer}");
                out.push_str(&interaction.to_text());
            }
            Self::FinitelyCorrelated(f) => {
                let _ = writeln!(
                    out,
                    "state kind=finitely_correlated site_dim={} blocks={}",
                    f.site_dim(),
                    text::join(f.blocks())
                );
                text::write_matrix(&mut out, f.map());
                text::write_matrix(&mut out, f.memory_state());
            }
            Self::QuantumMarkov(q) => {
                let blocks: Vec<String> =
                    q.blocks().iter().map(|b| format!("{}:{}", b.d, b.m)).collect();
                let weights: Vec<String> = q.weights().iter().map(|&w| text::fmt_f64(w)).collect();
                let _ = writeln!(
                    out,
                    "state kind=quantum_markov blocks={} weights={}",
                    blocks.join(","),
                    weights.join(",")
                );
                for i in 0..q.blocks().len() {
                    for j in 0..q.blocks().len() {
                        text::write_matrix(&mut out, q.transition(i, j));
                    }
                }
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let mut lines = Lines::new(s);
        let (no, line) = lines.next_line()?;
        let head = text::header(no, line, "state")?;
        let invalid = |e: Error| text::parse_error(no, e.to_string());
        let model = match text::field(&head, no, "kind")? {
            kind @ ("product" | "periodized_average") => {
                let d: usize = text::parse_num(no, text::field(&head, no, "site_dim")?)?;
                let m: usize = text::parse_num(no, text::field(&head, no, "period")?)?;
                let window = Interval::sites(m).map_err(invalid)?;
                let dim = crate::operators::chain_dimension(d, m).map_err(invalid)?;
                let matrix = text::read_matrix(&mut lines, dim, dim)?;
                let block = ChainOperator::hermitian(window, d, matrix).map_err(invalid)?;
                if kind == "product" {
                    Self::product(block)
                } else {
                    Self::periodized_average(block)
                }
                .map_err(invalid)?
            }
            "local_gibbs" => Self::LocalGibbs(Interaction::read(&mut lines)?),
            "buffered_gibbs" => {
                let buffer: usize = text::parse_num(no, text::field(&head, no, "buffer")?)?;
                Self::BufferedGibbs {
                    interaction: Interaction::read(&mut lines)?,
                    buffer,
                }
            }
            "finitely_correlated" => {
                let d: usize = text::parse_num(no, text::field(&head, no, "site_dim")?)?;
                let blocks: Vec<usize> = text::parse_list(no, text::field(&head, no, "blocks")?)?;
                let dm: usize = blocks.iter().sum();
                let map = text::read_matrix(&mut lines, dm * dm, (d * dm) * (d * dm))?;
                let rho = text::read_matrix(&mut lines, dm, dm)?;
                Self::FinitelyCorrelated(FcsTriple::new(d, blocks, map, rho).map_err(invalid)?)
            }
            "quantum_markov" => {
                let blocks = text::field(&head, no, "blocks")?
                    .split(',')
                    .map(|b| {
                        let (d, m) = b
                            .split_once(':')
                            .ok_or_else(|| text::parse_error(no, format!("block `{b}` is not d:m")))?;
                        Ok(QmsBlock::new(text::parse_num(no, d)?, text::parse_num(no, m)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let weights: Vec<f64> = text::parse_list(no, text::field(&head, no, "weights")?)?;
                let mut transitions: Vec<Vec<DMatrix<C64>>> = Vec::new();
                for bi in &blocks {
                    let mut row = Vec::new();
                    for bj in &blocks {
                        let dim = bi.m * bj.d;
                        row.push(text::read_matrix(&mut lines, dim, dim)?);
                    }
                    transitions.push(row);
                }
                Self::QuantumMarkov(QmsData::new(blocks, transitions, weights).map_err(invalid)?)
            }
            other => return Err(text::parse_error(no, format!("unknown state kind `{other}`"))),
        };
        text::expect_end(&mut lines)?;
        Ok(model)
    }
}

/// Finite convex combination of ergodic states.
#[derive(Clone, Debug)]
pub struct ErgodicMixture {
    components: Vec<(f64, StateModel)>,
}

impl ErgodicMixture {
    pub fn new(components: Vec<(f64, StateModel)>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidModel("mixture has no components".into()))?;
        let d = first.1.site_dim();
        if components.iter().any(|(w, s)| *w < 0.0 || s.site_dim() != d) {
            return Err(Error::InvalidModel(
                "mixture weights must be non-negative and site dimensions equal".into(),
            ));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("mixture weights sum to {total}")));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[(f64, StateModel)] {
        &self.components
    }

    pub fn local_density(&self, n: usize) -> Result<ChainOperator> {
        let mut acc = ChainOperator::zeros(Interval::sites(n)?, self.components[0].1.site_dim())?;
        for (w, s) in &self.components {
            acc = acc.add_scaled(&s.local_density(n)?, *w)?;
        }
        acc.into_hermitian()
    }

    pub fn expectation(&self, a: &ChainOperator) -> Result<f64> {
        self.components
            .iter()
            .map(|(w, s)| Ok(w * s.expectation(a)?))
            .sum()
    }
}
