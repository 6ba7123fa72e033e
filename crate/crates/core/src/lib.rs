//! Mean-field perturbed free energy densities of 1D quantum spin chains.
//!
//! ```
//! use fed_core::interactions::Interaction;
//! use fed_core::operators::{pauli, site_operator};
//! use fed_core::pressure::{extrapolate_limit, pressure_sequence, ScalarFunction};
//! use fed_core::states::StateModel;
//!
//! let phi = StateModel::buffered_gibbs(Interaction::ising(0.5, 0.0));
//! let a = site_operator(1, pauli::sigma_z())?;
//! let ns: Vec<usize> = (4..=8).collect();
//! let mut seq = pressure_sequence(&phi, &a, &ScalarFunction::Square, &ns)?;
//! let fit = extrapolate_limit(&mut seq)?;
//! assert!(fit.limit.is_finite());
//! # Ok::<(), fed_core::Error>(())
//! ```

pub mod error;
pub mod interactions;
pub mod operators;
pub mod oracle;
pub mod pressure;
pub mod random;
pub mod states;
mod text;
pub mod variational;

pub use error::{Error, Result};
pub use operators::{ChainOperator, Interval, C64};
