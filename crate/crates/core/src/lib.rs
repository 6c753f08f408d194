//! Bernoulli–Laplace urn chains and their signed generalizations: exact
//! spectra, mixing bounds, exact evolution and Monte Carlo simulation.

pub mod catalog;
pub mod chains;
pub mod combinatorics;
pub mod error;
pub mod exact;
pub mod model;
pub mod montecarlo;
pub mod space;
pub mod spectral;
pub mod verify;

pub use catalog::{catalog_for, Catalog, IrrepEntry, IrrepLabel, SignedIrrep, UnsignedIrrep};
pub use chains::{builtin_registry, kernel_row, ChainModel, KernelRow, Registry};
pub use error::{Error, Result};
pub use model::{Family, ModelSpec, State};
pub use space::{StateIndex, StateSpace};
