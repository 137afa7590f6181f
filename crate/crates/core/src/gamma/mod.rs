//! Operators commuting with a deck group action.

pub mod group;
pub mod index;
pub mod operator;
pub mod serial;
pub mod spectral;

pub use group::{CayleyTable, DeckGroup, FiniteFactor, GroupElement, GroupSpec, Quotient};
pub use index::{gamma_index, IndexPolicy, IndexReport};
pub use operator::{compose_plus, EquivariantOperator, FiberDims, FloquetGrid, Sector};
pub use serial::{operator_from_json, operator_to_json, OperatorSpec};
pub use spectral::{
    apply_function, fredholm_gap, gamma_dimension, spectral_measure, spectral_projection, GapReport,
    MeasureSource, SpectralDecomposition, SpectralMeasure,
};
