//! Eta invariants: sign sums, heat-trace integrals, spectral modification
//! jumps and tower limits.

pub mod integral;
pub mod modification;
pub mod tower;

pub use integral::{eta_heat_integral, eta_heat_integral_measure, eta_spectral, EtaConfig, EtaResult};
pub use modification::{
    eta_jump_check, eta_modification_bound_check, modification, modified_measure, EtaBoundReport, EtaJumpReport,
};
pub use tower::{
    tower_difference_diagnostic, tower_eta_convergence, DifferenceLevel, TowerConfig, TowerLevel, TowerReport,
};
