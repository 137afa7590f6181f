//! Cylindrical ends: product operators, spectral modifications, weighted and
//! extended kernels, index relations, spectral bottoms and heat decay.

pub mod aps;
pub mod decay;
pub mod kernels;
pub mod model;

pub use aps::{aps_consistency, spectrum_bottom_check, ApsPoint, ApsReport, BottomLevel, SpectrumBottomReport};
pub use decay::{cylinder_decay_check, CylinderDecayReport, MaskedNorm};
pub use kernels::{
    boundary_spectrum, default_delta_grid, default_u_grid, epsilon_sweep, extended_kernel_report, inside_mass,
    kernel_containment_residual,
    l2_index_report, model_solution_counts, modified_index, tail_eta, weighted_kernel, EpsilonPoint, EpsilonSweep,
    ExtendedKernelReport, L2IndexReport, ModelCounts, RelationPoint, WeightedSample,
};
pub use model::{
    cylinder_from_json, cylinder_to_json, product_operator, spectral_modification, tail_value, theta, theta_prime,
    Chirality, CylinderModel, CylinderSpec, Interior, InteriorSpec, KernelDims, ModifiedOperator, ThetaSpec,
};
