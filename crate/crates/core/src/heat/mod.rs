//! Heat semigroups, McKean–Singer and Atiyah checks, unfolding, Duhamel's
//! formula and kernel decay.

pub mod decay;
pub mod semigroup;

pub use decay::{
    envelope, gaussian_decay_check, graph_decay_check, heat_column, path_cycle_certificate, real_laplacian,
    relative_decay_check, BallCertificate, DecayPair, DecayReport, RelativeDecayReport,
};
pub use semigroup::{
    atiyah_check, duhamel_check, heat_operator, long_time_check, supertrace_curve, supertrace_curve_of,
    unfolding_check, AtiyahReport, CurveKind, DuhamelReport, HeatCurve, LongTimePoint,
};
