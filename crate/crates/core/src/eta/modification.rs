//! Spectral modifications `Q_u = D + u − ΠD` and their eta jumps.

use serde::{Deserialize, Serialize};

use super::integral::{eta_heat_integral_measure, EtaConfig};
use crate::error::{Error, Result};
use crate::gamma::{
    spectral_measure, EquivariantOperator, FloquetGrid, MeasureSource, SpectralDecomposition, SpectralMeasure,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaJumpReport {
    pub eta_q0: f64,
    pub eta_qu: f64,
    pub eta_q_minus_u: f64,
    /// `tr_Γ(Π)`.
    pub projection_trace: f64,
    pub jump_residual: f64,
    pub symmetrization_residual: f64,
    /// Largest disagreement between the sign sums and the heat integrals.
    pub heat_residual: f64,
}

/// `λ ↦ λ(1 − χ_{(−ε,ε)}(λ)) + u`.
pub fn modification(eps: f64, u: f64) -> impl Fn(f64) -> f64 + Sync + Copy {
    move |x| if x.abs() < eps { u } else { x + u }
}

/// Spectral measure of `Q_u`. Over finite groups `Q_u` is assembled as an
/// operator and decomposed again; over lattices the spectral mapping is
/// applied node by node.
pub fn modified_measure(dec: &SpectralDecomposition, t: &EquivariantOperator, eps: f64, u: f64) -> Result<SpectralMeasure> {
    if t.group().is_finite() {
        let q = dec.function_operator(modification(eps, u))?;
        spectral_measure(&q, &FloquetGrid::default_for(0))
    } else {
        let f = modification(eps, u);
        let values: Vec<(f64, f64)> = dec
            .sectors()
            .iter()
            .flat_map(|s| s.values.iter().map(move |&v| (f(v), s.weight)))
            .collect();
        let base = dec.measure();
        Ok(SpectralMeasure::from_weighted(
            values,
            MeasureSource::FloquetQuadrature {
                nodes: match base.source {
                    MeasureSource::FloquetQuadrature { nodes } => nodes,
                    MeasureSource::FiniteExact { .. } => 1,
                },
            },
            base.zero_tolerance,
            1e-12 * dec.scale().max(1.0),
        ))
    }
}

/// Checks `η(Q_u) − η(Q_0) = sgn(u) tr_Γ(Π)` and
/// `η(Q_0) = ½(η(Q_u) + η(Q_{−u}))`.
pub fn eta_jump_check(d: &EquivariantOperator, eps: f64, u: f64, grid: &FloquetGrid) -> Result<EtaJumpReport> {
    if !(eps > 0.0) || u == 0.0 || u.abs() >= eps {
        return Err(Error::InvalidInput(format!("need 0 < |u| < ε, got u = {u}, ε = {eps}")));
    }
    let dec = SpectralDecomposition::new(d, grid)?;
    let pi_trace = if d.group().is_finite() {
        dec.function_operator(|x| if x.abs() < eps { 1.0 } else { 0.0 })?
            .gamma_trace()
            .re
    } else {
        dec.measure().mass_open(-eps, eps)
    };
    let m0 = modified_measure(&dec, d, eps, 0.0)?;
    let mu = modified_measure(&dec, d, eps, u)?;
    let mmu = modified_measure(&dec, d, eps, -u)?;
    let (e0, eu, emu) = (m0.sign_sum(), mu.sign_sum(), mmu.sign_sum());
    let cfg = EtaConfig::default();
    let mut heat_residual: f64 = 0.0;
    for (m, e) in [(&m0, e0), (&mu, eu), (&mmu, emu)] {
        let h = eta_heat_integral_measure(m, &cfg)?;
        heat_residual = heat_residual.max((h.value - e).abs());
    }
    Ok(EtaJumpReport {
        eta_q0: e0,
        eta_qu: eu,
        eta_q_minus_u: emu,
        projection_trace: pi_trace,
        jump_residual: ((eu - e0) - u.signum() * pi_trace).abs(),
        symmetrization_residual: (e0 - 0.5 * (eu + emu)).abs(),
        heat_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaBoundReport {
    pub difference: f64,
    pub mass: f64,
    pub holds: bool,
}

/// `|η(D) − η(Q_0)| ≤ μ_D((−ε,ε)∖{0})`.
pub fn eta_modification_bound_check(d: &EquivariantOperator, eps: f64, grid: &FloquetGrid) -> Result<EtaBoundReport> {
    let dec = SpectralDecomposition::new(d, grid)?;
    let m = dec.measure();
    let q0 = modified_measure(&dec, d, eps, 0.0)?;
    let difference = (m.sign_sum() - q0.sign_sum()).abs();
    let mass = m.mass_open(-eps, eps) - m.kernel_mass();
    Ok(EtaBoundReport {
        difference,
        mass,
        holds: difference <= mass + 1e-12,
    })
}
