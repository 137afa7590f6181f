//! Γ-eta invariants: the sign-sum oracle and the heat-trace integral.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::{EquivariantOperator, FloquetGrid, SpectralMeasure, spectral_measure};
use crate::quadrature::{extrapolate_to_zero, integrate, QuadratureConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaResult {
    pub value: f64,
    pub oracle: Option<f64>,
    /// Split point between the small-t quadrature and the closed-form tail.
    pub kappa: f64,
    /// Smallest lower limit used before extrapolating to zero.
    pub delta: f64,
    pub intervals: usize,
    pub evaluations: usize,
    pub quadrature_error: f64,
    /// Spread of the extrapolation table.
    pub extrapolation_spread: f64,
    /// Number of atoms summed in the tail.
    pub tail_terms: usize,
    /// Value recomputed with split point `2κ`.
    pub kappa_check: Option<f64>,
    /// Whether a regularized limit was needed; at finite dimension the
    /// small-t integrand is bounded, so this is always false.
    pub regularized: bool,
}

impl EtaResult {
    pub fn oracle_residual(&self) -> Option<f64> {
        self.oracle.map(|o| (self.value - o).abs())
    }

    pub fn kappa_residual(&self) -> Option<f64> {
        self.kappa_check.map(|v| (self.value - v).abs())
    }
}

/// `Σ sign(λ) m_Γ(λ)` over nonzero atoms.
pub fn eta_spectral(t: &EquivariantOperator, grid: &FloquetGrid) -> Result<f64> {
    Ok(spectral_measure(t, grid)?.sign_sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaConfig {
    pub quadrature: QuadratureConfig,
    /// Split point; defaults to `1/gap²`.
    pub kappa: Option<f64>,
    /// Number of lower limits `h_j = h_0 2^{-j}` in the extrapolation.
    pub extrapolation_levels: usize,
    /// Largest lower limit, relative to `√κ`.
    pub first_cut: f64,
    pub check_double_kappa: bool,
}

impl Default for EtaConfig {
    fn default() -> Self {
        Self {
            quadrature: QuadratureConfig::default(),
            kappa: None,
            extrapolation_levels: 5,
            first_cut: 1e-3,
            check_double_kappa: true,
        }
    }
}

/// Nonzero atoms of a measure.
fn nonzero_atoms(m: &SpectralMeasure) -> Vec<(f64, f64)> {
    m.atoms
        .iter()
        .copied()
        .filter(|a| a.0.abs() > m.zero_tolerance)
        .collect()
}

/// `(2/√π) ∫_h^{√κ} Σ m λ e^{−τ²λ²} dτ` for a list of lower limits, sharing
/// the adaptive part.
fn small_time_part(atoms: &[(f64, f64)], lows: &[f64], top: f64, cfg: &QuadratureConfig) -> Result<(Vec<f64>, usize, usize, f64)> {
    let integrand = |tau: f64| -> f64 {
        atoms
            .iter()
            .map(|&(l, m)| m * l * (-tau * tau * l * l).exp())
            .sum::<f64>()
            * 2.0
            / PI.sqrt()
    };
    let main = integrate(integrand, lows[0], top, cfg)?;
    let mut values = vec![main.value];
    let mut intervals = main.intervals;
    let mut evaluations = main.evaluations;
    let mut error = main.error;
    let mut acc = main.value;
    for w in lows.windows(2) {
        let piece = integrate(integrand, w[1], w[0], cfg)?;
        acc += piece.value;
        values.push(acc);
        intervals += piece.intervals;
        evaluations += piece.evaluations;
        error += piece.error;
    }
    Ok((values, intervals, evaluations, error))
}

fn eta_at_kappa(atoms: &[(f64, f64)], kappa: f64, cfg: &EtaConfig) -> Result<(f64, usize, usize, f64, f64, f64)> {
    let top = kappa.sqrt();
    let levels = cfg.extrapolation_levels.max(2);
    let lows: Vec<f64> = (0..levels)
        .map(|j| cfg.first_cut * top * 0.5f64.powi(j as i32))
        .collect();
    let (values, intervals, evaluations, error) = small_time_part(atoms, &lows, top, &cfg.quadrature)?;
    let small = extrapolate_to_zero(&lows, &values);
    let spread = values
        .iter()
        .map(|v| (v - small).abs())
        .fold(0.0, f64::max);
    let tail: f64 = atoms
        .iter()
        .map(|&(l, m)| m * l.signum() * libm::erfc(l.abs() * top))
        .sum();
    let delta = lows[levels - 1] * lows[levels - 1];
    Ok((small + tail, intervals, evaluations, error, spread, delta))
}

/// `η = (1/√π)∫₀^∞ t^{−1/2} tr_Γ(T e^{−tT²}) dt` from a spectral measure:
/// the small-time part by adaptive quadrature after `t = τ²`, extrapolated in
/// the lower limit, and the tail `Σ m sign(λ) erfc(|λ|√κ)` in closed form.
pub fn eta_heat_integral_measure(m: &SpectralMeasure, cfg: &EtaConfig) -> Result<EtaResult> {
    let atoms = nonzero_atoms(m);
    let gap = m.gap();
    let kappa = match cfg.kappa {
        Some(k) if k > 0.0 && k.is_finite() => k,
        Some(k) => return Err(Error::InvalidInput(format!("split point must be positive, got {k}"))),
        None if gap.is_finite() => 1.0 / (gap * gap),
        None => 1.0,
    };
    if atoms.is_empty() {
        return Ok(EtaResult {
            value: 0.0,
            oracle: Some(0.0),
            kappa,
            delta: 0.0,
            intervals: 0,
            evaluations: 0,
            quadrature_error: 0.0,
            extrapolation_spread: 0.0,
            tail_terms: 0,
            kappa_check: cfg.check_double_kappa.then_some(0.0),
            regularized: false,
        });
    }
    let (value, intervals, evaluations, error, spread, delta) = eta_at_kappa(&atoms, kappa, cfg)?;
    let kappa_check = if cfg.check_double_kappa {
        Some(eta_at_kappa(&atoms, 2.0 * kappa, cfg)?.0)
    } else {
        None
    };
    Ok(EtaResult {
        value,
        oracle: Some(m.sign_sum()),
        kappa,
        delta,
        intervals,
        evaluations,
        quadrature_error: error,
        extrapolation_spread: spread,
        tail_terms: atoms.len(),
        kappa_check,
        regularized: false,
    })
}

pub fn eta_heat_integral(t: &EquivariantOperator, grid: &FloquetGrid, cfg: &EtaConfig) -> Result<EtaResult> {
    eta_heat_integral_measure(&spectral_measure(t, grid)?, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::{DeckGroup, FiberDims, GroupElement};
    use crate::linalg::real_diagonal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[f64]) -> EquivariantOperator {
        EquivariantOperator::new(
            DeckGroup::trivial(),
            FiberDims::ungraded(values.len()),
            [(GroupElement(vec![]), real_diagonal(values))],
        )
        .unwrap()
    }

    #[test]
    fn single_positive_eigenvalue() {
        let grid = FloquetGrid::default_for(0);
        let r = eta_heat_integral(&diag(&[1.0]), &grid, &EtaConfig::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-8, "{r:?}");
        assert!(!r.regularized);
    }

    #[test]
    fn symmetric_spectrum() {
        let grid = FloquetGrid::default_for(0);
        let r = eta_heat_integral(&diag(&[-0.7, 0.7]), &grid, &EtaConfig::default()).unwrap();
        assert!(r.value.abs() < 1e-10);
        assert_eq!(eta_spectral(&diag(&[-1.0, 2.0, 3.0]), &grid).unwrap(), 1.0);
    }

    #[test]
    fn random_gapped_over_z4() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = DeckGroup::cyclic(4).unwrap();
        let support = g.elements().unwrap();
        let t = EquivariantOperator::random_selfadjoint(g, FiberDims::ungraded(5), &support, 1.0, &mut rng)
            .unwrap();
        let grid = FloquetGrid::default_for(0);
        let r = eta_heat_integral(&t, &grid, &EtaConfig::default()).unwrap();
        assert!(r.oracle_residual().unwrap() < 1e-6, "{r:?}");
        assert!(r.kappa_residual().unwrap() < 1e-7);
        assert!((r.oracle.unwrap() - eta_spectral(&t, &grid).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn kernel_is_excluded() {
        let grid = FloquetGrid::default_for(0);
        let r = eta_heat_integral(&diag(&[0.0, 0.5, 2.0, -3.0]), &grid, &EtaConfig::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }
}
