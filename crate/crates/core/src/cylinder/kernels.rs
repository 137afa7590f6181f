//! Weighted kernels, extended solutions and L²-indices of modified
//! cylinder operators.

use serde::{Deserialize, Serialize};

use super::model::{inside, spectral_modification, tail_value, CylinderModel, KernelDims, ModifiedOperator};
use crate::error::{Error, Result};
use crate::linalg::null_space;

/// Integer comparisons of Γ-dimensions use this slack.
pub const DIM_TOL: f64 = 1e-9;

/// Closed-form solution counts of a pure half-cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelCounts {
    pub l2_plus: f64,
    pub ext_plus: f64,
    pub l2_minus: f64,
    pub ext_minus: f64,
    pub h_plus: f64,
    pub h_minus: f64,
}

/// Counts the separated solutions `e^{−κr}` (plus) and `e^{κr}` (minus) with
/// `κ = λ(1 − χ_ε(λ)) + u`: square integrable when they decay, extended when
/// merely bounded. `spectrum` lists `(λ, multiplicity)`.
pub fn model_solution_counts(spectrum: &[(f64, f64)], eps: f64, u: f64) -> ModelCounts {
    let mut c = ModelCounts {
        l2_plus: 0.0,
        ext_plus: 0.0,
        l2_minus: 0.0,
        ext_minus: 0.0,
        h_plus: 0.0,
        h_minus: 0.0,
    };
    for &(l, m) in spectrum {
        let k = tail_value(l, eps, u);
        if k > 0.0 {
            c.l2_plus += m;
        }
        if k >= 0.0 {
            c.ext_plus += m;
        }
        if k < 0.0 {
            c.l2_minus += m;
        }
        if k <= 0.0 {
            c.ext_minus += m;
        }
    }
    c.h_plus = c.ext_plus - c.l2_plus;
    c.h_minus = c.ext_minus - c.l2_minus;
    c
}

/// Smallest nonzero `|κ|` over the tail spectrum: weights below it do not
/// change which modes count.
pub fn weight_window(m: &ModifiedOperator) -> f64 {
    (0..m.sectors().len())
        .flat_map(|s| m.tail_values(s))
        .map(f64::abs)
        .filter(|&k| k > super::model::MARGINAL_TOL)
        .fold(f64::INFINITY, f64::min)
}

/// Kernel dimensions in `e^{δθ}L²`, i.e. of `e^{−δθ}De^{δθ}` in `L²`.
pub fn weighted_kernel(m: &ModifiedOperator, delta: f64) -> Result<KernelDims> {
    if m.eps() > 0.0 && delta.abs() >= m.eps() {
        return Err(Error::InvalidInput(format!("weight {delta} must lie inside (−ε, ε) with ε = {}", m.eps())));
    }
    m.kernel_dims(delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub delta: f64,
    pub plus: f64,
    pub minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedKernelReport {
    pub l2_plus: f64,
    pub l2_minus: f64,
    pub ext_plus: f64,
    pub ext_minus: f64,
    pub h_plus: f64,
    pub h_minus: f64,
    /// Samples at `−δ` (L²) and `+δ` (extended) for each grid point.
    pub samples: Vec<WeightedSample>,
    pub min_gap_ratio: f64,
}

/// Default weight grid `{w/4, w/8, w/16}` below the weight window `w`.
pub fn default_delta_grid(m: &ModifiedOperator) -> Vec<f64> {
    let w = weight_window(m).min(if m.eps() > 0.0 { m.eps() } else { f64::INFINITY });
    let w = if w.is_finite() { w } else { 1.0 };
    vec![w / 4.0, w / 8.0, w / 16.0]
}

/// L²-kernels from slightly decaying weights, extended kernels from slightly
/// growing weights; `h± = Ext − L²`. Requires identical dimensions on at
/// least three grid points.
pub fn extended_kernel_report(m: &ModifiedOperator, deltas: &[f64]) -> Result<ExtendedKernelReport> {
    if deltas.len() < 3 {
        return Err(Error::InvalidInput("the weight grid needs at least three points".into()));
    }
    let window = weight_window(m);
    for &d in deltas {
        if !(d > 0.0 && d < window && (m.eps() == 0.0 || d < m.eps())) {
            return Err(Error::InvalidInput(format!(
                "weight {d} must lie in (0, {}) to keep the tail modes apart",
                window.min(if m.eps() > 0.0 { m.eps() } else { f64::INFINITY })
            )));
        }
    }
    let mut samples = Vec::new();
    let mut gap = f64::INFINITY;
    for &d in deltas {
        for delta in [-d, d] {
            let k = m.kernel_dims(delta)?;
            gap = gap.min(k.min_gap_ratio);
            samples.push(WeightedSample {
                delta,
                plus: k.plus,
                minus: k.minus,
            });
        }
    }
    let stable = |sel: &dyn Fn(&WeightedSample) -> bool| -> Result<(f64, f64)> {
        let chosen: Vec<&WeightedSample> = samples.iter().filter(|s| sel(s)).collect();
        let first = chosen[0];
        if chosen
            .iter()
            .any(|s| (s.plus - first.plus).abs() > DIM_TOL || (s.minus - first.minus).abs() > DIM_TOL)
        {
            return Err(Error::Unstable(format!(
                "weighted kernel dimensions vary across the weight grid ({:?}); extend the cylinder",
                chosen.iter().map(|s| (s.delta, s.plus, s.minus)).collect::<Vec<_>>()
            )));
        }
        Ok((first.plus, first.minus))
    };
    let (l2_plus, l2_minus) = stable(&|s| s.delta < 0.0)?;
    let (ext_plus, ext_minus) = stable(&|s| s.delta > 0.0)?;
    Ok(ExtendedKernelReport {
        l2_plus,
        l2_minus,
        ext_plus,
        ext_minus,
        h_plus: ext_plus - l2_plus,
        h_minus: ext_minus - l2_minus,
        samples,
        min_gap_ratio: gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationPoint {
    pub u: f64,
    /// `ind_Γ(D_{ε,u})`.
    pub index_shift_up: f64,
    /// `ind_Γ(D_{ε,−u})`.
    pub index_shift_down: f64,
    /// `ind_Γ(D_{ε,u}) − h⁺ − L²-ind`.
    pub upper_residual: f64,
    /// `ind_Γ(D_{ε,−u}) + h⁻ − L²-ind`.
    pub lower_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2IndexReport {
    pub eps: f64,
    pub l2_index: f64,
    pub kernels: ExtendedKernelReport,
    pub points: Vec<RelationPoint>,
}

impl L2IndexReport {
    pub fn holds(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.upper_residual.abs() <= DIM_TOL && p.lower_residual.abs() <= DIM_TOL)
    }
}

/// `ind_Γ(D_{ε,u})` from plain kernels.
pub fn modified_index(m: &ModifiedOperator) -> Result<f64> {
    Ok(m.kernel_dims(0.0)?.index())
}

/// `L²-ind_Γ(D_ε)` with the relations
/// `ind(D_{ε,u}) − h⁺ = L²-ind = ind(D_{ε,−u}) + h⁻` on a grid of `u`.
pub fn l2_index_report(m: &ModifiedOperator, u_grid: &[f64]) -> Result<L2IndexReport> {
    let eps = m.eps();
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("the L²-index report needs ε > 0".into()));
    }
    let base = m.with_u(0.0);
    let kernels = extended_kernel_report(&base, &default_delta_grid(&base))?;
    let l2_index = kernels.l2_plus - kernels.l2_minus;
    let mut points = Vec::new();
    for &u in u_grid {
        if !(u > 0.0 && u <= eps / 2.0) {
            return Err(Error::InvalidInput(format!("shift {u} must lie in (0, ε/2]")));
        }
        let up = modified_index(&base.with_u(u))?;
        let down = modified_index(&base.with_u(-u))?;
        points.push(RelationPoint {
            u,
            index_shift_up: up,
            index_shift_down: down,
            upper_residual: up - kernels.h_plus - l2_index,
            lower_residual: down + kernels.h_minus - l2_index,
        });
    }
    Ok(L2IndexReport {
        eps,
        l2_index,
        kernels,
        points,
    })
}

/// Default shift grid `{ε/2, ε/4, ε/8}`.
pub fn default_u_grid(eps: f64) -> Vec<f64> {
    vec![eps / 2.0, eps / 4.0, eps / 8.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPoint {
    pub eps: f64,
    pub l2_index: f64,
    pub l2_plus: f64,
    pub l2_minus: f64,
    pub h_plus: f64,
    pub h_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSweep {
    pub points: Vec<EpsilonPoint>,
    /// Smallest nonzero `|λ|` of the boundary operator.
    pub boundary_gap: f64,
}

impl EpsilonSweep {
    pub fn stable(&self) -> bool {
        let Some(first) = self.points.first() else { return true };
        self.points.iter().all(|p| {
            [
                (p.l2_index, first.l2_index),
                (p.l2_plus, first.l2_plus),
                (p.l2_minus, first.l2_minus),
                (p.h_plus, first.h_plus),
                (p.h_minus, first.h_minus),
            ]
            .iter()
            .all(|(a, b)| (a - b).abs() <= DIM_TOL)
        })
    }
}

/// `L²-ind_Γ(D_ε)` and `h±_{Γ,ε}` for each `ε` below the first nonzero
/// `|λ|` of the boundary.
pub fn epsilon_sweep(model: &CylinderModel, eps_grid: &[f64]) -> Result<EpsilonSweep> {
    let probe = spectral_modification(model, 0.0, 0.0)?;
    let tol = super::model::MARGINAL_TOL;
    let boundary_gap = probe
        .sectors()
        .iter()
        .flat_map(|s| s.values.iter().map(|v| v.abs()))
        .filter(|&v| v > tol)
        .fold(f64::INFINITY, f64::min);
    let mut points = Vec::new();
    for &eps in eps_grid {
        if !(eps > 0.0 && eps < boundary_gap) {
            return Err(Error::InvalidInput(format!(
                "ε = {eps} must lie below the first nonzero |λ| = {boundary_gap}"
            )));
        }
        let m = probe.with_params(eps, 0.0);
        let k = extended_kernel_report(&m, &default_delta_grid(&m))?;
        points.push(EpsilonPoint {
            eps,
            l2_index: k.l2_plus - k.l2_minus,
            l2_plus: k.l2_plus,
            l2_minus: k.l2_minus,
            h_plus: k.h_plus,
            h_minus: k.h_minus,
        });
    }
    Ok(EpsilonSweep { points, boundary_gap })
}

/// Largest `‖(1 − P)Z‖` over sectors, where `Z` spans the L²-kernel of
/// `D⁺_ε` and `P` projects onto the L²-kernel of `D⁺`.
pub fn kernel_containment_residual(m: &ModifiedOperator) -> Result<f64> {
    let plain = m.with_params(0.0, 0.0);
    let eps = m.with_u(0.0);
    let mut worst: f64 = 0.0;
    for s in 0..m.sectors().len() {
        let z = null_space(&eps.plus_matrix(s, 0.0, true));
        if z.ncols() == 0 {
            continue;
        }
        let k = null_space(&plain.plus_matrix(s, 0.0, true));
        let proj = &k * (k.adjoint() * &z);
        worst = worst.max(crate::linalg::operator_norm(&(&z - proj)));
    }
    Ok(worst)
}

/// Multiplicity-weighted boundary spectrum of a cylinder model.
pub fn boundary_spectrum(m: &ModifiedOperator) -> Vec<(f64, f64)> {
    m.sectors()
        .iter()
        .flat_map(|s| s.values.iter().map(move |&v| (v, s.weight)))
        .collect()
}

/// `Σ sign(κ)` over the tail spectrum of `A_{ε,u}`, zero modes excluded.
pub fn tail_eta(m: &ModifiedOperator) -> f64 {
    boundary_spectrum(m)
        .iter()
        .map(|&(l, w)| {
            let k = tail_value(l, m.eps(), m.u());
            if k.abs() <= super::model::MARGINAL_TOL {
                0.0
            } else {
                w * k.signum()
            }
        })
        .sum()
}

/// `tr_Γ Π_ε`.
pub fn inside_mass(m: &ModifiedOperator) -> f64 {
    boundary_spectrum(m)
        .iter()
        .filter(|(l, _)| inside(*l, m.eps()))
        .map(|&(_, w)| w)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::model::{spectral_modification, CylinderModel, Interior};
    use crate::covering::VoltageGraph;
    use crate::gamma::{DeckGroup, EquivariantOperator, FiberDims, GroupElement};
    use crate::linalg::real_diagonal;

    fn diagonal(values: &[f64]) -> EquivariantOperator {
        EquivariantOperator::new(
            DeckGroup::trivial(),
            FiberDims::ungraded(values.len()),
            [(GroupElement(vec![]), real_diagonal(values))],
        )
        .unwrap()
    }

    fn ones(values: &[f64]) -> Vec<(f64, f64)> {
        values.iter().map(|&v| (v, 1.0)).collect()
    }

    #[test]
    fn closed_form_examples() {
        let spec = ones(&[-2.0, -0.5, 0.5, 2.0]);
        let c = model_solution_counts(&spec, 1.0, 0.0);
        assert_eq!((c.l2_plus, c.ext_plus, c.h_plus), (1.0, 3.0, 2.0));
        let c = model_solution_counts(&spec, 0.0, 0.0);
        assert_eq!((c.l2_plus, c.ext_plus, c.h_plus), (2.0, 2.0, 0.0));
        let c = model_solution_counts(&ones(&[0.0, 1.0]), 0.0, 0.0);
        assert_eq!((c.h_plus, c.h_minus), (1.0, 1.0));
    }

    #[test]
    fn weighted_dims_match_shifted_counts() {
        let values = [-2.0, -0.5, 0.5, 2.0];
        let model = CylinderModel::new(diagonal(&values), None, 10.0, 0.2).unwrap();
        let m = spectral_modification(&model, 1.0, 0.0).unwrap();
        for delta in [-0.3, 0.3] {
            let k = weighted_kernel(&m, delta).unwrap();
            let up = model_solution_counts(&ones(&values), 1.0, delta);
            let down = model_solution_counts(&ones(&values), 1.0, -delta);
            assert_eq!(k.plus, up.l2_plus);
            assert_eq!(k.minus, down.l2_minus);
        }
        assert!(weighted_kernel(&m, 1.2).is_err());
    }

    #[test]
    fn extended_solutions_of_symmetric_pair() {
        let model = CylinderModel::new(diagonal(&[-0.5, 0.5]), None, 10.0, 0.2).unwrap();
        let m = spectral_modification(&model, 1.0, 0.0).unwrap();
        let r = l2_index_report(&m, &default_u_grid(1.0)).unwrap();
        assert_eq!((r.kernels.h_plus, r.kernels.h_minus), (2.0, 2.0));
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn gapped_boundary_has_no_extended_solutions() {
        let model = CylinderModel::new(diagonal(&[-1.0, 1.5]), None, 8.0, 0.2).unwrap();
        let m = spectral_modification(&model, 0.5, 0.0).unwrap();
        let r = extended_kernel_report(&m, &default_delta_grid(&m)).unwrap();
        assert_eq!((r.h_plus, r.h_minus), (0.0, 0.0));
    }

    #[test]
    fn tree_glued_to_gapped_cylinder() {
        let tree = VoltageGraph::plain(DeckGroup::trivial(), 4, &[(0, 1), (1, 2), (1, 3)]).unwrap();
        let mut dims = Vec::new();
        for length in [20.0, 40.0] {
            let model = CylinderModel::new(
                diagonal(&[-1.0, 1.0]),
                Some(Interior {
                    graph: tree.clone(),
                    gluing: vec![2, 3],
                }),
                length,
                0.25,
            )
            .unwrap();
            let m = spectral_modification(&model, 0.5, 0.0).unwrap();
            let r = l2_index_report(&m, &default_u_grid(0.5)).unwrap();
            assert_eq!((r.kernels.h_plus, r.kernels.h_minus), (0.0, 0.0));
            assert!(r.holds());
            dims.push(r.l2_index);
        }
        assert_eq!(dims[0], dims[1]);
        // Euler characteristic of the tree minus the negative boundary modes.
        assert_eq!(dims[0], 0.0);
    }

    #[test]
    fn kernels_shrink_under_modification() {
        let model = CylinderModel::new(diagonal(&[-0.8, 0.05, 0.6]), None, 8.0, 0.2).unwrap();
        let m = spectral_modification(&model, 0.3, 0.0).unwrap();
        assert!(kernel_containment_residual(&m).unwrap() < 1e-8);
    }

    #[test]
    fn epsilon_limit_stabilizes() {
        let model = CylinderModel::new(diagonal(&[-0.7, 0.0, 0.5, 0.9]), None, 8.0, 0.2).unwrap();
        let sweep = epsilon_sweep(&model, &[0.4, 0.2, 0.1]).unwrap();
        assert!(sweep.stable(), "{sweep:?}");
        assert!(epsilon_sweep(&model, &[0.6]).is_err());
    }
}
