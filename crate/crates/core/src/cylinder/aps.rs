//! Index bookkeeping of the modified operators (`I(u)`, symmetrization,
//! interior constant) and the bottom of the essential spectrum.

use serde::{Deserialize, Serialize};

use super::kernels::{default_u_grid, inside_mass, l2_index_report, modified_index, tail_eta, DIM_TOL};
use super::model::{spectral_modification, CylinderModel, ModifiedOperator};
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApsPoint {
    pub u: f64,
    /// `ind_Γ(D_{ε,u})`.
    pub index: f64,
    /// `ind_Γ(D_{ε,−u})`.
    pub index_reflected: f64,
    /// `η_Γ(A_{ε,u})`.
    pub eta: f64,
    /// `I(u) = ind_Γ(D_{ε,u}) − ½η_Γ(A_{ε,u})`.
    pub i_u: f64,
    /// `g(u) = I(u) − I(u_min)`.
    pub g: f64,
    /// `L²-ind − ½[ind(D_{ε,u}) + ind(D_{ε,−u}) + h⁻ − h⁺]`.
    pub symmetrization_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApsReport {
    pub eps: f64,
    pub points: Vec<ApsPoint>,
    pub l2_index: f64,
    pub h_plus: f64,
    pub h_minus: f64,
    /// `η_Γ(A_ε)`, zero modes excluded.
    pub eta_eps: f64,
    /// `I* = I(u_min)`.
    pub i_star: f64,
    /// `L²-ind − I* − ½(η(A_ε) + h⁻ − h⁺)`.
    pub derived_residual: f64,
    /// `L²-ind − I* − ½(η(A_ε) − h⁻ + h⁺)`.
    pub stated_residual: f64,
    /// `I*` of the perturbed boundary, if one was supplied.
    pub variant_i_star: Option<f64>,
}

impl ApsReport {
    pub fn symmetrization_holds(&self) -> bool {
        self.points.iter().all(|p| p.symmetrization_residual.abs() <= DIM_TOL)
    }

    /// `|g(u)|` does not increase as `u` decreases.
    pub fn g_monotone(&self) -> bool {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| b.u.total_cmp(&a.u));
        pts.windows(2).all(|w| w[1].g.abs() <= w[0].g.abs() + DIM_TOL)
    }

    pub fn interior_invariant(&self) -> Option<bool> {
        self.variant_i_star.map(|v| (v - self.i_star).abs() <= DIM_TOL)
    }

    pub fn i_integer_valued(&self) -> bool {
        self.points.iter().all(|p| (p.i_u - p.i_u.round()).abs() <= DIM_TOL)
    }
}

fn i_of(m: &ModifiedOperator, u: f64) -> Result<(f64, f64, f64)> {
    let shifted = m.with_u(u);
    let index = modified_index(&shifted)?;
    let eta = tail_eta(&shifted);
    Ok((index, eta, index - 0.5 * eta))
}

/// `I(u)` on a grid in `(0, ε)`, the symmetrization identity for `L²-ind`,
/// the interior constant and its invariance under a boundary variant with
/// the same `tr_Γ Π_ε`.
pub fn aps_consistency(
    model: &CylinderModel,
    eps: f64,
    u_grid: &[f64],
    variant: Option<&CylinderModel>,
) -> Result<ApsReport> {
    if !(eps > 0.0) || u_grid.is_empty() {
        return Err(Error::InvalidInput("need ε > 0 and a nonempty u-grid".into()));
    }
    if let Some(u) = u_grid.iter().find(|&&u| !(u > 0.0 && u < eps)) {
        return Err(Error::InvalidInput(format!("u = {u} lies outside (0, ε) with ε = {eps}")));
    }
    let m = spectral_modification(model, eps, 0.0)?;
    let l2 = l2_index_report(&m, &default_u_grid(eps))?;
    let (hp, hm) = (l2.kernels.h_plus, l2.kernels.h_minus);
    let u_min = u_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let (_, _, i_star) = i_of(&m, u_min)?;
    let mut points = Vec::new();
    for &u in u_grid {
        let (index, eta, i_u) = i_of(&m, u)?;
        let index_reflected = modified_index(&m.with_u(-u))?;
        points.push(ApsPoint {
            u,
            index,
            index_reflected,
            eta,
            i_u,
            g: i_u - i_star,
            symmetrization_residual: l2.l2_index - 0.5 * (index + index_reflected + hm - hp),
        });
    }
    let eta_eps = tail_eta(&m);
    let variant_i_star = match variant {
        Some(v) => {
            let mv = spectral_modification(v, eps, 0.0)?;
            if (inside_mass(&mv) - inside_mass(&m)).abs() > DIM_TOL {
                return Err(Error::InvalidInput(
                    "the boundary variant changes the spectral content of (−ε, ε)".into(),
                ));
            }
            Some(i_of(&mv, u_min)?.2)
        }
        None => None,
    };
    Ok(ApsReport {
        eps,
        points,
        l2_index: l2.l2_index,
        h_plus: hp,
        h_minus: hm,
        eta_eps,
        i_star,
        derived_residual: l2.l2_index - i_star - 0.5 * (eta_eps + hm - hp),
        stated_residual: l2.l2_index - i_star - 0.5 * (eta_eps - hm + hp),
        variant_i_star,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BottomLevel {
    pub length: f64,
    /// `dim_Γ ker D²`.
    pub kernel: f64,
    /// Nonzero eigenvalues strictly below the bottom.
    pub below: f64,
    /// Eigenvalues in `[bottom + window.0, bottom + window.1)`.
    pub window_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBottomReport {
    /// `inf supp μ_Γ(A_{ε,u}²)`.
    pub bottom: f64,
    pub window: (f64, f64),
    pub levels: Vec<BottomLevel>,
    pub swapped: Vec<BottomLevel>,
    /// Γ-dimension of the interiors involved in the swap.
    pub swap_rank: f64,
}

impl SpectrumBottomReport {
    /// Kernel and below-bottom counts agree at every length.
    pub fn below_stable(&self) -> bool {
        let f = &self.levels[0];
        self.levels
            .iter()
            .all(|l| (l.below - f.below).abs() <= DIM_TOL && (l.kernel - f.kernel).abs() <= DIM_TOL)
    }

    /// Ratios `count(R_{i+1}) / count(R_i) · R_i / R_{i+1}`.
    pub fn window_growth(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .map(|w| (w[1].window_count / w[0].window_count) * (w[0].length / w[1].length))
            .collect()
    }

    pub fn swap_within_rank(&self) -> bool {
        self.levels
            .iter()
            .zip(&self.swapped)
            .all(|(a, b)| (a.window_count - b.window_count).abs() <= self.swap_rank + DIM_TOL)
    }
}

fn level(m: &ModifiedOperator, bottom: f64, window: (f64, f64)) -> BottomLevel {
    let mut kernel = 0.0;
    let mut below = 0.0;
    let mut count = 0.0;
    for (s, sec) in m.sectors().iter().enumerate() {
        let p = m.plus_matrix(s, 0.0, true);
        let mut ev = hermitian_eigenvalues(&(p.adjoint() * &p));
        ev.extend(hermitian_eigenvalues(&(&p * p.adjoint())));
        let top = ev.iter().copied().fold(0.0, f64::max);
        let zero = ev.len() as f64 * f64::EPSILON * top * 1e3;
        for &x in &ev {
            if x <= zero {
                kernel += sec.weight;
            } else if x < bottom * (1.0 - 1e-9) {
                below += sec.weight;
            } else if x >= bottom + window.0 && x < bottom + window.1 {
                count += sec.weight;
            }
        }
    }
    BottomLevel {
        length: m.model().length(),
        kernel,
        below,
        window_count: count,
    }
}

fn interior_size(model: &CylinderModel) -> f64 {
    model
        .interior()
        .map_or(0.0, |i| (i.graph.vertex_count() + i.graph.edge_count()) as f64)
}

/// Spectrum of `D_{ε,u}²` against the bottom `inf κ²` of the tail: the set
/// below is finite and stable in `R`, window counts above grow like `R`,
/// and replacing the interior moves window counts by at most its size.
pub fn spectrum_bottom_check(
    m: &ModifiedOperator,
    lengths: &[f64],
    window: (f64, f64),
    swap: Option<&CylinderModel>,
) -> Result<SpectrumBottomReport> {
    if lengths.is_empty() || !(window.0 >= 0.0 && window.1 > window.0) {
        return Err(Error::InvalidInput("need lengths and a window 0 ≤ a < b".into()));
    }
    let bottom = (0..m.sectors().len())
        .flat_map(|s| m.tail_values(s))
        .map(|k| k * k)
        .fold(f64::INFINITY, f64::min);
    let mut levels = Vec::new();
    let mut swapped = Vec::new();
    for &r in lengths {
        let model = m.model().with_length(r)?;
        let mr = spectral_modification(&model, m.eps(), m.u())?;
        levels.push(level(&mr, bottom, window));
        if let Some(other) = swap {
            let alt = model.with_interior(other.interior().cloned())?;
            swapped.push(level(&spectral_modification(&alt, m.eps(), m.u())?, bottom, window));
        }
    }
    let swap_rank = swap.map_or(0.0, |o| interior_size(m.model()) + interior_size(o));
    Ok(SpectrumBottomReport {
        bottom,
        window,
        levels,
        swapped,
        swap_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::VoltageGraph;
    use crate::cylinder::model::Interior;
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

    fn single_vertex(m: usize) -> Interior {
        Interior {
            graph: VoltageGraph::plain(DeckGroup::trivial(), m, &[]).unwrap(),
            gluing: (0..m).collect(),
        }
    }

    #[test]
    fn pure_cylinder_symmetric_spectrum() {
        let model = CylinderModel::new(diagonal(&[-2.0, -0.5, 0.5, 2.0]), None, 10.0, 0.2).unwrap();
        let r = aps_consistency(&model, 1.0, &[0.4, 0.2, 0.1], None).unwrap();
        assert!(r.symmetrization_holds());
        assert!(r.i_integer_valued());
        assert!(r.g_monotone());
    }

    #[test]
    fn sign_of_extended_term() {
        // One interior vertex glued to a single zero mode: h⁺ = 1, h⁻ = 0.
        let model = CylinderModel::new(diagonal(&[0.0]), Some(single_vertex(1)), 8.0, 0.25).unwrap();
        let r = aps_consistency(&model, 0.5, &[0.2, 0.1, 0.05], None).unwrap();
        assert_eq!((r.h_plus, r.h_minus), (1.0, 0.0));
        assert!(r.derived_residual.abs() < 1e-12, "{r:?}");
        assert!((r.stated_residual.abs() - 1.0).abs() < 1e-12);
        assert!(r.symmetrization_holds());
    }

    #[test]
    fn interior_constant_under_boundary_variant() {
        let tree = Interior {
            graph: VoltageGraph::plain(DeckGroup::trivial(), 3, &[(0, 1), (1, 2)]).unwrap(),
            gluing: vec![0, 1, 2],
        };
        let a = CylinderModel::new(diagonal(&[-1.0, 0.05, 1.2]), Some(tree.clone()), 10.0, 0.2).unwrap();
        let b = CylinderModel::new(diagonal(&[-1.6, 0.05, 0.8]), Some(tree), 10.0, 0.2).unwrap();
        let r = aps_consistency(&a, 0.3, &[0.12, 0.06, 0.03], Some(&b)).unwrap();
        assert_eq!(r.interior_invariant(), Some(true));
        assert!(r.g_monotone());
        assert!(aps_consistency(&a, 0.3, &[0.4], None).is_err());
    }

    #[test]
    fn bottom_and_window_growth() {
        let model = CylinderModel::new(diagonal(&[-0.8, 0.6]), None, 10.0, 0.2).unwrap();
        let m = spectral_modification(&model, 0.0, 0.0).unwrap();
        let other = CylinderModel::new(diagonal(&[-0.8, 0.6]), Some(single_vertex(2)), 10.0, 0.2).unwrap();
        let r = spectrum_bottom_check(&m, &[10.0, 20.0, 40.0], (0.1, 1.0), Some(&other)).unwrap();
        assert!((r.bottom - 0.36).abs() < 1e-12);
        assert!(r.below_stable(), "{r:?}");
        for g in r.window_growth() {
            assert!((g - 1.0).abs() < 0.2, "{r:?}");
        }
        assert!(r.swap_within_rank(), "{r:?}");
    }
}
