//! Eta invariants along residually finite towers.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integral::{eta_heat_integral_measure, EtaConfig};
use crate::covering::DeckTower;
use crate::error::{Error, Result};
use crate::gamma::{fredholm_gap, EquivariantOperator, FloquetGrid, SpectralDecomposition};
use crate::quadrature::{integrate, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TowerConfig {
    /// Time at which heat-trace ratios are compared.
    pub heat_time: f64,
    /// Floquet nodes for the target; at least `16·max d_i` and 4096.
    pub target_nodes: Option<usize>,
}

impl Default for TowerConfig {
    fn default() -> Self {
        Self {
            heat_time: 1.0,
            target_nodes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerLevel {
    pub level: usize,
    pub d: usize,
    pub eta: f64,
    pub ratio: f64,
    pub gap: f64,
    pub kernel_dim: f64,
    pub kernel_ratio: f64,
    pub heat_ratio: f64,
    pub heat_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerReport {
    pub levels: Vec<TowerLevel>,
    pub target: f64,
    pub target_error: f64,
    pub b_gamma: f64,
    pub heat_target: f64,
    pub heat_time: f64,
    pub target_nodes: usize,
}

impl TowerReport {
    pub fn top_gap(&self) -> f64 {
        self.levels.last().map_or(f64::NAN, |l| l.gap)
    }

    /// Gaps over the last `count` levels never increase by more than `tol`.
    pub fn monotone_tail(&self, count: usize, tol: f64) -> bool {
        let start = self.levels.len().saturating_sub(count);
        self.levels[start..].windows(2).all(|w| w[1].gap <= w[0].gap + tol)
    }

    /// `b_i/d_i ≤ b_Γ + tol` at every level.
    pub fn kernel_bound_holds(&self, tol: f64) -> bool {
        self.levels.iter().all(|l| l.kernel_ratio <= self.b_gamma + tol)
    }

    /// Columns `level, d_i, eta_i, ratio, target, gap, b_i`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        // `+ 0.0` folds negative zero.
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["level", "d_i", "eta_i", "ratio", "target", "gap", "b_i"])?;
        for l in &self.levels {
            w.write_record([
                l.level.to_string(),
                l.d.to_string(),
                (l.eta + 0.0).to_string(),
                (l.ratio + 0.0).to_string(),
                (self.target + 0.0).to_string(),
                (l.gap + 0.0).to_string(),
                (l.kernel_dim + 0.0).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn target_grid(tw: &DeckTower, cfg: &TowerConfig) -> Result<FloquetGrid> {
    let dmax = tw.quotients().iter().map(|q| q.moduli().iter().copied().max().unwrap_or(1)).max().unwrap_or(1) as usize;
    let floor = (16 * dmax).max(4096);
    FloquetGrid::new(cfg.target_nodes.unwrap_or(floor).max(floor))
}

fn check_input(tw: &DeckTower, a: &EquivariantOperator) -> Result<()> {
    if a.group() != tw.base() {
        return Err(Error::GroupMismatch("operator and tower have different groups".into()));
    }
    if a.group().free_rank() != 1 || a.group().torsion_order() != 1 {
        return Err(Error::Unsupported("tower experiments run over Z".into()));
    }
    Ok(())
}

/// Compares `η(D_i)/d_i` with the Floquet value of `η_Γ`, heat-trace ratios
/// with `tr_Γ e^{−tD²}`, and `b_i/d_i` with `b_Γ`.
pub fn tower_eta_convergence(tw: &DeckTower, a: &EquivariantOperator, cfg: &TowerConfig) -> Result<TowerReport> {
    check_input(tw, a)?;
    let grid = target_grid(tw, cfg)?;
    let gap = fredholm_gap(a, 0.0, &grid)?;
    if !gap.fredholm {
        return Err(Error::Precondition(format!(
            "operator has no spectral gap at zero (smallest |λ| on the grid is {:.3e})",
            gap.gap
        )));
    }
    let dec = SpectralDecomposition::new(a, &grid)?;
    let measure = dec.measure();
    let eta = eta_heat_integral_measure(&measure, &EtaConfig::default())?;
    let t = cfg.heat_time;
    let heat_target = dec.trace_of(|x| (-t * x * x).exp());
    let b_gamma = measure.kernel_mass();
    let single = FloquetGrid::default_for(0);
    let levels = tw
        .quotients()
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let di = q.index();
            let op = a.quotient(q)?;
            let dec_i = SpectralDecomposition::new(&op, &single)?;
            let m = dec_i.measure();
            let ratio = m.sign_sum();
            let heat_ratio = dec_i.trace_of(|x| (-t * x * x).exp());
            let kernel_ratio = m.kernel_mass();
            Ok(TowerLevel {
                level: i,
                d: di,
                eta: ratio * di as f64,
                ratio,
                gap: (ratio - eta.value).abs(),
                kernel_dim: (kernel_ratio * di as f64).round(),
                kernel_ratio,
                heat_ratio,
                heat_gap: (heat_ratio - heat_target).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TowerReport {
        levels,
        target: eta.value,
        target_error: eta.quadrature_error + eta.extrapolation_spread.min(eta.quadrature_error.max(1e-12)),
        b_gamma,
        heat_target,
        heat_time: t,
        target_nodes: grid.nodes_per_dim,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceLevel {
    pub level: usize,
    pub d: usize,
    /// `(1/√π)∫ t^{−1/2} Σ_{e≠γ∈Γ_i} tr[A e^{−tA²}]_γ dt`.
    pub remainder: f64,
    /// `(t, Σ_{e≠γ∈Γ_i} tr[A e^{−tA²}]_γ)` on the requested times.
    pub integrand: Vec<(f64, f64)>,
}

/// Evaluates the off-identity sum over `Γ_i = d_i Z` directly from the
/// kernel blocks of `A e^{−tA²}`, obtained by inverse Floquet transform.
pub fn tower_difference_diagnostic(
    tw: &DeckTower,
    a: &EquivariantOperator,
    times: &[f64],
    cfg: &TowerConfig,
) -> Result<Vec<DifferenceLevel>> {
    check_input(tw, a)?;
    let grid = target_grid(tw, cfg)?;
    let gap = fredholm_gap(a, 0.0, &grid)?;
    if !gap.fredholm {
        return Err(Error::Precondition("operator has no spectral gap at zero".into()));
    }
    let dec = SpectralDecomposition::new(a, &grid)?;
    let n = grid.nodes_per_dim;
    let thetas: Vec<f64> = dec.sectors().iter().map(|s| s.theta[0]).collect();
    let bands: Vec<Vec<f64>> = dec.sectors().iter().map(|s| s.values.clone()).collect();
    let tau_max = 40f64.sqrt() / gap.gap;
    tw.quotients()
        .par_iter()
        .enumerate()
        .map(|(level, q)| {
            let d = q.index();
            let kmax = (n / 2 - 1) / d;
            let phases: Vec<f64> = thetas
                .iter()
                .map(|&th| (1..=kmax).map(|k| 2.0 * (k as f64 * d as f64 * th).cos()).sum())
                .collect();
            let off_identity = |t: f64| -> f64 {
                bands
                    .iter()
                    .zip(&phases)
                    .map(|(b, &p)| p * b.iter().map(|&l| l * (-t * l * l).exp()).sum::<f64>())
                    .sum::<f64>()
                    / n as f64
            };
            let r = integrate(
                |tau| 2.0 / PI.sqrt() * off_identity(tau * tau),
                0.0,
                tau_max,
                &QuadratureConfig {
                    abs_tol: 1e-12,
                    rel_tol: 1e-10,
                    max_intervals: 4000,
                },
            )?;
            Ok(DifferenceLevel {
                level,
                d,
                remainder: r.value,
                integrand: times.iter().map(|&t| (t, off_identity(t))).collect(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::{circle_operator, tower, CircleMode};
    use crate::gamma::{DeckGroup, FiberDims};
    use crate::linalg::c;

    #[test]
    fn constant_operator() {
        let z = DeckGroup::free_abelian(1);
        let a = EquivariantOperator::scalar(z.clone(), FiberDims::ungraded(2), c(0.5, 0.0));
        let tw = tower(&z, &[2, 4, 8]).unwrap();
        let r = tower_eta_convergence(&tw, &a, &TowerConfig::default()).unwrap();
        for l in &r.levels {
            assert!((l.ratio - 2.0).abs() < 1e-12);
            assert_eq!(l.kernel_dim, 0.0);
        }
        assert!((r.target - 2.0).abs() < 1e-8);
    }

    #[test]
    fn gapped_circle_tower() {
        let z = DeckGroup::free_abelian(1);
        let a = circle_operator(2, 0.0, &[1.5, -1.5], CircleMode::Periodic).unwrap();
        let tw = tower(&z, &[2, 4, 8, 16]).unwrap();
        let r = tower_eta_convergence(&tw, &a, &TowerConfig::default()).unwrap();
        assert!(r.top_gap() < 1e-3);
        assert!(r.kernel_bound_holds(1e-9));
        assert!(r.levels.last().unwrap().heat_gap < 1e-8);
        let diag = tower_difference_diagnostic(&tw, &a, &[0.5, 2.0], &TowerConfig::default()).unwrap();
        for (lvl, dl) in r.levels.iter().zip(&diag) {
            assert!((dl.remainder - (lvl.ratio - r.target)).abs() < 1e-6);
        }
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("level,d_i,eta_i,ratio,target,gap,b_i\n"));
    }

    #[test]
    fn ungapped_is_refused() {
        let z = DeckGroup::free_abelian(1);
        let a = circle_operator(2, 0.0, &[], CircleMode::Periodic).unwrap();
        let tw = tower(&z, &[2, 4]).unwrap();
        assert!(matches!(
            tower_eta_convergence(&tw, &a, &TowerConfig::default()),
            Err(Error::Precondition(_))
        ));
    }
}
