//! Spectral measures, functional calculus and Γ-dimensions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::group::{DeckGroup, GroupElement};
use super::operator::{EquivariantOperator, FiberDims, FloquetGrid, Sector};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigen, CMatrix, RANK_SAFETY, ZERO};

/// Tolerance on the selfadjointness residual accepted by the spectral code.
pub const SELFADJOINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureSource {
    /// Exact eigen-decomposition over a finite group of the given order.
    FiniteExact { order: usize },
    /// Uniform quadrature on the dual torus.
    FloquetQuadrature { nodes: usize },
}

/// Atoms `(λ, m_Γ(λ))`, sorted ascending with positive multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    pub atoms: Vec<(f64, f64)>,
    pub source: MeasureSource,
    /// Threshold below which an eigenvalue counts as zero.
    pub zero_tolerance: f64,
}

impl SpectralMeasure {
    /// Builds a measure from weighted eigenvalues, merging values closer than
    /// `merge_tol`.
    pub fn from_weighted(
        mut values: Vec<(f64, f64)>,
        source: MeasureSource,
        zero_tolerance: f64,
        merge_tol: f64,
    ) -> Self {
        values.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        // Clusters are represented by their weighted mean.
        let mut anchor = f64::NAN;
        for (lambda, w) in values {
            if w <= 0.0 {
                continue;
            }
            match atoms.last_mut() {
                Some(last) if (lambda - anchor).abs() <= merge_tol => {
                    let total = last.1 + w;
                    last.0 = (last.0 * last.1 + lambda * w) / total;
                    last.1 = total;
                }
                _ => {
                    atoms.push((lambda, w));
                    anchor = lambda;
                }
            }
        }
        Self {
            atoms,
            source,
            zero_tolerance,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `N(λ) = μ((−∞, λ])`.
    pub fn counting(&self, lambda: f64) -> f64 {
        self.atoms.iter().take_while(|a| a.0 <= lambda).map(|a| a.1).sum()
    }

    /// Mass of the open interval `(a, b)`.
    pub fn mass_open(&self, a: f64, b: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|x| x.0 > a && x.0 < b)
            .map(|x| x.1)
            .sum()
    }

    /// Mass of `{|λ| ≤ zero_tolerance}`.
    pub fn kernel_mass(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|x| x.0.abs() <= self.zero_tolerance)
            .map(|x| x.1)
            .sum()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(l, m)| m * f(l)).sum()
    }

    /// Smallest point of the support.
    pub fn bottom(&self) -> Option<f64> {
        self.atoms.first().map(|a| a.0)
    }

    /// Smallest `|λ|` outside the numerical kernel.
    pub fn gap(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.0.abs())
            .filter(|&x| x > self.zero_tolerance)
            .fold(f64::INFINITY, f64::min)
    }

    /// `Σ sign(λ) m(λ)` over nonzero atoms.
    pub fn sign_sum(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.0.abs() > self.zero_tolerance)
            .map(|a| a.0.signum() * a.1)
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct SectorEigen {
    pub weight: f64,
    pub theta: Vec<f64>,
    pub character: Option<Vec<i64>>,
    pub values: Vec<f64>,
    pub vectors: CMatrix,
    pub grading: Vec<f64>,
}

impl SectorEigen {
    /// `Σ_r ε_r |v_{rk}|²` for each eigenvector `k`.
    pub fn chiralities(&self) -> Vec<f64> {
        (0..self.values.len())
            .map(|k| {
                self.grading
                    .iter()
                    .enumerate()
                    .map(|(r, &s)| s * self.vectors[(r, k)].norm_sqr())
                    .sum()
            })
            .collect()
    }
}

/// Cached eigen-decomposition of every sector of a selfadjoint operator.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    group: DeckGroup,
    fiber: FiberDims,
    grid: FloquetGrid,
    sectors: Vec<SectorEigen>,
    scale: f64,
}

impl SpectralDecomposition {
    pub fn new(t: &EquivariantOperator, grid: &FloquetGrid) -> Result<Self> {
        t.require_selfadjoint(SELFADJOINT_TOL)?;
        let sectors: Vec<Sector> = t.sectors(grid);
        let eig: Vec<SectorEigen> = sectors
            .into_par_iter()
            .map(|s| {
                let (values, vectors) = hermitian_eigen(&s.matrix);
                SectorEigen {
                    weight: s.weight,
                    theta: s.theta,
                    character: s.character,
                    values,
                    vectors,
                    grading: s.grading,
                }
            })
            .collect();
        let scale = eig
            .iter()
            .flat_map(|s| s.values.iter().map(|v| v.abs()))
            .fold(0.0, f64::max);
        Ok(Self {
            group: t.group().clone(),
            fiber: t.fiber(),
            grid: *grid,
            sectors: eig,
            scale,
        })
    }

    /// Default grid for the group's lattice rank.
    pub fn of(t: &EquivariantOperator) -> Result<Self> {
        Self::new(t, &FloquetGrid::default_for(t.group().free_rank()))
    }

    pub fn sectors(&self) -> &[SectorEigen] {
        &self.sectors
    }

    pub fn group(&self) -> &DeckGroup {
        &self.group
    }

    pub fn fiber(&self) -> FiberDims {
        self.fiber
    }

    /// Largest `|λ|`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Size of the realization that the sectors decompose.
    pub fn realized_size(&self) -> usize {
        self.sectors.iter().map(|s| s.values.len()).sum()
    }

    pub fn zero_tolerance(&self) -> f64 {
        self.realized_size().max(1) as f64 * f64::EPSILON * self.scale.max(f64::MIN_POSITIVE) * RANK_SAFETY
    }

    pub fn source(&self) -> MeasureSource {
        if self.group.is_finite() {
            MeasureSource::FiniteExact {
                order: self.group.torsion_order(),
            }
        } else {
            MeasureSource::FloquetQuadrature {
                nodes: self.grid.node_count(self.group.free_rank()),
            }
        }
    }

    pub fn measure(&self) -> SpectralMeasure {
        let values: Vec<(f64, f64)> = self
            .sectors
            .iter()
            .flat_map(|s| s.values.iter().map(move |&v| (v, s.weight)))
            .collect();
        let merge = 1e-12 * self.scale.max(1.0);
        SpectralMeasure::from_weighted(values, self.source(), self.zero_tolerance(), merge)
    }

    /// `tr_Γ f(T)`.
    pub fn trace_of(&self, f: impl Fn(f64) -> f64 + Sync) -> f64 {
        self.sectors
            .iter()
            .map(|s| s.weight * s.values.iter().map(|&v| f(v)).sum::<f64>())
            .sum()
    }

    /// `tr_Γ(ε f(T))`.
    pub fn supertrace_of(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.sectors
            .iter()
            .map(|s| {
                let chi = s.chiralities();
                s.weight * s.values.iter().zip(&chi).map(|(&v, &x)| f(v) * x).sum::<f64>()
            })
            .sum()
    }

    /// `f(T)` folded back to group-algebra blocks. Over lattices the blocks
    /// are returned for `|γ_i| ≤ radius` (default a quarter of the grid).
    pub fn function_operator(&self, f: impl Fn(f64) -> f64 + Sync) -> Result<EquivariantOperator> {
        let radius = (self.grid.nodes_per_dim / 4) as i64;
        self.function_operator_within(f, radius)
    }

    pub fn function_operator_within(
        &self,
        f: impl Fn(f64) -> f64 + Sync,
        radius: i64,
    ) -> Result<EquivariantOperator> {
        for s in &self.sectors {
            for &v in &s.values {
                let y = f(v);
                if !y.is_finite() {
                    return Err(Error::UndefinedFunction { value: y, at: v });
                }
            }
        }
        let k = self.group.free_rank();
        let n = self.fiber.total();
        let fs: Vec<CMatrix> = self
            .sectors
            .par_iter()
            .map(|s| crate::linalg::spectral_function(&s.values, &s.vectors, &f))
            .collect();
        let tors = DeckGroup::new(0, self.group.factors().to_vec())?;
        let order = tors.torsion_order();
        let free: Vec<Vec<i64>> = if k == 0 {
            vec![Vec::new()]
        } else {
            let side = (2 * radius + 1) as usize;
            (0..side.pow(k as u32))
                .map(|mut idx| {
                    let mut v = vec![0i64; k];
                    for slot in v.iter_mut().rev() {
                        *slot = (idx % side) as i64 - radius;
                        idx /= side;
                    }
                    v
                })
                .collect()
        };
        let elements: Vec<GroupElement> = free
            .iter()
            .flat_map(|x| {
                (0..order).map(|r| {
                    let mut v = x.clone();
                    v.extend(tors.torsion_at(r));
                    GroupElement(v)
                })
            })
            .collect();
        let blocks: Vec<(GroupElement, CMatrix)> = elements
            .into_par_iter()
            .map(|gamma| {
                let t = GroupElement(gamma.0[k..].to_vec());
                let mut acc = CMatrix::zeros(n, n);
                for (s, fm) in self.sectors.iter().zip(&fs) {
                    let dot: f64 = gamma.0[..k].iter().zip(&s.theta).map(|(&x, &th)| x as f64 * th).sum();
                    match &s.character {
                        Some(ch) => {
                            let mut angle = -dot;
                            for ((fac, &j), &x) in self.group.factors().iter().zip(ch).zip(&t.0) {
                                let m = fac.order() as i64;
                                angle -= 2.0 * PI * ((j * x).rem_euclid(m)) as f64 / m as f64;
                            }
                            acc += fm * Complex64::from_polar(s.weight, angle);
                        }
                        None => {
                            // Orbit average of the dense blocks (g, g·t).
                            let mut sum = CMatrix::zeros(n, n);
                            for gi in 0..order {
                                let g = GroupElement(tors.torsion_at(gi));
                                let hi = tors.torsion_rank(&tors.multiply(&g, &t));
                                sum += fm.view((gi * n, hi * n), (n, n));
                            }
                            acc += sum * Complex64::from_polar(s.weight, -dot);
                        }
                    }
                }
                (gamma, acc)
            })
            .collect();
        EquivariantOperator::new(self.group.clone(), self.fiber, blocks)
    }
}

/// `f(T)` for a selfadjoint operator.
pub fn apply_function(
    t: &EquivariantOperator,
    f: impl Fn(f64) -> f64 + Sync,
    grid: &FloquetGrid,
) -> Result<EquivariantOperator> {
    SpectralDecomposition::new(t, grid)?.function_operator(f)
}

pub fn spectral_measure(t: &EquivariantOperator, grid: &FloquetGrid) -> Result<SpectralMeasure> {
    Ok(SpectralDecomposition::new(t, grid)?.measure())
}

/// `dim_Γ` of the range of an equivariant orthogonal projection.
pub fn gamma_dimension(p: &EquivariantOperator) -> Result<f64> {
    const TOL: f64 = 1e-10;
    let sa = p.selfadjoint_residual();
    if sa > TOL {
        return Err(Error::NotProjection { residual: sa });
    }
    let idem = p.compose(p)?.sub(p)?.max_entry();
    if idem > TOL {
        return Err(Error::NotProjection { residual: idem });
    }
    Ok(p.gamma_trace().re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub fredholm: bool,
    pub gap: f64,
}

/// Γ-Fredholm proxy: a finite group is always Fredholm and the gap excludes
/// the kernel; over a lattice the symbol's smallest `|λ|` must exceed
/// `radius`.
pub fn fredholm_gap(t: &EquivariantOperator, radius: f64, grid: &FloquetGrid) -> Result<GapReport> {
    let dec = SpectralDecomposition::new(t, grid)?;
    if t.group().is_finite() {
        let tol = dec.zero_tolerance();
        let gap = dec
            .sectors()
            .iter()
            .flat_map(|s| s.values.iter().map(|v| v.abs()))
            .filter(|&v| v > tol)
            .fold(f64::INFINITY, f64::min);
        return Ok(GapReport { fredholm: true, gap });
    }
    let gap = dec
        .sectors()
        .iter()
        .flat_map(|s| s.values.iter().map(|v| v.abs()))
        .fold(f64::INFINITY, f64::min);
    // A band through zero changes the number of negative eigenvalues between
    // nodes even when no node lands on it.
    let mut below = std::collections::BTreeMap::new();
    let mut crossing = false;
    for s in dec.sectors() {
        let n = s.values.iter().filter(|&&v| v < -radius).count();
        let m = s.values.iter().filter(|&&v| v <= radius).count();
        let entry = below.entry(s.character.clone()).or_insert((n, m));
        crossing |= *entry != (n, m);
    }
    Ok(GapReport {
        fredholm: gap > radius && !crossing,
        gap,
    })
}

/// Spectral projection of `t` onto `{λ : pred(λ)}`.
pub fn spectral_projection(
    t: &EquivariantOperator,
    grid: &FloquetGrid,
    pred: impl Fn(f64) -> bool + Sync,
) -> Result<EquivariantOperator> {
    apply_function(t, |x| if pred(x) { 1.0 } else { 0.0 }, grid)
}

/// `tr_Γ f(T)` for a complex-valued `f`.
pub fn complex_trace(dec: &SpectralDecomposition, f: impl Fn(f64) -> Complex64) -> Complex64 {
    dec.sectors()
        .iter()
        .map(|s| s.values.iter().map(|&v| f(v)).sum::<Complex64>() * c(s.weight, 0.0))
        .fold(ZERO, |a, b| a + b)
}
