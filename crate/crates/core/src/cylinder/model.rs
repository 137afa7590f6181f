//! Half-cylinders `[0, R] × Y` over a boundary operator `A`, optionally glued
//! to a graph interior at `r = 0`, and their spectral modifications.
//!
//! The plus operator is `D⁺ = ∂_r + B(r)` with `B(r) = A + ϑ(r)(u − AΠ_ε)`,
//! discretized by forward differences on sites `r_j = j·h`. Everything is
//! assembled per Floquet/character sector of the boundary group, where `A`
//! becomes a Hermitian matrix.
//!
//! The truncation at `R` imposes the exact far-field condition of the
//! constant tail: the value at the last site must lie in the span of the
//! tail modes that decay in the chosen weighted space.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::covering::{graph_dirac, GraphSpec, VoltageGraph};
use crate::error::{Error, Result};
use crate::gamma::spectral::SELFADJOINT_TOL;
use crate::gamma::{EquivariantOperator, FloquetGrid, OperatorSpec, SpectralDecomposition};
use crate::linalg::{c, rank_split, singular_values, CMatrix, RankSplit};

/// Growth factors within this distance of 1 (in log) count as marginal.
pub const MARGINAL_TOL: f64 = 1e-9;

/// `θ(r)`: 0 on `[0, 2]`, `r` on `[3, ∞)`, and the Hermite cubic matching
/// value and slope at both ends in between.
pub fn theta(r: f64) -> f64 {
    if r <= 2.0 {
        0.0
    } else if r >= 3.0 {
        r
    } else {
        let s = r - 2.0;
        s * s * (8.0 - 5.0 * s)
    }
}

/// `ϑ(r) = θ′(r)`.
pub fn theta_prime(r: f64) -> f64 {
    if r <= 2.0 {
        0.0
    } else if r >= 3.0 {
        1.0
    } else {
        let s = r - 2.0;
        s * (16.0 - 15.0 * s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interior {
    pub graph: VoltageGraph,
    /// Vertex glued to each boundary fiber coordinate.
    pub gluing: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CylinderModel {
    boundary: EquivariantOperator,
    interior: Option<Interior>,
    length: f64,
    step: f64,
    sites: usize,
    grid: FloquetGrid,
}

impl CylinderModel {
    pub fn new(boundary: EquivariantOperator, interior: Option<Interior>, length: f64, step: f64) -> Result<Self> {
        let grid = FloquetGrid::default_for(boundary.group().free_rank());
        Self::with_grid(boundary, interior, length, step, grid)
    }

    pub fn with_grid(
        boundary: EquivariantOperator,
        interior: Option<Interior>,
        length: f64,
        step: f64,
        grid: FloquetGrid,
    ) -> Result<Self> {
        boundary.require_selfadjoint(SELFADJOINT_TOL)?;
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidInput(format!("resolution must be positive, got {step}")));
        }
        if !(length.is_finite() && length >= 3.0 + step) {
            return Err(Error::InvalidInput(format!(
                "cylinder length {length} must reach past r = 3 by at least one step"
            )));
        }
        let sites = (length / step).round() as usize;
        if ((sites as f64) * step - length).abs() > 1e-9 * length {
            return Err(Error::InvalidInput(format!("length {length} is not a multiple of the step {step}")));
        }
        if boundary.group().free_rank() > 1 {
            return Err(Error::Unsupported("cylinder boundaries are finite or Z-periodic".into()));
        }
        let norm = SpectralDecomposition::new(&boundary, &grid)?.scale();
        if norm > 0.0 {
            let limit = 1.0 / (2.0 * norm);
            if step >= limit {
                return Err(Error::Resolution { step, limit });
            }
        }
        if let Some(int) = &interior {
            if int.graph.group() != boundary.group() {
                return Err(Error::GroupMismatch("interior and boundary have different groups".into()));
            }
            if int.gluing.len() != boundary.dim() {
                return Err(Error::Dimension(format!(
                    "gluing lists {} vertices for a boundary fiber of dimension {}",
                    int.gluing.len(),
                    boundary.dim()
                )));
            }
            let mut seen = vec![false; int.graph.vertex_count()];
            for &v in &int.gluing {
                if v >= seen.len() || std::mem::replace(&mut seen[v], true) {
                    return Err(Error::InvalidInput(format!("gluing vertex {v} is out of range or repeated")));
                }
            }
        }
        Ok(Self {
            boundary,
            interior,
            length,
            step,
            sites,
            grid,
        })
    }

    pub fn boundary(&self) -> &EquivariantOperator {
        &self.boundary
    }

    pub fn interior(&self) -> Option<&Interior> {
        self.interior.as_ref()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Index `N` of the last site `r_N = R`.
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn grid(&self) -> FloquetGrid {
        self.grid
    }

    pub fn radius(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    pub fn with_length(&self, length: f64) -> Result<Self> {
        Self::with_grid(self.boundary.clone(), self.interior.clone(), length, self.step, self.grid)
    }

    pub fn with_step(&self, step: f64) -> Result<Self> {
        Self::with_grid(self.boundary.clone(), self.interior.clone(), self.length, step, self.grid)
    }

    pub fn with_boundary(&self, boundary: EquivariantOperator) -> Result<Self> {
        Self::with_grid(boundary, self.interior.clone(), self.length, self.step, self.grid)
    }

    pub fn with_interior(&self, interior: Option<Interior>) -> Result<Self> {
        Self::with_grid(self.boundary.clone(), interior, self.length, self.step, self.grid)
    }
}

/// Boundary data of one sector: eigenpairs of `A` there and, for glued
/// models, the plus block of the interior Dirac operator.
#[derive(Debug, Clone)]
pub struct CylinderSector {
    pub weight: f64,
    pub values: Vec<f64>,
    pub vectors: CMatrix,
    pub interior_plus: Option<CMatrix>,
    /// Positions, among the interior plus coordinates, glued to each
    /// boundary coordinate.
    pub glue: Vec<usize>,
}

/// `D_{ε,u}` on a cylinder model.
#[derive(Debug, Clone)]
pub struct ModifiedOperator {
    model: Arc<CylinderModel>,
    eps: f64,
    u: f64,
    sectors: Arc<Vec<CylinderSector>>,
}

/// `χ_ε(λ)`, the indicator of `(−ε, ε)`.
pub fn inside(lambda: f64, eps: f64) -> bool {
    lambda.abs() < eps
}

/// Tail eigenvalue `κ = λ(1 − χ_ε(λ)) + u` of `A_{ε,u}`.
pub fn tail_value(lambda: f64, eps: f64, u: f64) -> f64 {
    if inside(lambda, eps) {
        u
    } else {
        lambda + u
    }
}

/// Chirality of a kernel computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chirality {
    Plus,
    Minus,
}

/// Per-chirality kernel dimensions together with the worst rank gap seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelDims {
    pub plus: f64,
    pub minus: f64,
    pub min_gap_ratio: f64,
}

impl KernelDims {
    pub fn index(&self) -> f64 {
        self.plus - self.minus
    }
}

/// Unmodified product operator `∂_r + A` (`ε = u = 0`).
pub fn product_operator(model: &CylinderModel) -> Result<ModifiedOperator> {
    spectral_modification(model, 0.0, 0.0)
}

/// `D_{ε,u} = D + ϑ(u − AΠ_ε)`.
pub fn spectral_modification(model: &CylinderModel, eps: f64, u: f64) -> Result<ModifiedOperator> {
    if !(eps >= 0.0 && eps.is_finite() && u.is_finite()) {
        return Err(Error::InvalidInput(format!("need ε ≥ 0 and finite u, got ε = {eps}, u = {u}")));
    }
    let dec = SpectralDecomposition::new(model.boundary(), &model.grid())?;
    let interior = match model.interior() {
        Some(int) => {
            let d = graph_dirac(&int.graph)?;
            let sec = d.operator.sectors(&model.grid());
            Some((sec, int.graph.vertex_count()))
        }
        None => None,
    };
    let m = model.boundary().dim();
    let sectors: Vec<CylinderSector> = dec
        .sectors()
        .iter()
        .enumerate()
        .map(|(s, sec)| {
            let copies = sec.values.len() / m.max(1);
            let (interior_plus, glue) = match &interior {
                Some((isec, nv)) => {
                    let g = &isec[s].grading;
                    let plus: Vec<usize> = (0..g.len()).filter(|&i| g[i] > 0.0).collect();
                    let minus: Vec<usize> = (0..g.len()).filter(|&i| g[i] < 0.0).collect();
                    let mat = &isec[s].matrix;
                    let block = CMatrix::from_fn(minus.len(), plus.len(), |i, j| mat[(minus[i], plus[j])]);
                    let gl = model.interior().expect("interior present").gluing.clone();
                    let glue = (0..copies).flat_map(|k| gl.iter().map(move |&v| k * nv + v)).collect();
                    (Some(block), glue)
                }
                None => (None, Vec::new()),
            };
            CylinderSector {
                weight: sec.weight,
                values: sec.values.clone(),
                vectors: sec.vectors.clone(),
                interior_plus,
                glue,
            }
        })
        .collect();
    Ok(ModifiedOperator {
        model: Arc::new(model.clone()),
        eps,
        u,
        sectors: Arc::new(sectors),
    })
}

impl ModifiedOperator {
    pub fn model(&self) -> &CylinderModel {
        &self.model
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn sectors(&self) -> &[CylinderSector] {
        &self.sectors
    }

    /// Same model and ε with a different shift `u`.
    pub fn with_u(&self, u: f64) -> Self {
        Self {
            u,
            ..self.clone()
        }
    }

    /// Same model with different `(ε, u)`.
    pub fn with_params(&self, eps: f64, u: f64) -> Self {
        Self {
            eps,
            u,
            ..self.clone()
        }
    }

    /// `Π_ε = χ_{(−ε,ε)}(A)`.
    pub fn projection(&self) -> Result<EquivariantOperator> {
        let eps = self.eps;
        SpectralDecomposition::new(self.model.boundary(), &self.model.grid())?
            .function_operator(|x| if inside(x, eps) { 1.0 } else { 0.0 })
    }

    /// `A_{ε,u} = A(1 − Π_ε) + u` by functional calculus.
    pub fn boundary_restriction(&self) -> Result<EquivariantOperator> {
        let (eps, u) = (self.eps, self.u);
        SpectralDecomposition::new(self.model.boundary(), &self.model.grid())?
            .function_operator(|x| tail_value(x, eps, u))
    }

    /// Eigenvalues of `B(r)` in the boundary eigenbasis of sector `s`.
    pub fn local_values(&self, s: usize, r: f64) -> Vec<f64> {
        let vt = theta_prime(r);
        self.sectors[s]
            .values
            .iter()
            .map(|&l| {
                let chi = if inside(l, self.eps) { 1.0 } else { 0.0 };
                l + vt * (self.u - l * chi)
            })
            .collect()
    }

    /// `B(r_j)` in sector `s`.
    pub fn site_block(&self, s: usize, j: usize) -> CMatrix {
        let sec = &self.sectors[s];
        let vals = self.local_values(s, self.model.radius(j));
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            vals.len(),
            vals.iter().map(|&v| c(v, 0.0)),
        ));
        &sec.vectors * d * sec.vectors.adjoint()
    }

    /// Tail eigenvalues `κ` of sector `s`.
    pub fn tail_values(&self, s: usize) -> Vec<f64> {
        self.sectors[s].values.iter().map(|&l| tail_value(l, self.eps, self.u)).collect()
    }

    /// Whether a tail mode decays in `e^{δθ}L²` for the given chirality.
    pub fn decays(&self, kappa: f64, delta: f64, chirality: Chirality) -> bool {
        let h = self.model.step;
        let growth = match chirality {
            Chirality::Plus => (-delta * h).exp() * (1.0 - h * kappa),
            Chirality::Minus => (-delta * h).exp() / (1.0 - h * kappa),
        };
        growth.abs().ln() < -MARGINAL_TOL
    }

    fn nondecaying(&self, s: usize, delta: f64, chirality: Chirality) -> Vec<usize> {
        self.tail_values(s)
            .iter()
            .enumerate()
            .filter(|(_, &k)| !self.decays(k, delta, chirality))
            .map(|(i, _)| i)
            .collect()
    }

    /// Ratio `e^{δ(θ(r_{j+1}) − θ(r_j))}` appearing after conjugation.
    fn weight_step(&self, delta: f64, j: usize) -> f64 {
        (delta * (theta(self.model.radius(j + 1)) - theta(self.model.radius(j)))).exp()
    }

    /// Conjugated plus operator `e^{−δθ} D⁺ e^{δθ}` of sector `s`. Columns
    /// are the interior vertices (if any) followed by the sites; rows are the
    /// interior edges, the difference rows `j = 0..N−1` and, if `far_field`,
    /// one row `v_k*/h` per non-decaying tail mode `v_k`. Without an interior the site
    /// `r = 0` is a free variable.
    pub fn plus_matrix(&self, s: usize, delta: f64, far_field: bool) -> CMatrix {
        let sec = &self.sectors[s];
        let m = sec.values.len();
        let n = self.model.sites;
        let h = self.model.step;
        let far = if far_field {
            self.nondecaying(s, delta, Chirality::Plus)
        } else {
            Vec::new()
        };
        let (ni, ne, first_site) = match &sec.interior_plus {
            Some(b) => (b.ncols(), b.nrows(), 1),
            None => (0, 0, 0),
        };
        let cols = ni + m * (n + 1 - first_site);
        let rows = ne + m * n + far.len();
        let mut out = CMatrix::zeros(rows, cols);
        if let Some(b) = &sec.interior_plus {
            out.view_mut((0, 0), (ne, ni)).copy_from(b);
        }
        let site_col = |j: usize| ni + (j - first_site) * m;
        for j in 0..n {
            let r0 = ne + j * m;
            let mut diag = self.site_block(s, j);
            for i in 0..m {
                diag[(i, i)] -= c(1.0 / h, 0.0);
            }
            if j + 1 >= first_site {
                let w = self.weight_step(delta, j) / h;
                let c0 = site_col(j + 1);
                for i in 0..m {
                    out[(r0 + i, c0 + i)] += c(w, 0.0);
                }
            }
            if j >= first_site {
                out.view_mut((r0, site_col(j)), (m, m)).copy_from(&diag);
            } else {
                // Site 0 is the glued boundary of the interior.
                for (i, &p) in sec.glue.iter().enumerate() {
                    for k in 0..m {
                        out[(r0 + k, p)] += diag[(k, i)];
                    }
                }
            }
        }
        let last = site_col(n);
        for (q, &k) in far.iter().enumerate() {
            for i in 0..m {
                out[(ne + m * n + q, last + i)] = sec.vectors[(i, k)].conj() / h;
            }
        }
        out
    }

    /// Conjugated minus operator of a pure cylinder with a free boundary at
    /// `r = 0`: variables `η_0..η_{N−1}`, rows `k = 1..N−1` of
    /// `−(η_k − η_{k−1})/h + B(r_k)η_k` and the far-field rows.
    pub fn minus_matrix(&self, s: usize, delta: f64, far_field: bool) -> Result<CMatrix> {
        let sec = &self.sectors[s];
        if sec.interior_plus.is_some() {
            return Err(Error::Unsupported(
                "the minus operator of a glued model is the adjoint of the plus operator".into(),
            ));
        }
        let m = sec.values.len();
        let n = self.model.sites;
        let h = self.model.step;
        let far = if far_field {
            self.nondecaying(s, delta, Chirality::Minus)
        } else {
            Vec::new()
        };
        let rows = m * (n - 1) + far.len();
        let mut out = CMatrix::zeros(rows, m * n);
        for k in 1..n {
            let r0 = (k - 1) * m;
            let mut diag = self.site_block(s, k);
            for i in 0..m {
                diag[(i, i)] -= c(1.0 / h, 0.0);
            }
            out.view_mut((r0, k * m), (m, m)).copy_from(&diag);
            let w = (-delta * (theta(self.model.radius(k)) - theta(self.model.radius(k - 1)))).exp() / h;
            for i in 0..m {
                out[(r0 + i, (k - 1) * m + i)] += c(w, 0.0);
            }
        }
        for (q, &k) in far.iter().enumerate() {
            for i in 0..m {
                out[(m * (n - 1) + q, (n - 1) * m + i)] = sec.vectors[(i, k)].conj() / h;
            }
        }
        Ok(out)
    }

    /// Dense graded operator `[[0, (D⁺)*], [D⁺, 0]]` of sector `s` at weight
    /// `δ`, with plus coordinates first.
    pub fn dirac_matrix(&self, s: usize, delta: f64, far_field: bool) -> CMatrix {
        let p = self.plus_matrix(s, delta, far_field);
        let (r, k) = p.shape();
        let mut out = CMatrix::zeros(r + k, r + k);
        out.view_mut((k, 0), (r, k)).copy_from(&p);
        out.view_mut((0, k), (k, r)).copy_from(&p.adjoint());
        out
    }

    /// Kernel dimensions in `e^{δθ}L²`: the plus kernel of the conjugated
    /// operator and the minus kernel, which for glued models is the cokernel
    /// of the plus operator in the dual space `e^{−δθ}L²`.
    pub fn kernel_dims(&self, delta: f64) -> Result<KernelDims> {
        use rayon::prelude::*;
        let per: Vec<(f64, f64, f64)> = (0..self.sectors.len())
            .into_par_iter()
            .map(|s| -> Result<(f64, f64, f64)> {
                let w = self.sectors[s].weight;
                let (p, gp) = if self.sectors[s].interior_plus.is_none() {
                    self.mode_nullity(s, delta, Chirality::Plus)
                } else {
                    let split = split_of(&self.plus_matrix(s, delta, true));
                    (split.nullity as f64, split.gap_ratio)
                };
                let (q, gq) = if self.sectors[s].interior_plus.is_none() {
                    self.mode_nullity(s, delta, Chirality::Minus)
                } else {
                    let split = split_of(&self.plus_matrix(s, -delta, true));
                    (split.conullity as f64, split.gap_ratio)
                };
                Ok((w * p, w * q, gp.min(gq)))
            })
            .collect::<Result<_>>()?;
        let dims = KernelDims {
            plus: per.iter().map(|x| x.0).sum(),
            minus: per.iter().map(|x| x.1).sum(),
            min_gap_ratio: per.iter().map(|x| x.2).fold(f64::INFINITY, f64::min),
        };
        crate::linalg::require_gap(
            &RankSplit {
                rank: 0,
                nullity: 0,
                conullity: 0,
                gap_ratio: dims.min_gap_ratio,
            },
            crate::linalg::RANK_SAFETY,
        )?;
        Ok(dims)
    }

    /// Pure cylinders decouple along the eigenbasis of `A`, since every
    /// `B(r)` is diagonal there; each mode is a bidiagonal scalar problem.
    fn mode_nullity(&self, s: usize, delta: f64, chirality: Chirality) -> (f64, f64) {
        let n = self.model.sites;
        let h = self.model.step;
        let mut total = 0.0;
        let mut gap = f64::INFINITY;
        for &l in &self.sectors[s].values {
            let chi = if inside(l, self.eps) { 1.0 } else { 0.0 };
            let kappa = |j: usize| l + theta_prime(self.model.radius(j)) * (self.u - l * chi);
            let tail = tail_value(l, self.eps, self.u);
            let far = !self.decays(tail, delta, chirality);
            let mat = match chirality {
                Chirality::Plus => {
                    let mut a = CMatrix::zeros(n + far as usize, n + 1);
                    for j in 0..n {
                        a[(j, j)] = c(kappa(j) - 1.0 / h, 0.0);
                        a[(j, j + 1)] = c(self.weight_step(delta, j) / h, 0.0);
                    }
                    if far {
                        a[(n, n)] = c(1.0 / h, 0.0);
                    }
                    a
                }
                Chirality::Minus => {
                    let mut a = CMatrix::zeros(n - 1 + far as usize, n);
                    for j in 1..n {
                        a[(j - 1, j)] = c(kappa(j) - 1.0 / h, 0.0);
                        a[(j - 1, j - 1)] = c(
                            (-delta * (theta(self.model.radius(j)) - theta(self.model.radius(j - 1)))).exp() / h,
                            0.0,
                        );
                    }
                    if far {
                        a[(n - 1, n - 1)] = c(1.0 / h, 0.0);
                    }
                    a
                }
            };
            let split = split_of(&mat);
            total += split.nullity as f64;
            gap = gap.min(split.gap_ratio);
        }
        (total, gap)
    }
}

fn split_of(m: &CMatrix) -> RankSplit {
    rank_split(&singular_values(m), m.nrows(), m.ncols())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaSpec {
    #[default]
    Default,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteriorSpec {
    pub graph: GraphSpec,
    pub gluing: Vec<usize>,
}

/// JSON form `{boundary, interior?, R, h, theta?, nodes?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderSpec {
    pub boundary: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior: Option<InteriorSpec>,
    #[serde(rename = "R")]
    pub length: f64,
    pub h: f64,
    #[serde(default)]
    pub theta: ThetaSpec,
    /// Floquet nodes for a Z-periodic boundary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
}

impl TryFrom<CylinderSpec> for CylinderModel {
    type Error = Error;

    fn try_from(spec: CylinderSpec) -> Result<Self> {
        let boundary = EquivariantOperator::try_from(spec.boundary)?;
        let interior = match spec.interior {
            Some(i) => Some(Interior {
                graph: VoltageGraph::try_from(i.graph)?,
                gluing: i.gluing,
            }),
            None => None,
        };
        let grid = match spec.nodes {
            Some(n) => FloquetGrid::new(n)?,
            None => FloquetGrid::default_for(boundary.group().free_rank()),
        };
        CylinderModel::with_grid(boundary, interior, spec.length, spec.h, grid)
    }
}

impl From<&CylinderModel> for CylinderSpec {
    fn from(m: &CylinderModel) -> Self {
        CylinderSpec {
            boundary: OperatorSpec::from(m.boundary()),
            interior: m.interior().map(|i| InteriorSpec {
                graph: GraphSpec::from(&i.graph),
                gluing: i.gluing.clone(),
            }),
            length: m.length(),
            h: m.step(),
            theta: ThetaSpec::Default,
            nodes: (m.boundary().group().free_rank() > 0).then_some(m.grid().nodes_per_dim),
        }
    }
}

pub fn cylinder_from_json(text: &str) -> Result<CylinderModel> {
    let spec: CylinderSpec = serde_json::from_str(text)?;
    CylinderModel::try_from(spec)
}

pub fn cylinder_to_json(m: &CylinderModel) -> Result<String> {
    Ok(serde_json::to_string(&CylinderSpec::from(m))?)
}
