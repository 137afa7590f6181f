//! Group-algebra valued matrices `Σ_γ A_γ ⊗ R_γ` and their realizations:
//! dense matrices over finite groups, Floquet symbols over lattices, and
//! block-diagonal sectors used by the spectral code.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::group::{DeckGroup, FiniteFactor, GroupElement, Quotient};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_residual, max_abs, trace, CMatrix, ONE, ZERO};

/// Graded fiber over the fundamental domain. Ungraded operators use
/// `minus = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FiberDims {
    pub plus: usize,
    pub minus: usize,
}

impl FiberDims {
    pub fn new(plus: usize, minus: usize) -> Self {
        Self { plus, minus }
    }

    pub fn ungraded(n: usize) -> Self {
        Self { plus: n, minus: 0 }
    }

    pub fn total(&self) -> usize {
        self.plus + self.minus
    }

    /// `+1` on plus rows, `-1` on minus rows.
    pub fn grading(&self) -> Vec<f64> {
        let mut g = vec![1.0; self.plus];
        g.extend(std::iter::repeat_n(-1.0, self.minus));
        g
    }
}

/// Uniform tensor grid on the dual torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FloquetGrid {
    pub nodes_per_dim: usize,
}

impl FloquetGrid {
    pub fn new(nodes_per_dim: usize) -> Result<Self> {
        if nodes_per_dim == 0 {
            return Err(Error::InvalidInput("Floquet grid needs at least one node".into()));
        }
        Ok(Self { nodes_per_dim })
    }

    pub fn default_for(rank: usize) -> Self {
        let nodes_per_dim = match rank {
            0 => 1,
            1 => 1024,
            2 => 64,
            _ => 16,
        };
        Self { nodes_per_dim }
    }

    pub fn node_count(&self, rank: usize) -> usize {
        self.nodes_per_dim.pow(rank as u32)
    }

    /// Nodes `2π j / N` in lexicographic order.
    pub fn nodes(&self, rank: usize) -> Vec<Vec<f64>> {
        let n = self.nodes_per_dim;
        (0..self.node_count(rank))
            .map(|mut idx| {
                let mut theta = vec![0.0; rank];
                for slot in theta.iter_mut().rev() {
                    *slot = 2.0 * PI * (idx % n) as f64 / n as f64;
                    idx /= n;
                }
                theta
            })
            .collect()
    }
}

/// One diagonal block of the decomposition `tr_Γ f(T) = Σ_s w_s tr f(M_s)`.
#[derive(Debug, Clone)]
pub struct Sector {
    pub weight: f64,
    pub theta: Vec<f64>,
    /// Character indices for cyclic finite parts; `None` when the finite part
    /// is realized densely.
    pub character: Option<Vec<i64>>,
    pub matrix: CMatrix,
    pub grading: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivariantOperator {
    group: DeckGroup,
    fiber: FiberDims,
    blocks: BTreeMap<GroupElement, CMatrix>,
}

impl EquivariantOperator {
    /// Builds an operator from `(γ, A_γ)` pairs. Repeated elements are summed
    /// and exactly-zero blocks dropped.
    pub fn new(
        group: DeckGroup,
        fiber: FiberDims,
        blocks: impl IntoIterator<Item = (GroupElement, CMatrix)>,
    ) -> Result<Self> {
        let n = fiber.total();
        let mut map: BTreeMap<GroupElement, CMatrix> = BTreeMap::new();
        for (g, m) in blocks {
            group.validate(&g)?;
            if m.shape() != (n, n) {
                return Err(Error::Dimension(format!(
                    "block at {g} has shape {:?}, fiber needs {n}x{n}",
                    m.shape()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!("block at {g} has non-finite entries")));
            }
            match map.get_mut(&g) {
                Some(acc) => *acc += m,
                None => {
                    map.insert(g, m);
                }
            }
        }
        map.retain(|_, m| m.iter().any(|z| *z != ZERO));
        Ok(Self {
            group,
            fiber,
            blocks: map,
        })
    }

    pub fn zero(group: DeckGroup, fiber: FiberDims) -> Self {
        Self {
            group,
            fiber,
            blocks: BTreeMap::new(),
        }
    }

    pub fn scalar(group: DeckGroup, fiber: FiberDims, z: Complex64) -> Self {
        let n = fiber.total();
        let e = group.identity();
        Self::new(group, fiber, [(e, CMatrix::identity(n, n) * z)]).expect("identity block is valid")
    }

    pub fn identity(group: DeckGroup, fiber: FiberDims) -> Self {
        Self::scalar(group, fiber, ONE)
    }

    /// Odd operator `[[0, (T⁺)*], [T⁺, 0]]` from the blocks of `T⁺`
    /// (shape `minus x plus`).
    pub fn odd_from_plus(
        group: DeckGroup,
        fiber: FiberDims,
        plus_blocks: impl IntoIterator<Item = (GroupElement, CMatrix)>,
    ) -> Result<Self> {
        let (p, m) = (fiber.plus, fiber.minus);
        let n = p + m;
        let mut out: Vec<(GroupElement, CMatrix)> = Vec::new();
        for (g, b) in plus_blocks {
            group.validate(&g)?;
            if b.shape() != (m, p) {
                return Err(Error::Dimension(format!(
                    "plus block at {g} has shape {:?}, expected {m}x{p}",
                    b.shape()
                )));
            }
            let mut lower = CMatrix::zeros(n, n);
            lower.view_mut((p, 0), (m, p)).copy_from(&b);
            let mut upper = CMatrix::zeros(n, n);
            upper.view_mut((0, p), (p, m)).copy_from(&b.adjoint());
            out.push((g.clone(), lower));
            out.push((group.inverse(&g), upper));
        }
        Self::new(group, fiber, out)
    }

    pub fn group(&self) -> &DeckGroup {
        &self.group
    }

    pub fn fiber(&self) -> FiberDims {
        self.fiber
    }

    pub fn dim(&self) -> usize {
        self.fiber.total()
    }

    pub fn blocks(&self) -> &BTreeMap<GroupElement, CMatrix> {
        &self.blocks
    }

    pub fn block(&self, g: &GroupElement) -> Option<&CMatrix> {
        self.blocks.get(g)
    }

    /// Blocks of `T⁺`: the minus-rows, plus-columns corner.
    pub fn plus_blocks(&self) -> BTreeMap<GroupElement, CMatrix> {
        let (p, m) = (self.fiber.plus, self.fiber.minus);
        self.blocks
            .iter()
            .map(|(g, b)| (g.clone(), b.view((p, 0), (m, p)).into_owned()))
            .filter(|(_, b)| b.iter().any(|z| *z != ZERO))
            .collect()
    }

    /// Largest entry over all blocks.
    pub fn max_entry(&self) -> f64 {
        self.blocks.values().map(max_abs).fold(0.0, f64::max)
    }

    /// Sum of block operator norms bounded by Frobenius norms; an upper bound
    /// for the operator norm.
    pub fn norm_bound(&self) -> f64 {
        self.blocks.values().map(crate::linalg::frobenius).sum()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.group != other.group {
            return Err(Error::GroupMismatch("operators live over different groups".into()));
        }
        if self.fiber != other.fiber {
            return Err(Error::Dimension(format!(
                "fiber {:?} vs {:?}",
                self.fiber, other.fiber
            )));
        }
        Ok(())
    }

    /// `(A*)_γ = (A_{γ⁻¹})†`.
    pub fn adjoint(&self) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|(g, m)| (self.group.inverse(g), m.adjoint()))
            .collect();
        Self {
            group: self.group.clone(),
            fiber: self.fiber,
            blocks,
        }
    }

    /// Convolution `(AB)_γ = Σ_{αβ=γ} A_α B_β`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out: BTreeMap<GroupElement, CMatrix> = BTreeMap::new();
        for (a, ma) in &self.blocks {
            for (b, mb) in &other.blocks {
                let prod = ma * mb;
                let g = self.group.multiply(a, b);
                match out.get_mut(&g) {
                    Some(acc) => *acc += prod,
                    None => {
                        out.insert(g, prod);
                    }
                }
            }
        }
        Self::new(self.group.clone(), self.fiber, out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Self::new(
            self.group.clone(),
            self.fiber,
            self.blocks
                .iter()
                .chain(other.blocks.iter())
                .map(|(g, m)| (g.clone(), m.clone())),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self::new(
            self.group.clone(),
            self.fiber,
            self.blocks.iter().map(|(g, m)| (g.clone(), m * z)),
        )
        .expect("scaling keeps shapes")
    }

    /// `A + z·Id`.
    pub fn add_scalar(&self, z: Complex64) -> Self {
        self.add(&Self::scalar(self.group.clone(), self.fiber, z))
            .expect("same group and fiber")
    }

    /// `A ⊕ B` on the fiber `(p_a + p_b, m_a + m_b)`, plus parts first.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.group != other.group {
            return Err(Error::GroupMismatch("direct sum over different groups".into()));
        }
        let (fa, fb) = (self.fiber, other.fiber);
        let fiber = FiberDims::new(fa.plus + fb.plus, fa.minus + fb.minus);
        let n = fiber.total();
        // Positions of the two summands' fiber coordinates in the joint fiber.
        let pos_a: Vec<usize> = (0..fa.plus).chain((0..fa.minus).map(|i| fa.plus + fb.plus + i)).collect();
        let pos_b: Vec<usize> = (0..fb.plus)
            .map(|i| fa.plus + i)
            .chain((0..fb.minus).map(|i| fa.plus + fb.plus + fa.minus + i))
            .collect();
        let embed = |m: &CMatrix, pos: &[usize]| {
            let mut out = CMatrix::zeros(n, n);
            for (i, &pi) in pos.iter().enumerate() {
                for (j, &pj) in pos.iter().enumerate() {
                    out[(pi, pj)] = m[(i, j)];
                }
            }
            out
        };
        let blocks: Vec<(GroupElement, CMatrix)> = self
            .blocks
            .iter()
            .map(|(g, m)| (g.clone(), embed(m, &pos_a)))
            .chain(other.blocks.iter().map(|(g, m)| (g.clone(), embed(m, &pos_b))))
            .collect();
        Self::new(self.group.clone(), fiber, blocks)
    }

    /// `tr_Γ(A) = tr(A_e)`.
    pub fn gamma_trace(&self) -> Complex64 {
        self.blocks.get(&self.group.identity()).map(trace).unwrap_or(ZERO)
    }

    /// `tr_Γ(εA)` with the fiber grading `ε`.
    pub fn gamma_supertrace(&self) -> Complex64 {
        let grading = self.fiber.grading();
        self.blocks
            .get(&self.group.identity())
            .map(|m| grading.iter().enumerate().map(|(i, &s)| m[(i, i)] * s).sum())
            .unwrap_or(ZERO)
    }

    /// Largest entry of `A* − A`.
    pub fn selfadjoint_residual(&self) -> f64 {
        let adj = self.adjoint();
        let keys: std::collections::BTreeSet<&GroupElement> =
            self.blocks.keys().chain(adj.blocks.keys()).collect();
        let n = self.dim();
        let zero = CMatrix::zeros(n, n);
        keys.into_iter()
            .map(|g| {
                let a = self.blocks.get(g).unwrap_or(&zero);
                let b = adj.blocks.get(g).unwrap_or(&zero);
                max_abs(&(a - b))
            })
            .fold(0.0, f64::max)
    }

    /// Largest entry in the even (plus-plus, minus-minus) corners.
    pub fn odd_residual(&self) -> f64 {
        let (p, m) = (self.fiber.plus, self.fiber.minus);
        self.blocks
            .values()
            .map(|b| {
                let pp = b.view((0, 0), (p, p)).iter().map(|z| z.norm()).fold(0.0, f64::max);
                let mm = b.view((p, p), (m, m)).iter().map(|z| z.norm()).fold(0.0, f64::max);
                pp.max(mm)
            })
            .fold(0.0, f64::max)
    }

    /// Largest entry in the odd (plus-minus, minus-plus) corners.
    pub fn even_residual(&self) -> f64 {
        let (p, m) = (self.fiber.plus, self.fiber.minus);
        self.blocks
            .values()
            .map(|b| {
                let pm = b.view((0, p), (p, m)).iter().map(|z| z.norm()).fold(0.0, f64::max);
                let mp = b.view((p, 0), (m, p)).iter().map(|z| z.norm()).fold(0.0, f64::max);
                pm.max(mp)
            })
            .fold(0.0, f64::max)
    }

    /// Rejects operators whose selfadjointness residual exceeds `tol` relative
    /// to their size.
    pub fn require_selfadjoint(&self, tol: f64) -> Result<()> {
        let residual = self.selfadjoint_residual();
        if residual > tol * self.max_entry().max(1.0) {
            return Err(Error::NotSelfAdjoint { residual });
        }
        Ok(())
    }

    pub fn require_odd(&self, tol: f64) -> Result<()> {
        let residual = self.odd_residual();
        if residual > tol * self.max_entry().max(1.0) {
            return Err(Error::NotOdd { residual });
        }
        Ok(())
    }

    /// Dense realization over a finite group: `dense[(g,i),(h,j)] =
    /// A_{g⁻¹h}[i,j]`, group elements in rank order.
    pub fn dense(&self) -> Result<CMatrix> {
        if !self.group.is_finite() {
            return Err(Error::Unsupported("dense realization needs a finite group".into()));
        }
        let elems = self.group.elements()?;
        let n = self.dim();
        let order = elems.len();
        let mut out = CMatrix::zeros(order * n, order * n);
        for (gi, g) in elems.iter().enumerate() {
            let ginv = self.group.inverse(g);
            for (gamma, m) in &self.blocks {
                let h = self.group.multiply(g, gamma);
                debug_assert_eq!(self.group.multiply(&ginv, &h), *gamma);
                let hi = self.group.torsion_rank(&h);
                out.view_mut((gi * n, hi * n), (n, n)).copy_from(m);
            }
        }
        Ok(out)
    }

    /// Grading of the dense realization.
    pub fn dense_grading(&self) -> Vec<f64> {
        let g = self.fiber.grading();
        let order = self.group.torsion_order();
        (0..order).flat_map(|_| g.iter().copied()).collect()
    }

    /// Inverse of [`dense`](Self::dense): reads `A_γ` from block row `e` of an
    /// equivariant dense matrix.
    pub fn from_dense(group: DeckGroup, fiber: FiberDims, dense: &CMatrix) -> Result<Self> {
        let elems = group.elements()?;
        let n = fiber.total();
        if dense.shape() != (elems.len() * n, elems.len() * n) {
            return Err(Error::Dimension("dense matrix does not match group and fiber".into()));
        }
        let e = group.torsion_rank(&group.identity());
        let blocks: Vec<(GroupElement, CMatrix)> = elems
            .iter()
            .map(|h| {
                let hi = group.torsion_rank(h);
                (h.clone(), dense.view((e * n, hi * n), (n, n)).into_owned())
            })
            .collect();
        Self::new(group, fiber, blocks)
    }

    /// Pushes the operator to a finite quotient: blocks with equal image are
    /// summed.
    pub fn quotient(&self, q: &Quotient) -> Result<Self> {
        if *q.source() != self.group {
            return Err(Error::GroupMismatch("quotient is not defined on this group".into()));
        }
        Self::new(
            q.target().clone(),
            self.fiber,
            self.blocks.iter().map(|(g, m)| (q.apply(g), m.clone())),
        )
    }

    fn phase(&self, g: &GroupElement, theta: &[f64]) -> Complex64 {
        let k = self.group.free_rank();
        let dot: f64 = g.0[..k].iter().zip(theta).map(|(&x, &t)| x as f64 * t).sum();
        Complex64::from_polar(1.0, dot)
    }

    /// Floquet symbol `Â(θ) = Σ_γ A_γ e^{i⟨γ,θ⟩}`. A finite part is joined in
    /// as its dense realization, so the result has size `|F|·n`.
    pub fn floquet(&self, theta: &[f64]) -> Result<CMatrix> {
        if theta.len() != self.group.free_rank() {
            return Err(Error::Dimension(format!(
                "θ has {} coordinates for a lattice of rank {}",
                theta.len(),
                self.group.free_rank()
            )));
        }
        Ok(self.torsion_dense(theta))
    }

    fn torsion_dense(&self, theta: &[f64]) -> CMatrix {
        let k = self.group.free_rank();
        let n = self.dim();
        let tors = DeckGroup::new(0, self.group.factors().to_vec()).expect("factors already valid");
        let order = tors.torsion_order();
        let mut out = CMatrix::zeros(order * n, order * n);
        for gi in 0..order {
            let g = GroupElement(tors.torsion_at(gi));
            for (gamma, m) in &self.blocks {
                let t = GroupElement(gamma.0[k..].to_vec());
                let hi = tors.torsion_rank(&tors.multiply(&g, &t));
                let z = self.phase(gamma, theta);
                let mut view = out.view_mut((gi * n, hi * n), (n, n));
                view += m * z;
            }
        }
        out
    }

    fn character_sum(&self, theta: &[f64], chars: &[i64]) -> CMatrix {
        let k = self.group.free_rank();
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for (gamma, m) in &self.blocks {
            let mut angle: f64 = gamma.0[..k].iter().zip(theta).map(|(&x, &t)| x as f64 * t).sum();
            for ((f, &j), &x) in self.group.factors().iter().zip(chars).zip(&gamma.0[k..]) {
                if let FiniteFactor::Cyclic(mo) = f {
                    angle += 2.0 * PI * ((j * x).rem_euclid(*mo as i64)) as f64 / *mo as f64;
                }
            }
            out += m * Complex64::from_polar(1.0, angle);
        }
        out
    }

    /// Block-diagonal decomposition over Floquet nodes and characters of the
    /// finite part (or its dense realization when a factor is a table group).
    pub fn sectors(&self, grid: &FloquetGrid) -> Vec<Sector> {
        let k = self.group.free_rank();
        let nodes = grid.nodes(k);
        let order = self.group.torsion_order();
        let weight = 1.0 / (nodes.len() * order) as f64;
        let fiber_grading = self.fiber.grading();
        if self.group.torsion_is_cyclic() {
            let tors = DeckGroup::new(0, self.group.factors().to_vec()).expect("valid factors");
            let chars: Vec<Vec<i64>> = (0..order).map(|r| tors.torsion_at(r)).collect();
            let jobs: Vec<(Vec<f64>, Vec<i64>)> = nodes
                .iter()
                .flat_map(|t| chars.iter().map(move |ch| (t.clone(), ch.clone())))
                .collect();
            jobs.into_par_iter()
                .map(|(theta, ch)| Sector {
                    weight,
                    matrix: self.character_sum(&theta, &ch),
                    theta,
                    character: Some(ch),
                    grading: fiber_grading.clone(),
                })
                .collect()
        } else {
            let grading = self.dense_grading();
            nodes
                .into_par_iter()
                .map(|theta| Sector {
                    weight,
                    matrix: self.torsion_dense(&theta),
                    theta,
                    character: None,
                    grading: grading.clone(),
                })
                .collect()
        }
    }

    /// Random selfadjoint operator supported on `support ∪ support⁻¹`, entries
    /// of size at most `scale`.
    pub fn random_selfadjoint<R: Rng + ?Sized>(
        group: DeckGroup,
        fiber: FiberDims,
        support: &[GroupElement],
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let n = fiber.total();
        let mut blocks = Vec::new();
        for g in support {
            let m = CMatrix::from_fn(n, n, |_, _| {
                c(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
            });
            blocks.push((group.inverse(g), m.adjoint().scale(0.5)));
            blocks.push((g.clone(), m.scale(0.5)));
        }
        Self::new(group, fiber, blocks)
    }
}

/// Composes the plus parts of two odd operators: the result is the odd
/// operator with plus part `S⁺T⁺`.
pub fn compose_plus(s: &EquivariantOperator, t: &EquivariantOperator) -> Result<EquivariantOperator> {
    if s.group != t.group {
        return Err(Error::GroupMismatch("plus parts over different groups".into()));
    }
    if s.fiber.plus != t.fiber.minus {
        return Err(Error::Dimension("S⁺T⁺ needs S's plus fiber to equal T's minus fiber".into()));
    }
    let sp = s.plus_blocks();
    let tp = t.plus_blocks();
    let mut out: BTreeMap<GroupElement, CMatrix> = BTreeMap::new();
    for (a, ma) in &sp {
        for (b, mb) in &tp {
            let prod = ma * mb;
            let g = s.group.multiply(a, b);
            match out.get_mut(&g) {
                Some(acc) => *acc += prod,
                None => {
                    out.insert(g, prod);
                }
            }
        }
    }
    EquivariantOperator::odd_from_plus(s.group.clone(), FiberDims::new(t.fiber.plus, s.fiber.minus), out)
}

/// Largest Hermitian defect over the sectors; used to validate inputs whose
/// symbols, not blocks, are given.
pub fn sector_hermitian_residual(sectors: &[Sector]) -> f64 {
    sectors
        .iter()
        .map(|s| hermitian_residual(&s.matrix))
        .fold(0.0, f64::max)
}
