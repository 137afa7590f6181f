//! Heat semigroups, supertraces and the identities they satisfy.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::covering::{derived_cover, graph_dirac, GradedGraphDirac, VoltageGraph};
use crate::error::{Error, Result};
use crate::gamma::{
    apply_function, gamma_index, DeckGroup, EquivariantOperator, FloquetGrid, IndexPolicy, Quotient,
    SpectralDecomposition,
};
use crate::linalg::{
    c, hermitian_eigen, matrix_rank, max_abs, operator_norm, spectral_function, CMatrix, RANK_SAFETY,
};
use crate::quadrature::{integrate_vec, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Trace,
    Supertrace,
    EtaIntegrand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatCurve {
    pub kind: CurveKind,
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl HeatCurve {
    pub fn new(kind: CurveKind, times: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Dimension("times and values differ in length".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || times.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidInput("times must be positive and strictly increasing".into()));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Unstable("non-finite curve value".into()));
        }
        Ok(Self { kind, times, values })
    }

    /// `max − min` of the real parts.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| (lo.min(z.re), hi.max(z.re)));
        if self.values.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }

    /// Columns `t, value_re, value_im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "value_re", "value_im"])?;
        for (t, z) in self.times.iter().zip(&self.values) {
            w.write_record([t.to_string(), z.re.to_string(), z.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_time(time: f64) -> Result<()> {
    if !(time > 0.0 && time.is_finite()) {
        return Err(Error::InvalidInput(format!("heat time must be positive, got {time}")));
    }
    Ok(())
}

/// `e^{−time·T²}`.
pub fn heat_operator(t: &EquivariantOperator, time: f64, grid: &FloquetGrid) -> Result<EquivariantOperator> {
    check_time(time)?;
    apply_function(t, |x| (-time * x * x).exp(), grid)
}

/// `str_Γ(e^{−tD²})` at each time.
pub fn supertrace_curve(d: &GradedGraphDirac, times: &[f64], grid: &FloquetGrid) -> Result<HeatCurve> {
    supertrace_curve_of(&d.operator, times, grid)
}

pub fn supertrace_curve_of(d: &EquivariantOperator, times: &[f64], grid: &FloquetGrid) -> Result<HeatCurve> {
    d.require_odd(1e-12)?;
    for &t in times {
        check_time(t)?;
    }
    let dec = SpectralDecomposition::new(d, grid)?;
    let values = times
        .iter()
        .map(|&t| c(dec.supertrace_of(|x| (-t * x * x).exp()), 0.0))
        .collect();
    HeatCurve::new(CurveKind::Supertrace, times.to_vec(), values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtiyahReport {
    pub base_index: i64,
    pub gamma_index: f64,
    pub degree: usize,
    pub cover_index: i64,
    pub min_gap_ratio: f64,
    pub equal: bool,
    pub multiplicative: bool,
}

/// Index of the base operator versus the Γ-index of its lift at `q`, plus
/// the classical index of the finite cover.
pub fn atiyah_check(g: &VoltageGraph, q: &Quotient) -> Result<AtiyahReport> {
    let lifted = graph_dirac(g)?.operator.quotient(q)?;
    let gi = gamma_index(&lifted, &IndexPolicy::for_rank(0))?;

    let trivial = g.with_voltages(DeckGroup::trivial(), |_| crate::gamma::GroupElement(vec![]))?;
    let base_plus = plus_dense(&graph_dirac(&trivial)?)?;
    let base_split = matrix_rank(&base_plus);
    let cover_plus = plus_dense(&graph_dirac(&derived_cover(g, q)?)?)?;
    let cover_split = matrix_rank(&cover_plus);
    let min_gap = gi.min_gap().min(base_split.gap_ratio).min(cover_split.gap_ratio);
    if min_gap < RANK_SAFETY {
        return Err(Error::AmbiguousRank {
            gap_ratio: min_gap,
            threshold: RANK_SAFETY,
        });
    }
    let base_index = base_split.nullity as i64 - base_split.conullity as i64;
    let cover_index = cover_split.nullity as i64 - cover_split.conullity as i64;
    let degree = q.index();
    Ok(AtiyahReport {
        base_index,
        gamma_index: gi.index,
        degree,
        cover_index,
        min_gap_ratio: min_gap,
        equal: gi.integer_index(1e-9) == Some(base_index),
        multiplicative: cover_index == degree as i64 * base_index,
    })
}

/// Dense `D⁺` (edges × vertices) of a graph Dirac over the trivial group.
fn plus_dense(d: &GradedGraphDirac) -> Result<CMatrix> {
    let full = d.operator.dense()?;
    Ok(full.view((d.vertices, 0), (d.edges, d.vertices)).into_owned())
}

/// Largest `|K_base(x,y) − Σ_α K_cover((x,e),(y,α))|` for the kernel of
/// `D^l e^{−tD²}`.
pub fn unfolding_check(g: &VoltageGraph, q: &Quotient, time: f64, power: u32) -> Result<f64> {
    check_time(time)?;
    let f = move |x: f64| x.powi(power as i32) * (-time * x * x).exp();
    let d = graph_dirac(g)?.operator;
    let lifted = d.quotient(q)?;
    let kernel = apply_function(&lifted, f, &FloquetGrid::default_for(0))?;
    let target = q.target();
    let n = d.dim();

    let base = collapse_to_trivial(&d)?;
    let (vals, vecs) = hermitian_eigen(&base);
    let base_kernel = spectral_function(&vals, &vecs, f);

    let mut summed = CMatrix::zeros(n, n);
    for gamma in target.elements()? {
        if let Some(b) = kernel.block(&gamma) {
            summed += b;
        }
    }
    Ok(max_abs(&(base_kernel - summed)))
}

/// Sums all blocks: the operator induced on the quotient by the whole group.
fn collapse_to_trivial(op: &EquivariantOperator) -> Result<CMatrix> {
    let n = op.dim();
    let mut out = CMatrix::zeros(n, n);
    for m in op.blocks().values() {
        out += m;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuhamelReport {
    pub residual: f64,
    pub bound: f64,
    pub quadrature_error: f64,
    pub pass: bool,
}

/// Central difference of `u ↦ e^{−tT_u²}` at `u0` against
/// `−∫₀ᵗ e^{−sT²}(T′T+TT′)e^{−(t−s)T²} ds` (finite groups).
pub fn duhamel_check(
    family: impl Fn(f64) -> Result<EquivariantOperator>,
    u0: f64,
    time: f64,
    step: f64,
) -> Result<DuhamelReport> {
    check_time(time)?;
    if !(step > 0.0) {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let dense = |u: f64| -> Result<CMatrix> {
        let op = family(u)?;
        op.require_selfadjoint(1e-10)?;
        op.dense()
    };
    let (tp, t0, tm) = (dense(u0 + step)?, dense(u0)?, dense(u0 - step)?);
    let heat = |m: &CMatrix, s: f64| {
        let (v, w) = hermitian_eigen(m);
        spectral_function(&v, &w, |x| (-s * x * x).exp())
    };
    let fd = (heat(&tp, time) - heat(&tm, time)) / c(2.0 * step, 0.0);
    let deriv = (&tp - &tm) / c(2.0 * step, 0.0);

    let (vals, vecs) = hermitian_eigen(&t0);
    let anti = &deriv * &t0 + &t0 * &deriv;
    let rotated = vecs.adjoint() * anti * &vecs;
    let n = t0.nrows();
    let integral = integrate_vec(
        |s| {
            let mut out = Vec::with_capacity(2 * n * n);
            for j in 0..n {
                for k in 0..n {
                    let w = (-s * vals[j] * vals[j] - (time - s) * vals[k] * vals[k]).exp();
                    let z = rotated[(j, k)] * w;
                    out.push(z.re);
                    out.push(z.im);
                }
            }
            out
        },
        0.0,
        time,
        &QuadratureConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-11,
            max_intervals: 4000,
        },
    )?;
    let inner = CMatrix::from_fn(n, n, |j, k| {
        let idx = 2 * (j * n + k);
        c(-integral.value[idx], -integral.value[idx + 1])
    });
    let predicted = &vecs * inner * vecs.adjoint();
    let residual = max_abs(&(fd - predicted));
    let scale = operator_norm(&t0).max(1.0) * operator_norm(&deriv).max(1.0) * time.max(1.0);
    let bound = (step * step * scale.powi(3)).max(1e-6);
    Ok(DuhamelReport {
        residual,
        bound,
        quadrature_error: integral.error,
        pass: residual < bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongTimePoint {
    pub time: f64,
    pub residual: f64,
    pub bound: f64,
}

/// `‖e^{−tT²} − N(T)‖` on the dense realization, with the spectral bound
/// `e^{−t·gap²}`.
pub fn long_time_check(t: &EquivariantOperator, times: &[f64]) -> Result<Vec<LongTimePoint>> {
    if !t.group().is_finite() {
        return Err(Error::Unsupported("long-time limits need a finite group".into()));
    }
    let grid = FloquetGrid::default_for(0);
    let dec = SpectralDecomposition::new(t, &grid)?;
    let tol = dec.zero_tolerance();
    let gap = dec.measure().gap();
    let kernel = dec.function_operator(|x| if x.abs() <= tol { 1.0 } else { 0.0 })?.dense()?;
    times
        .iter()
        .map(|&s| {
            check_time(s)?;
            let h = dec.function_operator(|x| (-s * x * x).exp())?.dense()?;
            let residual = operator_norm(&(h - &kernel));
            let bound = if gap.is_finite() { (-s * gap * gap).exp() } else { 0.0 };
            Ok(LongTimePoint {
                time: s,
                residual,
                bound: bound * (1.0 + 1e-9) + 1e-12,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::{circle_operator, CircleMode};
    use crate::gamma::{FiberDims, GroupElement};
    use crate::linalg::real_diagonal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn heat_of_zero_and_diagonal() {
        let grid = FloquetGrid::default_for(0);
        let zero = EquivariantOperator::zero(DeckGroup::trivial(), FiberDims::ungraded(3));
        let h = heat_operator(&zero, 2.0, &grid).unwrap();
        let id = EquivariantOperator::identity(DeckGroup::trivial(), FiberDims::ungraded(3));
        assert!(h.sub(&id).unwrap().max_entry() < 1e-15);
        let diag = EquivariantOperator::new(
            DeckGroup::trivial(),
            FiberDims::ungraded(2),
            [(GroupElement(vec![]), real_diagonal(&[0.5, -2.0]))],
        )
        .unwrap();
        let h = heat_operator(&diag, 0.7, &grid).unwrap();
        let b = h.block(&GroupElement(vec![])).unwrap();
        assert!((b[(0, 0)].re - (-0.7f64 * 0.25).exp()).abs() < 1e-15);
        assert!((b[(1, 1)].re - (-0.7f64 * 4.0).exp()).abs() < 1e-15);
        assert!(heat_operator(&diag, 0.0, &grid).is_err());
    }

    #[test]
    fn tree_supertrace_is_one() {
        let g = VoltageGraph::plain(DeckGroup::trivial(), 5, &[(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        let curve = supertrace_curve(&graph_dirac(&g).unwrap(), &[0.1, 1.0, 10.0], &FloquetGrid::default_for(0))
            .unwrap();
        for z in &curve.values {
            assert!((z.re - 1.0).abs() < 1e-10);
        }
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,value_re,value_im\n"));
    }

    #[test]
    fn atiyah_on_random_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = VoltageGraph::random_connected(DeckGroup::cyclic(5).unwrap(), 10, 14, &mut rng).unwrap();
        let r = atiyah_check(&g, &g.group().quotient(&[]).unwrap()).unwrap();
        assert_eq!(r.base_index, -4);
        assert!(r.equal && r.multiplicative);
    }

    #[test]
    fn unfolding_on_c4() {
        let z2 = DeckGroup::cyclic(2).unwrap();
        let g = VoltageGraph::plain(z2.clone(), 4, &[(0, 1), (1, 2), (2, 3), (3, 0)])
            .unwrap()
            .with_voltages(z2.clone(), |e| GroupElement(vec![i64::from(e.tail == 3)]))
            .unwrap();
        let q = z2.quotient(&[]).unwrap();
        assert!(unfolding_check(&g, &q, 1.0, 0).unwrap() < 1e-11);
        assert!(unfolding_check(&g, &q, 1.0, 1).unwrap() < 1e-11);
    }

    #[test]
    fn duhamel_shift_family() {
        let base = circle_operator(4, 0.3, &[0.2, -0.1, 0.0, 0.4], CircleMode::Ring).unwrap();
        let r = duhamel_check(|u| Ok(base.add_scalar(c(u, 0.0))), 0.1, 1.0, 1e-3).unwrap();
        assert!(r.pass, "{r:?}");
        let constant = duhamel_check(|_| Ok(base.clone()), 0.0, 1.0, 1e-3).unwrap();
        assert!(constant.residual < 1e-12);
    }

    #[test]
    fn long_time_limit_with_kernel() {
        let t = EquivariantOperator::new(
            DeckGroup::trivial(),
            FiberDims::ungraded(4),
            [(GroupElement(vec![]), real_diagonal(&[0.0, 0.0, 0.5, -1.0]))],
        )
        .unwrap();
        let pts = long_time_check(&t, &[1.0, 10.0, 200.0]).unwrap();
        assert!(pts.windows(2).all(|w| w[1].residual <= w[0].residual));
        assert!(pts.iter().all(|p| p.residual <= p.bound));
        assert!(pts[2].residual < 1e-8);
    }
}
