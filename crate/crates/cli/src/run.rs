//! Dispatch from a validated config to the library checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use ghl::clifford::{
    cylinder_trace_identity_check, graded_trace, spinor_representation, volume_element, CliffordElement,
};
use ghl::covering::{circle_operator, graph_dirac, tower, CircleMode, VoltageGraph};
use ghl::cylinder::{
    aps_consistency, boundary_spectrum, default_delta_grid, extended_kernel_report, l2_index_report,
    model_solution_counts, modified_index, spectral_modification, spectrum_bottom_check, tail_eta, CylinderModel,
    CylinderSpec, ModifiedOperator,
};
use ghl::eta::{eta_heat_integral, eta_jump_check, eta_spectral, tower_eta_convergence, EtaConfig, TowerConfig};
use ghl::gamma::{
    apply_function, DeckGroup, EquivariantOperator, FiberDims, FloquetGrid, OperatorSpec,
};
use ghl::heat::{
    atiyah_check, duhamel_check, graph_decay_check, path_cycle_certificate, relative_decay_check, supertrace_curve,
    unfolding_check,
};
use ghl::linalg::{c, CMatrix};

use crate::config::*;
use crate::report::{Artifact, Check};

/// Default singular-value gap ratio below which ranks are ambiguous.
const RANK_GAP: f64 = 1e3;

#[derive(Debug)]
pub enum RunError {
    /// The input describes an invalid object (bad graph, non-selfadjoint
    /// operator, ...).
    Input(ghl::Error),
    /// Flagged ranks, coarse grids or non-convergent quadrature.
    Numerical(ghl::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Input(e) => write!(f, "invalid input: {e}"),
            RunError::Numerical(e) => write!(f, "numerical ambiguity: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ghl::Error> for RunError {
    fn from(e: ghl::Error) -> Self {
        if e.is_numerical() {
            RunError::Numerical(e)
        } else {
            RunError::Input(e)
        }
    }
}

type Run<T> = Result<T, RunError>;

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    fn json(&mut self, name: &str, value: &impl Serialize) -> Run<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(ghl::Error::from)?;
        bytes.push(b'\n');
        self.artifacts.push(Artifact {
            name: name.to_string(),
            bytes,
        });
        Ok(())
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> ghl::Result<()>) -> Run<()> {
        let mut bytes = Vec::new();
        write(&mut bytes)?;
        self.artifacts.push(Artifact {
            name: name.to_string(),
            bytes,
        });
        Ok(())
    }

    fn rows(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Run<()> {
        self.csv(name, |out| {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r.iter().map(|x| (x + 0.0).to_string()))?;
            }
            w.flush()?;
            Ok(())
        })
    }
}

fn ambiguous(gap_ratio: f64, threshold: f64) -> RunError {
    RunError::Numerical(ghl::Error::AmbiguousRank { gap_ratio, threshold })
}

pub fn run(cfg: &ExperimentConfig) -> Run<Outcome> {
    let tol = &cfg.tolerances;
    let mut out = Outcome::default();
    match &cfg.experiment {
        Experiment::CliffordSelftest(i) => clifford(i, tol, cfg.seed, &mut out)?,
        Experiment::Atiyah(i) => atiyah(i, tol, &mut out)?,
        Experiment::MckeanSinger(i) => mckean_singer(i, tol, &mut out)?,
        Experiment::Unfolding(i) => unfolding(i, tol, &mut out)?,
        Experiment::Decay(i) => decay(i, &mut out)?,
        Experiment::RelativeDecay(i) => relative_decay(i, tol, &mut out)?,
        Experiment::Duhamel(i) => duhamel(i, cfg.seed, &mut out)?,
        Experiment::EtaOracle(i) => eta_oracle(i, tol, cfg.seed, &mut out)?,
        Experiment::EtaJump(i) => eta_jump(i, tol, cfg.seed, &mut out)?,
        Experiment::EtaTower(i) => eta_tower(i, tol, &mut out)?,
        Experiment::CylinderKernels(i) => cylinder_kernels(i, tol, &mut out)?,
        Experiment::CylinderAps(i) => cylinder_aps(i, &mut out)?,
        Experiment::SpectrumBottom(i) => spectrum_bottom(i, tol, &mut out)?,
    }
    Ok(out)
}

fn graph(spec: &ghl::covering::GraphSpec) -> Run<VoltageGraph> {
    Ok(VoltageGraph::try_from(spec.clone())?)
}

fn operator(spec: &OperatorSpec) -> Run<EquivariantOperator> {
    Ok(EquivariantOperator::try_from(spec.clone())?)
}

fn cylinder(spec: &CylinderSpec) -> Run<CylinderModel> {
    Ok(CylinderModel::try_from(spec.clone())?)
}

fn clifford(i: &CliffordInput, tol: &Tolerances, seed: u64, out: &mut Outcome) -> Run<()> {
    let exact = tol.residual_or(1e-14);
    let one = c(1.0, 0.0);
    let mut rows = Vec::new();
    let (mut relations, mut others, mut identity) = (0f64, 0f64, 0f64);
    let (mut tops_exact, mut units_exact) = (true, true);
    for l in 1..=i.max_l {
        let (odd, even) = (2 * l - 1, 2 * l);
        let top = 2f64.powi(l as i32);
        let half = 2f64.powi(l as i32 - 1);
        for k in [odd, even] {
            relations = relations.max(spinor_representation(k)?.relation_residual());
        }
        let str_tau = graded_trace(&volume_element(even)?).str;
        tops_exact &= str_tau == c(top, 0.0);
        let t1 = graded_trace(&CliffordElement::one(odd)?);
        let tt = graded_trace(&volume_element(odd)?);
        units_exact &= t1.tr_plus == Some(c(half, 0.0)) && t1.tr_minus == Some(c(half, 0.0));
        units_exact &= tt.tr_plus == Some(c(half, 0.0)) && tt.tr_minus == Some(c(-half, 0.0));
        rows.push(vec![l as f64, str_tau.re, t1.tr_plus.map_or(f64::NAN, |z| z.re), tt.tr_minus.map_or(f64::NAN, |z| z.re)]);

        let full_even: u16 = (1 << even) - 1;
        let full_odd: u16 = (1 << odd) - 1;
        let rep = spinor_representation(even)?;
        let last = CliffordElement::generator(even, even)?;
        for mask in 0..=full_even {
            if mask != full_even {
                let x = CliffordElement::from_masks(even, [(mask, one)])?;
                others = others.max(graded_trace(&x).str.norm());
            }
            if mask <= full_odd && mask != 0 && mask != full_odd {
                let x = CliffordElement::from_masks(odd, [(mask, one)])?;
                let t = graded_trace(&x);
                others = others.max(t.tr_plus.map_or(0.0, |z| z.norm()));
                others = others.max(t.tr_minus.map_or(0.0, |z| z.norm()));
            }
            if mask <= full_odd && mask != 0 {
                let x = CliffordElement::from_masks(odd, [(mask, one)])?;
                let lifted = CliffordElement::from_masks(even, [(mask, one)])?;
                let t = graded_trace(&x);
                let s = rep.supertrace(&last.multiply(&lifted)?)?;
                identity = identity.max((t.tr_plus.unwrap_or_default() + s * 0.5).norm());
                identity = identity.max((t.tr_minus.unwrap_or_default() - s * 0.5).norm());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = i.phi_dim;
    let phi = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let cyl = cylinder_trace_identity_check(&phi)?;
    out.checks.extend([
        Check::holds("top supertrace str(τ_2l) = 2^l", tops_exact),
        Check::holds("chiral traces of 1 and τ_(2l-1) = ±2^(l-1)", units_exact),
        Check::at_most("other monomial traces", others, exact),
        Check::at_most("anticommutation relations", relations, exact),
        Check::at_most("chiral traces from supertrace with c_2l", identity, 1e-12),
        Check::at_most("cylinder trace identity", cyl, 1e-12 * (1.0 + n as f64)),
    ]);
    out.rows("clifford.csv", &["l", "str_tau", "tr_plus_one", "tr_minus_tau"], &rows)
}

fn atiyah(i: &AtiyahInput, tol: &Tolerances, out: &mut Outcome) -> Run<()> {
    let g = graph(&i.graph)?;
    let q = g.group().quotient(&i.moduli)?;
    let r = atiyah_check(&g, &q)?;
    let threshold = tol.rank_gap_or(RANK_GAP);
    if r.min_gap_ratio < threshold {
        return Err(ambiguous(r.min_gap_ratio, threshold));
    }
    out.checks.extend([
        Check::equal("Γ-index of the lift equals the base index", r.gamma_index, r.base_index as f64),
        Check::equal("base index equals |V| − |E|", r.base_index as f64, g.euler_characteristic() as f64),
        Check::equal("cover index is degree times base index", r.cover_index as f64, (r.degree as i64 * r.base_index) as f64),
        Check::at_least("rank gap ratio", r.min_gap_ratio, threshold),
    ]);
    out.json("atiyah.json", &r)
}

fn mckean_singer(i: &McKeanSingerInput, tol: &Tolerances, out: &mut Outcome) -> Run<()> {
    let g = graph(&i.graph)?;
    let rank = g.group().free_rank();
    let grid = match i.nodes {
        Some(n) => FloquetGrid::new(n)?,
        None => FloquetGrid::default_for(rank),
    };
    let d = graph_dirac(&g)?;
    let curve = supertrace_curve(&d, &i.times, &grid)?;
    let chi = g.euler_characteristic() as f64;
    let worst = curve.values.iter().map(|z| (z - c(chi, 0.0)).norm()).fold(0.0, f64::max);
    let bound = tol.residual_or(1e-9);
    out.checks.extend([
        Check::at_most("|str_Γ(e^{-tD²}) − (|V| − |E|)|", worst, bound),
        Check::at_most("supertrace spread over t", curve.spread(), bound),
    ]);
    out.csv("supertrace.csv", |w| curve.write_csv(w))
}

fn unfolding(i: &UnfoldingInput, tol: &Tolerances, out: &mut Outcome) -> Run<()> {
    let g = graph(&i.graph)?;
    let q = g.group().quotient(&i.moduli)?;
    let mut rows = Vec::new();
    let mut worst = 0f64;
    for &t in &i.times {
        for &p in &i.powers {
            let r = unfolding_check(&g, &q, t, p)?;
            worst = worst.max(r);
            rows.push(vec![t, p as f64, r]);
        }
    }
    out.checks.push(Check::at_most("unfolded kernel residual", worst, tol.residual_or(1e-10)));
    out.rows("unfolding.csv", &["t", "power", "residual"], &rows)
}

fn decay(i: &DecayInput, out: &mut Outcome) -> Run<()> {
    let g = graph(&i.graph)?;
    if let Some(&s) = i.sources.iter().find(|&&s| s >= g.vertex_count()) {
        return Err(RunError::Input(ghl::Error::InvalidInput(format!("source {s} is not a vertex"))));
    }
    let r = graph_decay_check(&g, &i.sources, &i.times)?;
    out.checks.extend([
        Check::at_most("in-regime pairs above the Gaussian envelope", r.violations as f64, 0.0),
        Check::at_most("tails that are not super-exponential", r.non_superexponential as f64, 0.0),
    ]);
    out.csv("decay.csv", |w| r.write_csv(w))
}

fn relative_decay(i: &RelativeDecayInput, tol: &Tolerances, out: &mut Outcome) -> Run<()> {
    let (g1, g2, cert) = match (&i.graphs, &i.certificate, &i.path_cycle) {
        (Some([a, b]), Some(cert), _) => (graph(a)?, graph(b)?, cert.clone()),
        (_, _, Some(pc)) => (
            VoltageGraph::path(pc.path)?,
            VoltageGraph::cycle(pc.cycle)?,
            path_cycle_certificate(pc.path, pc.cycle, pc.radius),
        ),
        _ => unreachable!("validated config"),
    };
    let r = relative_decay_check(&g1, &g2, &cert, i.time)?;
    out.checks.extend([
        Check::at_most("on-diagonal kernel difference at the center", r.difference, tol.difference_or(1e-6)),
        Check::holds("difference within the relative bound", r.pass()),
    ]);
    out.json("relative_decay.json", &r)
}

fn random_finite(rng: &mut ChaCha8Rng, m: u32, n: usize) -> Run<EquivariantOperator> {
    let g = DeckGroup::cyclic(m)?;
    let support = g.elements()?;
    Ok(EquivariantOperator::random_selfadjoint(g, FiberDims::ungraded(n), &support, 1.0, rng)?)
}

fn duhamel(i: &DuhamelInput, seed: u64, out: &mut Outcome) -> Run<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t0 = match &i.operator {
        Some(s) => operator(s)?,
        None => random_finite(&mut rng, 3, 3)?,
    };
    let v = match &i.direction {
        Some(s) => operator(s)?,
        None => {
            let g = t0.group().clone();
            let support = g.elements()?;
            EquivariantOperator::random_selfadjoint(g, t0.fiber(), &support, 1.0, &mut rng)?
        }
    };
    if !t0.group().is_finite() {
        return Err(RunError::Input(ghl::Error::Unsupported("Duhamel checks need a finite group".into())));
    }
    t0.require_selfadjoint(1e-10)?;
    v.require_selfadjoint(1e-10)?;
    let family = |u: f64| t0.add(&v.scale(c(u, 0.0)));
    let r = duhamel_check(family, i.u0, i.time, i.step)?;
    out.checks.push(Check::at_most("Duhamel residual", r.residual, r.bound));
    out.json("duhamel.json", &r)
}

fn gapped(rng: &mut ChaCha8Rng, gap: f64) -> Run<EquivariantOperator> {
    let m = rng.random_range(1..=8u32);
    let n = rng.random_range(2..=(500 / m as usize).min(40));
    let t = random_finite(rng, m, n)?;
    Ok(apply_function(&t, |x| if x >= 0.0 { x + gap } else { x - gap }, &FloquetGrid::default_for(0))?)
}

fn eta_oracle(i: &EtaOracleInput, tol: &Tolerances, seed: u64, out: &mut Outcome) -> Run<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ops: Vec<EquivariantOperator> = if i.operators.is_empty() {
        (0..i.count).map(|_| gapped(&mut rng, i.gap)).collect::<Run<_>>()?
    } else {
        i.operators.iter().map(operator).collect::<Run<_>>()?
    };
    let mut rows = Vec::new();
    let (mut worst, mut worst_kappa, mut regularized) = (0f64, 0f64, false);
    for (n, t) in ops.iter().enumerate() {
        let grid = match i.nodes {
            Some(k) => FloquetGrid::new(k)?,
            None => FloquetGrid::default_for(t.group().free_rank()),
        };
        let r = eta_heat_integral(t, &grid, &EtaConfig::default())?;
        let oracle = eta_spectral(t, &grid)?;
        let res = (r.value - oracle).abs();
        let kres = r.kappa_residual().unwrap_or(f64::NAN);
        worst = worst.max(res);
        worst_kappa = worst_kappa.max(kres);
        regularized |= r.regularized;
        rows.push(vec![n as f64, r.value, oracle, res, r.kappa, kres]);
    }
    out.checks.extend([
        Check::at_most("|η heat integral − sign sum|", worst, tol.eta_or(1e-6)),
        Check::at_most("change under κ → 2κ", worst_kappa, 1e-7),
        Check::holds("no regularized limit needed", !regularized),
    ]);
    out.rows(
        "eta_oracle.csv",
        &["instance", "eta", "oracle", "residual", "kappa", "kappa_residual"],
        &rows,
    )
}

fn eta_jump(i: &EtaJumpInput, tol: &Tolerances, seed: u64, out: &mut Outcome) -> Run<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(EquivariantOperator, f64, f64)> = if i.cases.is_empty() {
        (0..i.count)
            .map(|_| {
                let m = rng.random_range(1..=6u32);
                let n = rng.random_range(2..=12usize);
                let d = random_finite(&mut rng, m, n)?;
                let eps = rng.random_range(0.1..1.0);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let u = rng.random_range(0.01..0.99) * eps * sign;
                Ok((d, eps, u))
            })
            .collect::<Run<_>>()?
    } else {
        i.cases
            .iter()
            .map(|c| Ok((operator(&c.operator)?, c.eps, c.u)))
            .collect::<Run<_>>()?
    };
    let mut rows = Vec::new();
    let (mut jump, mut sym) = (0f64, 0f64);
    for (n, (d, eps, u)) in cases.iter().enumerate() {
        let grid = FloquetGrid::default_for(d.group().free_rank());
        let r = eta_jump_check(d, *eps, *u, &grid)?;
        jump = jump.max(r.jump_residual);
        sym = sym.max(r.symmetrization_residual);
        rows.push(vec![
            n as f64,
            *eps,
            *u,
            r.eta_q0,
            r.eta_qu,
            r.eta_q_minus_u,
            r.projection_trace,
            r.jump_residual,
            r.symmetrization_residual,
        ]);
    }
    out.checks.extend([
        Check::at_most("eta jump residual", jump, tol.residual_or(1e-8)),
        Check::at_most("symmetrization residual", sym, 1e-10),
    ]);
    out.rows(
        "eta_jump.csv",
        &["case", "eps", "u", "eta_q0", "eta_qu", "eta_q_minus_u", "projection_trace", "jump_residual", "symmetrization_residual"],
        &rows,
    )
}

fn eta_tower(i: &EtaTowerInput, tol: &Tolerances, out: &mut Outcome) -> Run<()> {
    let a = match (&i.operator, &i.circle) {
        (Some(s), _) => operator(s)?,
        (_, Some(cs)) => circle_operator(cs.sites, cs.flux, &cs.potential, CircleMode::Periodic)?,
        _ => unreachable!("validated config"),
    };
    let tw = tower(a.group(), &i.orders)?;
    let cfg = TowerConfig {
        heat_time: i.heat_time,
        target_nodes: i.target_nodes,
    };
    let r = tower_eta_convergence(&tw, &a, &cfg)?;
    let slack = r.target_error + 1e-12;
    out.checks.extend([
        Check::at_most("|η_i/d_i − η_Γ| at the top level", r.top_gap(), tol.eta_or(1e-3)),
        Check::holds("monotone approach over the top levels", r.monotone_tail(i.monotone_tail, slack)),
        Check::holds("kernel ratios bounded by b_Γ", r.kernel_bound_holds(1e-9)),
    ]);
    out.csv("eta_tower.csv", |w| r.write_csv(w))
}

const SWEEP_HEADER: [&str; 8] = ["eps", "u", "R", "ind", "eta", "h_plus", "h_minus", "g"];

/// `(ind, η, I)` of `D_{ε,u}`.
fn index_row(base: &ModifiedOperator, u: f64) -> Run<(f64, f64, f64)> {
    let m = base.with_u(u);
    let ind = modified_index(&m)?;
    let eta = tail_eta(&m);
    Ok((ind, eta, ind - 0.5 * eta))
}

struct Sweep {
    /// Extended counts, `L²`-index and per-`u` indices, in sweep order.
    ints: Vec<f64>,
    rows: Vec<Vec<f64>>,
    relation: bool,
    closed_form: bool,
}

fn kernel_sweep(model: &CylinderModel, eps_list: &[f64], fractions: &[f64], threshold: f64) -> Run<Sweep> {
    let mut ints = Vec::new();
    let mut rows = Vec::new();
    let (mut relation, mut closed_form) = (true, true);
    for &eps in eps_list {
        let base = spectral_modification(model, eps, 0.0)?;
        let ext = extended_kernel_report(&base, &default_delta_grid(&base))?;
        if ext.min_gap_ratio < threshold {
            return Err(ambiguous(ext.min_gap_ratio, threshold));
        }
        let us: Vec<f64> = fractions.iter().map(|f| f * eps).collect();
        let rel = l2_index_report(&base, &us)?;
        relation &= rel.holds();
        if model.interior().is_none() {
            let o = model_solution_counts(&boundary_spectrum(&base), eps, 0.0);
            closed_form &= (ext.l2_plus, ext.ext_plus, ext.l2_minus, ext.ext_minus)
                == (o.l2_plus, o.ext_plus, o.l2_minus, o.ext_minus);
        }
        ints.extend([ext.l2_plus, ext.ext_plus, ext.l2_minus, ext.ext_minus, rel.l2_index]);
        let smallest = us.iter().copied().fold(f64::INFINITY, f64::min);
        let (_, _, i_min) = index_row(&base, smallest)?;
        for &u in &us {
            let (ind, eta, i_u) = index_row(&base, u)?;
            ints.push(ind);
            rows.push(vec![eps, u, model.length(), ind, eta, ext.h_plus, ext.h_minus, i_u - i_min]);
        }
    }
    Ok(Sweep {
        ints,
        rows,
        relation,
        closed_form,
    })
}

fn cylinder_kernels(i: &CylinderKernelsInput, tol: &Tolerances, out: &mut Outcome) -> Run<()> {
    let model = cylinder(&i.model)?;
    let threshold = tol.rank_gap_or(RANK_GAP);
    let sweep = kernel_sweep(&model, &i.eps, &i.u_fractions, threshold)?;
    out.checks.push(Check::holds("L²-index from shifted kernels", sweep.relation));
    if model.interior().is_none() {
        out.checks.push(Check::holds("extended counts match the closed form", sweep.closed_form));
    }
    if i.refine {
        let longer = model.with_length(2.0 * model.length())?;
        let finer = model.with_step(0.5 * model.step())?;
        let a = kernel_sweep(&longer, &i.eps, &i.u_fractions, threshold)?;
        let b = kernel_sweep(&finer, &i.eps, &i.u_fractions, threshold)?;
        out.checks.push(Check::holds("integers unchanged under R → 2R", a.ints == sweep.ints));
        out.checks.push(Check::holds("integers unchanged under h → h/2", b.ints == sweep.ints));
    }
    out.rows("cylinder_kernels.csv", &SWEEP_HEADER, &sweep.rows)
}

fn cylinder_aps(i: &CylinderApsInput, out: &mut Outcome) -> Run<()> {
    let model = cylinder(&i.model)?;
    let variant = match &i.variant_boundary {
        Some(s) => Some(model.with_boundary(operator(s)?)?),
        None => None,
    };
    let us: Vec<f64> = i.u_fractions.iter().map(|f| f * i.eps).collect();
    let r = aps_consistency(&model, i.eps, &us, variant.as_ref())?;
    out.checks.extend([
        Check::holds("symmetrization identity", r.symmetrization_holds()),
        Check::holds("|g(u)| nonincreasing as u decreases", r.g_monotone()),
    ]);
    if let Some(ok) = r.interior_invariant() {
        out.checks.push(Check::holds("I* unchanged by the boundary variant", ok));
    }
    let rows: Vec<Vec<f64>> = r
        .points
        .iter()
        .map(|p| vec![r.eps, p.u, model.length(), p.index, p.eta, r.h_plus, r.h_minus, p.g])
        .collect();
    out.rows("cylinder_aps.csv", &SWEEP_HEADER, &rows)?;
    out.json("cylinder_aps.json", &r)
}

fn spectrum_bottom(i: &SpectrumBottomInput, tol: &Tolerances, out: &mut Outcome) -> Run<()> {
    let model = cylinder(&i.model)?;
    let swap = match &i.swap {
        Some(s) => Some(cylinder(s)?),
        None => None,
    };
    let m = spectral_modification(&model, i.eps, i.u)?;
    let r = spectrum_bottom_check(&m, &i.lengths, (i.window[0], i.window[1]), swap.as_ref())?;
    let growth = r.window_growth().iter().map(|g| (g - 1.0).abs()).fold(0.0, f64::max);
    out.checks.extend([
        Check::holds("kernel and sub-bottom counts stable in R", r.below_stable()),
        Check::at_most("window count growth deviation from linear", growth, tol.residual_or(0.2)),
    ]);
    if swap.is_some() {
        out.checks.push(Check::holds("interior swap moves counts by at most its rank", r.swap_within_rank()));
    }
    let rows: Vec<Vec<f64>> = r
        .levels
        .iter()
        .map(|l| vec![l.length, l.kernel, l.below, l.window_count])
        .collect();
    out.rows("spectrum_bottom.csv", &["R", "kernel", "below", "window_count"], &rows)?;
    out.json("spectrum_bottom.json", &r)
}
