//! End-to-end acceptance run: one line per criterion, nonzero exit on any
//! failure.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ghl::clifford::{graded_trace, spinor_representation, volume_element, CliffordElement};
use ghl::covering::{circle_operator, graph_dirac, tower, CircleMode, VoltageGraph};
use ghl::cylinder::{
    aps_consistency, cylinder_decay_check, epsilon_sweep, extended_kernel_report, l2_index_report,
    model_solution_counts, modified_index, spectral_modification, weighted_kernel, CylinderModel, Interior,
};
use ghl::eta::{eta_heat_integral, eta_jump_check, eta_spectral, tower_eta_convergence, EtaConfig, TowerConfig};
use ghl::gamma::{apply_function, DeckGroup, EquivariantOperator, FiberDims, FloquetGrid, GroupElement};
use ghl::heat::{
    atiyah_check, graph_decay_check, path_cycle_certificate, relative_decay_check, supertrace_curve, unfolding_check,
};
use ghl::linalg::real_diagonal;
use ghl::Error;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Criterion = fn() -> Result<Outcome, Error>;

fn random_corpus(seed: u64) -> Vec<VoltageGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..50)
        .map(|_| {
            let m = rng.random_range(1..=8);
            let v = rng.random_range(2..=40);
            let e = rng.random_range(v - 1..=80.min(2 * v));
            VoltageGraph::random_connected(DeckGroup::cyclic(m).unwrap(), v, e, &mut rng).unwrap()
        })
        .collect()
}

fn clifford() -> Result<Outcome, Error> {
    let mut worst_other: f64 = 0.0;
    let mut exact = true;
    for l in 1..=4usize {
        let even = 2 * l;
        let rep = spinor_representation(even)?;
        let tau = volume_element(even)?;
        let s = graded_trace(&tau).str;
        let s_rep = rep.supertrace(&tau)?;
        exact &= s == Complex64::new(2f64.powi(l as i32), 0.0);
        exact &= (s_rep - s).norm() < 1e-14;
        let odd = 2 * l - 1;
        let one = CliffordElement::one(odd)?;
        let t = graded_trace(&one);
        let half = Complex64::new(2f64.powi(l as i32 - 1), 0.0);
        exact &= t.tr_plus == Some(half) && t.tr_minus == Some(half);
        let rep_odd = spinor_representation(odd)?;
        if let Some((p, m)) = rep_odd.chiral_traces(&one)? {
            exact &= (p - half).norm() < 1e-14 && (m - half).norm() < 1e-14;
        }
        for mask in 1..(1u16 << even) - 1 {
            let x = CliffordElement::from_masks(even, [(mask, Complex64::new(1.0, 0.0))])?;
            worst_other = worst_other.max(graded_trace(&x).str.norm());
            worst_other = worst_other.max(rep.supertrace(&x)?.norm());
        }
        for mask in 1..(1u16 << odd) - 1 {
            let x = CliffordElement::from_masks(odd, [(mask, Complex64::new(1.0, 0.0))])?;
            let t = graded_trace(&x);
            worst_other = worst_other.max(t.tr_plus.unwrap().norm()).max(t.tr_minus.unwrap().norm());
            if let Some((p, m)) = rep_odd.chiral_traces(&x)? {
                worst_other = worst_other.max(p.norm()).max(m.norm());
            }
        }
    }
    Ok(outcome(
        exact && worst_other < 1e-14,
        format!("top traces exact: {exact}, largest other trace {worst_other:.1e}"),
    ))
}

fn mckean_singer() -> Result<Outcome, Error> {
    let grid = FloquetGrid::default_for(0);
    let mut worst: f64 = 0.0;
    let mut spread: f64 = 0.0;
    for g in random_corpus(11) {
        let d = graph_dirac(&g)?;
        let curve = supertrace_curve(&d, &[0.1, 1.0, 10.0], &grid)?;
        let chi = d.base_index() as f64;
        for v in &curve.values {
            worst = worst.max((v - Complex64::new(chi, 0.0)).norm());
        }
        spread = spread.max(curve.spread());
    }
    Ok(outcome(
        worst <= 1e-9 && spread <= 1e-9,
        format!("max |str − χ| {worst:.1e}, max spread {spread:.1e}"),
    ))
}

fn atiyah() -> Result<Outcome, Error> {
    let (mut equal, mut ambiguous, mut mismatched) = (0, 0, 0);
    let mut min_gap = f64::INFINITY;
    for g in random_corpus(11) {
        let q = g.group().quotient(&[])?;
        match atiyah_check(&g, &q) {
            Ok(r) => {
                min_gap = min_gap.min(r.min_gap_ratio);
                if r.equal && r.multiplicative {
                    equal += 1;
                } else {
                    mismatched += 1;
                }
            }
            Err(e @ Error::AmbiguousRank { .. }) => {
                ambiguous += 1;
                eprintln!("  ambiguous instance reported: {e}");
            }
            Err(e) => return Err(e),
        }
    }
    Ok(outcome(
        mismatched == 0 && ambiguous == 0 && min_gap >= 1e3,
        format!("{equal} equal, {mismatched} mismatched, {ambiguous} ambiguous, min rank gap {min_gap:.1e}"),
    ))
}

fn unfolding() -> Result<Outcome, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let z = DeckGroup::free_abelian(1);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for _ in 0..4 {
        let v = rng.random_range(2..=6);
        let e = rng.random_range(v..=2 * v);
        let g = VoltageGraph::random_connected(z.clone(), v, e, &mut rng)?;
        for d in [2u32, 4, 8, 16] {
            let q = z.quotient(&[d])?;
            for power in [0, 1] {
                for t in [0.5, 2.0] {
                    worst = worst.max(unfolding_check(&g, &q, t, power)?);
                    cases += 1;
                }
            }
        }
    }
    Ok(outcome(worst < 1e-10, format!("{cases} cases, max residual {worst:.1e}")))
}

/// Random selfadjoint operator over `Z/m` pushed away from zero by
/// `λ ↦ λ + 0.1 sgn(λ)`.
fn gapped_instance(rng: &mut ChaCha8Rng) -> Result<EquivariantOperator, Error> {
    let m = rng.random_range(1..=8);
    let n = rng.random_range(2..=500 / m).min(40);
    let g = DeckGroup::cyclic(m as u32)?;
    let support = g.elements()?;
    let t = EquivariantOperator::random_selfadjoint(g, FiberDims::ungraded(n), &support, 1.0, rng)?;
    apply_function(&t, |x| if x >= 0.0 { x + 0.1 } else { x - 0.1 }, &FloquetGrid::default_for(0))
}

fn eta_oracle() -> Result<Outcome, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = FloquetGrid::default_for(0);
    let (mut worst, mut worst_kappa, mut min_gap) = (0f64, 0f64, f64::INFINITY);
    for _ in 0..100 {
        let t = gapped_instance(&mut rng)?;
        let r = eta_heat_integral(&t, &grid, &EtaConfig::default())?;
        let oracle = eta_spectral(&t, &grid)?;
        worst = worst.max((r.value - oracle).abs());
        worst_kappa = worst_kappa.max(r.kappa_residual().unwrap_or(f64::INFINITY));
        min_gap = min_gap.min(1.0 / r.kappa.sqrt());
    }
    Ok(outcome(
        worst <= 1e-6 && worst_kappa <= 1e-7 && min_gap >= 0.05,
        format!("max |η − sign sum| {worst:.1e}, max 2κ change {worst_kappa:.1e}, min gap {min_gap:.3}"),
    ))
}

fn eta_jump() -> Result<Outcome, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let grid = FloquetGrid::default_for(0);
    let (mut jump, mut sym) = (0f64, 0f64);
    for _ in 0..100 {
        let m = rng.random_range(1..=6);
        let n = rng.random_range(2..=12);
        let g = DeckGroup::cyclic(m)?;
        let support = g.elements()?;
        let d = EquivariantOperator::random_selfadjoint(g, FiberDims::ungraded(n), &support, 1.0, &mut rng)?;
        let eps = rng.random_range(0.1..1.0);
        let u = rng.random_range(0.01..0.99) * eps * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let r = eta_jump_check(&d, eps, u, &grid)?;
        jump = jump.max(r.jump_residual);
        sym = sym.max(r.symmetrization_residual);
    }
    Ok(outcome(
        jump <= 1e-8 && sym <= 1e-10,
        format!("max jump residual {jump:.1e}, max symmetrization residual {sym:.1e}"),
    ))
}

fn eta_tower() -> Result<Outcome, Error> {
    let z = DeckGroup::free_abelian(1);
    let a = circle_operator(3, 0.3, &[1.4, 1.6, -1.5], CircleMode::Periodic)?;
    let orders: Vec<u32> = (1..=8).map(|i| 1 << i).collect();
    let tw = tower(&z, &orders)?;
    let r = tower_eta_convergence(&tw, &a, &TowerConfig::default())?;
    let slack = r.target_error + 1e-12;
    Ok(outcome(
        r.target_nodes >= 4096 && r.top_gap() <= 1e-3 && r.monotone_tail(3, slack) && r.kernel_bound_holds(1e-9),
        format!(
            "target η_Γ = {:.6} at {} nodes, top gap {:.1e}, monotone tail {}, b_Γ = {:.3}",
            r.target,
            r.target_nodes,
            r.top_gap(),
            r.monotone_tail(3, slack),
            r.b_gamma + 0.0
        ),
    ))
}

fn diagonal_boundary(values: &[f64]) -> EquivariantOperator {
    EquivariantOperator::new(
        DeckGroup::trivial(),
        FiberDims::ungraded(values.len()),
        [(GroupElement(vec![]), real_diagonal(values))],
    )
    .unwrap()
}

fn heat_decay() -> Result<Outcome, Error> {
    let path = VoltageGraph::path(60)?;
    let g = graph_decay_check(&path, &[0, 15, 30], &[1.0, 3.0, 10.0])?;
    let cyl = CylinderModel::new(diagonal_boundary(&[-0.3, 0.2]), None, 40.0, 1.0)?;
    let m = spectral_modification(&cyl, 0.0, 0.0)?;
    let gaps: Vec<usize> = (0..=30).collect();
    let c = cylinder_decay_check(&m, 5, &gaps, &[1.0, 3.0, 10.0])?;
    Ok(outcome(
        g.pass() && c.pass(),
        format!(
            "path: {} violations, {} non-superexponential; cylinder: {} violations, {} non-superexponential",
            g.violations, g.non_superexponential, c.violations, c.non_superexponential
        ),
    ))
}

fn relative_decay() -> Result<Outcome, Error> {
    let (n, m) = (41, 60);
    let cert = path_cycle_certificate(n, m, 10);
    let r = relative_decay_check(&VoltageGraph::path(n)?, &VoltageGraph::cycle(m)?, &cert, 3.0)?;
    Ok(outcome(
        r.difference < 1e-6 && r.pass(),
        format!("center difference {:.1e}, bound {:.1e}", r.difference, r.bound),
    ))
}

fn cylinder_integers(length: f64, step: f64) -> Result<(Vec<f64>, bool), Error> {
    let values = [-2.0, -0.5, 0.5, 2.0];
    let spectrum: Vec<(f64, f64)> = values.iter().map(|&v| (v, 1.0)).collect();
    let model = CylinderModel::new(diagonal_boundary(&values), None, length, step)?;
    let mut ints = Vec::new();
    let mut agree = true;
    for eps in [0.3, 1.0, 1.5] {
        let base = spectral_modification(&model, eps, 0.0)?;
        let ext = extended_kernel_report(&base, &ghl::cylinder::default_delta_grid(&base))?;
        let oracle = model_solution_counts(&spectrum, eps, 0.0);
        agree &= (ext.l2_plus, ext.ext_plus, ext.l2_minus, ext.ext_minus)
            == (oracle.l2_plus, oracle.ext_plus, oracle.l2_minus, oracle.ext_minus);
        ints.extend([ext.l2_plus, ext.ext_plus, ext.l2_minus, ext.ext_minus]);
        for frac in [0.5, 0.25, -0.25] {
            let u = frac * eps;
            let k = base.with_u(u).kernel_dims(0.0)?;
            let c = model_solution_counts(&spectrum, eps, u);
            agree &= (k.plus, k.minus) == (c.l2_plus, c.l2_minus);
            let w = weighted_kernel(&base, u)?;
            let up = model_solution_counts(&spectrum, eps, u);
            let down = model_solution_counts(&spectrum, eps, -u);
            agree &= (w.plus, w.minus) == (up.l2_plus, down.l2_minus);
            ints.extend([k.plus, k.minus, w.plus, w.minus, modified_index(&base.with_u(u))?]);
        }
        let rel = l2_index_report(&base, &ghl::cylinder::default_u_grid(eps))?;
        agree &= rel.holds();
        ints.push(rel.l2_index);
    }
    Ok((ints, agree))
}

fn cylinder_kernels() -> Result<Outcome, Error> {
    let (reference, agree) = cylinder_integers(10.0, 0.2)?;
    let mut stable = true;
    let mut all_agree = agree;
    for (length, step) in [(20.0, 0.2), (10.0, 0.1), (20.0, 0.1)] {
        let (ints, agree) = cylinder_integers(length, step)?;
        stable &= ints == reference;
        all_agree &= agree;
    }
    Ok(outcome(
        all_agree && stable,
        format!("closed-form agreement {all_agree}, stable under R→2R and h→h/2 {stable}"),
    ))
}

fn aps() -> Result<Outcome, Error> {
    let eps = 0.5;
    let us: Vec<f64> = [0.4, 0.2, 0.1].iter().map(|f| f * eps).collect();
    let pure = CylinderModel::new(diagonal_boundary(&[-1.5, -0.2, 0.2, 1.5]), None, 10.0, 0.2)?;
    let p = aps_consistency(&pure, eps, &us, None)?;
    let tree = Interior {
        graph: VoltageGraph::plain(DeckGroup::trivial(), 4, &[(0, 1), (1, 2), (2, 3)])?,
        gluing: vec![0, 2, 3],
    };
    let glued = CylinderModel::new(diagonal_boundary(&[-1.0, 0.1, 1.2]), Some(tree.clone()), 10.0, 0.2)?;
    let variant = CylinderModel::new(diagonal_boundary(&[-1.7, 0.1, 0.9]), Some(tree), 10.0, 0.2)?;
    let g = aps_consistency(&glued, eps, &us, Some(&variant))?;
    let pass = p.symmetrization_holds()
        && p.i_integer_valued()
        && g.symmetrization_holds()
        && g.g_monotone()
        && g.interior_invariant() == Some(true);
    Ok(outcome(
        pass,
        format!(
            "pure symmetrization {}, glued |g| nonincreasing {}, I* = {} vs variant {:?}",
            p.symmetrization_holds(),
            g.g_monotone(),
            g.i_star,
            g.variant_i_star
        ),
    ))
}

fn epsilon_limits() -> Result<Outcome, Error> {
    let tree = Interior {
        graph: VoltageGraph::plain(DeckGroup::trivial(), 3, &[(0, 1), (0, 2)])?,
        gluing: vec![1, 2, 0],
    };
    let glued = CylinderModel::new(diagonal_boundary(&[-0.8, 0.0, 0.6]), Some(tree), 10.0, 0.2)?;
    let pure = CylinderModel::new(diagonal_boundary(&[-0.9, 0.0, 0.0, 0.5]), None, 10.0, 0.2)?;
    let a = epsilon_sweep(&glued, &[0.4, 0.2, 0.1])?;
    let b = epsilon_sweep(&pure, &[0.4, 0.2, 0.1])?;
    Ok(outcome(
        a.stable() && b.stable(),
        format!(
            "glued (L²-ind {}, h+ {}, h− {}) stable {}; pure stable {}",
            a.points[0].l2_index,
            a.points[0].h_plus,
            a.points[0].h_minus,
            a.stable(),
            b.stable()
        ),
    ))
}

fn main() {
    let criteria: [(&str, Criterion, u64); 12] = [
        ("Clifford graded traces", clifford, 1),
        ("McKean-Singer supertrace", mckean_singer, 60),
        ("Atiyah index equality", atiyah, 60),
        ("Unfolding of lifted kernels", unfolding, 30),
        ("Eta heat integral vs sign sum", eta_oracle, 120),
        ("Eta jump under modification", eta_jump, 60),
        ("Eta along a tower", eta_tower, 180),
        ("Gaussian heat decay", heat_decay, 60),
        ("Relative heat decay", relative_decay, 30),
        ("Cylinder kernel counts", cylinder_kernels, 120),
        ("APS consistency", aps, 180),
        ("Epsilon limits", epsilon_limits, 60),
    ];
    let mut failures = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*limit);
        let (pass, detail) = match result {
            Ok(o) => (o.pass && in_time, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<32} {}  [{:.2}s / {}s] {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit,
            detail
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
