use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ghl::gamma::{
    compose_plus, gamma_index, operator_from_json, operator_to_json, spectral_measure, CayleyTable, DeckGroup,
    EquivariantOperator, FiberDims, FiniteFactor, FloquetGrid, GroupElement, IndexPolicy,
};
use ghl::linalg::{operator_norm, trace, CMatrix};
use ghl::Error;

fn finite_group(kind: u8, m: u32) -> DeckGroup {
    let s3 = FiniteFactor::Table(Arc::new(CayleyTable::symmetric3()));
    match kind % 3 {
        0 => DeckGroup::cyclic(m).unwrap(),
        1 => DeckGroup::new(0, vec![s3]).unwrap(),
        _ => DeckGroup::new(0, vec![FiniteFactor::Cyclic(m), s3]).unwrap(),
    }
}

fn random_element(g: &DeckGroup, rng: &mut ChaCha8Rng) -> GroupElement {
    let mut v: Vec<i64> = (0..g.free_rank()).map(|_| rng.random_range(-2..=2)).collect();
    v.extend(g.factors().iter().map(|f| rng.random_range(0..f.order() as i64)));
    GroupElement(v)
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_operator(g: &DeckGroup, n: usize, blocks: usize, rng: &mut ChaCha8Rng) -> EquivariantOperator {
    let pairs: Vec<_> = (0..blocks)
        .map(|_| (random_element(g, rng), random_matrix(n, n, rng)))
        .collect();
    EquivariantOperator::new(g.clone(), FiberDims::ungraded(n), pairs).unwrap()
}

fn random_odd(g: &DeckGroup, plus: usize, minus: usize, rng: &mut ChaCha8Rng) -> EquivariantOperator {
    let pairs: Vec<_> = (0..2)
        .map(|_| (random_element(g, rng), random_matrix(minus, plus, rng)))
        .collect();
    EquivariantOperator::odd_from_plus(g.clone(), FiberDims::new(plus, minus), pairs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn finite_trace_is_normalized_dense_trace(seed in any::<u64>(), kind in 0u8..3, m in 1u32..6, n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = finite_group(kind, m);
        let a = random_operator(&g, n, 3, &mut rng);
        let order = g.order().unwrap() as f64;
        let dense = trace(&a.dense().unwrap()) / order;
        prop_assert!((a.gamma_trace() - dense).norm() < 1e-11);
    }

    #[test]
    fn trace_is_tracial(seed in any::<u64>(), kind in 0u8..4, m in 1u32..6, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = if kind == 3 { DeckGroup::free_abelian(1) } else { finite_group(kind, m) };
        let a = random_operator(&g, n, 3, &mut rng);
        let b = random_operator(&g, n, 3, &mut rng);
        let ab = a.compose(&b).unwrap().gamma_trace();
        let ba = b.compose(&a).unwrap().gamma_trace();
        prop_assert!((ab - ba).norm() < 1e-10);
    }

    #[test]
    fn trace_bounded_by_norm_times_positive_trace(seed in any::<u64>(), kind in 0u8..3, m in 1u32..5, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = finite_group(kind, m);
        let a = random_operator(&g, n, 3, &mut rng);
        let c = random_operator(&g, n, 2, &mut rng);
        let b = c.adjoint().compose(&c).unwrap();
        let lhs = a.compose(&b).unwrap().gamma_trace().norm();
        let rhs = b.gamma_trace().re * operator_norm(&a.dense().unwrap());
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn adjoint_blocks_follow_inverse_rule(seed in any::<u64>(), kind in 0u8..4, m in 1u32..6, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = if kind == 3 { DeckGroup::new(1, vec![FiniteFactor::Cyclic(m)]).unwrap() } else { finite_group(kind, m) };
        let a = random_operator(&g, n, 4, &mut rng);
        let star = a.adjoint();
        prop_assert_eq!(star.blocks().len(), a.blocks().len());
        for (gamma, block) in a.blocks() {
            let image = star.block(&g.inverse(gamma)).unwrap();
            prop_assert_eq!(image, &block.adjoint());
        }
        let sa = a.add(&star).unwrap();
        prop_assert!(sa.selfadjoint_residual() < 1e-12);
    }

    #[test]
    fn index_is_additive_under_composition(
        seed in any::<u64>(),
        kind in 0u8..3,
        m in 1u32..4,
        dims in (1usize..4, 1usize..4, 1usize..4),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = finite_group(kind, m);
        let (p, q, r) = dims;
        let t = random_odd(&g, p, q, &mut rng);
        let s = random_odd(&g, q, r, &mut rng);
        let st = compose_plus(&s, &t).unwrap();
        let policy = IndexPolicy::for_rank(0);
        let reports = (gamma_index(&s, &policy), gamma_index(&t, &policy), gamma_index(&st, &policy));
        match reports {
            (Ok(is), Ok(it), Ok(ist)) => {
                prop_assert!((ist.index - is.index - it.index).abs() < 1e-9);
            }
            (a, b, c) => {
                for e in [a.err(), b.err(), c.err()].into_iter().flatten() {
                    prop_assert!(matches!(e, Error::AmbiguousRank { .. }), "{e}");
                }
            }
        }
    }

    #[test]
    fn finite_spectral_mass_is_fiber_dimension(seed in any::<u64>(), kind in 0u8..3, m in 1u32..6, n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = finite_group(kind, m);
        let support = [random_element(&g, &mut rng), random_element(&g, &mut rng)];
        let a = EquivariantOperator::random_selfadjoint(g, FiberDims::ungraded(n), &support, 1.0, &mut rng).unwrap();
        let mu = spectral_measure(&a, &FloquetGrid::default_for(0)).unwrap();
        prop_assert!((mu.total_mass() - n as f64).abs() < 1e-12);
    }

    #[test]
    fn floquet_mass_and_counting_shape(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DeckGroup::free_abelian(1);
        let support = [GroupElement(vec![0]), GroupElement(vec![1])];
        let a = EquivariantOperator::random_selfadjoint(g, FiberDims::ungraded(n), &support, 1.0, &mut rng).unwrap();
        let mu = spectral_measure(&a, &FloquetGrid::new(1024).unwrap()).unwrap();
        prop_assert!((mu.total_mass() - n as f64).abs() < 1e-8);
        // Constant between atoms, jumping by the atom weight at each atom.
        let mut last = 0.0;
        for (i, &(lambda, w)) in mu.atoms.iter().enumerate() {
            prop_assert!(w > 0.0);
            let before = if i == 0 { lambda - 1.0 } else { 0.5 * (mu.atoms[i - 1].0 + lambda) };
            prop_assert!((mu.counting(before) - last).abs() < 1e-12);
            let at = mu.counting(lambda);
            prop_assert!((at - last - w).abs() < 1e-12);
            last = at;
        }
    }

    #[test]
    fn quotient_is_a_surjective_homomorphism(seed in any::<u64>(), moduli in proptest::collection::vec(1u32..6, 1..3), m in 1u32..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DeckGroup::new(moduli.len(), vec![FiniteFactor::Cyclic(m)]).unwrap();
        let q = g.quotient(&moduli).unwrap();
        let target = q.target();
        for _ in 0..20 {
            let a = random_element(&g, &mut rng);
            let b = random_element(&g, &mut rng);
            prop_assert_eq!(q.apply(&g.multiply(&a, &b)), target.multiply(&q.apply(&a), &q.apply(&b)));
        }
        let expected = moduli.iter().map(|&x| x as usize).product::<usize>() * m as usize;
        prop_assert_eq!(q.index(), expected);
        // Every target element has a preimage with the same coordinates.
        for r in 0..expected {
            let t = GroupElement(target.torsion_at(r));
            prop_assert_eq!(q.apply(&t), t);
        }
    }

    #[test]
    fn operator_json_round_trip(seed in any::<u64>(), kind in 0u8..4, m in 1u32..5, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = if kind == 3 { DeckGroup::new(2, vec![FiniteFactor::Cyclic(m)]).unwrap() } else { finite_group(kind, m) };
        let a = random_operator(&g, n, 3, &mut rng);
        let back = operator_from_json(&operator_to_json(&a).unwrap()).unwrap();
        prop_assert_eq!(back, a);
    }
}

#[test]
fn non_group_tables_are_rejected() {
    // Not associative: a latin square without identity structure.
    let bad = vec![vec![0, 2, 1], vec![2, 1, 0], vec![1, 0, 2]];
    assert!(CayleyTable::new(bad).is_err());
    let missing_inverse = vec![vec![0, 1], vec![1, 1]];
    assert!(CayleyTable::new(missing_inverse).is_err());
    assert!(CayleyTable::new(vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]]).is_ok());
}
