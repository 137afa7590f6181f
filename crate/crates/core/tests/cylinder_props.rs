use proptest::prelude::*;

use ghl::cylinder::{
    aps_consistency, cylinder_from_json, cylinder_to_json, default_delta_grid, extended_kernel_report,
    kernel_containment_residual, model_solution_counts, product_operator, spectral_modification, weighted_kernel,
    CylinderModel, Interior,
};
use ghl::covering::VoltageGraph;
use ghl::gamma::{DeckGroup, EquivariantOperator, FiberDims, GroupElement};
use ghl::linalg::{hermitian_residual, max_abs, real_diagonal};

fn diagonal(values: &[f64]) -> EquivariantOperator {
    EquivariantOperator::new(
        DeckGroup::trivial(),
        FiberDims::ungraded(values.len()),
        [(GroupElement(vec![]), real_diagonal(values))],
    )
    .unwrap()
}

/// `ε` and a boundary spectrum kept at least 0.1 away from `±ε`.
fn eps_and_spectrum() -> impl Strategy<Value = (f64, Vec<f64>)> {
    (0.3f64..1.0).prop_flat_map(|eps| {
        let value = prop_oneof![
            (0.0f64..1.0).prop_map(move |s| s * (eps - 0.1)),
            (0.0f64..1.0).prop_map(move |s| eps + 0.1 + s * (1.9 - eps)),
        ];
        let signed = (value, any::<bool>()).prop_map(|(v, neg)| if neg { -v } else { v });
        (Just(eps), proptest::collection::vec(signed, 1..5))
    })
}

fn pairs(values: &[f64]) -> Vec<(f64, f64)> {
    values.iter().map(|&v| (v, 1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn counts_swap_under_reflection((eps, values) in eps_and_spectrum(), frac in -0.9f64..0.9) {
        let u = frac * eps;
        let a = model_solution_counts(&pairs(&values), eps, u);
        let negated: Vec<f64> = values.iter().map(|v| -v).collect();
        let b = model_solution_counts(&pairs(&negated), eps, -u);
        prop_assert_eq!((a.l2_plus, a.ext_plus, a.h_plus), (b.l2_minus, b.ext_minus, b.h_minus));
        prop_assert_eq!((a.l2_minus, a.ext_minus, a.h_minus), (b.l2_plus, b.ext_plus, b.h_plus));
        prop_assert!(a.ext_plus >= a.l2_plus && a.ext_minus >= a.l2_minus);
        prop_assert!(a.h_plus >= 0.0 && a.h_minus >= 0.0);
    }

    #[test]
    fn weighted_kernels_are_shifted_kernels((eps, values) in eps_and_spectrum(), frac in prop_oneof![Just(0.5), Just(0.25), Just(0.125)], negative in any::<bool>()) {
        let model = CylinderModel::new(diagonal(&values), None, 10.0, 0.2).unwrap();
        let base = spectral_modification(&model, eps, 0.0).unwrap();
        let u = frac * eps * if negative { -1.0 } else { 1.0 };
        let w = weighted_kernel(&base, u).unwrap();
        let plus = base.with_u(u).kernel_dims(0.0).unwrap();
        let minus = base.with_u(-u).kernel_dims(0.0).unwrap();
        prop_assert_eq!(w.plus, plus.plus);
        prop_assert_eq!(w.minus, minus.minus);
        let oracle = model_solution_counts(&pairs(&values), eps, u);
        prop_assert_eq!(plus.plus, oracle.l2_plus);
    }

    #[test]
    fn modified_operator_is_selfadjoint((eps, values) in eps_and_spectrum(), frac in -0.9f64..0.9) {
        let model = CylinderModel::new(diagonal(&values), None, 4.0, 0.2).unwrap();
        let d = spectral_modification(&model, eps, frac * eps).unwrap();
        prop_assert!(hermitian_residual(&d.dirac_matrix(0, 0.0, true)) < 1e-10);
        let unmodified = product_operator(&model).unwrap();
        let zero = d.with_params(0.0, 0.0);
        prop_assert_eq!(max_abs(&(unmodified.plus_matrix(0, 0.0, false) - zero.plus_matrix(0, 0.0, false))), 0.0);
    }

    #[test]
    fn modification_shrinks_kernels((eps, values) in eps_and_spectrum()) {
        let model = CylinderModel::new(diagonal(&values), None, 6.0, 0.2).unwrap();
        let d = spectral_modification(&model, eps, 0.0).unwrap();
        prop_assert!(kernel_containment_residual(&d).unwrap() < 1e-8);
    }

    #[test]
    fn pure_symmetrization_is_exact((eps, values) in eps_and_spectrum()) {
        let model = CylinderModel::new(diagonal(&values), None, 8.0, 0.2).unwrap();
        let us: Vec<f64> = [0.4, 0.2, 0.1].iter().map(|f| f * eps).collect();
        let r = aps_consistency(&model, eps, &us, None).unwrap();
        prop_assert!(r.symmetrization_holds());
        // Each tail mode lands in the plus or the minus kernel according to
        // the sign of its tail value, so the index is the tail eta.
        for p in &r.points {
            prop_assert_eq!(p.index, p.eta);
            prop_assert!((p.i_u - 0.5 * p.eta).abs() < 1e-12);
        }
    }

    #[test]
    fn cylinder_json_round_trip((_eps, values) in eps_and_spectrum(), glued in any::<bool>(), length in 4usize..12) {
        let interior = glued.then(|| Interior {
            graph: VoltageGraph::path(values.len() + 1).unwrap(),
            gluing: (0..values.len()).rev().collect(),
        });
        let model = CylinderModel::new(diagonal(&values), interior, length as f64, 0.25).unwrap();
        let back = cylinder_from_json(&cylinder_to_json(&model).unwrap()).unwrap();
        prop_assert_eq!(cylinder_to_json(&back).unwrap(), cylinder_to_json(&model).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn extended_counts_survive_refinement((eps, values) in eps_and_spectrum()) {
        let counts = |length: f64, step: f64| {
            let model = CylinderModel::new(diagonal(&values), None, length, step).unwrap();
            let base = spectral_modification(&model, eps, 0.0).unwrap();
            let r = extended_kernel_report(&base, &default_delta_grid(&base)).unwrap();
            (r.l2_plus, r.ext_plus, r.l2_minus, r.ext_minus)
        };
        let reference = counts(6.0, 0.2);
        prop_assert_eq!(counts(12.0, 0.2), reference);
        prop_assert_eq!(counts(6.0, 0.1), reference);
        let o = model_solution_counts(&pairs(&values), eps, 0.0);
        prop_assert_eq!(reference, (o.l2_plus, o.ext_plus, o.l2_minus, o.ext_minus));
    }
}
