use num_complex::Complex64;
use proptest::prelude::*;

use ghl::clifford::{graded_trace, spinor_representation, CliffordElement};
use ghl::linalg::{max_abs, trace};

fn element(k: usize) -> impl Strategy<Value = CliffordElement> {
    let size = 1usize << k;
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), size).prop_map(move |coeffs| {
        CliffordElement::from_masks(
            k,
            coeffs
                .into_iter()
                .enumerate()
                .map(|(m, (re, im))| (m as u16, Complex64::new(re, im))),
        )
        .unwrap()
    })
}

fn k_and_element() -> impl Strategy<Value = (usize, CliffordElement)> {
    (1usize..=6).prop_flat_map(|k| (Just(k), element(k)))
}

#[test]
fn generators_anticommute() {
    for k in 1..=8 {
        let rep = spinor_representation(k).unwrap();
        assert!(rep.relation_residual() < 1e-14, "k = {k}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn graded_trace_matches_representation((k, x) in k_and_element()) {
        let rep = spinor_representation(k).unwrap();
        let t = graded_trace(&x);
        let m = rep.represent(&x).unwrap();
        if k % 2 == 0 {
            let s = trace(&(&rep.grading * &m));
            prop_assert!((t.str - s).norm() < 1e-12);
            prop_assert!(t.tr_plus.is_none() && t.tr_minus.is_none());
        } else {
            let (p, q) = rep.chiral_traces(&x).unwrap().unwrap();
            prop_assert!((t.tr_plus.unwrap() - p).norm() < 1e-12);
            prop_assert!((t.tr_minus.unwrap() - q).norm() < 1e-12);
            prop_assert!((p + q - trace(&m)).norm() < 1e-12);
        }
    }

    #[test]
    fn graded_trace_is_linear(
        (k, x, y) in (1usize..=6).prop_flat_map(|k| (Just(k), element(k), element(k))),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let za = Complex64::new(a, 0.5);
        let zb = Complex64::new(b, -0.25);
        let lhs = graded_trace(&x.scale(za).add(&y.scale(zb)).unwrap());
        let (tx, ty) = (graded_trace(&x), graded_trace(&y));
        prop_assert!((lhs.str - (tx.str * za + ty.str * zb)).norm() < 1e-12);
        if k % 2 == 1 {
            let p = tx.tr_plus.unwrap() * za + ty.tr_plus.unwrap() * zb;
            prop_assert!((lhs.tr_plus.unwrap() - p).norm() < 1e-12);
        }
    }

    #[test]
    fn multiplication_matches_matrices((k, x) in k_and_element()) {
        let rep = spinor_representation(k).unwrap();
        let sq = x.multiply(&x).unwrap();
        let m = rep.represent(&x).unwrap();
        prop_assert!(max_abs(&(rep.represent(&sq).unwrap() - &m * &m)) < 1e-11);
    }
}

#[test]
fn chiral_traces_from_supertrace_with_last_generator() {
    for l in 1..=4 {
        let odd = 2 * l - 1;
        let even = 2 * l;
        let rep = spinor_representation(even).unwrap();
        let last = CliffordElement::generator(even, even).unwrap();
        let one = Complex64::new(1.0, 0.0);
        for mask in 0..(1u16 << odd) {
            let x = CliffordElement::from_masks(odd, [(mask, one)]).unwrap();
            let lifted = CliffordElement::from_masks(even, [(mask, one)]).unwrap();
            let t = graded_trace(&x);
            let (p, m) = (t.tr_plus.unwrap(), t.tr_minus.unwrap());
            let s = rep.supertrace(&last.multiply(&lifted).unwrap()).unwrap();
            assert!((p - m + s).norm() < 1e-12, "l = {l}, mask = {mask}");
            // The scalar has equal chiral traces and no supertrace partner.
            if mask != 0 {
                assert!((p + 0.5 * s).norm() < 1e-12, "l = {l}, mask = {mask}");
                assert!((m - 0.5 * s).norm() < 1e-12, "l = {l}, mask = {mask}");
            }
        }
    }
}
