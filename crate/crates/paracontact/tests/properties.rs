//! Property tests for the expression layer and the tensor algebra.

use paracontact::expr::Expression;
use paracontact::geometry::DConvention;
use paracontact::identities::{w0_residual, wn1b_residual};
use paracontact::tensor::{invert_metric, TensorValue, Variance};
use proptest::prelude::*;

/// Small expression grammar over (x, y, z) that stays inside every function
/// domain on [-2, 2]^3.
fn arb_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("z".to_string()),
        (-4i32..=4).prop_map(|n| format!("{}", n as f64 * 0.5)),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("tanh({a})")),
            inner.clone().prop_map(|a| format!("exp(({a}) / 8)")),
            inner.clone().prop_map(|a| format!("(({a})^2)")),
            inner.clone().prop_map(|a| format!("(1 + (({a})^2))")),
        ]
    })
}

fn coords3() -> Vec<String> {
    vec!["x".into(), "y".into(), "z".into()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// Parse -> pretty-print -> re-parse evaluates identically.
    #[test]
    fn expression_round_trip(src in arb_expr(), px in -2.0..2.0f64, py in -2.0..2.0f64, pz in -2.0..2.0f64) {
        let coords = coords3();
        let e = Expression::parse(&src, &coords).unwrap();
        let printed = e.to_string();
        let back = Expression::parse(&printed, &coords).unwrap();
        let p = [px, py, pz];
        prop_assert_eq!(e.eval(&p).unwrap(), back.eval(&p).unwrap());
    }

    /// Exact gradients agree with central finite differences.
    #[test]
    fn gradient_matches_finite_differences(src in arb_expr(), px in -1.5..1.5f64, py in -1.5..1.5f64, pz in -1.5..1.5f64) {
        let coords = coords3();
        let e = Expression::parse(&src, &coords).unwrap();
        let p = [px, py, pz];
        let jet = e.eval_jet2(&p).unwrap();
        let h = 1e-5;
        for k in 0..3 {
            let mut up = p;
            let mut dn = p;
            up[k] += h;
            dn[k] -= h;
            let fd = (e.eval(&up).unwrap() - e.eval(&dn).unwrap()) / (2.0 * h);
            // FD truncation scales with the third derivative; the bound here
            // tolerates the grammar's exp/sin compositions
            let tol = 1e-6 * (1.0 + jet.grad[k].abs()) + 1e-7 * (1.0 + jet.value.abs());
            prop_assert!((jet.grad[k] - fd).abs() <= tol.max(1e-5),
                "grad[{k}] = {} vs fd {} for `{src}`", jet.grad[k], fd);
        }
    }

    /// Hessians are structurally symmetric.
    #[test]
    fn hessian_symmetry(src in arb_expr(), px in -1.5..1.5f64, py in -1.5..1.5f64, pz in -1.5..1.5f64) {
        let coords = coords3();
        let e = Expression::parse(&src, &coords).unwrap();
        let jet = e.eval_jet2(&[px, py, pz]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(jet.hess(i, j), jet.hess(j, i));
            }
        }
    }

    /// Lowering then raising an index is the identity.
    #[test]
    fn raise_lower_round_trip(
        diag in prop::collection::vec(0.5..2.0f64, 3),
        off in prop::collection::vec(-0.3..0.3f64, 3),
        data in prop::collection::vec(-2.0..2.0f64, 9),
        slot in 0usize..2,
    ) {
        let mut g = TensorValue::zeros(3, &[Variance::Lower, Variance::Lower]);
        for i in 0..3 {
            g.set(&[i, i], diag[i]);
        }
        g.set(&[0, 1], off[0]); g.set(&[1, 0], off[0]);
        g.set(&[0, 2], off[1]); g.set(&[2, 0], off[1]);
        g.set(&[1, 2], off[2]); g.set(&[2, 1], off[2]);
        let g_inv = invert_metric(&g).unwrap();
        let mut k = 0;
        let t = TensorValue::from_fn(3, &[Variance::Upper, Variance::Lower], |_| {
            k += 1;
            data[k - 1]
        });
        let back = t
            .raise_lower(slot, &g, &g_inv)
            .raise_lower(slot, &g, &g_inv);
        prop_assert!(t.sub(&back).max_norm() < 1e-12);
    }

    /// Identity residuals are multilinear: scaling one argument scales the
    /// unnormalized residual by the same factor.
    #[test]
    fn residual_multilinearity(c in 0.25..4.0f64, which in 0usize..3) {
        let s = paracontact::examples::load_builtin("kenmotsu-warped").unwrap();
        let at = s.at_point(&[0.4, -0.7, 0.3], DConvention::Half).unwrap();
        let mut args = [
            vec![0.3, 0.8, -0.5],
            vec![1.1, -0.4, 0.2],
            vec![-0.2, 0.6, 1.0],
        ];
        let (r1, _) = w0_residual(&at, &args[0], &args[1], &args[2]);
        let (q1, _) = wn1b_residual(&at, &args[0], &args[1], &args[2]);
        for v in args[which].iter_mut() {
            *v *= c;
        }
        let (r2, _) = w0_residual(&at, &args[0], &args[1], &args[2]);
        let (q2, _) = wn1b_residual(&at, &args[0], &args[1], &args[2]);
        prop_assert!((r2 - c * r1).abs() <= 1e-9 * (1.0 + c * r1.abs()));
        prop_assert!((q2 - c * q1).abs() <= 1e-9 * (1.0 + c * q1.abs()));
    }
}
