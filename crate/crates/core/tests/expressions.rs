use cocontact::expressions::{eval, eval_with_grad, Params};
use cocontact::{parse, PhasePoint};
use proptest::prelude::*;

/// Random source text over `t, q1, q2, p1, p2, z` and the parameter `a`,
/// built only from operations that are smooth everywhere.
fn smooth_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("t".to_string()),
        Just("q1".to_string()),
        Just("q2".to_string()),
        Just("p1".to_string()),
        Just("p2".to_string()),
        Just("z".to_string()),
        Just("a".to_string()),
        (-5.0f64..5.0).prop_map(|c| format!("{c:.3}")),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| format!("{l} + {r}")),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| format!("({l}) - ({r})")),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| format!("({l})*({r})")),
            inner.clone().prop_map(|e| format!("sin({e})")),
            inner.clone().prop_map(|e| format!("cos({e})")),
            inner.clone().prop_map(|e| format!("exp(sin({e}))")),
            inner.clone().prop_map(|e| format!("sqrt(1 + ({e})^2)")),
            inner.clone().prop_map(|e| format!("({e})^3")),
            inner.clone().prop_map(|e| format!("-({e})")),
            inner.prop_map(|e| format!("1/(2 + cos({e}))")),
        ]
    })
}

fn point() -> impl Strategy<Value = PhasePoint> {
    prop::collection::vec(-2.0f64..2.0, 6).prop_map(|v| PhasePoint::from_slice(&v).unwrap())
}

fn params() -> Params {
    [("a".to_string(), 0.75)].into()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn unparse_round_trip(src in smooth_source(), x in point()) {
        let e = parse(&src, 2).unwrap();
        let printed = e.to_string();
        let again = parse(&printed, 2).unwrap();
        prop_assert_eq!(&again, &e);
        prop_assert_eq!(again.to_string(), printed);
        let (u, v) = (eval(&e, &x, &params()).unwrap(), eval(&again, &x, &params()).unwrap());
        prop_assert_eq!(u.to_bits(), v.to_bits());
    }

    #[test]
    fn dual_value_is_bit_identical(src in smooth_source(), x in point()) {
        let e = parse(&src, 2).unwrap();
        let v = eval(&e, &x, &params()).unwrap();
        let (w, _) = eval_with_grad(&e, &x, &params()).unwrap();
        prop_assert_eq!(v.to_bits(), w.to_bits());
    }

    #[test]
    fn dual_gradient_matches_central_differences(src in smooth_source(), x in point()) {
        let e = parse(&src, 2).unwrap();
        let (_, grad) = eval_with_grad(&e, &x, &params()).unwrap();
        let base = x.to_vec();
        for (k, g) in grad.to_vec().into_iter().enumerate() {
            let h = 1e-6;
            let mut plus = base.clone();
            plus[k] += h;
            let mut minus = base.clone();
            minus[k] -= h;
            let fp = eval(&e, &PhasePoint::from_slice(&plus).unwrap(), &params()).unwrap();
            let fm = eval(&e, &PhasePoint::from_slice(&minus).unwrap(), &params()).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let scale = g.abs().max(fp.abs()).max(1.0);
            prop_assert!((fd - g).abs() <= 1e-5 * scale, "slot {}: dual {} fd {} for {}", k, g, fd, src);
        }
    }
}

#[test]
fn precedence_examples() {
    let x = PhasePoint::new(0.0, vec![3.0], vec![0.0], 0.0).unwrap();
    let v = |s: &str| eval(&parse(s, 1).unwrap(), &x, &Params::new()).unwrap();
    assert_eq!(v("-q1^2"), -9.0);
    assert_eq!(v("2^3^2"), 512.0);
    assert_eq!(v("1 - 2 - 3"), -4.0);
    assert_eq!(v("12/3/2"), 2.0);
}

#[test]
fn errors_are_reported() {
    assert!(parse("q3", 2).is_err());
    assert!(parse("q1 +", 1).is_err());
    assert!(parse("foo(q1)", 1).is_err());
    let x = PhasePoint::new(0.0, vec![-1.0], vec![0.0], 0.0).unwrap();
    assert!(eval(&parse("log(q1)", 1).unwrap(), &x, &Params::new()).is_err());
    assert!(eval(&parse("b*q1", 1).unwrap(), &x, &Params::new()).is_err());
}
