use super::*;
use crate::classes::{check_class, Verdict};
use crate::parse::{parse_amplitude, parse_symbol};
use crate::symbolic::ClaimedClass;
use std::sync::Arc;

fn sym(s: &str) -> SymbolExpr {
    parse_symbol(s, Some(1)).unwrap()
}

fn amp(s: &str) -> AmplitudeExpr {
    parse_amplitude(s, Some(1)).unwrap()
}

fn th(p: i64, q: i64) -> Vec<Rat> {
    vec![rat(p, q)]
}

fn claim(mut a: SymbolExpr, w: &WeightFunction, m: f64) -> SymbolExpr {
    a.claimed = Some(ClaimedClass {
        m,
        rho: 1.0,
        n_eps: 0,
        weight: Arc::new(w.clone()),
    });
    a
}

fn cert_spec() -> SampleSpec {
    SampleSpec {
        half_width: 40.0,
        n_random: 400,
        eps_j_min: 1,
        eps_j_max: 4,
        ..SampleSpec::default()
    }
}

#[test]
fn theta_symbol_worked_values() {
    let b = theta_symbol(&amp("y1*xi1"), &th(0, 1), None).unwrap();
    assert!(b.exact);
    assert!(b.total().equals(&sym("x1*xi1 - i")));
    let b = theta_symbol(&amp("x1^3*xi1^2 + 2*x1"), &th(0, 1), None).unwrap();
    assert!(b.total().equals(&sym("x1^3*xi1^2 + 2*x1")));
    for t in [th(0, 1), th(1, 2), th(1, 1)] {
        assert!(theta_symbol(&amp("1"), &t, None).unwrap().total().equals(&sym("1")));
    }
}

#[test]
fn change_theta_worked_values() {
    let b0 = ThetaSymbol::from_symbol(&sym("x1*xi1"), th(0, 1));
    let b1 = change_theta(&b0, &th(1, 1), None).unwrap();
    assert!(b1.total().equals(&sym("x1*xi1 + i")));
    let direct = theta_symbol(&amp("x1*xi1"), &th(1, 1), None).unwrap();
    assert!(direct.total().equals(&b1.total()));
    let same = change_theta(&b0, &th(0, 1), None).unwrap();
    assert!(same.total().equals(&b0.total()));
    let b = ThetaSymbol::from_symbol(&sym("x1*xi1^2 + x1^2*xi1"), th(0, 1));
    let back = change_theta(&change_theta(&b, &th(1, 1), None).unwrap(), &th(0, 1), None).unwrap();
    assert_eq!(back.total().as_poly().unwrap(), b.total().as_poly().unwrap());
}

#[test]
fn compose_worked_values() {
    let s = compose(&sym("xi1"), &sym("x1"), None).unwrap();
    let total = s.terms.iter().fold(SymbolExpr::zero(1), |a, t| a.add(&t.0));
    assert!(total.equals(&sym("x1*xi1 - i")));
    let s = compose(&sym("1"), &sym("x1^2*xi1 + eps^-1"), None).unwrap();
    assert_eq!(s.terms.len(), 1);
    assert!(s.terms[0].0.equals(&sym("x1^2*xi1 + eps^-1")));
    assert_eq!(s.n_eps, 1);
    let s = compose(&sym("1"), &sym("1"), None).unwrap();
    assert!(s.terms[0].0.equals(&sym("1")));
    let s = compose(&sym("xi1^2"), &sym("x1^2"), None).unwrap();
    assert_eq!(s.terms.iter().map(|t| t.1).collect::<Vec<_>>(), vec![4.0, 2.0, 0.0]);
}

#[test]
fn certify_examples() {
    let jb = WeightFunction::japanese_bracket(1);
    for m in [1u32, 2, 4] {
        let a = claim(sym(&format!("x1^{m} + i*xi1^{m}")), &jb, m as f64);
        let c = certify_hypoelliptic(&a, &jb, m as f64, 1.0, &cert_spec()).unwrap();
        assert_eq!(c.verdict, HypoVerdict::Elliptic, "m = {m}: {c:?}");
    }
    let qh = WeightFunction::quasi_homogeneous(&[4, 2]).unwrap();
    let a = claim(sym("xi1^2 + i*x1^4"), &qh, 4.0);
    let c = certify_hypoelliptic(&a, &qh, 4.0, 1.0, &cert_spec()).unwrap();
    assert_eq!(c.verdict, HypoVerdict::Elliptic, "{c:?}");
    let a = claim(sym("xi1"), &jb, 1.0);
    let c = certify_hypoelliptic(&a, &jb, 1.0, 1.0, &cert_spec()).unwrap();
    match c.verdict {
        HypoVerdict::Fail { witness, .. } => assert_eq!(witness, vec![2.0, 0.0]),
        v => panic!("expected failure, got {v:?}"),
    }
    let a = sym("x1^2");
    assert!(certify_hypoelliptic(&a, &jb, 2.0, 1.0, &cert_spec()).is_err());
}

#[test]
fn perturbations() {
    let jb = WeightFunction::japanese_bracket(1);
    let a = claim(sym("x1^2 + i*xi1^2"), &jb, 2.0);
    let c = certify_hypoelliptic(&a, &jb, 2.0, 1.0, &cert_spec()).unwrap();
    let p = perturb_hypoelliptic(&a, &c, &sym("x1 + xi1"), 1.0, 0).unwrap();
    let c2 = certify_hypoelliptic(&p, &jb, 2.0, 2.0, &cert_spec()).unwrap();
    assert!(c2.passed(), "{c2:?}");
    assert!(perturb_hypoelliptic(&a, &c, &SymbolExpr::zero(1), 1.0, 0).unwrap().equals(&a));
    assert!(perturb_hypoelliptic(&a, &c, &sym("x1^2"), 2.0, 0).is_err());

    let qh = WeightFunction::quasi_homogeneous(&[4, 2]).unwrap();
    let a = claim(sym("xi1^2 + i*x1^4"), &qh, 4.0);
    let c = certify_hypoelliptic(&a, &qh, 4.0, 1.0, &cert_spec()).unwrap();
    let p = perturb_hypoelliptic(&a, &c, &sym("eps^-2*x1^2"), 2.0, 2).unwrap();
    assert!(p.equals(&sym("xi1^2 + i*x1^4 + x1^2")));
    let c2 = certify_hypoelliptic(&p, &qh, 4.0, 2.0, &cert_spec()).unwrap();
    assert!(c2.passed(), "{c2:?}");
}

fn harmonic_parametrix(k: u32) -> (Parametrix, WeightFunction) {
    let jb = WeightFunction::japanese_bracket(1);
    let a = claim(sym("1 + x1^2 + xi1^2"), &jb, 2.0);
    let c = certify_hypoelliptic(&a, &jb, 2.0, 1.0, &cert_spec()).unwrap();
    (parametrix(&a, &c, k).unwrap(), jb)
}

#[test]
fn parametrix_first_terms() {
    let (p, _) = harmonic_parametrix(2);
    assert_eq!(p.terms.len(), 3);
    let a = sym("1 + x1^2 + xi1^2").as_rational().unwrap();
    assert!(p.terms[0].outside_cutoff().equals(&a.recip().unwrap()));
    let expected = sym("-4*i*x1*xi1").as_rational().unwrap().mul(&a.powi(-3).unwrap());
    assert!(p.terms[1].outside_cutoff().equals(&expected));
    assert_eq!(p.terms[1].parts()[0].cutoff, Cutoff::radial(1.0, 2));
}

#[test]
fn constant_parametrix() {
    let jb = WeightFunction::japanese_bracket(1);
    let a = claim(sym("2"), &jb, 0.0);
    let c = certify_hypoelliptic(&a, &jb, 0.0, 1.0, &cert_spec()).unwrap();
    assert_eq!(c.verdict, HypoVerdict::Elliptic);
    let p = parametrix(&a, &c, 3).unwrap();
    assert!(p.terms[0].outside_cutoff().equals(&sym("1/2").as_rational().unwrap()));
    assert!(p.terms[1..].iter().all(|t| t.is_zero()));
    assert!(p.composed_residual.is_zero());
}

#[test]
fn residual_order_ladder() {
    for k in 0..=2 {
        let (p, w) = harmonic_parametrix(k);
        let s = p.residual_order(&w, &[rat(3, 5), rat(4, 5)], (3, 8), 2);
        let want = -2.0 - 2.0 * k as f64;
        assert!((s - want).abs() <= 0.3, "K = {k}: slope {s}");
    }
}

#[test]
fn right_parametrix_residual() {
    let jb = WeightFunction::japanese_bracket(1);
    let a = claim(sym("1 + x1^2 + xi1^2"), &jb, 2.0);
    let c = certify_hypoelliptic(&a, &jb, 2.0, 1.0, &cert_spec()).unwrap();
    let q = right_parametrix(&a, &c, 1).unwrap();
    let s = q.residual_order(&jb, &[rat(3, 5), rat(4, 5)], (3, 8), 2);
    assert!((s + 4.0).abs() <= 0.3, "slope {s}");
    // for this symbol both recursions give the same first correction
    let left = harmonic_parametrix(1).0;
    assert!(q.terms[1].outside_cutoff().equals(&left.terms[1].outside_cutoff()));
}

#[test]
fn parametrix_terms_and_inverse_property_pass_class_checks() {
    let (p, w) = harmonic_parametrix(2);
    let sp = SampleSpec {
        half_width: 20.0,
        n_random: 400,
        eps_j_min: 1,
        eps_j_max: 10,
        ..SampleSpec::default()
    };
    for (k, t) in p.terms.iter().enumerate() {
        let e = check_class(t, &w, -2.0 - 2.0 * k as f64, 1.0, 0, 2, &sp);
        assert_eq!(e.verdict, Verdict::Member, "p_{k}");
    }
    let a = sym("1 + x1^2 + xi1^2");
    for g in [[1u32, 0], [0, 1], [1, 1], [0, 2]] {
        let prod = p.terms[0].mul(&a.derivative_multi(&g));
        let e = check_class(&prod, &w, -(order(&g) as f64), 1.0, 0, 2, &sp);
        assert_eq!(e.verdict, Verdict::Member, "gamma = {g:?}");
    }
}

#[test]
fn failed_certificate_rejected() {
    let jb = WeightFunction::japanese_bracket(1);
    let a = claim(sym("xi1"), &jb, 1.0);
    let c = certify_hypoelliptic(&a, &jb, 1.0, 1.0, &cert_spec()).unwrap();
    assert!(matches!(parametrix(&a, &c, 1), Err(Error::Certificate(_))));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn arb_amplitude() -> impl Strategy<Value = String> {
        prop::collection::vec((-3i32..=3, 0u32..=2, 0u32..=2, 0u32..=2), 1..5).prop_map(|ts| {
            ts.iter()
                .filter(|(_, a, b, c)| a + b + c <= 4)
                .map(|(k, a, b, c)| format!("({k})*x1^{a}*y1^{b}*xi1^{c}"))
                .chain(std::iter::once("1".to_string()))
                .collect::<Vec<_>>()
                .join(" + ")
        })
    }

    fn thetas() -> Vec<Vec<Rat>> {
        vec![th(0, 1), th(1, 2), th(1, 1)]
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

        #[test]
        fn theta_change_matches_direct(src in arb_amplitude(), i in 0usize..3, j in 0usize..3) {
            let a = amp(&src);
            let (t1, t2) = (&thetas()[i], &thetas()[j]);
            let b1 = theta_symbol(&a, t1, None).unwrap();
            let b2 = theta_symbol(&a, t2, None).unwrap();
            let moved = change_theta(&b1, t2, None).unwrap();
            prop_assert!(moved.total().equals(&b2.total()));
            let back = change_theta(&moved, t1, None).unwrap();
            prop_assert!(back.total().equals(&b1.total()));
        }
    }
}
