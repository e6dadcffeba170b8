use super::*;
use crate::parse::{parse_amplitude, parse_symbol};

fn spec(l: f64) -> SampleSpec {
    SampleSpec {
        half_width: l,
        n_random: 600,
        ..SampleSpec::default()
    }
}

fn sym(s: &str) -> SymbolExpr {
    parse_symbol(s, Some(1)).unwrap()
}

fn jb() -> WeightFunction {
    WeightFunction::japanese_bracket(1)
}

#[test]
fn constant_symbol_is_member_with_unit_constants() {
    let e = check_class(&sym("1"), &jb(), 0.0, 1.0, 0, 3, &spec(10.0));
    assert_eq!(e.verdict, Verdict::Member);
    assert!(e.constants.iter().all(|c| c.c <= 1.0 + 1e-12));
    assert_eq!(e.constant(&[0, 0]), Some(1.0));
}

#[test]
fn eps_inverse_grows() {
    let a = sym("eps^-1*xi1");
    let e = check_class(&a, &jb(), 1.0, 1.0, 0, 3, &spec(10.0));
    assert_eq!(e.verdict, Verdict::NotMember);
    // the sup at z = (0, 1) on the finest ε is 2^20/√2
    let c0 = e.constant(&[0, 0]).unwrap();
    assert!(c0 >= 2f64.powi(20) / 2f64.sqrt() * (1.0 - 1e-12));
    assert_eq!(e.n_per_order[0], Some(NetClass::Moderate(1)));
    let e = check_class(&a, &jb(), 1.0, 1.0, 1, 3, &spec(10.0));
    assert_eq!(e.verdict, Verdict::Member);
}

#[test]
fn elliptic_example_orders() {
    let a = sym("x1^2 + i*xi1^2");
    assert_eq!(check_class(&a, &jb(), 2.0, 1.0, 0, 3, &spec(10.0)).verdict, Verdict::Member);
    assert_eq!(check_class(&a, &jb(), 1.0, 1.0, 0, 3, &spec(10.0)).verdict, Verdict::NotMember);
}

#[test]
fn inclusion_and_closure() {
    let a = sym("x1^2 + i*xi1^2 + eps^-1*x1");
    let b = sym("xi1 - 3");
    let w = jb();
    let s = spec(10.0);
    assert_eq!(check_class(&a, &w, 2.0, 1.0, 1, 3, &s).verdict, Verdict::Member);
    assert_eq!(check_class(&a, &w, 3.0, 0.5, 2, 3, &s).verdict, Verdict::Member);
    assert_eq!(check_class(&a.mul(&b), &w, 3.0, 1.0, 1, 3, &s).verdict, Verdict::Member);
    assert_eq!(check_class(&a.derivative(1), &w, 1.0, 1.0, 1, 3, &s).verdict, Verdict::Member);
}

#[test]
fn sine_coefficient_fails_every_order() {
    let a = FnSymbol::new(2, "sin(x)*xi", |g, z, _| {
        let (k, l) = (g[0], g[1]);
        let d = match k % 4 {
            0 => z[0].sin(),
            1 => z[0].cos(),
            2 => -z[0].sin(),
            _ => -z[0].cos(),
        };
        let v = match l {
            0 => d * z[1],
            1 => d,
            _ => 0.0,
        };
        Complex64::new(v, 0.0)
    });
    for m in 0..=6 {
        let e = check_class(&a, &jb(), m as f64, 1.0, 0, m + 2, &spec(10.0));
        assert_eq!(e.verdict, Verdict::NotMember, "m = {m}");
    }
}

#[test]
fn negligible_checks() {
    let w = jb();
    let s = spec(10.0);
    let a = sym("negl*x1^2*xi1");
    let r = check_negligible(&a, &w, 3.0, 1.0, 10, 2, &s);
    assert!(r.shortcut && r.verdict == Verdict::Member);
    let r = check_negligible_sampled(&a, &w, 3.0, 1.0, 10, 2, &s);
    assert_eq!(r.verdict, Verdict::Member);
    let r = check_negligible(&sym("eps^50*x1"), &w, 1.0, 1.0, 55, 2, &s);
    assert_eq!(r.verdict, Verdict::NotMember);
    assert_eq!(r.failed_at_q, Some(51));
    let r = check_negligible(&sym("0"), &w, 0.0, 1.0, 10, 2, &s);
    assert_eq!(r.verdict, Verdict::Member);
}

#[test]
fn smoothing_checks() {
    let a = sym("1/(1+x1^2+xi1^2)^20");
    assert_eq!(check_smoothing(&a, 4, 0, &spec(20.0)).verdict, Verdict::Member);
    assert_eq!(check_smoothing(&sym("xi1"), 4, 0, &spec(20.0)).verdict, Verdict::NotMember);
    let r = check_smoothing(&sym("negl*xi1^10"), 4, 0, &spec(20.0));
    assert!(r.shortcut && r.verdict == Verdict::Member);
}

#[test]
fn amplitude_checks() {
    let w = jb();
    let s = spec(10.0);
    let one = parse_amplitude("1", Some(1)).unwrap();
    let e = check_amplitude(&one, &w, 0.0, None, 1.0, 0, 2, &s);
    assert_eq!(e.verdict, Verdict::Member);
    assert_eq!(e.m_prime, Some(0.0));
    let a = parse_amplitude("y1*xi1", Some(1)).unwrap();
    let e = check_amplitude(&a, &w, 2.0, None, 1.0, 0, 2, &s);
    assert_eq!(e.verdict, Verdict::Member);
    assert_eq!(e.m_prime, Some(1.0));
    let b = sym("1 + x1^2 + xi1^2");
    let mixed =
        AmplitudeExpr::from_symbol_mixed(&b.as_rational().unwrap(), 1, &crate::coeff::g_rat(1, 2)).unwrap();
    let e = check_amplitude(&mixed, &w, 2.0, None, 1.0, 0, 2, &s);
    assert_eq!(e.verdict, Verdict::Member);
}

fn ladder(k: usize) -> AsymptoticSeries {
    let terms = (0..k)
        .map(|j| (sym(&format!("1/(1+x1^2+xi1^2)^{j}")), -2.0 * j as f64))
        .collect();
    AsymptoticSeries::new(terms, 1.0, 0)
}

#[test]
fn single_term_sum_saturates() {
    let w = jb();
    let s = ladder(1);
    let est = s.estimate_constants(&w, &spec(10.0));
    let sum = asymptotic_sum(&s, &w, &est).unwrap();
    let l0 = sum.lambdas[0];
    assert_eq!(l0, 0.5);
    for r in [2.0 / l0 + 0.1, 7.0, 30.0] {
        assert_eq!(sum.eval(&[r, 0.0], 0.5), Complex64::new(1.0, 0.0));
    }
    assert_eq!(sum.eval(&[0.5, 0.0], 0.5), Complex64::new(0.0, 0.0));
}

#[test]
fn missing_constants_rejected() {
    let w = jb();
    let s = ladder(3);
    let est = s.estimate_constants(&w, &spec(10.0));
    assert!(matches!(asymptotic_sum(&s, &w, &est[..2]), Err(Error::MissingConstants(_))));
}

#[test]
fn schedule_is_halving_and_residual_order_drops() {
    let w = jb();
    let s = ladder(3);
    let est = s.estimate_constants(&w, &spec(10.0));
    let sum = asymptotic_sum(&s, &w, &est).unwrap();
    for p in sum.lambdas.windows(2) {
        assert!(p[1] <= p[0] / 2.0);
    }
    let radii = crate::sampling::dyadic_radii(3.0, 8.0, 16);
    for r in 1..3 {
        let (slope, used) = sum.audit_residual(r, 0.5, &[0.6, 0.8], &radii);
        assert!(used.len() >= 4, "r = {r}: {used:?} {:?}", sum.lambdas);
        assert!(slope <= s.order_after(r) + 0.3, "r = {r}: slope {slope}");
    }
}

#[test]
fn two_schedules_differ_by_smoothing() {
    let w = jb();
    let s = ladder(3);
    let est = s.estimate_constants(&w, &spec(10.0));
    let a = asymptotic_sum(&s, &w, &est).unwrap();
    let halved: Vec<f64> = a.lambdas.iter().map(|l| l / 2.0).collect();
    let b = AsymptoticSum::with_schedule(&s, &w, halved).unwrap();
    let far = 8.0 / a.lambdas.last().unwrap();
    let d = SumDifference { a: &a, b: &b };
    let mut sp = spec(far);
    sp.eps_j_max = 4;
    sp.eps_j_min = 1;
    let r = check_smoothing(&d, 2, 0, &sp);
    assert_eq!(r.verdict, Verdict::Member, "{:?}", r.entries.iter().map(|e| e.drift).collect::<Vec<_>>());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn arb_symbol() -> impl Strategy<Value = (String, f64, i64)> {
        prop::collection::vec((-3i32..=3, 0u32..=2, 0u32..=2, 0i64..=2), 1..5).prop_map(|ts| {
            let mut deg = 0;
            let mut n = 0;
            let s: Vec<String> = ts
                .iter()
                .map(|(c, a, b, e)| {
                    deg = deg.max(a + b);
                    n = n.max(*e);
                    format!("({c})*eps^-{e}*x1^{a}*xi1^{b}")
                })
                .collect();
            (format!("1 + {}", s.join(" + ")), deg as f64, n)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

        #[test]
        fn product_and_derivative_closure((sa, ma, na) in arb_symbol(), (sb, mb, nb) in arb_symbol()) {
            let (a, b) = (sym(&sa), sym(&sb));
            let w = jb();
            let s = spec(10.0);
            prop_assert_eq!(check_class(&a, &w, ma, 1.0, na, 2, &s).verdict, Verdict::Member);
            prop_assert_eq!(check_class(&a.mul(&b), &w, ma + mb, 1.0, na + nb, 2, &s).verdict, Verdict::Member);
            prop_assert_eq!(check_class(&a.derivative(1), &w, ma - 1.0, 1.0, na, 2, &s).verdict, Verdict::Member);
            prop_assert_eq!(check_class(&a, &w, ma + 1.0, 0.5, na + 1, 2, &s).verdict, Verdict::Member);
        }
    }
}
