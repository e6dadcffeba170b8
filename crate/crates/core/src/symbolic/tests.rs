use super::*;
use crate::coeff::{g_i, g_int, g_rat, GaussRat};
use crate::nets::NetExpr;
use crate::parse::parse_symbol;
use num_complex::{Complex, Complex64};
use num_rational::Rational64;
use proptest::prelude::*;

fn sym(s: &str) -> SymbolExpr {
    parse_symbol(s, Some(1)).unwrap()
}

#[test]
fn arithmetic_examples() {
    assert!(sym("x1*xi1").mul(&sym("x1*xi1")).equals(&sym("x1^2*xi1^2")));
    let a = sym("eps^-1*x1");
    assert!(a.add(&a).equals(&sym("2*eps^-1*x1")));
    let q = sym("1+x1^2+xi1^2").as_rational().unwrap();
    let r = q.mul(&q.recip().unwrap());
    assert!(r.equals(&RationalExpr::one(2)));
    assert!(r.is_polynomial());
}

#[test]
fn differentiation_examples() {
    assert!(sym("x1*xi1^2").derivative(1).equals(&sym("2*x1*xi1")));
    let d = sym("1/(1+x1^2+xi1^2)").derivative(1);
    assert!(d.equals(&sym("-2*xi1/(1+x1^2+xi1^2)^2")));
    assert_eq!(d.as_rational().unwrap().denominator()[0].1, 2);
    assert!(sym("x1").big_d_x(&[1]).equals(&SymbolExpr::constant(1, NetExpr::constant(-g_i()))));
}

#[test]
fn affine_substitution_examples() {
    // variables (x, y, ξ) for n = 1
    let y = Poly::var(3, 1);
    let xi = Poly::var(3, 2);
    let x = Poly::var(3, 0);
    // yξ with y := x
    let yxi = y.mul(&xi);
    let r = substitute_affine(
        &yxi,
        3,
        &[
            (vec![(0, g_int(1))], g_int(0)),
            (vec![(0, g_int(1))], g_int(0)),
            (vec![(2, g_int(1))], g_int(0)),
        ],
    );
    assert_eq!(r, x.mul(&xi));
    // y with y := x − (1−θ)y at θ = 1
    let theta = g_int(1);
    let r = substitute_affine(
        &y,
        3,
        &[
            (vec![(0, g_int(1))], g_int(0)),
            (vec![(0, g_int(1)), (1, -(g_int(1) - theta))], g_int(0)),
            (vec![(2, g_int(1))], g_int(0)),
        ],
    );
    assert_eq!(r, x);
    // y² with y := x + y, then y := 0
    let y2 = y.mul(&y);
    let shifted = substitute_affine(
        &y2,
        3,
        &[
            (vec![(0, g_int(1))], g_int(0)),
            (vec![(0, g_int(1)), (1, g_int(1))], g_int(0)),
            (vec![(2, g_int(1))], g_int(0)),
        ],
    );
    let r = substitute_affine(
        &shifted,
        3,
        &[
            (vec![(0, g_int(1))], g_int(0)),
            (vec![], g_int(0)),
            (vec![(2, g_int(1))], g_int(0)),
        ],
    );
    assert_eq!(r, x.mul(&x));
}

#[test]
fn eval_examples() {
    assert_eq!(sym("1+x1^2+xi1^2").eval(&[1.0, 1.0], 0.3).unwrap(), Complex64::new(3.0, 0.0));
    assert!((sym("eps^-2*x1*xi1").eval(&[2.0, 3.0], 0.25).unwrap().re - 96.0).abs() < 1e-12);
    let p0 = SymbolExpr::with_cutoff(
        Cutoff::radial(1.0, 1),
        1,
        sym("1/(1+x1^2+xi1^2)").as_rational().unwrap(),
    );
    assert!((p0.eval(&[10.0, 0.0], 0.5).unwrap().re - 1.0 / 101.0).abs() < 1e-15);
    assert_eq!(p0.eval(&[0.5, 0.0], 0.5).unwrap(), Complex64::new(0.0, 0.0));
    assert!(p0.eval(&[1.0], 0.5).is_err());
}

#[test]
fn cutoff_zero_masks_pole() {
    // body has a pole at the origin; inside the cutoff region the value is 0
    let p = SymbolExpr::with_cutoff(Cutoff::radial(1.0, 1), 1, sym("1/(x1^2+xi1^2)").as_rational().unwrap());
    assert_eq!(p.eval(&[0.0, 0.0], 0.5).unwrap(), Complex64::new(0.0, 0.0));
}

#[test]
fn exact_evaluation_matches_float() {
    let s = sym("(3+i)*x1^3*xi1 - eps^-1*xi1^2 + 1/(1+x1^2)");
    let z = [g_rat(3, 5), g_rat(-7, 4)];
    let exact = s.eval_exact_outside(&z).unwrap().eval(0.125);
    let float = s.eval(&[0.6, -1.75], 0.125).unwrap();
    assert!((exact - float).norm() < 1e-12 * float.norm());
}

#[test]
fn recip_rejects_mixed_eps_numerator() {
    let s = sym("1 + eps*x1^2").as_rational().unwrap();
    assert!(s.recip().is_err());
    // a common ε-monomial is fine
    let s = sym("eps^2*(1 + x1^2)").as_rational().unwrap();
    let r = s.recip().unwrap();
    let v = r.at_eps(0.5).eval(&[1.0, 0.0]);
    assert!((v.re - 2.0).abs() < 1e-14);
}

#[test]
fn jet_includes_cutoff_derivatives() {
    let p = SymbolExpr::with_cutoff(Cutoff::radial(1.0, 2), 1, sym("x1*xi1 + 1").as_rational().unwrap());
    let c = p.compile(0.5);
    let sp = crate::jet::JetSpace::new(2, 2);
    let z = [1.1, 0.7];
    let j = c.eval_jet(&sp, &z);
    let h = 1e-5;
    let fd = (c.eval(&[z[0], z[1] + h]) - c.eval(&[z[0], z[1] - h])) / (2.0 * h);
    assert!((j.derivative(&[0, 1]) - fd).norm() < 1e-6);
    let fdxx = (c.eval(&[z[0] + h, z[1]]) - 2.0 * c.eval(&z) + c.eval(&[z[0] - h, z[1]])) / (h * h);
    assert!((j.derivative(&[2, 0]) - fdxx).norm() < 1e-3);
}

fn arb_gauss() -> impl Strategy<Value = GaussRat> {
    (-5i64..=5, -5i64..=5, 1i64..=3).prop_map(|(a, b, d)| Complex::new(crate::coeff::rat(a, d), crate::coeff::rat(b, d)))
}

fn arb_poly(nvars: usize, max_deg: u32) -> impl Strategy<Value = Poly> {
    prop::collection::vec(
        (prop::collection::vec(0..=max_deg, nvars), arb_gauss(), -2i64..=2),
        0..5,
    )
    .prop_map(move |terms| {
        let mut p = Poly::zero(nvars);
        for (mut e, c, k) in terms {
            let total: u32 = e.iter().sum();
            if total > max_deg {
                let last = e.len() - 1;
                e[last] = e[last].saturating_sub(total - max_deg);
                for v in e.iter_mut() {
                    *v = (*v).min(max_deg);
                }
            }
            p.add_term(e, NetExpr::term(c, Rational64::from_integer(k), 0));
        }
        p
    })
}

fn arb_rational(nvars: usize) -> impl Strategy<Value = RationalExpr> {
    (arb_poly(nvars, 3), prop::collection::vec(1i64..=4, nvars), 1u32..=2).prop_map(move |(num, w, e)| {
        // denominator 1 + Σ w_k z_k², positive everywhere
        let mut q = Poly::one(nvars);
        for (k, wk) in w.iter().enumerate() {
            q = q.add(&Poly::var(nvars, k).pow(2).scale_gauss(&g_int(*wk)));
        }
        RationalExpr::new(num, vec![(q, e)]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_laws(a in arb_poly(4, 4), b in arb_poly(4, 4), c in arb_poly(4, 4)) {
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
    }

    #[test]
    fn mixed_partials_commute(r in arb_rational(2)) {
        let a = r.derivative(0).derivative(1);
        let b = r.derivative(1).derivative(0);
        prop_assert!(a.equals(&b));
    }

    #[test]
    fn rational_ring_laws(a in arb_rational(2), b in arb_rational(2)) {
        let s = a.add(&b).sub(&b);
        prop_assert!(s.equals(&a));
        let d = a.mul(&b).derivative(1);
        let leibniz = a.derivative(1).mul(&b).add(&a.mul(&b.derivative(1)));
        prop_assert!(d.equals(&leibniz));
    }

    #[test]
    fn derivative_matches_finite_difference(r in arb_rational(2), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let eps = 0.5;
        let f = r.at_eps(eps);
        for var in 0..2 {
            let d = r.derivative(var).at_eps(eps).eval(&[x, y]);
            let h = 1e-5;
            let mut p = [x, y];
            let mut m = [x, y];
            p[var] += h;
            m[var] -= h;
            let fd = (f.eval(&p) - f.eval(&m)) / (2.0 * h);
            let scale = d.norm().max(f.eval(&[x, y]).norm()).max(1.0);
            prop_assert!((d - fd).norm() <= 1e-6 * scale, "var {} d={} fd={}", var, d, fd);
        }
    }

    #[test]
    fn exact_division_recovers_factor(a in arb_poly(2, 3), b in arb_poly(2, 3)) {
        prop_assume!(!b.is_zero() && b.is_eps_free());
        let q = a.mul(&b).try_div(&b);
        prop_assert_eq!(q, Some(a));
    }
}
