use super::*;
use crate::calculus::{certify_hypoelliptic, compose, theta_symbol};
use crate::classes::AsymptoticSeries;
use crate::coeff::rat;
use crate::nets::Mollifier;
use crate::parse::{parse_amplitude, parse_symbol};
use crate::sampling::SampleSpec;
use crate::symbolic::{ClaimedClass, SymbolExpr};
use crate::weights::WeightFunction;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn sym(s: &str) -> SymbolExpr {
    parse_symbol(s, Some(1)).unwrap()
}

fn gauss(eps: f64) -> GridFunction {
    GridFunction::from_fn(1, 12.0, 256, eps, |x| c((-0.5 * x[0] * x[0]).exp())).unwrap()
}

fn phi() -> Mollifier {
    Mollifier::default()
}

fn total(s: &AsymptoticSeries) -> SymbolExpr {
    s.terms.iter().fold(SymbolExpr::zero(1), |a, t| a.add(&t.0))
}

#[test]
fn grid_layout() {
    let g = gauss(0.5);
    assert_eq!(g.point(0), vec![-12.0]);
    assert_eq!(g.point(128), vec![0.0]);
    assert!(GridFunction::from_fn(1, 12.0, 100, 0.5, |_| c(0.0)).is_err());
    assert!(GridFunction::from_fn(2, 12.0, 128, 0.5, |_| c(0.0)).is_err());
    let d = cf_transform(&g, &phi(), Direction::Forward).unwrap();
    assert_eq!(d.point(128), vec![0.0]);
    assert!((d.step() - PI / 12.0).abs() < 1e-15);
}

#[test]
fn gaussian_transform() {
    let eps = 2f64.powi(-6);
    let f = cf_transform(&gauss(eps), &phi(), Direction::Forward).unwrap();
    assert!(f.plateau_truncated);
    let err = (0..f.len())
        .map(|p| {
            let xi = f.point(p)[0];
            (f.samples[p] - c((2.0 * PI).sqrt() * (-0.5 * xi * xi).exp())).norm()
        })
        .fold(0.0, f64::max);
    assert!(err <= 1e-6, "{err}");
}

#[test]
fn round_trip() {
    let u = gauss(2f64.powi(-6)).map(|x, v| v * Complex64::new(1.0 + x[0], 0.5 * x[0] * x[0]));
    let f = cf_transform(&u, &phi(), Direction::Forward).unwrap();
    let back = cf_transform(&f, &phi(), Direction::Inverse).unwrap();
    assert!(back.max_abs_diff(&u).unwrap() <= 1e-5);
    assert!(cf_transform(&u, &phi(), Direction::Inverse).is_err());
}

#[test]
fn constant_transform_matches_dense_quadrature() {
    let eps = 0.25;
    let one = GridFunction::from_fn(1, 12.0, 256, eps, |_| c(1.0)).unwrap();
    let f = cf_transform(&one, &phi(), Direction::Forward).unwrap();
    assert!(!f.plateau_truncated);
    // 4x finer trapezoid of ∫ e^{−ixξ} φ̂_ε(x) dx
    let m = 1024;
    let h = 24.0 / m as f64;
    for p in (0..f.len()).step_by(7) {
        let xi = f.point(p)[0];
        let dense: Complex64 = (0..m)
            .map(|k| {
                let x = -12.0 + k as f64 * h;
                Complex64::from_polar(phi().fourier_eps(&[x], eps), -x * xi)
            })
            .sum::<Complex64>()
            * h;
        assert!((dense - f.samples[p]).norm() <= 1e-6, "ξ = {xi}: {}", (dense - f.samples[p]).norm());
    }
    let mass: Complex64 = f.samples.iter().sum::<Complex64>() * f.step();
    assert!((mass - c(2.0 * PI)).norm() <= 1e-9);
}

#[test]
fn unit_symbol_multiplies_by_mollifier() {
    let u = gauss(0.25);
    let out = apply_operator(&sym("1"), &u, &phi(), Variant::A).unwrap();
    let want = u.map(|x, v| v * phi().fourier_eps(x, 0.25));
    assert!(out.max_abs_diff(&want).unwrap() <= 1e-12);
    let u = gauss(2f64.powi(-6));
    let out = apply_operator(&sym("1"), &u, &phi(), Variant::A).unwrap();
    assert!(out.max_abs_diff(&u).unwrap() <= 1e-6);
}

#[test]
fn xi_is_the_derivative() {
    let u = gauss(2f64.powi(-5));
    let out = apply_operator(&sym("xi1"), &u, &phi(), Variant::A).unwrap();
    let want = u.map(|x, v| v * Complex64::new(0.0, x[0]));
    assert!(out.max_abs_diff(&want).unwrap() <= 1e-5);
}

#[test]
fn x_dependent_symbols_compose() {
    let u = gauss(2f64.powi(-5)).map(|x, v| v * Complex64::new(1.0, x[0]));
    let lhs = apply_operator(&sym("x1*xi1 - i"), &u, &phi(), Variant::A).unwrap();
    let xu = u.map(|x, v| v * x[0]);
    let rhs = apply_operator(&sym("xi1"), &xu, &phi(), Variant::A).unwrap();
    assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-5);
    let b = theta_symbol(&parse_amplitude("y1*xi1", Some(1)).unwrap(), &[rat(1, 2)], None).unwrap();
    let via_theta = apply_theta_symbol(&b, &u, &phi(), Variant::A).unwrap();
    assert!(via_theta.max_abs_diff(&rhs).unwrap() <= 1e-5);
}

#[test]
fn two_dimensional_derivative() {
    let u = GridFunction::from_fn(2, 8.0, 64, 2f64.powi(-5), |x| c((-0.5 * (x[0] * x[0] + x[1] * x[1])).exp())).unwrap();
    let a = parse_symbol("xi1 + 2*xi2", Some(2)).unwrap();
    let out = apply_operator(&a, &u, &phi(), Variant::A).unwrap();
    let want = u.map(|x, v| v * Complex64::new(0.0, x[0] + 2.0 * x[1]));
    assert!(out.max_abs_diff(&want).unwrap() <= 1e-5);
    let a = parse_symbol("x2*xi1", Some(2)).unwrap();
    let out = apply_operator(&a, &u, &phi(), Variant::A).unwrap();
    let want = u.map(|x, v| v * Complex64::new(0.0, x[0] * x[1]));
    assert!(out.max_abs_diff(&want).unwrap() <= 1e-5);
}

#[test]
fn grid_io_round_trip() {
    let dir = std::env::temp_dir().join(format!("psidocalc-grid-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("u.bin");
    let u = gauss(0.125).map(|x, v| v * Complex64::new(1.0, x[0]));
    write_grid(&u, &path).unwrap();
    let back = read_grid(&path).unwrap();
    assert_eq!(back.meta(), u.meta());
    assert!(back.max_abs_diff(&u).unwrap() <= 1e-6);
    std::fs::remove_dir_all(&dir).unwrap();
}

fn gaussian_y(y: f64) -> f64 {
    (-y * y).exp()
}

#[test]
fn gaussian_oscillatory_integral() {
    let ph = PhaseFunction::bilinear(1);
    let sched = OscSchedule::new(2).with_extent(vec![Some(7.0), None]);
    let a = |x: &[f64]| c(gaussian_y(x[0]) / (2.0 * PI));
    let r = osc_integral(&a, &ph, &sched).unwrap();
    assert!((r.psi_limit - c(1.0)).norm() <= 1e-6, "{:?}", r.psi_values);
    assert!((r.phi_limit - c(1.0)).norm() <= 1e-6, "{:?}", r.phi_values);
    assert_eq!(r.status, OscStatus::Converged);
    let zero = |_: &[f64]| c(0.0);
    let r = osc_integral(&zero, &ph, &sched).unwrap();
    assert_eq!(r.value, c(0.0));
}

#[test]
fn phase_validation() {
    let p = parse_symbol("x1*xi1 + x1", Some(1)).unwrap().as_poly().unwrap();
    assert!(PhaseFunction::new(p).is_err());
    let p = parse_symbol("x1^2", Some(1)).unwrap().as_poly().unwrap();
    assert!(PhaseFunction::new(p).is_err());
    let p = parse_symbol("x1^2 + xi1^2", Some(1)).unwrap().as_poly().unwrap();
    assert_eq!(PhaseFunction::new(p).unwrap().k, 2);
}

#[test]
fn integration_by_parts_identity() {
    // ∫ e^{iω} ∂_y a · b = −∫ e^{iω} a (∂_y b − iη b) for ω = −yη
    let ph = PhaseFunction::bilinear(1);
    let sched = OscSchedule::new(2).with_extent(vec![Some(8.0), Some(8.0)]);
    let a = |y: f64, e: f64| (-(y * y) - 0.5 * e * e).exp();
    let da = |y: f64, e: f64| -2.0 * y * a(y, e);
    let b = |y: f64, e: f64| (-(y - 0.3).powi(2) - 0.25 * (e + 0.5).powi(2)).exp();
    let db = |y: f64, e: f64| -2.0 * (y - 0.3) * b(y, e);
    let lhs = osc_integral(&|x: &[f64]| c(da(x[0], x[1]) * b(x[0], x[1])), &ph, &sched).unwrap();
    let rhs = osc_integral(
        &|x: &[f64]| -a(x[0], x[1]) * Complex64::new(db(x[0], x[1]), -x[1] * b(x[0], x[1])),
        &ph,
        &sched,
    )
    .unwrap();
    assert!((lhs.value - rhs.value).norm() <= 1e-5, "{} vs {}", lhs.value, rhs.value);
    assert!(lhs.value.norm() > 1e-3);
}

fn eps_family() -> Vec<f64> {
    (WEAK_EPS_J.0..=WEAK_EPS_J.1).map(|j| 2f64.powi(-j)).collect()
}

#[test]
fn weak_equal_reflexive_and_round_trip() {
    let tests = hermite_tests(1, 6);
    assert_eq!(tests.len(), 7);
    let u: Vec<GridFunction> = eps_family().into_iter().map(gauss).collect();
    let r = weak_equal(&u, &u, &tests, &phi()).unwrap();
    assert_eq!(r.verdict, WeakVerdict::Equal);
    assert!(r.tests.iter().all(|t| t.values.iter().all(|v| *v == 0.0)));
    let v: Vec<GridFunction> = u
        .iter()
        .map(|g| {
            let f = cf_transform(g, &phi(), Direction::Forward).unwrap();
            cf_transform(&f, &phi(), Direction::Inverse).unwrap()
        })
        .collect();
    let r = weak_equal(&u, &v, &tests, &phi()).unwrap();
    assert_eq!(r.verdict, WeakVerdict::Equal);
    let shifted: Vec<GridFunction> = u.iter().map(|g| g.map(|_, v| v * 1.001)).collect();
    let r = weak_equal(&u, &shifted, &tests, &phi()).unwrap();
    assert_eq!(r.verdict, WeakVerdict::NotEqual);
    assert!(weak_equal(&u, &v[..3], &tests, &phi()).is_err());
}

#[test]
fn hermite_functions_are_orthonormal() {
    let h = 0.01;
    for j in 0..=6 {
        for k in 0..=6 {
            let s: f64 = (-1500..=1500)
                .map(|i| {
                    let x = i as f64 * h;
                    hermite_function(j, x) * hermite_function(k, x)
                })
                .sum::<f64>()
                * h;
            let want = if j == k { 1.0 } else { 0.0 };
            assert!((s - want).abs() < 1e-10, "{j} {k} {s}");
        }
    }
}

#[test]
fn negligible_input_stays_negligible() {
    let a = sym("1 + x1^2 + xi1^2");
    let u: Vec<GridFunction> = eps_family()
        .into_iter()
        .map(|e| gauss(e).scale(c((-1.0 / e).exp())))
        .collect();
    let au: Vec<GridFunction> = u.iter().map(|g| apply_operator(&a, g, &phi(), Variant::A).unwrap()).collect();
    let zero: Vec<GridFunction> = au.iter().map(|g| g.scale(c(0.0))).collect();
    let r = weak_equal(&au, &zero, &hermite_tests(1, 6), &phi()).unwrap();
    assert_eq!(r.verdict, WeakVerdict::Equal);
}

#[test]
fn a_and_atilde_agree_weakly() {
    let a = sym("x1^2 + xi1^2");
    let fam: Vec<GridFunction> = eps_family().into_iter().map(gauss).collect();
    let x: Vec<GridFunction> = fam.iter().map(|g| apply_operator(&a, g, &phi(), Variant::A).unwrap()).collect();
    let y: Vec<GridFunction> = fam.iter().map(|g| apply_operator(&a, g, &phi(), Variant::Atilde).unwrap()).collect();
    assert_eq!(weak_equal(&x, &y, &hermite_tests(1, 6), &phi()).unwrap().verdict, WeakVerdict::Equal);
}

#[test]
fn composition_weak_equality() {
    let fam: Vec<GridFunction> = eps_family()
        .into_iter()
        .map(|e| gauss(e).map(|x, v| v * Complex64::new(1.0, 0.3 * x[0])))
        .collect();
    let (b1, b2) = (sym("x1*xi1 + 2*xi1^2"), sym("x1^2 - i*xi1 + 1"));
    let comp = total(&compose(&b1, &b2, None).unwrap());
    let lhs: Vec<GridFunction> = fam
        .iter()
        .map(|g| {
            let t = apply_operator(&b2, g, &phi(), Variant::A).unwrap();
            apply_operator(&b1, &t, &phi(), Variant::A).unwrap()
        })
        .collect();
    let rhs: Vec<GridFunction> = fam.iter().map(|g| apply_operator(&comp, g, &phi(), Variant::A).unwrap()).collect();
    let r = weak_equal(&lhs, &rhs, &hermite_tests(1, 6), &phi()).unwrap();
    assert_eq!(r.verdict, WeakVerdict::Equal);
    let rel = lhs[2].max_abs_diff(&rhs[2]).unwrap() / rhs[2].norm_inf();
    assert!(rel <= 1e-8, "{rel}");
}

fn certified(src: &str, m: f64) -> (SymbolExpr, crate::calculus::HypoCertificate) {
    let w = WeightFunction::japanese_bracket(1);
    let mut a = sym(src);
    a.claimed = Some(ClaimedClass {
        m,
        rho: 1.0,
        n_eps: 0,
        weight: Arc::new(w.clone()),
    });
    let spec = SampleSpec {
        half_width: 40.0,
        n_random: 400,
        eps_j_min: 1,
        eps_j_max: 4,
        ..SampleSpec::default()
    };
    let cert = certify_hypoelliptic(&a, &w, m, 1.0, &spec).unwrap();
    (a, cert)
}

fn packet(eps: f64) -> GridFunction {
    GridFunction::from_fn(1, 12.0, 256, eps, |x| Complex64::from_polar((-0.5 * x[0] * x[0]).exp(), 6.0 * x[0])).unwrap()
}

#[test]
fn constant_symbol_regularity() {
    let (a, cert) = certified("2", 0.0);
    let fam: Vec<GridFunction> = eps_family().into_iter().map(packet).collect();
    let r = regularity_experiment(&a, &cert, &fam, 0, &phi()).unwrap();
    let d = r.defect_at(0, 2f64.powi(-5)).unwrap();
    assert!(d <= 1e-4, "{d}");
    assert_eq!(r.weak_vs_identity_plus_residual.verdict, WeakVerdict::Equal);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

        #[test]
        fn parseval(centers in prop::collection::vec((-4.0f64..4.0, -3.0f64..3.0, -2.0f64..2.0), 1..4), j in 5i32..9) {
            let eps = 2f64.powi(-j);
            let u = GridFunction::from_fn(1, 12.0, 256, eps, |x| {
                centers.iter().map(|&(x0, k, a)| Complex64::from_polar(a * (-(x[0] - x0).powi(2)).exp(), k * x[0])).sum()
            }).unwrap();
            let f = cf_transform(&u, &phi(), Direction::Forward).unwrap();
            let lhs = u.norm_l2();
            let rhs = (f.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * f.step() / (2.0 * PI)).sqrt();
            prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.max(1e-300));
        }
    }
}
