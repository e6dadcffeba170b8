use crate::args::{ReproduceArgs, Suite};
use crate::commands::{gaussian_packet, Context};
use crate::report::Outcome;
use anyhow::anyhow;
use num_complex::Complex64;
use psidocalc_core::calculus::{certify_hypoelliptic, perturb_hypoelliptic};
use psidocalc_core::classes::{check_class, Verdict};
use psidocalc_core::nets::{estimate_exponent, EstimateOptions, Mollifier, NetClass};
use psidocalc_core::parse::parse_symbol;
use psidocalc_core::quantize::{hermite_tests, regularity_experiment, weak_equal, GridFunction, WeakVerdict, WEAK_EPS_J};
use psidocalc_core::sampling::SampleSpec;
use psidocalc_core::symbolic::{ClaimedClass, SymbolExpr};
use psidocalc_core::weights::WeightFunction;
use serde::Serialize;
use serde_json::{json, Value};
use std::sync::Arc;

#[derive(Serialize)]
struct Entry {
    name: String,
    pass: bool,
    detail: Value,
}

fn cert_spec(seed: u64) -> SampleSpec {
    SampleSpec {
        half_width: 40.0,
        n_random: 400,
        eps_j_min: 1,
        eps_j_max: 4,
        seed,
        ..SampleSpec::default()
    }
}

fn claimed(src: &str, w: &WeightFunction, m: f64) -> anyhow::Result<SymbolExpr> {
    let mut a = parse_symbol(src, Some(1))?;
    a.claimed = Some(ClaimedClass {
        m,
        rho: 1.0,
        n_eps: 0,
        weight: Arc::new(w.clone()),
    });
    Ok(a)
}

fn certified_member(name: &str, a: &SymbolExpr, w: &WeightFunction, m: f64, seed: u64) -> anyhow::Result<Entry> {
    let cert = certify_hypoelliptic(a, w, m, 1.0, &cert_spec(seed))?;
    let spec = SampleSpec {
        seed,
        ..SampleSpec::default()
    };
    let class = check_class(a, w, m, 1.0, cert.n_eps.max(0), 3, &spec);
    Ok(Entry {
        name: name.to_string(),
        pass: cert.passed() && class.verdict == Verdict::Member,
        detail: json!({ "symbol": a.fmt(), "weight": w.name(), "m": m, "certificate": cert, "class_verdict": class.verdict }),
    })
}

fn examples(seed: u64) -> anyhow::Result<Vec<Entry>> {
    let jb = WeightFunction::japanese_bracket(1);
    let qh = WeightFunction::quasi_homogeneous(&[4, 2])?;
    let mut out = Vec::new();
    for (src, m) in [("x1 + i*xi1", 1.0), ("x1^2 + i*xi1^2", 2.0), ("x1^4 + i*xi1^4", 4.0)] {
        out.push(certified_member(&format!("x^m + iξ^m, m = {m}"), &claimed(src, &jb, m)?, &jb, m, seed)?);
    }
    out.push(certified_member(
        "ξ^2 + i x^4, quasi-homogeneous weight",
        &claimed("xi1^2 + i*x1^4", &qh, 4.0)?,
        &qh,
        4.0,
        seed,
    )?);
    out.push(certified_member("ξ^3 + i x^3", &claimed("xi1^3 + i*x1^3", &jb, 3.0)?, &jb, 3.0, seed)?);
    // a lower-order perturbation with a moderate coefficient keeps ellipticity
    let a = claimed("1 + x1^2 + xi1^2", &jb, 2.0)?;
    let cert = certify_hypoelliptic(&a, &jb, 2.0, 1.0, &cert_spec(seed))?;
    let b = parse_symbol("eps^-1*x1 + (1+i)*xi1", Some(1))?;
    let p = perturb_hypoelliptic(&a, &cert, &b, 1.0, 1)?;
    out.push(certified_member("1 + x² + ξ² + ε^{N+N′}(ε^{-1}x + (1+i)ξ)", &p, &jb, 2.0, seed)?);
    let g = claimed("eps^2*(x1^2 + xi1^2 + 1) + eps^(5/2)*x1*xi1", &jb, 2.0)?;
    out.push(certified_member("ε²(1 + x² + ξ²) + ε^{5/2} xξ", &g, &jb, 2.0, seed)?);
    Ok(out)
}

fn wide_grid(eps: f64, width: f64, extra: i32, f: impl Fn(f64) -> f64 + Sync) -> anyhow::Result<GridFunction> {
    let j = (-eps.log2()).round() as i32;
    Ok(GridFunction::from_fn(1, width / eps, 1usize << (j + extra), eps, |x| Complex64::new(f(x[0]), 0.0))?)
}

/// u and v weakly equal while sup|u − v| stays away from zero.
fn weak_not_strong(name: &str, u: &[GridFunction], v: &[GridFunction]) -> anyhow::Result<Entry> {
    let phi = Mollifier::default();
    let r = weak_equal(u, v, &hermite_tests(1, 6), &phi)?;
    let samples: Vec<(f64, f64)> = r.eps.iter().copied().zip(r.max_norm_difference.iter().copied()).collect();
    let strong = estimate_exponent(&samples, &EstimateOptions::default())?;
    let pass = r.verdict == WeakVerdict::Equal && strong.verdict != NetClass::Negligible;
    Ok(Entry {
        name: name.to_string(),
        pass,
        detail: json!({
            "weak_verdict": r.verdict,
            "max_norm_difference": r.max_norm_difference,
            "max_norm_class": strong.verdict,
            "eps": r.eps,
        }),
    })
}

fn counterexamples() -> anyhow::Result<Vec<Entry>> {
    let phi = Mollifier::default();
    let wide = Mollifier::plateau(u32::MAX, 3.0, 6.0);
    let eps: Vec<f64> = (WEAK_EPS_J.0..=WEAK_EPS_J.1).map(|j| 2f64.powi(-j)).collect();
    let sq: Vec<GridFunction> = eps
        .iter()
        .map(|&e| wide_grid(e, 3.0, 5, |x| phi.fourier_eps(&[x], e).powi(2)))
        .collect::<anyhow::Result<_>>()?;
    let lin: Vec<GridFunction> = eps
        .iter()
        .map(|&e| wide_grid(e, 3.0, 5, |x| phi.fourier_eps(&[x], e)))
        .collect::<anyhow::Result<_>>()?;
    let m1: Vec<GridFunction> = eps
        .iter()
        .map(|&e| wide_grid(e, 7.0, 6, |x| phi.fourier_eps(&[x], e)))
        .collect::<anyhow::Result<_>>()?;
    let m2: Vec<GridFunction> = eps
        .iter()
        .map(|&e| wide_grid(e, 7.0, 6, |x| wide.fourier_eps(&[x], e)))
        .collect::<anyhow::Result<_>>()?;
    Ok(vec![
        weak_not_strong("φ̂_ε² vs φ̂_ε", &sq, &lin)?,
        weak_not_strong("plateau (1,2) vs plateau (3,6)", &m1, &m2)?,
    ])
}

fn regularity(seed: u64) -> anyhow::Result<Vec<Entry>> {
    let jb = WeightFunction::japanese_bracket(1);
    let a = claimed("1 + x1^2 + xi1^2", &jb, 2.0)?;
    let cert = certify_hypoelliptic(&a, &jb, 2.0, 1.0, &cert_spec(seed))?;
    let fam: Vec<GridFunction> = (WEAK_EPS_J.0..=WEAK_EPS_J.1)
        .map(|j| gaussian_packet(1, 12.0, 256, 2f64.powi(-j), 10.0))
        .collect::<anyhow::Result<_>>()?;
    let r = regularity_experiment(&a, &cert, &fam, 3, &Mollifier::default())?;
    let probe = 2f64.powi(-5);
    let defects: Vec<f64> = (0..=3).map(|k| r.defect_at(k, probe).unwrap_or(f64::NAN)).collect();
    let monotone = r.monotone_at(probe);
    let equal = r.weak_vs_identity_plus_residual.verdict == WeakVerdict::Equal;
    Ok(vec![Entry {
        name: "parametrix regularity, a = 1 + x² + ξ², K = 0..3".into(),
        pass: monotone && equal,
        detail: json!({
            "defects_at_2^-5": defects,
            "monotone": monotone,
            "weak_vs_identity_plus_residual": r.weak_vs_identity_plus_residual.verdict,
            "weak_vs_u": r.weak_vs_u.verdict,
        }),
    }])
}

pub fn run(ctx: &Context, a: ReproduceArgs) -> anyhow::Result<Outcome> {
    let out = Outcome::new("reproduce", &a, ctx.seed);
    let suite = a.suite.ok_or_else(|| anyhow!("missing suite name (examples, counterexamples or regularity)"))?;
    let entries = match suite {
        Suite::Examples => examples(ctx.seed)?,
        Suite::Counterexamples => counterexamples()?,
        Suite::Regularity => regularity(ctx.seed)?,
    };
    let pass = entries.iter().all(|e| e.pass);
    out.finish(pass, json!({ "suite": suite, "entries": entries }))
}
