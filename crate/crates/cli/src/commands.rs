use crate::args::*;
use crate::report::Outcome;
use anyhow::{anyhow, bail, Context as _};
use num_complex::Complex64;
use psidocalc_core::calculus::{
    certify_hypoelliptic, change_theta, compose as compose_symbols, fmt_theta, parametrix as left_parametrix,
    parse_theta, right_parametrix, theta_symbol, HypoCertificate, Parametrix,
};
use psidocalc_core::classes::{check_amplitude as amplitude_check, check_class as class_check, check_negligible as negl_check, check_smoothing as smoothing_check, Verdict};
use psidocalc_core::nets::{Mollifier, NetClass, Q_MAX};
use psidocalc_core::parse::{parse_amplitude, parse_symbol};
use psidocalc_core::quantize::{
    apply_operator, hermite_tests, osc_integral, read_grid, regularity_experiment, weak_equal, write_grid, GridFunction,
    OscSchedule, OscStatus, PhaseFunction, Variant, WeakVerdict,
};
use psidocalc_core::sampling::SampleSpec;
use psidocalc_core::symbolic::{ClaimedClass, Poly, RationalExpr, SymbolExpr};
use psidocalc_core::weights::{WeightFunction, WeightSpec};
use serde::Serialize;
use serde_json::json;
use std::f64::consts::PI;
use std::sync::Arc;

pub struct Context {
    pub seed: u64,
}

pub fn need<T: Clone>(v: &Option<T>, flag: &str) -> anyhow::Result<T> {
    v.clone().ok_or_else(|| anyhow!("missing required option --{flag}"))
}

pub fn symbol(src: &str) -> anyhow::Result<SymbolExpr> {
    parse_symbol(src, None).with_context(|| format!("in symbol `{src}`"))
}

/// `japanese`, `qh:M1,...,M2n`, or a JSON weight object.
pub fn weight(spec: Option<&str>, n: usize) -> anyhow::Result<WeightFunction> {
    let s = spec.unwrap_or("japanese").trim();
    if s.starts_with('{') {
        let w: WeightSpec = serde_json::from_str(s).context("parsing the weight object")?;
        return Ok(w.build(n)?);
    }
    let w = match s.split_once(':') {
        None if s == "japanese" || s == "jb" => WeightFunction::japanese_bracket(n),
        Some(("qh", m)) | Some(("quasi", m)) => {
            let m: Vec<u32> = m
                .split(',')
                .map(|t| t.trim().parse::<u32>())
                .collect::<Result<_, _>>()
                .with_context(|| format!("weight exponents `{m}`"))?;
            WeightFunction::quasi_homogeneous(&m)?
        }
        _ => bail!("unknown weight `{s}` (expected `japanese`, `qh:M1,...` or a JSON object)"),
    };
    if w.dim_n != n {
        bail!("the weight lives on ℝ^{} but the symbol on ℝ^{}", 2 * w.dim_n, 2 * n);
    }
    Ok(w)
}

/// `plateau` or `plateau:inner,outer`.
pub fn mollifier(spec: Option<&str>) -> anyhow::Result<Mollifier> {
    let s = spec.unwrap_or("plateau").trim();
    let (name, radii) = s.split_once(':').unwrap_or((s, ""));
    if name != "plateau" {
        bail!("unknown mollifier profile `{name}`");
    }
    if radii.is_empty() {
        return Ok(Mollifier::default());
    }
    let r: Vec<f64> = radii
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("mollifier radii `{radii}`"))?;
    match r[..] {
        [a, b] if 0.0 < a && a < b => Ok(Mollifier::plateau(u32::MAX, a, b)),
        _ => bail!("mollifier radii must be `inner,outer` with 0 < inner < outer"),
    }
}

pub fn sample_spec(s: &SamplingArgs, seed: u64, default_box: f64) -> anyhow::Result<SampleSpec> {
    let d = SampleSpec::default();
    let spec = SampleSpec {
        half_width: s.box_half_width.unwrap_or(default_box),
        n_random: s.samples.unwrap_or(d.n_random),
        eps_j_min: s.eps_j_min.unwrap_or(d.eps_j_min),
        eps_j_max: s.eps_j_max.unwrap_or(d.eps_j_max),
        seed,
        exclude_radius: 0.0,
    };
    if !(spec.half_width > 0.0) {
        bail!("--box must be positive");
    }
    if spec.eps_j_max < spec.eps_j_min + 1 {
        bail!("the ε-grid needs eps-j-max > eps-j-min");
    }
    Ok(spec)
}

fn rho(v: Option<f64>) -> anyhow::Result<f64> {
    let r = v.unwrap_or(1.0);
    if !(r > 0.0 && r <= 1.0) {
        bail!("--rho must lie in (0, 1], got {r}");
    }
    Ok(r)
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Member => "Member",
        Verdict::NotMember => "NotMember",
        Verdict::Inconclusive => "Inconclusive",
    }
}

pub fn check_class(ctx: &Context, a: CheckClassArgs) -> anyhow::Result<Outcome> {
    let mut out = Outcome::new("check-class", &a, ctx.seed);
    let src = need(&a.symbol, "symbol")?;
    out.hash_text("symbol", &src);
    let s = symbol(&src)?;
    let w = weight(a.weight.as_deref(), s.n())?;
    let m = need(&a.m, "m")?;
    let rho = rho(a.rho)?;
    let n_eps = a.n_eps.unwrap_or(0);
    let alpha_max = a.alpha_max.unwrap_or(3);
    let spec = sample_spec(&a.sampling, ctx.seed, 10.0)?;
    let kind = a.class.unwrap_or(ClassKind::Regular);
    let mut est = class_check(&s, &w, m, rho, n_eps, alpha_max, &spec);
    let mut per_order_n: Vec<Option<i64>> = Vec::new();
    if kind == ClassKind::Plain {
        // N may depend on the derivative order: read off the sampled exponent per
        // order and check again at the largest one
        per_order_n = est
            .n_per_order
            .iter()
            .map(|c| match c {
                Some(NetClass::Moderate(k)) => Some(*k),
                Some(NetClass::Negligible) => Some(i64::MIN),
                _ => None,
            })
            .collect();
        if per_order_n.iter().all(|k| k.is_some()) {
            let top = per_order_n.iter().flatten().copied().max().unwrap_or(0).max(n_eps);
            if top != n_eps {
                est = class_check(&s, &w, m, rho, top, alpha_max, &spec);
            }
        } else {
            est.verdict = Verdict::NotMember;
        }
    }
    let pass = est.verdict == Verdict::Member;
    let result = json!({
        "verdict": verdict_str(est.verdict),
        "class": kind,
        "weight": w.name(),
        "per_order_N": per_order_n.iter().map(|k| k.filter(|v| *v != i64::MIN)).collect::<Vec<_>>(),
        "estimate": est,
    });
    out.finish(pass, result)
}

pub fn check_amplitude(ctx: &Context, a: CheckAmplitudeArgs) -> anyhow::Result<Outcome> {
    let mut out = Outcome::new("check-amplitude", &a, ctx.seed);
    let src = need(&a.amplitude, "amplitude")?;
    out.hash_text("amplitude", &src);
    let amp = parse_amplitude(&src, None).with_context(|| format!("in amplitude `{src}`"))?;
    let w = weight(a.weight.as_deref(), amp.n())?;
    let m = need(&a.m, "m")?;
    let spec = sample_spec(&a.sampling, ctx.seed, 10.0)?;
    let est = amplitude_check(
        &amp,
        &w,
        m,
        a.m_prime,
        rho(a.rho)?,
        a.n_eps.unwrap_or(0),
        a.alpha_max.unwrap_or(2),
        &spec,
    );
    let pass = est.verdict == Verdict::Member;
    out.finish(pass, json!({ "verdict": verdict_str(est.verdict), "estimate": est }))
}

pub fn check_negligible(ctx: &Context, a: CheckNegligibleArgs) -> anyhow::Result<Outcome> {
    let mut out = Outcome::new("check-negligible", &a, ctx.seed);
    let src = need(&a.symbol, "symbol")?;
    out.hash_text("symbol", &src);
    let s = symbol(&src)?;
    let w = weight(a.weight.as_deref(), s.n())?;
    let spec = sample_spec(&a.sampling, ctx.seed, 10.0)?;
    let r = negl_check(
        &s,
        &w,
        a.m.unwrap_or(0.0),
        rho(a.rho)?,
        a.q_max.unwrap_or(Q_MAX),
        a.alpha_max.unwrap_or(3),
        &spec,
    );
    let pass = r.verdict == Verdict::Member;
    out.finish(pass, json!({ "verdict": verdict_str(r.verdict), "report": r }))
}

pub fn check_smoothing(ctx: &Context, a: CheckSmoothingArgs) -> anyhow::Result<Outcome> {
    let mut out = Outcome::new("check-smoothing", &a, ctx.seed);
    let src = need(&a.symbol, "symbol")?;
    out.hash_text("symbol", &src);
    let s = symbol(&src)?;
    let spec = sample_spec(&a.sampling, ctx.seed, 20.0)?;
    let r = smoothing_check(&s, a.order.unwrap_or(4), a.n_eps.unwrap_or(0), &spec);
    let pass = r.verdict == Verdict::Member;
    out.finish(pass, json!({ "verdict": verdict_str(r.verdict), "report": r }))
}

/// A parsed symbol with its claimed class, ready for certification.
pub struct Hypo {
    pub symbol: SymbolExpr,
    pub weight: WeightFunction,
    pub l: f64,
    pub r: f64,
}

pub fn hypo(h: &HypoArgs, out: &mut Outcome) -> anyhow::Result<Hypo> {
    let src = need(&h.symbol, "symbol")?;
    out.hash_text("symbol", &src);
    let mut s = symbol(&src)?;
    let w = weight(h.weight.as_deref(), s.n())?;
    let l = need(&h.l, "l")?;
    let m = h.m.unwrap_or(l);
    let r = h.radius.unwrap_or(1.0);
    if !(r > 0.0) {
        bail!("--R must be positive");
    }
    s.claimed = Some(ClaimedClass {
        m,
        rho: rho(h.rho)?,
        n_eps: h.n_eps.unwrap_or(0),
        weight: Arc::new(w.clone()),
    });
    Ok(Hypo { symbol: s, weight: w, l, r })
}

fn cert_spec(s: &SamplingArgs, seed: u64) -> anyhow::Result<SampleSpec> {
    let mut d = s.clone();
    d.samples = d.samples.or(Some(400));
    d.eps_j_max = d.eps_j_max.or(Some(4));
    sample_spec(&d, seed, 40.0)
}

pub fn certify(ctx: &Context, a: CertifyArgs) -> anyhow::Result<Outcome> {
    let mut out = Outcome::new("certify", &a, ctx.seed);
    let h = hypo(&a.hypo, &mut out)?;
    let cert = certify_hypoelliptic(&h.symbol, &h.weight, h.l, h.r, &cert_spec(&a.sampling, ctx.seed)?)?;
    let pass = cert.passed();
    out.finish(pass, json!({ "weight": h.weight.name(), "certificate": cert }))
}

#[derive(Serialize)]
struct CoeffTerm {
    monomial: Vec<u32>,
    coeff: String,
}

#[derive(Serialize)]
struct DenFactor {
    factor: Vec<CoeffTerm>,
    power: u32,
}

#[derive(Serialize)]
struct PartJson {
    /// ψ(|z|/R)^k factors as (R, k).
    cutoff: Vec<(f64, u32)>,
    numerator: Vec<CoeffTerm>,
    denominator: Vec<DenFactor>,
}

fn coeff_list(p: &Poly) -> Vec<CoeffTerm> {
    p.terms()
        .map(|(m, c)| CoeffTerm {
            monomial: m.clone(),
            coeff: c.to_string(),
        })
        .collect()
}

fn rational_json(r: &RationalExpr) -> (Vec<CoeffTerm>, Vec<DenFactor>) {
    let den = r
        .denominator()
        .iter()
        .map(|(p, k)| DenFactor {
            factor: coeff_list(p),
            power: *k,
        })
        .collect();
    (coeff_list(r.numerator()), den)
}

fn symbol_json(s: &SymbolExpr) -> Vec<PartJson> {
    s.parts()
        .iter()
        .map(|p| {
            let (numerator, denominator) = rational_json(&p.body);
            PartJson {
                cutoff: p.cutoff.factors().to_vec(),
                numerator,
                denominator,
            }
        })
        .collect()
}

fn build_parametrix(h: &Hypo, cert: &HypoCertificate, k: u32, side: SideArg) -> anyhow::Result<Parametrix> {
    Ok(match side {
        SideArg::Left => left_parametrix(&h.symbol, cert, k)?,
        SideArg::Right => right_parametrix(&h.symbol, cert, k)?,
    })
}

pub fn parametrix(ctx: &Context, a: ParametrixArgs) -> anyhow::Result<Outcome> {
    let mut out = Outcome::new("parametrix", &a, ctx.seed);
    let h = hypo(&a.hypo, &mut out)?;
    let k = a.k.unwrap_or(2);
    let cert = certify_hypoelliptic(&h.symbol, &h.weight, h.l, h.r, &cert_spec(&a.sampling, ctx.seed)?)?;
    if !cert.passed() {
        return out.finish(false, json!({ "certificate": cert, "terms": [] }));
    }
    let p = build_parametrix(&h, &cert, k, a.side.unwrap_or(SideArg::Left))?;
    let n = h.symbol.n();
    // a fixed ray off the coordinate axes
    let mut dir = vec![psidocalc_core::coeff::rat(0, 1); 2 * n];
    dir[0] = psidocalc_core::coeff::rat(3, 5);
    dir[n] = psidocalc_core::coeff::rat(4, 5);
    let order = p.residual_order(&h.weight, &dir, (3, 8), 4);
    let terms: Vec<String> = p.terms.iter().map(|t| t.fmt()).collect();
    if let Some(path) = &a.emit_terms {
        let detail: Vec<_> = p
            .terms
            .iter()
            .enumerate()
            .map(|(j, t)| json!({ "k": j, "text": t.fmt(), "parts": symbol_json(t) }))
            .collect();
        let text = serde_json::to_string_pretty(&json!({ "n": n, "side": p.side, "terms": detail }))?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    out.finish(
        true,
        json!({
            "certificate": cert,
            "side": p.side,
            "K": k,
            "terms": terms,
            "residual": p.composed_residual.fmt_with(&psidocalc_core::symbolic::symbol_var_names(n)),
            "residual_order": order,
            "residual_order_expected": expected_residual_order(&h, k),
        }),
    )
}

/// m − l − 2ρ(K + 1): each omitted term loses ρ on both factors.
fn expected_residual_order(h: &Hypo, k: u32) -> f64 {
    let c = h.symbol.claimed.as_ref().expect("hypo() sets the claim");
    c.m - h.l - 2.0 * c.rho * (k as f64 + 1.0)
}

pub fn compose(ctx: &Context, a: ComposeArgs) -> anyhow::Result<Outcome> {
    let mut out = Outcome::new("compose", &a, ctx.seed);
    let s1 = need(&a.b1, "b1")?;
    let s2 = need(&a.b2, "b2")?;
    out.hash_text("b1", &s1);
    out.hash_text("b2", &s2);
    let n = psidocalc_core::parse::parse_symbol(&format!("({s1}) + ({s2})"), None)?.n();
    let b1 = parse_symbol(&s1, Some(n)).with_context(|| format!("in symbol `{s1}`"))?;
    let b2 = parse_symbol(&s2, Some(n)).with_context(|| format!("in symbol `{s2}`"))?;
    let series = compose_symbols(&b1, &b2, a.k)?;
    let total = series.terms.iter().fold(SymbolExpr::zero(n), |acc, t| acc.add(&t.0));
    let terms: Vec<_> = series
        .terms
        .iter()
        .enumerate()
        .map(|(j, (t, m))| json!({ "order": j, "m": m, "symbol": t.fmt() }))
        .collect();
    out.finish(true, json!({ "terms": terms, "sum": total.fmt(), "rho": series.rho, "N": series.n_eps }))
}

pub fn theta(ctx: &Context, a: ThetaArgs) -> anyhow::Result<Outcome> {
    let mut out = Outcome::new("theta", &a, ctx.seed);
    let src = need(&a.amplitude, "amplitude")?;
    out.hash_text("amplitude", &src);
    let amp = parse_amplitude(&src, None).with_context(|| format!("in amplitude `{src}`"))?;
    let n = amp.n();
    let t1 = parse_theta(a.theta.as_deref().unwrap_or("0"), n)?;
    let b = theta_symbol(&amp, &t1, a.k)?;
    let show = |b: &psidocalc_core::calculus::ThetaSymbol| {
        json!({
            "theta": fmt_theta(&b.theta),
            "exact": b.exact,
            "terms": b.terms.iter().map(|t| t.fmt()).collect::<Vec<_>>(),
            "total": b.total().fmt(),
        })
    };
    let mut result = json!({ "symbol": show(&b) });
    if let Some(to) = &a.to {
        let t2 = parse_theta(to, n)?;
        let moved = change_theta(&b, &t2, a.k)?;
        result["moved"] = show(&moved);
    }
    out.finish(true, result)
}

fn variant(v: Option<VariantArg>) -> Variant {
    match v.unwrap_or(VariantArg::A) {
        VariantArg::A => Variant::A,
        VariantArg::Atilde => Variant::Atilde,
    }
}

fn grid_summary(g: &GridFunction) -> serde_json::Value {
    json!({ "meta": g.meta(), "norm_inf": g.norm_inf(), "norm_l2": g.norm_l2() })
}

pub fn apply(ctx: &Context, a: ApplyArgs) -> anyhow::Result<Outcome> {
    let mut out = Outcome::new("apply", &a, ctx.seed);
    let src = need(&a.symbol, "symbol")?;
    out.hash_text("symbol", &src);
    let input = need(&a.input, "input")?;
    out.hash_file("input", &input)?;
    let u = read_grid(&input)?;
    let s = parse_symbol(&src, Some(u.n)).with_context(|| format!("in symbol `{src}`"))?;
    let phi = mollifier(a.mollifier.as_deref())?;
    let v = apply_operator(&s, &u, &phi, variant(a.variant))?;
    if let Some(path) = &a.grid_out {
        write_grid(&v, path)?;
    }
    out.finish(true, json!({ "input": grid_summary(&u), "output": grid_summary(&v) }))
}

pub fn weak_eq(ctx: &Context, a: WeakEqArgs) -> anyhow::Result<Outcome> {
    let mut out = Outcome::new("weak-eq", &a, ctx.seed);
    let up = need(&a.u, "u")?;
    let vp = need(&a.v, "v")?;
    let mut read = |paths: &[std::path::PathBuf], tag: &str| -> anyhow::Result<Vec<GridFunction>> {
        paths
            .iter()
            .enumerate()
            .map(|(i, p)| {
                out.hash_file(&format!("{tag}[{i}]"), p)?;
                Ok(read_grid(p)?)
            })
            .collect()
    };
    let u = read(&up, "u")?;
    let v = read(&vp, "v")?;
    let n = u.first().map(|g| g.n).ok_or_else(|| anyhow!("--u needs at least one grid"))?;
    let phi = mollifier(a.mollifier.as_deref())?;
    let tests = hermite_tests(n, a.test_degree.unwrap_or(6));
    let r = weak_equal(&u, &v, &tests, &phi)?;
    let pass = r.verdict == WeakVerdict::Equal;
    out.finish(pass, r)
}

pub fn osc_int(ctx: &Context, a: OscIntArgs) -> anyhow::Result<Outcome> {
    let mut out = Outcome::new("osc-int", &a, ctx.seed);
    let src = need(&a.amplitude, "amplitude")?;
    out.hash_text("amplitude", &src);
    let phase_src = a.phase.clone();
    let n = match &phase_src {
        Some(p) => {
            out.hash_text("phase", p);
            parse_symbol(&format!("({src}) + ({p})"), None)?.n()
        }
        None => parse_symbol(&src, None)?.n(),
    };
    let amp = parse_symbol(&src, Some(n)).with_context(|| format!("in amplitude `{src}`"))?;
    let phase = match &phase_src {
        None => PhaseFunction::bilinear(n),
        Some(p) => {
            let e = parse_symbol(p, Some(n)).with_context(|| format!("in phase `{p}`"))?;
            let poly = e.as_poly().ok_or_else(|| anyhow!("the phase must be a polynomial"))?;
            PhaseFunction::new(poly)?
        }
    };
    let damping = a.damping.unwrap_or(0.0);
    if damping < 0.0 {
        bail!("--damping must be non-negative");
    }
    let reach = if damping > 0.0 { Some((40.0 / damping).sqrt()) } else { None };
    let mut extent = vec![reach; n];
    extent.extend(vec![None; n]);
    let mut sched = OscSchedule::new(2 * n).with_extent(extent);
    if let Some(t) = a.tolerance {
        sched.tolerance = t;
    }
    let c = amp.compile(a.eps.unwrap_or(1.0));
    let f = |z: &[f64]| {
        let r2: f64 = z[..n].iter().map(|v| v * v).sum();
        c.eval(z) * (-damping * r2).exp()
    };
    let r = osc_integral(&f, &phase, &sched)?;
    let dbar = r.value / (2.0 * PI).powi(n as i32);
    let pass = r.status == OscStatus::Converged;
    out.finish(pass, json!({ "value_dbar": dbar, "integral": r }))
}

pub fn gaussian_packet(n: usize, l: f64, points: usize, eps: f64, k: f64) -> anyhow::Result<GridFunction> {
    Ok(GridFunction::from_fn(n, l, points, eps, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Complex64::from_polar((-0.5 * r2).exp(), k * x[0])
    })?)
}

pub fn regularity(ctx: &Context, a: RegularityArgs) -> anyhow::Result<Outcome> {
    let mut out = Outcome::new("regularity", &a, ctx.seed);
    let h = hypo(&a.hypo, &mut out)?;
    let k = a.k.unwrap_or(3);
    let cert = certify_hypoelliptic(&h.symbol, &h.weight, h.l, h.r, &cert_spec(&a.sampling, ctx.seed)?)?;
    if !cert.passed() {
        return out.finish(false, json!({ "certificate": cert }));
    }
    let (j0, j1) = (a.family_j_min.unwrap_or(3), a.family_j_max.unwrap_or(10));
    if j1 < j0 {
        bail!("family-j-max must not be below family-j-min");
    }
    let l = a.grid_half_width.unwrap_or(12.0);
    let points = a.grid_points.unwrap_or(256);
    let freq = a.packet_frequency.unwrap_or(10.0);
    let n = h.symbol.n();
    let fam: Vec<GridFunction> = (j0..=j1)
        .map(|j| gaussian_packet(n, l, points, 2f64.powi(-j), freq))
        .collect::<anyhow::Result<_>>()?;
    let r = regularity_experiment(&h.symbol, &cert, &fam, k, &Mollifier::default())?;
    let probe = 2f64.powi(-5).clamp(2f64.powi(-j1), 2f64.powi(-j0));
    let monotone = r.monotone_at(probe);
    let pass = monotone && r.weak_vs_identity_plus_residual.verdict == WeakVerdict::Equal;
    out.finish(
        pass,
        json!({ "certificate": cert, "probe_eps": probe, "monotone_at_probe": monotone, "experiment": r }),
    )
}
