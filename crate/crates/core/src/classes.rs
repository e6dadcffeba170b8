//! Sampled membership checks for the symbol, amplitude and smoothing classes,
//! and the asymptotic-sum constructor.

use crate::cutoff::{psi, psi_jet};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};
use crate::multi_index::{multi_indices, order};
use crate::nets::{estimate_exponent, EstimateOptions, NetClass};
use crate::sampling::{loglog_slope, sample_points, SampleSpec};
use crate::symbolic::{AmplitudeExpr, CompiledSymbol, SymbolExpr};
use crate::weights::WeightFunction;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Evaluates ∂^γ a_ε at a point for a fixed list of multi-indices γ.
pub trait PointEval: Sync {
    fn eval(&self, z: &[f64], out: &mut [Complex64]);
}

/// Derivative tables prepared once per list of multi-indices.
pub trait Prepared: Sync {
    fn at_eps<'a>(&'a self, eps: f64) -> Box<dyn PointEval + 'a>;
}

/// Anything that can be sampled together with its derivatives.
pub trait Sampled: Sync {
    /// Number of real variables (2n for symbols, 3n for amplitudes).
    fn dim(&self) -> usize;
    fn prepare<'a>(&'a self, indices: &[Vec<u32>]) -> Box<dyn Prepared + 'a>;
    /// Exact classes of the ε-coefficients, when known.
    fn coefficient_classes(&self) -> Option<Vec<NetClass>> {
        None
    }
    /// Radius inside which derivatives are not exact (cutoff annulus).
    fn exclusion_radius(&self) -> f64 {
        0.0
    }
}

struct SymbolicPrepared {
    derivs: Vec<SymbolExpr>,
}

struct CompiledList(Vec<CompiledSymbol>);

impl PointEval for CompiledList {
    fn eval(&self, z: &[f64], out: &mut [Complex64]) {
        for (o, c) in out.iter_mut().zip(&self.0) {
            *o = c.eval(z);
        }
    }
}

impl Prepared for SymbolicPrepared {
    fn at_eps<'a>(&'a self, eps: f64) -> Box<dyn PointEval + 'a> {
        Box::new(CompiledList(self.derivs.iter().map(|d| d.compile(eps)).collect()))
    }
}

impl Sampled for SymbolExpr {
    fn dim(&self) -> usize {
        2 * self.n()
    }

    fn prepare<'a>(&'a self, indices: &[Vec<u32>]) -> Box<dyn Prepared + 'a> {
        let derivs = indices.par_iter().map(|g| self.derivative_multi(g)).collect();
        Box::new(SymbolicPrepared { derivs })
    }

    fn coefficient_classes(&self) -> Option<Vec<NetClass>> {
        Some(
            self.parts()
                .iter()
                .flat_map(|p| p.body.numerator().terms().map(|(_, c)| c.classify()).collect::<Vec<_>>())
                .collect(),
        )
    }

    fn exclusion_radius(&self) -> f64 {
        self.saturation_radius()
    }
}

struct AmplitudePrepared {
    derivs: Vec<crate::symbolic::RationalExpr>,
}

struct NumList(Vec<crate::symbolic::NumRational>);

impl PointEval for NumList {
    fn eval(&self, z: &[f64], out: &mut [Complex64]) {
        for (o, c) in out.iter_mut().zip(&self.0) {
            *o = c.eval(z);
        }
    }
}

impl Prepared for AmplitudePrepared {
    fn at_eps<'a>(&'a self, eps: f64) -> Box<dyn PointEval + 'a> {
        Box::new(NumList(self.derivs.iter().map(|d| d.at_eps(eps)).collect()))
    }
}

impl Sampled for AmplitudeExpr {
    fn dim(&self) -> usize {
        3 * self.n()
    }

    fn prepare<'a>(&'a self, indices: &[Vec<u32>]) -> Box<dyn Prepared + 'a> {
        let derivs = indices.par_iter().map(|g| self.body.derivative_multi(g)).collect();
        Box::new(AmplitudePrepared { derivs })
    }

    fn coefficient_classes(&self) -> Option<Vec<NetClass>> {
        Some(self.body.numerator().terms().map(|(_, c)| c.classify()).collect())
    }
}

type DerivFn = dyn Fn(&[u32], &[f64], f64) -> Complex64 + Send + Sync;

/// A black-box family given by its derivatives (γ, z, ε) ↦ ∂^γ a_ε(z).
#[derive(Clone)]
pub struct FnSymbol {
    pub dim: usize,
    pub name: String,
    f: Arc<DerivFn>,
}

impl FnSymbol {
    pub fn new(dim: usize, name: &str, f: impl Fn(&[u32], &[f64], f64) -> Complex64 + Send + Sync + 'static) -> Self {
        FnSymbol {
            dim,
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

struct FnPrepared<'a> {
    f: &'a DerivFn,
    indices: Vec<Vec<u32>>,
}

struct FnAtEps<'a> {
    p: &'a FnPrepared<'a>,
    eps: f64,
}

impl PointEval for FnAtEps<'_> {
    fn eval(&self, z: &[f64], out: &mut [Complex64]) {
        for (o, g) in out.iter_mut().zip(&self.p.indices) {
            *o = (self.p.f)(g, z, self.eps);
        }
    }
}

impl Prepared for FnPrepared<'_> {
    fn at_eps<'a>(&'a self, eps: f64) -> Box<dyn PointEval + 'a> {
        Box::new(FnAtEps { p: self, eps })
    }
}

impl Sampled for FnSymbol {
    fn dim(&self) -> usize {
        self.dim
    }

    fn prepare<'a>(&'a self, indices: &[Vec<u32>]) -> Box<dyn Prepared + 'a> {
        Box::new(FnPrepared {
            f: &*self.f,
            indices: indices.to_vec(),
        })
    }
}

/// Sup tables over points, indexed [ε][quantity].
struct SupTable {
    inner: Vec<Vec<f64>>,
    outer: Vec<Vec<f64>>,
}

fn sup_over(
    prep: &dyn Prepared,
    n_deriv: usize,
    eps: &[f64],
    points: &[Vec<f64>],
    nq: usize,
    quantity: &(dyn Fn(&[f64], &[Complex64], &mut [f64]) + Sync),
) -> Vec<Vec<f64>> {
    eps.iter()
        .map(|&e| {
            let ev = prep.at_eps(e);
            points
                .par_iter()
                .fold(
                    || (vec![0.0; nq], vec![Complex64::new(0.0, 0.0); n_deriv], vec![0.0; nq]),
                    |(mut acc, mut d, mut q), z| {
                        ev.eval(z, &mut d);
                        quantity(z, &d, &mut q);
                        for (a, v) in acc.iter_mut().zip(&q) {
                            let v = if v.is_nan() { f64::INFINITY } else { *v };
                            if v > *a {
                                *a = v;
                            }
                        }
                        (acc, d, q)
                    },
                )
                .map(|t| t.0)
                .reduce(|| vec![0.0; nq], |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect())
        })
        .collect()
}

fn sup_table(
    a: &dyn Sampled,
    indices: &[Vec<u32>],
    spec: &SampleSpec,
    nq: usize,
    quantity: &(dyn Fn(&[f64], &[Complex64], &mut [f64]) + Sync),
) -> (SupTable, SampleSpec) {
    let mut spec = spec.clone();
    spec.exclude_radius = spec.exclude_radius.max(a.exclusion_radius());
    let inner_pts = sample_points(a.dim(), &spec);
    // the doubled box only contributes its new region, so sampling noise inside
    // the base box does not count as drift
    let l = spec.half_width;
    let outer_pts: Vec<Vec<f64>> = sample_points(a.dim(), &spec.with_box(2.0 * l))
        .into_iter()
        .filter(|p| p.iter().any(|v| v.abs() > l))
        .collect();
    let prep = a.prepare(indices);
    let eps = spec.eps_grid();
    let inner = sup_over(&*prep, indices.len(), &eps, &inner_pts, nq, quantity);
    let outer = sup_over(&*prep, indices.len(), &eps, &outer_pts, nq, quantity);
    (SupTable { inner, outer }, spec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Member,
    NotMember,
    Inconclusive,
}

impl Verdict {
    fn rank(self) -> u8 {
        match self {
            Verdict::Member => 2,
            Verdict::Inconclusive => 1,
            Verdict::NotMember => 0,
        }
    }
}

/// Drift ≤ 10% is Member, ≤ 25% Inconclusive.
pub const MEMBER_DRIFT: f64 = 0.10;
pub const INCONCLUSIVE_DRIFT: f64 = 0.25;

fn verdict_from_drift(drift: f64) -> Verdict {
    if drift <= MEMBER_DRIFT {
        Verdict::Member
    } else if drift <= INCONCLUSIVE_DRIFT {
        Verdict::Inconclusive
    } else {
        Verdict::NotMember
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub alpha: Vec<u32>,
    /// Sup over the base box and the full ε-grid.
    pub c: f64,
    /// Sup over the base box and the first half of the ε-grid.
    pub c_base: f64,
    pub c_doubled_box: f64,
    pub c_extended_eps: f64,
    pub drift: f64,
    /// Sampled ε-exponent of the sup (Moderate(N) means ≤ ε^{−N}).
    pub eps_class: Option<NetClass>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassEstimate {
    pub m: f64,
    pub rho: f64,
    pub n_eps: i64,
    pub alpha_max: u32,
    pub constants: Vec<ConstantEstimate>,
    /// Per derivative order, the largest sampled ε-exponent over |α| = k.
    pub n_per_order: Vec<Option<NetClass>>,
    pub verdict: Verdict,
    pub sample_spec: SampleSpec,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub envelope_form: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub form_verdicts: Vec<(String, Verdict)>,
}

impl ClassEstimate {
    pub fn max_drift(&self) -> f64 {
        self.constants.iter().map(|c| c.drift).fold(0.0, f64::max)
    }

    pub fn constant(&self, alpha: &[u32]) -> Option<f64> {
        self.constants.iter().find(|c| c.alpha == alpha).map(|c| c.c)
    }
}

fn ratio_drift(base: f64, other: f64) -> f64 {
    if !other.is_finite() || !base.is_finite() {
        return f64::INFINITY;
    }
    if other <= base {
        0.0
    } else if base == 0.0 {
        if other < 1e-300 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        other / base - 1.0
    }
}

struct Stability {
    c: f64,
    c_base: f64,
    c_box: f64,
    c_eps: f64,
    drift: f64,
}

fn stability(t: &SupTable, q: usize, eps: &[f64], n_half: usize, eps_factor: &dyn Fn(f64) -> f64) -> Stability {
    let mut c_base: f64 = 0.0;
    let mut c_box: f64 = 0.0;
    let mut c_eps: f64 = 0.0;
    for (k, &e) in eps.iter().enumerate() {
        let f = eps_factor(e);
        let vi = scaled(t.inner[k][q], f);
        let vo = scaled(t.outer[k][q], f).max(vi);
        if k < n_half {
            c_base = c_base.max(vi);
            c_box = c_box.max(vo);
        }
        c_eps = c_eps.max(vi);
    }
    let drift = ratio_drift(c_base, c_box).max(ratio_drift(c_base, c_eps));
    Stability {
        c: c_eps,
        c_base,
        c_box,
        c_eps,
        drift,
    }
}

fn scaled(v: f64, f: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v * f
    }
}

fn eps_class(t: &SupTable, q: usize, eps: &[f64]) -> Option<NetClass> {
    let samples: Vec<(f64, f64)> = eps
        .iter()
        .enumerate()
        .map(|(k, &e)| (e, t.inner[k][q].max(t.outer[k][q])))
        .collect();
    estimate_exponent(&samples, &EstimateOptions::default()).ok().map(|e| e.verdict)
}

fn class_rank(c: &NetClass) -> (u8, i64) {
    match c {
        NetClass::Negligible => (0, 0),
        NetClass::Moderate(n) => (1, *n),
        NetClass::NotModerate => (2, 0),
    }
}

fn per_order(constants: &[ConstantEstimate], alpha_max: u32) -> Vec<Option<NetClass>> {
    (0..=alpha_max)
        .map(|k| {
            let mut best: Option<NetClass> = None;
            for c in constants.iter().filter(|c| order(&c.alpha) == k) {
                let e = c.eps_class.clone()?;
                best = Some(match best {
                    Some(b) if class_rank(&b) >= class_rank(&e) => b,
                    _ => e,
                });
            }
            best
        })
        .collect()
}

fn finish_estimate(
    t: &SupTable,
    indices: &[Vec<u32>],
    spec: &SampleSpec,
    n_eps: i64,
) -> (Vec<ConstantEstimate>, Verdict) {
    let eps = spec.eps_grid();
    let n_half = spec.half_eps_grid().len();
    let factor = |e: f64| e.powi(n_eps as i32);
    let mut verdict = Verdict::Member;
    let constants: Vec<ConstantEstimate> = indices
        .iter()
        .enumerate()
        .map(|(q, g)| {
            let s = stability(t, q, &eps, n_half, &factor);
            let v = if s.c.is_finite() && s.c_box.is_finite() {
                verdict_from_drift(s.drift)
            } else {
                Verdict::NotMember
            };
            if v.rank() < verdict.rank() {
                verdict = v;
            }
            ConstantEstimate {
                alpha: g.clone(),
                c: s.c,
                c_base: s.c_base,
                c_doubled_box: s.c_box,
                c_extended_eps: s.c_eps,
                drift: s.drift,
                eps_class: eps_class(t, q, &eps),
            }
        })
        .collect();
    (constants, verdict)
}

/// Samples sup |∂^α a_ε(z)|·Λ(z)^{ρ|α|−m}·ε^N for |α| ≤ α_max on the box and
/// ε-grid of `spec`; Member when every constant is finite and moves by at most
/// 10% under box doubling and under extension of the ε-grid.
pub fn check_class(
    a: &dyn Sampled,
    w: &WeightFunction,
    m: f64,
    rho: f64,
    n_eps: i64,
    alpha_max: u32,
    spec: &SampleSpec,
) -> ClassEstimate {
    let dim = a.dim();
    let indices = multi_indices(dim, alpha_max);
    let orders: Vec<f64> = indices.iter().map(|g| order(g) as f64).collect();
    let quantity = |z: &[f64], d: &[Complex64], out: &mut [f64]| {
        let lam = w.value(z);
        for ((o, v), k) in out.iter_mut().zip(d).zip(&orders) {
            let n = v.norm();
            *o = if n == 0.0 { 0.0 } else { n * lam.powf(rho * k - m) };
        }
    };
    let (t, spec) = sup_table(a, &indices, spec, indices.len(), &quantity);
    let (constants, verdict) = finish_estimate(&t, &indices, &spec, n_eps);
    ClassEstimate {
        m,
        rho,
        n_eps,
        alpha_max,
        n_per_order: per_order(&constants, alpha_max),
        constants,
        verdict,
        sample_spec: spec,
        m_prime: None,
        envelope_form: None,
        form_verdicts: Vec::new(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NegligibleReport {
    pub verdict: Verdict,
    /// Decided by the coefficient rule without sampling.
    pub shortcut: bool,
    pub failed_at_q: Option<u32>,
    pub max_drift: f64,
    pub q_max: u32,
}

fn all_negligible(a: &dyn Sampled) -> bool {
    a.coefficient_classes()
        .map(|cs| cs.iter().all(|c| *c == NetClass::Negligible))
        .unwrap_or(false)
}

/// Negligibility of order m: sup |∂^α a_ε|·Λ^{ρ|α|−m}·ε^{−q} bounded for every
/// q ≤ q_max. Coefficients that are all exactly negligible decide Member.
#[allow(clippy::too_many_arguments)]
pub fn check_negligible(
    a: &dyn Sampled,
    w: &WeightFunction,
    m: f64,
    rho: f64,
    q_max: u32,
    alpha_max: u32,
    spec: &SampleSpec,
) -> NegligibleReport {
    if all_negligible(a) {
        return NegligibleReport {
            verdict: Verdict::Member,
            shortcut: true,
            failed_at_q: None,
            max_drift: 0.0,
            q_max,
        };
    }
    check_negligible_sampled(a, w, m, rho, q_max, alpha_max, spec)
}

/// [`check_negligible`] without the coefficient shortcut.
pub fn check_negligible_sampled(
    a: &dyn Sampled,
    w: &WeightFunction,
    m: f64,
    rho: f64,
    q_max: u32,
    alpha_max: u32,
    spec: &SampleSpec,
) -> NegligibleReport {
    let indices = multi_indices(a.dim(), alpha_max);
    let orders: Vec<f64> = indices.iter().map(|g| order(g) as f64).collect();
    let quantity = |z: &[f64], d: &[Complex64], out: &mut [f64]| {
        let lam = w.value(z);
        for ((o, v), k) in out.iter_mut().zip(d).zip(&orders) {
            let n = v.norm();
            *o = if n == 0.0 { 0.0 } else { n * lam.powf(rho * k - m) };
        }
    };
    let (t, spec) = sup_table(a, &indices, spec, indices.len(), &quantity);
    let eps = spec.eps_grid();
    let n_half = spec.half_eps_grid().len();
    let mut max_drift: f64 = 0.0;
    for q in 0..=q_max {
        let factor = |e: f64| e.powi(-(q as i32));
        let mut worst: f64 = 0.0;
        let mut finite = true;
        for k in 0..indices.len() {
            let s = stability(&t, k, &eps, n_half, &factor);
            finite &= s.c.is_finite() && s.c_box.is_finite();
            worst = worst.max(s.drift);
        }
        max_drift = max_drift.max(worst);
        let v = if finite { verdict_from_drift(worst) } else { Verdict::NotMember };
        if v != Verdict::Member {
            return NegligibleReport {
                verdict: v,
                shortcut: false,
                failed_at_q: Some(q),
                max_drift,
                q_max,
            };
        }
    }
    NegligibleReport {
        verdict: Verdict::Member,
        shortcut: false,
        failed_at_q: None,
        max_drift,
        q_max,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothingEntry {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub c: f64,
    pub drift: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub verdict: Verdict,
    pub shortcut: bool,
    pub n_eps: i64,
    pub order: u32,
    pub entries: Vec<SmoothingEntry>,
    pub sample_spec: SampleSpec,
}

/// Rapid decrease: sup ε^N |z^α ∂^β a_ε(z)| stable for |α| + |β| ≤ order.
pub fn check_smoothing(a: &dyn Sampled, order_max: u32, n_eps: i64, spec: &SampleSpec) -> SmoothingReport {
    if all_negligible(a) {
        return SmoothingReport {
            verdict: Verdict::Member,
            shortcut: true,
            n_eps,
            order: order_max,
            entries: Vec::new(),
            sample_spec: spec.clone(),
        };
    }
    let dim = a.dim();
    let betas = multi_indices(dim, order_max);
    let mut pairs: Vec<(Vec<u32>, usize)> = Vec::new();
    for (bi, b) in betas.iter().enumerate() {
        for al in multi_indices(dim, order_max - order(b)) {
            pairs.push((al, bi));
        }
    }
    let quantity = |z: &[f64], d: &[Complex64], out: &mut [f64]| {
        for (o, (al, bi)) in out.iter_mut().zip(&pairs) {
            let n = d[*bi].norm();
            *o = if n == 0.0 {
                0.0
            } else {
                n * al.iter().zip(z).map(|(&k, &v)| v.abs().powi(k as i32)).product::<f64>()
            };
        }
    };
    let (t, spec) = sup_table(a, &betas, spec, pairs.len(), &quantity);
    let eps = spec.eps_grid();
    let n_half = spec.half_eps_grid().len();
    let factor = |e: f64| e.powi(n_eps as i32);
    let mut verdict = Verdict::Member;
    let entries = pairs
        .iter()
        .enumerate()
        .map(|(q, (al, bi))| {
            let s = stability(&t, q, &eps, n_half, &factor);
            let v = if s.c.is_finite() && s.c_box.is_finite() {
                verdict_from_drift(s.drift)
            } else {
                Verdict::NotMember
            };
            if v.rank() < verdict.rank() {
                verdict = v;
            }
            SmoothingEntry {
                alpha: al.clone(),
                beta: betas[*bi].clone(),
                c: s.c,
                drift: s.drift,
            }
        })
        .collect();
    SmoothingReport {
        verdict,
        shortcut: false,
        n_eps,
        order: order_max,
        entries,
        sample_spec: spec,
    }
}

fn bracket_diff(x: &[f64], y: &[f64]) -> f64 {
    (1.0 + x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sqrt()
}

/// λ_{m,m′,k}(x, y, ξ) = Λ(x,ξ)^m ⟨x−y⟩^{m′} (1 + Λ(x,ξ)⟨x−y⟩^{−m′})^{−ρk}.
pub fn lambda_envelope(w: &WeightFunction, m: f64, m_prime: f64, rho: f64, k: f64, x: &[f64], y: &[f64], xi: &[f64]) -> f64 {
    let mut z = x.to_vec();
    z.extend_from_slice(xi);
    let lam = w.value(&z);
    let b = bracket_diff(x, y);
    lam.powf(m) * b.powf(m_prime) * (1.0 + lam * b.powf(-m_prime)).powf(-rho * k)
}

/// Which side of the envelope is used: λ(x,y,ξ), λ(y,x,ξ), or their minimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvelopeForm {
    Xy,
    Yx,
    Min,
}

impl EnvelopeForm {
    fn name(self) -> &'static str {
        match self {
            EnvelopeForm::Xy => "lambda(x,y,xi)",
            EnvelopeForm::Yx => "lambda(y,x,xi)",
            EnvelopeForm::Min => "min",
        }
    }
}

/// Largest m′ tried when none is claimed.
pub const M_PRIME_MAX: u32 = 4;

fn amplitude_estimate(
    a: &AmplitudeExpr,
    w: &WeightFunction,
    m: f64,
    m_prime: f64,
    rho: f64,
    n_eps: i64,
    alpha_max: u32,
    spec: &SampleSpec,
) -> Vec<(EnvelopeForm, ClassEstimate)> {
    let n = a.n();
    let indices = multi_indices(3 * n, alpha_max);
    let orders: Vec<f64> = indices.iter().map(|g| order(g) as f64).collect();
    let nk = indices.len();
    let quantity = |z: &[f64], d: &[Complex64], out: &mut [f64]| {
        let (x, rest) = z.split_at(n);
        let (y, xi) = rest.split_at(n);
        for (q, (v, k)) in d.iter().zip(&orders).enumerate() {
            let nv = v.norm();
            if nv == 0.0 {
                out[q] = 0.0;
                out[nk + q] = 0.0;
                out[2 * nk + q] = 0.0;
                continue;
            }
            let l1 = lambda_envelope(w, m, m_prime, rho, *k, x, y, xi);
            let l2 = lambda_envelope(w, m, m_prime, rho, *k, y, x, xi);
            out[q] = nv / l1;
            out[nk + q] = nv / l2;
            out[2 * nk + q] = nv / l1.min(l2);
        }
    };
    let (t, spec) = sup_table(a, &indices, spec, 3 * nk, &quantity);
    [EnvelopeForm::Xy, EnvelopeForm::Yx, EnvelopeForm::Min]
        .iter()
        .enumerate()
        .map(|(f, form)| {
            let sub = SupTable {
                inner: t.inner.iter().map(|r| r[f * nk..(f + 1) * nk].to_vec()).collect(),
                outer: t.outer.iter().map(|r| r[f * nk..(f + 1) * nk].to_vec()).collect(),
            };
            let (constants, verdict) = finish_estimate(&sub, &indices, &spec, n_eps);
            (
                *form,
                ClassEstimate {
                    m,
                    rho,
                    n_eps,
                    alpha_max,
                    n_per_order: per_order(&constants, alpha_max),
                    constants,
                    verdict,
                    sample_spec: spec.clone(),
                    m_prime: Some(m_prime),
                    envelope_form: Some(form.name().into()),
                    form_verdicts: Vec::new(),
                },
            )
        })
        .collect()
}

/// Amplitude class check against the λ envelope. The verdict and the m′ search
/// use the defining form λ(x,y,ξ); the symmetric form and the minimum form are
/// sampled at the same m′ and reported in `form_verdicts`. Without a claimed m′
/// the smallest passing m′ ∈ {0, …, M_PRIME_MAX} is searched.
#[allow(clippy::too_many_arguments)]
pub fn check_amplitude(
    a: &AmplitudeExpr,
    w: &WeightFunction,
    m: f64,
    m_prime: Option<f64>,
    rho: f64,
    n_eps: i64,
    alpha_max: u32,
    spec: &SampleSpec,
) -> ClassEstimate {
    let candidates: Vec<f64> = match m_prime {
        Some(v) => vec![v],
        None => (0..=M_PRIME_MAX).map(|k| k as f64).collect(),
    };
    let mut best: Option<ClassEstimate> = None;
    for mp in candidates {
        let forms = amplitude_estimate(a, w, m, mp, rho, n_eps, alpha_max, spec);
        let verdicts: Vec<(String, Verdict)> =
            forms.iter().map(|(f, e)| (f.name().to_string(), e.verdict)).collect();
        let mut top = forms.into_iter().next().expect("defining form").1;
        top.form_verdicts = verdicts;
        let done = top.verdict == Verdict::Member;
        best = match best {
            Some(b) if b.verdict.rank() >= top.verdict.rank() => Some(b),
            _ => Some(top),
        };
        if done {
            break;
        }
    }
    best.expect("at least one candidate")
}

/// A formal series Σ a_j with declared orders m_j.
#[derive(Clone, Debug)]
pub struct AsymptoticSeries {
    pub terms: Vec<(SymbolExpr, f64)>,
    pub m: f64,
    pub rho: f64,
    pub n_eps: i64,
    pub monotone: bool,
}

impl AsymptoticSeries {
    pub fn new(terms: Vec<(SymbolExpr, f64)>, rho: f64, n_eps: i64) -> Self {
        let m = terms.first().map(|t| t.1).unwrap_or(f64::NEG_INFINITY);
        let monotone = terms.windows(2).all(|w| w[1].1 <= w[0].1);
        AsymptoticSeries {
            terms,
            m,
            rho,
            n_eps,
            monotone,
        }
    }

    /// m̄_r = max_{j ≥ r} m_j (m_r itself for monotone series).
    pub fn order_after(&self, r: usize) -> f64 {
        self.terms[r.min(self.terms.len())..]
            .iter()
            .map(|t| t.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// check_class on each term at (m_j, ρ, N) with α_max = max(j, 2).
    pub fn estimate_constants(&self, w: &WeightFunction, spec: &SampleSpec) -> Vec<ClassEstimate> {
        self.terms
            .iter()
            .enumerate()
            .map(|(j, (a, mj))| check_class(a, w, *mj, self.rho, self.n_eps, (j as u32).max(2), spec))
            .collect()
    }
}

/// The realized sum a_ε(z) = Σ_j ψ(λ_j Λ(z)) a_{j,ε}(z).
#[derive(Clone, Debug)]
pub struct AsymptoticSum {
    n: usize,
    pub terms: Vec<SymbolExpr>,
    pub orders: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub weight: Arc<WeightFunction>,
}

/// λ_j = min(λ_{j−1}/2, 2^{−j}/max_{|γ|≤j} c_{j,γ}), starting from λ_{−1} = 1.
pub fn lambda_schedule(estimates: &[ClassEstimate]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(estimates.len());
    let mut prev: f64 = 1.0;
    for (j, e) in estimates.iter().enumerate() {
        let mut cmax: f64 = 0.0;
        for g in multi_indices(e.sample_spec_dim(), j as u32) {
            let c = e.constant(&g).ok_or_else(|| {
                Error::MissingConstants(format!("term {j}: no constant for multi-index {g:?}"))
            })?;
            if !c.is_finite() {
                return Err(Error::MissingConstants(format!("term {j}: constant for {g:?} is not finite")));
            }
            cmax = cmax.max(c);
        }
        let lam = if cmax > 0.0 {
            (prev / 2.0).min(2f64.powi(-(j as i32)) / cmax)
        } else {
            prev / 2.0
        };
        out.push(lam);
        prev = lam;
    }
    Ok(out)
}

impl ClassEstimate {
    fn sample_spec_dim(&self) -> usize {
        self.constants.iter().map(|c| c.alpha.len()).next().unwrap_or(0)
    }
}

/// Builds the evaluator of Σ ψ(λ_j Λ) a_j from per-term constant estimates.
pub fn asymptotic_sum(s: &AsymptoticSeries, w: &WeightFunction, estimates: &[ClassEstimate]) -> Result<AsymptoticSum> {
    if estimates.len() != s.terms.len() {
        return Err(Error::MissingConstants(format!(
            "{} terms but {} constant estimates",
            s.terms.len(),
            estimates.len()
        )));
    }
    let lambdas = lambda_schedule(estimates)?;
    AsymptoticSum::with_schedule(s, w, lambdas)
}

impl AsymptoticSum {
    pub fn with_schedule(s: &AsymptoticSeries, w: &WeightFunction, lambdas: Vec<f64>) -> Result<Self> {
        let n = s.terms.first().map(|t| t.0.n()).unwrap_or(w.dim() / 2);
        if lambdas.len() != s.terms.len() {
            return Err(Error::Input("one λ per term required".into()));
        }
        if s.terms.iter().any(|t| t.0.n() != n) || w.dim() != 2 * n {
            return Err(Error::Dimension {
                expected: 2 * n,
                got: w.dim(),
            });
        }
        Ok(AsymptoticSum {
            n,
            terms: s.terms.iter().map(|t| t.0.clone()).collect(),
            orders: s.terms.iter().map(|t| t.1).collect(),
            lambdas,
            weight: Arc::new(w.clone()),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Transition annuli {1 ≤ λ_j Λ ≤ 2} as Λ-intervals.
    pub fn annuli(&self) -> Vec<(f64, f64)> {
        self.lambdas.iter().map(|l| (1.0 / l, 2.0 / l)).collect()
    }

    pub fn compile(&self, eps: f64) -> CompiledSum<'_> {
        CompiledSum {
            sum: self,
            terms: self.terms.iter().map(|t| t.compile(eps)).collect(),
        }
    }

    pub fn eval(&self, z: &[f64], eps: f64) -> Complex64 {
        self.compile(eps).eval(z)
    }

    /// a − Σ_{j<r} a_j at z, summed as Σ_{j<r} (ψ_j − 1) a_j + Σ_{j≥r} ψ_j a_j so
    /// that saturated terms cancel exactly.
    pub fn partial_residual(&self, c: &CompiledSum<'_>, r: usize, z: &[f64]) -> Complex64 {
        let lam = self.weight.value(z);
        let mut v = Complex64::new(0.0, 0.0);
        for (j, (t, l)) in c.terms.iter().zip(&self.lambdas).enumerate() {
            let p = psi(l * lam);
            let f = if j < r { p - 1.0 } else { p };
            if f != 0.0 {
                v += t.eval(z) * f;
            }
        }
        v
    }

    /// Log-log fitted radial order of a − Σ_{j<r} a_j along the ray `dir` over
    /// `radii`, skipping radii inside any transition annulus. Returns the slope
    /// (in units of log Λ) and the radii used.
    pub fn audit_residual(&self, r: usize, eps: f64, dir: &[f64], radii: &[f64]) -> (f64, Vec<f64>) {
        let c = self.compile(eps);
        let nd = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let annuli = self.annuli();
        let mut samples = Vec::new();
        let mut used = Vec::new();
        for &rad in radii {
            let z: Vec<f64> = dir.iter().map(|v| v / nd * rad).collect();
            let lam = self.weight.value(&z);
            if annuli.iter().any(|(a, b)| lam >= *a && lam <= *b) {
                continue;
            }
            let v = self.partial_residual(&c, r, &z).norm();
            if v > 0.0 {
                samples.push((lam, v));
                used.push(rad);
            }
        }
        (loglog_slope(&samples), used)
    }
}

pub struct CompiledSum<'a> {
    sum: &'a AsymptoticSum,
    terms: Vec<CompiledSymbol>,
}

impl CompiledSum<'_> {
    pub fn eval(&self, z: &[f64]) -> Complex64 {
        let lam = self.sum.weight.value(z);
        let mut s = Complex64::new(0.0, 0.0);
        for (t, l) in self.terms.iter().zip(&self.sum.lambdas) {
            let c = psi(l * lam);
            if c != 0.0 {
                s += t.eval(z) * c;
            }
        }
        s
    }

    /// Jet including the derivatives of the cutoffs ψ(λ_j Λ).
    pub fn eval_jet(&self, space: &Arc<JetSpace>, z: &[f64]) -> Jet {
        let vars: Vec<Jet> = z.iter().enumerate().map(|(k, &v)| Jet::variable(space, k, v)).collect();
        let lam = self.sum.weight.jet(&vars);
        let lam0 = self.sum.weight.value(z);
        let mut s = Jet::constant(space, Complex64::new(0.0, 0.0));
        for (t, l) in self.terms.iter().zip(&self.sum.lambdas) {
            if l * lam0 <= 1.0 {
                continue;
            }
            let c = match &lam {
                Some(lj) => psi_jet(&lj.scale(Complex64::new(*l, 0.0))),
                None => Jet::constant(space, Complex64::new(psi(l * lam0), 0.0)),
            };
            s = s.add(&c.mul(&t.eval_jet(space, z)));
        }
        s
    }
}

struct SumPrepared<'a> {
    sum: &'a AsymptoticSum,
    space: Arc<JetSpace>,
    indices: Vec<Vec<u32>>,
}

struct SumAtEps<'a> {
    compiled: CompiledSum<'a>,
    p: &'a SumPrepared<'a>,
}

impl PointEval for SumAtEps<'_> {
    fn eval(&self, z: &[f64], out: &mut [Complex64]) {
        let j = self.compiled.eval_jet(&self.p.space, z);
        for (o, g) in out.iter_mut().zip(&self.p.indices) {
            *o = j.derivative(g);
        }
    }
}

impl Prepared for SumPrepared<'_> {
    fn at_eps<'a>(&'a self, eps: f64) -> Box<dyn PointEval + 'a> {
        Box::new(SumAtEps {
            compiled: self.sum.compile(eps),
            p: self,
        })
    }
}

impl Sampled for AsymptoticSum {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn prepare<'a>(&'a self, indices: &[Vec<u32>]) -> Box<dyn Prepared + 'a> {
        let ord = indices.iter().map(|g| order(g)).max().unwrap_or(0);
        Box::new(SumPrepared {
            sum: self,
            space: JetSpace::new(2 * self.n, ord),
            indices: indices.to_vec(),
        })
    }

    fn coefficient_classes(&self) -> Option<Vec<NetClass>> {
        let mut v = Vec::new();
        for t in &self.terms {
            v.extend(t.coefficient_classes()?);
        }
        Some(v)
    }
}

/// The difference of two realized sums, sampled through jets.
pub struct SumDifference<'a> {
    pub a: &'a AsymptoticSum,
    pub b: &'a AsymptoticSum,
}

struct DiffPrepared<'a> {
    a: Box<dyn Prepared + 'a>,
    b: Box<dyn Prepared + 'a>,
    len: usize,
}

struct DiffAtEps<'a> {
    a: Box<dyn PointEval + 'a>,
    b: Box<dyn PointEval + 'a>,
    len: usize,
}

impl PointEval for DiffAtEps<'_> {
    fn eval(&self, z: &[f64], out: &mut [Complex64]) {
        let mut tmp = vec![Complex64::new(0.0, 0.0); self.len];
        self.a.eval(z, out);
        self.b.eval(z, &mut tmp);
        for (o, t) in out.iter_mut().zip(tmp) {
            *o -= t;
        }
    }
}

impl Prepared for DiffPrepared<'_> {
    fn at_eps<'a>(&'a self, eps: f64) -> Box<dyn PointEval + 'a> {
        Box::new(DiffAtEps {
            a: self.a.at_eps(eps),
            b: self.b.at_eps(eps),
            len: self.len,
        })
    }
}

impl Sampled for SumDifference<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn prepare<'a>(&'a self, indices: &[Vec<u32>]) -> Box<dyn Prepared + 'a> {
        Box::new(DiffPrepared {
            a: self.a.prepare(indices),
            b: self.b.prepare(indices),
            len: indices.len(),
        })
    }
}

#[cfg(test)]
mod tests;
