//! θ-symbols, change of θ, composition, hypoellipticity certificates and the
//! parametrix recursion.

use crate::classes::AsymptoticSeries;
use crate::coeff::{g_rat, g_re, minus_i_pow, rat, rat_to_f64, GaussRat, Rat};
use crate::error::{Error, Result};
use crate::multi_index::{multi_factorial, multi_indices, of_degree, order};
use crate::nets::NetExpr;
use crate::sampling::{dyadic_radii, loglog_slope, SampleSpec};
use crate::symbolic::{AmplitudeExpr, Cutoff, Poly, RationalExpr, SymbolExpr};
use crate::weights::WeightFunction;
use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default truncation order.
pub const DEFAULT_K: u32 = 4;

/// The θ-symbol of an amplitude: terms[j] collects the contributions of total
/// derivative order j.
#[derive(Clone, Debug)]
pub struct ThetaSymbol {
    pub theta: Vec<Rat>,
    pub terms: Vec<SymbolExpr>,
    /// True when the expansion is exactly finite (no truncation happened).
    pub exact: bool,
    pub source: Option<AmplitudeExpr>,
}

impl ThetaSymbol {
    pub fn n(&self) -> usize {
        self.theta.len()
    }

    /// Σ_j terms[j].
    pub fn total(&self) -> SymbolExpr {
        self.terms
            .iter()
            .fold(SymbolExpr::zero(self.n()), |acc, t| acc.add(t))
    }

    /// A finite θ-symbol given by a single symbol.
    pub fn from_symbol(b: &SymbolExpr, theta: Vec<Rat>) -> Self {
        ThetaSymbol {
            theta,
            terms: vec![b.clone()],
            exact: true,
            source: None,
        }
    }
}

fn theta_pow(theta: &[Rat], beta: &[u32]) -> Rat {
    theta
        .iter()
        .zip(beta)
        .fold(Rat::one(), |acc, (t, &b)| acc * num_traits::pow(t.clone(), b as usize))
}

fn restrict_diagonal(r: &RationalExpr, n: usize) -> Result<RationalExpr> {
    let nv = 2 * n;
    let mut images = Vec::with_capacity(3 * n);
    for i in 0..n {
        images.push(Poly::var(nv, i));
    }
    for i in 0..n {
        images.push(Poly::var(nv, i));
    }
    for i in 0..n {
        images.push(Poly::var(nv, n + i));
    }
    r.substitute(&images)
}

fn amplitude_degree(a: &AmplitudeExpr) -> Option<u32> {
    a.body.as_poly().map(|p| p.total_degree())
}

/// b_θ ∼ Σ_{β,γ} ((−1)^{|β|}/(β!γ!)) θ^β (1−θ)^γ (∂_ξ^{β+γ} D_x^β D_y^γ a)|_{y=x}.
///
/// Polynomial amplitudes give an exactly finite expansion; otherwise `k` bounds
/// the total order |β+γ| (default [`DEFAULT_K`]).
pub fn theta_symbol(a: &AmplitudeExpr, theta: &[Rat], k: Option<u32>) -> Result<ThetaSymbol> {
    let n = a.n();
    if theta.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: theta.len(),
        });
    }
    let deg = amplitude_degree(a);
    let kmax = match (deg, k) {
        (Some(d), Some(k)) => d.min(k),
        (Some(d), None) => d,
        (None, Some(k)) => k,
        (None, None) => DEFAULT_K,
    };
    let exact = deg.is_some_and(|d| d <= kmax);
    let one_minus: Vec<Rat> = theta.iter().map(|t| Rat::one() - t).collect();
    let mut terms = Vec::new();
    for j in 0..=kmax {
        let mut acc = RationalExpr::zero(2 * n);
        for split in 0..=j {
            for beta in of_degree(n, split) {
                let tb = theta_pow(theta, &beta);
                if tb.is_zero() {
                    continue;
                }
                for gamma in of_degree(n, j - split) {
                    let tg = theta_pow(&one_minus, &gamma);
                    if tg.is_zero() {
                        continue;
                    }
                    let mut idx = vec![0u32; 3 * n];
                    for i in 0..n {
                        idx[i] = beta[i];
                        idx[n + i] = gamma[i];
                        idx[2 * n + i] = beta[i] + gamma[i];
                    }
                    let d = a.body.derivative_multi(&idx);
                    if d.is_zero() {
                        continue;
                    }
                    let sign = if split % 2 == 0 { Rat::one() } else { -Rat::one() };
                    let coef = g_re(sign * tb.clone() * tg / Rat::from_integer((multi_factorial(&beta) * multi_factorial(&gamma)).into()))
                        * minus_i_pow(j);
                    acc = acc.add(&restrict_diagonal(&d, n)?.scale_gauss(&coef));
                }
            }
        }
        terms.push(SymbolExpr::from_rational(n, acc));
    }
    Ok(ThetaSymbol {
        theta: theta.to_vec(),
        terms,
        exact,
        source: Some(a.clone()),
    })
}

fn symbol_degree(b: &SymbolExpr) -> Option<u32> {
    if b.has_cutoff() {
        return None;
    }
    b.as_poly().map(|p| p.total_degree())
}

/// b_{θ₂} ∼ Σ_α (1/α!)(θ₁−θ₂)^α ∂_ξ^α D_x^α b_{θ₁}, applied term by term so
/// that the output stays graded by derivative order.
pub fn change_theta(b: &ThetaSymbol, theta2: &[Rat], k: Option<u32>) -> Result<ThetaSymbol> {
    let n = b.n();
    if theta2.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: theta2.len(),
        });
    }
    let diff: Vec<Rat> = b.theta.iter().zip(theta2).map(|(a, c)| a - c).collect();
    let degs: Vec<Option<u32>> = b.terms.iter().map(symbol_degree).collect();
    let all_poly = degs.iter().all(|d| d.is_some());
    let last = b.terms.len().saturating_sub(1) as u32;
    let natural = degs
        .iter()
        .enumerate()
        .map(|(i, d)| i as u32 + d.unwrap_or(0))
        .max()
        .unwrap_or(0);
    let kmax = match (all_poly, k) {
        (true, Some(k)) => natural.min(k).max(last),
        (true, None) => natural,
        (false, k) => k.unwrap_or(DEFAULT_K).max(last),
    };
    let complete = all_poly && kmax >= natural;
    let mut terms: Vec<SymbolExpr> = (0..=kmax).map(|_| SymbolExpr::zero(n)).collect();
    for (i, t) in b.terms.iter().enumerate() {
        for a in multi_indices(n, kmax.saturating_sub(i as u32)) {
            let j = i + order(&a) as usize;
            let c = theta_pow(&diff, &a);
            if c.is_zero() {
                continue;
            }
            let d = t.d_xi(&a).big_d_x(&a);
            if d.is_zero() {
                continue;
            }
            let coef = g_re(c / Rat::from_integer(multi_factorial(&a).into()));
            terms[j] = terms[j].add(&d.scale_gauss(&coef));
        }
    }
    while terms.len() > 1 && terms.last().is_some_and(|t| t.is_zero()) {
        terms.pop();
    }
    Ok(ThetaSymbol {
        theta: theta2.to_vec(),
        terms,
        exact: b.exact && complete,
        source: b.source.clone(),
    })
}

fn claimed_or_degree(b: &SymbolExpr) -> (f64, f64, i64) {
    match &b.claimed {
        Some(c) => (c.m, c.rho, c.n_eps),
        None => {
            let m = symbol_degree(b).unwrap_or(0) as f64;
            let n = b
                .parts()
                .iter()
                .flat_map(|p| p.body.numerator().terms().map(|(_, c)| c.min_moderate_power()).collect::<Vec<_>>())
                .flatten()
                .map(|p| (-p).ceil().to_integer())
                .max()
                .unwrap_or(0)
                .max(0);
            (m, 1.0, n)
        }
    }
}

/// The composition series Σ_α (1/α!) ∂_ξ^α b′ · D_x^α b″, grouped by |α|.
///
/// Term orders come from the claimed classes (m′ + m″ − 2ρ|α|, N′ + N″); a
/// symbol without a claim is read as a polynomial of its degree with ρ = 1.
pub fn compose(b1: &SymbolExpr, b2: &SymbolExpr, k: Option<u32>) -> Result<AsymptoticSeries> {
    let n = b1.n();
    if b2.n() != n {
        return Err(Error::Dimension {
            expected: n,
            got: b2.n(),
        });
    }
    let kmax = match (symbol_degree(b1), k) {
        (Some(d), Some(k)) => d.min(k),
        (Some(d), None) => d,
        (None, Some(k)) => k,
        (None, None) => DEFAULT_K,
    };
    let (m1, r1, n1) = claimed_or_degree(b1);
    let (m2, r2, n2) = claimed_or_degree(b2);
    let rho = r1.min(r2);
    let terms = (0..=kmax)
        .map(|j| {
            let t = of_degree(n, j).par_iter().map(|a| compose_term(b1, b2, a)).reduce(
                || SymbolExpr::zero(n),
                |x, y| x.add(&y),
            );
            (t, m1 + m2 - 2.0 * rho * j as f64)
        })
        .collect();
    Ok(AsymptoticSeries::new(terms, rho, n1 + n2))
}

fn compose_term(b1: &SymbolExpr, b2: &SymbolExpr, a: &[u32]) -> SymbolExpr {
    let l = b1.d_xi(a);
    if l.is_zero() {
        return SymbolExpr::zero(b1.n());
    }
    let r = b2.big_d_x(a);
    if r.is_zero() {
        return SymbolExpr::zero(b1.n());
    }
    l.mul(&r).scale_gauss(&g_rat(1, multi_factorial(a) as i64))
}

/// Full composition Σ_α (1/α!) ∂_ξ^α p · D_x^α a for polynomial a (the sum is
/// finite because D_x^α a vanishes once |α| exceeds the x-degree).
pub fn compose_full_left(p: &SymbolExpr, a: &SymbolExpr) -> Result<SymbolExpr> {
    let deg = a
        .as_poly()
        .map(|q| q.total_degree())
        .ok_or_else(|| Error::Input("full composition needs a polynomial right factor".into()))?;
    let n = a.n();
    Ok((0..=deg)
        .flat_map(|j| of_degree(n, j))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|al| compose_term(p, a, al))
        .reduce(|| SymbolExpr::zero(n), |x, y| x.add(&y)))
}

/// Σ_α (1/α!) ∂_ξ^α a · D_x^α q for polynomial a.
pub fn compose_full_right(a: &SymbolExpr, q: &SymbolExpr) -> Result<SymbolExpr> {
    let deg = a
        .as_poly()
        .map(|p| p.total_degree())
        .ok_or_else(|| Error::Input("full composition needs a polynomial left factor".into()))?;
    let n = a.n();
    Ok((0..=deg)
        .flat_map(|j| of_degree(n, j))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|al| compose_term(a, q, al))
        .reduce(|| SymbolExpr::zero(n), |x, y| x.add(&y)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum HypoVerdict {
    Hypoelliptic,
    Elliptic,
    Fail { reason: String, witness: Vec<f64>, eps: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypoCertificate {
    pub l: f64,
    pub m: f64,
    pub rho: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "N")]
    pub n_eps: i64,
    pub lower_constant: f64,
    pub lower_constant_doubled: f64,
    /// (|γ|, c_γ, c_γ on the doubled range).
    pub derivative_constants: Vec<(u32, f64, f64)>,
    pub l_max: f64,
    pub verdict: HypoVerdict,
}

impl HypoCertificate {
    pub fn passed(&self) -> bool {
        !matches!(self.verdict, HypoVerdict::Fail { .. })
    }
}

/// Largest derivative order checked for the derivative bounds.
pub const HYPO_GAMMA_MAX: u32 = 3;
/// Allowed relative change of a certificate constant under range doubling.
pub const HYPO_DRIFT: f64 = 0.25;

fn unit(d: &[f64]) -> Vec<f64> {
    let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    d.iter().map(|v| v / n).collect()
}

fn certificate_points(dim: usize, r: f64, l_max: f64, n_random: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for j in 0..dim {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[j] = s;
            dirs.push(d);
        }
    }
    for j in 0..dim {
        for k in j + 1..dim {
            for (a, b) in [(1.0, 1.0), (1.0, -1.0), (0.6, 0.8), (-0.8, 0.6), (0.28, 0.96), (0.96, -0.28)] {
                let mut d = vec![0.0; dim];
                d[j] = a;
                d[k] = b;
                dirs.push(unit(&d));
            }
        }
    }
    let mut pts = Vec::new();
    // just outside the excluded ball first, so witnesses are reported there
    for d in &dirs {
        pts.push(d.iter().map(|v| v * (r + 1.0)).collect());
    }
    let radii = dyadic_radii(r.max(1e-3).log2(), l_max.log2(), 4);
    for d in &dirs {
        for &rad in &radii {
            if rad >= r {
                pts.push(d.iter().map(|v| v * rad).collect());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4e11);
    for _ in 0..n_random {
        let d: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0f64)).collect();
        if d.iter().all(|v| *v == 0.0) {
            continue;
        }
        let d = unit(&d);
        let lo = r.max(1e-3).ln();
        let rad = (lo + rng.random_range(0.0..=1.0f64) * (l_max.ln() - lo)).exp();
        pts.push(d.iter().map(|v| v * rad).collect());
    }
    pts
}

/// ε-exponent N of the lower bound |a_ε| ≥ c Λ^l ε^N, read from the
/// coefficients: the largest positive ε-power, rounded up.
fn lower_eps_exponent(a: &SymbolExpr) -> i64 {
    a.parts()
        .iter()
        .flat_map(|p| p.body.numerator().terms().map(|(_, c)| c.max_moderate_power()).collect::<Vec<_>>())
        .flatten()
        .map(|p: Rational64| p.ceil().to_integer())
        .max()
        .unwrap_or(0)
        .max(0)
}

struct CertScan {
    lower: f64,
    lower_at: (Vec<f64>, f64),
    deriv: Vec<f64>,
    deriv_at: Vec<(Vec<f64>, f64)>,
}

fn cert_scan(a: &SymbolExpr, w: &WeightFunction, l: f64, rho: f64, n_eps: i64, pts: &[Vec<f64>], eps: &[f64]) -> CertScan {
    let dim = 2 * a.n();
    let gammas: Vec<Vec<u32>> = multi_indices(dim, HYPO_GAMMA_MAX).into_iter().skip(1).collect();
    let derivs: Vec<SymbolExpr> = gammas.par_iter().map(|g| a.derivative_multi(g)).collect();
    let mut scan = CertScan {
        lower: f64::INFINITY,
        lower_at: (Vec::new(), 0.0),
        deriv: vec![0.0; HYPO_GAMMA_MAX as usize + 1],
        deriv_at: vec![(Vec::new(), 0.0); HYPO_GAMMA_MAX as usize + 1],
    };
    for &e in eps {
        let ca = a.compile(e);
        let cd: Vec<_> = derivs.iter().map(|d| d.compile(e)).collect();
        let ef = e.powi(n_eps as i32);
        let vals: Vec<(f64, Vec<f64>)> = pts
            .par_iter()
            .map(|z| {
                let lam = w.value(z);
                let av = ca.eval(z).norm();
                let low = av / (lam.powf(l) * ef);
                let mut dv = vec![0.0f64; HYPO_GAMMA_MAX as usize + 1];
                for (g, c) in gammas.iter().zip(&cd) {
                    let k = order(g) as usize;
                    let v = c.eval(z).norm();
                    let q = if v == 0.0 { 0.0 } else { v * lam.powf(rho * k as f64) / av };
                    let q = if q.is_nan() { f64::INFINITY } else { q };
                    dv[k] = dv[k].max(q);
                }
                (low, dv)
            })
            .collect();
        for (z, (low, dv)) in pts.iter().zip(vals) {
            if low < scan.lower {
                scan.lower = low;
                scan.lower_at = (z.clone(), e);
            }
            for k in 1..dv.len() {
                if dv[k] > scan.deriv[k] {
                    scan.deriv[k] = dv[k];
                    scan.deriv_at[k] = (z.clone(), e);
                }
            }
        }
    }
    scan
}

/// Samples |z| ∈ [R, L_max] along rays and random directions, over the ε-grid
/// of `spec` (L_max = spec.half_width), for the lower bound |a_ε| ≥ cΛ^l ε^N
/// and the derivative bounds |∂^γ a_ε| ≤ c_γ |a_ε| Λ^{−ρ|γ|}, |γ| ≤ 3. Every
/// constant must survive doubling of L_max within 25%.
pub fn certify_hypoelliptic(a: &SymbolExpr, w: &WeightFunction, l: f64, r: f64, spec: &SampleSpec) -> Result<HypoCertificate> {
    let claimed = a
        .claimed
        .clone()
        .ok_or_else(|| Error::Certificate("the symbol needs a claimed class (m, rho, N)".into()))?;
    if w.dim() != 2 * a.n() {
        return Err(Error::Dimension {
            expected: 2 * a.n(),
            got: w.dim(),
        });
    }
    if l > claimed.m {
        return Err(Error::Input(format!("l = {l} exceeds m = {}", claimed.m)));
    }
    let (m, rho) = (claimed.m, claimed.rho);
    let n_eps = lower_eps_exponent(a);
    let l_max = spec.half_width.max(2.0 * r + 2.0);
    let dim = 2 * a.n();
    let eps = spec.eps_grid();
    let p1 = certificate_points(dim, r, l_max, spec.n_random / 2, spec.seed);
    let p2 = certificate_points(dim, r, 2.0 * l_max, spec.n_random / 2, spec.seed.wrapping_add(1));
    let s1 = cert_scan(a, w, l, rho, n_eps, &p1, &eps);
    let s2 = cert_scan(a, w, l, rho, n_eps, &p2, &eps);
    let lower2 = s1.lower.min(s2.lower);
    let mut derivative_constants = Vec::new();
    for k in 1..=HYPO_GAMMA_MAX {
        let (c1, c2) = (s1.deriv[k as usize], s1.deriv[k as usize].max(s2.deriv[k as usize]));
        derivative_constants.push((k, c1, c2));
    }
    let fmt_z = |z: &[f64]| format!("{z:?}");
    let mut verdict = if !(s1.lower > 0.0) || !(lower2 > 0.0) {
        let (p, e) = if !(s1.lower > 0.0) { s1.lower_at.clone() } else { s2.lower_at.clone() };
        HypoVerdict::Fail {
            reason: format!("lower bound violated: |a| = 0 at z = {}", fmt_z(&p)),
            witness: p,
            eps: e,
        }
    } else if lower2 < s1.lower / (1.0 + HYPO_DRIFT) {
        let (p, e) = s2.lower_at.clone();
        HypoVerdict::Fail {
            reason: format!(
                "lower bound not stable: constant drops from {:.4e} to {:.4e} at z = {}",
                s1.lower,
                lower2,
                fmt_z(&p)
            ),
            witness: p,
            eps: e,
        }
    } else if l == m {
        HypoVerdict::Elliptic
    } else {
        HypoVerdict::Hypoelliptic
    };
    if !matches!(verdict, HypoVerdict::Fail { .. }) {
        for (k, c1, c2) in &derivative_constants {
            let bad = !c2.is_finite() || (*c1 > 0.0 && *c2 > c1 * (1.0 + HYPO_DRIFT)) || (*c1 == 0.0 && *c2 > 0.0);
            if bad {
                let (p, e) = if s2.deriv[*k as usize] > s1.deriv[*k as usize] {
                    s2.deriv_at[*k as usize].clone()
                } else {
                    s1.deriv_at[*k as usize].clone()
                };
                verdict = HypoVerdict::Fail {
                    reason: format!("derivative bound of order {k} not stable: {c1:.4e} -> {c2:.4e} at z = {}", fmt_z(&p)),
                    witness: p,
                    eps: e,
                };
                break;
            }
        }
    }
    Ok(HypoCertificate {
        l,
        m,
        rho,
        r,
        n_eps,
        lower_constant: s1.lower,
        lower_constant_doubled: lower2,
        derivative_constants,
        l_max,
        verdict,
    })
}

/// a + ε^{N+N′} b for b of order m′ < l; the claimed class of a is kept.
pub fn perturb_hypoelliptic(
    a: &SymbolExpr,
    cert: &HypoCertificate,
    b: &SymbolExpr,
    m_prime: f64,
    n_prime: i64,
) -> Result<SymbolExpr> {
    if m_prime >= cert.l {
        return Err(Error::Input(format!(
            "perturbation order m' = {m_prime} must be below l = {}",
            cert.l
        )));
    }
    if b.is_zero() {
        return Ok(a.clone());
    }
    let f = NetExpr::eps_pow(Rational64::from_integer(cert.n_eps + n_prime));
    let mut r = a.add(&b.scale(&f));
    r.claimed = a.claimed.clone();
    Ok(r)
}

#[derive(Clone, Debug)]
pub struct Parametrix {
    pub terms: Vec<SymbolExpr>,
    pub truncation_order: u32,
    pub source: SymbolExpr,
    /// Full composition of Σ_{k≤K} p_k with a, minus 1, outside the cutoff.
    pub composed_residual: RationalExpr,
    pub cutoff_radius: f64,
    pub side: Side,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Parametrix {
    pub fn n(&self) -> usize {
        self.source.n()
    }

    pub fn sum(&self) -> SymbolExpr {
        self.terms
            .iter()
            .fold(SymbolExpr::zero(self.n()), |acc, t| acc.add(t))
    }

    /// Σ_{k≤K} p_k for a smaller K.
    pub fn partial_sum(&self, k: u32) -> SymbolExpr {
        self.terms
            .iter()
            .take(k as usize + 1)
            .fold(SymbolExpr::zero(self.n()), |acc, t| acc.add(t))
    }

    /// Fitted radial decay order (in units of log Λ) of the composed residual
    /// along the ray through `dir`, evaluated exactly at dyadic radii.
    pub fn residual_order(&self, w: &WeightFunction, dir: &[Rat], radii_log2: (i32, i32), per_octave: u32) -> f64 {
        residual_order(&self.composed_residual, w, dir, radii_log2, per_octave)
    }
}

/// Exact evaluation of r at t·dir for t = 2^{k/per_octave}, fitted in log-log
/// against Λ(t·dir). Exact arithmetic avoids the cancellation in residuals.
pub fn residual_order(r: &RationalExpr, w: &WeightFunction, dir: &[Rat], radii_log2: (i32, i32), per_octave: u32) -> f64 {
    let samples: Vec<(f64, f64)> = residual_samples(r, w, dir, radii_log2, per_octave);
    loglog_slope(&samples)
}

/// (Λ(z), |r(z)|) at the exact ray points used by [`residual_order`].
pub fn residual_samples(r: &RationalExpr, w: &WeightFunction, dir: &[Rat], radii_log2: (i32, i32), per_octave: u32) -> Vec<(f64, f64)> {
    let steps: Vec<i32> = ((radii_log2.0 * per_octave as i32)..=(radii_log2.1 * per_octave as i32)).collect();
    steps
        .par_iter()
        .filter_map(|&s| {
            // exact rational t close to 2^{s/per_octave}
            let tf = 2f64.powf(s as f64 / per_octave as f64);
            let t = Rat::new(
                num_bigint::BigInt::from((tf * 1024.0).round() as i64),
                num_bigint::BigInt::from(1024),
            );
            let z: Vec<GaussRat> = dir.iter().map(|d| g_re(d * &t)).collect();
            let zf: Vec<f64> = dir.iter().map(|d| rat_to_f64(&(d * &t))).collect();
            let v = r.eval_exact(&z)?;
            let val = v.eval(0.5).norm();
            (val > 0.0).then(|| (w.value(&zf), val))
        })
        .collect()
}

fn invert_with_cutoff(a: &SymbolExpr, r: f64) -> Result<SymbolExpr> {
    let body = a
        .as_rational()
        .ok_or_else(|| Error::NotInvertible("the symbol must not carry a cutoff".into()))?;
    let inv = body.recip()?;
    Ok(SymbolExpr::with_cutoff(Cutoff::radial(r, 1), a.n(), inv))
}

/// Left parametrix: p₀ = ψ(|z|/R)a⁻¹ and
/// p_k = −{Σ_{|γ|+j=k, j<k} (1/γ!) ∂_ξ^γ p_j · D_x^γ a} p₀.
pub fn parametrix(a: &SymbolExpr, cert: &HypoCertificate, k: u32) -> Result<Parametrix> {
    build_parametrix(a, cert, k, Side::Left)
}

/// Right parametrix by the mirrored recursion
/// q_k = −q₀ {Σ_{|γ|+j=k, j<k} (1/γ!) ∂_ξ^γ a · D_x^γ q_j}.
pub fn right_parametrix(a: &SymbolExpr, cert: &HypoCertificate, k: u32) -> Result<Parametrix> {
    build_parametrix(a, cert, k, Side::Right)
}

fn build_parametrix(a: &SymbolExpr, cert: &HypoCertificate, k: u32, side: Side) -> Result<Parametrix> {
    if !cert.passed() {
        return Err(Error::Certificate(format!("certificate failed: {:?}", cert.verdict)));
    }
    if !a.is_polynomial() {
        return Err(Error::Input("parametrix needs a polynomial symbol".into()));
    }
    let n = a.n();
    let p0 = invert_with_cutoff(a, cert.r)?;
    let mut terms = vec![p0.clone()];
    for kk in 1..=k {
        let mut s = SymbolExpr::zero(n);
        for (j, pj) in terms.iter().enumerate() {
            let g_ord = kk - j as u32;
            let parts: Vec<SymbolExpr> = of_degree(n, g_ord)
                .par_iter()
                .map(|g| match side {
                    Side::Left => compose_term(pj, a, g),
                    Side::Right => compose_term(a, pj, g),
                })
                .collect();
            for p in parts {
                s = s.add(&p);
            }
        }
        terms.push(s.mul(&p0).neg());
    }
    let total = terms.iter().fold(SymbolExpr::zero(n), |acc, t| acc.add(t));
    let comp = match side {
        Side::Left => compose_full_left(&total, a)?,
        Side::Right => compose_full_right(a, &total)?,
    };
    let composed_residual = comp.outside_cutoff().sub(&RationalExpr::one(2 * n));
    Ok(Parametrix {
        terms,
        truncation_order: k,
        source: a.clone(),
        composed_residual,
        cutoff_radius: cert.r,
        side,
    })
}

/// Parses θ entries such as "0", "1/2", "1".
pub fn parse_theta(s: &str, n: usize) -> Result<Vec<Rat>> {
    let parts: Vec<&str> = s.split(',').map(|p| p.trim()).collect();
    let one = |p: &str| -> Result<Rat> {
        let (a, b) = match p.split_once('/') {
            Some((a, b)) => (a, b),
            None => (p, "1"),
        };
        let a: i64 = a.trim().parse().map_err(|_| Error::Input(format!("bad theta entry {p:?}")))?;
        let b: i64 = b.trim().parse().map_err(|_| Error::Input(format!("bad theta entry {p:?}")))?;
        if b == 0 {
            return Err(Error::Input("zero denominator in theta".into()));
        }
        Ok(rat(a, b))
    };
    let v: Vec<Rat> = parts.iter().map(|p| one(p)).collect::<Result<_>>()?;
    match v.len() {
        1 => Ok(vec![v[0].clone(); n]),
        l if l == n => Ok(v),
        l => Err(Error::Dimension { expected: n, got: l }),
    }
}

/// Formats a θ vector for reports.
pub fn fmt_theta(t: &[Rat]) -> String {
    t.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
}

/// True when every entry of θ lies in [0, 1].
pub fn theta_in_unit_box(t: &[Rat]) -> bool {
    t.iter().all(|r| !r.is_negative() && *r <= Rat::one())
}

#[cfg(test)]
mod tests;
