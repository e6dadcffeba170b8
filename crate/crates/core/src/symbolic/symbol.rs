use super::poly::Poly;
use super::rational::{NumRational, RationalExpr};
use crate::coeff::{g_i, GaussRat};
use crate::cutoff;
use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};
use crate::nets::NetExpr;
use crate::weights::WeightFunction;
use num_complex::Complex64;
use std::sync::Arc;

/// Formal product Π ψ(|z|/R_i)^{k_i}; empty means no cutoff.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Cutoff {
    factors: Vec<(f64, u32)>,
}

impl Cutoff {
    pub fn none() -> Self {
        Cutoff::default()
    }

    pub fn radial(radius: f64, power: u32) -> Self {
        assert!(radius > 0.0, "cutoff radius must be positive");
        if power == 0 {
            return Cutoff::none();
        }
        Cutoff {
            factors: vec![(radius, power)],
        }
    }

    pub fn is_none(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[(f64, u32)] {
        &self.factors
    }

    pub fn mul(&self, o: &Cutoff) -> Cutoff {
        let mut f = self.factors.clone();
        for &(r, k) in &o.factors {
            match f.iter_mut().find(|(rr, _)| *rr == r) {
                Some((_, kk)) => *kk += k,
                None => f.push((r, k)),
            }
        }
        f.sort_by(|a, b| a.0.total_cmp(&b.0));
        Cutoff { factors: f }
    }

    /// Radius beyond which every factor equals 1.
    pub fn saturation_radius(&self) -> f64 {
        self.factors.iter().map(|(r, _)| 2.0 * r).fold(0.0, f64::max)
    }

    /// Radius inside which the cutoff vanishes.
    pub fn vanishing_radius(&self) -> f64 {
        self.factors.iter().map(|(r, _)| *r).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.factors
            .iter()
            .map(|&(r, k)| cutoff::radial(z, r).powi(k as i32))
            .product()
    }

    pub fn eval_jet(&self, z: &[Jet]) -> Jet {
        let sp = z[0].space().clone();
        let mut j = Jet::constant(&sp, Complex64::new(1.0, 0.0));
        for &(r, k) in &self.factors {
            j = j.mul(&cutoff::radial_jet(z, r).powi(k));
        }
        j
    }
}

/// One cutoff-weighted rational piece of a symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolPart {
    pub cutoff: Cutoff,
    pub body: RationalExpr,
}

/// Claimed class data (m, ρ, N) with respect to a weight.
#[derive(Clone, Debug)]
pub struct ClaimedClass {
    pub m: f64,
    pub rho: f64,
    pub n_eps: i64,
    pub weight: Arc<WeightFunction>,
}

/// A symbol a_ε(x, ξ) on ℝ^{2n} (variables x_1..x_n, ξ_1..ξ_n): a sum of rational
/// functions, each multiplied by a formal cutoff.
///
/// Derivatives treat the cutoffs as constants, which is exact wherever every
/// cutoff is saturated (|z| ≥ 2R); [`SymbolExpr::eval_jet`] includes the cutoff
/// derivatives for use inside the transition annulus.
#[derive(Clone, Debug)]
pub struct SymbolExpr {
    n: usize,
    parts: Vec<SymbolPart>,
    pub claimed: Option<ClaimedClass>,
}

pub fn symbol_var_names(n: usize) -> Vec<String> {
    let mut v: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    v.extend((1..=n).map(|i| format!("xi{i}")));
    v
}

pub fn amplitude_var_names(n: usize) -> Vec<String> {
    let mut v: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    v.extend((1..=n).map(|i| format!("y{i}")));
    v.extend((1..=n).map(|i| format!("xi{i}")));
    v
}

impl SymbolExpr {
    pub fn from_rational(n: usize, body: RationalExpr) -> Self {
        assert_eq!(body.nvars(), 2 * n, "symbol body must live on ℝ^{{2n}}");
        let mut s = SymbolExpr {
            n,
            parts: Vec::new(),
            claimed: None,
        };
        s.push(Cutoff::none(), body);
        s
    }

    pub fn from_poly(n: usize, p: Poly) -> Self {
        SymbolExpr::from_rational(n, RationalExpr::from_poly(p))
    }

    pub fn zero(n: usize) -> Self {
        SymbolExpr {
            n,
            parts: Vec::new(),
            claimed: None,
        }
    }

    pub fn constant(n: usize, c: NetExpr) -> Self {
        SymbolExpr::from_poly(n, Poly::constant(2 * n, c))
    }

    pub fn x(n: usize, i: usize) -> Self {
        SymbolExpr::from_poly(n, Poly::var(2 * n, i))
    }

    pub fn xi(n: usize, i: usize) -> Self {
        SymbolExpr::from_poly(n, Poly::var(2 * n, n + i))
    }

    pub fn with_cutoff(part_cutoff: Cutoff, n: usize, body: RationalExpr) -> Self {
        let mut s = SymbolExpr::zero(n);
        s.push(part_cutoff, body);
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parts(&self) -> &[SymbolPart] {
        &self.parts
    }

    fn push(&mut self, cutoff: Cutoff, body: RationalExpr) {
        if body.is_zero() {
            return;
        }
        if let Some(p) = self.parts.iter_mut().find(|p| p.cutoff == cutoff) {
            p.body = p.body.add(&body);
        } else {
            self.parts.push(SymbolPart { cutoff, body });
        }
        self.parts.retain(|p| !p.body.is_zero());
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn has_cutoff(&self) -> bool {
        self.parts.iter().any(|p| !p.cutoff.is_none())
    }

    /// |z| beyond which all cutoffs equal 1 (0 without cutoffs).
    pub fn saturation_radius(&self) -> f64 {
        self.parts
            .iter()
            .map(|p| p.cutoff.saturation_radius())
            .fold(0.0, f64::max)
    }

    /// The exact rational function the symbol equals for |z| ≥ saturation radius.
    pub fn outside_cutoff(&self) -> RationalExpr {
        self.parts
            .iter()
            .fold(RationalExpr::zero(2 * self.n), |acc, p| acc.add(&p.body))
    }

    /// The single rational body when no cutoff is present.
    pub fn as_rational(&self) -> Option<RationalExpr> {
        (!self.has_cutoff()).then(|| self.outside_cutoff())
    }

    pub fn as_poly(&self) -> Option<Poly> {
        self.as_rational().and_then(|r| r.as_poly().cloned())
    }

    pub fn is_polynomial(&self) -> bool {
        self.as_poly().is_some()
    }

    pub fn add(&self, o: &SymbolExpr) -> SymbolExpr {
        assert_eq!(self.n, o.n);
        let mut r = SymbolExpr {
            n: self.n,
            parts: self.parts.clone(),
            claimed: None,
        };
        for p in &o.parts {
            r.push(p.cutoff.clone(), p.body.clone());
        }
        r
    }

    pub fn sub(&self, o: &SymbolExpr) -> SymbolExpr {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> SymbolExpr {
        SymbolExpr {
            n: self.n,
            parts: self
                .parts
                .iter()
                .map(|p| SymbolPart {
                    cutoff: p.cutoff.clone(),
                    body: p.body.neg(),
                })
                .collect(),
            claimed: None,
        }
    }

    pub fn mul(&self, o: &SymbolExpr) -> SymbolExpr {
        assert_eq!(self.n, o.n);
        let mut r = SymbolExpr::zero(self.n);
        for a in &self.parts {
            for b in &o.parts {
                r.push(a.cutoff.mul(&b.cutoff), a.body.mul(&b.body));
            }
        }
        r
    }

    pub fn mul_rational(&self, q: &RationalExpr) -> SymbolExpr {
        self.map_bodies(|b| b.mul(q))
    }

    pub fn scale(&self, s: &NetExpr) -> SymbolExpr {
        self.map_bodies(|b| b.scale(s))
    }

    pub fn scale_gauss(&self, s: &GaussRat) -> SymbolExpr {
        self.map_bodies(|b| b.scale_gauss(s))
    }

    /// Multiplies every part by ψ(|z|/R)^k.
    pub fn times_cutoff(&self, c: &Cutoff) -> SymbolExpr {
        let mut r = SymbolExpr::zero(self.n);
        for p in &self.parts {
            r.push(p.cutoff.mul(c), p.body.clone());
        }
        r
    }

    fn map_bodies(&self, f: impl Fn(&RationalExpr) -> RationalExpr) -> SymbolExpr {
        let mut r = SymbolExpr::zero(self.n);
        for p in &self.parts {
            r.push(p.cutoff.clone(), f(&p.body));
        }
        r
    }

    /// ∂ in variable `var` (0..n are x, n..2n are ξ), cutoffs held constant.
    pub fn derivative(&self, var: usize) -> SymbolExpr {
        self.map_bodies(|b| b.derivative(var))
    }

    pub fn derivative_multi(&self, gamma: &[u32]) -> SymbolExpr {
        self.map_bodies(|b| b.derivative_multi(gamma))
    }

    /// ∂_ξ^α.
    pub fn d_xi(&self, alpha: &[u32]) -> SymbolExpr {
        let mut g = vec![0; 2 * self.n];
        g[self.n..].copy_from_slice(alpha);
        self.derivative_multi(&g)
    }

    /// ∂_x^α.
    pub fn d_x(&self, alpha: &[u32]) -> SymbolExpr {
        let mut g = vec![0; 2 * self.n];
        g[..self.n].copy_from_slice(alpha);
        self.derivative_multi(&g)
    }

    /// D_x^α = (−i∂_x)^α.
    pub fn big_d_x(&self, alpha: &[u32]) -> SymbolExpr {
        let k: u32 = alpha.iter().sum();
        self.d_x(alpha).scale_gauss(&crate::coeff::minus_i_pow(k))
    }

    /// Mathematical equality: parts with equal cutoffs have equal bodies.
    pub fn equals(&self, o: &SymbolExpr) -> bool {
        self.sub(o).is_zero()
    }

    pub fn compile(&self, eps: f64) -> CompiledSymbol {
        CompiledSymbol {
            n: self.n,
            parts: self
                .parts
                .iter()
                .map(|p| (p.cutoff.clone(), p.body.at_eps(eps)))
                .collect(),
        }
    }

    pub fn eval(&self, z: &[f64], eps: f64) -> Result<Complex64> {
        if z.len() != 2 * self.n {
            return Err(Error::Dimension {
                expected: 2 * self.n,
                got: z.len(),
            });
        }
        Ok(self.compile(eps).eval(z))
    }

    /// Exact value at a rational point outside the cutoff region, as a net in ε.
    pub fn eval_exact_outside(&self, z: &[GaussRat]) -> Option<NetExpr> {
        self.outside_cutoff().eval_exact(z)
    }

    pub fn fmt(&self) -> String {
        let names = symbol_var_names(self.n);
        if self.parts.is_empty() {
            return "0".into();
        }
        self.parts
            .iter()
            .map(|p| {
                let b = p.body.fmt_with(&names);
                if p.cutoff.is_none() {
                    b
                } else {
                    let c: Vec<String> = p
                        .cutoff
                        .factors()
                        .iter()
                        .map(|(r, k)| if *k == 1 { format!("psi(|z|/{r})") } else { format!("psi(|z|/{r})^{k}") })
                        .collect();
                    format!("{}*({})", c.join("*"), b)
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// A symbol with coefficients evaluated at a fixed ε.
#[derive(Clone, Debug)]
pub struct CompiledSymbol {
    n: usize,
    parts: Vec<(Cutoff, NumRational)>,
}

impl CompiledSymbol {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Inside the cutoff region a vanishing cutoff masks the rational part (including
    /// poles of the body there).
    pub fn eval(&self, z: &[f64]) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (c, r) in &self.parts {
            if c.is_none() {
                s += r.eval(z);
            } else {
                let w = c.eval(z);
                if w != 0.0 {
                    s += r.eval(z) * w;
                }
            }
        }
        s
    }

    /// Taylor jet at z up to `order`, including derivatives of the cutoffs.
    pub fn eval_jet(&self, space: &Arc<JetSpace>, z: &[f64]) -> Jet {
        let vars: Vec<Jet> = z.iter().enumerate().map(|(k, &v)| Jet::variable(space, k, v)).collect();
        let mut s = Jet::constant(space, Complex64::new(0.0, 0.0));
        for (c, r) in &self.parts {
            if c.is_none() {
                s = s.add(&r.eval_jet(&vars));
            } else {
                let w = c.eval_jet(&vars);
                if w.coeffs().iter().any(|v| *v != Complex64::new(0.0, 0.0)) {
                    s = s.add(&w.mul(&r.eval_jet(&vars)));
                }
            }
        }
        s
    }
}

/// An amplitude a_ε(x, y, ξ) with variables x_1..x_n, y_1..y_n, ξ_1..ξ_n.
#[derive(Clone, Debug)]
pub struct AmplitudeExpr {
    n: usize,
    pub body: RationalExpr,
    pub claimed: Option<(f64, f64, f64, i64)>,
}

impl AmplitudeExpr {
    pub fn new(n: usize, body: RationalExpr) -> Self {
        assert_eq!(body.nvars(), 3 * n, "amplitude body must live on ℝ^{{3n}}");
        AmplitudeExpr {
            n,
            body,
            claimed: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// a(x, y, ξ) = b(x, ξ) for a symbol b.
    pub fn from_symbol_x(b: &RationalExpr, n: usize) -> Self {
        let body = b.reshape(3 * n, |m| {
            let mut e = vec![0; 3 * n];
            e[..n].copy_from_slice(&m[..n]);
            e[2 * n..].copy_from_slice(&m[n..]);
            e
        });
        AmplitudeExpr::new(n, body)
    }

    /// a(x, y, ξ) = b(y, ξ).
    pub fn from_symbol_y(b: &RationalExpr, n: usize) -> Self {
        let body = b.reshape(3 * n, |m| {
            let mut e = vec![0; 3 * n];
            e[n..2 * n].copy_from_slice(&m[..n]);
            e[2 * n..].copy_from_slice(&m[n..]);
            e
        });
        AmplitudeExpr::new(n, body)
    }

    /// a(x, y, ξ) = b((1−τ)x + τy, ξ).
    pub fn from_symbol_mixed(b: &RationalExpr, n: usize, tau: &GaussRat) -> Result<Self> {
        let nv = 3 * n;
        let one_m = crate::coeff::g_one() - tau.clone();
        let mut images = Vec::with_capacity(2 * n);
        for i in 0..n {
            images.push(
                Poly::var(nv, i)
                    .scale_gauss(&one_m)
                    .add(&Poly::var(nv, n + i).scale_gauss(tau)),
            );
        }
        for i in 0..n {
            images.push(Poly::var(nv, 2 * n + i));
        }
        Ok(AmplitudeExpr::new(n, b.substitute(&images)?))
    }

    pub fn fmt(&self) -> String {
        self.body.fmt_with(&amplitude_var_names(self.n))
    }
}

/// i as a net, for building expressions.
pub fn net_i() -> NetExpr {
    NetExpr::constant(g_i())
}
