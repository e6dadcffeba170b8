use crate::coeff::{fmt_gauss, g_inv, g_is_one, g_is_zero, g_one, g_to_c64, rat_to_f64, GaussRat};
use crate::coeff::rat_from_r64;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// The (p, k) label of a term c·ε^p·exp(−1/ε)^k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetKey {
    pub eps_power: Rational64,
    pub negl: u32,
}

impl NetKey {
    pub fn new(eps_power: Rational64, negl: u32) -> Self {
        NetKey { eps_power, negl }
    }

    pub fn unit() -> Self {
        NetKey::new(Rational64::zero(), 0)
    }

    /// ε^p·exp(−k/ε), evaluated in log space so that 0·∞ never occurs.
    pub fn weight(&self, eps: f64) -> f64 {
        let p = *self.eps_power.numer() as f64 / *self.eps_power.denom() as f64;
        if p == 0.0 && self.negl == 0 {
            return 1.0;
        }
        (p * eps.ln() - self.negl as f64 / eps).exp()
    }

    fn combine(&self, o: &NetKey) -> NetKey {
        NetKey::new(self.eps_power + o.eps_power, self.negl + o.negl)
    }
}

/// Σ c·ε^p·exp(−1/ε)^k with Gaussian-rational c, kept in normal form
/// (distinct (p, k), no zero coefficients).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NetExpr {
    terms: BTreeMap<NetKey, GaussRat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "N")]
pub enum NetClass {
    Moderate(i64),
    Negligible,
    NotModerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetOp {
    Add,
    Mul,
}

impl NetExpr {
    pub fn zero() -> Self {
        NetExpr::default()
    }

    pub fn one() -> Self {
        NetExpr::constant(g_one())
    }

    pub fn constant(c: GaussRat) -> Self {
        NetExpr::term(c, Rational64::zero(), 0)
    }

    pub fn term(c: GaussRat, eps_power: Rational64, negl: u32) -> Self {
        let mut terms = BTreeMap::new();
        if !g_is_zero(&c) {
            terms.insert(NetKey::new(eps_power, negl), c);
        }
        NetExpr { terms }
    }

    pub fn eps_pow(p: Rational64) -> Self {
        NetExpr::term(g_one(), p, 0)
    }

    pub fn negl_pow(k: u32) -> Self {
        NetExpr::term(g_one(), Rational64::zero(), k)
    }

    pub fn from_terms<I: IntoIterator<Item = (GaussRat, Rational64, u32)>>(it: I) -> Self {
        let mut n = NetExpr::zero();
        for (c, p, k) in it {
            n.add_term(NetKey::new(p, k), c);
        }
        n
    }

    fn add_term(&mut self, key: NetKey, c: GaussRat) {
        if g_is_zero(&c) {
            return;
        }
        let remove = match self.terms.get_mut(&key) {
            Some(v) => {
                *v = &*v + &c;
                g_is_zero(v)
            }
            None => {
                self.terms.insert(key, c);
                false
            }
        };
        if remove {
            self.terms.remove(&key);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&NetKey, &GaussRat)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| g_is_one(&c))
    }

    /// The coefficient if the net is ε-independent.
    pub fn as_constant(&self) -> Option<GaussRat> {
        if self.terms.is_empty() {
            return Some(crate::coeff::g_zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&NetKey::unit()) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn as_single_term(&self) -> Option<(NetKey, GaussRat)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(k, c)| (*k, c.clone()))
        } else {
            None
        }
    }

    pub fn add(&self, o: &NetExpr) -> NetExpr {
        let mut r = self.clone();
        for (k, c) in &o.terms {
            r.add_term(*k, c.clone());
        }
        r
    }

    pub fn sub(&self, o: &NetExpr) -> NetExpr {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> NetExpr {
        NetExpr {
            terms: self.terms.iter().map(|(k, c)| (*k, -c.clone())).collect(),
        }
    }

    pub fn mul(&self, o: &NetExpr) -> NetExpr {
        let mut r = NetExpr::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &o.terms {
                r.add_term(k1.combine(k2), c1 * c2);
            }
        }
        r
    }

    pub fn scale(&self, s: &GaussRat) -> NetExpr {
        if g_is_zero(s) {
            return NetExpr::zero();
        }
        NetExpr {
            terms: self.terms.iter().map(|(k, c)| (*k, c * s)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> NetExpr {
        let mut r = NetExpr::one();
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    /// Inverse of a single term c·ε^p (k = 0); other nets have no closed-form inverse here.
    pub fn inverse(&self) -> Option<NetExpr> {
        let (key, c) = self.as_single_term()?;
        if key.negl != 0 {
            return None;
        }
        Some(NetExpr::term(g_inv(&c), -key.eps_power, 0))
    }

    pub fn eval(&self, eps: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(k, c)| g_to_c64(c) * k.weight(eps))
            .sum()
    }

    /// Largest ε-exponent p among terms without a negligible factor.
    pub fn max_moderate_power(&self) -> Option<Rational64> {
        self.terms
            .keys()
            .filter(|k| k.negl == 0)
            .map(|k| k.eps_power)
            .max()
    }

    pub fn min_moderate_power(&self) -> Option<Rational64> {
        self.terms
            .keys()
            .filter(|k| k.negl == 0)
            .map(|k| k.eps_power)
            .min()
    }

    pub fn classify(&self) -> NetClass {
        classify_net(self)
    }

    /// Upper bound on |net(ε)|·ε^{N} as ε → 0 is finite for N = classify; this is the
    /// numeric value of the exponent, useful for reports.
    pub fn eps_power_f64(p: Rational64) -> f64 {
        rat_to_f64(&rat_from_r64(p))
    }
}

fn ceil_r64(r: Rational64) -> i64 {
    let (n, d) = (*r.numer(), *r.denom());
    Integer::div_ceil(&n, &d)
}

/// Negligible iff every term carries exp(−1/ε)^k with k ≥ 1; otherwise Moderate(N)
/// with N = max(0, ⌈−min p⌉) over the terms with k = 0.
pub fn classify_net(net: &NetExpr) -> NetClass {
    match net.min_moderate_power() {
        None => NetClass::Negligible,
        Some(p) => NetClass::Moderate(ceil_r64(-p).max(0)),
    }
}

pub fn net_arith(a: &NetExpr, b: &NetExpr, op: NetOp) -> NetExpr {
    match op {
        NetOp::Add => a.add(b),
        NetOp::Mul => a.mul(b),
    }
}

/// A generalized number carried by one explicit representative.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedNumber {
    pub representative: NetExpr,
    pub classification: NetClass,
}

impl GeneralizedNumber {
    pub fn new(representative: NetExpr) -> Self {
        let classification = classify_net(&representative);
        GeneralizedNumber {
            representative,
            classification,
        }
    }
}

fn fmt_power(p: Rational64) -> String {
    if p.is_integer() {
        format!("{}", p.numer())
    } else {
        format!("({}/{})", p.numer(), p.denom())
    }
}

impl fmt::Display for NetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mut parts = Vec::new();
            if !(g_is_one(c) && (k.negl > 0 || !k.eps_power.is_zero())) {
                parts.push(fmt_gauss(c));
            }
            if !k.eps_power.is_zero() {
                if k.eps_power.is_one() {
                    parts.push("eps".to_string());
                } else {
                    parts.push(format!("eps^{}", fmt_power(k.eps_power)));
                }
            }
            if k.negl > 0 {
                if k.negl == 1 {
                    parts.push("negl".to_string());
                } else {
                    parts.push(format!("negl^{}", k.negl));
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{g_int, g_rat};

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn classify_examples() {
        assert_eq!(NetExpr::eps_pow(r(-3, 1)).classify(), NetClass::Moderate(3));
        let n = NetExpr::negl_pow(1).add(&NetExpr::term(g_int(2), r(5, 1), 2));
        assert_eq!(n.classify(), NetClass::Negligible);
        let n = NetExpr::one().add(&NetExpr::eps_pow(r(-1, 2)));
        assert_eq!(n.classify(), NetClass::Moderate(1));
        assert_eq!(NetExpr::zero().classify(), NetClass::Negligible);
        assert_eq!(NetExpr::eps_pow(r(4, 1)).classify(), NetClass::Moderate(0));
    }

    #[test]
    fn moderate_bound_direct_evaluation() {
        let n = NetExpr::one().add(&NetExpr::eps_pow(r(-1, 2)));
        let sup = (1..=30)
            .map(|j| {
                let e = 2f64.powi(-j);
                e * n.eval(e).norm()
            })
            .fold(0.0, f64::max);
        assert!(sup <= 2.0);
    }

    #[test]
    fn arithmetic_examples() {
        let p = NetExpr::eps_pow(r(-2, 1)).mul(&NetExpr::eps_pow(r(3, 1)));
        assert_eq!(p, NetExpr::eps_pow(r(1, 1)));
        assert_eq!(p.classify(), NetClass::Moderate(0));
        let s = NetExpr::eps_pow(r(-2, 1)).add(&NetExpr::eps_pow(r(-2, 1)));
        assert_eq!(s, NetExpr::term(g_int(2), r(-2, 1), 0));
        let n = net_arith(&NetExpr::eps_pow(r(-5, 1)), &NetExpr::negl_pow(1), NetOp::Mul);
        assert_eq!(n.classify(), NetClass::Negligible);
        for q in 0..=20 {
            let sup = (1..=20)
                .map(|j| {
                    let e = 2f64.powi(-j);
                    e.powi(-q) * n.eval(e).norm()
                })
                .fold(0.0, f64::max);
            assert!(sup.is_finite());
        }
    }

    #[test]
    fn cancellation_keeps_normal_form() {
        let a = NetExpr::term(g_rat(1, 3), r(1, 2), 0);
        assert!(a.sub(&a).is_zero());
        assert_eq!(a.sub(&a).len(), 0);
    }

    #[test]
    fn eval_avoids_inf_times_zero() {
        let n = NetExpr::term(g_int(1), r(-30, 1), 1);
        let v = n.eval(1e-3);
        assert!(v.norm().is_finite());
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn display_forms() {
        let n = NetExpr::term(g_rat(3, 2), r(-1, 2), 0).add(&NetExpr::negl_pow(2));
        assert_eq!(n.to_string(), "3/2*eps^(-1/2) + negl^2");
        assert_eq!(NetExpr::eps_pow(r(-3, 1)).to_string(), "eps^-3");
    }
}
