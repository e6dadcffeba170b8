use crate::coeff::{g_int, g_inv, g_is_zero, g_one, g_to_c64, GaussRat};
use crate::jet::Jet;
use crate::nets::{NetExpr, NetKey};
use num_complex::Complex64;
use std::collections::BTreeMap;

pub type Monomial = Vec<u32>;

/// Multivariate polynomial with NetExpr coefficients.
///
/// Monomials are ordered lexicographically (first variable most significant);
/// the leading term is the largest key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Monomial, NetExpr>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: NetExpr) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, NetExpr::one())
    }

    pub fn gauss(nvars: usize, c: GaussRat) -> Self {
        Poly::constant(nvars, NetExpr::constant(c))
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Poly::monomial(e, NetExpr::one())
    }

    pub fn monomial(exps: Monomial, c: NetExpr) -> Self {
        let mut p = Poly::zero(exps.len());
        p.add_term(exps, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn add_term(&mut self, mono: Monomial, c: NetExpr) {
        debug_assert_eq!(mono.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        let remove = match self.terms.get_mut(&mono) {
            Some(v) => {
                *v = v.add(&c);
                v.is_zero()
            }
            None => {
                self.terms.insert(mono.clone(), c);
                false
            }
        };
        if remove {
            self.terms.remove(&mono);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &NetExpr)> {
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

    pub fn as_constant(&self) -> Option<NetExpr> {
        match self.terms.len() {
            0 => Some(NetExpr::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.iter().all(|&e| e == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_eps_free(&self) -> bool {
        self.terms.values().all(|c| c.as_constant().is_some())
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m[var]).max().unwrap_or(0)
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.terms.keys().any(|m| m[var] > 0)
    }

    pub fn leading(&self) -> Option<(&Monomial, &NetExpr)> {
        self.terms.iter().next_back()
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut r = Poly::zero(self.nvars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let m: Monomial = m1.iter().zip(m2).map(|(a, b)| a + b).collect();
                r.add_term(m, c1.mul(c2));
            }
        }
        r
    }

    pub fn scale(&self, s: &NetExpr) -> Poly {
        let mut r = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            r.add_term(m.clone(), c.mul(s));
        }
        r
    }

    pub fn scale_gauss(&self, s: &GaussRat) -> Poly {
        if g_is_zero(s) {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.scale(s))).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut r = Poly::one(self.nvars);
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    /// ∂/∂z_var.
    pub fn derivative(&self, var: usize) -> Poly {
        let mut r = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            if m[var] == 0 {
                continue;
            }
            let k = m[var];
            let mut mm = m.clone();
            mm[var] -= 1;
            r.add_term(mm, c.scale(&g_int(k as i64)));
        }
        r
    }

    pub fn derivative_multi(&self, gamma: &[u32]) -> Poly {
        let mut r = self.clone();
        for (v, &k) in gamma.iter().enumerate() {
            for _ in 0..k {
                r = r.derivative(v);
            }
        }
        r
    }

    /// Replaces variable i by `images[i]`; all images live in the same variable space.
    pub fn substitute(&self, images: &[Poly]) -> Poly {
        assert_eq!(images.len(), self.nvars, "one image per variable");
        let out_vars = images.first().map(|p| p.nvars).unwrap_or(0);
        let mut powers: Vec<Vec<Poly>> = images.iter().map(|p| vec![Poly::one(p.nvars), p.clone()]).collect();
        let mut r = Poly::zero(out_vars);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(out_vars, c.clone());
            for (i, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = powers[i].last().unwrap().mul(&images[i]);
                    powers[i].push(next);
                }
                t = t.mul(&powers[i][e as usize]);
            }
            r = r.add(&t);
        }
        r
    }

    /// Exact division; `None` when `d` does not divide `self`.
    ///
    /// The divisor's leading coefficient must be an invertible single-term net.
    pub fn try_div(&self, d: &Poly) -> Option<Poly> {
        let (lm, lc) = d.leading()?;
        let lc_inv = lc.inverse()?;
        let lm = lm.clone();
        let mut rem = self.clone();
        let mut q = Poly::zero(self.nvars);
        while let Some((m, c)) = rem.leading() {
            if m.iter().zip(&lm).any(|(a, b)| a < b) {
                return None;
            }
            let qm: Monomial = m.iter().zip(&lm).map(|(a, b)| a - b).collect();
            let qc = c.mul(&lc_inv);
            let t = Poly::monomial(qm, qc);
            rem = rem.sub(&t.mul(d));
            q = q.add(&t);
        }
        Some(q)
    }

    /// Leading coefficient when it is ε-independent.
    pub fn leading_gauss(&self) -> Option<GaussRat> {
        self.leading().and_then(|(_, c)| c.as_constant())
    }

    /// Makes the leading coefficient 1; returns the monic polynomial and the removed factor.
    pub fn monic(&self) -> Option<(Poly, GaussRat)> {
        let lc = self.leading_gauss()?;
        Some((self.scale_gauss(&g_inv(&lc)), lc))
    }

    /// Exact evaluation at a Gaussian-rational point; the ε-dependence stays symbolic.
    pub fn eval_exact(&self, z: &[GaussRat]) -> NetExpr {
        let mut pw: Vec<Vec<GaussRat>> = z.iter().map(|v| vec![g_one(), v.clone()]).collect();
        let mut r = NetExpr::zero();
        for (m, c) in &self.terms {
            let mut t = g_one();
            for (i, &e) in m.iter().enumerate() {
                while pw[i].len() <= e as usize {
                    let next = pw[i].last().unwrap() * &z[i];
                    pw[i].push(next);
                }
                t = &t * &pw[i][e as usize];
            }
            r = r.add(&c.scale(&t));
        }
        r
    }

    /// Numeric polynomial at a fixed ε.
    pub fn at_eps(&self, eps: f64) -> NumPoly {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let v = c.eval(eps);
            if v != Complex64::new(0.0, 0.0) {
                terms.push((m.clone(), v));
            }
        }
        NumPoly::new(self.nvars, terms)
    }

    /// The polynomial split by net label: Σ_key weight_key(ε)·P_key(z), P_key ε-free.
    pub fn split_by_key(&self) -> BTreeMap<NetKey, Vec<(Monomial, Complex64)>> {
        let mut out: BTreeMap<NetKey, Vec<(Monomial, Complex64)>> = BTreeMap::new();
        for (m, c) in &self.terms {
            for (k, g) in c.terms() {
                out.entry(*k).or_default().push((m.clone(), g_to_c64(g)));
            }
        }
        out
    }

    /// Appends a block of fresh variables (or drops trailing ones), keeping exponents.
    pub fn reshape(&self, nvars: usize, map: impl Fn(&Monomial) -> Monomial) -> Poly {
        let mut r = Poly::zero(nvars);
        for (m, c) in &self.terms {
            r.add_term(map(m), c.clone());
        }
        r
    }

    pub fn fmt_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = Vec::new();
        for (m, c) in self.terms.iter().rev() {
            let mut factors = Vec::new();
            let is_unit_mono = m.iter().all(|&e| e == 0);
            if !(c.is_one() && !is_unit_mono) {
                let s = c.to_string();
                if c.len() > 1 || (c.len() == 1 && s.contains(" + ")) {
                    factors.push(format!("({s})"));
                } else {
                    factors.push(s);
                }
            }
            for (i, &e) in m.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(names[i].clone()),
                    _ => factors.push(format!("{}^{}", names[i], e)),
                }
            }
            out.push(factors.join("*"));
        }
        out.join(" + ")
    }
}

/// A polynomial with complex f64 coefficients, for sampling.
#[derive(Clone, Debug)]
pub struct NumPoly {
    nvars: usize,
    terms: Vec<(Monomial, Complex64)>,
    max_deg: Vec<u32>,
}

impl NumPoly {
    pub fn new(nvars: usize, terms: Vec<(Monomial, Complex64)>) -> Self {
        let mut max_deg = vec![0; nvars];
        for (m, _) in &terms {
            for (d, &e) in max_deg.iter_mut().zip(m) {
                *d = (*d).max(e);
            }
        }
        NumPoly {
            nvars,
            terms,
            max_deg,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, z: &[f64]) -> Complex64 {
        if self.terms.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        // power tables, stack-allocated for the common small cases
        let mut buf = [[1.0f64; 16]; 6];
        let small = self.nvars <= 6 && self.max_deg.iter().all(|&d| d < 16);
        if small {
            for i in 0..self.nvars {
                for e in 1..=self.max_deg[i] as usize {
                    buf[i][e] = buf[i][e - 1] * z[i];
                }
            }
            let mut s = Complex64::new(0.0, 0.0);
            for (m, c) in &self.terms {
                let mut t = 1.0;
                for (i, &e) in m.iter().enumerate() {
                    t *= buf[i][e as usize];
                }
                s += c * t;
            }
            s
        } else {
            self.terms
                .iter()
                .map(|(m, c)| {
                    let t: f64 = m.iter().zip(z).map(|(&e, v)| v.powi(e as i32)).product();
                    c * t
                })
                .sum()
        }
    }

    pub fn eval_jet(&self, z: &[Jet]) -> Jet {
        let sp = z[0].space().clone();
        let mut pw: Vec<Vec<Jet>> = z.iter().map(|j| vec![Jet::constant(&sp, Complex64::new(1.0, 0.0)), j.clone()]).collect();
        let mut s = Jet::constant(&sp, Complex64::new(0.0, 0.0));
        for (m, c) in &self.terms {
            let mut t = Jet::constant(&sp, *c);
            for (i, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while pw[i].len() <= e as usize {
                    let next = pw[i].last().unwrap().mul(&z[i]);
                    pw[i].push(next);
                }
                t = t.mul(&pw[i][e as usize]);
            }
            s = s.add(&t);
        }
        s
    }
}
