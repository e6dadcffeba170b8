use super::poly::{NumPoly, Poly};
use crate::coeff::{g_pow, GaussRat};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::nets::NetExpr;
use num_complex::Complex64;

/// N / Π q_i^{e_i}: numerator with NetExpr coefficients over distinct monic
/// ε-free factors. Factors are not irreducible; only trial-division
/// cancellation is performed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalExpr {
    num: Poly,
    den: Vec<(Poly, u32)>,
}

impl RationalExpr {
    pub fn from_poly(p: Poly) -> Self {
        RationalExpr {
            num: p,
            den: Vec::new(),
        }
    }

    pub fn zero(nvars: usize) -> Self {
        RationalExpr::from_poly(Poly::zero(nvars))
    }

    pub fn one(nvars: usize) -> Self {
        RationalExpr::from_poly(Poly::one(nvars))
    }

    pub fn constant(nvars: usize, c: NetExpr) -> Self {
        RationalExpr::from_poly(Poly::constant(nvars, c))
    }

    /// Builds N / D^e with D ε-free.
    pub fn new(num: Poly, den: Vec<(Poly, u32)>) -> Result<Self> {
        for (q, _) in &den {
            if q.is_zero() {
                return Err(Error::Input("zero denominator".into()));
            }
            if !q.is_eps_free() {
                return Err(Error::Input("denominators must be ε-free".into()));
            }
        }
        let mut r = RationalExpr { num, den };
        r.normalize();
        Ok(r)
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars()
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &[(Poly, u32)] {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_empty()
    }

    pub fn as_poly(&self) -> Option<&Poly> {
        self.den.is_empty().then_some(&self.num)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.num.depends_on(var) || self.den.iter().any(|(q, _)| q.depends_on(var))
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den.clear();
            return;
        }
        // monic factors, constants folded into the numerator
        let mut merged: Vec<(Poly, u32)> = Vec::new();
        for (q, e) in std::mem::take(&mut self.den) {
            if e == 0 {
                continue;
            }
            let (qm, lc) = q.monic().expect("ε-free nonzero factor");
            self.num = self.num.scale_gauss(&crate::coeff::g_inv(&g_pow(&lc, e)));
            if qm.as_constant().is_some() {
                continue;
            }
            match merged.iter_mut().find(|(p, _)| *p == qm) {
                Some((_, ee)) => *ee += e,
                None => merged.push((qm, e)),
            }
        }
        // cancellation by trial division
        for (q, e) in merged.iter_mut() {
            while *e > 0 {
                match self.num.try_div(q) {
                    Some(quot) => {
                        self.num = quot;
                        *e -= 1;
                    }
                    None => break,
                }
            }
        }
        merged.retain(|(_, e)| *e > 0);
        self.den = merged;
    }

    /// Common denominator of two expressions: (factors, multiplier for a, multiplier for b).
    fn common(&self, o: &RationalExpr) -> (Vec<(Poly, u32)>, Poly, Poly) {
        let n = self.nvars();
        let mut den = self.den.clone();
        let mut ma = Poly::one(n);
        let mut mb = Poly::one(n);
        for (q, eb) in &o.den {
            match den.iter_mut().find(|(p, _)| p == q) {
                Some((_, ea)) => {
                    if *eb > *ea {
                        ma = ma.mul(&q.pow(*eb - *ea));
                        *ea = *eb;
                    } else if *ea > *eb {
                        mb = mb.mul(&q.pow(*ea - *eb));
                    }
                }
                None => {
                    ma = ma.mul(&q.pow(*eb));
                    den.push((q.clone(), *eb));
                }
            }
        }
        for (q, ea) in &self.den {
            if !o.den.iter().any(|(p, _)| p == q) {
                mb = mb.mul(&q.pow(*ea));
            }
        }
        (den, ma, mb)
    }

    pub fn add(&self, o: &RationalExpr) -> RationalExpr {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.clone();
        }
        let (den, ma, mb) = self.common(o);
        let mut r = RationalExpr {
            num: self.num.mul(&ma).add(&o.num.mul(&mb)),
            den,
        };
        r.normalize();
        r
    }

    pub fn sub(&self, o: &RationalExpr) -> RationalExpr {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> RationalExpr {
        RationalExpr {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, o: &RationalExpr) -> RationalExpr {
        let mut den = self.den.clone();
        for (q, e) in &o.den {
            match den.iter_mut().find(|(p, _)| p == q) {
                Some((_, ee)) => *ee += e,
                None => den.push((q.clone(), *e)),
            }
        }
        let mut r = RationalExpr {
            num: self.num.mul(&o.num),
            den,
        };
        r.normalize();
        r
    }

    pub fn mul_poly(&self, p: &Poly) -> RationalExpr {
        let mut r = RationalExpr {
            num: self.num.mul(p),
            den: self.den.clone(),
        };
        r.normalize();
        r
    }

    pub fn scale(&self, s: &NetExpr) -> RationalExpr {
        let mut r = RationalExpr {
            num: self.num.scale(s),
            den: self.den.clone(),
        };
        if r.num.is_zero() {
            r.den.clear();
        }
        r
    }

    pub fn scale_gauss(&self, s: &GaussRat) -> RationalExpr {
        let mut r = RationalExpr {
            num: self.num.scale_gauss(s),
            den: self.den.clone(),
        };
        if r.num.is_zero() {
            r.den.clear();
        }
        r
    }

    /// Splits the numerator as s·P with s a single-term net and P ε-free.
    fn separate_numerator(&self) -> Option<(NetExpr, Poly)> {
        let (_, lc) = self.num.leading()?;
        let (key, lcc) = lc.as_single_term()?;
        let s = NetExpr::term(lcc.clone(), key.eps_power, key.negl);
        let s_inv = s.inverse()?;
        let mut p = Poly::zero(self.nvars());
        for (m, c) in self.num.terms() {
            let q = c.mul(&s_inv);
            q.as_constant()?;
            p.add_term(m.clone(), q);
        }
        Some((s, p))
    }

    pub fn recip(&self) -> Result<RationalExpr> {
        if self.is_zero() {
            return Err(Error::NotInvertible("zero".into()));
        }
        let (s, p) = self.separate_numerator().ok_or_else(|| {
            Error::NotInvertible("numerator is not a single ε-monomial times an ε-free polynomial".into())
        })?;
        let s_inv = s.inverse().ok_or_else(|| Error::NotInvertible("negligible factor".into()))?;
        let n = self.nvars();
        let mut num = Poly::constant(n, s_inv);
        for (q, e) in &self.den {
            num = num.mul(&q.pow(*e));
        }
        Ok(RationalExpr::new(num, vec![(p, 1)]).expect("ε-free factor"))
    }

    pub fn div(&self, o: &RationalExpr) -> Result<RationalExpr> {
        Ok(self.mul(&o.recip()?))
    }

    pub fn powi(&self, e: i32) -> Result<RationalExpr> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut r = RationalExpr::one(self.nvars());
        for _ in 0..e.unsigned_abs() {
            r = r.mul(&base);
        }
        Ok(r)
    }

    /// Exact ∂/∂z_var by the quotient rule.
    pub fn derivative(&self, var: usize) -> RationalExpr {
        let n = self.nvars();
        let dep: Vec<usize> = (0..self.den.len()).filter(|&i| self.den[i].0.depends_on(var)).collect();
        if dep.is_empty() {
            return RationalExpr {
                num: self.num.derivative(var),
                den: self.den.clone(),
            }
            .normalized();
        }
        let mut q_all = Poly::one(n);
        for &i in &dep {
            q_all = q_all.mul(&self.den[i].0);
        }
        let mut num = self.num.derivative(var).mul(&q_all);
        for &i in &dep {
            let (q, e) = &self.den[i];
            let mut others = Poly::one(n);
            for &j in &dep {
                if j != i {
                    others = others.mul(&self.den[j].0);
                }
            }
            let t = self
                .num
                .mul(&q.derivative(var))
                .mul(&others)
                .scale_gauss(&crate::coeff::g_int(*e as i64));
            num = num.sub(&t);
        }
        let mut den = self.den.clone();
        for &i in &dep {
            den[i].1 += 1;
        }
        RationalExpr { num, den }.normalized()
    }

    fn normalized(mut self) -> RationalExpr {
        self.normalize();
        self
    }

    pub fn derivative_multi(&self, gamma: &[u32]) -> RationalExpr {
        let mut r = self.clone();
        for (v, &k) in gamma.iter().enumerate() {
            for _ in 0..k {
                if r.is_zero() {
                    return r;
                }
                r = r.derivative(v);
            }
        }
        r
    }

    pub fn substitute(&self, images: &[Poly]) -> Result<RationalExpr> {
        let num = self.num.substitute(images);
        let mut den = Vec::new();
        for (q, e) in &self.den {
            let qs = q.substitute(images);
            if qs.is_zero() {
                return Err(Error::Input("substitution makes a denominator vanish".into()));
            }
            den.push((qs, *e));
        }
        RationalExpr::new(num, den)
    }

    pub fn reshape(&self, nvars: usize, map: impl Fn(&Vec<u32>) -> Vec<u32> + Copy) -> RationalExpr {
        RationalExpr {
            num: self.num.reshape(nvars, map),
            den: self.den.iter().map(|(q, e)| (q.reshape(nvars, map), *e)).collect(),
        }
    }

    /// Exact value at a Gaussian-rational point as a net in ε; `None` if a factor vanishes.
    pub fn eval_exact(&self, z: &[GaussRat]) -> Option<NetExpr> {
        let mut d = crate::coeff::g_one();
        for (q, e) in &self.den {
            let v = q.eval_exact(z).as_constant()?;
            if crate::coeff::g_is_zero(&v) {
                return None;
            }
            d = d * g_pow(&v, *e);
        }
        Some(self.num.eval_exact(z).scale(&crate::coeff::g_inv(&d)))
    }

    pub fn equals(&self, o: &RationalExpr) -> bool {
        self.sub(o).is_zero()
    }

    pub fn at_eps(&self, eps: f64) -> NumRational {
        NumRational {
            num: self.num.at_eps(eps),
            den: self.den.iter().map(|(q, e)| (q.at_eps(eps), *e)).collect(),
        }
    }

    pub fn fmt_with(&self, names: &[String]) -> String {
        let num = self.num.fmt_with(names);
        if self.den.is_empty() {
            return num;
        }
        let den: Vec<String> = self
            .den
            .iter()
            .map(|(q, e)| {
                if *e == 1 {
                    format!("({})", q.fmt_with(names))
                } else {
                    format!("({})^{}", q.fmt_with(names), e)
                }
            })
            .collect();
        format!("({})/({})", num, den.join("*"))
    }
}

#[derive(Clone, Debug)]
pub struct NumRational {
    num: NumPoly,
    den: Vec<(NumPoly, u32)>,
}

impl NumRational {
    pub fn eval(&self, z: &[f64]) -> Complex64 {
        let n = self.num.eval(z);
        if self.den.is_empty() || n == Complex64::new(0.0, 0.0) {
            return n;
        }
        let mut d = Complex64::new(1.0, 0.0);
        for (q, e) in &self.den {
            d *= q.eval(z).powu(*e);
        }
        n / d
    }

    pub fn eval_jet(&self, z: &[Jet]) -> Jet {
        let n = self.num.eval_jet(z);
        if self.den.is_empty() {
            return n;
        }
        let sp = z[0].space().clone();
        let mut d = Jet::constant(&sp, Complex64::new(1.0, 0.0));
        for (q, e) in &self.den {
            d = d.mul(&q.eval_jet(z).powi(*e));
        }
        n.div(&d)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}
