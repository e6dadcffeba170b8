//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients c_γ of a function at a point for
//! all |γ| ≤ order, so ∂^γ f = γ!·c_γ. Used wherever derivatives of closed-form
//! but non-polynomial expressions (cutoffs, weights) are needed.

use crate::multi_index::{multi_factorial, multi_indices};
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::Arc;

#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: u32,
    indices: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, usize>,
    products: Vec<(usize, usize, usize)>,
}

impl JetSpace {
    pub fn new(nvars: usize, order: u32) -> Arc<Self> {
        let indices = multi_indices(nvars, order);
        let lookup: HashMap<Vec<u32>, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i))
            .collect();
        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                let s: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                if let Some(&k) = lookup.get(&s) {
                    products.push((i, j, k));
                }
            }
        }
        Arc::new(JetSpace {
            nvars,
            order,
            indices,
            lookup,
            products,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    pub fn index_of(&self, gamma: &[u32]) -> Option<usize> {
        self.lookup.get(gamma).copied()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    c: Vec<Complex64>,
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, v: Complex64) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); space.len()];
        c[0] = v;
        Jet {
            space: space.clone(),
            c,
        }
    }

    /// The coordinate function z_k expanded at value `v`.
    pub fn variable(space: &Arc<JetSpace>, k: usize, v: f64) -> Self {
        let mut j = Jet::constant(space, Complex64::new(v, 0.0));
        if space.order >= 1 {
            let mut e = vec![0u32; space.nvars];
            e[k] = 1;
            let idx = space.index_of(&e).expect("first-order index");
            j.c[idx] = Complex64::new(1.0, 0.0);
        }
        j
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.c
    }

    /// ∂^γ of the represented function at the expansion point.
    pub fn derivative(&self, gamma: &[u32]) -> Complex64 {
        match self.space.index_of(gamma) {
            Some(i) => self.c[i] * multi_factorial(gamma) as f64,
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let c = self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect();
        Jet {
            space: self.space.clone(),
            c,
        }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        let c = self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect();
        Jet {
            space: self.space.clone(),
            c,
        }
    }

    pub fn scale(&self, s: Complex64) -> Jet {
        Jet {
            space: self.space.clone(),
            c: self.c.iter().map(|a| a * s).collect(),
        }
    }

    pub fn add_const(&self, s: Complex64) -> Jet {
        let mut r = self.clone();
        r.c[0] += s;
        r
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let mut c = vec![Complex64::new(0.0, 0.0); self.c.len()];
        for &(i, j, k) in &self.space.products {
            c[k] += self.c[i] * o.c[j];
        }
        Jet {
            space: self.space.clone(),
            c,
        }
    }

    pub fn powi(&self, e: u32) -> Jet {
        let mut r = Jet::constant(&self.space, Complex64::new(1.0, 0.0));
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    /// f(self) given the Taylor coefficients a_k = f^{(k)}(c₀)/k! of f at c₀ = self.value().
    fn compose(&self, a: &[Complex64]) -> Jet {
        let mut h = self.clone();
        h.c[0] = Complex64::new(0.0, 0.0);
        let mut r = Jet::constant(&self.space, a[a.len() - 1]);
        for k in (0..a.len() - 1).rev() {
            r = r.mul(&h).add_const(a[k]);
        }
        r
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut a = Vec::with_capacity(self.space.order as usize + 1);
        let mut f = 1.0;
        for k in 0..=self.space.order {
            if k > 0 {
                f *= k as f64;
            }
            a.push(e / f);
        }
        self.compose(&a)
    }

    /// self^p for real p, principal branch.
    pub fn powf(&self, p: f64) -> Jet {
        let v = self.value();
        let mut a = Vec::with_capacity(self.space.order as usize + 1);
        let mut binom = 1.0;
        for k in 0..=self.space.order {
            if k > 0 {
                binom *= (p - (k - 1) as f64) / k as f64;
            }
            a.push(v.powf(p - k as f64) * binom);
        }
        self.compose(&a)
    }

    pub fn recip(&self) -> Jet {
        let v = self.value();
        let mut a = Vec::with_capacity(self.space.order as usize + 1);
        let mut t = Complex64::new(1.0, 0.0) / v;
        for _ in 0..=self.space.order {
            a.push(t);
            t = -t / v;
        }
        self.compose(&a)
    }

    pub fn div(&self, o: &Jet) -> Jet {
        self.mul(&o.recip())
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_exp_product() {
        let sp = JetSpace::new(2, 3);
        let x = Jet::variable(&sp, 0, 0.3);
        let y = Jet::variable(&sp, 1, -0.7);
        let f = x.mul(&y).exp();
        // ∂x∂y e^{xy} = (1 + xy) e^{xy}
        let want = (1.0 + 0.3 * -0.7) * (0.3f64 * -0.7).exp();
        assert!((f.derivative(&[1, 1]).re - want).abs() < 1e-13);
        // ∂x³ e^{xy} = y³ e^{xy}
        let want3 = (-0.7f64).powi(3) * (0.3f64 * -0.7).exp();
        assert!((f.derivative(&[3, 0]).re - want3).abs() < 1e-13);
    }

    #[test]
    fn powf_matches_closed_form() {
        let sp = JetSpace::new(1, 3);
        let x = Jet::variable(&sp, 0, 2.0);
        let f = x.mul(&x).add_const(Complex64::new(1.0, 0.0)).sqrt();
        // d/dx sqrt(1+x²) = x/sqrt(1+x²)
        assert!((f.derivative(&[1]).re - 2.0 / 5f64.sqrt()).abs() < 1e-14);
        // d²/dx² = (1+x²)^{-3/2}
        assert!((f.derivative(&[2]).re - 5f64.powf(-1.5)).abs() < 1e-14);
    }
}
