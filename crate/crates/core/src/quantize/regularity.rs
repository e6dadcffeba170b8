use super::grid::{apply_operator, apply_symbol_fn, GridFunction, Variant};
use super::weak::{hermite_tests, weak_equal, WeakEqReport};
use crate::calculus::{parametrix, HypoCertificate};
use crate::error::{Error, Result};
use crate::jet::JetSpace;
use crate::multi_index::{multi_factorial, multi_indices};
use crate::nets::Mollifier;
use crate::symbolic::{CompiledSymbol, SymbolExpr};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityReport {
    pub k_max: u32,
    pub eps: Vec<f64>,
    /// defects[K][i] = ‖P_K(Au) − u‖_∞ / ‖u‖_∞ at eps[i].
    pub defects: Vec<Vec<f64>>,
    /// w = P_K(Au) against u.
    pub weak_vs_u: WeakEqReport,
    /// w against Op(p ♯ a)u = u + R_K u, the identity PA = I + R_K.
    pub weak_vs_identity_plus_residual: WeakEqReport,
}

impl RegularityReport {
    pub fn defect_at(&self, k: u32, eps: f64) -> Option<f64> {
        let i = self.eps.iter().position(|e| (e - eps).abs() <= 1e-12 * eps)?;
        self.defects.get(k as usize).map(|d| d[i])
    }

    pub fn monotone_at(&self, eps: f64) -> bool {
        let d: Option<Vec<f64>> = (0..=self.k_max).map(|k| self.defect_at(k, eps)).collect();
        d.is_some_and(|d| d.windows(2).all(|w| w[1] < w[0]))
    }
}

/// z ↦ (p ♯ a)(z) − 1 = Σ_α (1/α!) ∂_ξ^α p · D_x^α a − 1 for polynomial a, with the
/// derivatives of p taken from jets so the cutoff annulus is included.
pub fn residual_symbol_fn(p: &SymbolExpr, a: &SymbolExpr, eps: f64) -> Result<impl Fn(&[f64]) -> Complex64 + Sync> {
    let n = a.n();
    let poly = a
        .as_poly()
        .ok_or_else(|| Error::Input("the residual needs a polynomial symbol".into()))?;
    let d = (0..n).map(|i| poly.degree_in(i)).sum::<u32>();
    let alphas = multi_indices(n, d);
    let pc = p.compile(eps);
    let space = JetSpace::new(2 * n, d);
    let dx: Vec<(Vec<u32>, f64, CompiledSymbol)> = alphas
        .iter()
        .map(|al| {
            let mut g = vec![0; n];
            g.extend(al.iter().copied());
            (g, multi_factorial(al) as f64, a.big_d_x(al).compile(eps))
        })
        .collect();
    Ok(move |z: &[f64]| {
        let jet = pc.eval_jet(&space, z);
        let mut s = Complex64::new(-1.0, 0.0);
        for (g, f, da) in &dx {
            let dp = jet.derivative(g);
            if dp != Complex64::new(0.0, 0.0) {
                s += dp / *f * da.eval(z);
            }
        }
        s
    })
}

/// Applies a, then the parametrix truncations P_K for K = 0..=k_max, on every
/// ε of the family; weak tests use Hermite functions of degree ≤ 6.
pub fn regularity_experiment(
    a: &SymbolExpr,
    cert: &HypoCertificate,
    u: &[GridFunction],
    k_max: u32,
    phi: &Mollifier,
) -> Result<RegularityReport> {
    let par = parametrix(a, cert, k_max)?;
    let mut sorted: Vec<&GridFunction> = u.iter().collect();
    sorted.sort_by(|x, y| y.eps.total_cmp(&x.eps));
    let mut defects = vec![Vec::new(); k_max as usize + 1];
    let mut last = Vec::new();
    let mut target = Vec::new();
    for g in &sorted {
        let v = apply_operator(a, g, phi, Variant::A)?;
        let norm = g.norm_inf();
        for k in 0..=k_max {
            let w = apply_operator(&par.partial_sum(k), &v, phi, Variant::A)?;
            defects[k as usize].push(w.max_abs_diff(g)? / norm);
            if k == k_max {
                last.push(w);
            }
        }
        let r = residual_symbol_fn(&par.sum(), a, g.eps)?;
        let full = move |z: &[f64]| r(z) + 1.0;
        target.push(apply_symbol_fn(&full, true, g, phi, Variant::A)?);
    }
    let owned: Vec<GridFunction> = sorted.iter().map(|g| (*g).clone()).collect();
    let tests = hermite_tests(a.n(), 6);
    Ok(RegularityReport {
        k_max,
        eps: sorted.iter().map(|g| g.eps).collect(),
        defects,
        weak_vs_u: weak_equal(&last, &owned, &tests, phi)?,
        weak_vs_identity_plus_residual: weak_equal(&last, &target, &tests, phi)?,
    })
}
