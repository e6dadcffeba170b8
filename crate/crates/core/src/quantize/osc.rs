use crate::coeff::g_rat;
use crate::cutoff::psi;
use crate::error::{Error, Result};
use crate::nets::NetExpr;
use crate::symbolic::{NumPoly, Poly};
use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A real polynomial phase ω on ℝ^p, positively homogeneous of order k.
#[derive(Clone, Debug)]
pub struct PhaseFunction {
    pub expr: Poly,
    pub k: u32,
    value: NumPoly,
    grad: Vec<NumPoly>,
}

impl PhaseFunction {
    pub fn new(expr: Poly) -> Result<Self> {
        if !expr.is_eps_free() {
            return Err(Error::Input("the phase must not depend on ε".into()));
        }
        let degs: Vec<u32> = expr.terms().map(|(m, _)| m.iter().sum()).collect();
        let k = *degs.first().ok_or_else(|| Error::Input("the phase is zero".into()))?;
        if k == 0 || degs.iter().any(|&d| d != k) {
            return Err(Error::Input("the phase must be homogeneous of order ≥ 1".into()));
        }
        let p = expr.nvars();
        let value = expr.at_eps(1.0);
        let grad: Vec<NumPoly> = (0..p).map(|i| expr.derivative(i).at_eps(1.0)).collect();
        let ph = PhaseFunction { expr, k, value, grad };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut dirs: Vec<Vec<f64>> = (0..p)
            .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        while dirs.len() < 4096 + p {
            let v: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if r > 0.1 && r <= 1.0 {
                dirs.push(v.iter().map(|x| x / r).collect());
            }
        }
        for d in &dirs {
            let w = ph.value.eval(d);
            if w.im.abs() > 1e-12 * (1.0 + w.re.abs()) {
                return Err(Error::Input("the phase must be real-valued".into()));
            }
            let g: f64 = ph.gradient(d).iter().map(|v| v * v).sum::<f64>().sqrt();
            if g < 1e-9 {
                return Err(Error::Input(format!("∇ω vanishes near the unit-sphere point {d:?}")));
            }
        }
        Ok(ph)
    }

    /// ω(y, η) = −y·η on ℝ^{2n}.
    pub fn bilinear(n: usize) -> Self {
        let mut e = Poly::zero(2 * n);
        for i in 0..n {
            let mut m = vec![0; 2 * n];
            m[i] = 1;
            m[n + i] = 1;
            e.add_term(m, NetExpr::constant(g_rat(-1, 1)));
        }
        PhaseFunction::new(e).expect("−y·η is a valid phase")
    }

    pub fn p(&self) -> usize {
        self.expr.nvars()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.value.eval(x).re
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.eval(x).re).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscSchedule {
    /// ψ family at h = 2^{−1}, …, 2^{−H}.
    pub h_levels: u32,
    /// φ family at j = 1, …, J.
    pub j_levels: u32,
    pub tolerance: f64,
    /// Per coordinate, a radius beyond which the amplitude is negligible; None if it does not decay.
    pub extent: Vec<Option<f64>>,
    /// Frequency content of the amplitude itself, added to max|∂ω| when choosing the step.
    pub bandwidth: f64,
    pub max_points: usize,
}

impl OscSchedule {
    pub fn new(p: usize) -> Self {
        OscSchedule {
            h_levels: 6,
            j_levels: 6,
            tolerance: 1e-6,
            extent: vec![None; p],
            bandwidth: 12.0,
            max_points: 40_000_000,
        }
    }

    pub fn with_extent(mut self, extent: Vec<Option<f64>>) -> Self {
        self.extent = extent;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OscStatus {
    Converged,
    /// Both families settle but their limits differ by more than the tolerance.
    Disagree,
    Diverged,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OscIntResult {
    pub value: Complex64,
    pub psi_limit: Complex64,
    pub phi_limit: Complex64,
    pub psi_values: Vec<(f64, Complex64)>,
    pub phi_values: Vec<(f64, Complex64)>,
    pub schedule: OscSchedule,
    pub agreement: f64,
    pub status: OscStatus,
}

/// Romberg extrapolation in h² on the last (up to) four values of a sequence
/// taken at h, h/2, h/4, ….
pub fn richardson(v: &[Complex64]) -> Complex64 {
    if v.is_empty() {
        return Complex64::zero();
    }
    let mut t: Vec<Complex64> = v[v.len().saturating_sub(4)..].to_vec();
    let mut f = 1.0;
    while t.len() > 1 {
        f *= 4.0;
        t = t.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
    }
    t[0]
}

fn settled(v: &[Complex64], tol: f64) -> bool {
    match v.len() {
        0 | 1 => true,
        k => (richardson(v) - richardson(&v[..k - 1])).norm() <= tol,
    }
}

fn max_partials(phase: &PhaseFunction, t: &[f64]) -> Vec<f64> {
    let p = t.len();
    let per: usize = if p <= 2 { 33 } else { 9 };
    let total = per.pow(p as u32);
    let mut g = vec![0.0f64; p];
    let mut x = vec![0.0; p];
    for q in 0..total {
        let mut r = q;
        for d in 0..p {
            let k = r % per;
            r /= per;
            x[d] = -t[d] + 2.0 * t[d] * k as f64 / (per - 1) as f64;
        }
        for (gd, v) in g.iter_mut().zip(phase.gradient(&x)) {
            *gd = gd.max(v.abs());
        }
    }
    g
}

/// Trapezoidal sum of e^{iω} a · reg(|x|²) on the box Π[−t_i, t_i], with steps
/// small enough that the oscillation of e^{iω} is resolved everywhere in the box.
fn quadrature(
    a: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    phase: &PhaseFunction,
    reg: &(dyn Fn(f64) -> f64 + Sync),
    t: &[f64],
    sched: &OscSchedule,
) -> Result<Complex64> {
    let p = t.len();
    let g = max_partials(phase, t);
    let steps: Vec<f64> = g.iter().map(|gi| PI / (gi + sched.bandwidth)).collect();
    let counts: Vec<usize> = t.iter().zip(&steps).map(|(ti, h)| (ti / h).ceil() as usize).collect();
    let total: f64 = counts.iter().map(|&k| (2 * k + 1) as f64).product();
    if total > sched.max_points as f64 {
        return Err(Error::Input(format!(
            "oscillatory quadrature needs {total:.3e} points, above the cap {}",
            sched.max_points
        )));
    }
    let vol: f64 = steps.iter().product();
    let inner: usize = counts[1..].iter().map(|&k| 2 * k + 1).product();
    // rows are summed in order so the result does not depend on the thread count
    let rows: Vec<Complex64> = (0..2 * counts[0] + 1)
        .into_par_iter()
        .map(|i0| {
            let mut x = vec![0.0; p];
            x[0] = (i0 as f64 - counts[0] as f64) * steps[0];
            let mut acc = Complex64::zero();
            for q in 0..inner {
                let mut r = q;
                for d in 1..p {
                    let m = 2 * counts[d] + 1;
                    x[d] = ((r % m) as f64 - counts[d] as f64) * steps[d];
                    r /= m;
                }
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let w = reg(r2);
                if w == 0.0 {
                    continue;
                }
                let av = a(&x);
                if av == Complex64::zero() {
                    continue;
                }
                acc += Complex64::from_polar(w, phase.eval(&x)) * av;
            }
            acc
        })
        .collect();
    Ok(rows.iter().sum::<Complex64>() * vol)
}

/// Both regularizations of ∫ e^{iω(x)} a(x) dx: the Gaussian damper
/// ψ(hx) = e^{−h²|x|²/2} and the compact plateau φ(2^{−j}x), φ = 1 − ψ_cut(|x|).
pub fn osc_integral(
    a: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    phase: &PhaseFunction,
    sched: &OscSchedule,
) -> Result<OscIntResult> {
    let p = phase.p();
    if sched.extent.len() != p {
        return Err(Error::Dimension {
            expected: p,
            got: sched.extent.len(),
        });
    }
    let clip = |r: f64| -> Vec<f64> { sched.extent.iter().map(|e| e.map_or(r, |e| e.min(r))).collect() };
    let mut psi_values = Vec::new();
    for m in 1..=sched.h_levels {
        let h = 2f64.powi(-(m as i32));
        let reg = move |r2: f64| (-0.5 * h * h * r2).exp();
        psi_values.push((h, quadrature(a, phase, &reg, &clip(9.0 / h), sched)?));
    }
    let mut phi_values = Vec::new();
    for j in 1..=sched.j_levels {
        let s = 2f64.powi(j as i32);
        let reg = move |r2: f64| 1.0 - psi(r2.sqrt() / s);
        phi_values.push((1.0 / s, quadrature(a, phase, &reg, &clip(2.0 * s), sched)?));
    }
    let pv: Vec<Complex64> = psi_values.iter().map(|v| v.1).collect();
    let fv: Vec<Complex64> = phi_values.iter().map(|v| v.1).collect();
    let psi_limit = richardson(&pv);
    let phi_limit = richardson(&fv);
    let agreement = (psi_limit - phi_limit).norm();
    let cauchy = 10.0 * sched.tolerance;
    let status = if !settled(&pv, cauchy) || !settled(&fv, cauchy) {
        OscStatus::Diverged
    } else if agreement <= sched.tolerance {
        OscStatus::Converged
    } else {
        OscStatus::Disagree
    };
    Ok(OscIntResult {
        value: (psi_limit + phi_limit) / 2.0,
        psi_limit,
        phi_limit,
        psi_values,
        phi_values,
        schedule: sched.clone(),
        agreement,
        status,
    })
}
