use super::grid::{Domain, GridFunction};
use crate::error::{Error, Result};
use crate::nets::{estimate_exponent, EstimateOptions, Mollifier, NetClass};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Pairings below NOISE_REL · ∫(|u| + |v|)|f|φ̂_ε are treated as zero.
pub const NOISE_REL: f64 = 1e-10;

/// Largest relative size of u, v on the outer eighth of a box that still
/// counts as resolved when φ̂_ε extends past the box.
pub const RIM_REL: f64 = 1e-9;

/// Default ε-grid 2^{−j} for weak tests.
pub const WEAK_EPS_J: (i32, i32) = (3, 10);

/// Normalized Hermite function h_k(x) = (2^k k! √π)^{−1/2} H_k(x) e^{−x²/2}.
pub fn hermite_function(k: u32, x: f64) -> f64 {
    let g = (-0.5 * x * x).exp() / std::f64::consts::PI.powf(0.25);
    if k == 0 {
        return g;
    }
    let (mut h0, mut h1) = (g, std::f64::consts::SQRT_2 * x * g);
    for j in 1..k {
        let j = j as f64;
        let h2 = (2.0 / (j + 1.0)).sqrt() * x * h1 - (j / (j + 1.0)).sqrt() * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Tensor Hermite function h_{k_1}(x_1)···h_{k_n}(x_n).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestFunction {
    pub degree: Vec<u32>,
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.degree.iter().zip(x).map(|(&k, &v)| hermite_function(k, v)).product()
    }

    pub fn name(&self) -> String {
        let d: Vec<String> = self.degree.iter().map(|k| k.to_string()).collect();
        format!("h({})", d.join(","))
    }
}

/// All tensor Hermite functions of total degree ≤ max_degree.
pub fn hermite_tests(n: usize, max_degree: u32) -> Vec<TestFunction> {
    crate::multi_index::multi_indices(n, max_degree)
        .into_iter()
        .map(|degree| TestFunction { degree })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeakVerdict {
    Equal,
    NotEqual,
    /// Fewer than eight ε values pass the resolution guard.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestPairing {
    pub test: TestFunction,
    /// |I(ε)| on the usable ε values, after the noise floor.
    pub values: Vec<f64>,
    pub slope: f64,
    pub class: Option<NetClass>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeakEqReport {
    pub verdict: WeakVerdict,
    pub eps: Vec<f64>,
    /// Whether each ε passes the resolution guard.
    pub usable: Vec<bool>,
    pub max_norm_difference: Vec<f64>,
    pub tests: Vec<TestPairing>,
}

impl WeakEqReport {
    pub fn usable_eps(&self) -> Vec<f64> {
        self.eps.iter().zip(&self.usable).filter(|p| *p.1).map(|p| *p.0).collect()
    }
}

/// The grid represents u·φ̂_ε faithfully when φ̂_ε vanishes before the box edge
/// or when both functions are negligible on the outer eighth of the box.
fn resolved(u: &GridFunction, v: &GridFunction, phi: &Mollifier) -> bool {
    if u.half_width >= phi.outer_radius() / u.eps {
        return true;
    }
    let edge = u.half_width * 7.0 / 8.0;
    let (mut peak, mut rim) = (0.0f64, 0.0f64);
    for p in 0..u.len() {
        let m = u.samples[p].norm() + v.samples[p].norm();
        peak = peak.max(m);
        if u.point(p).iter().any(|x| x.abs() >= edge) {
            rim = rim.max(m);
        }
    }
    rim <= RIM_REL * peak
}

fn pairing(u: &GridFunction, v: &GridFunction, f: &TestFunction, phi: &Mollifier) -> f64 {
    let mut s = num_complex::Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for p in 0..u.len() {
        let x = u.point(p);
        let w = f.eval(&x) * phi.fourier_eps(&x, u.eps);
        s += (u.samples[p] - v.samples[p]) * w;
        scale += (u.samples[p].norm() + v.samples[p].norm()) * w.abs();
    }
    let vol = u.cell_volume();
    let (s, scale) = (s.norm() * vol, scale * vol);
    if s <= NOISE_REL * scale {
        0.0
    } else {
        s
    }
}

/// Checks u =_{g.t.d.} v: every pairing I(ε) = ∫(u_ε − v_ε) f φ̂_ε dx must be a
/// Negligible net in ε.
pub fn weak_equal(
    u: &[GridFunction],
    v: &[GridFunction],
    tests: &[TestFunction],
    phi: &Mollifier,
) -> Result<WeakEqReport> {
    if u.len() != v.len() {
        return Err(Error::GridMismatch(format!("{} vs {} ε values", u.len(), v.len())));
    }
    let mut pairs: Vec<(&GridFunction, &GridFunction)> = u.iter().zip(v).collect();
    for (a, b) in &pairs {
        if !a.same_grid(b) || a.eps != b.eps || a.domain != Domain::Space {
            return Err(Error::GridMismatch(format!("u and v differ at ε = {}", a.eps)));
        }
        if let Some(t) = tests.iter().find(|t| t.degree.len() != a.n) {
            return Err(Error::Dimension {
                expected: a.n,
                got: t.degree.len(),
            });
        }
    }
    pairs.sort_by(|a, b| b.0.eps.total_cmp(&a.0.eps));
    if pairs.windows(2).any(|w| w[0].0.eps == w[1].0.eps) {
        return Err(Error::GridMismatch("repeated ε value".into()));
    }
    let eps: Vec<f64> = pairs.iter().map(|p| p.0.eps).collect();
    let rows: Vec<(bool, f64, Vec<f64>)> = pairs
        .par_iter()
        .map(|(a, b)| {
            let ok = resolved(a, b, phi);
            let d = a.max_abs_diff(b).unwrap_or(f64::NAN);
            let vals = if ok {
                tests.iter().map(|f| pairing(a, b, f, phi)).collect()
            } else {
                Vec::new()
            };
            (ok, d, vals)
        })
        .collect();
    let usable: Vec<bool> = rows.iter().map(|r| r.0).collect();
    let used_eps: Vec<f64> = eps.iter().zip(&usable).filter(|p| *p.1).map(|p| *p.0).collect();
    let enough = used_eps.len() >= 8;
    let opts = EstimateOptions::default();
    let mut all_negl = true;
    let report_tests: Vec<TestPairing> = tests
        .iter()
        .enumerate()
        .map(|(ti, f)| {
            let values: Vec<f64> = rows.iter().filter(|r| r.0).map(|r| r.2[ti]).collect();
            let (slope, class) = if enough {
                let samples: Vec<(f64, f64)> = used_eps.iter().copied().zip(values.iter().copied()).collect();
                match estimate_exponent(&samples, &opts) {
                    Ok(e) => (e.slope, Some(e.verdict)),
                    Err(_) => (f64::NAN, None),
                }
            } else {
                (f64::NAN, None)
            };
            if class != Some(NetClass::Negligible) {
                all_negl = false;
            }
            TestPairing {
                test: f.clone(),
                values,
                slope,
                class,
            }
        })
        .collect();
    let verdict = if !enough {
        WeakVerdict::Inconclusive
    } else if all_negl {
        WeakVerdict::Equal
    } else {
        WeakVerdict::NotEqual
    };
    Ok(WeakEqReport {
        verdict,
        eps,
        usable,
        max_norm_difference: rows.iter().map(|r| r.1).collect(),
        tests: report_tests,
    })
}
