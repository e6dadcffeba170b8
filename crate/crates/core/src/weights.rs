//! Weight functions Λ on ℝ^{2n} and sampled checks of the weight axioms.

use crate::error::{Error, Result};
use crate::jet::Jet;
use num_complex::Complex64;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

type CustomFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum WeightKind {
    JapaneseBracket,
    QuasiHomogeneous { m: Vec<u32> },
    Polyhedron { vertices: Vec<Vec<Rational64>> },
    /// An arbitrary positive function, used to exercise the checks on non-weights.
    Custom { name: String, f: CustomFn },
}

impl fmt::Debug for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightKind::JapaneseBracket => write!(f, "JapaneseBracket"),
            WeightKind::QuasiHomogeneous { m } => write!(f, "QuasiHomogeneous({m:?})"),
            WeightKind::Polyhedron { vertices } => write!(f, "Polyhedron({vertices:?})"),
            WeightKind::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct WeightFunction {
    pub dim_n: usize,
    pub kind: WeightKind,
    /// Exponent with ⟨z⟩^mu ≺ Λ ≺ ⟨z⟩.
    pub mu: f64,
    /// The polyhedron order μ in Λ = (Σ z^{2γ})^{1/(2μ)}; 1 for the Japanese bracket.
    pub formal_order: f64,
}

/// JSON form of a weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    JapaneseBracket,
    QuasiHomogeneous {
        #[serde(rename = "M")]
        m: Vec<u32>,
    },
    Polyhedron {
        vertices: Vec<Vec<f64>>,
        mu: f64,
    },
}

impl WeightSpec {
    pub fn build(&self, dim_n: usize) -> Result<WeightFunction> {
        match self {
            WeightSpec::JapaneseBracket => Ok(WeightFunction::japanese_bracket(dim_n)),
            WeightSpec::QuasiHomogeneous { m } => {
                let w = WeightFunction::quasi_homogeneous(m)?;
                if w.dim_n != dim_n {
                    return Err(Error::Dimension {
                        expected: 2 * dim_n,
                        got: m.len(),
                    });
                }
                Ok(w)
            }
            WeightSpec::Polyhedron { vertices, mu } => {
                let v: Vec<Vec<Rational64>> = vertices
                    .iter()
                    .map(|g| g.iter().map(|&c| f64_to_rational(c)).collect())
                    .collect::<Result<_>>()?;
                let w = WeightFunction::polyhedron(v, f64_to_rational(*mu)?)?;
                if w.dim_n != dim_n {
                    return Err(Error::Dimension {
                        expected: 2 * dim_n,
                        got: 2 * w.dim_n,
                    });
                }
                Ok(w)
            }
        }
    }
}

fn f64_to_rational(v: f64) -> Result<Rational64> {
    Rational64::approximate_float(v)
        .filter(|r| (*r.numer() as f64 / *r.denom() as f64 - v).abs() < 1e-12)
        .ok_or_else(|| Error::Input(format!("{v} is not representable as a small rational")))
}

fn r64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl WeightFunction {
    pub fn japanese_bracket(dim_n: usize) -> Self {
        WeightFunction {
            dim_n,
            kind: WeightKind::JapaneseBracket,
            mu: 1.0,
            formal_order: 1.0,
        }
    }

    /// Λ(z) = (1 + Σ z_j^{2M_j})^{1/(2μ)} with μ = max M_j.
    pub fn quasi_homogeneous(m: &[u32]) -> Result<Self> {
        if m.is_empty() || m.len() % 2 != 0 || m.iter().any(|&v| v == 0) {
            return Err(Error::Input(
                "quasi-homogeneous weight needs 2n positive exponents".into(),
            ));
        }
        let max = *m.iter().max().unwrap() as f64;
        let min = *m.iter().min().unwrap() as f64;
        Ok(WeightFunction {
            dim_n: m.len() / 2,
            kind: WeightKind::QuasiHomogeneous { m: m.to_vec() },
            mu: min / max,
            formal_order: max,
        })
    }

    /// Λ(z) = (Σ_{γ∈V} z^{2γ})^{1/(2μ)}.
    ///
    /// Only a shallow completeness check is done: the origin and a point on every
    /// coordinate axis must be vertices, and no vertex may exceed order μ.
    pub fn polyhedron(vertices: Vec<Vec<Rational64>>, formal_order: Rational64) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Input("polyhedron needs vertices".into()));
        }
        let d = vertices[0].len();
        if d == 0 || d % 2 != 0 || vertices.iter().any(|v| v.len() != d) {
            return Err(Error::Input("vertices must all lie in ℝ^{2n}".into()));
        }
        if vertices
            .iter()
            .any(|v| v.iter().any(|c| *c < Rational64::from_integer(0)))
        {
            return Err(Error::Input("vertex coordinates must be nonnegative".into()));
        }
        if formal_order <= Rational64::from_integer(0) {
            return Err(Error::Input("polyhedron order must be positive".into()));
        }
        if !vertices.iter().any(|v| v.iter().all(|c| *c == Rational64::from_integer(0))) {
            return Err(Error::Input("polyhedron must contain the origin".into()));
        }
        let mut min_axis = f64::INFINITY;
        for j in 0..d {
            let best = vertices
                .iter()
                .filter(|v| v.iter().enumerate().all(|(i, c)| i == j || *c == Rational64::from_integer(0)))
                .map(|v| r64(v[j]))
                .fold(0.0, f64::max);
            if best == 0.0 {
                return Err(Error::Input(format!("polyhedron has no vertex on axis {j}")));
            }
            min_axis = min_axis.min(best);
        }
        let mu_f = r64(formal_order);
        if vertices
            .iter()
            .any(|v| v.iter().map(|c| r64(*c)).sum::<f64>() > mu_f + 1e-12)
        {
            return Err(Error::Input("a vertex exceeds the polyhedron order".into()));
        }
        Ok(WeightFunction {
            dim_n: d / 2,
            kind: WeightKind::Polyhedron { vertices },
            mu: min_axis / mu_f,
            formal_order: mu_f,
        })
    }

    pub fn custom(dim_n: usize, name: &str, mu: f64, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        WeightFunction {
            dim_n,
            kind: WeightKind::Custom {
                name: name.to_string(),
                f: Arc::new(f),
            },
            mu,
            formal_order: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.dim_n
    }

    pub fn name(&self) -> String {
        match &self.kind {
            WeightKind::JapaneseBracket => "japanese_bracket".into(),
            WeightKind::QuasiHomogeneous { m } => format!("quasi_homogeneous{m:?}"),
            WeightKind::Polyhedron { vertices } => format!("polyhedron({} vertices)", vertices.len()),
            WeightKind::Custom { name, .. } => name.clone(),
        }
    }

    pub fn eval(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(self.value(z))
    }

    /// Λ(z) without the dimension check.
    pub fn value(&self, z: &[f64]) -> f64 {
        match &self.kind {
            WeightKind::JapaneseBracket => (1.0 + z.iter().map(|v| v * v).sum::<f64>()).sqrt(),
            WeightKind::QuasiHomogeneous { m } => {
                let s: f64 = 1.0
                    + z.iter()
                        .zip(m)
                        .map(|(v, &mj)| v.powi(2 * mj as i32))
                        .sum::<f64>();
                s.powf(1.0 / (2.0 * self.formal_order))
            }
            WeightKind::Polyhedron { vertices } => {
                let s: f64 = vertices
                    .iter()
                    .map(|g| {
                        g.iter()
                            .zip(z)
                            .map(|(c, v)| {
                                if *c == Rational64::from_integer(0) {
                                    1.0
                                } else if c.is_integer() {
                                    v.powi(2 * *c.numer() as i32)
                                } else {
                                    v.abs().powf(2.0 * r64(*c))
                                }
                            })
                            .product::<f64>()
                    })
                    .sum();
                s.powf(1.0 / (2.0 * self.formal_order))
            }
            WeightKind::Custom { f, .. } => f(z),
        }
    }

    /// First partials of Λ: analytic for the built-in closed forms, central
    /// differences with step 10⁻⁵(1+|z|) otherwise.
    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        match &self.kind {
            WeightKind::JapaneseBracket => {
                let l = self.value(z);
                z.iter().map(|v| v / l).collect()
            }
            WeightKind::QuasiHomogeneous { m } => {
                let mu = self.formal_order;
                let s: f64 = 1.0
                    + z.iter()
                        .zip(m)
                        .map(|(v, &mj)| v.powi(2 * mj as i32))
                        .sum::<f64>();
                let outer = s.powf(1.0 / (2.0 * mu) - 1.0) / (2.0 * mu);
                z.iter()
                    .zip(m)
                    .map(|(v, &mj)| outer * 2.0 * mj as f64 * v.powi(2 * mj as i32 - 1))
                    .collect()
            }
            _ => {
                let h = 1e-5 * (1.0 + z.iter().map(|v| v * v).sum::<f64>().sqrt());
                (0..z.len())
                    .map(|i| {
                        let mut a = z.to_vec();
                        let mut b = z.to_vec();
                        a[i] += h;
                        b[i] -= h;
                        (self.value(&a) - self.value(&b)) / (2.0 * h)
                    })
                    .collect()
            }
        }
    }

    /// Λ as a Taylor jet, for derivatives of Λ-dependent cutoffs.
    /// Returns `None` for kinds without a closed-form smooth expression.
    pub fn jet(&self, z: &[Jet]) -> Option<Jet> {
        let sp = z[0].space().clone();
        let one = Complex64::new(1.0, 0.0);
        match &self.kind {
            WeightKind::JapaneseBracket => {
                let mut s = Jet::constant(&sp, one);
                for j in z {
                    s = s.add(&j.mul(j));
                }
                Some(s.sqrt())
            }
            WeightKind::QuasiHomogeneous { m } => {
                let mut s = Jet::constant(&sp, one);
                for (j, &mj) in z.iter().zip(m) {
                    s = s.add(&j.powi(2 * mj));
                }
                Some(s.powf(1.0 / (2.0 * self.formal_order)))
            }
            WeightKind::Polyhedron { vertices } => {
                let mut s = Jet::constant(&sp, Complex64::new(0.0, 0.0));
                for g in vertices {
                    let mut t = Jet::constant(&sp, one);
                    for (c, j) in g.iter().zip(z) {
                        if *c == Rational64::from_integer(0) {
                            continue;
                        }
                        if c.is_integer() {
                            t = t.mul(&j.powi(2 * *c.numer() as u32));
                        } else {
                            if j.value().re == 0.0 {
                                return None;
                            }
                            t = t.mul(&j.mul(j).powf(r64(*c)));
                        }
                    }
                    s = s.add(&t);
                }
                Some(s.powf(1.0 / (2.0 * self.formal_order)))
            }
            WeightKind::Custom { .. } => None,
        }
    }
}

pub fn eval_weight(w: &WeightFunction, z: &[f64]) -> Result<f64> {
    w.eval(z)
}

fn bracket(z: &[f64], zeta: &[f64]) -> f64 {
    (1.0 + z.iter().zip(zeta).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sqrt()
}

/// Λ(ζ)^s⟨z−ζ⟩^{|s|} for s ≥ 0 and (1 + Λ(ζ)⟨z−ζ⟩^{−1})^s for s < 0: upper
/// envelopes for Λ(z)^s in terms of the base point ζ.
pub fn weight_power_envelope(w: &WeightFunction, s: f64, z: &[f64], zeta: &[f64]) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    let lz = w.value(zeta);
    let b = bracket(z, zeta);
    if s > 0.0 {
        lz.powf(s) * b.powf(s)
    } else {
        (1.0 + lz / b).powf(s)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BoxSpec {
    pub half_width: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub constant: f64,
    pub constant_doubled_samples: f64,
    pub constant_doubled_box: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightCheckReport {
    pub weight: String,
    pub temperance_constant: f64,
    pub slow_variation_constant: f64,
    pub anisotropy_constant: f64,
    pub temperance: PropertyCheck,
    pub slow_variation: PropertyCheck,
    pub anisotropy: PropertyCheck,
    pub sample_box: BoxSpec,
    pub n_samples: usize,
}

impl WeightCheckReport {
    pub fn all_pass(&self) -> bool {
        self.temperance.pass && self.slow_variation.pass && self.anisotropy.pass
    }
}

fn random_point(rng: &mut ChaCha8Rng, d: usize, l: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-l..=l)).collect()
}

/// Deterministic corner/axis points of the box, paired with the origin.
fn structured_pairs(d: usize, l: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut out = Vec::new();
    let origin = vec![0.0; d];
    for j in 0..d {
        for &s in &[-1.0, 1.0] {
            let mut z = vec![0.0; d];
            z[j] = s * l;
            out.push((z.clone(), origin.clone()));
            out.push((origin.clone(), z));
        }
    }
    out.push((vec![l; d], origin.clone()));
    out.push((origin, vec![l; d]));
    out
}

fn temperance(w: &WeightFunction, l: f64, n: usize, seed: u64) -> f64 {
    let d = w.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c: f64 = 0.0;
    for (z, zeta) in structured_pairs(d, l) {
        c = c.max(w.value(&z) / (w.value(&zeta) * bracket(&z, &zeta)));
    }
    for _ in 0..n {
        let z = random_point(&mut rng, d, l);
        let zeta = random_point(&mut rng, d, l);
        c = c.max(w.value(&z) / (w.value(&zeta) * bracket(&z, &zeta)));
    }
    c
}

fn slow_variation(w: &WeightFunction, l: f64, n: usize, seed: u64) -> f64 {
    let d = w.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5157);
    let mut c: f64 = 1.0;
    for _ in 0..n {
        let z = random_point(&mut rng, d, l);
        let lz = w.value(&z);
        let radius = slow_variation_radius(w) * lz;
        // a random point of the ball |ζ − z| ≤ κΛ(z)
        let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let r = radius * rng.random_range(0.0..=1.0f64);
        let zeta: Vec<f64> = z.iter().zip(&dir).map(|(a, u)| a + r * u / norm).collect();
        let lzeta = w.value(&zeta);
        c = c.max(lz / lzeta).max(lzeta / lz);
    }
    c
}

/// Ball factor κ for property ii). Radius mu·Λ(z) reaches the origin for the
/// Japanese bracket, so κ is capped at 1/2.
pub fn slow_variation_radius(w: &WeightFunction) -> f64 {
    w.mu.min(0.5)
}

fn anisotropy(w: &WeightFunction, l: f64, n: usize, seed: u64) -> f64 {
    let d = w.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa115);
    let mut c: f64 = 0.0;
    for _ in 0..n {
        let z = random_point(&mut rng, d, l);
        let t: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let tz: Vec<f64> = z.iter().zip(&t).map(|(a, b)| a * b).collect();
        c = c.max(w.value(&tz) / w.value(&z));
    }
    c
}

fn property(f: impl Fn(f64, usize) -> f64, l: f64, n: usize) -> PropertyCheck {
    let c1 = f(l, n);
    let c2 = f(l, 2 * n);
    // the doubled box contains the original one
    let c3 = c2.max(f(2.0 * l, 2 * n));
    let stable = |a: f64, b: f64| a.is_finite() && b.is_finite() && (b / a - 1.0).abs() <= 0.10;
    PropertyCheck {
        constant: c1,
        constant_doubled_samples: c2,
        constant_doubled_box: c3,
        pass: stable(c1, c2) && stable(c2, c3),
    }
}

/// Samples the three weight axioms on the box [−L, L]^{2n}. A property passes
/// when its constant is finite and moves by at most 10% both when the sample
/// count doubles and when the box doubles.
pub fn check_weight(w: &WeightFunction, bx: &BoxSpec, n_samples: usize, seed: u64) -> Result<WeightCheckReport> {
    if n_samples < 100 {
        return Err(Error::Input("check_weight needs at least 100 samples".into()));
    }
    let l = bx.half_width;
    let t = property(|l, n| temperance(w, l, n, seed), l, n_samples);
    let s = property(|l, n| slow_variation(w, l, n, seed), l, n_samples);
    let a = property(|l, n| anisotropy(w, l, n, seed), l, n_samples);
    Ok(WeightCheckReport {
        weight: w.name(),
        temperance_constant: t.constant.max(t.constant_doubled_samples),
        slow_variation_constant: s.constant.max(s.constant_doubled_samples),
        anisotropy_constant: a.constant.max(a.constant_doubled_samples),
        temperance: t,
        slow_variation: s,
        anisotropy: a,
        sample_box: bx.clone(),
        n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let jb = WeightFunction::japanese_bracket(1);
        assert_eq!(jb.eval(&[0.0, 0.0]).unwrap(), 1.0);
        let qh = WeightFunction::quasi_homogeneous(&[2, 1]).unwrap();
        assert!((qh.eval(&[1.0, 1.0]).unwrap() - 3f64.powf(0.25)).abs() < 1e-15);
        assert_eq!(qh.mu, 0.5);
        assert!(jb.eval(&[1.0]).is_err());
    }

    #[test]
    fn simplex_polyhedron_is_japanese_bracket() {
        let z = |a: i64, b: i64| vec![Rational64::from_integer(a), Rational64::from_integer(b)];
        let p = WeightFunction::polyhedron(vec![z(0, 0), z(1, 0), z(0, 1)], Rational64::from_integer(1)).unwrap();
        assert!((p.value(&[3.0, 4.0]) - 26f64.sqrt()).abs() < 1e-12);
        let jb = WeightFunction::japanese_bracket(1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let q = random_point(&mut rng, 2, 50.0);
            assert!((p.value(&q) - jb.value(&q)).abs() <= 1e-12 * jb.value(&q));
        }
    }

    #[test]
    fn envelope_examples() {
        let jb = WeightFunction::japanese_bracket(1);
        assert_eq!(weight_power_envelope(&jb, 0.0, &[1.0, 2.0], &[3.0, 4.0]), 1.0);
        let z = [1.5, -2.0];
        assert!((weight_power_envelope(&jb, 2.0, &z, &z) - jb.value(&z).powi(2)).abs() < 1e-12);
        let v = weight_power_envelope(&jb, -1.0, &[2.0, 0.0], &[0.0, 0.0]);
        assert!((v - 1.0 / (1.0 + 1.0 / 5f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn japanese_bracket_axioms() {
        let jb = WeightFunction::japanese_bracket(1);
        let r = check_weight(&jb, &BoxSpec { half_width: 10.0 }, 10_000, 0).unwrap();
        assert!(r.all_pass(), "{r:?}");
        // sharp constant of ⟨z⟩ ≤ C⟨ζ⟩⟨z−ζ⟩ is 2/√3, attained at ζ = z/2, |z|² = 2
        assert!(r.temperance_constant <= 2.0 / 3f64.sqrt() + 1e-9);
        let z = [2f64.sqrt(), 0.0];
        let zeta = [0.5f64.sqrt(), 0.0];
        let c = jb.value(&z) / (jb.value(&zeta) * bracket(&z, &zeta));
        assert!((c - 2.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn quasi_homogeneous_axioms() {
        let qh = WeightFunction::quasi_homogeneous(&[2, 1]).unwrap();
        let r = check_weight(&qh, &BoxSpec { half_width: 10.0 }, 10_000, 0).unwrap();
        assert!(r.all_pass(), "{r:?}");
    }

    #[test]
    fn exponential_is_not_temperate() {
        let e = WeightFunction::custom(1, "exp", 1.0, |z| z.iter().map(|v| v * v).sum::<f64>().sqrt().exp());
        let ratios: Vec<f64> = [5.0, 10.0, 20.0]
            .iter()
            .map(|&l| e.value(&[l, 0.0]) / (e.value(&[0.0, 0.0]) * bracket(&[l, 0.0], &[0.0, 0.0])))
            .collect();
        assert!(ratios[1] > 10.0 * ratios[0] && ratios[2] > 10.0 * ratios[1]);
        let r = check_weight(&e, &BoxSpec { half_width: 10.0 }, 1000, 0).unwrap();
        assert!(!r.temperance.pass);
    }

    #[test]
    fn gradients_match_differences() {
        let qh = WeightFunction::quasi_homogeneous(&[2, 1]).unwrap();
        let z = [1.3, -0.4];
        let g = qh.gradient(&z);
        for i in 0..2 {
            let h = 1e-6;
            let mut a = z;
            let mut b = z;
            a[i] += h;
            b[i] -= h;
            let fd = (qh.value(&a) - qh.value(&b)) / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-7);
        }
    }
}
