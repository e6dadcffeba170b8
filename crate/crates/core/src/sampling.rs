//! Sample specifications, deterministic point sets and log-log fits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    /// Box [−L, L]^d.
    pub half_width: f64,
    pub n_random: usize,
    /// ε = 2^{−j}, j = eps_j_min..=eps_j_max.
    pub eps_j_min: i32,
    pub eps_j_max: i32,
    pub seed: u64,
    /// Points with |z| below this radius are dropped (cutoff annulus exclusion).
    pub exclude_radius: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            half_width: 10.0,
            n_random: 2000,
            eps_j_min: 1,
            eps_j_max: 20,
            seed: 0,
            exclude_radius: 0.0,
        }
    }
}

impl SampleSpec {
    pub fn eps_grid(&self) -> Vec<f64> {
        (self.eps_j_min..=self.eps_j_max).map(|j| 2f64.powi(-j)).collect()
    }

    /// Grid truncated to its first half (used for the ε-extension stability test).
    pub fn half_eps_grid(&self) -> Vec<f64> {
        let mid = self.eps_j_min + (self.eps_j_max - self.eps_j_min) / 2;
        (self.eps_j_min..=mid).map(|j| 2f64.powi(-j)).collect()
    }

    pub fn with_box(&self, half_width: f64) -> Self {
        SampleSpec {
            half_width,
            ..self.clone()
        }
    }
}

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Structured points (axes, diagonals, fixed rays, corners) plus uniform and
/// log-radial random points in the box, all with |z| ≥ exclude_radius.
pub fn sample_points(dim: usize, spec: &SampleSpec) -> Vec<Vec<f64>> {
    let l = spec.half_width;
    let mut pts: Vec<Vec<f64>> = Vec::new();
    let r_min = spec.exclude_radius.max(0.0);
    let mut radii = vec![0.0, 0.5, 1.0];
    let mut r = 2.0;
    while r <= l {
        radii.push(r);
        r *= 2.0;
    }
    radii.push(l);
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for j in 0..dim {
        for &s in &[1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[j] = s;
            dirs.push(d);
        }
    }
    for j in 0..dim {
        for k in j + 1..dim {
            for &(a, b) in &[(1.0, 1.0), (1.0, -1.0), (0.6, 0.8), (-0.8, 0.6)] {
                let mut d = vec![0.0; dim];
                d[j] = a;
                d[k] = b;
                dirs.push(d);
            }
        }
    }
    for d in &dirs {
        let nd = norm(d);
        for &r in &radii {
            pts.push(d.iter().map(|v| v / nd * r).collect());
        }
        // also the box faces along the direction
        let m = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
        pts.push(d.iter().map(|v| v / m * l).collect());
    }
    // corners (capped so that d ≤ 6 stays small)
    if dim <= 6 {
        for mask in 0..(1usize << dim) {
            pts.push((0..dim).map(|j| if mask >> j & 1 == 1 { l } else { -l }).collect());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..spec.n_random / 2 {
        pts.push((0..dim).map(|_| rng.random_range(-l..=l)).collect());
    }
    let lmax = (l * (dim as f64).sqrt()).max(1.0);
    for _ in 0..spec.n_random - spec.n_random / 2 {
        let d: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0f64)).collect();
        let nd = norm(&d).max(1e-12);
        let lo = r_min.max(0.25);
        let rad = (lo.ln() + rng.random_range(0.0..=1.0f64) * (lmax.ln() - lo.ln())).exp();
        let p: Vec<f64> = d.iter().map(|v| v / nd * rad).collect();
        if p.iter().all(|v| v.abs() <= l) {
            pts.push(p);
        }
    }
    pts.retain(|p| norm(p) >= r_min);
    pts
}

/// Least-squares slope and intercept of y against x.
pub fn lsq(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let s = sxy / sxx;
    (s, my - s * mx)
}

/// Fitted exponent of |f| along radii: slope of log|f(r)| against log r.
pub fn loglog_slope(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, v)| *v > 0.0 && v.is_finite())
        .map(|(r, v)| (r.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NEG_INFINITY;
    }
    lsq(&pts).0
}

/// Radii 2^{a}, 2^{a+1/k}, …, 2^{b}.
pub fn dyadic_radii(a: f64, b: f64, per_octave: usize) -> Vec<f64> {
    let steps = ((b - a) * per_octave as f64).round() as usize;
    (0..=steps).map(|i| 2f64.powf(a + i as f64 / per_octave as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_deterministic_and_inside() {
        let spec = SampleSpec::default();
        let a = sample_points(2, &spec);
        let b = sample_points(2, &spec);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.iter().all(|v| v.abs() <= 10.0 + 1e-12)));
        let spec = SampleSpec {
            exclude_radius: 3.0,
            ..SampleSpec::default()
        };
        assert!(sample_points(2, &spec).iter().all(|p| norm(p) >= 3.0));
    }

    #[test]
    fn slope_of_power() {
        let s: Vec<(f64, f64)> = dyadic_radii(3.0, 8.0, 4).into_iter().map(|r| (r, 5.0 * r.powf(-2.5))).collect();
        assert!((loglog_slope(&s) + 2.5).abs() < 1e-12);
    }
}
