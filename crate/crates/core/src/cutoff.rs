//! The smooth cutoff ψ with ψ = 0 on (−∞, 1], ψ = 1 on [2, ∞).

use crate::jet::Jet;
use num_complex::Complex64;

fn glue(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// ψ(t) = g(t−1)/(g(t−1)+g(2−t)) with g(s) = exp(−1/s) for s > 0.
pub fn psi(t: f64) -> f64 {
    if t <= 1.0 {
        0.0
    } else if t >= 2.0 {
        1.0
    } else {
        let a = glue(t - 1.0);
        a / (a + glue(2.0 - t))
    }
}

pub fn psi_jet(t: &Jet) -> Jet {
    let t0 = t.value().re;
    let sp = t.space();
    if t0 <= 1.0 {
        Jet::constant(sp, Complex64::new(0.0, 0.0))
    } else if t0 >= 2.0 {
        Jet::constant(sp, Complex64::new(1.0, 0.0))
    } else {
        let one = Complex64::new(1.0, 0.0);
        let a = t.add_const(-one).recip().scale(-one).exp();
        let b = t.scale(-one).add_const(2.0 * one).recip().scale(-one).exp();
        a.div(&a.add(&b))
    }
}

/// Radial cutoff ψ(|z|/R).
pub fn radial(z: &[f64], radius: f64) -> f64 {
    let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    psi(r / radius)
}

/// Jet of ψ(|z|/R) at the point underlying `z` (one jet per coordinate).
pub fn radial_jet(z: &[Jet], radius: f64) -> Jet {
    let sp = z[0].space().clone();
    let r0 = z.iter().map(|j| j.value().re.powi(2)).sum::<f64>().sqrt();
    if r0 <= radius {
        return Jet::constant(&sp, Complex64::new(0.0, 0.0));
    }
    if r0 >= 2.0 * radius {
        return Jet::constant(&sp, Complex64::new(1.0, 0.0));
    }
    let mut s = Jet::constant(&sp, Complex64::new(0.0, 0.0));
    for j in z {
        s = s.add(&j.mul(j));
    }
    psi_jet(&s.sqrt().scale(Complex64::new(1.0 / radius, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetSpace;

    #[test]
    fn plateau_values() {
        assert_eq!(psi(0.5), 0.0);
        assert_eq!(psi(1.0), 0.0);
        assert_eq!(psi(2.0), 1.0);
        assert!((psi(1.5) - 0.5).abs() < 1e-15);
        let mut last = 0.0;
        for k in 0..=100 {
            let v = psi(1.0 + k as f64 / 100.0);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn jet_matches_finite_difference() {
        let sp = JetSpace::new(1, 2);
        for &t0 in &[1.2, 1.5, 1.83] {
            let j = psi_jet(&Jet::variable(&sp, 0, t0));
            let h = 1e-4;
            let fd1 = (psi(t0 + h) - psi(t0 - h)) / (2.0 * h);
            let fd2 = (psi(t0 + h) - 2.0 * psi(t0) + psi(t0 - h)) / (h * h);
            assert!((j.derivative(&[1]).re - fd1).abs() < 1e-6);
            assert!((j.derivative(&[2]).re - fd2).abs() < 1e-4);
        }
    }
}
