//! Gaussian-rational coefficients.

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;
pub type GaussRat = Complex<BigRational>;

pub fn rat(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_from_r64(r: Rational64) -> Rat {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

pub fn g_re(r: Rat) -> GaussRat {
    Complex::new(r, Rat::zero())
}

pub fn g_int(n: i64) -> GaussRat {
    g_re(Rat::from_integer(BigInt::from(n)))
}

pub fn g_rat(n: i64, d: i64) -> GaussRat {
    g_re(rat(n, d))
}

pub fn g_i() -> GaussRat {
    Complex::new(Rat::zero(), Rat::one())
}

pub fn g_zero() -> GaussRat {
    Complex::new(Rat::zero(), Rat::zero())
}

pub fn g_one() -> GaussRat {
    Complex::new(Rat::one(), Rat::zero())
}

pub fn g_is_zero(c: &GaussRat) -> bool {
    c.re.is_zero() && c.im.is_zero()
}

pub fn g_is_one(c: &GaussRat) -> bool {
    c.re.is_one() && c.im.is_zero()
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fallback for huge numerators/denominators.
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub fn g_to_c64(c: &GaussRat) -> Complex64 {
    Complex64::new(rat_to_f64(&c.re), rat_to_f64(&c.im))
}

/// (−i)^k
pub fn minus_i_pow(k: u32) -> GaussRat {
    match k % 4 {
        0 => g_one(),
        1 => -g_i(),
        2 => -g_one(),
        _ => g_i(),
    }
}

pub fn g_pow(c: &GaussRat, k: u32) -> GaussRat {
    let mut r = g_one();
    for _ in 0..k {
        r = &r * c;
    }
    r
}

pub fn g_inv(c: &GaussRat) -> GaussRat {
    g_one() / c.clone()
}

/// |c|² as an exact rational.
pub fn g_norm_sqr(c: &GaussRat) -> Rat {
    &c.re * &c.re + &c.im * &c.im
}

fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Text form accepted by the expression grammar: `3/2`, `-1/4*i`, `(1/2+3*i)`.
pub fn fmt_gauss(c: &GaussRat) -> String {
    if c.im.is_zero() {
        return fmt_rat(&c.re);
    }
    let im = if c.im.is_one() {
        "i".to_string()
    } else if (-c.im.clone()).is_one() {
        "-i".to_string()
    } else {
        format!("{}*i", fmt_rat(&c.im))
    };
    if c.re.is_zero() {
        return im;
    }
    let sign = if c.im.is_negative() { "" } else { "+" };
    format!("({}{}{})", fmt_rat(&c.re), sign, im)
}
