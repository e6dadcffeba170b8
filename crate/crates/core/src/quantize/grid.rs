use crate::calculus::{change_theta, ThetaSymbol};
use crate::coeff::Rat;
use crate::error::{Error, Result};
use crate::nets::Mollifier;
use crate::symbolic::SymbolExpr;
use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// Largest points per axis accepted for n = 2.
pub const MAX_POINTS_2D: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// x_k = −L + k·2L/N.
    Space,
    /// ξ_j = (j − N/2)·π/L, the dual of the space grid with the same L and N.
    Frequency,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    A,
    Atilde,
}

/// Samples of u_ε on a uniform periodic grid of (−L, L)^n, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub n: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    pub samples: Vec<Complex64>,
    pub eps: f64,
    pub domain: Domain,
    /// φ̂_ε does not vanish inside the box, so insertions of φ̂_ε are truncated.
    pub plateau_truncated: bool,
}

impl GridFunction {
    pub fn new(n: usize, half_width: f64, points: usize, eps: f64, samples: Vec<Complex64>) -> Result<Self> {
        validate(n, half_width, points, eps)?;
        if samples.len() != points.pow(n as u32) {
            return Err(Error::Dimension {
                expected: points.pow(n as u32),
                got: samples.len(),
            });
        }
        Ok(GridFunction {
            n,
            half_width,
            points_per_axis: points,
            samples,
            eps,
            domain: Domain::Space,
            plateau_truncated: false,
        })
    }

    pub fn from_fn(
        n: usize,
        half_width: f64,
        points: usize,
        eps: f64,
        f: impl Fn(&[f64]) -> Complex64 + Sync,
    ) -> Result<Self> {
        validate(n, half_width, points, eps)?;
        let mut g = GridFunction {
            n,
            half_width,
            points_per_axis: points,
            samples: Vec::new(),
            eps,
            domain: Domain::Space,
            plateau_truncated: false,
        };
        g.samples = (0..g.len()).into_par_iter().map(|p| f(&g.point(p))).collect();
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn step(&self) -> f64 {
        match self.domain {
            Domain::Space => 2.0 * self.half_width / self.points_per_axis as f64,
            Domain::Frequency => PI / self.half_width,
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.step().powi(self.n as i32)
    }

    pub fn axis(&self) -> Vec<f64> {
        axis(self.domain, self.half_width, self.points_per_axis)
    }

    pub fn indices(&self, p: usize) -> Vec<usize> {
        let m = self.points_per_axis;
        let mut out = vec![0; self.n];
        let mut r = p;
        for d in (0..self.n).rev() {
            out[d] = r % m;
            r /= m;
        }
        out
    }

    pub fn point(&self, p: usize) -> Vec<f64> {
        let h = self.step();
        let m = self.points_per_axis as f64;
        self.indices(p)
            .into_iter()
            .map(|k| match self.domain {
                Domain::Space => -self.half_width + k as f64 * h,
                Domain::Frequency => (k as f64 - m / 2.0) * h,
            })
            .collect()
    }

    pub fn same_grid(&self, o: &GridFunction) -> bool {
        self.n == o.n
            && self.half_width == o.half_width
            && self.points_per_axis == o.points_per_axis
            && self.domain == o.domain
    }

    fn check_same(&self, o: &GridFunction) -> Result<()> {
        if !self.same_grid(o) {
            return Err(Error::GridMismatch(format!(
                "(n={}, L={}, N={}) vs (n={}, L={}, N={})",
                self.n, self.half_width, self.points_per_axis, o.n, o.half_width, o.points_per_axis
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(&[f64], Complex64) -> Complex64 + Sync) -> GridFunction {
        let samples = (0..self.len())
            .into_par_iter()
            .map(|p| f(&self.point(p), self.samples[p]))
            .collect();
        GridFunction {
            samples,
            ..self.clone()
        }
    }

    pub fn add(&self, o: &GridFunction) -> Result<GridFunction> {
        self.check_same(o)?;
        let samples = self.samples.iter().zip(&o.samples).map(|(a, b)| a + b).collect();
        Ok(GridFunction {
            samples,
            plateau_truncated: self.plateau_truncated || o.plateau_truncated,
            ..self.clone()
        })
    }

    pub fn sub(&self, o: &GridFunction) -> Result<GridFunction> {
        self.check_same(o)?;
        let samples = self.samples.iter().zip(&o.samples).map(|(a, b)| a - b).collect();
        Ok(GridFunction {
            samples,
            plateau_truncated: self.plateau_truncated || o.plateau_truncated,
            ..self.clone()
        })
    }

    pub fn scale(&self, c: Complex64) -> GridFunction {
        GridFunction {
            samples: self.samples.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    pub fn norm_inf(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// (Σ |u|² · cell)^{1/2}.
    pub fn norm_l2(&self) -> f64 {
        (self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_volume()).sqrt()
    }

    pub fn max_abs_diff(&self, o: &GridFunction) -> Result<f64> {
        self.check_same(o)?;
        Ok(self
            .samples
            .iter()
            .zip(&o.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn meta(&self) -> GridMeta {
        GridMeta {
            n: self.n,
            half_width: self.half_width,
            points: self.points_per_axis,
            eps: self.eps,
            domain: self.domain,
        }
    }
}

fn validate(n: usize, half_width: f64, points: usize, eps: f64) -> Result<()> {
    if !(1..=2).contains(&n) {
        return Err(Error::Input(format!("grid dimension must be 1 or 2, got {n}")));
    }
    if !points.is_power_of_two() || points < 16 {
        return Err(Error::Input(format!("points per axis must be a power of two ≥ 16, got {points}")));
    }
    if n == 2 && points > MAX_POINTS_2D {
        return Err(Error::Input(format!("n = 2 grids are capped at {MAX_POINTS_2D} points per axis")));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::Input(format!("invalid half width {half_width}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Input(format!("ε must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

fn axis(domain: Domain, l: f64, m: usize) -> Vec<f64> {
    match domain {
        Domain::Space => (0..m).map(|k| -l + k as f64 * 2.0 * l / m as f64).collect(),
        Domain::Frequency => (0..m).map(|j| (j as f64 - m as f64 / 2.0) * PI / l).collect(),
    }
}

fn fft_nd(data: &mut [Complex64], n: usize, m: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };
    fft.process(data);
    if n == 2 {
        let mut t = transpose(data, m);
        fft.process(&mut t);
        data.copy_from_slice(&transpose(&t, m));
    }
}

fn transpose(data: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut t = vec![Complex64::zero(); data.len()];
    for r in 0..m {
        for c in 0..m {
            t[c * m + r] = data[r * m + c];
        }
    }
    t
}

fn parity(idx: &[usize]) -> f64 {
    if idx.iter().sum::<usize>() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Σ_k e^{−i x_k·ξ_j} v_k dx^n on the dual grid, through one FFT.
fn forward_raw(v: &GridFunction) -> Vec<Complex64> {
    let (n, m, l) = (v.n, v.points_per_axis, v.half_width);
    let dx = 2.0 * l / m as f64;
    let mut data: Vec<Complex64> = (0..v.len()).map(|p| v.samples[p] * parity(&v.indices(p))).collect();
    fft_nd(&mut data, n, m, false);
    let dual = GridFunction {
        domain: Domain::Frequency,
        samples: Vec::new(),
        ..v.clone()
    };
    let vol = dx.powi(n as i32);
    for (p, d) in data.iter_mut().enumerate() {
        let s: f64 = dual.point(p).iter().sum();
        *d *= Complex64::from_polar(vol, l * s);
    }
    data
}

/// Σ_j e^{+i x_k·ξ_j} w_j (dξ/2π)^n on the space grid.
fn inverse_raw(w: &[Complex64], like: &GridFunction) -> Vec<Complex64> {
    let (n, m, l) = (like.n, like.points_per_axis, like.half_width);
    let dual = GridFunction {
        domain: Domain::Frequency,
        samples: Vec::new(),
        ..like.clone()
    };
    let mut data: Vec<Complex64> = w
        .iter()
        .enumerate()
        .map(|(p, v)| {
            let s: f64 = dual.point(p).iter().sum();
            v * Complex64::from_polar(1.0, -l * s)
        })
        .collect();
    fft_nd(&mut data, n, m, true);
    let c = (PI / l / (2.0 * PI)).powi(n as i32);
    for (p, d) in data.iter_mut().enumerate() {
        *d *= c * parity(&dual.indices(p));
    }
    data
}

fn truncates(phi: &Mollifier, extent: f64, eps: f64) -> bool {
    extent < phi.outer_radius() / eps
}

/// Discrete Colombeau-Fourier transform.
///
/// Forward: F_φ u(ξ_j) = Σ_k e^{−i x_k ξ_j} u(x_k) φ̂_ε(x_k) dx^n.
/// Inverse: Σ_j e^{i x_k ξ_j} û(ξ_j) φ̂_ε(ξ_j) (dξ/2π)^n.
pub fn cf_transform(u: &GridFunction, phi: &Mollifier, direction: Direction) -> Result<GridFunction> {
    let m = u.points_per_axis;
    match (direction, u.domain) {
        (Direction::Forward, Domain::Space) => {
            let weighted = u.map(|x, v| v * phi.fourier_eps(x, u.eps));
            Ok(GridFunction {
                samples: forward_raw(&weighted),
                domain: Domain::Frequency,
                plateau_truncated: truncates(phi, u.half_width, u.eps),
                ..u.clone()
            })
        }
        (Direction::Inverse, Domain::Frequency) => {
            let weighted = u.map(|xi, v| v * phi.fourier_eps(xi, u.eps));
            let extent = m as f64 * PI / (2.0 * u.half_width);
            Ok(GridFunction {
                samples: inverse_raw(&weighted.samples, u),
                domain: Domain::Space,
                plateau_truncated: truncates(phi, extent, u.eps),
                ..u.clone()
            })
        }
        (d, dom) => Err(Error::Input(format!("{d:?} transform needs input on the {} grid", match dom {
            Domain::Space => "frequency",
            Domain::Frequency => "space",
        }))),
    }
}

/// ∫ e^{ixξ} a(x, ξ) (u φ̂_ε)^(ξ) đξ on the grid, with a given as a function of
/// z = (x, ξ). Symbols that ignore x go through one inverse FFT; otherwise
/// every output point sums over the dual grid.
pub fn apply_symbol_fn(
    a: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    x_dependent: bool,
    u: &GridFunction,
    phi: &Mollifier,
    variant: Variant,
) -> Result<GridFunction> {
    if u.domain != Domain::Space {
        return Err(Error::Input("operators act on space-grid functions".into()));
    }
    let (n, m) = (u.n, u.points_per_axis);
    let eps = u.eps;
    let weighted = u.map(|x, v| v * phi.fourier_eps(x, eps));
    let mut w = forward_raw(&weighted);
    let dual = GridFunction {
        domain: Domain::Frequency,
        samples: Vec::new(),
        ..u.clone()
    };
    if variant == Variant::Atilde {
        for (p, v) in w.iter_mut().enumerate() {
            *v *= phi.fourier_eps(&dual.point(p), eps);
        }
    }
    let samples = if !x_dependent {
        for (p, v) in w.iter_mut().enumerate() {
            let mut z = vec![0.0; n];
            z.extend(dual.point(p));
            *v *= a(&z);
        }
        inverse_raw(&w, u)
    } else {
        let xs = axis(Domain::Space, u.half_width, m);
        let xis = axis(Domain::Frequency, u.half_width, m);
        let e: Vec<Complex64> = (0..m * m)
            .map(|q| Complex64::from_polar(1.0, xs[q / m] * xis[q % m]))
            .collect();
        let c = (PI / u.half_width / (2.0 * PI)).powi(n as i32);
        (0..u.len())
            .into_par_iter()
            .map(|p| {
                let kx = u.indices(p);
                let mut z = u.point(p);
                z.extend(std::iter::repeat(0.0).take(n));
                let mut s = Complex64::zero();
                for (q, wq) in w.iter().enumerate() {
                    if *wq == Complex64::zero() {
                        continue;
                    }
                    let kj = dual.indices(q);
                    let mut ph = Complex64::new(1.0, 0.0);
                    for d in 0..n {
                        ph *= e[kx[d] * m + kj[d]];
                        z[n + d] = xis[kj[d]];
                    }
                    s += ph * a(&z) * wq;
                }
                s * c
            })
            .collect()
    };
    Ok(GridFunction {
        samples,
        domain: Domain::Space,
        plateau_truncated: truncates(phi, u.half_width, eps),
        ..u.clone()
    })
}

fn depends_on_x(a: &SymbolExpr) -> bool {
    a.has_cutoff() || a.parts().iter().any(|p| (0..a.n()).any(|v| p.body.depends_on(v)))
}

/// Operator action of a 0-symbol a(x, ξ) at ε = u.eps.
pub fn apply_operator(a: &SymbolExpr, u: &GridFunction, phi: &Mollifier, variant: Variant) -> Result<GridFunction> {
    if a.n() != u.n {
        return Err(Error::Dimension {
            expected: u.n,
            got: a.n(),
        });
    }
    let c = a.compile(u.eps);
    apply_symbol_fn(&|z: &[f64]| c.eval(z), depends_on_x(a), u, phi, variant)
}

/// Reduces a θ-symbol to θ = 0 and applies it.
pub fn apply_theta_symbol(b: &ThetaSymbol, u: &GridFunction, phi: &Mollifier, variant: Variant) -> Result<GridFunction> {
    let zero: Vec<Rat> = vec![Rat::zero(); b.n()];
    let b0 = if b.theta.iter().all(|t| t.is_zero()) {
        b.total()
    } else {
        change_theta(b, &zero, None)?.total()
    };
    apply_operator(&b0, u, phi, variant)
}

/// JSON sidecar of a binary grid file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub points: usize,
    pub eps: f64,
    #[serde(default = "space")]
    pub domain: Domain,
}

fn space() -> Domain {
    Domain::Space
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Input(format!("{}: {e}", path.display()))
}

/// Writes little-endian f32 (re, im) pairs to `path` and the metadata to `path.json`.
pub fn write_grid(u: &GridFunction, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 * u.samples.len());
    for v in &u.samples {
        bytes.extend_from_slice(&(v.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))?;
    let meta = serde_json::to_string_pretty(&u.meta()).map_err(|e| io_err(path, e))?;
    let side = sidecar(path);
    std::fs::write(&side, meta).map_err(|e| io_err(&side, e))
}

pub fn read_grid(path: &Path) -> Result<GridFunction> {
    let side = sidecar(path);
    let text = std::fs::read_to_string(&side).map_err(|e| io_err(&side, e))?;
    let meta: GridMeta = serde_json::from_str(&text).map_err(|e| io_err(&side, e))?;
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(io_err(path, "length is not a multiple of 8 bytes"));
    }
    let samples: Vec<Complex64> = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    let mut g = GridFunction::new(meta.n, meta.half_width, meta.points, meta.eps, samples)?;
    g.domain = meta.domain;
    Ok(g)
}
