//! Exact polynomial and rational arithmetic over Gaussian rationals with
//! NetExpr coefficients.

mod poly;
mod rational;
mod symbol;

pub use poly::{Monomial, NumPoly, Poly};
pub use rational::{NumRational, RationalExpr};
pub use symbol::{
    amplitude_var_names, net_i, symbol_var_names, AmplitudeExpr, ClaimedClass, CompiledSymbol, Cutoff, SymbolExpr,
    SymbolPart,
};

/// Builds one image per variable for [`Poly::substitute`]: the affine map
/// z_i ↦ Σ_j A_ij w_j + b_i with Gaussian-rational entries.
pub fn affine_images(
    out_vars: usize,
    rows: &[(Vec<(usize, crate::coeff::GaussRat)>, crate::coeff::GaussRat)],
) -> Vec<Poly> {
    rows.iter()
        .map(|(lin, c)| {
            let mut p = Poly::gauss(out_vars, c.clone());
            for (j, a) in lin {
                p = p.add(&Poly::var(out_vars, *j).scale_gauss(a));
            }
            p
        })
        .collect()
}

/// substitute_affine: exact expansion of e after the affine substitution.
pub fn substitute_affine(
    e: &Poly,
    out_vars: usize,
    rows: &[(Vec<(usize, crate::coeff::GaussRat)>, crate::coeff::GaussRat)],
) -> Poly {
    e.substitute(&affine_images(out_vars, rows))
}

#[cfg(test)]
mod tests;
