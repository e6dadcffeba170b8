//! Symbol calculus for ε-parameterized global pseudo-differential operators.
//!
//! The crate is split along the layers of the calculus:
//!
//! * [`nets`]: closed-form ε-nets, their moderate/negligible classification and mollifiers.
//! * [`weights`]: weight functions Λ on ℝ^{2n} and sampled checks of their defining estimates.
//! * [`symbolic`]: exact polynomial and rational arithmetic over Gaussian rationals.
//! * [`classes`]: sampled membership checks for symbol and amplitude classes, asymptotic sums.
//! * [`calculus`]: θ-symbols, composition, hypoellipticity certificates and parametrices.
//! * [`quantize`]: grid functions, operator action, oscillatory integrals and weak equality.

pub mod calculus;
pub mod coeff;
pub mod classes;
pub mod cutoff;
pub mod error;
pub mod jet;
pub mod multi_index;
pub mod nets;
pub mod parse;
pub mod quantize;
pub mod sampling;
pub mod symbolic;
pub mod weights;

pub use error::{Error, Result};
