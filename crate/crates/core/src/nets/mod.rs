//! Closed-form ε-nets, classification and mollifiers.

mod estimate;
mod mollifier;
mod net;

pub use estimate::{estimate_exponent, eps_grid, EstimateOptions, ExponentEstimate, Q_MAX};
pub use mollifier::{make_mollifier, Mollifier, Profile};
pub use net::{classify_net, net_arith, GeneralizedNumber, NetClass, NetExpr, NetKey, NetOp};
