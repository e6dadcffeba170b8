//! Grids, the discrete Colombeau-Fourier transform, operator action, oscillatory
//! integrals and weak-equality testing.

mod grid;
mod osc;
mod regularity;
mod weak;

pub use grid::{
    apply_operator, apply_symbol_fn, apply_theta_symbol, cf_transform, read_grid, write_grid, Direction, Domain,
    GridFunction, GridMeta, Variant, MAX_POINTS_2D,
};
pub use osc::{osc_integral, richardson, OscIntResult, OscSchedule, OscStatus, PhaseFunction};
pub use regularity::{regularity_experiment, residual_symbol_fn, RegularityReport};
pub use weak::{
    hermite_function, hermite_tests, weak_equal, TestFunction, TestPairing, WeakEqReport, WeakVerdict, NOISE_REL,
    WEAK_EPS_J,
};

#[cfg(test)]
mod tests;
