//! Sweeps over one model parameter and the estimators built on them:
//! fluctuation peaks, crossover locators, cutoff convergence, curve
//! collapse and the S_x cascade of the effective spin model.
//!
//! Energies follow the crate convention ω_c = 1. Sweep axes are the
//! dimensionless ratios g/ω_c, J/ω_d and J_c/J.

mod cascade;
mod collapse;
mod cutoff;
mod peaks;
mod point;
mod sweep;

pub use cascade::{obd_cascade, Cascade, CascadeRow, CascadeStep};
pub use collapse::{rescale_collapse, Collapse, Curve};
pub use cutoff::{converge_cutoff, CutoffLevel, CutoffOptions, CutoffReport};
pub use peaks::{crossover_gradient_drop, crossover_polaron_peak, fluctuation_peak, locate_peak, negative_gradient, PeakEstimate};
pub use point::{ground_point, PointParams, PointSolution};
pub use sweep::{run_sweep, run_sweep_with, CutoffPolicy, Grid, Spacing, SweepAxis, SweepRow, SweepSpec, SweepTable};
