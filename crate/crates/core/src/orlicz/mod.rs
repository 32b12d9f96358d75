//! Orlicz weights `φ`, their potentials `ϕ`, the regularized weights used
//! for general measures, and Orlicz norms.

mod norm;
mod potential;
mod regularized;
mod weight;

pub use norm::{orlicz_norm, orlicz_norm_fn, orlicz_norm_weighted, OrliczFunction, NORM_REL_TOL};
pub use potential::{
    energy, make_potential, CaseParams, IntegralCondition, Potential, PotentialCase, DEFAULT_TAIL_CUT,
};
pub use regularized::{
    gap_report, make_regularized, smooth_step, uniform_gap_bounds, GapBounds, GapReport, GapViolation,
    RegularizedWeight, EPSILON_MAX, GAP_SAMPLES,
};
pub use weight::{Weight, WeightFunction, WeightKind, PROBE_RANGE};
