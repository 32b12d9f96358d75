//! Time integration of the support-function flows and the general-measure pipeline.

pub mod checks;
pub mod engine;
pub mod general;
pub mod spec;
pub mod trace;

pub use checks::{c0_barrier_check, growth_hypothesis, BarrierDiagnostics, GrowthHypothesis};
pub use engine::{
    residual, rhs, run, run_from, step, step_with_dt, zeta, Diagnostics, FlowFailure, FlowOutcome, FlowState,
    InvariantReport, RunStatus, SolverOptions, BARRIER_STREAK_LIMIT,
};
pub use spec::{default_potential, FlowKind, FlowLaw, FlowSpec, EVEN_DETECT_TOL};
pub use trace::{FlowTrace, TraceRow, TRACE_HEADER};
pub use general::{
    blows_up_at_zero, default_epsilon_schedule, solve_general_orlicz, GeneralOptions, GeneralSolution, StageReport,
};
