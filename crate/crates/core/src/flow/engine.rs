use std::collections::VecDeque;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::checks::barrier_bound;
use crate::flow::spec::{FlowLaw, FlowSpec};
use crate::flow::trace::{FlowTrace, TraceRow};
use crate::geometry::radii::{binomial, elementary_symmetric};
use crate::geometry::{radii_matrix, widths, Resolution, SphereGrid, SupportField};
use crate::orlicz::WeightFunction;

const PAR_THRESHOLD: usize = 4096;

/// Largest eigenvalue magnitude of the fourth-order second-difference stencil, times `Δ²`.
const STENCIL_SPECTRAL_RADIUS: f64 = 16.0 / 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub dt_max: f64,
    pub residual_tol: f64,
    pub t_max: f64,
    pub max_steps: Option<u64>,
    /// Stall when the residual fails to drop by `stall_rel` (relative) over this many steps.
    pub stall_window: usize,
    pub stall_rel: f64,
    /// Fraction of the explicit stability limit used for `dt`.
    pub c_stab: f64,
    /// Bound on `dt · max|∂_t h| / min h`.
    pub max_rel_change: f64,
    pub max_retries: u32,
    pub trace_stride: usize,
    /// Rows of an S² grid with `sin θ` below this are polar-filtered.
    pub polar_ref_sin: f64,
    pub enforce_invariants: bool,
    /// Relative slack on the monotone quantities.
    pub monotone_tol: f64,
    /// Relative slack on `max |h(u) − h(−u)|` for even problems.
    pub even_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            dt_max: 1e-2,
            residual_tol: 1e-6,
            t_max: 50.0,
            max_steps: None,
            stall_window: 500,
            stall_rel: 1e-3,
            c_stab: 0.8,
            max_rel_change: 0.05,
            max_retries: 20,
            trace_stride: 1,
            polar_ref_sin: (PI / 3.0).sin(),
            enforce_invariants: true,
            monotone_tol: 1e-10,
            even_tol: 1e-8,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let positive = |name: &str, v: f64, errs: &mut Vec<String>| {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{name} must be positive and finite, got {v}"));
            }
        };
        positive("dt_max", self.dt_max, &mut errs);
        positive("residual_tol", self.residual_tol, &mut errs);
        positive("t_max", self.t_max, &mut errs);
        positive("stall_rel", self.stall_rel, &mut errs);
        positive("c_stab", self.c_stab, &mut errs);
        positive("max_rel_change", self.max_rel_change, &mut errs);
        positive("polar_ref_sin", self.polar_ref_sin, &mut errs);
        if !(self.monotone_tol >= 0.0) {
            errs.push(format!("monotone_tol must be non-negative, got {}", self.monotone_tol));
        }
        if !(self.even_tol >= 0.0) {
            errs.push(format!("even_tol must be non-negative, got {}", self.even_tol));
        }
        if self.stall_window == 0 {
            errs.push("stall_window must be at least 1".into());
        }
        if self.trace_stride == 0 {
            errs.push("trace_stride must be at least 1".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Everything derived from one support function that the stepper needs.
#[derive(Clone, Debug)]
pub(crate) struct Eval {
    pub rhs: Vec<f64>,
    /// The constant the speed relaxes to: `ζ` or 1.
    pub gamma: f64,
    pub sigma_n: Vec<f64>,
    pub min_eigenvalue: f64,
    /// Coefficient of the highest-order term in the linearized rhs.
    pub diffusion: Vec<f64>,
    pub residual: f64,
}

/// Monotone and conserved quantities of one state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `∫ϕ(h)/f`, oriented for the unnormalized flow; NaN when undefined.
    pub energy: f64,
    pub volume: f64,
    pub lyapunov: f64,
    pub eta: f64,
    pub hmin: f64,
    pub hmax: f64,
    pub wminus: f64,
    pub wplus: f64,
    pub min_eigenvalue: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub h: SupportField,
    pub t: f64,
    /// Size of the step that produced this state; zero initially.
    pub dt: f64,
    pub step_count: u64,
    /// Rejected attempts before this state was accepted.
    pub retries: u32,
    pub diagnostics: Diagnostics,
    eval: Arc<Eval>,
}

impl FlowState {
    pub fn initial(spec: &FlowSpec, opts: &SolverOptions) -> Result<Self> {
        let h = spec.initial().clone();
        let ev = evaluate(spec, &h, opts)?;
        Self::assemble(spec, h, 0.0, 0.0, 0, 0, ev)
    }

    fn assemble(spec: &FlowSpec, h: SupportField, t: f64, dt: f64, step_count: u64, retries: u32, ev: Eval) -> Result<Self> {
        let diagnostics = diagnose(spec, &h, &ev)?;
        Ok(FlowState {
            h,
            t,
            dt,
            step_count,
            retries,
            diagnostics,
            eval: Arc::new(ev),
        })
    }

    /// `∂_t h` at this state.
    pub fn rate(&self) -> &[f64] {
        &self.eval.rhs
    }

    pub fn gamma(&self) -> f64 {
        self.eval.gamma
    }

    /// Restarts from `h` with the clock and step size of `self`.
    pub fn with_body(&self, spec: &FlowSpec, h: SupportField, opts: &SolverOptions) -> Result<Self> {
        let ev = evaluate(spec, &h, opts)?;
        Self::assemble(spec, h, self.t, self.dt, self.step_count, 0, ev)
    }
}

fn integrate(grid: &SphereGrid, f: impl Fn(usize) -> f64) -> f64 {
    grid.weights().iter().enumerate().map(|(i, w)| w * f(i)).sum()
}

fn zeta_from(h: &[f64], f: &[f64], sigma: &[f64], w: &dyn WeightFunction, grid: &SphereGrid) -> Result<f64> {
    let num = integrate(grid, |i| h[i] * sigma[i]);
    let den = integrate(grid, |i| h[i] * w.reciprocal(h[i]) / f[i]);
    if !(den > 0.0 && den.is_finite()) {
        return Err(Error::Consistency(format!("normalizing denominator is {den:e}")));
    }
    Ok(num / den)
}

/// `ζ = ∫ h σₙ / ∫ h/(f φ(h))`, the multiplier that freezes the energy.
pub fn zeta(h: &SupportField, f: &SupportField, w: &dyn WeightFunction) -> Result<f64> {
    h.check_same_grid(f)?;
    h.require_positive("h")?;
    f.require_positive("f")?;
    let r = radii_matrix(h);
    if r.min_eigenvalue() <= 0.0 {
        return Err(Error::NotConvex {
            min_eigenvalue: r.min_eigenvalue(),
            tolerance: 0.0,
        });
    }
    zeta_from(h.values(), f.values(), r.sigma_n().values(), w, h.grid())
}

/// Explicit stability weight `λ` of the discrete operator at each node:
/// `dt · D · λ < 2` keeps the Heun step stable.
fn operator_bound(grid: &SphereGrid, ref_sin: f64) -> Vec<f64> {
    let (dtheta, dphi) = grid.spacing();
    let base = STENCIL_SPECTRAL_RADIUS / (dtheta * dtheta);
    match grid.resolution() {
        Resolution::Circle { nodes } => vec![base; nodes],
        Resolution::LatLon { nlat: _, nlon } => {
            let filtered = PI * PI / (ref_sin * dphi).powi(2);
            grid.colatitudes()
                .iter()
                .flat_map(|&theta| {
                    let s = theta.sin();
                    let mut lon = STENCIL_SPECTRAL_RADIUS / (s * dphi).powi(2);
                    if s < ref_sin {
                        lon = lon.min(filtered);
                    }
                    std::iter::repeat_n(base + lon, nlon)
                })
                .collect()
        }
    }
}

fn first_non_positive(v: &[f64]) -> Option<usize> {
    v.iter().position(|&x| !(x > 0.0))
}

pub(crate) fn evaluate(spec: &FlowSpec, h: &SupportField, opts: &SolverOptions) -> Result<Eval> {
    if let Some(node) = first_non_positive(h.values()) {
        return Err(Error::NonPositive {
            what: "h",
            node,
            value: h.values()[node],
        });
    }
    let grid = Arc::clone(h.grid());
    let n = grid.dim();
    let r = radii_matrix(h);
    let min_eigenvalue = r.min_eigenvalue();
    if !(min_eigenvalue > 0.0) {
        return Err(Error::NotConvex {
            min_eigenvalue,
            tolerance: 0.0,
        });
    }
    let sigma_n = r.sigma_n().into_values();
    let hv = h.values();
    let fv = spec.f().values();
    let len = hv.len();

    // (speed, diffusion) per node; speed is f φ(h) σₙ or f h^{1−p} F^k
    let per_node = |i: usize| -> (f64, f64) {
        let lam = r.eigenvalues(i);
        match spec.law() {
            FlowLaw::Christoffel { p, k } => {
                let c = binomial(n, *k);
                let fk = elementary_symmetric(&lam, *k) / c;
                let lead = fv[i] * hv[i].powf(1.0 - p);
                let dmax = (0..lam.len())
                    .map(|skip| {
                        let rest: Vec<f64> = lam.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, &l)| l).collect();
                        elementary_symmetric(&rest, k - 1)
                    })
                    .fold(0.0, f64::max);
                (lead * fk, lead * hv[i] * dmax / c)
            }
            _ => {
                let w = spec.weight_fn().expect("Orlicz kinds carry a weight");
                let a = fv[i] * w.value(hv[i]);
                let lmax = if n == 1 { 1.0 } else { lam[lam.len() - 1] };
                (a * sigma_n[i], a * hv[i] * lmax)
            }
        }
    };
    let pairs: Vec<(f64, f64)> = if len >= PAR_THRESHOLD {
        (0..len).into_par_iter().map(per_node).collect()
    } else {
        (0..len).map(per_node).collect()
    };
    let (speed, diffusion): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    if let Some(node) = speed.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { node });
    }
    if let FlowLaw::Christoffel { k, .. } = spec.law() {
        if let Some(node) = first_non_positive(&speed) {
            return Err(Error::SigmaKNonPositive {
                k: *k,
                node,
                value: speed[node],
            });
        }
    }
    let gamma = match spec.law() {
        FlowLaw::Normalized { .. } | FlowLaw::Regularized { .. } => {
            zeta_from(hv, fv, &sigma_n, spec.weight_fn().expect("Orlicz kinds carry a weight"), &grid)?
        }
        _ => 1.0,
    };
    let mut rhs: Vec<f64> = hv.iter().zip(&speed).map(|(h, s)| h * (s - gamma)).collect();
    if n == 2 {
        grid.polar_filter(&mut rhs, opts.polar_ref_sin);
    }
    let residual = speed.iter().map(|s| (s / gamma - 1.0).abs()).fold(0.0, f64::max);
    Ok(Eval {
        rhs,
        gamma,
        sigma_n,
        min_eigenvalue,
        diffusion,
        residual,
    })
}

fn diagnose(spec: &FlowSpec, h: &SupportField, ev: &Eval) -> Result<Diagnostics> {
    let grid = h.grid();
    let n = grid.dim() as f64;
    let hv = h.values();
    let volume = integrate(grid, |i| hv[i] * ev.sigma_n[i]) / (n + 1.0);
    let energy = if spec.has_energy() {
        let fv = spec.f().values();
        integrate(grid, |i| spec.energy_density(hv[i]) / fv[i])
    } else {
        f64::NAN
    };
    let (wminus, wplus) = widths(h);
    Ok(Diagnostics {
        energy,
        volume,
        lyapunov: volume - energy,
        eta: ev.gamma,
        hmin: h.min(),
        hmax: h.max(),
        wminus,
        wplus,
        min_eigenvalue: ev.min_eigenvalue,
        residual: ev.residual,
    })
}

/// `∂_t h` for the flow described by `spec`.
pub fn rhs(h: &SupportField, spec: &FlowSpec) -> Result<SupportField> {
    h.check_same_grid(spec.f())?;
    let ev = evaluate(spec, h, &SolverOptions::default())?;
    SupportField::new(Arc::clone(h.grid()), ev.rhs)
}

/// `max |speed/γ − 1|`, with `γ = ζ(h)` for the normalized kinds and 1 otherwise.
pub fn residual(h: &SupportField, spec: &FlowSpec) -> Result<f64> {
    h.check_same_grid(spec.f())?;
    Ok(evaluate(spec, h, &SolverOptions::default())?.residual)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Step size allowed at `state` before any rejection.
fn propose_dt(state: &FlowState, opts: &SolverOptions, bound: &[f64]) -> f64 {
    let ev = &state.eval;
    let stiff = ev.diffusion.iter().zip(bound).map(|(d, b)| d * b).fold(0.0, f64::max);
    let mut dt = opts.dt_max;
    if state.dt > 0.0 {
        dt = dt.min(2.0 * state.dt);
    }
    if stiff > 0.0 {
        dt = dt.min(opts.c_stab * 2.0 / stiff);
    }
    let rate = max_abs(&ev.rhs);
    if rate > 0.0 {
        dt = dt.min(opts.max_rel_change * state.diagnostics.hmin / rate);
    }
    dt
}

fn failing_node(err: &Error, h: &SupportField) -> usize {
    match err {
        Error::NonPositive { node, .. } | Error::NonFinite { node } | Error::SigmaKNonPositive { node, .. } => *node,
        _ => {
            let v = h.values();
            (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0)
        }
    }
}

fn axpy(h: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    h.iter().zip(x).map(|(h, x)| h + a * x).collect()
}

/// One Heun step starting from `dt`, halving on loss of positivity or
/// convexity. `dt_floor` is the collapse threshold.
fn heun(spec: &FlowSpec, state: &FlowState, opts: &SolverOptions, mut dt: f64, dt_floor: f64) -> Result<FlowState> {
    let grid = Arc::clone(state.h.grid());
    let k1 = &state.eval.rhs;
    let hv = state.h.values();
    let mut last_node = 0;
    for attempt in 0..=opts.max_retries {
        if dt < dt_floor {
            break;
        }
        let pred = SupportField::from_vec_unchecked(Arc::clone(&grid), axpy(hv, dt, k1));
        let e1 = match evaluate(spec, &pred, opts) {
            Ok(e) => e,
            Err(err) => {
                last_node = failing_node(&err, &pred);
                dt *= 0.5;
                continue;
            }
        };
        let avg: Vec<f64> = k1.iter().zip(&e1.rhs).map(|(a, b)| 0.5 * (a + b)).collect();
        let next = SupportField::from_vec_unchecked(Arc::clone(&grid), axpy(hv, dt, &avg));
        match evaluate(spec, &next, opts) {
            Ok(e2) => {
                return FlowState::assemble(spec, next, state.t + dt, dt, state.step_count + 1, attempt, e2);
            }
            Err(err) => {
                last_node = failing_node(&err, &next);
                dt *= 0.5;
            }
        }
    }
    Err(Error::Collapse {
        t: state.t,
        dt,
        node: last_node,
    })
}

/// One accepted explicit step with the adaptive rule.
pub fn step(state: &FlowState, spec: &FlowSpec, opts: &SolverOptions) -> Result<FlowState> {
    let bound = operator_bound(state.h.grid(), opts.polar_ref_sin);
    let dt = propose_dt(state, opts, &bound);
    heun(spec, state, opts, dt, 1e-14 * dt)
}

/// Attempts exactly `dt` first, bypassing the adaptive caps; rejections
/// still halve it.
pub fn step_with_dt(state: &FlowState, spec: &FlowSpec, opts: &SolverOptions, dt: f64) -> Result<FlowState> {
    heun(spec, state, opts, dt, 1e-14 * dt)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    Timeout,
    Stalled,
}

impl RunStatus {
    pub fn label(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::Timeout => "timeout (partial result)",
            RunStatus::Stalled => "stalled (subconvergence not promoted)",
        }
    }
}

/// Record of the invariant checks made over one run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct InvariantReport {
    pub steps_checked: u64,
    /// Name of the monotone quantity checked, if any.
    pub monotone_quantity: Option<&'static str>,
    /// Largest relative decrease of the monotone quantity (zero if none).
    pub max_relative_decrease: f64,
    /// Steps exceeding `monotone_tol`.
    pub monotone_violations: u64,
    /// Non-stationary steps where the monotone quantity failed to increase.
    pub strictness_failures: u64,
    /// `max |E(t) − E(0)| / |E(0)|` for the energy-preserving kinds.
    pub energy_drift: Option<f64>,
    /// `max_t max_u |h(u) − h(−u)| / max h`, when the problem is even.
    pub even_defect: Option<f64>,
    /// Smallest per-step nodal increment of the Christoffel flow.
    pub min_increment: Option<f64>,
    /// Steps at which the C0 barrier was exceeded.
    pub barrier_violations: Option<u64>,
    pub max_barrier_streak: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct FlowOutcome {
    pub status: RunStatus,
    pub state: FlowState,
    pub gamma: f64,
    pub trace: FlowTrace,
    pub checks: InvariantReport,
}

/// A run that ended in collapse or an invariant violation, with the data
/// gathered up to that point.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct FlowFailure {
    pub error: Error,
    pub trace: FlowTrace,
    pub state: Option<Box<FlowState>>,
    pub checks: InvariantReport,
}

impl From<Error> for FlowFailure {
    fn from(error: Error) -> Self {
        FlowFailure {
            error,
            trace: FlowTrace::default(),
            state: None,
            checks: InvariantReport::default(),
        }
    }
}

/// Consecutive barrier violations tolerated before aborting.
pub const BARRIER_STREAK_LIMIT: u64 = 5;

struct Monitor<'a> {
    spec: &'a FlowSpec,
    opts: &'a SolverOptions,
    report: InvariantReport,
    energy0: f64,
    streak: u64,
    /// Roundoff in the volume per unit `max h²`.
    roundoff: f64,
}

impl<'a> Monitor<'a> {
    fn new(spec: &'a FlowSpec, opts: &'a SolverOptions, s0: &FlowState) -> Self {
        let mut report = InvariantReport {
            monotone_quantity: match spec.law() {
                FlowLaw::Normalized { .. } | FlowLaw::Regularized { .. } => Some("V"),
                FlowLaw::Unnormalized { potential: Some(_), .. } => Some("V-E"),
                _ => None,
            },
            ..InvariantReport::default()
        };
        if matches!(spec.law(), FlowLaw::Normalized { .. } | FlowLaw::Regularized { .. }) {
            report.energy_drift = Some(0.0);
        }
        if spec.is_even() {
            report.even_defect = Some(s0.h.evenness_defect() / s0.diagnostics.hmax);
        }
        if matches!(spec.law(), FlowLaw::Christoffel { .. }) {
            report.min_increment = Some(f64::INFINITY);
        }
        if matches!(spec.law(), FlowLaw::Unnormalized { .. }) {
            report.barrier_violations = Some(0);
            report.max_barrier_streak = Some(0);
        }
        Monitor {
            spec,
            opts,
            report,
            energy0: s0.diagnostics.energy,
            streak: 0,
            roundoff: {
                let grid = s0.h.grid();
                let stiff = operator_bound(grid, opts.polar_ref_sin).into_iter().fold(0.0, f64::max);
                f64::EPSILON * stiff * grid.sphere_measure()
            },
        }
    }

    fn check(&mut self, old: &FlowState, new: &FlowState) -> Result<()> {
        let r = &mut self.report;
        r.steps_checked += 1;
        let (d0, d1) = (&old.diagnostics, &new.diagnostics);
        let mut violations = Vec::new();
        let monotone = match r.monotone_quantity {
            Some("V") => Some((d0.volume, d1.volume)),
            Some(_) => Some((d0.lyapunov, d1.lyapunov)),
            None => None,
        };
        if let Some((a, b)) = monotone {
            let scale = a.abs().max(f64::MIN_POSITIVE);
            let rel = (a - b) / scale;
            if rel > r.max_relative_decrease {
                r.max_relative_decrease = rel;
            }
            if rel > self.opts.monotone_tol {
                r.monotone_violations += 1;
                violations.push(format!(
                    "{} decreased from {a:e} to {b:e} at t = {:e}",
                    r.monotone_quantity.unwrap_or("?"),
                    new.t
                ));
            }
            // increments below the stencil's roundoff floor carry no sign information
            let expected = new.dt * dissipation(self.spec, old);
            let resolvable = expected > self.roundoff * d0.hmax * d0.hmax;
            if d0.residual > 10.0 * self.opts.residual_tol && resolvable && !(b > a) {
                r.strictness_failures += 1;
            }
        }
        if let Some(drift) = r.energy_drift.as_mut() {
            let e = (d1.energy - self.energy0).abs() / self.energy0.abs().max(f64::MIN_POSITIVE);
            *drift = drift.max(e);
        }
        if let Some(defect) = r.even_defect.as_mut() {
            let e = new.h.evenness_defect() / d1.hmax;
            *defect = defect.max(e);
            if e > self.opts.even_tol {
                violations.push(format!("evenness lost: defect {e:e} at t = {:e}", new.t));
            }
        }
        if let Some(min_inc) = r.min_increment.as_mut() {
            let inc = new
                .h
                .values()
                .iter()
                .zip(old.h.values())
                .map(|(a, b)| a - b)
                .fold(f64::INFINITY, f64::min);
            *min_inc = min_inc.min(inc);
            if inc < -1e-13 * d1.hmax {
                violations.push(format!("support function decreased by {:e} at t = {:e}", -inc, new.t));
            }
            if !(inc > 0.0) && d0.residual > 10.0 * self.opts.residual_tol {
                r.strictness_failures += 1;
            }
        }
        if let FlowLaw::Unnormalized { weight, .. } = self.spec.law() {
            let fmax = self.spec.f().max();
            let n = self.spec.f().grid().dim();
            let bound = barrier_bound(weight, fmax, d0.hmax, n).max(barrier_bound(weight, fmax, d1.hmax, n));
            let measured = (d1.hmax - d0.hmax) / new.dt;
            let tol = 1e-3 * max_abs(old.rate()) + 1e-14 * d1.hmax / new.dt;
            if measured > bound + tol {
                self.streak += 1;
                *r.barrier_violations.get_or_insert(0) += 1;
            } else {
                self.streak = 0;
            }
            let best = r.max_barrier_streak.get_or_insert(0);
            *best = (*best).max(self.streak);
            if self.streak > BARRIER_STREAK_LIMIT {
                violations.push(format!(
                    "C0 barrier exceeded on {} consecutive steps: d(max h)/dt = {measured:e} > {bound:e}",
                    self.streak
                ));
            }
        }
        if self.opts.enforce_invariants && !violations.is_empty() {
            return Err(Error::InvariantViolation(violations.join("; ")));
        }
        Ok(())
    }
}

/// `∫ (∂_t h)² / (f h φ(h))`, the rate of increase of the monotone quantity.
fn dissipation(spec: &FlowSpec, state: &FlowState) -> f64 {
    let Some(w) = spec.weight_fn() else {
        return 0.0;
    };
    let (hv, fv, rate) = (state.h.values(), spec.f().values(), state.rate());
    integrate(state.h.grid(), |i| rate[i] * rate[i] * w.reciprocal(hv[i]) / (fv[i] * hv[i]))
}

fn row(state: &FlowState) -> TraceRow {
    let d = &state.diagnostics;
    TraceRow {
        t: state.t,
        energy: d.energy,
        volume: d.volume,
        lyapunov: d.lyapunov,
        eta: d.eta,
        hmin: d.hmin,
        hmax: d.hmax,
        wminus: d.wminus,
        wplus: d.wplus,
        min_eigenvalue: d.min_eigenvalue,
        residual: d.residual,
        dt: state.dt,
    }
}

/// Integrates until the residual drops below `residual_tol`, the clock
/// passes `t_max`, the residual stalls, or the flow fails.
pub fn run(spec: &FlowSpec, opts: &SolverOptions) -> Result<FlowOutcome, FlowFailure> {
    opts.validate()?;
    let s0 = FlowState::initial(spec, opts)?;
    run_from(spec, opts, s0)
}

/// As [`run`], from an explicit starting state.
pub fn run_from(spec: &FlowSpec, opts: &SolverOptions, s0: FlowState) -> Result<FlowOutcome, FlowFailure> {
    opts.validate()?;
    let bound = operator_bound(s0.h.grid(), opts.polar_ref_sin);
    let mut monitor = Monitor::new(spec, opts, &s0);
    let mut trace = FlowTrace::default();
    trace.push(row(&s0));
    let dt_floor = 1e-14 * propose_dt(&s0, opts, &bound);
    let mut history: VecDeque<f64> = VecDeque::with_capacity(opts.stall_window + 1);
    history.push_back(s0.diagnostics.residual);
    let mut state = s0;
    let t0 = state.t;
    let status = loop {
        if state.diagnostics.residual <= opts.residual_tol {
            break RunStatus::Converged;
        }
        if state.t - t0 >= opts.t_max * (1.0 - 1e-12) || opts.max_steps.is_some_and(|m| state.step_count >= m) {
            break RunStatus::Timeout;
        }
        if history.len() > opts.stall_window {
            let then = history.pop_front().unwrap_or(f64::INFINITY);
            if state.diagnostics.residual > (1.0 - opts.stall_rel) * then {
                break RunStatus::Stalled;
            }
        }
        let dt = propose_dt(&state, opts, &bound).min(t0 + opts.t_max - state.t).max(dt_floor);
        let next = match heun(spec, &state, opts, dt, dt_floor) {
            Ok(s) => s,
            Err(error) => {
                trace.push(row(&state));
                return Err(FlowFailure {
                    error,
                    trace,
                    state: Some(Box::new(state)),
                    checks: monitor.report,
                });
            }
        };
        if let Err(error) = monitor.check(&state, &next) {
            trace.push(row(&next));
            return Err(FlowFailure {
                error,
                trace,
                state: Some(Box::new(next)),
                checks: monitor.report,
            });
        }
        state = next;
        history.push_back(state.diagnostics.residual);
        if state.step_count.is_multiple_of(opts.trace_stride as u64) {
            trace.push(row(&state));
        }
    };
    if trace.last().is_none_or(|r| r.t != state.t) {
        trace.push(row(&state));
    }
    Ok(FlowOutcome {
        status,
        gamma: state.gamma(),
        state,
        trace,
        checks: monitor.report,
    })
}
