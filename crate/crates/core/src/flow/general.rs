use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::engine::{run_from, FlowState, InvariantReport, RunStatus, SolverOptions};
use crate::flow::spec::FlowSpec;
use crate::flow::trace::FlowTrace;
use crate::geometry::SupportField;
use crate::measure::{hemisphere_check, min_segment_orlicz_norm, HemisphereReport, SphereMeasure, DEFAULT_HEMISPHERE_DELTA};
use crate::orlicz::{make_regularized, Potential, PotentialCase, RegularizedWeight, Weight, WeightFunction, PROBE_RANGE};

/// `ε_i = 1/(10·2^i)` for `i < stages`.
pub fn default_epsilon_schedule(stages: usize) -> Vec<f64> {
    (0..stages).map(|i| 0.1 / 2f64.powi(i as i32)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneralOptions {
    /// Regularization parameters, run in order.
    pub epsilons: Vec<f64>,
    /// Mollifier bandwidths for the atomic part, run in order.
    pub bandwidths: Vec<f64>,
    /// Uniform density added after mollification, as a fraction of the mean density.
    pub density_floor: f64,
    /// Relative slack on the a-priori width bounds.
    pub width_tol: f64,
    /// Start every stage from the unit sphere instead of the previous body.
    pub cold_start: bool,
    pub solver: SolverOptions,
}

impl Default for GeneralOptions {
    fn default() -> Self {
        GeneralOptions {
            epsilons: default_epsilon_schedule(3),
            bandwidths: vec![0.4, 0.2],
            density_floor: 0.05,
            width_tol: 1e-3,
            cold_start: false,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub bandwidth: Option<f64>,
    pub epsilon: f64,
    pub status: RunStatus,
    pub gamma: f64,
    pub residual: f64,
    pub steps: u64,
    pub t: f64,
    /// Factor applied to the previous body to restore `⨍ϕ_ε(h) dμ_f = ϕ_ε(1)`.
    pub start_scale: f64,
    pub wminus: f64,
    pub wplus: f64,
    /// `min_v ‖⟨·,v⟩₊‖_{ϕ,μ_f}`.
    pub segment_norm: f64,
    /// `4 / segment_norm`.
    pub wplus_bound: f64,
    /// `(segment_norm/4)ⁿ · |Bⁿ⁺¹|`.
    pub wminus_bound: f64,
    pub checks: InvariantReport,
}

#[derive(Clone, Debug)]
pub struct GeneralSolution {
    pub h: SupportField,
    pub gamma: f64,
    /// Anisotropy `1/ρ` of the last stage.
    pub f: SupportField,
    pub hemisphere: HemisphereReport,
    pub stages: Vec<StageReport>,
    /// Trace of the last stage.
    pub trace: FlowTrace,
}

/// Whether `φ(s) → ∞` as `s → 0⁺`; exact for power laws, sampled otherwise.
pub fn blows_up_at_zero(w: &Weight) -> bool {
    match w.power_exponent() {
        Some(p) => p > 1.0,
        None => w.value(PROBE_RANGE.0) > 1e6 * w.value(1.0),
    }
}

fn validate(opts: &GeneralOptions) -> Result<()> {
    let mut errs = Vec::new();
    if opts.epsilons.is_empty() {
        errs.push("epsilon schedule is empty".to_string());
    }
    if opts.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        errs.push("epsilon schedule must be strictly decreasing".into());
    }
    if opts.bandwidths.windows(2).any(|w| !(w[1] < w[0])) {
        errs.push("bandwidth schedule must be strictly decreasing".into());
    }
    if !(opts.density_floor >= 0.0 && opts.density_floor.is_finite()) {
        errs.push(format!("density_floor must be non-negative, got {}", opts.density_floor));
    }
    if !(opts.width_tol >= 0.0) {
        errs.push(format!("width_tol must be non-negative, got {}", opts.width_tol));
    }
    if let Err(Error::Config(more)) = opts.solver.validate() {
        errs.extend(more);
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(errs))
    }
}

/// The smooth measures the flow sees, one per bandwidth (a single
/// unlabelled entry when `μ` has no atoms).
fn smoothed(mu: &SphereMeasure, opts: &GeneralOptions) -> Result<Vec<(Option<f64>, SphereMeasure)>> {
    let floor = |m: SphereMeasure, needed: bool| -> Result<SphereMeasure> {
        if needed && opts.density_floor > 0.0 {
            m.with_floor(opts.density_floor)
        } else {
            Ok(m)
        }
    };
    if mu.atoms().is_empty() {
        let has_zero = mu.density().is_some_and(|d| d.iter().any(|&r| r <= 0.0));
        return Ok(vec![(None, floor(mu.clone(), has_zero)?)]);
    }
    if opts.bandwidths.is_empty() {
        return Err(Error::InvalidMeasure("atomic measure needs at least one mollifier bandwidth".into()));
    }
    opts.bandwidths
        .iter()
        .map(|&k| Ok((Some(k), floor(mu.mollify(k)?, true)?)))
        .collect()
}

/// `λ` with `⨍ ϕ_ε(λh) dμ_f = ϕ_ε(1)`, found by bisection in `log λ`.
fn normalizing_scale(h: &SupportField, f: &SupportField, rw: &RegularizedWeight) -> Result<f64> {
    let grid = h.grid();
    let inv_f: Vec<f64> = f.values().iter().map(|v| 1.0 / v).collect();
    let mass = grid.integrate(&inv_f);
    let target = rw.potential(1.0);
    let mean = |lam: f64| -> f64 {
        let vals: Vec<f64> = h.values().iter().zip(&inv_f).map(|(hv, w)| rw.potential(lam * hv) * w).collect();
        grid.integrate(&vals) / mass
    };
    let (mut lo, mut hi) = (0.5, 2.0);
    for _ in 0..60 {
        if mean(lo) <= target {
            break;
        }
        lo *= 0.5;
    }
    for _ in 0..60 {
        if mean(hi) >= target {
            break;
        }
        hi *= 2.0;
    }
    if !(mean(lo) <= target && mean(hi) >= target) {
        return Err(Error::Consistency("could not bracket the warm-start scale".into()));
    }
    while hi / lo - 1.0 > 1e-14 {
        let mid = (lo * hi).sqrt();
        if mean(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Solves `φ(h) dS = γ dμ` for a general measure by mollifying its atoms and
/// running the regularized normalized flow through a schedule of `ε`.
/// `pot` must be the origin-based potential `ϕ(s) = ∫₀ˢ 1/φ` used for the
/// Orlicz norms in the width bounds.
pub fn solve_general_orlicz(mu: &SphereMeasure, w: &Weight, pot: &Potential, opts: &GeneralOptions) -> Result<GeneralSolution> {
    validate(opts)?;
    if pot.case() != PotentialCase::Origin {
        return Err(Error::InvalidSpec(format!(
            "general measures need the potential vanishing at 0 (case 3a), got case {}",
            pot.case()
        )));
    }
    let even = mu.is_even();
    let hemisphere = hemisphere_check(mu, even, DEFAULT_HEMISPHERE_DELTA);
    if !hemisphere.passed {
        return Err(Error::HemisphereConcentrated {
            min_plus: hemisphere.min_plus,
        });
    }
    if !even && !blows_up_at_zero(w) {
        return Err(Error::InvalidSpec(
            "phi must blow up at 0 unless the measure is even".into(),
        ));
    }
    let grid = std::sync::Arc::clone(mu.grid());
    let n = grid.dim();
    let mut h = SupportField::constant(&grid, 1.0);
    let mut stages = Vec::new();
    let mut last: Option<(SupportField, f64, FlowTrace)> = None;
    for (bandwidth, smooth) in smoothed(mu, opts)? {
        let f = smooth.anisotropy()?;
        let seg = min_segment_orlicz_norm(&smooth, pot, false)?;
        let wplus_bound = 4.0 / seg.value;
        let wminus_bound = (seg.value / 4.0).powi(n as i32) * grid.unit_ball_volume();
        for &eps in &opts.epsilons {
            let rw = make_regularized(w, n, eps)?;
            let (start, start_scale) = if opts.cold_start || stages.is_empty() {
                (SupportField::constant(&grid, 1.0), 1.0)
            } else {
                let lam = normalizing_scale(&h, &f, &rw)?;
                (h.scaled(lam), lam)
            };
            let spec = FlowSpec::regularized(f.clone(), rw, start)?;
            let s0 = FlowState::initial(&spec, &opts.solver)?;
            let out = run_from(&spec, &opts.solver, s0).map_err(|fail| fail.error)?;
            let d = out.state.diagnostics;
            let report = StageReport {
                bandwidth,
                epsilon: eps,
                status: out.status,
                gamma: out.gamma,
                residual: d.residual,
                steps: out.state.step_count,
                t: out.state.t,
                start_scale,
                wminus: d.wminus,
                wplus: d.wplus,
                segment_norm: seg.value,
                wplus_bound,
                wminus_bound,
                checks: out.checks,
            };
            if d.wplus > wplus_bound * (1.0 + opts.width_tol) {
                return Err(Error::WidthBound(format!(
                    "maximum width {:e} exceeds 4/min segment norm = {wplus_bound:e} (bandwidth {bandwidth:?}, epsilon {eps})",
                    d.wplus
                )));
            }
            if d.wminus < wminus_bound * (1.0 - opts.width_tol) {
                return Err(Error::WidthBound(format!(
                    "minimum width {:e} below (min segment norm/4)^n V(S^n) = {wminus_bound:e} (bandwidth {bandwidth:?}, epsilon {eps})",
                    d.wminus
                )));
            }
            stages.push(report);
            h = out.state.h.clone();
            last = Some((f.clone(), out.gamma, out.trace));
        }
    }
    let (f, gamma, trace) = last.expect("at least one stage runs");
    Ok(GeneralSolution {
        h,
        gamma,
        f,
        hemisphere,
        stages,
        trace,
    })
}
