//! Executes a validated [`RunConfig`] and writes its artifacts.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    BodyConfig, FlowChoice, MeasureSource, Mode, NormInput, RunConfig, Shape, WeightSource,
};
use crate::error::{Error, Result};
use crate::flow::{
    run, solve_general_orlicz, FlowFailure, FlowOutcome, FlowSpec, FlowTrace, InvariantReport, RunStatus,
};
use crate::geometry::{
    barycenter_of_surface_measure, build_grid, export_mesh, hausdorff_distance, min_radii_eigenvalue,
    normalize, radii_matrix, sigma_n, volume, widths, Resolution, SphereGrid, SupportField, Vec3,
};
use crate::io::{parse_atoms_csv, parse_nodal_csv, parse_weight_table, save_nodal_csv};
use crate::measure::{min_segment_orlicz_norm, SphereMeasure};
use crate::orlicz::{
    make_potential, make_regularized, orlicz_norm, CaseParams, Potential, PotentialCase, Weight, WeightFunction,
};

/// How a run ended, ordered from success to the hardest failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// Non-flow modes that finished their computation.
    Completed,
    Converged,
    Timeout,
    Stalled,
    Collapse,
    InvariantViolation,
    WidthBound,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Completed | Outcome::Converged => 0,
            Outcome::Timeout | Outcome::Stalled => 2,
            Outcome::Collapse => 3,
            Outcome::InvariantViolation | Outcome::WidthBound => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Converged => RunStatus::Converged.label(),
            Outcome::Timeout => RunStatus::Timeout.label(),
            Outcome::Stalled => RunStatus::Stalled.label(),
            Outcome::Collapse => "collapse",
            Outcome::InvariantViolation => "invariant violation",
            Outcome::WidthBound => "width bound violated",
        }
    }

    fn from_status(s: RunStatus) -> Self {
        match s {
            RunStatus::Converged => Outcome::Converged,
            RunStatus::Timeout => Outcome::Timeout,
            RunStatus::Stalled => Outcome::Stalled,
        }
    }

    /// Engine errors that end a run with artifacts rather than aborting it.
    fn from_error(e: &Error) -> Option<Self> {
        match e {
            Error::Collapse { .. } => Some(Outcome::Collapse),
            Error::InvariantViolation(_) => Some(Outcome::InvariantViolation),
            Error::WidthBound(_) => Some(Outcome::WidthBound),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub outcome: Outcome,
    pub summary: Value,
    pub artifacts: Vec<PathBuf>,
    /// One-line result for the terminal.
    pub headline: String,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.outcome.exit_code()
    }
}

pub const TRACE_FILE: &str = "trace.csv";
pub const BODY_FILE: &str = "body.csv";
pub const MESH_FILE: &str = "mesh.obj";
pub const SUMMARY_FILE: &str = "summary.json";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.toml";

pub fn grid_of(cfg: &RunConfig) -> Result<Arc<SphereGrid>> {
    let res = match cfg.dim() {
        1 => Resolution::Circle {
            nodes: cfg.grid.nodes.unwrap_or(crate::config::DEFAULT_CIRCLE_NODES),
        },
        _ => Resolution::LatLon {
            nlat: cfg.grid.nlat.unwrap_or(crate::config::DEFAULT_NLAT),
            nlon: cfg.grid.nlon.unwrap_or(crate::config::DEFAULT_NLON),
        },
    };
    build_grid(cfg.dim(), res)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn vec3(v: &[f64]) -> Vec3 {
    let mut out = [0.0; 3];
    out[..v.len().min(3)].copy_from_slice(&v[..v.len().min(3)]);
    out
}

/// A random smooth perturbation `r(1 + a Σ_m c_m ⟨u, v_m⟩^m)` over orders
/// `2..=modes` (even orders only when `even`), drawn from `seed`.
pub fn perturbed_sphere(grid: &Arc<SphereGrid>, radius: f64, amplitude: f64, modes: usize, even: bool, seed: u64) -> Result<SupportField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let mut terms = Vec::new();
    for m in 2..=modes.max(2) {
        let mut v = [0.0; 3];
        for c in v.iter_mut().take(dim + 1) {
            *c = rng.random_range(-1.0..1.0);
        }
        let c: f64 = rng.random_range(-1.0..1.0);
        if even && m % 2 == 1 {
            continue;
        }
        if v.iter().all(|x| *x == 0.0) {
            v[0] = 1.0;
        }
        terms.push((m as i32, c / (m * m) as f64, normalize(&v)));
    }
    SupportField::from_fn(grid, |u| {
        let pert: f64 = terms.iter().map(|(m, c, v)| c * crate::geometry::dot(u, v).powi(*m)).sum();
        radius * (1.0 + amplitude * pert)
    })
}

pub fn build_body(b: &BodyConfig, grid: &Arc<SphereGrid>, seed: u64) -> Result<SupportField> {
    match b.shape {
        Shape::Sphere => Ok(SupportField::translated_sphere(
            grid,
            b.radius.unwrap_or(1.0),
            &vec3(b.center.as_deref().unwrap_or(&[])),
        )),
        Shape::Ellipsoid => SupportField::ellipsoid(grid, b.axes.as_deref().unwrap_or(&[])),
        Shape::Table => {
            let path = b.file.as_ref().ok_or_else(|| Error::Config(vec!["body.file missing".into()]))?;
            let vals = parse_nodal_csv(&read(path)?, grid.len(), "body table")?;
            SupportField::new(Arc::clone(grid), vals)
        }
        Shape::PerturbedSphere => perturbed_sphere(
            grid,
            b.radius.unwrap_or(1.0),
            b.amplitude.unwrap_or(0.0),
            b.modes.unwrap_or(2),
            b.even.unwrap_or(true),
            seed,
        ),
    }
}

pub fn build_weight(cfg: &RunConfig) -> Result<Weight> {
    let w = cfg
        .weight
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["[weight] section missing".into()]))?;
    match w.kind {
        WeightSource::PowerLaw => Ok(Weight::power_law(w.p.unwrap_or(1.0))),
        WeightSource::Table => {
            let path = w.file.as_ref().ok_or_else(|| Error::Config(vec!["weight.file missing".into()]))?;
            Weight::from_table(&parse_weight_table(&read(path)?)?)
        }
    }
}

pub fn build_potential(cfg: &RunConfig, w: &Weight) -> Result<Potential> {
    let pc = cfg.potential.clone().unwrap_or_default();
    let case = pc.case.unwrap_or(PotentialCase::Origin);
    let params = CaseParams {
        c1: pc.c1,
        c2: pc.c2,
        q: pc.q,
    };
    let pot = make_potential(w, case, cfg.dim(), params)?;
    match pc.tail_cut {
        Some(cut) => pot.with_tail_cut(cut),
        None => Ok(pot),
    }
}

pub fn build_measure(cfg: &RunConfig, grid: &Arc<SphereGrid>) -> Result<SphereMeasure> {
    let even = cfg.data.even.unwrap_or(false);
    match cfg.data.measure.unwrap_or_default() {
        MeasureSource::Uniform => Ok(SphereMeasure::uniform(grid)),
        MeasureSource::Atoms => {
            let path = cfg.data.atoms_file.as_ref().ok_or_else(|| Error::Config(vec!["data.atoms_file missing".into()]))?;
            SphereMeasure::from_atoms(grid, parse_atoms_csv(&read(path)?, grid.dim())?, even)
        }
        MeasureSource::Density => {
            let path = cfg.data.density_file.as_ref().ok_or_else(|| Error::Config(vec!["data.density_file missing".into()]))?;
            SphereMeasure::from_density(grid, parse_nodal_csv(&read(path)?, grid.len(), "density")?, even)
        }
    }
}

/// `f` making `target` stationary with `γ = 1`: `1/(φ(h)σₙ)` for the
/// Orlicz flows, `h^{p−1}/F^k` for the Christoffel flow.
fn manufactured_f(target: &SupportField, cfg: &RunConfig, w: Option<&dyn WeightFunction>) -> Result<SupportField> {
    if let (Mode::SolveChristoffel, Some(c)) = (cfg.mode, &cfg.christoffel) {
        let (p, k) = (c.p.unwrap_or(0.0), c.k.unwrap_or(1));
        let fk = radii_matrix(target).curvature_f(k)?;
        let vals = target.values().iter().zip(fk.values()).map(|(h, fk)| h.powf(p - 1.0) / fk).collect();
        return SupportField::new(Arc::clone(target.grid()), vals);
    }
    let w = w.ok_or_else(|| Error::InvalidSpec("manufactured data need a weight".into()))?;
    let s = sigma_n(target);
    let vals = target.values().iter().zip(s.values()).map(|(h, s)| 1.0 / (w.value(*h) * s)).collect();
    SupportField::new(Arc::clone(target.grid()), vals)
}

struct FData {
    f: SupportField,
    target: Option<SupportField>,
}

fn build_f(cfg: &RunConfig, grid: &Arc<SphereGrid>, w: Option<&dyn WeightFunction>) -> Result<FData> {
    if let Some(m) = &cfg.data.manufactured {
        let target = build_body(m, grid, cfg.seed)?;
        let f = manufactured_f(&target, cfg, w)?;
        return Ok(FData { f, target: Some(target) });
    }
    if let Some(path) = &cfg.data.f_file {
        let vals = parse_nodal_csv(&read(path)?, grid.len(), "f")?;
        return Ok(FData {
            f: SupportField::new(Arc::clone(grid), vals)?,
            target: None,
        });
    }
    Ok(FData {
        f: SupportField::constant(grid, cfg.data.f.unwrap_or(1.0)),
        target: None,
    })
}

/// Radius `r` with `c·g(r) = 1` for a monotone `g`, by bisection in `log r`.
fn stationary_radius(c: f64, g: impl Fn(f64) -> f64) -> Option<f64> {
    let e = |r: f64| c * g(r) - 1.0;
    let (mut lo, mut hi) = (1e-6f64, 1e6f64);
    let (elo, ehi) = (e(lo), e(hi));
    if !(elo.is_finite() && ehi.is_finite()) || elo.signum() == ehi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if e(mid).signum() == elo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((lo * hi).sqrt())
}

/// The body the flow should reach, when it is known in closed form.
fn reference_body(spec: &FlowSpec, cfg: &RunConfig, target: Option<&SupportField>) -> Option<(String, SupportField)> {
    let grid = spec.f().grid();
    let unnormalized = matches!(cfg.flow.as_ref().and_then(|f| f.kind), Some(FlowChoice::Unnormalized));
    let christoffel = cfg.mode == Mode::SolveChristoffel;
    if !(unnormalized || christoffel) {
        return None;
    }
    if let Some(t) = target {
        return Some(("manufactured target".into(), t.clone()));
    }
    let (fmin, fmax) = (spec.f().min(), spec.f().max());
    if fmax - fmin > 1e-14 * fmax {
        return None;
    }
    let n = grid.dim() as i32;
    let r = if christoffel {
        let c = cfg.christoffel.as_ref()?;
        let (p, k) = (c.p?, c.k? as i32);
        stationary_radius(fmax, |r| r.powf(1.0 - p) * r.powi(k))?
    } else {
        let w = spec.weight_fn()?;
        stationary_radius(fmax, |r| w.value(r) * r.powi(n))?
    };
    Some((format!("sphere of radius {r:.6}"), SupportField::constant(grid, r)))
}

fn write_common(dir: &Path, cfg: &RunConfig, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let p = dir.join(RESOLVED_CONFIG_FILE);
    std::fs::write(&p, cfg.to_toml())?;
    artifacts.push(p);
    Ok(())
}

fn write_body(dir: &Path, h: &SupportField, mesh: bool, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(BODY_FILE);
    save_nodal_csv(h, "h", &p)?;
    artifacts.push(p);
    if mesh {
        let p = dir.join(MESH_FILE);
        export_mesh(h, &p)?;
        artifacts.push(p);
    }
    Ok(())
}

fn write_trace(dir: &Path, trace: &FlowTrace, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(TRACE_FILE);
    trace.save(&p)?;
    artifacts.push(p);
    Ok(())
}

fn finish(dir: &Path, outcome: Outcome, mut summary: Value, cfg: &RunConfig, started: Instant, mut artifacts: Vec<PathBuf>, headline: String) -> Result<RunReport> {
    let obj = summary.as_object_mut().expect("summaries are objects");
    obj.insert("mode".into(), json!(cfg.mode));
    obj.insert("outcome".into(), json!(outcome.label()));
    obj.insert("exit_code".into(), json!(outcome.exit_code()));
    obj.insert("seed".into(), json!(cfg.seed));
    obj.insert("wall_time_s".into(), json!(started.elapsed().as_secs_f64()));
    obj.insert("resolved_config".into(), json!(cfg.to_toml()));
    let p = dir.join(SUMMARY_FILE);
    std::fs::write(&p, serde_json::to_string_pretty(&summary).expect("summaries serialize") + "\n")?;
    artifacts.push(p);
    Ok(RunReport {
        outcome,
        summary,
        artifacts,
        headline,
    })
}

fn endpoints(trace: &FlowTrace) -> Value {
    let pick = |r: Option<&crate::flow::TraceRow>| r.map(|r| json!({"t": r.t, "E": finite(r.energy), "V": r.volume}));
    json!({"initial": pick(trace.first()), "final": pick(trace.last())})
}

/// JSON has no NaN; absent quantities become null.
fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn flow_spec(cfg: &RunConfig, grid: &Arc<SphereGrid>) -> Result<(FlowSpec, Option<SupportField>)> {
    if cfg.mode == Mode::SolveChristoffel {
        let c = cfg.christoffel.as_ref().ok_or_else(|| Error::Config(vec!["[christoffel] missing".into()]))?;
        let (p, k) = (c.p.unwrap_or(0.0), c.k.unwrap_or(1));
        let fd = build_f(cfg, grid, None)?;
        let initial = match &cfg.body {
            Some(b) => build_body(b, grid, cfg.seed)?,
            // below the stationary radius of the smallest f, so the flow expands
            None => SupportField::constant(grid, 0.9 * fd.f.min().powf(1.0 / (p - 1.0 - k as f64))),
        };
        return Ok((FlowSpec::christoffel(fd.f, p, k, initial)?, fd.target));
    }
    let body = cfg.body.clone().unwrap_or_default();
    let initial = build_body(&body, grid, cfg.seed)?;
    let w = build_weight(cfg)?;
    let fc = cfg.flow.clone().unwrap_or_default();
    match fc.kind.unwrap_or(FlowChoice::Unnormalized) {
        FlowChoice::Normalized => {
            let fd = build_f(cfg, grid, Some(&w))?;
            let pot = build_potential(cfg, &w)?;
            Ok((FlowSpec::normalized(fd.f, pot, initial)?, fd.target))
        }
        FlowChoice::Unnormalized => {
            let fd = build_f(cfg, grid, Some(&w))?;
            let pot = build_potential(cfg, &w)?;
            Ok((FlowSpec::unnormalized(fd.f, w, Some(pot), initial)?, fd.target))
        }
        FlowChoice::Regularized => {
            let rw = make_regularized(&w, grid.dim(), fc.epsilon.unwrap_or(0.1))?;
            let fd = build_f(cfg, grid, Some(&rw))?;
            Ok((FlowSpec::regularized(fd.f, rw, initial)?, fd.target))
        }
    }
}

fn run_flow(cfg: &RunConfig, dir: &Path, started: Instant) -> Result<RunReport> {
    let grid = grid_of(cfg)?;
    let (spec, target) = flow_spec(cfg, &grid)?;
    let mut artifacts = Vec::new();
    write_common(dir, cfg, &mut artifacts)?;
    let opts = &cfg.solver.stepper;
    let (outcome, state_h, trace, checks, gamma, steps, residual, t, error): (
        Outcome,
        Option<SupportField>,
        FlowTrace,
        InvariantReport,
        Option<f64>,
        Option<u64>,
        Option<f64>,
        Option<f64>,
        Option<String>,
    ) = match run(&spec, opts) {
        Ok(FlowOutcome {
            status,
            state,
            gamma,
            trace,
            checks,
        }) => (
            Outcome::from_status(status),
            Some(state.h.clone()),
            trace,
            checks,
            Some(gamma),
            Some(state.step_count),
            Some(state.diagnostics.residual),
            Some(state.t),
            None,
        ),
        Err(FlowFailure {
            error,
            trace,
            state,
            checks,
        }) => {
            let Some(outcome) = Outcome::from_error(&error) else {
                return Err(error);
            };
            (
                outcome,
                state.as_ref().map(|s| s.h.clone()),
                trace,
                checks,
                state.as_ref().map(|s| s.gamma()),
                state.as_ref().map(|s| s.step_count),
                state.as_ref().map(|s| s.diagnostics.residual),
                state.as_ref().map(|s| s.t),
                Some(error.to_string()),
            )
        }
    };
    write_trace(dir, &trace, &mut artifacts)?;
    if let Some(h) = &state_h {
        write_body(dir, h, cfg.output.mesh, &mut artifacts)?;
    }
    let reference = match (&state_h, reference_body(&spec, cfg, target.as_ref())) {
        (Some(h), Some((label, r))) => Some(json!({"body": label, "hausdorff": hausdorff_distance(h, &r)?})),
        _ => None,
    };
    let summary = json!({
        "flow": spec.kind().to_string(),
        "grid_nodes": grid.len(),
        "steps": steps,
        "t": t,
        "final_residual": residual,
        "gamma": gamma.map(finite),
        "endpoints": endpoints(&trace),
        "reference": reference,
        "checks": checks,
        "warnings": spec.warnings(),
        "error": error,
    });
    let headline = match (&reference, residual) {
        (Some(r), Some(res)) => format!("{}: residual {res:.3e}, Hausdorff to {} {:.3e}", outcome.label(), r["body"].as_str().unwrap_or(""), r["hausdorff"].as_f64().unwrap_or(f64::NAN)),
        (_, Some(res)) => format!("{}: residual {res:.3e}", outcome.label()),
        _ => outcome.label().to_string(),
    };
    finish(dir, outcome, summary, cfg, started, artifacts, headline)
}

fn run_general(cfg: &RunConfig, dir: &Path, started: Instant) -> Result<RunReport> {
    let grid = grid_of(cfg)?;
    let mu = build_measure(cfg, &grid)?;
    let w = build_weight(cfg)?;
    let pot = build_potential(cfg, &w)?;
    let mut artifacts = Vec::new();
    write_common(dir, cfg, &mut artifacts)?;
    match solve_general_orlicz(&mu, &w, &pot, &cfg.solver.general()) {
        Ok(sol) => {
            write_trace(dir, &sol.trace, &mut artifacts)?;
            write_body(dir, &sol.h, cfg.output.mesh, &mut artifacts)?;
            let last = sol.stages.last().map(|s| s.status).unwrap_or(RunStatus::Converged);
            let outcome = Outcome::from_status(last);
            let (wm, wp) = widths(&sol.h);
            let summary = json!({
                "gamma": sol.gamma,
                "widths": {"wminus": wm, "wplus": wp},
                "hemisphere": sol.hemisphere,
                "stages": sol.stages,
                "final_residual": sol.stages.last().map(|s| s.residual),
                "endpoints": endpoints(&sol.trace),
            });
            let headline = format!("{}: gamma {:.6e}, widths [{wm:.4}, {wp:.4}]", outcome.label(), sol.gamma);
            finish(dir, outcome, summary, cfg, started, artifacts, headline)
        }
        Err(e) => {
            let Some(outcome) = Outcome::from_error(&e) else {
                return Err(e);
            };
            let summary = json!({"error": e.to_string()});
            finish(dir, outcome, summary, cfg, started, artifacts, format!("{}: {e}", outcome.label()))
        }
    }
}

fn run_norm(cfg: &RunConfig, dir: &Path, started: Instant) -> Result<RunReport> {
    let grid = grid_of(cfg)?;
    let mu = build_measure(cfg, &grid)?;
    let nc = cfg.norm.clone().unwrap_or_default();
    let g = match nc.g {
        NormInput::Segment => {
            let v = normalize(&vec3(nc.direction.as_deref().unwrap_or(&[1.0])));
            SupportField::from_fn(&grid, |u| crate::geometry::dot(u, &v).max(0.0))?
        }
        NormInput::Body => build_body(cfg.body.as_ref().ok_or_else(|| Error::Config(vec!["[body] missing".into()]))?, &grid, cfg.seed)?,
        NormInput::File => {
            let path = nc.file.as_ref().ok_or_else(|| Error::Config(vec!["norm.file missing".into()]))?;
            SupportField::new(Arc::clone(&grid), parse_nodal_csv(&read(path)?, grid.len(), "norm input")?)?
        }
    };
    let even = cfg.data.even.unwrap_or(false);
    let (value, minimum) = match nc.phi_power {
        Some(q) => {
            let phi = move |t: f64| t.powf(q);
            let m = if nc.minimize { Some(min_segment_orlicz_norm(&mu, &phi, even)?) } else { None };
            (orlicz_norm(&g, &phi, &mu)?, m)
        }
        None => {
            let w = build_weight(cfg)?;
            let pot = build_potential(cfg, &w)?;
            let m = if nc.minimize { Some(min_segment_orlicz_norm(&mu, &pot, even)?) } else { None };
            (orlicz_norm(&g, &pot, &mu)?, m)
        }
    };
    let mut artifacts = Vec::new();
    write_common(dir, cfg, &mut artifacts)?;
    let summary = json!({
        "norm": value,
        "measure_total": mu.total(),
        "min_segment_norm": minimum,
    });
    finish(dir, Outcome::Completed, summary, cfg, started, artifacts, format!("{value}"))
}

fn run_check(cfg: &RunConfig, dir: &Path, started: Instant) -> Result<RunReport> {
    let grid = grid_of(cfg)?;
    let b = cfg.body.as_ref().ok_or_else(|| Error::Config(vec!["[body] missing".into()]))?;
    let h = build_body(b, &grid, cfg.seed)?;
    let mut artifacts = Vec::new();
    write_common(dir, cfg, &mut artifacts)?;
    write_body(dir, &h, cfg.output.mesh, &mut artifacts)?;
    let mineig = min_radii_eigenvalue(&h);
    let convex = mineig > 0.0;
    let s = sigma_n(&h);
    let (wm, wp) = widths(&h);
    let summary = json!({
        "strictly_convex": convex,
        "min_principal_radius": mineig,
        "volume": if convex { Some(volume(&h)?) } else { None },
        "surface_area": s.integral(),
        "sigma_n_range": [s.min(), s.max()],
        "widths": {"wminus": wm, "wplus": wp},
        "surface_barycenter": barycenter_of_surface_measure(&h),
        "even_defect": if grid.is_antipodally_closed() { Some(h.evenness_defect()) } else { None },
        "hmin": h.min(),
        "hmax": h.max(),
    });
    let outcome = if convex { Outcome::Completed } else { Outcome::InvariantViolation };
    let headline = format!("{}: min principal radius {mineig:.4e}", if convex { "strictly convex" } else { "not strictly convex" });
    finish(dir, outcome, summary, cfg, started, artifacts, headline)
}

/// Runs the configured pipeline. Engine failures (collapse, invariant or
/// width-bound violations) still produce artifacts and are reported through
/// [`RunReport::outcome`]; set-up errors are returned as `Err`.
pub fn run_mode(cfg: &RunConfig) -> Result<RunReport> {
    let started = Instant::now();
    let dir = cfg.output.dir.clone();
    match cfg.mode {
        Mode::Flow | Mode::SolveChristoffel => run_flow(cfg, &dir, started),
        Mode::SolveOrliczGeneral => run_general(cfg, &dir, started),
        Mode::OrliczNorm => run_norm(cfg, &dir, started),
        Mode::GeometryCheck => run_check(cfg, &dir, started),
    }
}
