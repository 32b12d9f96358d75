//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Oracles are closed forms computed here, independently of the library
//! (ellipse curvature, power-law potentials, L^p norms, round fixed points).
//! A criterion listed in `EXPECTED_FAILURES` still prints FAIL; the binary
//! exits non-zero only when an outcome differs from the expectation.

#![allow(clippy::result_large_err)]

use std::sync::Arc;
use std::time::{Duration, Instant};

use orlicz_flow::flow::{
    run, solve_general_orlicz, FlowOutcome, FlowSpec, GeneralOptions, RunStatus, SolverOptions,
};
use orlicz_flow::geometry::{
    barycenter_of_surface_measure, build_grid, hausdorff_distance, norm, radii_matrix, sigma_n, widths,
    Resolution, SphereGrid, SupportField,
};
use orlicz_flow::measure::{Atom, SphereMeasure};
use orlicz_flow::orlicz::{
    make_potential, make_regularized, orlicz_norm, CaseParams, PotentialCase, Weight, WeightFunction,
};
use orlicz_flow::runner::perturbed_sphere;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria known to fail, with the reason printed next to the FAIL line.
const EXPECTED_FAILURES: &[(u32, &str)] = &[(
    6,
    "with phi(s) = s^(1/2) the gap phi_eps - phi near s = 0 equals phi(2 eps), which exceeds the stated bound",
)];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn circle(nodes: usize) -> Arc<SphereGrid> {
    build_grid(1, Resolution::Circle { nodes }).unwrap()
}

fn latlon(nlat: usize, nlon: usize) -> Arc<SphereGrid> {
    build_grid(2, Resolution::LatLon { nlat, nlon }).unwrap()
}

fn angle(u: &[f64; 3]) -> f64 {
    u[1].atan2(u[0])
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn unnormalized(f: SupportField, p: f64, h0: SupportField) -> FlowSpec {
    FlowSpec::unnormalized(f, Weight::power_law(p), None, h0).unwrap()
}

fn one_core<T: Send>(job: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(job)
}

/// Round fixed point from an ellipse.
fn criterion_1() -> Verdict {
    let g = circle(512);
    let h0 = SupportField::ellipsoid(&g, &[1.3, 0.8]).unwrap();
    let spec = unnormalized(SupportField::constant(&g, 1.0), 4.0, h0);
    let start = Instant::now();
    let out = one_core(|| run(&spec, &SolverOptions::default()));
    let elapsed = start.elapsed();
    let Ok(out) = out else {
        return verdict(false, "flow failed");
    };
    let d = hausdorff_distance(&out.state.h, &SupportField::constant(&g, 1.0)).unwrap();
    verdict(
        out.status == RunStatus::Converged && d <= 1e-3 && elapsed <= Duration::from_secs(60),
        format!("status {}, Hausdorff to unit circle {d:.2e}, {:.1} s on one core", out.status.label(), elapsed.as_secs_f64()),
    )
}

fn energy_drift(out: &FlowOutcome) -> f64 {
    let e0 = out.trace.first().unwrap().energy;
    out.trace.rows().iter().map(|r| (r.energy - e0).abs()).fold(0.0, f64::max) / e0.abs()
}

/// Energy conservation and its second-order convergence in dt.
fn criterion_2() -> Verdict {
    let g = circle(32);
    let h0 = SupportField::from_fn(&g, |u| 1.5 * (1.0 + 0.25 * (2.0 * angle(u)).cos())).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    // φ(s) = s has the logarithmic potential; φ(s) = s^{1/2} the one vanishing at 0
    for (p, case) in [(0.0, PotentialCase::Unit), (0.5, PotentialCase::Origin)] {
        let drift = |dt_max: f64| {
            let pot = make_potential(&Weight::power_law(p), case, 1, CaseParams::default()).unwrap();
            let spec = FlowSpec::normalized(SupportField::constant(&g, 1.0), pot, h0.clone()).unwrap();
            let opts = SolverOptions {
                dt_max,
                t_max: 2.0,
                ..SolverOptions::default()
            };
            let out = run(&spec, &opts).unwrap();
            let largest_dt = out.trace.rows().iter().map(|r| r.dt).fold(0.0, f64::max);
            (energy_drift(&out), largest_dt)
        };
        let (d1, dt1) = drift(1e-3);
        let (d2, dt2) = drift(5e-4);
        let ratio = d1 / d2;
        let ok = d1 <= 1e-4 && (3.0..=5.0).contains(&ratio) && dt1 == 1e-3 && dt2 == 5e-4;
        pass &= ok;
        detail.push(format!("p={p} ({case}): drift {d1:.2e} -> {d2:.2e}, ratio {ratio:.2}"));
    }
    verdict(pass, detail.join("; "))
}

fn decreases(series: &[f64]) -> usize {
    series.windows(2).filter(|w| w[1] < w[0] - 1e-10 * w[0].abs()).count()
}

/// Volume and Lyapunov monotonicity over a regression suite.
fn criterion_3() -> Verdict {
    let c = circle(64);
    let s2 = latlon(16, 32);
    let one = |g: &Arc<SphereGrid>| SupportField::constant(g, 1.0);
    let even_start = |g: &Arc<SphereGrid>, seed| perturbed_sphere(g, 1.2, 0.08, 4, true, seed).unwrap();
    let any_start = |g: &Arc<SphereGrid>, seed| perturbed_sphere(g, 1.0, 0.08, 5, false, seed).unwrap();
    let normalized = |g: &Arc<SphereGrid>, p: f64, case, seed| {
        let pot = make_potential(&Weight::power_law(p), case, g.dim(), CaseParams::default()).unwrap();
        FlowSpec::normalized(one(g), pot, even_start(g, seed)).unwrap()
    };
    let regularized = |g: &Arc<SphereGrid>, p: f64, eps, seed| {
        let rw = make_regularized(&Weight::power_law(p), g.dim(), eps).unwrap();
        FlowSpec::regularized(one(g), rw, even_start(g, seed)).unwrap()
    };
    let suite: Vec<(&str, FlowSpec)> = vec![
        ("normalized S1 p=0 3b", normalized(&c, 0.0, PotentialCase::Unit, 1)),
        ("normalized S1 p=0.5 3a", normalized(&c, 0.5, PotentialCase::Origin, 2)),
        ("normalized S1 p=2 3a", normalized(&c, 2.0, PotentialCase::Origin, 3)),
        ("normalized S1 p=4 3a", normalized(&c, 4.0, PotentialCase::Origin, 4)),
        ("normalized S1 p=-1 3c", normalized(&c, -1.0, PotentialCase::Infinity, 5)),
        ("normalized S1 p=-0.5 3d", normalized(&c, -0.5, PotentialCase::InfinitySingular, 6)),
        ("normalized S2 p=2 3a", normalized(&s2, 2.0, PotentialCase::Origin, 7)),
        ("regularized S1 p=2 eps=0.1", regularized(&c, 2.0, 0.1, 8)),
        ("regularized S1 p=3 eps=0.05", regularized(&c, 3.0, 0.05, 9)),
        ("unnormalized S1 p=4", unnormalized(one(&c), 4.0, any_start(&c, 10))),
        ("unnormalized S1 p=6", unnormalized(one(&c), 6.0, any_start(&c, 11))),
        ("unnormalized S2 p=5", unnormalized(one(&s2), 5.0, any_start(&s2, 12))),
    ];
    let opts = SolverOptions {
        t_max: 2.0,
        enforce_invariants: false,
        ..SolverOptions::default()
    };
    let mut violations = 0;
    let mut failed = Vec::new();
    let runs = suite.len();
    for (name, spec) in suite {
        let lyapunov = spec.kind() == orlicz_flow::flow::FlowKind::UnnormalizedOrlicz;
        match run(&spec, &opts) {
            Ok(out) => {
                let series: Vec<f64> = out
                    .trace
                    .rows()
                    .iter()
                    .map(|r| if lyapunov { r.lyapunov } else { r.volume })
                    .collect();
                let v = decreases(&series);
                if v > 0 {
                    failed.push(format!("{name}: {v}"));
                }
                violations += v;
            }
            Err(e) => failed.push(format!("{name}: {e}")),
        }
    }
    verdict(
        failed.is_empty(),
        format!("{runs} runs, {violations} violations beyond 1e-10{}", if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) }),
    )
}

/// Manufactured solution recovery.
fn criterion_4() -> Verdict {
    let g = circle(512);
    let target = |t: f64| 1.0 + 0.2 * (2.0 * t).cos();
    // σ₁ = h + h'' = 1 − 0.6 cos 2θ, φ(h) = h⁻³
    let f = SupportField::from_fn(&g, |u| {
        let t = angle(u);
        target(t).powi(3) / (1.0 - 0.6 * (2.0 * t).cos())
    })
    .unwrap();
    let exact = SupportField::from_fn(&g, |u| target(angle(u))).unwrap();
    let spec = unnormalized(f, 4.0, SupportField::constant(&g, 1.0));
    let Ok(out) = run(&spec, &SolverOptions::default()) else {
        return verdict(false, "flow failed");
    };
    let err = hausdorff_distance(&out.state.h, &exact).unwrap();
    verdict(
        out.status == RunStatus::Converged && err <= 5e-3,
        format!("status {}, sup error {err:.2e}, gamma {:.6}", out.status.label(), out.gamma),
    )
}

/// Orlicz norm of a power function is the normalized L^p norm.
fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for g in [circle(256), latlon(32, 64)] {
        let mu = SphereMeasure::uniform(&g);
        for _ in 0..5 {
            let vals: Vec<f64> = (0..g.len()).map(|_| rng.random_range(0.1..3.0)).collect();
            let field = SupportField::new(Arc::clone(&g), vals.clone()).unwrap();
            for p in [1.0, 2.0, 3.5] {
                let got = orlicz_norm(&field, &move |t: f64| t.powf(p), &mu).unwrap();
                let mean: f64 = g.weights().iter().zip(&vals).map(|(w, v)| w * v.powf(p)).sum::<f64>() / g.weights().iter().sum::<f64>();
                let exact = mean.powf(1.0 / p);
                worst = worst.max((got - exact).abs() / exact);
            }
        }
    }
    verdict(worst <= 1e-10, format!("worst relative error {worst:.2e} over 30 fields"))
}

/// Regularization inequalities, against closed-form potentials.
fn criterion_6() -> Verdict {
    let n = 1.0;
    let mut lines = Vec::new();
    let mut pass = true;
    for p in [0.5f64, 2.0] {
        let w = Weight::power_law(p);
        // ϕ(s) = s^p / p, 1/φ(s) = s^{p−1}
        let phi = |s: f64| s.powf(p) / p;
        let inv = |s: f64| s.powf(p - 1.0);
        for eps in [0.1, 0.05, 0.025] {
            let rw = make_regularized(&w, 1, eps).unwrap();
            let potential_bound = (2.0 * eps).powf(n + 1.0 + eps) + phi(2.0 * eps) - phi(eps);
            // s^{n+ε} + 2s^{p−1} on [0, 2ε]: increasing for p ≥ 1, unbounded otherwise
            let (recip_bound, scaled_bound) = if p >= 1.0 {
                let s = 2.0 * eps;
                (s.powf(n + eps) + 2.0 * inv(s), s.powf(n + 1.0 + eps) + 2.0 * s * inv(s))
            } else {
                let s = 2.0 * eps;
                (f64::INFINITY, s.powf(n + 1.0 + eps) + 2.0 * s * inv(s))
            };
            let mut bad = [0usize; 5];
            for i in 0..1000 {
                let lo = 1e-4 * eps;
                let s = lo * (1e4 / lo).powf(i as f64 / 999.0);
                let gap = rw.potential(s) - phi(s);
                let tol = 1e-12 * phi(s).abs().max(1e-300);
                bad[0] += (gap < -tol) as usize;
                bad[1] += (gap > potential_bound + tol) as usize;
                bad[2] += ((rw.reciprocal(s) - inv(s)).abs() > recip_bound * (1.0 + 1e-12)) as usize;
                bad[3] += ((s * rw.reciprocal(s) - s * inv(s)).abs() > scaled_bound * (1.0 + 1e-12)) as usize;
                let t = 2.0 * eps * i as f64 / 999.0;
                if t > 0.0 {
                    bad[4] += (rw.reciprocal(t) > inv(t) + t.powf(n + eps) + 1e-12 * inv(t)) as usize;
                }
            }
            let total: usize = bad.iter().sum();
            pass &= total == 0;
            if total > 0 {
                lines.push(format!("p={p} eps={eps}: violations [ge, potential, recip, scaled, recip-near-0] = {bad:?}"));
            }
        }
    }
    if lines.is_empty() {
        lines.push("all inequalities hold for p in {0.5, 2}, eps in {0.1, 0.05, 0.025}".into());
    }
    verdict(pass, lines.join("; "))
}

/// General measure with dihedral symmetry.
fn criterion_7() -> Verdict {
    let g = circle(128);
    let atoms = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]]
        .into_iter()
        .map(|direction| Atom { direction, mass: 1.0 })
        .collect();
    let mu = SphereMeasure::from_atoms(&g, atoms, true).unwrap();
    let w = Weight::power_law(2.0);
    let pot = make_potential(&w, PotentialCase::Origin, 1, CaseParams::default()).unwrap();
    let sol = match solve_general_orlicz(&mu, &w, &pot, &GeneralOptions::default()) {
        Ok(s) => s,
        Err(e) => return verdict(false, format!("pipeline failed: {e}")),
    };
    let h = sol.h.values();
    let n = h.len();
    // D4 is generated by the quarter turn and the reflection θ ↦ −θ
    let mut dev = 0.0f64;
    for i in 0..n {
        dev = dev.max((h[i] - h[(i + n / 4) % n]).abs());
        dev = dev.max((h[i] - h[(n - i) % n]).abs());
    }
    let (wm, wp) = widths(&sol.h);
    let last = sol.stages.last().unwrap();
    let slack = 1.0 + 1e-3;
    let bounds_ok = sol
        .stages
        .iter()
        .all(|s| s.wplus <= s.wplus_bound * slack && s.wminus * slack >= s.wminus_bound);
    let final_ok = (wm - last.wminus).abs() < 1e-12 && (wp - last.wplus).abs() < 1e-12;
    verdict(
        dev <= 1e-6 && bounds_ok && final_ok,
        format!(
            "symmetry deviation {dev:.1e}; widths [{wm:.3}, {wp:.3}] within [{:.3}, {:.3}] over {} stages",
            last.wminus_bound,
            last.wplus_bound,
            sol.stages.len()
        ),
    )
}

/// Christoffel-Minkowski flow on S².
fn criterion_8() -> Verdict {
    let g = latlon(64, 128);
    let spec = FlowSpec::christoffel(SupportField::constant(&g, 1.0), 4.0, 1, SupportField::constant(&g, 0.5)).unwrap();
    let start = Instant::now();
    let out = one_core(|| run(&spec, &SolverOptions::default()));
    let elapsed = start.elapsed();
    let Ok(out) = out else {
        return verdict(false, "flow failed");
    };
    let d = hausdorff_distance(&out.state.h, &SupportField::constant(&g, 1.0)).unwrap();
    let inc = out.checks.min_increment.unwrap_or(f64::NAN);
    verdict(
        out.status == RunStatus::Converged && inc > 0.0 && d <= 5e-3 && elapsed <= Duration::from_secs(300),
        format!(
            "status {}, smallest nodal increment {inc:.2e} over {} steps, Hausdorff {d:.2e}, {:.0} s on one core",
            out.status.label(),
            out.state.step_count,
            elapsed.as_secs_f64()
        ),
    )
}

/// Geometry kernel identities and convergence order.
fn criterion_9() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    for g in [circle(128), latlon(32, 64)] {
        let dim = g.dim();
        let h = perturbed_sphere(&g, 1.0, 0.1, 4, false, 9).unwrap();
        let sigma = sigma_n(&h);
        let (dt, dp) = g.spacing();
        let finest = if dim == 1 { dt } else { dt.min((dt / 2.0).sin() * dp) };
        // homogeneity, up to roundoff amplified by the stencil
        let c = 2.5;
        let hom = max_abs_diff(sigma_n(&h.scaled(c)).values(), sigma.scaled(c.powi(dim as i32)).values());
        let hom_tol = 64.0 * f64::EPSILON * (c * h.max()).powi(dim as i32) / (finest * finest);
        // translation by v, annihilated up to the stencil error
        let v = [0.2, -0.1, 0.15];
        let moved: Vec<f64> = g.nodes().iter().zip(h.values()).map(|(u, x)| x + u[0] * v[0] + u[1] * v[1] + if dim == 2 { u[2] * v[2] } else { 0.0 }).collect();
        let tr = max_abs_diff(sigma_n(&SupportField::new(Arc::clone(&g), moved).unwrap()).values(), sigma.values());
        let tr_tol = 10.0 * dt.powi(4);
        let bary = norm(&barycenter_of_surface_measure(&h));
        let bary_tol = 0.1 * dt.powi(4) * h.max();
        let ok = hom <= hom_tol && tr <= tr_tol && bary <= bary_tol;
        pass &= ok;
        notes.push(format!("S{dim}: homogeneity {hom:.1e}, translation {tr:.1e}, barycenter {bary:.1e}"));
    }
    // σ₁ of the ellipse x²/a² + y²/b² = 1 is a²b²/h³
    let (a, b) = (1.3, 0.8);
    let mut within = true;
    let errors: Vec<f64> = [32, 64, 128, 256]
        .iter()
        .map(|&nodes| {
            let g = circle(nodes);
            let h = SupportField::from_fn(&g, |u| (a * a * u[0] * u[0] + b * b * u[1] * u[1]).sqrt()).unwrap();
            let s = radii_matrix(&h).sigma_n();
            let exact: Vec<f64> = h.values().iter().map(|x| a * a * b * b / x.powi(3)).collect();
            let err = max_abs_diff(s.values(), &exact);
            within &= err <= 10.0 * g.spacing().0.powi(4) * h.max();
            err
        })
        .collect();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    pass &= order >= 3.5 && within;
    notes.push(format!(
        "ellipse errors {} with orders {}",
        errors.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>().join(", "),
        orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>().join(", ")
    ));
    verdict(pass, notes.join("; "))
}

fn main() {
    let criteria: [(u32, fn() -> Verdict); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut unexpected = 0;
    for (id, check) in criteria {
        let v = check();
        let expected_fail = EXPECTED_FAILURES.iter().find(|(i, _)| *i == id);
        let tag = if v.pass { "PASS" } else { "FAIL" };
        match (v.pass, expected_fail) {
            (false, Some((_, why))) => println!("criterion {id}: {tag} (expected: {why}) {}", v.detail),
            (true, Some(_)) => {
                unexpected += 1;
                println!("criterion {id}: {tag} (was expected to fail) {}", v.detail);
            }
            (false, None) => {
                unexpected += 1;
                println!("criterion {id}: {tag} {}", v.detail);
            }
            (true, None) => println!("criterion {id}: {tag} {}", v.detail),
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria deviated from expectation");
        std::process::exit(1);
    }
}
