use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::engine::{evaluate, FlowState, SolverOptions};
use crate::flow::spec::{FlowLaw, FlowSpec};
use crate::geometry::SupportField;
use crate::orlicz::{Weight, WeightFunction};

/// Sampled screen of the growth hypothesis
/// `limsup_{s→∞} sⁿφ(s) < 1/max f < 1/min f < liminf_{s→0} sⁿφ(s)`
/// that keeps the unnormalized flow between two round barriers.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GrowthHypothesis {
    /// Largest `sⁿφ(s)` over the large-`s` samples.
    pub large_s: f64,
    /// Smallest `sⁿφ(s)` over the small-`s` samples.
    pub small_s: f64,
    pub upper: f64,
    pub lower: f64,
    pub passed: bool,
}

const LARGE_SAMPLES: [f64; 5] = [1e4, 1e5, 1e6, 1e7, 1e8];
const SMALL_SAMPLES: [f64; 5] = [1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

pub fn growth_hypothesis(w: &Weight, f: &SupportField) -> GrowthHypothesis {
    let n = f.grid().dim() as i32;
    let probe = |s: f64| s.powi(n) * w.value(s);
    let large_s = LARGE_SAMPLES.iter().map(|&s| probe(s)).fold(f64::NEG_INFINITY, f64::max);
    let small_s = SMALL_SAMPLES.iter().map(|&s| probe(s)).fold(f64::INFINITY, f64::min);
    let (upper, lower) = (1.0 / f.max(), 1.0 / f.min());
    GrowthHypothesis {
        large_s,
        small_s,
        upper,
        lower,
        passed: large_s < upper && small_s > lower,
    }
}

pub(crate) fn growth_hypothesis_warnings(w: &Weight, f: &SupportField) -> Vec<String> {
    let g = growth_hypothesis(w, f);
    let mut out = Vec::new();
    if !(g.large_s < g.upper) {
        out.push(format!(
            "growth hypothesis: s^n phi(s) reaches {:e} for large s, not below 1/max f = {:e}",
            g.large_s, g.upper
        ));
    }
    if !(g.small_s > g.lower) {
        out.push(format!(
            "growth hypothesis: s^n phi(s) drops to {:e} for small s, not above 1/min f = {:e}",
            g.small_s, g.lower
        ));
    }
    out
}

/// The maximum-principle barrier `∂_t h_max ≤ h_max (f_max φ(h_max) h_maxⁿ − 1)`
/// evaluated at one state.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BarrierDiagnostics {
    pub node: usize,
    pub hmax: f64,
    /// Right-hand side of the barrier inequality.
    pub bound: f64,
    /// `∂_t h` at the maximizing node.
    pub measured: f64,
    pub tolerance: f64,
    pub satisfied: bool,
}

pub(crate) fn barrier_bound(w: &dyn WeightFunction, fmax: f64, hmax: f64, n: usize) -> f64 {
    hmax * (fmax * w.value(hmax) * hmax.powi(n as i32) - 1.0)
}

/// Compares `∂_t h` at the current maximum with the barrier. Only defined
/// for the unnormalized flow.
pub fn c0_barrier_check(state: &FlowState, spec: &FlowSpec) -> Result<BarrierDiagnostics> {
    let FlowLaw::Unnormalized { weight, .. } = spec.law() else {
        return Err(Error::InvalidSpec(format!(
            "the C0 barrier applies to the unnormalized flow, not {}",
            spec.kind()
        )));
    };
    let ev = evaluate(spec, &state.h, &SolverOptions::default())?;
    let node = state.h.argmax();
    let hmax = state.h.values()[node];
    let bound = barrier_bound(weight, spec.f().max(), hmax, spec.f().grid().dim());
    let measured = ev.rhs[node];
    let scale = ev.rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tolerance = 1e-3 * scale + 1e-12 * hmax;
    Ok(BarrierDiagnostics {
        node,
        hmax,
        bound,
        measured,
        tolerance,
        satisfied: measured <= bound + tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::engine::FlowState;
    use crate::geometry::{build_grid, Resolution};

    fn circle(n: usize) -> std::sync::Arc<crate::geometry::SphereGrid> {
        build_grid(1, Resolution::Circle { nodes: n }).unwrap()
    }

    #[test]
    fn large_body_shrinks_at_its_maximum() {
        let g = circle(128);
        let f = SupportField::constant(&g, 1.0);
        let h = SupportField::ellipsoid(&g, &[2.5, 2.0]).unwrap();
        let spec = FlowSpec::unnormalized(f, Weight::power_law(4.0), None, h.clone()).unwrap();
        let st = FlowState::initial(&spec, &SolverOptions::default()).unwrap();
        let d = c0_barrier_check(&st, &spec).unwrap();
        assert!(d.bound < 0.0);
        assert!(d.measured < 0.0);
        assert!(d.satisfied);
    }

    #[test]
    fn stationary_sphere_balances() {
        let g = circle(64);
        let f = SupportField::constant(&g, 1.0);
        let h = SupportField::constant(&g, 1.0);
        let spec = FlowSpec::unnormalized(f, Weight::power_law(4.0), None, h).unwrap();
        let st = FlowState::initial(&spec, &SolverOptions::default()).unwrap();
        let d = c0_barrier_check(&st, &spec).unwrap();
        assert!(d.bound.abs() < 1e-14 && d.measured.abs() < 1e-12);
        assert!(d.satisfied);
    }

    #[test]
    fn growth_screen() {
        let g = circle(32);
        let f = SupportField::constant(&g, 1.0);
        assert!(growth_hypothesis(&Weight::power_law(4.0), &f).passed);
        // φ = s^{-1}: s φ(s) ≡ 1 on S¹, neither strict inequality holds
        assert!(!growth_hypothesis(&Weight::power_law(2.0), &f).passed);
    }

    #[test]
    fn barrier_needs_unnormalized_kind() {
        let g = circle(32);
        let f = SupportField::constant(&g, 1.0);
        let h = SupportField::constant(&g, 0.5);
        let spec = FlowSpec::christoffel(f, 4.0, 1, h).unwrap();
        let st = FlowState::initial(&spec, &SolverOptions::default()).unwrap();
        assert!(c0_barrier_check(&st, &spec).is_err());
    }
}
