use serde::Serialize;

use crate::error::{Error, Result};
use crate::orlicz::potential::{make_potential, CaseParams, Potential, PotentialCase};
use crate::orlicz::weight::{Weight, WeightFunction};
use crate::quadrature::{integrate, Tolerance};

/// Largest admissible regularization parameter.
pub const EPSILON_MAX: f64 = 0.25;

/// Smooth step `ψ` on `[0,1]`: 0 below, 1 above, C^∞ everywhere.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// `φ_ε = (1−ω) s^{−n−ε} + ω φ`, where the cutoff `ω` rises from 0 at `ε`
/// to 1 at `2ε`, together with the potential
/// `ϕ_ε(s) = ∫_0^s 1/φ_ε + ϕ(2ε)` built on the base potential `ϕ = ∫_0^s 1/φ`.
#[derive(Clone, Debug)]
pub struct RegularizedWeight {
    epsilon: f64,
    dim: usize,
    base: Weight,
    base_potential: Potential,
    /// `∫_0^ε 1/φ_ε = ε^{n+1+ε}/(n+1+ε)`.
    head: f64,
    /// `∫_0^{2ε} 1/φ_ε`.
    gap: f64,
    /// `ϕ(2ε)`.
    offset: f64,
}

fn quad_tol() -> Tolerance {
    Tolerance { abs: 1e-16, rel: 1e-13 }
}

/// Regularizes `w` in dimension `n` with parameter `ε ∈ (0, EPSILON_MAX]`.
/// The base potential must be `∫_0^s 1/φ`, so `1/φ` must be integrable at 0.
pub fn make_regularized(w: &Weight, n: usize, epsilon: f64) -> Result<RegularizedWeight> {
    if !(epsilon > 0.0 && epsilon <= EPSILON_MAX) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    let base_potential = make_potential(w, PotentialCase::Origin, n, CaseParams::default())?;
    let mut rw = RegularizedWeight {
        epsilon,
        dim: n,
        base: w.clone(),
        base_potential,
        head: 0.0,
        gap: 0.0,
        offset: 0.0,
    };
    let e = rw.tip_exponent();
    rw.head = epsilon.powf(e) / e;
    rw.gap = rw.head + integrate(|t| rw.reciprocal(t), epsilon, 2.0 * epsilon, quad_tol())?;
    rw.offset = rw.base_potential.value(2.0 * epsilon);
    Ok(rw)
}

impl RegularizedWeight {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> &Weight {
        &self.base
    }

    pub fn base_potential(&self) -> &Potential {
        &self.base_potential
    }

    /// `n + 1 + ε`, the exponent of `ϕ_ε` near the origin.
    fn tip_exponent(&self) -> f64 {
        self.dim as f64 + 1.0 + self.epsilon
    }

    pub fn cutoff(&self, s: f64) -> f64 {
        smooth_step((s - self.epsilon) / self.epsilon)
    }

    /// `∫_0^{2ε} 1/φ_ε`, the constant offset `ϕ_ε − ϕ` beyond `2ε`.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// `ϕ_ε(s)`; closed form below `ε` and above `2ε`, quadrature between.
    pub fn potential(&self, s: f64) -> f64 {
        let eps = self.epsilon;
        if s <= eps {
            let e = self.tip_exponent();
            s.max(0.0).powf(e) / e + self.offset
        } else if s >= 2.0 * eps {
            self.base_potential.value(s) + self.gap
        } else {
            let mid = integrate(|t| self.reciprocal(t), eps, s, quad_tol()).unwrap_or(f64::NAN);
            self.head + mid + self.offset
        }
    }
}

impl WeightFunction for RegularizedWeight {
    fn value(&self, s: f64) -> f64 {
        let omega = self.cutoff(s);
        let tip = || s.powf(-(self.dim as f64) - self.epsilon);
        if omega == 0.0 {
            tip()
        } else if omega == 1.0 {
            self.base.value(s)
        } else {
            (1.0 - omega) * tip() + omega * self.base.value(s)
        }
    }

    fn reciprocal(&self, s: f64) -> f64 {
        if self.cutoff(s) == 0.0 {
            s.max(0.0).powf(self.dim as f64 + self.epsilon)
        } else {
            1.0 / self.value(s)
        }
    }
}

/// Right-hand sides of the three uniform approximation bounds.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapBounds {
    pub epsilon: f64,
    /// Bound on `ϕ_ε − ϕ`: `(2ε)^{n+1+ε} + ϕ(2ε) − ϕ(ε)`.
    pub potential: f64,
    /// Bound on `|1/φ_ε − 1/φ|`: `sup_{[0,2ε]} (s^{n+ε} + 2/φ)`.
    pub reciprocal: f64,
    /// Bound on `|s/φ_ε − s/φ|`: `sup_{[0,2ε]} (s^{n+1+ε} + 2s/φ)`.
    pub scaled_reciprocal: f64,
}

/// One failed inequality found while sampling.
#[derive(Clone, Debug, Serialize)]
pub struct GapViolation {
    pub inequality: &'static str,
    pub s: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Sampled check of every regularization inequality.
#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub bounds: GapBounds,
    pub samples: usize,
    pub violations: Vec<GapViolation>,
}

/// Number of log-spaced abscissae used by [`gap_report`].
pub const GAP_SAMPLES: usize = 1000;

fn log_space(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let r = hi / lo;
    (0..n).map(move |i| lo * r.powf(i as f64 / (n - 1) as f64))
}

fn bounds_of(rw: &RegularizedWeight) -> GapBounds {
    let n = rw.dim as f64;
    let eps = rw.epsilon;
    let pot = &rw.base_potential;
    let w = &rw.base;
    let potential = (2.0 * eps).powf(n + 1.0 + eps) + pot.value(2.0 * eps) - pot.value(eps);
    // suprema over [0, 2ε]: the origin by its limit, the rest by a dense sample
    let r0 = w.reciprocal(0.0);
    let mut reciprocal = if r0.is_nan() { 0.0 } else { 2.0 * r0 };
    let mut scaled = 0.0f64;
    let lin = (0..=4000).map(|i| 2.0 * eps * i as f64 / 4000.0).filter(|&s| s > 0.0);
    for s in lin.chain(log_space(2.0 * eps * 1e-12, 2.0 * eps, 2000)) {
        let r = w.reciprocal(s);
        reciprocal = reciprocal.max(s.powf(n + eps) + 2.0 * r);
        scaled = scaled.max(s.powf(n + 1.0 + eps) + 2.0 * s * r);
    }
    GapBounds {
        epsilon: eps,
        potential,
        reciprocal,
        scaled_reciprocal: scaled,
    }
}

/// Evaluates the bounds and checks, on log-spaced samples:
/// `ϕ_ε ≥ ϕ`, `0 ≤ ϕ_ε − ϕ ≤ bound`, the two reciprocal gap bounds, and
/// `1/φ_ε ≤ 1/φ + s^{n+ε}` on `(0, 2ε]`.
pub fn gap_report(rw: &RegularizedWeight) -> GapReport {
    let bounds = bounds_of(rw);
    let n = rw.dim as f64;
    let eps = rw.epsilon;
    let pot = &rw.base_potential;
    let w = &rw.base;
    let mut violations = Vec::new();
    let mut check = |inequality: &'static str, s: f64, lhs: f64, rhs: f64| {
        let slack = 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300);
        if !(lhs <= rhs + slack) {
            violations.push(GapViolation { inequality, s, lhs, rhs });
        }
    };
    let mut samples = 0;
    for s in log_space(1e-4 * eps, 1e4, GAP_SAMPLES) {
        samples += 1;
        let diff = rw.potential(s) - pot.value(s);
        check("phi_eps >= phi", s, 0.0, diff);
        check("phi_eps - phi <= bound", s, diff, bounds.potential);
        let r = w.reciprocal(s);
        check("|1/phi_eps - 1/phi| <= bound", s, (rw.reciprocal(s) - r).abs(), bounds.reciprocal);
        check(
            "|s/phi_eps - s/phi| <= bound",
            s,
            (s * rw.reciprocal(s) - s * r).abs(),
            bounds.scaled_reciprocal,
        );
    }
    for s in log_space(2.0 * eps * 1e-6, 2.0 * eps, GAP_SAMPLES) {
        samples += 1;
        check(
            "1/phi_eps <= 1/phi + s^(n+eps)",
            s,
            rw.reciprocal(s),
            w.reciprocal(s) + s.powf(n + eps),
        );
    }
    GapReport {
        bounds,
        samples,
        violations,
    }
}

/// The three bounds, after verifying every inequality on the sample.
pub fn uniform_gap_bounds(rw: &RegularizedWeight) -> Result<GapBounds> {
    let report = gap_report(rw);
    match report.violations.first() {
        None => Ok(report.bounds),
        Some(v) => Err(Error::Consistency(format!(
            "{} fails at s = {:e}: {:e} > {:e} ({} violations in {} samples, epsilon = {})",
            v.inequality,
            v.s,
            v.lhs,
            v.rhs,
            report.violations.len(),
            report.samples,
            rw.epsilon
        ))),
    }
}
