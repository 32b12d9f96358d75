use crate::error::{Error, Result};
use crate::geometry::{SupportField, Vec3};
use crate::measure::SphereMeasure;
use crate::orlicz::potential::Potential;
use crate::orlicz::regularized::RegularizedWeight;

/// An increasing function `ϕ` with finite `ϕ(0)` used to define Orlicz norms.
pub trait OrliczFunction: Sync {
    fn eval(&self, t: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Sync> OrliczFunction for F {
    fn eval(&self, t: f64) -> f64 {
        self(t)
    }
}

impl OrliczFunction for Potential {
    fn eval(&self, t: f64) -> f64 {
        self.value(t)
    }
}

impl OrliczFunction for RegularizedWeight {
    fn eval(&self, t: f64) -> f64 {
        self.potential(t)
    }
}

/// Relative width at which the bisection on `λ` stops.
pub const NORM_REL_TOL: f64 = 1e-14;

const BRACKET_EXPANSIONS: usize = 5;

fn check_increasing(phi: &impl OrliczFunction) -> Result<()> {
    let probes = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0];
    let vals: Vec<f64> = probes.iter().map(|&t| phi.eval(t)).collect();
    if !vals[0].is_finite() {
        return Err(Error::InvalidSpec(format!(
            "Orlicz function must be finite at 0, got {}",
            vals[0]
        )));
    }
    for i in 1..vals.len() {
        if !(vals[i] > vals[i - 1]) {
            return Err(Error::NotIncreasing(format!(
                "phi({}) = {:e} is not above phi({}) = {:e}",
                probes[i],
                vals[i],
                probes[i - 1],
                vals[i - 1]
            )));
        }
    }
    Ok(())
}

/// `inf{λ > 0 : (1/Σm) Σ m_i ϕ(g_i/λ) ≤ ϕ(1)}` for point masses `m_i` carrying
/// values `g_i ≥ 0`. Returns 0 when `g` vanishes on every positive mass.
pub fn orlicz_norm_weighted(values: &[f64], masses: &[f64], phi: &impl OrliczFunction) -> Result<f64> {
    if values.len() != masses.len() {
        return Err(Error::LengthMismatch {
            expected: masses.len(),
            got: values.len(),
        });
    }
    check_increasing(phi)?;
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidMeasure(format!("total mass must be positive, got {total}")));
    }
    let mut gmax = 0.0f64;
    for (i, (&g, &m)) in values.iter().zip(masses).enumerate() {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::NonPositive { what: "Orlicz norm argument", node: i, value: g });
        }
        if m < 0.0 {
            return Err(Error::InvalidMeasure(format!("negative mass {m} at sample {i}")));
        }
        if m > 0.0 {
            gmax = gmax.max(g);
        }
    }
    if gmax == 0.0 {
        return Ok(0.0);
    }
    let target = phi.eval(1.0);
    let excess = |lambda: f64| -> f64 {
        let s: f64 = values
            .iter()
            .zip(masses)
            .filter(|(_, &m)| m > 0.0)
            .map(|(&g, &m)| m * phi.eval(g / lambda))
            .sum();
        s / total - target
    };
    let big = 10.0 * gmax;
    let (mut lo, mut hi) = (1e-8 * big, big);
    let mut grown = 0;
    while excess(hi) > 0.0 {
        if grown == BRACKET_EXPANSIONS {
            return Err(Error::Consistency(format!("Orlicz norm exceeds bracket {hi:e}")));
        }
        lo = hi;
        hi *= 10.0;
        grown += 1;
    }
    let mut shrunk = 0;
    while excess(lo) <= 0.0 {
        if shrunk == BRACKET_EXPANSIONS {
            return Err(Error::Consistency(format!("Orlicz norm below bracket {lo:e}")));
        }
        hi = lo;
        lo /= 10.0;
        shrunk += 1;
    }
    // invariant: excess(lo) > 0 ≥ excess(hi)
    while hi / lo - 1.0 > NORM_REL_TOL {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Orlicz norm of a function given pointwise on directions, against `μ`.
pub fn orlicz_norm_fn(g: impl Fn(&Vec3) -> f64, phi: &impl OrliczFunction, mu: &SphereMeasure) -> Result<f64> {
    let (dirs, masses) = mu.samples();
    let values: Vec<f64> = dirs.iter().map(&g).collect();
    orlicz_norm_weighted(&values, &masses, phi)
}

/// Orlicz norm of a grid field; atoms off the nodes read interpolated values.
pub fn orlicz_norm(g: &SupportField, phi: &impl OrliczFunction, mu: &SphereMeasure) -> Result<f64> {
    if !std::sync::Arc::ptr_eq(g.grid(), mu.grid()) && g.grid().resolution() != mu.grid().resolution() {
        return Err(Error::GridMismatch);
    }
    let grid = g.grid();
    let mut values = Vec::new();
    let mut masses = Vec::new();
    if let Some(rho) = mu.density() {
        for (i, (&r, &w)) in rho.iter().zip(grid.weights()).enumerate() {
            values.push(g.values()[i]);
            masses.push(r * w);
        }
    }
    for atom in mu.atoms() {
        values.push(grid.interpolate(g.values(), &atom.direction));
        masses.push(atom.mass);
    }
    orlicz_norm_weighted(&values, &masses, phi)
}
