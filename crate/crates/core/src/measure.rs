//! Finite Borel measures on the sphere: nodal densities plus point masses.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::grid::normalize;
use crate::geometry::{dot, norm, SphereGrid, SupportField, Vec3};
use crate::orlicz::{orlicz_norm_weighted, OrliczFunction};

/// A point mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub direction: Vec3,
    pub mass: f64,
}

/// Relative tolerance for declared symmetries.
pub const EVEN_TOL: f64 = 1e-10;

/// Default relative threshold `δ` in the hemisphere test.
pub const DEFAULT_HEMISPHERE_DELTA: f64 = 1e-6;

/// Fewest grid nodes a mollifier cap may contain.
pub const MIN_CAP_NODES: usize = 5;

/// `density` is with respect to the grid's surface measure `dθ`.
#[derive(Clone, Debug)]
pub struct SphereMeasure {
    grid: Arc<SphereGrid>,
    density: Option<Vec<f64>>,
    atoms: Vec<Atom>,
    total: f64,
    even: bool,
}

fn density_total(grid: &SphereGrid, rho: &[f64]) -> f64 {
    grid.integrate(rho)
}

impl SphereMeasure {
    /// Density measure; `even` is verified nodewise.
    pub fn from_density(grid: &Arc<SphereGrid>, density: Vec<f64>, even: bool) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: density.len(),
            });
        }
        if let Some(i) = density.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidMeasure(format!(
                "density must be finite and non-negative; node {i} has {}",
                density[i]
            )));
        }
        let total = density_total(grid, &density);
        if !(total > 0.0) {
            return Err(Error::InvalidMeasure("density has zero total mass".into()));
        }
        let mu = SphereMeasure {
            grid: Arc::clone(grid),
            density: Some(density),
            atoms: Vec::new(),
            total,
            even,
        };
        mu.verify_even()?;
        Ok(mu)
    }

    /// Atomic measure; directions are normalized, `even` requires antipodal pairing.
    pub fn from_atoms(grid: &Arc<SphereGrid>, atoms: Vec<Atom>, even: bool) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("atom list is empty".into()));
        }
        let mut out = Vec::with_capacity(atoms.len());
        for (i, a) in atoms.into_iter().enumerate() {
            if grid.dim() == 1 && a.direction[2] != 0.0 {
                return Err(Error::InvalidMeasure(format!("atom {i} has a z component on the circle")));
            }
            let len = norm(&a.direction);
            if !(len > 0.0 && len.is_finite()) {
                return Err(Error::InvalidMeasure(format!("atom {i} has a zero or non-finite direction")));
            }
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(Error::InvalidMeasure(format!("atom {i} has non-positive mass {}", a.mass)));
            }
            out.push(Atom {
                direction: normalize(&a.direction),
                mass: a.mass,
            });
        }
        let total = out.iter().map(|a| a.mass).sum();
        let mu = SphereMeasure {
            grid: Arc::clone(grid),
            density: None,
            atoms: out,
            total,
            even,
        };
        mu.verify_even()?;
        Ok(mu)
    }

    /// Normalized surface measure `dθ`.
    pub fn uniform(grid: &Arc<SphereGrid>) -> Self {
        let density = vec![1.0; grid.len()];
        SphereMeasure {
            total: density_total(grid, &density),
            grid: Arc::clone(grid),
            density: Some(density),
            atoms: Vec::new(),
            even: grid.is_antipodally_closed(),
        }
    }

    /// `dμ_f = (1/f) dθ`.
    pub fn from_density_f(f: &SupportField) -> Result<Self> {
        f.require_positive("f")?;
        let density: Vec<f64> = f.values().iter().map(|v| 1.0 / v).collect();
        let even = f.grid().is_antipodally_closed() && f.is_even(EVEN_TOL);
        Self::from_density(f.grid(), density, even)
    }

    fn verify_even(&self) -> Result<()> {
        if !self.even {
            return Ok(());
        }
        if let Some(rho) = &self.density {
            let flipped = self.grid.antipodal_values(rho);
            let scale = rho.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let defect = rho.iter().zip(&flipped).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if defect > EVEN_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::InvalidMeasure(format!(
                    "density declared even but differs from its reflection by {defect:e}"
                )));
            }
        }
        for a in &self.atoms {
            let anti = [-a.direction[0], -a.direction[1], -a.direction[2]];
            let paired = self.atoms.iter().any(|b| {
                (dot(&b.direction, &anti) - 1.0).abs() <= EVEN_TOL
                    && (b.mass - a.mass).abs() <= EVEN_TOL * a.mass
            });
            if !paired {
                return Err(Error::InvalidMeasure(format!(
                    "measure declared even but the atom at {:?} has no antipodal partner of equal mass",
                    a.direction
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn density(&self) -> Option<&[f64]> {
        self.density.as_deref()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `|μ| = μ(Sⁿ)`.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    /// `c·μ`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidMeasure(format!("scale must be positive, got {c}")));
        }
        Ok(SphereMeasure {
            grid: Arc::clone(&self.grid),
            density: self.density.as_ref().map(|d| d.iter().map(|v| c * v).collect()),
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    direction: a.direction,
                    mass: c * a.mass,
                })
                .collect(),
            total: c * self.total,
            even: self.even,
        })
    }

    /// Every mass-carrying point as parallel arrays of directions and masses:
    /// density nodes with `ρ_i w_i`, then the atoms.
    pub fn samples(&self) -> (Vec<Vec3>, Vec<f64>) {
        let mut dirs = Vec::new();
        let mut masses = Vec::new();
        if let Some(rho) = &self.density {
            for ((u, r), w) in self.grid.nodes().iter().zip(rho).zip(self.grid.weights()) {
                if *r > 0.0 {
                    dirs.push(*u);
                    masses.push(r * w);
                }
            }
        }
        for a in &self.atoms {
            dirs.push(a.direction);
            masses.push(a.mass);
        }
        (dirs, masses)
    }

    /// `∫ ψ dμ`.
    pub fn integrate(&self, psi: impl Fn(&Vec3) -> f64) -> f64 {
        let (dirs, masses) = self.samples();
        dirs.iter().zip(&masses).map(|(u, m)| m * psi(u)).sum()
    }

    /// Replaces every atom by a normalized smooth bump of geodesic radius
    /// `bandwidth`, `B(θ) ∝ exp(−1/(1 − (θ/κ)²))`, normalized by the grid
    /// quadrature so that mass is preserved exactly up to rounding.
    pub fn mollify(&self, bandwidth: f64) -> Result<Self> {
        if self.atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms to mollify".into()));
        }
        if !(bandwidth > 0.0 && bandwidth <= PI / 4.0) {
            return Err(Error::Bandwidth {
                bandwidth,
                reason: "must lie in (0, pi/4]".into(),
            });
        }
        let grid = &self.grid;
        let mut rho = self.density.clone().unwrap_or_else(|| vec![0.0; grid.len()]);
        let weights = grid.weights();
        for a in &self.atoms {
            let bump: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|u| {
                    let theta = dot(u, &a.direction).clamp(-1.0, 1.0).acos();
                    let x = theta / bandwidth;
                    if x < 1.0 {
                        (-1.0 / (1.0 - x * x)).exp()
                    } else {
                        0.0
                    }
                })
                .collect();
            let support = bump.iter().filter(|&&b| b > 0.0).count();
            if support < MIN_CAP_NODES {
                return Err(Error::Bandwidth {
                    bandwidth,
                    reason: format!("cap holds {support} grid nodes, need at least {MIN_CAP_NODES}"),
                });
            }
            let mass: f64 = bump.iter().zip(weights).map(|(b, w)| b * w).sum();
            let scale = a.mass / mass;
            for (r, b) in rho.iter_mut().zip(&bump) {
                *r += scale * b;
            }
        }
        let total = density_total(grid, &rho);
        Ok(SphereMeasure {
            grid: Arc::clone(grid),
            density: Some(rho),
            atoms: Vec::new(),
            total,
            even: self.even,
        })
    }

    /// Adds the uniform density `fraction · |μ| / |Sⁿ|`, keeping the result
    /// bounded away from zero so that `1/ρ` is finite.
    pub fn with_floor(&self, fraction: f64) -> Result<Self> {
        if !(fraction >= 0.0 && fraction.is_finite()) {
            return Err(Error::InvalidMeasure(format!("density floor must be non-negative, got {fraction}")));
        }
        let Some(rho) = &self.density else {
            return Err(Error::InvalidMeasure("density floor needs a density measure".into()));
        };
        if !self.atoms.is_empty() {
            return Err(Error::InvalidMeasure("density floor needs atoms to be mollified first".into()));
        }
        let c = fraction * self.total / self.grid.sphere_measure();
        let rho: Vec<f64> = rho.iter().map(|r| r + c).collect();
        let total = density_total(&self.grid, &rho);
        Ok(SphereMeasure {
            grid: Arc::clone(&self.grid),
            density: Some(rho),
            atoms: Vec::new(),
            total,
            even: self.even,
        })
    }

    /// The anisotropy `f = 1/ρ` of a strictly positive density measure.
    pub fn anisotropy(&self) -> Result<SupportField> {
        let Some(rho) = &self.density else {
            return Err(Error::InvalidMeasure("atomic measure has no density".into()));
        };
        if !self.atoms.is_empty() {
            return Err(Error::InvalidMeasure("mollify atoms before forming 1/density".into()));
        }
        if let Some(i) = rho.iter().position(|&r| r <= 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "density vanishes at node {i}; apply a positive density floor"
            )));
        }
        SupportField::new(Arc::clone(&self.grid), rho.iter().map(|r| 1.0 / r).collect())
    }
}

/// Result of the hemisphere (or great-subsphere) concentration test.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HemisphereReport {
    /// `min_v ∫⟨u,v⟩₊ dμ`, or `min_v ∫|⟨u,v⟩| dμ` in even mode.
    pub min_plus: f64,
    pub direction: Vec3,
    pub threshold: f64,
    pub passed: bool,
    pub even: bool,
}

fn segment(even: bool) -> impl Fn(f64) -> f64 + Copy {
    move |c: f64| if even { c.abs() } else { c.max(0.0) }
}

fn circle_dir(alpha: f64) -> Vec3 {
    [alpha.cos(), alpha.sin(), 0.0]
}

/// Golden-section refinement of a minimum over the circle around the best
/// node angle, within one grid cell on either side.
fn refine_on_circle(objective: impl Fn(&Vec3) -> f64, best: &Vec3, best_val: f64, cell: f64) -> (Vec3, f64) {
    let centre = best[1].atan2(best[0]);
    let (mut a, mut b) = (centre - cell, centre + cell);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = objective(&circle_dir(c));
    let mut fd = objective(&circle_dir(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = objective(&circle_dir(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = objective(&circle_dir(d));
        }
    }
    let (alpha, val) = if fc < fd { (c, fc) } else { (d, fd) };
    if val < best_val {
        (circle_dir(alpha), val)
    } else {
        (*best, best_val)
    }
}

/// Minimizes `objective` over grid directions (parallel), refining on S¹.
fn minimize_over_directions(grid: &SphereGrid, objective: impl Fn(&Vec3) -> f64 + Sync) -> (Vec3, f64) {
    let vals: Vec<f64> = grid.nodes().par_iter().map(&objective).collect();
    let (mut idx, mut best) = (0, f64::INFINITY);
    for (i, &v) in vals.iter().enumerate() {
        if v < best {
            best = v;
            idx = i;
        }
    }
    let node = grid.nodes()[idx];
    if grid.dim() == 1 {
        refine_on_circle(&objective, &node, best, grid.spacing().0)
    } else {
        (node, best)
    }
}

/// Tests whether `μ` is concentrated on a closed hemisphere (or, in even
/// mode, on a great subsphere) by minimizing the segment integral over
/// directions. Passes when the minimum exceeds `delta · |μ|`.
pub fn hemisphere_check(mu: &SphereMeasure, even: bool, delta: f64) -> HemisphereReport {
    let (dirs, masses) = mu.samples();
    let seg = segment(even);
    let objective = |v: &Vec3| -> f64 { dirs.iter().zip(&masses).map(|(u, m)| m * seg(dot(u, v))).sum() };
    let (direction, min_plus) = minimize_over_directions(mu.grid(), objective);
    let threshold = delta * mu.total();
    HemisphereReport {
        min_plus,
        direction,
        threshold,
        passed: min_plus > threshold,
        even,
    }
}

/// `min_v ‖h_v‖_{ϕ,μ}` over directions, where `h_v = ⟨·,v⟩₊` (or `|⟨·,v⟩|`
/// in even mode) is the support function of a segment from the origin (or
/// through it).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SegmentNorm {
    pub value: f64,
    pub direction: Vec3,
}

pub fn min_segment_orlicz_norm(mu: &SphereMeasure, phi: &impl OrliczFunction, even: bool) -> Result<SegmentNorm> {
    let check = hemisphere_check(mu, even, DEFAULT_HEMISPHERE_DELTA);
    if !check.passed {
        return Err(Error::HemisphereConcentrated {
            min_plus: check.min_plus,
        });
    }
    let (dirs, masses) = mu.samples();
    let seg = segment(even);
    let norm_at = |v: &Vec3| -> f64 {
        let vals: Vec<f64> = dirs.iter().map(|u| seg(dot(u, v))).collect();
        orlicz_norm_weighted(&vals, &masses, phi).unwrap_or(f64::NAN)
    };
    // surface errors from the norm itself before minimizing
    orlicz_norm_weighted(&dirs.iter().map(|u| seg(dot(u, &check.direction))).collect::<Vec<_>>(), &masses, phi)?;
    let (direction, value) = minimize_over_directions(mu.grid(), norm_at);
    if !value.is_finite() {
        return Err(Error::Consistency("segment Orlicz norm is not finite".into()));
    }
    Ok(SegmentNorm { value, direction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Resolution};

    fn circle(n: usize) -> Arc<SphereGrid> {
        build_grid(1, Resolution::Circle { nodes: n }).unwrap()
    }

    #[test]
    fn totals() {
        let g = circle(64);
        let mu = SphereMeasure::from_density_f(&SupportField::constant(&g, 1.0)).unwrap();
        assert!((mu.total() - 2.0 * PI).abs() < 1e-13);
        let s = build_grid(2, Resolution::LatLon { nlat: 16, nlon: 32 }).unwrap();
        let mu = SphereMeasure::from_density_f(&SupportField::constant(&s, 2.0)).unwrap();
        assert!((mu.total() - 2.0 * PI).abs() < 1e-12);
        assert!(SphereMeasure::from_density_f(&SupportField::constant(&g, 0.0)).is_err());
    }

    #[test]
    fn single_atom_mollifies_into_cap() {
        let g = circle(256);
        let mu = SphereMeasure::from_atoms(&g, vec![Atom { direction: [1.0, 0.0, 0.0], mass: 1.0 }], false).unwrap();
        let m = mu.mollify(0.3).unwrap();
        assert!((m.total() - 1.0).abs() < 1e-12);
        for (u, r) in g.nodes().iter().zip(m.density().unwrap()) {
            if u[0].acos() >= 0.3 {
                assert_eq!(*r, 0.0);
            }
        }
        assert!(matches!(mu.mollify(0.01), Err(Error::Bandwidth { .. })));
    }

    #[test]
    fn even_declarations_checked() {
        let g = circle(64);
        let one = vec![Atom { direction: [1.0, 0.0, 0.0], mass: 1.0 }];
        assert!(SphereMeasure::from_atoms(&g, one, true).is_err());
        let pair = vec![
            Atom { direction: [1.0, 0.0, 0.0], mass: 1.0 },
            Atom { direction: [-2.0, 0.0, 0.0], mass: 1.0 },
        ];
        let mu = SphereMeasure::from_atoms(&g, pair, true).unwrap();
        let m = mu.mollify(0.4).unwrap();
        assert!(m.is_even());
        let rho = m.density().unwrap();
        let flipped = g.antipodal_values(rho);
        for (a, b) in rho.iter().zip(&flipped) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hemisphere_examples() {
        let g = circle(128);
        let rep = hemisphere_check(&SphereMeasure::uniform(&g), false, DEFAULT_HEMISPHERE_DELTA);
        assert!((rep.min_plus - 2.0).abs() < 1e-3 && rep.passed, "{}", rep.min_plus);
        let atom = SphereMeasure::from_atoms(&g, vec![Atom { direction: [1.0, 0.0, 0.0], mass: 1.0 }], false).unwrap();
        let rep = hemisphere_check(&atom, false, DEFAULT_HEMISPHERE_DELTA);
        assert!(rep.min_plus.abs() < 1e-15 && !rep.passed);
        let pair = SphereMeasure::from_atoms(
            &g,
            vec![
                Atom { direction: [1.0, 0.0, 0.0], mass: 1.0 },
                Atom { direction: [-1.0, 0.0, 0.0], mass: 1.0 },
            ],
            true,
        )
        .unwrap();
        let rep = hemisphere_check(&pair, true, DEFAULT_HEMISPHERE_DELTA);
        assert!(rep.min_plus.abs() < 1e-12 && !rep.passed);
    }

    #[test]
    fn segment_norm_of_uniform_measure() {
        let g = circle(256);
        let mu = SphereMeasure::uniform(&g);
        let phi = |t: f64| t * t;
        let s = min_segment_orlicz_norm(&mu, &phi, false).unwrap();
        assert!((s.value - 0.5).abs() < 1e-10, "{}", s.value);
        let s2 = min_segment_orlicz_norm(&mu.scaled(2.0).unwrap(), &phi, false).unwrap();
        assert!((s2.value - s.value).abs() < 1e-13);
        let atom = SphereMeasure::from_atoms(&g, vec![Atom { direction: [0.0, 1.0, 0.0], mass: 1.0 }], false).unwrap();
        assert!(matches!(
            min_segment_orlicz_norm(&atom, &phi, false),
            Err(Error::HemisphereConcentrated { .. })
        ));
    }
}
