//! Sphere discretization and support-function calculus.

pub mod diff;
pub mod field;
pub mod grid;
pub mod radii;

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

pub use field::SupportField;
pub use grid::{dot, norm, normalize, Resolution, SphereGrid, Vec3};
pub use radii::{radii_matrix, RadiiField, Sym2};

use crate::error::{Error, Result};

/// Relative factor for the default convexity floor `tol = 1e-8 · max h`.
pub const CONVEXITY_REL_TOL: f64 = 1e-8;

pub fn build_grid(dim: usize, resolution: Resolution) -> Result<Arc<SphereGrid>> {
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidDimension(dim));
    }
    if resolution.dim() != dim {
        return Err(Error::ResolutionTooSmall(format!(
            "resolution {resolution:?} does not describe S^{dim}"
        )));
    }
    SphereGrid::new(resolution)
}

pub fn sigma_n(h: &SupportField) -> SupportField {
    radii_matrix(h).sigma_n()
}

pub fn default_convexity_tol(h: &SupportField) -> f64 {
    CONVEXITY_REL_TOL * h.max().abs()
}

pub fn min_radii_eigenvalue(h: &SupportField) -> f64 {
    radii_matrix(h).min_eigenvalue()
}

/// `min eigenvalue > tol`; `tol` defaults to `1e-8 · max h`.
pub fn is_strictly_convex(h: &SupportField, tol: Option<f64>) -> bool {
    let tol = tol.unwrap_or_else(|| default_convexity_tol(h));
    min_radii_eigenvalue(h) > tol
}

fn require_convex(r: &RadiiField) -> Result<()> {
    let min = r.min_eigenvalue();
    if min <= 0.0 {
        return Err(Error::NotConvex {
            min_eigenvalue: min,
            tolerance: 0.0,
        });
    }
    Ok(())
}

/// Enclosed volume `V = 1/(n+1) ∫ h σₙ dθ`.
pub fn volume(h: &SupportField) -> Result<f64> {
    let r = radii_matrix(h);
    require_convex(&r)?;
    Ok(volume_from_sigma(h, r.sigma_n().values()))
}

pub(crate) fn volume_from_sigma(h: &SupportField, sigma: &[f64]) -> f64 {
    let n = h.grid().dim() as f64;
    let integrand: Vec<f64> = h.values().iter().zip(sigma).map(|(a, b)| a * b).collect();
    h.grid().integrate(&integrand) / (n + 1.0)
}

/// Minimum and maximum width `min/max (h(u) + h(−u))`.
pub fn widths(h: &SupportField) -> (f64, f64) {
    let anti = h.grid().antipodal_values(h.values());
    h.values()
        .iter()
        .zip(&anti)
        .map(|(a, b)| a + b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| (lo.min(w), hi.max(w)))
}

/// `∫ u σₙ(u) dθ`, which vanishes for every closed convex hypersurface.
pub fn barycenter_of_surface_measure(h: &SupportField) -> Vec3 {
    let sigma = sigma_n(h);
    let grid = h.grid();
    let mut acc = [0.0; 3];
    for ((u, w), s) in grid.nodes().iter().zip(grid.weights()).zip(sigma.values()) {
        for c in 0..3 {
            acc[c] += w * s * u[c];
        }
    }
    acc
}

pub fn hausdorff_distance(h1: &SupportField, h2: &SupportField) -> Result<f64> {
    h1.check_same_grid(h2)?;
    Ok(h1
        .values()
        .iter()
        .zip(h2.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Boundary points `x(u) = h(u) u + ∇̄h(u)`.
pub fn boundary_points(h: &SupportField) -> Vec<Vec3> {
    let grid = h.grid();
    let grad = radii::gradient(h);
    grid.nodes()
        .iter()
        .zip(grid.frames())
        .zip(h.values().iter().zip(&grad))
        .map(|((u, [e1, e2]), (hv, g))| {
            let mut x = [0.0; 3];
            for c in 0..3 {
                x[c] = hv * u[c] + g[0] * e1[c] + g[1] * e2[c];
            }
            x
        })
        .collect()
}

/// Writes the boundary as a CSV polyline `theta,x,y` (S¹) or an OFF
/// triangle mesh (S²).
pub fn write_mesh<W: Write>(h: &SupportField, mut out: W) -> Result<()> {
    let r = radii_matrix(h);
    require_convex(&r)?;
    let pts = boundary_points(h);
    match h.grid().resolution() {
        Resolution::Circle { nodes } => {
            writeln!(out, "theta,x,y")?;
            let dtheta = 2.0 * std::f64::consts::PI / nodes as f64;
            for (k, p) in pts.iter().enumerate() {
                writeln!(out, "{:e},{:e},{:e}", k as f64 * dtheta, p[0], p[1])?;
            }
        }
        Resolution::LatLon { nlat, nlon } => {
            let mut faces: Vec<[usize; 3]> = Vec::new();
            let id = |j: usize, k: usize| j * nlon + k % nlon;
            for j in 0..nlat - 1 {
                for k in 0..nlon {
                    faces.push([id(j, k), id(j + 1, k), id(j + 1, k + 1)]);
                    faces.push([id(j, k), id(j + 1, k + 1), id(j, k + 1)]);
                }
            }
            // polar caps as fans over the first and last rows
            for k in 1..nlon - 1 {
                faces.push([id(0, 0), id(0, k + 1), id(0, k)]);
                faces.push([id(nlat - 1, 0), id(nlat - 1, k), id(nlat - 1, k + 1)]);
            }
            writeln!(out, "OFF")?;
            writeln!(out, "{} {} 0", pts.len(), faces.len())?;
            for p in &pts {
                writeln!(out, "{:e} {:e} {:e}", p[0], p[1], p[2])?;
            }
            for f in &faces {
                writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
            }
        }
    }
    Ok(())
}

pub fn export_mesh(h: &SupportField, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_mesh(h, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(n: usize) -> Arc<SphereGrid> {
        build_grid(1, Resolution::Circle { nodes: n }).unwrap()
    }

    fn sphere(nlat: usize, nlon: usize) -> Arc<SphereGrid> {
        build_grid(2, Resolution::LatLon { nlat, nlon }).unwrap()
    }

    #[test]
    fn build_grid_rejects_bad_dimension() {
        assert!(matches!(
            build_grid(3, Resolution::Circle { nodes: 64 }),
            Err(Error::InvalidDimension(3))
        ));
        assert!(build_grid(2, Resolution::Circle { nodes: 64 }).is_err());
    }

    #[test]
    fn round_sphere_radii() {
        let g = sphere(16, 32);
        let h = SupportField::constant(&g, 3.0);
        let r = radii_matrix(&h);
        for i in 0..g.len() {
            let e = r.eigenvalues(i);
            assert!((e[0] - 3.0).abs() < 1e-10 && (e[1] - 3.0).abs() < 1e-10);
        }
        for v in r.sigma_n().values() {
            assert!((v - 9.0).abs() < 1e-9);
        }
        let s1 = r.sigma_k(1).unwrap();
        let f1 = r.curvature_f(1).unwrap();
        let f2 = r.curvature_f(2).unwrap();
        for i in 0..g.len() {
            assert!((s1.values()[i] - 6.0).abs() < 1e-9);
            assert!((f1.values()[i] - 3.0).abs() < 1e-9);
            assert!((f2.values()[i] - 3.0).abs() < 1e-9);
        }
        assert!(r.sigma_k(3).is_err());
    }

    #[test]
    fn linear_function_annihilated() {
        for (g, tol) in [(circle(64), 1e-5), (sphere(32, 64), 5e-5)] {
            let v = [0.3, -0.2, 0.5];
            let h = SupportField::from_fn(&g, |u| dot(u, &v)).unwrap();
            let r = radii_matrix(&h);
            for m in r.matrices() {
                assert!(m.xx.abs() < tol && m.xy.abs() < tol, "{m:?}");
                if g.dim() == 2 {
                    assert!(m.yy.abs() < tol, "{m:?}");
                }
            }
        }
    }

    #[test]
    fn translated_disk_sigma_is_one() {
        let g = circle(256);
        let h = SupportField::translated_sphere(&g, 1.0, &[0.3, 0.0, 0.0]);
        for v in sigma_n(&h).values() {
            assert!((v - 1.0).abs() < 1e-8);
        }
        let (lo, hi) = widths(&h);
        assert!((lo - 2.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
    }

    #[test]
    fn volumes_of_balls() {
        let h = SupportField::constant(&circle(128), 2.0);
        assert!((volume(&h).unwrap() - 4.0 * PI).abs() < 1e-10);
        let h = SupportField::constant(&sphere(16, 32), 1.0);
        assert!((volume(&h).unwrap() - 4.0 * PI / 3.0).abs() < 1e-10);
    }

    #[test]
    fn widths_of_segment_and_ball() {
        let g = circle(128);
        let h = SupportField::constant(&g, 1.5);
        assert_eq!(widths(&h), (3.0, 3.0));
        let seg = SupportField::from_fn(&g, |u| u[0].abs()).unwrap();
        let (lo, hi) = widths(&seg);
        assert!(lo.abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_examples() {
        let g = circle(256);
        let a = SupportField::constant(&g, 1.0);
        let b = SupportField::constant(&g, 1.5);
        assert!((hausdorff_distance(&a, &b).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        let c = SupportField::translated_sphere(&g, 1.0, &[0.3, 0.0, 0.0]);
        assert!((hausdorff_distance(&a, &c).unwrap() - 0.3).abs() < 1e-15);
        let other = SupportField::constant(&circle(256), 1.0);
        assert!(matches!(hausdorff_distance(&a, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn convexity_flags() {
        let g = circle(256);
        assert!((min_radii_eigenvalue(&SupportField::constant(&g, 1.0)) - 1.0).abs() < 1e-10);
        assert!(is_strictly_convex(&SupportField::constant(&g, 1.0), None));
        // smoothed segment: sqrt(x² + δ²) has radii ~ δ² / h³ in flat directions
        let seg = SupportField::from_fn(&g, |u| (u[0] * u[0] + 1e-4).sqrt()).unwrap();
        let m = min_radii_eigenvalue(&seg);
        assert!(m > 0.0 && m < 1e-3, "{m}");
        let bad = SupportField::from_fn(&g, |u| 1.0 + 0.5 * (3.0 * u[0] * u[0] - 1.0)).unwrap();
        assert!(!is_strictly_convex(&bad, None));
        assert!(matches!(volume(&bad), Err(Error::NotConvex { .. })));
    }

    #[test]
    fn mesh_export_unit_circle_and_sphere() {
        let g = circle(256);
        let mut buf = Vec::new();
        write_mesh(&SupportField::constant(&g, 1.0), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("theta,x,y"));
        let pts: Vec<(f64, f64)> = lines
            .map(|l| {
                let f: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
                (f[1], f[2])
            })
            .collect();
        assert_eq!(pts.len(), 256);
        for (x, y) in pts {
            assert!(((x * x + y * y).sqrt() - 1.0).abs() < 1e-10);
        }
        let s = sphere(12, 24);
        for p in boundary_points(&SupportField::constant(&s, 2.0)) {
            assert!((norm(&p) - 2.0).abs() < 1e-10);
        }
        let mut off = Vec::new();
        write_mesh(&SupportField::constant(&s, 2.0), &mut off).unwrap();
        let text = String::from_utf8(off).unwrap();
        assert!(text.starts_with("OFF\n288 "));
    }
}
