use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::diff::{periodic_derivatives, spherical_derivatives};
use crate::geometry::field::SupportField;
use crate::geometry::grid::{Resolution, SphereGrid};

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`. On S¹ only `xx` is used.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = 0.5 * (self.xx + self.yy);
        let d = (0.25 * (self.xx - self.yy).powi(2) + self.xy * self.xy).sqrt();
        [m - d, m + d]
    }
}

/// Per-node principal-radii matrix `r_ij = ∇̄_i∇̄_j h + ḡ_ij h`, expressed in
/// the grid's orthonormal frame (`e_θ`, `e_φ`).
#[derive(Clone, Debug)]
pub struct RadiiField {
    grid: Arc<SphereGrid>,
    matrices: Vec<Sym2>,
}

/// Nodes above this count are processed in parallel.
const PAR_THRESHOLD: usize = 4096;

pub fn radii_matrix(h: &SupportField) -> RadiiField {
    let grid = Arc::clone(h.grid());
    let v = h.values();
    let matrices = match grid.resolution() {
        Resolution::Circle { .. } => {
            let (dtheta, _) = grid.spacing();
            let (_, h2) = periodic_derivatives(v, dtheta);
            h2.iter()
                .zip(v)
                .map(|(hpp, hv)| Sym2 {
                    xx: hpp + hv,
                    ..Sym2::default()
                })
                .collect()
        }
        Resolution::LatLon { nlon, .. } => {
            let d = spherical_derivatives(&grid, v);
            let theta = grid.colatitudes();
            let build = |i: usize| {
                let (s, c) = theta[i / nlon].sin_cos();
                let cot = c / s;
                Sym2 {
                    xx: d.tt[i] + v[i],
                    xy: (d.tp[i] - cot * d.p[i]) / s,
                    yy: d.pp[i] / (s * s) + cot * d.t[i] + v[i],
                }
            };
            if v.len() >= PAR_THRESHOLD {
                (0..v.len()).into_par_iter().map(build).collect()
            } else {
                (0..v.len()).map(build).collect()
            }
        }
    };
    RadiiField { grid, matrices }
}

/// Tangential gradient `∇̄h` in the frame (`e_θ`, `e_φ`) at each node.
pub fn gradient(h: &SupportField) -> Vec<[f64; 2]> {
    let grid = h.grid();
    match grid.resolution() {
        Resolution::Circle { .. } => {
            let (dtheta, _) = grid.spacing();
            let (h1, _) = periodic_derivatives(h.values(), dtheta);
            h1.into_iter().map(|d| [d, 0.0]).collect()
        }
        Resolution::LatLon { nlon, .. } => {
            let d = spherical_derivatives(grid, h.values());
            let theta = grid.colatitudes();
            (0..h.len())
                .map(|i| [d.t[i], d.p[i] / theta[i / nlon].sin()])
                .collect()
        }
    }
}

/// Elementary symmetric polynomial σ_k of the given values.
pub fn elementary_symmetric(lambda: &[f64], k: usize) -> f64 {
    // e_j accumulated by the standard recurrence
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &x in lambda {
        for j in (1..=k.min(lambda.len())).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e[k]
}

pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl RadiiField {
    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn matrices(&self) -> &[Sym2] {
        &self.matrices
    }

    pub fn frames(&self) -> &[[crate::geometry::grid::Vec3; 2]] {
        self.grid.frames()
    }

    /// Principal radii at node `i`, ascending. On S¹ the single radius is returned.
    pub fn eigenvalues(&self, i: usize) -> Vec<f64> {
        let m = &self.matrices[i];
        match self.dim() {
            1 => vec![m.xx],
            _ => m.eigenvalues().to_vec(),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self.dim() {
            1 => self.matrices.iter().map(|m| m.xx).fold(f64::INFINITY, f64::min),
            _ => self
                .matrices
                .iter()
                .map(|m| m.eigenvalues()[0])
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Product of the principal radii, σₙ = det r.
    pub fn sigma_n(&self) -> SupportField {
        let vals = match self.dim() {
            1 => self.matrices.iter().map(|m| m.xx).collect(),
            _ => self.matrices.iter().map(Sym2::det).collect(),
        };
        SupportField::from_vec_unchecked(Arc::clone(&self.grid), vals)
    }

    /// σ_k of the principal radii. Fails for k ≥ 2 where σ_k ≤ 0.
    pub fn sigma_k(&self, k: usize) -> Result<SupportField> {
        let n = self.dim();
        if k == 0 || k > n {
            return Err(Error::InvalidOrder { k, n });
        }
        let vals: Vec<f64> = self
            .matrices
            .iter()
            .map(|m| match (n, k) {
                (1, _) => m.xx,
                (_, 1) => m.trace(),
                _ => m.det(),
            })
            .collect();
        if k >= 2 {
            if let Some(node) = vals.iter().position(|&v| v <= 0.0) {
                return Err(Error::SigmaKNonPositive {
                    k,
                    node,
                    value: vals[node],
                });
            }
        }
        Ok(SupportField::from_vec_unchecked(Arc::clone(&self.grid), vals))
    }

    /// Normalized curvature function `F = (σ_k / C(n,k))^{1/k}`, so that `F(1,…,1) = 1`.
    pub fn curvature_f(&self, k: usize) -> Result<SupportField> {
        let c = binomial(self.dim(), k);
        let s = self.sigma_k(k)?;
        Ok(if k == 1 {
            s.map(|v| v / c)
        } else {
            s.map(|v| (v / c).powf(1.0 / k as f64))
        })
    }
}
