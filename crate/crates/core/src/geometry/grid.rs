use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point or direction in R³. Circle grids leave the third component at zero.
pub type Vec3 = [f64; 3];

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &Vec3) -> Vec3 {
    let r = norm(a);
    [a[0] / r, a[1] / r, a[2] / r]
}

/// Minimum node count along any periodic direction for the five-point stencil.
pub const MIN_STENCIL_NODES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    /// `nodes` uniformly spaced angles on S¹.
    Circle { nodes: usize },
    /// Latitude-longitude grid on S², offset by half a cell from both poles.
    LatLon { nlat: usize, nlon: usize },
}

impl Resolution {
    pub fn dim(&self) -> usize {
        match self {
            Resolution::Circle { .. } => 1,
            Resolution::LatLon { .. } => 2,
        }
    }
}

/// Discretization of S¹ or S² with quadrature weights and local orthonormal
/// tangent frames.
///
/// Circle nodes are `θ_k = 2πk/N`. Sphere nodes are ordered row-major,
/// index `j * nlon + k`, at colatitude `θ_j = (j + ½)π/nlat` and longitude
/// `φ_k = 2πk/nlon`. Colatitude weights follow Fejér's first rule, so the
/// quadrature is exact for polynomials in `cos θ` of degree below `nlat`.
#[derive(Debug)]
pub struct SphereGrid {
    resolution: Resolution,
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
    frames: Vec<[Vec3; 2]>,
    colatitudes: Vec<f64>,
    fft: Option<PolarFft>,
}

struct PolarFft {
    forward: Arc<dyn rustfft::Fft<f64>>,
    inverse: Arc<dyn rustfft::Fft<f64>>,
}

impl std::fmt::Debug for PolarFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("PolarFft")
    }
}

impl SphereGrid {
    pub fn new(resolution: Resolution) -> Result<Arc<Self>> {
        match resolution {
            Resolution::Circle { nodes } => Self::circle(nodes),
            Resolution::LatLon { nlat, nlon } => Self::lat_lon(nlat, nlon),
        }
    }

    fn circle(n: usize) -> Result<Arc<Self>> {
        if n < MIN_STENCIL_NODES {
            return Err(Error::ResolutionTooSmall(format!(
                "stencil needs >= {MIN_STENCIL_NODES} nodes, got {n}"
            )));
        }
        let dtheta = 2.0 * PI / n as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut frames = Vec::with_capacity(n);
        for k in 0..n {
            let (s, c) = (k as f64 * dtheta).sin_cos();
            nodes.push([c, s, 0.0]);
            frames.push([[-s, c, 0.0], [0.0; 3]]);
        }
        Ok(Arc::new(SphereGrid {
            resolution: Resolution::Circle { nodes: n },
            nodes,
            weights: vec![dtheta; n],
            frames,
            colatitudes: Vec::new(),
            fft: None,
        }))
    }

    fn lat_lon(nlat: usize, nlon: usize) -> Result<Arc<Self>> {
        if nlat < 8 {
            return Err(Error::ResolutionTooSmall(format!(
                "latitude count must be >= 8, got {nlat}"
            )));
        }
        if nlon < 8 || !nlon.is_multiple_of(2) {
            return Err(Error::ResolutionTooSmall(format!(
                "longitude count must be even and >= 8, got {nlon}"
            )));
        }
        let dphi = 2.0 * PI / nlon as f64;
        let colatitudes: Vec<f64> = (0..nlat)
            .map(|j| (j as f64 + 0.5) * PI / nlat as f64)
            .collect();
        let fejer = fejer_weights(&colatitudes);
        let mut nodes = Vec::with_capacity(nlat * nlon);
        let mut frames = Vec::with_capacity(nlat * nlon);
        let mut weights = Vec::with_capacity(nlat * nlon);
        for (j, &theta) in colatitudes.iter().enumerate() {
            let (st, ct) = theta.sin_cos();
            for k in 0..nlon {
                let (sp, cp) = (k as f64 * dphi).sin_cos();
                nodes.push([st * cp, st * sp, ct]);
                frames.push([[ct * cp, ct * sp, -st], [-sp, cp, 0.0]]);
                weights.push(fejer[j] * dphi);
            }
        }
        let mut planner = FftPlanner::new();
        let fft = PolarFft {
            forward: planner.plan_fft_forward(nlon),
            inverse: planner.plan_fft_inverse(nlon),
        };
        Ok(Arc::new(SphereGrid {
            resolution: Resolution::LatLon { nlat, nlon },
            nodes,
            weights,
            frames,
            colatitudes,
            fft: Some(fft),
        }))
    }

    pub fn dim(&self) -> usize {
        self.resolution.dim()
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Orthonormal tangent frame `(e_θ, e_φ)` at each node; `e_φ` is zero on S¹.
    pub fn frames(&self) -> &[[Vec3; 2]] {
        &self.frames
    }

    /// Colatitude of each grid row (empty on S¹).
    pub fn colatitudes(&self) -> &[f64] {
        &self.colatitudes
    }

    /// |Sⁿ|: 2π or 4π.
    pub fn sphere_measure(&self) -> f64 {
        match self.dim() {
            1 => 2.0 * PI,
            _ => 4.0 * PI,
        }
    }

    /// Volume of the unit ball bounded by Sⁿ: π or 4π/3.
    pub fn unit_ball_volume(&self) -> f64 {
        match self.dim() {
            1 => PI,
            _ => 4.0 * PI / 3.0,
        }
    }

    /// Angular spacing `(Δθ, Δφ)`; `Δφ` is zero on S¹.
    pub fn spacing(&self) -> (f64, f64) {
        match self.resolution {
            Resolution::Circle { nodes } => (2.0 * PI / nodes as f64, 0.0),
            Resolution::LatLon { nlat, nlon } => (PI / nlat as f64, 2.0 * PI / nlon as f64),
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn sample(&self, f: impl Fn(&Vec3) -> f64) -> Vec<f64> {
        self.nodes.iter().map(f).collect()
    }

    /// Index of the node at `-u`, when the grid contains it.
    pub fn antipode(&self, i: usize) -> Option<usize> {
        match self.resolution {
            Resolution::Circle { nodes } => {
                (nodes % 2 == 0).then(|| (i + nodes / 2) % nodes)
            }
            Resolution::LatLon { nlat, nlon } => {
                let (j, k) = (i / nlon, i % nlon);
                Some((nlat - 1 - j) * nlon + (k + nlon / 2) % nlon)
            }
        }
    }

    pub fn is_antipodally_closed(&self) -> bool {
        self.antipode(0).is_some()
    }

    /// Values at `-u` for every node, interpolating on grids without exact antipodes.
    pub fn antipodal_values(&self, values: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| match self.antipode(i) {
                Some(a) => values[a],
                None => {
                    let u = self.nodes[i];
                    self.interpolate(values, &[-u[0], -u[1], -u[2]])
                }
            })
            .collect()
    }

    /// Piecewise-linear (S¹) or bilinear-in-angles (S²) interpolation of
    /// nodal values at an arbitrary direction.
    pub fn interpolate(&self, values: &[f64], dir: &Vec3) -> f64 {
        match self.resolution {
            Resolution::Circle { nodes } => {
                let dtheta = 2.0 * PI / nodes as f64;
                let theta = dir[1].atan2(dir[0]).rem_euclid(2.0 * PI);
                let x = theta / dtheta;
                let i0 = (x.floor() as usize) % nodes;
                let t = x - x.floor();
                (1.0 - t) * values[i0] + t * values[(i0 + 1) % nodes]
            }
            Resolution::LatLon { nlat, nlon } => {
                let d = normalize(dir);
                let theta = d[2].clamp(-1.0, 1.0).acos();
                let phi = d[1].atan2(d[0]).rem_euclid(2.0 * PI);
                let dtheta = PI / nlat as f64;
                let dphi = 2.0 * PI / nlon as f64;
                let y = phi / dphi;
                let k0 = (y.floor() as usize) % nlon;
                let s = y - y.floor();
                let row = |j: isize| -> f64 {
                    let (jj, shift) = continue_row(j, nlat, nlon);
                    let a = values[jj * nlon + (k0 + shift) % nlon];
                    let b = values[jj * nlon + (k0 + 1 + shift) % nlon];
                    (1.0 - s) * a + s * b
                };
                let x = theta / dtheta - 0.5;
                let j0 = x.floor() as isize;
                let t = x - x.floor();
                (1.0 - t) * row(j0) + t * row(j0 + 1)
            }
        }
    }

    /// Damps high longitudinal wavenumbers of a tendency field on rows close
    /// to the poles, so that the explicit time step is governed by
    /// `ref_sin · Δφ` rather than the polar-row spacing `sin θ₀ · Δφ`.
    ///
    /// Mode `m` on a row with `sin θ < ref_sin` is scaled by
    /// `min(1, (m_c/m)²)` with `m_c = (nlon/2) sin θ / ref_sin`. Factors are
    /// strictly positive, so a filtered tendency vanishes only where the
    /// unfiltered one does. No-op on S¹.
    pub fn polar_filter(&self, values: &mut [f64], ref_sin: f64) {
        let (Resolution::LatLon { nlat: _, nlon }, Some(fft)) = (self.resolution, &self.fft) else {
            return;
        };
        let mut buf = vec![Complex64::new(0.0, 0.0); nlon];
        for (j, &theta) in self.colatitudes.iter().enumerate() {
            let s = theta.sin();
            if s >= ref_sin {
                continue;
            }
            let row = &mut values[j * nlon..(j + 1) * nlon];
            for (b, v) in buf.iter_mut().zip(row.iter()) {
                *b = Complex64::new(*v, 0.0);
            }
            fft.forward.process(&mut buf);
            let mc = 0.5 * nlon as f64 * s / ref_sin;
            for (idx, b) in buf.iter_mut().enumerate() {
                let m = idx.min(nlon - idx) as f64;
                if m > mc {
                    *b *= (mc / m).powi(2);
                }
            }
            fft.inverse.process(&mut buf);
            let scale = 1.0 / nlon as f64;
            for (v, b) in row.iter_mut().zip(buf.iter()) {
                *v = b.re * scale;
            }
        }
    }
}

/// Maps a possibly out-of-range row index across a pole. Returns the row in
/// range and the longitude shift (`nlon/2` after crossing a pole).
pub(crate) fn continue_row(j: isize, nlat: usize, nlon: usize) -> (usize, usize) {
    let n = nlat as isize;
    if j < 0 {
        ((-1 - j) as usize, nlon / 2)
    } else if j >= n {
        ((2 * n - 1 - j) as usize, nlon / 2)
    } else {
        (j as usize, 0)
    }
}

/// Fejér type-1 weights for `∫₀^π g(θ) sin θ dθ` at midpoint colatitudes.
fn fejer_weights(theta: &[f64]) -> Vec<f64> {
    let n = theta.len();
    theta
        .iter()
        .map(|&t| {
            let s: f64 = (1..=n / 2)
                .map(|k| {
                    let k = k as f64;
                    (2.0 * k * t).cos() / (4.0 * k * k - 1.0)
                })
                .sum();
            2.0 / n as f64 * (1.0 - 2.0 * s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_weights_uniform() {
        let g = SphereGrid::new(Resolution::Circle { nodes: 256 }).unwrap();
        assert_eq!(g.len(), 256);
        for w in g.weights() {
            assert!((w - 2.0 * PI / 256.0).abs() < 1e-15);
        }
        assert!((g.weights().iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn lat_lon_weights_sum_to_four_pi() {
        let g = SphereGrid::new(Resolution::LatLon { nlat: 64, nlon: 128 }).unwrap();
        assert_eq!(g.len(), 8192);
        let total: f64 = g.weights().iter().sum();
        assert!((total - 4.0 * PI).abs() / (4.0 * PI) < 1e-10);
        assert!(g.weights().iter().all(|&w| w > 0.0));
        for u in g.nodes() {
            assert!((norm(u) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_small_resolutions_rejected() {
        assert!(matches!(
            SphereGrid::new(Resolution::Circle { nodes: 2 }),
            Err(Error::ResolutionTooSmall(_))
        ));
        assert!(SphereGrid::new(Resolution::LatLon { nlat: 6, nlon: 16 }).is_err());
        assert!(SphereGrid::new(Resolution::LatLon { nlat: 8, nlon: 15 }).is_err());
    }

    #[test]
    fn fejer_integrates_polynomials_in_cos() {
        let g = SphereGrid::new(Resolution::LatLon { nlat: 16, nlon: 8 }).unwrap();
        // ∫ z⁴ dθ over S² = 4π/5
        let v = g.sample(|u| u[2].powi(4));
        assert!((g.integrate(&v) - 4.0 * PI / 5.0).abs() < 1e-13);
    }

    #[test]
    fn antipodes_are_exact() {
        for res in [
            Resolution::Circle { nodes: 64 },
            Resolution::LatLon { nlat: 12, nlon: 20 },
        ] {
            let g = SphereGrid::new(res).unwrap();
            for i in 0..g.len() {
                let a = g.antipode(i).unwrap();
                let (u, v) = (g.nodes()[i], g.nodes()[a]);
                for c in 0..3 {
                    assert!((u[c] + v[c]).abs() < 1e-12);
                }
            }
        }
        let odd = SphereGrid::new(Resolution::Circle { nodes: 63 }).unwrap();
        assert!(!odd.is_antipodally_closed());
    }

    #[test]
    fn interpolation_reproduces_linear_functions_on_circle() {
        let g = SphereGrid::new(Resolution::Circle { nodes: 63 }).unwrap();
        let vals = vec![3.0; 63];
        let x = g.interpolate(&vals, &[0.3, -0.8, 0.0]);
        assert!((x - 3.0).abs() < 1e-14);
    }

    #[test]
    fn polar_filter_keeps_smooth_low_modes() {
        let g = SphereGrid::new(Resolution::LatLon { nlat: 16, nlon: 32 }).unwrap();
        let mut v = g.sample(|u| 1.0 + u[0] + u[2] * u[2]);
        let orig = v.clone();
        g.polar_filter(&mut v, 0.8);
        // m ≤ 1 everywhere: the filter never touches them.
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
