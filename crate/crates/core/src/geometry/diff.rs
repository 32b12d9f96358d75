//! Fourth-order centred finite differences on the sphere grids.
//!
//! Stencils are written in a form that is exactly antisymmetric (first
//! derivative) or symmetric (second derivative) under index reflection, so
//! reflection-invariant data produce reflection-invariant derivatives to the
//! last bit.

use crate::geometry::grid::{continue_row, Resolution, SphereGrid};

#[inline]
fn d1(m2: f64, m1: f64, p1: f64, p2: f64, inv12h: f64) -> f64 {
    (8.0 * (p1 - m1) - (p2 - m2)) * inv12h
}

#[inline]
fn d2(m2: f64, m1: f64, c: f64, p1: f64, p2: f64, inv12h2: f64) -> f64 {
    (16.0 * (p1 + m1) - (p2 + m2) - 30.0 * c) * inv12h2
}

/// First and second derivative of a periodic sequence with spacing `h`.
pub fn periodic_derivatives(f: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = f.len();
    let inv12h = 1.0 / (12.0 * h);
    let inv12h2 = 1.0 / (12.0 * h * h);
    let at = |i: isize| f[i.rem_euclid(n as isize) as usize];
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for i in 0..n as isize {
        let (m2, m1, c, p1, p2) = (at(i - 2), at(i - 1), at(i), at(i + 1), at(i + 2));
        first.push(d1(m2, m1, p1, p2, inv12h));
        second.push(d2(m2, m1, c, p1, p2, inv12h2));
    }
    (first, second)
}

/// Angular partial derivatives of a field on the latitude-longitude grid.
pub struct SphericalDerivatives {
    pub t: Vec<f64>,
    pub tt: Vec<f64>,
    pub p: Vec<f64>,
    pub pp: Vec<f64>,
    pub tp: Vec<f64>,
}

/// θ-derivatives along meridians, continued through the poles by the
/// half-turn longitude shift.
fn colatitude_derivatives(f: &[f64], nlat: usize, nlon: usize, h: f64, want_second: bool) -> (Vec<f64>, Vec<f64>) {
    let inv12h = 1.0 / (12.0 * h);
    let inv12h2 = 1.0 / (12.0 * h * h);
    let at = |j: isize, k: usize| {
        let (jj, shift) = continue_row(j, nlat, nlon);
        f[jj * nlon + (k + shift) % nlon]
    };
    let mut first = vec![0.0; nlat * nlon];
    let mut second = if want_second { vec![0.0; nlat * nlon] } else { Vec::new() };
    for j in 0..nlat as isize {
        for k in 0..nlon {
            let (m2, m1, c, p1, p2) = (at(j - 2, k), at(j - 1, k), at(j, k), at(j + 1, k), at(j + 2, k));
            let idx = j as usize * nlon + k;
            first[idx] = d1(m2, m1, p1, p2, inv12h);
            if want_second {
                second[idx] = d2(m2, m1, c, p1, p2, inv12h2);
            }
        }
    }
    (first, second)
}

pub fn spherical_derivatives(grid: &SphereGrid, f: &[f64]) -> SphericalDerivatives {
    let Resolution::LatLon { nlat, nlon } = grid.resolution() else {
        panic!("spherical_derivatives requires a latitude-longitude grid");
    };
    let (dtheta, dphi) = grid.spacing();
    let mut p = vec![0.0; f.len()];
    let mut pp = vec![0.0; f.len()];
    for j in 0..nlat {
        let row = j * nlon..(j + 1) * nlon;
        let (a, b) = periodic_derivatives(&f[row.clone()], dphi);
        p[row.clone()].copy_from_slice(&a);
        pp[row].copy_from_slice(&b);
    }
    let (t, tt) = colatitude_derivatives(f, nlat, nlon, dtheta, true);
    let (tp, _) = colatitude_derivatives(&p, nlat, nlon, dtheta, false);
    SphericalDerivatives { t, tt, p, pp, tp }
}
