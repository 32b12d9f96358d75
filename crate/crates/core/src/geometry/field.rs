use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::grid::{SphereGrid, Vec3};

/// Nodal samples of a scalar function on a [`SphereGrid`], most often a
/// support function `h`.
#[derive(Clone, Debug)]
pub struct SupportField {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
}

impl SupportField {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(SupportField { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Arc<SphereGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        SupportField { grid, values }
    }

    pub fn constant(grid: &Arc<SphereGrid>, c: f64) -> Self {
        SupportField {
            values: vec![c; grid.len()],
            grid: Arc::clone(grid),
        }
    }

    pub fn from_fn(grid: &Arc<SphereGrid>, f: impl Fn(&Vec3) -> f64) -> Result<Self> {
        Self::new(Arc::clone(grid), grid.sample(f))
    }

    /// Support function of the ellipse/ellipsoid with the given semi-axes
    /// along the coordinate directions.
    pub fn ellipsoid(grid: &Arc<SphereGrid>, axes: &[f64]) -> Result<Self> {
        if axes.len() != grid.dim() + 1 || axes.iter().any(|&a| a <= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "ellipsoid needs {} positive semi-axes",
                grid.dim() + 1
            )));
        }
        Self::from_fn(grid, |u| {
            axes.iter()
                .zip(u)
                .map(|(a, x)| a * a * x * x)
                .sum::<f64>()
                .sqrt()
        })
    }

    /// `h(u) = r + ⟨u, c⟩`: the ball of radius `r` centred at `c`.
    pub fn translated_sphere(grid: &Arc<SphereGrid>, r: f64, center: &Vec3) -> Self {
        SupportField {
            values: grid.sample(|u| r + crate::geometry::grid::dot(u, center)),
            grid: Arc::clone(grid),
        }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SupportField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn same_grid(&self, other: &SupportField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
    }

    pub(crate) fn check_same_grid(&self, other: &SupportField) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Returns the first node with a value `<= 0`, naming the field `what`.
    pub fn require_positive(&self, what: &'static str) -> Result<()> {
        match self.values.iter().position(|&v| v <= 0.0) {
            Some(node) => Err(Error::NonPositive {
                what,
                node,
                value: self.values[node],
            }),
            None => Ok(()),
        }
    }

    /// `max_u |h(u) − h(−u)|`.
    pub fn evenness_defect(&self) -> f64 {
        let anti = self.grid.antipodal_values(&self.values);
        self.values
            .iter()
            .zip(&anti)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_even(&self, rel_tol: f64) -> bool {
        let scale = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        self.evenness_defect() <= rel_tol * scale
    }
}
