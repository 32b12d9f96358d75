use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A positive function `φ : (0,∞) → (0,∞)` as consumed by the flows.
pub trait WeightFunction: Send + Sync {
    fn value(&self, s: f64) -> f64;

    /// `1/φ(s)`; implementations override this where the reciprocal has a
    /// cleaner limit at `s = 0`.
    fn reciprocal(&self, s: f64) -> f64 {
        1.0 / self.value(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightKind {
    /// `φ(s) = s^{1−p}`.
    PowerLaw { p: f64 },
    /// Monotone cubic interpolation of a sampled table.
    Table,
    Custom,
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    PowerLaw(f64),
    Table(Arc<LogLogPchip>),
    Custom { name: String, f: ScalarFn, df: ScalarFn },
}

/// The Orlicz weight `φ` together with its derivative.
#[derive(Clone)]
pub struct Weight {
    repr: Repr,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::PowerLaw(p) => write!(f, "Weight::PowerLaw(p = {p})"),
            Repr::Table(t) => write!(f, "Weight::Table({} points)", t.x.len()),
            Repr::Custom { name, .. } => write!(f, "Weight::Custom({name})"),
        }
    }
}

/// Probe range used to sanity-check positivity of user weights.
pub const PROBE_RANGE: (f64, f64) = (1e-8, 1e8);

impl Weight {
    pub fn power_law(p: f64) -> Self {
        Weight {
            repr: Repr::PowerLaw(p),
        }
    }

    /// Weight interpolated through `(s, φ(s))` samples.
    ///
    /// Interpolation is monotone cubic (Fritsch–Carlson) in `(ln s, ln φ)`,
    /// which keeps `φ` positive, reproduces power laws exactly, and extends
    /// beyond the table by the end-interval power laws.
    pub fn from_table(points: &[(f64, f64)]) -> Result<Self> {
        Ok(Weight {
            repr: Repr::Table(Arc::new(LogLogPchip::new(points)?)),
        })
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Weight {
            repr: Repr::Custom {
                name: name.into(),
                f: Arc::new(f),
                df: Arc::new(df),
            },
        }
    }

    pub fn kind(&self) -> WeightKind {
        match &self.repr {
            Repr::PowerLaw(p) => WeightKind::PowerLaw { p: *p },
            Repr::Table(_) => WeightKind::Table,
            Repr::Custom { .. } => WeightKind::Custom,
        }
    }

    pub fn power_exponent(&self) -> Option<f64> {
        match self.repr {
            Repr::PowerLaw(p) => Some(p),
            _ => None,
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match &self.repr {
            Repr::PowerLaw(p) => (1.0 - p) * s.powf(-p),
            Repr::Table(t) => {
                let (y, dy) = t.eval(s.ln());
                y.exp() * dy / s
            }
            Repr::Custom { df, .. } => df(s),
        }
    }

    /// Checks `φ(s) > 0` and finite on a log-spaced sample of [`PROBE_RANGE`].
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = PROBE_RANGE;
        let n = 161;
        for i in 0..n {
            let s = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
            let v = self.value(s);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "weight must be positive and finite; phi({s:e}) = {v:e}"
                )));
            }
        }
        Ok(())
    }
}

impl WeightFunction for Weight {
    fn value(&self, s: f64) -> f64 {
        match &self.repr {
            Repr::PowerLaw(p) => s.powf(1.0 - p),
            Repr::Table(t) => t.eval(s.ln()).0.exp(),
            Repr::Custom { f, .. } => f(s),
        }
    }

    fn reciprocal(&self, s: f64) -> f64 {
        match &self.repr {
            Repr::PowerLaw(p) => s.powf(p - 1.0),
            _ => 1.0 / self.value(s),
        }
    }
}

/// Monotone piecewise-cubic Hermite interpolant in log-log coordinates.
#[derive(Debug)]
struct LogLogPchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl LogLogPchip {
    fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Parse("weight table needs at least two rows".into()));
        }
        for (i, &(s, v)) in points.iter().enumerate() {
            if !(s > 0.0 && v > 0.0 && s.is_finite() && v.is_finite()) {
                return Err(Error::Parse(format!(
                    "weight table row {i}: s and phi must be positive and finite"
                )));
            }
            if i > 0 && s <= points[i - 1].0 {
                return Err(Error::Parse(format!(
                    "weight table row {i}: s must be strictly increasing"
                )));
            }
        }
        let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
        let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
        let n = x.len();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut d = vec![0.0; n];
        d[0] = delta[0];
        d[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                // weighted harmonic mean (Fritsch–Butland)
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        Ok(LogLogPchip { x, y, d })
    }

    /// Value and slope at log-abscissa `t`.
    fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.x.len();
        if t <= self.x[0] {
            return (self.y[0] + self.d[0] * (t - self.x[0]), self.d[0]);
        }
        if t >= self.x[n - 1] {
            return (self.y[n - 1] + self.d[n - 1] * (t - self.x[n - 1]), self.d[n - 1]);
        }
        let i = match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i] * h, self.d[i + 1] * h);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s).powi(2);
        let h10 = s * (1.0 - s).powi(2);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let val = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
        let dh00 = 6.0 * s * s - 6.0 * s;
        let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
        let dh01 = -dh00;
        let dh11 = 3.0 * s * s - 2.0 * s;
        let slope = (dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1) / h;
        (val, slope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_exact() {
        let w = Weight::power_law(4.0);
        assert_eq!(w.value(2.0), 2f64.powf(-3.0));
        assert_eq!(w.reciprocal(2.0), 8.0);
        assert!((w.derivative(2.0) + 3.0 * 2f64.powi(-4)).abs() < 1e-15);
        w.validate().unwrap();
    }

    #[test]
    fn table_reproduces_power_law() {
        let pts: Vec<(f64, f64)> = (0..9).map(|i| {
            let s = 0.25 * 2f64.powi(i);
            (s, s.powf(-1.0))
        }).collect();
        let w = Weight::from_table(&pts).unwrap();
        for s in [0.01, 0.3, 1.7, 50.0, 1e4] {
            assert!((w.value(s) * s - 1.0).abs() < 1e-12, "{s}");
            assert!((w.derivative(s) * s * s + 1.0).abs() < 1e-10);
        }
        w.validate().unwrap();
    }

    #[test]
    fn table_rejects_bad_rows() {
        assert!(Weight::from_table(&[(1.0, 1.0)]).is_err());
        assert!(Weight::from_table(&[(1.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(Weight::from_table(&[(1.0, -1.0), (2.0, 2.0)]).is_err());
    }

    #[test]
    fn custom_validation_catches_zero() {
        let w = Weight::custom("zero-at-one", |s| (s - 1.0).abs(), |s| (s - 1.0).signum());
        // the probe grid passes through s = 1 exactly
        assert!(w.validate().is_err());
    }
}
