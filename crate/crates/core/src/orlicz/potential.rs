use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, SupportField};
use crate::orlicz::weight::{Weight, WeightFunction};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};

/// Which antiderivative of `1/φ` plays the role of the potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PotentialCase {
    /// `ϕ(s) = ∫_0^s 1/φ`, unbounded above.
    #[serde(rename = "3a")]
    Origin,
    /// `ϕ(s) = ∫_1^s 1/φ`, unbounded above.
    #[serde(rename = "3b")]
    Unit,
    /// `ϕ(s) = ∫_s^∞ 1/φ` with a growth exponent at zero.
    #[serde(rename = "3c")]
    Infinity,
    /// `ϕ(s) = ∫_s^∞ 1/φ`, unbounded at zero.
    #[serde(rename = "3d")]
    InfinitySingular,
}

impl PotentialCase {
    pub const ALL: [PotentialCase; 4] = [
        PotentialCase::Origin,
        PotentialCase::Unit,
        PotentialCase::Infinity,
        PotentialCase::InfinitySingular,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PotentialCase::Origin => "3a",
            PotentialCase::Unit => "3b",
            PotentialCase::Infinity => "3c",
            PotentialCase::InfinitySingular => "3d",
        }
    }

    /// Lower limit of the defining integral.
    pub fn basepoint(self) -> f64 {
        match self {
            PotentialCase::Origin => 0.0,
            PotentialCase::Unit => 1.0,
            _ => f64::INFINITY,
        }
    }

    /// `+1` when `ϕ' = 1/φ`, `−1` when `ϕ' = −1/φ`.
    pub fn orientation(self) -> f64 {
        match self {
            PotentialCase::Origin | PotentialCase::Unit => 1.0,
            _ => -1.0,
        }
    }

    /// Whether the exponent `p` of `φ(s) = s^{1−p}` belongs to this case in dimension `n`.
    pub fn admits_power(self, p: f64, n: usize) -> bool {
        match self {
            PotentialCase::Origin => p > 0.0,
            PotentialCase::Unit => p == 0.0,
            PotentialCase::Infinity => p > -(n as f64) - 1.0 && p < 0.0,
            PotentialCase::InfinitySingular => p > -1.0 && p < 0.0,
        }
    }

    fn requirement(self, n: usize) -> String {
        match self {
            PotentialCase::Origin => "p > 0".into(),
            PotentialCase::Unit => "p = 0".into(),
            PotentialCase::Infinity => format!("p in ({}, 0)", -(n as f64) - 1.0),
            PotentialCase::InfinitySingular => "p in (-1, 0)".into(),
        }
    }
}

impl fmt::Display for PotentialCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PotentialCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "");
        match t.as_str() {
            "3a" | "a" => Ok(PotentialCase::Origin),
            "3b" | "b" => Ok(PotentialCase::Unit),
            "3c" | "c" => Ok(PotentialCase::Infinity),
            "3d" | "d" => Ok(PotentialCase::InfinitySingular),
            _ => Err(Error::Parse(format!("unknown potential case {s:?}; expected 3a, 3b, 3c or 3d"))),
        }
    }
}

/// Case-specific constants. `c1` bounds the directional integral from below
/// (case 3b), `c2` from above (case 3d); `q` is the growth exponent at zero
/// (case 3c), stored for reporting only.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseParams {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub q: Option<f64>,
}

/// Default finite cut for integrals to infinity.
pub const DEFAULT_TAIL_CUT: f64 = 1e6;

const PROBE_LO: f64 = 1e-8;
const PROBE_HI: f64 = 1e8;

#[derive(Clone, Debug)]
pub struct Potential {
    case: PotentialCase,
    weight: Weight,
    dim: usize,
    params: CaseParams,
    tail_cut: f64,
    /// `ϕ(1)`; every quadrature-path value is `anchor ± ∫_1^s 1/φ`.
    anchor: f64,
    warnings: Vec<String>,
}

fn quad_tol() -> Tolerance {
    Tolerance { abs: 1e-15, rel: 1e-13 }
}

/// `∫_a^b g` split at powers of ten so each panel spans at most one decade.
fn integrate_by_decades(g: &impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate_by_decades(g, b, a).map(|v| -v);
    }
    if a <= 0.0 {
        // the singular end at the origin gets its own panel [0, 1e-8]
        let first = b.min(1e-8);
        let head = integrate(g, a, first, quad_tol())?;
        return Ok(head + integrate_by_decades(g, first, b)?);
    }
    let mut total = 0.0;
    let mut lo = a;
    while lo < b {
        let next = (10f64.powf(lo.log10().floor() + 1.0)).min(b);
        let next = if next <= lo { b } else { next };
        total += integrate(g, lo, next, quad_tol())?;
        lo = next;
    }
    Ok(total)
}

/// Builds the potential of `w` for the declared case, checking parameter
/// consistency for power laws and probing the case's limit behaviour.
pub fn make_potential(w: &Weight, case: PotentialCase, dim: usize, params: CaseParams) -> Result<Potential> {
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidDimension(dim));
    }
    if let Some(p) = w.power_exponent() {
        if !p.is_finite() {
            return Err(Error::CaseMismatch(format!("exponent p must be finite, got {p}")));
        }
        if !case.admits_power(p, dim) {
            return Err(Error::CaseMismatch(format!(
                "case {case} requires {} for phi(s) = s^(1-p), got p = {p}",
                case.requirement(dim)
            )));
        }
    } else {
        w.validate()?;
    }
    let mut warnings = Vec::new();
    if let Some(q) = params.q {
        if case != PotentialCase::Infinity {
            warnings.push(format!("q is only used by case 3c; ignored for case {case}"));
        } else if !(q > -(dim as f64) - 1.0 && q < 0.0) {
            return Err(Error::CaseMismatch(format!(
                "q must lie in ({}, 0), got {q}",
                -(dim as f64) - 1.0
            )));
        }
    }
    for (name, v, owner) in [("C1", params.c1, PotentialCase::Unit), ("C2", params.c2, PotentialCase::InfinitySingular)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::CaseMismatch(format!("{name} must be positive, got {v}")));
            }
            if case != owner {
                warnings.push(format!("{name} is only used by case {owner}; ignored for case {case}"));
            }
        }
    }
    let mut pot = Potential {
        case,
        weight: w.clone(),
        dim,
        params,
        tail_cut: DEFAULT_TAIL_CUT,
        anchor: 0.0,
        warnings,
    };
    pot.anchor = pot.compute_anchor()?;
    pot.probe_limits()?;
    Ok(pot)
}

impl Potential {
    pub fn case(&self) -> PotentialCase {
        self.case
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> CaseParams {
        self.params
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn basepoint(&self) -> f64 {
        self.case.basepoint()
    }

    pub fn orientation(&self) -> f64 {
        self.case.orientation()
    }

    pub fn tail_cut(&self) -> f64 {
        self.tail_cut
    }

    /// Rebuilds with a different finite cut for integrals to infinity.
    pub fn with_tail_cut(mut self, cut: f64) -> Result<Self> {
        if !(cut > 1.0 && cut.is_finite()) {
            return Err(Error::InvalidSpec(format!("tail cut must exceed 1, got {cut}")));
        }
        self.tail_cut = cut;
        self.anchor = self.compute_anchor()?;
        Ok(self)
    }

    fn compute_anchor(&self) -> Result<f64> {
        let g = |t: f64| self.weight.reciprocal(t);
        match self.case {
            PotentialCase::Origin => integrate_by_decades(&g, 0.0, 1.0),
            PotentialCase::Unit => Ok(0.0),
            _ => {
                let body = integrate_by_decades(&g, 1.0, 0.5 * self.tail_cut)?;
                let tail = integrate_to_infinity(g, 0.5 * self.tail_cut, self.tail_cut, quad_tol())?;
                Ok(body + tail)
            }
        }
    }

    /// `ϕ(s)`: closed form for power laws, quadrature otherwise.
    pub fn value(&self, s: f64) -> f64 {
        match self.weight.power_exponent() {
            Some(p) => match self.case {
                PotentialCase::Origin => s.powf(p) / p,
                PotentialCase::Unit => s.ln(),
                _ => -s.powf(p) / p,
            },
            None => self.value_by_quadrature(s).unwrap_or(f64::NAN),
        }
    }

    /// `ϕ(s)` from the defining integral, regardless of the weight kind.
    pub fn value_by_quadrature(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(match self.case {
                PotentialCase::Origin => 0.0,
                PotentialCase::Unit => f64::NEG_INFINITY,
                _ => self.limit_at_zero(),
            });
        }
        if s.is_infinite() && s > 0.0 {
            return Ok(match self.case {
                PotentialCase::Infinity | PotentialCase::InfinitySingular => 0.0,
                _ => f64::INFINITY,
            });
        }
        if !(s > 0.0) {
            return Err(Error::NonPositive { what: "potential argument", node: 0, value: s });
        }
        let g = |t: f64| self.weight.reciprocal(t);
        let from_one = integrate_by_decades(&g, 1.0, s)?;
        Ok(self.anchor + self.orientation() * from_one)
    }

    fn limit_at_zero(&self) -> f64 {
        let g = |t: f64| self.weight.reciprocal(t);
        match integrate_by_decades(&g, 0.0, 1.0) {
            Ok(v) => self.anchor + v,
            Err(_) => f64::INFINITY,
        }
    }

    /// `orientation · ϕ(s)`, the antiderivative of `1/φ` whose sign matches
    /// the energy in the Lyapunov functional.
    pub fn oriented(&self, s: f64) -> f64 {
        self.orientation() * self.value(s)
    }

    fn probe_limits(&mut self) -> Result<()> {
        let at = |s: f64| -> Result<f64> {
            match self.weight.power_exponent() {
                Some(_) => Ok(self.value(s)),
                None => self.value_by_quadrature(s),
            }
        };
        match self.case {
            PotentialCase::Origin | PotentialCase::Unit => {
                let (a, b, c) = (at(1.0)?, at(1e4)?, at(PROBE_HI)?);
                if !(c - b > 0.01 * (b - a).abs()) {
                    self.warnings.push(format!(
                        "phi(s) may stay bounded as s -> infinity: phi(1e4) = {b:e}, phi(1e8) = {c:e}"
                    ));
                }
            }
            PotentialCase::InfinitySingular => {
                let (a, b, c) = (at(1.0)?, at(1e-4)?, at(PROBE_LO)?);
                if !(c - b > 0.01 * (b - a).abs()) {
                    self.warnings.push(format!(
                        "phi(s) may stay bounded as s -> 0: phi(1e-4) = {b:e}, phi(1e-8) = {c:e}"
                    ));
                }
            }
            PotentialCase::Infinity => {
                if let Some(q) = self.params.q {
                    let r1 = at(1e-4)? / 1e-4f64.powf(q);
                    let r2 = at(PROBE_LO)? / PROBE_LO.powf(q);
                    if r2 > 100.0 * r1.abs().max(1.0) {
                        self.warnings.push(format!(
                            "phi(s)/s^q appears unbounded as s -> 0 (q = {q}): {r1:e} at 1e-4, {r2:e} at 1e-8"
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Directional integral `∫ ϕ(|⟨u,θ⟩|)/f dθ` for every grid direction `u`,
    /// compared with the case-3b lower bound `−C1` or the case-3d upper bound
    /// `C2`. Nodes within half a cell of the great subsphere `u⊥` use the
    /// cell average of `ϕ`, which tames the integrable singularity there.
    pub fn integral_condition(&self, f: &SupportField) -> Result<Option<IntegralCondition>> {
        let (bound, lower) = match (self.case, self.params.c1, self.params.c2) {
            (PotentialCase::Unit, Some(c1), _) => (-c1, true),
            (PotentialCase::InfinitySingular, _, Some(c2)) => (c2, false),
            _ => return Ok(None),
        };
        f.require_positive("f")?;
        let grid = f.grid();
        let half = 0.5 * grid.spacing().0;
        let g = |t: f64| self.value(t);
        let cell_avg = integrate(g, 0.0, half, quad_tol())? / half;
        let nodes = grid.nodes();
        let w = grid.weights();
        let fv = f.values();
        let mut extreme = if lower { f64::INFINITY } else { f64::NEG_INFINITY };
        let mut arg = 0;
        for (iu, u) in nodes.iter().enumerate() {
            let total: f64 = nodes
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let t = dot(u, x).abs();
                    let phi = if t < half { cell_avg } else { self.value(t) };
                    w[i] * phi / fv[i]
                })
                .sum();
            let better = if lower { total < extreme } else { total > extreme };
            if better {
                extreme = total;
                arg = iu;
            }
        }
        let satisfied = if lower { extreme >= bound } else { extreme <= bound };
        Ok(Some(IntegralCondition {
            extreme,
            bound,
            direction: nodes[arg],
            satisfied,
        }))
    }
}

/// Outcome of the directional integral hypothesis check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IntegralCondition {
    /// Minimum (case 3b) or maximum (case 3d) over directions.
    pub extreme: f64,
    pub bound: f64,
    pub direction: [f64; 3],
    pub satisfied: bool,
}

/// `E[h] = ∫ ϕ(h)/f dθ`.
pub fn energy(h: &SupportField, f: &SupportField, pot: &Potential) -> Result<f64> {
    energy_with(h, f, |s| pot.value(s))
}

fn energy_with(h: &SupportField, f: &SupportField, phi: impl Fn(f64) -> f64) -> Result<f64> {
    h.check_same_grid(f)?;
    h.require_positive("h")?;
    f.require_positive("f")?;
    let w = h.grid().weights();
    Ok(h.values()
        .iter()
        .zip(f.values())
        .zip(w)
        .map(|((&hv, &fv), &wi)| wi * phi(hv) / fv)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Resolution};
    use std::f64::consts::PI;

    fn pot(p: f64, case: PotentialCase) -> Potential {
        make_potential(&Weight::power_law(p), case, 1, CaseParams::default()).unwrap()
    }

    #[test]
    fn closed_forms_and_basepoints() {
        assert_eq!(pot(2.0, PotentialCase::Origin).value(2.0), 2.0);
        assert_eq!(pot(0.0, PotentialCase::Unit).value(1.0), 0.0);
        assert!((pot(-1.0, PotentialCase::Infinity).value(2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quadrature_path_matches_closed_form() {
        for (p, case) in [
            (2.0, PotentialCase::Origin),
            (0.5, PotentialCase::Origin),
            (0.0, PotentialCase::Unit),
            (-1.0, PotentialCase::Infinity),
            (-0.5, PotentialCase::InfinitySingular),
        ] {
            let pt = pot(p, case);
            for s in [0.01, 0.3, 1.0, 2.0, 17.0] {
                let exact = pt.value(s);
                let quad = pt.value_by_quadrature(s).unwrap();
                assert!((quad - exact).abs() <= 1e-10 * exact.abs().max(1e-3), "p={p} s={s}: {quad} vs {exact}");
            }
        }
    }

    #[test]
    fn case_mismatch_rejected() {
        let w = Weight::power_law(-0.5);
        assert!(make_potential(&w, PotentialCase::Origin, 1, CaseParams::default()).is_err());
        assert!(make_potential(&Weight::power_law(1.0), PotentialCase::Unit, 1, CaseParams::default()).is_err());
        // p = -2.5 is outside (-n-1, 0) for n = 1 but inside for n = 2
        let w = Weight::power_law(-2.5);
        assert!(make_potential(&w, PotentialCase::Infinity, 1, CaseParams::default()).is_err());
        assert!(make_potential(&w, PotentialCase::Infinity, 2, CaseParams::default()).is_ok());
    }

    #[test]
    fn custom_weight_quadrature() {
        // phi(s) = 1/s^2 written as an opaque closure: potential s^3/3
        let w = Weight::custom("inv-square", |s| s.powi(-2), |s| -2.0 * s.powi(-3));
        let pt = make_potential(&w, PotentialCase::Origin, 1, CaseParams::default()).unwrap();
        assert!((pt.value(2.0) - 8.0 / 3.0).abs() < 1e-11);
        assert!(pt.warnings().is_empty());
    }

    #[test]
    fn bounded_potential_warns() {
        // 1/phi = 1/(1+s)^2 integrates to a bounded potential
        let w = Weight::custom("bounded", |s| (1.0 + s).powi(2), |s| 2.0 * (1.0 + s));
        let pt = make_potential(&w, PotentialCase::Origin, 1, CaseParams::default()).unwrap();
        assert!(!pt.warnings().is_empty());
    }

    #[test]
    fn energy_examples() {
        let g1 = build_grid(1, Resolution::Circle { nodes: 64 }).unwrap();
        let g2 = build_grid(2, Resolution::LatLon { nlat: 16, nlon: 32 }).unwrap();
        let one = SupportField::constant(&g1, 1.0);
        let two = SupportField::constant(&g1, 2.0);
        let linear = make_potential(&Weight::power_law(1.0), PotentialCase::Origin, 1, CaseParams::default()).unwrap();
        assert!((energy(&two, &one, &linear).unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!(energy(&one, &one, &pot(0.0, PotentialCase::Unit)).unwrap().abs() < 1e-15);
        let two2 = SupportField::constant(&g2, 2.0);
        let quad = make_potential(&Weight::power_law(2.0), PotentialCase::Origin, 2, CaseParams::default()).unwrap();
        assert!((energy(&two2, &two2, &quad).unwrap() - 4.0 * PI).abs() < 1e-12);
        let neg = SupportField::constant(&g1, -1.0);
        assert!(energy(&neg, &one, &linear).is_err());
    }

    #[test]
    fn log_directional_integral_is_finite() {
        let g = build_grid(1, Resolution::Circle { nodes: 256 }).unwrap();
        let f = SupportField::constant(&g, 1.0);
        let params = CaseParams { c1: Some(10.0), ..CaseParams::default() };
        let pt = make_potential(&Weight::power_law(0.0), PotentialCase::Unit, 1, params).unwrap();
        let rep = pt.integral_condition(&f).unwrap().unwrap();
        // ∫_0^{2π} log|cos θ| dθ = −2π log 2
        assert!((rep.extreme + 2.0 * PI * 2f64.ln()).abs() < 2e-2, "{}", rep.extreme);
        assert!(rep.satisfied);
    }
}
