use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::checks::growth_hypothesis_warnings;
use crate::geometry::{min_radii_eigenvalue, radii_matrix, SupportField};
use crate::orlicz::{
    energy, make_potential, CaseParams, Potential, PotentialCase, RegularizedWeight, Weight, WeightFunction,
};

/// Relative tolerance used when deciding whether data are even.
pub const EVEN_DETECT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    /// `∂_t h = f h φ(h) σₙ − ζ h`, with `ζ` keeping the energy fixed.
    NormalizedOrlicz,
    /// `∂_t h = f h φ(h) σₙ − h`.
    UnnormalizedOrlicz,
    /// The normalized flow with a regularized weight `φ_ε`.
    RegularizedOrlicz,
    /// `∂_t h = f h^{2−p} F^k − h`, `F = (σ_k/C(n,k))^{1/k}`.
    ChristoffelMinkowski,
}

impl fmt::Display for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowKind::NormalizedOrlicz => "normalized-orlicz",
            FlowKind::UnnormalizedOrlicz => "unnormalized-orlicz",
            FlowKind::RegularizedOrlicz => "regularized-orlicz",
            FlowKind::ChristoffelMinkowski => "christoffel-minkowski",
        })
    }
}

/// Kind-specific data of a flow.
#[derive(Clone, Debug)]
pub enum FlowLaw {
    Normalized { potential: Potential },
    /// The potential, when present, supplies the Lyapunov energy.
    Unnormalized { weight: Weight, potential: Option<Potential> },
    Regularized { weight: RegularizedWeight },
    Christoffel { p: f64, k: usize },
}

impl FlowLaw {
    pub fn kind(&self) -> FlowKind {
        match self {
            FlowLaw::Normalized { .. } => FlowKind::NormalizedOrlicz,
            FlowLaw::Unnormalized { .. } => FlowKind::UnnormalizedOrlicz,
            FlowLaw::Regularized { .. } => FlowKind::RegularizedOrlicz,
            FlowLaw::Christoffel { .. } => FlowKind::ChristoffelMinkowski,
        }
    }
}

/// A validated flow problem: law, anisotropy `f`, and initial body `h₀`.
#[derive(Clone, Debug)]
pub struct FlowSpec {
    law: FlowLaw,
    f: SupportField,
    initial: SupportField,
    even: bool,
    warnings: Vec<String>,
}

/// Potential matching a power-law weight, used when none is declared.
pub fn default_potential(w: &Weight, dim: usize) -> Option<Potential> {
    let p = w.power_exponent()?;
    let case = PotentialCase::ALL.into_iter().find(|c| c.admits_power(p, dim))?;
    make_potential(w, case, dim, CaseParams::default()).ok()
}

impl FlowSpec {
    pub fn new(law: FlowLaw, f: SupportField, initial: SupportField) -> Result<Self> {
        f.check_same_grid(&initial)?;
        f.require_positive("f")?;
        initial.require_positive("h0")?;
        let grid = f.grid();
        let n = grid.dim();
        let mineig = min_radii_eigenvalue(&initial);
        if !(mineig > 0.0) {
            return Err(Error::NotConvex {
                min_eigenvalue: mineig,
                tolerance: 0.0,
            });
        }
        let f_even = grid.is_antipodally_closed() && f.is_even(EVEN_DETECT_TOL);
        let h_even = grid.is_antipodally_closed() && initial.is_even(EVEN_DETECT_TOL);
        let mut warnings = Vec::new();
        match &law {
            FlowLaw::Normalized { potential } => {
                if potential.dim() != n {
                    return Err(Error::InvalidSpec(format!(
                        "potential built for dimension {}, grid has dimension {n}",
                        potential.dim()
                    )));
                }
                warnings.extend(potential.warnings().iter().cloned());
                if !f_even {
                    warnings.push("f is not even; the normalized flow's existence theory assumes it is".into());
                } else if !h_even {
                    return Err(Error::InvalidSpec(format!(
                        "case {} with even f needs an origin-symmetric initial body",
                        potential.case()
                    )));
                }
                if let Some(rep) = potential.integral_condition(&f)? {
                    if !rep.satisfied {
                        warnings.push(format!(
                            "directional integral condition fails: extreme {:e} against bound {:e}",
                            rep.extreme, rep.bound
                        ));
                    }
                }
                if potential.case() == PotentialCase::InfinitySingular {
                    match potential.params().c2 {
                        Some(c2) => {
                            let e0 = energy(&initial, &f, potential)?;
                            if !(e0 > c2) {
                                return Err(Error::InvalidSpec(format!(
                                    "case 3d needs initial energy above C2 = {c2}, got {e0}"
                                )));
                            }
                        }
                        None => warnings.push("case 3d validity unverified: no C2 supplied".into()),
                    }
                }
            }
            FlowLaw::Unnormalized { weight, potential } => {
                if let Some(pot) = potential {
                    warnings.extend(pot.warnings().iter().cloned());
                }
                warnings.extend(growth_hypothesis_warnings(weight, &f));
            }
            FlowLaw::Regularized { weight } => {
                if weight.dim() != n {
                    return Err(Error::InvalidSpec(format!(
                        "regularized weight built for dimension {}, grid has dimension {n}",
                        weight.dim()
                    )));
                }
            }
            FlowLaw::Christoffel { p, k } => {
                let (p, k) = (*p, *k);
                if k == 0 || k > n {
                    return Err(Error::InvalidOrder { k, n });
                }
                if !(p > k as f64 + 1.0) {
                    return Err(Error::InvalidSpec(format!("Christoffel flow needs p > k + 1 = {}, got p = {p}", k + 1)));
                }
                let fk = radii_matrix(&initial).curvature_f(k)?;
                for (i, ((&fv, &hv), &c)) in f.values().iter().zip(initial.values()).zip(fk.values()).enumerate() {
                    let q = fv * hv.powf(1.0 - p) * c.powi(k as i32);
                    if !(q > 1.0) {
                        return Err(Error::InvalidSpec(format!(
                            "initial body must satisfy f h^(1-p) F^k > 1; node {i} has {q:e}"
                        )));
                    }
                }
                let root = f.map(|v| v.powf(1.0 / (p + k as f64 - 1.0)));
                let m = min_radii_eigenvalue(&root);
                if !(m > 0.0) {
                    warnings.push(format!(
                        "f^(1/(p+k-1)) is not the support function of a strictly convex body (min radius {m:e}); convergence is not guaranteed"
                    ));
                }
            }
        }
        Ok(FlowSpec {
            law,
            even: f_even && h_even,
            f,
            initial,
            warnings,
        })
    }

    pub fn normalized(f: SupportField, potential: Potential, initial: SupportField) -> Result<Self> {
        Self::new(FlowLaw::Normalized { potential }, f, initial)
    }

    pub fn unnormalized(f: SupportField, weight: Weight, potential: Option<Potential>, initial: SupportField) -> Result<Self> {
        let dim = f.grid().dim();
        let potential = potential.or_else(|| default_potential(&weight, dim));
        Self::new(FlowLaw::Unnormalized { weight, potential }, f, initial)
    }

    pub fn regularized(f: SupportField, weight: RegularizedWeight, initial: SupportField) -> Result<Self> {
        Self::new(FlowLaw::Regularized { weight }, f, initial)
    }

    pub fn christoffel(f: SupportField, p: f64, k: usize, initial: SupportField) -> Result<Self> {
        Self::new(FlowLaw::Christoffel { p, k }, f, initial)
    }

    pub fn kind(&self) -> FlowKind {
        self.law.kind()
    }

    pub fn law(&self) -> &FlowLaw {
        &self.law
    }

    pub fn f(&self) -> &SupportField {
        &self.f
    }

    pub fn initial(&self) -> &SupportField {
        &self.initial
    }

    /// Whether `f` and `h₀` are both even, so evenness must persist.
    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// The weight entering the speed, for the Orlicz kinds.
    pub fn weight_fn(&self) -> Option<&dyn WeightFunction> {
        match &self.law {
            FlowLaw::Normalized { potential } => Some(potential.weight()),
            FlowLaw::Unnormalized { weight, .. } => Some(weight),
            FlowLaw::Regularized { weight } => Some(weight),
            FlowLaw::Christoffel { .. } => None,
        }
    }

    /// `ϕ` as it enters the tracked energy: oriented for the unnormalized
    /// flow so that `V − E` is the Lyapunov functional.
    pub(crate) fn energy_density(&self, s: f64) -> f64 {
        match &self.law {
            FlowLaw::Normalized { potential } => potential.value(s),
            FlowLaw::Unnormalized { potential: Some(p), .. } => p.oriented(s),
            FlowLaw::Regularized { weight } => weight.potential(s),
            _ => f64::NAN,
        }
    }

    pub(crate) fn has_energy(&self) -> bool {
        !matches!(
            self.law,
            FlowLaw::Christoffel { .. } | FlowLaw::Unnormalized { potential: None, .. }
        )
    }

    /// Replaces the initial body, revalidating.
    pub fn with_initial(&self, initial: SupportField) -> Result<Self> {
        Self::new(self.law.clone(), self.f.clone(), initial)
    }
}
