//! Run configuration: TOML parsing, key checking, defaults and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{GeneralOptions, SolverOptions};
use crate::orlicz::{PotentialCase, EPSILON_MAX};

pub const DEFAULT_CIRCLE_NODES: usize = 512;
pub const DEFAULT_NLAT: usize = 64;
pub const DEFAULT_NLON: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Flow,
    SolveOrliczGeneral,
    SolveChristoffel,
    OrliczNorm,
    GeometryCheck,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Flow,
        Mode::SolveOrliczGeneral,
        Mode::SolveChristoffel,
        Mode::OrliczNorm,
        Mode::GeometryCheck,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Mode::Flow => "flow",
            Mode::SolveOrliczGeneral => "solve-orlicz-general",
            Mode::SolveChristoffel => "solve-christoffel",
            Mode::OrliczNorm => "orlicz-norm",
            Mode::GeometryCheck => "geometry-check",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::Parse(format!("unknown mode `{s}`")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nlat: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nlon: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    #[default]
    Sphere,
    Ellipsoid,
    Table,
    PerturbedSphere,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BodyConfig {
    pub shape: Shape,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// Highest mode (S¹) or polynomial degree (S²) of a perturbation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub even: Option<bool>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureSource {
    #[default]
    Uniform,
    Atoms,
    Density,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    /// Constant anisotropy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_file: Option<PathBuf>,
    /// Target body whose stationarity defines `f`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manufactured: Option<BodyConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub even: Option<bool>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightSource {
    #[default]
    PowerLaw,
    Table,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightConfig {
    pub kind: WeightSource,
    /// `φ(s) = s^{1−p}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotentialConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<PotentialCase>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_cut: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowChoice {
    Normalized,
    Unnormalized,
    Regularized,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<FlowChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChristoffelConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

/// Solver knobs: the time stepper plus the general-measure schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    #[serde(flatten)]
    pub stepper: SolverOptions,
    pub epsilons: Vec<f64>,
    pub bandwidths: Vec<f64>,
    pub density_floor: f64,
    pub width_tol: f64,
    pub cold_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let g = GeneralOptions::default();
        SolverConfig {
            stepper: g.solver,
            epsilons: g.epsilons,
            bandwidths: g.bandwidths,
            density_floor: g.density_floor,
            width_tol: g.width_tol,
            cold_start: g.cold_start,
        }
    }
}

impl SolverConfig {
    pub fn general(&self) -> GeneralOptions {
        GeneralOptions {
            epsilons: self.epsilons.clone(),
            bandwidths: self.bandwidths.clone(),
            density_floor: self.density_floor,
            width_tol: self.width_tol,
            cold_start: self.cold_start,
            solver: self.stepper.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormInput {
    /// `⟨u, direction⟩₊`.
    #[default]
    Segment,
    /// The support function from `[body]`.
    Body,
    /// Nodal values from `file`.
    File,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormConfig {
    pub g: NormInput,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Use `ϕ(t) = t^q` instead of the potential of `[weight]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_power: Option<f64>,
    /// Also report `min_v ‖⟨·,v⟩₊‖`.
    pub minimize: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub mesh: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            mesh: false,
        }
    }
}

/// A validated configuration with every default filled in. Serializing it
/// and parsing the result reproduces the same value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub grid: GridConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub body: Option<BodyConfig>,
    pub data: DataConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub christoffel: Option<ChristoffelConfig>,
    pub solver: SolverConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormConfig>,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn dim(&self) -> usize {
        self.grid.dim.unwrap_or(1)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("resolved configs serialize")
    }
}

const ROOT_KEYS: &[&str] = &[
    "mode",
    "seed",
    "grid",
    "body",
    "data",
    "weight",
    "potential",
    "flow",
    "christoffel",
    "solver",
    "norm",
    "output",
];
const GRID_KEYS: &[&str] = &["dim", "nodes", "nlat", "nlon"];
const BODY_KEYS: &[&str] = &["shape", "radius", "center", "axes", "file", "amplitude", "modes", "even"];
const DATA_KEYS: &[&str] = &["f", "f_file", "manufactured", "measure", "atoms_file", "density_file", "even"];
const WEIGHT_KEYS: &[&str] = &["kind", "p", "file"];
const POTENTIAL_KEYS: &[&str] = &["case", "c1", "c2", "q", "tail_cut"];
const FLOW_KEYS: &[&str] = &["kind", "epsilon"];
const CHRISTOFFEL_KEYS: &[&str] = &["p", "k"];
const SOLVER_KEYS: &[&str] = &[
    "dt_max",
    "residual_tol",
    "t_max",
    "max_steps",
    "stall_window",
    "stall_rel",
    "c_stab",
    "max_rel_change",
    "max_retries",
    "trace_stride",
    "polar_ref_sin",
    "enforce_invariants",
    "monotone_tol",
    "even_tol",
    "epsilons",
    "bandwidths",
    "density_floor",
    "width_tol",
    "cold_start",
];
const NORM_KEYS: &[&str] = &["g", "direction", "file", "phi_power", "minimize"];
const OUTPUT_KEYS: &[&str] = &["dir", "mesh"];

fn section_keys(section: &str) -> &'static [&'static str] {
    match section {
        "grid" => GRID_KEYS,
        "body" | "data.manufactured" => BODY_KEYS,
        "data" => DATA_KEYS,
        "weight" => WEIGHT_KEYS,
        "potential" => POTENTIAL_KEYS,
        "flow" => FLOW_KEYS,
        "christoffel" => CHRISTOFFEL_KEYS,
        "solver" => SOLVER_KEYS,
        "norm" => NORM_KEYS,
        "output" => OUTPUT_KEYS,
        _ => ROOT_KEYS,
    }
}

/// Common alternative spellings mapped to the accepted key.
const SYNONYMS: &[(&str, &str)] = &[
    ("phi_exponent", "p"),
    ("exponent", "p"),
    ("power", "p"),
    ("lp", "p"),
    ("order", "k"),
    ("dt", "dt_max"),
    ("timestep", "dt_max"),
    ("tol", "residual_tol"),
    ("tolerance", "residual_tol"),
    ("tmax", "t_max"),
    ("time", "t_max"),
    ("stride", "trace_stride"),
    ("epsilon", "epsilons"),
    ("eps", "epsilon"),
    ("schedule", "epsilons"),
    ("bandwidth", "bandwidths"),
    ("kappa", "bandwidths"),
    ("floor", "density_floor"),
    ("n", "dim"),
    ("dimension", "dim"),
    ("resolution", "nodes"),
    ("points", "nodes"),
    ("radii", "axes"),
    ("semi_axes", "axes"),
    ("out", "dir"),
    ("output_dir", "dir"),
    ("directory", "dir"),
    ("anisotropy", "f"),
    ("atoms", "atoms_file"),
    ("density", "density_file"),
    ("symmetric", "even"),
    ("type", "kind"),
];

fn suggest(section: &str, key: &str) -> Option<String> {
    let allowed = section_keys(section);
    let norm = key.to_ascii_lowercase().replace('-', "_");
    if let Some(&(_, target)) = SYNONYMS.iter().find(|(alias, _)| *alias == norm) {
        if allowed.contains(&target) {
            return Some(target.to_string());
        }
        let home = ["grid", "body", "data", "weight", "potential", "flow", "christoffel", "solver", "norm", "output"]
            .into_iter()
            .find(|s| section_keys(s).contains(&target));
        if let Some(home) = home {
            return Some(format!("{home}.{target}"));
        }
    }
    allowed
        .iter()
        .map(|cand| (strsim::jaro_winkler(&norm, cand), *cand))
        .filter(|(score, _)| *score >= 0.7)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c.to_string())
}

fn path_of(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

fn check_keys(table: &toml::Table, section: &str, errs: &mut Vec<String>) {
    let allowed = section_keys(section);
    for (key, value) in table {
        if !allowed.contains(&key.as_str()) {
            let mut msg = format!("unknown key `{}`", path_of(section, key));
            if let Some(s) = suggest(section, key) {
                msg.push_str(&format!("; did you mean `{s}`?"));
            }
            errs.push(msg);
            continue;
        }
        let child = path_of(section, key);
        let nested = section.is_empty() && key != "mode" && key != "seed" || child == "data.manufactured";
        match (nested, value) {
            (true, toml::Value::Table(t)) => check_keys(t, &child, errs),
            (true, _) => errs.push(format!("`{child}` must be a table")),
            _ => {}
        }
    }
}

fn non_finite(v: &toml::Value) -> bool {
    match v {
        toml::Value::Float(x) => !x.is_finite(),
        toml::Value::Array(a) => a.iter().any(non_finite),
        toml::Value::Table(t) => t.values().any(non_finite),
        _ => false,
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

fn section<T: DeserializeOwned + Default>(root: &toml::Table, name: &str, errs: &mut Vec<String>) -> Option<T> {
    let value = root.get(name)?;
    match value.clone().try_into::<T>() {
        Ok(v) => Some(v),
        Err(e) => {
            errs.push(format!("[{name}]: {}", e.message().trim()));
            Some(T::default())
        }
    }
}

fn resolve_path(base: &Path, p: &Path, what: &str, errs: &mut Vec<String>) -> PathBuf {
    let full = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    if !full.is_file() {
        errs.push(format!("{what}: file `{}` not found", full.display()));
    }
    full
}

fn positive(v: Option<f64>, what: &str, errs: &mut Vec<String>) {
    if let Some(x) = v {
        if !(x > 0.0 && x.is_finite()) {
            errs.push(format!("{what} must be positive, got {x}"));
        }
    }
}

fn validate_body(b: &mut BodyConfig, prefix: &str, dim: usize, base: &Path, errs: &mut Vec<String>) {
    let set = |name: &str, present: bool, errs: &mut Vec<String>| {
        if present {
            errs.push(format!("{prefix}.{name} is not used by shape {:?}", b.shape));
        }
    };
    match b.shape {
        Shape::Sphere => {
            b.radius.get_or_insert(1.0);
            positive(b.radius, &format!("{prefix}.radius"), errs);
            let c = b.center.get_or_insert_with(|| vec![0.0; dim + 1]);
            if c.len() != dim + 1 {
                errs.push(format!("{prefix}.center needs {} components, got {}", dim + 1, c.len()));
            }
            if c.iter().any(|x| !x.is_finite()) {
                errs.push(format!("{prefix}.center must be finite"));
            }
            set("axes", b.axes.is_some(), errs);
            set("file", b.file.is_some(), errs);
            set("amplitude", b.amplitude.is_some(), errs);
        }
        Shape::Ellipsoid => match &b.axes {
            None => errs.push(format!("{prefix}.axes is required for an ellipsoid")),
            Some(a) => {
                if a.len() != dim + 1 {
                    errs.push(format!("{prefix}.axes needs {} entries, got {}", dim + 1, a.len()));
                }
                if a.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    errs.push(format!("{prefix}.axes must be positive"));
                }
            }
        },
        Shape::Table => match &b.file {
            None => errs.push(format!("{prefix}.file is required for a tabulated body")),
            Some(p) => b.file = Some(resolve_path(base, p, &format!("{prefix}.file"), errs)),
        },
        Shape::PerturbedSphere => {
            b.radius.get_or_insert(1.0);
            positive(b.radius, &format!("{prefix}.radius"), errs);
            let amp = *b.amplitude.get_or_insert(1e-3);
            if !(amp >= 0.0 && amp.is_finite()) {
                errs.push(format!("{prefix}.amplitude must be non-negative, got {amp}"));
            }
            if *b.modes.get_or_insert(4) == 0 {
                errs.push(format!("{prefix}.modes must be at least 1"));
            }
            b.even.get_or_insert(true);
        }
    }
}

/// Parses and validates a configuration. `mode` fills in a missing `mode`
/// key and must agree with it when both are present; relative paths are
/// resolved against `base`.
pub fn parse_config(text: &str, base: &Path, mode: Option<Mode>) -> Result<RunConfig> {
    let root: toml::Table = toml::from_str(text).map_err(|e| {
        let (line, col) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        Error::Parse(format!("line {line}, column {col}: {}", e.message().trim()))
    })?;
    let mut errs = Vec::new();
    check_keys(&root, "", &mut errs);
    for (key, value) in &root {
        if non_finite(value) {
            errs.push(format!("`{key}` contains nan or inf; every number must be finite"));
        }
    }

    let file_mode = match root.get("mode") {
        None => None,
        Some(toml::Value::String(s)) => match s.parse::<Mode>() {
            Ok(m) => Some(m),
            Err(_) => {
                errs.push(format!(
                    "mode `{s}` is not one of {}",
                    Mode::ALL.map(|m| m.label()).join(", ")
                ));
                None
            }
        },
        Some(_) => {
            errs.push("mode must be a string".into());
            None
        }
    };
    let mode = match (file_mode, mode) {
        (Some(a), Some(b)) if a != b => {
            errs.push(format!("config declares mode `{a}` but `{b}` was requested"));
            a
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => {
            if !errs.iter().any(|e| e.starts_with("mode")) {
                errs.push("mode is missing".into());
            }
            Mode::Flow
        }
    };
    let seed = match root.get("seed") {
        None => 0,
        Some(toml::Value::Integer(i)) if *i >= 0 => *i as u64,
        Some(v) => {
            errs.push(format!("seed must be a non-negative integer, got {v}"));
            0
        }
    };

    let mut grid: GridConfig = section(&root, "grid", &mut errs).unwrap_or_default();
    let mut body: Option<BodyConfig> = section(&root, "body", &mut errs);
    let mut data: DataConfig = section(&root, "data", &mut errs).unwrap_or_default();
    let mut weight: Option<WeightConfig> = section(&root, "weight", &mut errs);
    let mut potential: Option<PotentialConfig> = section(&root, "potential", &mut errs);
    let mut flow: Option<FlowConfig> = section(&root, "flow", &mut errs);
    let christoffel: Option<ChristoffelConfig> = section(&root, "christoffel", &mut errs);
    let solver: SolverConfig = section(&root, "solver", &mut errs).unwrap_or_default();
    let mut norm: Option<NormConfig> = section(&root, "norm", &mut errs);
    let mut output: OutputConfig = section(&root, "output", &mut errs).unwrap_or_default();

    // grid
    let dim = *grid.dim.get_or_insert(1);
    match dim {
        1 => {
            if grid.nlat.is_some() || grid.nlon.is_some() {
                errs.push("grid.nlat/grid.nlon apply to dim = 2; use grid.nodes on S^1".into());
            }
            if *grid.nodes.get_or_insert(DEFAULT_CIRCLE_NODES) < 8 {
                errs.push("grid.nodes must be at least 8".into());
            }
        }
        2 => {
            if grid.nodes.is_some() {
                errs.push("grid.nodes applies to dim = 1; use grid.nlat and grid.nlon on S^2".into());
            }
            if *grid.nlat.get_or_insert(DEFAULT_NLAT) < 4 {
                errs.push("grid.nlat must be at least 4".into());
            }
            let nlon = *grid.nlon.get_or_insert(DEFAULT_NLON);
            if nlon < 8 || !nlon.is_multiple_of(2) {
                errs.push(format!("grid.nlon must be even and at least 8, got {nlon}"));
            }
        }
        d => errs.push(format!("grid.dim must be 1 or 2, got {d}")),
    }

    // body
    let needs_body = matches!(mode, Mode::Flow | Mode::GeometryCheck)
        || (mode == Mode::OrliczNorm && norm.as_ref().is_some_and(|n| n.g == NormInput::Body));
    if needs_body && body.is_none() {
        if mode == Mode::Flow {
            body = Some(BodyConfig::default());
        } else {
            errs.push(format!("mode {mode} needs a [body] section"));
        }
    }
    if let Some(b) = body.as_mut() {
        validate_body(b, "body", dim, base, &mut errs);
    }

    // data
    let f_sources = [data.f.is_some(), data.f_file.is_some(), data.manufactured.is_some()]
        .iter()
        .filter(|&&x| x)
        .count();
    if f_sources > 1 {
        errs.push("give at most one of data.f, data.f_file, data.manufactured".into());
    }
    let uses_f = matches!(mode, Mode::Flow | Mode::SolveChristoffel);
    if uses_f {
        if f_sources == 0 {
            data.f = Some(1.0);
        }
        positive(data.f, "data.f", &mut errs);
        if let Some(p) = &data.f_file {
            data.f_file = Some(resolve_path(base, p, "data.f_file", &mut errs));
        }
        if let Some(m) = data.manufactured.as_mut() {
            validate_body(m, "data.manufactured", dim, base, &mut errs);
        }
    }
    let uses_measure = matches!(mode, Mode::SolveOrliczGeneral | Mode::OrliczNorm);
    if uses_measure {
        let inferred = match (&data.atoms_file, &data.density_file) {
            (Some(_), Some(_)) => {
                errs.push("give at most one of data.atoms_file and data.density_file".into());
                MeasureSource::Uniform
            }
            (Some(_), None) => MeasureSource::Atoms,
            (None, Some(_)) => MeasureSource::Density,
            (None, None) => MeasureSource::Uniform,
        };
        let source = *data.measure.get_or_insert(inferred);
        if source != inferred {
            errs.push(format!("data.measure = {source:?} does not match the files given"));
        }
        if let Some(p) = &data.atoms_file {
            data.atoms_file = Some(resolve_path(base, p, "data.atoms_file", &mut errs));
        }
        if let Some(p) = &data.density_file {
            data.density_file = Some(resolve_path(base, p, "data.density_file", &mut errs));
        }
        data.even.get_or_insert(false);
    }

    // weight and potential
    let flow_kind = flow.as_ref().and_then(|f| f.kind);
    let needs_weight = match mode {
        Mode::Flow | Mode::SolveOrliczGeneral => true,
        Mode::OrliczNorm => norm.as_ref().is_none_or(|n| n.phi_power.is_none()),
        _ => false,
    };
    if needs_weight {
        match weight.as_mut() {
            None => errs.push(format!("mode {mode} needs a [weight] section")),
            Some(w) => match w.kind {
                WeightSource::PowerLaw => match w.p {
                    None => errs.push("weight.p is required for a power-law weight".into()),
                    Some(p) if !p.is_finite() => errs.push(format!("weight.p must be finite, got {p}")),
                    _ => {}
                },
                WeightSource::Table => match &w.file {
                    None => errs.push("weight.file is required for a tabulated weight".into()),
                    Some(p) => w.file = Some(resolve_path(base, p, "weight.file", &mut errs)),
                },
            },
        }
    }
    let power = weight.as_ref().filter(|w| w.kind == WeightSource::PowerLaw).and_then(|w| w.p);
    let needs_potential = match mode {
        Mode::Flow => flow_kind == Some(FlowChoice::Normalized) || flow_kind == Some(FlowChoice::Unnormalized),
        Mode::SolveOrliczGeneral => true,
        Mode::OrliczNorm => needs_weight,
        _ => false,
    };
    if needs_potential {
        let pc = potential.get_or_insert_with(PotentialConfig::default);
        let forced = matches!(mode, Mode::SolveOrliczGeneral | Mode::OrliczNorm);
        if forced {
            match pc.case {
                None => pc.case = Some(PotentialCase::Origin),
                Some(PotentialCase::Origin) => {}
                Some(c) => errs.push(format!("mode {mode} needs potential case 3a (vanishing at 0), got {c}")),
            }
        }
        match (pc.case, power) {
            (Some(c), Some(p)) if !c.admits_power(p, dim) => {
                errs.push(format!("potential case {c} does not admit the power weight with p = {p} on S^{dim}"));
            }
            (None, Some(p)) => match PotentialCase::ALL.into_iter().find(|c| c.admits_power(p, dim)) {
                Some(c) => pc.case = Some(c),
                None => errs.push(format!("no potential case admits p = {p} on S^{dim}")),
            },
            (None, None) if mode == Mode::Flow && flow_kind == Some(FlowChoice::Normalized) => {
                errs.push("potential.case is required for a tabulated weight".into());
            }
            _ => {}
        }
        positive(pc.c1, "potential.c1", &mut errs);
        positive(pc.c2, "potential.c2", &mut errs);
        positive(pc.tail_cut, "potential.tail_cut", &mut errs);
        if pc.q.is_some_and(|q| !q.is_finite()) {
            errs.push("potential.q must be finite".into());
        }
    }

    // flow
    if mode == Mode::Flow {
        let fc = flow.get_or_insert_with(FlowConfig::default);
        match fc.kind {
            None => errs.push("flow.kind is required (normalized, unnormalized or regularized)".into()),
            Some(FlowChoice::Regularized) => match fc.epsilon {
                None => errs.push("flow.epsilon is required for the regularized flow".into()),
                Some(e) if !(e > 0.0 && e <= EPSILON_MAX) => {
                    errs.push(format!("flow.epsilon must lie in (0, {EPSILON_MAX}], got {e}"))
                }
                _ => {}
            },
            Some(_) => {
                if fc.epsilon.is_some() {
                    errs.push("flow.epsilon only applies to the regularized flow".into());
                }
            }
        }
    }

    // christoffel
    if mode == Mode::SolveChristoffel {
        match &christoffel {
            None => errs.push("mode solve-christoffel needs a [christoffel] section".into()),
            Some(c) => match (c.p, c.k) {
                (Some(p), Some(k)) => {
                    if k == 0 || k > dim {
                        errs.push(format!("christoffel.k must lie in 1..={dim}, got {k}"));
                    }
                    if !(p > k as f64 + 1.0) {
                        errs.push(format!("christoffel.p = {p} rejected: requires p > k+1 = {}", k + 1));
                    }
                }
                _ => errs.push("christoffel.p and christoffel.k are required".into()),
            },
        }
    }

    // solver
    if let Err(Error::Config(more)) = solver.general().solver.validate() {
        errs.extend(more.into_iter().map(|m| format!("solver.{m}")));
    }
    if mode == Mode::SolveOrliczGeneral {
        if solver.epsilons.is_empty() || solver.epsilons.iter().any(|e| !(*e > 0.0 && *e <= EPSILON_MAX)) {
            errs.push(format!("solver.epsilons must be non-empty with entries in (0, {EPSILON_MAX}]"));
        }
        if solver.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            errs.push("solver.epsilons must be strictly decreasing".into());
        }
        if solver.bandwidths.iter().any(|b| !(*b > 0.0 && *b <= std::f64::consts::FRAC_PI_4)) {
            errs.push("solver.bandwidths entries must lie in (0, pi/4]".into());
        }
        if solver.bandwidths.windows(2).any(|w| !(w[1] < w[0])) {
            errs.push("solver.bandwidths must be strictly decreasing".into());
        }
        if !(solver.density_floor >= 0.0) {
            errs.push("solver.density_floor must be non-negative".into());
        }
    }

    // norm
    if mode == Mode::OrliczNorm {
        let nc = norm.get_or_insert_with(NormConfig::default);
        match nc.g {
            NormInput::Segment => {
                let d = nc.direction.get_or_insert_with(|| {
                    let mut e = vec![0.0; dim + 1];
                    e[0] = 1.0;
                    e
                });
                if d.len() != dim + 1 || d.iter().all(|x| *x == 0.0) || d.iter().any(|x| !x.is_finite()) {
                    errs.push(format!("norm.direction must be a non-zero vector with {} components", dim + 1));
                }
            }
            NormInput::File => match &nc.file {
                None => errs.push("norm.file is required when norm.g = \"file\"".into()),
                Some(p) => nc.file = Some(resolve_path(base, p, "norm.file", &mut errs)),
            },
            NormInput::Body => {}
        }
        positive(nc.phi_power, "norm.phi_power", &mut errs);
    }

    // output
    if output.dir.is_relative() {
        output.dir = base.join(&output.dir);
    }

    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    Ok(RunConfig {
        mode,
        seed,
        grid,
        body,
        data,
        weight,
        potential,
        flow,
        christoffel,
        solver,
        norm,
        output,
    })
}

/// Reads and parses a configuration file; relative paths resolve against
/// the file's directory.
pub fn load_config(path: impl AsRef<Path>, mode: Option<Mode>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let base = base.canonicalize().unwrap_or_else(|_| base.to_path_buf());
    parse_config(&text, &base, mode)
}
