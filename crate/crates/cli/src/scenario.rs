//! Scenario files: TOML documents with a `kind` and per-kind sections.

use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64;
use qphase::fewmode::{BeamSplitter, DoubleWellConfig, PhasePolicy, Scan};
use qphase::gaussian::{Pairing, Species};
use qphase::lattice::{Statistics, Units};
use qphase::plusp::{CanonicalWidth, PlusPObservable, PlusPState};
use qphase::stochastic::{Reduction, SchemeKind};
use qphase::variational::PropagatorConfig;
use qphase::wigner::{FieldObservable, LossChannel};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    ExactDoublewell,
    Wigner,
    Plusp,
    PluspReverse,
    Entropy,
    Variational,
    DimensionCount,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::ExactDoublewell,
        Kind::Wigner,
        Kind::Plusp,
        Kind::PluspReverse,
        Kind::Entropy,
        Kind::Variational,
        Kind::DimensionCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::ExactDoublewell => "exact-doublewell",
            Kind::Wigner => "wigner",
            Kind::Plusp => "plusp",
            Kind::PluspReverse => "plusp-reverse",
            Kind::Entropy => "entropy",
            Kind::Variational => "variational",
            Kind::DimensionCount => "dimension-count",
        }
    }

    fn from_name(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Sections other than the common ones that this kind accepts.
    fn sections(self) -> &'static [&'static str] {
        match self {
            Kind::ExactDoublewell => &["model", "method", "observables"],
            Kind::Wigner | Kind::Plusp => &["model", "method", "initial", "observables"],
            Kind::PluspReverse | Kind::Entropy | Kind::Variational => &["model", "method", "initial"],
            Kind::DimensionCount => &["model"],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One problem found while reading a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationErrors(pub Vec<Issue>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

/// Sample times, either listed or as `steps` equal intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    List(Vec<f64>),
    Range(TimeRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeRange {
    #[serde(default)]
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        match self {
            TimeGrid::List(v) => v.clone(),
            TimeGrid::Range(r) => (0..=r.steps)
                .map(|k| r.start + (r.stop - r.start) * k as f64 / r.steps.max(1) as f64)
                .collect(),
        }
    }

    fn check(&self, path: &str, issues: &mut Vec<Issue>) {
        if let TimeGrid::Range(r) = self {
            if r.steps == 0 || !(r.stop > r.start) {
                issue(issues, path, "range needs steps >= 1 and stop > start");
                return;
            }
        }
        let t = self.times();
        if t.is_empty() {
            issue(issues, path, "no sample times");
        } else if t.iter().any(|v| !v.is_finite() || *v < 0.0) || t.windows(2).any(|w| w[1] < w[0]) {
            issue(issues, path, "times must be finite, non-negative and non-decreasing");
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub quantity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// File name stem; defaults to the scenario name, then the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

// exact-doublewell

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellModel {
    pub atoms_a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms_b: Option<f64>,
    /// χ_ij of each well; the Rb-87 values when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<[[f64; 2]; 2]>,
    #[serde(default)]
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellMethod {
    pub scan: Scan,
    #[serde(default = "auto_phase")]
    pub phase_policy: PhasePolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam_splitter: Option<BeamSplitter>,
    #[serde(default = "default_truncation")]
    pub truncation_tol: f64,
}

fn auto_phase() -> PhasePolicy {
    PhasePolicy::Auto
}

fn default_truncation() -> f64 {
    DoubleWellConfig::default().truncation_tol
}

pub const DOUBLE_WELL_COLUMNS: [&str; 12] = [
    "tau",
    "atoms_a",
    "theta",
    "s_db_theta",
    "s_db_theta_perp",
    "n0",
    "cross_theta",
    "s_plus_db",
    "s_minus_db",
    "e_product",
    "e_sum",
    "discarded_weight",
];

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleWellScenario {
    pub model: DoubleWellModel,
    pub method: DoubleWellMethod,
    /// Output columns; all of them when empty.
    pub observables: Vec<String>,
}

// lattice model shared by the stochastic engines

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum Potential {
    Flat,
    /// One value per site mode, in energy units.
    Values { values: Vec<f64> },
    /// Frequencies per spin per axis.
    Harmonic { frequencies: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeModel {
    #[serde(default = "one_cell")]
    pub dims: Vec<usize>,
    #[serde(default = "unit_box")]
    pub box_length: Vec<f64>,
    #[serde(default = "unit_mass")]
    pub masses: Vec<f64>,
    #[serde(default)]
    pub units: Units,
    /// χ_ss' row-major; zero when empty.
    #[serde(default)]
    pub chi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub internal: Option<Vec<f64>>,
    #[serde(default = "flat")]
    pub potential: Potential,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub losses: Vec<LossChannel>,
}

fn one_cell() -> Vec<usize> {
    vec![1]
}
fn unit_box() -> Vec<f64> {
    vec![1.0]
}
fn unit_mass() -> Vec<f64> {
    vec![1.0]
}
fn flat() -> Potential {
    Potential::Flat
}

impl LatticeModel {
    fn check(&self, issues: &mut Vec<Issue>) {
        if self.dims.is_empty() || self.dims.contains(&0) {
            issue(issues, "model.dims", "every axis needs at least one point");
        }
        if self.box_length.len() != self.dims.len() {
            issue(
                issues,
                "model.box_length",
                &format!("has {} entries for {} axes", self.box_length.len(), self.dims.len()),
            );
        }
        if self.box_length.iter().any(|l| !(*l > 0.0)) {
            issue(issues, "model.box_length", "lengths must be positive");
        }
        let spins = self.masses.len();
        if spins == 0 || self.masses.iter().any(|m| !(*m > 0.0)) {
            issue(issues, "model.masses", "need one positive mass per spin component");
        }
        // SI masses are kilograms; dimensionless ones are of order one
        match self.units {
            Units::Si if self.masses.iter().any(|m| *m > 1e-20) => {
                issue(issues, "model.masses", "SI units expect masses in kg (below 1e-20)")
            }
            Units::Dimensionless if self.masses.iter().any(|m| *m < 1e-20 && *m > 0.0) => issue(
                issues,
                "model.masses",
                "masses look like kilograms; set units = \"si\"",
            ),
            _ => {}
        }
        if !self.chi.is_empty() && self.chi.len() != spins * spins {
            issue(
                issues,
                "model.chi",
                &format!("needs {} entries (row-major {spins}x{spins})", spins * spins),
            );
        }
        if let Some(w) = &self.internal {
            if w.len() != spins {
                issue(issues, "model.internal", &format!("needs {spins} entries"));
            }
        }
        let cells: usize = self.dims.iter().product();
        match &self.potential {
            Potential::Flat => {}
            Potential::Values { values } => {
                if values.len() != cells * spins {
                    issue(issues, "model.potential.values", &format!("needs {} entries", cells * spins));
                }
            }
            Potential::Harmonic { frequencies } => {
                if frequencies.len() != spins || frequencies.iter().any(|f| f.len() != self.dims.len()) {
                    issue(
                        issues,
                        "model.potential.frequencies",
                        &format!("needs {spins} rows of {} frequencies", self.dims.len()),
                    );
                }
            }
        }
        for (i, l) in self.losses.iter().enumerate() {
            if l.multiplicity.len() != spins || !(l.rate >= 0.0) || l.multiplicity.iter().sum::<u32>() == 0 {
                issue(
                    issues,
                    &format!("model.losses[{i}]"),
                    "needs one multiplicity per spin, at least one particle and a non-negative rate",
                );
            }
        }
    }

    pub fn modes(&self) -> usize {
        self.dims.iter().product::<usize>() * self.masses.len()
    }
}

// wigner

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerMethod {
    pub dt: f64,
    pub trajectories: usize,
    pub times: TimeGrid,
    #[serde(default)]
    pub scheme: SchemeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub midpoint_iters: Option<usize>,
    #[serde(default)]
    pub reduction: Reduction,
    #[serde(default = "yes")]
    pub vacuum_correction: bool,
    /// Computes ξ² with a jackknife over this many blocks instead of `observables`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squeezing_blocks: Option<usize>,
    /// Adds the closed-form Kerr means as reference columns.
    #[serde(default)]
    pub compare_exact: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerInitial {
    /// One coherent amplitude per mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<Complex64>>,
    /// One amplitude per spin, repeated over every cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_spin: Option<Vec<Complex64>>,
}

impl WignerInitial {
    pub fn field(&self, cells: usize) -> Vec<Complex64> {
        match (&self.amplitudes, &self.per_spin) {
            (Some(a), _) => a.clone(),
            (None, Some(s)) => s.iter().flat_map(|&v| std::iter::repeat_n(v, cells)).collect(),
            (None, None) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerScenario {
    pub model: LatticeModel,
    pub method: WignerMethod,
    pub initial: WignerInitial,
    pub observables: Vec<FieldObservable>,
}

// plusp

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlusPMethod {
    pub dt: f64,
    pub trajectories: usize,
    pub times: TimeGrid,
    #[serde(default)]
    pub scheme: SchemeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub midpoint_iters: Option<usize>,
    #[serde(default)]
    pub reduction: Reduction,
    #[serde(default)]
    pub width: CanonicalWidth,
    #[serde(default)]
    pub compare_exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlusPScenario {
    pub model: LatticeModel,
    pub method: PlusPMethod,
    pub initial: PlusPState,
    pub observables: Vec<PlusPObservable>,
}

// plusp-reverse

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReverseModel {
    pub chi: f64,
    #[serde(default)]
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReverseMethod {
    pub reverse_at: f64,
    pub times: TimeGrid,
    pub trajectories: usize,
    pub dt: f64,
    #[serde(default = "delta_width")]
    pub width: CanonicalWidth,
    #[serde(default = "unit_ceiling")]
    pub error_ceiling: f64,
}

fn delta_width() -> CanonicalWidth {
    CanonicalWidth::Delta
}
fn unit_ceiling() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReverseInitial {
    pub alpha0: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReverseScenario {
    pub model: ReverseModel,
    pub method: ReverseMethod,
    pub initial: ReverseInitial,
}

// entropy

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyModel {
    pub species: Species,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntropyMethod {
    #[serde(default)]
    pub pairing: Pairing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    #[serde(default = "unit_weight")]
    pub weight: f64,
    /// Rows of the stochastic Green's function.
    pub n: Vec<Vec<Complex64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement: Option<Vec<Complex64>>,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntropyInitial {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointSpec>,
    /// CSV with rows `weight,re00,im00,re01,...`, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyScenario {
    pub model: EntropyModel,
    pub method: EntropyMethod,
    pub initial: EntropyInitial,
}

// variational

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalModel {
    #[serde(default = "one")]
    pub modes: usize,
    /// Hermitian ω_kl of the quadratic part, row by row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<Vec<Complex64>>>,
    /// K_k of K_k a_k†² a_k².
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kerr: Vec<f64>,
    /// (k, l, C) for C a_k†a_l†a_l a_k.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cross_kerr: Vec<(usize, usize, f64)>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalMethod {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_halvings")]
    pub max_halvings: u32,
    pub times: TimeGrid,
    #[serde(default)]
    pub compare_exact: bool,
}

fn default_dt() -> f64 {
    PropagatorConfig::default().dt
}
fn default_lambda() -> f64 {
    PropagatorConfig::default().lambda
}
fn default_iterations() -> usize {
    PropagatorConfig::default().iterations
}
fn default_halvings() -> u32 {
    PropagatorConfig::default().max_halvings
}

impl VariationalMethod {
    pub fn propagator(&self) -> PropagatorConfig {
        PropagatorConfig {
            dt: self.dt,
            lambda: self.lambda,
            iterations: self.iterations,
            max_halvings: self.max_halvings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum VariationalInitial {
    Coherent {
        alpha: Vec<Complex64>,
    },
    /// `components` copies of the coherent state displaced around a ring.
    Ring {
        alpha: Vec<Complex64>,
        components: usize,
        #[serde(default = "default_radius")]
        radius: f64,
    },
}

fn default_radius() -> f64 {
    0.1
}

impl VariationalInitial {
    pub fn alpha(&self) -> &[Complex64] {
        match self {
            VariationalInitial::Coherent { alpha } | VariationalInitial::Ring { alpha, .. } => alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalScenario {
    pub model: VariationalModel,
    pub method: VariationalMethod,
    pub initial: VariationalInitial,
}

// dimension-count

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionModel {
    pub particles: u64,
    pub modes: u64,
    #[serde(default = "boson")]
    pub statistics: Statistics,
}

fn boson() -> Statistics {
    Statistics::Boson
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    ExactDoublewell(DoubleWellScenario),
    Wigner(WignerScenario),
    Plusp(PlusPScenario),
    PluspReverse(ReverseScenario),
    Entropy(EntropyScenario),
    Variational(VariationalScenario),
    DimensionCount(DimensionModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    pub description: Option<String>,
    pub seed: u64,
    pub body: Body,
    pub output: OutputSpec,
    pub expect: Vec<Expectation>,
}

fn issue(issues: &mut Vec<Issue>, path: &str, message: &str) {
    issues.push(Issue {
        path: path.to_string(),
        message: message.to_string(),
    });
}

/// Deserializes `value` as `T`, recording unknown keys and the first type
/// error under `path`.
fn section<T: DeserializeOwned>(value: toml::Value, path: &str, issues: &mut Vec<Issue>) -> Option<T> {
    let mut unknown: Vec<String> = Vec::new();
    let mut record = |p: serde_ignored::Path| unknown.push(p.to_string());
    let out = serde_path_to_error::deserialize::<_, T>(serde_ignored::Deserializer::new(value, &mut record));
    for u in unknown {
        issue(issues, &join(path, &u), "unknown key");
    }
    match out {
        Ok(v) => Some(v),
        Err(e) => {
            let inner = e.path().to_string();
            let inner = if inner == "." { String::new() } else { inner };
            issue(issues, &join(path, &inner), e.into_inner().to_string().trim_end());
            None
        }
    }
}

fn join(a: &str, b: &str) -> String {
    match (a.is_empty(), b.is_empty()) {
        (_, true) => a.to_string(),
        (true, false) => b.to_string(),
        (false, false) if b.starts_with('[') => format!("{a}{b}"),
        _ => format!("{a}.{b}"),
    }
}

fn take(table: &mut toml::Table, key: &str, empty: toml::Value) -> toml::Value {
    table.remove(key).unwrap_or(empty)
}

fn empty_table() -> toml::Value {
    toml::Value::Table(toml::Table::new())
}

fn empty_array() -> toml::Value {
    toml::Value::Array(Vec::new())
}

/// Parses and validates a scenario, reporting every problem found.
pub fn parse_scenario(text: &str) -> Result<Scenario, ValidationErrors> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        ValidationErrors(vec![Issue {
            path: String::new(),
            message: format!("malformed TOML: {}", e.message()),
        }])
    })?;
    let mut issues = Vec::new();

    let kind = match table.remove("kind") {
        None => {
            issue(&mut issues, "kind", "missing required field");
            None
        }
        Some(toml::Value::String(s)) => {
            let k = Kind::from_name(&s);
            if k.is_none() {
                let names: Vec<_> = Kind::ALL.iter().map(|k| k.name()).collect();
                issue(&mut issues, "kind", &format!("unknown kind `{s}`, expected one of {}", names.join(", ")));
            }
            k
        }
        Some(_) => {
            issue(&mut issues, "kind", "expected a string");
            None
        }
    };

    let name = table.remove("name").and_then(|v| section::<String>(v, "name", &mut issues));
    let description = table
        .remove("description")
        .and_then(|v| section::<String>(v, "description", &mut issues));
    let seed = section::<u64>(take(&mut table, "seed", toml::Value::Integer(0)), "seed", &mut issues).unwrap_or(0);
    let output = section::<OutputSpec>(take(&mut table, "output", empty_table()), "output", &mut issues).unwrap_or_default();
    let expect = section::<Vec<Expectation>>(take(&mut table, "expect", empty_array()), "expect", &mut issues).unwrap_or_default();
    for (i, e) in expect.iter().enumerate() {
        if e.min.is_none() && e.max.is_none() {
            issue(&mut issues, &format!("expect[{i}]"), "needs min or max");
        }
    }

    let Some(kind) = kind else {
        return Err(ValidationErrors(issues));
    };
    for key in table.keys() {
        if !kind.sections().contains(&key.as_str()) {
            issue(&mut issues, key, &format!("unknown key for kind `{kind}`"));
        }
    }

    let body = parse_body(kind, &mut table, &mut issues);
    if let Some(b) = &body {
        check_body(b, &mut issues);
    }
    match body {
        Some(body) if issues.is_empty() => Ok(Scenario {
            name,
            description,
            seed,
            body,
            output,
            expect,
        }),
        _ => Err(ValidationErrors(issues)),
    }
}

fn parse_body(kind: Kind, table: &mut toml::Table, issues: &mut Vec<Issue>) -> Option<Body> {
    let model = take(table, "model", empty_table());
    let method = take(table, "method", empty_table());
    let initial = take(table, "initial", empty_table());
    let observables = take(table, "observables", empty_array());
    macro_rules! sections {
        ($($name:ident : $ty:ty = $val:expr),*) => {{
            $(let $name = section::<$ty>($val, stringify!($name), issues);)*
            ($($name?,)*)
        }};
    }
    Some(match kind {
        Kind::ExactDoublewell => {
            let (model, method, observables) = sections!(
                model: DoubleWellModel = model,
                method: DoubleWellMethod = method,
                observables: Vec<String> = observables
            );
            Body::ExactDoublewell(DoubleWellScenario {
                model,
                method,
                observables,
            })
        }
        Kind::Wigner => {
            let (model, method, initial, observables) = sections!(
                model: LatticeModel = model,
                method: WignerMethod = method,
                initial: WignerInitial = initial,
                observables: Vec<FieldObservable> = observables
            );
            Body::Wigner(WignerScenario {
                model,
                method,
                initial,
                observables,
            })
        }
        Kind::Plusp => {
            let (model, method, initial, observables) = sections!(
                model: LatticeModel = model,
                method: PlusPMethod = method,
                initial: PlusPState = initial,
                observables: Vec<PlusPObservable> = observables
            );
            Body::Plusp(PlusPScenario {
                model,
                method,
                initial,
                observables,
            })
        }
        Kind::PluspReverse => {
            let (model, method, initial) = sections!(
                model: ReverseModel = model,
                method: ReverseMethod = method,
                initial: ReverseInitial = initial
            );
            Body::PluspReverse(ReverseScenario { model, method, initial })
        }
        Kind::Entropy => {
            let (model, method, initial) = sections!(
                model: EntropyModel = model,
                method: EntropyMethod = method,
                initial: EntropyInitial = initial
            );
            Body::Entropy(EntropyScenario { model, method, initial })
        }
        Kind::Variational => {
            let (model, method, initial) = sections!(
                model: VariationalModel = model,
                method: VariationalMethod = method,
                initial: VariationalInitial = initial
            );
            Body::Variational(VariationalScenario { model, method, initial })
        }
        Kind::DimensionCount => {
            let (model,) = sections!(model: DimensionModel = model);
            Body::DimensionCount(model)
        }
    })
}

fn positive(issues: &mut Vec<Issue>, path: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        issue(issues, path, "must be positive and finite");
    }
}

fn at_least_one(issues: &mut Vec<Issue>, path: &str, v: usize) {
    if v == 0 {
        issue(issues, path, "must be at least 1");
    }
}

fn check_body(body: &Body, issues: &mut Vec<Issue>) {
    match body {
        Body::ExactDoublewell(s) => {
            positive(issues, "model.atoms_a", s.model.atoms_a);
            if let Some(b) = s.model.atoms_b {
                positive(issues, "model.atoms_b", b);
            }
            positive(issues, "method.truncation_tol", s.method.truncation_tol);
            for (i, o) in s.observables.iter().enumerate() {
                if !DOUBLE_WELL_COLUMNS.contains(&o.as_str()) {
                    issue(
                        issues,
                        &format!("observables[{i}]"),
                        &format!("unknown column `{o}`, expected one of {}", DOUBLE_WELL_COLUMNS.join(", ")),
                    );
                }
            }
        }
        Body::Wigner(s) => {
            s.model.check(issues);
            let m = &s.method;
            positive(issues, "method.dt", m.dt);
            at_least_one(issues, "method.trajectories", m.trajectories);
            m.times.check("method.times", issues);
            let cells: usize = s.model.dims.iter().product();
            match (&s.initial.amplitudes, &s.initial.per_spin) {
                (Some(a), None) if a.len() != s.model.modes() => {
                    issue(issues, "initial.amplitudes", &format!("needs {} entries", s.model.modes()))
                }
                (None, Some(p)) if p.len() != s.model.masses.len() => {
                    issue(issues, "initial.per_spin", &format!("needs {} entries", s.model.masses.len()))
                }
                (Some(_), Some(_)) | (None, None) => {
                    issue(issues, "initial", "give exactly one of amplitudes or per_spin")
                }
                _ => {}
            }
            if let Some(b) = m.squeezing_blocks {
                if b < 2 || b > m.trajectories / 2 {
                    issue(issues, "method.squeezing_blocks", "needs 2 <= blocks <= trajectories / 2");
                }
                if s.model.masses.len() != 2 {
                    issue(issues, "method.squeezing_blocks", "spin squeezing needs two spin components");
                }
                if !s.observables.is_empty() {
                    issue(issues, "observables", "not used together with squeezing_blocks");
                }
            } else if s.observables.is_empty() {
                issue(issues, "observables", "at least one observable is required");
            }
            for (i, o) in s.observables.iter().enumerate() {
                let bad = match *o {
                    FieldObservable::X(k) | FieldObservable::Y(k) | FieldObservable::Number(k) => k >= s.model.modes(),
                    FieldObservable::Spin(k) => k > 2 || s.model.masses.len() < 2,
                    FieldObservable::SpinProduct(a, b) => a > 2 || b > 2 || s.model.masses.len() < 2,
                    FieldObservable::TotalNumber => false,
                };
                if bad {
                    issue(issues, &format!("observables[{i}]"), "mode or spin component out of range");
                }
            }
            if m.compare_exact && (cells != 1 || s.model.potential != Potential::Flat || s.model.internal.is_some()) {
                issue(issues, "method.compare_exact", "needs a single cell with no linear terms");
            }
            if m.compare_exact && !s.model.losses.is_empty() {
                issue(issues, "method.compare_exact", "closed-form means assume no losses");
            }
        }
        Body::Plusp(s) => {
            s.model.check(issues);
            let m = &s.method;
            positive(issues, "method.dt", m.dt);
            at_least_one(issues, "method.trajectories", m.trajectories);
            m.times.check("method.times", issues);
            if !s.model.losses.is_empty() {
                issue(issues, "model.losses", "the +P engine does not model losses");
            }
            if s.initial.modes() != s.model.modes() {
                issue(issues, "initial.modes", &format!("needs {} entries", s.model.modes()));
            }
            if s.observables.is_empty() {
                issue(issues, "observables", "at least one observable is required");
            }
            for (i, o) in s.observables.iter().enumerate() {
                let modes: Vec<usize> = match o {
                    PlusPObservable::X { mode } | PlusPObservable::Y { mode } | PlusPObservable::AlphaNorm { mode } => {
                        vec![*mode]
                    }
                    PlusPObservable::Moment { creation, annihilation } => creation.iter().chain(annihilation).copied().collect(),
                };
                if modes.iter().any(|&k| k >= s.model.modes()) {
                    issue(issues, &format!("observables[{i}]"), "mode out of range");
                }
            }
            let cells: usize = s.model.dims.iter().product();
            if m.compare_exact {
                if cells != 1 || s.model.potential != Potential::Flat || s.model.internal.is_some() {
                    issue(issues, "method.compare_exact", "needs a single cell with no linear terms");
                }
                if !matches!(s.initial, PlusPState::Coherent(_)) {
                    issue(issues, "method.compare_exact", "needs a coherent initial state");
                }
            }
        }
        Body::PluspReverse(s) => {
            let m = &s.method;
            positive(issues, "method.dt", m.dt);
            positive(issues, "method.error_ceiling", m.error_ceiling);
            at_least_one(issues, "method.trajectories", m.trajectories);
            m.times.check("method.times", issues);
            let times = m.times.times();
            if !(m.reverse_at > 0.0) || times.last().is_some_and(|&t| t < m.reverse_at) {
                issue(issues, "method.reverse_at", "must be positive and inside the sampled interval");
            }
            if !s.model.chi.is_finite() {
                issue(issues, "model.chi", "must be finite");
            }
        }
        Body::Entropy(s) => {
            if s.initial.points.is_empty() && s.initial.file.is_none() {
                issue(issues, "initial", "give points or a file");
            }
            for (i, p) in s.initial.points.iter().enumerate() {
                let m = p.n.len();
                if m == 0 || p.n.iter().any(|r| r.len() != m) {
                    issue(issues, &format!("initial.points[{i}].n"), "must be a non-empty square matrix");
                }
                if !(p.weight.is_finite()) {
                    issue(issues, &format!("initial.points[{i}].weight"), "must be finite");
                }
                if let Some(d) = &p.displacement {
                    if d.len() != m {
                        issue(issues, &format!("initial.points[{i}].displacement"), &format!("needs {m} entries"));
                    }
                    if s.model.species == Species::Fermion {
                        issue(issues, &format!("initial.points[{i}].displacement"), "fermions have no displacement");
                    }
                }
            }
        }
        Body::Variational(s) => {
            let (md, m) = (&s.model, &s.method);
            at_least_one(issues, "model.modes", md.modes);
            if let Some(l) = &md.linear {
                if l.len() != md.modes || l.iter().any(|r| r.len() != md.modes) {
                    issue(issues, "model.linear", &format!("needs {0}x{0} entries", md.modes));
                }
            }
            if md.kerr.len() > md.modes {
                issue(issues, "model.kerr", &format!("has more than {} entries", md.modes));
            }
            for (i, &(k, l, _)) in md.cross_kerr.iter().enumerate() {
                if k >= md.modes || l >= md.modes || k == l {
                    issue(issues, &format!("model.cross_kerr[{i}]"), "needs two distinct modes in range");
                }
            }
            positive(issues, "method.dt", m.dt);
            positive(issues, "method.lambda", m.lambda);
            at_least_one(issues, "method.iterations", m.iterations);
            m.times.check("method.times", issues);
            if s.initial.alpha().len() != md.modes {
                issue(issues, "initial.alpha", &format!("needs {} entries", md.modes));
            }
            if let VariationalInitial::Ring { components, radius, .. } = &s.initial {
                at_least_one(issues, "initial.components", *components);
                if !(*radius >= 0.0) {
                    issue(issues, "initial.radius", "must be non-negative");
                }
            }
            if m.compare_exact && (md.linear.is_some() || !md.cross_kerr.is_empty()) {
                issue(issues, "method.compare_exact", "closed-form means need a pure Kerr Hamiltonian");
            }
        }
        Body::DimensionCount(d) => at_least_one(issues, "model.modes", d.modes as usize),
    }
}

fn to_value<T: Serialize>(v: &T) -> toml::Value {
    toml::Value::try_from(v).expect("scenario sections serialize to TOML")
}

impl Scenario {
    pub fn kind(&self) -> Kind {
        match &self.body {
            Body::ExactDoublewell(_) => Kind::ExactDoublewell,
            Body::Wigner(_) => Kind::Wigner,
            Body::Plusp(_) => Kind::Plusp,
            Body::PluspReverse(_) => Kind::PluspReverse,
            Body::Entropy(_) => Kind::Entropy,
            Body::Variational(_) => Kind::Variational,
            Body::DimensionCount(_) => Kind::DimensionCount,
        }
    }

    /// File name stem for outputs.
    pub fn stem(&self) -> String {
        self.output
            .stem
            .clone()
            .or_else(|| self.name.clone())
            .unwrap_or_else(|| self.kind().name().to_string())
    }

    /// Canonical TOML text; parsing it gives back an equal scenario.
    pub fn to_toml(&self) -> String {
        let mut t = toml::Table::new();
        t.insert("kind".into(), toml::Value::String(self.kind().name().into()));
        if let Some(n) = &self.name {
            t.insert("name".into(), toml::Value::String(n.clone()));
        }
        if let Some(d) = &self.description {
            t.insert("description".into(), toml::Value::String(d.clone()));
        }
        t.insert("seed".into(), toml::Value::Integer(self.seed as i64));
        let mut put = |k: &str, v: toml::Value| {
            t.insert(k.into(), v);
        };
        match &self.body {
            Body::ExactDoublewell(s) => {
                put("model", to_value(&s.model));
                put("method", to_value(&s.method));
                put("observables", to_value(&s.observables));
            }
            Body::Wigner(s) => {
                put("model", to_value(&s.model));
                put("method", to_value(&s.method));
                put("initial", to_value(&s.initial));
                put("observables", to_value(&s.observables));
            }
            Body::Plusp(s) => {
                put("model", to_value(&s.model));
                put("method", to_value(&s.method));
                put("initial", to_value(&s.initial));
                put("observables", to_value(&s.observables));
            }
            Body::PluspReverse(s) => {
                put("model", to_value(&s.model));
                put("method", to_value(&s.method));
                put("initial", to_value(&s.initial));
            }
            Body::Entropy(s) => {
                put("model", to_value(&s.model));
                put("method", to_value(&s.method));
                put("initial", to_value(&s.initial));
            }
            Body::Variational(s) => {
                put("model", to_value(&s.model));
                put("method", to_value(&s.method));
                put("initial", to_value(&s.initial));
            }
            Body::DimensionCount(d) => put("model", to_value(d)),
        }
        if self.output != OutputSpec::default() {
            put("output", to_value(&self.output));
        }
        if !self.expect.is_empty() {
            put("expect", to_value(&self.expect));
        }
        toml::to_string(&t).expect("table serializes")
    }

    /// Forces deterministic reduction in every ensemble the scenario runs.
    pub fn make_deterministic(&mut self) {
        match &mut self.body {
            Body::Wigner(s) => s.method.reduction = Reduction::Deterministic,
            Body::Plusp(s) => s.method.reduction = Reduction::Deterministic,
            _ => {}
        }
    }
}
