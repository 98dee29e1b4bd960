//! Experiment specs: a JSON tree with one `kind` per experiment.
//!
//! Parsing reports every problem it finds, each with the path of the
//! offending key. After parsing all defaults are explicit, and
//! [`ExperimentSpec::to_json`] writes a document that parses back to the
//! same spec.

use std::fmt;

use homlab_core::fields::{CoefficientField, EnergyDensity};
use homlab_core::numerics::SolverConfig;
use homlab_core::perforation::{LambdaSetup, PerforationPerturbation, PerforationSet};
use homlab_core::stability::HomogMethod;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub seed: u64,
    pub solver: SolverConfig,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Cell(CellSpec),
    Rve(RveSpec),
    Stability(StabilitySpec),
    Perforation(PerforationSpec),
    Stochastic(StochasticSpec),
    Counterexamples(CounterexampleSpec),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Cell(_) => "cell",
            Experiment::Rve(_) => "rve",
            Experiment::Stability(_) => "stability",
            Experiment::Perforation(_) => "perforation",
            Experiment::Stochastic(_) => "stochastic",
            Experiment::Counterexamples(_) => "counterexamples",
        }
    }
}

pub const KINDS: [&str; 6] = ["cell", "rve", "stability", "perforation", "stochastic", "counterexamples"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub field: EnergyDensity,
    pub dim: usize,
    /// Finest resolution; coarser levels halve it.
    pub resolution: usize,
    pub levels: usize,
    /// Directions for p-energies.
    pub xis: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RveSpec {
    pub field: EnergyDensity,
    pub dim: usize,
    pub centers: Vec<Vec<f64>>,
    pub xi: Vec<f64>,
    pub window_sizes: Vec<f64>,
    pub resolution_per_unit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySpec {
    pub f: EnergyDensity,
    pub g: EnergyDensity,
    pub dim: usize,
    pub t_list: Vec<f64>,
    pub r_list: Vec<f64>,
    pub quadrature_resolution: usize,
    pub homogenization: HomogMethod,
    pub xis: Vec<Vec<f64>>,
    pub tolerance: Option<f64>,
    pub tolerance_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationStudy {
    pub other: PerforationPerturbation,
    pub window_sizes: Vec<f64>,
    pub resolution_per_unit: usize,
    pub density_windows: Vec<f64>,
    pub quadrature_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerforationSpec {
    pub set: PerforationSet,
    pub xi: Vec<f64>,
    pub resolution: usize,
    pub n_list: Vec<u32>,
    pub lambda: Option<LambdaSetup>,
    pub perturbation: Option<PerturbationStudy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticSpec {
    pub f: EnergyDensity,
    pub g: EnergyDensity,
    pub dim: usize,
    pub trials: usize,
    pub box_size: f64,
    pub resolution: usize,
    pub r_list: Vec<f64>,
    pub quadrature_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    pub r_list: Vec<f64>,
    pub quadrature_resolution: usize,
    pub cell_resolution_1d: usize,
    pub cell_resolution_2d: usize,
    pub window_offset: f64,
    pub window_sizes: Vec<f64>,
    pub window_resolution: usize,
}

impl Default for CounterexampleSpec {
    fn default() -> Self {
        let c = homlab_core::stability::CounterexampleConfig::default();
        CounterexampleSpec {
            r_list: c.r_list,
            quadrature_resolution: c.quadrature_resolution,
            cell_resolution_1d: c.cell_resolution_1d,
            cell_resolution_2d: c.cell_resolution_2d,
            window_offset: c.window_offset,
            window_sizes: c.window_sizes,
            window_resolution: c.window_resolution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

/// All problems found in a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecErrors(pub Vec<SpecError>);

impl fmt::Display for SpecErrors {
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

impl std::error::Error for SpecErrors {}

impl ExperimentSpec {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("spec serializes");
        s.push('\n');
        s
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Input keys that the canonical serialization of the parsed value lacks.
fn unknown_keys(input: &Value, canonical: &Value, path: &str, errors: &mut Vec<SpecError>) {
    match (input, canonical) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in a {
                match b.get(k) {
                    Some(w) => unknown_keys(v, w, &join(path, k), errors),
                    None => errors.push(SpecError {
                        path: join(path, k),
                        message: "unknown key".into(),
                    }),
                }
            }
        }
        (Value::Array(a), Value::Array(b)) if a.len() == b.len() => {
            for (i, (v, w)) in a.iter().zip(b).enumerate() {
                unknown_keys(v, w, &format!("{path}[{i}]"), errors);
            }
        }
        _ => {}
    }
}

struct Reader<'a> {
    map: &'a Map<String, Value>,
    path: String,
    seen: Vec<&'static str>,
}

struct Errors(Vec<SpecError>);

impl Errors {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(SpecError {
            path: path.into(),
            message: message.into(),
        });
    }

    fn decode<T: DeserializeOwned + Serialize>(&mut self, value: &Value, path: &str) -> Option<T> {
        match serde_json::from_value::<T>(value.clone()) {
            Ok(t) => {
                let canonical = serde_json::to_value(&t).expect("serializable");
                unknown_keys(value, &canonical, path, &mut self.0);
                Some(t)
            }
            Err(e) => {
                self.push(path, e.to_string());
                None
            }
        }
    }
}

impl<'a> Reader<'a> {
    fn new(map: &'a Map<String, Value>, path: &str) -> Self {
        Reader {
            map,
            path: path.to_string(),
            seen: Vec::new(),
        }
    }

    fn at(&self, key: &str) -> String {
        join(&self.path, key)
    }

    fn required<T: DeserializeOwned + Serialize>(&mut self, errs: &mut Errors, key: &'static str) -> Option<T> {
        self.seen.push(key);
        match self.map.get(key) {
            Some(v) => errs.decode(v, &self.at(key)),
            None => {
                errs.push(self.at(key), "missing required field");
                None
            }
        }
    }

    fn optional<T: DeserializeOwned + Serialize>(&mut self, errs: &mut Errors, key: &'static str, default: T) -> T {
        self.seen.push(key);
        match self.map.get(key) {
            Some(v) => errs.decode(v, &self.at(key)).unwrap_or(default),
            None => default,
        }
    }

    /// A density descriptor: a number (constant isotropic), a scalar field
    /// (isotropic) or a full density with a `form` tag.
    fn density(&mut self, errs: &mut Errors, key: &'static str) -> Option<EnergyDensity> {
        self.seen.push(key);
        let path = self.at(key);
        match self.map.get(key) {
            None => {
                errs.push(path, "missing required field");
                None
            }
            Some(Value::Number(n)) => {
                let v = n.as_f64().unwrap_or(f64::NAN);
                if !(v > 0.0 && v.is_finite()) {
                    errs.push(path, format!("constant coefficient must be positive, got {v}"));
                    return None;
                }
                Some(EnergyDensity::isotropic(CoefficientField::constant(v)))
            }
            Some(v @ Value::Object(m)) if !m.contains_key("form") => {
                errs.decode::<CoefficientField>(v, &path).map(EnergyDensity::isotropic)
            }
            Some(v) => errs.decode::<EnergyDensity>(v, &path),
        }
    }

    fn finish(&self, errs: &mut Errors) {
        for k in self.map.keys() {
            if !self.seen.contains(&k.as_str()) {
                errs.push(self.at(k), "unknown key");
            }
        }
    }
}

fn unit_vectors(dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn check_dim(errs: &mut Errors, path: &str, dim: usize) {
    if dim != 1 && dim != 2 {
        errs.push(path, format!("dimension must be 1 or 2, got {dim}"));
    }
}

fn check_increasing(errs: &mut Errors, path: &str, list: &[f64], min_len: usize) {
    if list.len() < min_len {
        errs.push(path, format!("need at least {min_len} values, got {}", list.len()));
    }
    if list.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        errs.push(path, "values must be positive and finite");
    } else if list.windows(2).any(|w| !(w[1] > w[0])) {
        errs.push(path, "values must be strictly increasing");
    }
}

fn check_vectors(errs: &mut Errors, path: &str, vs: &[Vec<f64>], dim: usize, nonzero: bool) {
    for (i, v) in vs.iter().enumerate() {
        if v.len() != dim {
            errs.push(format!("{path}[{i}]"), format!("expected {dim} components, got {}", v.len()));
        } else if nonzero && v.iter().all(|x| *x == 0.0) {
            errs.push(format!("{path}[{i}]"), "direction must be nonzero");
        }
    }
}

fn check_at_least(errs: &mut Errors, path: &str, value: usize, min: usize) {
    if value < min {
        errs.push(path, format!("must be at least {min}, got {value}"));
    }
}

fn density_dim(f: &EnergyDensity) -> Option<usize> {
    match f {
        EnergyDensity::QuadraticMatrix { a } => Some(a.dim()),
        _ => None,
    }
}

/// The dimension: given explicitly, implied by a matrix density, or 2.
fn read_dim(r: &mut Reader, errs: &mut Errors, densities: &[Option<&EnergyDensity>]) -> usize {
    let implied = densities.iter().flatten().find_map(|f| density_dim(f));
    let dim = r.optional(errs, "dim", implied.unwrap_or(2));
    check_dim(errs, &r.at("dim"), dim);
    if let Some(m) = implied {
        if m != dim {
            errs.push(r.at("dim"), format!("matrix field has size {m} but dim is {dim}"));
        }
    }
    dim
}

fn parse_cell(r: &mut Reader, errs: &mut Errors) -> Option<CellSpec> {
    let field = r.density(errs, "field");
    let dim = read_dim(r, errs, &[field.as_ref()]);
    let resolution: usize = r.optional(errs, "resolution", 64);
    check_at_least(errs, &r.at("resolution"), resolution, 4);
    let levels: usize = r.optional(errs, "levels", 2);
    check_at_least(errs, &r.at("levels"), levels, 1);
    if levels >= 1 && resolution >> (levels - 1) < 2 {
        errs.push(r.at("levels"), "coarsest level would have fewer than 2 elements per axis");
    }
    let xis: Vec<Vec<f64>> = r.optional(errs, "xis", unit_vectors(dim));
    check_vectors(errs, &r.at("xis"), &xis, dim, true);
    Some(CellSpec {
        field: field?,
        dim,
        resolution,
        levels,
        xis,
    })
}

fn parse_rve(r: &mut Reader, errs: &mut Errors) -> Option<RveSpec> {
    let field = r.density(errs, "field");
    let dim = read_dim(r, errs, &[field.as_ref()]);
    let centers: Vec<Vec<f64>> = r.optional(errs, "centers", vec![vec![0.0; dim]]);
    if centers.is_empty() {
        errs.push(r.at("centers"), "need at least one center");
    }
    check_vectors(errs, &r.at("centers"), &centers, dim, false);
    let xi: Vec<f64> = r.optional(errs, "xi", unit_vectors(dim).remove(0));
    check_vectors(errs, &r.at("xi"), std::slice::from_ref(&xi), dim, true);
    let window_sizes: Option<Vec<f64>> = r.required(errs, "window_sizes");
    if let Some(w) = &window_sizes {
        check_increasing(errs, &r.at("window_sizes"), w, 3);
    }
    let resolution_per_unit: usize = r.optional(errs, "resolution_per_unit", 16);
    check_at_least(errs, &r.at("resolution_per_unit"), resolution_per_unit, 1);
    Some(RveSpec {
        field: field?,
        dim,
        centers,
        xi,
        window_sizes: window_sizes?,
        resolution_per_unit,
    })
}

fn check_method(errs: &mut Errors, path: &str, m: &HomogMethod, dim: usize) {
    match m {
        HomogMethod::Cell { resolution } => check_at_least(errs, &join(path, "resolution"), *resolution, 4),
        HomogMethod::Windows {
            centers,
            window_sizes,
            resolution_per_unit,
        } => {
            if centers.is_empty() {
                errs.push(join(path, "centers"), "need at least one center");
            }
            check_vectors(errs, &join(path, "centers"), centers, dim, false);
            check_increasing(errs, &join(path, "window_sizes"), window_sizes, 3);
            check_at_least(errs, &join(path, "resolution_per_unit"), *resolution_per_unit, 1);
        }
    }
}

fn parse_stability(r: &mut Reader, errs: &mut Errors) -> Option<StabilitySpec> {
    let f = r.density(errs, "f");
    let g = r.density(errs, "g");
    let dim = read_dim(r, errs, &[f.as_ref(), g.as_ref()]);
    if let (Some(f), Some(g)) = (&f, &g) {
        if let Err(e) = f.check_same_form(g) {
            errs.push(r.at("g"), e.to_string());
        }
    }
    let t_list: Vec<f64> = r.optional(errs, "t_list", Vec::new());
    if t_list.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        errs.push(r.at("t_list"), "t values must be positive");
    }
    let r_list: Vec<f64> = r.optional(errs, "r_list", vec![8.0, 16.0, 32.0, 64.0]);
    check_increasing(errs, &r.at("r_list"), &r_list, 3);
    let quadrature_resolution: usize = r.optional(errs, "quadrature_resolution", 16);
    check_at_least(errs, &r.at("quadrature_resolution"), quadrature_resolution, 1);
    let homogenization: HomogMethod = r.optional(errs, "homogenization", HomogMethod::Cell { resolution: 64 });
    check_method(errs, &r.at("homogenization"), &homogenization, dim);
    let xis: Vec<Vec<f64>> = r.optional(errs, "xis", unit_vectors(dim));
    check_vectors(errs, &r.at("xis"), &xis, dim, true);
    let tolerance: Option<f64> = r.optional(errs, "tolerance", None);
    if tolerance.is_some_and(|t| !(t > 0.0)) {
        errs.push(r.at("tolerance"), "tolerance must be positive");
    }
    let tolerance_floor: f64 = r.optional(errs, "tolerance_floor", 1e-6);
    if !(tolerance_floor >= 0.0) {
        errs.push(r.at("tolerance_floor"), "tolerance floor must be nonnegative");
    }
    Some(StabilitySpec {
        f: f?,
        g: g?,
        dim,
        t_list,
        r_list,
        quadrature_resolution,
        homogenization,
        xis,
        tolerance,
        tolerance_floor,
    })
}

fn parse_perforation(r: &mut Reader, errs: &mut Errors) -> Option<PerforationSpec> {
    let set: Option<PerforationSet> = r.required(errs, "set");
    if let Some(Err(e)) = set.as_ref().map(PerforationSet::validate) {
        errs.push(r.at("set"), e.to_string());
    }
    let xi: Vec<f64> = r.optional(errs, "xi", vec![1.0, 0.0]);
    check_vectors(errs, &r.at("xi"), std::slice::from_ref(&xi), 2, true);
    let resolution: usize = r.optional(errs, "resolution", 64);
    check_at_least(errs, &r.at("resolution"), resolution, 4);
    let n_list: Vec<u32> = r.optional(errs, "n_list", vec![4, 16, 64, 256]);
    if n_list.is_empty() || n_list.contains(&0) {
        errs.push(r.at("n_list"), "need positive penalization indices");
    }
    let lambda: Option<LambdaSetup> = r.optional(errs, "lambda", None);
    if let Some(Err(e)) = lambda.as_ref().map(LambdaSetup::validate) {
        errs.push(r.at("lambda"), e.to_string());
    }
    let perturbation = match r.map.get("perturbation") {
        Some(Value::Object(m)) => {
            r.seen.push("perturbation");
            let mut p = Reader::new(m, &r.at("perturbation"));
            let other: Option<PerforationPerturbation> = p.required(errs, "other");
            let window_sizes: Vec<f64> = p.optional(errs, "window_sizes", vec![8.0, 16.0, 32.0]);
            check_increasing(errs, &p.at("window_sizes"), &window_sizes, 2);
            let resolution_per_unit: usize = p.optional(errs, "resolution_per_unit", 16);
            check_at_least(errs, &p.at("resolution_per_unit"), resolution_per_unit, 1);
            let density_windows: Vec<f64> = p.optional(errs, "density_windows", vec![16.0, 32.0, 64.0]);
            check_increasing(errs, &p.at("density_windows"), &density_windows, 2);
            let quadrature_resolution: usize = p.optional(errs, "quadrature_resolution", 32);
            check_at_least(errs, &p.at("quadrature_resolution"), quadrature_resolution, 1);
            p.finish(errs);
            other.map(|other| PerturbationStudy {
                other,
                window_sizes,
                resolution_per_unit,
                density_windows,
                quadrature_resolution,
            })
        }
        Some(Value::Null) | None => {
            r.seen.push("perturbation");
            None
        }
        Some(_) => {
            r.seen.push("perturbation");
            errs.push(r.at("perturbation"), "expected an object");
            None
        }
    };
    Some(PerforationSpec {
        set: set?,
        xi,
        resolution,
        n_list,
        lambda,
        perturbation,
    })
}

fn parse_stochastic(r: &mut Reader, errs: &mut Errors) -> Option<StochasticSpec> {
    let f = r.density(errs, "f");
    let g = r.density(errs, "g");
    let dim = read_dim(r, errs, &[f.as_ref(), g.as_ref()]);
    for (key, d) in [("f", &f), ("g", &g)] {
        if d.as_ref().is_some_and(|d| !d.is_quadratic()) {
            errs.push(r.at(key), "stochastic experiments need quadratic densities");
        }
    }
    let trials: usize = r.optional(errs, "trials", 16);
    check_at_least(errs, &r.at("trials"), trials, 8);
    let box_size: f64 = r.optional(errs, "box_size", 32.0);
    if !(box_size >= 1.0 && box_size.fract() == 0.0) {
        errs.push(r.at("box_size"), "box size must be a positive integer");
    }
    let resolution: usize = r.optional(errs, "resolution", 4);
    check_at_least(errs, &r.at("resolution"), resolution, 1);
    let r_list: Vec<f64> = r.optional(errs, "r_list", vec![8.0, 16.0, 32.0]);
    check_increasing(errs, &r.at("r_list"), &r_list, 3);
    let quadrature_resolution: usize = r.optional(errs, "quadrature_resolution", 4);
    check_at_least(errs, &r.at("quadrature_resolution"), quadrature_resolution, 1);
    Some(StochasticSpec {
        f: f?,
        g: g?,
        dim,
        trials,
        box_size,
        resolution,
        r_list,
        quadrature_resolution,
    })
}

fn parse_counterexamples(r: &mut Reader, errs: &mut Errors) -> Option<CounterexampleSpec> {
    let d = CounterexampleSpec::default();
    let spec = CounterexampleSpec {
        r_list: r.optional(errs, "r_list", d.r_list),
        quadrature_resolution: r.optional(errs, "quadrature_resolution", d.quadrature_resolution),
        cell_resolution_1d: r.optional(errs, "cell_resolution_1d", d.cell_resolution_1d),
        cell_resolution_2d: r.optional(errs, "cell_resolution_2d", d.cell_resolution_2d),
        window_offset: r.optional(errs, "window_offset", d.window_offset),
        window_sizes: r.optional(errs, "window_sizes", d.window_sizes),
        window_resolution: r.optional(errs, "window_resolution", d.window_resolution),
    };
    check_increasing(errs, &r.at("r_list"), &spec.r_list, 3);
    check_increasing(errs, &r.at("window_sizes"), &spec.window_sizes, 3);
    check_at_least(errs, &r.at("cell_resolution_1d"), spec.cell_resolution_1d, 8);
    check_at_least(errs, &r.at("cell_resolution_2d"), spec.cell_resolution_2d, 8);
    check_at_least(errs, &r.at("quadrature_resolution"), spec.quadrature_resolution, 1);
    check_at_least(errs, &r.at("window_resolution"), spec.window_resolution, 1);
    if !(spec.window_offset > 0.0 && spec.window_offset.is_finite()) {
        errs.push(r.at("window_offset"), "window offset must be positive");
    }
    Some(spec)
}

/// Parses and validates a spec document.
pub fn parse_spec(document: &str) -> Result<ExperimentSpec, SpecErrors> {
    let root: Value = serde_json::from_str(document).map_err(|e| {
        SpecErrors(vec![SpecError {
            path: String::new(),
            message: format!("not a valid JSON document: {e}"),
        }])
    })?;
    let Value::Object(map) = &root else {
        return Err(SpecErrors(vec![SpecError {
            path: String::new(),
            message: "spec must be an object".into(),
        }]));
    };
    let mut errs = Errors(Vec::new());
    let mut r = Reader::new(map, "");
    let kind: Option<String> = r.required(&mut errs, "kind");
    let kind = match kind.as_deref() {
        Some(k) if KINDS.contains(&k) => Some(k.to_string()),
        Some(k) => {
            errs.push("kind", format!("unknown kind '{k}', expected one of {}", KINDS.join(", ")));
            None
        }
        None => None,
    };
    let name: String = r.optional(&mut errs, "name", kind.clone().unwrap_or_default());
    if (kind.is_some() || map.contains_key("name")) && (name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')) {
        errs.push("name", "name must be non-empty and use only letters, digits, '_' or '-'");
    }
    let seed: u64 = r.optional(&mut errs, "seed", 0);
    let solver: SolverConfig = r.optional(&mut errs, "solver", SolverConfig::default());
    if let Err(e) = solver.validate() {
        errs.push("solver", e.to_string());
    }
    let experiment = match kind.as_deref() {
        Some("cell") => parse_cell(&mut r, &mut errs).map(Experiment::Cell),
        Some("rve") => parse_rve(&mut r, &mut errs).map(Experiment::Rve),
        Some("stability") => parse_stability(&mut r, &mut errs).map(Experiment::Stability),
        Some("perforation") => parse_perforation(&mut r, &mut errs).map(Experiment::Perforation),
        Some("stochastic") => parse_stochastic(&mut r, &mut errs).map(Experiment::Stochastic),
        Some("counterexamples") => parse_counterexamples(&mut r, &mut errs).map(Experiment::Counterexamples),
        _ => None,
    };
    if kind.is_some() {
        r.finish(&mut errs);
    }
    match experiment {
        Some(experiment) if errs.0.is_empty() => Ok(ExperimentSpec {
            name,
            seed,
            solver,
            experiment,
        }),
        _ => Err(SpecErrors(errs.0)),
    }
}
