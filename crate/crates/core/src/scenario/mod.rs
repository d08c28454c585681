//! Scenario files: dotted-key TOML checked against `scenarios/schema.toml`,
//! resolved with defaults and turned into a typed run plan.
//!
//! Validation never computes anything; it only checks keys, types, ranges and
//! the invariants each solver config enforces.

mod bundled;
mod run;

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use toml::Value;

use crate::euler::{DtPolicy, SolverConfig, Stepper};
use crate::lab::inequality::{Family, Operator, SweepSpec};
use crate::lab::kernel::KernelConfig;
use crate::multiplier::{log_grid, Multiplier, OsgoodVerdict, TableInterp};
use crate::osgood::{EnvelopeForm, GrowthFunction};
use crate::patch::{PatchConfig, PatchShape, PatchStepper};
use crate::spectral::Grid;
use crate::{Error, Result};

pub use bundled::{bundled, Bundled, BUNDLED};
pub use run::{execute, Check, Outcome, Status};

const SCHEMA: &str = include_str!("../../scenarios/schema.toml");

/// The schema text shipped with the binary.
pub fn schema_text() -> &'static str {
    SCHEMA
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum KeyType {
    Integer,
    Float,
    String,
    Bool,
    FloatArray,
    IntegerArray,
}

#[derive(Debug, Deserialize)]
struct KeySpec {
    #[serde(rename = "type")]
    ty: KeyType,
    modes: Vec<String>,
    #[serde(default)]
    required: Vec<String>,
    when: Option<String>,
    default: Option<Value>,
    choices: Option<Vec<String>>,
    min: Option<f64>,
    max: Option<f64>,
    #[allow(dead_code)]
    doc: String,
}

impl KeySpec {
    fn applies(&self, mode: Mode) -> bool {
        self.modes.iter().any(|m| m == "*" || m == mode.as_str())
    }

    fn required_in(&self, mode: Mode) -> bool {
        self.required.iter().any(|m| m == "*" || m == mode.as_str())
    }
}

#[derive(Debug, Deserialize)]
struct Schema {
    keys: BTreeMap<String, KeySpec>,
}

fn schema() -> &'static Schema {
    static CELL: OnceLock<Schema> = OnceLock::new();
    CELL.get_or_init(|| toml::from_str(SCHEMA).expect("embedded scenario schema is valid"))
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Euler,
    Patch,
    LabInequality,
    LabKernel,
    LabCommutator,
    LabTangential,
    OsgoodTable,
    Hypotheses,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::Euler,
        Mode::Patch,
        Mode::LabInequality,
        Mode::LabKernel,
        Mode::LabCommutator,
        Mode::LabTangential,
        Mode::OsgoodTable,
        Mode::Hypotheses,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Euler => "euler",
            Mode::Patch => "patch",
            Mode::LabInequality => "lab-inequality",
            Mode::LabKernel => "lab-kernel",
            Mode::LabCommutator => "lab-commutator",
            Mode::LabTangential => "lab-tangential",
            Mode::OsgoodTable => "osgood-table",
            Mode::Hypotheses => "hypotheses",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, Value>) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out)?,
            Value::Array(a) if a.iter().any(|x| x.is_table()) => {
                return Err(config_err(format!("`{key}` must not be an array of tables")));
            }
            other => {
                out.insert(key, other);
            }
        }
    }
    Ok(())
}

fn type_name(ty: KeyType) -> &'static str {
    match ty {
        KeyType::Integer => "an integer",
        KeyType::Float => "a number",
        KeyType::String => "a string",
        KeyType::Bool => "a boolean",
        KeyType::FloatArray => "an array of numbers",
        KeyType::IntegerArray => "an array of integers",
    }
}

fn check_bounds(key: &str, spec: &KeySpec, x: f64) -> Result<()> {
    if let Some(lo) = spec.min {
        if x < lo {
            return Err(config_err(format!("`{key}` must be >= {lo}, got {x}")));
        }
    }
    if let Some(hi) = spec.max {
        if x > hi {
            return Err(config_err(format!("`{key}` must be <= {hi}, got {x}")));
        }
    }
    Ok(())
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// Type-check one value, widening integers to floats where a float is expected.
fn coerce(key: &str, spec: &KeySpec, v: &Value) -> Result<Value> {
    let wrong = || config_err(format!("`{key}` must be {}", type_name(spec.ty)));
    let finite = |x: f64| if x.is_finite() { Ok(x) } else { Err(config_err(format!("`{key}` must be finite, got {x}"))) };
    match spec.ty {
        KeyType::Integer => {
            let i = v.as_integer().ok_or_else(wrong)?;
            check_bounds(key, spec, i as f64)?;
            Ok(Value::Integer(i))
        }
        KeyType::Float => {
            let x = finite(as_float(v).ok_or_else(wrong)?)?;
            check_bounds(key, spec, x)?;
            Ok(Value::Float(x))
        }
        KeyType::String => {
            let s = v.as_str().ok_or_else(wrong)?;
            if let Some(choices) = &spec.choices {
                if !choices.iter().any(|c| c == s) {
                    return Err(config_err(format!("`{key}` must be one of {}, got \"{s}\"", choices.join(", "))));
                }
            }
            Ok(Value::String(s.to_string()))
        }
        KeyType::Bool => Ok(Value::Boolean(v.as_bool().ok_or_else(wrong)?)),
        KeyType::FloatArray | KeyType::IntegerArray => {
            let items = v.as_array().ok_or_else(wrong)?;
            if items.is_empty() {
                return Err(config_err(format!("`{key}` must not be empty")));
            }
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                if spec.ty == KeyType::IntegerArray {
                    let i = item.as_integer().ok_or_else(wrong)?;
                    check_bounds(key, spec, i as f64)?;
                    out.push(Value::Integer(i));
                } else {
                    let x = finite(as_float(item).ok_or_else(wrong)?)?;
                    check_bounds(key, spec, x)?;
                    out.push(Value::Float(x));
                }
            }
            Ok(Value::Array(out))
        }
    }
}

fn when_holds(cond: &str, values: &BTreeMap<String, Value>) -> bool {
    let (key, allowed) = cond.split_once('=').expect("schema `when` has the form key=v1|v2");
    match values.get(key).and_then(Value::as_str) {
        Some(v) => allowed.split('|').any(|a| a == v),
        None => false,
    }
}

/// Every applicable key with its resolved value, in dotted form.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    values: BTreeMap<String, Value>,
}

impl Resolved {
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    // The getters below are only called for keys the schema has already
    // type-checked and defaulted for the current mode.
    fn f(&self, key: &str) -> f64 {
        self.values.get(key).and_then(as_float).unwrap_or_else(|| panic!("resolved key {key} missing"))
    }

    fn opt_f(&self, key: &str) -> Option<f64> {
        self.values.get(key).and_then(as_float)
    }

    fn u(&self, key: &str) -> usize {
        self.values.get(key).and_then(Value::as_integer).unwrap_or_else(|| panic!("resolved key {key} missing")) as usize
    }

    fn s(&self, key: &str) -> &str {
        self.values.get(key).and_then(Value::as_str).unwrap_or_else(|| panic!("resolved key {key} missing"))
    }

    fn b(&self, key: &str) -> bool {
        self.values.get(key).and_then(Value::as_bool).unwrap_or(false)
    }

    fn fa(&self, key: &str) -> Vec<f64> {
        let a = self.values.get(key).and_then(Value::as_array).unwrap_or_else(|| panic!("resolved key {key} missing"));
        a.iter().filter_map(as_float).collect()
    }

    fn ia(&self, key: &str) -> Vec<i64> {
        let a = self.values.get(key).and_then(Value::as_array).unwrap_or_else(|| panic!("resolved key {key} missing"));
        a.iter().filter_map(Value::as_integer).collect()
    }

    fn nested(&self) -> toml::Table {
        let mut root = toml::Table::new();
        for (key, v) in &self.values {
            let parts: Vec<&str> = key.split('.').collect();
            let mut t = &mut root;
            for p in &parts[..parts.len() - 1] {
                t = t
                    .entry(p.to_string())
                    .or_insert_with(|| Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .expect("dotted keys never collide with values");
            }
            t.insert(parts[parts.len() - 1].to_string(), v.clone());
        }
        root
    }

    /// Re-runnable TOML with every default written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.nested()).expect("resolved values serialize")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.nested()).expect("resolved values serialize")
    }
}

/// Check `text` against the schema and fill in defaults and derived keys.
pub fn resolve(text: &str, seed_override: Option<u64>) -> Result<Resolved> {
    let raw: toml::Table = text.parse().map_err(|e: toml::de::Error| config_err(format!("cannot parse scenario: {}", e.message())))?;
    let mut given = BTreeMap::new();
    flatten("", raw, &mut given)?;
    if let Some(seed) = seed_override {
        let seed = i64::try_from(seed).map_err(|_| config_err(format!("seed {seed} exceeds {}", i64::MAX)))?;
        given.insert("seed".to_string(), Value::Integer(seed));
    }

    let keys = &schema().keys;
    let mode_str = match given.get("mode") {
        None => return Err(config_err("mode required")),
        Some(v) => coerce("mode", &keys["mode"], v)?,
    };
    let mode = Mode::parse(mode_str.as_str().unwrap_or_default()).expect("mode choices match Mode");

    for key in given.keys() {
        match keys.get(key) {
            None => return Err(config_err(format!("unknown key `{key}`"))),
            Some(spec) if !spec.applies(mode) => {
                return Err(config_err(format!("key `{key}` does not apply to mode={}", mode.as_str())));
            }
            _ => {}
        }
    }

    // unconditional keys first so that `when` conditions can see them
    let mut values = BTreeMap::new();
    for pass_conditional in [false, true] {
        for (key, spec) in keys.iter().filter(|(_, s)| s.applies(mode) && s.when.is_some() == pass_conditional) {
            let active = spec.when.as_deref().map_or(true, |w| when_holds(w, &values));
            match given.get(key) {
                Some(v) => {
                    if !active {
                        return Err(config_err(format!("key `{key}` only applies when {}", spec.when.as_deref().unwrap_or(""))));
                    }
                    values.insert(key.clone(), coerce(key, spec, v)?);
                }
                None if active => {
                    if spec.required_in(mode) {
                        return Err(config_err(format!("{key} required for mode={}", mode.as_str())));
                    }
                    if let Some(d) = &spec.default {
                        values.insert(key.clone(), coerce(key, spec, d)?);
                    }
                }
                None => {}
            }
        }
    }

    if mode == Mode::Euler && values.get("euler.initial").and_then(Value::as_str) == Some("random") && !given.contains_key("seed") {
        return Err(config_err("seed required for euler.initial=random"));
    }

    // derived keys
    let name = values["name"].as_str().unwrap_or_default().to_string();
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(config_err("`name` must be non-empty and contain no path separators"));
    }
    values.entry("seed".into()).or_insert(Value::Integer(0));
    values.entry("output".into()).or_insert_with(|| Value::String(format!("out/{name}")));
    for section in ["euler", "patch"] {
        if mode.as_str() == section {
            let t_end = values[&format!("{section}.t_end")].as_float().unwrap_or(1.0);
            values.entry(format!("{section}.cadence")).or_insert(Value::Float(t_end / 10.0));
        }
    }
    if mode == Mode::Patch {
        let half = values.get("grid.L").and_then(as_float).unwrap_or(TAU) / 2.0;
        values.entry("patch.center".into()).or_insert_with(|| Value::Array(vec![Value::Float(half), Value::Float(half)]));
    }
    Ok(Resolved { values })
}

/// Initial vorticity for the Euler mode; built only when the run starts.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    VortexPair { amp: f64, sigma: f64, separation: f64 },
    Gaussian { amp: f64, sigma: f64 },
    LaguerreGaussian { amp: f64, sigma: f64, order: usize },
    Cosine { amp: f64, k: (i32, i32) },
    Random { amp: f64, slope: f64, cutoff: f64, seed: u64 },
}

#[derive(Debug, Clone)]
pub enum Plan {
    Euler { cfg: SolverConfig, initial: Initial },
    Patch(PatchConfig),
    Inequality { grids: Vec<usize>, spec: SweepSpec, multiplier: Multiplier, s: f64, op: Operator },
    Commutator { grids: Vec<usize>, spec: SweepSpec, multiplier: Multiplier, mu: f64, f_cutoff: f64 },
    Tangential { grid: Grid, multiplier: Multiplier, sigma: f64, radius: f64, aspects: Vec<f64>, budget: usize, seed: u64 },
    Kernel { multiplier: Multiplier, rhos: Vec<f64>, cfg: KernelConfig },
    OsgoodTable { gamma: GrowthFunction, lower: f64, rho_max: f64, form: EnvelopeForm, f0: f64, c: f64, times: Vec<f64> },
    Hypotheses { multiplier: Multiplier, grid: Vec<f64> },
}

/// Optional pass/fail thresholds checked after a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Expectations {
    pub max_displacement_cells: Option<f64>,
    pub max_area_drift: Option<f64>,
    pub max_l2_drift: Option<f64>,
    pub max_linf_growth: Option<f64>,
    pub osgood_verdict: Option<OsgoodVerdict>,
    pub max_ratio: Option<f64>,
    pub max_refinement_change: Option<f64>,
    pub log_slope: Option<f64>,
    pub log_slope_tol: f64,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub mode: Mode,
    pub seed: u64,
    pub output: PathBuf,
    pub multiplier: Multiplier,
    pub resolved: Resolved,
    pub plan: Plan,
    pub expect: Expectations,
}

impl Scenario {
    /// Parse, validate and plan a scenario without running it.
    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Scenario> {
        let r = resolve(text, seed_override)?;
        let mode = Mode::parse(r.s("mode")).expect("resolved mode is valid");
        let seed = r.u("seed") as u64;
        let multiplier = build_multiplier(&r)?;
        let plan = build_plan(mode, &r, &multiplier, seed)?;
        let expect = Expectations {
            max_displacement_cells: r.opt_f("expect.max_displacement_cells"),
            max_area_drift: r.opt_f("expect.max_area_drift"),
            max_l2_drift: r.opt_f("expect.max_l2_drift"),
            max_linf_growth: r.opt_f("expect.max_linf_growth"),
            osgood_verdict: r.get("expect.osgood_verdict").and_then(Value::as_str).map(|v| match v {
                "Converges" => OsgoodVerdict::Converges,
                "Diverges" => OsgoodVerdict::Diverges,
                _ => OsgoodVerdict::Inconclusive,
            }),
            max_ratio: r.opt_f("expect.max_ratio"),
            max_refinement_change: r.opt_f("expect.max_refinement_change"),
            log_slope: r.opt_f("expect.log_slope"),
            log_slope_tol: r.opt_f("expect.log_slope_tol").unwrap_or(0.0),
        };
        Ok(Scenario {
            name: r.s("name").to_string(),
            description: r.s("description").to_string(),
            mode,
            seed,
            output: PathBuf::from(r.s("output")),
            multiplier,
            resolved: r,
            plan,
            expect,
        })
    }

    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        Scenario::parse(&text, seed_override).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn build_multiplier(r: &Resolved) -> Result<Multiplier> {
    let m = match r.s("multiplier.kind") {
        "constant" => Multiplier::constant(r.f("multiplier.value")),
        "iterated-log" => Multiplier::iterated_log(&r.fa("multiplier.exponents")),
        _ => {
            let interp = match r.s("multiplier.interp") {
                "linear" => TableInterp::Linear,
                "log-log" => TableInterp::LogLog,
                _ => TableInterp::LogLinear,
            };
            let nodes = r.fa("multiplier.r");
            let floor = r.f("multiplier.clamp_floor");
            if floor < nodes[0] {
                return Err(config_err(format!("multiplier.clamp_floor = {floor} lies below the first table node {}", nodes[0])));
            }
            Multiplier::table(nodes, r.fa("multiplier.m"), interp)
        }
    };
    m.and_then(|m| m.with_clamp_floor(r.f("multiplier.clamp_floor"))).map_err(|e| config_err(format!("multiplier: {e}")))
}

fn grid(r: &Resolved) -> Result<Grid> {
    Grid::new(r.u("grid.N"), r.f("grid.L")).map_err(|e| config_err(format!("grid: {e}")))
}

fn pair(r: &Resolved, key: &str) -> Result<(f64, f64)> {
    match r.fa(key)[..] {
        [a, b] if a <= b => Ok((a, b)),
        _ => Err(config_err(format!("`{key}` must be two increasing numbers [lo, hi]"))),
    }
}

fn dt_policy(r: &Resolved, section: &str) -> DtPolicy {
    if r.s(&format!("{section}.dt.policy")) == "fixed" {
        DtPolicy::Fixed { dt: r.f(&format!("{section}.dt.value")) }
    } else {
        DtPolicy::Cfl { safety: r.f(&format!("{section}.dt.safety")), dt_max: r.f(&format!("{section}.dt.max")) }
    }
}

fn sweep_spec(r: &Resolved, seed: u64, family: Family) -> Result<(Vec<usize>, SweepSpec)> {
    let grids: Vec<usize> = r.ia("lab.grids").into_iter().map(|n| n as usize).collect();
    let spec = SweepSpec { seed, count: r.u("lab.count"), slope: pair(r, "lab.slope_range")?, cutoff: pair(r, "lab.cutoff_range")?, family };
    let smallest = *grids.iter().min().expect("arrays are non-empty");
    let cap = smallest as f64 / 3.0;
    if spec.cutoff.1 >= cap {
        return Err(config_err(format!("lab.cutoff_range upper end {} must stay below N/3 = {cap:.2} on the coarsest grid", spec.cutoff.1)));
    }
    Ok((grids, spec))
}

fn build_plan(mode: Mode, r: &Resolved, m: &Multiplier, seed: u64) -> Result<Plan> {
    let m = m.clone();
    let plan = match mode {
        Mode::Euler => {
            let g = grid(r)?;
            let mut cfg = SolverConfig::new(g, m, r.f("euler.t_end"));
            cfg.cadence = r.f("euler.cadence");
            cfg.stepper = if r.s("euler.stepper") == "split-iterate" { Stepper::SplitIterate { inner: r.u("euler.inner") } } else { Stepper::Rk4 };
            cfg.dt = dt_policy(r, "euler");
            cfg.s_list = r.fa("euler.s_list");
            cfg.snapshot_every = r.u("euler.snapshot_every");
            cfg.track_modulus = r.b("euler.track_modulus");
            cfg.validate().map_err(as_config)?;
            let amp = r.f("euler.amp");
            let initial = match r.s("euler.initial") {
                "vortex-pair" => Initial::VortexPair { amp, sigma: r.f("euler.sigma"), separation: r.f("euler.separation") },
                "gaussian" => Initial::Gaussian { amp, sigma: r.f("euler.sigma") },
                "laguerre-gaussian" => Initial::LaguerreGaussian { amp, sigma: r.f("euler.sigma"), order: r.u("euler.order") },
                "cosine" => match r.ia("euler.k")[..] {
                    [a, b] if a.unsigned_abs().max(b.unsigned_abs()) < g.n() as u64 / 3 && (a, b) != (0, 0) => Initial::Cosine { amp, k: (a as i32, b as i32) },
                    _ => return Err(config_err("`euler.k` must be a nonzero pair of wavenumbers below N/3")),
                },
                _ => {
                    let cutoff = r.f("euler.cutoff");
                    if cutoff >= g.n() as f64 / 3.0 {
                        return Err(config_err(format!("euler.cutoff = {cutoff} must stay below N/3")));
                    }
                    Initial::Random { amp, slope: r.f("euler.slope"), cutoff, seed }
                }
            };
            if let Initial::VortexPair { separation, sigma, .. } = initial {
                if separation + 6.0 * sigma > g.length() {
                    return Err(config_err("euler.separation plus the vortex width does not fit in the box"));
                }
            }
            Plan::Euler { cfg, initial }
        }
        Mode::Patch => {
            let g = grid(r)?;
            let center = match r.fa("patch.center")[..] {
                [x, y] => (x, y),
                _ => return Err(config_err("`patch.center` must be a pair [x, y]")),
            };
            let radius = r.f("patch.radius");
            let shape = if r.s("patch.shape") == "ellipse" {
                PatchShape::ellipse(center, radius, r.f("patch.aspect"), r.f("patch.angle"))
            } else {
                PatchShape::circle(center, radius)
            };
            let mut cfg = PatchConfig::new(g, m, shape, r.f("patch.t_end"));
            cfg.a0 = r.f("patch.a0");
            cfg.cadence = r.f("patch.cadence");
            cfg.stepper = if r.s("patch.stepper") == "semi-lagrangian" { PatchStepper::SemiLagrangian { inner: r.u("patch.inner") } } else { PatchStepper::Rk4 };
            cfg.dt = dt_policy(r, "patch");
            cfg.mu_list = r.fa("patch.mu_list");
            cfg.epsilon = r.f("patch.epsilon");
            cfg.band_cells = r.f("patch.band_cells");
            cfg.smooth_cells = r.f("patch.smooth_cells");
            cfg.pair_budget = r.u("patch.pair_budget");
            cfg.seed = seed;
            cfg.grad_floor_fraction = r.f("patch.grad_floor_fraction");
            cfg.arc_samples = r.u("patch.arc_samples");
            cfg.arc_points = r.u("patch.arc_points");
            cfg.validate().map_err(as_config)?;
            Plan::Patch(cfg)
        }
        Mode::LabInequality => {
            let family = if r.s("lab.family") == "corner" { Family::Corner } else { Family::Random };
            let (grids, spec) = sweep_spec(r, seed, family)?;
            let op = match r.s("lab.operator") {
                "identity" => Operator::Identity,
                "riesz-11" => Operator::Riesz { i: 1, j: 1 },
                "riesz-22" => Operator::Riesz { i: 2, j: 2 },
                _ => Operator::Riesz { i: 1, j: 2 },
            };
            Plan::Inequality { grids, spec, multiplier: m, s: r.f("lab.s"), op }
        }
        Mode::LabCommutator => {
            let (grids, spec) = sweep_spec(r, seed, Family::Random)?;
            let f_cutoff = r.f("lab.f_cutoff");
            let smallest = *grids.iter().min().expect("arrays are non-empty");
            if f_cutoff >= smallest as f64 / 8.0 {
                return Err(config_err(format!("lab.f_cutoff = {f_cutoff} must stay below N/8 = {} on the coarsest grid", smallest as f64 / 8.0)));
            }
            Plan::Commutator { grids, spec, multiplier: m, mu: r.f("lab.mu"), f_cutoff }
        }
        Mode::LabTangential => {
            let g = grid(r)?;
            let radius = r.f("tangential.radius");
            let aspects = r.fa("tangential.aspects");
            // the major semi-axis is R·√aspect
            if radius * aspects.iter().fold(1.0f64, |a, b| a.max(*b)).sqrt() >= 0.45 * g.length() {
                return Err(config_err("the widest tangential ellipse does not fit inside the box"));
            }
            Plan::Tangential { grid: g, multiplier: m, sigma: r.f("tangential.sigma"), radius, aspects, budget: r.u("tangential.pair_budget"), seed }
        }
        Mode::LabKernel => {
            let (lo, hi) = (r.f("kernel.rho_min"), r.f("kernel.rho_max"));
            if lo >= hi {
                return Err(config_err("kernel.rho_min must be below kernel.rho_max"));
            }
            let cfg = KernelConfig {
                nodes_per_interval: r.u("kernel.nodes"),
                depth: r.u("kernel.depth"),
                tol: r.f("kernel.tol"),
                max_intervals: r.u("kernel.max_intervals"),
            };
            if cfg.max_intervals <= cfg.depth + 3 {
                return Err(config_err("kernel.max_intervals must exceed kernel.depth + 3"));
            }
            Plan::Kernel { multiplier: m, rhos: log_grid(lo, hi, r.u("kernel.per_decade")), cfg }
        }
        Mode::OsgoodTable => {
            let gamma = match r.s("osgood.gamma") {
                "linear" => GrowthFunction::Linear,
                "tilde" => GrowthFunction::Tilde(m),
                _ => GrowthFunction::Theta(m),
            };
            let (lower, rho_max, f0) = (r.f("osgood.lower"), r.f("osgood.rho_max"), r.f("osgood.f0"));
            if rho_max <= lower.ln() + 1.0 {
                return Err(config_err("osgood.rho_max must exceed ln(osgood.lower) + 1"));
            }
            if f0 < lower {
                return Err(config_err("osgood.f0 must be at least osgood.lower"));
            }
            let form = if r.s("osgood.form") == "two-term" { EnvelopeForm::TwoTerm } else { EnvelopeForm::Linear };
            let (t_end, n) = (r.f("osgood.t_end"), r.u("osgood.points"));
            let times = (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect();
            Plan::OsgoodTable { gamma, lower, rho_max, form, f0, c: r.f("osgood.c"), times }
        }
        Mode::Hypotheses => {
            let (lo, hi) = (r.f("hypotheses.r_min"), r.f("hypotheses.r_max"));
            let grid = if lo < hi { log_grid(lo, hi, r.u("hypotheses.per_decade")) } else { Vec::new() };
            if grid.len() < 100 || (hi / lo).log10() < 8.0 - 1e-9 {
                return Err(config_err("hypotheses grid needs at least 100 points spanning 8 decades"));
            }
            Plan::Hypotheses { multiplier: m, grid }
        }
    };
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_parses_and_covers_every_mode() {
        let s = schema();
        assert!(s.keys.len() > 80);
        for spec in s.keys.values() {
            if let Some(w) = &spec.when {
                let (k, _) = w.split_once('=').unwrap();
                assert!(s.keys.contains_key(k), "{w}");
            }
        }
    }

    #[test]
    fn resolved_toml_round_trips() {
        let text = "name = \"x\"\nmode = \"patch\"\n[grid]\nN = 64\n";
        let a = resolve(text, None).unwrap();
        let b = resolve(&a.to_toml(), None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.f("patch.cadence"), 0.1);
    }
}
