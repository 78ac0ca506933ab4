//! TOML solver configuration.
//!
//! Every offending key is reported with its full path; unknown keys come
//! with the closest known key as a suggestion.

use std::fmt;
use std::path::Path;

use serde::Serialize;
use toml::{Table, Value};

use crate::dynamics::{ModelParams, RunSpec};
use crate::error::{Result, SqgError};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::presets::{Forcing, ForcingMode, InitialCondition};
use crate::quadrature::QuadratureSpec;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSection {
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSection {
    pub gamma: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    pub adaptive: bool,
    pub cfl_safety: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputSection {
    pub dir: String,
    pub snapshot_every: f64,
    pub diagnostics_every: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisSection {
    pub beta: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub grid: GridSection,
    pub model: ModelSection,
    pub time: TimeSection,
    pub ic: InitialCondition,
    pub forcing: Forcing,
    pub output: OutputSection,
    pub analysis: AnalysisSection,
    pub quad: QuadratureSpec,
}

/// All problems found in one configuration text.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("\n"))
    }
}

impl std::error::Error for ConfigErrors {}

impl From<ConfigErrors> for SqgError {
    fn from(e: ConfigErrors) -> Self {
        SqgError::Config(e.to_string())
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("grid", &["n"]),
    ("model", &["gamma", "epsilon"]),
    ("time", &["dt", "t_end", "adaptive", "cfl_safety"]),
    (
        "ic",
        &[
            "kind",
            "k",
            "amplitude",
            "k_b",
            "amplitude_b",
            "k_min",
            "k_max",
            "l2_norm",
            "seed",
        ],
    ),
    ("forcing", &["kind", "modes", "k_min", "k_max", "l2_norm", "seed"]),
    ("output", &["dir", "snapshot_every", "diagnostics_every"]),
    ("analysis", &["beta", "alpha"]),
    ("quad", &["h_grid", "rho", "k_lat", "samples", "seed"]),
];

const IC_KEYS: &[(&str, &[&str])] = &[
    ("zero", &[]),
    ("single_mode", &["k", "amplitude"]),
    ("two_mode", &["k", "amplitude", "k_b", "amplitude_b"]),
    ("random_band", &["k_min", "k_max", "l2_norm", "seed"]),
];

const FORCING_KEYS: &[(&str, &[&str])] = &[
    ("none", &[]),
    ("modes", &["modes"]),
    ("random_band", &["k_min", "k_max", "l2_norm", "seed"]),
];

const MODE_KEYS: &[&str] = &["k1", "k2", "amplitude", "phase"];

fn known_paths() -> Vec<String> {
    SECTIONS
        .iter()
        .flat_map(|(s, keys)| keys.iter().map(move |k| format!("{s}.{k}")))
        .collect()
}

fn suggestion(path: &str, candidates: &[String]) -> Option<String> {
    candidates
        .iter()
        .map(|c| (strsim::levenshtein(path, c), c))
        .filter(|(d, c)| *d <= 2.max(c.len() / 3))
        .min_by_key(|(d, _)| *d)
        .map(|(_, c)| c.clone())
}

struct Reader {
    errors: Vec<String>,
}

impl Reader {
    fn error(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    fn unknown(&mut self, path: &str, candidates: &[String]) {
        match suggestion(path, candidates) {
            Some(s) => self.error(format!("unknown key `{path}` (did you mean `{s}`?)")),
            None => self.error(format!("unknown key `{path}`")),
        }
    }

    fn check_keys(&mut self, table: &Table, prefix: &str, allowed: &[&str]) {
        let candidates: Vec<String> = allowed.iter().map(|k| format!("{prefix}.{k}")).collect();
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                self.unknown(&format!("{prefix}.{key}"), &candidates);
            }
        }
    }

    fn float(&mut self, t: &Table, prefix: &str, key: &str, default: Option<f64>) -> f64 {
        match t.get(key) {
            Some(Value::Float(v)) => *v,
            Some(Value::Integer(v)) => *v as f64,
            Some(other) => {
                self.error(format!("{prefix}.{key} must be a number (got {})", other.type_str()));
                f64::NAN
            }
            None => default.unwrap_or_else(|| {
                self.error(format!("missing required key `{prefix}.{key}`"));
                f64::NAN
            }),
        }
    }

    fn uint(&mut self, t: &Table, prefix: &str, key: &str, default: Option<u64>) -> u64 {
        match t.get(key) {
            Some(Value::Integer(v)) if *v >= 0 => *v as u64,
            Some(other) => {
                self.error(format!("{prefix}.{key} must be a non-negative integer (got {other})"));
                0
            }
            None => default.unwrap_or_else(|| {
                self.error(format!("missing required key `{prefix}.{key}`"));
                0
            }),
        }
    }

    fn boolean(&mut self, t: &Table, prefix: &str, key: &str, default: bool) -> bool {
        match t.get(key) {
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                self.error(format!("{prefix}.{key} must be a boolean (got {other})"));
                default
            }
            None => default,
        }
    }

    fn string(&mut self, t: &Table, prefix: &str, key: &str, default: Option<&str>) -> String {
        match t.get(key) {
            Some(Value::String(s)) => s.clone(),
            Some(other) => {
                self.error(format!("{prefix}.{key} must be a string (got {other})"));
                String::new()
            }
            None => match default {
                Some(d) => d.to_string(),
                None => {
                    self.error(format!("missing required key `{prefix}.{key}`"));
                    String::new()
                }
            },
        }
    }

    fn int(&mut self, v: &Value, path: &str) -> i64 {
        match v {
            Value::Integer(i) => *i,
            other => {
                self.error(format!("{path} must be an integer (got {other})"));
                0
            }
        }
    }

    fn wavevector(&mut self, t: &Table, prefix: &str, key: &str) -> [i64; 2] {
        match t.get(key) {
            Some(Value::Array(a)) if a.len() == 2 => {
                let path = format!("{prefix}.{key}");
                [self.int(&a[0], &path), self.int(&a[1], &path)]
            }
            Some(other) => {
                self.error(format!("{prefix}.{key} must be a pair of integers (got {other})"));
                [0, 0]
            }
            None => {
                self.error(format!("missing required key `{prefix}.{key}`"));
                [0, 0]
            }
        }
    }

    fn require(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.error(msg());
        }
    }

    fn kind<'a>(
        &mut self,
        t: &Table,
        prefix: &str,
        options: &'a [(&'a str, &'a [&'a str])],
        default: Option<&str>,
    ) -> Option<(&'a str, &'a [&'a str])> {
        let kind = self.string(t, prefix, "kind", default);
        if kind.is_empty() && default.is_none() {
            return None;
        }
        let found = options.iter().find(|(k, _)| *k == kind).copied();
        if found.is_none() {
            let names: Vec<&str> = options.iter().map(|(k, _)| *k).collect();
            self.error(format!("{prefix}.kind `{kind}` is not one of {}", names.join(", ")));
        }
        found
    }
}

fn empty() -> Table {
    Table::new()
}

/// Parses and validates a configuration, collecting every error.
pub fn parse_config(text: &str) -> std::result::Result<SolverConfig, ConfigErrors> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigErrors(vec![format!("malformed configuration: {e}")]))?;
    let mut r = Reader { errors: Vec::new() };
    let known = known_paths();
    let section_names: Vec<String> = SECTIONS.iter().map(|(s, _)| s.to_string()).collect();

    for (key, value) in &root {
        if SECTIONS.iter().any(|(s, _)| s == key) {
            if !value.is_table() {
                r.error(format!("`{key}` must be a section"));
            }
            continue;
        }
        match value {
            Value::Table(t) if !t.is_empty() => {
                for inner in t.keys() {
                    r.unknown(&format!("{key}.{inner}"), &known);
                }
            }
            _ => r.unknown(key, &section_names),
        }
    }

    let section = |r: &mut Reader, name: &str, required: bool| -> Table {
        match root.get(name) {
            Some(Value::Table(t)) => t.clone(),
            Some(_) => empty(),
            None => {
                if required {
                    r.error(format!("missing required section `[{name}]`"));
                }
                empty()
            }
        }
    };

    let grid_t = section(&mut r, "grid", true);
    r.check_keys(&grid_t, "grid", SECTIONS[0].1);
    let n = r.uint(&grid_t, "grid", "n", if grid_t.is_empty() { Some(0) } else { None }) as usize;
    let grid = if grid_t.is_empty() {
        None
    } else {
        match Grid::new(n) {
            Ok(g) => Some(g),
            Err(e) => {
                r.error(format!("grid.n invalid: {}", strip_prefix(&e)));
                None
            }
        }
    };

    let model_t = section(&mut r, "model", true);
    r.check_keys(&model_t, "model", SECTIONS[1].1);
    let gamma = r.float(&model_t, "model", "gamma", model_t.is_empty().then_some(1.0));
    let epsilon = r.float(&model_t, "model", "epsilon", model_t.is_empty().then_some(0.0));
    r.require(gamma.is_nan() || (gamma > 0.0 && gamma <= 2.0), || {
        format!("model.gamma out of (0,2] (got {gamma})")
    });
    r.require(epsilon.is_nan() || (epsilon >= 0.0 && epsilon.is_finite()), || {
        format!("model.epsilon must be >= 0 (got {epsilon})")
    });

    let time_t = section(&mut r, "time", true);
    r.check_keys(&time_t, "time", SECTIONS[2].1);
    let placeholder = time_t.is_empty().then_some(1.0);
    let dt = r.float(&time_t, "time", "dt", placeholder);
    let t_end = r.float(&time_t, "time", "t_end", placeholder);
    let adaptive = r.boolean(&time_t, "time", "adaptive", false);
    let cfl_safety = r.float(&time_t, "time", "cfl_safety", Some(0.5));
    r.require(dt.is_nan() || dt > 0.0, || {
        format!("time.dt must be positive (got {dt})")
    });
    r.require(t_end.is_nan() || t_end > 0.0, || {
        format!("time.t_end must be positive (got {t_end})")
    });
    r.require(cfl_safety.is_nan() || (cfl_safety > 0.0 && cfl_safety <= 1.0), || {
        format!("time.cfl_safety out of (0,1] (got {cfl_safety})")
    });

    let ic_t = section(&mut r, "ic", true);
    let ic = read_ic(&mut r, &ic_t);

    let forcing_t = section(&mut r, "forcing", false);
    let forcing = read_forcing(&mut r, &forcing_t);

    let output_t = section(&mut r, "output", false);
    r.check_keys(&output_t, "output", SECTIONS[5].1);
    let dir = r.string(&output_t, "output", "dir", Some("out"));
    let snapshot_every = r.float(&output_t, "output", "snapshot_every", Some(t_end));
    let diagnostics_every = r.float(&output_t, "output", "diagnostics_every", Some(t_end));
    for (key, v) in [
        ("snapshot_every", snapshot_every),
        ("diagnostics_every", diagnostics_every),
    ] {
        r.require(v.is_nan() || v > 0.0, || {
            format!("output.{key} must be positive (got {v})")
        });
        if !adaptive && v > 0.0 && dt > 0.0 && !is_multiple(v, dt) {
            r.error(format!("output.{key} = {v} is not a whole number of steps dt = {dt}"));
        }
    }
    if !adaptive && t_end > 0.0 && dt > 0.0 && !is_multiple(t_end, dt) {
        r.error(format!("time.t_end = {t_end} is not a whole number of steps dt = {dt}"));
    }

    let analysis_t = section(&mut r, "analysis", false);
    r.check_keys(&analysis_t, "analysis", SECTIONS[6].1);
    let beta = r.float(&analysis_t, "analysis", "beta", Some(0.2));
    let alpha = r.float(&analysis_t, "analysis", "alpha", Some(0.5));
    r.require(beta.is_nan() || (beta > 0.0 && beta < 1.0), || {
        format!("analysis.beta out of (0,1) (got {beta})")
    });
    r.require(alpha.is_nan() || (alpha > 0.0 && alpha < 1.0), || {
        format!("analysis.alpha out of (0,1) (got {alpha})")
    });

    let quad_t = section(&mut r, "quad", false);
    r.check_keys(&quad_t, "quad", SECTIONS[7].1);
    let defaults = QuadratureSpec::default();
    let quad = QuadratureSpec {
        h_grid: r.uint(&quad_t, "quad", "h_grid", Some(defaults.h_grid as u64)) as usize,
        rho: quad_t
            .contains_key("rho")
            .then(|| r.float(&quad_t, "quad", "rho", None)),
        k_lat: r.uint(&quad_t, "quad", "k_lat", Some(defaults.k_lat as u64)) as usize,
        samples: r.uint(&quad_t, "quad", "samples", Some(defaults.samples as u64)) as usize,
        seed: r.uint(&quad_t, "quad", "seed", Some(defaults.seed)),
    };
    if let Err(e) = quad.validate() {
        r.error(strip_prefix(&e));
    }

    if let Some(g) = &grid {
        if let Some(ic) = &ic {
            if let Err(e) = ic.build(g) {
                r.error(format!("ic not realizable on n = {n}: {}", strip_prefix(&e)));
            }
        }
        if let Some(f) = &forcing {
            if let Err(e) = f.build(g) {
                r.error(format!("forcing not realizable on n = {n}: {}", strip_prefix(&e)));
            }
        }
    }

    if !r.errors.is_empty() {
        return Err(ConfigErrors(r.errors));
    }
    Ok(SolverConfig {
        grid: GridSection { n },
        model: ModelSection { gamma, epsilon },
        time: TimeSection {
            dt,
            t_end,
            adaptive,
            cfl_safety,
        },
        ic: ic.expect("no errors implies an initial condition"),
        forcing: forcing.expect("no errors implies a forcing"),
        output: OutputSection {
            dir,
            snapshot_every,
            diagnostics_every,
        },
        analysis: AnalysisSection { beta, alpha },
        quad,
    })
}

fn strip_prefix(e: &SqgError) -> String {
    match e {
        SqgError::Config(m) | SqgError::Domain(m) | SqgError::Range(m) | SqgError::Shape(m) => m.clone(),
        other => other.to_string(),
    }
}

fn is_multiple(span: f64, dt: f64) -> bool {
    let ratio = span / dt;
    (ratio - ratio.round()).abs() <= 1e-9 * ratio.abs().max(1.0)
}

fn read_ic(r: &mut Reader, t: &Table) -> Option<InitialCondition> {
    if t.is_empty() {
        return None;
    }
    let (kind, keys) = r.kind(t, "ic", IC_KEYS, None)?;
    let mut allowed = vec!["kind"];
    allowed.extend_from_slice(keys);
    r.check_keys(t, "ic", &allowed);
    Some(match kind {
        "zero" => InitialCondition::Zero,
        "single_mode" => InitialCondition::SingleMode {
            k: r.wavevector(t, "ic", "k"),
            amplitude: r.float(t, "ic", "amplitude", None),
        },
        "two_mode" => InitialCondition::TwoMode {
            k: r.wavevector(t, "ic", "k"),
            amplitude: r.float(t, "ic", "amplitude", None),
            k_b: r.wavevector(t, "ic", "k_b"),
            amplitude_b: r.float(t, "ic", "amplitude_b", None),
        },
        _ => InitialCondition::RandomBand {
            k_min: r.float(t, "ic", "k_min", None),
            k_max: r.float(t, "ic", "k_max", None),
            l2_norm: r.float(t, "ic", "l2_norm", None),
            seed: r.uint(t, "ic", "seed", Some(0)),
        },
    })
}

fn read_forcing(r: &mut Reader, t: &Table) -> Option<Forcing> {
    let (kind, keys) = r.kind(t, "forcing", FORCING_KEYS, Some("none"))?;
    let mut allowed = vec!["kind"];
    allowed.extend_from_slice(keys);
    r.check_keys(t, "forcing", &allowed);
    Some(match kind {
        "none" => Forcing::None,
        "modes" => {
            let mut modes = Vec::new();
            match t.get("modes") {
                Some(Value::Array(items)) => {
                    for (i, item) in items.iter().enumerate() {
                        let prefix = format!("forcing.modes[{i}]");
                        let Some(m) = item.as_table() else {
                            r.error(format!("{prefix} must be a table"));
                            continue;
                        };
                        r.check_keys(m, &prefix, MODE_KEYS);
                        let k1 = m.get("k1").map(|v| r.int(v, &format!("{prefix}.k1")));
                        let k2 = m.get("k2").map(|v| r.int(v, &format!("{prefix}.k2")));
                        if k1.is_none() || k2.is_none() {
                            r.error(format!("missing required key `{prefix}.k1`/`{prefix}.k2`"));
                        }
                        modes.push(ForcingMode {
                            k1: k1.unwrap_or(0),
                            k2: k2.unwrap_or(0),
                            amplitude: r.float(m, &prefix, "amplitude", None),
                            phase: r.float(m, &prefix, "phase", Some(0.0)),
                        });
                    }
                }
                Some(other) => r.error(format!("forcing.modes must be an array of tables (got {other})")),
                None => r.error("missing required key `forcing.modes`"),
            }
            Forcing::Modes { modes }
        }
        _ => Forcing::RandomBand {
            k_min: r.float(t, "forcing", "k_min", None),
            k_max: r.float(t, "forcing", "k_max", None),
            l2_norm: r.float(t, "forcing", "l2_norm", None),
            seed: r.uint(t, "forcing", "seed", Some(0)),
        },
    })
}

pub fn load_config(path: &Path) -> Result<SolverConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| SqgError::io(path, e))?;
    parse_config(&text).map_err(|e| SqgError::Config(format!("{}:\n{e}", path.display())))
}

impl SolverConfig {
    /// Canonical TOML text; parses back to an equal config.
    pub fn to_canonical(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n)
    }

    pub fn model_params(&self, grid: &Grid) -> Result<ModelParams> {
        ModelParams::new(self.model.gamma, self.model.epsilon, self.forcing.build(grid)?)
    }

    pub fn initial_state(&self, grid: &Grid) -> Result<SpectralField> {
        self.ic.build(grid)
    }

    pub fn run_spec(&self) -> RunSpec {
        RunSpec {
            dt: self.time.dt,
            t_end: self.time.t_end,
            adaptive_cfl: self.time.adaptive.then_some(self.time.cfl_safety),
            snapshot_every: self.output.snapshot_every,
            diagnostics_every: self.output.diagnostics_every,
            beta: self.analysis.beta,
            quad: self.quad.clone(),
            holder_in_diagnostics: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
n = 64

[model]
gamma = 1
epsilon = 0.01

[time]
dt = 1e-3
t_end = 1

[ic]
kind = "single_mode"
k = [1, 0]
amplitude = 1.0
"#;

    #[test]
    fn minimal_config_parses() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.n, 64);
        assert_eq!(c.model.gamma, 1.0);
        assert_eq!(c.forcing, Forcing::None);
        assert_eq!(c.output.snapshot_every, 1.0);
        assert_eq!(c.quad, QuadratureSpec::default());
        assert_eq!(
            c.ic,
            InitialCondition::SingleMode {
                k: [1, 0],
                amplitude: 1.0
            }
        );
    }

    #[test]
    fn gamma_out_of_range() {
        let text = MINIMAL.replace("gamma = 1", "gamma = 2.5");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(e.0.len(), 1);
        assert!(e.0[0].starts_with("model.gamma out of (0,2]"), "{e}");
    }

    #[test]
    fn misspelled_key_gets_a_suggestion() {
        let text = format!("modle.gamma = 1.0\n{MINIMAL}");
        let e = parse_config(&text).unwrap_err();
        assert!(
            e.to_string()
                .contains("unknown key `modle.gamma` (did you mean `model.gamma`?)"),
            "{e}"
        );
        let text = MINIMAL.replace("epsilon", "epsilom");
        let e = parse_config(&text).unwrap_err();
        assert!(e.to_string().contains("did you mean `model.epsilon`"), "{e}");
        assert!(e.to_string().contains("missing required key `model.epsilon`"), "{e}");
    }

    #[test]
    fn all_errors_are_collected() {
        let text = MINIMAL
            .replace("gamma = 1", "gamma = -1")
            .replace("dt = 1e-3", "dt = 0.3")
            .replace("n = 64", "n = 63");
        let e = parse_config(&text).unwrap_err();
        let s = e.to_string();
        assert!(s.contains("model.gamma"), "{s}");
        assert!(s.contains("grid.n"), "{s}");
        assert!(s.contains("time.t_end = 1 is not a whole number"), "{s}");
    }

    #[test]
    fn canonical_round_trip() {
        let text = r#"
[grid]
n = 32
[model]
gamma = 0.5
epsilon = 0.0
[time]
dt = 0.01
t_end = 2.0
adaptive = true
cfl_safety = 0.3
[ic]
kind = "random_band"
k_min = 1.0
k_max = 4.5
l2_norm = 2.0
seed = 11
[forcing]
kind = "modes"
[[forcing.modes]]
k1 = 1
k2 = 2
amplitude = 0.5
phase = 0.25
[[forcing.modes]]
k1 = 3
k2 = 0
amplitude = 1.5
[output]
dir = "runs/a"
snapshot_every = 0.5
diagnostics_every = 0.1
[quad]
h_grid = 32
rho = 0.05
"#;
        let c = parse_config(text).unwrap();
        let again = parse_config(&c.to_canonical()).unwrap();
        assert_eq!(c, again);
        let minimal = parse_config(MINIMAL).unwrap();
        assert_eq!(parse_config(&minimal.to_canonical()).unwrap(), minimal);
    }

    #[test]
    fn unknown_ic_kind_and_keys() {
        let text = MINIMAL.replace("single_mode", "triple_mode");
        let e = parse_config(&text).unwrap_err();
        assert!(e.to_string().contains("ic.kind `triple_mode` is not one of"), "{e}");
        let text = MINIMAL.replace("amplitude = 1.0", "amplitude = 1.0\nseed = 3");
        let e = parse_config(&text).unwrap_err();
        assert!(e.to_string().contains("unknown key `ic.seed`"), "{e}");
    }

    #[test]
    fn unrealizable_ic_is_rejected() {
        let text = MINIMAL.replace("k = [1, 0]", "k = [40, 0]");
        let e = parse_config(&text).unwrap_err();
        assert!(e.to_string().contains("ic not realizable"), "{e}");
    }
}
