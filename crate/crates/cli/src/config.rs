//! Run configuration: a `key = value` file with `[section]` headers, plus
//! command-line overrides.
//!
//! ```text
//! [model]   f, g, z0, reference
//! [noise]   intensity, distribution, seed
//! [sim]     T, dt, drift_scheme, interpretation, K, h_max, jump_scheme, closed_form
//! [harness] n_paths, checkpoints, compare, control, values, statistic
//! [output]  directory, plot
//! ```
//!
//! `#` starts a comment. Keys may appear once. Everything except
//! `model.f` and `model.g` has a default (see [`DEFAULTS`]).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use jumpsde::expr::Var;
use jumpsde::harness::{Control, ErrorStatistic};
use jumpsde::{
    parse, AmplitudeDistribution, ClosedFormKind, Expr, Interpretation, RkScheme, SdeModel,
    SimConfig,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "JUMPSDE_OUT";

/// Every accepted key with its default (`None` means required or absent).
pub const DEFAULTS: &[(&str, &str, Option<&str>)] = &[
    ("model", "f", None),
    ("model", "g", None),
    ("model", "z0", Some("1")),
    ("model", "reference", None),
    ("noise", "intensity", Some("10")),
    ("noise", "distribution", Some("normal(0,1)")),
    ("noise", "seed", Some("42")),
    ("sim", "T", Some("1")),
    ("sim", "dt", Some("0.01")),
    ("sim", "drift_scheme", Some("rk2")),
    ("sim", "interpretation", Some("marcus")),
    ("sim", "K", Some("6")),
    ("sim", "h_max", Some("0.1")),
    ("sim", "jump_scheme", Some("rk2")),
    ("sim", "closed_form", None),
    ("harness", "n_paths", Some("100")),
    ("harness", "checkpoints", Some("")),
    ("harness", "compare", None),
    ("harness", "control", Some("dt")),
    ("harness", "values", None),
    ("harness", "statistic", Some("terminal_relative")),
    ("output", "directory", Some("out")),
    ("output", "plot", Some("off")),
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{origin}: invalid {section}.{key}: {message}")]
    Invalid {
        origin: Origin,
        section: &'static str,
        key: &'static str,
        message: String,
    },
    #[error("{path}: missing required key {section}.{key}")]
    Missing {
        path: PathBuf,
        section: &'static str,
        key: &'static str,
    },
}

/// Where a setting came from, for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Flag(&'static str),
    Environment(&'static str),
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag(flag) => write!(f, "flag {flag}"),
            Origin::Environment(var) => write!(f, "environment {var}"),
            Origin::Default => f.write_str("default"),
        }
    }
}

/// Command-line values that replace file settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub paths: Option<usize>,
    pub interpretation: Option<String>,
    pub out: Option<PathBuf>,
    pub plot: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub intensity: f64,
    pub distribution: AmplitudeDistribution,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessSpec {
    pub n_paths: usize,
    pub checkpoints: Vec<f64>,
    pub compare: Vec<Interpretation>,
    pub control: Control,
    pub statistic: ErrorStatistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub plot: bool,
}

/// A fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub model: SdeModel,
    pub noise: NoiseSpec,
    pub sim: SimConfig,
    pub harness: HarnessSpec,
    pub output: OutputSpec,
}

struct Entry {
    value: String,
    origin: Origin,
}

struct Settings {
    path: PathBuf,
    entries: BTreeMap<(&'static str, &'static str), Entry>,
}

fn lookup_key(section: &str, key: &str) -> Option<(&'static str, &'static str)> {
    DEFAULTS
        .iter()
        .find(|(s, k, _)| *s == section && *k == key)
        .map(|(s, k, _)| (*s, *k))
}

fn parse_file(path: &Path, text: &str) -> Result<Settings, ConfigError> {
    let syntax = |line: usize, message: String| ConfigError::Syntax {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut entries = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| syntax(line, format!("unterminated section header `{content}`")))?
                .trim();
            if !DEFAULTS.iter().any(|(s, _, _)| *s == name) {
                return Err(syntax(line, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| syntax(line, format!("expected `key = value`, found `{content}`")))?;
        let key = key.trim();
        let section = section
            .as_deref()
            .ok_or_else(|| syntax(line, format!("key `{key}` appears before any [section]")))?;
        let id = lookup_key(section, key)
            .ok_or_else(|| syntax(line, format!("unknown key `{key}` in [{section}]")))?;
        let entry = Entry {
            value: value.trim().to_string(),
            origin: Origin::File {
                path: path.to_path_buf(),
                line,
            },
        };
        if let Some(prev) = entries.insert(id, entry) {
            return Err(syntax(
                line,
                format!("duplicate key `{key}` (first set at {})", prev.origin),
            ));
        }
    }
    Ok(Settings {
        path: path.to_path_buf(),
        entries,
    })
}

impl Settings {
    fn set(&mut self, section: &'static str, key: &'static str, value: String, origin: Origin) {
        self.entries.insert((section, key), Entry { value, origin });
    }

    fn raw(&self, section: &'static str, key: &'static str) -> Option<(&str, Origin)> {
        if let Some(e) = self.entries.get(&(section, key)) {
            return Some((e.value.as_str(), e.origin.clone()));
        }
        DEFAULTS
            .iter()
            .find(|(s, k, _)| *s == section && *k == key)
            .and_then(|(_, _, d)| d.map(|d| (d, Origin::Default)))
    }

    fn invalid(
        &self,
        section: &'static str,
        key: &'static str,
        message: impl Into<String>,
    ) -> ConfigError {
        let origin = self
            .raw(section, key)
            .map(|(_, o)| o)
            .unwrap_or(Origin::Default);
        ConfigError::Invalid {
            origin,
            section,
            key,
            message: message.into(),
        }
    }

    fn required(&self, section: &'static str, key: &'static str) -> Result<&str, ConfigError> {
        self.raw(section, key)
            .map(|(v, _)| v)
            .ok_or(ConfigError::Missing {
                path: self.path.clone(),
                section,
                key,
            })
    }

    fn get<T: std::str::FromStr>(
        &self,
        section: &'static str,
        key: &'static str,
    ) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.required(section, key)?
            .parse()
            .map_err(|e: T::Err| self.invalid(section, key, e.to_string()))
    }

    fn number(&self, section: &'static str, key: &'static str) -> Result<f64, ConfigError> {
        let v = self.required(section, key)?;
        v.parse::<f64>()
            .map_err(|_| self.invalid(section, key, format!("`{v}` is not a number")))
    }

    fn expr(&self, section: &'static str, key: &'static str) -> Result<Option<Expr>, ConfigError> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, _)) => parse(v)
                .map(Some)
                .map_err(|e| self.invalid(section, key, e.to_string())),
        }
    }

    fn numbers(&self, section: &'static str, key: &'static str) -> Result<Vec<f64>, ConfigError> {
        let Some((v, _)) = self.raw(section, key) else {
            return Ok(Vec::new());
        };
        split_top_level(v)
            .into_iter()
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| self.invalid(section, key, format!("`{s}` is not a number")))
            })
            .collect()
    }
}

/// Splits on commas outside parentheses.
pub fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(s[start..].trim());
    parts
}

/// Jump-map settings that named interpretations draw on.
struct JumpDefaults {
    order: usize,
    scheme: RkScheme,
    h_max: f64,
    closed_form: Option<ClosedFormKind>,
}

/// Resolves `ito`, `df`, `marcus`, `closed` against the `[sim]` keys, or
/// parses the compact `df:6` / `marcus:rk4:0.01` / `closed:linear(1,0)` forms.
fn resolve_interpretation(value: &str, d: &JumpDefaults) -> Result<Interpretation, String> {
    let value = value.trim();
    let interp = if value.contains(':') {
        value.parse::<Interpretation>().map_err(|e| e.to_string())?
    } else {
        match value.to_ascii_lowercase().as_str() {
            "ito" => Interpretation::Ito,
            "df" | "series" => Interpretation::DiPaolaFalsone { order: d.order },
            "marcus" | "ode" => Interpretation::MarcusOde {
                scheme: d.scheme,
                h_max: d.h_max,
            },
            "closed" => Interpretation::MarcusClosedForm(
                d.closed_form
                    .ok_or("`closed` needs sim.closed_form, e.g. linear(1,0)")?,
            ),
            other => {
                return Err(format!(
                    "unknown interpretation `{other}` (ito, df, marcus, closed or a compact form such as df:6)"
                ))
            }
        }
    };
    interp.validate().map_err(|e| e.to_string())?;
    Ok(interp)
}

impl RunSpec {
    /// Reads `path`, applies `overrides` and the output-directory
    /// environment variable, and validates everything.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<RunSpec, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let env_out = std::env::var(OUT_DIR_ENV).ok().filter(|v| !v.is_empty());
        RunSpec::from_text(path, &text, overrides, env_out.as_deref())
    }

    /// Like [`RunSpec::load`] with the file contents and environment given.
    /// The environment only replaces the built-in default directory.
    pub fn from_text(
        path: &Path,
        text: &str,
        overrides: &Overrides,
        env_out: Option<&str>,
    ) -> Result<RunSpec, ConfigError> {
        let mut s = parse_file(path, text)?;
        if let Some(dir) = env_out {
            if !s.entries.contains_key(&("output", "directory")) {
                s.set(
                    "output",
                    "directory",
                    dir.to_string(),
                    Origin::Environment(OUT_DIR_ENV),
                );
            }
        }
        if let Some(seed) = overrides.seed {
            s.set("noise", "seed", seed.to_string(), Origin::Flag("--seed"));
        }
        if let Some(dt) = overrides.dt {
            s.set("sim", "dt", dt.to_string(), Origin::Flag("--dt"));
        }
        if let Some(paths) = overrides.paths {
            s.set(
                "harness",
                "n_paths",
                paths.to_string(),
                Origin::Flag("--paths"),
            );
        }
        if let Some(interp) = &overrides.interpretation {
            s.set(
                "sim",
                "interpretation",
                interp.clone(),
                Origin::Flag("--interp"),
            );
        }
        if let Some(out) = &overrides.out {
            s.set(
                "output",
                "directory",
                out.display().to_string(),
                Origin::Flag("--out"),
            );
        }
        if overrides.plot {
            s.set("output", "plot", "on".into(), Origin::Flag("--plot"));
        }
        build(&s)
    }
}

fn build(s: &Settings) -> Result<RunSpec, ConfigError> {
    let f = s.expr("model", "f")?.ok_or(ConfigError::Missing {
        path: s.path.clone(),
        section: "model",
        key: "f",
    })?;
    let g = s.expr("model", "g")?.ok_or(ConfigError::Missing {
        path: s.path.clone(),
        section: "model",
        key: "g",
    })?;
    let z0 = s.number("model", "z0")?;
    let reference = s.expr("model", "reference")?;
    let culprit = if f.references(Var::C) {
        "f"
    } else if g.references(Var::C) {
        "g"
    } else if reference.as_ref().is_some_and(|r| r.references(Var::X)) {
        "reference"
    } else {
        "z0"
    };
    let model = SdeModel::new(f, g, z0, reference)
        .map_err(|e| s.invalid("model", culprit, e.to_string()))?;

    let intensity = s.number("noise", "intensity")?;
    if !(intensity.is_finite() && intensity >= 0.0) {
        return Err(s.invalid("noise", "intensity", "must be finite and ≥ 0"));
    }
    let distribution: AmplitudeDistribution = s.get("noise", "distribution")?;
    distribution
        .validate()
        .map_err(|e| s.invalid("noise", "distribution", e.to_string()))?;
    let noise = NoiseSpec {
        intensity,
        distribution,
        seed: s.get("noise", "seed")?,
    };

    let order: usize = s
        .required("sim", "K")?
        .parse()
        .map_err(|_| s.invalid("sim", "K", "must be an integer with K ≥ 1"))?;
    if order < 1 {
        return Err(s.invalid("sim", "K", "K ≥ 1 required for the series truncation"));
    }
    let h_max = s.number("sim", "h_max")?;
    if !(h_max.is_finite() && h_max > 0.0) {
        return Err(s.invalid("sim", "h_max", "h_max must be finite and > 0"));
    }
    let closed_form = match s.raw("sim", "closed_form") {
        None => None,
        Some((v, _)) => Some(
            v.parse::<ClosedFormKind>()
                .map_err(|e| s.invalid("sim", "closed_form", e.to_string()))?,
        ),
    };
    let defaults = JumpDefaults {
        order,
        scheme: s.get("sim", "jump_scheme")?,
        h_max,
        closed_form,
    };
    let interpretation = resolve_interpretation(s.required("sim", "interpretation")?, &defaults)
        .map_err(|e| s.invalid("sim", "interpretation", e))?;
    let sim = SimConfig {
        dt: s.number("sim", "dt")?,
        drift_scheme: s.get("sim", "drift_scheme")?,
        horizon: s.number("sim", "T")?,
        interpretation,
    };
    sim.validate().map_err(|e| {
        let key = if sim.horizon > 0.0 { "dt" } else { "T" };
        s.invalid("sim", key, e.to_string())
    })?;

    let n_paths: usize = s.get("harness", "n_paths")?;
    if n_paths < 1 {
        return Err(s.invalid("harness", "n_paths", "n_paths ≥ 1 required"));
    }
    let checkpoints = s.numbers("harness", "checkpoints")?;
    if !checkpoints.windows(2).all(|w| w[0] < w[1]) {
        return Err(s.invalid("harness", "checkpoints", "must be strictly increasing"));
    }
    if let Some(c) = checkpoints
        .iter()
        .find(|&&c| !(0.0..=sim.horizon).contains(&c) || !sim.on_grid(c))
    {
        return Err(s.invalid(
            "harness",
            "checkpoints",
            format!("{c} is not a grid time in [0, T]"),
        ));
    }
    let compare = match s.raw("harness", "compare") {
        Some((v, _)) => split_top_level(v)
            .into_iter()
            .map(|item| resolve_interpretation(item, &defaults))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| s.invalid("harness", "compare", e))?,
        None => vec![
            Interpretation::Ito,
            Interpretation::DiPaolaFalsone { order },
            Interpretation::MarcusOde {
                scheme: defaults.scheme,
                h_max,
            },
        ],
    };
    if compare.is_empty() {
        return Err(s.invalid("harness", "compare", "at least one interpretation required"));
    }
    let control = build_control(s, &sim)?;
    let statistic: ErrorStatistic = s.get("harness", "statistic")?;

    let directory = PathBuf::from(s.required("output", "directory")?);
    let plot = match s.required("output", "plot")? {
        "on" | "true" | "yes" => true,
        "off" | "false" | "no" => false,
        other => {
            return Err(s.invalid(
                "output",
                "plot",
                format!("expected on or off, found `{other}`"),
            ))
        }
    };
    Ok(RunSpec {
        model,
        noise,
        sim,
        harness: HarnessSpec {
            n_paths,
            checkpoints,
            compare,
            control,
            statistic,
        },
        output: OutputSpec { directory, plot },
    })
}

fn build_control(s: &Settings, sim: &SimConfig) -> Result<Control, ConfigError> {
    let kind = s.required("harness", "control")?;
    let mut values = s.numbers("harness", "values")?;
    let defaulted = values.is_empty();
    let control = match kind {
        "dt" => {
            if defaulted {
                values = vec![0.04, 0.02, 0.01, 0.005];
            }
            Control::Dt(values.clone())
        }
        "h_max" => {
            if defaulted {
                values = vec![0.2, 0.1, 0.05, 0.025];
            }
            if !matches!(sim.interpretation, Interpretation::MarcusOde { .. }) {
                return Err(s.invalid(
                    "harness",
                    "control",
                    "an h_max study needs interpretation = marcus",
                ));
            }
            Control::HMax(values.clone())
        }
        "K" => {
            if defaulted {
                values = (1..=8).map(f64::from).collect();
            }
            if values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
                return Err(s.invalid("harness", "values", "K values must be integers with K ≥ 1"));
            }
            Control::Order(values.iter().map(|&v| v as usize).collect())
        }
        other => {
            return Err(s.invalid(
                "harness",
                "control",
                format!("expected dt, K or h_max, found `{other}`"),
            ))
        }
    };
    if values.len() < 3 {
        return Err(s.invalid("harness", "values", "at least 3 control values required"));
    }
    let increasing = values.windows(2).all(|w| w[0] < w[1]);
    let decreasing = values.windows(2).all(|w| w[0] > w[1]);
    if !(increasing || decreasing) || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(s.invalid(
            "harness",
            "values",
            "values must be positive and strictly monotone",
        ));
    }
    Ok(control)
}
