//! Run configuration: a flat key-value file (TOML syntax, optional
//! `[system]`, `[numeric]` and `[output]` sections) overridden by flags.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use katok_core::katok::GOLDEN_FRACTION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyPsi,
    Simulate,
    KatokVerify,
    Orbits,
    Converge,
    Ellipsoid,
    WFamily,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyPsi => "verify-psi",
            Command::Simulate => "simulate",
            Command::KatokVerify => "katok-verify",
            Command::Orbits => "orbits",
            Command::Converge => "converge",
            Command::Ellipsoid => "ellipsoid",
            Command::WFamily => "w-family",
        }
    }

    fn default_format(self) -> Format {
        match self {
            Command::Orbits => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// System integrated by `simulate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    /// Round metric with the constant field `s mu`.
    Round,
    /// The magnetic Katok system `(g, s mu + d eta)` at level `k`.
    Katok,
    /// `H_{s,alpha}` with the field `s mu` at its level `c`.
    KatokH,
}

/// Every setting, all optional; used both for the file and for flags.
#[derive(Clone, Debug, Default, PartialEq, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Field strength `s`.
    #[arg(long)]
    pub s: Option<f64>,
    /// Rotation speed `alpha` (default `k^2 (sqrt 5 - 1) / 2`).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Energy level `k`.
    #[arg(long)]
    pub k: Option<f64>,
    /// `epsilon` of the `W` family.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Sequence length for `converge`.
    #[arg(long = "n", visible_alias = "N")]
    pub n: Option<u32>,
    /// Integrator tolerance; for `verify-psi`, a common gate for every check.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Number of seeds or random samples.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub period_cap: Option<f64>,
    #[arg(long)]
    pub rng_seed: Option<u64>,
    /// Shrink radius of the `W` domain (default `delta / 2`).
    #[arg(long)]
    pub shrink: Option<f64>,
    #[arg(long, value_enum)]
    pub system: Option<SystemKind>,
    /// Initial colatitude for `simulate`.
    #[arg(long)]
    pub theta0: Option<f64>,
    /// Initial longitude for `simulate`.
    #[arg(long)]
    pub phi0: Option<f64>,
    /// Initial heading, measured from `d/dphi` towards `d/dtheta`.
    #[arg(long)]
    pub heading: Option<f64>,
    /// Final time for `simulate`.
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Settings {
    /// `self` with every field set in `over` replaced.
    pub fn overridden_by(self, over: &Settings) -> Settings {
        macro_rules! pick {
            ($($f:ident),*) => { Settings { $($f: over.$f.clone().or(self.$f)),* } };
        }
        pick!(s, alpha, k, epsilon, n, tol, seeds, period_cap, rng_seed, shrink, system, theta0, phi0, heading, t_end, output, format)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub s: f64,
    pub alpha: f64,
    pub k: f64,
    pub epsilon: f64,
    pub n: u32,
    pub tol: Option<f64>,
    pub seeds: usize,
    pub period_cap: f64,
    pub rng_seed: u64,
    pub shrink: Option<f64>,
    pub system: SystemKind,
    pub theta0: f64,
    pub phi0: f64,
    pub heading: f64,
    pub t_end: f64,
    pub output: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: Option<PathBuf>,
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if let Some(p) = &self.file {
            write!(f, " in {}", p.display())?;
        }
        if let Some(l) = self.line {
            write!(f, " at line {l}")?;
        }
        if let Some(k) = &self.field {
            write!(f, ", field `{k}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

const SECTIONS: [&str; 3] = ["system", "numeric", "output"];

/// Line of the first `key = ...` assignment in `text`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

/// Parses a config file; `command` may appear as a top-level key.
pub fn parse_file(text: &str, path: Option<&Path>) -> Result<(Option<Command>, Settings), ConfigError> {
    let err = |line, field: Option<String>, message: String| ConfigError {
        file: path.map(Path::to_path_buf),
        line,
        field,
        message,
    };
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| text[..s.start].lines().count().max(1));
        err(line, None, e.message().to_string())
    })?;
    let mut flat = toml::Table::new();
    for (key, value) in table {
        match value {
            toml::Value::Table(inner) if SECTIONS.contains(&key.as_str()) => {
                for (k, v) in inner {
                    if flat.insert(k.clone(), v).is_some() {
                        return Err(err(line_of(text, &k), Some(k), "set more than once".into()));
                    }
                }
            }
            toml::Value::Table(_) => {
                return Err(err(
                    text.lines().position(|l| l.trim() == format!("[{key}]")).map(|i| i + 1),
                    Some(key),
                    format!("unknown section (expected one of {})", SECTIONS.join(", ")),
                ))
            }
            v => {
                if flat.insert(key.clone(), v).is_some() {
                    return Err(err(line_of(text, &key), Some(key), "set more than once".into()));
                }
            }
        }
    }
    let command = match flat.remove("command") {
        Some(v) => Some(Command::deserialize(v).map_err(|e| err(line_of(text, "command"), Some("command".into()), e.message().to_string()))?),
        None => None,
    };
    for (key, value) in &flat {
        let mut single = toml::Table::new();
        single.insert(key.clone(), value.clone());
        Settings::deserialize(single).map_err(|e| err(line_of(text, key), Some(key.clone()), e.message().to_string()))?;
    }
    let settings = Settings::deserialize(flat).map_err(|e| err(None, None, e.message().to_string()))?;
    Ok((command, settings))
}

pub fn load_file(path: &Path) -> Result<(Option<Command>, Settings), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        file: Some(path.to_path_buf()),
        line: None,
        field: None,
        message: e.to_string(),
    })?;
    parse_file(&text, Some(path))
}

impl RunConfig {
    /// Fills defaults and checks ranges. `source` is the config file text,
    /// used to point range errors at a line.
    pub fn resolve(command: Command, s: &Settings, source: Option<(&Path, &str)>) -> Result<Self, ConfigError> {
        let k = s.k.unwrap_or(0.125);
        let cfg = RunConfig {
            command,
            s: s.s.unwrap_or(1.0),
            alpha: s.alpha.unwrap_or(k * k * GOLDEN_FRACTION),
            k,
            epsilon: s.epsilon.unwrap_or(0.5),
            n: s.n.unwrap_or(16),
            tol: s.tol,
            seeds: s.seeds.unwrap_or(256),
            period_cap: s.period_cap.unwrap_or(100.0),
            rng_seed: s.rng_seed.unwrap_or(0),
            shrink: s.shrink,
            system: s.system.unwrap_or(SystemKind::Round),
            theta0: s.theta0.unwrap_or(1.0),
            phi0: s.phi0.unwrap_or(0.0),
            heading: s.heading.unwrap_or(0.3),
            t_end: s.t_end.unwrap_or(10.0),
            output: s.output.clone(),
            format: s.format.unwrap_or(command.default_format()),
        };
        let fail = |field: &str, message: &str| ConfigError {
            file: source.map(|(p, _)| p.to_path_buf()),
            line: source.and_then(|(_, t)| line_of(t, field)),
            field: Some(field.to_string()),
            message: message.to_string(),
        };
        let finite = |x: f64| x.is_finite();
        if !(finite(cfg.s) && cfg.s >= 0.0) {
            return Err(fail("s", "must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&cfg.alpha) {
            return Err(fail("alpha", "must lie in [0, 1)"));
        }
        if !(finite(cfg.k) && cfg.k > 0.0) {
            return Err(fail("k", "must be finite and > 0"));
        }
        if !(finite(cfg.epsilon) && cfg.epsilon > 0.0) {
            return Err(fail("epsilon", "must be finite and > 0"));
        }
        if !(1..=60).contains(&cfg.n) {
            return Err(fail("n", "must lie in 1..=60"));
        }
        if let Some(t) = cfg.tol {
            if !(t > 0.0 && t <= 1e-2) {
                return Err(fail("tol", "must lie in (0, 1e-2]"));
            }
        }
        if !(1..=1_000_000).contains(&cfg.seeds) {
            return Err(fail("seeds", "must lie in 1..=1000000"));
        }
        if !(finite(cfg.period_cap) && cfg.period_cap > 0.0 && cfg.period_cap <= 1e5) {
            return Err(fail("period_cap", "must lie in (0, 1e5]"));
        }
        if let Some(r) = cfg.shrink {
            if !(finite(r) && r > 0.0) {
                return Err(fail("shrink", "must be finite and > 0"));
            }
        }
        if !(finite(cfg.theta0) && cfg.theta0 > 0.0 && cfg.theta0 < std::f64::consts::PI) {
            return Err(fail("theta0", "must lie in (0, pi)"));
        }
        if !(finite(cfg.phi0) && finite(cfg.heading)) {
            return Err(fail("heading", "angles must be finite"));
        }
        if !(finite(cfg.t_end) && cfg.t_end > 0.0) {
            return Err(fail("t_end", "must be finite and > 0"));
        }
        Ok(cfg)
    }
}
