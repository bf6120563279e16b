//! `key = value` run and sweep configuration.

use std::path::PathBuf;

use thiserror::Error;

use crate::harness::presets::{find_preset, SchemeKind, DEFAULT_SEED, PERTURBATION_AMPLITUDE};
use crate::harness::sweep::{Reference, SweepScheme, SweepSpec};
use crate::model::ModelParams;
use crate::scheme_bcp::SchemeOptions;

pub const DEFAULT_GRID: usize = 128;
pub const DEFAULT_LOG_STRIDE: usize = 10;
pub const DEFAULT_OUTPUT_DIR: &str = "pfbcp-out";

/// A configuration problem tied to a key and, for file input, a line.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(line: Option<usize>, key: &str, message: impl Into<String>) -> Self {
        Self {
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }
}

/// One `key = value` assignment and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: Option<usize>,
    pub key: String,
    pub value: String,
}

/// Split config text into entries, skipping blanks and `#` comments.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::new(Some(i + 1), line, "expected 'key = value'"));
        };
        let key = k.trim();
        if key.is_empty() {
            return Err(ConfigError::new(Some(i + 1), "", "missing key before '='"));
        }
        out.push(Entry {
            line: Some(i + 1),
            key: key.to_string(),
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

/// Parse a command-line `key=value` override.
pub fn parse_override(s: &str) -> Result<Entry, ConfigError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| ConfigError::new(None, s, "override must be written key=value"))?;
    Ok(Entry {
        line: None,
        key: k.trim().to_string(),
        value: v.trim().to_string(),
    })
}

fn parse_num<T: std::str::FromStr>(e: &Entry) -> Result<T, ConfigError> {
    e.value
        .parse()
        .map_err(|_| ConfigError::new(e.line, &e.key, format!("cannot parse '{}'", e.value)))
}

fn parse_list(e: &Entry) -> Result<Vec<f64>, ConfigError> {
    e.value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| ConfigError::new(e.line, &e.key, format!("cannot parse '{s}'")))
        })
        .collect()
}

fn parse_bool(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        v => Err(ConfigError::new(e.line, &e.key, format!("expected true or false, got '{v}'"))),
    }
}

/// Keys shared by run and sweep configs. Returns `false` for other keys.
fn apply_common(e: &Entry, params: &mut ModelParams, opts: &mut SchemeOptions, n: &mut usize) -> Result<bool, ConfigError> {
    match e.key.as_str() {
        "epsilon" => params.epsilon = parse_num(e)?,
        "alpha" => params.alpha = parse_num(e)?,
        "mobility" => params.mobility = parse_num(e)?,
        "lambda" => params.lambda = parse_num(e)?,
        "nu" => params.nu = parse_num(e)?,
        "beta" => params.beta = parse_num(e)?,
        "tol" => opts.tol = parse_num(e)?,
        "max_iter" => opts.max_iter = parse_num(e)?,
        "n" => *n = parse_num(e)?,
        _ => return Ok(false),
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub scheme: SchemeKind,
    pub n: usize,
    pub params: ModelParams,
    /// One run per entry.
    pub dts: Vec<f64>,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub seed: u64,
    pub phi_mean: f64,
    pub amplitude: f64,
    pub output_dir: PathBuf,
    pub opts: SchemeOptions,
    pub log_stride: usize,
    /// Lift the default time cap of presets.
    pub extended: bool,
}

impl RunConfig {
    fn blank(output_dir: PathBuf) -> Self {
        RunConfig {
            preset: None,
            scheme: SchemeKind::Cn,
            n: DEFAULT_GRID,
            params: ModelParams::default(),
            dts: vec![],
            t_end: f64::NAN,
            snapshot_times: vec![],
            seed: DEFAULT_SEED,
            phi_mean: 0.0,
            amplitude: PERTURBATION_AMPLITUDE,
            output_dir,
            opts: SchemeOptions::default(),
            log_stride: DEFAULT_LOG_STRIDE,
            extended: false,
        }
    }

    /// Build from entries. `preset` is applied first and `extended` before
    /// the preset's end time is read, so every other key overrides it.
    pub fn from_entries(entries: &[Entry], default_output_dir: PathBuf) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::blank(default_output_dir);
        let last = |key: &str| entries.iter().rev().find(|e| e.key == key);
        let extended = last("extended").map(parse_bool).transpose()?.unwrap_or(false);
        let mut have_dt = false;
        let mut have_t_end = false;
        let mut have_scheme = false;
        if let Some(e) = last("preset") {
            let p = find_preset(&e.value).ok_or_else(|| ConfigError::new(e.line, "preset", format!("no preset named '{}'", e.value)))?;
            cfg.preset = Some(p.name.to_string());
            cfg.scheme = p.scheme;
            cfg.params = p.params;
            cfg.dts = p.dts.clone();
            cfg.t_end = p.t_end(extended);
            cfg.snapshot_times = p.snapshots(extended);
            cfg.seed = p.seed;
            cfg.phi_mean = p.phi_mean;
            cfg.amplitude = p.amplitude;
            (have_dt, have_t_end, have_scheme) = (true, true, true);
        }
        cfg.extended = extended;
        for e in entries {
            if apply_common(e, &mut cfg.params, &mut cfg.opts, &mut cfg.n)? {
                continue;
            }
            match e.key.as_str() {
                "preset" | "extended" => {}
                "scheme" => {
                    cfg.scheme = e.value.parse().map_err(|m| ConfigError::new(e.line, "scheme", m))?;
                    have_scheme = true;
                }
                "dt" => {
                    cfg.dts = parse_list(e)?;
                    have_dt = true;
                }
                "t_end" => {
                    cfg.t_end = parse_num(e)?;
                    have_t_end = true;
                }
                "snapshots" => cfg.snapshot_times = parse_list(e)?,
                "seed" => cfg.seed = parse_num(e)?,
                "phi_mean" => cfg.phi_mean = parse_num(e)?,
                "amplitude" => cfg.amplitude = parse_num(e)?,
                "output_dir" => cfg.output_dir = PathBuf::from(&e.value),
                "log_stride" => cfg.log_stride = parse_num(e)?,
                other => return Err(ConfigError::new(e.line, other, "unknown key")),
            }
        }
        for (have, key) in [(have_scheme, "scheme"), (have_dt, "dt"), (have_t_end, "t_end")] {
            if !have {
                return Err(ConfigError::new(None, key, "required key is missing"));
            }
        }
        cfg.validate(entries)?;
        Ok(cfg)
    }

    fn validate(&self, entries: &[Entry]) -> Result<(), ConfigError> {
        let line = |key: &str| entries.iter().rev().find(|e| e.key == key).and_then(|e| e.line);
        let err = |key: &str, m: String| Err(ConfigError::new(line(key), key, m));
        if let Err(p) = self.params.validate() {
            return err(p.name, format!("{} {}", p.value, p.reason));
        }
        if self.dts.is_empty() {
            return err("dt", "at least one time step is required".into());
        }
        if let Some(dt) = self.dts.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return err("dt", format!("must be positive, got {dt}"));
        }
        if !(self.t_end.is_finite() && self.dts.iter().all(|dt| self.t_end >= *dt)) {
            return err("t_end", format!("must be at least dt, got {}", self.t_end));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= self.t_end)) {
            return err("snapshots", format!("time {t} outside [0, {}]", self.t_end));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return err("amplitude", format!("must be non-negative, got {}", self.amplitude));
        }
        if !self.phi_mean.is_finite() {
            return err("phi_mean", "must be finite".into());
        }
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return err("n", format!("grid size must be even and at least 4, got {}", self.n));
        }
        if !(self.opts.tol.is_finite() && self.opts.tol > 0.0) {
            return err("tol", format!("must be positive, got {}", self.opts.tol));
        }
        if self.opts.max_iter == 0 {
            return err("max_iter", "must be positive".into());
        }
        if self.log_stride == 0 {
            return err("log_stride", "must be positive".into());
        }
        if self.params.beta > 0.0 && self.scheme != SchemeKind::CnElectric {
            return err("beta", format!("an imposed field needs scheme = cn-electric, not {}", self.scheme));
        }
        Ok(())
    }
}

/// Parse a run configuration from file text plus command-line overrides.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, &[], PathBuf::from(DEFAULT_OUTPUT_DIR))
}

pub fn parse_config_with(text: &str, overrides: &[Entry], default_output_dir: PathBuf) -> Result<RunConfig, ConfigError> {
    let mut entries = parse_entries(text)?;
    entries.extend_from_slice(overrides);
    RunConfig::from_entries(&entries, default_output_dir)
}

/// A convergence sweep request: `table = 1|2|3` selects the defaults, other
/// keys override them.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub spec: SweepSpec,
    pub output: Option<PathBuf>,
}

pub fn parse_sweep_config(text: &str, overrides: &[Entry]) -> Result<SweepConfig, ConfigError> {
    let mut entries = parse_entries(text)?;
    entries.extend_from_slice(overrides);
    let last = |key: &str| entries.iter().rev().find(|e| e.key == key);
    let table_entry = last("table").ok_or_else(|| ConfigError::new(None, "table", "required key is missing"))?;
    let table: u8 = parse_num(table_entry)?;
    let scheme = match last("scheme") {
        None => None,
        Some(e) => Some(match e.value.as_str() {
            "cn" => SweepScheme::Cn,
            "bdf2" => SweepScheme::Bdf2,
            "ns" => SweepScheme::Ns,
            v => return Err(ConfigError::new(e.line, "scheme", format!("expected cn, bdf2 or ns, got '{v}'"))),
        }),
    };
    let mut spec = match (table, scheme) {
        (1, s) => SweepSpec::table1(s.unwrap_or(SweepScheme::Cn)),
        (2, None | Some(SweepScheme::Ns)) => SweepSpec::table2(),
        (3, s) => SweepSpec::table3(s.unwrap_or(SweepScheme::Cn)),
        (2, Some(_)) => return Err(ConfigError::new(last("scheme").and_then(|e| e.line), "scheme", "table 2 uses the coupled scheme")),
        _ => return Err(ConfigError::new(table_entry.line, "table", format!("expected 1, 2 or 3, got {table}"))),
    };
    let mut output = None;
    for e in &entries {
        if apply_common(e, &mut spec.params, &mut spec.opts, &mut spec.n)? {
            continue;
        }
        match e.key.as_str() {
            "table" | "scheme" => {}
            "dt" => spec.dts = parse_list(e)?,
            "t_end" => spec.t_end = parse_num(e)?,
            "benchmark_dt" => spec.reference = Reference::Benchmark { dt: parse_num(e)? },
            "output" => output = Some(PathBuf::from(&e.value)),
            other => return Err(ConfigError::new(e.line, other, "unknown key")),
        }
    }
    spec.validate()
        .map_err(|m| ConfigError::new(None, "sweep", m.to_string()))?;
    Ok(SweepConfig { spec, output })
}
