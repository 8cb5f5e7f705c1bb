//! Scenario configuration: defaults, then a `key = value` file, then
//! `KSWAVE_OUT`, then command-line flags.

use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, ValueEnum};
use kswave_core::ModelParams;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Closed-form D_u = 0 waves, one file per D_w
    Exact,
    /// Shock-limit profile
    Limit,
    /// Singular orbit: slow segment, jump and fast fibre
    Singular,
    /// Critical and perturbed slow manifolds
    Manifolds,
    /// Shot heteroclinic orbits, one per eps
    Shoot,
    /// Convergence table of the shot orbits in eps
    Converge,
    /// Method-of-lines simulation of the PDE
    Pde,
    /// Fast self-checks of the closed forms
    Validate,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Exact => "exact",
            Command::Limit => "limit",
            Command::Singular => "singular",
            Command::Manifolds => "manifolds",
            Command::Shoot => "shoot",
            Command::Converge => "converge",
            Command::Pde => "pde",
            Command::Validate => "validate",
        }
    }

    fn from_key(s: &str) -> Option<Self> {
        Self::from_str(s, true).ok()
    }

    /// eps list used when none is given.
    pub fn default_eps(self) -> Vec<f64> {
        match self {
            Command::Exact | Command::Validate => vec![1.0, 0.5, 0.25, 0.1, 0.05],
            Command::Converge => vec![1e-1, 3e-2, 1e-2, 3e-3],
            Command::Pde => vec![0.05],
            _ => vec![0.1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Exact,
    Limit,
    Step,
    Background,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeConfig {
    pub xmin: f64,
    pub xmax: f64,
    pub cells: usize,
    pub t_end: f64,
    pub snapshot_every: f64,
    pub level: f64,
    pub init: InitKind,
    pub x0: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub command: Command,
    /// Model parameters; `eps` holds the first entry of `eps_list`.
    pub params: ModelParams,
    /// Strictly positive, sorted descending, without duplicates.
    pub eps_list: Vec<f64>,
    pub zmin: f64,
    pub zmax: f64,
    pub n: usize,
    pub delta: Option<f64>,
    pub u_tilde_start: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
    pub pde: PdeConfig,
    #[serde(skip)]
    pub out: PathBuf,
    pub format: Format,
}

impl ScenarioConfig {
    /// SHA-256 of the resolved configuration (output directory excluded).
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Flags accepted by the `kswave` binary. Every flag may also be given as a
/// `key = value` line in the file passed to `--config`.
#[derive(Debug, Parser)]
#[command(
    name = "kswave",
    version,
    about = "Travelling waves of a singularly perturbed Keller-Segel model",
    allow_negative_numbers = true
)]
struct Cli {
    /// Scenario to run (may also come from the config file)
    #[arg(value_enum)]
    command: Option<Command>,
    /// Flat `key = value` file; `#` starts a comment
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Chemotactic sensitivity chi [default: 2]
    #[arg(long)]
    chi: Option<String>,
    /// Consumption rate K [default: 1]
    #[arg(long)]
    k: Option<String>,
    /// Wave speed c [default: 2]
    #[arg(long)]
    c: Option<String>,
    /// Shift constant A of the closed-form wave [default: 4]
    #[arg(long)]
    a: Option<String>,
    /// Right end state u_r [default: 1]
    #[arg(long)]
    ur: Option<String>,
    /// Diffusivity ratio mu, D_u = mu eps [default: 1]
    #[arg(long)]
    mu: Option<String>,
    /// Comma-separated eps (= D_w) values [default: depends on command]
    #[arg(long, visible_alias = "dw")]
    eps: Option<String>,
    /// Left end of the z grid [default: -10]
    #[arg(long)]
    zmin: Option<String>,
    /// Right end of the z grid [default: 5]
    #[arg(long)]
    zmax: Option<String>,
    /// Number of z samples [default: 601]
    #[arg(long)]
    n: Option<String>,
    /// Kick off the repelling manifold [default: 1e-8 relative]
    #[arg(long)]
    delta: Option<String>,
    /// Start of the slow segment of shot profiles [default: c u_r / 2]
    #[arg(long = "u-tilde-start")]
    u_tilde_start: Option<String>,
    /// Relative integration tolerance [default: 1e-10]
    #[arg(long)]
    rtol: Option<String>,
    /// Absolute integration tolerance [default: 1e-12]
    #[arg(long)]
    atol: Option<String>,
    /// Left end of the PDE domain [default: -30]
    #[arg(long)]
    xmin: Option<String>,
    /// Right end of the PDE domain [default: 30]
    #[arg(long)]
    xmax: Option<String>,
    /// PDE cell count [default: 3000]
    #[arg(long)]
    cells: Option<String>,
    /// PDE end time [default: 5]
    #[arg(long = "t-end")]
    t_end: Option<String>,
    /// Time between PDE snapshots [default: 0.5]
    #[arg(long = "snapshot-every")]
    snapshot_every: Option<String>,
    /// Tracked level of u / u_r for the front speed [default: 0.5]
    #[arg(long)]
    level: Option<String>,
    /// PDE initial data: exact, limit, step or background [default: exact]
    #[arg(long)]
    init: Option<String>,
    /// Initial front position [default: -10]
    #[arg(long)]
    x0: Option<String>,
    /// Width of the `step` initial data [default: 0.5]
    #[arg(long)]
    width: Option<String>,
    /// Output directory [default: kswave-out; env KSWAVE_OUT]
    #[arg(long)]
    out: Option<String>,
    /// Data file format: csv or json [default: csv]
    #[arg(long)]
    format: Option<String>,
}

impl Cli {
    fn flags(&self) -> Vec<(&'static str, &String)> {
        let all = [
            ("chi", &self.chi),
            ("k", &self.k),
            ("c", &self.c),
            ("a", &self.a),
            ("ur", &self.ur),
            ("mu", &self.mu),
            ("eps", &self.eps),
            ("zmin", &self.zmin),
            ("zmax", &self.zmax),
            ("n", &self.n),
            ("delta", &self.delta),
            ("u-tilde-start", &self.u_tilde_start),
            ("rtol", &self.rtol),
            ("atol", &self.atol),
            ("xmin", &self.xmin),
            ("xmax", &self.xmax),
            ("cells", &self.cells),
            ("t-end", &self.t_end),
            ("snapshot-every", &self.snapshot_every),
            ("level", &self.level),
            ("init", &self.init),
            ("x0", &self.x0),
            ("width", &self.width),
            ("out", &self.out),
            ("format", &self.format),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
            .collect()
    }
}

pub fn usage() -> String {
    Cli::command().render_help().to_string()
}

/// Settings while sources are being merged.
#[derive(Debug, Clone)]
struct Draft {
    command: Option<Command>,
    params: ModelParams,
    eps: Option<Vec<f64>>,
    zmin: f64,
    zmax: f64,
    n: usize,
    delta: Option<f64>,
    u_tilde_start: Option<f64>,
    rtol: f64,
    atol: f64,
    pde: PdeConfig,
    out: String,
    format: Format,
}

impl Default for Draft {
    fn default() -> Self {
        Self {
            command: None,
            params: ModelParams::reference(),
            eps: None,
            zmin: -10.0,
            zmax: 5.0,
            n: 601,
            delta: None,
            u_tilde_start: None,
            rtol: 1e-10,
            atol: 1e-12,
            pde: PdeConfig {
                xmin: -30.0,
                xmax: 30.0,
                cells: 3000,
                t_end: 5.0,
                snapshot_every: 0.5,
                level: 0.5,
                init: InitKind::Exact,
                x0: -10.0,
                width: 0.5,
            },
            out: "kswave-out".into(),
            format: Format::Csv,
        }
    }
}

fn mismatch(key: &str, value: &str, expected: &'static str) -> CliError {
    CliError::TypeMismatch {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    }
}

fn number(key: &str, value: &str) -> CliResult<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| mismatch(key, value, "a finite number"))
}

fn positive(key: &str, value: &str) -> CliResult<f64> {
    number(key, value)
        .ok()
        .filter(|&x| x > 0.0)
        .ok_or_else(|| mismatch(key, value, "a positive number"))
}

fn nonnegative(key: &str, value: &str) -> CliResult<f64> {
    number(key, value)
        .ok()
        .filter(|&x| x >= 0.0)
        .ok_or_else(|| mismatch(key, value, "a nonnegative number"))
}

fn count(key: &str, value: &str) -> CliResult<usize> {
    value
        .parse::<usize>()
        .map_err(|_| mismatch(key, value, "a nonnegative integer"))
}

/// Parses a comma-separated list of positive numbers, sorted descending and
/// deduplicated.
pub fn parse_eps_list(key: &str, value: &str) -> CliResult<Vec<f64>> {
    let mut list = value
        .split(',')
        .map(|s| positive(key, s.trim()))
        .collect::<CliResult<Vec<f64>>>()?;
    list.sort_by(|a, b| b.total_cmp(a));
    list.dedup();
    Ok(list)
}

impl Draft {
    fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let v = value.trim();
        match key {
            "command" => {
                self.command =
                    Some(Command::from_key(v).ok_or_else(|| mismatch(key, v, "a command name"))?)
            }
            "chi" => self.params.chi = number(key, v)?,
            "k" => self.params.k = number(key, v)?,
            "c" => self.params.c = number(key, v)?,
            "a" => self.params.a = number(key, v)?,
            "ur" | "u_r" => self.params.u_r = number(key, v)?,
            "mu" => self.params.mu = number(key, v)?,
            "eps" | "dw" => self.eps = Some(parse_eps_list(key, v)?),
            "zmin" => self.zmin = number(key, v)?,
            "zmax" => self.zmax = number(key, v)?,
            "n" => self.n = count(key, v)?,
            "delta" => self.delta = Some(positive(key, v)?),
            "u-tilde-start" | "u_tilde_start" => self.u_tilde_start = Some(positive(key, v)?),
            "rtol" => self.rtol = positive(key, v)?,
            "atol" => self.atol = nonnegative(key, v)?,
            "xmin" => self.pde.xmin = number(key, v)?,
            "xmax" => self.pde.xmax = number(key, v)?,
            "cells" => self.pde.cells = count(key, v)?,
            "t-end" | "t_end" => self.pde.t_end = positive(key, v)?,
            "snapshot-every" | "snapshot_every" => self.pde.snapshot_every = positive(key, v)?,
            "level" => self.pde.level = positive(key, v)?,
            "init" => {
                self.pde.init = match v {
                    "exact" => InitKind::Exact,
                    "limit" => InitKind::Limit,
                    "step" => InitKind::Step,
                    "background" => InitKind::Background,
                    _ => return Err(mismatch(key, v, "exact, limit, step or background")),
                }
            }
            "x0" => self.pde.x0 = number(key, v)?,
            "width" => self.pde.width = positive(key, v)?,
            "out" => self.out = v.to_string(),
            "format" => {
                self.format = match v {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(mismatch(key, v, "csv or json")),
                }
            }
            _ => return Err(CliError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    fn finish(self) -> CliResult<ScenarioConfig> {
        let command = self
            .command
            .ok_or_else(|| CliError::MissingCommand(usage()))?;
        if !(self.zmin < self.zmax) {
            return Err(CliError::Invalid(format!(
                "zmin = {} must be below zmax = {}",
                self.zmin, self.zmax
            )));
        }
        if self.n < 2 {
            return Err(CliError::Invalid(format!(
                "n = {} must be at least 2",
                self.n
            )));
        }
        if !(self.pde.level < 1.0) {
            return Err(CliError::Invalid(format!(
                "level = {} must lie in (0, 1)",
                self.pde.level
            )));
        }
        let eps_list = self.eps.unwrap_or_else(|| command.default_eps());
        let params = self.params.with_eps(eps_list[0]);
        Ok(ScenarioConfig {
            command,
            params,
            eps_list,
            zmin: self.zmin,
            zmax: self.zmax,
            n: self.n,
            delta: self.delta,
            u_tilde_start: self.u_tilde_start,
            rtol: self.rtol,
            atol: self.atol,
            pde: self.pde,
            out: PathBuf::from(self.out),
            format: self.format,
        })
    }
}

/// Applies a flat `key = value` file; blank lines and `#` comments are ignored.
fn apply_file_text(draft: &mut Draft, text: &str) -> CliResult<()> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Invalid(format!(
                "config line {}: expected `key = value`, got `{raw}`",
                i + 1
            ))
        })?;
        draft.set(key.trim(), value)?;
    }
    Ok(())
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses `argv` (program name first), reading `KSWAVE_OUT` from the
/// environment.
pub fn parse_config<I, T>(argv: I) -> CliResult<ScenarioConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let env_out = std::env::var("KSWAVE_OUT").ok();
    parse_config_with_env(argv, env_out.as_deref())
}

pub fn parse_config_with_env<I, T>(argv: I, env_out: Option<&str>) -> CliResult<ScenarioConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Args(Box::new(e)))?;
    let mut draft = Draft::default();
    if let Some(path) = &cli.config {
        apply_file_text(&mut draft, &read_file(path)?)?;
    }
    if let Some(out) = env_out.filter(|s| !s.is_empty()) {
        draft.out = out.to_string();
    }
    if let Some(command) = cli.command {
        draft.command = Some(command);
    }
    for (key, value) in cli.flags() {
        draft.set(key, value)?;
    }
    draft.finish()
}
