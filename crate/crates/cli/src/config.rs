//! Run configuration: defaults per command, an optional `key = value` file,
//! and command-line flags, in increasing precedence.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Minimize,
    Mp,
    Spectrum,
    Scan,
    Testfn,
    Certify,
    Info,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Minimize => "minimize",
            Command::Mp => "mp",
            Command::Spectrum => "spectrum",
            Command::Scan => "scan",
            Command::Testfn => "testfn",
            Command::Certify => "certify",
            Command::Info => "info",
        }
    }
}

/// Keys accepted in configuration files and as flags.
pub const KEYS: &[&str] = &[
    "c", "T", "N", "size", "R", "seed", "starts", "tol", "max-iters", "nodes", "out", "theta", "count",
];

/// Fully resolved parameters for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub c: f64,
    /// `certify` and `info` use the speed stored in the field file unless `c` is given.
    pub speed_from_file: bool,
    pub periods: Vec<f64>,
    pub dim: usize,
    pub size: usize,
    pub radii: Vec<f64>,
    pub seed: u64,
    pub starts: usize,
    /// Gradient tolerance; `None` keeps the grid-scaled default.
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub nodes: usize,
    pub out: Option<PathBuf>,
    pub theta: f64,
    pub count: usize,
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = normalize_key(key.trim());
        let value = value.trim();
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", n + 1)));
        }
        if value.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty value for `{key}`", n + 1)));
        }
        map.insert(key, value.to_string());
    }
    Ok(map)
}

fn normalize_key(key: &str) -> String {
    match key {
        "t" | "period" => "T".to_string(),
        "n" | "dim" => "N".to_string(),
        "r" => "R".to_string(),
        "max_iters" => "max-iters".to_string(),
        k => k.to_string(),
    }
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid value `{v}` for `{key}`")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    let out = v
        .split(',')
        .map(|s| parse_one::<f64>(key, s))
        .collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err(CliError::Usage(format!("`{key}` needs at least one value")));
    }
    Ok(out)
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let mut cfg = RunConfig {
            command,
            c: 1.0,
            speed_from_file: matches!(command, Command::Certify | Command::Info),
            periods: vec![40.0],
            dim: 2,
            size: 256,
            radii: vec![8.0],
            seed: 1,
            starts: 0,
            tol: None,
            max_iters: None,
            nodes: 33,
            out: None,
            theta: 0.0,
            count: 6,
        };
        match command {
            Command::Spectrum => {
                cfg.periods = vec![2.0 * PI];
                cfg.size = 32;
            }
            Command::Scan => {
                cfg.periods = (0..9).map(|i| 1.0 + 0.5 * i as f64).collect();
                cfg.size = 32;
                cfg.starts = 20;
                cfg.radii = Vec::new();
            }
            Command::Testfn => {
                cfg.periods = vec![120.0];
                cfg.size = 768;
                cfg.radii = vec![4.0, 8.0, 16.0, 32.0];
            }
            _ => {}
        }
        cfg
    }

    /// Applies `values` over the command defaults and validates the result.
    pub fn resolve(command: Command, values: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let mut cfg = Self::defaults(command);
        for (key, v) in values {
            match key.as_str() {
                "c" => {
                    cfg.c = parse_one(key, v)?;
                    cfg.speed_from_file = false;
                }
                "T" => cfg.periods = parse_list(key, v)?,
                "N" => cfg.dim = parse_one(key, v)?,
                "size" => cfg.size = parse_one(key, v)?,
                "R" => {
                    cfg.radii = if v.trim() == "none" { Vec::new() } else { parse_list(key, v)? }
                }
                "seed" => cfg.seed = parse_one(key, v)?,
                "starts" => cfg.starts = parse_one(key, v)?,
                "tol" => cfg.tol = Some(parse_one(key, v)?),
                "max-iters" => cfg.max_iters = Some(parse_one(key, v)?),
                "nodes" => cfg.nodes = parse_one(key, v)?,
                "out" => cfg.out = Some(PathBuf::from(v)),
                "theta" => cfg.theta = parse_one(key, v)?,
                "count" => cfg.count = parse_one(key, v)?,
                other => return Err(CliError::Usage(format!("unknown key `{other}`"))),
            }
        }
        if cfg.out.is_none() && !matches!(command, Command::Certify | Command::Info) {
            cfg.out = Some(PathBuf::from(format!("gptw-{}", command.name())));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if !(self.c.is_finite() && self.c >= 0.0) {
            return bad(format!("c must be finite and >= 0, got {}", self.c));
        }
        if let Some(t) = self.periods.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return bad(format!("periods must be finite and positive, got {t}"));
        }
        let single_period = !matches!(self.command, Command::Scan | Command::Certify | Command::Info);
        if single_period && self.periods.len() != 1 {
            return bad(format!("{} takes a single period", self.command.name()));
        }
        if !(1..=3).contains(&self.dim) {
            return bad(format!("N must be 1, 2 or 3, got {}", self.dim));
        }
        if matches!(self.command, Command::Minimize | Command::Mp | Command::Testfn) && self.dim < 2 {
            return bad("the vortex test function needs N = 2 or 3".to_string());
        }
        if self.size < 4 || self.size % 2 != 0 {
            return bad(format!("size must be even and >= 4, got {}", self.size));
        }
        if let Some(r) = self.radii.iter().find(|r| !(r.is_finite() && **r >= 2.0)) {
            return bad(format!("R must be >= 2, got {r}"));
        }
        if matches!(self.command, Command::Minimize | Command::Mp) && self.radii.len() > 1 {
            return bad(format!("{} takes a single R", self.command.name()));
        }
        if self.command == Command::Mp && self.radii.is_empty() {
            return bad("mp needs R".to_string());
        }
        if let Some(tol) = self.tol {
            if !(tol.is_finite() && tol > 0.0) {
                return bad(format!("tol must be positive, got {tol}"));
            }
        }
        if self.max_iters == Some(0) {
            return bad("max-iters must be >= 1".to_string());
        }
        if self.nodes < 3 {
            return bad(format!("nodes must be >= 3, got {}", self.nodes));
        }
        if self.command == Command::Scan && self.starts == 0 {
            return bad("scan needs starts >= 1".to_string());
        }
        if !self.theta.is_finite() {
            return bad("theta must be finite".to_string());
        }
        if self.count == 0 {
            return bad("count must be >= 1".to_string());
        }
        Ok(())
    }

    /// The resolved configuration in the same `key = value` format it is read from.
    pub fn echo(&self) -> String {
        let list = |v: &[f64]| {
            if v.is_empty() {
                "none".to_string()
            } else {
                v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
            }
        };
        let mut s = String::new();
        let _ = writeln!(s, "# gptw {}", self.command.name());
        if self.speed_from_file {
            let _ = writeln!(s, "# c = from field file");
        } else {
            let _ = writeln!(s, "c = {:?}", self.c);
        }
        let _ = writeln!(s, "T = {}", list(&self.periods));
        let _ = writeln!(s, "N = {}", self.dim);
        let _ = writeln!(s, "size = {}", self.size);
        let _ = writeln!(s, "R = {}", list(&self.radii));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "starts = {}", self.starts);
        match self.tol {
            Some(t) => writeln!(s, "tol = {t:?}"),
            None => writeln!(s, "# tol = default"),
        }
        .ok();
        match self.max_iters {
            Some(m) => writeln!(s, "max-iters = {m}"),
            None => writeln!(s, "# max-iters = default"),
        }
        .ok();
        let _ = writeln!(s, "nodes = {}", self.nodes);
        let _ = writeln!(s, "theta = {:?}", self.theta);
        let _ = writeln!(s, "count = {}", self.count);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out = {}", out.display());
        }
        s
    }

    pub fn period(&self) -> f64 {
        self.periods[0]
    }
}
