//! Flat `key = value` run configuration.
//!
//! Every key has a default, so an empty file is a valid configuration.
//! [`RunConfig::canonical`] prints all keys in sorted order with normalised
//! values; parsing that text gives back an equal configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use selflow::fields::BcMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Ensemble,
    Sweep,
    Diagnose,
    Selftest,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Ensemble => "ensemble",
            Mode::Sweep => "sweep",
            Mode::Diagnose => "diagnose",
            Mode::Selftest => "selftest",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Mode::Simulate,
            Mode::Ensemble,
            Mode::Sweep,
            Mode::Diagnose,
            Mode::Selftest,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec {
    Const([f64; 3]),
    Wave { h0: f64, a: f64 },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum VelocityInit {
    Zero,
    TaylorGreen { k: f64, amp: f64 },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum DirectorInit {
    Const([f64; 3]),
    Vortex { x0: f64, y0: f64, core: f64 },
    Wave { k: f64, amp: f64 },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub modes: usize,
    pub sigma0: f64,
    pub q: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub field_h: FieldSpec,
    pub eps: f64,
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// `None` selects half the stability bound.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub grid: (usize, usize),
    pub domain: (f64, f64),
    pub bc: BcMode,
    pub allow_unstable_dt: bool,
    pub substeps: u64,
    pub init_u: VelocityInit,
    pub init_d: DirectorInit,
    pub out_dir: PathBuf,
    pub checkpoint_every: u64,
    pub mode: Mode,
    pub paths: usize,
    pub gronwall: bool,
    pub sweep_eps: Vec<f64>,
    pub sweep_paths: usize,
    pub defect_radius: Option<f64>,
    pub delta0_sq: Option<f64>,
    pub track_budget: bool,
    pub monitor_transport: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            modes: 4,
            sigma0: 1.0,
            q: 1.5,
            xi1: 1.0,
            xi2: 1.0,
            field_h: FieldSpec::Const([0.0, 0.0, 1.0]),
            eps: 0.1,
            mu: 1.0,
            lambda: 1.0,
            gamma: 1.0,
            dt: None,
            t_end: 0.1,
            grid: (32, 32),
            domain: (1.0, 1.0),
            bc: BcMode::Periodic,
            allow_unstable_dt: false,
            substeps: 1,
            init_u: VelocityInit::TaylorGreen { k: 1.0, amp: 0.5 },
            init_d: DirectorInit::Wave { k: 1.0, amp: 0.5 },
            out_dir: PathBuf::from("runs"),
            checkpoint_every: 100,
            mode: Mode::Simulate,
            paths: 16,
            gronwall: false,
            sweep_eps: vec![0.2, 0.1, 0.05],
            sweep_paths: 1,
            defect_radius: None,
            delta0_sq: None,
            track_budget: true,
            monitor_transport: false,
        }
    }
}

/// All accepted keys, in canonical (sorted) order.
pub const KEYS: [&str; 31] = [
    "diag.defect_radius",
    "diag.delta0_sq",
    "diag.monitor_transport",
    "diag.track_budget",
    "ensemble.gronwall",
    "ensemble.paths",
    "field.h",
    "init.d",
    "init.u",
    "noise.modes",
    "noise.q",
    "noise.seed",
    "noise.sigma0",
    "noise.xi1",
    "noise.xi2",
    "out.checkpoint_every",
    "out.dir",
    "run.mode",
    "sim.T",
    "sim.allow_unstable_dt",
    "sim.bc",
    "sim.domain",
    "sim.dt",
    "sim.eps",
    "sim.gamma",
    "sim.grid",
    "sim.lambda",
    "sim.mu",
    "sim.substeps",
    "sweep.eps",
    "sweep.paths",
];

/// One problem found while reading a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Issue {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if let Some(k) = &self.key {
            write!(f, "{k}: ")?;
        }
        f.write_str(&self.message)
    }
}

/// Every problem found in one configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<Issue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

fn number(v: &str) -> Result<f64, String> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("expected a number, got `{v}`"))
}

fn positive(v: &str) -> Result<f64, String> {
    let x = number(v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn non_negative(v: &str) -> Result<f64, String> {
    let x = number(v)?;
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("must be non-negative, got {v}"))
    }
}

fn integer(v: &str) -> Result<u64, String> {
    v.parse::<u64>()
        .map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

fn at_least(v: &str, min: u64) -> Result<u64, String> {
    let n = integer(v)?;
    if n >= min {
        Ok(n)
    } else {
        Err(format!("must be at least {min}, got {n}"))
    }
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn numbers<const N: usize>(v: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got `{v}`"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = number(p)?;
    }
    Ok(out)
}

fn pair(v: &str) -> Result<(&str, &str), String> {
    let (a, b) = v
        .split_once('x')
        .ok_or_else(|| format!("expected `A x B`, got `{v}`"))?;
    Ok((a.trim(), b.trim()))
}

fn auto_or(v: &str, f: impl Fn(&str) -> Result<f64, String>) -> Result<Option<f64>, String> {
    if v == "auto" {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

fn tagged(v: &str) -> (&str, &str) {
    match v.split_once(':') {
        Some((t, rest)) => (t.trim(), rest.trim()),
        None => (v, ""),
    }
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "auto".to_string(), |v| format!("{v}"))
}

impl RunConfig {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "noise.seed" => self.seed = integer(v)?,
            "noise.modes" => self.modes = at_least(v, 1)? as usize,
            "noise.sigma0" => self.sigma0 = non_negative(v)?,
            "noise.q" => self.q = non_negative(v)?,
            "noise.xi1" => self.xi1 = non_negative(v)?,
            "noise.xi2" => self.xi2 = non_negative(v)?,
            "field.h" => {
                self.field_h = match tagged(v) {
                    ("const", rest) => FieldSpec::Const(numbers::<3>(rest)?),
                    ("wave", rest) => {
                        let [h0, a] = numbers::<2>(rest)?;
                        FieldSpec::Wave { h0, a }
                    }
                    ("file", p) if !p.is_empty() => FieldSpec::File(PathBuf::from(p)),
                    _ => {
                        return Err(format!(
                            "expected const:a,b,c, wave:h0,a or file:<path>, got `{v}`"
                        ))
                    }
                }
            }
            "sim.eps" => self.eps = positive(v)?,
            "sim.mu" => self.mu = positive(v)?,
            "sim.lambda" => self.lambda = positive(v)?,
            "sim.gamma" => self.gamma = positive(v)?,
            "sim.dt" => self.dt = auto_or(v, positive)?,
            "sim.T" => self.t_end = positive(v)?,
            "sim.grid" => {
                let (a, b) = pair(v)?;
                self.grid = (at_least(a, 4)? as usize, at_least(b, 4)? as usize);
            }
            "sim.domain" => {
                let (a, b) = pair(v)?;
                self.domain = (positive(a)?, positive(b)?);
            }
            "sim.bc" => {
                self.bc = BcMode::parse(v).ok_or_else(|| {
                    format!("expected periodic, noslip-neumann or noslip-dirichlet, got `{v}`")
                })?
            }
            "sim.allow_unstable_dt" => self.allow_unstable_dt = boolean(v)?,
            "sim.substeps" => self.substeps = at_least(v, 1)?,
            "init.u" => {
                self.init_u = match tagged(v) {
                    ("zero", "") => VelocityInit::Zero,
                    ("taylor-green", rest) => {
                        let [k, amp] = numbers::<2>(rest)?;
                        VelocityInit::TaylorGreen { k, amp }
                    }
                    ("file", p) if !p.is_empty() => VelocityInit::File(PathBuf::from(p)),
                    _ => {
                        return Err(format!(
                            "expected zero, taylor-green:k,amp or file:<path>, got `{v}`"
                        ))
                    }
                }
            }
            "init.d" => {
                self.init_d = match tagged(v) {
                    ("const", rest) => DirectorInit::Const(numbers::<3>(rest)?),
                    ("vortex", rest) => {
                        let [x0, y0, core] = numbers::<3>(rest)?;
                        if !(core > 0.0) {
                            return Err(format!("vortex core must be positive, got {core}"));
                        }
                        DirectorInit::Vortex { x0, y0, core }
                    }
                    ("wave", rest) => {
                        let [k, amp] = numbers::<2>(rest)?;
                        DirectorInit::Wave { k, amp }
                    }
                    ("file", p) if !p.is_empty() => DirectorInit::File(PathBuf::from(p)),
                    _ => {
                        return Err(format!(
                    "expected const:a,b,c, vortex:x0,y0,core, wave:k,amp or file:<path>, got `{v}`"
                ))
                    }
                }
            }
            "out.dir" => {
                if v.is_empty() {
                    return Err("must not be empty".into());
                }
                self.out_dir = PathBuf::from(v);
            }
            "out.checkpoint_every" => self.checkpoint_every = at_least(v, 1)?,
            "run.mode" => {
                self.mode = Mode::parse(v).ok_or_else(|| {
                    format!("expected simulate, ensemble, sweep, diagnose or selftest, got `{v}`")
                })?
            }
            "ensemble.paths" => self.paths = at_least(v, 2)? as usize,
            "ensemble.gronwall" => self.gronwall = boolean(v)?,
            "sweep.eps" => {
                let xs = v
                    .split(',')
                    .map(|p| positive(p.trim()))
                    .collect::<Result<Vec<_>, _>>()?;
                if xs.is_empty() || xs.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(format!("expected a strictly decreasing list, got `{v}`"));
                }
                self.sweep_eps = xs;
            }
            "sweep.paths" => self.sweep_paths = at_least(v, 1)? as usize,
            "diag.defect_radius" => self.defect_radius = auto_or(v, positive)?,
            "diag.delta0_sq" => self.delta0_sq = auto_or(v, positive)?,
            "diag.track_budget" => self.track_budget = boolean(v)?,
            "diag.monitor_transport" => self.monitor_transport = boolean(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        match key {
            "noise.seed" => self.seed.to_string(),
            "noise.modes" => self.modes.to_string(),
            "noise.sigma0" => format!("{}", self.sigma0),
            "noise.q" => format!("{}", self.q),
            "noise.xi1" => format!("{}", self.xi1),
            "noise.xi2" => format!("{}", self.xi2),
            "field.h" => match &self.field_h {
                FieldSpec::Const(h) => format!("const:{}", fmt_list(h)),
                FieldSpec::Wave { h0, a } => format!("wave:{h0},{a}"),
                FieldSpec::File(p) => format!("file:{}", p.display()),
            },
            "sim.eps" => format!("{}", self.eps),
            "sim.mu" => format!("{}", self.mu),
            "sim.lambda" => format!("{}", self.lambda),
            "sim.gamma" => format!("{}", self.gamma),
            "sim.dt" => fmt_opt(self.dt),
            "sim.T" => format!("{}", self.t_end),
            "sim.grid" => format!("{}x{}", self.grid.0, self.grid.1),
            "sim.domain" => format!("{}x{}", self.domain.0, self.domain.1),
            "sim.bc" => self.bc.name().to_string(),
            "sim.allow_unstable_dt" => self.allow_unstable_dt.to_string(),
            "sim.substeps" => self.substeps.to_string(),
            "init.u" => match &self.init_u {
                VelocityInit::Zero => "zero".into(),
                VelocityInit::TaylorGreen { k, amp } => format!("taylor-green:{k},{amp}"),
                VelocityInit::File(p) => format!("file:{}", p.display()),
            },
            "init.d" => match &self.init_d {
                DirectorInit::Const(d) => format!("const:{}", fmt_list(d)),
                DirectorInit::Vortex { x0, y0, core } => format!("vortex:{x0},{y0},{core}"),
                DirectorInit::Wave { k, amp } => format!("wave:{k},{amp}"),
                DirectorInit::File(p) => format!("file:{}", p.display()),
            },
            "out.dir" => self.out_dir.display().to_string(),
            "out.checkpoint_every" => self.checkpoint_every.to_string(),
            "run.mode" => self.mode.name().to_string(),
            "ensemble.paths" => self.paths.to_string(),
            "ensemble.gronwall" => self.gronwall.to_string(),
            "sweep.eps" => fmt_list(&self.sweep_eps),
            "sweep.paths" => self.sweep_paths.to_string(),
            "diag.defect_radius" => fmt_opt(self.defect_radius),
            "diag.delta0_sq" => fmt_opt(self.delta0_sq),
            "diag.track_budget" => self.track_budget.to_string(),
            "diag.monitor_transport" => self.monitor_transport.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Sorted `key = value` lines covering every key.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&self.get(k));
            out.push('\n');
        }
        out
    }

    /// Checks that involve more than one key.
    fn cross_check(&self, lines: &BTreeMap<String, usize>) -> Vec<Issue> {
        let mut issues = Vec::new();
        let mut flag = |key: &str, message: String| {
            issues.push(Issue {
                line: lines.get(key).copied(),
                key: Some(key.to_string()),
                message,
            })
        };
        if let DirectorInit::Vortex { x0, y0, .. } = self.init_d {
            let (lx, ly) = self.domain;
            if !(0.0..=lx).contains(&x0) || !(0.0..=ly).contains(&y0) {
                flag(
                    "init.d",
                    format!("vortex centre ({x0}, {y0}) lies outside the {lx}x{ly} domain"),
                );
            }
        }
        if let DirectorInit::Const(d) = self.init_d {
            if d.iter().map(|c| c * c).sum::<f64>() > 1.0 + 1e-12 {
                flag("init.d", "constant director must satisfy |d| <= 1".into());
            }
        }
        issues
    }
}

/// Parses configuration text, reporting every problem at once.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut cfg = RunConfig::default();
    let mut issues = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            issues.push(Issue {
                line: Some(line),
                key: None,
                message: format!("expected `key = value`, got `{content}`"),
            });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            issues.push(Issue {
                line: Some(line),
                key: Some(key.to_string()),
                message: "unknown key".into(),
            });
            continue;
        }
        if let Some(first) = seen.get(key) {
            issues.push(Issue {
                line: Some(line),
                key: Some(key.to_string()),
                message: format!("duplicate key (first set on line {first})"),
            });
            continue;
        }
        seen.insert(key.to_string(), line);
        if let Err(message) = cfg.set(key, value) {
            issues.push(Issue {
                line: Some(line),
                key: Some(key.to_string()),
                message,
            });
        }
    }
    if issues.is_empty() {
        issues = cfg.cross_check(&seen);
    }
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(issues))
    }
}
