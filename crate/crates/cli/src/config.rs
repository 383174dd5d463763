//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use twolevel_core::{PhysicalParams, ReducedParams, Route, StepControl};

use crate::{CliError, Result};

pub const KEYS: [&str; 13] = [
    "gamma",
    "epsilon",
    "omega0",
    "omega",
    "rabi",
    "alpha",
    "eps_range",
    "routes",
    "out",
    "tol",
    "periods",
    "jmax",
    "nodes_per_period",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamSpec {
    Reduced { gamma: f64, epsilon: f64 },
    Coupling { alpha: f64, epsilon: f64 },
    Physical(PhysicalParams),
}

/// `start:stop:step`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl EpsRange {
    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sample points, computed by multiplication so they do not drift.
    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for EpsRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [a, b, h] = parts[..] else {
            return Err(format!("expected start:stop:step, got `{s}`"));
        };
        let num = |t: &str| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        let (start, stop, step) = (num(a)?, num(b)?, num(h)?);
        if !(start > 0.0 && stop >= start && step > 0.0 && stop.is_finite()) {
            return Err(format!("need 0 < start ≤ stop and step > 0, got `{s}`"));
        }
        Ok(Self { start, stop, step })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Option<ParamSpec>,
    /// Coupling ratio for scans; also set when `alpha` fixes `params`.
    pub alpha: Option<f64>,
    pub eps_range: Option<EpsRange>,
    pub routes: Vec<Route>,
    pub out: PathBuf,
    pub tol: f64,
    pub periods: usize,
    pub jmax: usize,
    pub nodes_per_period: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let control = StepControl::default();
        Self {
            params: None,
            alpha: None,
            eps_range: None,
            routes: vec![Route::Cf, Route::Quadrature, Route::Projection],
            out: PathBuf::from("twolevel-out"),
            tol: control.rtol,
            periods: 64,
            jmax: 24,
            nodes_per_period: control.nodes_per_period,
        }
    }
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_pairs(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_pairs(&text)
}

pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::config(format!("line {}", n + 1), format!("expected `key = value`, got `{line}`")));
        };
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::config(key, "unknown key"));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn parse<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|e| CliError::config(key, format!("invalid value `{v}`: {e}"))))
        .transpose()
}

fn positive(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    match parse::<f64>(map, key)? {
        Some(v) if !(v > 0.0 && v.is_finite()) => Err(CliError::config(key, format!("must be positive, got {v}"))),
        other => Ok(other),
    }
}

fn non_negative(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    match parse::<f64>(map, key)? {
        Some(v) if !(v >= 0.0 && v.is_finite()) => Err(CliError::config(key, format!("must be non-negative, got {v}"))),
        other => Ok(other),
    }
}

pub fn parse_routes(s: &str) -> Result<Vec<Route>> {
    let mut routes = Vec::new();
    for name in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let r = match name {
            "cf" => Route::Cf,
            "quadrature" => Route::Quadrature,
            "projection" => Route::Projection,
            "wkb" => Route::Wkb,
            other => return Err(CliError::config("routes", format!("unknown route `{other}`"))),
        };
        if !routes.contains(&r) {
            routes.push(r);
        }
    }
    if routes.is_empty() {
        return Err(CliError::config("routes", "no routes given"));
    }
    routes.sort();
    Ok(routes)
}

impl RunConfig {
    pub fn from_pairs(map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::config(k.clone(), "unknown key"));
        }
        let mut cfg = Self::default();
        let gamma = non_negative(map, "gamma")?;
        let epsilon = positive(map, "epsilon")?;
        let alpha = non_negative(map, "alpha")?;
        let physical = ["omega0", "omega", "rabi"].map(|k| map.contains_key(k));
        if physical.iter().any(|&b| b) {
            if let Some(k) = ["gamma", "epsilon", "alpha"].into_iter().find(|k| map.contains_key(*k)) {
                return Err(CliError::config(k, "physical (omega0, omega, rabi) and reduced parameters are mutually exclusive"));
            }
            let need = |k: &str| -> Result<f64> {
                parse::<f64>(map, k)?.ok_or_else(|| CliError::config(k, "required with the other physical parameters"))
            };
            let p = PhysicalParams::new(need("omega0")?, need("omega")?, need("rabi")?)
                .map_err(|e| CliError::config("omega0", e.to_string()))?;
            cfg.params = Some(ParamSpec::Physical(p));
        } else {
            if gamma.is_some() && alpha.is_some() {
                return Err(CliError::config("alpha", "give either gamma or alpha, not both"));
            }
            cfg.params = match (gamma, alpha, epsilon) {
                (Some(gamma), None, Some(epsilon)) => Some(ParamSpec::Reduced { gamma, epsilon }),
                (None, Some(alpha), Some(epsilon)) => Some(ParamSpec::Coupling { alpha, epsilon }),
                (Some(_), None, None) => return Err(CliError::config("epsilon", "required with gamma")),
                (None, None, Some(_)) => return Err(CliError::config("gamma", "epsilon needs gamma or alpha")),
                _ => None,
            };
        }
        cfg.alpha = alpha;
        cfg.eps_range = parse::<String>(map, "eps_range")?
            .map(|s| s.parse::<EpsRange>().map_err(|e| CliError::config("eps_range", e)))
            .transpose()?;
        if let Some(r) = map.get("routes") {
            cfg.routes = parse_routes(r)?;
        }
        if let Some(o) = map.get("out") {
            cfg.out = PathBuf::from(o);
        }
        if let Some(t) = positive(map, "tol")? {
            cfg.tol = t;
        }
        if let Some(n) = parse::<usize>(map, "periods")? {
            cfg.periods = n;
        }
        if let Some(n) = parse::<usize>(map, "jmax")? {
            cfg.jmax = n;
        }
        if let Some(n) = parse::<usize>(map, "nodes_per_period")? {
            cfg.nodes_per_period = n;
        }
        cfg.control()?;
        Ok(cfg)
    }

    pub fn step_control(&self) -> StepControl {
        StepControl {
            rtol: self.tol,
            atol: self.tol,
            nodes_per_period: self.nodes_per_period,
            ..StepControl::default()
        }
    }

    fn control(&self) -> Result<StepControl> {
        let c = self.step_control();
        c.validate().map_err(|e| CliError::config("nodes_per_period", e.to_string()))?;
        Ok(c)
    }

    /// The single parameter point of the config.
    pub fn reduced(&self) -> Result<ReducedParams> {
        let bad = |k: &str, e: twolevel_core::Error| CliError::config(k, e.to_string());
        match self.params {
            Some(ParamSpec::Reduced { gamma, epsilon }) => ReducedParams::new(gamma, epsilon).map_err(|e| bad("gamma", e)),
            Some(ParamSpec::Coupling { alpha, epsilon }) => ReducedParams::from_alpha(alpha, epsilon).map_err(|e| bad("alpha", e)),
            Some(ParamSpec::Physical(p)) => twolevel_core::params::reduce(&p).map_err(|e| bad("omega0", e)),
            None => Err(CliError::config("epsilon", "no parameter point given (gamma/alpha and epsilon, or omega0/omega/rabi)")),
        }
    }

    /// Coupling ratio and ε values of a scan.
    pub fn scan(&self) -> Result<(f64, Vec<f64>)> {
        let alpha = self.alpha.ok_or_else(|| CliError::config("alpha", "required for scans"))?;
        let range = self.eps_range.ok_or_else(|| CliError::config("eps_range", "required for scans"))?;
        Ok((alpha, range.values()))
    }
}
