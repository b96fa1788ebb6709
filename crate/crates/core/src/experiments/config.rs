//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment; a `[section]` line prefixes the following keys
//! with `section.`. Lists are comma separated (`eps = 0.25, 0.125`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{stable_preset, SimConfig, TailModel};
use crate::rate::WitnessSearchConfig;
use crate::sets::PathSet;
use crate::solution::{DriftSpec, Scheme, SolverConfig};

/// Parsed key/value pairs with typed accessors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected `key = value`", no + 1)));
            };
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", no + 1)));
            }
            let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            let value = v.trim().trim_matches('"').to_string();
            entries.insert(full, value);
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require_str(&self, key: &str) -> Result<&str> {
        self.get_str(key).ok_or_else(|| Error::MissingKey(key.to_string()))
    }

    fn parse_f64(key: &str, v: &str) -> Result<f64> {
        let v = v.trim();
        if let Some(e) = v.strip_prefix("2^") {
            return e.trim().parse::<f64>().map(|e| 2f64.powf(e)).map_err(|_| bad(key, v));
        }
        v.parse::<f64>().map_err(|_| bad(key, v))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get_str(key).map(|v| Self::parse_f64(key, v)).transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        Self::parse_f64(key, self.require_str(key)?)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.get_f64(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get_str(key) {
            Some(v) => parse_count(key, v),
            None => Ok(default),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get_str(key) {
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(bad(key, v)),
            None => Ok(default),
        }
    }

    pub fn require_f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.require_str(key)?
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| Self::parse_f64(key, s))
            .collect()
    }

    pub fn u64_list(&self, key: &str) -> Result<Option<Vec<u64>>> {
        self.get_str(key)
            .map(|v| v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_count(key, s)).collect())
            .transpose()
    }
}

fn bad(key: &str, v: &str) -> Error {
    Error::Config(format!("invalid value `{v}` for `{key}`"))
}

/// Accepts integers and integral floats such as `1e6`.
fn parse_count(key: &str, v: &str) -> Result<u64> {
    let v = v.trim();
    if let Ok(n) = v.parse::<u64>() {
        return Ok(n);
    }
    match v.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(bad(key, v)),
    }
}

/// Thresholds deciding PASS/FAIL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Points with fewer inner hits are excluded from the slope fit.
    pub min_hits: u64,
    /// Accepted slope interval; defaults to `theory ± slope_tol`.
    pub slope_lo: Option<f64>,
    pub slope_hi: Option<f64>,
    pub slope_tol: f64,
    /// Vanishing-ratio branch: final ratio must fall below this fraction of the first.
    pub vanish_factor: f64,
}

/// Everything an experiment run needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: TailModel,
    pub sim: SimConfig,
    pub drift: DriftSpec,
    pub set: PathSet,
    pub epsilons: Vec<f64>,
    pub n_samples: Vec<u64>,
    pub seed: u64,
    pub solver: SolverConfig,
    pub euler_step: f64,
    pub audit_fraction: f64,
    pub audit_tol: f64,
    pub search: WitnessSearchConfig,
    pub thresholds: Thresholds,
    /// Jump profile of the normalizer in the vanishing-ratio branch.
    pub ratio_lm: Option<(usize, usize)>,
    pub cluster_n: u64,
    pub cluster_floor: f64,
    /// When set, the truncation is `κ/ε` so the cut sits at scaled jump size `κ` for every ε.
    pub trunc_scaled: Option<f64>,
    pub out_dir: PathBuf,
    pub raw: ConfigMap,
}

impl ExperimentConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let model = parse_model(map)?;
        let seed = map.u64_or("seed", 1)?;
        let grid_delta = map.f64_or("sim.grid_delta", 1.0 / 512.0)?;
        let sim = SimConfig {
            epsilon: 1.0,
            trunc_tau: map.f64_or("sim.trunc_tau", 1.0)?,
            gaussian_smalljump: map.bool_or("sim.gaussian_smalljump", false)?,
            grid_delta,
            seed,
            stream_id: map.u64_or("sim.stream_id", 0)?,
        };
        let drift = parse_drift(map)?;
        let set = parse_set(map)?;
        let epsilons = map.require_f64_list("eps")?;
        if epsilons.is_empty() {
            return Err(Error::Config("`eps` is empty".into()));
        }
        if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config("`eps` must be strictly decreasing".into()));
        }
        if epsilons.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            return Err(Error::Config("`eps` values must lie in (0, 1]".into()));
        }
        let n_samples = match map.u64_list("n")? {
            None => return Err(Error::MissingKey("n".into())),
            Some(v) if v.len() == 1 => vec![v[0]; epsilons.len()],
            Some(v) if v.len() == epsilons.len() => v,
            Some(_) => return Err(Error::Config("`n` needs one value or one per epsilon".into())),
        };
        if n_samples.iter().any(|n| *n < 1000) {
            return Err(Error::Config("`n` must be at least 1000 per epsilon".into()));
        }
        let scheme = match map.get_str("solver.scheme").unwrap_or("rk4") {
            "rk4" => Scheme::Rk4,
            "euler" => Scheme::Euler,
            "picard" => Scheme::Picard,
            other => return Err(Error::Config(format!("unknown solver scheme `{other}`"))),
        };
        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            scheme,
            step: map.f64_or("solver.step", grid_delta)?,
            picard_tol: map.f64_or("solver.picard_tol", defaults.picard_tol)?,
            picard_max_iter: map.u64_or("solver.picard_max_iter", defaults.picard_max_iter as u64)? as usize,
        };
        let euler_step = map.f64_or("solver.euler_step", grid_delta)?;
        let l = drift.lipschitz();
        let default_audit_tol = 4.0 * drift.bound() * l.max(1.0) * l.exp() * euler_step + 1e-9;
        let search_defaults = WitnessSearchConfig::default();
        let search = WitnessSearchConfig {
            starts: map.u64_or("search.starts", search_defaults.starts as u64)? as usize,
            max_evals: map.u64_or("search.max_evals", search_defaults.max_evals as u64)? as usize,
            seed: map.u64_or("search.seed", search_defaults.seed)?,
            size_scale: map.f64_or("search.size_scale", search_defaults.size_scale)?,
            search_delta: map.f64_or("search.delta", search_defaults.search_delta)?,
            solver,
            cost_bound: map.f64_or("search.cost_bound", search_defaults.cost_bound)?,
        };
        let thresholds = Thresholds {
            min_hits: map.u64_or("slope.min_hits", 30)?,
            slope_lo: map.get_f64("slope.lo")?,
            slope_hi: map.get_f64("slope.hi")?,
            slope_tol: map.f64_or("slope.tol", 0.15)?,
            vanish_factor: map.f64_or("ratio.vanish_factor", 0.1)?,
        };
        let ratio_lm = match (map.get_str("ratio.l"), map.get_str("ratio.m")) {
            (None, None) => None,
            _ => Some((map.u64_or("ratio.l", 0)? as usize, map.u64_or("ratio.m", 0)? as usize)),
        };
        Ok(Self {
            name: map.get_str("name").unwrap_or("experiment").to_string(),
            model,
            sim,
            drift,
            set,
            epsilons,
            n_samples,
            seed,
            solver,
            euler_step,
            audit_fraction: map.f64_or("audit.fraction", 0.01)?,
            audit_tol: map.f64_or("audit.tol", default_audit_tol)?,
            search,
            thresholds,
            ratio_lm,
            cluster_n: map.u64_or("cluster.n", 1_000_000)?,
            cluster_floor: map.f64_or("cluster.floor", 0.5)?,
            trunc_scaled: map.get_f64("sim.trunc_scaled")?,
            out_dir: PathBuf::from(map.get_str("output.dir").unwrap_or(".")),
            raw: map.clone(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_map(&ConfigMap::load(path)?)
    }

    /// Simulation settings for one epsilon, on its own RNG stream.
    pub fn sim_for(&self, eps: f64) -> SimConfig {
        SimConfig {
            epsilon: eps,
            trunc_tau: self.trunc_scaled.map_or(self.sim.trunc_tau, |k| k / eps),
            stream_id: crate::rng::derive_stream(self.sim.stream_id, eps.to_bits()),
            ..self.sim
        }
    }
}

/// `model.preset = stable` with `model.alpha`, or explicit `alpha, beta, c_plus, c_minus, sigma`.
pub fn parse_model(map: &ConfigMap) -> Result<TailModel> {
    match map.get_str("model.preset") {
        Some("stable") => stable_preset(map.require_f64("model.alpha")?),
        Some(other) => Err(Error::Config(format!("unknown model preset `{other}`"))),
        None => {
            let alpha = map.require_f64("model.alpha")?;
            TailModel::new(
                alpha,
                map.f64_or("model.beta", alpha)?,
                map.f64_or("model.c_plus", 1.0 / alpha)?,
                map.f64_or("model.c_minus", 1.0 / map.f64_or("model.beta", alpha)?)?,
                map.f64_or("model.sigma", 0.0)?,
            )
        }
    }
}

/// `drift.name` with its parameter in `drift.a` (or `drift.c` for `const`).
pub fn parse_drift(map: &ConfigMap) -> Result<DriftSpec> {
    let name = map.get_str("drift.name").unwrap_or("zero");
    let param = match map.get_f64("drift.a")? {
        Some(a) => Some(a),
        None => map.get_f64("drift.c")?,
    };
    let needs_param = name != "zero";
    if needs_param && param.is_none() {
        return Err(Error::MissingKey(if name == "const" { "drift.c" } else { "drift.a" }.into()));
    }
    DriftSpec::from_registry(name, param).map_err(|e| Error::Config(e.to_string()))
}

/// `set.name` with its parameters, optional `set.ball` radius and `set.margin`.
pub fn parse_set(map: &ConfigMap) -> Result<PathSet> {
    let name = map.require_str("set.name")?;
    let param = |k: &str| map.get_f64(&format!("set.{k}")).ok().flatten();
    let mut set = PathSet::from_registry(name, param)?;
    if let Some(m) = map.get_f64("set.ball")? {
        set = set.within_ball(m);
    }
    if let Some(m) = map.get_f64("set.margin")? {
        set = set.with_margin(m);
    }
    Ok(set)
}
