//! Experiment configuration: `key=value` lines, `#` comments.
//!
//! Settings come in layers. Defaults are overridden by a config file, which
//! is overridden by command-line flags. Every flag has a config key of the
//! same name (with `-` for `_`).

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use sinr_sched::model::TopologyParams;
use sinr_sched::preset;
use sinr_sched::simulator::Mode;
use sinr_sched::sinr::PowerAssignment;

use crate::ConfigError;

/// Keys describing a generated instance. They conflict with `instance`.
const GENERATE_KEYS: [&str; 7] = ["n", "l_min", "l_max", "side", "alpha", "beta", "noise"];
const OTHER_KEYS: [&str; 10] =
    ["instance", "instance_seed", "mode", "power", "gamma", "seeds", "slots", "theta_c", "out", "stride"];

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Generate(TopologyParams),
    File(PathBuf),
}

/// Named power assignments usable from a config file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerKind {
    Uniform(f64),
    Linear,
    Mean,
}

impl PowerKind {
    pub fn assignment(self) -> PowerAssignment {
        match self {
            PowerKind::Uniform(p) => PowerAssignment::Uniform(p),
            PowerKind::Linear => PowerAssignment::Linear,
            PowerKind::Mean => PowerAssignment::Mean,
        }
    }
}

impl fmt::Display for PowerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerKind::Uniform(p) => write!(f, "uniform:{p}"),
            PowerKind::Linear => f.write_str("linear"),
            PowerKind::Mean => f.write_str("mean"),
        }
    }
}

impl std::str::FromStr for PowerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mean" => Ok(PowerKind::Mean),
            "linear" => Ok(PowerKind::Linear),
            "uniform" => Ok(PowerKind::Uniform(1.0)),
            other => {
                let level = other.strip_prefix("uniform:").ok_or_else(|| {
                    format!("unknown power `{other}` (expected mean, linear, uniform or uniform:<level>)")
                })?;
                let p: f64 = level.parse().map_err(|_| format!("bad uniform level `{level}`"))?;
                if p.is_finite() && p > 0.0 {
                    Ok(PowerKind::Uniform(p))
                } else {
                    Err(format!("uniform level must be finite and > 0, got {p}"))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub source: InstanceSource,
    /// Fixed topology seed for generated instances; `None` gives each run seed its own instance.
    pub instance_seed: Option<u64>,
    pub power: PowerKind,
    pub mode: Mode,
    /// Efficiency ratios to sweep, each in `[0, 1]`. Zero means no traffic.
    pub gammas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub slots: u64,
    /// Period length coefficient `c` in `theta = ceil(c * log2(n)^2)`.
    pub theta_c: f64,
    pub out: PathBuf,
    /// Write every `stride`-th slot to the trace files.
    pub stride: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            source: InstanceSource::Generate(preset::topology()),
            instance_seed: None,
            power: PowerKind::Mean,
            mode: Mode::Distributed,
            gammas: vec![0.2],
            seeds: vec![1],
            slots: preset::SLOTS,
            theta_c: preset::THETA_COEFF,
            out: PathBuf::from("out"),
            stride: 1,
        }
    }
}

/// Where a setting came from, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag => f.write_str("command line"),
        }
    }
}

/// One layer of raw settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layer {
    entries: BTreeMap<String, (String, Origin)>,
}

impl Layer {
    /// Parses config text. Keys must be known and appear at most once.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut layer = Layer::default();
        for (i, raw) in text.lines().enumerate() {
            let origin = Origin::Line(i + 1);
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(origin, "", format!("expected key=value, got `{line}`")))?;
            let key = key.trim();
            check_key(key, origin)?;
            if layer.entries.contains_key(key) {
                return Err(ConfigError::new(origin, key, "duplicate key"));
            }
            layer.entries.insert(key.to_string(), (value.trim().to_string(), origin));
        }
        Ok(layer)
    }

    /// Adds a command-line setting; `key` uses config spelling.
    pub fn set_flag(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        check_key(key, Origin::Flag)?;
        self.entries.insert(key.to_string(), (value.into(), Origin::Flag));
        Ok(())
    }

    fn get(&self, key: &str) -> Option<(&str, Origin)> {
        self.entries.get(key).map(|(v, o)| (v.as_str(), *o))
    }

    /// Overlays `top` on `self`. An `instance` set in `top` drops the generation keys below it.
    pub fn overlay(mut self, top: Layer) -> Layer {
        if top.entries.contains_key("instance") {
            for key in GENERATE_KEYS {
                self.entries.remove(key);
            }
        }
        self.entries.extend(top.entries);
        self
    }
}

fn check_key(key: &str, origin: Origin) -> Result<(), ConfigError> {
    if GENERATE_KEYS.contains(&key) || OTHER_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(ConfigError::new(origin, key, "unknown key"))
    }
}

/// Parses a full config file on top of the defaults.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    ExperimentSpec::from_layer(&Layer::parse(text)?)
}

fn field<T: std::str::FromStr>(layer: &Layer, key: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    match layer.get(key) {
        None => Ok(None),
        Some((v, origin)) => v.parse().map(Some).map_err(|e| ConfigError::new(origin, key, format!("`{v}`: {e}"))),
    }
}

fn list<T: std::str::FromStr>(value: &str, origin: Origin, key: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| ConfigError::new(origin, key, format!("`{s}`: {e}"))))
        .collect()
}

/// Seeds as a comma list where each item is a number or an inclusive range `a..b`.
fn seeds(value: &str, origin: Origin) -> Result<Vec<u64>, ConfigError> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = |e: std::num::ParseIntError| ConfigError::new(origin, "seeds", format!("`{item}`: {e}"));
        match item.split_once("..") {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse().map_err(bad)?, b.trim().parse().map_err(bad)?);
                if a > b {
                    return Err(ConfigError::new(origin, "seeds", format!("empty range `{item}`")));
                }
                out.extend(a..=b);
            }
            None => out.push(item.parse().map_err(bad)?),
        }
    }
    Ok(out)
}

impl ExperimentSpec {
    /// Applies a merged layer to the defaults and checks every field.
    pub fn from_layer(layer: &Layer) -> Result<Self, ConfigError> {
        let mut spec = ExperimentSpec::default();

        if let Some((path, origin)) = layer.get("instance") {
            if let Some(key) = GENERATE_KEYS.iter().find(|k| layer.get(k).is_some()) {
                return Err(ConfigError::new(origin, "instance", format!("conflicts with generation key `{key}`")));
            }
            if path.is_empty() {
                return Err(ConfigError::new(origin, "instance", "empty path"));
            }
            spec.source = InstanceSource::File(PathBuf::from(path));
        } else {
            let mut p = preset::topology();
            p.n = field(layer, "n")?.unwrap_or(p.n);
            p.l_min = field(layer, "l_min")?.unwrap_or(p.l_min);
            p.l_max = field(layer, "l_max")?.unwrap_or(p.l_max);
            p.side = field(layer, "side")?.unwrap_or(p.side);
            p.alpha = field(layer, "alpha")?.unwrap_or(p.alpha);
            p.beta = field(layer, "beta")?.unwrap_or(p.beta);
            p.noise = field(layer, "noise")?.unwrap_or(p.noise);
            let origin_of = |k: &str| layer.get(k).map_or(Origin::Flag, |(_, o)| o);
            if p.n == 0 {
                return Err(ConfigError::new(origin_of("n"), "n", "must be >= 1"));
            }
            if !(p.l_min > 0.0 && p.l_min <= p.l_max && p.l_max.is_finite()) {
                return Err(ConfigError::new(origin_of("l_max"), "l_min/l_max", "need 0 < l_min <= l_max"));
            }
            if !(p.side > 0.0 && p.side.is_finite()) {
                return Err(ConfigError::new(origin_of("side"), "side", "must be finite and > 0"));
            }
            if !(p.alpha > 0.0 && p.alpha.is_finite()) {
                return Err(ConfigError::new(origin_of("alpha"), "alpha", "must be finite and > 0"));
            }
            if !(p.beta >= 1.0 && p.beta.is_finite()) {
                return Err(ConfigError::new(origin_of("beta"), "beta", "must be finite and >= 1"));
            }
            if !(p.noise >= 0.0 && p.noise.is_finite()) {
                return Err(ConfigError::new(origin_of("noise"), "noise", "must be finite and >= 0"));
            }
            spec.source = InstanceSource::Generate(p);
        }

        spec.instance_seed = field(layer, "instance_seed")?;
        spec.power = field(layer, "power")?.unwrap_or(spec.power);
        spec.mode = field(layer, "mode")?.unwrap_or(spec.mode);
        if let Some((v, origin)) = layer.get("gamma") {
            spec.gammas = list(v, origin, "gamma")?;
            if spec.gammas.is_empty() {
                return Err(ConfigError::new(origin, "gamma", "needs at least one value"));
            }
            if let Some(g) = spec.gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
                return Err(ConfigError::new(origin, "gamma", format!("{g} out of range [0, 1]")));
            }
        }
        if let Some((v, origin)) = layer.get("seeds") {
            spec.seeds = seeds(v, origin)?;
            if spec.seeds.is_empty() {
                return Err(ConfigError::new(origin, "seeds", "needs at least one seed"));
            }
        }
        spec.slots = field(layer, "slots")?.unwrap_or(spec.slots);
        spec.theta_c = field(layer, "theta_c")?.unwrap_or(spec.theta_c);
        if !(spec.theta_c > 0.0 && spec.theta_c.is_finite()) {
            let origin = layer.get("theta_c").map_or(Origin::Flag, |(_, o)| o);
            return Err(ConfigError::new(origin, "theta_c", "must be finite and > 0"));
        }
        spec.out = field::<PathBuf>(layer, "out")?.unwrap_or(spec.out);
        spec.stride = field(layer, "stride")?.unwrap_or(spec.stride);
        if spec.stride == 0 {
            return Err(ConfigError::new(
                layer.get("stride").map_or(Origin::Flag, |(_, o)| o),
                "stride",
                "must be >= 1",
            ));
        }
        Ok(spec)
    }

    /// Canonical config text: every key, fixed order, shortest round-tripping numbers.
    pub fn to_config(&self) -> String {
        let mut s = String::new();
        match &self.source {
            InstanceSource::Generate(p) => {
                let _ = writeln!(s, "n={}", p.n);
                let _ = writeln!(s, "l_min={:?}", p.l_min);
                let _ = writeln!(s, "l_max={:?}", p.l_max);
                let _ = writeln!(s, "side={:?}", p.side);
                let _ = writeln!(s, "alpha={:?}", p.alpha);
                let _ = writeln!(s, "beta={:?}", p.beta);
                let _ = writeln!(s, "noise={:?}", p.noise);
            }
            InstanceSource::File(path) => {
                let _ = writeln!(s, "instance={}", path.display());
            }
        }
        if let Some(seed) = self.instance_seed {
            let _ = writeln!(s, "instance_seed={seed}");
        }
        let gammas: Vec<String> = self.gammas.iter().map(|g| format!("{g:?}")).collect();
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "power={}", self.power);
        let _ = writeln!(s, "mode={}", self.mode.as_str());
        let _ = writeln!(s, "gamma={}", gammas.join(","));
        let _ = writeln!(s, "seeds={}", seeds.join(","));
        let _ = writeln!(s, "slots={}", self.slots);
        let _ = writeln!(s, "theta_c={:?}", self.theta_c);
        let _ = writeln!(s, "out={}", self.out.display());
        let _ = writeln!(s, "stride={}", self.stride);
        s
    }
}
