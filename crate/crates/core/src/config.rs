//! Flat `key = value` configuration with `#` comments.
//!
//! Later entries override earlier ones; `pair` may repeat.
//!
//! ```text
//! ref.kind = power_law        # or log_power
//! ref.theta = 1
//! region.dim = 2
//! process.alpha = 1
//! const.kappa_low = 4
//! mc.paths = 100000
//! t_grid = 0.05, 0.2
//! pair = 1,0 ; 1,0.1
//! ```

use crate::envelopes::{EnvelopeConstants, HeatKernelModel, ProcessParams};
use crate::error::{HornError, Result};
use crate::geometry::HornRegion;
use crate::harness::SweepSpec;
use crate::reference::{GMonotone, ReferenceFunction, T0Config};
use crate::simulator::MCConfig;

const PLAIN_KEYS: [&str; 20] = [
    "ref.kind",
    "ref.theta",
    "ref.lipschitz",
    "ref.g_monotone",
    "region.dim",
    "region.c_star",
    "process.alpha",
    "t0.c",
    "t0.tau_max",
    "t0.rel_tol",
    "mc.paths",
    "mc.step",
    "mc.seed",
    "mc.box_radius",
    "mc.threads",
    "t_grid",
    "pair",
    "c2",
    "survival",
    "out_dir",
];

fn config_err(msg: impl Into<String>) -> HornError {
    HornError::Config(msg.into())
}

/// Invalid parameter values in a configuration are the caller's mistake.
fn as_config(e: HornError) -> HornError {
    match e {
        HornError::Config(_) => e,
        other => config_err(other.to_string()),
    }
}

fn known_key(key: &str) -> bool {
    PLAIN_KEYS.contains(&key)
        || key
            .strip_prefix("const.")
            .is_some_and(|k| EnvelopeConstants::KEYS.contains(&k))
}

/// Ordered key-value entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    entries: Vec<(String, String)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| config_err(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    /// A constants file: bare constant names are accepted as well as `const.` keys.
    pub fn parse_consts(text: &str) -> Result<Self> {
        let mut prefixed = String::new();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            match line.split_once('=') {
                Some((k, v)) if !k.trim().starts_with("const.") => {
                    prefixed.push_str(&format!("const.{} = {}\n", k.trim(), v.trim()));
                }
                _ => {
                    prefixed.push_str(line);
                    prefixed.push('\n');
                }
            }
        }
        Self::parse(&prefixed)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !known_key(key) {
            return Err(config_err(format!("unknown key {key:?}")));
        }
        if key != "pair" {
            self.entries.retain(|(k, _)| k != key);
        }
        self.entries.push((key.to_string(), value.to_string()));
        Ok(())
    }

    /// Entries of `other` override ours; its pairs replace ours when present.
    pub fn merge(&mut self, other: &Config) {
        if other.entries.iter().any(|(k, _)| k == "pair") {
            self.entries.retain(|(k, _)| k != "pair");
        }
        for (k, v) in &other.entries {
            self.set(k, v).expect("keys were validated on insertion");
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> {
        self.entries
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn num(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| config_err(format!("{key}: {v:?} is not a number")))
            })
            .transpose()
    }

    fn int(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| config_err(format!("{key}: {v:?} is not a non-negative integer")))
            })
            .transpose()
    }

    pub fn process(&self) -> Result<ProcessParams> {
        let d = self.int("region.dim")?.unwrap_or(2) as usize;
        let alpha = self.num("process.alpha")?.unwrap_or(1.0);
        ProcessParams::new(d, alpha).map_err(as_config)
    }

    /// Defaults to `(1+s)^{-1}` when no kind is given.
    pub fn reference(&self) -> Result<ReferenceFunction> {
        let alpha = self.process()?.alpha;
        let theta = self.num("ref.theta")?.unwrap_or(1.0);
        let mut f = match self.get("ref.kind").unwrap_or("power_law") {
            "power_law" => ReferenceFunction::power_law(theta, alpha).map_err(as_config)?,
            "log_power" => ReferenceFunction::log_power(theta, alpha).map_err(as_config)?,
            other => {
                return Err(config_err(format!(
                    "ref.kind must be power_law or log_power, got {other:?}"
                )))
            }
        };
        if let Some(l) = self.num("ref.lipschitz")? {
            f = f.with_lipschitz(l).map_err(as_config)?;
        }
        if let Some(g) = self.get("ref.g_monotone") {
            let class = match g {
                "dec" => Some(GMonotone::NonIncreasing),
                "inc" => Some(GMonotone::NonDecreasing),
                "none" => None,
                other => {
                    return Err(config_err(format!(
                        "ref.g_monotone must be dec, inc or none, got {other:?}"
                    )))
                }
            };
            f = f.with_g_class(class).map_err(as_config)?;
        }
        Ok(f)
    }

    pub fn region(&self) -> Result<HornRegion> {
        let d = self.process()?.d;
        let c_star = self.num("region.c_star")?.unwrap_or(HornRegion::DEFAULT_C_STAR);
        HornRegion::with_c_star(d, self.reference()?, c_star).map_err(as_config)
    }

    pub fn consts(&self) -> Result<EnvelopeConstants> {
        let mut c = EnvelopeConstants::default();
        for key in EnvelopeConstants::KEYS {
            if let Some(v) = self.num(&format!("const.{key}"))? {
                c.set(key, v)?;
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn t0_config(&self) -> Result<T0Config> {
        let mut t = T0Config::default();
        if let Some(v) = self.num("t0.c")? {
            t.c = v;
        }
        if let Some(v) = self.num("t0.tau_max")? {
            t.tau_max = v;
        }
        if let Some(v) = self.num("t0.rel_tol")? {
            t.rel_tol = v;
        }
        t.validate().map_err(as_config)?;
        Ok(t)
    }

    pub fn model(&self) -> Result<HeatKernelModel> {
        HeatKernelModel::new(self.region()?, self.process()?, self.consts()?, self.t0_config()?)
    }

    pub fn mc(&self) -> Result<MCConfig> {
        let mut m = MCConfig::default();
        if let Some(v) = self.int("mc.paths")? {
            m.n_paths = v;
        }
        if let Some(v) = self.num("mc.step")? {
            m.step_h = v;
        }
        if let Some(v) = self.int("mc.seed")? {
            m.seed = v;
        }
        if let Some(v) = self.num("mc.box_radius")? {
            m.box_radius = v;
        }
        if let Some(v) = self.int("mc.threads")? {
            m.parallelism = v as usize;
        }
        m.validate().map_err(as_config)?;
        Ok(m)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let t_grid = parse_list(self.get("t_grid").ok_or_else(|| config_err("t_grid is required"))?)?;
        let point_pairs = self
            .all("pair")
            .map(|v| {
                let (x, y) = v
                    .split_once(';')
                    .ok_or_else(|| config_err(format!("pair {v:?} must read `x ; y`")))?;
                Ok((parse_list(x)?, parse_list(y)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepSpec {
            t_grid,
            point_pairs,
            mc: self.mc()?,
            consts: self.consts()?,
        })
    }
}

/// Comma-separated numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| config_err(format!("{v:?} is not a number")))
        })
        .collect()
}
