//! Scenario files: everything a run needs besides the command line.
//!
//! A scenario is a TOML document with a `schema_version`, run sizes, the
//! topology and the MAC, energy and analysis parameters. Overrides use
//! dotted keys (`topology.radio.shadowing_sigma_db=3`, indices allowed for
//! lists: `topology.regions.0.sources.1.x=0.2`) and may only touch keys the
//! effective configuration already contains.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::mac::MacParams;
use crate::topology::{build_topology, reference_spec, NetworkTopology, TopologySpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisParams {
    /// Region whose observer relay the outage analysis looks from.
    pub reference_region: usize,
    /// Linear outage threshold in mW. Zero means: calibrate so that the
    /// original scheme's outage is `target_outage` on a pilot run.
    pub thr_outage_mw: f64,
    pub target_outage: f64,
    pub pilot_trials: u64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams { reference_region: 0, thr_outage_mw: 0.0, target_outage: 0.3, pilot_trials: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_frames")]
    pub frames: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub mac: MacParams,
    #[serde(default)]
    pub energy: EnergyModel,
    #[serde(default)]
    pub analysis: AnalysisParams,
    pub topology: TopologySpec,
}

fn default_seed() -> u64 {
    42
}

fn default_frames() -> u64 {
    200
}

fn default_trials() -> u64 {
    100_000
}

impl Scenario {
    /// The built-in reference scenario; `scenarios/reference.toml` holds
    /// the same values.
    pub fn reference() -> Self {
        Scenario {
            schema_version: SCHEMA_VERSION,
            seed: default_seed(),
            frames: default_frames(),
            trials: default_trials(),
            mac: MacParams::default(),
            energy: EnergyModel::default(),
            analysis: AnalysisParams::default(),
            topology: reference_spec(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scenario::from_toml_str(&text).map_err(|e| match e {
            Error::Scenario(m) => Error::Scenario(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Scenario(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.trials == 0 {
            return Err(Error::Scenario("trials must be at least 1".into()));
        }
        self.mac.validate()?;
        self.energy.validate()?;
        let a = &self.analysis;
        if !(a.thr_outage_mw >= 0.0 && a.thr_outage_mw.is_finite()) {
            return Err(Error::Scenario("analysis.thr_outage_mw must be finite and >= 0".into()));
        }
        if !(a.target_outage > 0.0 && a.target_outage < 1.0) {
            return Err(Error::Scenario("analysis.target_outage must lie in (0, 1)".into()));
        }
        if a.pilot_trials == 0 {
            return Err(Error::Scenario("analysis.pilot_trials must be at least 1".into()));
        }
        let topo = build_topology(&self.topology)?;
        if a.reference_region >= topo.num_regions() {
            return Err(Error::Scenario(format!(
                "analysis.reference_region {} out of range ({} regions)",
                a.reference_region,
                topo.num_regions()
            )));
        }
        Ok(())
    }

    pub fn build_topology(&self) -> Result<NetworkTopology> {
        build_topology(&self.topology)
    }

    /// Every parameter after defaults and overrides, as TOML.
    pub fn effective_config(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Scenario(e.to_string()))
    }

    /// Apply `key=value` overrides in order and revalidate.
    pub fn apply_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut table: Table = toml::Table::try_from(self).map_err(|e| Error::Scenario(e.to_string()))?;
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::Override { key: o.to_string(), reason: "expected key=value".into() })?;
            set_path(&mut table, key.trim(), raw.trim())?;
        }
        let s: Scenario = table.try_into().map_err(|e: toml::de::Error| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }
}

fn set_path(table: &mut Table, key: &str, raw: &str) -> Result<()> {
    let err = |reason: &str| Error::Override { key: key.to_string(), reason: reason.to_string() };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(err("empty key segment"));
    }
    let mut cur = table.get_mut(parts[0]).ok_or_else(|| err("no such key"))?;
    for seg in &parts[1..] {
        cur = step(cur, seg).ok_or_else(|| err("no such key"))?;
    }
    let new = parse_like(cur, raw).map_err(|r| err(&r))?;
    *cur = new;
    Ok(())
}

fn step<'a>(v: &'a mut Value, seg: &str) -> Option<&'a mut Value> {
    match v {
        Value::Table(t) => t.get_mut(seg),
        Value::Array(a) => seg.parse::<usize>().ok().and_then(move |i| a.get_mut(i)),
        _ => None,
    }
}

/// Parse `raw` into the type of the value it replaces.
fn parse_like(old: &Value, raw: &str) -> std::result::Result<Value, String> {
    match old {
        Value::Integer(_) => raw.parse::<i64>().map(Value::Integer).map_err(|_| format!("`{raw}` is not an integer")),
        Value::Float(_) => raw.parse::<f64>().map(Value::Float).map_err(|_| format!("`{raw}` is not a number")),
        Value::Boolean(_) => raw.parse::<bool>().map(Value::Boolean).map_err(|_| format!("`{raw}` is not a boolean")),
        Value::String(_) => Ok(Value::String(raw.trim_matches('"').to_string())),
        _ => Err("only scalar values can be overridden".into()),
    }
}
