//! Run configuration: a JSON file, then `--set key=value` overrides, then
//! dedicated flags (which win).

use std::path::Path;

use ncfffd::adversary::{CdMode, GoldConfig};
use ncfffd::optimizer::TlgdParams;
use ncfffd::{Constellation, SystemConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Tlgd,
    Eb,
    DtEb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DecoderChoice {
    Jd,
    Jmap,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Ed,
    Cd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Sep,
    Ed,
    Cd,
}

/// Where a sweep point's constellation comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Design {
    Tlgd,
    Eb,
    DtEb,
    /// `RunConfig::constellation`, unchanged at every point.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub algo: Algo,
    pub delta_re: f64,
    pub delta_dt: f64,
    pub n_c_cap: usize,
    pub tlgd: TlgdParams,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            algo: Algo::Eb,
            delta_re: 1e-2,
            delta_dt: 0.1,
            n_c_cap: 4096,
            tlgd: TlgdParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub trials: u64,
    pub decoder: DecoderChoice,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            trials: 1_000_000,
            decoder: DecoderChoice::Both,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub kind: DetectorKind,
    #[serde(rename = "L")]
    pub l: Vec<usize>,
    pub tau: Vec<f64>,
    /// Neighbour count of the KSG estimator.
    pub k: usize,
    pub mode: CdMode,
    /// Attack frames per `L` for the correlation detector.
    pub trials: u64,
    /// Split factor seen by the energy detector; the EB design's `α` when
    /// absent.
    pub alpha: Option<f64>,
    /// Dave's effective noise; `N_o` when absent.
    pub n_tilde: Option<f64>,
    pub gold: GoldConfig,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            kind: DetectorKind::Ed,
            l: vec![150],
            tau: vec![0.05],
            k: 2,
            mode: CdMode::Gold,
            trials: 1_000,
            alpha: None,
            n_tilde: None,
            gold: GoldConfig::default(),
        }
    }
}

/// Absent axes fall back to the single value in `system`; an axis given as
/// an empty list is rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub design: Design,
    pub snr_db: Option<Vec<f64>>,
    #[serde(rename = "N_B")]
    pub n_b: Option<Vec<usize>>,
    #[serde(rename = "M")]
    pub m: Option<Vec<usize>>,
    /// Absent: the design's required `N_C` (or `system.N_C` for fixed and
    /// TLGD designs).
    #[serde(rename = "N_C")]
    pub n_c: Option<Vec<usize>>,
    pub delay_n: Option<Vec<usize>>,
    pub partial_d: Option<Vec<f64>>,
    /// Monte Carlo trials per point; 0 skips simulation.
    pub trials: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kind: SweepKind::Sep,
            design: Design::Eb,
            snr_db: Some(vec![5.0, 10.0, 15.0, 20.0, 25.0]),
            n_b: None,
            m: None,
            n_c: None,
            delay_n: None,
            partial_d: None,
            trials: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub optimizer: OptimizerConfig,
    pub simulation: SimulationConfig,
    pub detector: DetectorConfig,
    pub sweep: SweepConfig,
    pub constellation: Option<Constellation>,
}

impl RunConfig {
    /// Reads `path` (if any) and applies `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut v = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                serde_json::from_str::<Value>(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => serde_json::to_value(RunConfig::default()).expect("default config serializes"),
        };
        // Fill in missing sections so dotted overrides always have a parent.
        let defaults = serde_json::to_value(RunConfig::default()).expect("default config serializes");
        merge_missing(&mut v, &defaults);
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn merge_missing(v: &mut Value, defaults: &Value) {
    if let (Value::Object(obj), Value::Object(def)) = (v, defaults) {
        for (k, dv) in def {
            match obj.get_mut(k) {
                Some(cur) if !cur.is_null() => merge_missing(cur, dv),
                Some(_) => {}
                None => {
                    obj.insert(k.clone(), dv.clone());
                }
            }
        }
    }
}

/// `a.b.c=value`; the value is read as JSON when it parses, otherwise as a
/// string. Unknown keys are rejected when the config is deserialized.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Usage(format!("override `{spec}` has an empty key")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (n, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("`{key}`: `{part}` is not inside an object")))?;
        if n + 1 == parts.len() {
            obj.insert((*part).to_string(), value);
            return Ok(());
        }
        cur = obj
            .entry((*part).to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split always yields at least one part")
}
