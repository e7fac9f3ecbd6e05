//! Run configuration: flat `section.key = value` text (valid TOML), every
//! field defaulted and overridable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::MassScheme;
use crate::domain::{InteractionKind, InteractionSpec, PotentialSpec};
use crate::error::{Error, Result};
use crate::scan::ScanSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteractionConfig {
    pub kind: InteractionKind,
    pub softening: f64,
}

impl Default for InteractionConfig {
    fn default() -> Self {
        Self {
            kind: InteractionKind::HardCoulomb,
            softening: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub h: f64,
    pub scheme: MassScheme,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            h: 0.5,
            scheme: MassScheme::Consistent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: String,
    pub k: usize,
    pub tol: f64,
    pub norm_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: "lanczos".into(),
            k: 200,
            tol: 1e-8,
            norm_floor: 0.999,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub u_min: f64,
    pub u_max: f64,
    pub n_u: usize,
    pub refine: bool,
    pub refine_du: f64,
    pub class_threshold: f64,
    pub participant_weight: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let s = ScanSettings::default();
        Self {
            u_min: -0.5,
            u_max: 1.0,
            n_u: 301,
            refine: s.refine,
            refine_du: s.refine_du,
            class_threshold: s.class_threshold,
            participant_weight: s.participant_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuenchConfig {
    pub u: f64,
    pub horizon: f64,
    pub n_times: usize,
    pub dominant_threshold: f64,
}

impl Default for QuenchConfig {
    fn default() -> Self {
        Self {
            u: 0.3638,
            horizon: 1e5,
            n_times: 2001,
            dominant_threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub u: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { u: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub u: f64,
    pub n_grid: usize,
    pub k: usize,
    /// 1 for the single-particle problem, 2 for the pair.
    pub dim: usize,
    /// Restrict to the left well with hard walls.
    pub isolated: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            u: 0.0,
            n_grid: 100,
            k: 10,
            dim: 2,
            isolated: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub interaction: InteractionConfig,
    pub mesh: MeshConfig,
    pub solver: SolverConfig,
    pub scan: ScanConfig,
    pub quench: QuenchConfig,
    pub spectrum: SpectrumConfig,
    pub oracle: OracleConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        self.interaction_spec(0.0).validate()?;
        let positive = [
            ("mesh.h", self.mesh.h),
            ("solver.tol", self.solver.tol),
            ("quench.horizon", self.quench.horizon),
            ("scan.refine_du", self.scan.refine_du),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{key} must be positive, got {v}")));
            }
        }
        if self.solver.k == 0 {
            return Err(Error::Config("solver.k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.solver.norm_floor) {
            return Err(Error::Config("solver.norm_floor must lie in [0, 1]".into()));
        }
        if !(self.scan.u_min.is_finite() && self.scan.u_max.is_finite() && self.scan.u_min <= self.scan.u_max) {
            return Err(Error::Config("scan.u_min must not exceed scan.u_max".into()));
        }
        if self.scan.n_u == 0 || self.quench.n_times == 0 {
            return Err(Error::Config("scan.n_u and quench.n_times must be at least 1".into()));
        }
        if !matches!(self.oracle.dim, 1 | 2) {
            return Err(Error::Config(format!("oracle.dim must be 1 or 2, got {}", self.oracle.dim)));
        }
        Ok(())
    }

    pub fn interaction_spec(&self, u: f64) -> InteractionSpec {
        InteractionSpec::new(self.interaction.kind, u).with_softening(self.interaction.softening)
    }

    pub fn scan_settings(&self) -> ScanSettings {
        ScanSettings {
            k: self.solver.k,
            tol: self.solver.tol,
            norm_floor: self.solver.norm_floor,
            class_threshold: self.scan.class_threshold,
            participant_weight: self.scan.participant_weight,
            dominant_threshold: self.quench.dominant_threshold,
            refine: self.scan.refine,
            refine_du: self.scan.refine_du,
        }
    }

    /// Sets one field from a dotted key, parsing `value` as a TOML literal
    /// (bare words are taken as strings).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut table = toml::Table::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let literal: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {value}")) {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(value.to_string()),
        };
        let (section, field) = key
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("expected section.key, got '{key}'")))?;
        let slot = table
            .get_mut(section)
            .and_then(toml::Value::as_table_mut)
            .ok_or_else(|| Error::Config(format!("unknown section '{section}'")))?;
        if !slot.contains_key(field) {
            return Err(Error::Config(format!("unknown key '{key}'")));
        }
        // integers are accepted where floats are expected
        let literal = match (&slot[field], literal) {
            (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
            (_, v) => v,
        };
        slot.insert(field.to_string(), literal);
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        *self = cfg;
        Ok(())
    }

    /// Effective configuration as dotted key lines; parses back to `self`.
    pub fn to_dotted(&self) -> String {
        let table = toml::Table::try_from(self).expect("config serializes");
        let mut out = String::new();
        for (section, values) in &table {
            if let Some(values) = values.as_table() {
                for (key, v) in values {
                    let _ = writeln!(out, "{section}.{key} = {v}");
                }
            }
        }
        out
    }
}
