//! Versioned TOML case files: an instance plus optional expected results.

use crate::model::{validate_instance, ModelError, Schedule, UcInstance, Violation};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported schema_version {found} (expected {expected})")]
    Schema { found: u32, expected: u32 },
    #[error("invalid instance: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("dispatch: {0}")]
    Dispatch(String),
    #[error("unknown case `{0}`")]
    Unknown(String),
}

/// A per-constraint series of values over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Series {
    pub constraint: String,
    pub values: Vec<f64>,
}

fn default_tolerance() -> f64 {
    1e-6
}

/// Reference results a case is expected to reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uc_objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ch_objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duality_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prices: Vec<Series>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub loc: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prs: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub ir_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ir_objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ir_prices: Vec<Series>,
}

/// A fixed market dispatch for one unit. `on` defaults to `power > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispatchEntry {
    pub unit: String,
    pub power: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserve: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub on: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub instance: UcInstance,
    /// Market dispatch to settle against instead of the instance's own
    /// unit-commitment optimum.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dispatch: Vec<DispatchEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expectations: Option<Expectations>,
}

impl CaseFile {
    pub fn new(name: &str, instance: UcInstance) -> Self {
        CaseFile {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            instance,
            dispatch: Vec::new(),
            expectations: None,
        }
    }

    /// The fixed dispatch as schedules in unit order, if one is given.
    pub fn dispatch_schedules(&self) -> Result<Option<Vec<Schedule>>, CaseError> {
        if self.dispatch.is_empty() {
            return Ok(None);
        }
        let t_len = self.instance.horizon;
        let mut out = Vec::new();
        for u in &self.instance.units {
            let e = self
                .dispatch
                .iter()
                .find(|d| d.unit == u.id)
                .ok_or_else(|| CaseError::Dispatch(format!("no entry for unit {}", u.id)))?;
            let reserve = e.reserve.clone().unwrap_or_else(|| vec![0.0; t_len]);
            let on = e
                .on
                .clone()
                .unwrap_or_else(|| e.power.iter().map(|&p| p > 0.0).collect());
            let s = Schedule::new(u, e.power.clone(), reserve, on)
                .map_err(|err: ModelError| CaseError::Dispatch(err.to_string()))?;
            crate::model::check_feasible(u, &s)
                .map_err(|v| CaseError::Dispatch(format!("unit {}: {v}", u.id)))?;
            out.push(s);
        }
        Ok(Some(out))
    }
}

/// Parse and validate case text.
pub fn parse_case(text: &str) -> Result<CaseFile, CaseError> {
    #[derive(Deserialize)]
    struct Version {
        schema_version: Option<u32>,
    }
    let v: Version = toml::from_str(text).map_err(|e| CaseError::Parse(e.to_string()))?;
    match v.schema_version {
        Some(SCHEMA_VERSION) => {}
        Some(found) => {
            return Err(CaseError::Schema {
                found,
                expected: SCHEMA_VERSION,
            })
        }
        None => return Err(CaseError::Parse("missing field `schema_version`".into())),
    }
    let case: CaseFile = toml::from_str(text).map_err(|e| CaseError::Parse(e.to_string()))?;
    let violations = validate_instance(&case.instance);
    if !violations.is_empty() {
        return Err(CaseError::Invalid(violations));
    }
    case.dispatch_schedules()?;
    Ok(case)
}

pub fn load_case(path: &Path) -> Result<CaseFile, CaseError> {
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_case(&text)
}

pub fn emit_case(case: &CaseFile) -> String {
    toml::to_string_pretty(case).expect("case files always serialize")
}

pub fn save_case(case: &CaseFile, path: &Path) -> Result<(), CaseError> {
    std::fs::write(path, emit_case(case)).map_err(|source| CaseError::Io {
        path: path.display().to_string(),
        source,
    })
}
