//! Import of generator tables (one row per unit) with the adjustments
//! needed to fit the three-binary formulation.

use crate::model::{
    validate_instance, BlockOffer, Coefficient, Product, Sense, SystemConstraintSpec, UcInstance, UnitSpec,
    Violation,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("table: {0}")]
    Csv(String),
    #[error("mapped column `{0}` not found in header")]
    MissingColumn(String),
    #[error("unknown unit field `{0}` in mapping")]
    UnknownField(String),
    #[error("required field `{0}` is neither mapped nor defaulted")]
    Unmapped(String),
    #[error("row {row}, column `{column}`: `{value}` is not a number")]
    NonNumeric { row: usize, column: String, value: String },
    #[error("imported instance is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// Numeric unit fields that a table column can feed.
pub const NUMERIC_FIELDS: [&str; 15] = [
    "p_min",
    "p_max",
    "no_load_cost",
    "startup_cost",
    "shutdown_cost",
    "reserve_offer_price",
    "reserve_max",
    "ramp_up",
    "ramp_down",
    "startup_ramp",
    "shutdown_ramp",
    "min_up_time",
    "min_down_time",
    "init_power",
    "init_online",
];

/// Header names of one block offer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockColumns {
    pub quantity: String,
    pub price: String,
}

/// Which header feeds which unit field, plus fallback values for blank or
/// absent cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    pub id: String,
    #[serde(default)]
    pub fields: BTreeMap<String, String>,
    #[serde(default)]
    pub blocks: Vec<BlockColumns>,
    #[serde(default)]
    pub defaults: BTreeMap<String, f64>,
}

impl ColumnMapping {
    /// Identity mapping for a table whose headers are the field names, with
    /// blocks in `block{b}_mw` / `block{b}_price` pairs.
    pub fn example(blocks: usize) -> Self {
        ColumnMapping {
            id: "id".into(),
            fields: NUMERIC_FIELDS.iter().map(|f| (f.to_string(), f.to_string())).collect(),
            blocks: (1..=blocks)
                .map(|b| BlockColumns {
                    quantity: format!("block{b}_mw"),
                    price: format!("block{b}_price"),
                })
                .collect(),
            defaults: BTreeMap::new(),
        }
    }

    fn default_for(&self, field: &str) -> Option<f64> {
        if let Some(v) = self.defaults.get(field) {
            return Some(*v);
        }
        match field {
            "p_max" => None,
            "min_up_time" | "min_down_time" => Some(1.0),
            "ramp_up" | "ramp_down" | "startup_ramp" | "shutdown_ramp" => Some(f64::INFINITY),
            _ => Some(0.0),
        }
    }
}

/// Unit data as read from a table, before adjustments. Absent ramps are
/// unlimited.
#[derive(Debug, Clone, PartialEq)]
pub struct RawUnit {
    pub id: String,
    pub p_min: f64,
    pub p_max: f64,
    pub blocks: Vec<BlockOffer>,
    pub no_load_cost: f64,
    pub startup_cost: f64,
    pub shutdown_cost: f64,
    pub reserve_offer_price: f64,
    pub reserve_max: f64,
    /// Hourly rates.
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub startup_ramp: f64,
    pub shutdown_ramp: f64,
    pub min_up_time: usize,
    pub min_down_time: usize,
    pub init_online: bool,
    pub init_power: f64,
}

/// Individually switchable data adjustments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Adjustments {
    /// Ramp-up and ramp-down rates to half their value.
    pub halve_ramps: bool,
    /// Startup rate to `p_min` plus half the original ramp-up rate.
    pub startup_ramp_from_min: bool,
    /// Shutdown rate to `p_max`.
    pub shutdown_ramp_at_max: bool,
    /// Reserve capability to the 30-minute ramp, half the hourly ramp-up.
    pub reserve_from_ramp: bool,
    /// Initially online units start at `p_min`.
    pub online_at_min: bool,
}

impl Adjustments {
    pub fn all() -> Self {
        Adjustments {
            halve_ramps: true,
            startup_ramp_from_min: true,
            shutdown_ramp_at_max: true,
            reserve_from_ramp: true,
            online_at_min: true,
        }
    }
}

impl RawUnit {
    pub fn adjusted(&self, adj: &Adjustments) -> UnitSpec {
        let half_up = self.ramp_up / 2.0;
        let mut u = UnitSpec {
            id: self.id.clone(),
            p_min: self.p_min,
            p_max: self.p_max,
            blocks: self.blocks.clone(),
            no_load_cost: self.no_load_cost,
            startup_cost: self.startup_cost,
            shutdown_cost: self.shutdown_cost,
            reserve_offer_price: self.reserve_offer_price,
            reserve_max: self.reserve_max,
            ramp_up: self.ramp_up,
            ramp_down: self.ramp_down,
            startup_ramp: self.startup_ramp,
            shutdown_ramp: self.shutdown_ramp,
            min_up_time: self.min_up_time.max(1),
            min_down_time: self.min_down_time.max(1),
            init_online: self.init_online,
            init_power: if self.init_online { self.init_power } else { 0.0 },
            forced_hours_online: 0,
            forced_hours_offline: 0,
            must_run: false,
            single_block_commitment: false,
            uniform_commitment: false,
        };
        if adj.halve_ramps {
            u.ramp_up = half_up;
            u.ramp_down = self.ramp_down / 2.0;
        }
        if adj.startup_ramp_from_min {
            u.startup_ramp = self.p_min + half_up;
        }
        if adj.shutdown_ramp_at_max {
            u.shutdown_ramp = self.p_max;
        }
        if adj.reserve_from_ramp {
            u.reserve_max = if half_up.is_finite() { half_up } else { self.p_max };
        }
        if adj.online_at_min && self.init_online {
            u.init_power = self.p_min;
        }
        u
    }
}

/// System-side inputs that a unit table does not carry.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemInputs {
    pub demand: Vec<f64>,
    pub reserve: Option<Vec<f64>>,
    pub power_penalty: f64,
    pub reserve_penalty: f64,
}

impl SystemInputs {
    pub fn new(demand: Vec<f64>) -> Self {
        SystemInputs {
            demand,
            reserve: None,
            power_penalty: 1000.0,
            reserve_penalty: 900.0,
        }
    }
}

/// Balance and (optional) reserve requirement over `units`.
pub fn assemble_instance(units: Vec<UnitSpec>, system: &SystemInputs) -> UcInstance {
    let ids: Vec<&str> = units.iter().map(|u| u.id.as_str()).collect();
    let mut constraints = vec![SystemConstraintSpec::balance(
        "balance",
        &ids,
        system.demand.clone(),
        Some(system.power_penalty),
    )];
    if let Some(req) = &system.reserve {
        constraints.push(SystemConstraintSpec {
            id: "reserve".into(),
            sense: Sense::GreaterEqual,
            rhs: req.clone(),
            coefficients: units
                .iter()
                .filter(|u| u.offers_reserve())
                .map(|u| Coefficient {
                    unit: u.id.clone(),
                    product: Product::Reserve,
                    coef: 1.0,
                })
                .collect(),
            slack_allowed: true,
            slack_penalty: system.reserve_penalty,
            power_balance: false,
        });
    }
    UcInstance {
        horizon: system.demand.len(),
        units,
        constraints,
    }
}

/// Read raw unit rows from delimited text with a header row.
pub fn read_units<R: Read>(reader: R, mapping: &ColumnMapping) -> Result<Vec<RawUnit>, ImportError> {
    for f in mapping.fields.keys().chain(mapping.defaults.keys()) {
        if !NUMERIC_FIELDS.contains(&f.as_str()) {
            return Err(ImportError::UnknownField(f.clone()));
        }
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| ImportError::Csv(e.to_string()))?.clone();
    let col = |h: &str| {
        headers
            .iter()
            .position(|x| x == h)
            .ok_or_else(|| ImportError::MissingColumn(h.to_string()))
    };
    let id_col = col(&mapping.id)?;
    let mut field_cols = BTreeMap::new();
    for (f, h) in &mapping.fields {
        // an absent optional column falls back to the default
        match col(h) {
            Ok(i) => {
                field_cols.insert(f.as_str(), i);
            }
            Err(e) if mapping.default_for(f).is_none() => return Err(e),
            Err(_) => {}
        }
    }
    let block_cols = mapping
        .blocks
        .iter()
        .map(|b| Ok((col(&b.quantity)?, col(&b.price)?)))
        .collect::<Result<Vec<_>, ImportError>>()?;

    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ImportError::Csv(e.to_string()))?;
        let row = r + 1;
        let cell = |i: usize| -> Result<Option<f64>, ImportError> {
            let s = rec.get(i).unwrap_or("");
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>().map(Some).map_err(|_| ImportError::NonNumeric {
                row,
                column: headers.get(i).unwrap_or("").to_string(),
                value: s.to_string(),
            })
        };
        let get = |field: &str| -> Result<f64, ImportError> {
            let v = match field_cols.get(field) {
                Some(&i) => cell(i)?,
                None => None,
            };
            v.or_else(|| mapping.default_for(field))
                .ok_or_else(|| ImportError::Unmapped(field.to_string()))
        };
        let mut blocks = Vec::new();
        for &(q, p) in &block_cols {
            if let (Some(q), Some(p)) = (cell(q)?, cell(p)?) {
                blocks.push(BlockOffer {
                    max_quantity: q,
                    price: p,
                });
            }
        }
        out.push(RawUnit {
            id: rec.get(id_col).unwrap_or("").to_string(),
            p_min: get("p_min")?,
            p_max: get("p_max")?,
            blocks,
            no_load_cost: get("no_load_cost")?,
            startup_cost: get("startup_cost")?,
            shutdown_cost: get("shutdown_cost")?,
            reserve_offer_price: get("reserve_offer_price")?,
            reserve_max: get("reserve_max")?,
            ramp_up: get("ramp_up")?,
            ramp_down: get("ramp_down")?,
            startup_ramp: get("startup_ramp")?,
            shutdown_ramp: get("shutdown_ramp")?,
            min_up_time: get("min_up_time")?.round().max(1.0) as usize,
            min_down_time: get("min_down_time")?.round().max(1.0) as usize,
            init_online: get("init_online")? != 0.0,
            init_power: get("init_power")?,
        });
    }
    Ok(out)
}

/// Read a unit table, adjust it and wrap it into a validated instance.
pub fn import_tabular(
    path: &Path,
    mapping: &ColumnMapping,
    adjustments: &Adjustments,
    system: &SystemInputs,
) -> Result<UcInstance, ImportError> {
    let file = std::fs::File::open(path).map_err(|source| ImportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    import_from_reader(file, mapping, adjustments, system)
}

pub fn import_from_reader<R: Read>(
    reader: R,
    mapping: &ColumnMapping,
    adjustments: &Adjustments,
    system: &SystemInputs,
) -> Result<UcInstance, ImportError> {
    let units = read_units(reader, mapping)?
        .iter()
        .map(|r| r.adjusted(adjustments))
        .collect();
    let inst = assemble_instance(units, system);
    let v = validate_instance(&inst);
    if v.is_empty() {
        Ok(inst)
    } else {
        Err(ImportError::Invalid(v))
    }
}
