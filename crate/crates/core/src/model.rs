//! Unit-commitment domain model: generator offers, system constraints,
//! per-unit schedules and price vectors.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use thiserror::Error;

/// Absolute tolerance used when checking schedules against unit rules.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unit {unit}: power {power} at hour {hour} exceeds block capacity {capacity}")]
    ExceedsBlockCapacity {
        unit: String,
        hour: usize,
        power: f64,
        capacity: f64,
    },
    #[error("unit {unit}: vector `{field}` has length {got}, expected {expected}")]
    LengthMismatch {
        unit: String,
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("unit {0}: no trivial feasible schedule exists, use a warm start instead")]
    NoTrivialSchedule(String),
}

/// One step of a monotone energy offer curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockOffer {
    pub max_quantity: f64,
    pub price: f64,
}

fn unlimited() -> f64 {
    f64::INFINITY
}

fn one() -> usize {
    1
}

/// A generating unit: offers, technical limits and initial state.
///
/// Ramp rates default to unlimited. Block offers describe output from zero
/// upwards; the technical minimum is dispatched out of the first blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitSpec {
    pub id: String,
    #[serde(default)]
    pub p_min: f64,
    pub p_max: f64,
    #[serde(default)]
    pub blocks: Vec<BlockOffer>,
    #[serde(default)]
    pub no_load_cost: f64,
    #[serde(default)]
    pub startup_cost: f64,
    #[serde(default)]
    pub shutdown_cost: f64,
    #[serde(default)]
    pub reserve_offer_price: f64,
    #[serde(default)]
    pub reserve_max: f64,
    #[serde(default = "unlimited")]
    pub ramp_up: f64,
    #[serde(default = "unlimited")]
    pub ramp_down: f64,
    #[serde(default = "unlimited")]
    pub startup_ramp: f64,
    #[serde(default = "unlimited")]
    pub shutdown_ramp: f64,
    #[serde(default = "one")]
    pub min_up_time: usize,
    #[serde(default = "one")]
    pub min_down_time: usize,
    #[serde(default)]
    pub init_online: bool,
    #[serde(default)]
    pub init_power: f64,
    #[serde(default)]
    pub forced_hours_online: usize,
    #[serde(default)]
    pub forced_hours_offline: usize,
    /// Committed in every hour.
    #[serde(default)]
    pub must_run: bool,
    /// All-or-nothing output: `power = p_max` whenever online.
    #[serde(default)]
    pub single_block_commitment: bool,
    /// One commitment decision for the whole horizon.
    #[serde(default)]
    pub uniform_commitment: bool,
}

impl UnitSpec {
    /// A unit with a single energy block covering `[0, p_max]` and otherwise
    /// default (unconstrained) parameters.
    pub fn simple(id: &str, p_min: f64, p_max: f64, price: f64) -> Self {
        UnitSpec {
            id: id.to_string(),
            p_min,
            p_max,
            blocks: vec![BlockOffer {
                max_quantity: p_max,
                price,
            }],
            no_load_cost: 0.0,
            startup_cost: 0.0,
            shutdown_cost: 0.0,
            reserve_offer_price: 0.0,
            reserve_max: 0.0,
            ramp_up: f64::INFINITY,
            ramp_down: f64::INFINITY,
            startup_ramp: f64::INFINITY,
            shutdown_ramp: f64::INFINITY,
            min_up_time: 1,
            min_down_time: 1,
            init_online: false,
            init_power: 0.0,
            forced_hours_online: 0,
            forced_hours_offline: 0,
            must_run: false,
            single_block_commitment: false,
            uniform_commitment: false,
        }
    }

    /// Ramp rates with unlimited values replaced by `p_max`, which is never
    /// binding. Order: up, down, startup, shutdown.
    pub fn effective_ramps(&self) -> [f64; 4] {
        let cap = |r: f64| if r.is_finite() { r } else { self.p_max };
        [
            cap(self.ramp_up),
            cap(self.ramp_down),
            cap(self.startup_ramp),
            cap(self.shutdown_ramp),
        ]
    }

    /// Power level before the first hour.
    pub fn initial_power(&self) -> f64 {
        if self.init_online {
            self.init_power
        } else {
            0.0
        }
    }

    pub fn block_capacity(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_quantity).sum()
    }

    /// Whether the unit can carry reserve at all.
    pub fn offers_reserve(&self) -> bool {
        self.reserve_max > 0.0
    }

    pub fn forced_online(&self, horizon: usize) -> usize {
        self.forced_hours_online.min(horizon)
    }

    pub fn forced_offline(&self, horizon: usize) -> usize {
        self.forced_hours_offline.min(horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    #[serde(alias = "eq", alias = "=")]
    Equality,
    #[serde(alias = "ge", alias = ">=")]
    GreaterEqual,
    #[serde(alias = "le", alias = "<=")]
    LessEqual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Product {
    Power,
    Reserve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficient {
    pub unit: String,
    #[serde(default = "default_product")]
    pub product: Product,
    #[serde(default = "unit_coef")]
    pub coef: f64,
}

fn default_product() -> Product {
    Product::Power
}

fn unit_coef() -> f64 {
    1.0
}

/// A linear system-wide constraint, one row per hour:
/// `sum(coef * quantity) (sense) rhs[t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConstraintSpec {
    pub id: String,
    pub sense: Sense,
    pub rhs: Vec<f64>,
    pub coefficients: Vec<Coefficient>,
    #[serde(default)]
    pub slack_allowed: bool,
    #[serde(default)]
    pub slack_penalty: f64,
    /// Marks the energy balance used for uplift reporting.
    #[serde(default)]
    pub power_balance: bool,
}

impl SystemConstraintSpec {
    /// Power balance over all `units` with a deficit slack at `penalty`.
    pub fn balance(id: &str, units: &[&str], demand: Vec<f64>, penalty: Option<f64>) -> Self {
        SystemConstraintSpec {
            id: id.to_string(),
            sense: Sense::Equality,
            rhs: demand,
            coefficients: units
                .iter()
                .map(|u| Coefficient {
                    unit: u.to_string(),
                    product: Product::Power,
                    coef: 1.0,
                })
                .collect(),
            slack_allowed: penalty.is_some(),
            slack_penalty: penalty.unwrap_or(0.0),
            power_balance: true,
        }
    }

    /// Coefficient of `(unit, product)` in this constraint; zero if absent.
    pub fn coef(&self, unit: &str, product: Product) -> f64 {
        self.coefficients
            .iter()
            .filter(|c| c.unit == unit && c.product == product)
            .map(|c| c.coef)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UcInstance {
    pub horizon: usize,
    pub units: Vec<UnitSpec>,
    pub constraints: Vec<SystemConstraintSpec>,
}

impl UcInstance {
    pub fn unit(&self, id: &str) -> Option<&UnitSpec> {
        self.units.iter().find(|u| u.id == id)
    }

    pub fn unit_index(&self, id: &str) -> Option<usize> {
        self.units.iter().position(|u| u.id == id)
    }

    /// Indices of the constraints flagged as power balance.
    pub fn balance_constraints(&self) -> Vec<usize> {
        (0..self.constraints.len())
            .filter(|&c| self.constraints[c].power_balance)
            .collect()
    }

    /// Dense `[constraint][unit][product]` coefficient table.
    pub fn coefficient_table(&self) -> Vec<Vec<[f64; 2]>> {
        self.constraints
            .iter()
            .map(|c| {
                self.units
                    .iter()
                    .map(|u| [c.coef(&u.id, Product::Power), c.coef(&u.id, Product::Reserve)])
                    .collect()
            })
            .collect()
    }
}

/// One validation finding: which item broke which rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subject: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.rule)
    }
}

/// Check every structural invariant of an instance. An empty result means
/// the instance is valid.
pub fn validate_instance(instance: &UcInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |subject: String, rule: String| out.push(Violation { subject, rule });
    let t_len = instance.horizon;

    if t_len == 0 {
        push("instance".into(), "horizon must be at least one hour".into());
    }
    if instance.units.is_empty() {
        push("instance".into(), "at least one unit is required".into());
    }

    let mut seen = HashSet::new();
    for u in &instance.units {
        let s = format!("unit {}", u.id);
        if !seen.insert(u.id.as_str()) {
            push(s.clone(), "duplicate unit id".into());
        }
        let numbers = [
            u.p_min,
            u.p_max,
            u.no_load_cost,
            u.startup_cost,
            u.shutdown_cost,
            u.reserve_offer_price,
            u.reserve_max,
            u.init_power,
        ];
        if numbers.iter().any(|v| !v.is_finite()) {
            push(s.clone(), "costs and limits must be finite".into());
        }
        if u.p_min < 0.0 {
            push(s.clone(), "p_min must be non-negative".into());
        }
        if u.p_min > u.p_max {
            push(s.clone(), format!("p_min {} exceeds p_max {}", u.p_min, u.p_max));
        }
        for (b, blk) in u.blocks.iter().enumerate() {
            if !(blk.max_quantity >= 0.0) || !blk.price.is_finite() {
                push(s.clone(), format!("block {b} must have finite price and max_quantity >= 0"));
            }
        }
        if u.blocks.windows(2).any(|w| w[1].price < w[0].price) {
            push(s.clone(), "block prices must be non-decreasing".into());
        }
        if !u.blocks.is_empty() && u.block_capacity() + u.p_min < u.p_max - 1e-9 {
            push(s.clone(), "blocks plus p_min do not reach p_max".into());
        }
        let ramps = [u.ramp_up, u.ramp_down, u.startup_ramp, u.shutdown_ramp];
        if ramps.iter().any(|r| r.is_nan() || *r < 0.0) {
            push(s.clone(), "ramp rates must be non-negative".into());
        }
        if u.reserve_max < 0.0 {
            push(s.clone(), "reserve_max must be non-negative".into());
        }
        if u.forced_hours_online > 0 && u.forced_hours_offline > 0 {
            push(s.clone(), "only one of forced_hours_online/offline may be positive".into());
        }
        if u.must_run && u.forced_hours_offline > 0 {
            push(s.clone(), "must_run unit cannot be forced offline".into());
        }
        if u.init_online {
            if u.init_power < 0.0 || u.init_power > u.p_max + 1e-9 {
                push(s.clone(), "init_power must lie within [0, p_max]".into());
            }
        } else if u.init_power != 0.0 {
            push(s.clone(), "initially offline unit must have init_power 0".into());
        }
    }

    let mut seen = HashSet::new();
    let mut has_balance = false;
    for c in &instance.constraints {
        let s = format!("constraint {}", c.id);
        if !seen.insert(c.id.as_str()) {
            push(s.clone(), "duplicate constraint id".into());
        }
        if c.rhs.len() != t_len {
            push(
                s.clone(),
                format!("rhs has length {}, horizon is {}", c.rhs.len(), t_len),
            );
        }
        if c.rhs.iter().any(|v| !v.is_finite()) {
            push(s.clone(), "rhs must be finite".into());
        }
        if c.slack_allowed && !(c.slack_penalty > 0.0) {
            push(s.clone(), "slack_penalty must be positive when slack is allowed".into());
        }
        for k in &c.coefficients {
            if instance.unit(&k.unit).is_none() {
                push(s.clone(), format!("references unknown unit {}", k.unit));
            }
            if !k.coef.is_finite() {
                push(s.clone(), "coefficients must be finite".into());
            }
        }
        if c.power_balance {
            if c.sense != Sense::Equality {
                push(s.clone(), "power balance must be an equality".into());
            } else {
                has_balance = true;
            }
        }
    }
    if !has_balance {
        push(
            "instance".into(),
            "no equality constraint is flagged as power balance".into(),
        );
    }
    out
}

/// Split `power` over the blocks cheapest-first. Block prices are
/// non-decreasing so the fill order is the block order.
pub fn block_dispatch(unit: &UnitSpec, power: f64) -> Vec<f64> {
    let mut left = power.max(0.0);
    unit.blocks
        .iter()
        .map(|b| {
            let q = left.min(b.max_quantity);
            left -= q;
            q
        })
        .collect()
}

/// Total as-offered cost of a trajectory.
pub fn evaluate_cost(
    unit: &UnitSpec,
    power: &[f64],
    reserve: &[f64],
    on: &[bool],
    start: &[bool],
    stop: &[bool],
) -> Result<f64, ModelError> {
    let t_len = power.len();
    for (field, got) in [
        ("reserve", reserve.len()),
        ("on", on.len()),
        ("start", start.len()),
        ("stop", stop.len()),
    ] {
        if got != t_len {
            return Err(ModelError::LengthMismatch {
                unit: unit.id.clone(),
                field,
                got,
                expected: t_len,
            });
        }
    }
    let capacity = unit.block_capacity();
    let mut total = 0.0;
    for t in 0..t_len {
        if on[t] {
            total += unit.no_load_cost;
        }
        if start[t] {
            total += unit.startup_cost;
        }
        if stop[t] {
            total += unit.shutdown_cost;
        }
        let p = power[t];
        if !unit.blocks.is_empty() {
            if p > capacity + FEAS_TOL {
                return Err(ModelError::ExceedsBlockCapacity {
                    unit: unit.id.clone(),
                    hour: t,
                    power: p,
                    capacity,
                });
            }
            total += block_dispatch(unit, p)
                .iter()
                .zip(&unit.blocks)
                .map(|(q, b)| q * b.price)
                .sum::<f64>();
        }
        total += unit.reserve_offer_price * reserve[t];
    }
    Ok(total)
}

/// Startup and shutdown indicators implied by a commitment vector.
pub fn transitions(unit: &UnitSpec, on: &[bool]) -> (Vec<bool>, Vec<bool>) {
    let mut prev = unit.init_online;
    let mut start = Vec::with_capacity(on.len());
    let mut stop = Vec::with_capacity(on.len());
    for &u in on {
        start.push(u && !prev);
        stop.push(!u && prev);
        prev = u;
    }
    (start, stop)
}

/// A complete trajectory of one unit over the horizon: one column of the
/// master problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub unit_id: String,
    pub power: Vec<f64>,
    pub reserve: Vec<f64>,
    pub on: Vec<bool>,
    pub cost: f64,
}

impl Schedule {
    /// Build a schedule and price it with [`evaluate_cost`].
    pub fn new(
        unit: &UnitSpec,
        power: Vec<f64>,
        reserve: Vec<f64>,
        on: Vec<bool>,
    ) -> Result<Self, ModelError> {
        let (start, stop) = transitions(unit, &on);
        let cost = evaluate_cost(unit, &power, &reserve, &on, &start, &stop)?;
        Ok(Schedule {
            unit_id: unit.id.clone(),
            power,
            reserve,
            on,
            cost,
        })
    }

    pub fn horizon(&self) -> usize {
        self.power.len()
    }

    /// Quantity of `product` at hour `t`.
    pub fn quantity(&self, product: Product, t: usize) -> f64 {
        match product {
            Product::Power => self.power[t],
            Product::Reserve => self.reserve[t],
        }
    }

    /// Same physical trajectory within `tol`.
    pub fn same_quantities(&self, other: &Schedule, tol: f64) -> bool {
        let close = |a: &[f64], b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
        };
        close(&self.power, &other.power) && close(&self.reserve, &other.reserve)
    }
}

/// First unit rule a schedule breaks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleViolation {
    #[error("horizon mismatch: expected {expected}, got {got}")]
    Horizon { expected: usize, got: usize },
    #[error("hour {0}: negative power or reserve")]
    Negative(usize),
    #[error("hour {0}: power below p_min while online")]
    BelowMin(usize),
    #[error("hour {0}: power plus reserve above p_max (or output while offline)")]
    AboveMax(usize),
    #[error("hour {0}: reserve above reserve_max")]
    ReserveMax(usize),
    #[error("hour {0}: power exceeds block capacity")]
    BlockCapacity(usize),
    #[error("hour {0}: ramp-up or startup rate exceeded")]
    RampUp(usize),
    #[error("hour {0}: ramp-down or shutdown rate exceeded")]
    RampDown(usize),
    #[error("hour {0}: minimum up time")]
    MinUp(usize),
    #[error("hour {0}: minimum down time")]
    MinDown(usize),
    #[error("hour {0}: initial forced online/offline period")]
    InitialCondition(usize),
    #[error("hour {0}: must-run unit offline")]
    MustRun(usize),
    #[error("hour {0}: all-or-nothing output not at p_max")]
    SingleBlock(usize),
    #[error("hour {0}: commitment differs from first hour")]
    Uniform(usize),
    #[error("stored cost {stored} differs from evaluated cost {evaluated}")]
    Cost { stored: f64, evaluated: f64 },
}

/// Check `schedule` against every rule of `unit`, including the stored cost.
pub fn check_feasible(unit: &UnitSpec, schedule: &Schedule) -> Result<(), ScheduleViolation> {
    check_feasible_for(unit, schedule, schedule.horizon())?;
    let (start, stop) = transitions(unit, &schedule.on);
    let evaluated = evaluate_cost(
        unit,
        &schedule.power,
        &schedule.reserve,
        &schedule.on,
        &start,
        &stop,
    )
    .map_err(|_| ScheduleViolation::BlockCapacity(0))?;
    if (evaluated - schedule.cost).abs() > 1e-9 * evaluated.abs().max(1.0) {
        return Err(ScheduleViolation::Cost {
            stored: schedule.cost,
            evaluated,
        });
    }
    Ok(())
}

/// Physical rules only, against an explicit horizon.
pub fn check_feasible_for(
    unit: &UnitSpec,
    schedule: &Schedule,
    horizon: usize,
) -> Result<(), ScheduleViolation> {
    use ScheduleViolation as V;
    let tol = FEAS_TOL;
    let t_len = horizon;
    for got in [schedule.power.len(), schedule.reserve.len(), schedule.on.len()] {
        if got != t_len {
            return Err(V::Horizon {
                expected: t_len,
                got,
            });
        }
    }
    let p = &schedule.power;
    let r = &schedule.reserve;
    let on = &schedule.on;
    let (start, stop) = transitions(unit, on);
    let [ru, rd, rsu, rsd] = unit.effective_ramps();
    let cap = unit.block_capacity();
    let b = |x: bool| if x { 1.0 } else { 0.0 };

    for t in 0..t_len {
        if p[t] < -tol || r[t] < -tol {
            return Err(V::Negative(t));
        }
        if p[t] < unit.p_min * b(on[t]) - tol {
            return Err(V::BelowMin(t));
        }
        if p[t] + r[t] > unit.p_max * b(on[t]) + tol {
            return Err(V::AboveMax(t));
        }
        if r[t] > unit.reserve_max + tol {
            return Err(V::ReserveMax(t));
        }
        if !unit.blocks.is_empty() && p[t] > cap + tol {
            return Err(V::BlockCapacity(t));
        }
        let (p_prev, on_prev) = if t == 0 {
            (unit.initial_power(), unit.init_online)
        } else {
            (p[t - 1], on[t - 1])
        };
        if p[t] - p_prev > ru * b(on_prev) + rsu * b(start[t]) + tol {
            return Err(V::RampUp(t));
        }
        if p_prev - p[t] > rd * b(on[t]) + rsd * b(stop[t]) + tol {
            return Err(V::RampDown(t));
        }
        // windows are truncated at the start of the horizon
        let lo = (t + 1).saturating_sub(unit.min_up_time.max(1));
        if (lo..=t).filter(|&s| start[s]).count() > usize::from(on[t]) {
            return Err(V::MinUp(t));
        }
        let lo = (t + 1).saturating_sub(unit.min_down_time.max(1));
        if (lo..=t).filter(|&s| stop[s]).count() > usize::from(!on[t]) {
            return Err(V::MinDown(t));
        }
        if (t < unit.forced_online(t_len) && !on[t]) || (t < unit.forced_offline(t_len) && on[t]) {
            return Err(V::InitialCondition(t));
        }
        if unit.must_run && !on[t] {
            return Err(V::MustRun(t));
        }
        if unit.single_block_commitment && (p[t] - unit.p_max * b(on[t])).abs() > tol {
            return Err(V::SingleBlock(t));
        }
        if unit.uniform_commitment && on[t] != on[0] {
            return Err(V::Uniform(t));
        }
    }
    Ok(())
}

/// Cheapest obviously-feasible schedule: offline when the initial state
/// allows it, otherwise online at minimum output for as long as forced, then
/// shut down as soon as the shutdown rate permits.
pub fn trivial_schedule(unit: &UnitSpec, horizon: usize) -> Result<Schedule, ModelError> {
    let [_, rd, _, rsd] = unit.effective_ramps();
    let mut required = unit.forced_online(horizon);
    if unit.must_run {
        required = horizon;
    }
    if !unit.init_online && required > 0 {
        required = required.max(unit.min_up_time.min(horizon));
    }
    if unit.uniform_commitment && required > 0 {
        required = horizon;
    }
    if unit.init_online && unit.uniform_commitment && unit.initial_power() > rsd {
        required = horizon;
    }

    let level = |prev: f64| {
        if unit.single_block_commitment {
            unit.p_max
        } else {
            unit.p_min.max(prev - rd)
        }
    };

    let mut power = vec![0.0; horizon];
    let mut on = vec![false; horizon];
    let mut prev = unit.initial_power();
    let mut online = unit.init_online || required > 0;
    for t in 0..horizon {
        if online && t >= required && prev <= rsd + FEAS_TOL {
            online = false;
        }
        if online {
            on[t] = true;
            power[t] = level(prev);
            prev = power[t];
        } else {
            prev = 0.0;
        }
    }
    let schedule = Schedule::new(unit, power, vec![0.0; horizon], on)?;
    check_feasible_for(unit, &schedule, horizon)
        .map_err(|_| ModelError::NoTrivialSchedule(unit.id.clone()))?;
    Ok(schedule)
}

/// Dual prices of the system constraints, `[constraint][hour]`, in the
/// minimisation convention: `<=` rows carry non-positive duals, `>=` rows
/// non-negative ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceVector {
    pub constraint_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl PriceVector {
    pub fn zeros(instance: &UcInstance) -> Self {
        PriceVector {
            constraint_ids: instance.constraints.iter().map(|c| c.id.clone()).collect(),
            values: vec![vec![0.0; instance.horizon]; instance.constraints.len()],
        }
    }

    /// Prices for an instance with a single constraint.
    pub fn single(instance: &UcInstance, values: Vec<f64>) -> Self {
        let mut p = Self::zeros(instance);
        p.values[0] = values;
        p
    }

    pub fn get(&self, constraint: usize, hour: usize) -> f64 {
        self.values[constraint][hour]
    }

    pub fn by_id(&self, id: &str) -> Option<&[f64]> {
        self.constraint_ids
            .iter()
            .position(|c| c == id)
            .map(|i| self.values[i].as_slice())
    }

    /// Shape and sign invariants against `instance`.
    pub fn conforms_to(&self, instance: &UcInstance, tol: f64) -> bool {
        self.values.len() == instance.constraints.len()
            && self
                .values
                .iter()
                .zip(&instance.constraints)
                .all(|(v, c)| {
                    v.len() == instance.horizon
                        && v.iter().all(|&d| match c.sense {
                            Sense::Equality => d.is_finite(),
                            Sense::GreaterEqual => d >= -tol,
                            Sense::LessEqual => d <= tol,
                        })
                })
    }

    /// Dual-weighted revenue of a schedule of unit `unit_idx`.
    pub fn revenue(&self, instance: &UcInstance, unit_idx: usize, schedule: &Schedule) -> f64 {
        let unit = &instance.units[unit_idx].id;
        let mut total = 0.0;
        for (c, spec) in instance.constraints.iter().enumerate() {
            for k in spec.coefficients.iter().filter(|k| &k.unit == unit) {
                for t in 0..instance.horizon {
                    total += self.values[c][t] * k.coef * schedule.quantity(k.product, t);
                }
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1() -> UcInstance {
        let mut g1 = UnitSpec::simple("G1", 10.0, 50.0, 50.0);
        g1.must_run = true;
        g1.init_online = true;
        g1.init_power = 10.0;
        let mut g2 = UnitSpec::simple("G2", 50.0, 50.0, 10.0);
        g2.single_block_commitment = true;
        UcInstance {
            horizon: 1,
            units: vec![g1, g2],
            constraints: vec![SystemConstraintSpec::balance(
                "balance",
                &["G1", "G2"],
                vec![35.0],
                Some(1000.0),
            )],
        }
    }

    fn ramp_g2() -> UnitSpec {
        let mut g2 = UnitSpec::simple("G2", 20.0, 35.0, 50.0);
        g2.no_load_cost = 30.0;
        g2.startup_cost = 1000.0;
        g2.ramp_up = 5.0;
        g2.ramp_down = 5.0;
        g2.startup_ramp = 22.5;
        g2.shutdown_ramp = 35.0;
        g2
    }

    #[test]
    fn example_one_is_valid() {
        assert!(validate_instance(&ex1()).is_empty());
    }

    #[test]
    fn inverted_bounds_flagged() {
        let mut inst = ex1();
        inst.units[0].p_min = 20.0;
        inst.units[0].p_max = 10.0;
        inst.units[0].blocks[0].max_quantity = 10.0;
        inst.units[0].init_power = 10.0;
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].subject.contains("G1"));
    }

    #[test]
    fn short_rhs_flagged() {
        let mut inst = ex1();
        inst.horizon = 2;
        inst.constraints[0].rhs = vec![35.0];
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].subject.contains("balance"));
    }

    #[test]
    fn empty_units_flagged() {
        let mut inst = ex1();
        inst.units.clear();
        inst.constraints[0].coefficients.clear();
        assert!(!validate_instance(&inst).is_empty());
    }

    #[test]
    fn decreasing_blocks_flagged() {
        let mut inst = ex1();
        inst.units[0].blocks = vec![
            BlockOffer { max_quantity: 25.0, price: 50.0 },
            BlockOffer { max_quantity: 25.0, price: 40.0 },
        ];
        assert_eq!(validate_instance(&inst).len(), 1);
    }

    #[test]
    fn example_costs() {
        let inst = ex1();
        let c = evaluate_cost(&inst.units[0], &[35.0], &[0.0], &[true], &[false], &[false]).unwrap();
        assert_eq!(c, 1750.0);
        let mut g2 = inst.units[1].clone();
        g2.startup_cost = 100.0;
        let c = evaluate_cost(&g2, &[50.0], &[0.0], &[true], &[true], &[false]).unwrap();
        assert_eq!(c, 600.0);
        let c = evaluate_cost(&g2, &[0.0], &[0.0], &[false], &[false], &[false]).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn cost_above_blocks_is_error() {
        let inst = ex1();
        let e = evaluate_cost(&inst.units[0], &[60.0], &[0.0], &[true], &[false], &[false]);
        assert!(matches!(e, Err(ModelError::ExceedsBlockCapacity { .. })));
    }

    #[test]
    fn multi_block_greedy_fill() {
        let mut u = UnitSpec::simple("U", 0.0, 30.0, 10.0);
        u.blocks = vec![
            BlockOffer { max_quantity: 10.0, price: 10.0 },
            BlockOffer { max_quantity: 20.0, price: 20.0 },
        ];
        assert_eq!(block_dispatch(&u, 15.0), vec![10.0, 5.0]);
        let c = evaluate_cost(&u, &[15.0], &[0.0], &[true], &[true], &[false]).unwrap();
        assert_eq!(c, 200.0);
    }

    #[test]
    fn ramp_example_schedules() {
        let g2 = ramp_g2();
        let ok = Schedule::new(&g2, vec![22.5, 27.5, 32.5], vec![0.0; 3], vec![true; 3]).unwrap();
        assert_eq!(check_feasible(&g2, &ok), Ok(()));
        assert_eq!(ok.cost, 5215.0);
        let bad = Schedule::new(&g2, vec![25.0, 25.0, 35.0], vec![0.0; 3], vec![true; 3]).unwrap();
        // 25 > startup rate 22.5 already in hour one
        assert_eq!(check_feasible(&g2, &bad), Err(ScheduleViolation::RampUp(0)));
        let mut g2b = g2.clone();
        g2b.startup_ramp = 25.0;
        let bad = Schedule::new(&g2b, vec![25.0, 25.0, 35.0], vec![0.0; 3], vec![true; 3]).unwrap();
        assert_eq!(check_feasible(&g2b, &bad), Err(ScheduleViolation::RampUp(2)));
    }

    #[test]
    fn offline_schedule_feasible() {
        let g2 = ramp_g2();
        let s = Schedule::new(&g2, vec![0.0; 3], vec![0.0; 3], vec![false; 3]).unwrap();
        assert!(check_feasible(&g2, &s).is_ok());
        assert_eq!(s.cost, 0.0);
    }

    #[test]
    fn min_up_and_down_windows() {
        let mut u = UnitSpec::simple("U", 10.0, 50.0, 10.0);
        u.min_up_time = 3;
        u.min_down_time = 2;
        let short = Schedule::new(&u, vec![10.0, 10.0, 0.0, 0.0], vec![0.0; 4], vec![true, true, false, false]).unwrap();
        assert_eq!(check_feasible(&u, &short), Err(ScheduleViolation::MinUp(2)));
        let long = Schedule::new(&u, vec![10.0, 10.0, 10.0, 0.0], vec![0.0; 4], vec![true, true, true, false]).unwrap();
        assert!(check_feasible(&u, &long).is_ok());
        u.min_up_time = 1;
        let blip = Schedule::new(&u, vec![10.0, 0.0, 10.0, 10.0], vec![0.0; 4], vec![true, false, true, true]).unwrap();
        assert_eq!(check_feasible(&u, &blip), Err(ScheduleViolation::MinDown(2)));
    }

    #[test]
    fn trivial_schedules() {
        let inst = ex1();
        let g1 = trivial_schedule(&inst.units[0], 1).unwrap();
        assert_eq!(g1.power, vec![10.0]);
        assert_eq!(g1.cost, 500.0);
        let g2 = trivial_schedule(&inst.units[1], 1).unwrap();
        assert_eq!(g2.power, vec![0.0]);
        assert_eq!(g2.cost, 0.0);
        let free = trivial_schedule(&ramp_g2(), 5).unwrap();
        assert!(free.power.iter().all(|&p| p == 0.0) && free.on.iter().all(|&o| !o));
    }

    #[test]
    fn trivial_schedule_ramps_down_before_shutdown() {
        let mut u = UnitSpec::simple("U", 10.0, 100.0, 20.0);
        u.init_online = true;
        u.init_power = 90.0;
        u.ramp_down = 30.0;
        u.shutdown_ramp = 40.0;
        u.forced_hours_online = 1;
        let s = trivial_schedule(&u, 5).unwrap();
        assert_eq!(s.power, vec![60.0, 30.0, 0.0, 0.0, 0.0]);
        assert!(check_feasible(&u, &s).is_ok());
    }

    #[test]
    fn trivial_schedule_reports_impossible_start() {
        let mut u = UnitSpec::simple("U", 30.0, 100.0, 20.0);
        u.forced_hours_online = 2;
        u.startup_ramp = 10.0;
        assert!(matches!(trivial_schedule(&u, 3), Err(ModelError::NoTrivialSchedule(_))));
    }

    #[test]
    fn revenue_uses_all_duals() {
        let mut inst = ex1();
        inst.constraints.push(SystemConstraintSpec {
            id: "line".into(),
            sense: Sense::LessEqual,
            rhs: vec![10.0],
            coefficients: vec![Coefficient { unit: "G2".into(), product: Product::Power, coef: 1.0 }],
            slack_allowed: false,
            slack_penalty: 0.0,
            power_balance: false,
        });
        let prices = PriceVector {
            constraint_ids: vec!["balance".into(), "line".into()],
            values: vec![vec![50.0], vec![-40.0]],
        };
        assert!(prices.conforms_to(&inst, 1e-9));
        let s = Schedule::new(&inst.units[1], vec![50.0], vec![0.0], vec![true]).unwrap();
        assert_eq!(prices.revenue(&inst, 1, &s), 500.0);
    }
}
