//! Uplift accounting at given prices and the Lagrangian dual function,
//! including a plain sub-gradient ascent baseline.

use crate::cg::ChResult;
use crate::milp::MilpOptions;
use crate::model::{PriceVector, Schedule, Sense, UcInstance};
use crate::ucbuild::{BuildError, Subproblem, UcSolution};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Build(#[from] BuildError),
}

fn exact() -> MilpOptions {
    MilpOptions::default()
}

/// Dual-weighted revenue minus as-offered cost.
pub fn unit_profit(instance: &UcInstance, unit_idx: usize, schedule: &Schedule, prices: &PriceVector) -> f64 {
    prices.revenue(instance, unit_idx, schedule) - schedule.cost
}

/// Profit-maximising schedule of one unit at `prices`, and its profit.
pub fn self_schedule(
    instance: &UcInstance,
    unit_idx: usize,
    prices: &PriceVector,
) -> Result<(Schedule, f64), AnalyticsError> {
    let mut sub = Subproblem::new(instance, unit_idx);
    let sol = sub.solve(&instance.units[unit_idx], prices, &exact())?;
    Ok((sol.schedule, -sol.objective))
}

/// Lost opportunity cost: self-schedule profit minus market profit.
pub fn compute_loc(
    instance: &UcInstance,
    unit_idx: usize,
    market: &Schedule,
    prices: &PriceVector,
) -> Result<f64, AnalyticsError> {
    let (_, best) = self_schedule(instance, unit_idx, prices)?;
    Ok(best - unit_profit(instance, unit_idx, market, prices))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitUplift {
    pub unit: String,
    pub market_profit: f64,
    pub self_profit: f64,
    pub loc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpliftReport {
    pub prices: PriceVector,
    pub units: Vec<UnitUplift>,
    pub total_loc: f64,
    /// Part of the duality gap not explained by unit LOCs.
    pub prs: f64,
    pub uc_cost: f64,
    pub ch_objective: f64,
    pub duality_gap: f64,
}

/// Settle `market` at the prices of `ch`.
pub fn uplift_report(
    instance: &UcInstance,
    market: &UcSolution,
    ch: &ChResult,
) -> Result<UpliftReport, AnalyticsError> {
    if market.schedules.len() != instance.units.len()
        || market.schedules.iter().zip(&instance.units).any(|(s, u)| s.unit_id != u.id || s.horizon() != instance.horizon)
    {
        return Err(AnalyticsError::Mismatch("market schedules do not match the instance".into()));
    }
    if !ch.prices.conforms_to(instance, f64::INFINITY) {
        return Err(AnalyticsError::Mismatch("prices do not match the instance".into()));
    }
    let prices = &ch.prices;
    let units = instance
        .units
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let market_profit = unit_profit(instance, i, &market.schedules[i], prices);
            let (_, self_profit) = self_schedule(instance, i, prices)?;
            Ok(UnitUplift {
                unit: u.id.clone(),
                market_profit,
                self_profit,
                loc: self_profit - market_profit,
            })
        })
        .collect::<Result<Vec<_>, AnalyticsError>>()?;
    let total_loc = units.iter().map(|u| u.loc).sum::<f64>();
    let uc_cost = market.evaluated_cost(instance);
    let gap = uc_cost - ch.rmp_objective;
    Ok(UpliftReport {
        prices: prices.clone(),
        units,
        total_loc,
        prs: gap - total_loc,
        uc_cost,
        ch_objective: ch.rmp_objective,
        duality_gap: gap,
    })
}

/// Prices this close to a slack penalty count as equal to it.
pub const PENALTY_REL_TOL: f64 = 1e-9;

/// Reusable evaluator of `q(lambda) = sum_i min_i [f_i - lambda x_i] + lambda b`.
pub struct DualFunction<'a> {
    instance: &'a UcInstance,
    subs: Vec<Subproblem>,
    pub parallel: bool,
}

/// Value of the dual function and one subgradient.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEvaluation {
    pub value: f64,
    /// `[constraint][hour]` of `rhs - activity`.
    pub subgradient: Vec<Vec<f64>>,
    pub schedules: Vec<Schedule>,
}

impl<'a> DualFunction<'a> {
    pub fn new(instance: &'a UcInstance) -> Self {
        DualFunction {
            instance,
            subs: (0..instance.units.len()).map(|i| Subproblem::new(instance, i)).collect(),
            parallel: false,
        }
    }

    pub fn evaluate(&mut self, prices: &PriceVector) -> Result<DualEvaluation, AnalyticsError> {
        let inst = self.instance;
        if !prices.conforms_to(inst, 0.0) {
            return Err(AnalyticsError::Mismatch(
                "prices have the wrong shape or sign for the constraints".into(),
            ));
        }
        let opts = exact();
        let work = |(i, sub): (usize, &mut Subproblem)| sub.solve(&inst.units[i], prices, &opts);
        let sols = if self.parallel {
            self.subs.par_iter_mut().enumerate().map(work).collect::<Result<Vec<_>, _>>()?
        } else {
            self.subs.iter_mut().enumerate().map(work).collect::<Result<Vec<_>, _>>()?
        };
        let mut value: f64 = sols.iter().map(|s| s.objective).sum();
        let table = inst.coefficient_table();
        let mut subgradient = Vec::new();
        for (c, spec) in inst.constraints.iter().enumerate() {
            let mut row = Vec::new();
            for t in 0..inst.horizon {
                let lambda = prices.values[c][t];
                value += lambda * spec.rhs[t];
                if spec.slack_allowed {
                    // min over s >= 0 of (penalty - lambda) s, or (penalty + lambda) s on <= rows
                    let sigma = if spec.sense == Sense::LessEqual { -1.0 } else { 1.0 };
                    if sigma * lambda > spec.slack_penalty * (1.0 + PENALTY_REL_TOL) {
                        value = f64::NEG_INFINITY;
                    }
                }
                let act: f64 = sols
                    .iter()
                    .enumerate()
                    .map(|(i, s)| table[c][i][0] * s.schedule.power[t] + table[c][i][1] * s.schedule.reserve[t])
                    .sum();
                row.push(spec.rhs[t] - act);
            }
            subgradient.push(row);
        }
        Ok(DualEvaluation {
            value,
            subgradient,
            schedules: sols.into_iter().map(|s| s.schedule).collect(),
        })
    }
}

pub fn evaluate_dual_function(instance: &UcInstance, prices: &PriceVector) -> Result<f64, AnalyticsError> {
    Ok(DualFunction::new(instance).evaluate(prices)?.value)
}

/// Step size as a function of the iteration counter `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `c / k`
    OverK(f64),
    /// `c / sqrt(k)`
    OverSqrtK(f64),
    Constant(f64),
}

impl StepRule {
    pub fn step(&self, k: usize) -> f64 {
        let k = k as f64;
        match *self {
            StepRule::OverK(c) => c / k,
            StepRule::OverSqrtK(c) => c / k.sqrt(),
            StepRule::Constant(c) => c,
        }
    }
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepRule::OverK(c) => write!(f, "{c}/k"),
            StepRule::OverSqrtK(c) => write!(f, "{c}/sqrt(k)"),
            StepRule::Constant(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for StepRule {
    type Err = String;

    /// Accepts `c/k`, `c/sqrt(k)`, `c/√k`, `1/k` style forms or a constant.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().replace(' ', "");
        let num = |x: &str| {
            if x.is_empty() {
                Ok(1.0)
            } else {
                x.parse::<f64>().map_err(|_| format!("bad step coefficient `{x}`"))
            }
        };
        if let Some(c) = s.strip_suffix("/k") {
            return Ok(StepRule::OverK(num(c)?));
        }
        for suffix in ["/sqrt(k)", "/√k"] {
            if let Some(c) = s.strip_suffix(suffix) {
                return Ok(StepRule::OverSqrtK(num(c)?));
            }
        }
        Ok(StepRule::Constant(num(&s)?))
    }
}

#[derive(Debug, Clone)]
pub struct SubgradientConfig {
    pub step: StepRule,
    pub iterations: usize,
    /// Starting prices; zero when absent.
    pub initial: Option<PriceVector>,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientResult {
    /// Prices at which each `values[k]` was evaluated.
    pub trajectory: Vec<PriceVector>,
    pub values: Vec<f64>,
    pub best_prices: PriceVector,
    pub best_value: f64,
    pub final_prices: PriceVector,
}

/// Raw sub-gradient ascent `lambda <- lambda + step_k (b - A x)`. Iterates
/// of inequality rows are clipped to their sign; equality rows are not
/// projected.
pub fn run_subgradient(instance: &UcInstance, config: &SubgradientConfig) -> Result<SubgradientResult, AnalyticsError> {
    if config.iterations == 0 {
        return Err(AnalyticsError::Mismatch("at least one iteration is required".into()));
    }
    let mut prices = config.initial.clone().unwrap_or_else(|| PriceVector::zeros(instance));
    let mut f = DualFunction::new(instance);
    f.parallel = config.parallel;
    let mut trajectory = Vec::with_capacity(config.iterations);
    let mut values = Vec::with_capacity(config.iterations);
    let mut best = (f64::NEG_INFINITY, prices.clone());
    for k in 1..=config.iterations {
        let eval = f.evaluate(&prices)?;
        if eval.value > best.0 {
            best = (eval.value, prices.clone());
        }
        trajectory.push(prices.clone());
        values.push(eval.value);
        let step = config.step.step(k);
        for (c, spec) in instance.constraints.iter().enumerate() {
            for t in 0..instance.horizon {
                let v = &mut prices.values[c][t];
                *v += step * eval.subgradient[c][t];
                match spec.sense {
                    Sense::GreaterEqual => *v = v.max(0.0),
                    Sense::LessEqual => *v = v.min(0.0),
                    Sense::Equality => {}
                }
            }
        }
    }
    Ok(SubgradientResult {
        trajectory,
        values,
        best_prices: best.1,
        best_value: best.0,
        final_prices: prices,
    })
}

/// `q` along a line: `prices` with entry `(constraint, hour)` replaced by
/// each of `grid`.
pub fn sweep_dual(
    instance: &UcInstance,
    prices: &PriceVector,
    constraint: usize,
    hour: usize,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>, AnalyticsError> {
    let mut f = DualFunction::new(instance);
    let mut p = prices.clone();
    grid.iter()
        .map(|&x| {
            p.values[constraint][hour] = x;
            Ok((x, f.evaluate(&p)?.value))
        })
        .collect()
}
