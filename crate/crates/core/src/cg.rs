//! Dantzig-Wolfe column generation for convex hull prices.
//!
//! The restricted master problem (RMP) has one weight column per known
//! schedule, the system rows with their penalised slacks, and one convexity
//! row per unit. Its system-row duals price the per-unit subproblems; any
//! schedule with negative reduced cost joins the pool. When none is left the
//! duals are the convex hull prices.

use crate::lp::{solve_lp_with, Basis, LinearProgram, LpError, LpOptions, LpStatus, RowSense, VarStatus};
use crate::milp::MilpOptions;
use crate::model::{trivial_schedule, ModelError, PriceVector, Product, Schedule, Sense, UcInstance};
use crate::ucbuild::{BuildError, PricingMethod, Subproblem, UcSolution};
use rayon::prelude::*;
use std::time::Instant;
use thiserror::Error;

/// Quantities closer than this are the same schedule.
pub const DEDUP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CgError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("unit {unit}: pool has no column")]
    EmptyPool { unit: String },
    #[error("restricted master problem is {0:?}; add slack to the system constraints or start warm")]
    Rmp(LpStatus),
    #[error("unit {unit}: subproblem returned an existing column with reduced cost {reduced_cost}")]
    DuplicateColumn { unit: String, reduced_cost: f64 },
    #[error("unit {unit} has no feasible schedule: {source}")]
    Subproblem { unit: String, source: BuildError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// Self-schedules at zero prices.
    Flat,
    /// Schedules of a unit-commitment solution.
    Warm,
    #[default]
    Trivial,
}

#[derive(Debug, Clone)]
pub struct CgConfig {
    pub init_mode: InitMode,
    pub reduced_cost_tolerance: f64,
    /// Counted in RMP solves.
    pub max_iterations: usize,
    /// Relative gap for subproblems in intermediate iterations. The final
    /// pass always certifies at 1e-9.
    pub subproblem_gap: f64,
    pub subproblem_node_limit: usize,
    /// Stop each subproblem at its first incumbent pricing below the
    /// tolerance (intermediate iterations only).
    pub early_stop: bool,
    pub parallel_subproblems: bool,
    pub pricing: PricingMethod,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            init_mode: InitMode::Trivial,
            reduced_cost_tolerance: 1e-6,
            max_iterations: 500,
            subproblem_gap: 1e-9,
            subproblem_node_limit: 200_000,
            early_stop: false,
            parallel_subproblems: false,
            pricing: PricingMethod::default(),
        }
    }
}

/// Append-only per-unit schedule lists. Also remembers the global insertion
/// order so RMP column indices stay stable as the pool grows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColumnPool {
    columns: Vec<Vec<Schedule>>,
    order: Vec<(usize, usize)>,
}

impl ColumnPool {
    pub fn new(units: usize) -> Self {
        ColumnPool {
            columns: vec![Vec::new(); units],
            order: Vec::new(),
        }
    }

    /// Add a column; `false` if the unit already has the same commitment
    /// and quantities.
    pub fn add(&mut self, unit: usize, schedule: Schedule) -> bool {
        if self.contains(unit, &schedule) {
            return false;
        }
        self.order.push((unit, self.columns[unit].len()));
        self.columns[unit].push(schedule);
        true
    }

    pub fn contains(&self, unit: usize, schedule: &Schedule) -> bool {
        self.columns[unit]
            .iter()
            .any(|s| s.on == schedule.on && s.same_quantities(schedule, DEDUP_TOL))
    }

    pub fn unit(&self, unit: usize) -> &[Schedule] {
        &self.columns[unit]
    }

    pub fn num_units(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `(unit, index)` pairs in insertion order.
    pub fn order(&self) -> &[(usize, usize)] {
        &self.order
    }
}

/// Where each piece of the RMP lives.
#[derive(Debug, Clone, PartialEq)]
pub struct RmpMap {
    /// `[constraint][hour]`.
    pub system_rows: Vec<Vec<usize>>,
    pub convexity_rows: Vec<usize>,
    /// `[constraint][hour]`.
    pub slack_cols: Vec<Vec<Option<usize>>>,
    /// Surplus and deficit columns of every system row, when present.
    pub artificial_cols: Vec<usize>,
    /// Column of each pool entry, in pool insertion order.
    pub weight_cols: Vec<usize>,
}

pub fn build_rmp(instance: &UcInstance, pool: &ColumnPool) -> Result<(LinearProgram, RmpMap), CgError> {
    build_rmp_with(instance, pool, None)
}

/// [`build_rmp`], optionally with artificial columns of cost `big_m` on
/// both sides of every system row.
pub fn build_rmp_with(
    instance: &UcInstance,
    pool: &ColumnPool,
    big_m: Option<f64>,
) -> Result<(LinearProgram, RmpMap), CgError> {
    for (i, u) in instance.units.iter().enumerate() {
        if pool.unit(i).is_empty() {
            return Err(CgError::EmptyPool { unit: u.id.clone() });
        }
    }
    let t_len = instance.horizon;
    let table = instance.coefficient_table();
    let mut lp = LinearProgram::new();

    // slacks first so that weight columns can be appended between solves
    let mut slack_cols = Vec::new();
    for c in &instance.constraints {
        slack_cols.push(
            (0..t_len)
                .map(|_| c.slack_allowed.then(|| lp.add_col(c.slack_penalty, 0.0, f64::INFINITY)))
                .collect::<Vec<_>>(),
        );
    }
    let n_rows = instance.constraints.len() * t_len;
    let artificial_cols: Vec<usize> = match big_m {
        Some(m) => (0..2 * n_rows).map(|_| lp.add_col(m, 0.0, f64::INFINITY)).collect(),
        None => Vec::new(),
    };
    let weight_cols: Vec<usize> = pool
        .order()
        .iter()
        .map(|&(i, n)| lp.add_col(pool.unit(i)[n].cost, 0.0, f64::INFINITY))
        .collect();

    let mut system_rows = Vec::new();
    for (c, spec) in instance.constraints.iter().enumerate() {
        let sense = match spec.sense {
            Sense::Equality => RowSense::Eq,
            Sense::GreaterEqual => RowSense::Ge,
            Sense::LessEqual => RowSense::Le,
        };
        let mut rows = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let mut coefs = Vec::new();
            if let Some(s) = slack_cols[c][t] {
                coefs.push((s, if spec.sense == Sense::LessEqual { -1.0 } else { 1.0 }));
            }
            if !artificial_cols.is_empty() {
                let k = 2 * (c * t_len + t);
                coefs.push((artificial_cols[k], 1.0));
                coefs.push((artificial_cols[k + 1], -1.0));
            }
            for (k, &(i, n)) in pool.order().iter().enumerate() {
                let [kp, kr] = table[c][i];
                let s = &pool.unit(i)[n];
                let a = kp * s.quantity(Product::Power, t) + kr * s.quantity(Product::Reserve, t);
                if a != 0.0 {
                    coefs.push((weight_cols[k], a));
                }
            }
            rows.push(lp.add_row(sense, spec.rhs[t], &coefs));
        }
        system_rows.push(rows);
    }
    let mut convexity_rows = Vec::new();
    for i in 0..instance.units.len() {
        let coefs: Vec<(usize, f64)> = pool
            .order()
            .iter()
            .enumerate()
            .filter(|(_, &(u, _))| u == i)
            .map(|(k, _)| (weight_cols[k], 1.0))
            .collect();
        convexity_rows.push(lp.add_row(RowSense::Eq, 1.0, &coefs));
    }
    Ok((
        lp,
        RmpMap {
            system_rows,
            convexity_rows,
            slack_cols,
            artificial_cols,
            weight_cols,
        },
    ))
}

/// One priced subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct PricedColumn {
    pub schedule: Schedule,
    /// Subproblem objective `h`, without the convexity constant.
    pub objective: f64,
    /// `h - pi`.
    pub reduced_cost: f64,
}

impl PricedColumn {
    /// Self-schedule profit at the pricing duals.
    pub fn profit(&self) -> f64 {
        -self.objective
    }
}

/// Solve a unit's subproblem at `duals` and attach the reduced cost.
pub fn price_unit(
    instance: &UcInstance,
    unit_idx: usize,
    sub: &mut Subproblem,
    duals: &PriceVector,
    pi: f64,
    opts: &MilpOptions,
) -> Result<PricedColumn, CgError> {
    let unit = &instance.units[unit_idx];
    let sol = sub.solve(unit, duals, opts).map_err(|e| match e {
        BuildError::NoSolution(_) => CgError::Subproblem {
            unit: unit.id.clone(),
            source: e,
        },
        other => CgError::Build(other),
    })?;
    Ok(PricedColumn {
        reduced_cost: sol.objective - pi,
        objective: sol.objective,
        schedule: sol.schedule,
    })
}

/// Initial pool for the chosen mode.
pub fn init_columns(
    instance: &UcInstance,
    mode: InitMode,
    uc_solution: Option<&UcSolution>,
    pricing: PricingMethod,
) -> Result<ColumnPool, CgError> {
    let mut pool = ColumnPool::new(instance.units.len());
    match mode {
        InitMode::Trivial => {
            for (i, u) in instance.units.iter().enumerate() {
                pool.add(i, trivial_schedule(u, instance.horizon)?);
            }
        }
        InitMode::Warm => {
            let sol = uc_solution
                .ok_or_else(|| CgError::Config("warm start needs a unit-commitment solution".into()))?;
            if sol.schedules.len() != instance.units.len() {
                return Err(CgError::Config("warm solution does not match the instance".into()));
            }
            for (i, s) in sol.schedules.iter().enumerate() {
                pool.add(i, s.clone());
            }
        }
        InitMode::Flat => {
            let zero = PriceVector::zeros(instance);
            let opts = MilpOptions::default();
            for i in 0..instance.units.len() {
                let mut sub = Subproblem::new(instance, i).with_method(pricing);
                let col = price_unit(instance, i, &mut sub, &zero, 0.0, &opts)?;
                pool.add(i, col.schedule);
            }
        }
    }
    Ok(pool)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgIterationLog {
    pub iteration: usize,
    pub rmp_objective: f64,
    pub duals: PriceVector,
    pub convexity_duals: Vec<f64>,
    pub columns_added: usize,
    /// Per unit, from the subproblem solved at this iteration's duals.
    pub reduced_costs: Vec<f64>,
    /// `|primal - dual|` objective residual of the RMP solve.
    pub duality_residual: f64,
    pub pool_size: usize,
    pub wall_ms: f64,
}

/// Receives iteration records as they are produced.
pub trait IterationSink {
    fn record(&mut self, log: &CgIterationLog);
}

impl IterationSink for Vec<CgIterationLog> {
    fn record(&mut self, log: &CgIterationLog) {
        self.push(log.clone());
    }
}

/// Discards records.
pub struct NoSink;

impl IterationSink for NoSink {
    fn record(&mut self, _: &CgIterationLog) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChResult {
    pub prices: PriceVector,
    pub convexity_duals: Vec<f64>,
    /// `g*`.
    pub rmp_objective: f64,
    /// `f*`, when a unit-commitment solution was supplied.
    pub uc_objective: Option<f64>,
    pub duality_gap: Option<f64>,
    /// Per unit, the weight of each pool column.
    pub rmp_weights: Vec<Vec<f64>>,
    /// `[constraint][hour]`.
    pub slacks: Vec<Vec<f64>>,
    pub pool: ColumnPool,
    pub logs: Vec<CgIterationLog>,
    pub converged: bool,
    /// Final subproblem solutions, certified at full optimality when
    /// converged.
    pub final_columns: Vec<PricedColumn>,
}

impl ChResult {
    pub fn iterations(&self) -> usize {
        self.logs.len()
    }
}

pub fn run_cg(
    instance: &UcInstance,
    config: &CgConfig,
    uc_solution: Option<&UcSolution>,
) -> Result<ChResult, CgError> {
    run_cg_with_sink(instance, config, uc_solution, &mut NoSink)
}

struct UnitState {
    sub: Subproblem,
}

fn extend_basis(prev: &Basis, old_cols: usize, new_cols: usize) -> Basis {
    let mut status = prev.status[..old_cols].to_vec();
    status.extend(std::iter::repeat(VarStatus::AtLower).take(new_cols - old_cols));
    status.extend_from_slice(&prev.status[old_cols..]);
    Basis { status }
}

pub fn run_cg_with_sink(
    instance: &UcInstance,
    config: &CgConfig,
    uc_solution: Option<&UcSolution>,
    sink: &mut dyn IterationSink,
) -> Result<ChResult, CgError> {
    if !(config.reduced_cost_tolerance > 0.0) {
        return Err(CgError::Config("reduced_cost_tolerance must be positive".into()));
    }
    let violations = crate::model::validate_instance(instance);
    if !violations.is_empty() {
        return Err(BuildError::Invalid(violations).into());
    }
    let tol = config.reduced_cost_tolerance;
    let mut pool = init_columns(instance, config.init_mode, uc_solution, config.pricing)?;
    let mut units: Vec<UnitState> = (0..instance.units.len())
        .map(|i| UnitState {
            sub: Subproblem::new(instance, i).with_method(config.pricing),
        })
        .collect();
    let lp_opts = LpOptions::default();
    let mut basis: Option<(Basis, usize)> = None;
    let mut logs = Vec::new();
    let mut converged = false;
    let mut big_m: Option<f64> = None;

    loop {
        let clock = Instant::now();
        let (lp, map) = build_rmp_with(instance, &pool, big_m)?;
        let warm = basis
            .as_ref()
            .map(|(b, n)| extend_basis(b, *n, lp.num_cols()));
        let sol = solve_lp_with(&lp, &lp_opts, warm.as_ref())?;
        if sol.status == LpStatus::Infeasible && big_m.is_none() {
            big_m = Some(initial_big_m(instance, &pool));
            basis = None;
            continue;
        }
        if sol.status != LpStatus::Optimal {
            return Err(CgError::Rmp(sol.status));
        }
        basis = sol.basis.clone().map(|b| (b, lp.num_cols()));

        let mut duals = PriceVector::zeros(instance);
        for (c, rows) in map.system_rows.iter().enumerate() {
            for (t, &r) in rows.iter().enumerate() {
                duals.values[c][t] = sol.duals[r];
            }
        }
        let pi: Vec<f64> = map.convexity_rows.iter().map(|&r| sol.duals[r]).collect();

        let mut certify = config.subproblem_gap <= 1e-9 && !config.early_stop;
        let (priced, added) = loop {
            let priced = price_all(instance, &mut units, &duals, &pi, config, certify)?;
            let mut added = 0;
            for (i, col) in priced.iter().enumerate() {
                if col.reduced_cost < -tol {
                    if pool.contains(i, &col.schedule) {
                        return Err(CgError::DuplicateColumn {
                            unit: instance.units[i].id.clone(),
                            reduced_cost: col.reduced_cost,
                        });
                    }
                    pool.add(i, col.schedule.clone());
                    added += 1;
                }
            }
            if added > 0 || certify {
                break (priced, added);
            }
            certify = true;
        };

        let log = CgIterationLog {
            iteration: logs.len() + 1,
            rmp_objective: sol.objective,
            duals: duals.clone(),
            convexity_duals: pi.clone(),
            columns_added: added,
            reduced_costs: priced.iter().map(|c| c.reduced_cost).collect(),
            duality_residual: sol.duality_residual(&lp),
            pool_size: pool.len(),
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        };
        sink.record(&log);
        logs.push(log);

        if added == 0 {
            let artificial: f64 = map.artificial_cols.iter().map(|&c| sol.primal[c]).sum();
            match big_m {
                Some(m) if artificial > ARTIFICIAL_TOL => {
                    if m >= MAX_BIG_M {
                        return Err(CgError::Rmp(LpStatus::Infeasible));
                    }
                    big_m = Some(m * 1e3);
                    continue;
                }
                _ => converged = true,
            }
        }
        if converged || logs.len() >= config.max_iterations {
            let mut weights: Vec<Vec<f64>> = (0..instance.units.len())
                .map(|i| vec![0.0; pool.unit(i).len()])
                .collect();
            // columns added in this pass are not in the solved RMP
            for (k, &(i, n)) in pool.order().iter().enumerate().take(map.weight_cols.len()) {
                weights[i][n] = sol.primal[map.weight_cols[k]];
            }
            let slacks = map
                .slack_cols
                .iter()
                .map(|row| row.iter().map(|s| s.map_or(0.0, |c| sol.primal[c])).collect())
                .collect();
            let uc_objective = uc_solution.map(|u| u.evaluated_cost(instance));
            return Ok(ChResult {
                prices: duals,
                convexity_duals: pi,
                rmp_objective: sol.objective,
                uc_objective,
                duality_gap: uc_objective.map(|f| f - sol.objective),
                rmp_weights: weights,
                slacks,
                pool,
                logs,
                converged,
                final_columns: priced,
            });
        }
    }
}

const ARTIFICIAL_TOL: f64 = 1e-9;
const MAX_BIG_M: f64 = 1e15;

fn initial_big_m(instance: &UcInstance, pool: &ColumnPool) -> f64 {
    let costs = pool.order().iter().map(|&(i, n)| pool.unit(i)[n].cost.abs());
    let penalties = instance.constraints.iter().map(|c| c.slack_penalty);
    1e3 * costs.chain(penalties).fold(1.0, f64::max)
}

fn price_all(
    instance: &UcInstance,
    units: &mut [UnitState],
    duals: &PriceVector,
    pi: &[f64],
    config: &CgConfig,
    certify: bool,
) -> Result<Vec<PricedColumn>, CgError> {
    let tol = config.reduced_cost_tolerance;
    let opts_for = |i: usize| MilpOptions {
        gap_target: if certify { 1e-9 } else { config.subproblem_gap },
        node_limit: config.subproblem_node_limit,
        stop_below: (config.early_stop && !certify).then(|| pi[i] - tol),
        ..MilpOptions::default()
    };
    let work = |(i, st): (usize, &mut UnitState)| {
        price_unit(instance, i, &mut st.sub, duals, pi[i], &opts_for(i))
    };
    if config.parallel_subproblems {
        units.par_iter_mut().enumerate().map(work).collect()
    } else {
        units.iter_mut().enumerate().map(work).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SystemConstraintSpec, UnitSpec};

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
            constraints: vec![SystemConstraintSpec::balance("balance", &["G1", "G2"], vec![35.0], Some(1000.0))],
        }
    }

    #[test]
    fn example_one_trace() {
        let inst = ex1();
        let r = run_cg(&inst, &CgConfig::default(), None).unwrap();
        assert!(r.converged);
        assert_eq!(r.logs.len(), 2);
        let first = &r.logs[0];
        assert_eq!(first.duals.values[0][0], 1000.0);
        assert_eq!(first.convexity_duals, vec![-9500.0, 0.0]);
        assert_eq!(first.reduced_costs[0], -38000.0);
        assert!((r.prices.values[0][0] - 10.0).abs() < 1e-9);
        assert!((r.rmp_objective - 750.0).abs() < 1e-9);
        assert_eq!(r.pool.len(), 4);
        assert!((r.rmp_weights[1][0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn warm_start_requires_solution() {
        assert!(matches!(
            init_columns(&ex1(), InitMode::Warm, None, PricingMethod::Runs),
            Err(CgError::Config(_))
        ));
    }

    #[test]
    fn flat_start_free_unit_offline() {
        let inst = UcInstance {
            horizon: 2,
            units: vec![UnitSpec::simple("U", 5.0, 10.0, 3.0)],
            constraints: vec![SystemConstraintSpec::balance("b", &["U"], vec![1.0, 2.0], Some(100.0))],
        };
        let pool = init_columns(&inst, InitMode::Flat, None, PricingMethod::Runs).unwrap();
        assert_eq!(pool.unit(0)[0].power, vec![0.0, 0.0]);
    }

    #[test]
    fn single_column_carries_the_price() {
        let mut u = UnitSpec::simple("U", 10.0, 10.0, 7.0);
        u.must_run = true;
        let inst = UcInstance {
            horizon: 1,
            units: vec![u],
            constraints: vec![SystemConstraintSpec::balance("b", &["U"], vec![10.0], Some(100.0))],
        };
        let r = run_cg(&inst, &CgConfig::default(), None).unwrap();
        assert_eq!(r.rmp_weights[0], vec![1.0]);
        assert!((r.rmp_objective - 70.0).abs() < 1e-9);
    }

    #[test]
    fn pool_deduplicates() {
        let u = UnitSpec::simple("U", 0.0, 10.0, 1.0);
        let s = Schedule::new(&u, vec![1.0], vec![0.0], vec![true]).unwrap();
        let mut pool = ColumnPool::new(1);
        assert!(pool.add(0, s.clone()));
        let mut near = s.clone();
        near.power[0] += 1e-12;
        assert!(!pool.add(0, near));
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn parallel_matches_serial() {
        let inst = ex1();
        let serial = run_cg(&inst, &CgConfig::default(), None).unwrap();
        let cfg = CgConfig {
            parallel_subproblems: true,
            ..CgConfig::default()
        };
        let par = run_cg(&inst, &cfg, None).unwrap();
        assert_eq!(serial.pool, par.pool);
        assert_eq!(serial.prices, par.prices);
    }
}
