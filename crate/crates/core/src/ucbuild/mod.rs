//! Unit-commitment instances as solver matrices: the full three-binary MILP,
//! its integer relaxation and the per-unit pricing subproblem.

use crate::lp::{Basis, LinearProgram, LpError, LpSolution, RowSense};
use crate::milp::{solve_milp_with, MilpError, MilpOptions, MilpSolution, MilpStatus, MixedIntegerProgram, INT_TOL};
use crate::model::{
    check_feasible_for, validate_instance, ModelError, PriceVector, Product, Schedule, ScheduleViolation, Sense,
    UcInstance, UnitSpec, Violation,
};
use thiserror::Error;

mod runs;
pub use runs::best_schedule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("invalid instance: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("no dual for constraint {0}")]
    MissingDual(String),
    #[error("unit {unit}: commitment value {value} at hour {hour} is not integral")]
    NonIntegral { unit: String, hour: usize, value: f64 },
    #[error("unit {unit}: extracted schedule infeasible: {violation}")]
    Infeasible { unit: String, violation: ScheduleViolation },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("unit-commitment problem has no feasible solution ({0:?})")]
    NoSolution(MilpStatus),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Power,
    Block(usize),
    Reserve,
    On,
    Start,
    Stop,
}

/// Column indices of one unit's variables, indexed by hour.
///
/// Single-block units price their power column directly and have no block
/// columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UnitColumns {
    pub power: Vec<usize>,
    pub blocks: Vec<Vec<usize>>,
    pub reserve: Vec<Option<usize>>,
    pub on: Vec<usize>,
    pub start: Vec<usize>,
    pub stop: Vec<usize>,
}

impl UnitColumns {
    pub fn column(&self, hour: usize, role: Role) -> Option<usize> {
        match role {
            Role::Power => self.power.get(hour).copied(),
            Role::Block(b) => self.blocks.get(hour).and_then(|v| v.get(b)).copied(),
            Role::Reserve => self.reserve.get(hour).copied().flatten(),
            Role::On => self.on.get(hour).copied(),
            Role::Start => self.start.get(hour).copied(),
            Role::Stop => self.stop.get(hour).copied(),
        }
    }

    fn binaries(&self) -> impl Iterator<Item = usize> + '_ {
        self.on.iter().chain(&self.start).chain(&self.stop).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VariableLayout {
    pub units: Vec<UnitColumns>,
    /// `[constraint][hour]` slack column, where slack is allowed.
    pub slacks: Vec<Vec<Option<usize>>>,
    /// `[constraint][hour]` row index of each system constraint.
    pub system_rows: Vec<Vec<usize>>,
}

impl VariableLayout {
    pub fn column(&self, unit: usize, hour: usize, role: Role) -> Option<usize> {
        self.units.get(unit).and_then(|u| u.column(hour, role))
    }

    /// System-constraint duals read off an LP solution.
    pub fn prices(&self, instance: &UcInstance, sol: &LpSolution) -> PriceVector {
        let mut p = PriceVector::zeros(instance);
        for (c, rows) in self.system_rows.iter().enumerate() {
            for (t, &r) in rows.iter().enumerate() {
                p.values[c][t] = sol.duals[r];
            }
        }
        p
    }
}

/// Append the columns and unit-specific rows of `unit` to `lp`. Costs are
/// the as-offered costs; binaries are returned through the layout.
pub fn add_unit(lp: &mut LinearProgram, unit: &UnitSpec, horizon: usize) -> UnitColumns {
    let t_len = horizon;
    let [ru, rd, rsu, rsd] = unit.effective_ramps();
    let multi_block = unit.blocks.len() > 1;
    let power_cap = if unit.blocks.is_empty() {
        unit.p_max
    } else {
        unit.p_max.min(unit.block_capacity())
    };
    let power_price = if unit.blocks.len() == 1 { unit.blocks[0].price } else { 0.0 };
    let forced_on = if unit.must_run { t_len } else { unit.forced_online(t_len) };
    let forced_off = unit.forced_offline(t_len);

    let mut cols = UnitColumns::default();
    for t in 0..t_len {
        cols.power.push(lp.add_col(power_price, 0.0, power_cap));
        if multi_block {
            cols.blocks
                .push(unit.blocks.iter().map(|b| lp.add_col(b.price, 0.0, b.max_quantity)).collect());
        }
        cols.reserve.push(
            unit.offers_reserve()
                .then(|| lp.add_col(unit.reserve_offer_price, 0.0, unit.reserve_max.min(unit.p_max))),
        );
        let (lo, hi) = if t < forced_on {
            (1.0, 1.0)
        } else if t < forced_off {
            (0.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        cols.on.push(lp.add_col(unit.no_load_cost, lo, hi));
        cols.start.push(lp.add_col(unit.startup_cost, 0.0, 1.0));
        cols.stop.push(lp.add_col(unit.shutdown_cost, 0.0, 1.0));
    }

    let init_on = if unit.init_online { 1.0 } else { 0.0 };
    let init_p = unit.initial_power();
    for t in 0..t_len {
        let (p, u, v, w) = (cols.power[t], cols.on[t], cols.start[t], cols.stop[t]);
        if multi_block {
            let mut sum = vec![(p, 1.0)];
            for (b, &pb) in cols.blocks[t].iter().enumerate() {
                lp.add_row(RowSense::Le, 0.0, &[(pb, 1.0), (u, -unit.blocks[b].max_quantity)]);
                sum.push((pb, -1.0));
            }
            lp.add_row(RowSense::Eq, 0.0, &sum);
        }
        if unit.p_min > 0.0 {
            lp.add_row(RowSense::Ge, 0.0, &[(p, 1.0), (u, -unit.p_min)]);
        }
        let mut cap = vec![(p, 1.0), (u, -unit.p_max)];
        if let Some(r) = cols.reserve[t] {
            cap.push((r, 1.0));
        }
        lp.add_row(RowSense::Le, 0.0, &cap);
        if unit.single_block_commitment {
            lp.add_row(RowSense::Eq, 0.0, &[(p, 1.0), (u, -unit.p_max)]);
        }

        // ramping, anchored to the initial state in the first hour
        if ru < unit.p_max || rsu < unit.p_max {
            if t == 0 {
                lp.add_row(RowSense::Le, init_p + ru * init_on, &[(p, 1.0), (v, -rsu)]);
            } else {
                let (pp, up) = (cols.power[t - 1], cols.on[t - 1]);
                lp.add_row(RowSense::Le, 0.0, &[(p, 1.0), (pp, -1.0), (up, -ru), (v, -rsu)]);
            }
        }
        if rd < unit.p_max || rsd < unit.p_max {
            if t == 0 {
                lp.add_row(RowSense::Le, -init_p, &[(p, -1.0), (u, -rd), (w, -rsd)]);
            } else {
                let pp = cols.power[t - 1];
                lp.add_row(RowSense::Le, 0.0, &[(pp, 1.0), (p, -1.0), (u, -rd), (w, -rsd)]);
            }
        }

        if t == 0 {
            lp.add_row(RowSense::Eq, init_on, &[(u, 1.0), (v, -1.0), (w, 1.0)]);
        } else {
            lp.add_row(RowSense::Eq, 0.0, &[(u, 1.0), (cols.on[t - 1], -1.0), (v, -1.0), (w, 1.0)]);
        }

        // rolling min up / down windows, truncated at the horizon start
        let lo = (t + 1).saturating_sub(unit.min_up_time.max(1));
        let mut row: Vec<(usize, f64)> = (lo..=t).map(|s| (cols.start[s], 1.0)).collect();
        row.push((u, -1.0));
        lp.add_row(RowSense::Le, 0.0, &row);
        let lo = (t + 1).saturating_sub(unit.min_down_time.max(1));
        let mut row: Vec<(usize, f64)> = (lo..=t).map(|s| (cols.stop[s], 1.0)).collect();
        row.push((u, 1.0));
        lp.add_row(RowSense::Le, 1.0, &row);

        if unit.uniform_commitment && t > 0 {
            lp.add_row(RowSense::Eq, 0.0, &[(u, 1.0), (cols.on[0], -1.0)]);
        }
    }
    cols
}

fn check_instance(instance: &UcInstance) -> Result<(), BuildError> {
    let v = validate_instance(instance);
    if v.is_empty() {
        Ok(())
    } else {
        Err(BuildError::Invalid(v))
    }
}

fn lp_sense(s: Sense) -> RowSense {
    match s {
        Sense::Equality => RowSense::Eq,
        Sense::GreaterEqual => RowSense::Ge,
        Sense::LessEqual => RowSense::Le,
    }
}

/// The full unit-commitment MILP with penalised slacks.
pub fn build_full_uc(instance: &UcInstance) -> Result<(MixedIntegerProgram, VariableLayout), BuildError> {
    check_instance(instance)?;
    let t_len = instance.horizon;
    let mut lp = LinearProgram::new();
    let mut layout = VariableLayout::default();
    for u in &instance.units {
        layout.units.push(add_unit(&mut lp, u, t_len));
    }
    for c in &instance.constraints {
        let mut slacks = Vec::with_capacity(t_len);
        let mut rows = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let mut coefs = Vec::new();
            for k in &c.coefficients {
                let i = instance.unit_index(&k.unit).expect("validated");
                let col = match k.product {
                    Product::Power => Some(layout.units[i].power[t]),
                    Product::Reserve => layout.units[i].reserve[t],
                };
                if let Some(col) = col {
                    coefs.push((col, k.coef));
                }
            }
            let slack = c.slack_allowed.then(|| lp.add_col(c.slack_penalty, 0.0, f64::INFINITY));
            if let Some(s) = slack {
                // deficit slack: always on the side that relaxes the row
                let sign = if c.sense == Sense::LessEqual { -1.0 } else { 1.0 };
                coefs.push((s, sign));
            }
            rows.push(lp.add_row(lp_sense(c.sense), c.rhs[t], &coefs));
            slacks.push(slack);
        }
        layout.slacks.push(slacks);
        layout.system_rows.push(rows);
    }
    let integer_columns = layout.units.iter().flat_map(|u| u.binaries()).collect();
    Ok((
        MixedIntegerProgram {
            base: lp,
            integer_columns,
        },
        layout,
    ))
}

/// The full problem with binaries relaxed to `[0, 1]`.
pub fn build_integer_relaxation(instance: &UcInstance) -> Result<(LinearProgram, VariableLayout), BuildError> {
    let (mip, layout) = build_full_uc(instance)?;
    Ok((mip.base, layout))
}

/// Solve the integer relaxation and return its objective and balance duals.
pub fn solve_integer_relaxation(instance: &UcInstance) -> Result<(LpSolution, PriceVector), BuildError> {
    let (lp, layout) = build_integer_relaxation(instance)?;
    let sol = crate::lp::solve_lp(&lp)?;
    if sol.status != crate::lp::LpStatus::Optimal {
        return Err(BuildError::NoSolution(MilpStatus::Infeasible));
    }
    let prices = layout.prices(instance, &sol);
    Ok((sol, prices))
}

/// How a pricing subproblem is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PricingMethod {
    /// Dynamic programming over online runs.
    #[default]
    Runs,
    /// Branch and bound on the three-binary MILP.
    Milp,
}

/// A unit's pricing problem with its constraint rows fixed; only the
/// objective depends on the duals.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub mip: MixedIntegerProgram,
    pub method: PricingMethod,
    pub columns: UnitColumns,
    base_cost: Vec<f64>,
    /// `[constraint]` coefficients of this unit, `[power, reserve]`.
    coefs: Vec<[f64; 2]>,
    basis: Option<Basis>,
}

impl Subproblem {
    pub fn new(instance: &UcInstance, unit_idx: usize) -> Self {
        let unit = &instance.units[unit_idx];
        let mut lp = LinearProgram::new();
        let columns = add_unit(&mut lp, unit, instance.horizon);
        let integer_columns = columns.binaries().collect();
        let coefs = instance
            .constraints
            .iter()
            .map(|c| [c.coef(&unit.id, Product::Power), c.coef(&unit.id, Product::Reserve)])
            .collect();
        Subproblem {
            base_cost: lp.objective.clone(),
            mip: MixedIntegerProgram {
                base: lp,
                integer_columns,
            },
            columns,
            coefs,
            basis: None,
            method: PricingMethod::default(),
        }
    }

    pub fn with_method(mut self, method: PricingMethod) -> Self {
        self.method = method;
        self
    }

    /// Net power and reserve prices seen by this unit, per hour.
    pub fn net_prices(&self, duals: &PriceVector) -> Result<(Vec<f64>, Vec<f64>), BuildError> {
        let t_len = self.columns.power.len();
        let mut power = vec![0.0; t_len];
        let mut reserve = vec![0.0; t_len];
        for (c, k) in self.coefs.iter().enumerate() {
            if k[0] == 0.0 && k[1] == 0.0 {
                continue;
            }
            let row = duals
                .values
                .get(c)
                .filter(|v| v.len() == t_len)
                .ok_or_else(|| BuildError::MissingDual(format!("#{c}")))?;
            for (t, &d) in row.iter().enumerate() {
                power[t] += d * k[0];
                reserve[t] += d * k[1];
            }
        }
        Ok((power, reserve))
    }

    /// Install `f_i - sum(dual * coef * quantity)` as the objective.
    pub fn set_duals(&mut self, duals: &PriceVector) -> Result<(), BuildError> {
        let obj = &mut self.mip.base.objective;
        obj.copy_from_slice(&self.base_cost);
        for (c, k) in self.coefs.iter().enumerate() {
            if k[0] == 0.0 && k[1] == 0.0 {
                continue;
            }
            let row = duals
                .values
                .get(c)
                .filter(|v| v.len() == self.columns.power.len())
                .ok_or_else(|| BuildError::MissingDual(format!("#{c}")))?;
            for (t, &d) in row.iter().enumerate() {
                obj[self.columns.power[t]] -= d * k[0];
                if let Some(r) = self.columns.reserve[t] {
                    obj[r] -= d * k[1];
                }
            }
        }
        Ok(())
    }
}

/// Optimal schedule of a pricing subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub schedule: Schedule,
    /// `cost - dual-weighted revenue` of the schedule, without the
    /// convexity constant.
    pub objective: f64,
    pub nodes: usize,
}

impl Subproblem {
    /// Dual-weighted revenue of a schedule of this unit.
    pub fn revenue(&self, duals: &PriceVector, schedule: &Schedule) -> f64 {
        let mut total = 0.0;
        for (c, k) in self.coefs.iter().enumerate() {
            for t in 0..schedule.horizon() {
                total += duals.values[c][t] * (k[0] * schedule.power[t] + k[1] * schedule.reserve[t]);
            }
        }
        total
    }

    /// Solve for `duals`. The MILP path reuses the root basis of the
    /// previous solve.
    pub fn solve(
        &mut self,
        unit: &UnitSpec,
        duals: &PriceVector,
        opts: &MilpOptions,
    ) -> Result<SubproblemSolution, BuildError> {
        if self.method == PricingMethod::Runs {
            let (power, reserve) = self.net_prices(duals)?;
            let schedule =
                best_schedule(unit, &power, &reserve).ok_or(BuildError::NoSolution(MilpStatus::Infeasible))?;
            let objective = schedule.cost - self.revenue(duals, &schedule);
            return Ok(SubproblemSolution {
                schedule,
                objective,
                nodes: 0,
            });
        }
        self.set_duals(duals)?;
        let sol = solve_milp_with(&self.mip, opts, self.basis.as_ref())?;
        if sol.root_basis.is_some() {
            self.basis = sol.root_basis.clone();
        }
        if !matches!(sol.status, MilpStatus::Optimal | MilpStatus::GapLimit) {
            return Err(BuildError::NoSolution(sol.status));
        }
        let schedule = extract_schedule(unit, &self.columns, &sol.primal)?;
        let objective = schedule.cost - self.revenue(duals, &schedule);
        Ok(SubproblemSolution {
            schedule,
            objective,
            nodes: sol.nodes,
        })
    }
}

/// Pricing subproblem of `unit_idx` for the given duals.
pub fn build_subproblem(
    instance: &UcInstance,
    unit_idx: usize,
    duals: &PriceVector,
) -> Result<(MixedIntegerProgram, UnitColumns), BuildError> {
    let mut sp = Subproblem::new(instance, unit_idx);
    sp.set_duals(duals)?;
    Ok((sp.mip, sp.columns))
}

fn clean(x: f64) -> f64 {
    if x.abs() < 1e-9 {
        0.0
    } else {
        x
    }
}

/// Read one unit's schedule off an integer-feasible primal vector. The cost
/// is re-evaluated from the offers.
pub fn extract_schedule(
    unit: &UnitSpec,
    columns: &UnitColumns,
    primal: &[f64],
) -> Result<Schedule, BuildError> {
    let t_len = columns.power.len();
    let mut on = Vec::with_capacity(t_len);
    let mut power = Vec::with_capacity(t_len);
    let mut reserve = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let u = primal[columns.on[t]];
        if (u - u.round()).abs() > INT_TOL {
            return Err(BuildError::NonIntegral {
                unit: unit.id.clone(),
                hour: t,
                value: u,
            });
        }
        let u = u.round() > 0.5;
        on.push(u);
        let r = columns.reserve[t].map_or(0.0, |c| clean(primal[c]).max(0.0));
        let mut p = clean(primal[columns.power[t]]).max(0.0);
        if u {
            p = p.clamp(unit.p_min, unit.p_max);
            if unit.single_block_commitment {
                p = unit.p_max;
            }
        } else {
            p = 0.0;
        }
        power.push(p);
        reserve.push(if u { r } else { 0.0 });
    }
    let schedule = Schedule::new(unit, power, reserve, on)?;
    check_feasible_for(unit, &schedule, t_len).map_err(|violation| BuildError::Infeasible {
        unit: unit.id.clone(),
        violation,
    })?;
    Ok(schedule)
}

/// Optimal (or gap-limited) solution of the full problem.
#[derive(Debug, Clone, PartialEq)]
pub struct UcSolution {
    pub schedules: Vec<Schedule>,
    /// `[constraint][hour]` slack values.
    pub slacks: Vec<Vec<f64>>,
    pub objective: f64,
    pub bound: f64,
    pub status: MilpStatus,
}

impl UcSolution {
    /// Wrap fixed schedules, with the slack each system row then needs.
    /// Rows that cannot be met by slack are reported as errors.
    pub fn from_schedules(instance: &UcInstance, schedules: Vec<Schedule>) -> Result<Self, String> {
        if schedules.len() != instance.units.len()
            || schedules.iter().zip(&instance.units).any(|(s, u)| s.unit_id != u.id)
        {
            return Err("schedules do not match the instance units".into());
        }
        let table = instance.coefficient_table();
        let mut slacks = Vec::new();
        for (c, spec) in instance.constraints.iter().enumerate() {
            let mut row = Vec::new();
            for t in 0..instance.horizon {
                let act: f64 = schedules
                    .iter()
                    .enumerate()
                    .map(|(i, s)| table[c][i][0] * s.power[t] + table[c][i][1] * s.reserve[t])
                    .sum();
                let short = match spec.sense {
                    Sense::Equality | Sense::GreaterEqual => spec.rhs[t] - act,
                    Sense::LessEqual => act - spec.rhs[t],
                };
                let ok_without = match spec.sense {
                    Sense::Equality => short.abs() <= 1e-7,
                    _ => short <= 1e-7,
                };
                if ok_without {
                    row.push(0.0);
                } else if spec.slack_allowed && short > 0.0 {
                    row.push(short);
                } else {
                    return Err(format!("constraint {} violated at hour {t}", spec.id));
                }
            }
            slacks.push(row);
        }
        let mut sol = UcSolution {
            schedules,
            slacks,
            objective: 0.0,
            bound: f64::NEG_INFINITY,
            status: MilpStatus::GapLimit,
        };
        sol.objective = sol.evaluated_cost(instance);
        Ok(sol)
    }

    /// Objective recomputed from schedule costs and slack penalties.
    pub fn evaluated_cost(&self, instance: &UcInstance) -> f64 {
        let units: f64 = self.schedules.iter().map(|s| s.cost).sum();
        let slack: f64 = self
            .slacks
            .iter()
            .zip(&instance.constraints)
            .map(|(s, c)| s.iter().sum::<f64>() * c.slack_penalty)
            .sum();
        units + slack
    }
}

pub fn solve_full_uc(instance: &UcInstance, opts: &MilpOptions) -> Result<UcSolution, BuildError> {
    let (mip, layout) = build_full_uc(instance)?;
    let sol: MilpSolution = solve_milp_with(&mip, opts, None)?;
    if !matches!(sol.status, MilpStatus::Optimal | MilpStatus::GapLimit) {
        return Err(BuildError::NoSolution(sol.status));
    }
    let schedules = instance
        .units
        .iter()
        .zip(&layout.units)
        .map(|(u, cols)| extract_schedule(u, cols, &sol.primal))
        .collect::<Result<Vec<_>, _>>()?;
    let slacks = layout
        .slacks
        .iter()
        .map(|row| row.iter().map(|s| s.map_or(0.0, |c| clean(sol.primal[c]))).collect())
        .collect();
    Ok(UcSolution {
        schedules,
        slacks,
        objective: sol.objective,
        bound: sol.bound,
        status: sol.status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve_lp;
    use crate::milp::solve_milp;
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

    fn ramp() -> UcInstance {
        let g1 = UnitSpec::simple("G1", 0.0, 100.0, 10.0);
        let mut g2 = UnitSpec::simple("G2", 20.0, 35.0, 50.0);
        g2.startup_cost = 1000.0;
        g2.no_load_cost = 30.0;
        g2.ramp_up = 5.0;
        g2.ramp_down = 5.0;
        g2.startup_ramp = 22.5;
        g2.shutdown_ramp = 35.0;
        UcInstance {
            horizon: 3,
            units: vec![g1, g2],
            constraints: vec![SystemConstraintSpec::balance(
                "balance",
                &["G1", "G2"],
                vec![95.0, 100.0, 130.0],
                Some(1000.0),
            )],
        }
    }

    #[test]
    fn example_one_full_uc() {
        let s = solve_full_uc(&ex1(), &MilpOptions::default()).unwrap();
        assert_eq!(s.objective, 1750.0);
        assert_eq!(s.schedules[0].power, vec![35.0]);
        assert_eq!(s.evaluated_cost(&ex1()), 1750.0);
    }

    #[test]
    fn ramp_full_uc_and_relaxation() {
        let inst = ramp();
        let s = solve_full_uc(&inst, &MilpOptions::default()).unwrap();
        assert!((s.objective - 7340.0).abs() < 1e-6);
        let p2 = &s.schedules[1].power;
        for (a, b) in p2.iter().zip([20.0, 25.0, 30.0]) {
            assert!((a - b).abs() < 1e-6);
        }
        let (ir, prices) = solve_integer_relaxation(&inst).unwrap();
        assert!((ir.objective - 6464.55).abs() < 1e-2, "{}", ir.objective);
        for (a, b) in prices.values[0].iter().zip([10.0, 10.0, 182.701]) {
            assert!((a - b).abs() < 1e-3, "{:?}", prices.values);
        }
    }

    #[test]
    fn zero_demand_is_all_offline() {
        let mut inst = ramp();
        inst.constraints[0].rhs = vec![0.0; 3];
        let s = solve_full_uc(&inst, &MilpOptions::default()).unwrap();
        assert_eq!(s.objective, 0.0);
        assert!(s.schedules.iter().all(|x| x.on.iter().all(|&o| !o)));
    }

    #[test]
    fn example_one_subproblem() {
        let inst = ex1();
        let duals = PriceVector::single(&inst, vec![1000.0]);
        let (mip, cols) = build_subproblem(&inst, 0, &duals).unwrap();
        let s = solve_milp(&mip, 1e-9, 1000).unwrap();
        assert_eq!(s.objective, -47500.0);
        let sched = extract_schedule(&inst.units[0], &cols, &s.primal).unwrap();
        assert_eq!(sched.power, vec![50.0]);
        assert_eq!(sched.cost, 2500.0);
    }

    #[test]
    fn missing_dual_rejected() {
        let inst = ex1();
        let duals = PriceVector {
            constraint_ids: vec![],
            values: vec![],
        };
        assert!(matches!(build_subproblem(&inst, 0, &duals), Err(BuildError::MissingDual(_))));
    }

    #[test]
    fn ramp_subproblem_column() {
        // duals at which the startup trajectory (22.5, 27.5, 32.5) is optimal
        let inst = ramp();
        let duals = PriceVector::single(&inst, vec![1000.0, 1000.0, 1000.0]);
        let (mip, cols) = build_subproblem(&inst, 1, &duals).unwrap();
        let s = solve_milp(&mip, 1e-9, 1000).unwrap();
        let sched = extract_schedule(&inst.units[1], &cols, &s.primal).unwrap();
        for (a, b) in sched.power.iter().zip([22.5, 27.5, 32.5]) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((sched.cost - 5215.0).abs() < 1e-9);
    }

    #[test]
    fn all_zero_primal_is_offline() {
        let inst = ramp();
        let (mip, layout) = build_full_uc(&inst).unwrap();
        let x = vec![0.0; mip.base.num_cols()];
        let s = extract_schedule(&inst.units[1], &layout.units[1], &x).unwrap();
        assert_eq!(s.cost, 0.0);
        assert!(s.power.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn fractional_commitment_rejected() {
        let inst = ramp();
        let (lp, layout) = build_integer_relaxation(&inst).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert!(matches!(
            extract_schedule(&inst.units[1], &layout.units[1], &sol.primal),
            Err(BuildError::NonIntegral { .. })
        ));
    }

    #[test]
    fn multi_block_costs_match_evaluation() {
        let mut u = UnitSpec::simple("U", 10.0, 60.0, 20.0);
        u.blocks = vec![
            crate::model::BlockOffer { max_quantity: 30.0, price: 20.0 },
            crate::model::BlockOffer { max_quantity: 30.0, price: 40.0 },
        ];
        u.no_load_cost = 100.0;
        let inst = UcInstance {
            horizon: 2,
            units: vec![u],
            constraints: vec![SystemConstraintSpec::balance("b", &["U"], vec![45.0, 20.0], Some(1000.0))],
        };
        let s = solve_full_uc(&inst, &MilpOptions::default()).unwrap();
        let expected = 100.0 * 2.0 + 30.0 * 20.0 + 15.0 * 40.0 + 20.0 * 20.0;
        assert!((s.objective - expected).abs() < 1e-9);
        assert!((s.schedules[0].cost - expected).abs() < 1e-9);
    }
}
