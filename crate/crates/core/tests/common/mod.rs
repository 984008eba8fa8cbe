#![allow(dead_code)]

use chprice::model::{
    check_feasible, BlockOffer, Coefficient, Product, Schedule, Sense, SystemConstraintSpec, UcInstance, UnitSpec,
};
use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

pub const PENALTY: f64 = 500.0;

fn ramp(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        f64::INFINITY
    } else {
        f64::from(rng.random_range(1u32..=4))
    }
}

/// A unit whose feasible outputs on the integer grid span its convex hull.
pub fn grid_unit(rng: &mut ChaCha8Rng, id: &str) -> UnitSpec {
    let p_max = f64::from(rng.random_range(1u32..=5));
    let p_min = f64::from(rng.random_range(0..=p_max as u32));
    let mut u = UnitSpec::simple(id, p_min, p_max, 0.0);
    let n_blocks = if p_max >= 2.0 { rng.random_range(1usize..=2) } else { 1 };
    let mut prices: Vec<f64> = (0..n_blocks).map(|_| f64::from(rng.random_range(0u32..=40))).collect();
    prices.sort_by(f64::total_cmp);
    let first = if n_blocks == 2 { f64::from(rng.random_range(1..p_max as u32)) } else { p_max };
    u.blocks = vec![BlockOffer { max_quantity: first, price: prices[0] }];
    if n_blocks == 2 {
        u.blocks.push(BlockOffer { max_quantity: p_max - first, price: prices[1] });
    }
    u.no_load_cost = f64::from(rng.random_range(0u32..=30));
    u.startup_cost = f64::from(rng.random_range(0u32..=80));
    u.shutdown_cost = f64::from(rng.random_range(0u32..=20));
    u.ramp_up = ramp(rng);
    u.ramp_down = ramp(rng);
    u.startup_ramp = ramp(rng);
    u.shutdown_ramp = ramp(rng);
    u.min_up_time = rng.random_range(1usize..=3);
    u.min_down_time = rng.random_range(1usize..=3);
    u.init_online = rng.random_bool(0.4);
    if u.init_online {
        u.init_power = f64::from(rng.random_range(p_min as u32..=p_max as u32));
    }
    match rng.random_range(0u32..12) {
        0 => u.must_run = true,
        1 => u.single_block_commitment = true,
        2 => u.uniform_commitment = true,
        3 => u.forced_hours_online = 1,
        4 => u.forced_hours_offline = 1,
        _ => {}
    }
    u
}

/// Up to three grid units over one to three hours with a balance row that
/// allows deficit at [`PENALTY`].
pub fn grid_instance(seed: u64) -> UcInstance {
    random_instance(seed, 3, 3, false)
}

/// Like [`grid_instance`] with up to `max_units` units and `max_horizon`
/// hours, optionally with a reserve requirement that allows deficit.
pub fn random_instance(seed: u64, max_units: usize, max_horizon: usize, reserve: bool) -> UcInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_units);
    let horizon = rng.random_range(1..=max_horizon);
    let mut units: Vec<UnitSpec> = (0..n).map(|i| grid_unit(&mut rng, &format!("G{}", i + 1))).collect();
    let cap: u32 = units.iter().map(|u| u.p_max as u32).sum();
    let demand = (0..horizon).map(|_| f64::from(rng.random_range(0..=cap))).collect();
    let ids: Vec<&str> = units.iter().map(|u| u.id.as_str()).collect();
    let mut constraints = vec![SystemConstraintSpec::balance("balance", &ids, demand, Some(PENALTY))];
    if reserve {
        for u in &mut units {
            u.reserve_max = f64::from(rng.random_range(0u32..=2));
            u.reserve_offer_price = f64::from(rng.random_range(0u32..=5));
        }
        constraints.push(SystemConstraintSpec {
            id: "reserve".into(),
            sense: Sense::GreaterEqual,
            rhs: (0..horizon).map(|_| f64::from(rng.random_range(0u32..=3))).collect(),
            coefficients: units
                .iter()
                .filter(|u| u.reserve_max > 0.0)
                .map(|u| Coefficient { unit: u.id.clone(), product: Product::Reserve, coef: 1.0 })
                .collect(),
            slack_allowed: true,
            slack_penalty: 300.0,
            power_balance: false,
        });
    }
    UcInstance { horizon, units, constraints }
}

/// Every feasible integer-output schedule of `unit`, cheapest per output
/// vector.
pub fn enumerate_schedules(unit: &UnitSpec, horizon: usize) -> Vec<Schedule> {
    let mut best: BTreeMap<Vec<i64>, Schedule> = BTreeMap::new();
    let levels: Vec<f64> = (unit.p_min as i64..=unit.p_max as i64).map(|p| p as f64).collect();
    for mask in 0u32..(1 << horizon) {
        let on: Vec<bool> = (0..horizon).map(|t| mask >> t & 1 == 1).collect();
        let on_hours: Vec<usize> = (0..horizon).filter(|&t| on[t]).collect();
        let combos = levels.len().pow(on_hours.len() as u32);
        for mut k in 0..combos {
            let mut power = vec![0.0; horizon];
            for &t in &on_hours {
                power[t] = levels[k % levels.len()];
                k /= levels.len();
            }
            let Ok(s) = Schedule::new(unit, power, vec![0.0; horizon], on.clone()) else {
                continue;
            };
            if check_feasible(unit, &s).is_err() {
                continue;
            }
            let key: Vec<i64> = s.power.iter().map(|&p| p as i64).collect();
            match best.get(&key) {
                Some(b) if b.cost <= s.cost => {}
                _ => {
                    best.insert(key, s);
                }
            }
        }
    }
    best.into_values().collect()
}

/// Optimal value of the master problem over all enumerated schedules,
/// solved by an independent LP code.
pub fn dw_objective(instance: &UcInstance, columns: &[Vec<Schedule>]) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let demand = &instance.constraints[0].rhs;
    let mut rows: Vec<Vec<(microlp::Variable, f64)>> = vec![Vec::new(); instance.horizon];
    for cols in columns {
        let mut convex = Vec::new();
        for s in cols {
            let w = lp.add_var(s.cost, (0.0, f64::INFINITY));
            convex.push((w, 1.0));
            for (t, row) in rows.iter_mut().enumerate() {
                if s.power[t] != 0.0 {
                    row.push((w, s.power[t]));
                }
            }
        }
        lp.add_constraint(convex, ComparisonOp::Eq, 1.0);
    }
    for (t, mut row) in rows.into_iter().enumerate() {
        let slack = lp.add_var(PENALTY, (0.0, f64::INFINITY));
        row.push((slack, 1.0));
        lp.add_constraint(row, ComparisonOp::Eq, demand[t]);
    }
    lp.solve().expect("master over all schedules").into_solution().expect("solution").objective()
}

/// Cheapest commitment over all enumerated schedules, with deficit priced
/// at [`PENALTY`].
pub fn enumerated_uc_objective(instance: &UcInstance, columns: &[Vec<Schedule>]) -> f64 {
    let demand: Vec<i64> = instance.constraints[0].rhs.iter().map(|&d| d as i64).collect();
    let mut states: BTreeMap<Vec<i64>, f64> = BTreeMap::from([(vec![0; instance.horizon], 0.0)]);
    for cols in columns {
        let mut next: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (sum, cost) in &states {
            for s in cols {
                let total: Vec<i64> = sum.iter().zip(&s.power).map(|(a, p)| a + *p as i64).collect();
                if total.iter().zip(&demand).any(|(a, d)| a > d) {
                    continue;
                }
                let c = cost + s.cost;
                let e = next.entry(total).or_insert(f64::INFINITY);
                if c < *e {
                    *e = c;
                }
            }
        }
        states = next;
    }
    states
        .iter()
        .map(|(sum, cost)| cost + PENALTY * sum.iter().zip(&demand).map(|(a, d)| (d - a) as f64).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}
