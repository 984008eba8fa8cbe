//! Seeded synthetic market instances shaped like an ISO unit fleet, with a
//! known feasible reference dispatch.

use super::tabular::{assemble_instance, Adjustments, RawUnit, SystemInputs};
use crate::model::{check_feasible, BlockOffer, Schedule, UcInstance, UnitSpec};
use crate::ucbuild::UcSolution;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Base,
    Mid,
    Peaker,
}

/// An instance together with a feasible dispatch that meets demand and
/// reserve exactly without slack.
#[derive(Debug, Clone)]
pub struct SyntheticCase {
    pub instance: UcInstance,
    pub reference: UcSolution,
}

fn raw_unit(rng: &mut ChaCha8Rng, idx: usize) -> (RawUnit, Kind) {
    let roll = rng.random_range(0.0..1.0);
    let kind = if roll < 0.3 {
        Kind::Base
    } else if roll < 0.7 {
        Kind::Mid
    } else {
        Kind::Peaker
    };
    let (p_max, min_frac, ramp_frac, price_lo, n_blocks) = match kind {
        Kind::Base => (rng.random_range(200.0..600.0), rng.random_range(0.4..0.5), rng.random_range(0.2..0.4), 15.0, 3),
        Kind::Mid => (rng.random_range(100.0..300.0), rng.random_range(0.3..0.4), rng.random_range(0.4..0.6), 30.0, 3),
        Kind::Peaker => (rng.random_range(20.0..100.0), rng.random_range(0.2..0.3), 1.0, 70.0, 2),
    };
    let p_max: f64 = (p_max as f64).round();
    let p_min = (p_max * min_frac).round();
    let ramp = (p_max * ramp_frac).round();
    // block sizes sum to p_max; prices rise by block
    let mut blocks = Vec::new();
    let mut price = price_lo + rng.random_range(0.0..15.0);
    let mut left = p_max;
    for b in 0..n_blocks {
        let q = if b + 1 == n_blocks {
            left
        } else {
            (p_max / n_blocks as f64).round()
        };
        left -= q;
        blocks.push(BlockOffer {
            max_quantity: q,
            price: (price * 100.0_f64).round() / 100.0,
        });
        price += rng.random_range(1.0..8.0);
    }
    let (startup, no_load, mut_, init_online) = match kind {
        Kind::Base => (rng.random_range(5000.0..20000.0), rng.random_range(200.0..800.0), rng.random_range(4..9), true),
        Kind::Mid => (
            rng.random_range(1000.0..5000.0),
            rng.random_range(100.0..300.0),
            rng.random_range(2..5),
            rng.random_range(0.0..1.0) < 0.5,
        ),
        Kind::Peaker => (rng.random_range(100.0..800.0), rng.random_range(20.0..100.0), 0, false),
    };
    let r2 = |x: f64| (x * 100.0).round() / 100.0;
    (
        RawUnit {
            id: format!("U{idx:04}"),
            p_min,
            p_max,
            blocks,
            no_load_cost: r2(no_load),
            startup_cost: r2(startup),
            shutdown_cost: 0.0,
            reserve_offer_price: 0.0,
            reserve_max: 0.0,
            ramp_up: ramp,
            ramp_down: ramp,
            startup_ramp: f64::INFINITY,
            shutdown_ramp: f64::INFINITY,
            // a missing value reads as 1
            min_up_time: mut_.max(1),
            min_down_time: mut_.max(1),
            init_online,
            init_power: p_max,
        },
        kind,
    )
}

/// Daily load shape in `[0, 1]`: night trough, evening peak.
fn shape(t: usize, horizon: usize) -> f64 {
    let x = (t as f64 + 0.5) / horizon as f64 * 24.0;
    let day = (-(x - 18.0).powi(2) / 18.0).exp();
    let morning = 0.6 * (-(x - 9.0).powi(2) / 8.0).exp();
    (0.15 + 0.85 * day.max(morning)).min(1.0)
}

fn reference_schedule(u: &UnitSpec, kind: Kind, horizon: usize, window: (usize, usize)) -> Schedule {
    let [ru, rd, rsu, _] = u.effective_ramps();
    let range = u.p_max - u.p_min;
    let mut power = vec![0.0; horizon];
    let mut on = vec![false; horizon];
    let mut prev = u.initial_power();
    let mut was_on = u.init_online;
    for t in 0..horizon {
        let online = match kind {
            Kind::Base => true,
            _ if u.init_online => true,
            _ => t >= window.0 && t < window.1,
        };
        if !online {
            prev = 0.0;
            was_on = false;
            continue;
        }
        let level = match kind {
            Kind::Base => 0.3 + 0.6 * shape(t, horizon),
            _ => 0.8 * shape(t, horizon),
        };
        let target = u.p_min + level * range;
        let p = if was_on {
            target.clamp(prev - rd, prev + ru)
        } else {
            target.min(rsu)
        };
        let p = (p.clamp(u.p_min, u.p_max) * 1000.0).round() / 1000.0;
        power[t] = p;
        on[t] = true;
        prev = p;
        was_on = true;
    }
    let reserve = power
        .iter()
        .zip(&on)
        .map(|(&p, &o)| if o { ((u.p_max - p).min(u.reserve_max) * 0.5 * 1000.0).floor() / 1000.0 } else { 0.0 })
        .collect();
    Schedule::new(u, power, reserve, on).expect("reference within block capacity")
}

/// `units` generators over `horizon` hours, reproducible from `seed`.
pub fn synthetic_case(units: usize, horizon: usize, seed: u64) -> SyntheticCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let adj = Adjustments::all();
    let mut specs = Vec::with_capacity(units);
    let mut schedules = Vec::with_capacity(units);
    for i in 0..units {
        let (raw, kind) = raw_unit(&mut rng, i);
        let u = raw.adjusted(&adj);
        let h = horizon as f64 / 24.0;
        let start = (rng.random_range(6.0..11.0) * h) as usize;
        let stop = ((rng.random_range(19.0..23.0) * h) as usize).max(start + u.min_up_time).min(horizon);
        let s = reference_schedule(&u, kind, horizon, (start, stop));
        debug_assert!(check_feasible(&u, &s).is_ok(), "{}: {:?}", u.id, check_feasible(&u, &s));
        specs.push(u);
        schedules.push(s);
    }
    let demand: Vec<f64> = (0..horizon)
        .map(|t| (schedules.iter().map(|s| s.power[t]).sum::<f64>() * 1000.0).round() / 1000.0)
        .collect();
    let reserve: Vec<f64> = (0..horizon)
        .map(|t| (0.6 * schedules.iter().map(|s| s.reserve[t]).sum::<f64>()).floor())
        .collect();
    let mut system = SystemInputs::new(demand);
    system.reserve = Some(reserve);
    let instance = assemble_instance(specs, &system);
    let reference = UcSolution::from_schedules(&instance, schedules).expect("reference meets demand and reserve");
    SyntheticCase { instance, reference }
}
