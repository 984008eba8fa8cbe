//! Exact single-unit pricing by dynamic programming over on-runs.
//!
//! Each run of consecutive online hours carries a convex piecewise-linear
//! value function of the current output; ramp limits act on it as a sliding
//! window minimum. Offline stretches carry scalars. The result is optimal for
//! the same rules the MILP subproblem encodes.

use crate::model::{block_dispatch, Schedule, UnitSpec};

const EPS: f64 = 1e-9;

/// Convex piecewise-linear function given by its breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Pwl {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Pwl {
    fn from_points(mut pts: Vec<(f64, f64)>) -> Pwl {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut xs: Vec<f64> = Vec::with_capacity(pts.len());
        let mut ys: Vec<f64> = Vec::with_capacity(pts.len());
        for (x, y) in pts {
            if let Some(&last) = xs.last() {
                if x - last <= 1e-10 {
                    continue;
                }
            }
            xs.push(x);
            ys.push(y);
        }
        Pwl { xs, ys }
    }

    fn lo(&self) -> f64 {
        self.xs[0]
    }

    fn hi(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if n == 1 || x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.xs.partition_point(|&v| v <= x);
        let (x0, x1, y0, y1) = (self.xs[k - 1], self.xs[k], self.ys[k - 1], self.ys[k]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    fn restrict(&self, lo: f64, hi: f64) -> Option<Pwl> {
        let lo = lo.max(self.lo());
        let hi = hi.min(self.hi());
        if lo > hi + EPS {
            return None;
        }
        let hi = hi.max(lo);
        let mut pts = vec![(lo, self.eval(lo))];
        for (&x, &y) in self.xs.iter().zip(&self.ys) {
            if x > lo && x < hi {
                pts.push((x, y));
            }
        }
        pts.push((hi, self.eval(hi)));
        Some(Pwl::from_points(pts))
    }

    fn plus(&self, other: &Pwl) -> Option<Pwl> {
        let lo = self.lo().max(other.lo());
        let hi = self.hi().min(other.hi());
        if lo > hi + EPS {
            return None;
        }
        let hi = hi.max(lo);
        let mut xs = vec![lo, hi];
        xs.extend(self.xs.iter().chain(&other.xs).copied().filter(|&x| x > lo && x < hi));
        Some(Pwl::from_points(
            xs.into_iter().map(|x| (x, self.eval(x) + other.eval(x))).collect(),
        ))
    }

    fn shifted(mut self, c: f64) -> Pwl {
        for y in &mut self.ys {
            *y += c;
        }
        self
    }

    fn argmin(&self) -> usize {
        let mut best = 0;
        for (k, &y) in self.ys.iter().enumerate() {
            if y < self.ys[best] {
                best = k;
            }
        }
        best
    }

    /// Minimiser and minimum over `[lo, hi]`.
    pub(crate) fn min_on(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let f = self.restrict(lo, hi)?;
        let k = f.argmin();
        Some((f.xs[k], f.ys[k]))
    }

    /// `W(p) = min f(q)` over `q` in `[p - up, p + down]`.
    fn window(&self, up: f64, down: f64) -> Pwl {
        let k = self.argmin();
        let mut pts = Vec::with_capacity(self.xs.len() + 1);
        for i in 0..=k {
            pts.push((self.xs[i] - down, self.ys[i]));
        }
        for i in k..self.xs.len() {
            pts.push((self.xs[i] + up, self.ys[i]));
        }
        Pwl::from_points(pts)
    }

    /// Best predecessor value for output `p` under the same window.
    fn window_arg(&self, p: f64, up: f64, down: f64) -> f64 {
        let star = self.xs[self.argmin()];
        star.clamp((p - up).max(self.lo()), (p + down).min(self.hi()).max(self.lo()))
    }
}

fn energy_cost(unit: &UnitSpec, p: f64) -> f64 {
    block_dispatch(unit, p)
        .iter()
        .zip(&unit.blocks)
        .map(|(q, b)| q * b.price)
        .sum()
}

fn reserve_cap(unit: &UnitSpec) -> f64 {
    if unit.offers_reserve() {
        unit.reserve_max.min(unit.p_max)
    } else {
        0.0
    }
}

/// Reserve carried at output `p` when the reserve price net of the offer is
/// `gain`.
fn reserve_at(unit: &UnitSpec, p: f64, gain: f64) -> f64 {
    if gain > 0.0 {
        reserve_cap(unit).min(unit.p_max - p).max(0.0)
    } else {
        0.0
    }
}

/// Online cost of one hour as a function of output.
fn hour_cost(unit: &UnitSpec, power_price: f64, reserve_price: f64) -> Option<Pwl> {
    let cap = if unit.blocks.is_empty() {
        unit.p_max
    } else {
        unit.p_max.min(unit.block_capacity())
    };
    let lo = if unit.single_block_commitment { unit.p_max } else { unit.p_min };
    if lo > cap + EPS {
        return None;
    }
    let hi = if unit.single_block_commitment { lo } else { cap };
    let gain = reserve_price - unit.reserve_offer_price;
    let mut xs = vec![lo, hi];
    let mut acc = 0.0;
    for b in &unit.blocks {
        acc += b.max_quantity;
        xs.push(acc);
    }
    xs.push(unit.p_max - reserve_cap(unit));
    let value = |p: f64| {
        unit.no_load_cost + energy_cost(unit, p) - power_price * p - gain * reserve_at(unit, p, gain)
    };
    Some(Pwl::from_points(
        xs.into_iter()
            .filter(|&x| x >= lo && x <= hi)
            .map(|x| (x, value(x)))
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy)]
enum Origin {
    /// Online before the horizon.
    Initial,
    Off(usize),
}

struct Run {
    first: usize,
    origin: Origin,
    /// Value function for hours `first, first + 1, ...`.
    fs: Vec<Pwl>,
    alive: bool,
}

#[derive(Debug, Clone, Copy)]
enum Cause {
    /// Offline before the horizon.
    Initial,
    /// Shut down from the initial state in the first hour.
    InitialStop,
    /// Run index, its last online hour and output there.
    Stop(usize, usize, f64),
}

struct Off {
    first: usize,
    cause: Cause,
    value: f64,
    alive: bool,
}

enum End {
    Off(usize),
    Run(usize, usize, f64),
}

/// Cheapest schedule of `unit` when output earns `power_price[t]` and
/// reserve earns `reserve_price[t]`, or `None` if the unit has no feasible
/// schedule.
pub fn best_schedule(unit: &UnitSpec, power_price: &[f64], reserve_price: &[f64]) -> Option<Schedule> {
    let t_len = power_price.len();
    let [ru, rd, rsu, rsd] = unit.effective_ramps();
    let min_up = unit.min_up_time.max(1);
    let min_down = unit.min_down_time.max(1);
    let forced_on = if unit.must_run { t_len } else { unit.forced_online(t_len) };
    let forced_off = unit.forced_offline(t_len);
    let init_p = unit.initial_power();
    let uniform = unit.uniform_commitment;

    let mut runs: Vec<Run> = Vec::new();
    let mut offs: Vec<Off> = Vec::new();
    if !unit.init_online {
        offs.push(Off {
            first: 0,
            cause: Cause::Initial,
            value: 0.0,
            alive: true,
        });
    }

    for t in 0..t_len {
        let can_on = t < forced_on || t >= forced_off;
        let can_off = t >= forced_on;
        let transitions_ok = !uniform || t == 0;
        let hour = if can_on {
            hour_cost(unit, power_price[t], reserve_price[t])
        } else {
            None
        };

        // shutdowns with hour t as the first offline hour
        let mut stops = Vec::new();
        if can_off && transitions_ok {
            if t == 0 {
                if unit.init_online && init_p <= rsd + EPS {
                    stops.push(Off {
                        first: 0,
                        cause: Cause::InitialStop,
                        value: unit.shutdown_cost,
                        alive: true,
                    });
                }
            } else {
                for (ri, run) in runs.iter().enumerate() {
                    let long_enough = matches!(run.origin, Origin::Initial) || t - run.first >= min_up;
                    if !run.alive || !long_enough {
                        continue;
                    }
                    if let Some((x, y)) = run.fs[run.fs.len() - 1].min_on(f64::NEG_INFINITY, rsd) {
                        stops.push(Off {
                            first: t,
                            cause: Cause::Stop(ri, t - 1, x),
                            value: y + unit.shutdown_cost,
                            alive: true,
                        });
                    }
                }
            }
        }

        // startups in hour t
        let mut starts = Vec::new();
        if let Some(h) = hour.as_ref().filter(|_| transitions_ok) {
            if t == 0 && unit.init_online {
                if let Some(f) = h.restrict(init_p - rd, init_p + ru) {
                    starts.push(Run {
                        first: 0,
                        origin: Origin::Initial,
                        fs: vec![f],
                        alive: true,
                    });
                }
            }
            let mut best: Option<(usize, f64)> = None;
            for (oi, off) in offs.iter().enumerate() {
                let rested = matches!(off.cause, Cause::Initial) || t - off.first >= min_down;
                if off.alive && rested && best.map_or(true, |(_, v)| off.value < v) {
                    best = Some((oi, off.value));
                }
            }
            if let Some((oi, v)) = best {
                if let Some(f) = h.restrict(f64::NEG_INFINITY, rsu) {
                    starts.push(Run {
                        first: t,
                        origin: Origin::Off(oi),
                        fs: vec![f.shifted(v + unit.startup_cost)],
                        alive: true,
                    });
                }
            }
        }

        for run in runs.iter_mut().filter(|r| r.alive) {
            let next = hour
                .as_ref()
                .and_then(|h| h.plus(&run.fs[run.fs.len() - 1].window(ru, rd)));
            match next {
                Some(f) => run.fs.push(f),
                None => run.alive = false,
            }
        }
        runs.extend(starts);
        if !can_off {
            for off in &mut offs {
                off.alive = false;
            }
        }
        offs.extend(stops);
    }

    let mut best: Option<(f64, End)> = None;
    for (oi, off) in offs.iter().enumerate().filter(|(_, o)| o.alive) {
        if best.as_ref().map_or(true, |(v, _)| off.value < *v) {
            best = Some((off.value, End::Off(oi)));
        }
    }
    for (ri, run) in runs.iter().enumerate().filter(|(_, r)| r.alive) {
        let f = &run.fs[run.fs.len() - 1];
        let k = f.argmin();
        if best.as_ref().map_or(true, |(v, _)| f.ys[k] < *v) {
            best = Some((f.ys[k], End::Run(ri, t_len - 1, f.xs[k])));
        }
    }
    let (_, mut end) = best?;

    let mut power = vec![0.0; t_len];
    let mut on = vec![false; t_len];
    loop {
        match end {
            End::Off(oi) => match offs[oi].cause {
                Cause::Initial | Cause::InitialStop => break,
                Cause::Stop(ri, last, p) => end = End::Run(ri, last, p),
            },
            End::Run(ri, last, p) => {
                let run = &runs[ri];
                let mut p = p;
                for k in (run.first..=last).rev() {
                    power[k] = p;
                    on[k] = true;
                    if k > run.first {
                        p = run.fs[k - 1 - run.first].window_arg(p, ru, rd);
                    }
                }
                match run.origin {
                    Origin::Initial => break,
                    Origin::Off(oi) => end = End::Off(oi),
                }
            }
        }
    }
    let reserve = (0..t_len)
        .map(|t| {
            if on[t] {
                reserve_at(unit, power[t], reserve_price[t] - unit.reserve_offer_price)
            } else {
                0.0
            }
        })
        .collect();
    Schedule::new(unit, power, reserve, on).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(pts: &[(f64, f64)]) -> Pwl {
        Pwl::from_points(pts.to_vec())
    }

    #[test]
    fn window_flattens_around_minimum() {
        let v = f(&[(0.0, 4.0), (2.0, 0.0), (5.0, 3.0)]);
        let w = v.window(1.0, 2.0);
        assert_eq!(w.eval(0.0), 0.0);
        assert_eq!(w.eval(3.0), 0.0);
        assert!((w.eval(-1.0) - 2.0).abs() < 1e-12);
        assert!((w.eval(6.0) - 3.0).abs() < 1e-12);
        assert_eq!(v.window_arg(4.0, 1.0, 2.0), 3.0);
        assert_eq!(v.window_arg(1.0, 1.0, 2.0), 2.0);
    }

    #[test]
    fn plus_and_restrict() {
        let a = f(&[(0.0, 0.0), (10.0, 10.0)]);
        let b = f(&[(5.0, 1.0), (20.0, -14.0)]);
        let s = a.plus(&b).unwrap();
        assert_eq!((s.lo(), s.hi()), (5.0, 10.0));
        assert!((s.eval(7.0) - 6.0).abs() < 1e-12);
        assert!(a.restrict(11.0, 12.0).is_none());
        assert_eq!(a.min_on(3.0, 8.0), Some((3.0, 3.0)));
    }
}
