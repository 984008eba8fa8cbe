//! Branch-and-bound over binary columns, on top of [`crate::lp`].
//!
//! Node selection dives depth-first (rounding direction first) until an
//! incumbent exists, then switches to best-bound. Branching picks the most
//! fractional binary, lowest index on ties. Child LPs start from the parent
//! basis.

use crate::lp::{solve_lp_bounded, solve_lp_with, Basis, LinearProgram, LpError, LpOptions, LpSolution, LpStatus};
use thiserror::Error;

pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("integer column {0} must have bounds within [0, 1]")]
    NonBinary(usize),
    #[error("LP relaxation is unbounded")]
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedIntegerProgram {
    pub base: LinearProgram,
    pub integer_columns: Vec<usize>,
}

impl MixedIntegerProgram {
    pub fn validate(&self) -> Result<(), MilpError> {
        self.base.validate()?;
        for &j in &self.integer_columns {
            if j >= self.base.num_cols() || self.base.lower[j] < 0.0 || self.base.upper[j] > 1.0 {
                return Err(MilpError::NonBinary(j));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    /// Stopped with an incumbent whose gap exceeds the target.
    GapLimit,
    /// Node limit reached before any incumbent was found; feasibility unknown.
    NoIncumbent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    /// Optimal basis of the root relaxation, reusable as a warm start.
    pub root_basis: Option<Basis>,
}

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub gap_target: f64,
    pub node_limit: usize,
    /// Stop as soon as an incumbent with objective strictly below this value
    /// is found.
    pub stop_below: Option<f64>,
    pub lp: LpOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            gap_target: 1e-9,
            node_limit: 100_000,
            stop_below: None,
            lp: LpOptions::default(),
        }
    }
}

pub fn solve_milp(
    mip: &MixedIntegerProgram,
    gap_target: f64,
    node_limit: usize,
) -> Result<MilpSolution, MilpError> {
    let opts = MilpOptions {
        gap_target,
        node_limit,
        ..MilpOptions::default()
    };
    solve_milp_with(mip, &opts, None)
}

/// Drop integrality and solve the LP.
pub fn solve_lp_relaxation(mip: &MixedIntegerProgram) -> Result<LpSolution, LpError> {
    crate::lp::solve_lp(&mip.base)
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    bound: f64,
    basis: Option<Basis>,
    depth: usize,
}

fn gap_of(objective: f64, bound: f64) -> f64 {
    ((objective - bound) / objective.abs().max(1.0)).max(0.0)
}

pub fn solve_milp_with(
    mip: &MixedIntegerProgram,
    opts: &MilpOptions,
    warm_root: Option<&Basis>,
) -> Result<MilpSolution, MilpError> {
    mip.validate()?;
    let lp = &mip.base;
    let root = solve_lp_with(lp, &opts.lp, warm_root)?;
    match root.status {
        LpStatus::Infeasible => {
            return Ok(MilpSolution {
                status: MilpStatus::Infeasible,
                primal: Vec::new(),
                objective: f64::INFINITY,
                bound: f64::INFINITY,
                gap: 0.0,
                nodes: 1,
                root_basis: root.basis,
            })
        }
        LpStatus::Unbounded => return Err(MilpError::Unbounded),
        LpStatus::Optimal => {}
    }
    let root_basis = root.basis.clone();

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    // lowest bound among nodes dropped only because of the gap tolerance
    let mut gap_pruned = f64::INFINITY;
    let mut nodes = 1usize;
    let mut open: Vec<Node> = Vec::new();
    let mut pending = Some((
        Node {
            lower: lp.lower.clone(),
            upper: lp.upper.clone(),
            bound: root.objective,
            basis: root.basis.clone(),
            depth: 0,
        },
        root,
    ));

    let within_gap = |inc: f64, bound: f64| gap_of(inc, bound) <= opts.gap_target;

    loop {
        if let Some((node, sol)) = pending.take() {
            // evaluate a solved node
            let prune_bound = incumbent.as_ref().map(|(v, _)| *v);
            if let Some(inc) = prune_bound {
                if sol.objective >= inc {
                    // cannot improve
                } else if within_gap(inc, sol.objective) {
                    gap_pruned = gap_pruned.min(sol.objective);
                } else {
                    branch_or_accept(mip, node, sol, &mut incumbent, &mut open);
                }
            } else {
                branch_or_accept(mip, node, sol, &mut incumbent, &mut open);
            }
            if let (Some(limit), Some((inc, _))) = (opts.stop_below, incumbent.as_ref()) {
                if *inc < limit {
                    let bound = open.iter().map(|n| n.bound).fold(gap_pruned.min(*inc), f64::min);
                    return Ok(finish(incumbent, bound, nodes, root_basis, opts, false));
                }
            }
        }

        // drop open nodes that can no longer matter
        if let Some((inc, _)) = incumbent.as_ref() {
            let inc = *inc;
            open.retain(|n| {
                if n.bound >= inc {
                    false
                } else if within_gap(inc, n.bound) {
                    gap_pruned = gap_pruned.min(n.bound);
                    false
                } else {
                    true
                }
            });
        }
        if open.is_empty() {
            let bound = match incumbent.as_ref() {
                Some((inc, _)) => gap_pruned.min(*inc),
                None => f64::INFINITY,
            };
            return Ok(finish(incumbent, bound, nodes, root_basis, opts, false));
        }
        if nodes >= opts.node_limit {
            let bound = open.iter().map(|n| n.bound).fold(gap_pruned, f64::min);
            let bound = match incumbent.as_ref() {
                Some((inc, _)) => bound.min(*inc),
                None => bound,
            };
            return Ok(finish(incumbent, bound, nodes, root_basis, opts, true));
        }

        let idx = if incumbent.is_none() {
            open.len() - 1
        } else {
            let mut best = 0;
            for (i, n) in open.iter().enumerate() {
                let b = &open[best];
                if n.bound < b.bound || (n.bound == b.bound && n.depth > b.depth) {
                    best = i;
                }
            }
            best
        };
        let node = open.swap_remove(idx);
        nodes += 1;
        let sol = solve_lp_bounded(lp, &node.lower, &node.upper, &opts.lp, node.basis.as_ref())?;
        match sol.status {
            LpStatus::Optimal => {
                let bound = sol.objective.max(node.bound);
                let node = Node { bound, ..node };
                pending = Some((node, sol));
            }
            LpStatus::Infeasible => {}
            LpStatus::Unbounded => return Err(MilpError::Unbounded),
        }
    }
}

fn branch_or_accept(
    mip: &MixedIntegerProgram,
    node: Node,
    sol: LpSolution,
    incumbent: &mut Option<(f64, Vec<f64>)>,
    open: &mut Vec<Node>,
) {
    let mut branch = None;
    let mut best_frac = INT_TOL;
    for &j in &mip.integer_columns {
        let v = sol.primal[j];
        let frac = (v - v.floor()).min(v.ceil() - v);
        if frac > best_frac + 1e-12 {
            best_frac = frac;
            branch = Some(j);
        }
    }
    let Some(j) = branch else {
        let mut x = sol.primal;
        for &j in &mip.integer_columns {
            x[j] = x[j].round();
        }
        let better = incumbent.as_ref().map_or(true, |(v, _)| sol.objective < *v);
        if better {
            *incumbent = Some((sol.objective, x));
        }
        return;
    };
    let v = sol.primal[j];
    let mut down = Node {
        lower: node.lower.clone(),
        upper: node.upper.clone(),
        bound: sol.objective,
        basis: sol.basis.clone(),
        depth: node.depth + 1,
    };
    down.upper[j] = v.floor();
    let mut up = Node {
        lower: node.lower,
        upper: node.upper,
        bound: sol.objective,
        basis: sol.basis,
        depth: node.depth + 1,
    };
    up.lower[j] = v.ceil();
    // the rounding direction is explored first while diving
    if v - v.floor() >= 0.5 {
        open.push(down);
        open.push(up);
    } else {
        open.push(up);
        open.push(down);
    }
}

fn finish(
    incumbent: Option<(f64, Vec<f64>)>,
    bound: f64,
    nodes: usize,
    root_basis: Option<Basis>,
    opts: &MilpOptions,
    limited: bool,
) -> MilpSolution {
    match incumbent {
        Some((objective, primal)) => {
            let bound = bound.min(objective);
            let gap = gap_of(objective, bound);
            let status = if gap <= opts.gap_target {
                MilpStatus::Optimal
            } else {
                MilpStatus::GapLimit
            };
            MilpSolution {
                status,
                primal,
                objective,
                bound,
                gap,
                nodes,
                root_basis,
            }
        }
        None => MilpSolution {
            status: if limited {
                MilpStatus::NoIncumbent
            } else {
                MilpStatus::Infeasible
            },
            primal: Vec::new(),
            objective: f64::INFINITY,
            bound,
            gap: f64::INFINITY,
            nodes,
            root_basis,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::RowSense;

    /// max 5a + 4b + 3c  s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
    fn knapsackish() -> MixedIntegerProgram {
        let mut lp = LinearProgram::new();
        let a = lp.add_col(-5.0, 0.0, 1.0);
        let b = lp.add_col(-4.0, 0.0, 1.0);
        let c = lp.add_col(-3.0, 0.0, 1.0);
        lp.add_row(RowSense::Le, 2.5, &[(a, 2.0), (b, 3.0), (c, 1.0)]);
        lp.add_row(RowSense::Le, 4.0, &[(a, 4.0), (b, 1.0), (c, 2.0)]);
        MixedIntegerProgram {
            base: lp,
            integer_columns: vec![a, b, c],
        }
    }

    fn brute_force(mip: &MixedIntegerProgram) -> f64 {
        let k = mip.integer_columns.len();
        let mut best = f64::INFINITY;
        for mask in 0..(1u32 << k) {
            let x: Vec<f64> = (0..k).map(|i| f64::from((mask >> i) & 1)).collect();
            let act = mip.base.activities(&x);
            let ok = act.iter().zip(&mip.base.rhs).all(|(a, b)| *a <= b + 1e-9);
            if ok {
                let v: f64 = x.iter().zip(&mip.base.objective).map(|(a, b)| a * b).sum();
                best = best.min(v);
            }
        }
        best
    }

    #[test]
    fn matches_enumeration() {
        let mip = knapsackish();
        let s = solve_milp(&mip, 0.0, 1000).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert!((s.objective - brute_force(&mip)).abs() < 1e-9);
        assert!(s.gap <= 0.0 + 1e-12);
        let relax = solve_lp_relaxation(&mip).unwrap();
        assert!(relax.objective <= s.objective + 1e-9);
    }

    #[test]
    fn integral_root_needs_one_node() {
        let mut lp = LinearProgram::new();
        let a = lp.add_col(1.0, 0.0, 1.0);
        lp.add_row(RowSense::Ge, 1.0, &[(a, 1.0)]);
        let mip = MixedIntegerProgram {
            base: lp,
            integer_columns: vec![a],
        };
        let s = solve_milp(&mip, 1e-9, 10).unwrap();
        assert_eq!(s.nodes, 1);
        assert_eq!(s.gap, 0.0);
        assert_eq!(s.objective, solve_lp_relaxation(&mip).unwrap().objective);
    }

    #[test]
    fn infeasible_vs_unknown() {
        // 2a = 1 has no binary solution
        let mut lp = LinearProgram::new();
        let a = lp.add_col(1.0, 0.0, 1.0);
        lp.add_row(RowSense::Eq, 1.0, &[(a, 2.0)]);
        let mip = MixedIntegerProgram {
            base: lp,
            integer_columns: vec![a],
        };
        assert_eq!(solve_milp(&mip, 0.0, 100).unwrap().status, MilpStatus::Infeasible);
        assert_eq!(solve_milp(&mip, 0.0, 1).unwrap().status, MilpStatus::NoIncumbent);
    }

    #[test]
    fn non_binary_rejected() {
        let mut lp = LinearProgram::new();
        let a = lp.add_col(1.0, 0.0, 2.0);
        let mip = MixedIntegerProgram {
            base: lp,
            integer_columns: vec![a],
        };
        assert_eq!(solve_milp(&mip, 0.0, 1), Err(MilpError::NonBinary(0)));
    }
}
