//! Bounded-variable revised simplex with exact duals.
//!
//! Every row `i` gets a logical variable `s_i` so that `A x + s = b`:
//! `<=` rows have `s_i in [0, inf)`, `>=` rows `s_i in (-inf, 0]` and
//! equality rows `s_i = 0`. Phase one minimises the sum of bound violations
//! of the basic variables, so any basis (a slack basis or a basis handed
//! back from an earlier solve) can be used as a starting point.
//!
//! Duals follow the minimisation convention: `>=` rows are non-negative,
//! `<=` rows non-positive. When the optimum is dual degenerate the duals of
//! the final basis are returned.

mod dense;

use dense::DenseInverse;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowSense {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    Invalid(String),
    #[error("simplex stalled after {0} iterations")]
    Stalled(usize),
}

/// A linear program `min c^T x` over rows with senses and column bounds.
/// The matrix is held as `(row, column, value)` triplets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub entries: Vec<(usize, usize, f64)>,
    pub senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    /// Append a column and return its index.
    pub fn add_col(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    /// Append a row and return its index.
    pub fn add_row(&mut self, sense: RowSense, rhs: f64, coefs: &[(usize, f64)]) -> usize {
        let r = self.rhs.len();
        self.senses.push(sense);
        self.rhs.push(rhs);
        for &(c, v) in coefs {
            if v != 0.0 {
                self.entries.push((r, c, v));
            }
        }
        r
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_cols();
        let m = self.num_rows();
        if self.lower.len() != n || self.upper.len() != n || self.senses.len() != m {
            return Err(LpError::Invalid("inconsistent vector lengths".into()));
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(LpError::Invalid(format!("objective of column {j} is not finite")));
            }
            if !self.lower[j].is_finite() || self.upper[j].is_nan() {
                return Err(LpError::Invalid(format!("column {j} needs a finite lower bound")));
            }
            if self.upper[j] < self.lower[j] {
                return Err(LpError::Invalid(format!("column {j} has upper < lower")));
            }
        }
        if self.rhs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::Invalid("rhs is not finite".into()));
        }
        for &(r, c, v) in &self.entries {
            if r >= m || c >= n {
                return Err(LpError::Invalid(format!("entry ({r}, {c}) out of range")));
            }
            if !v.is_finite() {
                return Err(LpError::Invalid(format!("entry ({r}, {c}) is not finite")));
            }
        }
        Ok(())
    }

    /// Row activities `A x`.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.num_rows()];
        for &(r, c, v) in &self.entries {
            act[r] += v * x[c];
        }
        act
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

/// A simplex basis over structural columns followed by row logicals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub basis: Option<Basis>,
    pub iterations: usize,
}

impl LpSolution {
    /// `|c'x - (y'b + d'x)|`: the gap between primal objective and the dual
    /// objective including bound terms.
    pub fn duality_residual(&self, lp: &LinearProgram) -> f64 {
        let primal: f64 = lp.objective.iter().zip(&self.primal).map(|(c, x)| c * x).sum();
        let dual: f64 = self.duals.iter().zip(&lp.rhs).map(|(y, b)| y * b).sum::<f64>()
            + self
                .reduced_costs
                .iter()
                .zip(&self.primal)
                .map(|(d, x)| d * x)
                .sum::<f64>();
        (primal - dual).abs()
    }
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub max_iterations: usize,
    /// Degenerate pivots in a row before switching to Bland's rule.
    pub bland_after: usize,
    pub refactor_every: usize,
    pub pivot_tol: f64,
    pub ratio_tol: f64,
    pub primal_tol: f64,
    pub dual_tol: f64,
    /// Phase-one objective above which the problem is declared infeasible.
    pub infeasibility_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            max_iterations: 200_000,
            bland_after: 50,
            refactor_every: 100,
            pivot_tol: 1e-9,
            ratio_tol: 1e-9,
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            infeasibility_tol: 1e-7,
        }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(lp, &LpOptions::default(), None)
}

/// Solve starting from `warm` when given. A warm basis whose shape does not
/// match, or that is singular, is repaired with logicals.
pub fn solve_lp_with(
    lp: &LinearProgram,
    opts: &LpOptions,
    warm: Option<&Basis>,
) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut s = Simplex::new(lp, opts);
    s.install_basis(warm);
    s.run()
}

/// Solve `lp` with its column bounds replaced by `lower`/`upper`.
pub fn solve_lp_bounded(
    lp: &LinearProgram,
    lower: &[f64],
    upper: &[f64],
    opts: &LpOptions,
    warm: Option<&Basis>,
) -> Result<LpSolution, LpError> {
    lp.validate()?;
    if lower.len() != lp.num_cols() || upper.len() != lp.num_cols() {
        return Err(LpError::Invalid("bound override has wrong length".into()));
    }
    if let Some(j) = (0..lower.len()).find(|&j| upper[j] < lower[j]) {
        return Err(LpError::Invalid(format!("column {j} has upper < lower")));
    }
    let mut s = Simplex::new(lp, opts);
    s.lo[..lower.len()].copy_from_slice(lower);
    s.hi[..upper.len()].copy_from_slice(upper);
    s.install_basis(warm);
    s.run()
}

struct Simplex<'a> {
    opts: &'a LpOptions,
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    rhs: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    basic: Vec<usize>,
    inv: DenseInverse,
    since_refactor: usize,
    iterations: usize,
}

const NONE: usize = usize::MAX;

impl<'a> Simplex<'a> {
    fn new(lp: &LinearProgram, opts: &'a LpOptions) -> Self {
        let n = lp.num_cols();
        let m = lp.num_rows();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + m];
        for &(r, c, v) in &lp.entries {
            cols[c].push((r, v));
        }
        for col in cols.iter_mut().take(n) {
            col.sort_by_key(|e| e.0);
            col.dedup_by(|a, b| {
                if a.0 == b.0 {
                    b.1 += a.1;
                    true
                } else {
                    false
                }
            });
        }
        let mut lo = lp.lower.clone();
        let mut hi = lp.upper.clone();
        let mut cost = lp.objective.clone();
        for i in 0..m {
            cols[n + i].push((i, 1.0));
            let (l, h) = match lp.senses[i] {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
                RowSense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            hi.push(h);
            cost.push(0.0);
        }
        Simplex {
            opts,
            m,
            n,
            cols,
            cost,
            lo,
            hi,
            rhs: lp.rhs.clone(),
            x: vec![0.0; n + m],
            status: vec![VarStatus::AtLower; n + m],
            basic: vec![NONE; m],
            inv: DenseInverse::identity(m),
            since_refactor: 0,
            iterations: 0,
        }
    }

    fn nonbasic_value(&self, j: usize, st: VarStatus) -> (VarStatus, f64) {
        match st {
            VarStatus::AtUpper if self.hi[j].is_finite() => (VarStatus::AtUpper, self.hi[j]),
            _ if self.lo[j].is_finite() => (VarStatus::AtLower, self.lo[j]),
            _ => (VarStatus::AtUpper, self.hi[j]),
        }
    }

    fn install_basis(&mut self, warm: Option<&Basis>) {
        let total = self.n + self.m;
        let mut status: Vec<VarStatus> = match warm {
            Some(b) if b.status.len() == total => b.status.clone(),
            _ => {
                let mut st = vec![VarStatus::AtLower; total];
                for s in st.iter_mut().skip(self.n) {
                    *s = VarStatus::Basic;
                }
                st
            }
        };
        let mut basic: Vec<usize> = (0..total).filter(|&j| status[j] == VarStatus::Basic).collect();
        if basic.len() > self.m {
            for &j in &basic[self.m..] {
                status[j] = VarStatus::AtLower;
            }
            basic.truncate(self.m);
        }
        // complete with logicals of uncovered rows
        if basic.len() < self.m {
            let mut covered = vec![false; self.m];
            for &j in &basic {
                if j >= self.n {
                    covered[j - self.n] = true;
                }
            }
            for i in 0..self.m {
                if basic.len() == self.m {
                    break;
                }
                if !covered[i] {
                    status[self.n + i] = VarStatus::Basic;
                    basic.push(self.n + i);
                }
            }
        }
        self.status = status;
        self.basic = basic;
        for j in 0..total {
            if self.status[j] != VarStatus::Basic {
                let (st, v) = self.nonbasic_value(j, self.status[j]);
                self.status[j] = st;
                self.x[j] = v;
            }
        }
        self.refactor();
    }

    /// Rebuild the inverse from scratch, swapping dependent columns for
    /// logicals when the basis is singular, then recompute basic values.
    fn refactor(&mut self) {
        loop {
            let cols: Vec<Vec<(usize, f64)>> =
                self.basic.iter().map(|&j| self.cols[j].clone()).collect();
            match DenseInverse::factor(self.m, &cols) {
                Ok(inv) => {
                    self.inv = inv;
                    break;
                }
                Err(dependent) => {
                    let mut covered = vec![false; self.m];
                    for (pos, &j) in self.basic.iter().enumerate() {
                        if !dependent.contains(&pos) {
                            for &(r, _) in &self.cols[j] {
                                covered[r] = true;
                            }
                        }
                    }
                    let mut in_basis = vec![false; self.n + self.m];
                    for &j in &self.basic {
                        in_basis[j] = true;
                    }
                    // Rows whose logical can be brought in, preferring rows no
                    // independent column touches.
                    let mut candidates: Vec<usize> = (0..self.m)
                        .filter(|&i| !in_basis[self.n + i])
                        .collect();
                    candidates.sort_by_key(|&i| covered[i]);
                    for (k, &pos) in dependent.iter().enumerate() {
                        let old = self.basic[pos];
                        let (st, v) = self.nonbasic_value(old, VarStatus::AtLower);
                        self.status[old] = st;
                        self.x[old] = v;
                        let logical = self.n + candidates[k % candidates.len().max(1)];
                        self.basic[pos] = logical;
                        self.status[logical] = VarStatus::Basic;
                    }
                }
            }
        }
        self.since_refactor = 0;
        self.recompute_basic_values();
    }

    fn recompute_basic_values(&mut self) {
        let mut r = self.rhs.clone();
        for j in 0..self.n + self.m {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                for &(i, v) in &self.cols[j] {
                    r[i] -= v * self.x[j];
                }
            }
        }
        let dense: Vec<(usize, f64)> = r.iter().copied().enumerate().collect();
        let mut xb = vec![0.0; self.m];
        self.inv.solve_sparse(&dense, &mut xb);
        for (pos, &j) in self.basic.iter().enumerate() {
            self.x[j] = xb[pos];
        }
    }

    /// Phase-one cost of each basic position: -1 below lower, +1 above upper.
    fn infeasibility_costs(&self, tol: f64) -> (Vec<f64>, f64) {
        let mut c = vec![0.0; self.m];
        let mut total = 0.0;
        for (pos, &j) in self.basic.iter().enumerate() {
            let v = self.x[j];
            if v < self.lo[j] - tol {
                c[pos] = -1.0;
                total += self.lo[j] - v;
            } else if v > self.hi[j] + tol {
                c[pos] = 1.0;
                total += v - self.hi[j];
            }
        }
        (c, total)
    }

    fn run(mut self) -> Result<LpSolution, LpError> {
        let m = self.m;
        let total = self.n + self.m;
        let mut y = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        let mut degenerate_streak = 0usize;
        let mut feas_tol = self.opts.primal_tol;

        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(LpError::Stalled(self.iterations));
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor();
            }
            let (c1, infeas) = self.infeasibility_costs(feas_tol);
            let phase_one = c1.iter().any(|&v| v != 0.0);
            let cb: Vec<f64> = if phase_one {
                c1
            } else {
                self.basic.iter().map(|&j| self.cost[j]).collect()
            };
            self.inv.left_solve(&cb, &mut y);

            let bland = degenerate_streak >= self.opts.bland_after;
            let mut enter = NONE;
            let mut enter_dir = 0.0;
            let mut best = 0.0;
            for j in 0..total {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let cj = if phase_one { 0.0 } else { self.cost[j] };
                let d = cj - self.cols[j].iter().map(|&(i, v)| y[i] * v).sum::<f64>();
                let (improving, dir) = match st {
                    VarStatus::AtLower => (d < -self.opts.dual_tol, 1.0),
                    VarStatus::AtUpper => (d > self.opts.dual_tol, -1.0),
                    VarStatus::Basic => unreachable!(),
                };
                if !improving {
                    continue;
                }
                if bland {
                    enter = j;
                    enter_dir = dir;
                    break;
                }
                if d.abs() > best {
                    best = d.abs();
                    enter = j;
                    enter_dir = dir;
                }
            }

            if enter == NONE {
                if phase_one {
                    if infeas > self.opts.infeasibility_tol {
                        return Ok(self.finish(LpStatus::Infeasible, &y));
                    }
                    // residual violation is within tolerance; accept it
                    feas_tol = self.opts.infeasibility_tol;
                    continue;
                }
                self.inv.left_solve(&cb, &mut y);
                return Ok(self.finish(LpStatus::Optimal, &y));
            }

            self.inv.solve_sparse(&self.cols[enter], &mut alpha);

            // Ratio test. Basic value at pos changes at rate -dir * alpha[pos].
            let mut theta = self.hi[enter] - self.lo[enter];
            let mut leave_pos = NONE;
            let mut leave_to_upper = false;
            let mut leave_alpha = 0.0;
            for pos in 0..m {
                let a = alpha[pos];
                if a.abs() <= self.opts.pivot_tol {
                    continue;
                }
                let rate = -enter_dir * a;
                let j = self.basic[pos];
                let v = self.x[j];
                let (limit, to_upper) = if v < self.lo[j] - feas_tol {
                    if rate > 0.0 {
                        ((self.lo[j] - v) / rate, false)
                    } else {
                        continue;
                    }
                } else if v > self.hi[j] + feas_tol {
                    if rate < 0.0 {
                        ((v - self.hi[j]) / -rate, true)
                    } else {
                        continue;
                    }
                } else if rate < 0.0 {
                    if self.lo[j].is_finite() {
                        (((v - self.lo[j]) / -rate).max(0.0), false)
                    } else {
                        continue;
                    }
                } else if self.hi[j].is_finite() {
                    (((self.hi[j] - v) / rate).max(0.0), true)
                } else {
                    continue;
                };
                let better = if leave_pos == NONE {
                    limit < theta
                } else if limit < theta - self.opts.ratio_tol {
                    true
                } else if limit <= theta + self.opts.ratio_tol {
                    if bland {
                        j < self.basic[leave_pos]
                    } else {
                        a.abs() > leave_alpha
                    }
                } else {
                    false
                };
                if better {
                    theta = limit;
                    leave_pos = pos;
                    leave_to_upper = to_upper;
                    leave_alpha = a.abs();
                }
            }

            if theta.is_infinite() {
                if phase_one {
                    // cannot happen with a consistent phase-one objective;
                    // refactor and retry once in case of drift
                    self.refactor();
                    self.iterations += 1;
                    continue;
                }
                return Ok(self.finish(LpStatus::Unbounded, &y));
            }

            if theta <= 1e-12 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }

            // move
            self.x[enter] += enter_dir * theta;
            for pos in 0..m {
                if alpha[pos] != 0.0 {
                    let j = self.basic[pos];
                    self.x[j] -= enter_dir * theta * alpha[pos];
                }
            }
            self.iterations += 1;

            if leave_pos == NONE {
                // bound flip
                self.status[enter] = if enter_dir > 0.0 {
                    self.x[enter] = self.hi[enter];
                    VarStatus::AtUpper
                } else {
                    self.x[enter] = self.lo[enter];
                    VarStatus::AtLower
                };
                continue;
            }

            let leaving = self.basic[leave_pos];
            if leave_to_upper {
                self.status[leaving] = VarStatus::AtUpper;
                self.x[leaving] = self.hi[leaving];
            } else {
                self.status[leaving] = VarStatus::AtLower;
                self.x[leaving] = self.lo[leaving];
            }
            self.status[enter] = VarStatus::Basic;
            self.basic[leave_pos] = enter;
            self.inv.pivot(leave_pos, &alpha);
            self.since_refactor += 1;
        }
    }

    fn finish(mut self, status: LpStatus, y: &[f64]) -> LpSolution {
        if status == LpStatus::Optimal {
            // clean solution from a fresh factorisation
            self.refactor();
            let cb: Vec<f64> = self.basic.iter().map(|&j| self.cost[j]).collect();
            let mut yy = vec![0.0; self.m];
            self.inv.left_solve(&cb, &mut yy);
            return self.package(status, yy);
        }
        let y = y.to_vec();
        self.package(status, y)
    }

    fn package(self, status: LpStatus, duals: Vec<f64>) -> LpSolution {
        let n = self.n;
        let primal: Vec<f64> = self.x[..n].to_vec();
        let reduced_costs: Vec<f64> = (0..n)
            .map(|j| {
                if self.status[j] == VarStatus::Basic {
                    0.0
                } else {
                    self.cost[j] - self.cols[j].iter().map(|&(i, v)| duals[i] * v).sum::<f64>()
                }
            })
            .collect();
        let objective = (0..n).map(|j| self.cost[j] * primal[j]).sum();
        LpSolution {
            status,
            primal,
            objective,
            duals,
            reduced_costs,
            basis: Some(Basis {
                status: self.status,
            }),
            iterations: self.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_equality() {
        let mut lp = LinearProgram::new();
        let x = lp.add_col(1.0, 0.0, f64::INFINITY);
        lp.add_row(RowSense::Eq, 1.0, &[(x, 1.0)]);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.primal[0] - 1.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dual_signs() {
        // min x + y  s.t. x + y >= 2, x <= 1.5 (as row), y <= 5
        let mut lp = LinearProgram::new();
        let x = lp.add_col(1.0, 0.0, f64::INFINITY);
        let y = lp.add_col(2.0, 0.0, 5.0);
        lp.add_row(RowSense::Ge, 2.0, &[(x, 1.0), (y, 1.0)]);
        lp.add_row(RowSense::Le, 1.5, &[(x, 1.0)]);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.5).abs() < 1e-9);
        assert!((s.duals[0] - 2.0).abs() < 1e-9);
        assert!((s.duals[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.add_col(1.0, 0.0, 1.0);
        lp.add_row(RowSense::Ge, 2.0, &[(x, 1.0)]);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::new();
        let x = lp.add_col(-1.0, 0.0, f64::INFINITY);
        let y = lp.add_col(0.0, 0.0, f64::INFINITY);
        lp.add_row(RowSense::Eq, 1.0, &[(x, 1.0), (y, -1.0)]);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn bound_flip_only() {
        let mut lp = LinearProgram::new();
        lp.add_col(-3.0, 1.0, 4.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.primal, vec![4.0]);
        assert_eq!(s.reduced_costs, vec![-3.0]);
    }

    #[test]
    fn nan_rejected() {
        let mut lp = LinearProgram::new();
        let x = lp.add_col(f64::NAN, 0.0, 1.0);
        lp.add_row(RowSense::Le, 1.0, &[(x, 1.0)]);
        assert!(matches!(solve_lp(&lp), Err(LpError::Invalid(_))));
    }

    #[test]
    fn warm_start_after_objective_change() {
        let mut lp = LinearProgram::new();
        let a = lp.add_col(1.0, 0.0, 10.0);
        let b = lp.add_col(2.0, 0.0, 10.0);
        lp.add_row(RowSense::Eq, 12.0, &[(a, 1.0), (b, 1.0)]);
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective - 14.0).abs() < 1e-9);
        lp.objective = vec![3.0, 1.0];
        let w = solve_lp_with(&lp, &LpOptions::default(), s.basis.as_ref()).unwrap();
        let c = solve_lp(&lp).unwrap();
        assert!((w.objective - c.objective).abs() < 1e-9);
        assert!((w.objective - 16.0).abs() < 1e-9);
    }

    #[test]
    fn stall_is_reported() {
        let mut lp = LinearProgram::new();
        let a = lp.add_col(-1.0, 0.0, f64::INFINITY);
        let b = lp.add_col(-1.0, 0.0, f64::INFINITY);
        lp.add_row(RowSense::Le, 4.0, &[(a, 1.0), (b, 2.0)]);
        lp.add_row(RowSense::Le, 4.0, &[(a, 2.0), (b, 1.0)]);
        let opts = LpOptions {
            max_iterations: 1,
            ..LpOptions::default()
        };
        assert_eq!(solve_lp_with(&lp, &opts, None), Err(LpError::Stalled(1)));
    }
}
