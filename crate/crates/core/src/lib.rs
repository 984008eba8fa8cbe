//! Convex hull pricing for unit-commitment electricity markets.
//!
//! Prices are the optimal duals of the Dantzig-Wolfe master problem whose
//! columns are feasible unit schedules, generated on demand by per-unit
//! profit-maximisation subproblems.

pub mod analytics;
pub mod cg;
pub mod io;
pub mod lp;
pub mod milp;
pub mod model;
pub mod ucbuild;
