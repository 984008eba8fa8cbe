//! Case files, tabular import, synthetic instances, result output and the
//! command line.

pub mod case;
pub mod cli;
pub mod fixtures;
pub mod output;
pub mod synthetic;
pub mod tabular;
