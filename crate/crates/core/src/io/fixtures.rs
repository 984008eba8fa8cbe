//! Built-in example cases, embedded at compile time.

use super::case::{parse_case, CaseError, CaseFile};

pub const NAMES: [&str; 6] = ["ex1", "ex2", "ex3", "ex4", "ex5", "ramp"];

pub fn fixture_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "ex1" => include_str!("../../fixtures/ex1.toml"),
        "ex2" => include_str!("../../fixtures/ex2.toml"),
        "ex3" => include_str!("../../fixtures/ex3.toml"),
        "ex4" => include_str!("../../fixtures/ex4.toml"),
        "ex5" => include_str!("../../fixtures/ex5.toml"),
        "ramp" => include_str!("../../fixtures/ramp.toml"),
        _ => return None,
    })
}

pub fn fixture(name: &str) -> Result<CaseFile, CaseError> {
    parse_case(fixture_text(name).ok_or_else(|| CaseError::Unknown(name.to_string()))?)
}
