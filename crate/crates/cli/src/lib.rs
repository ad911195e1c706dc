//! Scenario catalog, claim evaluation and reports for `divcheck-core`.

pub mod cli;
pub mod eval;
pub mod report;
pub mod scenario;
