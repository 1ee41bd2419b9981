//! Solver and verifier library for fair allocation of indivisible resources
//! among agents that start from unequal initial utilities.
//!
//! The crate provides:
//!
//! - an exact integer data model for instances and allocations ([`model`]),
//! - checkers for every supported envy notion, including the always
//!   satisfiable minimum variant with optimal witness search ([`fairness`]),
//! - max-min shares with initial utilities ([`mms`]),
//! - exhaustive brute-force oracles used as ground truth ([`oracle`]),
//! - dynamic programs deciding existence for few agents ([`dp_few`]) and for
//!   identical resources ([`dp_identical`]),
//! - the round-robin procedure with level activation that always produces a
//!   complete allocation satisfying the minimum variant ([`round_robin`]),
//! - the equitable-coloring reduction gadget and its small-scale
//!   certification ([`reduction`]),
//! - canonical example instances and seeded generators ([`instances`]).
//!
//! Everything is deterministic: enumeration orders, tie-breaking, and
//! generator draws are all pinned, so witnesses and serialized files are
//! reproducible byte for byte.

// agent/resource indices are meaningful across parallel arrays here
#![allow(clippy::needless_range_loop)]

pub mod dp_few;
pub mod dp_identical;
pub mod error;
pub mod fairness;
pub mod instances;
pub mod mms;
pub mod model;
pub mod oracle;
mod par;
pub mod ratio;
pub mod reduction;
pub mod round_robin;

pub use error::{Error, Result};
pub use fairness::{check_allocation, check_pair, solve_c2, EnvyReport, Notion, PairVerdict};
pub use model::{Allocation, Instance, LevelPartition, ValidationReport, Value};
pub use oracle::OracleConfig;
pub use ratio::Ratio;
