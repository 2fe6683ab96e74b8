//! Diversity-aware k-median clustering.
//!
//! Given a set of clients, a set of facilities partitioned (or covered) by
//! demographic groups, and per-group lower bounds `r_i`, the task is to pick
//! exactly `k` facilities containing at least `r_i` members of each group
//! while minimizing the sum of client-to-nearest-center distances.
//!
//! The crate provides:
//!
//! * instance types, generators, and CSV ingestion ([`instance`]),
//! * the cost engine with an incremental swap cache ([`metricspace`]),
//! * feasibility checks and an exact feasibility search ([`feasibility`]),
//! * swap-based local-search solvers ([`localsearch`]),
//! * Lagrangian-style relaxations with a supermodular penalty ([`relaxed`]),
//! * constraint-profile enumeration for under-budgeted instances
//!   ([`completion`]),
//! * a distance-shrinking heuristic ([`shrink`]),
//! * small exact oracles for testing and calibration ([`oracle`]),
//! * evaluation metrics ([`metrics`]),
//! * and the command-line surface ([`cli`]).

pub mod cli;
pub mod completion;
pub mod feasibility;
pub mod instance;
pub mod localsearch;
pub mod metrics;
pub mod metricspace;
pub mod oracle;
pub mod relaxed;
pub mod shrink;

pub(crate) mod rng;
