//! Partial information decomposition of group-fairness disparity in
//! federated learning, exact accuracy/fairness trade-off frontiers, and a
//! small deterministic FedAvg simulator to produce the audited distributions.

pub mod aglfop;
pub mod cli;
pub mod data;
pub mod dist;
pub mod error;
pub mod fl;
pub mod metrics;
pub mod pid;

pub use dist::{ConditionalTable, JointDist, Variable, VariableSchema};
pub use error::{Error, Result};
