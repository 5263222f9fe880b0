//! Online NOMA grouping and power allocation for a cellular IoT uplink.
//!
//! The crate is organized bottom-up:
//!
//! * [`scenario`]: reproducible problem instances (placement, traffic, fading).
//! * [`sinr`]: SIC ordering, interference, per-slot feasibility and the
//!   delivered-packet counter every algorithm is scored with.
//! * [`matching`]: the online frame-matching algorithm (greedy per slot).
//! * [`crl`]: per-device transition graphs and the exponential-weights
//!   path learner that drives frame matching as a black box.
//! * [`baselines`]: tabular Q-learning and a fixed max-power policy.
//! * [`opt`]: exact offline optimum, a brute-force cross-check and LP export.
//! * [`harness`]: single runs, parameter sweeps and the JSON-lines
//!   environment service for external agents.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod config;
pub mod crl;
pub mod error;
pub mod harness;
pub mod matching;
pub mod opt;
pub mod rng;
pub mod scenario;
pub mod sinr;
pub mod units;

pub use config::{ExperimentConfig, NetworkConfig, RadioParams, TrafficSpec};
pub use error::{Constraint, NomaError, Result};
pub use scenario::{PacketTask, Position, Scenario, ScenarioStream};
pub use sinr::{Assignment, Choice, Delivery, FrameAssignment, Member, SlotGroup};
