use std::fmt;

use thiserror::Error;

pub type Result<T, E = NomaError> = std::result::Result<T, E>;

/// Problem constraint identifiers, named after the rows of the offline model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// Per-frame packet must fit the achieved rate.
    Rate,
    /// Power only on a chosen resource block.
    PowerWithoutSlot,
    /// Total energy over the horizon.
    Energy,
    /// Slot inside the arrival/deadline window (also: device has a packet).
    Window,
    /// At most `G` devices per resource block.
    GroupCap,
    /// At most one resource block per device per frame.
    OneSlot,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Constraint::Rate => "rate",
            Constraint::PowerWithoutSlot => "power without slot",
            Constraint::Energy => "energy budget",
            Constraint::Window => "arrival/deadline window",
            Constraint::GroupCap => "group cap",
            Constraint::OneSlot => "one slot per frame",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum NomaError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("device {device} violates {constraint}: {detail}")]
    ConstraintViolation {
        device: usize,
        constraint: Constraint,
        detail: String,
    },

    #[error("device {device} is not a member of the slot group")]
    NotInGroup { device: usize },

    #[error("transition graph invariant broken: {0}")]
    GraphInvariant(String),

    #[error("edge {edge} has zero selection probability")]
    ZeroProbability { edge: usize },

    #[error("instance too large for exact solver: {0}")]
    TooLarge(String),

    #[error("MILP solver: {0}")]
    Solver(String),

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl NomaError {
    pub fn violation(device: usize, constraint: Constraint, detail: impl Into<String>) -> Self {
        NomaError::ConstraintViolation {
            device,
            constraint,
            detail: detail.into(),
        }
    }
}
