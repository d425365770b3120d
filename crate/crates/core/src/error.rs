use thiserror::Error;

use crate::model::Route;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("route {route:?} is infeasible for device {device}, task {task}: {reason}")]
    InfeasibleRoute {
        device: usize,
        task: usize,
        route: Route,
        reason: &'static str,
    },

    #[error("request state space has {states} states, cap is {cap}")]
    StateSpaceTooLarge { states: f64, cap: f64 },

    #[error("instance too large for enumeration: {count} candidates, cap is {cap}")]
    InstanceTooLarge { count: f64, cap: f64 },

    #[error("optimal counts ({n1}, {n2}, {n3}) are not integers")]
    NonIntegerCounts { n1: f64, n2: f64, n3: f64 },

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    /// True for the errors raised when an instance exceeds an enumeration cap.
    pub fn is_capacity(&self) -> bool {
        matches!(
            self,
            Error::StateSpaceTooLarge { .. } | Error::InstanceTooLarge { .. }
        )
    }
}
