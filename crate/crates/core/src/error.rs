use thiserror::Error;

use crate::model::Violation;
use crate::quantity::Quantity;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid instance: {}", format_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("strategy of agent `{agent}` is infeasible at step {step}: prefix sum {prefix} outside [0, {}]", upper_bound(.capacity))]
    InfeasibleStrategy {
        agent: String,
        /// 1-based time step.
        step: usize,
        prefix: Quantity,
        /// `None` for the horizon-closure constraint, which has no upper bound.
        capacity: Option<Quantity>,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("flow is not a maximum flow: {0}")]
    NotMaximal(String),

    #[error("flow violates {0}")]
    InfeasibleFlow(String),

    #[error("capacity reduction {delta} is outside (0, {capacity}]")]
    ReductionOutOfRange { delta: Quantity, capacity: Quantity },

    #[error("granularity {granularity} does not divide {value} ({what}); use {suggestion} or a divisor of it")]
    IncompatibleGranularity { granularity: Quantity, value: Quantity, what: String, suggestion: Quantity },

    #[error("search space has {size} profiles, above the budget of {budget}")]
    BudgetExceeded { size: u128, budget: u128 },

    #[error("invalid price profile: {0}")]
    Prices(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("instance file: {0}")]
    Format(String),
}

fn upper_bound(capacity: &Option<Quantity>) -> String {
    capacity.map_or_else(|| "inf".to_string(), |c| c.to_string())
}

fn format_violations(violations: &[Violation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
