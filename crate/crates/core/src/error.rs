use crate::lp::LpSolution;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent or invalid input data (bad indices, violated type invariants).
    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("{states} outage states exceed the exact-enumeration cap of 2^{cap}; use Monte Carlo sampling")]
    UseMonteCarlo { states: u128, cap: usize },

    #[error("problem too large for a monolithic oracle: {0}")]
    TooLarge(String),

    /// The reliability criterion cannot be met even when every candidate is built.
    #[error("reliability criterion cannot be satisfied: {0}")]
    Unsatisfiable(String),

    #[error("metric {0} is non-convex and cannot drive Benders feasibility cuts")]
    NonConvexMetric(&'static str),

    #[error("branch-and-bound node limit of {limit} reached")]
    NodeLimit {
        limit: usize,
        incumbent: Option<Box<LpSolution>>,
    },

    #[error("Benders iteration limit of {limit} reached")]
    IterationLimit {
        limit: usize,
        incumbent: Option<Box<(crate::model::InvestmentPlan, crate::model::PlanReport)>>,
        log: Box<crate::benders::BendersLog>,
    },

    #[error("Monte Carlo estimate did not converge after {samples} samples (cov {cov:.4})")]
    McNotConverged {
        samples: usize,
        cov: f64,
        partial: Box<crate::reliability::RiskEvaluation>,
    },

    /// A methodology comparison stopped early; `completed` holds the finished rows.
    #[error("{method} run failed: {source}")]
    Comparison {
        method: &'static str,
        completed: Box<crate::planner::ComparisonReport>,
        source: Box<Error>,
    },

    #[error("numerical failure in simplex: {message}")]
    Numerical { message: String, log: Vec<String> },
}

impl Error {
    /// Resource limits (node, iteration or sample caps) as opposed to bad input or numerics.
    pub fn is_resource_limit(&self) -> bool {
        match self {
            Error::Comparison { source, .. } => source.is_resource_limit(),
            e => matches!(
                e,
                Error::NodeLimit { .. } | Error::IterationLimit { .. } | Error::McNotConverged { .. }
            ),
        }
    }

    /// The underlying failure, looking through comparison wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Comparison { source, .. } => source.root(),
            e => e,
        }
    }
}
