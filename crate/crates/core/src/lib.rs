//! Reliability-constrained generation expansion planning.
//!
//! An instance ([`SystemSpec`]) lists existing and candidate generators with
//! forced-outage probabilities and a per-period demand. Plans
//! ([`InvestmentPlan`]) are found by Benders decomposition under an EPNS or
//! CVaR limit and can be cross-checked against extensive-form MIPs, which
//! also handle LOLP and VaR limits. All linear programs run on the bundled
//! simplex and branch-and-bound engine in [`lp`].

pub mod benders;
pub mod error;
pub mod lp;
pub mod model;
pub mod monolithic;
pub mod numeric;
pub mod operation;
pub mod planner;
pub mod reliability;

pub use benders::{run_benders, solve_master, BendersCut, BendersLog, BendersOptions, BendersOutcome, CutKind};
pub use error::{Error, Result};
pub use lp::{LinearProgram, LpSolution, LpStatus, Relation};
pub use model::{
    available_capacity, plan_invest_cost, BuildLevels, Generator, GeneratorKind, InvestmentPlan, Metric,
    PeriodMetrics, PlanReport, RelaxedPlan, ReliabilityCriterion, SystemSpec,
};
pub use monolithic::{build_cvar_mip, build_epns_mip, build_lolp_mip, build_mip, build_var_mip, solve_monolithic};
pub use operation::{operation_cut, solve_operation, OperationResult};
pub use planner::{compare, evaluate_plan, run_ep, run_hp, run_ip, ComparisonReport, Method, PlanOutcome};
pub use reliability::{enumerate_states, sample_states, RiskEvaluation, StateMode, StateSet};
