//! Outage state sets and the risk measures evaluated on them: LOLP, EPNS,
//! VaR and CVaR, plus plan subgradients of the convex ones (EPNS, CVaR).

mod eval;
mod metrics;
mod montecarlo;
mod states;

pub use eval::{cvar_eval, cvar_lp, cvar_program, epns_eval, CvarLpResult, RiskEvaluation};
pub use metrics::{cvar_alpha, epns, lolp, shedding, var_alpha, ShedDistribution, SHED_ZERO_TOL};
pub use montecarlo::{mc_epns_converged, McOptions};
pub use states::{
    enumerate_states, enumerate_states_capped, sample_states, OutageState, StateMode, StateSampler,
    StateSet, DEFAULT_MAX_EXACT_GENERATORS,
};
