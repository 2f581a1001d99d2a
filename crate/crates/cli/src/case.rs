//! Case files: a planning instance, its reliability criterion and solver
//! settings in one JSON document.
//!
//! Parsing happens in three stages, each with its own error class: JSON
//! syntax, schema (types, unknown keys, value ranges) and semantics
//! (relations between fields). Every diagnostic names a JSON path.

use relplan_core::benders::BendersOptions;
use relplan_core::reliability::{enumerate_states_capped, sample_states, McOptions, DEFAULT_MAX_EXACT_GENERATORS};
use relplan_core::{Generator, GeneratorKind, ReliabilityCriterion, StateSet, SystemSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub generators: Vec<Generator>,
    pub periods: usize,
    pub demand_mw: Vec<f64>,
    pub shed_cost: f64,
    pub criterion: ReliabilityCriterion,
    #[serde(default)]
    pub options: SolverSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateModeSetting {
    /// Enumerate all states; fail if there are too many.
    Exact,
    /// Draw `samples` states from the seed.
    Sampled,
    /// Enumerate when within the cap, otherwise sample.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateSettings {
    pub mode: StateModeSetting,
    pub samples: usize,
    /// Largest number of stochastic units enumerated exactly.
    pub max_exact_generators: usize,
}

impl Default for StateSettings {
    fn default() -> Self {
        StateSettings {
            mode: StateModeSetting::Auto,
            samples: 20_000,
            max_exact_generators: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub seed: u64,
    pub states: StateSettings,
    pub benders: BendersOptions,
    pub monte_carlo: McOptions,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaseErrorKind {
    Syntax,
    Schema,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseError {
    pub kind: CaseErrorKind,
    /// JSON path of the offending value, `.` for the document root.
    pub path: String,
    pub message: String,
}

impl CaseError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        CaseError {
            kind: CaseErrorKind::Schema,
            path: path.into(),
            message: message.into(),
        }
    }

    fn semantic(path: impl Into<String>, message: impl Into<String>) -> Self {
        CaseError {
            kind: CaseErrorKind::Semantic,
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for CaseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            CaseErrorKind::Syntax => "syntax error",
            CaseErrorKind::Schema => "schema error",
            CaseErrorKind::Semantic => "semantic error",
        };
        write!(f, "{kind} at `{}`: {}", self.path, self.message)
    }
}

impl std::error::Error for CaseError {}

/// Converts serde_path_to_error's `a.b[0].c` into `.a.b[0].c`.
fn json_path(path: &serde_path_to_error::Path) -> String {
    let s = path.to_string();
    if s == "." {
        s
    } else {
        format!(".{s}")
    }
}

pub fn parse_case(bytes: &[u8]) -> Result<CaseFile, CaseError> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| CaseError {
        kind: CaseErrorKind::Syntax,
        path: ".".into(),
        message: e.to_string(),
    })?;
    let case: CaseFile = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = json_path(e.path());
        CaseError::schema(path, e.into_inner().to_string())
    })?;
    case.check_ranges()?;
    case.check_semantics()?;
    Ok(case)
}

fn in_range(path: String, v: f64, ok: bool, want: &str) -> Result<(), CaseError> {
    if ok && v.is_finite() {
        Ok(())
    } else {
        Err(CaseError::schema(path, format!("{v} is not {want}")))
    }
}

impl CaseFile {
    fn check_ranges(&self) -> Result<(), CaseError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CaseError::schema(
                ".schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        for (i, g) in self.generators.iter().enumerate() {
            let at = |field: &str| format!(".generators[{i}].{field}");
            if g.id.is_empty() {
                return Err(CaseError::schema(at("id"), "must not be empty"));
            }
            in_range(at("capacity_mw"), g.capacity_mw, g.capacity_mw > 0.0, "positive")?;
            in_range(at("outage_prob"), g.outage_prob, (0.0..=1.0).contains(&g.outage_prob), "in [0, 1]")?;
            in_range(at("var_cost"), g.var_cost, g.var_cost >= 0.0, "non-negative")?;
            in_range(at("invest_cost"), g.invest_cost, g.invest_cost >= 0.0, "non-negative")?;
            if g.earliest_period == 0 {
                return Err(CaseError::schema(at("earliest_period"), "periods are numbered from 1"));
            }
        }
        if self.periods == 0 {
            return Err(CaseError::schema(".periods", "at least one period is required"));
        }
        for (t, d) in self.demand_mw.iter().enumerate() {
            in_range(format!(".demand_mw[{t}]"), *d, *d >= 0.0, "non-negative")?;
        }
        in_range(".shed_cost".into(), self.shed_cost, self.shed_cost > 0.0, "positive")?;
        let c = &self.criterion;
        in_range(".criterion.limit_frac".into(), c.limit_frac, (0.0..=1.0).contains(&c.limit_frac), "in [0, 1]")?;
        in_range(".criterion.alpha".into(), c.alpha, c.alpha > 0.0 && c.alpha <= 1.0, "in (0, 1]")?;

        let o = &self.options;
        let b = &o.benders;
        for (name, v) in [
            ("tol_gap", b.tol_gap),
            ("tol_feas", b.tol_feas),
            ("tol_opt", b.tol_opt),
        ] {
            in_range(format!(".options.benders.{name}"), v, v >= 0.0, "non-negative")?;
        }
        if b.max_iter == 0 {
            return Err(CaseError::schema(".options.benders.max_iter", "must be at least 1"));
        }
        if o.states.samples == 0 {
            return Err(CaseError::schema(".options.states.samples", "must be at least 1"));
        }
        if o.states.max_exact_generators > DEFAULT_MAX_EXACT_GENERATORS {
            return Err(CaseError::schema(
                ".options.states.max_exact_generators",
                format!("at most {DEFAULT_MAX_EXACT_GENERATORS}"),
            ));
        }
        let mc = &o.monte_carlo;
        in_range(".options.monte_carlo.cov_target".into(), mc.cov_target, mc.cov_target > 0.0, "positive")?;
        if mc.batch == 0 {
            return Err(CaseError::schema(".options.monte_carlo.batch", "must be at least 1"));
        }
        if mc.max_samples < mc.min_samples {
            return Err(CaseError::schema(".options.monte_carlo.max_samples", "below min_samples"));
        }
        Ok(())
    }

    fn check_semantics(&self) -> Result<(), CaseError> {
        let mut seen = BTreeMap::new();
        for (i, g) in self.generators.iter().enumerate() {
            if let Some(first) = seen.insert(g.id.as_str(), i) {
                return Err(CaseError::semantic(
                    format!(".generators[{i}].id"),
                    format!("duplicate generator id {:?} (first used at .generators[{first}])", g.id),
                ));
            }
            if g.var_cost >= self.shed_cost {
                return Err(CaseError::semantic(
                    format!(".generators[{i}].var_cost"),
                    format!("{} is not below shed_cost {}", g.var_cost, self.shed_cost),
                ));
            }
            match g.kind {
                GeneratorKind::Existing if g.invest_cost != 0.0 => {
                    return Err(CaseError::semantic(
                        format!(".generators[{i}].invest_cost"),
                        format!("existing unit {:?} must have zero invest_cost", g.id),
                    ));
                }
                GeneratorKind::Candidate if g.invest_cost == 0.0 => {
                    return Err(CaseError::semantic(
                        format!(".generators[{i}].invest_cost"),
                        format!("candidate {:?} needs a positive invest_cost", g.id),
                    ));
                }
                _ => {}
            }
        }
        if self.demand_mw.len() != self.periods {
            return Err(CaseError::semantic(
                ".demand_mw",
                format!("{} entries for {} periods", self.demand_mw.len(), self.periods),
            ));
        }
        Ok(())
    }

    pub fn spec(&self) -> relplan_core::Result<SystemSpec> {
        SystemSpec::new(self.generators.clone(), self.demand_mw.clone(), self.shed_cost)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("case files always serialize");
        s.push('\n');
        s
    }
}

/// Outage states for a run, following the case's state settings.
pub fn build_states(spec: &SystemSpec, settings: &StateSettings, seed: u64) -> relplan_core::Result<StateSet> {
    match settings.mode {
        StateModeSetting::Exact => enumerate_states_capped(spec, settings.max_exact_generators),
        StateModeSetting::Sampled => sample_states(spec, settings.samples, seed),
        StateModeSetting::Auto => match enumerate_states_capped(spec, settings.max_exact_generators) {
            Err(relplan_core::Error::UseMonteCarlo { .. }) => sample_states(spec, settings.samples, seed),
            other => other,
        },
    }
}
