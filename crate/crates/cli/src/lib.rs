//! Command-line front end: case files, synthetic cases, reports and the
//! `relplan` command set.

pub mod case;
pub mod gen;
pub mod report;

use case::{build_states, parse_case, CaseError, CaseFile};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gen::{gen_case, GenError, GenParams};
use relplan_core::lp::write_lp_format;
use relplan_core::planner::cvar_limit_frac;
use relplan_core::reliability::mc_epns_converged;
use relplan_core::{
    build_mip, compare, evaluate_plan, run_ep, run_hp, run_ip, InvestmentPlan, Metric, PlanOutcome,
    ReliabilityCriterion, StateSet, SystemSpec,
};
use report::{Envelope, Evaluation, ResolvedOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_RESOURCE: u8 = 4;
pub const EXIT_NUMERIC: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "relplan", version, about = "Reliability-constrained generation expansion planning")]
pub struct Cli {
    /// Worker threads for state evaluation (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find a plan with one planning methodology.
    Solve {
        #[arg(long, value_enum)]
        mode: Mode,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Cost and reliability metrics of a given plan.
    Evaluate {
        /// Plan file: `{"built": [[...]]}` or any report with a `plan` field.
        #[arg(long, required_unless_present = "mode", conflicts_with = "mode")]
        plan: Option<PathBuf>,
        /// Evaluate the plan found by this methodology instead.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Add Monte Carlo EPNS estimates per period.
        #[arg(long)]
        mc: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run EP, HP, IP-EPNS and IP-CVaR side by side.
    Compare {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write a seeded synthetic case.
    GenCase {
        #[arg(long, default_value_t = 3)]
        existing: usize,
        #[arg(long, default_value_t = 3)]
        candidates: usize,
        #[arg(long, default_value_t = 3)]
        periods: usize,
        /// Demand multiplier per period.
        #[arg(long, default_value_t = 1.05)]
        growth: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the extensive-form MIP for a metric in LP format.
    DumpMip {
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Case file (JSON).
    pub case: PathBuf,
    /// Overrides the case's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Ep,
    Hp,
    IpEpns,
    IpCvar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Epns,
    Cvar,
    Lolp,
    Var,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Epns => Metric::Epns,
            MetricArg::Cvar => Metric::Cvar,
            MetricArg::Lolp => Metric::Lolp,
            MetricArg::Var => Metric::Var,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Case { path: PathBuf, source: CaseError },
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Core(#[from] relplan_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Case { .. } => EXIT_USAGE,
            CliError::Gen(GenError::Core(e)) | CliError::Core(e) => core_exit_code(e),
            CliError::Gen(_) => EXIT_USAGE,
        }
    }
}

fn core_exit_code(e: &relplan_core::Error) -> u8 {
    use relplan_core::Error as E;
    if e.is_resource_limit() {
        return EXIT_RESOURCE;
    }
    match e.root() {
        E::Unsatisfiable(_) => EXIT_INFEASIBLE,
        E::UseMonteCarlo { .. } | E::TooLarge(_) => EXIT_RESOURCE,
        E::Numerical { .. } => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

/// Everything a case-driven command needs.
struct Loaded {
    case_path: String,
    case: CaseFile,
    spec: SystemSpec,
    states: StateSet,
    options: ResolvedOptions,
}

fn load(run: &RunArgs, threads: Option<usize>) -> Result<Loaded, CliError> {
    let case = parse_case(&read(&run.case)?).map_err(|source| CliError::Case {
        path: run.case.clone(),
        source,
    })?;
    let spec = case.spec()?;
    let seed = run.seed.unwrap_or(case.options.seed);
    let states = build_states(&spec, &case.options.states, seed)?;
    let options = ResolvedOptions {
        seed,
        threads,
        criterion: case.criterion,
        benders: case.options.benders,
        states: case.options.states,
        state_mode: states.mode(),
        state_count: states.len(),
        monte_carlo: case.options.monte_carlo,
    };
    Ok(Loaded {
        case_path: run.case.display().to_string(),
        case,
        spec,
        states,
        options,
    })
}

/// Runs one methodology. `ip-epns` forces the EPNS metric; `ip-cvar` uses
/// the case criterion if it is CVaR and otherwise derives the limit from
/// the IP-EPNS plan, as `compare` does.
pub fn solve_mode(
    mode: Mode,
    spec: &SystemSpec,
    criterion: &ReliabilityCriterion,
    states: &StateSet,
    opts: &relplan_core::BendersOptions,
) -> relplan_core::Result<PlanOutcome> {
    let epns = ReliabilityCriterion {
        metric: Metric::Epns,
        ..*criterion
    };
    match mode {
        Mode::Ep => run_ep(spec, criterion, states, opts),
        Mode::Hp => run_hp(spec, criterion, states, opts),
        Mode::IpEpns => run_ip(spec, &epns, states, opts),
        Mode::IpCvar => {
            let cvar = if criterion.metric == Metric::Cvar {
                *criterion
            } else {
                let ip = run_ip(spec, &epns, states, opts)?;
                ReliabilityCriterion::cvar(cvar_limit_frac(&ip.report, spec), criterion.alpha)
            };
            run_ip(spec, &cvar, states, opts)
        }
    }
}

fn plan_from_file(spec: &SystemSpec, path: &Path) -> Result<InvestmentPlan, CliError> {
    let value: serde_json::Value =
        serde_json::from_slice(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let node = [&["built"][..], &["plan"], &["result", "plan"]]
        .iter()
        .find_map(|keys| {
            let (last, parents) = keys.split_last().unwrap();
            let mut v = &value;
            for k in parents {
                v = v.get(k)?;
            }
            match *last {
                "built" => v.get("built").map(|_| v),
                k => v.get(k).filter(|p| p.get("built").is_some()),
            }
        })
        .ok_or_else(|| CliError::Usage(format!("{}: no plan with a `built` matrix found", path.display())))?;
    let built: Vec<Vec<bool>> = serde_json::from_value(node["built"].clone())
        .map_err(|e| CliError::Usage(format!("{}: .built: {e}", path.display())))?;
    Ok(InvestmentPlan::new(spec, built)?)
}

fn execute(command: Command, threads: Option<usize>) -> Result<(), CliError> {
    match command {
        Command::Solve { mode, run } => {
            let l = load(&run, threads)?;
            let outcome = solve_mode(mode, &l.spec, &l.case.criterion, &l.states, &l.case.options.benders)?;
            let text = match run.format {
                Format::Json => Envelope::new("solve", Some(&l.case_path), &l.options, &outcome).to_json(),
                Format::Table => report::outcome_table(&l.spec, &outcome),
            };
            emit(run.out.as_deref(), &text)
        }
        Command::Evaluate { plan, mode, mc, run } => {
            let l = load(&run, threads)?;
            let plan = match (plan, mode) {
                (Some(path), _) => plan_from_file(&l.spec, &path)?,
                (None, Some(mode)) => {
                    solve_mode(mode, &l.spec, &l.case.criterion, &l.states, &l.case.options.benders)?.plan
                }
                (None, None) => return Err(CliError::Usage("either --plan or --mode is required".into())),
            };
            let report = evaluate_plan(&l.spec, &plan, &l.case.criterion, &l.states)?;
            let monte_carlo = if mc {
                let runs = (0..l.spec.periods())
                    .map(|t| {
                        let seed = l.options.seed.wrapping_add(t as u64);
                        mc_epns_converged(&l.spec, &plan, t, seed, &l.case.options.monte_carlo)
                    })
                    .collect::<relplan_core::Result<Vec<_>>>()?;
                Some(runs)
            } else {
                None
            };
            let eval = Evaluation {
                plan,
                report,
                monte_carlo,
            };
            let text = match run.format {
                Format::Json => Envelope::new("evaluate", Some(&l.case_path), &l.options, &eval).to_json(),
                Format::Table => report::evaluation_table(&l.spec, &eval),
            };
            emit(run.out.as_deref(), &text)
        }
        Command::Compare { run } => {
            let l = load(&run, threads)?;
            let criterion = ReliabilityCriterion {
                metric: Metric::Epns,
                ..l.case.criterion
            };
            let (table, failure) = match compare(&l.spec, &criterion, &l.states, &l.case.options.benders) {
                Ok(c) => (c, None),
                // Still report the methods that finished.
                Err(relplan_core::Error::Comparison {
                    method,
                    completed,
                    source,
                }) => {
                    let err = relplan_core::Error::Comparison {
                        method,
                        completed: completed.clone(),
                        source,
                    };
                    (*completed, Some(err))
                }
                Err(e) => return Err(e.into()),
            };
            let text = match run.format {
                Format::Json => Envelope::new("compare", Some(&l.case_path), &l.options, &table).to_json(),
                Format::Table => report::comparison_table(&l.spec, &table),
            };
            emit(run.out.as_deref(), &text)?;
            failure.map_or(Ok(()), |e| Err(e.into()))
        }
        Command::GenCase {
            existing,
            candidates,
            periods,
            growth,
            seed,
            out,
        } => {
            let case = gen_case(&GenParams {
                n_existing: existing,
                n_candidates: candidates,
                periods,
                demand_growth: growth,
                seed,
            })?;
            emit(out.as_deref(), &case.to_json())
        }
        Command::DumpMip { metric, run } => {
            let l = load(&run, threads)?;
            let criterion = ReliabilityCriterion {
                metric: metric.into(),
                ..l.case.criterion
            };
            let mip = build_mip(&l.spec, &l.states, &criterion)?;
            emit(run.out.as_deref(), &write_lp_format(&mip.program))
        }
    }
}

/// Runs a parsed command line, inside a dedicated pool when `--threads` is set.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(|| execute(cli.command, Some(n))),
        None => execute(cli.command, None),
    }
}
