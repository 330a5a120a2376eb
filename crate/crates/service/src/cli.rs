//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 validation error,
//! 3 solve budget exceeded.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use sar_contrast::counterfactual::parse_path_arg;
use sar_contrast::scenario::{parse_scenario, scenario_hash, scenario_id};
use sar_contrast::simulate::simulate;
use sar_contrast::solver::{policy_from_json, policy_to_json, solve, SarPolicy, SolverConfig, SolverError};
use sar_contrast::workflow::{evaluate_counterfactual, run_case_study, FeatureTable, WorkflowError};
use sar_contrast::{Cell, Scenario};
use serde_json::json;

use crate::api::{router, AppState};
use crate::store::{policy_id, Store};

#[derive(Debug, Parser)]
#[command(
    name = "sar-contrast",
    version,
    about = "Search-and-rescue POMDP planning with contrastive explanations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    /// Target value gap at the initial belief [default: 0.001 x target weight].
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_trials: Option<u64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a scenario and print the bounds at the initial belief.
    Solve {
        scenario: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        /// Write the policy artifact here.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Simulate the optimal policy and print the trace as JSON.
    Rollout {
        scenario: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Hidden target as `x,y`; drawn from the initial belief if absent.
        #[arg(long)]
        true_target: Option<String>,
        /// Use a stored policy artifact instead of solving.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Contrast a user path such as "1,1;1,2;2,2" with the optimal policy.
    Contrast {
        scenario: PathBuf,
        #[arg(long)]
        path: String,
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Print the full result as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Run a built-in case study (1 or 2).
    CaseStudy {
        #[arg(value_parser = clap::value_parser!(u32).range(1..=2))]
        case: u32,
        #[arg(long)]
        json: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        data_dir: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Budget(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Budget(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Budget(m) | CliError::Other(m) => m,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::BudgetExceeded(_) => CliError::Budget(e.to_string()),
            SolverError::InvalidEpsilon(_) | SolverError::Artifact(_) => CliError::Validation(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<WorkflowError> for CliError {
    fn from(e: WorkflowError) -> Self {
        match e {
            WorkflowError::Solver(s) => s.into(),
            WorkflowError::Path(_) | WorkflowError::Feature(_) | WorkflowError::UnknownCase(_) => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Other(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    parse_scenario(&read(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn config(scenario: &Scenario, args: &SolveArgs) -> Result<SolverConfig, CliError> {
    let mut cfg = SolverConfig::for_scenario(scenario);
    if let Some(e) = args.epsilon {
        cfg.epsilon = e;
    }
    if let Some(t) = args.max_trials {
        cfg.max_trials = t;
    }
    if let Some(secs) = args.time_limit {
        cfg.time_limit = Some(
            Duration::try_from_secs_f64(secs)
                .map_err(|_| CliError::Validation(format!("invalid time limit {secs}")))?,
        );
    }
    Ok(cfg)
}

fn policy_for(scenario: &Scenario, artifact: Option<&Path>, args: &SolveArgs) -> Result<SarPolicy, CliError> {
    match artifact {
        Some(path) => {
            let (policy, hash) = policy_from_json(&read(path)?)?;
            if hash != scenario_hash(scenario) {
                return Err(CliError::Validation(format!(
                    "{} was solved for a different scenario",
                    path.display()
                )));
            }
            Ok(policy)
        }
        None => Ok(solve(scenario, &config(scenario, args)?)?),
    }
}

fn parse_cell(text: &str) -> Result<Cell, CliError> {
    let path = parse_path_arg(text).map_err(|e| CliError::Validation(e.to_string()))?;
    match path.cells.as_slice() {
        [c] => Ok(*c),
        _ => Err(CliError::Validation(format!("expected one cell as x,y, got {text:?}"))),
    }
}

fn print_table(table: &FeatureTable) {
    println!("{}", table.render());
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            scenario,
            solve: args,
            output,
        } => {
            let s = load_scenario(&scenario)?;
            let policy = solve(&s, &config(&s, &args)?)?;
            let artifact = policy_to_json(&policy, &scenario_hash(&s));
            if let Some(out) = output {
                fs::write(&out, &artifact).map_err(|e| CliError::Other(format!("{}: {e}", out.display())))?;
            }
            let summary = json!({
                "scenario-id": scenario_id(&s),
                "policy-id": policy_id(&artifact),
                "value-lower": policy.meta.lower,
                "value-upper": policy.meta.upper,
                "gap": policy.meta.gap,
                "trials": policy.meta.trials,
                "vectors": policy.vector_count(),
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
        }
        Command::Rollout {
            scenario,
            seed,
            true_target,
            policy,
            solve: args,
        } => {
            let s = load_scenario(&scenario)?;
            let target = true_target.as_deref().map(parse_cell).transpose()?;
            if let Some(t) = target.filter(|t| !s.in_bounds(*t)) {
                return Err(CliError::Validation(format!("true target {t} is outside the grid")));
            }
            let p = policy_for(&s, policy.as_deref(), &args)?;
            let trace = simulate(&p, &s, seed, target)?;
            println!("{}", serde_json::to_string_pretty(&trace).expect("trace serializes"));
        }
        Command::Contrast {
            scenario,
            path,
            policy,
            json,
            solve: args,
        } => {
            let s = load_scenario(&scenario)?;
            let user = parse_path_arg(&path).map_err(|e| CliError::Validation(e.to_string()))?;
            let p = policy_for(&s, policy.as_deref(), &args)?;
            let result = evaluate_counterfactual(&s, &p, &user)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&result).expect("result serializes"));
            } else {
                let report = &result.feasibility_report;
                if report.truncated() {
                    println!(
                        "path cut by the battery after {} of {} moves",
                        report.executed_length, report.original_length
                    );
                }
                print_table(&FeatureTable {
                    labels: s.feature_labels(),
                    optimal: result.mu_optimal.mu.0.clone(),
                    user: result.mu_user.mu.0.clone(),
                });
                println!();
                println!("{}", result.explanation_text.text());
            }
        }
        Command::CaseStudy { case, json } => {
            let cs = run_case_study(case)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&cs).expect("case study serializes"));
            } else {
                print_table(&cs.table);
                println!();
                println!("{}", cs.counterfactual.explanation_text.text());
                println!();
                println!("user return with target at {}: {:.3}", cs.true_target, cs.user_return);
                println!(
                    "optimal rollout (seed {}): {} moves, {:?}, return {:.3}",
                    cs.trace.seed,
                    cs.trace.steps.len() - 1,
                    cs.trace.terminal_cause,
                    cs.trace.discounted_return
                );
            }
        }
        Command::Serve { port, host, data_dir } => {
            let store = Store::open(&data_dir).map_err(|e| CliError::Other(format!("{}: {e}", data_dir.display())))?;
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| CliError::Validation(format!("bad address {host}:{port}: {e}")))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Other(e.to_string()))?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr)
                    .await
                    .map_err(|e| CliError::Other(format!("bind {addr}: {e}")))?;
                eprintln!(
                    "listening on http://{}",
                    listener.local_addr().map_err(|e| CliError::Other(e.to_string()))?
                );
                axum::serve(listener, router(AppState::new(store)))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await
                    .map_err(|e| CliError::Other(e.to_string()))
            })?;
        }
    }
    Ok(())
}

pub fn main_with(args: impl IntoIterator<Item = std::ffi::OsString>) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
