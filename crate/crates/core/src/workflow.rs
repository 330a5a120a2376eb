//! End-to-end pipelines: evaluating a counterfactual path against a solved
//! policy, and the two built-in case studies.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counterfactual::{feasibility_truncate, path_to_actions, FeasibilityReport, PathError, UserPath};
use crate::explain::{
    contrast, feature_labels, render_explanation, ContrastReport, ExplainConfig, ExplainError, ExplanationText,
    DEFAULT_TEMPLATE_SET,
};
use crate::features::{feature_expectation_closed, feature_expectation_open, FeatureError, FeatureExpectation};
use crate::sar::{initial_belief, Action, Cell, Scenario};
use crate::simulate::{open_loop_return, simulate, Trace};
use crate::solver::{solve, SarPolicy, SolverConfig, SolverError};

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("unknown case study {0}; expected 1 or 2")]
    UnknownCase(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CounterfactualResult {
    pub actions: Vec<Action>,
    pub feasibility_report: FeasibilityReport,
    pub mu_user: FeatureExpectation,
    pub mu_optimal: FeatureExpectation,
    pub value_user: f64,
    pub value_optimal: f64,
    pub contrast_report: ContrastReport,
    pub explanation_text: ExplanationText,
}

/// Converts, truncates and evaluates `path`, then contrasts it with
/// `policy`.
pub fn evaluate_counterfactual(
    scenario: &Scenario,
    policy: &SarPolicy,
    path: &UserPath,
) -> Result<CounterfactualResult, WorkflowError> {
    let drawn = path_to_actions(path, scenario)?;
    let (actions, feasibility_report) = feasibility_truncate(&drawn, scenario);
    let b0 = initial_belief(scenario);
    let mu_user = feature_expectation_open(&actions, &b0, scenario)?;
    let mu_optimal = feature_expectation_closed(policy, &b0, scenario)?;
    let alpha = scenario.weights();
    let contrast_report = contrast(
        &mu_optimal,
        &mu_user,
        &alpha,
        &feature_labels(scenario),
        Some(&feasibility_report),
        &ExplainConfig::default(),
    )?;
    let explanation_text = render_explanation(&contrast_report, DEFAULT_TEMPLATE_SET)?;
    Ok(CounterfactualResult {
        actions,
        feasibility_report,
        value_user: contrast_report.value_user,
        value_optimal: contrast_report.value_optimal,
        mu_user,
        mu_optimal,
        contrast_report,
        explanation_text,
    })
}

/// Two rows of feature expectations, optimal first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FeatureTable {
    pub labels: Vec<String>,
    pub optimal: Vec<f64>,
    pub user: Vec<f64>,
}

impl FeatureTable {
    pub fn render(&self) -> String {
        let mut out = format!("{:<10}", "");
        for l in &self.labels {
            let _ = write!(out, "{l:>9}");
        }
        for (name, row) in [("mu^pi*", &self.optimal), ("mu^pi_hu", &self.user)] {
            let _ = write!(out, "\n{name:<10}");
            for v in row {
                let _ = write!(out, "{v:>9.3}");
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CaseStudy {
    pub case_id: u32,
    pub scenario: Scenario,
    #[serde(skip)]
    pub policy: SarPolicy,
    pub user_path: UserPath,
    pub counterfactual: CounterfactualResult,
    pub table: FeatureTable,
    /// Optimal policy rollout against `true_target`.
    pub trace: Trace,
    pub true_target: Cell,
    /// Realized discounted reward of the executed user actions against
    /// `true_target`.
    pub user_return: f64,
}

/// Built-in scenario, reference user path and rollout target of a case study.
pub fn case_study_inputs(case_id: u32) -> Result<(Scenario, UserPath, Cell), WorkflowError> {
    let path = |cells: &[(i32, i32)]| UserPath::new(cells.iter().map(|&(x, y)| Cell::new(x, y)).collect());
    match case_id {
        1 => Ok((
            Scenario::new(5, Cell::new(1, 1), 500.0, 25).with_interest(Cell::new(1, 5), 3.0),
            path(&[(1, 1), (1, 2), (1, 3), (1, 4), (1, 5), (2, 5), (3, 5), (4, 5), (5, 5)]),
            Cell::new(5, 5),
        )),
        2 => Ok((
            Scenario::new(5, Cell::new(1, 1), 100.0, 12)
                .with_interest(Cell::new(5, 5), 3.0)
                .with_interest(Cell::new(4, 1), 1.0)
                .with_interest(Cell::new(3, 3), 1.0),
            path(&[(1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (3, 4), (4, 4), (4, 5), (5, 5)]),
            Cell::new(1, 5),
        )),
        other => Err(WorkflowError::UnknownCase(other)),
    }
}

pub const CASE_STUDY_SEED: u64 = 0;

/// Solves a built-in case study and evaluates its reference user path.
pub fn run_case_study(case_id: u32) -> Result<CaseStudy, WorkflowError> {
    let (scenario, user_path, true_target) = case_study_inputs(case_id)?;
    let policy = solve(&scenario, &SolverConfig::for_scenario(&scenario))?;
    let counterfactual = evaluate_counterfactual(&scenario, &policy, &user_path)?;
    let trace = simulate(&policy, &scenario, CASE_STUDY_SEED, Some(true_target))?;
    let user_return = open_loop_return(&counterfactual.actions, &scenario, true_target);
    let table = FeatureTable {
        labels: scenario.feature_labels(),
        optimal: counterfactual.mu_optimal.mu.0.clone(),
        user: counterfactual.mu_user.mu.0.clone(),
    };
    Ok(CaseStudy {
        case_id,
        scenario,
        policy,
        user_path,
        counterfactual,
        table,
        trace,
        true_target,
        user_return,
    })
}
