//! HTTP/JSON API.
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/scenarios` | scenario document |
//! | POST | `/scenarios/{id}/solve` | `{epsilon?, budget?: {max-trials?, time-limit-ms?}}` |
//! | POST | `/scenarios/{id}/rollout` | `{seed, true-target?}` |
//! | POST | `/scenarios/{id}/counterfactual` | `{path: [[x, y], ...]}` |
//! | GET | `/scenarios/{id}` | |
//!
//! Writes to one scenario are serialized; reads only wait for writes.
//! Rollout and counterfactual requests solve with default settings when the
//! scenario has no policy yet.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use sar_contrast::counterfactual::{PathError, UserPath};
use sar_contrast::scenario::{parse_scenario, scenario_to_value, FieldError, ScenarioError};
use sar_contrast::simulate::{simulate, Trace};
use sar_contrast::solver::{solve, SarPolicy, SolverConfig, SolverError};
use sar_contrast::workflow::{evaluate_counterfactual, CounterfactualResult, WorkflowError};
use sar_contrast::{Cell, Scenario};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::RwLock;

use crate::store::{Session, SessionEvent, Store, StoreError};

pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(120);

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
    fields: Vec<FieldError>,
    extra: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
            fields: Vec::new(),
            extra: None,
        }
    }

    fn invalid(message: impl Into<String>, fields: Vec<FieldError>) -> Self {
        Self {
            fields,
            ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", message)
        }
    }

    fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        let message = message.into();
        Self::invalid(
            message.clone(),
            vec![FieldError {
                path: path.into(),
                message,
            }],
        )
    }

    fn internal(message: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.kind, "message": self.message });
        if !self.fields.is_empty() {
            body["fields"] = serde_json::to_value(&self.fields).expect("field errors serialize");
        }
        if let Some(extra) = self.extra {
            body["details"] = extra;
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::BadId(_) | StoreError::NoScenario(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "not-found", e.to_string())
            }
            other => ApiError::internal(other),
        }
    }
}

impl From<ScenarioError> for ApiError {
    fn from(e: ScenarioError) -> Self {
        ApiError::invalid(e.to_string(), e.field_errors())
    }
}

fn solver_error(e: SolverError) -> ApiError {
    match e {
        SolverError::BudgetExceeded(p) => {
            let mut err = ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "budget-exceeded",
                "solve budget exhausted before the value gap closed",
            );
            err.extra = Some(json!({
                "value-lower": p.meta.lower,
                "value-upper": p.meta.upper,
                "gap": p.meta.gap,
                "trials": p.meta.trials,
            }));
            err
        }
        SolverError::InvalidEpsilon(_) => ApiError::field("/epsilon", e.to_string()),
        other => ApiError::internal(other),
    }
}

fn path_error(e: PathError) -> ApiError {
    let at = |i: usize| format!("/path/{i}");
    let field = match &e {
        PathError::Empty | PathError::Syntax(_) => "/path".to_string(),
        PathError::WrongStartCell { .. } => at(0),
        PathError::OutOfBounds { index, .. }
        | PathError::NonAdjacentStep { index }
        | PathError::StayNotSupported { index } => at(*index),
    };
    ApiError::field(field, e.to_string())
}

fn workflow_error(e: WorkflowError) -> ApiError {
    match e {
        WorkflowError::Path(p) => path_error(p),
        WorkflowError::Feature(sar_contrast::features::FeatureError::EmptyActions) => {
            ApiError::field("/path", "path needs at least two cells")
        }
        WorkflowError::Solver(s) => solver_error(s),
        other => ApiError::internal(other),
    }
}

fn parse_body<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::field("", format!("invalid request body: {e}")))
}

struct Inner {
    store: Store,
    locks: Mutex<HashMap<String, Arc<RwLock<()>>>>,
    policies: Mutex<HashMap<String, Arc<SarPolicy>>>,
    time_limit: Duration,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(store: Store) -> Self {
        Self::with_time_limit(store, DEFAULT_TIME_LIMIT)
    }

    /// `time_limit` caps solves whose request names no budget.
    pub fn with_time_limit(store: Store, time_limit: Duration) -> Self {
        Self(Arc::new(Inner {
            store,
            locks: Mutex::new(HashMap::new()),
            policies: Mutex::new(HashMap::new()),
            time_limit,
        }))
    }

    pub fn store(&self) -> &Store {
        &self.0.store
    }

    fn lock(&self, id: &str) -> Arc<RwLock<()>> {
        let mut locks = self.0.locks.lock().expect("lock table poisoned");
        locks.entry(id.to_string()).or_default().clone()
    }

    fn policy(&self, id: &str, policy_id: &str) -> Result<Arc<SarPolicy>, ApiError> {
        if let Some(p) = self.0.policies.lock().expect("policy cache poisoned").get(policy_id) {
            return Ok(p.clone());
        }
        let p = Arc::new(self.store().get_policy(id, policy_id)?);
        self.0
            .policies
            .lock()
            .expect("policy cache poisoned")
            .insert(policy_id.to_string(), p.clone());
        Ok(p)
    }

    /// Solves off the async runtime and records the result. Callers hold
    /// the scenario's write lock.
    async fn solve_and_record(
        &self,
        id: &str,
        scenario: &Scenario,
        config: SolverConfig,
    ) -> Result<(String, Arc<SarPolicy>), ApiError> {
        let s = scenario.clone();
        let policy = tokio::task::spawn_blocking(move || solve(&s, &config))
            .await
            .map_err(ApiError::internal)?
            .map_err(solver_error)?;
        let policy_id = self.store().put_policy(id, scenario, &policy)?;
        let meta = policy.meta.clone();
        self.store().append(
            id,
            &SessionEvent::Solved {
                policy_id: policy_id.clone(),
                epsilon: config.epsilon,
                value_lower: meta.lower,
                value_upper: meta.upper,
                gap: meta.gap,
                trials: meta.trials,
            },
        )?;
        let policy = Arc::new(policy);
        self.0
            .policies
            .lock()
            .expect("policy cache poisoned")
            .insert(policy_id.clone(), policy.clone());
        Ok((policy_id, policy))
    }

    async fn current_policy(&self, id: &str, scenario: &Scenario) -> Result<(String, Arc<SarPolicy>), ApiError> {
        match self.store().session(id)?.policy_id {
            Some(pid) => {
                let p = self.policy(id, &pid)?;
                Ok((pid, p))
            }
            None => {
                let mut cfg = SolverConfig::for_scenario(scenario);
                cfg.time_limit = Some(self.0.time_limit);
                self.solve_and_record(id, scenario, cfg).await
            }
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/scenarios", post(create_scenario))
        .route("/scenarios/{id}", get(get_scenario))
        .route("/scenarios/{id}/solve", post(solve_scenario))
        .route("/scenarios/{id}/rollout", post(rollout))
        .route("/scenarios/{id}/counterfactual", post(counterfactual))
        .with_state(state)
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct Created {
    scenario_id: String,
}

async fn create_scenario(State(app): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<Created>), ApiError> {
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::field("", "body is not UTF-8"))?;
    let scenario = parse_scenario(text)?;
    let scenario_id = app.store().put_scenario(&scenario)?;
    Ok((StatusCode::CREATED, Json(Created { scenario_id })))
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct ScenarioView {
    scenario_id: String,
    scenario: Value,
    session: Session,
}

async fn get_scenario(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<ScenarioView>, ApiError> {
    let lock = app.lock(&id);
    let _read = lock.read().await;
    let scenario = app.store().get_scenario(&id)?;
    let session = app.store().session(&id)?;
    Ok(Json(ScenarioView {
        scenario_id: id,
        scenario: scenario_to_value(&scenario),
        session,
    }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct Budget {
    max_trials: Option<u64>,
    time_limit_ms: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct SolveRequest {
    epsilon: Option<f64>,
    budget: Option<Budget>,
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct Solved {
    policy_id: String,
    value_lower: f64,
    value_upper: f64,
    gap: f64,
    trials: u64,
}

async fn solve_scenario(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Solved>, ApiError> {
    let req: SolveRequest = parse_body(&body)?;
    let lock = app.lock(&id);
    let _write = lock.write().await;
    let scenario = app.store().get_scenario(&id)?;
    let mut cfg = SolverConfig::for_scenario(&scenario);
    if let Some(eps) = req.epsilon {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(ApiError::field("/epsilon", "must be a positive number"));
        }
        cfg.epsilon = eps;
    }
    let budget = req.budget.unwrap_or_default();
    if let Some(t) = budget.max_trials {
        cfg.max_trials = t;
    }
    cfg.time_limit = Some(budget.time_limit_ms.map_or(app.0.time_limit, Duration::from_millis));
    let (policy_id, policy) = app.solve_and_record(&id, &scenario, cfg).await?;
    Ok(Json(Solved {
        policy_id,
        value_lower: policy.meta.lower,
        value_upper: policy.meta.upper,
        gap: policy.meta.gap,
        trials: policy.meta.trials,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct RolloutRequest {
    seed: u64,
    true_target: Option<Cell>,
}

async fn rollout(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Json<Trace>, ApiError> {
    let req: RolloutRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::field("", format!("invalid request body: {e}")))?;
    let lock = app.lock(&id);
    let _write = lock.write().await;
    let scenario = app.store().get_scenario(&id)?;
    if let Some(t) = req.true_target {
        if !scenario.in_bounds(t) {
            return Err(ApiError::field("/true-target", format!("cell {t} is outside the grid")));
        }
    }
    let (policy_id, policy) = app.current_policy(&id, &scenario).await?;
    let trace = simulate(&policy, &scenario, req.seed, req.true_target).map_err(solver_error)?;
    app.store().append(
        &id,
        &SessionEvent::Rollout {
            policy_id,
            seed: req.seed,
            true_target: req.true_target,
            trace: trace.clone(),
        },
    )?;
    Ok(Json(trace))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct CounterfactualRequest {
    path: UserPath,
}

async fn counterfactual(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<CounterfactualResult>, ApiError> {
    let req: CounterfactualRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::field("/path", format!("invalid request body: {e}")))?;
    let lock = app.lock(&id);
    let _write = lock.write().await;
    let scenario = app.store().get_scenario(&id)?;
    let (policy_id, policy) = app.current_policy(&id, &scenario).await?;
    let result = evaluate_counterfactual(&scenario, &policy, &req.path).map_err(workflow_error)?;
    app.store().append(
        &id,
        &SessionEvent::Counterfactual {
            policy_id,
            path: req.path,
            result: Box::new(result.clone()),
        },
    )?;
    Ok(Json(result))
}
