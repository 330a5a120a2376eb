//! File-backed persistence. Each scenario gets a directory named by its id:
//!
//! ```text
//! <root>/<scenario-id>/scenario.json
//! <root>/<scenario-id>/policies/<policy-id>.json
//! <root>/<scenario-id>/session.jsonl
//! ```
//!
//! `session.jsonl` is append-only, one event per line.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use sar_contrast::counterfactual::UserPath;
use sar_contrast::scenario::{parse_scenario, scenario_hash, scenario_id, scenario_to_json, ScenarioError};
use sar_contrast::simulate::Trace;
use sar_contrast::solver::{policy_from_json, policy_to_json, SarPolicy, SolverError};
use sar_contrast::workflow::CounterfactualResult;
use sar_contrast::{Cell, Scenario};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{0} is not a valid identifier")]
    BadId(String),
    #[error("no scenario {0}")]
    NoScenario(String),
    #[error("no policy {0}")]
    NoPolicy(String),
    #[error("stored scenario is unreadable: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("stored policy is unreadable: {0}")]
    Policy(#[from] SolverError),
    #[error("session log line {line} is unreadable: {message}")]
    Session { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SessionEvent {
    #[serde(rename_all = "kebab-case")]
    Solved {
        policy_id: String,
        epsilon: f64,
        value_lower: f64,
        value_upper: f64,
        gap: f64,
        trials: u64,
    },
    #[serde(rename_all = "kebab-case")]
    Rollout {
        policy_id: String,
        seed: u64,
        true_target: Option<Cell>,
        trace: Trace,
    },
    #[serde(rename_all = "kebab-case")]
    Counterfactual {
        policy_id: String,
        path: UserPath,
        result: Box<CounterfactualResult>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CounterfactualEntry {
    pub policy_id: String,
    pub path: UserPath,
    #[serde(flatten)]
    pub result: CounterfactualResult,
}

/// Current state of a scenario's session, folded from its event log.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Session {
    pub policy_id: Option<String>,
    pub latest_trace: Option<Trace>,
    pub history: Vec<CounterfactualEntry>,
}

impl Session {
    pub fn from_events(events: Vec<SessionEvent>) -> Self {
        let mut s = Session::default();
        for e in events {
            match e {
                SessionEvent::Solved { policy_id, .. } => s.policy_id = Some(policy_id),
                SessionEvent::Rollout { trace, .. } => s.latest_trace = Some(trace),
                SessionEvent::Counterfactual {
                    policy_id,
                    path,
                    result,
                } => s.history.push(CounterfactualEntry {
                    policy_id,
                    path,
                    result: *result,
                }),
            }
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

fn check_id(id: &str) -> Result<(), StoreError> {
    if id.len() == 16 && id.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
        Ok(())
    } else {
        Err(StoreError::BadId(id.into()))
    }
}

/// Writes via a temporary file so readers never see a partial document.
fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(tmp, path)
}

pub fn policy_id(policy_json: &str) -> String {
    hex::encode(Sha256::digest(policy_json.as_bytes()))[..16].to_string()
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, id: &str) -> Result<PathBuf, StoreError> {
        check_id(id)?;
        Ok(self.root.join(id))
    }

    fn existing_dir(&self, id: &str) -> Result<PathBuf, StoreError> {
        let dir = self.dir(id)?;
        if dir.join("scenario.json").is_file() {
            Ok(dir)
        } else {
            Err(StoreError::NoScenario(id.into()))
        }
    }

    /// Stores `scenario` under its content id. Storing the same scenario
    /// again is a no-op.
    pub fn put_scenario(&self, scenario: &Scenario) -> Result<String, StoreError> {
        let id = scenario_id(scenario);
        let dir = self.dir(&id)?;
        fs::create_dir_all(dir.join("policies"))?;
        let file = dir.join("scenario.json");
        if !file.exists() {
            write_atomic(&file, &scenario_to_json(scenario))?;
        }
        Ok(id)
    }

    pub fn get_scenario(&self, id: &str) -> Result<Scenario, StoreError> {
        let dir = self.existing_dir(id)?;
        Ok(parse_scenario(&fs::read_to_string(dir.join("scenario.json"))?)?)
    }

    pub fn put_policy(&self, id: &str, scenario: &Scenario, policy: &SarPolicy) -> Result<String, StoreError> {
        let dir = self.existing_dir(id)?;
        let json = policy_to_json(policy, &scenario_hash(scenario));
        let pid = policy_id(&json);
        let file = dir.join("policies").join(format!("{pid}.json"));
        if !file.exists() {
            write_atomic(&file, &json)?;
        }
        Ok(pid)
    }

    pub fn get_policy(&self, id: &str, policy_id: &str) -> Result<SarPolicy, StoreError> {
        let dir = self.existing_dir(id)?;
        check_id(policy_id)?;
        let file = dir.join("policies").join(format!("{policy_id}.json"));
        let text = fs::read_to_string(&file).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => StoreError::NoPolicy(policy_id.into()),
            _ => StoreError::Io(e),
        })?;
        Ok(policy_from_json(&text)?.0)
    }

    pub fn append(&self, id: &str, event: &SessionEvent) -> Result<(), StoreError> {
        let dir = self.existing_dir(id)?;
        let mut line = serde_json::to_string(event).expect("events serialize");
        line.push('\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join("session.jsonl"))?;
        f.write_all(line.as_bytes())?;
        f.sync_data()?;
        Ok(())
    }

    pub fn events(&self, id: &str) -> Result<Vec<SessionEvent>, StoreError> {
        let dir = self.existing_dir(id)?;
        let text = match fs::read_to_string(dir.join("session.jsonl")) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| StoreError::Session {
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect()
    }

    pub fn session(&self, id: &str) -> Result<Session, StoreError> {
        Ok(Session::from_events(self.events(id)?))
    }
}
