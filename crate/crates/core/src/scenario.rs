//! Scenario documents: the versioned JSON file format, validation with field
//! paths, and content hashing.
//!
//! ```json
//! {
//!   "format-version": 1,
//!   "grid-size": 5,
//!   "start": [1, 1],
//!   "cells-of-interest": [{"cell": [1, 5], "weight": 3.0}],
//!   "target-weight": 500.0,
//!   "battery": 25
//! }
//! ```
//!
//! `p-detect`, `detection-metric`, `discount` and `battery-weight` are
//! optional.

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::sar::{Cell, CellOfInterest, DetectionMetric, Scenario, DEFAULT_DISCOUNT, DEFAULT_P_DETECT};

pub const SCENARIO_FORMAT_VERSION: u64 = 1;
pub const MAX_GRID_SIZE: u32 = 10;
pub const MAX_BATTERY: u32 = 64;

/// A problem with one field, located by JSON pointer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("invalid scenario: {}", summarize(.0))]
    Invalid(Vec<FieldError>),
}

impl ScenarioError {
    pub fn field_errors(&self) -> Vec<FieldError> {
        match self {
            ScenarioError::Json(m) => vec![FieldError {
                path: String::new(),
                message: m.clone(),
            }],
            ScenarioError::Invalid(errors) => errors.clone(),
        }
    }
}

fn summarize(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(|e| format!("{}: {}", if e.path.is_empty() { "/" } else { &e.path }, e.message))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Default)]
struct Checker {
    errors: Vec<FieldError>,
}

impl Checker {
    fn fail(&mut self, path: &str, message: impl Into<String>) {
        self.errors.push(FieldError {
            path: path.into(),
            message: message.into(),
        });
    }

    fn uint(&mut self, obj: &Map<String, Value>, key: &str, range: (u64, u64)) -> Option<u64> {
        let path = format!("/{key}");
        let Some(v) = obj.get(key) else {
            self.fail(&path, "required");
            return None;
        };
        match v.as_u64() {
            Some(n) if (range.0..=range.1).contains(&n) => Some(n),
            Some(_) => {
                self.fail(&path, format!("must be between {} and {}", range.0, range.1));
                None
            }
            None => {
                self.fail(&path, "must be a nonnegative integer");
                None
            }
        }
    }

    fn real(
        &mut self,
        v: Option<&Value>,
        path: &str,
        default: Option<f64>,
        ok: impl Fn(f64) -> bool,
        rule: &str,
    ) -> Option<f64> {
        let Some(v) = v else {
            if default.is_none() {
                self.fail(path, "required");
            }
            return default;
        };
        match v.as_f64() {
            Some(x) if x.is_finite() && ok(x) => Some(x),
            Some(_) => {
                self.fail(path, rule);
                None
            }
            None => {
                self.fail(path, "must be a number");
                None
            }
        }
    }

    fn cell(&mut self, v: Option<&Value>, path: &str, n: Option<u32>) -> Option<Cell> {
        let Some(v) = v else {
            self.fail(path, "required");
            return None;
        };
        let coords = v.as_array().filter(|a| a.len() == 2).and_then(|a| {
            let x = a[0].as_i64().and_then(|x| i32::try_from(x).ok())?;
            let y = a[1].as_i64().and_then(|y| i32::try_from(y).ok())?;
            Some(Cell::new(x, y))
        });
        let Some(cell) = coords else {
            self.fail(path, "must be an [x, y] integer pair");
            return None;
        };
        if let Some(n) = n {
            let n = n as i32;
            if !(1..=n).contains(&cell.x) || !(1..=n).contains(&cell.y) {
                self.fail(path, format!("cell {cell} is outside the {n}x{n} grid"));
                return None;
            }
        }
        Some(cell)
    }
}

const FIELDS: &[&str] = &[
    "format-version",
    "grid-size",
    "start",
    "cells-of-interest",
    "target-weight",
    "battery",
    "p-detect",
    "detection-metric",
    "discount",
    "battery-weight",
];

/// Parses and validates a scenario document, reporting every problem found.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ScenarioError::Json(e.to_string()))?;
    validate_scenario(&value)
}

pub fn validate_scenario(value: &Value) -> Result<Scenario, ScenarioError> {
    let mut c = Checker::default();
    let Some(obj) = value.as_object() else {
        c.fail("", "scenario must be a JSON object");
        return Err(ScenarioError::Invalid(c.errors));
    };
    for key in obj.keys() {
        if !FIELDS.contains(&key.as_str()) {
            c.fail(&format!("/{key}"), "unknown field");
        }
    }
    c.uint(
        obj,
        "format-version",
        (SCENARIO_FORMAT_VERSION, SCENARIO_FORMAT_VERSION),
    );
    let n = c
        .uint(obj, "grid-size", (2, u64::from(MAX_GRID_SIZE)))
        .map(|n| n as u32);
    let start = c.cell(obj.get("start"), "/start", n);
    let target_weight = c.real(
        obj.get("target-weight"),
        "/target-weight",
        None,
        |x| x >= 0.0,
        "must be nonnegative",
    );
    let battery = c.uint(obj, "battery", (1, u64::from(MAX_BATTERY))).map(|b| b as u32);
    let p_detect = c.real(
        obj.get("p-detect"),
        "/p-detect",
        Some(DEFAULT_P_DETECT),
        |x| (0.0..=1.0).contains(&x),
        "must be within [0, 1]",
    );
    let discount = c.real(
        obj.get("discount"),
        "/discount",
        Some(DEFAULT_DISCOUNT),
        |x| x > 0.0 && x < 1.0,
        "must be strictly between 0 and 1",
    );
    let battery_weight = c.real(obj.get("battery-weight"), "/battery-weight", Some(0.0), |_| true, "");
    let detection_metric = match obj.get("detection-metric") {
        None => Some(DetectionMetric::default()),
        Some(v) => match serde_json::from_value::<DetectionMetric>(v.clone()) {
            Ok(m) => Some(m),
            Err(_) => {
                c.fail("/detection-metric", "must be \"chebyshev\" or \"manhattan\"");
                None
            }
        },
    };

    let mut interest = Some(Vec::new());
    match obj.get("cells-of-interest") {
        None => {}
        Some(Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                let base = format!("/cells-of-interest/{i}");
                let Some(entry) = item.as_object() else {
                    c.fail(&base, "must be an object with cell and weight");
                    interest = None;
                    continue;
                };
                for key in entry.keys().filter(|k| *k != "cell" && *k != "weight") {
                    c.fail(&format!("{base}/{key}"), "unknown field");
                }
                let cell = c.cell(entry.get("cell"), &format!("{base}/cell"), n);
                let weight = c.real(
                    entry.get("weight"),
                    &format!("{base}/weight"),
                    None,
                    |w| w >= 0.0,
                    "must be nonnegative",
                );
                match (cell, weight, interest.as_mut()) {
                    (Some(cell), Some(weight), Some(list)) => {
                        if list.iter().any(|c: &CellOfInterest| c.cell == cell) {
                            c.fail(&format!("{base}/cell"), format!("cell {cell} is listed twice"));
                        }
                        list.push(CellOfInterest { cell, weight });
                    }
                    _ => interest = None,
                }
            }
        }
        Some(_) => c.fail("/cells-of-interest", "must be an array"),
    }

    if !c.errors.is_empty() {
        return Err(ScenarioError::Invalid(c.errors));
    }
    let all = (
        n,
        start,
        target_weight,
        battery,
        p_detect,
        discount,
        battery_weight,
        detection_metric,
        interest,
    );
    let (Some(n), Some(start), Some(tw), Some(battery), Some(p), Some(g), Some(bw), Some(metric), Some(interest)) = all
    else {
        unreachable!("every missing value records an error")
    };
    Ok(Scenario {
        grid_size: n,
        start,
        cells_of_interest: interest,
        target_weight: tw,
        battery,
        p_detect: p,
        detection_metric: metric,
        discount: g,
        battery_weight: bw,
    })
}

/// Canonical document with every field present.
pub fn scenario_to_value(scenario: &Scenario) -> Value {
    let mut v = serde_json::to_value(scenario).expect("scenario serializes");
    v.as_object_mut()
        .expect("struct serializes to an object")
        .insert("format-version".into(), Value::from(SCENARIO_FORMAT_VERSION));
    v
}

pub fn scenario_to_json(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(&scenario_to_value(scenario)).expect("value serializes")
}

/// SHA-256 of the compact canonical document, hex encoded. Keys are sorted
/// and defaults filled in, so equivalent documents hash alike.
pub fn scenario_hash(scenario: &Scenario) -> String {
    let canonical = serde_json::to_string(&scenario_to_value(scenario)).expect("value serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Short identifier: the first 16 hex digits of the hash.
pub fn scenario_id(scenario: &Scenario) -> String {
    scenario_hash(scenario)[..16].to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASE1: &str = r#"{
        "format-version": 1,
        "grid-size": 5,
        "start": [1, 1],
        "cells-of-interest": [{"cell": [1, 5], "weight": 3.0}],
        "target-weight": 500.0,
        "battery": 25
    }"#;

    #[test]
    fn defaults_fill_in() {
        let s = parse_scenario(CASE1).unwrap();
        assert_eq!(
            s,
            Scenario::new(5, Cell::new(1, 1), 500.0, 25).with_interest(Cell::new(1, 5), 3.0)
        );
    }

    #[test]
    fn round_trip_is_identical() {
        let mut s = parse_scenario(CASE1).unwrap();
        s.p_detect = 0.1 + 0.2;
        let text = scenario_to_json(&s);
        let back = parse_scenario(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.p_detect.to_bits(), s.p_detect.to_bits());
        assert_eq!(scenario_hash(&back), scenario_hash(&s));
    }

    #[test]
    fn hash_ignores_spelling_of_defaults() {
        let explicit = CASE1.replace(
            "\"battery\": 25",
            "\"battery\": 25, \"discount\": 0.95, \"p-detect\": 0.8",
        );
        let a = parse_scenario(CASE1).unwrap();
        let b = parse_scenario(&explicit).unwrap();
        assert_eq!(scenario_id(&a), scenario_id(&b));
        assert_eq!(scenario_id(&a).len(), 16);
        let mut c = a.clone();
        c.battery = 24;
        assert_ne!(scenario_hash(&a), scenario_hash(&c));
    }

    #[test]
    fn errors_carry_paths() {
        let bad = r#"{"format-version": 2, "grid-size": 5, "start": [0, 1],
            "cells-of-interest": [{"cell": [9, 9], "weight": -1}], "battery": "x",
            "discount": 1.0, "colour": 1}"#;
        let err = parse_scenario(bad).unwrap_err();
        let paths: Vec<String> = err.field_errors().into_iter().map(|e| e.path).collect();
        for p in [
            "/format-version",
            "/start",
            "/cells-of-interest/0/cell",
            "/cells-of-interest/0/weight",
            "/battery",
            "/discount",
            "/target-weight",
            "/colour",
        ] {
            assert!(paths.iter().any(|q| q == p), "missing {p} in {paths:?}");
        }
    }

    #[test]
    fn non_object_and_bad_json() {
        assert!(matches!(parse_scenario("[1]"), Err(ScenarioError::Invalid(_))));
        assert!(matches!(parse_scenario("{"), Err(ScenarioError::Json(_))));
    }
}
