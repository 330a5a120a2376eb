//! User-drawn counterfactual paths: conversion to open-loop action sequences
//! and battery-feasibility truncation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pomdp::FactoredPomdp;
use crate::sar::{Action, Cell, SarKnown, Scenario};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("path is empty")]
    Empty,
    #[error("path must start at the start cell {expected}, not {got}")]
    WrongStartCell { expected: Cell, got: Cell },
    #[error("cell {cell} at index {index} is outside the grid")]
    OutOfBounds { index: usize, cell: Cell },
    #[error("cell at index {index} is not adjacent to the previous cell")]
    NonAdjacentStep { index: usize },
    #[error("cell at index {index} repeats the previous cell; there is no stay action")]
    StayNotSupported { index: usize },
    #[error("cannot parse path: {0}")]
    Syntax(String),
}

/// Ordered cells, serialized as `[[x, y], ...]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserPath {
    pub cells: Vec<Cell>,
}

impl UserPath {
    pub fn new(cells: Vec<Cell>) -> Self {
        Self { cells }
    }

    /// The cells visited by replaying `actions` from `start`.
    pub fn from_actions(start: Cell, actions: &[Action], scenario: &Scenario) -> Self {
        let mut cells = vec![start];
        let mut here = start;
        for &a in actions {
            here = scenario.move_robot(here, a);
            cells.push(here);
        }
        Self { cells }
    }
}

/// Parses the command-line form `"1,1;1,2;2,2"`.
pub fn parse_path_arg(text: &str) -> Result<UserPath, PathError> {
    let mut cells = Vec::new();
    for (i, part) in text.split(';').enumerate() {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let mut coords = part.split(',').map(|c| c.trim().parse::<i32>());
        let cell = match (coords.next(), coords.next(), coords.next()) {
            (Some(Ok(x)), Some(Ok(y)), None) => Cell::new(x, y),
            _ => {
                return Err(PathError::Syntax(format!(
                    "entry {i} ({part:?}) is not of the form x,y"
                )))
            }
        };
        cells.push(cell);
    }
    Ok(UserPath { cells })
}

/// One cardinal action per consecutive pair of cells.
pub fn path_to_actions(path: &UserPath, scenario: &Scenario) -> Result<Vec<Action>, PathError> {
    let first = *path.cells.first().ok_or(PathError::Empty)?;
    for (index, &cell) in path.cells.iter().enumerate() {
        if !scenario.in_bounds(cell) {
            return Err(PathError::OutOfBounds { index, cell });
        }
    }
    if first != scenario.start {
        return Err(PathError::WrongStartCell {
            expected: scenario.start,
            got: first,
        });
    }
    path.cells
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let index = i + 1;
            if w[0] == w[1] {
                return Err(PathError::StayNotSupported { index });
            }
            Action::between(w[0], w[1]).ok_or(PathError::NonAdjacentStep { index })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationCause {
    None,
    Battery,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FeasibilityReport {
    pub original_length: usize,
    pub executed_length: usize,
    pub truncation_cause: TruncationCause,
    /// Robot cell where execution stopped; only set when truncated.
    pub truncated_at_cell: Option<Cell>,
    /// Cells the dropped actions would have visited.
    pub unreached_cells: Vec<Cell>,
}

impl FeasibilityReport {
    pub fn truncated(&self) -> bool {
        self.truncation_cause != TruncationCause::None
    }
}

/// Cuts `actions` after the first step that lands on a battery-terminal
/// state. That step is kept, so its battery feature is counted; everything
/// after it is dropped. The target is ignored.
pub fn feasibility_truncate(actions: &[Action], scenario: &Scenario) -> (Vec<Action>, FeasibilityReport) {
    let mut known = SarKnown {
        robot: scenario.start,
        battery: scenario.battery,
    };
    let mut executed = actions.len();
    for (i, &a) in actions.iter().enumerate() {
        if scenario.battery_terminal(known.robot, known.battery) {
            executed = i;
            break;
        }
        known = scenario.step(&known, a);
    }
    let kept = actions[..executed].to_vec();
    let report = if executed == actions.len() {
        FeasibilityReport {
            original_length: actions.len(),
            executed_length: executed,
            truncation_cause: TruncationCause::None,
            truncated_at_cell: None,
            unreached_cells: Vec::new(),
        }
    } else {
        let rest = UserPath::from_actions(known.robot, &actions[executed..], scenario);
        FeasibilityReport {
            original_length: actions.len(),
            executed_length: executed,
            truncation_cause: TruncationCause::Battery,
            truncated_at_cell: Some(known.robot),
            unreached_cells: rest.cells[1..].to_vec(),
        }
    };
    (kept, report)
}
