//! The grid search-and-rescue POMDP.
//!
//! A robot starts at a fixed cell of an `n × n` grid with a battery budget
//! counted in actions. A stationary target hides in one cell. Each cardinal
//! move costs one unit of battery; moves into a wall leave the robot in
//! place. The episode ends when the robot enters the target's cell, or when
//! the remaining battery minus the Manhattan distance back to the start
//! drops below one.
//!
//! Coordinates are 1-indexed `[x, y]` with `x` growing rightward and `y`
//! upward. Hidden target hypotheses are indexed row-major, i.e.
//! `(y - 1) * n + (x - 1)`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pomdp::{DiscreteDistribution, FactoredPomdp, TerminalCause};

pub const DEFAULT_P_DETECT: f64 = 0.8;
pub const DEFAULT_DISCOUNT: f64 = 0.95;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SarError {
    #[error("cannot step from a terminal state ({0:?})")]
    TerminalStateStep(TerminalCause),
    #[error("cell {0} is outside the grid")]
    OutOfBounds(Cell),
}

/// A grid cell, serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        (self.x - other.x).unsigned_abs() + (self.y - other.y).unsigned_abs()
    }

    pub fn chebyshev(self, other: Cell) -> u32 {
        (self.x - other.x).unsigned_abs().max((self.y - other.y).unsigned_abs())
    }

    pub fn offset(self, action: Action) -> Cell {
        let (dx, dy) = action.delta();
        Cell::new(self.x + dx, self.y + dy)
    }
}

impl From<[i32; 2]> for Cell {
    fn from([x, y]: [i32; 2]) -> Self {
        Cell { x, y }
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.x, self.y)
    }
}

// Row-major: rows bottom to top, cells left to right.
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cardinal moves, declared in the fixed tie-breaking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::Up => (0, 1),
            Action::Down => (0, -1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
        }
    }

    /// The action moving from `from` to the 4-adjacent `to`.
    pub fn between(from: Cell, to: Cell) -> Option<Action> {
        Action::ALL.into_iter().find(|a| from.offset(*a) == to)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionMetric {
    /// 8-neighbourhood.
    #[default]
    Chebyshev,
    /// 4-neighbourhood.
    Manhattan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "cell")]
pub enum Observation {
    NoDetect,
    Detect(Cell),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CellOfInterest {
    pub cell: Cell,
    pub weight: f64,
}

fn default_p_detect() -> f64 {
    DEFAULT_P_DETECT
}

fn default_discount() -> f64 {
    DEFAULT_DISCOUNT
}

/// Full problem definition. See [`crate::scenario`] for the file format and
/// validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Scenario {
    pub grid_size: u32,
    pub start: Cell,
    #[serde(default)]
    pub cells_of_interest: Vec<CellOfInterest>,
    pub target_weight: f64,
    pub battery: u32,
    #[serde(default = "default_p_detect")]
    pub p_detect: f64,
    #[serde(default)]
    pub detection_metric: DetectionMetric,
    #[serde(default = "default_discount")]
    pub discount: f64,
    /// Weight of the battery-terminal feature.
    #[serde(default)]
    pub battery_weight: f64,
}

impl Scenario {
    /// A scenario with the default noise model, discount and no cells of
    /// interest.
    pub fn new(grid_size: u32, start: Cell, target_weight: f64, battery: u32) -> Self {
        Self {
            grid_size,
            start,
            cells_of_interest: Vec::new(),
            target_weight,
            battery,
            p_detect: DEFAULT_P_DETECT,
            detection_metric: DetectionMetric::Chebyshev,
            discount: DEFAULT_DISCOUNT,
            battery_weight: 0.0,
        }
    }

    pub fn with_interest(mut self, cell: Cell, weight: f64) -> Self {
        self.cells_of_interest.push(CellOfInterest { cell, weight });
        self
    }

    pub fn cell_count(&self) -> usize {
        (self.grid_size * self.grid_size) as usize
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        let n = self.grid_size as i32;
        (1..=n).contains(&c.x) && (1..=n).contains(&c.y)
    }

    pub fn cell_index(&self, c: Cell) -> usize {
        debug_assert!(self.in_bounds(c));
        ((c.y - 1) as usize) * self.grid_size as usize + (c.x - 1) as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        let n = self.grid_size as usize;
        Cell::new((index % n) as i32 + 1, (index / n) as i32 + 1)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count()).map(|i| self.cell_at(i))
    }

    /// Number of features: one per cell of interest, then target, then battery.
    pub fn feature_len(&self) -> usize {
        self.cells_of_interest.len() + 2
    }

    pub fn target_feature(&self) -> usize {
        self.cells_of_interest.len()
    }

    pub fn battery_feature(&self) -> usize {
        self.cells_of_interest.len() + 1
    }

    /// `[r_1, …, r_N, r_target, battery_weight]`.
    pub fn weights(&self) -> FeatureWeights {
        let mut alpha: Vec<f64> = self.cells_of_interest.iter().map(|c| c.weight).collect();
        alpha.push(self.target_weight);
        alpha.push(self.battery_weight);
        FeatureWeights(alpha)
    }

    /// Short feature names: `l_1 … l_N`, `target`, `battery`.
    pub fn feature_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = (1..=self.cells_of_interest.len()).map(|i| format!("l_{i}")).collect();
        labels.push("target".into());
        labels.push("battery".into());
        labels
    }

    pub fn move_robot(&self, robot: Cell, action: Action) -> Cell {
        let next = robot.offset(action);
        if self.in_bounds(next) {
            next
        } else {
            robot
        }
    }

    pub fn within_detection(&self, robot: Cell, target: Cell) -> bool {
        match self.detection_metric {
            DetectionMetric::Chebyshev => robot.chebyshev(target) <= 1,
            DetectionMetric::Manhattan => robot.manhattan(target) <= 1,
        }
    }

    /// Battery margin `battery − batt_to_go`; the episode stops below one.
    pub fn margin(&self, robot: Cell, battery: u32) -> i64 {
        i64::from(battery) - i64::from(batt_to_go(robot, self.start))
    }

    pub fn battery_terminal(&self, robot: Cell, battery: u32) -> bool {
        self.margin(robot, battery) < 1
    }

    /// Adds `weight · φ(robot, target, battery)` into `out`.
    pub fn add_features(&self, robot: Cell, target: Cell, battery: u32, weight: f64, out: &mut [f64]) {
        for (i, coi) in self.cells_of_interest.iter().enumerate() {
            if coi.cell == robot {
                out[i] += weight;
            }
        }
        if robot == target {
            out[self.target_feature()] += weight;
        }
        if self.battery_terminal(robot, battery) {
            out[self.battery_feature()] += weight;
        }
    }

    fn state_reward(&self, robot: Cell, target: Cell, battery: u32) -> f64 {
        let mut r = 0.0;
        for coi in &self.cells_of_interest {
            if coi.cell == robot {
                r += coi.weight;
            }
        }
        if robot == target {
            r += self.target_weight;
        }
        if self.battery_terminal(robot, battery) {
            r += self.battery_weight;
        }
        r
    }
}

/// The history-deterministic part of the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SarKnown {
    pub robot: Cell,
    pub battery: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SarState {
    pub robot: Cell,
    pub target: Cell,
    pub battery: u32,
    pub terminal_cause: TerminalCause,
}

impl SarState {
    /// Builds a state with its terminal cause filled in.
    pub fn new(robot: Cell, target: Cell, battery: u32, scenario: &Scenario) -> Self {
        let mut s = Self {
            robot,
            target,
            battery,
            terminal_cause: TerminalCause::None,
        };
        s.terminal_cause = is_terminal(&s, scenario);
        s
    }

    pub fn known(&self) -> SarKnown {
        SarKnown {
            robot: self.robot,
            battery: self.battery,
        }
    }
}

/// Known robot cell and battery with a distribution over target cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SarBelief {
    pub robot: Cell,
    pub battery: u32,
    pub target: DiscreteDistribution,
}

impl SarBelief {
    pub fn known(&self) -> SarKnown {
        SarKnown {
            robot: self.robot,
            battery: self.battery,
        }
    }

    pub fn point(scenario: &Scenario, robot: Cell, battery: u32, target: Cell) -> Self {
        Self {
            robot,
            battery,
            target: DiscreteDistribution::point(scenario.cell_count(), scenario.cell_index(target)),
        }
    }
}

/// Feature occupancies ordered `[x_1 … x_N, x_t, x_b]`, or their expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Per-feature reward coefficients `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureWeights(pub Vec<f64>);

impl FeatureWeights {
    pub fn dot(&self, phi: &FeatureVector) -> f64 {
        self.0.iter().zip(&phi.0).map(|(a, x)| a * x).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|a| a * c).collect())
    }
}

/// Battery needed to return from `robot` to `start`.
pub fn batt_to_go(robot: Cell, start: Cell) -> u32 {
    robot.manhattan(start)
}

/// Target-found takes precedence over battery exhaustion.
pub fn is_terminal(s: &SarState, scenario: &Scenario) -> TerminalCause {
    if s.robot == s.target {
        TerminalCause::TargetFound
    } else if scenario.battery_terminal(s.robot, s.battery) {
        TerminalCause::Battery
    } else {
        TerminalCause::None
    }
}

pub fn transition(s: &SarState, action: Action, scenario: &Scenario) -> Result<SarState, SarError> {
    if s.terminal_cause.is_terminal() {
        return Err(SarError::TerminalStateStep(s.terminal_cause));
    }
    let robot = scenario.move_robot(s.robot, action);
    Ok(SarState::new(robot, s.target, s.battery.saturating_sub(1), scenario))
}

/// Probability of observing `obs` on entering `s_next`.
pub fn observation_prob(s_next: &SarState, obs: Observation, scenario: &Scenario) -> f64 {
    if s_next.robot == s_next.target {
        return match obs {
            Observation::Detect(c) if c == s_next.target => 1.0,
            _ => 0.0,
        };
    }
    if scenario.within_detection(s_next.robot, s_next.target) {
        match obs {
            Observation::Detect(c) if c == s_next.target => scenario.p_detect,
            Observation::Detect(_) => 0.0,
            Observation::NoDetect => 1.0 - scenario.p_detect,
        }
    } else {
        match obs {
            Observation::NoDetect => 1.0,
            Observation::Detect(_) => 0.0,
        }
    }
}

/// `φ(s, a)`; the action does not influence the features.
pub fn phi_state(s: &SarState, _action: Option<Action>, scenario: &Scenario) -> FeatureVector {
    let mut out = vec![0.0; scenario.feature_len()];
    scenario.add_features(s.robot, s.target, s.battery, 1.0, &mut out);
    FeatureVector(out)
}

/// `φ(b, a) = Σ_s b(s) φ(s, a)`.
pub fn phi_belief(b: &SarBelief, _action: Option<Action>, scenario: &Scenario) -> FeatureVector {
    let mut out = vec![0.0; scenario.feature_len()];
    for (h, p) in b.target.support() {
        scenario.add_features(b.robot, scenario.cell_at(h), b.battery, p, &mut out);
    }
    FeatureVector(out)
}

/// `R(s, a) = α · φ(s, a)`.
pub fn reward(s: &SarState, action: Option<Action>, scenario: &Scenario) -> f64 {
    scenario.weights().dot(&phi_state(s, action, scenario))
}

/// Robot at the start with a full battery and a uniform target prior over
/// every cell, the start included.
pub fn initial_belief(scenario: &Scenario) -> SarBelief {
    SarBelief {
        robot: scenario.start,
        battery: scenario.battery,
        target: DiscreteDistribution::uniform(scenario.cell_count()),
    }
}

impl FactoredPomdp for Scenario {
    type Known = SarKnown;
    type Action = Action;
    type Obs = Observation;

    fn hidden_count(&self) -> usize {
        self.cell_count()
    }

    fn actions(&self) -> &[Action] {
        &Action::ALL
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn step(&self, known: &SarKnown, action: Action) -> SarKnown {
        SarKnown {
            robot: self.move_robot(known.robot, action),
            battery: known.battery.saturating_sub(1),
        }
    }

    fn termination(&self, known: &SarKnown, hidden: usize) -> TerminalCause {
        if self.cell_at(hidden) == known.robot {
            TerminalCause::TargetFound
        } else if self.battery_terminal(known.robot, known.battery) {
            TerminalCause::Battery
        } else {
            TerminalCause::None
        }
    }

    fn is_known_terminal(&self, known: &SarKnown) -> bool {
        self.battery_terminal(known.robot, known.battery)
    }

    fn observations(&self, known: &SarKnown, hidden: usize, out: &mut Vec<(Observation, f64)>) {
        let target = self.cell_at(hidden);
        if target == known.robot {
            out.push((Observation::Detect(target), 1.0));
        } else if self.within_detection(known.robot, target) {
            out.push((Observation::NoDetect, 1.0 - self.p_detect));
            out.push((Observation::Detect(target), self.p_detect));
        } else {
            out.push((Observation::NoDetect, 1.0));
        }
    }

    fn reward(&self, known: &SarKnown, hidden: usize) -> f64 {
        self.state_reward(known.robot, self.cell_at(hidden), known.battery)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::{belief_update, enumerate_successors};

    fn case1() -> Scenario {
        Scenario::new(5, Cell::new(1, 1), 500.0, 25).with_interest(Cell::new(1, 5), 3.0)
    }

    fn st(s: &Scenario, robot: [i32; 2], target: [i32; 2], battery: u32) -> SarState {
        SarState::new(robot.into(), target.into(), battery, s)
    }

    #[test]
    fn transition_moves_and_drains() {
        let s = case1();
        let a = transition(&st(&s, [1, 1], [5, 5], 25), Action::Up, &s).unwrap();
        assert_eq!((a.robot, a.battery), (Cell::new(1, 2), 24));
        let b = transition(&st(&s, [1, 1], [5, 5], 25), Action::Left, &s).unwrap();
        assert_eq!((b.robot, b.battery), (Cell::new(1, 1), 24));
        let c = transition(&st(&s, [4, 5], [5, 5], 25), Action::Right, &s).unwrap();
        assert_eq!(c.terminal_cause, TerminalCause::TargetFound);
        let err = transition(&c, Action::Up, &s).unwrap_err();
        assert_eq!(err, SarError::TerminalStateStep(TerminalCause::TargetFound));
    }

    #[test]
    fn walls_hold_position_on_every_edge() {
        let s = case1();
        for cell in s.cells() {
            for a in Action::ALL {
                let next = s.move_robot(cell, a);
                assert!(s.in_bounds(next));
                if !s.in_bounds(cell.offset(a)) {
                    assert_eq!(next, cell);
                } else {
                    assert_eq!(next.manhattan(cell), 1);
                }
            }
        }
    }

    #[test]
    fn observation_model() {
        let s = case1();
        let found = st(&s, [5, 5], [5, 5], 10);
        assert_eq!(observation_prob(&found, Observation::Detect(Cell::new(5, 5)), &s), 1.0);
        let near = st(&s, [4, 4], [5, 5], 20);
        assert_eq!(observation_prob(&near, Observation::Detect(Cell::new(5, 5)), &s), 0.8);
        assert!((observation_prob(&near, Observation::NoDetect, &s) - 0.2).abs() < 1e-15);
        let far = st(&s, [2, 5], [5, 5], 20);
        assert_eq!(observation_prob(&far, Observation::NoDetect, &s), 1.0);

        let mut manhattan = case1();
        manhattan.detection_metric = DetectionMetric::Manhattan;
        assert_eq!(observation_prob(&near, Observation::NoDetect, &manhattan), 1.0);
    }

    #[test]
    fn features_and_reward() {
        let s = case1();
        assert_eq!(phi_state(&st(&s, [1, 5], [3, 3], 20), None, &s).0, vec![1.0, 0.0, 0.0]);
        assert_eq!(phi_state(&st(&s, [5, 5], [5, 5], 20), None, &s).0, vec![0.0, 1.0, 0.0]);
        assert_eq!(phi_state(&st(&s, [4, 4], [1, 3], 6), None, &s).0, vec![0.0, 0.0, 1.0]);
        assert_eq!(reward(&st(&s, [5, 5], [5, 5], 20), None, &s), 500.0);
        assert_eq!(reward(&st(&s, [2, 2], [5, 5], 20), None, &s), 0.0);
        assert_eq!(reward(&st(&s, [1, 5], [1, 5], 20), None, &s), 503.0);
    }

    #[test]
    fn phi_belief_expectation() {
        let s = case1();
        let b = initial_belief(&s);
        let phi = phi_belief(&b, None, &s);
        assert!((phi[1] - 0.04).abs() < 1e-15);

        let s2 = Scenario::new(5, Cell::new(1, 1), 500.0, 25).with_interest(Cell::new(3, 3), 1.0);
        let target = DiscreteDistribution::from_support(
            25,
            &[
                (s2.cell_index(Cell::new(2, 2)), 0.3),
                (s2.cell_index(Cell::new(3, 3)), 0.7),
            ],
        )
        .unwrap();
        let b = SarBelief {
            robot: Cell::new(3, 3),
            battery: 20,
            target,
        };
        assert_eq!(phi_belief(&b, None, &s2).0, vec![1.0, 0.7, 0.0]);

        let point = SarBelief::point(&s, Cell::new(2, 2), 9, Cell::new(4, 4));
        let state = st(&s, [2, 2], [4, 4], 9);
        assert_eq!(phi_belief(&point, None, &s), phi_state(&state, None, &s));
    }

    #[test]
    fn battery_rule_boundaries() {
        let s = case1();
        assert_eq!(batt_to_go(Cell::new(4, 4), Cell::new(1, 1)), 6);
        assert_eq!(batt_to_go(Cell::new(1, 1), Cell::new(1, 1)), 0);
        assert_eq!(batt_to_go(Cell::new(5, 5), Cell::new(1, 1)), 8);
        assert_eq!(is_terminal(&st(&s, [4, 4], [1, 5], 7), &s), TerminalCause::None);
        assert_eq!(is_terminal(&st(&s, [4, 4], [1, 5], 6), &s), TerminalCause::Battery);
        assert_eq!(is_terminal(&st(&s, [4, 4], [4, 4], 6), &s), TerminalCause::TargetFound);
    }

    #[test]
    fn initial_beliefs() {
        let b = initial_belief(&case1());
        assert_eq!(b.target.len(), 25);
        assert!(b.target.probs().iter().all(|p| *p == 0.04));
        let two = initial_belief(&Scenario::new(2, Cell::new(1, 1), 1.0, 3));
        assert!(two.target.probs().iter().all(|p| *p == 0.25));
        let three = initial_belief(&Scenario::new(3, Cell::new(1, 1), 1.0, 10));
        assert_eq!((three.robot, three.battery), (Cell::new(1, 1), 10));
    }

    #[test]
    fn bayes_update_two_hypotheses() {
        // adjacent hypothesis [3,2] and far hypothesis [5,5], robot walks [1,2] -> [2,2]
        let s = case1();
        let target = DiscreteDistribution::from_support(
            25,
            &[
                (s.cell_index(Cell::new(3, 2)), 0.5),
                (s.cell_index(Cell::new(5, 5)), 0.5),
            ],
        )
        .unwrap();
        let known = SarKnown {
            robot: Cell::new(1, 2),
            battery: 20,
        };
        let post = belief_update(&s, &known, &target, Action::Right, &Observation::NoDetect).unwrap();
        assert!((post.prob(s.cell_index(Cell::new(3, 2))) - 1.0 / 6.0).abs() < 1e-12);
        assert!((post.prob(s.cell_index(Cell::new(5, 5))) - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn survival_conditioning_zeroes_entered_cell() {
        let mut s = case1();
        s.p_detect = 0.0;
        let b = initial_belief(&s);
        // bumping the wall re-enters [1,1]: its mass is gone, the rest is uniform
        let post = belief_update(&s, &b.known(), &b.target, Action::Left, &Observation::NoDetect).unwrap();
        assert_eq!(post.prob(s.cell_index(Cell::new(1, 1))), 0.0);
        for c in s.cells().filter(|c| *c != Cell::new(1, 1)) {
            assert!((post.prob(s.cell_index(c)) - 1.0 / 24.0).abs() < 1e-12);
        }
        // moving up also rules out [1,2]
        let post = belief_update(&s, &b.known(), &b.target, Action::Up, &Observation::NoDetect).unwrap();
        assert_eq!(post.prob(s.cell_index(Cell::new(1, 2))), 0.0);
        assert!((post.prob(s.cell_index(Cell::new(4, 4))) - 1.0 / 23.0).abs() < 1e-12);
    }

    #[test]
    fn successor_examples() {
        let s = case1();
        // point mass adjacent; moving into the wall keeps it adjacent
        let target = SarBelief::point(&s, Cell::new(1, 1), 20, Cell::new(2, 2));
        let succ = enumerate_successors(&s, &target.known(), &target.target, Action::Left);
        let probs: Vec<_> = succ.branches.iter().map(|b| (b.observation, b.probability)).collect();
        assert_eq!(probs.len(), 2);
        assert_eq!(probs[0].0, Observation::NoDetect);
        assert!((probs[0].1 - 0.2).abs() < 1e-12);
        assert_eq!(probs[1], (Observation::Detect(Cell::new(2, 2)), 0.8));

        // absorbed: point mass one step away, step onto it
        let b = SarBelief::point(&s, Cell::new(1, 1), 20, Cell::new(1, 2));
        let succ = enumerate_successors(&s, &b.known(), &b.target, Action::Up);
        assert!(succ.branches.is_empty());
        assert_eq!(succ.terminated_mass(), 1.0);
        assert_eq!(succ.terminated_by(TerminalCause::TargetFound), 1.0);
    }
}
