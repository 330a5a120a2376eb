//! Finite POMDP machinery for models whose state factors into a component
//! that is a deterministic function of the action history (the "known"
//! part) and a stationary hidden component indexed `0..hidden_count()`.
//!
//! A belief is therefore a known value paired with a [`DiscreteDistribution`]
//! over hidden indices. Rewards follow the convention used throughout the
//! crate: the reward of the state reached after `t` actions is discounted by
//! `γ^t`, and the reward of a terminal state is collected before the episode
//! stops.

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for probability normalization checks.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Normalizers below this are treated as impossible observations.
pub const ZERO_PROB: f64 = 1e-12;
/// Default node guard for [`expectimax_value`].
pub const DEFAULT_EXPECTIMAX_GUARD: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PomdpError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("observation has zero probability under the belief (normalizer {normalizer:e})")]
    ZeroProbabilityObservation { normalizer: f64 },
    #[error("enumeration exceeded {limit} nodes")]
    BudgetExceeded { limit: u64 },
}

/// Why an episode stopped, if it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalCause {
    #[default]
    None,
    TargetFound,
    Battery,
}

impl TerminalCause {
    pub fn is_terminal(self) -> bool {
        self != TerminalCause::None
    }
}

/// Probability vector over hidden indices `0..len`.
///
/// Stored densely; the serialized form lists only the nonzero support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, PomdpError> {
        if probs.is_empty() {
            return Err(PomdpError::InvalidDistribution("empty support".into()));
        }
        let mut total = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0 + NORMALIZATION_TOL).contains(&p) {
                return Err(PomdpError::InvalidDistribution(format!("probability {p} at index {i}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(PomdpError::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights. Fails when the total is below [`ZERO_PROB`].
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, PomdpError> {
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total < ZERO_PROB {
            return Err(PomdpError::ZeroProbabilityObservation { normalizer: total });
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Self::new(probs)
    }

    pub fn uniform(len: usize) -> Self {
        Self {
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn point(len: usize, index: usize) -> Self {
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        Self { probs }
    }

    /// Builds a distribution from sparse `(index, probability)` pairs.
    pub fn from_support(len: usize, support: &[(usize, f64)]) -> Result<Self, PomdpError> {
        let mut probs = vec![0.0; len];
        for &(i, p) in support {
            if i >= len {
                return Err(PomdpError::InvalidDistribution(format!("index {i} outside 0..{len}")));
            }
            if probs[i] != 0.0 {
                return Err(PomdpError::InvalidDistribution(format!("duplicate support index {i}")));
            }
            probs[i] = p;
        }
        Self::new(probs)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Nonzero entries in index order.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, p)| (i, *p))
    }

    pub fn dot(&self, values: &[f64]) -> f64 {
        self.probs.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    pub fn is_point_mass(&self) -> bool {
        self.support().count() == 1
    }
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    size: usize,
    support: Vec<(usize, f64)>,
}

impl Serialize for DiscreteDistribution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        DistributionRepr {
            size: self.probs.len(),
            support: self.support().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DiscreteDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = DistributionRepr::deserialize(deserializer)?;
        if repr.size == 0 || repr.size > 1 << 20 {
            return Err(serde::de::Error::custom("distribution size out of range"));
        }
        DiscreteDistribution::from_support(repr.size, &repr.support).map_err(serde::de::Error::custom)
    }
}

/// A POMDP whose state is `(known, hidden)` with a deterministic known
/// component and a stationary hidden index.
///
/// The known component must evolve acyclically so every episode is finite.
pub trait FactoredPomdp {
    type Known: Clone + Eq + Hash + Debug;
    type Action: Copy + Eq + Ord + Debug;
    type Obs: Clone + Eq + Ord + Debug;

    fn hidden_count(&self) -> usize;
    /// Actions in the fixed tie-breaking order.
    fn actions(&self) -> &[Self::Action];
    fn discount(&self) -> f64;
    fn step(&self, known: &Self::Known, action: Self::Action) -> Self::Known;
    fn termination(&self, known: &Self::Known, hidden: usize) -> TerminalCause;
    /// True when every hidden value terminates at `known`.
    fn is_known_terminal(&self, known: &Self::Known) -> bool;
    /// Observation likelihoods on entering a non-terminal `(known, hidden)`.
    /// Appends to `out`, which the caller clears.
    fn observations(&self, known: &Self::Known, hidden: usize, out: &mut Vec<(Self::Obs, f64)>);
    fn reward(&self, known: &Self::Known, hidden: usize) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessorBranch<O> {
    pub observation: O,
    /// Joint probability of surviving the step and receiving this observation.
    pub probability: f64,
    pub next_belief: DiscreteDistribution,
}

/// Mass that terminated on arrival at the successor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalArrival {
    pub hidden: usize,
    pub mass: f64,
    pub cause: TerminalCause,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Successors<K, O> {
    pub next_known: K,
    /// Continuing branches, ordered by observation.
    pub branches: Vec<SuccessorBranch<O>>,
    pub arrivals: Vec<TerminalArrival>,
    /// Mass that was already terminal before the action was taken.
    pub already_terminated: f64,
}

impl<K, O> Successors<K, O> {
    pub fn terminated_mass(&self) -> f64 {
        self.already_terminated + self.arrivals.iter().map(|a| a.mass).sum::<f64>()
    }

    pub fn terminated_by(&self, cause: TerminalCause) -> f64 {
        self.arrivals.iter().filter(|a| a.cause == cause).map(|a| a.mass).sum()
    }

    pub fn branch_mass(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }
}

/// Expands `(known, belief)` under `action` into observation branches and
/// terminated mass. Branch probabilities and terminated mass partition 1.
pub fn enumerate_successors<M: FactoredPomdp>(
    model: &M,
    known: &M::Known,
    belief: &DiscreteDistribution,
    action: M::Action,
) -> Successors<M::Known, M::Obs> {
    let next_known = model.step(known, action);
    let n = model.hidden_count();
    let mut joint: Vec<(M::Obs, Vec<f64>)> = Vec::new();
    let mut arrivals = Vec::new();
    let mut already_terminated = 0.0;
    let mut obs_buf = Vec::new();

    for (h, p) in belief.support() {
        if model.termination(known, h).is_terminal() {
            already_terminated += p;
            continue;
        }
        let cause = model.termination(&next_known, h);
        if cause.is_terminal() {
            arrivals.push(TerminalArrival {
                hidden: h,
                mass: p,
                cause,
            });
            continue;
        }
        obs_buf.clear();
        model.observations(&next_known, h, &mut obs_buf);
        for (o, l) in obs_buf.drain(..) {
            if l <= 0.0 {
                continue;
            }
            let slot = match joint.iter().position(|(seen, _)| *seen == o) {
                Some(i) => i,
                None => {
                    joint.push((o, vec![0.0; n]));
                    joint.len() - 1
                }
            };
            joint[slot].1[h] += p * l;
        }
    }

    joint.sort_by(|a, b| a.0.cmp(&b.0));
    let branches = joint
        .into_iter()
        .filter_map(|(observation, weights)| {
            let probability: f64 = weights.iter().sum();
            if probability < ZERO_PROB {
                return None;
            }
            let probs = weights.into_iter().map(|w| w / probability).collect();
            Some(SuccessorBranch {
                observation,
                probability,
                next_belief: DiscreteDistribution { probs },
            })
        })
        .collect();

    Successors {
        next_known,
        branches,
        arrivals,
        already_terminated,
    }
}

/// Bayes posterior over hidden values that survive `action` and emit `obs`.
pub fn belief_update<M: FactoredPomdp>(
    model: &M,
    known: &M::Known,
    belief: &DiscreteDistribution,
    action: M::Action,
    obs: &M::Obs,
) -> Result<DiscreteDistribution, PomdpError> {
    let next_known = model.step(known, action);
    let mut weights = vec![0.0; model.hidden_count()];
    let mut obs_buf = Vec::new();
    for (h, p) in belief.support() {
        if model.termination(known, h).is_terminal() || model.termination(&next_known, h).is_terminal() {
            continue;
        }
        obs_buf.clear();
        model.observations(&next_known, h, &mut obs_buf);
        if let Some((_, l)) = obs_buf.iter().find(|(o, _)| o == obs) {
            if *l > 0.0 {
                weights[h] += p * l;
            }
        }
    }
    let normalizer: f64 = weights.iter().sum();
    if normalizer < ZERO_PROB {
        return Err(PomdpError::ZeroProbabilityObservation { normalizer });
    }
    let probs = weights.into_iter().map(|w| w / normalizer).collect();
    Ok(DiscreteDistribution { probs })
}

fn immediate_reward<M: FactoredPomdp>(model: &M, known: &M::Known, belief: &DiscreteDistribution) -> f64 {
    belief.support().map(|(h, p)| p * model.reward(known, h)).sum()
}

fn arrival_reward<M: FactoredPomdp>(model: &M, succ: &Successors<M::Known, M::Obs>) -> f64 {
    succ.arrivals
        .iter()
        .map(|a| a.mass * model.reward(&succ.next_known, a.hidden))
        .sum()
}

fn has_live_mass<M: FactoredPomdp>(model: &M, known: &M::Known, belief: &DiscreteDistribution) -> bool {
    !model.is_known_terminal(known)
        && belief
            .support()
            .any(|(h, _)| !model.termination(known, h).is_terminal())
}

/// Exact optimal expected discounted reward over at most `horizon` actions,
/// by enumerating every action and observation branch.
///
/// Identical subtrees (same known value, horizon and belief bits) are
/// evaluated once. `guard` caps the number of expanded nodes.
pub fn expectimax_value<M: FactoredPomdp>(
    model: &M,
    known: &M::Known,
    belief: &DiscreteDistribution,
    horizon: u32,
    guard: u64,
) -> Result<f64, PomdpError> {
    let mut search = Expectimax {
        model,
        memo: HashMap::new(),
        expanded: 0,
        guard,
    };
    search.value(known, belief, horizon)
}

type MemoKey<K> = (K, u32, Vec<u64>);

struct Expectimax<'m, M: FactoredPomdp> {
    model: &'m M,
    memo: HashMap<MemoKey<M::Known>, f64>,
    expanded: u64,
    guard: u64,
}

impl<M: FactoredPomdp> Expectimax<'_, M> {
    fn value(&mut self, known: &M::Known, belief: &DiscreteDistribution, horizon: u32) -> Result<f64, PomdpError> {
        let model = self.model;
        let immediate = immediate_reward(model, known, belief);
        if horizon == 0 || !has_live_mass(model, known, belief) {
            return Ok(immediate);
        }
        let key = (
            known.clone(),
            horizon,
            belief.probs.iter().map(|p| p.to_bits()).collect::<Vec<_>>(),
        );
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        self.expanded += 1;
        if self.expanded > self.guard {
            return Err(PomdpError::BudgetExceeded { limit: self.guard });
        }
        let mut best = f64::NEG_INFINITY;
        for &action in model.actions() {
            let succ = enumerate_successors(model, known, belief, action);
            let mut future = arrival_reward(model, &succ);
            for branch in &succ.branches {
                future += branch.probability * self.value(&succ.next_known, &branch.next_belief, horizon - 1)?;
            }
            if future > best {
                best = future;
            }
        }
        let v = immediate + model.discount() * best;
        self.memo.insert(key, v);
        Ok(v)
    }
}

/// Expected discounted reward when actions come from `policy`, evaluated by
/// recursion over the reachable belief tree. `policy` receives the known
/// value, the belief and the step index; returning `None` ends the episode.
pub fn policy_rollup<M, F>(model: &M, known: &M::Known, belief: &DiscreteDistribution, policy: &mut F) -> f64
where
    M: FactoredPomdp,
    F: FnMut(&M::Known, &DiscreteDistribution, usize) -> Option<M::Action>,
{
    fn go<M, F>(model: &M, known: &M::Known, belief: &DiscreteDistribution, depth: usize, policy: &mut F) -> f64
    where
        M: FactoredPomdp,
        F: FnMut(&M::Known, &DiscreteDistribution, usize) -> Option<M::Action>,
    {
        let immediate = immediate_reward(model, known, belief);
        if !has_live_mass(model, known, belief) {
            return immediate;
        }
        let Some(action) = policy(known, belief, depth) else {
            return immediate;
        };
        let succ = enumerate_successors(model, known, belief, action);
        let mut future = arrival_reward(model, &succ);
        for branch in &succ.branches {
            future += branch.probability * go(model, &succ.next_known, &branch.next_belief, depth + 1, policy);
        }
        immediate + model.discount() * future
    }
    go(model, known, belief, 0, policy)
}
