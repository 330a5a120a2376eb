//! Discounted feature expectations `μ^π(b₀) = E[Σ_t γ^t φ(s_t) | π, b₀]`.
//!
//! Three evaluators:
//! * closed-loop policies, exactly, by conditioning on each target
//!   hypothesis and enumerating only the detection-noise branches;
//! * open-loop action sequences, exactly, in closed form (the trajectory is
//!   deterministic, so each hypothesis either absorbs the robot at the first
//!   visit or survives to the end);
//! * Monte Carlo for either, as a statistical cross-check.
//!
//! Because the battery strictly decreases, every episode is finite and the
//! exact evaluators need no truncation. Occupancies below one therefore come
//! from two sources only: probability mass that terminates before the feature
//! fires, and discounting.
//!
//! Direct belief-space recursions for both policy kinds are kept alongside as
//! independent routes for testing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pomdp::{belief_update, enumerate_successors, DiscreteDistribution, FactoredPomdp};
use crate::sar::{Action, Cell, FeatureVector, FeatureWeights, SarBelief, SarKnown, Scenario};
use crate::simulate::{rollout, RolloutRecorder, StepView};
use crate::solver::{SarPolicy, SolverError};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("open-loop action sequence is empty")]
    EmptyActions,
    #[error("action {step} continues past a battery-terminal state; truncate the path first")]
    InfeasiblePath { step: usize },
    #[error(transparent)]
    Policy(#[from] SolverError),
    #[error("belief has {got} hypotheses, scenario has {expected} cells")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FeatureExpectation {
    pub mu: FeatureVector,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standard_errors: Option<Vec<f64>>,
    pub truncation_residual_bound: f64,
}

impl FeatureExpectation {
    fn exact(mu: Vec<f64>) -> Self {
        Self {
            mu: FeatureVector(mu),
            method: Method::Exact,
            standard_errors: None,
            truncation_residual_bound: 0.0,
        }
    }
}

/// Which policy a Monte-Carlo estimate rolls out.
#[derive(Debug, Clone, Copy)]
pub enum PolicyRef<'a> {
    Closed(&'a SarPolicy),
    Open(&'a [Action]),
}

/// `V = α · μ`.
pub fn value_from_features(alpha: &FeatureWeights, mu: &FeatureExpectation) -> f64 {
    alpha.dot(&mu.mu)
}

fn check_dims(b0: &SarBelief, scenario: &Scenario) -> Result<(), FeatureError> {
    if b0.target.len() != scenario.cell_count() {
        return Err(FeatureError::DimensionMismatch {
            expected: scenario.cell_count(),
            got: b0.target.len(),
        });
    }
    Ok(())
}

/// Exact `μ` of a solved closed-loop policy.
///
/// For a fixed target cell the only randomness is whether each detection
/// attempt succeeds, so the per-hypothesis tree is small; the hypotheses are
/// then mixed by `b0`.
pub fn feature_expectation_closed(
    policy: &SarPolicy,
    b0: &SarBelief,
    scenario: &Scenario,
) -> Result<FeatureExpectation, FeatureError> {
    check_dims(b0, scenario)?;
    let mut mu = vec![0.0; scenario.feature_len()];
    for (h, p) in b0.target.support() {
        let target = scenario.cell_at(h);
        let mut cond = vec![0.0; scenario.feature_len()];
        walk_hypothesis(policy, scenario, target, b0.known(), &b0.target, 1.0, 1.0, &mut cond)?;
        for (m, c) in mu.iter_mut().zip(&cond) {
            *m += p * c;
        }
    }
    Ok(FeatureExpectation::exact(mu))
}

#[allow(clippy::too_many_arguments)]
fn walk_hypothesis(
    policy: &SarPolicy,
    scenario: &Scenario,
    target: Cell,
    known: SarKnown,
    belief: &DiscreteDistribution,
    weight: f64,
    discount: f64,
    out: &mut [f64],
) -> Result<(), FeatureError> {
    scenario.add_features(known.robot, target, known.battery, weight * discount, out);
    if known.robot == target || scenario.battery_terminal(known.robot, known.battery) {
        return Ok(());
    }
    let action = policy.action(&known, belief)?;
    let next = scenario.step(&known, action);
    let next_discount = discount * scenario.discount;
    if next.robot == target || scenario.battery_terminal(next.robot, next.battery) {
        scenario.add_features(next.robot, target, next.battery, weight * next_discount, out);
        return Ok(());
    }
    let mut obs = Vec::new();
    scenario.observations(&next, scenario.cell_index(target), &mut obs);
    for (o, l) in obs {
        if l <= 0.0 {
            continue;
        }
        let posterior = belief_update(scenario, &known, belief, action, &o)
            .expect("an observation the true target can emit has positive likelihood");
        walk_hypothesis(
            policy,
            scenario,
            target,
            next,
            &posterior,
            weight * l,
            next_discount,
            out,
        )?;
    }
    Ok(())
}

/// `μ` by the Bellman recursion over beliefs:
/// `μ(b) = φ(b) + γ Σ_o P(o | b, π(b)) μ(b_o)`, with mass that terminates
/// on arrival contributing its terminal features.
///
/// `next_action` receives the belief and step index; `None` ends the episode.
pub fn feature_expectation_belief_recursion<F>(
    b0: &SarBelief,
    scenario: &Scenario,
    mut next_action: F,
) -> Result<FeatureExpectation, FeatureError>
where
    F: FnMut(&SarBelief, usize) -> Result<Option<Action>, FeatureError>,
{
    check_dims(b0, scenario)?;
    let mut mu = vec![0.0; scenario.feature_len()];
    recurse_belief(scenario, b0, 0, 1.0, 1.0, &mut next_action, &mut mu)?;
    Ok(FeatureExpectation::exact(mu))
}

fn recurse_belief<F>(
    scenario: &Scenario,
    b: &SarBelief,
    depth: usize,
    weight: f64,
    discount: f64,
    next_action: &mut F,
    out: &mut [f64],
) -> Result<(), FeatureError>
where
    F: FnMut(&SarBelief, usize) -> Result<Option<Action>, FeatureError>,
{
    for (h, p) in b.target.support() {
        scenario.add_features(b.robot, scenario.cell_at(h), b.battery, weight * discount * p, out);
    }
    let known = b.known();
    let live = !scenario.is_known_terminal(&known) && b.target.support().any(|(h, _)| scenario.cell_at(h) != b.robot);
    if !live {
        return Ok(());
    }
    let Some(action) = next_action(b, depth)? else {
        return Ok(());
    };
    let succ = enumerate_successors(scenario, &known, &b.target, action);
    let next_discount = discount * scenario.discount;
    let next = succ.next_known;
    for arr in &succ.arrivals {
        scenario.add_features(
            next.robot,
            scenario.cell_at(arr.hidden),
            next.battery,
            weight * next_discount * arr.mass,
            out,
        );
    }
    for br in succ.branches {
        let nb = SarBelief {
            robot: next.robot,
            battery: next.battery,
            target: br.next_belief,
        };
        recurse_belief(
            scenario,
            &nb,
            depth + 1,
            weight * br.probability,
            next_discount,
            next_action,
            out,
        )?;
    }
    Ok(())
}

/// Exact `μ` of an open-loop action sequence.
///
/// The sequence must not continue past a battery-terminal state (see
/// [`crate::counterfactual::feasibility_truncate`]). When it runs out before
/// termination the episode simply ends.
pub fn feature_expectation_open(
    actions: &[Action],
    b0: &SarBelief,
    scenario: &Scenario,
) -> Result<FeatureExpectation, FeatureError> {
    check_dims(b0, scenario)?;
    if actions.is_empty() {
        return Err(FeatureError::EmptyActions);
    }
    // deterministic trajectory, cut at battery termination
    let mut trajectory = vec![b0.known()];
    for (i, &a) in actions.iter().enumerate() {
        let here = trajectory[trajectory.len() - 1];
        if scenario.battery_terminal(here.robot, here.battery) {
            return Err(FeatureError::InfeasiblePath { step: i });
        }
        trajectory.push(scenario.step(&here, a));
    }

    let mut mu = vec![0.0; scenario.feature_len()];
    for (h, p) in b0.target.support() {
        let target = scenario.cell_at(h);
        let mut discount = 1.0;
        for k in &trajectory {
            scenario.add_features(k.robot, target, k.battery, p * discount, &mut mu);
            if k.robot == target {
                break;
            }
            discount *= scenario.discount;
        }
    }
    Ok(FeatureExpectation::exact(mu))
}

/// Open-loop `μ` via the belief recursion, for cross-checking.
pub fn feature_expectation_open_recursive(
    actions: &[Action],
    b0: &SarBelief,
    scenario: &Scenario,
) -> Result<FeatureExpectation, FeatureError> {
    if actions.is_empty() {
        return Err(FeatureError::EmptyActions);
    }
    feature_expectation_belief_recursion(b0, scenario, |_, depth| Ok(actions.get(depth).copied()))
}

/// Closed-loop `μ` via the belief recursion, for cross-checking.
pub fn feature_expectation_closed_recursive(
    policy: &SarPolicy,
    b0: &SarBelief,
    scenario: &Scenario,
) -> Result<FeatureExpectation, FeatureError> {
    feature_expectation_belief_recursion(b0, scenario, |b, _| Ok(Some(policy.action(&b.known(), &b.target)?)))
}

struct FeatureSum<'s> {
    scenario: &'s Scenario,
    sum: Vec<f64>,
}

impl RolloutRecorder for FeatureSum<'_> {
    fn record(&mut self, step: StepView<'_>) {
        let discount = self.scenario.discount.powi(step.t as i32);
        self.scenario.add_features(
            step.known.robot,
            step.target,
            step.known.battery,
            discount,
            &mut self.sum,
        );
    }
}

/// Monte-Carlo estimate of `μ` from `n_rollouts` seeded episodes.
///
/// Rollouts draw from one ChaCha8 stream seeded with `seed`, in the same
/// order [`crate::simulate::simulate`] does, so a single rollout reproduces
/// the trace simulated with the same seed.
pub fn feature_expectation_mc(
    policy: PolicyRef<'_>,
    b0: &SarBelief,
    scenario: &Scenario,
    n_rollouts: usize,
    seed: u64,
) -> Result<FeatureExpectation, FeatureError> {
    check_dims(b0, scenario)?;
    let k = scenario.feature_len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = vec![0.0; k];
    let mut m2 = vec![0.0; k];
    for i in 0..n_rollouts.max(1) {
        let mut rec = FeatureSum {
            scenario,
            sum: vec![0.0; k],
        };
        match policy {
            PolicyRef::Closed(p) => {
                rollout(p, scenario, b0, None, &mut rng, &mut rec)?;
            }
            PolicyRef::Open(actions) => open_rollout(actions, b0, scenario, &mut rng, &mut rec)?,
        }
        // Welford
        let count = (i + 1) as f64;
        for j in 0..k {
            let delta = rec.sum[j] - mean[j];
            mean[j] += delta / count;
            m2[j] += delta * (rec.sum[j] - mean[j]);
        }
    }
    let n = n_rollouts.max(1) as f64;
    let se = m2
        .iter()
        .map(|s| if n > 1.0 { (s / (n - 1.0) / n).sqrt() } else { 0.0 })
        .collect();
    Ok(FeatureExpectation {
        mu: FeatureVector(mean),
        method: Method::MonteCarlo,
        standard_errors: Some(se),
        truncation_residual_bound: 0.0,
    })
}

fn open_rollout(
    actions: &[Action],
    b0: &SarBelief,
    scenario: &Scenario,
    rng: &mut ChaCha8Rng,
    rec: &mut impl RolloutRecorder,
) -> Result<(), FeatureError> {
    let target = crate::simulate::sample_target(&b0.target, scenario, rng);
    let mut known = b0.known();
    for t in 0..=actions.len() {
        let action = actions.get(t).copied();
        let stop = known.robot == target || scenario.battery_terminal(known.robot, known.battery);
        rec.record(StepView {
            t,
            known,
            target,
            observation: None,
            belief: None,
            action: if stop { None } else { action },
        });
        if known.robot == target {
            return Ok(());
        }
        let Some(a) = action else {
            return Ok(());
        };
        if stop {
            return Err(FeatureError::InfeasiblePath { step: t });
        }
        known = scenario.step(&known, a);
        // detection noise does not influence an open-loop policy, but is
        // drawn so the stream advances like a closed-loop rollout
        let _: f64 = rng.random();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sar::initial_belief;

    fn case1() -> Scenario {
        Scenario::new(5, Cell::new(1, 1), 500.0, 25).with_interest(Cell::new(1, 5), 3.0)
    }

    fn user_path() -> Vec<Action> {
        let mut a = vec![Action::Up; 4];
        a.extend([Action::Right; 4]);
        a
    }

    #[test]
    fn case_one_user_row() {
        let s = case1();
        let mu = feature_expectation_open(&user_path(), &initial_belief(&s), &s).unwrap();
        let g: f64 = 0.95;
        // hand derivation: l_1 reached at t=4 unless absorbed in the 4 cells before it
        assert!((mu.mu[0] - g.powi(4) * 21.0 / 25.0).abs() < 1e-12);
        let target: f64 = (0..=8).map(|t| g.powi(t)).sum::<f64>() / 25.0;
        assert!((mu.mu[1] - target).abs() < 1e-12);
        assert_eq!(mu.mu[2], 0.0);
        assert!((mu.mu[0] - 0.684).abs() < 1e-3);
        assert_eq!(mu.method, Method::Exact);
        assert_eq!(mu.truncation_residual_bound, 0.0);
    }

    #[test]
    fn single_action_on_two_by_two() {
        let s = Scenario::new(2, Cell::new(1, 1), 10.0, 3);
        let mu = feature_expectation_open(&[Action::Up], &initial_belief(&s), &s).unwrap();
        assert!((mu.mu[0] - (0.25 + 0.95 * 0.25)).abs() < 1e-12);
    }

    #[test]
    fn open_rejects_empty_and_infeasible() {
        let s = Scenario::new(5, Cell::new(1, 1), 10.0, 2);
        let b0 = initial_belief(&s);
        assert!(matches!(
            feature_expectation_open(&[], &b0, &s),
            Err(FeatureError::EmptyActions)
        ));
        // first step lands on margin 0; the second continues past it
        let err = feature_expectation_open(&[Action::Up, Action::Up], &b0, &s).unwrap_err();
        assert!(matches!(err, FeatureError::InfeasiblePath { step: 1 }));
        assert!(feature_expectation_open(&[Action::Up], &b0, &s).is_ok());
    }

    #[test]
    fn value_identity_dot_product() {
        let alpha = FeatureWeights(vec![3.0, 500.0, 0.0]);
        let mu = FeatureExpectation::exact(vec![0.684, 0.296, 0.0]);
        assert!((value_from_features(&alpha, &mu) - 150.052).abs() < 1e-9);
        assert_eq!(
            value_from_features(&alpha, &FeatureExpectation::exact(vec![0.0; 3])),
            0.0
        );
        let only_target = FeatureWeights(vec![0.0, 500.0, 0.0]);
        assert_eq!(value_from_features(&only_target, &mu), 500.0 * 0.296);
    }

    #[test]
    fn open_closed_form_matches_recursion() {
        let s = case1();
        let b0 = initial_belief(&s);
        let a = feature_expectation_open(&user_path(), &b0, &s).unwrap();
        let b = feature_expectation_open_recursive(&user_path(), &b0, &s).unwrap();
        for (x, y) in a.mu.0.iter().zip(&b.mu.0) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn mc_is_deterministic_per_seed() {
        let s = case1();
        let b0 = initial_belief(&s);
        let path = user_path();
        let a = feature_expectation_mc(PolicyRef::Open(&path), &b0, &s, 500, 9).unwrap();
        let b = feature_expectation_mc(PolicyRef::Open(&path), &b0, &s, 500, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.method, Method::MonteCarlo);
    }
}
