//! Seeded execution of a solved policy against a hidden target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pomdp::{belief_update, DiscreteDistribution, FactoredPomdp, TerminalCause};
use crate::sar::{Action, Cell, Observation, SarBelief, SarKnown, SarState, Scenario};
use crate::solver::{SarPolicy, SolverError};

pub const TRACE_FORMAT_VERSION: u32 = 1;

/// One visited state. `observation` is what arrived with the state (none at
/// `t = 0`); `action` is what was taken from it (none at the terminal step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TraceStep {
    pub t: usize,
    pub state: SarState,
    pub action: Option<Action>,
    pub observation: Option<Observation>,
    pub reward: f64,
    pub discounted_reward: f64,
    /// Belief the action was chosen from; absent once the episode has ended.
    pub belief: Option<DiscreteDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Trace {
    pub format_version: u32,
    pub seed: u64,
    pub true_target: Cell,
    pub steps: Vec<TraceStep>,
    pub terminal_cause: TerminalCause,
    pub discounted_return: f64,
}

impl Trace {
    pub fn path(&self) -> Vec<Cell> {
        self.steps.iter().map(|s| s.state.robot).collect()
    }

    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().filter_map(|s| s.action).collect()
    }
}

pub struct StepView<'a> {
    pub t: usize,
    pub known: SarKnown,
    pub target: Cell,
    pub observation: Option<Observation>,
    pub belief: Option<&'a DiscreteDistribution>,
    pub action: Option<Action>,
}

pub trait RolloutRecorder {
    fn record(&mut self, step: StepView<'_>);
}

/// Inverse-CDF draw of a target cell; consumes one uniform.
pub fn sample_target(dist: &DiscreteDistribution, scenario: &Scenario, rng: &mut ChaCha8Rng) -> Cell {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (h, p) in dist.support() {
        acc += p;
        last = h;
        if u < acc {
            return scenario.cell_at(h);
        }
    }
    scenario.cell_at(last)
}

/// Runs one episode. Draws, in order: the target (only when `true_target`
/// is `None`), then one uniform per action for detection noise.
pub fn rollout(
    policy: &SarPolicy,
    scenario: &Scenario,
    b0: &SarBelief,
    true_target: Option<Cell>,
    rng: &mut ChaCha8Rng,
    rec: &mut impl RolloutRecorder,
) -> Result<(Cell, TerminalCause), SolverError> {
    let target = match true_target {
        Some(c) => c,
        None => sample_target(&b0.target, scenario, rng),
    };
    let hidden = scenario.cell_index(target);
    let mut known = b0.known();
    let mut belief = b0.target.clone();
    let mut observation = None;
    let mut obs_buf = Vec::new();
    for t in 0.. {
        let cause = scenario.termination(&known, hidden);
        let action = if cause.is_terminal() {
            None
        } else {
            Some(policy.action(&known, &belief)?)
        };
        rec.record(StepView {
            t,
            known,
            target,
            observation,
            belief: (!cause.is_terminal() || t == 0).then_some(&belief),
            action,
        });
        let Some(a) = action else {
            return Ok((target, cause));
        };
        let next = scenario.step(&known, a);
        let u: f64 = rng.random();
        obs_buf.clear();
        scenario.observations(&next, hidden, &mut obs_buf);
        let mut acc = 0.0;
        let mut o = obs_buf[obs_buf.len() - 1].0;
        for (cand, l) in &obs_buf {
            acc += l;
            if u < acc {
                o = *cand;
                break;
            }
        }
        if !scenario.termination(&next, hidden).is_terminal() {
            belief = belief_update(scenario, &known, &belief, a, &o)
                .expect("sampled observation is consistent with the true target");
        }
        known = next;
        observation = Some(o);
    }
    unreachable!("episodes are bounded by the battery")
}

struct TraceBuilder<'s> {
    scenario: &'s Scenario,
    steps: Vec<TraceStep>,
}

impl RolloutRecorder for TraceBuilder<'_> {
    fn record(&mut self, step: StepView<'_>) {
        let state = SarState::new(step.known.robot, step.target, step.known.battery, self.scenario);
        let reward = self.scenario.reward(&step.known, self.scenario.cell_index(step.target));
        let discounted_reward = reward * self.scenario.discount.powi(step.t as i32);
        self.steps.push(TraceStep {
            t: step.t,
            state,
            action: step.action,
            observation: step.observation,
            reward,
            discounted_reward,
            belief: step.belief.cloned(),
        });
    }
}

/// Executes `policy` from the initial belief. Without `true_target`, the
/// target is drawn from the initial belief with the seeded generator.
pub fn simulate(
    policy: &SarPolicy,
    scenario: &Scenario,
    seed: u64,
    true_target: Option<Cell>,
) -> Result<Trace, SolverError> {
    let b0 = crate::sar::initial_belief(scenario);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut builder = TraceBuilder {
        scenario,
        steps: Vec::new(),
    };
    let (target, terminal_cause) = rollout(policy, scenario, &b0, true_target, &mut rng, &mut builder)?;
    let discounted_return = builder.steps.iter().map(|s| s.discounted_reward).sum();
    Ok(Trace {
        format_version: TRACE_FORMAT_VERSION,
        seed,
        true_target: target,
        steps: builder.steps,
        terminal_cause,
        discounted_return,
    })
}

/// Recomputes the belief snapshots of a trace from its actions and
/// observations alone.
pub fn replay_beliefs(trace: &Trace, scenario: &Scenario) -> Vec<Option<DiscreteDistribution>> {
    let b0 = crate::sar::initial_belief(scenario);
    let mut out = Vec::with_capacity(trace.steps.len());
    let mut belief = b0.target;
    out.push(Some(belief.clone()));
    for w in trace.steps.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        let (Some(a), Some(o)) = (prev.action, cur.observation) else {
            break;
        };
        if cur.state.terminal_cause.is_terminal() {
            out.push(None);
            continue;
        }
        belief = match belief_update(scenario, &prev.state.known(), &belief, a, &o) {
            Ok(b) => b,
            Err(_) => {
                out.push(None);
                continue;
            }
        };
        out.push(Some(belief.clone()));
    }
    out
}

/// Discounted return of an open-loop action sequence against a known target.
pub fn open_loop_return(actions: &[Action], scenario: &Scenario, target: Cell) -> f64 {
    let hidden = scenario.cell_index(target);
    let mut known = SarKnown {
        robot: scenario.start,
        battery: scenario.battery,
    };
    let mut total = scenario.reward(&known, hidden);
    let mut discount = 1.0;
    for &a in actions {
        if scenario.termination(&known, hidden).is_terminal() {
            break;
        }
        known = scenario.step(&known, a);
        discount *= scenario.discount;
        total += discount * scenario.reward(&known, hidden);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, SolverConfig};

    fn scenario() -> Scenario {
        Scenario::new(4, Cell::new(1, 1), 100.0, 9).with_interest(Cell::new(3, 2), 2.0)
    }

    #[test]
    fn target_at_start_ends_immediately() {
        let s = scenario();
        let p = solve(&s, &SolverConfig::for_scenario(&s)).unwrap();
        let trace = simulate(&p, &s, 3, Some(Cell::new(1, 1))).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.terminal_cause, TerminalCause::TargetFound);
        assert_eq!(trace.discounted_return, 100.0);
    }

    #[test]
    fn trace_invariants_and_determinism() {
        let s = scenario();
        let p = solve(&s, &SolverConfig::for_scenario(&s)).unwrap();
        for seed in 0..20 {
            let trace = simulate(&p, &s, seed, None).unwrap();
            assert_eq!(trace, simulate(&p, &s, seed, None).unwrap());
            for w in trace.steps.windows(2) {
                assert_eq!(w[1].state.battery + 1, w[0].state.battery);
            }
            let total: f64 = trace.steps.iter().map(|st| st.discounted_reward).sum();
            assert_eq!(total, trace.discounted_return);
            for st in &trace.steps {
                assert_eq!(st.discounted_reward, st.reward * 0.95f64.powi(st.t as i32));
            }
            let replayed = replay_beliefs(&trace, &s);
            let recorded: Vec<_> = trace.steps.iter().map(|st| st.belief.clone()).collect();
            assert_eq!(replayed, recorded);
        }
    }

    #[test]
    fn open_loop_return_formula() {
        let s = Scenario::new(5, Cell::new(1, 1), 500.0, 25).with_interest(Cell::new(1, 5), 3.0);
        let mut path = vec![Action::Up; 4];
        path.extend([Action::Right; 4]);
        let r = open_loop_return(&path, &s, Cell::new(5, 5));
        assert!((r - (3.0 * 0.95f64.powi(4) + 500.0 * 0.95f64.powi(8))).abs() < 1e-9);
    }
}
