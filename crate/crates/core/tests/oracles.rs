//! Cross-checks against an independent brute-force evaluator that works on
//! unnormalized hypothesis weights and full states.

mod common;

use sar_contrast::pomdp::{expectimax_value, DEFAULT_EXPECTIMAX_GUARD};
use sar_contrast::sar::{initial_belief, is_terminal, observation_prob, reward, transition, DetectionMetric, SarState};
use sar_contrast::solver::{policy_value, solve, SolverConfig};
use sar_contrast::{Action, Cell, Observation, Scenario};

/// Optimal value over `horizon` actions. `live` holds (state, weight) pairs
/// for every target hypothesis still consistent with the history.
fn brute(s: &Scenario, live: &[(SarState, f64)], horizon: u32) -> f64 {
    let mut best = f64::NEG_INFINITY;
    if horizon == 0 || live.iter().all(|(st, _)| st.terminal_cause.is_terminal()) {
        return 0.0;
    }
    for a in Action::ALL {
        let mut total = 0.0;
        let next: Vec<(SarState, f64)> = live
            .iter()
            .filter(|(st, _)| !st.terminal_cause.is_terminal())
            .map(|(st, w)| (transition(st, a, s).unwrap(), *w))
            .collect();
        for (st, w) in &next {
            total += w * reward(st, None, s);
        }
        let mut observations = vec![Observation::NoDetect];
        observations.extend(s.cells().map(Observation::Detect));
        for o in observations {
            let branch: Vec<(SarState, f64)> = next
                .iter()
                .filter(|(st, _)| !st.terminal_cause.is_terminal())
                .map(|(st, w)| (*st, w * observation_prob(st, o, s)))
                .filter(|(_, w)| *w > 0.0)
                .collect();
            if !branch.is_empty() {
                total += brute(s, &branch, horizon - 1);
            }
        }
        best = best.max(total);
    }
    s.discount * best
}

fn brute_value(s: &Scenario, horizon: u32) -> f64 {
    let n = s.cell_count() as f64;
    let live: Vec<(SarState, f64)> = s
        .cells()
        .map(|t| (SarState::new(s.start, t, s.battery, s), 1.0 / n))
        .collect();
    let now: f64 = live.iter().map(|(st, w)| w * reward(st, None, s)).sum();
    now + brute(s, &live, horizon)
}

#[test]
fn expectimax_matches_brute_force_on_two_by_two() {
    let s = Scenario::new(2, Cell::new(1, 1), 10.0, 3).with_interest(Cell::new(2, 1), 1.0);
    let b0 = initial_belief(&s);
    let exact = expectimax_value(&s, &b0.known(), &b0.target, 3, DEFAULT_EXPECTIMAX_GUARD).unwrap();
    let brute = brute_value(&s, 3);
    assert!((exact - brute).abs() < 1e-9, "{exact} vs {brute}");
}

#[test]
fn expectimax_matches_brute_force_on_small_grids() {
    for (n, battery, metric, p) in [
        (2, 4, DetectionMetric::Chebyshev, 0.8),
        (3, 4, DetectionMetric::Manhattan, 0.6),
        (3, 5, DetectionMetric::Chebyshev, 0.9),
    ] {
        let mut s = Scenario::new(n, Cell::new(1, 1), 50.0, battery).with_interest(Cell::new(n as i32, 1), 2.0);
        s.detection_metric = metric;
        s.p_detect = p;
        s.battery_weight = -1.0;
        let b0 = initial_belief(&s);
        let exact = expectimax_value(&s, &b0.known(), &b0.target, battery, DEFAULT_EXPECTIMAX_GUARD).unwrap();
        let brute = brute_value(&s, battery);
        assert!((exact - brute).abs() < 1e-9, "n={n} b={battery}: {exact} vs {brute}");
    }
}

#[test]
fn solver_within_epsilon_of_brute_force() {
    for seed in 0..8 {
        let mut rng = common::rng(seed);
        let s = common::random_scenario(&mut rng, 3, 5);
        let b0 = initial_belief(&s);
        let cfg = SolverConfig::for_scenario(&s);
        let p = solve(&s, &cfg).unwrap();
        let v = policy_value(&p, &b0).unwrap();
        let brute = brute_value(&s, s.battery);
        assert!((v - brute).abs() <= cfg.epsilon, "seed {seed}: {v} vs {brute}");
        assert!(p.meta.lower <= brute + 1e-9 && brute <= p.meta.upper + 1e-9);
    }
}

#[test]
fn terminal_cause_precedence() {
    let s = Scenario::new(5, Cell::new(1, 1), 10.0, 6);
    let st = SarState::new(Cell::new(4, 4), Cell::new(4, 4), 6, &s);
    assert!(is_terminal(&st, &s).is_terminal());
    assert_eq!(st.terminal_cause, sar_contrast::TerminalCause::TargetFound);
}

#[test]
fn budget_guard_trips() {
    let s = Scenario::new(3, Cell::new(1, 1), 10.0, 6);
    let b0 = initial_belief(&s);
    assert!(expectimax_value(&s, &b0.known(), &b0.target, 6, 5).is_err());
}
