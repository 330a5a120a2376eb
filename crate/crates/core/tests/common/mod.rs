#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sar_contrast::counterfactual::feasibility_truncate;
use sar_contrast::sar::DetectionMetric;
use sar_contrast::{Action, Cell, Scenario};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A small scenario with random geometry, weights and noise.
pub fn random_scenario(rng: &mut ChaCha8Rng, max_n: u32, max_battery: u32) -> Scenario {
    let n = rng.random_range(2..=max_n);
    let cell = |rng: &mut ChaCha8Rng| Cell::new(rng.random_range(1..=n as i32), rng.random_range(1..=n as i32));
    let start = cell(rng);
    let mut s = Scenario::new(
        n,
        start,
        rng.random_range(10.0..500.0),
        rng.random_range(1..=max_battery),
    );
    for _ in 0..rng.random_range(0..=2) {
        let c = cell(rng);
        if s.cells_of_interest.iter().all(|coi| coi.cell != c) {
            s = s.with_interest(c, rng.random_range(0.5..5.0));
        }
    }
    s.p_detect = rng.random_range(0.3..1.0);
    s.battery_weight = rng.random_range(-5.0..5.0);
    if rng.random_bool(0.5) {
        s.detection_metric = DetectionMetric::Manhattan;
    }
    s
}

/// Random nonempty action sequence, cut to be battery-feasible.
pub fn random_actions(rng: &mut ChaCha8Rng, scenario: &Scenario, max_len: usize) -> Vec<Action> {
    let len = rng.random_range(1..=max_len);
    let raw: Vec<Action> = (0..len).map(|_| Action::ALL[rng.random_range(0..4)]).collect();
    feasibility_truncate(&raw, scenario).0
}

pub fn case1() -> Scenario {
    Scenario::new(5, Cell::new(1, 1), 500.0, 25).with_interest(Cell::new(1, 5), 3.0)
}

pub fn case1_user_actions() -> Vec<Action> {
    let mut a = vec![Action::Up; 4];
    a.extend([Action::Right; 4]);
    a
}

/// Every scenario with `n <= 3` and `battery <= 6` the oracle suite covers:
/// each start cell, one cell of interest in the corner opposite the start,
/// and both detection metrics.
pub fn small_scenarios() -> Vec<Scenario> {
    let mut out = Vec::new();
    for n in 2..=3u32 {
        for battery in 1..=6 {
            for sx in 1..=n as i32 {
                for sy in 1..=n as i32 {
                    for metric in [DetectionMetric::Chebyshev, DetectionMetric::Manhattan] {
                        let far = Cell::new(n as i32 + 1 - sx, n as i32 + 1 - sy);
                        let mut s = Scenario::new(n, Cell::new(sx, sy), 100.0, battery);
                        if far != s.start {
                            s = s.with_interest(far, 3.0);
                        }
                        s.detection_metric = metric;
                        out.push(s);
                    }
                }
            }
        }
    }
    out
}
