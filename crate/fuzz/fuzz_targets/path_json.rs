#![no_main]

use libfuzzer_sys::fuzz_target;
use sar_contrast::counterfactual::{feasibility_truncate, path_to_actions, UserPath};
use sar_contrast::{Cell, Scenario};

fuzz_target!(|data: &[u8]| {
    let Ok(path) = serde_json::from_slice::<UserPath>(data) else {
        return;
    };
    let scenario = Scenario::new(5, Cell::new(1, 1), 100.0, 12);
    if let Ok(actions) = path_to_actions(&path, &scenario) {
        let (kept, report) = feasibility_truncate(&actions, &scenario);
        assert!(kept.len() <= actions.len());
        assert_eq!(report.executed_length, kept.len());
    }
});
