#![no_main]

use libfuzzer_sys::fuzz_target;
use sar_contrast::scenario::{parse_scenario, scenario_hash, scenario_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = parse_scenario(text) {
        let back = parse_scenario(&scenario_to_json(&s)).expect("canonical form re-parses");
        assert_eq!(back, s);
        assert_eq!(scenario_hash(&back), scenario_hash(&s));
    }
});
