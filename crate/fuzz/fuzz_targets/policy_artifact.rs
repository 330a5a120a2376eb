#![no_main]

use libfuzzer_sys::fuzz_target;
use sar_contrast::solver::policy_from_json;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = policy_from_json(text);
    }
});
