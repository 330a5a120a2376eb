#![no_main]

use libfuzzer_sys::fuzz_target;
use sar_contrast::counterfactual::parse_path_arg;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_path_arg(text);
    }
});
