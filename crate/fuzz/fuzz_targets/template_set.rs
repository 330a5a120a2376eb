#![no_main]

use libfuzzer_sys::fuzz_target;
use sar_contrast::explain::TemplateSet;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = TemplateSet::parse(text);
    }
});
