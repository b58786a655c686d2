#![no_main]

use libfuzzer_sys::fuzz_target;
use protomeas::defaults::PhysicalDefaults;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = PhysicalDefaults::from_json(text);
    }
});
