#![no_main]

use libfuzzer_sys::fuzz_target;
use protomeas::io::ensemble_from_json;

fuzz_target!(|data: &[u8]| {
    if let Ok(e) = ensemble_from_json(data) {
        assert_eq!(e.counts().iter().sum::<u64>(), e.total());
    }
});
