#![no_main]

use libfuzzer_sys::fuzz_target;
use protomeas::io::StateSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = serde_json::from_slice::<StateSpec>(data) {
        if let Ok(psi) = spec.to_state() {
            assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-9);
        }
    }
});
