#![no_main]

use libfuzzer_sys::fuzz_target;
use protomeas::tomography::{hermitian_basis, reconstruct, Tomogram};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(t) = Tomogram::from_json(text) else { return };
    // reconstruction cost grows as d⁶; stay small
    if t.dim() > 4 {
        return;
    }
    let set = hermitian_basis(t.dim()).unwrap();
    if let Ok(r) = reconstruct(&t, &set) {
        assert!((r.rho.matrix().trace().re - 1.0).abs() < 1e-9);
    }
});
