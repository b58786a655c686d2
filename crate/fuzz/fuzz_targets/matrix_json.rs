#![no_main]

use libfuzzer_sys::fuzz_target;
use protomeas::io::{density_matrix_from_json, matrix_to_json, operator_from_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(op) = operator_from_json(data) {
        let text = matrix_to_json(op.matrix()).unwrap();
        let back = operator_from_json(text.as_bytes()).unwrap();
        assert_eq!(back.matrix(), op.matrix());
    }
    if let Ok(rho) = density_matrix_from_json(data) {
        let text = matrix_to_json(rho.matrix()).unwrap();
        assert!(density_matrix_from_json(text.as_bytes()).is_ok());
    }
});
