#![no_main]
use libfuzzer_sys::fuzz_target;

use ghl::gamma::{operator_from_json, operator_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(op) = operator_from_json(text) {
        let back = operator_from_json(&operator_to_json(&op).unwrap()).unwrap();
        assert_eq!(back, op);
    }
});
