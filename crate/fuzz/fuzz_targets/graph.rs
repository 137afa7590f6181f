#![no_main]
use libfuzzer_sys::fuzz_target;

use ghl::covering::{graph_from_json, graph_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(g) = graph_from_json(text) {
        let back = graph_from_json(&graph_to_json(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }
});
