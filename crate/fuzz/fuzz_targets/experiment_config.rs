#![no_main]
use libfuzzer_sys::fuzz_target;

use ghl_cli::config::validate_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = validate_config(text, None);
    }
});
