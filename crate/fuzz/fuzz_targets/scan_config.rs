#![no_main]

use libfuzzer_sys::fuzz_target;
use nhse_core::io::{scan_config_from_json, scan_config_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(v) = serde_json::from_slice::<serde_json::Value>(data) else { return };
    if let Ok(c) = scan_config_from_json(&v) {
        let w = scan_config_to_json(&c);
        let back = scan_config_from_json(&w).expect("written scan config reparses");
        assert_eq!(scan_config_to_json(&back), w);
    }
});
