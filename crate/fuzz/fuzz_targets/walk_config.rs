#![no_main]

use libfuzzer_sys::fuzz_target;
use nhse_core::io::{walk_config_from_json, walk_config_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(v) = serde_json::from_slice::<serde_json::Value>(data) else { return };
    if let Ok(c) = walk_config_from_json(&v) {
        let w = walk_config_to_json(&c);
        let back = walk_config_from_json(&w).expect("written walk config reparses");
        assert_eq!(walk_config_to_json(&back), w);
    }
});
