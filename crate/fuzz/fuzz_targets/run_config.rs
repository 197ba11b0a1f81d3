#![no_main]

use libfuzzer_sys::fuzz_target;
use nhse_core::io::{parse_recipe, run_config_from_json, run_config_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(runs) = parse_recipe(text, 128) {
        for run in runs {
            let v = run_config_to_json(&run);
            let back = run_config_from_json(&v, 128).expect("written config reparses");
            assert_eq!(run_config_to_json(&back), v);
        }
    }
});
