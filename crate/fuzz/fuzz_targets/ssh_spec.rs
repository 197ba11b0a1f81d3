#![no_main]

use libfuzzer_sys::fuzz_target;
use nhse_core::io::{parse_ssh_spec, ssh_spec_from_json, ssh_spec_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_ssh_spec(text, 128) {
        let v = ssh_spec_to_json(&spec);
        let back = ssh_spec_from_json(&v, 128).expect("written spec reparses");
        assert_eq!(ssh_spec_to_json(&back), v);
    }
});
