#![no_main]

use libfuzzer_sys::fuzz_target;
use nhse_core::io::{chain_spec_from_json, chain_spec_to_json, parse_chain_spec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_chain_spec(text, 128) {
        let v = chain_spec_to_json(&spec);
        let back = chain_spec_from_json(&v, 128).expect("written spec reparses");
        assert_eq!(chain_spec_to_json(&back), v);
    }
});
