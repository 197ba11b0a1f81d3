#![no_main]

use libfuzzer_sys::fuzz_target;
use nhse_core::io::{spectrum_from_json, spectrum_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = spectrum_from_json(text, 128) {
        let v = spectrum_to_json(&s);
        let back = spectrum_from_json(&v.to_string(), 128).expect("written spectrum reparses");
        assert_eq!(spectrum_to_json(&back), v);
    }
});
