#![no_main]

use libfuzzer_sys::fuzz_target;
use nhse_core::numeric::{parse_real, real_to_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if text.len() > 256 {
        return;
    }
    for bits in [53, 256] {
        if let Ok(x) = parse_real(text, bits) {
            if x.is_finite() {
                let back = parse_real(&real_to_string(&x), bits).expect("printed real reparses");
                assert_eq!(x, back);
            }
        }
    }
});
