#![no_main]

use libfuzzer_sys::fuzz_target;
use nhse_core::io::{parse_scan_csv, scan_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(scan) = parse_scan_csv(text) {
        let written = scan_csv(&scan);
        let back = parse_scan_csv(&written).expect("written table reparses");
        assert_eq!(scan_csv(&back), written);
    }
});
