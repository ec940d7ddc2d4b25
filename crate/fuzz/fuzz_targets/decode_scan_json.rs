#![no_main]

use libfuzzer_sys::fuzz_target;
use vvmf::report::{decode_json, encode_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Accepted documents must survive a re-encode unchanged.
    if let Ok(report) = decode_json(text) {
        let again = encode_json(&report.rows);
        assert_eq!(decode_json(&again).unwrap(), report);
    }
});
