#![no_main]

use libfuzzer_sys::fuzz_target;
use vvmf::golden::parse_golden;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = parse_golden(text) {
        for row in &g.rows {
            assert_eq!(row.components.len(), row.h.len() + 1);
        }
    }
});
