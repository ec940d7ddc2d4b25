#![no_main]

use libfuzzer_sys::fuzz_target;
use vvmf::numeric::parse_rational_list;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(xs) = parse_rational_list(text) {
        assert_eq!(xs.len(), text.split(',').count());
        let joined = xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        assert_eq!(parse_rational_list(&joined).unwrap(), xs);
    }
});
