#![no_main]

use libfuzzer_sys::fuzz_target;
use vvmf::numeric::Precision;
use vvmf::symbolic::Expr;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(e) = Expr::parse(text) {
        let _ = e.eval(Precision::new(64).unwrap());
    }
});
