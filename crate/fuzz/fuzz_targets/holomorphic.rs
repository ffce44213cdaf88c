#![no_main]

use libfuzzer_sys::fuzz_target;
use slag_core::geometry::HolomorphicFn;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = HolomorphicFn::parse(s);
    }
});
