#![no_main]

use libfuzzer_sys::fuzz_target;
use slag_core::frame::io::read_immersion_csv;
use slag_core::geometry::AmbientSpace;

fuzz_target!(|data: &[u8]| {
    for amb in [AmbientSpace::flat(4), AmbientSpace::sphere(5)] {
        if let Ok(s) = read_immersion_csv(data, amb) {
            assert_eq!(s.f.len(), s.grid.len());
        }
    }
});
