#![no_main]

use libfuzzer_sys::fuzz_target;
use slag_core::kfield::io::{read_csv, read_meta};
use slag_core::kfield::Bc;

fuzz_target!(|data: &[u8]| {
    for bc in [Bc::Periodic, Bc::Dirichlet] {
        if let Ok(k) = read_csv(data, bc) {
            assert!(k.grid.validate().is_ok());
            assert!(k.k.iter().all(|f| f.len() == k.grid.len()));
        }
    }
    let _ = read_meta(data);
});
