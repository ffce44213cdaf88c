#![no_main]

use libfuzzer_sys::fuzz_target;

// whitespace-separated command line, program name prepended
fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let args = std::iter::once("slag").chain(s.split_whitespace());
        let _ = slag_cli::config::parse_config(args);
    }
});
