#![no_main]

use libfuzzer_sys::fuzz_target;
use orlicz_obstacle::io::Sidecar;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(meta) = Sidecar::parse(text) {
            let again = Sidecar::parse(&meta.to_string()).expect("written sidecars parse");
            assert_eq!(again, meta);
        }
    }
});
