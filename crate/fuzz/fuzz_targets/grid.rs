#![no_main]

use libfuzzer_sys::fuzz_target;
use orlicz_obstacle::io::{read_domain, read_grid, write_grid};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(field) = read_grid(text) {
            // Accepted input must survive an exact round trip.
            let again = read_grid(&write_grid(&field)).expect("written grids parse");
            assert_eq!(again, field);
        }
        let _ = read_domain(text);
    }
});
