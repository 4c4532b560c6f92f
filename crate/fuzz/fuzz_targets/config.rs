#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use orlicz_obstacle_cli::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ExperimentConfig::parse(text, Path::new("."));
    }
});
