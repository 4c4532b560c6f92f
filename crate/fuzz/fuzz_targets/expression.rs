#![no_main]

use libfuzzer_sys::fuzz_target;
use orlicz_obstacle_cli::expr::Expr;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(e) = Expr::parse(text) {
            // Evaluation is total: any result, including NaN, but no panic.
            let _ = e.eval(&[0.5, -0.25]);
            assert!(e.arity() <= 2);
        }
    }
});
