#![no_main]

use libfuzzer_sys::fuzz_target;
use phi4_cli::parse_lambdas;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(v) = parse_lambdas(s) {
            assert!(v.iter().all(|x| x.is_finite()));
            assert_eq!(v.len(), s.split(',').count());
        }
    }
});
