#![no_main]

use libfuzzer_sys::fuzz_target;
use phi4_cli::{ExperimentSpec, Mode};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(spec) = ExperimentSpec::from_json_str(s) {
            let mode = spec.mode.unwrap_or(Mode::Sweep);
            let _ = spec.validate(mode);
        }
    }
});
