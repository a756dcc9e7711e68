#![no_main]

use libfuzzer_sys::fuzz_target;
use phi4_cli::table::{csv_line, parse_failures_csv, parse_ftle_csv, FTLE_COLUMNS};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let _ = parse_failures_csv(s);
    let Ok(t) = parse_ftle_csv(s) else { return };
    assert!(t.complete_len <= s.len());
    // re-serialized rows parse back unchanged
    let mut out = csv_line(FTLE_COLUMNS);
    for r in &t.rows {
        out.extend(csv_line(r.fields()));
    }
    let back = parse_ftle_csv(std::str::from_utf8(&out).unwrap()).unwrap();
    assert_eq!(back.rows, t.rows);
});
