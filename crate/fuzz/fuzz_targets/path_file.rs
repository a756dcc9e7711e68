#![no_main]

use libfuzzer_sys::fuzz_target;
use phi4_core::io::FieldPath;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(p) = FieldPath::parse(s) else { return };
    // whatever parses must write back and parse to the same fields
    let mut buf = Vec::new();
    p.write_to(&mut buf).unwrap();
    let q = FieldPath::parse(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(p.fields, q.fields);
    assert_eq!(p.steps, q.steps);
    let _ = p.to_potential();
});
