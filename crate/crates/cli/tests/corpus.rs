//! Replays the checked-in fuzz corpus through the fuzz targets' invariants.

use std::path::{Path, PathBuf};

use phi4_cli::table::{csv_line, parse_failures_csv, parse_ftle_csv, FTLE_COLUMNS};
use phi4_cli::{parse_lambdas, ExperimentSpec, Mode};
use phi4_core::io::FieldPath;

fn corpus(target: &str) -> Vec<(PathBuf, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(PathBuf, String)> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let s = String::from_utf8(std::fs::read(&p).unwrap()).unwrap();
            (p, s)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn config_seeds() {
    let mut ok = 0;
    for (p, s) in corpus("config_json") {
        let spec = ExperimentSpec::from_json_str(&s).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        if spec.validate(spec.mode.unwrap_or(Mode::Sweep)).is_ok() {
            ok += 1;
        }
    }
    assert!(ok >= 4);
}

#[test]
fn path_seeds() {
    let mut parsed = 0;
    for (_, s) in corpus("path_file") {
        let Ok(p) = FieldPath::parse(&s) else { continue };
        let mut buf = Vec::new();
        p.write_to(&mut buf).unwrap();
        let q = FieldPath::parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(p.fields, q.fields);
        let _ = p.to_potential();
        parsed += 1;
    }
    assert_eq!(parsed, 2);
}

#[test]
fn lambda_seeds() {
    let results: Vec<bool> = corpus("lambda_list").iter().map(|(_, s)| parse_lambdas(s).is_ok()).collect();
    assert_eq!(results.iter().filter(|&&r| r).count(), 2);
}

#[test]
fn csv_seeds() {
    for (p, s) in corpus("ftle_csv") {
        let _ = parse_failures_csv(&s);
        if let Ok(t) = parse_ftle_csv(&s) {
            let mut out = csv_line(FTLE_COLUMNS);
            for r in &t.rows {
                out.extend(csv_line(r.fields()));
            }
            let back = parse_ftle_csv(std::str::from_utf8(&out).unwrap()).unwrap();
            assert_eq!(back.rows, t.rows, "{}", p.display());
        }
    }
}
