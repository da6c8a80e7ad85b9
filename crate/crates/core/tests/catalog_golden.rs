use std::path::PathBuf;

use twistgc::catalog::{catalog_scenario, run_checks, CATALOG};

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.json"))
}

#[test]
fn catalog_matches_golden_reports() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut mismatched = Vec::new();
    for (name, _) in CATALOG {
        let s = catalog_scenario(name).unwrap();
        let report = run_checks(&s);
        assert!(
            report.unexpected(&s).is_empty(),
            "{name}: {:?}",
            report.unexpected(&s)
        );
        let json = report.to_json();
        let path = golden_path(name);
        if update {
            std::fs::write(&path, &json).unwrap();
        } else {
            let want = std::fs::read_to_string(&path)
                .unwrap_or_else(|_| panic!("missing {}", path.display()));
            if want != json {
                mismatched.push(name);
            }
        }
    }
    assert!(
        mismatched.is_empty(),
        "reports differ from golden files: {mismatched:?}"
    );
}
