use super::*;

#[test]
fn builtin_scenarios_load() {
    for (name, _) in CATALOG {
        let s = catalog_scenario(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(s.name(), name);
    }
    let s = catalog_scenario("symplectic_T4").unwrap();
    assert_eq!(s.structures.len(), 1);
    assert!(s.primary().twist().is_zero());
}

#[test]
fn catalog_listing() {
    let text = list_catalog();
    for name in ["symplectic_T4", "kahler_C2_circle", "gamma_torus_cylinder"] {
        assert!(text.contains(name));
    }
    assert_eq!(text.lines().count(), CATALOG.len());
}

#[test]
fn twist_must_be_closed() {
    let text = r#"{"name": "t", "coordinates": [{"name": "a", "kind": "affine"}, {"name": "b", "kind": "affine"},
        {"name": "c", "kind": "affine"}, {"name": "d", "kind": "affine"}],
        "twist": [{"wedge": ["a", "b", "c"], "coeff": "d"}],
        "structures": [{"name": "J", "kind": "symplectic",
            "omega": [{"wedge": ["a", "b"], "coeff": "1"}, {"wedge": ["c", "d"], "coeff": "1"}]}]}"#;
    match parse_scenario(text) {
        Err(LoadError::Validation(m)) => assert_eq!(m, "twist not closed"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn undeclared_coordinate_is_rejected() {
    let text = r#"{"name": "u", "coordinates": [{"name": "x", "kind": "affine"}, {"name": "y", "kind": "affine"}],
        "structures": [{"name": "J", "kind": "symplectic", "omega": [{"wedge": ["x", "w"], "coeff": "1"}]}]}"#;
    match parse_scenario(text) {
        Err(LoadError::Validation(m)) => assert!(m.contains("undeclared coordinate w"), "{m}"),
        other => panic!("{other:?}"),
    }
    let text = r#"{"name": "u", "coordinates": [{"name": "x", "kind": "affine"}, {"name": "y", "kind": "affine"}],
        "structures": [{"name": "J", "kind": "symplectic", "omega": [{"wedge": ["x", "y"], "coeff": "q + 1"}]}]}"#;
    assert!(matches!(
        parse_scenario(text),
        Err(LoadError::Validation(_))
    ));
}

#[test]
fn parse_errors_carry_location() {
    match parse_scenario("{\n  \"name\": \"x\",\n  oops\n}") {
        Err(LoadError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    let text = r#"{"name": "k", "coordinates": [{"name": "x", "kind": "affine"}, {"name": "y", "kind": "affine"}],
        "structures": [{"name": "J", "kind": "hyperbolic"}]}"#;
    assert!(matches!(
        parse_scenario(text),
        Err(LoadError::Validation(_))
    ));
}

#[test]
fn checks_need_their_inputs() {
    let text = r#"{"name": "c", "coordinates": [{"name": "x", "kind": "affine"}, {"name": "y", "kind": "affine"}],
        "structures": [{"name": "J", "kind": "complex", "matrix": [["0","-1"],["1","0"]]}],
        "checks": ["reduction"]}"#;
    match parse_scenario(text) {
        Err(LoadError::Validation(m)) => assert!(m.contains("reduction"), "{m}"),
        other => panic!("{other:?}"),
    }
    let text = text.replace("reduction", "no_such_check");
    assert!(matches!(
        parse_scenario(&text),
        Err(LoadError::Validation(_))
    ));
}

#[test]
fn empty_check_list_gives_empty_verdicts() {
    let text = r#"{"name": "e", "coordinates": [{"name": "x", "kind": "affine"}, {"name": "y", "kind": "affine"}],
        "structures": [{"name": "J", "kind": "complex", "matrix": [["0","-1"],["1","0"]]}]}"#;
    let r = run_checks(&parse_scenario(text).unwrap());
    assert!(r.verdicts.is_empty());
    assert!(r.all_passed());
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    for key in ["version", "scenario", "verdicts", "quantities", "witnesses"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn reports_are_stable() {
    let s = catalog_scenario("gamma_torus_cylinder").unwrap();
    assert_eq!(run_checks(&s).to_json(), run_checks(&s).to_json());
    let t = catalog_scenario("gamma_torus_cylinder").unwrap();
    assert_eq!(s.digest(), t.digest());
    assert_ne!(s.digest(), catalog_scenario("btwist_T4").unwrap().digest());
}

#[test]
fn kahler_reduction_reports_types() {
    let s = catalog_scenario("kahler_C2_circle").unwrap();
    let r = run_checks(&s);
    assert!(r.unexpected(&s).is_empty(), "{:?}", r.unexpected(&s));
    assert_eq!(
        r.quantities["gk_reduction.p0.types"],
        serde_json::json!([0, 1])
    );
}

#[test]
fn swapped_roles_are_rejected() {
    let mut file = catalog_scenario("kahler_C2_circle").unwrap().file;
    file.structures.swap(0, 1);
    file.checks = vec!["gk_reduction".into()];
    file.expect.clear();
    let r = run_checks(&Scenario::from_file(file).unwrap());
    assert_eq!(r.status("gk_reduction"), Some(Status::Skipped));
}

#[test]
fn reduce_point_document() {
    let s = catalog_scenario("kahler_C2_circle").unwrap();
    let v = reduce_point(&s, "p0").unwrap();
    assert_eq!(v["reduced_dim"], 2);
    assert_eq!(v["second"]["type"], 1);
    assert!(reduce_point(&s, "nowhere").is_err());
}
