use super::*;
use crate::genstruct::{b_transform_structure, RingMatrix};
use crate::symexpr::CoordKind::{Affine, Periodic};
use crate::testutil::{chart, f, field, form, pt, uniform_chart};

fn cylinder() -> (ChartRef, TorusAction) {
    let c = chart(&[("x", Periodic), ("t", Affine)]);
    let a = TorusAction::new(&c, vec![VectorField::coordinate(&c, 0)]).unwrap();
    (c, a)
}

/// `(S¹×ℝ)²` with the translation action of `T²`.
fn torus_cylinder() -> (ChartRef, TorusAction) {
    let c = chart(&[
        ("x1", Periodic),
        ("t1", Affine),
        ("x2", Periodic),
        ("t2", Affine),
    ]);
    let a = TorusAction::new(
        &c,
        vec![
            VectorField::coordinate(&c, 0),
            VectorField::coordinate(&c, 2),
        ],
    )
    .unwrap();
    (c, a)
}

fn torus_omega(c: &ChartRef) -> DiffForm {
    form(c, 2, &[(&["t1", "x1"], "1"), (&["t2", "x2"], "1")])
}

fn torus_moment(c: &ChartRef) -> MomentData {
    MomentData::new(
        vec![f(c, "t1"), f(c, "t2")],
        vec![DiffForm::zero(c, 1), DiffForm::zero(c, 1)],
    )
    .unwrap()
}

fn torus_b(c: &ChartRef) -> DiffForm {
    form(c, 2, &[(&["x1", "x2"], "t1")])
}

fn torus_points(c: &ChartRef) -> Vec<EvalPoint> {
    vec![
        pt(c, &["0", "0", "0", "0"]),
        pt(c, &["1", "2", "3", "-1/2"]),
    ]
}

fn closed_via_cartan(h: &DiffForm, alpha: &[DiffForm], action: &TorusAction) -> bool {
    let eta = EquivariantForm::from_twist_and_moment(h, alpha).unwrap();
    cartan_d(&eta, action).unwrap().is_zero()
}

#[test]
fn action_must_commute() {
    let c = uniform_chart(&["x", "y"], Affine);
    let err = TorusAction::new(
        &c,
        vec![VectorField::coordinate(&c, 0), field(&c, &["0", "x"])],
    )
    .unwrap_err();
    assert_eq!(err, EquivError::NonCommuting(0, 1));
}

#[test]
fn free_locus() {
    let c = uniform_chart(&["x", "y"], Affine);
    let a = TorusAction::new(&c, vec![field(&c, &["-y", "x"])]).unwrap();
    assert!(!a.is_free_at(&pt(&c, &["0", "0"])).unwrap());
    assert!(a.is_free_at(&pt(&c, &["1", "0"])).unwrap());
}

#[test]
fn cartan_d_examples() {
    let (c, a) = cylinder();
    let h = DiffForm::function(&f(&c, "t^2"));
    let dh = cartan_d(&EquivariantForm::from_form(&h, 1), &a).unwrap();
    assert_eq!(
        dh,
        EquivariantForm::from_form(&form(&c, 1, &[(&["t"], "2*t")]), 1)
    );

    let (c, a) = torus_cylinder();
    let b = torus_b(&c);
    let db = cartan_d(&EquivariantForm::from_form(&b, 2), &a).unwrap();
    assert_eq!(db.component(&[0, 0]), Some(&exterior_d(&b)));
    assert_eq!(
        db.component(&[1, 0]),
        Some(&interior(a.generator(0), &b).neg())
    );
    assert_eq!(
        db.component(&[0, 1]),
        Some(&interior(a.generator(1), &b).neg())
    );

    let non_inv = EquivariantForm::from_form(&form(&c, 1, &[(&["t1"], "cos(x1)")]), 2);
    assert!(matches!(
        cartan_d(&non_inv, &a),
        Err(EquivError::NonInvariant(_))
    ));
}

#[test]
fn cartan_d_squares_to_zero() {
    let (c, a) = torus_cylinder();
    let md = moment_b_transform(&torus_b(&c), &torus_moment(&c), &a).unwrap();
    let eta =
        EquivariantForm::from_twist_and_moment(&exterior_d(&torus_b(&c)), md.alpha()).unwrap();
    let once = cartan_d(&eta, &a).unwrap();
    assert!(cartan_d(&once, &a).unwrap().is_zero());

    let mixed = EquivariantForm::new(
        &c,
        2,
        4,
        vec![
            (
                vec![0, 0],
                form(&c, 4, &[(&["x1", "t1", "x2", "t2"], "t1*t2")]),
            ),
            (
                vec![1, 0],
                form(&c, 2, &[(&["t1", "x2"], "t2^2"), (&["x1", "x2"], "1")]),
            ),
            (vec![1, 1], DiffForm::function(&f(&c, "t1"))),
            (vec![0, 2], DiffForm::function(&f(&c, "3"))),
        ],
    )
    .unwrap();
    let once = cartan_d(&mixed, &a).unwrap();
    assert!(!once.is_zero());
    assert!(cartan_d(&once, &a).unwrap().is_zero());
}

#[test]
fn degree_cap_and_homogeneity() {
    let (c, a) = cylinder();
    let one = DiffForm::function(&f(&c, "1"));
    let cubic = EquivariantForm::new(&c, 1, 6, vec![(vec![3], one.clone())]).unwrap();
    assert_eq!(cartan_d(&cubic, &a), Err(EquivError::DegreeCap(3)));
    assert!(EquivariantForm::new(&c, 1, 3, vec![(vec![1], one)]).is_err());
}

#[test]
fn closedness_examples() {
    let (c, a) = torus_cylinder();
    let zero = vec![DiffForm::zero(&c, 1), DiffForm::zero(&c, 1)];
    let r = is_equivariantly_closed(&DiffForm::zero(&c, 3), &zero, &a).unwrap();
    assert!(r.passed());

    let b = torus_b(&c);
    let h = exterior_d(&b);
    let shifted: Vec<DiffForm> = a
        .generators()
        .iter()
        .map(|x| interior(x, &b).neg())
        .collect();
    assert!(is_equivariantly_closed(&h, &shifted, &a).unwrap().passed());
    assert!(closed_via_cartan(&h, &shifted, &a));
    // the opposite sign is not closed against H = dB
    let literal: Vec<DiffForm> = a.generators().iter().map(|x| interior(x, &b)).collect();
    let r = is_equivariantly_closed(&h, &literal, &a).unwrap();
    assert_eq!(r.first_failure(), Some(2));
    assert!(!closed_via_cartan(&h, &literal, &a));

    let (c, a) = cylinder();
    let bad = vec![form(&c, 1, &[(&["x"], "t")])];
    let r = is_equivariantly_closed(&DiffForm::zero(&c, 3), &bad, &a).unwrap();
    assert_eq!(r.first_failure(), Some(2));
    assert_eq!(r.contraction_failures, vec![0]);
    assert!(!closed_via_cartan(&DiffForm::zero(&c, 3), &bad, &a));

    let dx = vec![form(&c, 1, &[(&["x"], "1")])];
    let r = is_equivariantly_closed(&DiffForm::zero(&c, 3), &dx, &a).unwrap();
    assert_eq!(r.first_failure(), Some(3));
}

#[test]
fn basic_forms() {
    let (c, a) = cylinder();
    assert!(is_basic(&form(&c, 1, &[(&["t"], "1")]), &a));
    assert!(!is_basic(&form(&c, 1, &[(&["x"], "1")]), &a));
    assert!(!is_basic(&form(&c, 1, &[(&["t"], "E(x;1)")]), &a));
}

#[test]
fn symplectic_moment_map_on_c2() {
    let c = uniform_chart(&["x1", "y1", "x2", "y2"], Affine);
    let w = form(&c, 2, &[(&["x1", "y1"], "1"), (&["x2", "y2"], "1")]);
    let j = GenStructure::symplectic(&w, DiffForm::zero(&c, 3)).unwrap();
    let a = TorusAction::new(&c, vec![field(&c, &["-y1", "x1", "-y2", "x2"])]).unwrap();
    let pts = vec![
        pt(&c, &["0", "0", "0", "0"]),
        pt(&c, &["1", "2", "-1", "1/3"]),
    ];
    let md = MomentData::new(
        vec![f(&c, "1/2*(x1^2 + y1^2 + x2^2 + y2^2)")],
        vec![DiffForm::zero(&c, 1)],
    )
    .unwrap();
    assert!(check_moment_map(&j, &a, &md, &pts).unwrap().passed());

    let wrong = MomentData::new(
        vec![f(&c, "-1/2*(x1^2 + y1^2 + x2^2 + y2^2)")],
        vec![DiffForm::zero(&c, 1)],
    )
    .unwrap();
    assert!(!check_moment_map(&j, &a, &wrong, &pts).unwrap().passed());
    let non_inv = MomentData::new(vec![f(&c, "x1")], vec![DiffForm::zero(&c, 1)]).unwrap();
    let r = check_moment_map(&j, &a, &non_inv, &pts).unwrap();
    assert_eq!(r.non_invariant_f, vec![0]);
}

#[test]
fn generalized_moment_map_with_imaginary_part() {
    // ξ − i d(f + i h) ∈ L gives moment one-form dh
    let c = uniform_chart(&["x1", "y1", "x2", "y2"], Affine);
    let w = form(&c, 2, &[(&["x1", "y1"], "1"), (&["x2", "y2"], "1")]);
    let j = GenStructure::symplectic(&w, DiffForm::zero(&c, 3)).unwrap();
    let a = TorusAction::new(&c, vec![field(&c, &["-y1", "x1", "-y2", "x2"])]).unwrap();
    let beta = form(
        &c,
        1,
        &[
            (&["y2"], "(x1^2 + y1^2)*x2"),
            (&["x2"], "-(x1^2 + y1^2)*y2"),
        ],
    );
    let b = exterior_d(&beta);
    let jb = b_transform_structure(&b, &j).unwrap();
    let md = MomentData::new(
        vec![f(&c, "1/2*(x1^2 + y1^2 + x2^2 + y2^2)")],
        vec![DiffForm::zero(&c, 1)],
    )
    .unwrap();
    let mdb = moment_b_transform(&b, &md, &a).unwrap();
    let pts = vec![pt(&c, &["1", "0", "1", "2"])];
    assert!(check_moment_map(&jb, &a, &mdb, &pts).unwrap().passed());
    // jb is untwisted since B is exact, and the new moment form is exact
    assert!(jb.twist().is_zero());
    let h = f(&c, "(x1^2 + y1^2)*(x2^2 + y2^2)");
    assert_eq!(mdb.alpha()[0], exterior_d(&DiffForm::function(&h)));
}

#[test]
fn b_transformed_moment_map_on_torus_cylinder() {
    let (c, a) = torus_cylinder();
    let pts = torus_points(&c);
    let j = GenStructure::symplectic(&torus_omega(&c), DiffForm::zero(&c, 3)).unwrap();
    let md = torus_moment(&c);
    assert!(check_moment_map(&j, &a, &md, &pts).unwrap().passed());
    let b = torus_b(&c);
    let jb = b_transform_structure(&b, &j).unwrap();
    let mdb = moment_b_transform(&b, &md, &a).unwrap();
    assert!(check_moment_map(&jb, &a, &mdb, &pts).unwrap().passed());
    // the untransformed moment data does not fit the transformed structure
    assert!(!check_moment_map(&jb, &a, &md, &pts).unwrap().passed());
}

#[test]
fn moment_map_requires_integrable_structure() {
    let (c, a) = torus_cylinder();
    let j = GenStructure::symplectic(&torus_omega(&c), DiffForm::zero(&c, 3)).unwrap();
    let jb = b_transform_structure(&torus_b(&c), &j).unwrap();
    let wrong = jb.with_twist(DiffForm::zero(&c, 3)).unwrap();
    assert!(matches!(
        check_moment_map(&wrong, &a, &torus_moment(&c), &torus_points(&c)),
        Err(EquivError::Precondition(_))
    ));
    let id = GenStructure::new(RingMatrix::identity(&c, 8), DiffForm::zero(&c, 3)).unwrap();
    assert!(matches!(
        check_moment_map(&id, &a, &torus_moment(&c), &[]),
        Err(EquivError::Precondition(_))
    ));
}

#[test]
fn moment_b_transform_examples() {
    let (c, a) = torus_cylinder();
    let md = torus_moment(&c);
    assert_eq!(
        moment_b_transform(&DiffForm::zero(&c, 2), &md, &a).unwrap(),
        md
    );
    let b = torus_b(&c);
    let mdb = moment_b_transform(&b, &md, &a).unwrap();
    assert_eq!(mdb.alpha()[0], form(&c, 1, &[(&["x2"], "-t1")]));
    assert_eq!(mdb.alpha()[1], form(&c, 1, &[(&["x1"], "t1")]));
    assert_eq!(mdb.f(), md.f());
    assert_eq!(moment_b_transform(&b.neg(), &mdb, &a).unwrap(), md);

    let b2 = form(&c, 2, &[(&["t1", "t2"], "t1^2"), (&["x1", "t2"], "1")]);
    let twice = moment_b_transform(&b2, &mdb, &a).unwrap();
    assert_eq!(twice, moment_b_transform(&b.add(&b2), &md, &a).unwrap());

    let non_inv = form(&c, 2, &[(&["t1", "t2"], "sin(x1)")]);
    assert!(matches!(
        moment_b_transform(&non_inv, &md, &a),
        Err(EquivError::NonInvariant(_))
    ));
}

#[test]
fn connection_validation() {
    let (c, a) = torus_cylinder();
    let ok = vec![
        form(&c, 1, &[(&["x1"], "1")]),
        form(&c, 1, &[(&["x2"], "1")]),
    ];
    assert!(Connection::new(ok, &a).is_ok());
    let swapped = vec![
        form(&c, 1, &[(&["x2"], "1")]),
        form(&c, 1, &[(&["x1"], "1")]),
    ];
    assert!(matches!(
        Connection::new(swapped, &a),
        Err(EquivError::Precondition(_))
    ));
    let non_inv = vec![
        form(&c, 1, &[(&["x1"], "1"), (&["t1"], "cos(x2)")]),
        form(&c, 1, &[(&["x2"], "1")]),
    ];
    assert!(matches!(
        Connection::new(non_inv, &a),
        Err(EquivError::NonInvariant(_))
    ));
}

#[test]
fn gamma_examples() {
    let (c, a) = torus_cylinder();
    let theta = Connection::new(
        vec![
            form(&c, 1, &[(&["x1"], "1")]),
            form(&c, 1, &[(&["x2"], "1")]),
        ],
        &a,
    )
    .unwrap();
    let zero_h = DiffForm::zero(&c, 3);
    let g0 = gamma_from_connection(&zero_h, &torus_moment(&c), &theta, &a).unwrap();
    assert!(g0.is_zero());

    let b = torus_b(&c);
    let h = exterior_d(&b);
    let md = moment_b_transform(&b, &torus_moment(&c), &a).unwrap();
    let gamma = gamma_from_connection(&h, &md, &theta, &a).unwrap();
    assert_eq!(gamma, b.neg());
    for i in 0..2 {
        assert_eq!(interior(a.generator(i), &gamma), md.alpha()[i]);
    }
    assert!(is_basic(&h.add(&exterior_d(&gamma)), &a));

    let theta2 = Connection::new(
        vec![
            form(&c, 1, &[(&["x1"], "1"), (&["t1"], "t2")]),
            form(&c, 1, &[(&["x2"], "1")]),
        ],
        &a,
    )
    .unwrap();
    let gamma2 = gamma_from_connection(&h, &md, &theta2, &a).unwrap();
    assert!(is_basic(&gamma.sub(&gamma2), &a));

    let horizontal = vec![form(&c, 1, &[(&["t2"], "1")]), DiffForm::zero(&c, 1)];
    let md_h = MomentData::new(torus_moment(&c).f().to_vec(), horizontal).unwrap();
    let g1 = gamma_from_connection(&zero_h, &md_h, &theta, &a).unwrap();
    let g2 = gamma_from_connection(&zero_h, &md_h, &theta2, &a).unwrap();
    assert_ne!(g1, g2);
    assert!(is_basic(&g1.sub(&g2), &a));

    let bad = vec![form(&c, 1, &[(&["x2"], "t1")]), DiffForm::zero(&c, 1)];
    let md_bad = MomentData::new(torus_moment(&c).f().to_vec(), bad).unwrap();
    assert!(matches!(
        gamma_from_connection(&zero_h, &md_bad, &theta, &a),
        Err(EquivError::Precondition(_))
    ));
}
