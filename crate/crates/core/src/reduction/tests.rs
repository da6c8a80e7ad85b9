use super::*;
use crate::calculus::{exterior_d, VectorField};
use crate::equivariant::moment_b_transform;
use crate::genstruct::RingMatrix;
use crate::symexpr::scalar::{frac, parse_rational, real};
use crate::symexpr::{
    ChartRef,
    CoordKind::{Affine, Periodic},
};
use crate::testutil::{chart, f, field, form, pt, uniform_chart};

fn const_matrix(c: &ChartRef, rows: &[&[&str]]) -> RingMatrix {
    let m = Matrix::from_fn(rows.len(), rows[0].len(), |r, col| {
        real(parse_rational(rows[r][col]).unwrap())
    });
    RingMatrix::from_scalar(c, &m)
}

struct Setup {
    c: ChartRef,
    j1: GenStructure,
    j2: GenStructure,
    action: TorusAction,
    md: MomentData,
    level: Vec<Scalar>,
}

fn kahler_c2() -> Setup {
    let c = uniform_chart(&["x1", "y1", "x2", "y2"], Affine);
    let w = form(&c, 2, &[(&["x1", "y1"], "1"), (&["x2", "y2"], "1")]);
    let h = DiffForm::zero(&c, 3);
    let j1 = GenStructure::symplectic(&w, h.clone()).unwrap();
    let i = const_matrix(
        &c,
        &[
            &["0", "-1", "0", "0"],
            &["1", "0", "0", "0"],
            &["0", "0", "0", "-1"],
            &["0", "0", "1", "0"],
        ],
    );
    let j2 = GenStructure::complex(&i, h).unwrap();
    let action = TorusAction::new(&c, vec![field(&c, &["-y1", "x1", "-y2", "x2"])]).unwrap();
    let md = MomentData::new(
        vec![f(&c, "1/2*(x1^2 + y1^2 + x2^2 + y2^2)")],
        vec![DiffForm::zero(&c, 1)],
    )
    .unwrap();
    Setup {
        c,
        j1,
        j2,
        action,
        md,
        level: vec![frac(1, 2)],
    }
}

fn torus_cylinder() -> Setup {
    let c = chart(&[
        ("x1", Periodic),
        ("t1", Affine),
        ("x2", Periodic),
        ("t2", Affine),
    ]);
    let w = form(&c, 2, &[(&["t1", "x1"], "1"), (&["t2", "x2"], "1")]);
    let j = GenStructure::symplectic(&w, DiffForm::zero(&c, 3)).unwrap();
    let action = TorusAction::new(
        &c,
        vec![
            VectorField::coordinate(&c, 0),
            VectorField::coordinate(&c, 2),
        ],
    )
    .unwrap();
    let md0 = MomentData::new(
        vec![f(&c, "t1"), f(&c, "t2")],
        vec![DiffForm::zero(&c, 1), DiffForm::zero(&c, 1)],
    )
    .unwrap();
    let b = form(&c, 2, &[(&["x1", "x2"], "t1")]);
    let j1 = b_transform_structure(&b, &j).unwrap();
    let md = moment_b_transform(&b, &md0, &action).unwrap();
    Setup {
        c,
        j1,
        j2: j,
        action,
        md,
        level: vec![frac(1, 1), frac(-2, 1)],
    }
}

fn bihermitian() -> Setup {
    let c = chart(&[
        ("a0", Periodic),
        ("a1", Affine),
        ("a2", Affine),
        ("a3", Periodic),
    ]);
    let h = DiffForm::zero(&c, 3);
    let j1 = const_matrix(
        &c,
        &[
            &["0", "1/2", "1/2", "0", "0", "1/2", "-1/2", "0"],
            &["-1/2", "0", "0", "-1/2", "-1/2", "0", "0", "1/2"],
            &["-1/2", "0", "0", "1/2", "1/2", "0", "0", "1/2"],
            &["0", "1/2", "-1/2", "0", "0", "-1/2", "-1/2", "0"],
            &["0", "1/2", "-1/2", "0", "0", "1/2", "1/2", "0"],
            &["-1/2", "0", "0", "1/2", "-1/2", "0", "0", "-1/2"],
            &["1/2", "0", "0", "1/2", "-1/2", "0", "0", "1/2"],
            &["0", "-1/2", "-1/2", "0", "0", "1/2", "-1/2", "0"],
        ],
    );
    let j2 = const_matrix(
        &c,
        &[
            &["0", "1/2", "-1/2", "0", "0", "1/2", "1/2", "0"],
            &["-1/2", "0", "0", "1/2", "-1/2", "0", "0", "-1/2"],
            &["1/2", "0", "0", "1/2", "-1/2", "0", "0", "1/2"],
            &["0", "-1/2", "-1/2", "0", "0", "1/2", "-1/2", "0"],
            &["0", "1/2", "1/2", "0", "0", "1/2", "-1/2", "0"],
            &["-1/2", "0", "0", "-1/2", "-1/2", "0", "0", "1/2"],
            &["-1/2", "0", "0", "1/2", "1/2", "0", "0", "1/2"],
            &["0", "1/2", "-1/2", "0", "0", "-1/2", "-1/2", "0"],
        ],
    );
    let action = TorusAction::new(&c, vec![VectorField::coordinate(&c, 0)]).unwrap();
    let md = MomentData::new(vec![f(&c, "a2 - a1")], vec![form(&c, 1, &[(&["a3"], "1")])]).unwrap();
    Setup {
        j1: GenStructure::new(j1, h.clone()).unwrap(),
        j2: GenStructure::new(j2, h).unwrap(),
        c,
        action,
        md,
        level: vec![frac(0, 1)],
    }
}

fn reduce(s: &Setup, j: &GenStructure, p: &EvalPoint) -> (FiberData, ReducedFiber) {
    let fd = fiber_extract(j, &s.action, &s.md, &s.level, p).unwrap();
    let rf = dirac_reduce_fiber(&fd).unwrap();
    (fd, rf)
}

#[test]
fn fiber_extraction() {
    let s = kahler_c2();
    let fd = fiber_extract(
        &s.j1,
        &s.action,
        &s.md,
        &s.level,
        &pt(&s.c, &["1", "0", "0", "0"]),
    )
    .unwrap();
    assert_eq!((fd.d.len(), fd.a.len(), fd.l.len()), (1, 1, 4));
    let origin = pt(&s.c, &["0", "0", "0", "0"]);
    assert!(matches!(
        fiber_extract(&s.j1, &s.action, &s.md, &s.level, &origin),
        Err(ReductionError::OffLevel { .. })
    ));
    assert!(matches!(
        fiber_extract(&s.j1, &s.action, &s.md, &[frac(0, 1)], &origin),
        Err(ReductionError::RankDeficient { .. })
    ));
}

#[test]
fn trivial_action_is_identity() {
    let c = uniform_chart(&["x", "y"], Affine);
    let j = GenStructure::symplectic(&form(&c, 2, &[(&["x", "y"], "1")]), DiffForm::zero(&c, 3))
        .unwrap();
    let action = TorusAction::new(&c, vec![]).unwrap();
    let md = MomentData::new(vec![], vec![]).unwrap();
    let p = pt(&c, &["2", "-1"]);
    let fd = fiber_extract(&j, &action, &md, &[], &p).unwrap();
    assert!(fd.d.is_empty() && fd.a.is_empty());
    let rf = dirac_reduce_fiber(&fd).unwrap();
    assert_eq!(rf.jt, j.mat().eval(&p).unwrap());
    assert!(reduced_type_check(&fd, &rf).passed());
    assert!(two_step_compare(&fd, &rf).unwrap().passed());
}

#[test]
fn symplectic_c2_reduction() {
    let s = kahler_c2();
    for vals in [
        ["1", "0", "0", "0"],
        ["0", "0", "0", "1"],
        ["3/5", "4/5", "0", "0"],
        ["1/2", "1/2", "1/2", "1/2"],
    ] {
        let (fd, rf) = reduce(&s, &s.j1, &pt(&s.c, &vals));
        assert_eq!(rf.m, 2);
        assert_eq!(rf.jt.rows(), 4);
        assert!(is_generalized_complex(&rf.jt));
        let t = reduced_type_check(&fd, &rf);
        assert_eq!((t.original, t.reduced), (0, 0));
        assert!(two_step_compare(&fd, &rf).unwrap().passed());
    }
}

#[test]
fn quotient_basis_has_standard_pairing() {
    let s = kahler_c2();
    let fd = fiber_extract(
        &s.j1,
        &s.action,
        &s.md,
        &s.level,
        &pt(&s.c, &["3/5", "4/5", "0", "0"]),
    )
    .unwrap();
    let b = QuotientBasis::new(fd.n, &fd.d, &fd.a);
    for (i, t) in b.t.iter().enumerate() {
        for (j, c) in b.c.iter().enumerate() {
            assert_eq!(dot(c, t), if i == j { int(1) } else { int(0) });
        }
        assert!(dot(&fd.d[0], t).is_zero());
    }
    for c in &b.c {
        assert!(dot(c, &fd.a[0]).is_zero());
    }
    let q = vec![int(1), int(2), int(3), int(4)];
    assert_eq!(b.project(&b.lift(&q)), q);
}

#[test]
fn torus_cylinder_reduction() {
    let s = torus_cylinder();
    let p = pt(&s.c, &["0", "1", "1", "-2"]);
    let (fd, rf) = reduce(&s, &s.j1, &p);
    assert_eq!(rf.m, 0);
    assert!(reduced_type_check(&fd, &rf).passed());
    assert!(two_step_compare(&fd, &rf).unwrap().passed());
    assert!(matches!(
        fiber_extract(
            &s.j1,
            &s.action,
            &s.md,
            &s.level,
            &pt(&s.c, &["0", "0", "1", "-2"])
        ),
        Err(ReductionError::OffLevel { index: 0, .. })
    ));
}

#[test]
fn reduction_commutes_with_basic_b() {
    let s = torus_cylinder();
    let b = form(&s.c, 2, &[(&["t1", "t2"], "t2^2 + t1")]);
    let p = pt(&s.c, &["1", "1", "3", "-2"]);
    assert!(reduce_b_commute(&s.j1, &s.action, &s.md, &s.level, &b, &p).unwrap());
    let not_basic = form(&s.c, 2, &[(&["x1", "t2"], "1")]);
    assert!(matches!(
        reduce_b_commute(&s.j1, &s.action, &s.md, &s.level, &not_basic, &p),
        Err(ReductionError::Precondition(_))
    ));
}

#[test]
fn reduction_commutes_with_basic_b_on_c2xr2() {
    // S¹ acting on the first factor of (S¹×ℝ) × ℝ² leaves a 2-dimensional quotient.
    let c = chart(&[("x", Periodic), ("t", Affine), ("u", Affine), ("v", Affine)]);
    let w = form(&c, 2, &[(&["t", "x"], "1"), (&["u", "v"], "1")]);
    let j = GenStructure::symplectic(&w, DiffForm::zero(&c, 3)).unwrap();
    let action = TorusAction::new(&c, vec![VectorField::coordinate(&c, 0)]).unwrap();
    let md = MomentData::new(vec![f(&c, "t")], vec![DiffForm::zero(&c, 1)]).unwrap();
    let b = form(&c, 2, &[(&["u", "v"], "u*t + 1"), (&["t", "u"], "v")]);
    let p = pt(&c, &["2", "1/2", "1", "-3"]);
    assert!(reduce_b_commute(&j, &action, &md, &[frac(1, 2)], &b, &p).unwrap());
    let (fd, rf) = {
        let fd = fiber_extract(&j, &action, &md, &[frac(1, 2)], &p).unwrap();
        let rf = dirac_reduce_fiber(&fd).unwrap();
        (fd, rf)
    };
    assert_eq!(rf.m, 2);
    assert!(reduced_type_check(&fd, &rf).passed());
    let jb = b_transform_structure(&b, &j).unwrap();
    let rfb =
        dirac_reduce_fiber(&fiber_extract(&jb, &action, &md, &[frac(1, 2)], &p).unwrap()).unwrap();
    assert_ne!(rfb.jt, rf.jt);
}

#[test]
fn connection_choice_changes_reduction_by_a_b_transform() {
    let s = torus_cylinder();
    let t1 = Connection::new(
        vec![
            form(&s.c, 1, &[(&["x1"], "1")]),
            form(&s.c, 1, &[(&["x2"], "1")]),
        ],
        &s.action,
    )
    .unwrap();
    let t2 = Connection::new(
        vec![
            form(&s.c, 1, &[(&["x1"], "1"), (&["t1"], "t2")]),
            form(&s.c, 1, &[(&["x2"], "1"), (&["t2"], "t1^2")]),
        ],
        &s.action,
    )
    .unwrap();
    let p = pt(&s.c, &["0", "1", "2", "-2"]);
    assert!(connection_independence(&s.j1, &s.action, &s.md, &s.level, &t1, &t2, &p).unwrap());
}

#[test]
fn gk_reduction_of_kahler_c2() {
    let s = kahler_c2();
    for vals in [
        ["1", "0", "0", "0"],
        ["3/5", "4/5", "0", "0"],
        ["1/2", "1/2", "1/2", "1/2"],
    ] {
        let p = pt(&s.c, &vals);
        let gk = gk_reduce_fiber(&s.j1, &s.j2, &s.action, &s.md, &s.level, &p).unwrap();
        assert!(gk.passed(), "{:?}", gk.minors);
        let r = gk_type_formula_check(&gk);
        assert_eq!(
            (r.type_j2, r.k, r.intersection, r.predicted, r.computed),
            (2, 1, 0, 1, 1)
        );
        assert!(r.passed());
    }
    let p = pt(&s.c, &["1", "0", "0", "0"]);
    assert!(matches!(
        gk_reduce_fiber(&s.j2, &s.j1, &s.action, &s.md, &s.level, &p),
        Err(ReductionError::Precondition(_))
    ));
}

#[test]
fn gk_reduction_trivial_action() {
    let s = kahler_c2();
    let action = TorusAction::new(&s.c, vec![]).unwrap();
    let md = MomentData::new(vec![], vec![]).unwrap();
    let p = pt(&s.c, &["1", "2", "3", "4"]);
    let gk = gk_reduce_fiber(&s.j1, &s.j2, &action, &md, &[], &p).unwrap();
    assert!(gk.passed());
    assert_eq!(gk.rf1.jt, s.j1.mat().eval(&p).unwrap());
    assert_eq!(gk.j2t, s.j2.mat().eval(&p).unwrap());
    let r = gk_type_formula_check(&gk);
    assert_eq!(r.predicted, r.computed as i64);
}

#[test]
fn gk_reduction_of_bihermitian_pair() {
    let s = bihermitian();
    let grid = [
        pt(&s.c, &["0", "0", "0", "0"]),
        pt(&s.c, &["1", "2", "2", "3"]),
    ];
    assert!(crate::genstruct::check_gk_pair(&s.j1, &s.j2, &grid)
        .unwrap()
        .passed());
    assert!(matches!(
        dirac_reduce_fiber(&fiber_extract(&s.j1, &s.action, &s.md, &s.level, &grid[0]).unwrap()),
        Err(ReductionError::Degenerate(_))
    ));
    let theta = Connection::new(vec![form(&s.c, 1, &[(&["a0"], "1")])], &s.action).unwrap();
    let (j1, md, gamma) = gamma_transform(&s.j1, &s.action, &s.md, &theta).unwrap();
    let j2 = b_transform_structure(&gamma, &s.j2).unwrap();
    assert!(j1.twist().is_zero());
    for p in &grid {
        let gk = gk_reduce_fiber(&j1, &j2, &s.action, &md, &s.level, p).unwrap();
        assert!(gk.passed());
        let r = gk_type_formula_check(&gk);
        assert_eq!((r.type_j2, r.intersection), (0, 1));
        assert_eq!(r.predicted, 1);
        assert_eq!(r.computed, 1);
        assert_eq!((r.type_j1, r.type_j1_reduced), (0, 0));
    }
}

#[test]
fn level_closure_examples() {
    let s = torus_cylinder();
    let r = level_closure_property(&s.j1, &s.action, &s.md, &s.level).unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(r.sections > 0);

    let perturbed =
        MomentData::new(vec![f(&s.c, "2*t1"), f(&s.c, "t2")], s.md.alpha().to_vec()).unwrap();
    let r = level_closure_property(&s.j1, &s.action, &perturbed, &s.level).unwrap();
    assert!(r.skipped.is_none());
    assert!(!r.passed());
    assert!(r.witness.is_some());

    let c2 = kahler_c2();
    let r = level_closure_property(&c2.j1, &c2.action, &c2.md, &c2.level).unwrap();
    assert!(r.skipped.is_some());

    let action = TorusAction::new(&s.c, vec![]).unwrap();
    let md = MomentData::new(vec![], vec![]).unwrap();
    assert!(level_closure_property(&s.j1, &action, &md, &[])
        .unwrap()
        .passed());
}

#[test]
fn df_perp_frames_close() {
    let s = torus_cylinder();
    assert_eq!(df_perp_closure(&s.md, s.j1.twist()).unwrap(), 0);
    let c2 = kahler_c2();
    assert_eq!(df_perp_closure(&c2.md, c2.j1.twist()).unwrap(), 0);
    let h = exterior_d(&form(&c2.c, 2, &[(&["x1", "y1"], "x2^2")]));
    assert_eq!(df_perp_closure(&c2.md, &h).unwrap(), 0);
}
