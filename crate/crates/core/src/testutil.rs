//! Builders shared by unit tests.

use crate::calculus::{DiffForm, VectorField};
use crate::symexpr::scalar::parse_rational;
use crate::symexpr::{parse_expr, Chart, ChartRef, CoordKind, CoordValue, EvalPoint, RingElement};

pub fn chart(spec: &[(&str, CoordKind)]) -> ChartRef {
    Chart::from_spec(spec).unwrap()
}

pub fn uniform_chart(names: &[&str], kind: CoordKind) -> ChartRef {
    let spec: Vec<(&str, CoordKind)> = names.iter().map(|n| (*n, kind)).collect();
    chart(&spec)
}

pub fn f(c: &ChartRef, src: &str) -> RingElement {
    parse_expr(src, c).unwrap()
}

pub fn form(c: &ChartRef, degree: usize, terms: &[(&[&str], &str)]) -> DiffForm {
    DiffForm::from_terms(
        c,
        degree,
        terms.iter().map(|(idx, e)| {
            (
                idx.iter().map(|n| c.index_of(n).unwrap()).collect(),
                f(c, e),
            )
        }),
    )
    .unwrap()
}

pub fn field(c: &ChartRef, comps: &[&str]) -> VectorField {
    VectorField::new(c, comps.iter().map(|e| f(c, e)).collect()).unwrap()
}

/// Affine entries are rationals, periodic entries are quarter-turn counts.
pub fn pt(c: &ChartRef, vals: &[&str]) -> EvalPoint {
    let values = vals
        .iter()
        .enumerate()
        .map(|(i, v)| match c.kind(i) {
            CoordKind::Affine => CoordValue::Affine(parse_rational(v).unwrap()),
            CoordKind::Periodic => CoordValue::QuarterTurns(v.parse().unwrap()),
        })
        .collect();
    EvalPoint::new(c, values).unwrap()
}
