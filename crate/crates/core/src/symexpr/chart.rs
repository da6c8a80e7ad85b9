use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::ExprError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordKind {
    /// Polynomial coordinate on ℝ.
    Affine,
    /// Angle coordinate on S¹, carrying Fourier exponentials only.
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub name: String,
    pub kind: CoordKind,
}

const RESERVED: &[&str] = &["I", "E", "cos", "sin"];

/// An ordered list of named coordinates; the dimension is the list length.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chart {
    coords: Vec<Coord>,
}

/// Charts are shared by every element built on them.
pub type ChartRef = Arc<Chart>;

impl Chart {
    pub fn new(coords: Vec<Coord>) -> Result<ChartRef, ExprError> {
        if coords.is_empty() {
            return Err(ExprError::InvalidChart(
                "a chart needs at least one coordinate".into(),
            ));
        }
        for (i, c) in coords.iter().enumerate() {
            let valid_ident = c
                .name
                .chars()
                .next()
                .is_some_and(|ch| ch.is_ascii_alphabetic() || ch == '_')
                && c.name
                    .chars()
                    .all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
            if !valid_ident || RESERVED.contains(&c.name.as_str()) {
                return Err(ExprError::InvalidChart(format!(
                    "invalid coordinate name {:?}",
                    c.name
                )));
            }
            if coords[..i].iter().any(|o| o.name == c.name) {
                return Err(ExprError::InvalidChart(format!(
                    "duplicate coordinate {:?}",
                    c.name
                )));
            }
        }
        Ok(Arc::new(Chart { coords }))
    }

    /// Shorthand used throughout the tests: `Chart::from_spec(&[("x", Affine), ("y", Periodic)])`.
    pub fn from_spec(spec: &[(&str, CoordKind)]) -> Result<ChartRef, ExprError> {
        Chart::new(
            spec.iter()
                .map(|(n, k)| Coord {
                    name: n.to_string(),
                    kind: *k,
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn kind(&self, idx: usize) -> CoordKind {
        self.coords[idx].kind
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.coords[idx].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.name == name)
    }

    pub fn require_index(&self, name: &str) -> Result<usize, ExprError> {
        self.index_of(name)
            .ok_or_else(|| ExprError::UnknownCoord(name.to_string()))
    }
}

pub(crate) fn same_chart(a: &ChartRef, b: &ChartRef) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Value of one coordinate at an evaluation point.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CoordValue {
    Affine(BigRational),
    /// Multiple `q` of π/2, so that `e^{ikq·π/2}` is one of ±1, ±i.
    QuarterTurns(i64),
}

impl fmt::Display for CoordValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoordValue::Affine(r) => write!(f, "{r}"),
            CoordValue::QuarterTurns(q) => write!(f, "{q}q"),
        }
    }
}

/// A point of the chart at which every ring element evaluates to an exact scalar.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EvalPoint {
    values: Vec<CoordValue>,
}

impl EvalPoint {
    pub fn new(chart: &Chart, values: Vec<CoordValue>) -> Result<Self, ExprError> {
        if values.len() != chart.dim() {
            return Err(ExprError::MissingCoordinate(format!(
                "point has {} values, chart has {} coordinates",
                values.len(),
                chart.dim()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            let ok = matches!(
                (chart.kind(i), v),
                (CoordKind::Affine, CoordValue::Affine(_))
                    | (CoordKind::Periodic, CoordValue::QuarterTurns(_))
            );
            if !ok {
                return Err(ExprError::InvalidPoint(format!(
                    "value {v} does not match the kind of coordinate {}",
                    chart.name(i)
                )));
            }
        }
        Ok(EvalPoint { values })
    }

    pub fn from_named(
        chart: &Chart,
        named: &BTreeMap<String, CoordValue>,
    ) -> Result<Self, ExprError> {
        for key in named.keys() {
            chart.require_index(key)?;
        }
        let values = chart
            .coords()
            .iter()
            .map(|c| {
                named
                    .get(&c.name)
                    .cloned()
                    .ok_or_else(|| ExprError::MissingCoordinate(c.name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        EvalPoint::new(chart, values)
    }

    pub fn values(&self) -> &[CoordValue] {
        &self.values
    }
}
