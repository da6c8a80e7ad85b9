//! Exact function ring on chart models.
//!
//! A chart mixes affine coordinates (carrying polynomials) and periodic
//! coordinates (carrying Fourier exponentials `E(y;k) = e^{iky}`). The ring
//! they generate over the Gaussian rationals is closed under sums, products,
//! partial derivatives and complex conjugation, and every element evaluates
//! exactly at points whose periodic coordinates are multiples of π/2.

mod chart;
mod parse;
mod ring;
pub mod scalar;

use thiserror::Error;

pub use chart::{Chart, ChartRef, Coord, CoordKind, CoordValue, EvalPoint};
pub use parse::parse_expr;
pub use ring::{ring_arith, Monomial, RingElement, RingOp};
pub use scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown coordinate {0:?}")]
    UnknownCoord(String),
    #[error("polynomial degree on periodic coordinate {0:?}")]
    PeriodicPolynomial(String),
    #[error("exponential on affine coordinate {0:?}")]
    ExpOnAffine(String),
    #[error("operands live on different charts")]
    ChartMismatch,
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("missing coordinate assignment: {0}")]
    MissingCoordinate(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
}

pub fn evaluate(a: &RingElement, p: &EvalPoint) -> Result<Scalar, ExprError> {
    a.evaluate(p)
}

pub fn partial(a: &RingElement, coord: &str) -> Result<RingElement, ExprError> {
    a.partial_by_name(coord)
}
