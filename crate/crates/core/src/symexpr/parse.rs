//! Recursive-descent parser for the expression grammar
//!
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := atom ('^' uint)?
//! atom   := rational | 'I' | ident | 'E' '(' ident ';' int ')'
//!         | 'cos(' ident ')' | 'sin(' ident ')' | '(' expr ')'
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;

use super::chart::{ChartRef, CoordKind};
use super::ring::RingElement;
use super::scalar::{frac, imag_unit, real, Scalar};
use super::ExprError;

pub fn parse_expr(src: &str, chart: &ChartRef) -> Result<RingElement, ExprError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        chart,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    chart: &'a ChartRef,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> ExprError {
        ExprError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<RingElement, ExprError> {
        let negate_first = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        let first = self.term()?;
        let mut acc = if negate_first { -first } else { first };
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<RingElement, ExprError> {
        let mut acc = self.factor()?;
        while self.eat(b'*') {
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<RingElement, ExprError> {
        let start = self.pos;
        let (base, periodic_coord) = self.atom()?;
        if self.eat(b'^') {
            self.skip_ws();
            let k = self.uint()?;
            if let Some(name) = periodic_coord {
                return Err(ExprError::PeriodicPolynomial(name));
            }
            let k = u32::try_from(k).map_err(|_| self.error("exponent too large"))?;
            return Ok(base.pow(k));
        }
        if let Some(name) = periodic_coord {
            self.pos = start;
            return Err(ExprError::PeriodicPolynomial(name));
        }
        Ok(base)
    }

    fn uint(&mut self) -> Result<u64, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an unsigned integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.error("integer out of range"))
    }

    fn bigint(&mut self) -> Result<BigInt, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected digits"));
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .unwrap())
    }

    fn ident(&mut self) -> Result<String, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos || self.src[start].is_ascii_digit() {
            self.pos = start;
            return Err(self.error("expected an identifier"));
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .to_string())
    }

    fn coord_of_kind(&self, name: &str, kind: CoordKind) -> Result<usize, ExprError> {
        let idx = self.chart.require_index(name)?;
        if self.chart.kind(idx) != kind {
            return Err(match kind {
                CoordKind::Periodic => ExprError::ExpOnAffine(name.to_string()),
                CoordKind::Affine => ExprError::PeriodicPolynomial(name.to_string()),
            });
        }
        Ok(idx)
    }

    /// Returns the atom and, for a bare periodic identifier, its name so the
    /// caller can reject it with a proper error.
    fn atom(&mut self) -> Result<(RingElement, Option<String>), ExprError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok((e, None))
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.bigint()?;
                let den = if self.peek() == Some(b'/') {
                    self.pos += 1;
                    self.skip_ws();
                    let d = self.bigint()?;
                    if d == BigInt::from(0) {
                        return Err(self.error("zero denominator"));
                    }
                    d
                } else {
                    BigInt::from(1)
                };
                let value: Scalar = real(BigRational::new(num, den));
                Ok((RingElement::constant(self.chart, value), None))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                let name = self.ident()?;
                match name.as_str() {
                    "I" => Ok((RingElement::constant(self.chart, imag_unit()), None)),
                    "E" => {
                        self.expect(b'(')?;
                        let coord = self.ident()?;
                        let idx = self.coord_of_kind(&coord, CoordKind::Periodic)?;
                        self.expect(b';')?;
                        let negative = self.eat(b'-');
                        self.skip_ws();
                        let k = self.uint()? as i64;
                        self.expect(b')')?;
                        let freq = if negative { -k } else { k };
                        Ok((RingElement::exp(self.chart, idx, freq)?, None))
                    }
                    "cos" | "sin" => {
                        self.expect(b'(')?;
                        let coord = self.ident()?;
                        let idx = self.coord_of_kind(&coord, CoordKind::Periodic)?;
                        self.expect(b')')?;
                        let plus = RingElement::exp(self.chart, idx, 1)?;
                        let minus = RingElement::exp(self.chart, idx, -1)?;
                        let e = if name == "cos" {
                            (&plus + &minus).scale(&frac(1, 2))
                        } else {
                            // (e^{iy} - e^{-iy}) / (2i) = -i/2 e^{iy} + i/2 e^{-iy}
                            (&plus - &minus).scale(&(-imag_unit() * frac(1, 2)))
                        };
                        Ok((e, None))
                    }
                    _ => {
                        let idx = match self.chart.index_of(&name) {
                            Some(i) => i,
                            None => {
                                self.pos = start;
                                return Err(ExprError::UnknownCoord(name));
                            }
                        };
                        match self.chart.kind(idx) {
                            CoordKind::Affine => Ok((RingElement::coord(self.chart, idx)?, None)),
                            CoordKind::Periodic => Ok((RingElement::zero(self.chart), Some(name))),
                        }
                    }
                }
            }
            Some(_) => Err(self.error("unexpected character")),
        }
    }
}
