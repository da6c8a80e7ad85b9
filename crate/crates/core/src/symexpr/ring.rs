use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

use super::chart::{same_chart, ChartRef, CoordKind, CoordValue, EvalPoint};
use super::scalar::{format_scalar, i_pow, imag_unit, int, Scalar};
use super::ExprError;

/// Exponent vector: polynomial degree on affine coordinates, Fourier
/// frequency on periodic ones.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub(crate) Vec<i64>);

impl Monomial {
    pub fn one(dim: usize) -> Self {
        Monomial(vec![0; dim])
    }

    pub fn exponents(&self) -> &[i64] {
        &self.0
    }

    fn times(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn conj(&self, chart: &ChartRef) -> Monomial {
        Monomial(
            self.0
                .iter()
                .enumerate()
                .map(|(i, &e)| match chart.kind(i) {
                    CoordKind::Affine => e,
                    CoordKind::Periodic => -e,
                })
                .collect(),
        )
    }

    fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }
}

/// Exact function on a chart: a finite sum of Gaussian-rational multiples of
/// `Π x_a^{d_a} · e^{i Σ k_p y_p}`. Zero coefficients are never stored, so
/// structural equality is mathematical equality.
#[derive(Clone)]
pub struct RingElement {
    chart: ChartRef,
    terms: BTreeMap<Monomial, Scalar>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingOp {
    Add,
    Mul,
    Neg,
    Conj,
}

impl RingElement {
    pub fn zero(chart: &ChartRef) -> Self {
        RingElement {
            chart: chart.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(chart: &ChartRef, c: Scalar) -> Self {
        let mut e = RingElement::zero(chart);
        if !c.is_zero() {
            e.terms.insert(Monomial::one(chart.dim()), c);
        }
        e
    }

    pub fn one(chart: &ChartRef) -> Self {
        RingElement::constant(chart, int(1))
    }

    pub fn from_int(chart: &ChartRef, v: i64) -> Self {
        RingElement::constant(chart, int(v))
    }

    /// The coordinate function `x` of an affine coordinate.
    pub fn coord(chart: &ChartRef, idx: usize) -> Result<Self, ExprError> {
        if chart.kind(idx) != CoordKind::Affine {
            return Err(ExprError::PeriodicPolynomial(chart.name(idx).to_string()));
        }
        let mut m = Monomial::one(chart.dim());
        m.0[idx] = 1;
        Ok(RingElement::from_term(chart, m, int(1)))
    }

    /// `e^{i k y}` for a periodic coordinate `y`.
    pub fn exp(chart: &ChartRef, idx: usize, freq: i64) -> Result<Self, ExprError> {
        if chart.kind(idx) != CoordKind::Periodic {
            return Err(ExprError::ExpOnAffine(chart.name(idx).to_string()));
        }
        let mut m = Monomial::one(chart.dim());
        m.0[idx] = freq;
        Ok(RingElement::from_term(chart, m, int(1)))
    }

    pub fn from_term(chart: &ChartRef, mono: Monomial, c: Scalar) -> Self {
        assert_eq!(
            mono.0.len(),
            chart.dim(),
            "monomial length must match chart dimension"
        );
        let mut e = RingElement::zero(chart);
        if !c.is_zero() {
            e.terms.insert(mono, c);
        }
        e
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Returns the value if the element has no non-constant terms.
    pub fn as_constant(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(Scalar::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_constant().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// A single term that involves no affine coordinate: a unit of the ring.
    pub fn as_unit(&self) -> Option<(Monomial, Scalar)> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next().unwrap();
        let affine_free =
            m.0.iter()
                .enumerate()
                .all(|(i, &e)| e == 0 || self.chart.kind(i) == CoordKind::Periodic);
        affine_free.then(|| (m.clone(), c.clone()))
    }

    /// Inverse of a unit `c·e^{ik·y}`.
    pub fn unit_inverse(&self) -> Option<RingElement> {
        let (m, c) = self.as_unit()?;
        let inv_m = Monomial(m.0.iter().map(|e| -e).collect());
        Some(RingElement::from_term(&self.chart, inv_m, int(1) / c))
    }

    fn check_chart(&self, other: &RingElement) -> Result<(), ExprError> {
        if same_chart(&self.chart, &other.chart) {
            Ok(())
        } else {
            Err(ExprError::ChartMismatch)
        }
    }

    fn accumulate(terms: &mut BTreeMap<Monomial, Scalar>, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn try_add(&self, other: &RingElement) -> Result<RingElement, ExprError> {
        self.check_chart(other)?;
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            Self::accumulate(&mut terms, m.clone(), c.clone());
        }
        Ok(RingElement {
            chart: self.chart.clone(),
            terms,
        })
    }

    pub fn try_mul(&self, other: &RingElement) -> Result<RingElement, ExprError> {
        self.check_chart(other)?;
        let mut terms = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                Self::accumulate(&mut terms, ma.times(mb), ca * cb);
            }
        }
        Ok(RingElement {
            chart: self.chart.clone(),
            terms,
        })
    }

    pub fn scale(&self, s: &Scalar) -> RingElement {
        if s.is_zero() {
            return RingElement::zero(&self.chart);
        }
        RingElement {
            chart: self.chart.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> RingElement {
        let mut acc = RingElement::one(&self.chart);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Complex conjugation: `i ↦ −i`, `e^{iky} ↦ e^{−iky}`.
    pub fn conj(&self) -> RingElement {
        RingElement {
            chart: self.chart.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.conj(&self.chart), c.conj()))
                .collect(),
        }
    }

    pub fn is_real(&self) -> bool {
        self.conj() == *self
    }

    pub fn partial(&self, idx: usize) -> RingElement {
        assert!(idx < self.chart.dim(), "coordinate index out of range");
        let kind = self.chart.kind(idx);
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.0[idx];
            if e == 0 {
                continue;
            }
            match kind {
                CoordKind::Affine => {
                    let mut nm = m.clone();
                    nm.0[idx] -= 1;
                    Self::accumulate(&mut terms, nm, c * int(e));
                }
                CoordKind::Periodic => {
                    Self::accumulate(&mut terms, m.clone(), c * imag_unit() * int(e));
                }
            }
        }
        RingElement {
            chart: self.chart.clone(),
            terms,
        }
    }

    pub fn partial_by_name(&self, name: &str) -> Result<RingElement, ExprError> {
        Ok(self.partial(self.chart.require_index(name)?))
    }

    pub fn evaluate(&self, p: &EvalPoint) -> Result<Scalar, ExprError> {
        if p.values().len() != self.chart.dim() {
            return Err(ExprError::MissingCoordinate(
                "point does not cover the chart".into(),
            ));
        }
        let mut total = Scalar::zero();
        for (m, c) in &self.terms {
            let mut value = c.clone();
            let mut quarter = 0i64;
            for (e, v) in m.0.iter().zip(p.values()) {
                if *e == 0 {
                    continue;
                }
                match v {
                    CoordValue::Affine(r) => {
                        let pw: BigRational = Pow::pow(r.clone(), *e as u64);
                        value *= Scalar::new(pw, BigRational::zero());
                    }
                    CoordValue::QuarterTurns(q) => quarter += (e * q).rem_euclid(4),
                }
            }
            total += value * i_pow(quarter);
        }
        Ok(total)
    }

    /// Replaces every term by its image under `f` and sums. Used by pullbacks.
    pub(crate) fn map_terms<F>(&self, target: &ChartRef, mut f: F) -> RingElement
    where
        F: FnMut(&Monomial) -> RingElement,
    {
        let mut acc = RingElement::zero(target);
        for (m, c) in &self.terms {
            acc = &acc + &f(m).scale(c);
        }
        acc
    }
}

/// The ring operation dispatcher used by scenario tooling.
pub fn ring_arith(a: &RingElement, b: &RingElement, op: RingOp) -> Result<RingElement, ExprError> {
    match op {
        RingOp::Add => a.try_add(b),
        RingOp::Mul => a.try_mul(b),
        RingOp::Neg => {
            a.check_chart(b)?;
            Ok(-a)
        }
        RingOp::Conj => {
            a.check_chart(b)?;
            Ok(a.conj())
        }
    }
}

impl PartialEq for RingElement {
    fn eq(&self, other: &Self) -> bool {
        same_chart(&self.chart, &other.chart) && self.terms == other.terms
    }
}

impl Eq for RingElement {}

impl std::hash::Hash for RingElement {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        for (m, c) in &self.terms {
            m.hash(state);
            c.re.hash(state);
            c.im.hash(state);
        }
    }
}

impl<'a> Add<&'a RingElement> for &'a RingElement {
    type Output = RingElement;
    fn add(self, rhs: &RingElement) -> RingElement {
        self.try_add(rhs)
            .expect("ring elements on different charts")
    }
}

impl<'a> Sub<&'a RingElement> for &'a RingElement {
    type Output = RingElement;
    fn sub(self, rhs: &RingElement) -> RingElement {
        self.try_add(&-rhs)
            .expect("ring elements on different charts")
    }
}

impl<'a> Mul<&'a RingElement> for &'a RingElement {
    type Output = RingElement;
    fn mul(self, rhs: &RingElement) -> RingElement {
        self.try_mul(rhs)
            .expect("ring elements on different charts")
    }
}

impl Neg for &RingElement {
    type Output = RingElement;
    fn neg(self) -> RingElement {
        self.scale(&int(-1))
    }
}

impl Add for RingElement {
    type Output = RingElement;
    fn add(self, rhs: RingElement) -> RingElement {
        &self + &rhs
    }
}

impl Sub for RingElement {
    type Output = RingElement;
    fn sub(self, rhs: RingElement) -> RingElement {
        &self - &rhs
    }
}

impl Mul for RingElement {
    type Output = RingElement;
    fn mul(self, rhs: RingElement) -> RingElement {
        &self * &rhs
    }
}

impl Neg for RingElement {
    type Output = RingElement;
    fn neg(self) -> RingElement {
        -&self
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let factors = format_monomial(&self.chart, m);
            // Pull a leading minus out of real and purely imaginary coefficients.
            let negative = (c.im.is_zero() && c.re < BigRational::zero())
                || (c.re.is_zero() && c.im < BigRational::zero());
            let mag = if negative { -c.clone() } else { c.clone() };
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let coef = format_scalar(&mag);
            match (factors.is_empty(), mag.is_one()) {
                (true, _) => f.write_str(&coef)?,
                (false, true) => f.write_str(&factors)?,
                (false, false) => write!(f, "{coef}*{factors}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingElement({self})")
    }
}

fn format_monomial(chart: &ChartRef, m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (i, &e) in m.0.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let name = chart.name(i);
        match chart.kind(i) {
            CoordKind::Affine if e == 1 => parts.push(name.to_string()),
            CoordKind::Affine => parts.push(format!("{name}^{e}")),
            CoordKind::Periodic => parts.push(format!("E({name};{e})")),
        }
    }
    parts.join("*")
}
