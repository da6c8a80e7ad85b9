//! Exterior calculus over the chart function ring.
//!
//! Forms are stored sparsely on strictly increasing index tuples; every
//! constructor funnels through [`DiffForm::insert_sorted`], which owns the
//! sign bookkeeping for reordering.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::symexpr::scalar::{i_pow, int, Scalar};
use crate::symexpr::{ChartRef, CoordKind, ExprError, RingElement};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalculusError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("expected a form of degree {expected}, got {found}")]
    WrongDegree { expected: usize, found: usize },
    #[error("degree {0} exceeds the chart dimension")]
    DegreeTooLarge(usize),
    #[error("index {0} out of range")]
    BadIndex(usize),
    #[error("vector field has {found} components, chart has dimension {expected}")]
    ComponentCount { expected: usize, found: usize },
    #[error("invalid chart map: {0}")]
    InvalidChartMap(String),
}

#[derive(Clone, PartialEq, Eq)]
pub struct VectorField {
    chart: ChartRef,
    comps: Vec<RingElement>,
}

impl VectorField {
    pub fn new(chart: &ChartRef, comps: Vec<RingElement>) -> Result<Self, CalculusError> {
        if comps.len() != chart.dim() {
            return Err(CalculusError::ComponentCount {
                expected: chart.dim(),
                found: comps.len(),
            });
        }
        if comps
            .iter()
            .any(|c| c.chart() != chart && **c.chart() != **chart)
        {
            return Err(ExprError::ChartMismatch.into());
        }
        Ok(VectorField {
            chart: chart.clone(),
            comps,
        })
    }

    pub fn zero(chart: &ChartRef) -> Self {
        VectorField {
            chart: chart.clone(),
            comps: vec![RingElement::zero(chart); chart.dim()],
        }
    }

    /// The coordinate field `∂/∂x_idx`.
    pub fn coordinate(chart: &ChartRef, idx: usize) -> Self {
        let mut v = VectorField::zero(chart);
        v.comps[idx] = RingElement::one(chart);
        v
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn comps(&self) -> &[RingElement] {
        &self.comps
    }

    pub fn comp(&self, idx: usize) -> &RingElement {
        &self.comps[idx]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(RingElement::is_zero)
    }

    /// Directional derivative `X(f)`.
    pub fn apply(&self, f: &RingElement) -> RingElement {
        let mut acc = RingElement::zero(&self.chart);
        for (j, c) in self.comps.iter().enumerate() {
            if !c.is_zero() {
                acc = &acc + &(c * &f.partial(j));
            }
        }
        acc
    }

    pub fn scale(&self, f: &RingElement) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            comps: self.comps.iter().map(|c| c * f).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a + b)
            .collect();
        VectorField {
            chart: self.chart.clone(),
            comps,
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a - b)
            .collect();
        VectorField {
            chart: self.chart.clone(),
            comps,
        }
    }

    pub fn conj(&self) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            comps: self.comps.iter().map(|c| c.conj()).collect(),
        }
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| format!("({c})*d/d{}", self.chart.name(j)))
            .collect();
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

/// `[X, Y]^j = X(Y^j) − Y(X^j)`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> VectorField {
    let comps = (0..x.chart.dim())
        .map(|j| &x.apply(&y.comps[j]) - &y.apply(&x.comps[j]))
        .collect();
    VectorField {
        chart: x.chart.clone(),
        comps,
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct DiffForm {
    chart: ChartRef,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, RingElement>,
}

/// Sorts `idx` in place and returns the permutation sign, or `None` when an
/// index repeats.
fn sort_with_sign(idx: &mut [usize]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

impl DiffForm {
    pub fn zero(chart: &ChartRef, degree: usize) -> Self {
        DiffForm {
            chart: chart.clone(),
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    /// A function regarded as a 0-form.
    pub fn function(f: &RingElement) -> Self {
        let mut form = DiffForm::zero(f.chart(), 0);
        form.insert_sorted(vec![], f.clone());
        form
    }

    /// `dx_idx`.
    pub fn coordinate(chart: &ChartRef, idx: usize) -> Self {
        let mut form = DiffForm::zero(chart, 1);
        form.insert_sorted(vec![idx], RingElement::one(chart));
        form
    }

    /// Builds a form from `(index tuple, coefficient)` pairs in any order;
    /// reordering signs and repeated indices are resolved here.
    pub fn from_terms(
        chart: &ChartRef,
        degree: usize,
        terms: impl IntoIterator<Item = (Vec<usize>, RingElement)>,
    ) -> Result<Self, CalculusError> {
        if degree > chart.dim() {
            return Err(CalculusError::DegreeTooLarge(degree));
        }
        let mut form = DiffForm::zero(chart, degree);
        for (mut idx, c) in terms {
            if idx.len() != degree {
                return Err(CalculusError::WrongDegree {
                    expected: degree,
                    found: idx.len(),
                });
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= chart.dim()) {
                return Err(CalculusError::BadIndex(bad));
            }
            if **c.chart() != **chart {
                return Err(ExprError::ChartMismatch.into());
            }
            if let Some(sign) = sort_with_sign(&mut idx) {
                form.insert_sorted(idx, c.scale(&int(sign)));
            }
        }
        Ok(form)
    }

    fn insert_sorted(&mut self, idx: Vec<usize>, c: RingElement) {
        if c.is_zero() {
            return;
        }
        let sum = match self.coeffs.remove(&idx) {
            Some(old) => &old + &c,
            None => c,
        };
        if !sum.is_zero() {
            self.coeffs.insert(idx, sum);
        }
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &RingElement)> {
        self.coeffs.iter()
    }

    /// Coefficient on an increasing index tuple.
    pub fn coeff(&self, idx: &[usize]) -> RingElement {
        self.coeffs
            .get(idx)
            .cloned()
            .unwrap_or_else(|| RingElement::zero(&self.chart))
    }

    /// Value on coordinate fields in the given (not necessarily sorted) order.
    pub fn component(&self, idx: &[usize]) -> RingElement {
        let mut sorted = idx.to_vec();
        match sort_with_sign(&mut sorted) {
            Some(sign) => self.coeff(&sorted).scale(&int(sign)),
            None => RingElement::zero(&self.chart),
        }
    }

    /// The 0-form's function (zero for the empty form).
    pub fn as_function(&self) -> RingElement {
        assert_eq!(self.degree, 0);
        self.coeff(&[])
    }

    pub fn expect_degree(&self, degree: usize) -> Result<(), CalculusError> {
        if self.degree == degree {
            Ok(())
        } else {
            Err(CalculusError::WrongDegree {
                expected: degree,
                found: self.degree,
            })
        }
    }

    pub fn add(&self, other: &DiffForm) -> DiffForm {
        assert_eq!(
            self.degree, other.degree,
            "adding forms of different degree"
        );
        let mut out = self.clone();
        for (idx, c) in &other.coeffs {
            out.insert_sorted(idx.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &DiffForm) -> DiffForm {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> DiffForm {
        self.scale(&int(-1))
    }

    pub fn scale(&self, s: &Scalar) -> DiffForm {
        self.map_coeffs(|c| c.scale(s))
    }

    pub fn mul_fn(&self, f: &RingElement) -> DiffForm {
        self.map_coeffs(|c| c * f)
    }

    pub fn conj(&self) -> DiffForm {
        self.map_coeffs(RingElement::conj)
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.values().all(RingElement::is_real)
    }

    fn map_coeffs(&self, f: impl Fn(&RingElement) -> RingElement) -> DiffForm {
        let mut out = DiffForm::zero(&self.chart, self.degree);
        for (idx, c) in &self.coeffs {
            out.insert_sorted(idx.clone(), f(c));
        }
        out
    }

    /// Evaluates the 1-form on a vector field.
    pub fn pair(&self, x: &VectorField) -> RingElement {
        assert_eq!(self.degree, 1);
        interior(x, self).as_function()
    }
}

impl fmt::Display for DiffForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(idx, c)| {
                let basis: Vec<String> = idx
                    .iter()
                    .map(|&i| format!("d{}", self.chart.name(i)))
                    .collect();
                if basis.is_empty() {
                    format!("({c})")
                } else {
                    format!("({c})*{}", basis.join("^"))
                }
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

impl fmt::Debug for DiffForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub fn wedge(a: &DiffForm, b: &DiffForm) -> DiffForm {
    let degree = a.degree + b.degree;
    let mut out = DiffForm::zero(&a.chart, degree);
    if degree > a.chart.dim() {
        return out;
    }
    for (ia, ca) in &a.coeffs {
        for (ib, cb) in &b.coeffs {
            let mut idx: Vec<usize> = ia.iter().chain(ib).copied().collect();
            if let Some(sign) = sort_with_sign(&mut idx) {
                out.insert_sorted(idx, (ca * cb).scale(&int(sign)));
            }
        }
    }
    out
}

/// `d(f dx_I) = Σ_j ∂_j f dx_j ∧ dx_I`.
pub fn exterior_d(a: &DiffForm) -> DiffForm {
    let n = a.chart.dim();
    let mut out = DiffForm::zero(&a.chart, a.degree + 1);
    if a.degree >= n {
        return out;
    }
    for (idx, c) in &a.coeffs {
        for j in 0..n {
            if idx.contains(&j) {
                continue;
            }
            let dc = c.partial(j);
            if dc.is_zero() {
                continue;
            }
            let mut full = Vec::with_capacity(idx.len() + 1);
            full.push(j);
            full.extend_from_slice(idx);
            let sign = sort_with_sign(&mut full).expect("distinct indices");
            out.insert_sorted(full, dc.scale(&int(sign)));
        }
    }
    out
}

/// Contraction into the first slot.
pub fn interior(x: &VectorField, a: &DiffForm) -> DiffForm {
    if a.degree == 0 {
        return DiffForm::zero(&a.chart, 0);
    }
    let mut out = DiffForm::zero(&a.chart, a.degree - 1);
    for (idx, c) in &a.coeffs {
        for (pos, &j) in idx.iter().enumerate() {
            let xj = &x.comps[j];
            if xj.is_zero() {
                continue;
            }
            let sign = if pos % 2 == 0 { 1 } else { -1 };
            let mut rest = idx.clone();
            rest.remove(pos);
            out.insert_sorted(rest, (c * xj).scale(&int(sign)));
        }
    }
    out
}

/// Lie derivative through the Cartan formula `L_X = d ι_X + ι_X d`.
pub fn lie_derivative(x: &VectorField, a: &DiffForm) -> DiffForm {
    let first = exterior_d(&interior(x, a));
    let second = interior(x, &exterior_d(a));
    if a.degree == 0 {
        // d ι_X of a function is the zero 1-form; keep the degree at 0.
        return second;
    }
    first.add(&second)
}

/// Image of one target coordinate under a chart map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoordImage {
    /// Affine target coordinate given by a ring element on the source chart.
    Function(RingElement),
    /// Periodic target coordinate `y = s + q·π/2` for a periodic source coordinate `s`.
    Shift { source: usize, quarter_turns: i64 },
}

/// A map of charts `φ: source → target`, specified by the pullbacks of the
/// target coordinates.
#[derive(Clone, Debug)]
pub struct ChartMap {
    source: ChartRef,
    target: ChartRef,
    images: Vec<CoordImage>,
}

impl ChartMap {
    pub fn new(
        source: &ChartRef,
        target: &ChartRef,
        images: Vec<CoordImage>,
    ) -> Result<Self, CalculusError> {
        if images.len() != target.dim() {
            return Err(CalculusError::InvalidChartMap(format!(
                "{} images for a target of dimension {}",
                images.len(),
                target.dim()
            )));
        }
        for (j, img) in images.iter().enumerate() {
            match (target.kind(j), img) {
                (CoordKind::Affine, CoordImage::Function(f)) => {
                    if **f.chart() != **source {
                        return Err(CalculusError::InvalidChartMap(format!(
                            "image of {} is not on the source chart",
                            target.name(j)
                        )));
                    }
                }
                (CoordKind::Periodic, CoordImage::Shift { source: s, .. }) => {
                    if *s >= source.dim() || source.kind(*s) != CoordKind::Periodic {
                        return Err(CalculusError::InvalidChartMap(format!(
                            "periodic coordinate {} must map to a periodic source coordinate plus a constant",
                            target.name(j)
                        )));
                    }
                }
                (CoordKind::Periodic, CoordImage::Function(_)) => {
                    return Err(CalculusError::InvalidChartMap(format!(
                        "periodic coordinate {} must map to a periodic source coordinate plus a constant",
                        target.name(j)
                    )));
                }
                (CoordKind::Affine, CoordImage::Shift { .. }) => {
                    return Err(CalculusError::InvalidChartMap(format!(
                        "affine coordinate {} cannot map to an angle",
                        target.name(j)
                    )));
                }
            }
        }
        Ok(ChartMap {
            source: source.clone(),
            target: target.clone(),
            images,
        })
    }

    pub fn source(&self) -> &ChartRef {
        &self.source
    }

    pub fn target(&self) -> &ChartRef {
        &self.target
    }

    /// Ring homomorphism `f ↦ f ∘ φ`.
    pub fn pullback_fn(&self, f: &RingElement) -> Result<RingElement, CalculusError> {
        if **f.chart() != *self.target {
            return Err(ExprError::ChartMismatch.into());
        }
        let src = &self.source;
        Ok(f.map_terms(src, |mono| {
            let mut acc = RingElement::one(src);
            for (j, &e) in mono.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                match &self.images[j] {
                    CoordImage::Function(g) => acc = &acc * &g.pow(e as u32),
                    CoordImage::Shift {
                        source,
                        quarter_turns,
                    } => {
                        let phase = i_pow(e * quarter_turns);
                        let ex =
                            RingElement::exp(src, *source, e).expect("validated periodic source");
                        acc = &acc * &ex.scale(&phase);
                    }
                }
            }
            acc
        }))
    }

    fn pullback_coordinate_differential(&self, j: usize) -> DiffForm {
        match &self.images[j] {
            CoordImage::Function(g) => exterior_d(&DiffForm::function(g)),
            CoordImage::Shift { source, .. } => DiffForm::coordinate(&self.source, *source),
        }
    }
}

/// `φ*(Σ c_I dx_I) = Σ φ*(c_I) dφ^{i_1} ∧ … ∧ dφ^{i_k}`.
pub fn pullback(phi: &ChartMap, a: &DiffForm) -> Result<DiffForm, CalculusError> {
    if **a.chart() != *phi.target {
        return Err(ExprError::ChartMismatch.into());
    }
    let differentials: Vec<DiffForm> = (0..phi.target.dim())
        .map(|j| phi.pullback_coordinate_differential(j))
        .collect();
    let mut out = DiffForm::zero(&phi.source, a.degree);
    for (idx, c) in &a.coeffs {
        let mut term = DiffForm::function(&phi.pullback_fn(c)?);
        for &j in idx {
            term = wedge(&term, &differentials[j]);
        }
        out = out.add(&term);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::scalar::imag_unit;
    use crate::symexpr::{parse_expr, Chart, CoordKind::*};

    fn chart3() -> ChartRef {
        Chart::from_spec(&[("x", Affine), ("y", Affine), ("z", Affine)]).unwrap()
    }

    fn e(src: &str, c: &ChartRef) -> RingElement {
        parse_expr(src, c).unwrap()
    }

    fn form(c: &ChartRef, deg: usize, terms: &[(&[usize], &str)]) -> DiffForm {
        DiffForm::from_terms(c, deg, terms.iter().map(|(i, s)| (i.to_vec(), e(s, c)))).unwrap()
    }

    fn dx(c: &ChartRef, i: usize) -> DiffForm {
        DiffForm::coordinate(c, i)
    }

    fn field(c: &ChartRef, comps: &[&str]) -> VectorField {
        VectorField::new(c, comps.iter().map(|s| e(s, c)).collect()).unwrap()
    }

    #[test]
    fn wedge_examples() {
        let c = chart3();
        assert_eq!(
            wedge(&dx(&c, 0), &dx(&c, 1)),
            form(&c, 2, &[(&[0, 1], "1")])
        );
        assert!(wedge(&dx(&c, 0), &dx(&c, 0)).is_zero());
        let xdy = form(&c, 1, &[(&[1], "x")]);
        assert_eq!(wedge(&xdy, &dx(&c, 2)), form(&c, 2, &[(&[1, 2], "x")]));
        assert_eq!(
            wedge(&dx(&c, 1), &dx(&c, 0)),
            form(&c, 2, &[(&[0, 1], "-1")])
        );
    }

    #[test]
    fn from_terms_resolves_order_and_repeats() {
        let c = chart3();
        assert_eq!(
            form(&c, 2, &[(&[1, 0], "1")]),
            form(&c, 2, &[(&[0, 1], "-1")])
        );
        assert!(form(&c, 2, &[(&[2, 2], "x")]).is_zero());
        assert!(DiffForm::from_terms(&c, 4, vec![]).is_err());
        assert!(DiffForm::from_terms(&c, 1, vec![(vec![5], e("1", &c))]).is_err());
    }

    #[test]
    fn exterior_d_examples() {
        let c = chart3();
        assert_eq!(
            exterior_d(&form(&c, 1, &[(&[1], "x")])),
            form(&c, 2, &[(&[0, 1], "1")])
        );
        assert!(exterior_d(&form(&c, 2, &[(&[0, 1], "1")])).is_zero());
        let cy = Chart::from_spec(&[("x", Affine), ("y", Periodic)]).unwrap();
        let a = DiffForm::from_terms(&cy, 1, vec![(vec![0], e("E(y;1)", &cy))]).unwrap();
        let expected =
            DiffForm::from_terms(&cy, 2, vec![(vec![0, 1], e("-I*E(y;1)", &cy))]).unwrap();
        assert_eq!(exterior_d(&a), expected);
    }

    #[test]
    fn interior_examples() {
        let c = chart3();
        let dxdy = form(&c, 2, &[(&[0, 1], "1")]);
        let px = VectorField::coordinate(&c, 0);
        let py = VectorField::coordinate(&c, 1);
        let pz = VectorField::coordinate(&c, 2);
        assert_eq!(interior(&px, &dxdy), dx(&c, 1));
        assert!(interior(&pz, &dxdy).is_zero());
        let vol = form(&c, 3, &[(&[0, 1, 2], "1")]);
        assert_eq!(interior(&py, &interior(&px, &vol)), dx(&c, 2));
    }

    #[test]
    fn lie_derivative_examples() {
        let c = chart3();
        let px = VectorField::coordinate(&c, 0);
        assert_eq!(lie_derivative(&px, &form(&c, 1, &[(&[0], "x")])), dx(&c, 0));
        assert!(lie_derivative(&px, &dx(&c, 1)).is_zero());
        let x_py = field(&c, &["0", "x", "0"]);
        assert_eq!(lie_derivative(&x_py, &dx(&c, 1)), dx(&c, 0));
        let f = DiffForm::function(&e("x*y", &c));
        assert_eq!(lie_derivative(&x_py, &f).as_function(), e("x^2", &c));
    }

    #[test]
    fn lie_bracket_examples() {
        let c = chart3();
        let px = VectorField::coordinate(&c, 0);
        let py = VectorField::coordinate(&c, 1);
        assert!(lie_bracket(&px, &py).is_zero());
        assert_eq!(lie_bracket(&px, &field(&c, &["0", "x", "0"])), py);
        let rot = field(&c, &["-y", "x", "0"]);
        assert!(lie_bracket(&rot, &rot).is_zero());
    }

    #[test]
    fn pullback_examples() {
        let target = Chart::from_spec(&[("x", Affine), ("y", Affine)]).unwrap();
        let line = Chart::from_spec(&[("t", Affine)]).unwrap();
        let incl = ChartMap::new(
            &line,
            &target,
            vec![
                CoordImage::Function(e("t", &line)),
                CoordImage::Function(e("0", &line)),
            ],
        )
        .unwrap();
        assert_eq!(pullback(&incl, &dx(&target, 0)).unwrap(), dx(&line, 0));

        let plane = Chart::from_spec(&[("s", Affine), ("t", Affine)]).unwrap();
        let lin = ChartMap::new(
            &plane,
            &target,
            vec![
                CoordImage::Function(e("s+t", &plane)),
                CoordImage::Function(e("s-t", &plane)),
            ],
        )
        .unwrap();
        let dydx = DiffForm::from_terms(&target, 2, vec![(vec![1, 0], e("1", &target))]).unwrap();
        // (ds - dt)∧(ds + dt) = 2 ds∧dt
        let expected = DiffForm::from_terms(&plane, 2, vec![(vec![0, 1], e("2", &plane))]).unwrap();
        assert_eq!(pullback(&lin, &dydx).unwrap(), expected);

        let a = form(&target, 1, &[(&[1], "x")]);
        assert_eq!(
            pullback(&lin, &exterior_d(&a)).unwrap(),
            exterior_d(&pullback(&lin, &a).unwrap())
        );
    }

    #[test]
    fn periodic_shift_pullback_is_exact() {
        let circle = Chart::from_spec(&[("y", Periodic)]).unwrap();
        let src = Chart::from_spec(&[("s", Periodic)]).unwrap();
        let shift = ChartMap::new(
            &src,
            &circle,
            vec![CoordImage::Shift {
                source: 0,
                quarter_turns: 1,
            }],
        )
        .unwrap();
        // e^{i(s + π/2)} = i e^{is}
        assert_eq!(
            shift.pullback_fn(&e("E(y;1)", &circle)).unwrap(),
            e("E(s;1)", &src).scale(&imag_unit())
        );
        let bad = ChartMap::new(
            &src,
            &circle,
            vec![CoordImage::Function(RingElement::zero(&src))],
        );
        assert!(matches!(bad, Err(CalculusError::InvalidChartMap(_))));
    }
}
