//! Torus actions, the Cartan model and twisted moment maps.
//!
//! Only tori act, so equivariance of a moment map reduces to invariance and
//! the Cartan differential is `d_G(ω ⊗ u^d) = dω ⊗ u^d − Σ_i ι_{ξ_i}ω ⊗ u^{d+e_i}`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::calculus::{
    exterior_d, interior, lie_bracket, lie_derivative, wedge, CalculusError, DiffForm, VectorField,
};
use crate::genstruct::{check_algebraic, check_integrable, GenError, GenSection, GenStructure};
use crate::linalg::Matrix;
use crate::symexpr::scalar::imag_unit;
use crate::symexpr::{ChartRef, EvalPoint, ExprError, RingElement};

/// Largest polynomial degree accepted by [`cartan_d`].
pub const MAX_POLY_DEGREE: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("generators {0} and {1} do not commute")]
    NonCommuting(usize, usize),
    #[error("not invariant: {0}")]
    NonInvariant(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("polynomial degree {0} exceeds the cap")]
    DegreeCap(u32),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("postcondition violated: {0}")]
    Postcondition(String),
}

impl From<CalculusError> for EquivError {
    fn from(e: CalculusError) -> Self {
        EquivError::Gen(e.into())
    }
}

impl From<ExprError> for EquivError {
    fn from(e: ExprError) -> Self {
        EquivError::Gen(e.into())
    }
}

/// Action of a torus `T^k` through commuting fundamental fields.
#[derive(Clone, Debug)]
pub struct TorusAction {
    chart: ChartRef,
    generators: Vec<VectorField>,
}

impl TorusAction {
    pub fn new(chart: &ChartRef, generators: Vec<VectorField>) -> Result<Self, EquivError> {
        for g in &generators {
            if **g.chart() != **chart {
                return Err(GenError::ChartMismatch.into());
            }
        }
        for i in 0..generators.len() {
            for j in i + 1..generators.len() {
                if !lie_bracket(&generators[i], &generators[j]).is_zero() {
                    return Err(EquivError::NonCommuting(i, j));
                }
            }
        }
        Ok(TorusAction {
            chart: chart.clone(),
            generators,
        })
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[VectorField] {
        &self.generators
    }

    pub fn generator(&self, i: usize) -> &VectorField {
        &self.generators[i]
    }

    pub fn is_invariant_fn(&self, f: &RingElement) -> bool {
        self.generators.iter().all(|x| x.apply(f).is_zero())
    }

    pub fn is_invariant(&self, a: &DiffForm) -> bool {
        self.generators
            .iter()
            .all(|x| lie_derivative(x, a).is_zero())
    }

    /// Whether the generators are linearly independent at `p`.
    pub fn is_free_at(&self, p: &EvalPoint) -> Result<bool, EquivError> {
        Ok(self.generator_matrix(p)?.rank() == self.rank())
    }

    /// Columns are the generators evaluated at `p`.
    pub fn generator_matrix(&self, p: &EvalPoint) -> Result<Matrix, EquivError> {
        let n = self.chart.dim();
        let mut m = Matrix::zeros(n, self.rank());
        for (j, g) in self.generators.iter().enumerate() {
            for i in 0..n {
                m[(i, j)] = g.comp(i).evaluate(p)?;
            }
        }
        Ok(m)
    }
}

/// Element of `(Ω(M) ⊗ S(𝔤*))^G`, keyed by polynomial multi-degree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EquivariantForm {
    chart: ChartRef,
    rank: usize,
    total_degree: usize,
    comps: BTreeMap<Vec<u32>, DiffForm>,
}

impl EquivariantForm {
    pub fn zero(chart: &ChartRef, rank: usize, total_degree: usize) -> Self {
        EquivariantForm {
            chart: chart.clone(),
            rank,
            total_degree,
            comps: BTreeMap::new(),
        }
    }

    pub fn new(
        chart: &ChartRef,
        rank: usize,
        total_degree: usize,
        comps: impl IntoIterator<Item = (Vec<u32>, DiffForm)>,
    ) -> Result<Self, EquivError> {
        let mut out = EquivariantForm::zero(chart, rank, total_degree);
        for (d, w) in comps {
            out.insert(d, w)?;
        }
        Ok(out)
    }

    /// `H ⊗ 1 + Σ_i α^i ⊗ u_i`.
    pub fn from_twist_and_moment(h: &DiffForm, alpha: &[DiffForm]) -> Result<Self, EquivError> {
        h.expect_degree(3)?;
        let k = alpha.len();
        let mut out = EquivariantForm::zero(h.chart(), k, 3);
        out.insert(vec![0; k], h.clone())?;
        for (i, a) in alpha.iter().enumerate() {
            out.insert(unit_degree(k, i), a.clone())?;
        }
        Ok(out)
    }

    /// A single form with zero polynomial part.
    pub fn from_form(a: &DiffForm, rank: usize) -> Self {
        let mut out = EquivariantForm::zero(a.chart(), rank, a.degree());
        out.insert(vec![0; rank], a.clone())
            .expect("homogeneous by construction");
        out
    }

    fn insert(&mut self, d: Vec<u32>, w: DiffForm) -> Result<(), EquivError> {
        if d.len() != self.rank {
            return Err(EquivError::Shape(format!(
                "multi-degree of length {} for rank {}",
                d.len(),
                self.rank
            )));
        }
        if **w.chart() != *self.chart {
            return Err(GenError::ChartMismatch.into());
        }
        let poly: u32 = d.iter().sum();
        if w.degree() + 2 * poly as usize != self.total_degree {
            return Err(EquivError::Shape(format!(
                "component of form degree {} and polynomial degree {poly} in total degree {}",
                w.degree(),
                self.total_degree
            )));
        }
        if w.is_zero() {
            return Ok(());
        }
        let sum = match self.comps.remove(&d) {
            Some(old) => old.add(&w),
            None => w,
        };
        if !sum.is_zero() {
            self.comps.insert(d, sum);
        }
        Ok(())
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn total_degree(&self) -> usize {
        self.total_degree
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn component(&self, d: &[u32]) -> Option<&DiffForm> {
        self.comps.get(d)
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<u32>, &DiffForm)> {
        self.comps.iter()
    }

    pub fn poly_degree(&self) -> u32 {
        self.comps.keys().map(|d| d.iter().sum()).max().unwrap_or(0)
    }
}

fn unit_degree(k: usize, i: usize) -> Vec<u32> {
    let mut d = vec![0; k];
    d[i] = 1;
    d
}

/// The Cartan differential on invariant cochains.
pub fn cartan_d(
    eta: &EquivariantForm,
    action: &TorusAction,
) -> Result<EquivariantForm, EquivError> {
    if eta.rank != action.rank() {
        return Err(EquivError::Shape(
            "rank mismatch between form and action".into(),
        ));
    }
    if eta.poly_degree() > MAX_POLY_DEGREE {
        return Err(EquivError::DegreeCap(eta.poly_degree()));
    }
    for (d, w) in &eta.comps {
        if !action.is_invariant(w) {
            return Err(EquivError::NonInvariant(format!("component {d:?}")));
        }
    }
    let mut out = EquivariantForm::zero(&eta.chart, eta.rank, eta.total_degree + 1);
    for (d, w) in &eta.comps {
        out.insert(d.clone(), exterior_d(w))?;
        if w.degree() == 0 {
            continue;
        }
        for (i, x) in action.generators.iter().enumerate() {
            let mut up = d.clone();
            up[i] += 1;
            out.insert(up, interior(x, w).neg())?;
        }
    }
    Ok(out)
}

/// Outcome of the three closedness identities for `H + α`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosednessReport {
    pub dh_zero: bool,
    /// Generators with `ι_{ξ_i}H ≠ dα^i`.
    pub contraction_failures: Vec<usize>,
    /// Pairs with `ι_{ξ_i}α^j + ι_{ξ_j}α^i ≠ 0`.
    pub symmetry_failures: Vec<(usize, usize)>,
}

impl ClosednessReport {
    pub fn passed(&self) -> bool {
        self.dh_zero && self.contraction_failures.is_empty() && self.symmetry_failures.is_empty()
    }

    /// The first identity that fails, numbered 1 to 3.
    pub fn first_failure(&self) -> Option<u8> {
        if !self.dh_zero {
            Some(1)
        } else if !self.contraction_failures.is_empty() {
            Some(2)
        } else if !self.symmetry_failures.is_empty() {
            Some(3)
        } else {
            None
        }
    }
}

pub fn is_equivariantly_closed(
    h: &DiffForm,
    alpha: &[DiffForm],
    action: &TorusAction,
) -> Result<ClosednessReport, EquivError> {
    h.expect_degree(3)?;
    if alpha.len() != action.rank() {
        return Err(EquivError::Shape("one moment form per generator".into()));
    }
    let dh_zero = exterior_d(h).is_zero();
    let contraction_failures = (0..action.rank())
        .filter(|&i| interior(action.generator(i), h) != exterior_d(&alpha[i]))
        .collect();
    let mut symmetry_failures = Vec::new();
    for i in 0..action.rank() {
        for j in i..action.rank() {
            let s = interior(action.generator(i), &alpha[j])
                .add(&interior(action.generator(j), &alpha[i]));
            if !s.is_zero() {
                symmetry_failures.push((i, j));
            }
        }
    }
    Ok(ClosednessReport {
        dh_zero,
        contraction_failures,
        symmetry_failures,
    })
}

/// Invariant and horizontal.
pub fn is_basic(a: &DiffForm, action: &TorusAction) -> bool {
    action.is_invariant(a) && action.generators.iter().all(|x| interior(x, a).is_zero())
}

/// Components `f^i` and moment one-forms `α^i`, one per generator.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MomentData {
    f: Vec<RingElement>,
    alpha: Vec<DiffForm>,
}

impl MomentData {
    pub fn new(f: Vec<RingElement>, alpha: Vec<DiffForm>) -> Result<Self, EquivError> {
        if f.len() != alpha.len() {
            return Err(EquivError::Shape(
                "f and α must have one entry per generator".into(),
            ));
        }
        for a in &alpha {
            a.expect_degree(1)?;
        }
        Ok(MomentData { f, alpha })
    }

    pub fn f(&self) -> &[RingElement] {
        &self.f
    }

    pub fn alpha(&self) -> &[DiffForm] {
        &self.alpha
    }

    pub fn rank(&self) -> usize {
        self.f.len()
    }

    /// `df^i`.
    pub fn df(&self) -> Vec<DiffForm> {
        self.f
            .iter()
            .map(|fi| exterior_d(&DiffForm::function(fi)))
            .collect()
    }

    /// `ξ_M + α^ξ − i·df^ξ` for generator `i`.
    pub fn moment_section(&self, action: &TorusAction, i: usize) -> GenSection {
        let form =
            self.alpha[i].sub(&exterior_d(&DiffForm::function(&self.f[i])).scale(&imag_unit()));
        GenSection::new(action.generator(i).clone(), form)
            .expect("degree-1 form on the action chart")
    }
}

/// Outcome of [`check_moment_map`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentReport {
    /// Per generator, nonzero entries of `mat·v − i·v`.
    pub residuals: Vec<Vec<(usize, String)>>,
    pub non_invariant_f: Vec<usize>,
    pub non_invariant_alpha: Vec<usize>,
}

impl MomentReport {
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(Vec::is_empty)
            && self.non_invariant_f.is_empty()
            && self.non_invariant_alpha.is_empty()
    }
}

/// Verifies `ξ_M + α^ξ − i·df^ξ ∈ L` for every generator.
pub fn check_moment_map(
    j: &GenStructure,
    action: &TorusAction,
    md: &MomentData,
    points: &[EvalPoint],
) -> Result<MomentReport, EquivError> {
    if md.rank() != action.rank() {
        return Err(EquivError::Shape(
            "moment data rank differs from the action rank".into(),
        ));
    }
    if !check_algebraic(j).passed() {
        return Err(EquivError::Precondition(
            "structure fails the algebraic check".into(),
        ));
    }
    if !check_integrable(j, points)?.passed() {
        return Err(EquivError::Precondition(
            "structure is not integrable".into(),
        ));
    }
    Ok(moment_residuals(j, action, md))
}

/// The moment-map residuals without re-checking the structure.
pub fn moment_residuals(j: &GenStructure, action: &TorusAction, md: &MomentData) -> MomentReport {
    let i = imag_unit();
    let residuals = (0..action.rank())
        .map(|g| {
            let v = md.moment_section(action, g).to_column();
            let jv = j.mat().mul_col(&v);
            jv.iter()
                .zip(&v)
                .enumerate()
                .filter_map(|(r, (a, b))| {
                    let d = a - &b.scale(&i);
                    (!d.is_zero()).then(|| (r, d.to_string()))
                })
                .collect()
        })
        .collect();
    MomentReport {
        residuals,
        non_invariant_f: (0..md.rank())
            .filter(|&g| !action.is_invariant_fn(&md.f[g]))
            .collect(),
        non_invariant_alpha: (0..md.rank())
            .filter(|&g| !action.is_invariant(&md.alpha[g]))
            .collect(),
    }
}

/// `α'^ξ = α^ξ + B(·, ξ_M)`, the moment data of `e^B J e^{−B}`.
pub fn moment_b_transform(
    b: &DiffForm,
    md: &MomentData,
    action: &TorusAction,
) -> Result<MomentData, EquivError> {
    b.expect_degree(2)?;
    if md.rank() != action.rank() {
        return Err(EquivError::Shape(
            "moment data rank differs from the action rank".into(),
        ));
    }
    if !action.is_invariant(b) {
        return Err(EquivError::NonInvariant("B".into()));
    }
    let alpha = md
        .alpha
        .iter()
        .zip(action.generators())
        .map(|(a, x)| a.sub(&interior(x, b)))
        .collect();
    MomentData::new(md.f.clone(), alpha)
}

/// Invariant one-forms `θ_i` with `θ_i(ξ_j) = δ_ij`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    theta: Vec<DiffForm>,
}

impl Connection {
    pub fn new(theta: Vec<DiffForm>, action: &TorusAction) -> Result<Self, EquivError> {
        if theta.len() != action.rank() {
            return Err(EquivError::Shape(
                "one connection form per generator".into(),
            ));
        }
        for (i, t) in theta.iter().enumerate() {
            t.expect_degree(1)?;
            for (j, x) in action.generators().iter().enumerate() {
                let expected = RingElement::from_int(action.chart(), i64::from(i == j));
                if t.pair(x) != expected {
                    return Err(EquivError::Precondition(format!(
                        "θ_{i}(ξ_{j}) is not δ_{i}{j}"
                    )));
                }
            }
            if !action.is_invariant(t) {
                return Err(EquivError::NonInvariant(format!("θ_{i}")));
            }
        }
        Ok(Connection { theta })
    }

    pub fn theta(&self) -> &[DiffForm] {
        &self.theta
    }
}

/// `Γ = −Σ_i α^i ∧ θ_i + β` with `β(X, Y) = −Σ_ij θ_i(X) θ_j(Y) α^i(ξ_j)`.
///
/// Postconditions are checked: `ι_{ξ_i}Γ = α^i`, `Γ` invariant and
/// `H + dΓ` basic.
pub fn gamma_from_connection(
    h: &DiffForm,
    md: &MomentData,
    theta: &Connection,
    action: &TorusAction,
) -> Result<DiffForm, EquivError> {
    let k = action.rank();
    if md.rank() != k || theta.theta.len() != k {
        return Err(EquivError::Shape("rank mismatch".into()));
    }
    if !is_equivariantly_closed(h, &md.alpha, action)?.passed() {
        return Err(EquivError::Precondition(
            "H + α is not equivariantly closed".into(),
        ));
    }
    let chart = action.chart();
    let n = chart.dim();
    // c[i][j] = α^i(ξ_j)
    let c: Vec<Vec<RingElement>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| md.alpha[i].pair(action.generator(j)))
                .collect()
        })
        .collect();
    // θ_i(∂_a)
    let th: Vec<Vec<RingElement>> = (0..k)
        .map(|i| (0..n).map(|a| theta.theta[i].coeff(&[a])).collect())
        .collect();
    let beta_val = |a: usize, b: usize| {
        let mut acc = RingElement::zero(chart);
        for i in 0..k {
            for j in 0..k {
                acc = &acc - &(&(&th[i][a] * &th[j][b]) * &c[i][j]);
            }
        }
        acc
    };
    let mut terms = Vec::new();
    for a in 0..n {
        if !beta_val(a, a).is_zero() {
            return Err(EquivError::Postcondition("β is not antisymmetric".into()));
        }
        for b in a + 1..n {
            let ab = beta_val(a, b);
            if !(&ab + &beta_val(b, a)).is_zero() {
                return Err(EquivError::Postcondition("β is not antisymmetric".into()));
            }
            terms.push((vec![a, b], ab));
        }
    }
    let mut gamma = DiffForm::from_terms(chart, 2, terms)?;
    for i in 0..k {
        gamma = gamma.sub(&wedge(&md.alpha[i], &theta.theta[i]));
    }
    for i in 0..k {
        if interior(action.generator(i), &gamma) != md.alpha[i] {
            return Err(EquivError::Postcondition(format!(
                "ι_ξ{i} Γ differs from α^{i}"
            )));
        }
    }
    if !action.is_invariant(&gamma) {
        return Err(EquivError::Postcondition("Γ is not invariant".into()));
    }
    if !is_basic(&h.add(&exterior_d(&gamma)), action) {
        return Err(EquivError::Postcondition("H + dΓ is not basic".into()));
    }
    Ok(gamma)
}

#[cfg(test)]
mod tests;
