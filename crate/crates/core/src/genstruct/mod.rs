//! Generalized geometry on `T ⊕ T*`: the split pairing, the twisted Courant
//! bracket, B-transforms and generalized complex structures as explicit
//! `2n×2n` matrices in the frame `(∂_1..∂_n, dx_1..dx_n)`.
//!
//! A two-form `B` acts as the matrix `B_ij = B(∂_i, ∂_j)` on column vectors,
//! so `e^B(X + ξ) = X + ξ + B(·, X)`.

mod checks;
mod matrix;

use thiserror::Error;

use crate::calculus::{
    exterior_d, interior, lie_bracket, lie_derivative, CalculusError, DiffForm, VectorField,
};
use crate::linalg::Matrix;
use crate::symexpr::scalar::{frac, imag_unit, int};
use crate::symexpr::{ChartRef, ExprError, RingElement};

pub use checks::{
    check_algebraic, check_gk_pair, check_integrable, metric_gram, type_at, AlgebraicReport,
    EntryResidual, GkPointReport, GkReport, IntegrabilityReport, PairResidual,
};
pub use matrix::RingMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error("operands live on different charts")]
    ChartMismatch,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("structure matrix has non-real entries")]
    NotReal,
    #[error("twist is not closed")]
    TwistNotClosed,
    #[error("matrix is not invertible over the ring: {0}")]
    Singular(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("structures carry different twists")]
    TwistMismatch,
    #[error("bivector block has odd rank {0}")]
    OddRank(usize),
}

impl From<ExprError> for GenError {
    fn from(e: ExprError) -> Self {
        GenError::Calculus(e.into())
    }
}

/// A section `X + α` of `T ⊕ T*` with possibly complex coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GenSection {
    vec: VectorField,
    form: DiffForm,
}

impl GenSection {
    pub fn new(vec: VectorField, form: DiffForm) -> Result<Self, GenError> {
        form.expect_degree(1)?;
        if **vec.chart() != **form.chart() {
            return Err(GenError::ChartMismatch);
        }
        Ok(GenSection { vec, form })
    }

    pub fn from_vector(vec: VectorField) -> Self {
        let form = DiffForm::zero(vec.chart(), 1);
        GenSection { vec, form }
    }

    pub fn from_form(form: DiffForm) -> Result<Self, GenError> {
        let vec = VectorField::zero(form.chart());
        GenSection::new(vec, form)
    }

    pub fn zero(chart: &ChartRef) -> Self {
        GenSection {
            vec: VectorField::zero(chart),
            form: DiffForm::zero(chart, 1),
        }
    }

    /// Column `(X^1..X^n, α_1..α_n)`.
    pub fn from_column(chart: &ChartRef, col: &[RingElement]) -> Result<Self, GenError> {
        let n = chart.dim();
        if col.len() != 2 * n {
            return Err(GenError::Shape(format!(
                "column of length {} for dimension {n}",
                col.len()
            )));
        }
        let vec = VectorField::new(chart, col[..n].to_vec())?;
        let form = DiffForm::from_terms(
            chart,
            1,
            col[n..]
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, c)| (vec![i], c)),
        )?;
        Ok(GenSection { vec, form })
    }

    pub fn to_column(&self) -> Vec<RingElement> {
        let n = self.chart().dim();
        let mut col = self.vec.comps().to_vec();
        col.extend((0..n).map(|i| self.form.coeff(&[i])));
        col
    }

    pub fn chart(&self) -> &ChartRef {
        self.vec.chart()
    }

    pub fn vec(&self) -> &VectorField {
        &self.vec
    }

    pub fn form(&self) -> &DiffForm {
        &self.form
    }

    pub fn is_zero(&self) -> bool {
        self.vec.is_zero() && self.form.is_zero()
    }

    pub fn add(&self, other: &GenSection) -> GenSection {
        GenSection {
            vec: self.vec.add(&other.vec),
            form: self.form.add(&other.form),
        }
    }

    pub fn sub(&self, other: &GenSection) -> GenSection {
        GenSection {
            vec: self.vec.sub(&other.vec),
            form: self.form.sub(&other.form),
        }
    }

    pub fn scale(&self, f: &RingElement) -> GenSection {
        GenSection {
            vec: self.vec.scale(f),
            form: self.form.mul_fn(f),
        }
    }

    pub fn conj(&self) -> GenSection {
        GenSection {
            vec: self.vec.conj(),
            form: self.form.conj(),
        }
    }
}

/// `⟨X + α, Y + β⟩ = ½(α(Y) + β(X))`.
pub fn pairing(u: &GenSection, v: &GenSection) -> Result<RingElement, GenError> {
    if **u.chart() != **v.chart() {
        return Err(GenError::ChartMismatch);
    }
    let s = &u.form.pair(&v.vec) + &v.form.pair(&u.vec);
    Ok(s.scale(&frac(1, 2)))
}

/// Gram matrix of the pairing in the standard frame.
pub fn pairing_gram(n: usize) -> Matrix {
    Matrix::from_fn(2 * n, 2 * n, |r, c| {
        if r + n == c || c + n == r {
            frac(1, 2)
        } else {
            int(0)
        }
    })
}

/// `[X+α, Y+β]_H = [X,Y] + L_Xβ − L_Yα − ½d(ι_Xβ − ι_Yα) + ι_Yι_X H`.
pub fn courant_bracket(
    u: &GenSection,
    v: &GenSection,
    h: &DiffForm,
) -> Result<GenSection, GenError> {
    if **u.chart() != **v.chart() || **u.chart() != **h.chart() {
        return Err(GenError::ChartMismatch);
    }
    h.expect_degree(3)?;
    let (x, a) = (&u.vec, &u.form);
    let (y, b) = (&v.vec, &v.form);
    let vec = lie_bracket(x, y);
    let contr = interior(x, b).sub(&interior(y, a));
    let form = lie_derivative(x, b)
        .sub(&lie_derivative(y, a))
        .sub(&exterior_d(&contr).scale(&frac(1, 2)))
        .add(&interior(y, &interior(x, h)));
    Ok(GenSection { vec, form })
}

/// Matrix `B_ij = B(∂_i, ∂_j)` of a two-form.
pub fn two_form_matrix(b: &DiffForm) -> Result<RingMatrix, GenError> {
    b.expect_degree(2)?;
    let n = b.chart().dim();
    Ok(RingMatrix::from_fn(b.chart(), n, n, |i, j| {
        b.component(&[i, j])
    }))
}

/// `e^B = [[1, 0], [B, 1]]`.
pub fn b_matrix(b: &DiffForm) -> Result<RingMatrix, GenError> {
    let bm = two_form_matrix(b)?;
    let chart = b.chart();
    let n = chart.dim();
    let id = RingMatrix::identity(chart, n);
    Ok(RingMatrix::blocks(
        &id,
        &RingMatrix::zeros(chart, n, n),
        &bm,
        &id,
    ))
}

/// `e^B(X + α) = X + α + B(·, X)`.
pub fn b_transform_section(b: &DiffForm, u: &GenSection) -> Result<GenSection, GenError> {
    if **b.chart() != **u.chart() {
        return Err(GenError::ChartMismatch);
    }
    let m = b_matrix(b)?;
    GenSection::from_column(u.chart(), &m.mul_col(&u.to_column()))
}

/// A generalized almost complex structure together with its twist `H`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GenStructure {
    mat: RingMatrix,
    twist: DiffForm,
}

impl GenStructure {
    pub fn new(mat: RingMatrix, twist: DiffForm) -> Result<Self, GenError> {
        let chart = twist.chart().clone();
        let n = chart.dim();
        if mat.rows() != 2 * n || mat.cols() != 2 * n {
            return Err(GenError::Shape(format!(
                "expected {0}x{0} matrix, got {1}x{2}",
                2 * n,
                mat.rows(),
                mat.cols()
            )));
        }
        if **mat.chart() != *chart {
            return Err(GenError::ChartMismatch);
        }
        twist.expect_degree(3)?;
        if !mat.is_real() {
            return Err(GenError::NotReal);
        }
        if !twist.is_real() {
            return Err(GenError::Precondition("twist must be real".into()));
        }
        if !exterior_d(&twist).is_zero() {
            return Err(GenError::TwistNotClosed);
        }
        Ok(GenStructure { mat, twist })
    }

    /// `J_ω = [[0, −Ω⁻¹], [Ω, 0]]` with `Ω_ij = ω(∂_i, ∂_j)`.
    pub fn symplectic(omega: &DiffForm, twist: DiffForm) -> Result<Self, GenError> {
        let om = two_form_matrix(omega)?;
        let inv = om.inverse().ok_or_else(|| {
            GenError::Singular("symplectic form determinant is not a unit".into())
        })?;
        let chart = omega.chart();
        let n = chart.dim();
        let z = RingMatrix::zeros(chart, n, n);
        GenStructure::new(RingMatrix::blocks(&z, &inv.neg(), &om, &z), twist)
    }

    /// `J_I = diag(−I, Iᵀ)` for a complex structure `I` acting on column vectors.
    pub fn complex(i_mat: &RingMatrix, twist: DiffForm) -> Result<Self, GenError> {
        let chart = twist.chart();
        let n = chart.dim();
        if i_mat.rows() != n || i_mat.cols() != n {
            return Err(GenError::Shape("complex structure must be n x n".into()));
        }
        let z = RingMatrix::zeros(chart, n, n);
        GenStructure::new(
            RingMatrix::blocks(&i_mat.neg(), &z, &z, &i_mat.transpose()),
            twist,
        )
    }

    pub fn chart(&self) -> &ChartRef {
        self.twist.chart()
    }

    pub fn dim(&self) -> usize {
        self.chart().dim()
    }

    pub fn mat(&self) -> &RingMatrix {
        &self.mat
    }

    pub fn twist(&self) -> &DiffForm {
        &self.twist
    }

    /// Same matrix against another twist.
    pub fn with_twist(&self, twist: DiffForm) -> Result<Self, GenError> {
        GenStructure::new(self.mat.clone(), twist)
    }

    pub fn neg(&self) -> GenStructure {
        GenStructure {
            mat: self.mat.neg(),
            twist: self.twist.clone(),
        }
    }

    /// Upper-right `n×n` block, the bivector part.
    pub fn bivector_block(&self) -> RingMatrix {
        let n = self.dim();
        self.mat.block(0, n, n, n)
    }
}

/// `(e^B · mat · e^{−B}, H + dB)`.
pub fn b_transform_structure(b: &DiffForm, j: &GenStructure) -> Result<GenStructure, GenError> {
    if **b.chart() != **j.chart() {
        return Err(GenError::ChartMismatch);
    }
    if !b.is_real() {
        return Err(GenError::Precondition("B must be real".into()));
    }
    let fwd = b_matrix(b)?;
    let back = b_matrix(&b.neg())?;
    let mat = fwd.mul(&j.mat).mul(&back);
    GenStructure::new(mat, j.twist.add(&exterior_d(b)))
}

/// `P = (Id − i·mat)/2`, projecting onto the `+i` eigenbundle `L`.
#[derive(Clone, Debug)]
pub struct EigenProjector {
    proj: RingMatrix,
}

impl EigenProjector {
    pub fn new(j: &GenStructure) -> Self {
        EigenProjector {
            proj: half_shift(j, -1),
        }
    }

    pub fn proj(&self) -> &RingMatrix {
        &self.proj
    }

    /// Column `P·e_a` as a section of `L`.
    pub fn section(&self, a: usize) -> GenSection {
        let col: Vec<RingElement> = (0..self.proj.rows())
            .map(|r| self.proj.get(r, a).clone())
            .collect();
        GenSection::from_column(self.proj.chart(), &col)
            .expect("projector column has the right shape")
    }

    pub fn is_idempotent(&self) -> bool {
        self.proj.mul(&self.proj) == self.proj
    }
}

/// `Q = (Id + i·mat)/2`; annihilates exactly `L`.
pub fn complement_projector(j: &GenStructure) -> RingMatrix {
    half_shift(j, 1)
}

fn half_shift(j: &GenStructure, sign: i64) -> RingMatrix {
    let chart = j.chart();
    let id = RingMatrix::identity(chart, 2 * j.dim());
    id.add(&j.mat.scale(&(imag_unit() * int(sign))))
        .scale(&frac(1, 2))
}
