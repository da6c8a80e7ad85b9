//! Fiberwise reduction of generalized complex and Kähler structures.
//!
//! At a point `p` of the level set, `W = ker df ⊕ ann(A)` inside
//! `V = T_p ⊕ T*_p` has `W^⊥ = A ⊕ D` (generators and moment differentials),
//! and the reduced structure lives on `W/W^⊥` with `L̃` the image of `L ∩ W`.
//! Quotient coordinates come from a tangent basis `t` of a complement of `A`
//! in `ker df` and the covectors `c` dual to it, so the induced pairing is
//! the standard one.

mod gk;
mod level;

use thiserror::Error;

use crate::calculus::DiffForm;
use crate::equivariant::{
    gamma_from_connection, is_basic, moment_b_transform, Connection, EquivError, MomentData,
    TorusAction,
};
use crate::genstruct::{
    b_transform_structure, pairing_gram, two_form_matrix, EigenProjector, GenError, GenStructure,
};
use crate::linalg::{
    conj_vec, independent_subset, intersect, same_span, span_rank, unit_vector, Matrix, Vector,
};
use crate::symexpr::scalar::{format_scalar, frac, imag_unit, int};
use crate::symexpr::{EvalPoint, ExprError, Scalar};
use num_traits::Zero;

pub use gk::{gk_reduce_fiber, gk_type_formula_check, GkFormulaReport, GkReducedFiber};
pub use level::{df_perp_closure, level_closure_property, LevelClosureReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error("point is off the level set: f^{index} = {value}")]
    OffLevel { index: usize, value: String },
    #[error("rank deficiency of {what}: rank {rank}, expected {expected}")]
    RankDeficient {
        what: &'static str,
        rank: usize,
        expected: usize,
    },
    #[error("generator {generator} does not annihilate df^{component} at the point")]
    NotInvariant { generator: usize, component: usize },
    #[error("reduced subspace is degenerate: {0}")]
    Degenerate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl From<GenError> for ReductionError {
    fn from(e: GenError) -> Self {
        ReductionError::Equiv(e.into())
    }
}

impl From<ExprError> for ReductionError {
    fn from(e: ExprError) -> Self {
        ReductionError::Equiv(e.into())
    }
}

/// Everything the reduction needs at one point, evaluated exactly.
#[derive(Clone, Debug)]
pub struct FiberData {
    pub point: EvalPoint,
    /// Real dimension of the chart.
    pub n: usize,
    pub k: usize,
    /// Structure matrix at the point.
    pub jmat: Matrix,
    /// Basis of `L` in `ℂ^{2n}`.
    pub l: Vec<Vector>,
    /// `df^i(p)` as covectors in `ℂ^n`.
    pub d: Vec<Vector>,
    /// `ξ_i(p)` as vectors in `ℂ^n`.
    pub a: Vec<Vector>,
}

pub fn fiber_extract(
    j: &GenStructure,
    action: &TorusAction,
    md: &MomentData,
    level: &[Scalar],
    p: &EvalPoint,
) -> Result<FiberData, ReductionError> {
    let k = action.rank();
    if md.rank() != k || level.len() != k {
        return Err(ReductionError::Precondition(
            "action, moment data and level must have equal rank".into(),
        ));
    }
    for (i, (fi, ai)) in md.f().iter().zip(level).enumerate() {
        let v = fi.evaluate(p)?;
        if &v != ai {
            return Err(ReductionError::OffLevel {
                index: i,
                value: format_scalar(&v),
            });
        }
    }
    let n = j.dim();
    let d: Vec<Vector> = md
        .df()
        .iter()
        .map(|w| {
            (0..n)
                .map(|i| w.coeff(&[i]).evaluate(p))
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;
    let gm = action.generator_matrix(p)?;
    let a: Vec<Vector> = gm.columns();
    let rd = span_rank(n, &d);
    if rd != k {
        return Err(ReductionError::RankDeficient {
            what: "moment differentials",
            rank: rd,
            expected: k,
        });
    }
    let ra = span_rank(n, &a);
    if ra != k {
        return Err(ReductionError::RankDeficient {
            what: "generators",
            rank: ra,
            expected: k,
        });
    }
    for (g, av) in a.iter().enumerate() {
        for (c, dv) in d.iter().enumerate() {
            if !dot(dv, av).is_zero() {
                return Err(ReductionError::NotInvariant {
                    generator: g,
                    component: c,
                });
            }
        }
    }
    let jmat = j.mat().eval(p)?;
    let proj = EigenProjector::new(j).proj().eval(p)?;
    let l = independent_subset(2 * n, &proj.columns());
    if l.len() != n {
        return Err(ReductionError::Degenerate(format!(
            "L has dimension {} at the point",
            l.len()
        )));
    }
    check_complex_subspace(n, &l).map_err(ReductionError::Degenerate)?;
    Ok(FiberData {
        point: p.clone(),
        n,
        k,
        jmat,
        l,
        d,
        a,
    })
}

fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    a.iter()
        .zip(b)
        .fold(Scalar::zero(), |acc, (x, y)| acc + x * y)
}

/// `uᵀ g v` for the standard split pairing on `ℂ^{2m}`.
fn pair_vec(m: usize, u: &[Scalar], v: &[Scalar]) -> Scalar {
    let mut acc = Scalar::zero();
    for i in 0..m {
        acc = acc + &u[i] * &v[m + i] + &u[m + i] * &v[i];
    }
    acc * frac(1, 2)
}

/// Isotropic, of dimension `m`, and transverse to its conjugate.
fn check_complex_subspace(m: usize, l: &[Vector]) -> Result<(), String> {
    if l.len() != m {
        return Err(format!("dimension {} instead of {m}", l.len()));
    }
    for u in l {
        for v in l {
            if !pair_vec(m, u, v).is_zero() {
                return Err("not isotropic".into());
            }
        }
    }
    let mut both: Vec<Vector> = l.to_vec();
    both.extend(l.iter().map(|v| conj_vec(v)));
    if span_rank(2 * m, &both) != 2 * m {
        return Err("meets its conjugate".into());
    }
    Ok(())
}

/// Coordinates on `W/W^⊥`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientBasis {
    pub n: usize,
    /// Tangent vectors spanning a complement of `A` in `ker df`.
    pub t: Vec<Vector>,
    /// Covectors dual to `t`, annihilating `A` and the complement of `ker df`.
    pub c: Vec<Vector>,
}

impl QuotientBasis {
    pub fn new(n: usize, d: &[Vector], a: &[Vector]) -> Self {
        let dmat = Matrix::from_fn(d.len(), n, |r, c| d[r][c].clone());
        let ker = dmat.nullspace();
        let mut t = Vec::new();
        let mut span: Vec<Vector> = a.to_vec();
        for v in &ker {
            let mut trial = span.clone();
            trial.push(v.clone());
            if span_rank(n, &trial) == trial.len() {
                span = trial;
                t.push(v.clone());
            }
        }
        for i in 0..n {
            let e = unit_vector(n, i);
            let mut trial = span.clone();
            trial.push(e);
            if span_rank(n, &trial) == trial.len() {
                span = trial;
            }
        }
        // span is now (a, t, s) in that order; reorder as (t, a, s) and dualize.
        let k = a.len();
        let m = t.len();
        let mut frame: Vec<Vector> = t.clone();
        frame.extend(a.iter().cloned());
        frame.extend(span[k + m..].iter().cloned());
        let inv = Matrix::from_cols(n, &frame)
            .inverse()
            .expect("frame is a basis");
        let c = (0..m)
            .map(|r| (0..n).map(|col| inv[(r, col)].clone()).collect())
            .collect();
        QuotientBasis { n, t, c }
    }

    pub fn dim(&self) -> usize {
        self.t.len()
    }

    /// `(X; η) ↦ (c_a(X); η(t_a))`, meaningful on `W`.
    pub fn project(&self, w: &[Scalar]) -> Vector {
        let n = w.len() / 2;
        let (x, eta) = w.split_at(n);
        let mut out: Vector = self.c.iter().map(|c| dot(c, x)).collect();
        out.extend(self.t.iter().map(|t| dot(eta, t)));
        out
    }

    /// `(x; y) ↦ (Σ x_a t_a; Σ y_a c_a)`, a section of the projection.
    pub fn lift(&self, q: &[Scalar]) -> Vector {
        let m = self.dim();
        let n = self.n;
        let mut out = vec![Scalar::zero(); 2 * n];
        for a in 0..m {
            for i in 0..n {
                out[i] = &out[i] + &q[a] * &self.t[a][i];
                out[n + i] = &out[n + i] + &q[m + a] * &self.c[a][i];
            }
        }
        out
    }

    /// Induced two-form `B̃_ab = B(t_a, t_b)` from `B_ij = B(∂_i, ∂_j)`.
    pub fn induced_two_form(&self, b: &Matrix) -> Matrix {
        let m = self.dim();
        Matrix::from_fn(m, m, |r, c| dot(&self.t[r], &b.mul_vec(&self.t[c])))
    }
}

/// Basis of `W_ℂ` as the null space of its defining equations.
fn w_basis(fd: &FiberData) -> Vec<Vector> {
    let n = fd.n;
    let k = fd.k;
    let cons = Matrix::from_fn(2 * k, 2 * n, |r, c| {
        if r < k {
            if c < n {
                fd.d[r][c].clone()
            } else {
                int(0)
            }
        } else if c >= n {
            fd.a[r - k][c - n].clone()
        } else {
            int(0)
        }
    });
    cons.nullspace()
}

/// `W^⊥ = A ⊕ D` as vectors in `ℂ^{2n}`.
fn w_perp(fd: &FiberData) -> Vec<Vector> {
    let n = fd.n;
    let mut out: Vec<Vector> =
        fd.a.iter()
            .map(|v| {
                let mut w = v.clone();
                w.extend(std::iter::repeat_n(int(0), n));
                w
            })
            .collect();
    out.extend(fd.d.iter().map(|v| {
        let mut w = vec![int(0); n];
        w.extend(v.iter().cloned());
        w
    }));
    out
}

/// The reduced fiber: quotient coordinates, `L̃` and `J̃`.
#[derive(Clone, Debug)]
pub struct ReducedFiber {
    pub basis: QuotientBasis,
    /// Real dimension `n − 2k` of the quotient tangent space.
    pub m: usize,
    pub l_tilde: Vec<Vector>,
    pub jt: Matrix,
}

impl ReducedFiber {
    pub fn type_(&self) -> usize {
        let r = self.jt.submatrix(0, self.m, self.m, self.m).rank();
        (self.m - r) / 2
    }
}

/// Complex structure on `ℂ^{2m}` with `+i` eigenspace `l` and `−i` eigenspace `conj l`.
fn structure_from_eigenspace(m: usize, l: &[Vector]) -> Result<Matrix, ReductionError> {
    let mut cols: Vec<Vector> = l.to_vec();
    cols.extend(l.iter().map(|v| conj_vec(v)));
    let s = Matrix::from_cols(2 * m, &cols);
    let inv = s
        .inverse()
        .ok_or_else(|| ReductionError::Degenerate("L̃ meets its conjugate".into()))?;
    let i = imag_unit();
    let diag = Matrix::from_fn(2 * m, 2 * m, |r, c| {
        if r != c {
            int(0)
        } else if r < m {
            i.clone()
        } else {
            -i.clone()
        }
    });
    Ok(s.mul(&diag).mul(&inv))
}

/// Real, squares to `−Id` and preserves the pairing.
pub fn is_generalized_complex(jt: &Matrix) -> bool {
    let dim = jt.rows();
    let g = pairing_gram(dim / 2);
    jt.is_real()
        && jt.mul(jt).add(&Matrix::identity(dim)).is_zero()
        && jt.transpose().mul(&g).mul(jt) == g
}

pub fn dirac_reduce_fiber(fd: &FiberData) -> Result<ReducedFiber, ReductionError> {
    let n = fd.n;
    let basis = QuotientBasis::new(n, &fd.d, &fd.a);
    let m = basis.dim();
    if m + 2 * fd.k != n {
        return Err(ReductionError::Degenerate(format!(
            "quotient tangent dimension {m} for n = {n}, k = {}",
            fd.k
        )));
    }
    let wb = w_basis(fd);
    // W^⊥ ⊆ W
    for v in w_perp(fd) {
        let mut trial = wb.clone();
        trial.push(v);
        if span_rank(2 * n, &trial) != wb.len() {
            return Err(ReductionError::Degenerate(
                "W^⊥ is not contained in W".into(),
            ));
        }
    }
    let meet = intersect(2 * n, &fd.l, &wb);
    let images: Vec<Vector> = meet.iter().map(|v| basis.project(v)).collect();
    let l_tilde = independent_subset(2 * m, &images);
    check_complex_subspace(m, &l_tilde)
        .map_err(|e| ReductionError::Degenerate(format!("L̃ {e}")))?;
    let jt = structure_from_eigenspace(m, &l_tilde)?;
    if !is_generalized_complex(&jt) {
        return Err(ReductionError::Degenerate(
            "reduced matrix is not a generalized complex structure".into(),
        ));
    }
    Ok(ReducedFiber {
        basis,
        m,
        l_tilde,
        jt,
    })
}

/// Type of `J` at the point from its bivector block.
pub fn fiber_type(fd: &FiberData) -> usize {
    let r = fd.jmat.submatrix(0, fd.n, fd.n, fd.n).rank();
    (fd.n - r) / 2
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeReport {
    pub original: usize,
    pub reduced: usize,
}

impl TypeReport {
    pub fn passed(&self) -> bool {
        self.original == self.reduced
    }
}

pub fn reduced_type_check(fd: &FiberData, rf: &ReducedFiber) -> TypeReport {
    TypeReport {
        original: fiber_type(fd),
        reduced: rf.type_(),
    }
}

/// Preimage of a quotient subspace in `V`: lifts plus `W^⊥`.
fn preimage(fd: &FiberData, basis: &QuotientBasis, sub: &[Vector]) -> Vec<Vector> {
    let mut out: Vec<Vector> = sub.iter().map(|q| basis.lift(q)).collect();
    out.extend(w_perp(fd));
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoStepReport {
    /// The two routes give the same subspace of `V` after lifting.
    pub same_subspace: bool,
    pub one_step_type: usize,
    pub two_step_type: usize,
}

impl TwoStepReport {
    pub fn passed(&self) -> bool {
        self.same_subspace && self.one_step_type == self.two_step_type
    }
}

/// Reduce to the level set first, then by the group, and compare with the
/// one-step result.
pub fn two_step_compare(
    fd: &FiberData,
    rf: &ReducedFiber,
) -> Result<TwoStepReport, ReductionError> {
    let n = fd.n;
    let k = fd.k;
    // Step 1: W1 = ker df ⊕ T*, W1^⊥ = D. Coordinates (a; η(N)) for a null basis N of df.
    let dmat = Matrix::from_fn(k, n, |r, c| fd.d[r][c].clone());
    let nb = dmat.nullspace();
    let n1 = nb.len();
    let ncols = Matrix::from_cols(n, &nb);
    // dual covectors for N, extended by a complement to a basis of T
    let mut frame = nb.clone();
    for i in 0..n {
        let mut trial = frame.clone();
        trial.push(unit_vector(n, i));
        if span_rank(n, &trial) == trial.len() {
            frame = trial;
        }
    }
    let finv = Matrix::from_cols(n, &frame)
        .inverse()
        .expect("frame is a basis");
    let nu: Vec<Vector> = (0..n1)
        .map(|r| (0..n).map(|c| finv[(r, c)].clone()).collect())
        .collect();
    let w1_cons = Matrix::from_fn(
        k,
        2 * n,
        |r, c| if c < n { fd.d[r][c].clone() } else { int(0) },
    );
    let w1 = w1_cons.nullspace();
    let proj1 = |w: &[Scalar]| -> Vector {
        let (x, eta) = w.split_at(n);
        let mut out: Vector = nu.iter().map(|v| dot(v, x)).collect();
        out.extend(nb.iter().map(|v| dot(eta, v)));
        out
    };
    let lift1 = |q: &[Scalar]| -> Vector {
        let mut out = vec![Scalar::zero(); 2 * n];
        for j in 0..n1 {
            for i in 0..n {
                out[i] = &out[i] + &q[j] * &nb[j][i];
                out[n + i] = &out[n + i] + &q[n1 + j] * &nu[j][i];
            }
        }
        out
    };
    let l1: Vec<Vector> = independent_subset(
        2 * n1,
        &intersect(2 * n, &fd.l, &w1)
            .iter()
            .map(|v| proj1(v))
            .collect::<Vec<_>>(),
    );
    // Step 2: generators in level-set coordinates, then the group quotient.
    let a1: Vec<Vector> =
        fd.a.iter()
            .map(|v| {
                ncols.solve(v).ok_or_else(|| {
                    ReductionError::Degenerate("generator not tangent to the level set".into())
                })
            })
            .collect::<Result<_, _>>()?;
    let b2 = QuotientBasis::new(n1, &[], &a1);
    let w2_cons = Matrix::from_fn(k, 2 * n1, |r, c| {
        if c >= n1 {
            a1[r][c - n1].clone()
        } else {
            int(0)
        }
    });
    let w2 = w2_cons.nullspace();
    let l2: Vec<Vector> = independent_subset(
        2 * b2.dim(),
        &intersect(2 * n1, &l1, &w2)
            .iter()
            .map(|v| b2.project(v))
            .collect::<Vec<_>>(),
    );
    check_complex_subspace(b2.dim(), &l2)
        .map_err(|e| ReductionError::Degenerate(format!("two-step L̃ {e}")))?;
    let jt2 = structure_from_eigenspace(b2.dim(), &l2)?;
    let m2 = b2.dim();
    let two_step_type = (m2 - jt2.submatrix(0, m2, m2, m2).rank()) / 2;
    // Compare preimages in V.
    let mut lifted2: Vec<Vector> = l2.iter().map(|q| lift1(&b2.lift(q))).collect();
    lifted2.extend(w_perp(fd));
    let lifted1 = preimage(fd, &rf.basis, &rf.l_tilde);
    Ok(TwoStepReport {
        same_subspace: same_span(2 * n, &lifted1, &lifted2),
        one_step_type: rf.type_(),
        two_step_type,
    })
}

/// `e^B · J · e^{−B}` on a quotient fiber.
pub fn b_conjugate(jt: &Matrix, b: &Matrix) -> Matrix {
    let m = b.rows();
    let e = |sign: i64| {
        Matrix::from_fn(2 * m, 2 * m, |r, c| {
            if r == c {
                int(1)
            } else if r >= m && c < m {
                b[(r - m, c)].clone() * int(sign)
            } else {
                int(0)
            }
        })
    };
    e(1).mul(jt).mul(&e(-1))
}

/// Reducing `e^B J` equals transforming the reduction of `J` by the induced form, for basic `B`.
pub fn reduce_b_commute(
    j: &GenStructure,
    action: &TorusAction,
    md: &MomentData,
    level: &[Scalar],
    b: &DiffForm,
    p: &EvalPoint,
) -> Result<bool, ReductionError> {
    if !is_basic(b, action) {
        return Err(ReductionError::Precondition("B is not basic".into()));
    }
    let rf = dirac_reduce_fiber(&fiber_extract(j, action, md, level, p)?)?;
    let jb = b_transform_structure(b, j)?;
    let rfb = dirac_reduce_fiber(&fiber_extract(&jb, action, md, level, p)?)?;
    let bt = rf.basis.induced_two_form(&two_form_matrix(b)?.eval(p)?);
    Ok(rfb.basis == rf.basis && rfb.jt == b_conjugate(&rf.jt, &bt))
}

/// B-transform by `Γ_θ`, which sends the moment one-form to zero and the
/// twist to the basic form `H + dΓ`.
pub fn gamma_transform(
    j: &GenStructure,
    action: &TorusAction,
    md: &MomentData,
    theta: &Connection,
) -> Result<(GenStructure, MomentData, DiffForm), ReductionError> {
    let gamma = gamma_from_connection(j.twist(), md, theta, action)?;
    let jg = b_transform_structure(&gamma, j)?;
    let mdg = moment_b_transform(&gamma, md, action)?;
    if mdg.alpha().iter().any(|a| !a.is_zero()) {
        return Err(ReductionError::Equiv(EquivError::Postcondition(
            "Γ-transform left a nonzero moment form".into(),
        )));
    }
    Ok((jg, mdg, gamma))
}

/// Γ-transforms by two connections reduce to fibers related by the
/// transform of the basic form `Γ_θ' − Γ_θ`.
#[allow(clippy::too_many_arguments)]
pub fn connection_independence(
    j: &GenStructure,
    action: &TorusAction,
    md: &MomentData,
    level: &[Scalar],
    theta1: &Connection,
    theta2: &Connection,
    p: &EvalPoint,
) -> Result<bool, ReductionError> {
    let h = j.twist();
    let g1 = gamma_from_connection(h, md, theta1, action)?;
    let g2 = gamma_from_connection(h, md, theta2, action)?;
    let diff = g2.sub(&g1);
    if !is_basic(&diff, action) {
        return Ok(false);
    }
    let j1 = b_transform_structure(&g1, j)?;
    let j2 = b_transform_structure(&g2, j)?;
    let rf1 = dirac_reduce_fiber(&fiber_extract(&j1, action, md, level, p)?)?;
    let rf2 = dirac_reduce_fiber(&fiber_extract(&j2, action, md, level, p)?)?;
    let bt = rf1
        .basis
        .induced_two_form(&two_form_matrix(&diff)?.eval(p)?);
    Ok(rf2.jt == b_conjugate(&rf1.jt, &bt))
}

#[cfg(test)]
mod tests;
