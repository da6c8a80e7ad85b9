use num_traits::Signed;

use super::{
    dirac_reduce_fiber, fiber_extract, fiber_type, is_generalized_complex, FiberData, ReducedFiber,
    ReductionError,
};
use crate::equivariant::{moment_residuals, MomentData, TorusAction};
use crate::genstruct::{check_gk_pair, metric_gram, EigenProjector, GenStructure};
use crate::linalg::{independent_subset, intersect, span_rank, Matrix, Vector};
use crate::symexpr::scalar::{format_scalar, int, is_real};
use crate::symexpr::{EvalPoint, Scalar};

/// Reduced generalized Kähler pair at one point.
#[derive(Clone, Debug)]
pub struct GkReducedFiber {
    pub fiber: FiberData,
    pub rf1: ReducedFiber,
    /// Structure matrix of `J₂` at the point.
    pub j2mat: Matrix,
    pub l2: Vec<Vector>,
    pub gt: Matrix,
    pub j2t: Matrix,
    pub j2_complex: bool,
    pub commute: bool,
    pub minors: Vec<String>,
    pub positive: bool,
}

impl GkReducedFiber {
    pub fn passed(&self) -> bool {
        self.j2_complex && self.commute && self.positive
    }

    pub fn type_j2t(&self) -> usize {
        let m = self.rf1.m;
        (m - self.j2t.submatrix(0, m, m, m).rank()) / 2
    }
}

/// Involution of `ℂ^{2m}` with `+1` eigenspace `plus` and `−1` eigenspace its orthogonal.
fn involution(m: usize, plus: &[Vector]) -> Result<Matrix, ReductionError> {
    let g = crate::genstruct::pairing_gram(m);
    let rows = Matrix::from_cols(2 * m, plus).transpose().mul(&g);
    let minus = rows.nullspace();
    let mut cols: Vec<Vector> = plus.to_vec();
    cols.extend(minus);
    if cols.len() != 2 * m || span_rank(2 * m, &cols) != 2 * m {
        return Err(ReductionError::Degenerate(
            "reduced metric eigenspaces are not complementary".into(),
        ));
    }
    let s = Matrix::from_cols(2 * m, &cols);
    let inv = s.inverse().expect("complementary eigenspaces");
    let d = Matrix::from_fn(2 * m, 2 * m, |r, c| {
        if r != c {
            int(0)
        } else if r < plus.len() {
            int(1)
        } else {
            int(-1)
        }
    });
    Ok(s.mul(&d).mul(&inv))
}

pub fn gk_reduce_fiber(
    j1: &GenStructure,
    j2: &GenStructure,
    action: &TorusAction,
    md: &MomentData,
    level: &[Scalar],
    p: &EvalPoint,
) -> Result<GkReducedFiber, ReductionError> {
    if !check_gk_pair(j1, j2, std::slice::from_ref(p))?.passed() {
        return Err(ReductionError::Precondition(
            "the pair is not generalized Kähler at the point".into(),
        ));
    }
    if !moment_residuals(j1, action, md).passed() {
        return Err(ReductionError::Precondition(
            "moment data does not belong to the first structure".into(),
        ));
    }
    let fiber = fiber_extract(j1, action, md, level, p)?;
    let rf1 = dirac_reduce_fiber(&fiber)?;
    let n = fiber.n;
    let m = rf1.m;
    let j2mat = j2.mat().eval(p)?;
    let gmap = fiber.jmat.mul(&j2mat).scale(&int(-1));
    let c_plus = gmap.sub(&Matrix::identity(2 * n)).nullspace();
    if c_plus.len() != n {
        return Err(ReductionError::Degenerate(format!(
            "metric +1 eigenspace has dimension {}",
            c_plus.len()
        )));
    }
    let meet = intersect(2 * n, &c_plus, &super::w_basis(&fiber));
    let images: Vec<Vector> = meet.iter().map(|v| rf1.basis.project(v)).collect();
    let ct_plus = independent_subset(2 * m, &images);
    if ct_plus.len() != m {
        return Err(ReductionError::Degenerate(format!(
            "reduced +1 eigenspace has dimension {} instead of {m}",
            ct_plus.len()
        )));
    }
    let gt = involution(m, &ct_plus)?;
    let j2t = rf1.jt.mul(&gt);
    let j2_complex = is_generalized_complex(&j2t);
    let commute = rf1.jt.mul(&j2t) == j2t.mul(&rf1.jt);
    let gram = metric_gram(&rf1.jt.mul(&j2t).scale(&int(-1)));
    let minors = gram.leading_minors();
    let positive =
        gram == gram.transpose() && minors.iter().all(|x| is_real(x) && x.re.is_positive());
    let proj2 = EigenProjector::new(j2).proj().eval(p)?;
    let l2 = independent_subset(2 * n, &proj2.columns());
    Ok(GkReducedFiber {
        fiber,
        rf1,
        j2mat,
        l2,
        gt,
        j2t,
        j2_complex,
        commute,
        minors: minors.iter().map(format_scalar).collect(),
        positive,
    })
}

/// Both sides of the type formula for the second structure, plus the
/// type equality for the first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GkFormulaReport {
    pub type_j2: usize,
    pub k: usize,
    /// `dim_ℂ (A ⊗ ℂ) ∩ π(L₂)` at the point.
    pub intersection: usize,
    pub predicted: i64,
    pub computed: usize,
    pub type_j1: usize,
    pub type_j1_reduced: usize,
}

impl GkFormulaReport {
    pub fn passed(&self) -> bool {
        self.predicted == self.computed as i64 && self.type_j1 == self.type_j1_reduced
    }
}

/// `type(J̃₂) = type(J₂) − ½ dim G − ½ dim K + 2 dim_ℂ(A_ℂ ∩ π(L₂))` with `K = G`.
pub fn gk_type_formula_check(gk: &GkReducedFiber) -> GkFormulaReport {
    let n = gk.fiber.n;
    let k = gk.fiber.k;
    let type_j2 = (n - gk.j2mat.submatrix(0, n, n, n).rank()) / 2;
    let tangent: Vec<Vector> = gk.l2.iter().map(|v| v[..n].to_vec()).collect();
    let intersection = intersect(n, &gk.fiber.a, &tangent).len();
    let predicted = type_j2 as i64 - k as i64 + 2 * intersection as i64;
    GkFormulaReport {
        type_j2,
        k,
        intersection,
        predicted,
        computed: gk.type_j2t(),
        type_j1: fiber_type(&gk.fiber),
        type_j1_reduced: gk.rf1.type_(),
    }
}
