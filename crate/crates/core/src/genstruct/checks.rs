use rayon::prelude::*;

use super::{
    complement_projector, courant_bracket, pairing_gram, EigenProjector, GenError, GenStructure,
    RingMatrix,
};
use crate::linalg::Matrix;
use crate::symexpr::scalar::{format_scalar, is_real};
use crate::symexpr::EvalPoint;
use num_traits::Signed;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryResidual {
    pub row: usize,
    pub col: usize,
    pub residual: String,
}

fn nonzero_entries(m: &RingMatrix) -> Vec<EntryResidual> {
    m.entries()
        .filter(|(_, v)| !v.is_zero())
        .map(|((row, col), v)| EntryResidual {
            row,
            col,
            residual: v.to_string(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraicReport {
    /// Nonzero entries of `mat² + Id`.
    pub square: Vec<EntryResidual>,
    /// Nonzero entries of `matᵀ g mat − g`.
    pub orthogonality: Vec<EntryResidual>,
}

impl AlgebraicReport {
    pub fn passed(&self) -> bool {
        self.square.is_empty() && self.orthogonality.is_empty()
    }
}

pub fn check_algebraic(j: &GenStructure) -> AlgebraicReport {
    let chart = j.chart();
    let m = j.mat();
    let id = RingMatrix::identity(chart, m.rows());
    let g = RingMatrix::from_scalar(chart, &pairing_gram(j.dim()));
    AlgebraicReport {
        square: nonzero_entries(&m.mul(m).add(&id)),
        orthogonality: nonzero_entries(&m.transpose().mul(&g).mul(m).sub(&g)),
    }
}

fn require_algebraic(j: &GenStructure) -> Result<(), GenError> {
    if check_algebraic(j).passed() {
        Ok(())
    } else {
        Err(GenError::Precondition(
            "structure fails the algebraic check".into(),
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairResidual {
    pub a: usize,
    pub b: usize,
    /// Nonzero components of `Q·[u_a, u_b]_H` as `(index, value)`.
    pub residual: Vec<(usize, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegrabilityReport {
    pub failing: Vec<PairResidual>,
    pub idempotent: bool,
    /// Rank of `P` at each sample point.
    pub ranks: Vec<usize>,
    pub dim: usize,
}

impl IntegrabilityReport {
    pub fn passed(&self) -> bool {
        self.failing.is_empty() && self.idempotent && self.ranks.iter().all(|&r| r == self.dim)
    }
}

pub fn check_integrable(
    j: &GenStructure,
    points: &[EvalPoint],
) -> Result<IntegrabilityReport, GenError> {
    require_algebraic(j)?;
    let n = j.dim();
    let proj = EigenProjector::new(j);
    let q = complement_projector(j);
    let sections: Vec<_> = (0..2 * n).map(|a| proj.section(a)).collect();
    let pairs: Vec<(usize, usize)> = (0..2 * n)
        .flat_map(|a| (a + 1..2 * n).map(move |b| (a, b)))
        .collect();
    let results: Vec<Result<Option<PairResidual>, GenError>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            if sections[a].is_zero() || sections[b].is_zero() {
                return Ok(None);
            }
            let w = courant_bracket(&sections[a], &sections[b], j.twist())?;
            let res = q.mul_col(&w.to_column());
            let residual: Vec<(usize, String)> = res
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(i, v)| (i, v.to_string()))
                .collect();
            Ok((!residual.is_empty()).then_some(PairResidual { a, b, residual }))
        })
        .collect();
    let mut failing = Vec::new();
    for r in results {
        if let Some(p) = r? {
            failing.push(p);
        }
    }
    let mut ranks = Vec::with_capacity(points.len());
    for p in points {
        ranks.push(proj.proj().eval(p)?.rank());
    }
    Ok(IntegrabilityReport {
        failing,
        idempotent: proj.is_idempotent(),
        ranks,
        dim: n,
    })
}

/// Half the chart dimension minus half the rank of the bivector block at `p`.
pub fn type_at(j: &GenStructure, p: &EvalPoint) -> Result<usize, GenError> {
    require_algebraic(j)?;
    let r = j.bivector_block().eval(p)?.rank();
    if r % 2 != 0 {
        return Err(GenError::OddRank(r));
    }
    Ok((j.dim() - r) / 2)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GkPointReport {
    pub minors: Vec<String>,
    pub positive: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GkReport {
    pub commutator: Vec<EntryResidual>,
    pub points: Vec<GkPointReport>,
}

impl GkReport {
    pub fn passed(&self) -> bool {
        self.commutator.is_empty() && self.points.iter().all(|p| p.positive)
    }
}

/// Gram matrix of `⟨G·, ·⟩`, i.e. `Gᵀ g`.
pub fn metric_gram(g_map: &Matrix) -> Matrix {
    let n = g_map.rows() / 2;
    g_map.transpose().mul(&pairing_gram(n))
}

pub fn check_gk_pair(
    j1: &GenStructure,
    j2: &GenStructure,
    points: &[EvalPoint],
) -> Result<GkReport, GenError> {
    if j1.twist() != j2.twist() {
        return Err(GenError::TwistMismatch);
    }
    require_algebraic(j1)?;
    require_algebraic(j2)?;
    let (m1, m2) = (j1.mat(), j2.mat());
    let commutator = nonzero_entries(&m1.mul(m2).sub(&m2.mul(m1)));
    let g_map = m1.mul(m2).neg();
    let mut reports = Vec::with_capacity(points.len());
    for p in points {
        let gram = metric_gram(&g_map.eval(p)?);
        let symmetric = gram == gram.transpose();
        let minors = gram.leading_minors();
        let positive = symmetric && minors.iter().all(|m| is_real(m) && m.re.is_positive());
        reports.push(GkPointReport {
            minors: minors.iter().map(format_scalar).collect(),
            positive,
        });
    }
    Ok(GkReport {
        commutator,
        points: reports,
    })
}
