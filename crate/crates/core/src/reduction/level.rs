use num_traits::{One, Zero};

use super::ReductionError;
use crate::calculus::{ChartMap, CoordImage, DiffForm, VectorField};
use crate::equivariant::{MomentData, TorusAction};
use crate::genstruct::{
    complement_projector, courant_bracket, pairing, EigenProjector, GenSection, GenStructure,
    RingMatrix,
};
use crate::symexpr::{Chart, ChartRef, Coord, CoordKind, RingElement, Scalar};

/// Outcome of the symbolic closure check on the level set.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LevelClosureReport {
    /// Reason the check could not run.
    pub skipped: Option<String>,
    /// Number of spanning sections used.
    pub sections: usize,
    /// `(a, b, η)` with `⟨[u_a, u_b], df^η⟩ ≠ 0` on the level set.
    pub pairing_failures: Vec<(usize, usize, usize)>,
    /// `(a, b)` with `Q·[u_a, u_b] ≠ 0` on the level set.
    pub bracket_failures: Vec<(usize, usize)>,
    /// Generators whose moment section leaves `L` on the level set.
    pub moment_failures: Vec<usize>,
    /// One offending residual, restricted to the level set.
    pub witness: Option<String>,
}

impl LevelClosureReport {
    pub fn passed(&self) -> bool {
        self.skipped.is_none()
            && self.pairing_failures.is_empty()
            && self.bracket_failures.is_empty()
            && self.moment_failures.is_empty()
    }
}

/// Solves each `f^i = a_i` for an affine coordinate entering linearly with a
/// constant coefficient, and returns the inclusion of the level set.
fn level_inclusion(md: &MomentData, level: &[Scalar]) -> Result<ChartMap, String> {
    let Some(first) = md.f().first() else {
        return Err("no moment components".into());
    };
    let chart = first.chart().clone();
    let n = chart.dim();
    let mut solved: Vec<(usize, Scalar)> = Vec::new();
    for fi in md.f() {
        let pick = (0..n).find(|&j| {
            chart.kind(j) == CoordKind::Affine
                && solved.iter().all(|(s, _)| *s != j)
                && fi.partial(j).as_constant().is_some_and(|c| !c.is_zero())
                && md
                    .f()
                    .iter()
                    .filter(|g| !std::ptr::eq(*g, fi))
                    .all(|g| g.partial(j).is_zero())
        });
        let Some(j) = pick else {
            return Err("level set is not a coordinate graph over the chart".into());
        };
        let c = fi.partial(j).as_constant().expect("checked constant");
        solved.push((j, c));
    }
    let keep: Vec<usize> = (0..n)
        .filter(|j| solved.iter().all(|(s, _)| s != j))
        .collect();
    let source = Chart::new(
        keep.iter()
            .map(|&j| chart.coords()[j].clone())
            .collect::<Vec<Coord>>(),
    )
    .map_err(|e| e.to_string())?;
    let src_index = |j: usize| keep.iter().position(|&x| x == j).expect("kept coordinate");
    // Restriction map that sends solved coordinates to zero; the remainders do not involve them.
    let base_images: Vec<CoordImage> = (0..n)
        .map(|j| {
            if keep.contains(&j) {
                identity_image(&source, &chart, j, src_index(j))
            } else {
                CoordImage::Function(RingElement::zero(&source))
            }
        })
        .collect();
    let base = ChartMap::new(&source, &chart, base_images).map_err(|e| e.to_string())?;
    let mut images = Vec::with_capacity(n);
    for j in 0..n {
        if keep.contains(&j) {
            images.push(identity_image(&source, &chart, j, src_index(j)));
            continue;
        }
        let i = solved
            .iter()
            .position(|(s, _)| *s == j)
            .expect("solved coordinate");
        let fi = &md.f()[i];
        let c = &solved[i].1;
        let rest = fi
            - &RingElement::coord(&chart, j)
                .expect("index in range")
                .scale(c);
        if (0..n).any(|s| solved.iter().any(|(x, _)| *x == s) && !rest.partial(s).is_zero()) {
            return Err("moment components are coupled in the solved coordinates".into());
        }
        let rest_src = base.pullback_fn(&rest).map_err(|e| e.to_string())?;
        let value = (&RingElement::constant(&source, level[i].clone()) - &rest_src)
            .scale(&(Scalar::one() / c));
        images.push(CoordImage::Function(value));
    }
    ChartMap::new(&source, &chart, images).map_err(|e| e.to_string())
}

fn identity_image(source: &ChartRef, target: &ChartRef, j: usize, s: usize) -> CoordImage {
    match target.kind(j) {
        CoordKind::Affine => {
            CoordImage::Function(RingElement::coord(source, s).expect("index in range"))
        }
        CoordKind::Periodic => CoordImage::Shift {
            source: s,
            quarter_turns: 0,
        },
    }
}

/// Sections `u'_a` spanning `{u ∈ span(u_a) : ⟨u, df^η⟩ = 0}` wherever
/// `det M_S ≠ 0`, built without division:
/// `u'_a = det(M_S)·u_a − Σ_j (M_a · adj M_S)_j · u_{S_j}`.
fn annihilating_sections(
    sections: &[GenSection],
    dfs: &[GenSection],
    usable: impl Fn(&RingElement) -> bool,
) -> Result<Option<Vec<GenSection>>, ReductionError> {
    let k = dfs.len();
    let chart = sections[0].chart().clone();
    let mut m = RingMatrix::zeros(&chart, sections.len(), k);
    for (a, u) in sections.iter().enumerate() {
        for (e, d) in dfs.iter().enumerate() {
            m.set(a, e, pairing(u, d)?);
        }
    }
    let Some(subset) = subsets(sections.len(), k)
        .into_iter()
        .find(|s| usable(&select_rows(&m, s).det()))
    else {
        return Ok(None);
    };
    let ms = select_rows(&m, &subset);
    let det = ms.det();
    let adj = ms.adjugate();
    let mut out = Vec::new();
    for a in 0..sections.len() {
        if subset.contains(&a) {
            continue;
        }
        let row = select_rows(&m, &[a]).mul(&adj);
        let mut u = sections[a].scale(&det);
        for (j, &s) in subset.iter().enumerate() {
            u = u.sub(&sections[s].scale(row.get(0, j)));
        }
        if !u.is_zero() {
            out.push(u);
        }
    }
    Ok(Some(out))
}

fn select_rows(m: &RingMatrix, rows: &[usize]) -> RingMatrix {
    RingMatrix::from_fn(m.chart(), rows.len(), m.cols(), |r, c| {
        m.get(rows[r], c).clone()
    })
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn df_sections(md: &MomentData) -> Result<Vec<GenSection>, ReductionError> {
    md.df()
        .into_iter()
        .map(|d| GenSection::from_form(d).map_err(ReductionError::from))
        .collect()
}

/// Closure of `L ∩ df^⊥` under the twisted bracket, restricted to the level set.
pub fn level_closure_property(
    j: &GenStructure,
    action: &TorusAction,
    md: &MomentData,
    level: &[Scalar],
) -> Result<LevelClosureReport, ReductionError> {
    if action.rank() == 0 {
        return Ok(LevelClosureReport::default());
    }
    let phi = match level_inclusion(md, level) {
        Ok(phi) => phi,
        Err(reason) => {
            return Ok(LevelClosureReport {
                skipped: Some(reason),
                ..Default::default()
            })
        }
    };
    let restrict = |f: &RingElement| {
        phi.pullback_fn(f)
            .map_err(|e| ReductionError::from(crate::genstruct::GenError::from(e)))
    };
    let n = j.dim();
    let proj = EigenProjector::new(j);
    let cols: Vec<GenSection> = (0..2 * n).map(|a| proj.section(a)).collect();
    let dfs = df_sections(md)?;
    let usable = |d: &RingElement| phi.pullback_fn(d).map(|r| !r.is_zero()).unwrap_or(false);
    let Some(sections) = annihilating_sections(&cols, &dfs, usable)? else {
        return Ok(LevelClosureReport {
            skipped: Some("L is tangent to no level-set complement of df".into()),
            ..Default::default()
        });
    };
    let q = complement_projector(j);
    let mut report = LevelClosureReport {
        sections: sections.len(),
        ..Default::default()
    };
    for a in 0..sections.len() {
        for b in a + 1..sections.len() {
            let w = courant_bracket(&sections[a], &sections[b], j.twist())?;
            for (e, d) in dfs.iter().enumerate() {
                let r = restrict(&pairing(&w, d)?)?;
                if !r.is_zero() {
                    report.witness.get_or_insert_with(|| r.to_string());
                    report.pairing_failures.push((a, b, e));
                }
            }
            let res = q.mul_col(&w.to_column());
            let mut bad = false;
            for r in &res {
                let r = restrict(r)?;
                if !r.is_zero() {
                    report.witness.get_or_insert_with(|| r.to_string());
                    bad = true;
                }
            }
            if bad {
                report.bracket_failures.push((a, b));
            }
        }
    }
    for g in 0..action.rank() {
        let v = md.moment_section(action, g);
        for r in q.mul_col(&v.to_column()) {
            let r = restrict(&r)?;
            if !r.is_zero() {
                report.witness.get_or_insert_with(|| r.to_string());
                report.moment_failures.push(g);
                break;
            }
        }
    }
    Ok(report)
}

/// Frame sections of `df^⊥` (vector fields killing every `f^η`, plus all
/// covectors) bracket back into `df^⊥`, identically on the chart.
/// Returns the number of failing pairs.
pub fn df_perp_closure(md: &MomentData, h: &DiffForm) -> Result<usize, ReductionError> {
    let chart = h.chart().clone();
    let n = chart.dim();
    let dfs = df_sections(md)?;
    let mut frame: Vec<GenSection> = Vec::new();
    if dfs.is_empty() {
        frame.extend((0..n).map(|i| GenSection::from_vector(VectorField::coordinate(&chart, i))));
    } else {
        let vecs: Vec<GenSection> = (0..n)
            .map(|i| GenSection::from_vector(VectorField::coordinate(&chart, i)))
            .collect();
        if let Some(s) = annihilating_sections(&vecs, &dfs, |d| !d.is_zero())? {
            frame.extend(s);
        }
    }
    frame.extend(
        (0..n).map(|i| GenSection::from_form(DiffForm::coordinate(&chart, i)).expect("one-form")),
    );
    let mut failures = 0;
    for a in 0..frame.len() {
        for b in a + 1..frame.len() {
            let w = courant_bracket(&frame[a], &frame[b], h)?;
            if dfs
                .iter()
                .any(|d| pairing(&w, d).map(|r| !r.is_zero()).unwrap_or(true))
            {
                failures += 1;
            }
        }
    }
    Ok(failures)
}
