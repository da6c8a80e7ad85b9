//! Scenario files, the built-in catalog, and report generation.
//!
//! A scenario is a JSON document. Every mathematical entry is an expression
//! string over the declared coordinates. A differential form is a list of
//! terms `{"wedge": [coordinate names], "coeff": expr}`. A point maps every
//! coordinate name to a rational (affine) or an integer number of quarter
//! turns (periodic).

mod run;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::calculus::{exterior_d, DiffForm, VectorField};
use crate::equivariant::{moment_b_transform, Connection, MomentData, TorusAction};
use crate::genstruct::{b_transform_structure, GenStructure, RingMatrix};
use crate::symexpr::scalar::{parse_rational, real};
use crate::symexpr::{
    parse_expr, Chart, ChartRef, CoordKind, CoordValue, EvalPoint, RingElement, Scalar,
};

pub use run::{reduce_point, run_checks, Report, ScenarioInfo, Status, Verdict, Witness};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LoadError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown catalog scenario {0}")]
    UnknownScenario(String),
}

fn invalid(msg: impl Into<String>) -> LoadError {
    LoadError::Validation(msg.into())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub wedge: Vec<String>,
    pub coeff: String,
}

pub type FormSpec = Vec<TermSpec>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordSpec {
    pub name: String,
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub name: String,
    /// `symplectic`, `complex` or `matrix`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<FormSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<String>>>,
    /// Transform applied to this structure only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_transform: Option<FormSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSpec {
    pub f: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<FormSpec>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub name: String,
    pub values: BTreeMap<String, String>,
}

/// Raw scenario document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub coordinates: Vec<CoordSpec>,
    #[serde(default)]
    pub twist: FormSpec,
    /// Transform applied to every structure and to the moment data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_field: Option<FormSpec>,
    pub structures: Vec<StructureSpec>,
    #[serde(default)]
    pub action: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment: Option<MomentSpec>,
    #[serde(default)]
    pub level: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<Vec<FormSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alt_connection: Option<Vec<FormSpec>>,
    #[serde(default)]
    pub basic_b: Vec<FormSpec>,
    #[serde(default)]
    pub points: Vec<PointSpec>,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub expect: BTreeMap<String, Status>,
}

/// Checks in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    Algebraic,
    Integrability,
    TwistFlip,
    GkPair,
    Types,
    CartanSquare,
    EquivariantClosed,
    MomentMap,
    MomentBTransform,
    Gamma,
    ConnectionIndependence,
    LevelClosure,
    DfPerpClosure,
    Reduction,
    ReduceBCommute,
    GkReduction,
    GkTypeFormula,
}

impl Check {
    pub const ALL: [Check; 17] = [
        Check::Algebraic,
        Check::Integrability,
        Check::TwistFlip,
        Check::GkPair,
        Check::Types,
        Check::CartanSquare,
        Check::EquivariantClosed,
        Check::MomentMap,
        Check::MomentBTransform,
        Check::Gamma,
        Check::ConnectionIndependence,
        Check::LevelClosure,
        Check::DfPerpClosure,
        Check::Reduction,
        Check::ReduceBCommute,
        Check::GkReduction,
        Check::GkTypeFormula,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Algebraic => "algebraic",
            Check::Integrability => "integrability",
            Check::TwistFlip => "twist_flip",
            Check::GkPair => "gk_pair",
            Check::Types => "types",
            Check::CartanSquare => "cartan_square",
            Check::EquivariantClosed => "equivariant_closed",
            Check::MomentMap => "moment_map",
            Check::MomentBTransform => "moment_b_transform",
            Check::Gamma => "gamma",
            Check::ConnectionIndependence => "connection_independence",
            Check::LevelClosure => "level_closure",
            Check::DfPerpClosure => "df_perp_closure",
            Check::Reduction => "reduction",
            Check::ReduceBCommute => "reduce_b_commute",
            Check::GkReduction => "gk_reduction",
            Check::GkTypeFormula => "gk_type_formula",
        }
    }

    pub fn from_name(name: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub chart: ChartRef,
    /// Declared twist, before `b_field`.
    pub base_twist: DiffForm,
    pub b_field: Option<DiffForm>,
    pub structures: Vec<(String, GenStructure)>,
    pub action: Option<TorusAction>,
    /// Moment data after `b_field`.
    pub moment: Option<MomentData>,
    pub level: Vec<Scalar>,
    pub connection: Option<Connection>,
    pub alt_connection: Option<Connection>,
    pub basic_b: Vec<DiffForm>,
    pub points: Vec<(String, EvalPoint)>,
    pub checks: Vec<Check>,
}

impl Scenario {
    pub fn name(&self) -> &str {
        &self.file.name
    }

    /// SHA-256 of the canonical serialization of the scenario document.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(&self.file).expect("scenario serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn point(&self, name: &str) -> Option<&EvalPoint> {
        self.points.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    /// Structure carrying the moment data.
    pub fn primary(&self) -> &GenStructure {
        &self.structures[0].1
    }

    pub fn eval_points(&self) -> Vec<EvalPoint> {
        self.points.iter().map(|(_, p)| p.clone()).collect()
    }
}

struct Builder {
    chart: ChartRef,
}

impl Builder {
    fn expr(&self, src: &str, what: &str) -> Result<RingElement, LoadError> {
        parse_expr(src, &self.chart).map_err(|e| invalid(format!("{what}: {e}")))
    }

    fn form(&self, spec: &FormSpec, degree: usize, what: &str) -> Result<DiffForm, LoadError> {
        let mut terms = Vec::with_capacity(spec.len());
        for t in spec {
            if t.wedge.len() != degree {
                return Err(invalid(format!(
                    "{what}: term {:?} is not of degree {degree}",
                    t.wedge
                )));
            }
            let idx = t
                .wedge
                .iter()
                .map(|n| {
                    self.chart
                        .index_of(n)
                        .ok_or_else(|| invalid(format!("{what}: undeclared coordinate {n}")))
                })
                .collect::<Result<Vec<usize>, _>>()?;
            terms.push((idx, self.expr(&t.coeff, what)?));
        }
        DiffForm::from_terms(&self.chart, degree, terms)
            .map_err(|e| invalid(format!("{what}: {e}")))
    }

    fn matrix(&self, rows: &[Vec<String>], what: &str) -> Result<RingMatrix, LoadError> {
        let r = rows.len();
        if r == 0 || rows.iter().any(|row| row.len() != r) {
            return Err(invalid(format!(
                "{what}: matrix must be square and non-empty"
            )));
        }
        let mut m = RingMatrix::zeros(&self.chart, r, r);
        for (i, row) in rows.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                m.set(i, j, self.expr(e, what)?);
            }
        }
        Ok(m)
    }

    fn point(&self, spec: &PointSpec) -> Result<EvalPoint, LoadError> {
        let what = format!("point {}", spec.name);
        for k in spec.values.keys() {
            if self.chart.index_of(k).is_none() {
                return Err(invalid(format!("{what}: undeclared coordinate {k}")));
            }
        }
        let mut named = BTreeMap::new();
        for (i, c) in self.chart.coords().iter().enumerate() {
            let v = spec
                .values
                .get(&c.name)
                .ok_or_else(|| invalid(format!("{what}: missing coordinate {}", c.name)))?;
            let value = match self.chart.kind(i) {
                CoordKind::Affine => CoordValue::Affine(
                    parse_rational(v)
                        .ok_or_else(|| invalid(format!("{what}: {v} is not a rational")))?,
                ),
                CoordKind::Periodic => CoordValue::QuarterTurns(
                    v.parse()
                        .map_err(|_| invalid(format!("{what}: {v} is not a quarter-turn count")))?,
                ),
            };
            named.insert(c.name.clone(), value);
        }
        EvalPoint::from_named(&self.chart, &named).map_err(|e| invalid(format!("{what}: {e}")))
    }
}

fn build_chart(coords: &[CoordSpec]) -> Result<ChartRef, LoadError> {
    let spec = coords
        .iter()
        .map(|c| {
            let kind = match c.kind.as_str() {
                "affine" => CoordKind::Affine,
                "periodic" => CoordKind::Periodic,
                other => {
                    return Err(invalid(format!(
                        "coordinate {}: unknown kind {other}",
                        c.name
                    )))
                }
            };
            Ok((c.name.as_str(), kind))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Chart::from_spec(&spec).map_err(|e| invalid(format!("chart: {e}")))
}

fn structure(
    b: &Builder,
    spec: &StructureSpec,
    twist: &DiffForm,
) -> Result<GenStructure, LoadError> {
    let what = format!("structure {}", spec.name);
    let err = |e: crate::genstruct::GenError| invalid(format!("{what}: {e}"));
    let j = match spec.kind.as_str() {
        "symplectic" => {
            let omega = spec
                .omega
                .as_ref()
                .ok_or_else(|| invalid(format!("{what}: missing omega")))?;
            let omega = b.form(omega, 2, &what)?;
            if !exterior_d(&omega).is_zero() {
                return Err(invalid(format!("{what}: omega not closed")));
            }
            GenStructure::symplectic(&omega, twist.clone()).map_err(err)?
        }
        "complex" => {
            let m = spec
                .matrix
                .as_ref()
                .ok_or_else(|| invalid(format!("{what}: missing matrix")))?;
            GenStructure::complex(&b.matrix(m, &what)?, twist.clone()).map_err(err)?
        }
        "matrix" => {
            let m = spec
                .matrix
                .as_ref()
                .ok_or_else(|| invalid(format!("{what}: missing matrix")))?;
            GenStructure::new(b.matrix(m, &what)?, twist.clone()).map_err(err)?
        }
        other => return Err(invalid(format!("{what}: unknown kind {other}"))),
    };
    if j.dim() != b.chart.dim() {
        return Err(invalid(format!("{what}: size does not match the chart")));
    }
    match &spec.b_transform {
        Some(bt) => b_transform_structure(&b.form(bt, 2, &what)?, &j).map_err(err),
        None => Ok(j),
    }
}

fn build_connection(
    b: &Builder,
    spec: &[FormSpec],
    action: &TorusAction,
    what: &str,
) -> Result<Connection, LoadError> {
    let theta = spec
        .iter()
        .map(|s| b.form(s, 1, what))
        .collect::<Result<Vec<_>, _>>()?;
    Connection::new(theta, action).map_err(|e| invalid(format!("{what}: {e}")))
}

fn needs(ok: bool, check: Check, what: &str) -> Result<(), LoadError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(format!("check {} needs {what}", check.name())))
    }
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Scenario, LoadError> {
        let chart = build_chart(&file.coordinates)?;
        let b = Builder {
            chart: chart.clone(),
        };
        let base_twist = if file.twist.is_empty() {
            DiffForm::zero(&chart, 3)
        } else {
            b.form(&file.twist, 3, "twist")?
        };
        if !exterior_d(&base_twist).is_zero() {
            return Err(invalid("twist not closed"));
        }
        let b_field = file
            .b_field
            .as_ref()
            .map(|s| b.form(s, 2, "b_field"))
            .transpose()?;
        if file.structures.is_empty() || file.structures.len() > 2 {
            return Err(invalid("a scenario declares one structure or a pair"));
        }
        let mut structures = Vec::new();
        for s in &file.structures {
            if structures.iter().any(|(n, _)| n == &s.name) {
                return Err(invalid(format!("duplicate structure name {}", s.name)));
            }
            let mut j = structure(&b, s, &base_twist)?;
            if let Some(bf) = &b_field {
                j = b_transform_structure(bf, &j).map_err(|e| invalid(format!("b_field: {e}")))?;
            }
            structures.push((s.name.clone(), j));
        }

        let action = if file.action.is_empty() && file.moment.is_none() {
            None
        } else {
            let generators = file
                .action
                .iter()
                .enumerate()
                .map(|(i, comps)| {
                    let what = format!("generator {i}");
                    let comps = comps
                        .iter()
                        .map(|e| b.expr(e, &what))
                        .collect::<Result<Vec<_>, _>>()?;
                    VectorField::new(&chart, comps).map_err(|e| invalid(format!("{what}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(
                TorusAction::new(&chart, generators)
                    .map_err(|e| invalid(format!("action: {e}")))?,
            )
        };

        let moment = match (&file.moment, &action) {
            (None, _) => None,
            (Some(m), Some(action)) => {
                if m.f.len() != action.rank() {
                    return Err(invalid("moment: one component per generator"));
                }
                let f =
                    m.f.iter()
                        .map(|e| b.expr(e, "moment"))
                        .collect::<Result<Vec<_>, _>>()?;
                let alpha = match &m.alpha {
                    Some(a) => a
                        .iter()
                        .map(|s| b.form(s, 1, "moment alpha"))
                        .collect::<Result<Vec<_>, _>>()?,
                    None => vec![DiffForm::zero(&chart, 1); f.len()],
                };
                let md = MomentData::new(f, alpha).map_err(|e| invalid(format!("moment: {e}")))?;
                Some(match &b_field {
                    Some(bf) => moment_b_transform(bf, &md, action)
                        .map_err(|e| invalid(format!("moment: {e}")))?,
                    None => md,
                })
            }
            (Some(_), None) => unreachable!("moment implies an action"),
        };

        let level = file
            .level
            .iter()
            .map(|v| {
                parse_rational(v)
                    .map(real)
                    .ok_or_else(|| invalid(format!("level: {v} is not a rational")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(md) = &moment {
            if level.len() != md.rank() {
                return Err(invalid("level: one value per moment component"));
            }
        }

        let connection = match (&file.connection, &action) {
            (Some(c), Some(a)) => Some(build_connection(&b, c, a, "connection")?),
            (Some(_), None) => return Err(invalid("connection without an action")),
            _ => None,
        };
        let alt_connection = match (&file.alt_connection, &action) {
            (Some(c), Some(a)) => Some(build_connection(&b, c, a, "alt_connection")?),
            (Some(_), None) => return Err(invalid("alt_connection without an action")),
            _ => None,
        };
        let basic_b = file
            .basic_b
            .iter()
            .map(|s| b.form(s, 2, "basic_b"))
            .collect::<Result<Vec<_>, _>>()?;

        let mut points: Vec<(String, EvalPoint)> = Vec::new();
        for p in &file.points {
            if points.iter().any(|(n, _)| n == &p.name) {
                return Err(invalid(format!("duplicate point name {}", p.name)));
            }
            points.push((p.name.clone(), b.point(p)?));
        }

        let mut checks = Vec::new();
        for name in &file.checks {
            let c =
                Check::from_name(name).ok_or_else(|| invalid(format!("unknown check {name}")))?;
            if !checks.contains(&c) {
                checks.push(c);
            }
        }
        checks.sort();
        for name in file.expect.keys() {
            let c = Check::from_name(name)
                .ok_or_else(|| invalid(format!("expectation for unknown check {name}")))?;
            if !checks.contains(&c) {
                return Err(invalid(format!("expectation for unrequested check {name}")));
            }
        }

        let s = Scenario {
            file,
            chart,
            base_twist,
            b_field,
            structures,
            action,
            moment,
            level,
            connection,
            alt_connection,
            basic_b,
            points,
            checks,
        };
        s.validate_checks()?;
        Ok(s)
    }

    fn validate_checks(&self) -> Result<(), LoadError> {
        let has_moment = self.moment.is_some();
        let pair = self.structures.len() == 2;
        for &c in &self.checks {
            match c {
                Check::Algebraic | Check::Types => {}
                Check::Integrability => needs(!self.points.is_empty(), c, "sample points")?,
                Check::TwistFlip => needs(self.b_field.is_some(), c, "a b_field")?,
                Check::GkPair => needs(pair, c, "a pair of structures")?,
                Check::CartanSquare
                | Check::EquivariantClosed
                | Check::DfPerpClosure
                | Check::LevelClosure => needs(has_moment, c, "moment data")?,
                Check::MomentMap => needs(
                    has_moment && !self.points.is_empty(),
                    c,
                    "moment data and points",
                )?,
                Check::MomentBTransform => needs(
                    has_moment && self.b_field.iter().count() + self.basic_b.len() >= 2,
                    c,
                    "moment data and two B-fields",
                )?,
                Check::Gamma => needs(
                    has_moment && self.connection.is_some(),
                    c,
                    "moment data and a connection",
                )?,
                Check::ConnectionIndependence => needs(
                    has_moment
                        && self.connection.is_some()
                        && self.alt_connection.is_some()
                        && !self.points.is_empty(),
                    c,
                    "moment data, two connections and points",
                )?,
                Check::Reduction
                | Check::ReduceBCommute
                | Check::GkReduction
                | Check::GkTypeFormula => {
                    needs(
                        has_moment && !self.points.is_empty(),
                        c,
                        "moment data and points",
                    )?;
                    if c == Check::ReduceBCommute {
                        needs(!self.basic_b.is_empty(), c, "basic_b forms")?;
                    }
                    if matches!(c, Check::GkReduction | Check::GkTypeFormula) {
                        needs(pair, c, "a pair of structures")?;
                    }
                    self.require_on_level(c)?;
                }
            }
        }
        Ok(())
    }

    fn require_on_level(&self, c: Check) -> Result<(), LoadError> {
        let md = self.moment.as_ref().expect("checked");
        for (name, p) in &self.points {
            for (f, a) in md.f().iter().zip(&self.level) {
                let v = f
                    .evaluate(p)
                    .map_err(|e| invalid(format!("point {name}: {e}")))?;
                if &v != a {
                    return Err(invalid(format!(
                        "check {} needs point {name} on the level set",
                        c.name()
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, LoadError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| LoadError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Scenario::from_file(file)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_scenario(&text)
}

/// Built-in scenarios, in listing order.
pub const CATALOG: [(&str, &str); 9] = [
    (
        "symplectic_T4",
        include_str!("scenarios/symplectic_T4.json"),
    ),
    ("complex_R2", include_str!("scenarios/complex_R2.json")),
    ("btwist_T4", include_str!("scenarios/btwist_T4.json")),
    (
        "kahler_C2_circle",
        include_str!("scenarios/kahler_C2_circle.json"),
    ),
    (
        "gamma_torus_cylinder",
        include_str!("scenarios/gamma_torus_cylinder.json"),
    ),
    (
        "trivial_action",
        include_str!("scenarios/trivial_action.json"),
    ),
    (
        "bfield_C2_circle",
        include_str!("scenarios/bfield_C2_circle.json"),
    ),
    (
        "exact_moment_C2_circle",
        include_str!("scenarios/exact_moment_C2_circle.json"),
    ),
    (
        "gk_T2R2_bihermitian",
        include_str!("scenarios/gk_T2R2_bihermitian.json"),
    ),
];

pub fn catalog_source(name: &str) -> Option<&'static str> {
    CATALOG.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn catalog_scenario(name: &str) -> Result<Scenario, LoadError> {
    parse_scenario(catalog_source(name).ok_or_else(|| LoadError::UnknownScenario(name.into()))?)
}

/// One line per built-in scenario: name and description.
pub fn list_catalog() -> String {
    let mut out = String::new();
    for (name, src) in CATALOG {
        let file: ScenarioFile = serde_json::from_str(src).expect("built-in scenario parses");
        out.push_str(&format!("{name:<24} {}\n", file.description));
    }
    out
}

/// Outcome of running the whole catalog twice.
#[derive(Clone, Debug)]
pub struct SelfTest {
    /// JSON reports in catalog order.
    pub reports: Vec<(String, String)>,
    /// Verdicts that differ from a scenario's expectations.
    pub unexpected: Vec<String>,
    /// The second run produced byte-identical reports.
    pub deterministic: bool,
}

impl SelfTest {
    pub fn passed(&self) -> bool {
        self.unexpected.is_empty() && self.deterministic
    }
}

fn catalog_run() -> Vec<(String, String, Vec<String>)> {
    use rayon::prelude::*;
    CATALOG
        .par_iter()
        .map(|(name, _)| {
            let s = catalog_scenario(name).expect("built-in scenario loads");
            let r = run_checks(&s);
            let unexpected = r
                .unexpected(&s)
                .into_iter()
                .map(|u| format!("{name}: {u}"))
                .collect();
            (name.to_string(), r.to_json(), unexpected)
        })
        .collect()
}

/// Runs every built-in scenario twice and compares against expectations.
pub fn selftest() -> SelfTest {
    let first = catalog_run();
    let second = catalog_run();
    let deterministic = first.iter().zip(&second).all(|(a, b)| a.1 == b.1);
    let unexpected = first.iter().flat_map(|(_, _, u)| u.clone()).collect();
    SelfTest {
        reports: first.into_iter().map(|(n, j, _)| (n, j)).collect(),
        unexpected,
        deterministic,
    }
}

#[cfg(test)]
mod tests;
