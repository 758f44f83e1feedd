//! Yang–Baxter residuals for face families and four-factor cube equations
//! evaluated under caller-supplied leg wiring.

use crate::elliptic::{baxter_couplings, EllipticError, EllipticPoint};
use crate::ising::{build_r_complex, face_r};
use crate::partition::leg_reversal;
use crate::tensor::{c, kron, max_abs, ComplexMatrix, C64};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrabilityError {
    #[error("leg `{0}` appears {1} times on one side")]
    LegMultiplicity(String, usize),
    #[error("open legs differ between the two sides")]
    OpenLegMismatch,
    #[error("operator `{0}` is not defined")]
    UnknownOperator(String),
    #[error("operator `{op}` has {got} legs, its matrix needs {expected}")]
    LegCount { op: String, expected: usize, got: usize },
    #[error("leg `{0}` joins legs of different dimension")]
    DimensionMismatch(String),
    #[error("a side of the pattern is empty")]
    EmptySide,
    #[error("left-hand side vanishes; residual undefined")]
    ZeroScale,
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
}

/// Dense tensor with named legs, row-major in leg order.
#[derive(Debug, Clone)]
pub struct Tensor {
    pub legs: Vec<String>,
    pub dims: Vec<usize>,
    pub data: Vec<C64>,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

impl Tensor {
    /// A `d^k × d^k` operator with legs `[in_1..in_k, out_1..out_k]`.
    pub fn from_operator(m: &ComplexMatrix, legs: &[String]) -> Result<Self, usize> {
        let k = legs.len() / 2;
        let n = m.nrows();
        let d = (2..=n).find(|d| d.pow(k as u32) == n).filter(|_| legs.len().is_multiple_of(2) && m.ncols() == n).ok_or(n)?;
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for q in 0..n {
                data.push(m[(r, q)]);
            }
        }
        Ok(Self { legs: legs.to_vec(), dims: vec![d; 2 * k], data })
    }

    /// Reorders legs to `order`.
    pub fn permuted(&self, order: &[String]) -> Tensor {
        let pos: Vec<usize> = order.iter().map(|l| self.legs.iter().position(|x| x == l).expect("leg present")).collect();
        let dims: Vec<usize> = pos.iter().map(|&p| self.dims[p]).collect();
        let old = strides(&self.dims);
        let total = self.data.len();
        let mut data = vec![c(0.0, 0.0); total];
        let mut idx = vec![0usize; dims.len()];
        for slot in data.iter_mut() {
            let src: usize = idx.iter().zip(&pos).map(|(i, &p)| i * old[p]).sum();
            *slot = self.data[src];
            for k in (0..dims.len()).rev() {
                idx[k] += 1;
                if idx[k] < dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Tensor { legs: order.to_vec(), dims, data }
    }

    /// Sums over every leg name the two tensors share.
    pub fn contract(&self, other: &Tensor) -> Result<Tensor, IntegrabilityError> {
        let shared: Vec<String> = self.legs.iter().filter(|l| other.legs.contains(l)).cloned().collect();
        for l in &shared {
            let da = self.dims[self.legs.iter().position(|x| x == l).unwrap()];
            let db = other.dims[other.legs.iter().position(|x| x == l).unwrap()];
            if da != db {
                return Err(IntegrabilityError::DimensionMismatch(l.clone()));
            }
        }
        let free_a: Vec<String> = self.legs.iter().filter(|l| !shared.contains(l)).cloned().collect();
        let free_b: Vec<String> = other.legs.iter().filter(|l| !shared.contains(l)).cloned().collect();
        let a = self.permuted(&[free_a.clone(), shared.clone()].concat());
        let b = other.permuted(&[shared.clone(), free_b.clone()].concat());
        let s: usize = a.dims[free_a.len()..].iter().product();
        let ra = a.data.len() / s;
        let cb = b.data.len() / s;
        let ma = DMatrix::from_row_slice(ra, s, &a.data);
        let mb = DMatrix::from_row_slice(s, cb, &b.data);
        let prod = ma * mb;
        let mut data = Vec::with_capacity(ra * cb);
        for r in 0..ra {
            for q in 0..cb {
                data.push(prod[(r, q)]);
            }
        }
        let dims = [&a.dims[..free_a.len()], &b.dims[shared.len()..]].concat();
        Ok(Tensor { legs: [free_a, free_b].concat(), dims, data })
    }
}

/// One operator occurrence: its id and its legs, inputs first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpPlacement {
    pub op: String,
    pub legs: Vec<String>,
}

/// Both sides of an equation. Every leg name occurs twice on a side (summed)
/// or once on each side (open).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractionPattern {
    pub lhs: Vec<OpPlacement>,
    pub rhs: Vec<OpPlacement>,
}

fn open_legs(side: &[OpPlacement]) -> Result<Vec<String>, IntegrabilityError> {
    let mut count: BTreeMap<&str, usize> = BTreeMap::new();
    for p in side {
        for l in &p.legs {
            *count.entry(l).or_default() += 1;
        }
    }
    let mut open = Vec::new();
    for (l, n) in count {
        match n {
            1 => open.push(l.to_string()),
            2 => {}
            _ => return Err(IntegrabilityError::LegMultiplicity(l.to_string(), n)),
        }
    }
    Ok(open)
}

impl ContractionPattern {
    /// Open legs, sorted; identical on both sides for a valid pattern.
    pub fn validate(&self) -> Result<Vec<String>, IntegrabilityError> {
        if self.lhs.is_empty() || self.rhs.is_empty() {
            return Err(IntegrabilityError::EmptySide);
        }
        let (a, b) = (open_legs(&self.lhs)?, open_legs(&self.rhs)?);
        if a != b {
            return Err(IntegrabilityError::OpenLegMismatch);
        }
        Ok(a)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

fn contract_side(side: &[OpPlacement], ops: &HashMap<String, ComplexMatrix>, open: &[String]) -> Result<Tensor, IntegrabilityError> {
    let mut acc: Option<Tensor> = None;
    for p in side {
        let m = ops.get(&p.op).ok_or_else(|| IntegrabilityError::UnknownOperator(p.op.clone()))?;
        let t = Tensor::from_operator(m, &p.legs).map_err(|n| IntegrabilityError::LegCount {
            op: p.op.clone(),
            expected: 2 * (n as f64).log2().round() as usize,
            got: p.legs.len(),
        })?;
        acc = Some(match acc {
            None => t,
            Some(a) => a.contract(&t)?,
        });
    }
    Ok(acc.expect("non-empty side").permuted(open))
}

/// Contracts both sides; the results share the sorted open-leg order.
pub fn contract(pattern: &ContractionPattern, ops: &HashMap<String, ComplexMatrix>) -> Result<(Tensor, Tensor), IntegrabilityError> {
    let open = pattern.validate()?;
    Ok((contract_side(&pattern.lhs, ops, &open)?, contract_side(&pattern.rhs, ops, &open)?))
}

impl ContractionPattern {
    /// Removes placements whose legs are all open and which occur verbatim on
    /// both sides. Both contractions then lose the same tensor factor, which
    /// leaves the relative residual unchanged.
    pub fn without_spectators(&self) -> Result<ContractionPattern, IntegrabilityError> {
        let open = self.validate()?;
        let idle = |p: &OpPlacement| p.legs.iter().all(|l| open.contains(l));
        let common: Vec<OpPlacement> = self.lhs.iter().filter(|p| idle(p) && self.rhs.contains(p)).cloned().collect();
        let keep = |side: &[OpPlacement]| side.iter().filter(|p| !common.contains(p)).cloned().collect::<Vec<_>>();
        let reduced = ContractionPattern { lhs: keep(&self.lhs), rhs: keep(&self.rhs) };
        if reduced.lhs.is_empty() || reduced.rhs.is_empty() {
            return Ok(self.clone());
        }
        Ok(reduced)
    }
}

/// `max|L − R| / max|L|`.
pub fn relative_residual(l: &[C64], r: &[C64]) -> Result<f64, IntegrabilityError> {
    let scale = l.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(IntegrabilityError::ZeroScale);
    }
    Ok(l.iter().zip(r).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale)
}

pub fn pattern_residual(pattern: &ContractionPattern, ops: &HashMap<String, ComplexMatrix>) -> Result<f64, IntegrabilityError> {
    for p in pattern.lhs.iter().chain(&pattern.rhs) {
        if !ops.contains_key(&p.op) {
            return Err(IntegrabilityError::UnknownOperator(p.op.clone()));
        }
    }
    let (l, r) = contract(&pattern.without_spectators()?, ops)?;
    relative_residual(&l.data, &r.data)
}

/// Residuals below this count as satisfied in reports.
pub const SATISFIED: f64 = 1e-8;

fn swap4() -> ComplexMatrix {
    ComplexMatrix::from_fn(4, 4, |r, q| if q == (r & 1) << 1 | r >> 1 { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// `R12(u1−u2) R13(u1−u3) R23(u2−u3)` against the reversed product on
/// `V⊗V⊗V`, as a relative max-entry residual.
pub fn ybe_residual<E>(family: impl Fn(f64) -> Result<ComplexMatrix, E>, u1: f64, u2: f64, u3: f64) -> Result<f64, E>
where
    E: From<IntegrabilityError>,
{
    let id = ComplexMatrix::identity(2, 2);
    let p23 = kron(&id, &swap4());
    let r12 = |x: f64| family(x).map(|r| kron(&r, &id));
    let r23 = |x: f64| family(x).map(|r| kron(&id, &r));
    let r13 = |x: f64| r12(x).map(|m| &p23 * m * &p23);
    let (a, b, cc) = (r12(u1 - u2)?, r13(u1 - u3)?, r23(u2 - u3)?);
    let lhs = &a * &b * &cc;
    let rhs = &cc * &b * &a;
    if max_abs(&lhs) == 0.0 {
        return Err(IntegrabilityError::ZeroScale.into());
    }
    Ok(relative_residual(lhs.as_slice(), rhs.as_slice())?)
}

/// Face weight at `J_h`, `J_v` followed by the swap `P`. The face maps its
/// leg pair onto the same pair, so the operator entering the equation on
/// `V⊗V⊗V` is `P·face`.
pub fn crossing_face(jh: C64, jv: C64) -> ComplexMatrix {
    swap4() * face_r(jh, jv)
}

/// Crossing face family of the cube with one horizontal coupling switched
/// off: the elliptic couplings at `(u, w) = (v, 0)`, `J_h = J1(v)`, `J_v = J3(v)`.
pub fn face_family(k: f64) -> impl Fn(f64) -> Result<ComplexMatrix, IntegrabilityError> {
    move |v: f64| {
        let b = baxter_couplings(&EllipticPoint::real(v, 0.0, k)?)?;
        Ok(crossing_face(b.couplings.j1, b.couplings.j3))
    }
}

/// Cube family `R(u, w)` from the elliptic couplings.
pub fn cube_family(k: f64) -> impl Fn(f64, f64) -> Result<ComplexMatrix, IntegrabilityError> {
    move |u: f64, w: f64| {
        let b = baxter_couplings(&EllipticPoint::real(u, w, k)?)?;
        Ok(build_r_complex(&b.couplings).into_matrix())
    }
}

/// Six spectral parameters `u1..u6`; factor `f` receives `(x, y)` with its
/// three arguments `(x, y, x + y)` built from differences `u_ij = u_i − u_j`:
/// `f1(u12, u51, u52)`, `f2(u34, u53, u54)`, `f3(u36, u13, u16)`, `f4(u46, u24, u26)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralAssignment {
    pub u: [f64; 6],
}

impl SpectralAssignment {
    pub fn diff(&self, i: usize, j: usize) -> f64 {
        self.u[i - 1] - self.u[j - 1]
    }

    /// `(u, w, u + w)` of factor `f` (0-based).
    pub fn triple(&self, f: usize) -> (f64, f64, f64) {
        let d = |i, j| self.diff(i, j);
        match f {
            0 => (d(1, 2), d(5, 1), d(5, 2)),
            1 => (d(3, 4), d(5, 3), d(5, 4)),
            2 => (d(3, 6), d(1, 3), d(1, 6)),
            _ => (d(4, 6), d(2, 4), d(2, 6)),
        }
    }
}

/// Factor ids used by the cube patterns.
pub const CUBE_FACTORS: [&str; 4] = ["f1", "f2", "f3", "f4"];

fn legs(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn place(op: &str, names: &[&str]) -> OpPlacement {
    OpPlacement { op: op.into(), legs: legs(names) }
}

/// Pattern whose legs 1 and 3 of `f1, f2, f3` are wired as the Yang–Baxter
/// equation on spaces `a, b, c`, each factor crossing its two spaces (output
/// leg 1 continues the second space, output leg 3 the first). Legs 2 and 4
/// of these factors and all of `f4` stay open. When every factor splits into
/// two faces this reduces to the Yang–Baxter equation of [`face_family`].
pub fn ybe_degeneration_pattern() -> ContractionPattern {
    let open24 = |f: &str| [format!("{f}.i2"), format!("{f}.i4"), format!("{f}.o2"), format!("{f}.o4")];
    let cube = |f: &str, i1: &str, i3: &str, o1: &str, o3: &str| {
        let [i2, i4, o2, o4] = open24(f);
        OpPlacement { op: f.into(), legs: vec![i1.into(), i2, i3.into(), i4, o1.into(), o2, o3.into(), o4] }
    };
    let f4 = place("f4", &["f4.i1", "f4.i2", "f4.i3", "f4.i4", "f4.o1", "f4.o2", "f4.o3", "f4.o4"]);
    ContractionPattern {
        lhs: vec![
            cube("f1", "a0", "b0", "b1", "a1"),
            cube("f2", "a1", "c0", "c1", "a2"),
            cube("f3", "b1", "c1", "c2", "b2"),
            f4.clone(),
        ],
        rhs: vec![
            f4,
            cube("f3", "b0", "c0", "c1'", "b1'"),
            cube("f2", "a0", "c1'", "c2", "a1'"),
            cube("f1", "a1'", "b1'", "b2", "a2"),
        ],
    }
}

/// Stack of the four factors with leg reversal between them, as in the
/// staggered lattice: `f1·rev·f2·rev·f3·rev·f4` against the reversed order.
pub fn checkerboard_pattern() -> ContractionPattern {
    let chain = |ops: [&str; 7]| {
        ops.iter()
            .enumerate()
            .map(|(t, op)| {
                let mut l: Vec<String> = (1..=4).map(|k| format!("l{t}.{k}")).collect();
                l.extend((1..=4).map(|k| format!("l{}.{k}", t + 1)));
                OpPlacement { op: op.to_string(), legs: l }
            })
            .collect::<Vec<_>>()
    };
    ContractionPattern {
        lhs: chain(["f1", "rev", "f2", "rev", "f3", "rev", "f4"]),
        rhs: chain(["f4", "rev", "f3", "rev", "f2", "rev", "f1"]),
    }
}

/// Operators `f1..f4` of the family at an assignment, plus `rev`.
pub fn cube_operators(family: &impl Fn(f64, f64) -> Result<ComplexMatrix, IntegrabilityError>, a: &SpectralAssignment) -> Result<HashMap<String, ComplexMatrix>, IntegrabilityError> {
    let mut ops = HashMap::new();
    for (f, name) in CUBE_FACTORS.iter().enumerate() {
        let (u, w, _) = a.triple(f);
        ops.insert(name.to_string(), family(u, w)?);
    }
    ops.insert("rev".into(), leg_reversal());
    Ok(ops)
}

pub fn cube_equation_residual(
    family: &impl Fn(f64, f64) -> Result<ComplexMatrix, IntegrabilityError>,
    assignment: &SpectralAssignment,
    pattern: &ContractionPattern,
) -> Result<f64, IntegrabilityError> {
    pattern_residual(pattern, &cube_operators(family, assignment)?)
}

/// One survey point. `residual` is `None` when the point is singular.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyRow {
    pub params: Vec<f64>,
    pub residual: Option<f64>,
    pub error: Option<String>,
}

impl SurveyRow {
    fn from_result(params: Vec<f64>, r: Result<f64, IntegrabilityError>) -> Self {
        match r {
            Ok(v) => Self { params, residual: Some(v), error: None },
            Err(e) => Self { params, residual: None, error: Some(e.to_string()) },
        }
    }

    pub fn satisfied(&self) -> bool {
        self.residual.is_some_and(|r| r < SATISFIED)
    }
}

/// CSV with the given parameter column names, then `residual,satisfied,error`.
pub fn survey_csv(columns: &[&str], rows: &[SurveyRow]) -> String {
    let mut out = columns.join(",");
    out.push_str(",residual,satisfied,error\n");
    for r in rows {
        let params: Vec<String> = r.params.iter().map(|v| format!("{v}")).collect();
        let res = r.residual.map(|v| format!("{v:e}")).unwrap_or_default();
        let err = r.error.as_deref().unwrap_or("").replace(',', ";");
        out.push_str(&format!("{},{res},{},{err}\n", params.join(","), r.satisfied()));
    }
    out
}

/// Face-family residual over all ordered triples drawn from `grid`.
pub fn ybe_survey(k: f64, grid: &[f64]) -> Vec<SurveyRow> {
    let triples: Vec<[f64; 3]> = grid.iter().flat_map(|&a| grid.iter().flat_map(move |&b| grid.iter().map(move |&c3| [a, b, c3]))).collect();
    triples
        .par_iter()
        .map(|t| SurveyRow::from_result(t.to_vec(), ybe_residual(face_family(k), t[0], t[1], t[2])))
        .collect()
}

/// Cube-equation residual of the elliptic family at each assignment.
pub fn cube_survey(k: f64, assignments: &[SpectralAssignment], pattern: &ContractionPattern) -> Vec<SurveyRow> {
    let family = cube_family(k);
    assignments
        .par_iter()
        .map(|a| SurveyRow::from_result(a.u.to_vec(), cube_equation_residual(&family, a, pattern)))
        .collect()
}
