//! Exterior algebra on the eight cube generators `ψ̄1..ψ̄4, ψ1..ψ4`, the
//! coherent-state kernel of a vertex matrix and its action coefficients.

use crate::ising::{IsingCouplings, BONDS};
use crate::tensor::{c, CubeMatrix, MultiIndex, C64};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;
use twofloat::TwoFloat;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrassmannError {
    #[error("scalar part vanishes; the normalisation A0 is undefined at this point")]
    ZeroScalar,
    #[error("grading is only defined for two-state legs, got N = {0}")]
    NotBinary(usize),
}

/// A generator: `Bar(k)` is `ψ̄_{k+1}`, `Psi(k)` is `ψ_{k+1}` (zero-based leg).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gen {
    Bar(usize),
    Psi(usize),
}

impl Gen {
    /// Bit in the canonical order `ψ̄1, ψ̄2, ψ̄3, ψ̄4, ψ1, ψ2, ψ3, ψ4`.
    pub fn bit(self) -> u8 {
        match self {
            Gen::Bar(k) => 1 << k,
            Gen::Psi(k) => 1 << (4 + k),
        }
    }
}

/// Sign of `a·b` relative to the sorted monomial `a|b` (masks assumed disjoint).
pub fn merge_sign(a: u8, b: u8) -> f64 {
    let mut swaps = 0;
    for y in 0..8 {
        if b >> y & 1 == 1 {
            swaps += ((a as u32) >> (y + 1)).count_ones();
        }
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Product of generators in the given order as `(mask, sign)`; `None` if a
/// generator repeats.
pub fn monomial(gens: &[Gen]) -> Option<(u8, f64)> {
    let mut mask = 0u8;
    let mut sign = 1.0;
    for g in gens {
        let b = g.bit();
        if mask & b != 0 {
            return None;
        }
        sign *= merge_sign(mask, b);
        mask |= b;
    }
    Some((mask, sign))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GrassmannPoly {
    terms: BTreeMap<u8, C64>,
}

impl GrassmannPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn scalar(v: C64) -> Self {
        let mut p = Self::zero();
        p.add_term(0, v);
        p
    }

    /// `coeff · g1 g2 …` in the written order.
    pub fn term(gens: &[Gen], coeff: C64) -> Self {
        let mut p = Self::zero();
        if let Some((m, s)) = monomial(gens) {
            p.add_term(m, coeff * s);
        }
        p
    }

    pub fn add_term(&mut self, mask: u8, v: C64) {
        let slot = self.terms.entry(mask).or_insert(c(0.0, 0.0));
        *slot += v;
        if *slot == c(0.0, 0.0) {
            self.terms.remove(&mask);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (u8, C64)> + '_ {
        self.terms.iter().map(|(m, v)| (*m, *v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of a canonical (sorted) monomial.
    pub fn get(&self, mask: u8) -> C64 {
        self.terms.get(&mask).copied().unwrap_or(c(0.0, 0.0))
    }

    /// Coefficient of the product of `gens` taken in the written order.
    pub fn coeff(&self, gens: &[Gen]) -> C64 {
        match monomial(gens) {
            Some((m, s)) => self.get(m) * s,
            None => c(0.0, 0.0),
        }
    }

    pub fn scalar_part(&self) -> C64 {
        self.get(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, v) in other.terms() {
            out.add_term(m, v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self::zero();
        for (m, v) in self.terms() {
            out.add_term(m, v * s);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        gp_mul(self, other)
    }

    /// Drops coefficients below `tol` in modulus.
    pub fn pruned(&self, tol: f64) -> Self {
        Self { terms: self.terms.iter().filter(|(_, v)| v.norm() > tol).map(|(m, v)| (*m, *v)).collect() }
    }

    /// Part of total degree `d`.
    pub fn degree_part(&self, d: u32) -> Self {
        Self { terms: self.terms.iter().filter(|(m, _)| m.count_ones() == d).map(|(m, v)| (*m, *v)).collect() }
    }

    pub fn max_abs_where(&self, pred: impl Fn(u8) -> bool) -> f64 {
        self.terms.iter().filter(|(m, _)| pred(**m)).map(|(_, v)| v.norm()).fold(0.0, f64::max)
    }
}

/// Graded product; overlapping monomials annihilate.
pub fn gp_mul(p: &GrassmannPoly, q: &GrassmannPoly) -> GrassmannPoly {
    let mut out = GrassmannPoly::zero();
    for (a, x) in p.terms() {
        for (b, y) in q.terms() {
            if a & b == 0 {
                out.add_term(a | b, x * y * merge_sign(a, b));
            }
        }
    }
    out
}

/// Terminating exponential.
pub fn gp_exp(p: &GrassmannPoly) -> GrassmannPoly {
    let s = p.scalar_part();
    let mut x = p.clone();
    x.add_term(0, -s);
    let mut out = GrassmannPoly::scalar(c(1.0, 0.0));
    let mut power = GrassmannPoly::scalar(c(1.0, 0.0));
    for m in 1..=8 {
        power = gp_mul(&power, &x).scale(c(1.0 / m as f64, 0.0));
        if power.is_empty() {
            break;
        }
        out = out.add(&power);
    }
    out.scale(s.exp())
}

/// `p = A0 · exp(L)`: returns `(A0, L)` with the series in `X = p/A0 − 1`.
pub fn gp_log(p: &GrassmannPoly) -> Result<(C64, GrassmannPoly), GrassmannError> {
    let a0 = p.scalar_part();
    if a0.norm() == 0.0 {
        return Err(GrassmannError::ZeroScalar);
    }
    let mut x = p.scale(a0.inv());
    x.add_term(0, c(-1.0, 0.0));
    let mut out = GrassmannPoly::zero();
    let mut power = GrassmannPoly::scalar(c(1.0, 0.0));
    for m in 1..=8 {
        power = gp_mul(&power, &x);
        if power.is_empty() {
            break;
        }
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        out = out.add(&power.scale(c(sign / m as f64, 0.0)));
    }
    Ok((a0, out))
}

/// `Σ_k ψ̄_k ψ_k`, the exponent of the identity kernel.
pub fn identity_exponent() -> GrassmannPoly {
    (0..4).fold(GrassmannPoly::zero(), |acc, k| acc.add(&GrassmannPoly::term(&[Gen::Bar(k), Gen::Psi(k)], c(1.0, 0.0))))
}

/// Exponent of the grading sign: `Σ_{t<k} p(i_t)(p(i_k) + p(j_k))`.
pub fn grading_sign(i: MultiIndex, j: MultiIndex) -> f64 {
    let (pi, pj) = (i.digits, j.digits);
    let mut e = 0;
    for t in 0..3 {
        for k in t + 1..4 {
            e += pi[t] * (pi[k] + pj[k]);
        }
    }
    if e % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Upper indices reversed with the sign `(−1)^{Σ_{k>t} p(j_k) p(j_t)}`.
pub fn graded_r(r: &CubeMatrix) -> Result<CubeMatrix, GrassmannError> {
    if r.n() != 2 {
        return Err(GrassmannError::NotBinary(r.n()));
    }
    Ok(CubeMatrix::from_fn(2, |i, j| {
        let d = j.digits;
        let mut e = 0;
        for k in 1..4 {
            for t in 0..k {
                e += d[k] * d[t];
            }
        }
        let s = if e % 2 == 0 { 1.0 } else { -1.0 };
        r.entry(i, j.reversed()) * s
    }))
}

/// Order in which the four legs are strung into fermion modes. `Ccw` runs
/// around the plaquette `1 → 2 → 4 → 3`, `Cw` runs `1 → 3 → 4 → 2`,
/// `RowMajor` is `1 → 2 → 3 → 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FermionOrder {
    Ccw,
    Cw,
    RowMajor,
    Custom([usize; 4]),
}

impl FermionOrder {
    pub fn legs(self) -> [usize; 4] {
        match self {
            FermionOrder::Ccw => [0, 1, 3, 2],
            FermionOrder::Cw => [0, 2, 3, 1],
            FermionOrder::RowMajor => [0, 1, 2, 3],
            FermionOrder::Custom(o) => o,
        }
    }
}

/// Sign with which `R_i^j` enters the canonical monomial `ψ̄^{(j)} ψ^{(i)}`:
/// occupied `ψ̄` taken in mode order, occupied `ψ` in reverse mode order.
pub fn kernel_sign(i: MultiIndex, j: MultiIndex, order: FermionOrder) -> f64 {
    let legs = order.legs();
    let mut gens: Vec<Gen> = legs.iter().filter(|&&k| j.digits[k] == 1).map(|&k| Gen::Bar(k)).collect();
    gens.extend(legs.iter().rev().filter(|&&k| i.digits[k] == 1).map(|&k| Gen::Psi(k)));
    monomial(&gens).map(|(_, s)| s).unwrap_or(0.0)
}

/// Coherent-state kernel `Σ R_i^j ψ̄^{(j)} ψ^{(i)}`; `R = I` maps to `Π(1 + ψ̄_k ψ_k)`.
pub fn coherent_kernel(r: &CubeMatrix, order: FermionOrder) -> Result<GrassmannPoly, GrassmannError> {
    if r.n() != 2 {
        return Err(GrassmannError::NotBinary(r.n()));
    }
    let mut k = GrassmannPoly::zero();
    for row in 0..16 {
        for col in 0..16 {
            let v = r.matrix()[(row, col)];
            if v == c(0.0, 0.0) {
                continue;
            }
            let i = MultiIndex::decode(row, 2).unwrap();
            let j = MultiIndex::decode(col, 2).unwrap();
            let mask = (0..4).fold(0u8, |m, t| m | (j.digits[t] as u8) << t | (i.digits[t] as u8) << (4 + t));
            k.add_term(mask, v * kernel_sign(i, j, order));
        }
    }
    Ok(k)
}

/// Monomial used to report `a_{L}^{U}`: pairs `ψ̄_{u} ψ_{l}` in ascending
/// order, then the unpaired `ψ̄`, then the unpaired `ψ`. Labels are 1-based.
pub fn paired_gens(lower: &[usize], upper: &[usize]) -> Vec<Gen> {
    let mut gens = Vec::new();
    let n = lower.len().min(upper.len());
    for k in 0..n {
        gens.push(Gen::Bar(upper[k] - 1));
        gens.push(Gen::Psi(lower[k] - 1));
    }
    gens.extend(upper[n..].iter().map(|&u| Gen::Bar(u - 1)));
    gens.extend(lower[n..].iter().map(|&l| Gen::Psi(l - 1)));
    gens
}

fn labels(mask4: u8) -> Vec<usize> {
    (0..4).filter(|k| mask4 >> k & 1 == 1).map(|k| k + 1).collect()
}

/// `R = A0 · exp(Σψ̄ψ + A)` expanded by degree.
#[derive(Debug, Clone)]
pub struct ActionCoefficients {
    pub a0: C64,
    /// `A`, i.e. the logarithm with the identity exponent removed.
    pub action: GrassmannPoly,
}

/// One reported coefficient with its 1-based lower (ψ) and upper (ψ̄) labels.
#[derive(Debug, Clone, Serialize)]
pub struct Coefficient {
    pub lower: Vec<usize>,
    pub upper: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

impl ActionCoefficients {
    /// `a_{lower}^{upper}` in the paired convention of [`paired_gens`].
    pub fn coeff(&self, lower: &[usize], upper: &[usize]) -> C64 {
        self.action.coeff(&paired_gens(lower, upper))
    }

    /// `a_i^j`, the coefficient of `ψ̄_j ψ_i` (1-based).
    pub fn a_ud(&self, i: usize, j: usize) -> C64 {
        self.coeff(&[i], &[j])
    }

    /// `a_{ij}`, the coefficient of `ψ_i ψ_j`.
    pub fn a_lo(&self, i: usize, j: usize) -> C64 {
        self.action.coeff(&[Gen::Psi(i - 1), Gen::Psi(j - 1)])
    }

    /// `a^{ij}`, the coefficient of `ψ̄_i ψ̄_j`.
    pub fn a_up(&self, i: usize, j: usize) -> C64 {
        self.action.coeff(&[Gen::Bar(i - 1), Gen::Bar(j - 1)])
    }

    /// All coefficients of total degree `d`, paired convention.
    pub fn of_degree(&self, d: u32) -> Vec<Coefficient> {
        self.action
            .degree_part(d)
            .terms()
            .map(|(m, _)| {
                let (lower, upper) = (labels(m >> 4), labels(m & 0x0f));
                let v = self.coeff(&lower, &upper);
                Coefficient { lower, upper, re: v.re, im: v.im }
            })
            .collect()
    }

    /// Largest coefficient of degree four or more.
    pub fn interaction_max(&self) -> f64 {
        self.action.max_abs_where(|m| m.count_ones() >= 4)
    }

    /// Largest coefficient of odd degree (zero for parity-even kernels).
    pub fn odd_max(&self) -> f64 {
        self.action.max_abs_where(|m| m.count_ones() % 2 == 1)
    }

    /// Largest quartic coefficient with unequal numbers of `ψ̄` and `ψ`.
    pub fn unbalanced_quartic_max(&self) -> f64 {
        self.action.max_abs_where(|m| m.count_ones() == 4 && (m & 0x0f).count_ones() != 2)
    }

    /// Quadratic part including the identity exponent, `Σψ̄ψ + A2`.
    pub fn quadratic_exponent(&self) -> GrassmannPoly {
        identity_exponent().add(&self.action.degree_part(2))
    }
}

pub fn extract_action(kernel: &GrassmannPoly) -> Result<ActionCoefficients, GrassmannError> {
    let (a0, log) = gp_log(kernel)?;
    let action = log.sub(&identity_exponent());
    Ok(ActionCoefficients { a0, action })
}

pub fn action_of(r: &CubeMatrix, order: FermionOrder) -> Result<ActionCoefficients, GrassmannError> {
    extract_action(&coherent_kernel(r, order)?)
}

fn bits_with(ones: &[usize]) -> MultiIndex {
    let mut d = [0; 4];
    for &k in ones {
        d[k - 1] = 1;
    }
    MultiIndex { digits: d, base: 2 }
}

/// Coefficients rebuilt from matrix elements: `A0 = R_0000^0000`,
/// `a_i^j = s R_{-i-}^{-j-}/A0 − δ`, `a_{ij} = s R_{-i-j-}^{0000}/A0`,
/// `a^{ij} = s R_{0000}^{-i-j-}/A0`, `a_{1234}` and `a^{1234}` minus their
/// Pfaffian products, and the remaining quartic sector as `R4/A0 − (e^{Q})_4`
/// with `Q` the rebuilt quadratic exponent. `s` is the kernel sign.
pub fn closed_form_quadratic(r: &CubeMatrix, order: FermionOrder) -> Result<ActionCoefficients, GrassmannError> {
    let zero = MultiIndex { digits: [0; 4], base: 2 };
    let a0 = r.entry(zero, zero);
    if a0.norm() == 0.0 {
        return Err(GrassmannError::ZeroScalar);
    }
    let el = |lo: &[usize], up: &[usize]| {
        let (i, j) = (bits_with(lo), bits_with(up));
        r.entry(i, j) * kernel_sign(i, j, order) / a0
    };
    let mut action = GrassmannPoly::zero();
    let put = |p: &mut GrassmannPoly, gens: &[Gen], v: C64| {
        if let Some((m, s)) = monomial(gens) {
            p.add_term(m, v * s);
        }
    };
    let mut a_lo = [[c(0.0, 0.0); 5]; 5];
    let mut a_up = [[c(0.0, 0.0); 5]; 5];
    for i in 1..=4 {
        for j in 1..=4 {
            let delta = if i == j { 1.0 } else { 0.0 };
            put(&mut action, &[Gen::Bar(j - 1), Gen::Psi(i - 1)], el(&[i], &[j]) - delta);
            if i < j {
                a_lo[i][j] = el(&[i, j], &[]);
                a_up[i][j] = el(&[], &[i, j]);
                put(&mut action, &[Gen::Psi(i - 1), Gen::Psi(j - 1)], a_lo[i][j]);
                put(&mut action, &[Gen::Bar(i - 1), Gen::Bar(j - 1)], a_up[i][j]);
            }
        }
    }
    let pf = |a: &[[C64; 5]; 5]| a[1][2] * a[3][4] - a[1][3] * a[2][4] + a[1][4] * a[2][3];
    let a1234 = el(&[1, 2, 3, 4], &[]) - pf(&a_lo);
    let b1234 = el(&[], &[1, 2, 3, 4]) - pf(&a_up);
    let q = identity_exponent().add(&action);
    let e4 = gp_exp(&q).degree_part(4);
    for row in 0..16 {
        for col in 0..16 {
            let i = MultiIndex::decode(row, 2).unwrap();
            let j = MultiIndex::decode(col, 2).unwrap();
            if i.weight() + j.weight() != 4 || i.weight() == 4 || j.weight() == 4 {
                continue;
            }
            let mask = (0..4).fold(0u8, |m, t| m | (j.digits[t] as u8) << t | (i.digits[t] as u8) << (4 + t));
            let v = r.entry(i, j) * kernel_sign(i, j, order) / a0 - e4.get(mask);
            action.add_term(mask, v);
        }
    }
    put(&mut action, &[Gen::Psi(0), Gen::Psi(1), Gen::Psi(2), Gen::Psi(3)], a1234);
    put(&mut action, &[Gen::Bar(0), Gen::Bar(1), Gen::Bar(2), Gen::Bar(3)], b1234);
    Ok(ActionCoefficients { a0, action })
}

/// `16 (sinh2J1 sinh2J2 sinh2J3)² / A0²`.
pub fn quartic_closed_form(j: &IsingCouplings, a0: f64) -> f64 {
    let s = (2.0 * j.j1).sinh() * (2.0 * j.j2).sinh() * (2.0 * j.j3).sinh();
    16.0 * s * s / (a0 * a0)
}

/// `16 sinh²2J1 sinh²2J2 sinh2J3 (cosh2J1 cosh2J2 − cosh2J3) / A0²` (magnitude
/// of the three-bar one-psi coefficient).
pub fn sextic_like_closed_form(j: &IsingCouplings, a0: f64) -> f64 {
    let (s1, s2, s3) = ((2.0 * j.j1).sinh(), (2.0 * j.j2).sinh(), (2.0 * j.j3).sinh());
    let (c1, c2, c3) = ((2.0 * j.j1).cosh(), (2.0 * j.j2).cosh(), (2.0 * j.j3).cosh());
    16.0 * s1 * s1 * s2 * s2 * s3 * (c1 * c2 - c3) / (a0 * a0)
}

/// Interaction strength of the Ising action: the smaller of the two plaquette
/// orientations' largest coefficient of degree ≥ 4.
pub fn free_fermion_residual(j: &IsingCouplings) -> Result<f64, GrassmannError> {
    gaussian_order(j).map(|(_, r)| r)
}

/// Orientation in which the action at `j` is closest to Gaussian.
pub fn gaussian_order(j: &IsingCouplings) -> Result<(FermionOrder, f64), GrassmannError> {
    let a = precise_interaction_max(j, FermionOrder::Ccw)?;
    let b = precise_interaction_max(j, FermionOrder::Cw)?;
    Ok(if a <= b { (FermionOrder::Ccw, a) } else { (FermionOrder::Cw, b) })
}

fn dd_mul(p: &[TwoFloat; 256], q: &[TwoFloat; 256]) -> [TwoFloat; 256] {
    let mut out = [TwoFloat::from(0.0); 256];
    for a in 0..256usize {
        if p[a] == 0.0 {
            continue;
        }
        for b in 0..256usize {
            if a & b == 0 && q[b] != 0.0 {
                out[a | b] += p[a] * q[b] * merge_sign(a as u8, b as u8);
            }
        }
    }
    out
}

/// Interaction maximum of the real Ising action in double-double arithmetic.
/// Entries come from the bond expansion in `t = tanh J` without the common
/// `cosh` prefactor; the Gaussian identities hold as polynomials in `t`, so
/// the cancellation in the logarithm is resolved far below `f64` roundoff.
fn precise_interaction_max(j: &IsingCouplings, order: FermionOrder) -> Result<f64, GrassmannError> {
    let t = [j.j1, j.j2, j.j3].map(|x| TwoFloat::from(x.tanh()));
    let mut acc = [TwoFloat::from(0.0); 256];
    acc[0] = TwoFloat::from(1.0);
    for &(a, b, axis) in &BONDS {
        let ends = 1usize << a | 1 << b;
        let prev = acc;
        for (mask, slot) in acc.iter_mut().enumerate() {
            *slot = prev[mask] + t[axis] * prev[mask ^ ends];
        }
    }
    let mut kernel = [TwoFloat::from(0.0); 256];
    for row in 0..16 {
        for col in 0..16 {
            let i = MultiIndex::decode(row, 2).unwrap();
            let jj = MultiIndex::decode(col, 2).unwrap();
            let (mut odd, mut mask) = (0usize, 0usize);
            for k in 0..4 {
                odd |= (1 - i.digits[k]) << k | (1 - jj.digits[k]) << (k + 4);
                mask |= jj.digits[k] << k | i.digits[k] << (4 + k);
            }
            let sign = if odd.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            kernel[mask] += acc[odd] * (sign * kernel_sign(i, jj, order));
        }
    }
    let a0 = kernel[0];
    if a0 == 0.0 {
        return Err(GrassmannError::ZeroScalar);
    }
    // twofloat's double-double division is not correctly rounded; refine the
    // f64 reciprocal with one Newton step instead
    let r0 = TwoFloat::from(1.0 / a0.hi());
    let inv = r0 + r0 * (TwoFloat::from(1.0) - a0 * r0);
    let mut x = kernel.map(|v| v * inv);
    x[0] = TwoFloat::from(0.0);
    let mut log = [TwoFloat::from(0.0); 256];
    let mut power = x;
    for m in 1..=4 {
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        for (l, p) in log.iter_mut().zip(&power) {
            *l += *p * sign / m as f64;
        }
        power = dd_mul(&power, &x);
    }
    Ok((0..256usize).filter(|m| m.count_ones() >= 4).map(|m| f64::from(log[m]).abs()).fold(0.0, f64::max))
}

/// `|R_0000^0000 R_1010^1010 − R_1000^1000 R_0010^0010 − R_1010^0000 R_0000^1010 + R_0010^1000 R_1000^0010|`.
pub fn minor_relation_residual(r: &CubeMatrix) -> Result<f64, GrassmannError> {
    if r.n() != 2 {
        return Err(GrassmannError::NotBinary(r.n()));
    }
    let e = |a: &str, b: &str| r.at(a, b);
    let v = e("0000", "0000") * e("1010", "1010") - e("1000", "1000") * e("0010", "0010")
        - e("1010", "0000") * e("0000", "1010")
        + e("0010", "1000") * e("1000", "0010");
    Ok(v.norm())
}

/// [`minor_relation_residual`] divided by the largest of its four products.
pub fn minor_relation_relative(r: &CubeMatrix) -> Result<f64, GrassmannError> {
    let abs = minor_relation_residual(r)?;
    let e = |a: &str, b: &str| r.at(a, b);
    let scale = [
        e("0000", "0000") * e("1010", "1010"),
        e("1000", "1000") * e("0010", "0010"),
        e("1010", "0000") * e("0000", "1010"),
        e("0010", "1000") * e("1000", "0010"),
    ]
    .iter()
    .map(|z| z.norm())
    .fold(0.0, f64::max);
    Ok(if scale == 0.0 { abs } else { abs / scale })
}
