//! N-state cube weights: the ordinary and chiral Potts models, their vertex
//! matrices (direct and via link transfer operators) and the quantum cell
//! Hamiltonian with its clock charge.

use crate::tensor::{c, clock_shift, conjugate_four, fourier_unitary, kron_all, max_abs_diff, ComplexMatrix, CubeMatrix, MultiIndex, TensorError, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Largest state count handled densely (N⁴ = 625).
pub const MAX_STATES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PottsError {
    #[error("state count {0} outside 2..={MAX_STATES}")]
    StateCount(usize),
    #[error("axis {axis} has {got} harmonics, expected {expected}")]
    HarmonicCount { axis: char, expected: usize, got: usize },
    #[error("no orientation reproduces the weight; best residual {0:e}")]
    Calibration(f64),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Per-harmonic couplings `J_a^k`, `k = 1..N−1`. `jx` acts on leg pairs
/// (1,2),(3,4), `jy` on (1,3),(2,4), `jz` on the vertical bonds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiralCouplings {
    pub n: usize,
    pub jx: Vec<C64>,
    pub jy: Vec<C64>,
    pub jz: Vec<C64>,
}

impl ChiralCouplings {
    pub fn new(n: usize, jx: Vec<C64>, jy: Vec<C64>, jz: Vec<C64>) -> Result<Self, PottsError> {
        if !(2..=MAX_STATES).contains(&n) {
            return Err(PottsError::StateCount(n));
        }
        for (axis, v) in [('x', &jx), ('y', &jy), ('z', &jz)] {
            if v.len() != n - 1 {
                return Err(PottsError::HarmonicCount { axis, expected: n - 1, got: v.len() });
            }
        }
        Ok(Self { n, jx, jy, jz })
    }

    pub fn zero(n: usize) -> Result<Self, PottsError> {
        let z = vec![c(0.0, 0.0); n.saturating_sub(1)];
        Self::new(n, z.clone(), z.clone(), z)
    }

    pub fn axis(&self, a: Axis) -> &[C64] {
        match a {
            Axis::X => &self.jx,
            Axis::Y => &self.jy,
            Axis::Z => &self.jz,
        }
    }
}

/// `W(n)` for `n = 0..N−1` along one axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkWeightTable {
    pub axis: Axis,
    pub values: Vec<C64>,
}

fn omega(n: usize, power: i64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * power.rem_euclid(n as i64) as f64 / n as f64)
}

/// `exp(Σ_k J^k ω^{nk})`; `n` is taken mod N.
pub fn link_weight(axis: Axis, cp: &ChiralCouplings, n: i64) -> C64 {
    let js = cp.axis(axis);
    js.iter().enumerate().map(|(k, j)| j * omega(cp.n, n * (k as i64 + 1))).sum::<C64>().exp()
}

pub fn link_table(axis: Axis, cp: &ChiralCouplings) -> LinkWeightTable {
    LinkWeightTable { axis, values: (0..cp.n as i64).map(|n| link_weight(axis, cp, n)).collect() }
}

const X_PAIRS: [(usize, usize); 2] = [(0, 1), (2, 3)];
const Y_PAIRS: [(usize, usize); 2] = [(0, 2), (1, 3)];

/// `Π W^x · Π W^y · Π W^z` over the twelve links of the cube.
pub fn build_weight_p(cp: &ChiralCouplings) -> CubeMatrix {
    let (wx, wy, wz) = (link_table(Axis::X, cp), link_table(Axis::Y, cp), link_table(Axis::Z, cp));
    let n = cp.n;
    let w = |t: &LinkWeightTable, a: usize, b: usize| t.values[(a + n - b) % n];
    CubeMatrix::from_fn(n, |lo, up| {
        let (a, b) = (lo.digits, up.digits);
        let mut v = c(1.0, 0.0);
        for face in [a, b] {
            for (p, q) in X_PAIRS {
                v *= w(&wx, face[p], face[q]);
            }
            for (p, q) in Y_PAIRS {
                v *= w(&wy, face[p], face[q]);
            }
        }
        for k in 0..4 {
            v *= w(&wz, a[k], b[k]);
        }
        v
    })
}

/// `exp(H1 + H2 + H3)` with each chiral `H_r` summed harmonic by harmonic.
pub fn chiral_exponent_weight(cp: &ChiralCouplings) -> CubeMatrix {
    let n = cp.n;
    let phase = |js: &[C64], a: usize, b: usize| -> C64 {
        js.iter().enumerate().map(|(k, j)| j * omega(n, (k as i64 + 1) * (a as i64 - b as i64))).sum()
    };
    CubeMatrix::from_fn(n, |lo, up| {
        let (a, b) = (lo.digits, up.digits);
        let h1: C64 = [a, b].iter().flat_map(|f| X_PAIRS.iter().map(move |&(p, q)| phase(&cp.jx, f[p], f[q]))).sum();
        let h2: C64 = [a, b].iter().flat_map(|f| Y_PAIRS.iter().map(move |&(p, q)| phase(&cp.jy, f[p], f[q]))).sum();
        let h3: C64 = (0..4).map(|k| phase(&cp.jz, a[k], b[k])).sum();
        (h1 + h2 + h3).exp()
    })
}

/// Ordinary Potts cube: every spin product `σσ′` replaced by `N δ − 1`.
pub fn ordinary_potts_weight(n: usize, j1: f64, j2: f64, j3: f64) -> Result<CubeMatrix, PottsError> {
    if !(2..=MAX_STATES).contains(&n) {
        return Err(PottsError::StateCount(n));
    }
    let nf = n as f64;
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    Ok(CubeMatrix::from_fn(n, |lo, up| {
        let (a, b) = (lo.digits, up.digits);
        let h1 = j1 * nf * (d(a[0], a[1]) + d(a[2], a[3]) + d(b[0], b[1]) + d(b[2], b[3]) - 4.0 / nf);
        let h2 = j2 * nf * (d(a[0], a[2]) + d(a[1], a[3]) + d(b[0], b[2]) + d(b[1], b[3]) - 4.0 / nf);
        let h3 = j3 * nf * (0..4).map(|k| d(a[k], b[k]) - 1.0 / nf).sum::<f64>();
        c((h1 + h2 + h3).exp(), 0.0)
    }))
}

/// Fourier conjugate of the weight on all four legs.
pub fn build_r_p_direct(cp: &ChiralCouplings) -> Result<CubeMatrix, PottsError> {
    let u = fourier_unitary(cp.n)?;
    Ok(conjugate_four(&build_weight_p(cp), &u)?)
}

/// `Σ_k W̄(k) (X⊗X⁺)^k` with `W̄(k) = (1/N) Σ_n W(n) ω^{nk}` and `X` the clock
/// matrix. Diagonal, with entry `W(n_b − n_a)` at `(n_a, n_b)`.
pub fn s_operator(axis: Axis, cp: &ChiralCouplings) -> Result<ComplexMatrix, PottsError> {
    let n = cp.n;
    let (_, x) = clock_shift(n)?;
    let xd = x.adjoint();
    let w = link_table(axis, cp).values;
    let mut s = ComplexMatrix::zeros(n * n, n * n);
    let mut pair = ComplexMatrix::identity(n * n, n * n);
    let step = kron_all(&[&x, &xd]);
    for k in 0..n {
        let wbar: C64 = (0..n).map(|m| w[m] * omega(n, (m * k) as i64)).sum::<C64>() / n as f64;
        s += &pair * wbar;
        pair = &pair * &step;
    }
    Ok(s)
}

/// `Σ_k W^z(k) Z^k` with `Z` the cyclic shift, so `⟨n|T|n′⟩ = W^z(n − n′)`.
pub fn t_operator(cp: &ChiralCouplings) -> Result<ComplexMatrix, PottsError> {
    let n = cp.n;
    let (z, _) = clock_shift(n)?;
    let w = link_table(Axis::Z, cp).values;
    let mut t = ComplexMatrix::zeros(n, n);
    let mut power = ComplexMatrix::identity(n, n);
    for wk in w.iter() {
        t += &power * *wk;
        power = &power * &z;
    }
    Ok(t)
}

/// Embeds an `N²×N²` operator on legs `(a, b)` of the four-leg space.
pub fn embed_pair(op: &ComplexMatrix, n: usize, a: usize, b: usize) -> ComplexMatrix {
    let d = n.pow(4);
    ComplexMatrix::from_fn(d, d, |row, col| {
        let i = MultiIndex::decode(row, n).unwrap().digits;
        let j = MultiIndex::decode(col, n).unwrap().digits;
        if (0..4).any(|k| k != a && k != b && i[k] != j[k]) {
            return c(0.0, 0.0);
        }
        op[(i[a] * n + i[b], j[a] * n + j[b])]
    })
}

/// Which way each link operator is read: `Forward` uses it as built,
/// `Reversed` uses the pair-swapped S or the transposed T.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    Forward,
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub x: Orientation,
    pub y: Orientation,
    pub z: Orientation,
    pub residual: f64,
}

fn oriented_s(axis: Axis, cp: &ChiralCouplings, o: Orientation) -> Result<ComplexMatrix, PottsError> {
    let s = s_operator(axis, cp)?;
    Ok(match o {
        Orientation::Forward => s,
        Orientation::Reversed => {
            let n = cp.n;
            ComplexMatrix::from_fn(n * n, n * n, |r, q| s[((r % n) * n + r / n, (q % n) * n + q / n)])
        }
    })
}

/// `[S¹₁₂ (S²₁₃ ⊗ S²₂₄) S¹₃₄] (T⊗T⊗T⊗T) [S¹₁₂ (S²₁₃ ⊗ S²₂₄) S¹₃₄]` in the
/// position basis.
pub fn factorized_weight(cp: &ChiralCouplings, ox: Orientation, oy: Orientation, oz: Orientation) -> Result<ComplexMatrix, PottsError> {
    let n = cp.n;
    let s1 = oriented_s(Axis::X, cp, ox)?;
    let s2 = oriented_s(Axis::Y, cp, oy)?;
    let block = embed_pair(&s1, n, 0, 1) * embed_pair(&s2, n, 0, 2) * embed_pair(&s2, n, 1, 3) * embed_pair(&s1, n, 2, 3);
    let t = t_operator(cp)?;
    let t = match oz {
        Orientation::Forward => t,
        Orientation::Reversed => t.transpose(),
    };
    let t4 = kron_all(&[&t, &t, &t, &t]);
    Ok(&block * t4 * &block)
}

/// Searches the eight orientation choices for the one matching the weight.
pub fn calibrate(cp: &ChiralCouplings) -> Result<Calibration, PottsError> {
    let target = build_weight_p(cp);
    let scale = crate::tensor::max_abs(target.matrix()).max(1.0);
    let both = [Orientation::Forward, Orientation::Reversed];
    let mut best: Option<Calibration> = None;
    for x in both {
        for y in both {
            for z in both {
                let f = factorized_weight(cp, x, y, z)?;
                let residual = max_abs_diff(&f, target.matrix()) / scale;
                if best.is_none_or(|b| residual < b.residual) {
                    best = Some(Calibration { x, y, z, residual });
                }
            }
        }
    }
    Ok(best.expect("eight candidates"))
}

/// Calibrated factorized weight conjugated by the Fourier matrix.
pub fn build_r_p_factorized(cp: &ChiralCouplings) -> Result<(CubeMatrix, Calibration), PottsError> {
    let cal = calibrate(cp)?;
    if cal.residual > 1e-10 {
        return Err(PottsError::Calibration(cal.residual));
    }
    let w = CubeMatrix::new(cp.n, factorized_weight(cp, cal.x, cal.y, cal.z)?)?;
    Ok((conjugate_four(&w, &fourier_unitary(cp.n)?)?, cal))
}

fn on_site(op: &ComplexMatrix, n: usize, site: usize) -> ComplexMatrix {
    let id = ComplexMatrix::identity(n, n);
    let ms: Vec<&ComplexMatrix> = (0..4).map(|k| if k == site { op } else { &id }).collect();
    kron_all(&ms)
}

fn mat_pow(m: &ComplexMatrix, k: usize) -> ComplexMatrix {
    (0..k).fold(ComplexMatrix::identity(m.nrows(), m.ncols()), |acc, _| acc * m)
}

/// Cell Hamiltonian on four `N`-state sites:
/// `Σ_k Jx_k X^k X⁺^k on (1,3),(2,4) + Jy_k X^k X⁺^k on (1,2),(3,4) − h_k Σ Z^k`,
/// with `X` the clock and `Z` the shift matrix.
pub fn potts_cell_hamiltonian(n: usize, jx: &[C64], jy: &[C64], h: &[C64]) -> Result<ComplexMatrix, PottsError> {
    if !(2..=MAX_STATES).contains(&n) {
        return Err(PottsError::StateCount(n));
    }
    for (axis, v) in [('x', jx), ('y', jy), ('h', h)] {
        if v.len() != n - 1 {
            return Err(PottsError::HarmonicCount { axis, expected: n - 1, got: v.len() });
        }
    }
    let (z, x) = clock_shift(n)?;
    let d = n.pow(4);
    let mut ham = ComplexMatrix::zeros(d, d);
    for k in 1..n {
        let xk = mat_pow(&x, k);
        let xkd = xk.adjoint();
        let zk = mat_pow(&z, k);
        let bond = |a: usize, b: usize| on_site(&xk, n, a) * on_site(&xkd, n, b);
        ham += (bond(0, 2) + bond(1, 3)) * jx[k - 1];
        ham += (bond(0, 1) + bond(2, 3)) * jy[k - 1];
        for s in 0..4 {
            ham -= on_site(&zk, n, s) * h[k - 1];
        }
    }
    Ok(ham)
}

/// `Z ⊗ Z ⊗ Z ⊗ Z`.
pub fn charge_operator(n: usize) -> Result<ComplexMatrix, PottsError> {
    let (z, _) = clock_shift(n)?;
    Ok(kron_all(&[&z, &z, &z, &z]))
}

/// Frobenius norm of `[H, L]`.
pub fn charge_commutator(h: &ComplexMatrix, l: &ComplexMatrix) -> f64 {
    (h * l - l * h).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{build_weight, IsingCouplings};
    use crate::tensor::max_abs;

    fn cp3() -> ChiralCouplings {
        ChiralCouplings::new(
            3,
            vec![c(0.3, 0.1), c(-0.2, 0.05)],
            vec![c(0.1, -0.3), c(0.25, 0.0)],
            vec![c(0.4, 0.2), c(0.1, -0.1)],
        )
        .unwrap()
    }

    #[test]
    fn link_weight_examples() {
        let cp = ChiralCouplings::new(2, vec![c(0.7, 0.0)], vec![c(0.0, 0.0)], vec![c(0.0, 0.0)]).unwrap();
        assert!((link_weight(Axis::X, &cp, 1) - c((-0.7f64).exp(), 0.0)).norm() < 1e-15);
        assert_eq!(link_weight(Axis::Y, &cp, 1), c(1.0, 0.0));
        let sym = ChiralCouplings::new(4, vec![c(0.3, 0.0), c(0.2, 0.0), c(0.3, 0.0)], vec![c(0.0, 0.0); 3], vec![c(0.0, 0.0); 3]).unwrap();
        for n in 0..4 {
            assert!(link_weight(Axis::X, &sym, n).im.abs() < 1e-15);
        }
    }

    #[test]
    fn weights_match_direct_exponent() {
        let cp = cp3();
        assert!(max_abs_diff(build_weight_p(&cp).matrix(), chiral_exponent_weight(&cp).matrix()) < 1e-12);
    }

    #[test]
    fn two_states_reduce_to_ising() {
        let j = IsingCouplings::new(0.3, -0.2, 0.45);
        let cp = ChiralCouplings::new(2, vec![c(j.j1, 0.0)], vec![c(j.j2, 0.0)], vec![c(j.j3, 0.0)]).unwrap();
        let w = build_weight(&j);
        assert!(max_abs_diff(build_weight_p(&cp).matrix(), w.matrix()) < 1e-12);
        assert!(max_abs_diff(ordinary_potts_weight(2, j.j1, j.j2, j.j3).unwrap().matrix(), w.matrix()) < 1e-12);
    }

    #[test]
    fn two_state_r_is_ising_r_with_complemented_legs() {
        let j = IsingCouplings::new(0.3, -0.2, 0.45);
        let cp = ChiralCouplings::new(2, vec![c(j.j1, 0.0)], vec![c(j.j2, 0.0)], vec![c(j.j3, 0.0)]).unwrap();
        let rp = build_r_p_direct(&cp).unwrap();
        let ri = crate::ising::build_r(&j);
        for a in 0..16 {
            for b in 0..16 {
                assert!((rp.matrix()[(a, b)] - ri.matrix()[(15 - a, 15 - b)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_couplings() {
        let cp = ChiralCouplings::zero(3).unwrap();
        let r = build_r_p_direct(&cp).unwrap();
        assert!((r.matrix()[(0, 0)] - c(81.0, 0.0)).norm() < 1e-10);
        let mut m = r.matrix().clone();
        m[(0, 0)] = c(0.0, 0.0);
        assert!(max_abs(&m) < 1e-10);
        assert!(max_abs_diff(&s_operator(Axis::X, &cp).unwrap(), &ComplexMatrix::identity(9, 9)) < 1e-14);
        assert!(max_abs_diff(&t_operator(&cp).unwrap(), &ComplexMatrix::from_element(3, 3, c(1.0, 0.0))) < 1e-14);
    }

    #[test]
    fn transfer_operator_elements() {
        let cp = cp3();
        let t = t_operator(&cp).unwrap();
        let s = s_operator(Axis::X, &cp).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert!((t[(a, b)] - link_weight(Axis::Z, &cp, a as i64 - b as i64)).norm() < 1e-12);
                let idx = a * 3 + b;
                assert!((s[(idx, idx)] - link_weight(Axis::X, &cp, b as i64 - a as i64)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn factorization_calibrates() {
        let (r, cal) = build_r_p_factorized(&cp3()).unwrap();
        assert!(cal.residual < 1e-12);
        assert_eq!((cal.x, cal.y, cal.z), (Orientation::Reversed, Orientation::Reversed, Orientation::Forward));
        assert!(max_abs_diff(r.matrix(), build_r_p_direct(&cp3()).unwrap().matrix()) < 1e-9);
    }

    #[test]
    fn charge_commutes() {
        let h = potts_cell_hamiltonian(3, &[c(0.3, 0.2), c(0.1, 0.0)], &[c(-0.4, 0.0), c(0.2, 0.3)], &[c(0.5, 0.0), c(0.5, 0.0)]).unwrap();
        assert!(charge_commutator(&h, &charge_operator(3).unwrap()) < 1e-12);
    }
}
