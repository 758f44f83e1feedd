//! Dense complex kernels shared by every model: Kronecker products, the
//! four-leg multi-index, the discrete Fourier unitary and the clock/shift pair.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("digit {digit} at position {position} is not below base {base}")]
    DigitOutOfRange { position: usize, digit: usize, base: usize },
    #[error("flat index {0} out of range for the requested base")]
    FlatOutOfRange(usize),
    #[error("state count must be at least 2, got {0}")]
    StateCount(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Four ordered digits `(i1, i2, i3, i4)` in base `N`; `i1` is the slowest digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    pub digits: [usize; 4],
    pub base: usize,
}

impl MultiIndex {
    pub fn new(digits: [usize; 4], base: usize) -> Result<Self, TensorError> {
        for (position, &digit) in digits.iter().enumerate() {
            if digit >= base {
                return Err(TensorError::DigitOutOfRange { position, digit, base });
            }
        }
        Ok(Self { digits, base })
    }

    /// Binary index from a string such as `"0110"`.
    pub fn bits(s: &str) -> Self {
        let b: Vec<usize> = s.bytes().map(|ch| (ch - b'0') as usize).collect();
        assert!(b.len() == 4 && b.iter().all(|&x| x < 2), "bad bit string {s}");
        Self { digits: [b[0], b[1], b[2], b[3]], base: 2 }
    }

    pub fn encode(&self) -> usize {
        self.digits.iter().fold(0, |acc, &d| acc * self.base + d)
    }

    pub fn decode(flat: usize, base: usize) -> Result<Self, TensorError> {
        if base < 2 || flat >= base.pow(4) {
            return Err(TensorError::FlatOutOfRange(flat));
        }
        let mut digits = [0; 4];
        let mut rest = flat;
        for slot in digits.iter_mut().rev() {
            *slot = rest % base;
            rest /= base;
        }
        Ok(Self { digits, base })
    }

    pub fn reversed(&self) -> Self {
        let d = self.digits;
        Self { digits: [d[3], d[2], d[1], d[0]], base: self.base }
    }

    pub fn weight(&self) -> usize {
        self.digits.iter().sum()
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for d in self.digits {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Flat position of a multi-index, `i1 N³ + i2 N² + i3 N + i4`.
pub fn encode(m: &MultiIndex) -> Result<usize, TensorError> {
    MultiIndex::new(m.digits, m.base).map(|v| v.encode())
}

/// Dense N⁴×N⁴ operator on four legs. Rows carry the lower (incoming) index,
/// columns the upper (outgoing) one.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeMatrix {
    n: usize,
    mat: ComplexMatrix,
}

impl CubeMatrix {
    pub fn new(n: usize, mat: ComplexMatrix) -> Result<Self, TensorError> {
        if n < 2 {
            return Err(TensorError::StateCount(n));
        }
        let dim = n.pow(4);
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(TensorError::DimensionMismatch { expected: dim, got: mat.nrows().max(mat.ncols()) });
        }
        Ok(Self { n, mat })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(MultiIndex, MultiIndex) -> C64) -> Self {
        let dim = n.pow(4);
        let mat = ComplexMatrix::from_fn(dim, dim, |r, col| {
            f(MultiIndex::decode(r, n).unwrap(), MultiIndex::decode(col, n).unwrap())
        });
        Self { n, mat }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn entry(&self, lower: MultiIndex, upper: MultiIndex) -> C64 {
        self.mat[(lower.encode(), upper.encode())]
    }

    /// Entry addressed by two bit strings, e.g. `at("0100", "0111")`.
    pub fn at(&self, lower: &str, upper: &str) -> C64 {
        self.entry(MultiIndex::bits(lower), MultiIndex::bits(upper))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { n: self.n, mat: &self.mat * s }
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// `m ⊗ m ⊗ m ⊗ m`.
pub fn kron4(m: &ComplexMatrix) -> ComplexMatrix {
    let two = kron(m, m);
    kron(&two, &two)
}

pub fn kron_all(ms: &[&ComplexMatrix]) -> ComplexMatrix {
    let mut acc = ComplexMatrix::identity(1, 1);
    for m in ms {
        acc = kron(&acc, m);
    }
    acc
}

fn omega(n: usize, power: i64) -> C64 {
    let t = 2.0 * std::f64::consts::PI * (power.rem_euclid(n as i64) as f64) / n as f64;
    C64::from_polar(1.0, t)
}

/// `U_{kp} = ω^{kp}/√N` with zero-based `k, p`.
pub fn fourier_unitary(n: usize) -> Result<ComplexMatrix, TensorError> {
    if n < 2 {
        return Err(TensorError::StateCount(n));
    }
    let s = 1.0 / (n as f64).sqrt();
    Ok(ComplexMatrix::from_fn(n, n, |k, p| omega(n, (k * p) as i64) * s))
}

/// Clock/shift pair `(Z, X)`: `Z` is the cyclic shift `Z|k⟩ = |k+1⟩`
/// (row `p`, column `k`, nonzero for `p = k + 1`), `X = diag(ω^k)`, so that
/// `XZ = ωZX`.
pub fn clock_shift(n: usize) -> Result<(ComplexMatrix, ComplexMatrix), TensorError> {
    if n < 2 {
        return Err(TensorError::StateCount(n));
    }
    let z = ComplexMatrix::from_fn(n, n, |p, k| if (k + 1) % n == p { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let x = ComplexMatrix::from_fn(n, n, |k, p| if k == p { omega(n, k as i64) } else { c(0.0, 0.0) });
    Ok((z, x))
}

/// Matrix units `σ_i^j = |i⟩⟨j|` in the order `σ₀⁰, σ₁¹, σ₀¹, σ₁⁰`.
pub fn pauli_basis() -> [ComplexMatrix; 4] {
    let unit = |i: usize, j: usize| {
        ComplexMatrix::from_fn(2, 2, |r, col| if r == i && col == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
    };
    [unit(0, 0), unit(1, 1), unit(0, 1), unit(1, 0)]
}

/// Expansion `R = Σ R_i^j σ_{i1}^{j1} ⊗ … ⊗ σ_{i4}^{j4}`, keeping terms above `cut`.
pub fn operator_form(r: &CubeMatrix, cut: f64) -> Vec<(MultiIndex, MultiIndex, C64)> {
    assert_eq!(r.n(), 2, "operator form is defined for two-state legs");
    let mut out = Vec::new();
    for row in 0..16 {
        for col in 0..16 {
            let v = r.matrix()[(row, col)];
            if v.norm() > cut {
                out.push((MultiIndex::decode(row, 2).unwrap(), MultiIndex::decode(col, 2).unwrap(), v));
            }
        }
    }
    out
}

/// Inverse of [`operator_form`]: sums the Kronecker products of matrix units.
pub fn reconstruct(terms: &[(MultiIndex, MultiIndex, C64)]) -> ComplexMatrix {
    let units = pauli_basis();
    let pick = |i: usize, j: usize| match (i, j) {
        (0, 0) => &units[0],
        (1, 1) => &units[1],
        (0, 1) => &units[2],
        _ => &units[3],
    };
    let mut acc = ComplexMatrix::zeros(16, 16);
    for (lo, up, v) in terms {
        let f: Vec<&ComplexMatrix> = (0..4).map(|k| pick(lo.digits[k], up.digits[k])).collect();
        acc += kron_all(&f) * *v;
    }
    acc
}

pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let prod = u * u.adjoint();
    let id = ComplexMatrix::identity(u.nrows(), u.ncols());
    (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `(U⊗U⊗U⊗U) · W · (U⁻¹⊗U⁻¹⊗U⁻¹⊗U⁻¹)`.
pub fn conjugate_four(w: &CubeMatrix, u: &ComplexMatrix) -> Result<CubeMatrix, TensorError> {
    if u.nrows() != w.n() || u.ncols() != w.n() {
        return Err(TensorError::DimensionMismatch { expected: w.n(), got: u.nrows() });
    }
    let defect = unitarity_defect(u);
    if defect > 1e-10 {
        return Err(TensorError::NotUnitary(defect));
    }
    let u4 = kron4(u);
    let mat = &u4 * w.matrix() * u4.adjoint();
    CubeMatrix::new(w.n(), mat)
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
