//! Partition functions of small cube lattices by direct spin sums, layer
//! transfer operators and Gaussian Grassmann integrals, plus the momentum
//! block determinant of the homogeneous free-fermion action.

use crate::grassmann::{action_of, gaussian_order, kernel_sign, ActionCoefficients, FermionOrder, Gen, GrassmannError};
use crate::ising::{build_r, build_weight, ising_unitary, IsingCouplings};
use crate::tensor::{c, ComplexMatrix, CubeMatrix, MultiIndex, C64};
use nalgebra::SMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

pub const BRUTE_FORCE_SITE_LIMIT: usize = 24;
pub const TRANSFER_FACE_LIMIT: usize = 16;
pub const GRASSMANN_GENERATOR_LIMIT: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("lattice sizes must be even and positive, got {0}x{1}x{2}")]
    OddSize(usize, usize, usize),
    #[error("the corner-sharing tiling needs periodic boundaries")]
    OpenCornerSharing,
    #[error("{sites} sites exceed the limit of {limit}")]
    TooLarge { sites: usize, limit: usize },
    #[error("action is not Gaussian: largest interaction coefficient {0:e}")]
    NotGaussian(f64),
    #[error("Grassmann evaluation not available for this lattice: {0}")]
    Unsupported(String),
    #[error("matrix dimension {0} is odd")]
    OddDimension(usize),
    #[error("matrix is not antisymmetric (defect {0:e})")]
    NotAntisymmetric(f64),
    #[error("no zero of the momentum determinant in [{lo}, {hi}] (smallest ratio {min:e})")]
    NoRoot { lo: f64, hi: f64, min: f64 },
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tiling {
    /// Disjoint cubes at even origins.
    SingleSublattice,
    /// Cubes at every origin with `ox ≡ oy ≡ oz (mod 2)`; neighbouring cubes
    /// share corners and together cover each bond of the cubic lattice once.
    CornerSharing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Periodic,
    Open,
}

/// Offsets of legs 1..4 within a face.
pub const LEG_OFFSETS: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub lx: usize,
    pub ly: usize,
    pub lz: usize,
    pub tiling: Tiling,
    pub boundary: Boundary,
}

/// A placed cube: cross-section sites of legs 1..4 and the layer of its bottom face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub face: [usize; 4],
    pub z: usize,
}

impl LatticeSpec {
    pub fn new(lx: usize, ly: usize, lz: usize, tiling: Tiling, boundary: Boundary) -> Result<Self, PartitionError> {
        if [lx, ly, lz].iter().any(|&l| l == 0 || l % 2 == 1) {
            return Err(PartitionError::OddSize(lx, ly, lz));
        }
        if tiling == Tiling::CornerSharing && boundary == Boundary::Open {
            return Err(PartitionError::OpenCornerSharing);
        }
        Ok(Self { lx, ly, lz, tiling, boundary })
    }

    pub fn sites(&self) -> usize {
        self.lx * self.ly * self.lz
    }

    pub fn face_sites(&self) -> usize {
        self.lx * self.ly
    }

    /// Cross-section index of `(x, y)` taken periodically.
    pub fn face_index(&self, x: usize, y: usize) -> usize {
        (x % self.lx) * self.ly + y % self.ly
    }

    /// Cubes whose bottom face lies in layer `z`.
    pub fn layer(&self, z: usize) -> Vec<Placement> {
        let parity = match self.tiling {
            Tiling::SingleSublattice if z % 2 == 1 => return Vec::new(),
            Tiling::SingleSublattice => 0,
            Tiling::CornerSharing => z % 2,
        };
        let mut out = Vec::new();
        for ox in (parity..self.lx + parity).step_by(2) {
            for oy in (parity..self.ly + parity).step_by(2) {
                let face = LEG_OFFSETS.map(|(dx, dy)| self.face_index(ox + dx, oy + dy));
                out.push(Placement { face, z });
            }
        }
        out
    }

    pub fn placements(&self) -> Vec<Placement> {
        (0..self.lz).flat_map(|z| self.layer(z)).collect()
    }
}

/// `mantissa · e^{ln_scale}`, keeping large partition functions representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledZ {
    pub mantissa: C64,
    pub ln_scale: f64,
}

impl ScaledZ {
    pub fn value(&self) -> C64 {
        self.mantissa * self.ln_scale.exp()
    }

    /// Principal logarithm.
    pub fn ln(&self) -> C64 {
        self.mantissa.ln() + self.ln_scale
    }

    /// `|a − b| / max(|a|, |b|)` evaluated without overflow.
    pub fn rel_diff(&self, other: &ScaledZ) -> f64 {
        let s = self.ln_scale.max(other.ln_scale);
        let a = self.mantissa * (self.ln_scale - s).exp();
        let b = other.mantissa * (other.ln_scale - s).exp();
        let den = a.norm().max(b.norm());
        if den == 0.0 {
            0.0
        } else {
            (a - b).norm() / den
        }
    }
}

fn scaled_weight(j: &IsingCouplings) -> (Vec<f64>, f64) {
    let w = build_weight(j);
    let wmax = w.matrix().iter().map(|z| z.re).fold(0.0, f64::max);
    (w.matrix().iter().map(|z| z.re / wmax).collect(), wmax.ln())
}

fn pack(digits: impl Iterator<Item = usize>) -> usize {
    digits.fold(0, |acc, d| acc << 1 | d)
}

/// Direct sum over all spin assignments of the product of cube weights.
pub fn brute_force_z(j: &IsingCouplings, spec: &LatticeSpec) -> Result<ScaledZ, PartitionError> {
    let n = spec.sites();
    if n > BRUTE_FORCE_SITE_LIMIT {
        return Err(PartitionError::TooLarge { sites: n, limit: BRUTE_FORCE_SITE_LIMIT });
    }
    let (w, ln_w) = scaled_weight(j);
    let f = spec.face_sites();
    let cubes: Vec<([usize; 4], [usize; 4])> = spec
        .placements()
        .iter()
        .map(|p| (p.face.map(|s| p.z * f + s), p.face.map(|s| (p.z + 1) % spec.lz * f + s)))
        .collect();
    let chunk_bits = n.min(10);
    let high = 1usize << (n - chunk_bits);
    let total: f64 = (0..high)
        .into_par_iter()
        .map(|h| {
            let mut acc = 0.0;
            for l in 0..1usize << chunk_bits {
                let cfg = h << chunk_bits | l;
                let mut prod = 1.0;
                for (bot, top) in &cubes {
                    let a = pack(bot.iter().map(|&s| cfg >> s & 1));
                    let b = pack(top.iter().map(|&s| cfg >> s & 1));
                    prod *= w[b * 16 + a];
                }
                acc += prod;
            }
            acc
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(ScaledZ { mantissa: c(total, 0.0), ln_scale: cubes.len() as f64 * ln_w })
}

/// Basis in which the layer operators are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransferBasis {
    /// Spin basis, cube operator `W`.
    Weight,
    /// Rotated basis, cube operator `R`.
    Vertex,
}

fn apply_local(v: &[C64], op: &ComplexMatrix, bits: &[usize]) -> Vec<C64> {
    let k = bits.len();
    let d = 1usize << k;
    let mask: usize = bits.iter().map(|&b| 1 << b).sum();
    let mut out = vec![c(0.0, 0.0); v.len()];
    let mut local = vec![c(0.0, 0.0); d];
    for base in 0..v.len() {
        if base & mask != 0 {
            continue;
        }
        let index = |a: usize| bits.iter().enumerate().fold(base, |s, (t, &b)| s | (a >> (k - 1 - t) & 1) << b);
        for (a, slot) in local.iter_mut().enumerate() {
            *slot = v[index(a)];
        }
        for bcol in 0..d {
            let mut acc = c(0.0, 0.0);
            for (a, x) in local.iter().enumerate() {
                acc += x * op[(a, bcol)];
            }
            out[index(bcol)] = acc;
        }
    }
    out
}

/// `Tr(L_0 L_1 ⋯ L_{lz−1})` with each layer a product of cube operators, or of
/// single-site all-ones factors on layers without cubes.
pub fn transfer_z(j: &IsingCouplings, spec: &LatticeSpec, basis: TransferBasis) -> Result<ScaledZ, PartitionError> {
    let f = spec.face_sites();
    if f > TRANSFER_FACE_LIMIT {
        return Err(PartitionError::TooLarge { sites: f, limit: TRANSFER_FACE_LIMIT });
    }
    let w = build_weight(j);
    let wmax = w.matrix().iter().map(|z| z.re).fold(0.0, f64::max);
    let u = ising_unitary();
    let ones = ComplexMatrix::from_element(2, 2, c(1.0, 0.0));
    let (cube_op, gap_op) = match basis {
        TransferBasis::Weight => (w.matrix() / c(wmax, 0.0), ones),
        TransferBasis::Vertex => (build_r(j).matrix() / c(wmax, 0.0), &u * ones * u.adjoint()),
    };
    let layers: Vec<Vec<Placement>> = (0..spec.lz).map(|z| spec.layer(z)).collect();
    let ncubes: usize = layers.iter().map(Vec::len).sum();
    let dim = 1usize << f;
    // Site s of the cross-section is bit (f − 1 − s) of the state index.
    let bit = |s: usize| f - 1 - s;
    let total: C64 = (0..dim)
        .into_par_iter()
        .map(|start| {
            let mut v = vec![c(0.0, 0.0); dim];
            v[start] = c(1.0, 0.0);
            for layer in &layers {
                if layer.is_empty() {
                    for s in 0..f {
                        v = apply_local(&v, &gap_op, &[bit(s)]);
                    }
                } else {
                    for p in layer {
                        v = apply_local(&v, &cube_op, &p.face.map(bit));
                    }
                }
            }
            v[start]
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(ScaledZ { mantissa: total, ln_scale: ncubes as f64 * wmax.ln() })
}

/// Pfaffian by Parlett–Reid elimination with partial pivoting.
pub fn pfaffian(m: &ComplexMatrix) -> Result<C64, PartitionError> {
    let n = m.nrows();
    if n != m.ncols() || n % 2 == 1 {
        return Err(PartitionError::OddDimension(n));
    }
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let defect = (m + m.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if defect > 1e-12 * scale {
        return Err(PartitionError::NotAntisymmetric(defect));
    }
    let mut a = m.clone();
    let mut result = c(1.0, 0.0);
    for k in (0..n.saturating_sub(1)).step_by(2) {
        let (piv, _) = (k + 1..n).map(|q| (q, a[(k, q)].norm())).fold((k + 1, -1.0), |b, x| if x.1 > b.1 { x } else { b });
        if piv != k + 1 {
            a.swap_rows(k + 1, piv);
            a.swap_columns(k + 1, piv);
            result = -result;
        }
        let alpha = a[(k, k + 1)];
        if alpha.norm() == 0.0 {
            return Ok(c(0.0, 0.0));
        }
        result *= alpha;
        for r in k + 2..n {
            for s in k + 2..n {
                let upd = (a[(k + 1, r)] * a[(k, s)] - a[(k, r)] * a[(k + 1, s)]) / alpha;
                a[(r, s)] += upd;
            }
        }
    }
    Ok(result)
}

/// One Grassmann generator of an assembled form: `ψ̄` or `ψ` of `leg` on `link`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GeneratorLabel {
    pub link: usize,
    pub leg: usize,
    pub bar: bool,
}

/// Antisymmetric coefficient matrix of `Σ_{a<b} M_ab θ_a θ_b`.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    pub matrix: ComplexMatrix,
    pub generators: Vec<GeneratorLabel>,
}

impl QuadraticForm {
    pub fn new(matrix: ComplexMatrix, generators: Vec<GeneratorLabel>) -> Result<Self, PartitionError> {
        let defect = (&matrix + matrix.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > 1e-14 {
            return Err(PartitionError::NotAntisymmetric(defect));
        }
        Ok(Self { matrix, generators })
    }

    /// Berezin integral of `exp` of the form, integrated in generator order.
    pub fn pfaffian(&self) -> Result<C64, PartitionError> {
        pfaffian(&self.matrix)
    }
}

fn require_gaussian(a: &ActionCoefficients) -> Result<(), PartitionError> {
    let q = a.interaction_max() / a.a0.norm().max(1.0);
    if q > 1e-10 {
        return Err(PartitionError::NotGaussian(q));
    }
    Ok(())
}

/// Leg reversal `k → 5 − k` on all four legs.
pub fn leg_reversal() -> ComplexMatrix {
    ComplexMatrix::from_fn(16, 16, |r, q| {
        let m = MultiIndex::decode(r, 2).unwrap();
        if m.reversed().encode() == q {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Quadratic form of a corner-sharing `2×2×lz` stack: per-layer kernels
/// `K(ψ̄_t, ψ_{t+1})`, antiperiodic on the closing layer, and link measures
/// `e^{−ψ̄_t ψ_t}`. Returns the product of the layers' `A0` and the form.
pub fn stack_quadratic_form(j: &IsingCouplings, lz: usize, order: FermionOrder) -> Result<(C64, QuadraticForm), PartitionError> {
    if 8 * lz > GRASSMANN_GENERATOR_LIMIT {
        return Err(PartitionError::TooLarge { sites: 8 * lz, limit: GRASSMANN_GENERATOR_LIMIT });
    }
    let r = build_r(j);
    let rev = leg_reversal();
    let rb = CubeMatrix::new(2, &rev * r.matrix() * &rev).expect("16x16");
    let layers = [action_of(&r, order)?, action_of(&rb, order)?];
    for a in &layers {
        require_gaussian(a)?;
    }
    let pos = |link: usize, leg: usize, bar: bool| 8 * link + 2 * leg + usize::from(bar);
    let mut generators = Vec::with_capacity(8 * lz);
    for link in 0..lz {
        for leg in 0..4 {
            generators.push(GeneratorLabel { link, leg, bar: false });
            generators.push(GeneratorLabel { link, leg, bar: true });
        }
    }
    let mut m = ComplexMatrix::zeros(8 * lz, 8 * lz);
    let mut pref = c(1.0, 0.0);
    for t in 0..lz {
        let a = &layers[t % 2];
        pref *= a.a0;
        let next = (t + 1) % lz;
        let wrap = t == lz - 1;
        for (mask, v) in a.quadratic_exponent().terms() {
            let bits: Vec<usize> = (0..8).filter(|b| mask >> b & 1 == 1).collect();
            let place = |b: usize| if b < 4 { pos(t, b, true) } else { pos(next, b - 4, false) };
            let psis = bits.iter().filter(|&&b| b >= 4).count();
            let sign = if wrap && psis % 2 == 1 { -1.0 } else { 1.0 };
            let (x, y) = (place(bits[0]), place(bits[1]));
            m[(x, y)] += v * sign;
            m[(y, x)] -= v * sign;
        }
        for leg in 0..4 {
            let (b, p) = (pos(t, leg, true), pos(t, leg, false));
            m[(b, p)] -= c(1.0, 0.0);
            m[(p, b)] += c(1.0, 0.0);
        }
    }
    Ok((pref, QuadraticForm::new(m, generators)?))
}

/// `Z` of one cube from its Gaussian action: `1ᵀW1 = 16 R_1111^1111`, with the
/// top kernel coefficient written as `A0 · Pf`.
pub fn gaussian_cube_sum(a: &ActionCoefficients, order: FermionOrder) -> Result<C64, PartitionError> {
    require_gaussian(a)?;
    let mut q = ComplexMatrix::zeros(8, 8);
    for (mask, v) in a.quadratic_exponent().terms() {
        let bits: Vec<usize> = (0..8).filter(|b| mask >> b & 1 == 1).collect();
        q[(bits[0], bits[1])] += v;
        q[(bits[1], bits[0])] -= v;
    }
    let all = MultiIndex { digits: [1; 4], base: 2 };
    let top = a.a0 * pfaffian(&q)?;
    Ok(c(16.0, 0.0) * top * kernel_sign(all, all, order))
}

/// Partition function as `A0`-prefactor times a Pfaffian at free-fermion points.
pub fn gaussian_z(j: &IsingCouplings, spec: &LatticeSpec) -> Result<ScaledZ, PartitionError> {
    let (order, resid) = gaussian_order(j)?;
    if resid > 1e-10 {
        return Err(PartitionError::NotGaussian(resid));
    }
    match spec.tiling {
        Tiling::SingleSublattice => {
            let zc = gaussian_cube_sum(&action_of(&build_r(j), order)?, order)?;
            let n = spec.placements().len() as f64;
            Ok(ScaledZ { mantissa: C64::from_polar(1.0, n * zc.arg()), ln_scale: n * zc.norm().ln() })
        }
        Tiling::CornerSharing => {
            if spec.lx != 2 || spec.ly != 2 {
                return Err(PartitionError::Unsupported(format!(
                    "corner-sharing cross-section {}x{} (only 2x2 stacks are assembled)",
                    spec.lx, spec.ly
                )));
            }
            let (pref, form) = stack_quadratic_form(j, spec.lz, order)?;
            let z = pref * form.pfaffian()?;
            Ok(ScaledZ { mantissa: z, ln_scale: 0.0 })
        }
    }
}

/// Steps `e_i` from a cube to the neighbour sharing its top leg `i`.
pub const TOP_NEIGHBOURS: [[f64; 3]; 4] = [[-1.0, -1.0, 1.0], [1.0, -1.0, 1.0], [-1.0, 1.0, 1.0], [1.0, 1.0, 1.0]];

pub type Block8 = SMatrix<C64, 8, 8>;

/// Quadratic coefficients of the homogeneous action, ready for Fourier transform.
#[derive(Debug, Clone)]
pub struct MomentumKernel {
    /// `hop[i][j]`: coefficient of `ψ̄_i ψ_j`, identity included.
    pub hop: [[C64; 4]; 4],
    /// `pair[i][j]`: coefficient of `ψ_i ψ_j`.
    pub pair: [[C64; 4]; 4],
    /// `pair_bar[i][j]`: coefficient of `ψ̄_i ψ̄_j`.
    pub pair_bar: [[C64; 4]; 4],
}

impl MomentumKernel {
    pub fn new(j: &IsingCouplings, order: FermionOrder) -> Result<Self, PartitionError> {
        let a = action_of(&build_r(j), order)?;
        let z = c(0.0, 0.0);
        let (mut hop, mut pair, mut pair_bar) = ([[z; 4]; 4], [[z; 4]; 4], [[z; 4]; 4]);
        for i in 0..4 {
            for k in 0..4 {
                hop[i][k] = a.action.coeff(&[Gen::Bar(i), Gen::Psi(k)]) + if i == k { 1.0 } else { 0.0 };
                if i != k {
                    pair[i][k] = a.action.coeff(&[Gen::Psi(i), Gen::Psi(k)]);
                    pair_bar[i][k] = a.action.coeff(&[Gen::Bar(i), Gen::Bar(k)]);
                }
            }
        }
        Ok(Self { hop, pair, pair_bar })
    }

    /// 8×8 block coupling `Ψ = (ψ(p), ψ̄(−p))` to `Ψ̄ = (ψ̄(p), ψ(−p))`.
    ///
    /// The top leg `i` of the cube at `o` is glued to the bottom leg `5 − i`
    /// of the cube at `o + e_i`; each hopping term picks up `e^{−ip·e_i}`, the
    /// link measure contributes `−1` on the `p` diagonal and `+1` on the `−p`
    /// diagonal, and the local pairings couple `p` with `−p`.
    pub fn block(&self, p: [f64; 3]) -> Block8 {
        let dot = |q: [f64; 3], e: [f64; 3]| q[0] * e[0] + q[1] * e[1] + q[2] * e[2];
        let phase = |x: f64| C64::from_polar(1.0, x);
        let mirror = |i: usize| 3 - i;
        let minus = [-p[0], -p[1], -p[2]];
        let mut m = Block8::zeros();
        for i in 0..4 {
            let e = TOP_NEIGHBOURS[i];
            for k in 0..4 {
                let h = self.hop[i][k];
                m[(mirror(i), k)] += h * phase(-dot(p, e));
                m[(4 + k, 4 + mirror(i))] -= h * phase(-dot(minus, e));
            }
        }
        for k in 0..4 {
            m[(k, k)] -= 1.0;
            m[(4 + k, 4 + k)] += 1.0;
        }
        for i in 0..4 {
            for k in i + 1..4 {
                let a = self.pair[i][k];
                m[(4 + i, k)] += a;
                m[(4 + k, i)] -= a;
                let b = self.pair_bar[i][k];
                let x = dot(p, TOP_NEIGHBOURS[k]) - dot(p, TOP_NEIGHBOURS[i]);
                m[(mirror(i), 4 + mirror(k))] += b * phase(x);
                m[(mirror(k), 4 + mirror(i))] -= b * phase(-x);
            }
        }
        m
    }

    pub fn determinant(&self, p: [f64; 3]) -> C64 {
        self.block(p).determinant()
    }

}

/// Determinant of the momentum block for the plaquette orientation used
/// throughout the homogeneous scan.
pub fn momentum_determinant(j: &IsingCouplings, p: [f64; 3]) -> Result<C64, PartitionError> {
    Ok(MomentumKernel::new(j, FermionOrder::Ccw)?.determinant(p))
}

/// Antiperiodic momenta `(2k + 1)π/n − π`.
pub fn antiperiodic_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| (2 * k + 1) as f64 * std::f64::consts::PI / n as f64 - std::f64::consts::PI).collect()
}

/// Extremes of the block determinant over an `n³` antiperiodic grid, with
/// the smallest modulus refined off the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSummary {
    /// Smallest `|det|` on the grid.
    pub grid_min: f64,
    /// Largest `|det|` on the grid.
    pub grid_max: f64,
    /// Smallest `|det|` after golden-section refinement from the grid minimum.
    pub refined_min: f64,
    /// Momentum of the refined minimum.
    pub at: [f64; 3],
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn golden_section(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-12 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Grid search followed by coordinate-wise golden-section refinement.
pub fn grid_summary(kernel: &MomentumKernel, n: usize) -> GridSummary {
    let ks = antiperiodic_grid(n);
    let point = |idx: usize| [ks[idx / (n * n)], ks[idx / n % n], ks[idx % n]];
    let (grid_min, arg, grid_max) = (0..n * n * n)
        .into_par_iter()
        .map(|idx| {
            let d = kernel.determinant(point(idx)).norm();
            (d, idx, d)
        })
        .reduce(
            || (f64::INFINITY, usize::MAX, 0.0),
            |a, b| {
                let (m, i) = if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { (b.0, b.1) } else { (a.0, a.1) };
                (m, i, a.2.max(b.2))
            },
        );
    let mut p = point(arg);
    let mut best = grid_min;
    let h = 2.0 * std::f64::consts::PI / n as f64;
    for _ in 0..12 {
        for axis in 0..3 {
            let centre = p[axis];
            let (x, v) = golden_section(centre - h, centre + h, |t| {
                let mut q = p;
                q[axis] = t;
                kernel.determinant(q).norm()
            });
            if v < best {
                best = v;
                p[axis] = x;
            }
        }
    }
    GridSummary { grid_min, grid_max, refined_min: best, at: p }
}

/// Refined minimum below this fraction of the grid maximum counts as a zero.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

impl GridSummary {
    pub fn singular(&self) -> bool {
        self.refined_min <= SINGULAR_TOLERANCE * self.grid_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub j: f64,
    pub min_det: f64,
    pub grid: usize,
    pub estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalScan {
    pub estimate: f64,
    /// Distance between the extrapolated value and the finest grid's value.
    pub error: f64,
    pub order: FermionOrder,
    /// Bisection result per grid size.
    pub per_grid: Vec<ScanRow>,
    /// Every evaluated point.
    pub rows: Vec<ScanRow>,
}

impl CriticalScan {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("J,min_det,grid,estimate\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.j, r.min_det, r.grid, r.estimate);
        }
        s
    }
}

/// Locates the homogeneous coupling `J = J1 = J2 = J3` at which the momentum
/// block first becomes singular. The determinant is non-negative; below the
/// critical coupling it is bounded away from zero, above it vanishes at
/// isolated momenta. Each grid seeds a refined minimisation in `p`, and the
/// onset of a vanishing minimum is bisected in `J`. The last two grid
/// estimates are extrapolated in `1/n²`.
pub fn critical_scan(lo: f64, hi: f64, grids: &[usize], order: FermionOrder) -> Result<CriticalScan, PartitionError> {
    let mut rows = Vec::new();
    let mut per_grid = Vec::new();
    for &n in grids {
        let mut eval = |jv: f64| -> Result<GridSummary, PartitionError> {
            let s = grid_summary(&MomentumKernel::new(&IsingCouplings::homogeneous(jv), order)?, n);
            rows.push(ScanRow { j: jv, min_det: s.refined_min, grid: n, estimate: f64::NAN });
            Ok(s)
        };
        let (s_lo, s_hi) = (eval(lo)?, eval(hi)?);
        if s_lo.singular() || !s_hi.singular() {
            return Err(PartitionError::NoRoot { lo, hi, min: s_lo.refined_min.min(s_hi.refined_min) });
        }
        let (mut a, mut b) = (lo, hi);
        let mut last = s_hi;
        while b - a > 1e-10 {
            let mid = 0.5 * (a + b);
            let s = eval(mid)?;
            if s.singular() {
                b = mid;
                last = s;
            } else {
                a = mid;
            }
        }
        per_grid.push(ScanRow { j: 0.5 * (a + b), min_det: last.refined_min, grid: n, estimate: f64::NAN });
    }
    let last = *per_grid.last().ok_or(PartitionError::NoRoot { lo, hi, min: f64::INFINITY })?;
    let (estimate, error) = match per_grid.len() {
        1 => (last.j, f64::NAN),
        len => {
            let (p, q) = (per_grid[len - 2], per_grid[len - 1]);
            let (n1, n2) = ((p.grid * p.grid) as f64, (q.grid * q.grid) as f64);
            let rich = (n2 * q.j - n1 * p.j) / (n2 - n1);
            (rich, (rich - q.j).abs())
        }
    };
    for r in per_grid.iter_mut().chain(rows.iter_mut()) {
        r.estimate = estimate;
    }
    Ok(CriticalScan { estimate, error, order, per_grid, rows })
}
