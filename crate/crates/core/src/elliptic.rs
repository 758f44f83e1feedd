//! Jacobi elliptic functions of complex argument and the elliptic
//! parametrization of the cube couplings.

use crate::ising::ComplexCouplings;
use crate::tensor::{c, C64};
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticError {
    #[error("modulus {0} outside (0, 1)")]
    Modulus(f64),
    #[error("argument {z} lies within {distance:e} of a pole")]
    NearPole { z: C64, distance: f64 },
    #[error("non-finite argument {0}")]
    NonFinite(C64),
}

const POLE_TOLERANCE: f64 = 1e-10;

fn check_modulus(k: f64) -> Result<(), EllipticError> {
    if k > 0.0 && k < 1.0 {
        Ok(())
    } else {
        Err(EllipticError::Modulus(k))
    }
}

/// Arithmetic-geometric mean.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a.abs() {
            break;
        }
        (a, b) = (0.5 * (a + b), (a * b).sqrt());
    }
    0.5 * (a + b)
}

/// Quarter period `K(k)`.
pub fn quarter_period(k: f64) -> f64 {
    FRAC_PI_2 / agm(1.0, (1.0 - k * k).sqrt())
}

/// `(sn, cn, dn)` of real argument with modulus `k` and complement `kp`,
/// by descending Landen transformation.
pub fn jacobi_real(u: f64, k: f64, kp: f64) -> (f64, f64, f64) {
    if kp == 0.0 {
        let s = 1.0 / u.cosh();
        return (u.tanh(), s, s);
    }
    let (mut a, mut b, mut cc) = (1.0, kp, k);
    let mut ratios = Vec::with_capacity(16);
    while cc.abs() > 1e-17 * a && ratios.len() < 64 {
        let an = 0.5 * (a + b);
        cc = 0.5 * (a - b);
        b = (a * b).sqrt();
        a = an;
        ratios.push(cc / a);
    }
    let mut phi = 2f64.powi(ratios.len() as i32) * a * u;
    for r in ratios.iter().rev() {
        phi = 0.5 * (phi + (r * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    (sn, cn, (1.0 - k * k * sn * sn).sqrt())
}

/// Distance from `z` to the nearest pole `iK′ + 2mK + 2niK′`.
pub fn pole_distance(z: C64, k: f64) -> f64 {
    let kk = quarter_period(k);
    let kkp = FRAC_PI_2 / agm(1.0, k);
    let m = (z.re / (2.0 * kk)).round();
    let n = ((z.im - kkp) / (2.0 * kkp)).round();
    (z - c(2.0 * m * kk, kkp + 2.0 * n * kkp)).norm()
}

/// `(sn, cn, dn)` at complex `z = x + iy` via the addition theorems, with the
/// real part at modulus `k` and the imaginary part at the complement `k′`.
pub fn jacobi(z: C64, k: f64) -> Result<(C64, C64, C64), EllipticError> {
    check_modulus(k)?;
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(EllipticError::NonFinite(z));
    }
    let kp = (1.0 - k * k).sqrt();
    let (s, cn_x, d) = jacobi_real(z.re, k, kp);
    let (s1, c1, d1) = jacobi_real(z.im, kp, k);
    let delta = c1 * c1 + k * k * s * s * s1 * s1;
    if delta.abs() < POLE_TOLERANCE {
        return Err(EllipticError::NearPole { z, distance: pole_distance(z, k) });
    }
    let sn = c(s * d1, cn_x * d * s1 * c1) / delta;
    let cn = c(cn_x * c1, -s * d * s1 * d1) / delta;
    let dn = c(d * c1 * d1, -k * k * s * cn_x * s1) / delta;
    Ok((sn, cn, dn))
}

/// Largest deviation of `sn² + cn² = 1` and `dn² + k² sn² = 1`.
pub fn identity_residual(z: C64, k: f64) -> Result<f64, EllipticError> {
    let (s, cn, d) = jacobi(z, k)?;
    let one = c(1.0, 0.0);
    Ok((s * s + cn * cn - one).norm().max((d * d + s * s * (k * k) - one).norm()))
}

/// Spectral parameters `u`, `w` and modulus `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipticPoint {
    pub u: C64,
    pub w: C64,
    pub k: f64,
}

impl EllipticPoint {
    pub fn new(u: C64, w: C64, k: f64) -> Result<Self, EllipticError> {
        check_modulus(k)?;
        for z in [u, w] {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(EllipticError::NonFinite(z));
            }
        }
        Ok(Self { u, w, k })
    }

    pub fn real(u: f64, w: f64, k: f64) -> Result<Self, EllipticError> {
        Self::new(c(u, 0.0), c(w, 0.0), k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaxterCouplings {
    pub couplings: ComplexCouplings,
    /// `|e^{+2J} e^{−2J} − 1|` per coupling, computed from the two formulas.
    pub product_residual: [f64; 3],
    /// Some `|Im J|` lies within `1e−6` of `π/2`, where the halved principal
    /// logarithm switches branch.
    pub near_branch_cut: bool,
}

fn i_times(z: C64) -> C64 {
    c(-z.im, z.re)
}

/// `e^{±2J1} = cn(iu) ∓ i sn(iu)`, `e^{±2J2}` likewise with `w`, and
/// `e^{±2J3} = i(dn(i(u+w)) ± 1)/(k sn(i(u+w)))`; principal logarithms halved.
pub fn baxter_couplings(p: &EllipticPoint) -> Result<BaxterCouplings, EllipticError> {
    let k = p.k;
    let pair = |x: C64| -> Result<(C64, C64), EllipticError> {
        let (s, cn, _) = jacobi(i_times(x), k)?;
        Ok((cn - i_times(s), cn + i_times(s)))
    };
    let (p1, m1) = pair(p.u)?;
    let (p2, m2) = pair(p.w)?;
    let v = i_times(p.u + p.w);
    let (s, _, d) = jacobi(v, k)?;
    let den = s * k;
    if den.norm() < POLE_TOLERANCE {
        return Err(EllipticError::NearPole { z: v, distance: v.norm() });
    }
    let p3 = i_times(d + 1.0) / den;
    let m3 = i_times(d - 1.0) / den;
    let half_log = |x: C64| x.ln() * 0.5;
    let couplings = ComplexCouplings { j1: half_log(p1), j2: half_log(p2), j3: half_log(p3) };
    let one = c(1.0, 0.0);
    let product_residual = [(p1 * m1 - one).norm(), (p2 * m2 - one).norm(), (p3 * m3 - one).norm()];
    let near_branch_cut = [couplings.j1, couplings.j2, couplings.j3].iter().any(|j| FRAC_PI_2 - j.im.abs() < 1e-6);
    Ok(BaxterCouplings { couplings, product_residual, near_branch_cut })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AltJ3 {
    pub j3: C64,
    /// `|e^{+2J3} e^{−2J3} − 1|`; not expected to vanish for this variant.
    pub product_residual: f64,
}

/// `e^{±2J3} = i(dn(iu) + dn(iw) ± 1)/(k sn(i(u+w)))`.
pub fn baxter_alt_j3(p: &EllipticPoint) -> Result<AltJ3, EllipticError> {
    let k = p.k;
    let (_, _, du) = jacobi(i_times(p.u), k)?;
    let (_, _, dw) = jacobi(i_times(p.w), k)?;
    let v = i_times(p.u + p.w);
    let (s, _, _) = jacobi(v, k)?;
    let den = s * k;
    if den.norm() < POLE_TOLERANCE {
        return Err(EllipticError::NearPole { z: v, distance: v.norm() });
    }
    let plus = i_times(du + dw + 1.0) / den;
    let minus = i_times(du + dw - 1.0) / den;
    Ok(AltJ3 { j3: plus.ln() * 0.5, product_residual: (plus * minus - 1.0).norm() })
}
