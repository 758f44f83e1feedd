use cube_rmatrix::elliptic::{identity_residual, quarter_period};
use cube_rmatrix::grassmann::{
    action_of, closed_form_quadratic, free_fermion_residual, gp_exp, gp_log, gp_mul, minor_relation_residual, FermionOrder,
    GrassmannPoly,
};
use cube_rmatrix::integrability::{
    contract, cube_equation_residual, cube_family, face_family, ybe_degeneration_pattern, ybe_residual, ContractionPattern,
    OpPlacement,
};
use cube_rmatrix::ising::{orbit_spread, parity_violation, table_residuals};
use cube_rmatrix::partition::{brute_force_z, pfaffian, transfer_z, Boundary, Tiling, TransferBasis};
use cube_rmatrix::potts::{charge_commutator, charge_operator, potts_cell_hamiltonian};
use cube_rmatrix::tensor::{clock_shift, conjugate_four, fourier_unitary, kron, max_abs, max_abs_diff};
use cube_rmatrix::{
    baxter_couplings, build_r, build_r_p_direct, build_r_p_factorized, build_weight, gaussian_z, jacobi, ChiralCouplings,
    ComplexMatrix, CubeMatrix, EllipticPoint, IsingCouplings, LatticeSpec, SpectralAssignment, C64,
};
use proptest::prelude::*;
use std::collections::HashMap;

fn coupling() -> impl Strategy<Value = f64> {
    -1.0..1.0f64
}

fn couplings() -> impl Strategy<Value = IsingCouplings> {
    (coupling(), coupling(), coupling()).prop_map(|(a, b, c)| IsingCouplings::new(a, b, c))
}

/// Couplings with the one on `axis` set to zero.
fn axis_point() -> impl Strategy<Value = IsingCouplings> {
    (couplings(), 0..3usize).prop_map(|(j, axis)| {
        let mut v = j.as_array();
        v[axis] = 0.0;
        IsingCouplings::new(v[0], v[1], v[2])
    })
}

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(complex(), rows * cols).prop_map(move |v| ComplexMatrix::from_vec(rows, cols, v))
}

fn integer_matrix(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-8i32..8, -8i32..8), rows * cols)
        .prop_map(move |v| ComplexMatrix::from_iterator(rows, cols, v.into_iter().map(|(a, b)| C64::new(a as f64, b as f64))))
}

fn harmonics(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-0.5..0.5f64, -0.5..0.5f64).prop_map(|(a, b)| C64::new(a, b)), n - 1)
}

fn chiral(n: usize) -> impl Strategy<Value = ChiralCouplings> {
    (harmonics(n), harmonics(n), harmonics(n)).prop_map(move |(x, y, z)| ChiralCouplings::new(n, x, y, z).unwrap())
}

fn spectrum(m: &ComplexMatrix) -> Vec<C64> {
    m.clone().schur().eigenvalues().expect("complex Schur form").iter().cloned().collect()
}

/// Greedy matching of two eigenvalue lists; largest distance of a matched pair.
fn spectrum_distance(a: &[C64], b: &[C64]) -> f64 {
    let mut rest: Vec<C64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = rest.iter().enumerate().map(|(k, y)| (k, (x - y).norm())).min_by(|p, q| p.1.total_cmp(&q.1)).unwrap();
        worst = worst.max(d);
        rest.swap_remove(k);
    }
    worst
}

// tensor_core

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_is_associative(a in integer_matrix(2, 3), b in integer_matrix(3, 2), c in integer_matrix(2, 2)) {
        prop_assert_eq!(kron(&a, &kron(&b, &c)), kron(&kron(&a, &b), &c));
    }

    #[test]
    fn kron_is_associative_in_floating_point(a in matrix(2, 2), b in matrix(2, 3), c in matrix(3, 2)) {
        let (l, r) = (kron(&a, &kron(&b, &c)), kron(&kron(&a, &b), &c));
        prop_assert!(max_abs_diff(&l, &r) <= 1e-15 * max_abs(&l).max(1.0));
    }

    #[test]
    fn conjugation_preserves_trace_and_spectrum(w in matrix(16, 16), q in matrix(2, 2)) {
        let u = q.qr().q();
        let cw = CubeMatrix::new(2, w.clone()).unwrap();
        let r = conjugate_four(&cw, &u).unwrap();
        prop_assert!((r.matrix().trace() - w.trace()).norm() < 1e-12);
        prop_assert!(spectrum_distance(&spectrum(&w), &spectrum(r.matrix())) < 1e-10);
    }
}

#[test]
fn fourier_and_clock_shift_relations() {
    for n in 2..=8 {
        let u = fourier_unitary(n).unwrap();
        let id = ComplexMatrix::identity(n, n);
        assert!(max_abs_diff(&(&u * u.adjoint()), &id) < 1e-14, "N = {n}");
        let (z, x) = clock_shift(n).unwrap();
        let pow = |m: &ComplexMatrix| (1..n).fold(m.clone(), |acc, _| &acc * m);
        assert!(max_abs_diff(&pow(&z), &id) < 1e-14);
        assert!(max_abs_diff(&pow(&x), &id) < 1e-14);
        let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / n as f64);
        assert!(max_abs_diff(&(&x * &z), &((&z * &x) * w)) < 1e-14, "N = {n}");
    }
}

// ising_cube

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn r_selects_parity_and_is_orbit_constant(j in couplings()) {
        let r = build_r(&j);
        let scale = max_abs(r.matrix());
        prop_assert!(parity_violation(&r) < 1e-12 * scale.max(1.0));
        prop_assert!(orbit_spread(&r) < 1e-12 * scale.max(1.0));
    }

    #[test]
    fn table_matches_conjugation_with_corrections(j in couplings()) {
        for e in table_residuals(&j) {
            match e.corrected {
                None => prop_assert!(e.printed < 1e-10, "R_{}^{} residual {}", e.lower, e.upper, e.printed),
                Some(c) => prop_assert!(c < 1e-10, "R_{}^{} corrected residual {}", e.lower, e.upper, c),
            }
        }
    }

    #[test]
    fn weight_is_positive(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64) {
        let w = build_weight(&IsingCouplings::new(a, b, c));
        prop_assert!(w.matrix().iter().all(|z| z.re > 0.0 && z.im == 0.0));
    }
}

// chiral_potts

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn factorized_equals_direct_n2(cp in chiral(2)) {
        let (f, _) = build_r_p_factorized(&cp).unwrap();
        let d = build_r_p_direct(&cp).unwrap();
        prop_assert!(max_abs_diff(f.matrix(), d.matrix()) <= 1e-10 * max_abs(d.matrix()).max(1.0));
    }

    #[test]
    fn factorized_equals_direct_n3(cp in chiral(3)) {
        let (f, _) = build_r_p_factorized(&cp).unwrap();
        let d = build_r_p_direct(&cp).unwrap();
        prop_assert!(max_abs_diff(f.matrix(), d.matrix()) <= 1e-10 * max_abs(d.matrix()).max(1.0));
    }

    #[test]
    fn cell_hamiltonian_commutes_with_charge(n in 2..=3usize, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut h = || (0..n - 1).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect::<Vec<_>>();
        let (jx, jy, field) = (h(), h(), h());
        let ham = potts_cell_hamiltonian(n, &jx, &jy, &field).unwrap();
        prop_assert!(charge_commutator(&ham, &charge_operator(n).unwrap()) < 1e-12);
    }

    #[test]
    fn self_conjugate_harmonics_give_hermitian_hamiltonian(a in complex(), b in complex(), h in -1.0..1.0f64) {
        let jx = [a, a.conj()];
        let jy = [b, b.conj()];
        let ham = potts_cell_hamiltonian(3, &jx, &jy, &[C64::new(h, 0.0); 2]).unwrap();
        prop_assert!(max_abs_diff(&ham, &ham.adjoint()) < 1e-14);
    }
}

#[test]
fn factorized_equals_direct_n4() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let mut h = || (0..3).map(|_| C64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))).collect::<Vec<_>>();
        let cp = ChiralCouplings::new(4, h(), h(), h()).unwrap();
        let (f, _) = build_r_p_factorized(&cp).unwrap();
        let d = build_r_p_direct(&cp).unwrap();
        assert!(max_abs_diff(f.matrix(), d.matrix()) <= 1e-10 * max_abs(d.matrix()).max(1.0));
    }
}

// grassmann_engine

fn poly(coeffs: Vec<(u8, C64)>) -> GrassmannPoly {
    let mut p = GrassmannPoly::zero();
    for (m, v) in coeffs {
        p.add_term(m, v);
    }
    p
}

fn even_poly() -> impl Strategy<Value = GrassmannPoly> {
    (prop::collection::vec((any::<u8>().prop_filter("even", |m| m.count_ones() % 2 == 0 && *m != 0), complex()), 0..24), 0.5..2.0f64)
        .prop_map(|(terms, s)| {
            let mut p = poly(terms);
            p.add_term(0, C64::new(s, 0.0));
            p
        })
}

fn any_poly() -> impl Strategy<Value = GrassmannPoly> {
    prop::collection::vec((any::<u8>(), complex()), 0..12).prop_map(poly)
}

fn poly_diff(a: &GrassmannPoly, b: &GrassmannPoly) -> f64 {
    a.sub(b).max_abs_where(|_| true)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grassmann_product_is_associative(a in any_poly(), b in any_poly(), c in any_poly()) {
        prop_assert!(poly_diff(&gp_mul(&a, &gp_mul(&b, &c)), &gp_mul(&gp_mul(&a, &b), &c)) < 1e-12);
    }

    #[test]
    fn exp_log_round_trip(p in even_poly()) {
        let (a0, l) = gp_log(&p).unwrap();
        let back = gp_exp(&l).scale(a0);
        prop_assert!(poly_diff(&back, &p) < 1e-12 * p.max_abs_where(|_| true).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn extraction_agrees_with_closed_forms(j in couplings()) {
        let r = build_r(&j);
        let full = action_of(&r, FermionOrder::Ccw).unwrap();
        let closed = closed_form_quadratic(&r, FermionOrder::Ccw).unwrap();
        for (m, v) in closed.action.terms() {
            let got = full.action.get(m);
            prop_assert!((got - v).norm() <= 1e-10 * v.norm().max(1.0), "mask {:08b}: {} vs {}", m, got, v);
        }
    }

    #[test]
    fn axis_points_are_free_fermion(j in axis_point()) {
        prop_assert!(free_fermion_residual(&j).unwrap() < 1e-12);
        prop_assert!(minor_relation_residual(&build_r(&j)).unwrap() < 1e-10);
    }

    #[test]
    fn couplings_off_the_axes_interact(a in 1e-3..1.0f64, b in 1e-3..1.0f64, c in 1e-3..1.0f64, signs in 0..8u8) {
        let s = |k: u8, v: f64| if signs >> k & 1 == 1 { -v } else { v };
        let j = IsingCouplings::new(s(0, a), s(1, b), s(2, c));
        prop_assert!(free_fermion_residual(&j).unwrap() >= 1e-12);
    }
}

// partition_engine

fn lattice(lz: usize, tiling: Tiling) -> LatticeSpec {
    LatticeSpec::new(2, 2, lz, tiling, Boundary::Periodic).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn brute_and_transfer_routes_agree(j in couplings(), corner in any::<bool>(), lz in prop::sample::select(vec![2usize, 4])) {
        let spec = lattice(lz, if corner { Tiling::CornerSharing } else { Tiling::SingleSublattice });
        let b = brute_force_z(&j, &spec).unwrap();
        let w = transfer_z(&j, &spec, TransferBasis::Weight).unwrap();
        let r = transfer_z(&j, &spec, TransferBasis::Vertex).unwrap();
        prop_assert!(b.rel_diff(&w) < 1e-10);
        prop_assert!(w.rel_diff(&r) < 1e-10);
    }

    #[test]
    fn gaussian_matches_brute_force(j in axis_point(), corner in any::<bool>()) {
        let j = IsingCouplings::new(0.6 * j.j1, 0.6 * j.j2, 0.6 * j.j3);
        let spec = lattice(if corner { 4 } else { 2 }, if corner { Tiling::CornerSharing } else { Tiling::SingleSublattice });
        let g = gaussian_z(&j, &spec).unwrap();
        prop_assert!(g.rel_diff(&brute_force_z(&j, &spec).unwrap()) < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pfaffian_squares_to_determinant(half in 1..=16usize, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let n = 2 * half;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for q in r + 1..n {
                let v = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[(r, q)] = v;
                m[(q, r)] = -v;
            }
        }
        let pf = pfaffian(&m).unwrap();
        let det = m.determinant();
        prop_assert!((pf * pf - det).norm() <= 1e-9 * det.norm().max(1e-300), "n = {}: {} vs {}", n, pf * pf, det);
    }
}

// elliptic_param

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jacobi_identities_hold(re in -1.5..1.5f64, im in -1.5..1.5f64, k in 0.05..0.95f64) {
        if let Ok(r) = identity_residual(C64::new(re, im), k) {
            prop_assert!(r < 1e-12);
        }
    }

    #[test]
    fn sn_has_period_4k(x in -2.0..2.0f64, y in -0.5..0.5f64, k in 0.05..0.95f64) {
        let z = C64::new(x, y);
        let shifted = z + 4.0 * quarter_period(k);
        let (Ok((a, _, _)), Ok((b, _, _))) = (jacobi(z, k), jacobi(shifted, k)) else { return Ok(()) };
        prop_assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn zero_w_gives_zero_j2(u in 0.05..1.5f64, k in 0.05..0.95f64) {
        let b = baxter_couplings(&EllipticPoint::real(u, 0.0, k).unwrap()).unwrap();
        prop_assert_eq!(b.couplings.j2, C64::new(0.0, 0.0));
    }
}

// integrability_check

fn place(op: &str, legs: &[&str]) -> OpPlacement {
    OpPlacement { op: op.into(), legs: legs.iter().map(|s| s.to_string()).collect() }
}

fn ybe_pattern() -> ContractionPattern {
    ContractionPattern {
        lhs: vec![place("A", &["a0", "b0", "a1", "b1"]), place("B", &["a1", "c0", "a2", "c1"]), place("C", &["b1", "c1", "b2", "c2"])],
        rhs: vec![place("C", &["b0", "c0", "x", "y"]), place("B", &["a0", "y", "z", "c2"]), place("A", &["z", "x", "a2", "b2"])],
    }
}

fn renamed(p: &ContractionPattern, from: &str, to: &str) -> ContractionPattern {
    let side = |s: &[OpPlacement]| {
        s.iter()
            .map(|o| OpPlacement { op: o.op.clone(), legs: o.legs.iter().map(|l| if l == from { to.to_string() } else { l.clone() }).collect() })
            .collect()
    };
    ContractionPattern { lhs: side(&p.lhs), rhs: side(&p.rhs) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn contraction_is_bilinear(a in matrix(4, 4), a2 in matrix(4, 4), b in matrix(4, 4), c in matrix(4, 4), s in complex(), t in complex()) {
        let pattern = ybe_pattern();
        let ops = |x: &ComplexMatrix| HashMap::from([("A".to_string(), x.clone()), ("B".to_string(), b.clone()), ("C".to_string(), c.clone())]);
        let (l1, r1) = contract(&pattern, &ops(&a)).unwrap();
        let (l2, r2) = contract(&pattern, &ops(&a2)).unwrap();
        let (lm, rm) = contract(&pattern, &ops(&(&a * s + &a2 * t))).unwrap();
        for (mix, one, two) in [(&lm, &l1, &l2), (&rm, &r1, &r2)] {
            for k in 0..mix.data.len() {
                let want = one.data[k] * s + two.data[k] * t;
                prop_assert!((mix.data[k] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn contraction_ignores_internal_labels(a in matrix(4, 4), b in matrix(4, 4), c in matrix(4, 4)) {
        let pattern = ybe_pattern();
        let ops = HashMap::from([("A".to_string(), a), ("B".to_string(), b), ("C".to_string(), c)]);
        let (l, r) = contract(&pattern, &ops).unwrap();
        let (l2, r2) = contract(&renamed(&renamed(&pattern, "a1", "internal"), "y", "other"), &ops).unwrap();
        prop_assert_eq!(&l.legs, &l2.legs);
        for (x, y) in l.data.iter().zip(&l2.data).chain(r.data.iter().zip(&r2.data)) {
            prop_assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn degenerate_cube_equation_is_the_face_equation(u1 in 0.05..0.45f64, du in 0.1..0.4f64, dv in 0.1..0.4f64, k in 0.2..0.9f64) {
        let (u3, u5) = (u1 + du, u1 + du + dv);
        let a = SpectralAssignment { u: [u1, u1, u3, u3, u5, u3] };
        let got = cube_equation_residual(&cube_family(k), &a, &ybe_degeneration_pattern()).unwrap();
        let expected = ybe_residual(face_family(k), u5, u1, u3).unwrap();
        prop_assert!((got - expected).abs() < 1e-12, "{} vs {}", got, expected);
    }
}
