//! One test per documented worked example, checked against closed forms or
//! independently computed values.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use spectraljacobi::jmatrix::{
    fold_to_block, gram_weight, laguerre, FiveTermModel, JacobiTModel, MorseModel,
};
use spectraljacobi::mvop::{
    block_zeros, carleman_hint, commutant, eval_block_pair, gegenbauer, liouville_ostrogradsky_defect, monic_coefficients,
    monic_from_weight, mv_markov, weight_support, BlockRecurrence,
};
use spectraljacobi::opcore::{
    cd_kernel, cd_kernel_sum, eval_derivs, eval_pair, lognormal_moment, markov_stieltjes, zeros, RecurrenceCoeffs,
};
use spectraljacobi::qkernel::{
    asc_coeffs, casorati, discrete_spectrum, eigenvector, eigvec_norm_sq, nextremal_gram, nextremal_measure, nextremal_node,
    phi_minus_seq, phi_plus_seq, proportionality, qpoch, qpoch_inf_real, truncation_defect, wronskian_closed,
    zero_solution_min_norm, BiInfiniteCoeffs, QParams,
};
use spectraljacobi::trisolve::{
    block_quadrature, eigh_tridiagonal, gauss_quadrature, herm_eigh, MatrixMeasure, SymTridiag,
};
use spectraljacobi::{cli, CMat, Complex64};

fn c64(x: f64) -> Complex64 {
    Complex64::from(x)
}

fn spectral_norm(m: &CMat) -> f64 {
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

// ---------- trisolve ----------

#[test]
fn eigensolver_small_matrices() {
    let e = eigh_tridiagonal(&SymTridiag::new(vec![0.7], vec![]).unwrap()).unwrap();
    assert_eq!(e.values, vec![0.7]);
    assert_eq!(e.vectors[(0, 0)].abs(), 1.0);

    let e = eigh_tridiagonal(&SymTridiag::new(vec![0.0, 0.0], vec![1.0]).unwrap()).unwrap();
    assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
    for j in 0..2 {
        assert!((e.vectors[(0, j)].abs() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    // three-point Chebyshev-T truncation: zeros of T_3
    let c = RecurrenceCoeffs::chebyshev_t();
    let z = zeros(&c, 3).unwrap();
    let mut want: Vec<f64> = (1..=3).map(|k| ((2 * k - 1) as f64 * PI / 6.0).cos()).collect();
    want.sort_by(f64::total_cmp);
    for (a, b) in z.iter().zip(&want) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn legendre_two_point_rule() {
    let g = gauss_quadrature(&RecurrenceCoeffs::legendre(), 2, 2.0).unwrap();
    let s = 1.0 / 3f64.sqrt();
    assert!((g.nodes[0] + s).abs() < 1e-15 && (g.nodes[1] - s).abs() < 1e-15);
    assert!((g.weights[0] - 1.0).abs() < 1e-15 && (g.weights[1] - 1.0).abs() < 1e-15);
    // exact for cubics against ∫_{-1}^{1} x^k dx
    for k in 0..4 {
        let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
        assert!((g.integrate(|x| x.powi(k)) - exact).abs() < 1e-15);
    }
}

#[test]
fn one_point_rule_is_b0_with_full_mass() {
    let c = RecurrenceCoeffs::laguerre(0.5).unwrap();
    let g = gauss_quadrature(&c, 1, 3.25).unwrap();
    assert_eq!(g.nodes, vec![c.b(0)]);
    assert_eq!(g.weights, vec![3.25]);
}

#[test]
fn chebyshev_t_three_point_rule() {
    let g = gauss_quadrature(&RecurrenceCoeffs::chebyshev_t(), 3, 1.0).unwrap();
    for w in &g.weights {
        assert!((w - 1.0 / 3.0).abs() < 1e-15);
    }
    // ∫ T_n dμ = δ_{n0} for the normalized arcsine measure, n < 6
    for n in 0..6 {
        let v = g.integrate(|x| (n as f64 * x.clamp(-1.0, 1.0).acos()).cos());
        let want = if n == 0 { 1.0 } else { 0.0 };
        assert!((v - want).abs() < 1e-14, "n = {n}: {v}");
    }
}

#[test]
fn block_rule_of_size_one_is_the_scalar_rule() {
    let c = RecurrenceCoeffs::jacobi(0.3, -0.4).unwrap();
    let s = gauss_quadrature(&c, 12, c.m0()).unwrap();
    let b = block_quadrature(&BlockRecurrence::from_scalar(&c, 12).unwrap(), 12).unwrap();
    assert_eq!(b.nodes, s.nodes);
    for (m, w) in b.masses.iter().zip(&s.weights) {
        assert_eq!(m[(0, 0)].re, *w);
    }
}

#[test]
fn diagonal_block_rule_splits_into_scalar_rules() {
    let c1 = RecurrenceCoeffs::legendre();
    let c2 = RecurrenceCoeffs::laguerre(0.5).unwrap();
    let b = BlockRecurrence::diagonal(&c1, &c2, 6).unwrap();
    let mm = block_quadrature(&b, 6).unwrap();
    for (c, slot) in [(&c1, 0usize), (&c2, 1usize)] {
        let g = gauss_quadrature(c, 6, c.m0()).unwrap();
        for (&x, &w) in g.nodes.iter().zip(&g.weights) {
            let k = mm
                .nodes
                .iter()
                .position(|&y| (y - x).abs() < 1e-10 * (1.0 + x.abs()))
                .expect("scalar node present in block rule");
            let m = &mm.masses[k];
            assert!((m[(slot, slot)].re - w).abs() < 1e-12 * (1.0 + w));
            assert!(m[(1 - slot, 1 - slot)].norm() < 1e-12 && m[(0, 1)].norm() < 1e-12);
        }
    }
}

#[test]
fn gegenbauer_half_spin_block_rule_orthonormality() {
    let g = gegenbauer(1, 1.0).unwrap();
    let rec = g.orthonormal_recurrence(8).unwrap();
    let mm = block_quadrature(&rec, 4).unwrap();
    for n in 0..4 {
        for m in 0..4 {
            let f = |x: f64| eval_block_pair(&rec, 3, c64(x)).unwrap().p[n].clone();
            let h = |x: f64| eval_block_pair(&rec, 3, c64(x)).unwrap().p[m].adjoint();
            let gram = mm.pair(f, h);
            let want = if n == m { CMat::identity(2, 2) } else { CMat::zeros(2, 2) };
            assert!((gram - want).norm() < 1e-12, "({n},{m})");
        }
    }
}

// ---------- opcore ----------

#[test]
fn degree_zero_values() {
    let c = RecurrenceCoeffs::hermite();
    let p = eval_pair(&c, 0, Complex64::new(0.3, 1.2)).unwrap();
    assert_eq!(p.p[0], c64(1.0));
    assert_eq!(p.r[0], c64(0.0));
}

#[test]
fn monic_qinv_hermite_second_degree() {
    let (q, xi) = (0.4, 0.9);
    let c = RecurrenceCoeffs::qinv_hermite(q).unwrap();
    let p = eval_pair(&c, 2, c64(xi)).unwrap();
    let monic = p.p[2].re * c.leading_coeff(2).unwrap().recip();
    let want = xi * xi - (1.0 - q) / q;
    assert!((monic - want).abs() < 1e-14);
    let direct = spectraljacobi::qkernel::monic_qinv_hermite(q, 2, xi)[2];
    assert!((direct - want).abs() < 1e-14);
}

#[test]
fn legendre_value_at_one() {
    let c = RecurrenceCoeffs::legendre();
    let (p, _, _) = eval_derivs(&c, 20, 1.0).unwrap();
    for (n, v) in p.iter().enumerate() {
        assert!((v - (2.0 * n as f64 + 1.0).sqrt()).abs() < 1e-13, "n = {n}");
    }
}

#[test]
fn zeros_of_low_degrees() {
    let c = RecurrenceCoeffs::laguerre(1.5).unwrap();
    assert_eq!(zeros(&c, 1).unwrap(), vec![c.b(0)]);
    let z = zeros(&RecurrenceCoeffs::legendre(), 2).unwrap();
    let s = 1.0 / 3f64.sqrt();
    assert!((z[0] + s).abs() < 1e-15 && (z[1] - s).abs() < 1e-15);
}

#[test]
fn markov_degree_one_and_conjugate_symmetry() {
    let c = RecurrenceCoeffs::jacobi(0.5, 1.5).unwrap();
    let z = Complex64::new(0.4, 0.8);
    let m1 = markov_stieltjes(&c, z, 1).unwrap();
    assert!((m1 - 1.0 / (c.b(0) - z)).norm() < 1e-15);
    for n in [3, 10, 40] {
        let a = markov_stieltjes(&c, z, n).unwrap();
        let b = markov_stieltjes(&c, z.conj(), n).unwrap();
        assert!((a.conj() - b).norm() < 1e-14 * a.norm());
    }
}

#[test]
fn christoffel_darboux_examples() {
    let c = RecurrenceCoeffs::legendre();
    assert!((cd_kernel(&c, 1, 0.3, -0.2).unwrap() - 1.0).abs() < 1e-15);
    let (x, y) = (0.3, -0.7);
    // direct Legendre values √(2k+1) P_k via Bonnet's recurrence
    let legendre = |t: f64| {
        let mut v = vec![1.0, t];
        for k in 1..5 {
            let kf = k as f64;
            v.push(((2.0 * kf + 1.0) * t * v[k] - kf * v[k - 1]) / (kf + 1.0));
        }
        v
    };
    let (lx, ly) = (legendre(x), legendre(y));
    let direct: f64 = (0..5).map(|k| (2.0 * k as f64 + 1.0) * lx[k] * ly[k]).sum();
    assert!((cd_kernel(&c, 5, x, y).unwrap() - direct).abs() < 1e-13);
    assert!((cd_kernel_sum(&c, 5, x, y).unwrap() - direct).abs() < 1e-13);
    // confluent form against a divided difference
    let h = 1e-6;
    let fd = (cd_kernel(&c, 5, x + h, x).unwrap() + cd_kernel(&c, 5, x - h, x).unwrap()) / 2.0;
    assert!((cd_kernel(&c, 5, x, x).unwrap() - fd).abs() < 1e-5);
}

#[test]
fn lognormal_moment_examples() {
    let v = lognormal_moment(0, 1.0, 0.0).unwrap();
    assert!((v - PI.sqrt() * 0.25f64.exp()).abs() < 1e-12);
    assert!((v - 2.27588).abs() < 1e-5);
    for n in 0..4 {
        let a = lognormal_moment(n, 0.8, 1.0).unwrap();
        let b = lognormal_moment(n, 0.8, -1.0).unwrap();
        let base = lognormal_moment(n, 0.8, 0.0).unwrap();
        assert!((a - b).abs() < 1e-10 * base && (a - base).abs() < 1e-10 * base);
    }
}

// ---------- qkernel ----------

fn qp() -> QParams {
    QParams::new(0.5, 0.8).unwrap()
}

#[test]
fn q_pochhammer_examples() {
    assert_eq!(qpoch(c64(0.7), 0.5, 0), c64(1.0));
    let direct: f64 = (1..400).map(|k| 1.0 - 0.5f64.powi(k)).product();
    let v = qpoch_inf_real(0.5, 0.5).unwrap();
    assert!((v - direct).abs() < 1e-15);
    assert!((v - 0.2887880951).abs() < 1e-10);
    assert_eq!(qpoch_inf_real(1.0, 0.5).unwrap(), 0.0);
}

#[test]
fn first_coefficient_at_quarter() {
    let p = QParams::new(0.25, 1.0).unwrap();
    let (a0, _) = asc_coeffs(&p, 0);
    // a_0 = √q/(1+q) · 1/√(2(1+q²)) at α = 1
    let closed = 0.5 / 1.25 / (2.0 * 1.0625f64).sqrt();
    assert!((a0 - closed).abs() < 1e-15);
    assert!((a0 - 0.2743977).abs() < 1e-7);
}

#[test]
fn coefficient_asymptotics_and_reflection() {
    let p = qp();
    let (q, a2) = (0.5f64, 0.64);
    for l in [12i64, 20, 28] {
        let (a, b) = asc_coeffs(&p, l);
        let lf = l as f64;
        assert!((a / (a2 * q.powf(2.0 * lf + 0.5)) - 1.0).abs() < 1e-6);
        assert!((b / (a2 * (1.0 + q) * q.powf(2.0 * lf - 1.0)) - 1.0).abs() < 1e-6);
    }
    let r = QParams::unchecked(0.5, 1.0 / 0.8).unwrap();
    for l in -15..=15 {
        assert!((asc_coeffs(&r, l).0 / asc_coeffs(&p, -l - 1).0 - 1.0).abs() < 1e-12);
        assert!((asc_coeffs(&r, l).1 / asc_coeffs(&p, -l).1 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn phi_solves_the_relation_and_decays() {
    let p = qp();
    let c = BiInfiniteCoeffs::qhermite(p);
    let z = Complex64::new(0.3, 0.4);
    let s = phi_plus_seq(&p, z, -11, 11).unwrap();
    assert!(s.residual(&c).unwrap() < 1e-9);
    let t = phi_plus_seq(&p, z, 5, 21).unwrap();
    for l in 5..20 {
        let r = t.get(l + 1).unwrap().norm_sqr() / t.get(l).unwrap().norm_sqr();
        assert!(r < p.q(), "l = {l}: {r}");
    }
}

#[test]
fn casorati_examples() {
    let p = qp();
    let c = BiInfiniteCoeffs::qhermite(p);
    let z = Complex64::new(0.0, 2.0);
    let f = phi_plus_seq(&p, z, -6, 6).unwrap();
    let g = phi_minus_seq(&p, z, -6, 6).unwrap();
    assert_eq!(casorati(&f, &f, &c, 2).unwrap(), c64(0.0));
    // closed form −z (1/z; q)_∞ by direct product
    let direct: Complex64 = -z * (0..200).map(|k| 1.0 - z.inv() * 0.5f64.powi(k)).product::<Complex64>();
    assert!((wronskian_closed(&p, z).unwrap() - direct).norm() < 1e-13 * direct.norm());
    for l in -5..=5 {
        assert!((casorati(&f, &g, &c, l).unwrap() - direct).norm() < 1e-8, "l = {l}");
    }
    for n in 0..=6 {
        assert!(wronskian_closed(&p, c64(0.5f64.powi(n))).unwrap().norm() < 1e-12, "n = {n}");
    }
}

#[test]
fn discrete_spectrum_norms() {
    let p = qp();
    let spec = discrete_spectrum(&p, 6, 80).unwrap();
    assert_eq!(spec.len(), 7);
    for e in &spec {
        assert_eq!(e.eigenvalue, 0.5f64.powi(e.n as i32));
        assert!(e.norm_check_error < 1e-8, "n = {}", e.n);
    }
    let n3 = eigvec_norm_sq(&p, 3).unwrap();
    assert!((spec[3].norm_sq - n3).abs() < 1e-8 * n3);
}

/// `₀φ₁(−; b; q, w)` summed exactly over rationals; at real `z` the double
/// precision series cancels by up to 55 digits on the far side of the window.
fn phi01_exact(b: &BigRational, q: &BigRational, w: &BigRational, terms: usize) -> f64 {
    let one = BigRational::one();
    let mut sum = BigRational::zero();
    let mut term = one.clone();
    let mut qk = one.clone();
    for _ in 0..terms {
        sum += &term;
        let q2k = &qk * &qk;
        let den = (&one - &qk * q) * (&one - b * &qk);
        term = term * w * q2k / den;
        qk *= q;
    }
    sum.to_f64().unwrap()
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rpow(x: &BigRational, k: i64) -> BigRational {
    if k >= 0 {
        Pow::pow(x.clone(), k as u32)
    } else {
        Pow::pow(x.recip(), (-k) as u32)
    }
}

/// `C_l = α^{2l} q^{l²−l/2} √(1+α²q^{2l}) / (−α²q;q)_{2l}` by direct products.
fn c_l(q: f64, a2: f64, l: i64) -> f64 {
    let lf = l as f64;
    let poch = if l >= 0 {
        (0..2 * l).map(|k| 1.0 + a2 * q.powi(k as i32 + 1)).product::<f64>()
    } else {
        1.0 / (0..-2 * l).map(|k| 1.0 + a2 * q.powi((2 * l + 1 + k) as i32)).product::<f64>()
    };
    a2.powf(lf) * q.powf(lf * lf - lf / 2.0) * (1.0 + a2 * q.powf(2.0 * lf)).sqrt() / poch
}

#[test]
fn eigenvector_proportionality_across_the_window() {
    let p = qp();
    let (q, a2) = (rat(1, 2), rat(16, 25));
    for n in 0..=6usize {
        let z = rpow(&q, n as i64);
        let zf = 0.5f64.powi(n as i32);
        let k = proportionality(&p, n).unwrap();
        let v = eigenvector(&p, n, 10).unwrap();
        for l in -10..=10i64 {
            let bp = -&a2 * rpow(&q, 2 * l + 1);
            let sp = phi01_exact(&bp, &q, &(&bp / &z), 45);
            let phi = c_l(0.5, 0.64, l) * zf.powi(-l as i32) * sp;
            let bm = -rpow(&q, 1 - 2 * l) / &a2;
            let sm = phi01_exact(&bm, &q, &(&bm / &z), 45);
            let big_phi = zf.powi(l as i32) / c_l(0.5, 0.64, l) * sm;
            let rel = (big_phi - k * phi).abs() / big_phi.abs().max((k * phi).abs());
            assert!(rel < 1e-8, "n = {n}, l = {l}: {rel:e}");
            let got = v.get(l).unwrap();
            assert!(got.im == 0.0 && (got.re - phi).abs() < 1e-10 * phi.abs().max(1e-300), "n = {n}, l = {l}");
        }
    }
}

#[test]
fn zero_is_not_an_eigenvalue() {
    let p = qp();
    let a = zero_solution_min_norm(&p, 20).unwrap();
    let b = zero_solution_min_norm(&p, 60).unwrap();
    assert!(a > 1.0 && b > 1e6 * a);
}

#[test]
fn nextremal_measure_examples() {
    let p = qp();
    let m = nextremal_measure(&p, 40).unwrap();
    let (q, a2) = (0.5f64, 0.64f64);
    let prod = |x: f64| (0..300).map(|k| 1.0 + x * q.powi(k)).product::<f64>();
    let qq: f64 = (1..300).map(|k| 1.0 - q.powi(k)).product();
    let want = prod(a2) * prod(q / a2) * qq;
    assert!((m.total_mass - want).abs() < 1e-10 * want);
    let g = nextremal_gram(&p, 40, 6).unwrap();
    assert!(g[(2, 5)].abs() < 1e-9 * (g[(2, 2)] * g[(5, 5)]).sqrt());
    let r = QParams::unchecked(0.5, 0.4).unwrap();
    for l in -10..10 {
        let want = nextremal_node(&p, l + 1);
        assert!((nextremal_node(&r, l) - want).abs() < 1e-12 * want.abs().max(1.0));
    }
}

#[test]
fn truncation_defect_examples() {
    let p = qp();
    let mut prev = f64::INFINITY;
    for n in 5..30 {
        let d = truncation_defect(&p, n).unwrap();
        let next = truncation_defect(&p, n + 1).unwrap();
        assert!(next <= d && d <= prev);
        prev = d;
        let ni = n as i64;
        let bound = (ni + 1..=ni + 60)
            .flat_map(|l| [l, -l])
            .map(|l| asc_coeffs(&p, l).0 + asc_coeffs(&p, l).1.abs() + asc_coeffs(&p, l - 1).0)
            .fold(0.0, f64::max);
        assert!(d <= 3.0 * bound);
    }
}

// ---------- mvop ----------

#[test]
fn block_initial_values_and_first_lo_identity() {
    let g = gegenbauer(2, 1.5).unwrap().orthonormal_recurrence(5).unwrap();
    let z = Complex64::new(0.2, 0.3);
    let pair = eval_block_pair(&g, 2, z).unwrap();
    // P_0 M_0 P_0* = I
    let p0 = &pair.p[0];
    assert!((p0 * g.m0() * p0.adjoint() - CMat::identity(3, 3)).norm() < 1e-13);
    assert_eq!(pair.q[0].norm(), 0.0);
    let d = liouville_ostrogradsky_defect(&g, 1, z).unwrap();
    assert!(d.defect1 < 1e-14 && d.defect2 < 1e-14);
}

#[test]
fn scalar_block_recurrence_matches_scalar_pair() {
    let c = RecurrenceCoeffs::laguerre(0.7).unwrap();
    let b = BlockRecurrence::from_scalar(&c, 20).unwrap();
    let z = Complex64::new(1.1, -0.4);
    let m = eval_block_pair(&b, 15, z).unwrap();
    let s = eval_pair(&c, 15, z).unwrap();
    let scale = c.m0().sqrt();
    for k in 0..=15 {
        assert!((m.p[k][(0, 0)] * scale - s.p[k]).norm() < 1e-12 * s.p[k].norm().max(1.0));
        assert!((m.q[k][(0, 0)] / scale - s.r[k]).norm() < 1e-12 * s.r[k].norm().max(1.0));
    }
}

#[test]
fn gegenbauer_second_polynomial_two_ways() {
    let g = gegenbauer(2, 1.5).unwrap();
    let rec = g.orthonormal_recurrence(4).unwrap();
    for &x in &[-0.6, 0.1, 0.85] {
        let on = eval_block_pair(&rec, 2, c64(x)).unwrap().p[2].clone();
        let h = g.h(2).map(|v| if v == 0.0 { 0.0 } else { v.powf(-0.5) });
        let oracle = (h * &g.monic_eval(2, x)[2]).map(c64);
        assert!((on - &oracle).norm() < 1e-11 * oracle.norm());
    }
}

#[test]
fn gegenbauer_lo_identities() {
    let rec = gegenbauer(1, 1.0).unwrap().orthonormal_recurrence(8).unwrap();
    let z = Complex64::new(1.0, 1.0);
    for k in 1..=5 {
        let (d1, d2) = liouville_ostrogradsky_defect(&rec, k, z).unwrap().relative();
        assert!(d1 < 1e-12 && d2 < 1e-12, "k = {k}");
    }
}

#[test]
fn gegenbauer_weight_is_positive_definite() {
    for nu in [0.5, 1.0, 2.0] {
        let g = gegenbauer(2, nu).unwrap();
        for j in 0..50 {
            let x = ((2 * j + 1) as f64 * PI / 100.0).cos();
            let (ev, _) = herm_eigh(&g.weight(x).map(c64));
            assert!(ev[0] > 0.0, "nu = {nu}, x = {x}");
        }
    }
}

#[test]
fn gegenbauer_spin_zero_is_scalar() {
    let nu = 0.8;
    let g = gegenbauer(0, nu).unwrap();
    let c1 = 1.0 / (2.0 * (1.0 + nu));
    assert!((g.c_monic(1)[(0, 0)] - c1).abs() < 1e-15);
    for &x in &[-0.9, 0.0, 0.5] {
        let w = g.weight(x)[(0, 0)];
        assert!((w - g.t_coeff(0) * (1.0 - x * x).powf(nu - 0.5)).abs() < 1e-15);
    }
}

#[test]
fn weight_support_examples() {
    let pd = CMat::from_row_slice(2, 2, &[c64(2.0), c64(0.5), c64(0.5), c64(1.0)]);
    let s = weight_support(&pd).unwrap();
    assert_eq!(s.rank, 2);
    assert!((s.projector - CMat::identity(2, 2)).norm() < 1e-12);
    let s = weight_support(&gram_weight(Complex64::new(0.4, 1.0), c64(-0.7))).unwrap();
    assert_eq!(s.rank, 1);
    assert!((&s.projector * &s.projector - &s.projector).norm() < 1e-10);
    assert!((&s.projector - s.projector.adjoint()).norm() < 1e-10);
    assert_eq!(weight_support(&CMat::zeros(3, 3)).unwrap().rank, 0);
}

#[test]
fn commutant_examples() {
    let g = gauss_quadrature(&RecurrenceCoeffs::legendre(), 6, 2.0).unwrap();
    let scalar = MatrixMeasure::new(
        g.nodes.clone(),
        g.weights.iter().map(|&w| CMat::from_element(1, 1, c64(w))).collect(),
    )
    .unwrap();
    let cm = commutant(&scalar, 6).unwrap();
    assert_eq!((cm.dim_a(), cm.dim_acal()), (1, 1));
    assert!(!cm.reducible());

    // diag(w, x²w) splits: the commutant is the diagonal algebra
    let split = MatrixMeasure::new(
        g.nodes.clone(),
        g.nodes
            .iter()
            .zip(&g.weights)
            .map(|(&x, &w)| CMat::from_diagonal(&DVector::from_vec(vec![c64(w), c64(x * x * w + 0.1 * w)])))
            .collect(),
    )
    .unwrap();
    let cm = commutant(&split, 6).unwrap();
    assert_eq!(cm.dim_a(), 2);
    assert!(cm.reducible());
}

#[test]
fn matrix_markov_examples() {
    // N = 1 reduces to the scalar approximant times the mass
    let c = RecurrenceCoeffs::jacobi(0.5, 0.5).unwrap();
    let b = BlockRecurrence::from_scalar(&c, 30).unwrap();
    let z = Complex64::new(0.2, 0.5);
    let s = mv_markov(&b, z, 20).unwrap()[(0, 0)];
    let t = markov_stieltjes(&c, z, 20).unwrap() * c.m0();
    assert!((s - t).norm() < 1e-12 * t.norm());

    // Gegenbauer ℓ = ½ against quadrature of the weight
    let g = gegenbauer(1, 1.0).unwrap();
    let rec = g.orthonormal_recurrence(160).unwrap();
    let z = Complex64::new(0.0, 2.0);
    let approx = mv_markov(&rec, z, 150).unwrap();
    let mm = g.weight_measure(400).unwrap();
    let mut quad = CMat::zeros(2, 2);
    for (&x, w) in mm.nodes.iter().zip(&mm.masses) {
        quad += w / (c64(x) - z);
    }
    assert!((&approx - &quad).norm() < 1e-7, "{:e}", (&approx - &quad).norm());
    assert!(spectral_norm(&approx) <= spectral_norm(rec.m0()) / z.im * (1.0 + 1e-12));
}

#[test]
fn carleman_examples() {
    let one = CMat::identity(2, 2);
    let bounded = BlockRecurrence::new(vec![one.clone(); 50], vec![CMat::zeros(2, 2); 50], one.clone()).unwrap();
    assert!(carleman_hint(&bounded, 50).unwrap().diverging);
    let geo: Vec<CMat> = (0..50).map(|n| &one * c64(2f64.powi(n))).collect();
    let fast = BlockRecurrence::new(geo, vec![CMat::zeros(2, 2); 50], one).unwrap();
    let h = carleman_hint(&fast, 50).unwrap();
    assert!(!h.diverging);
    assert!((h.partial_sums[49] - 2.0).abs() < 1e-12);
    let gg = gegenbauer(1, 1.5).unwrap().orthonormal_recurrence(60).unwrap();
    assert!(carleman_hint(&gg, 60).unwrap().diverging);
}

#[test]
fn monic_system_from_weight_round_trip() {
    let g = gegenbauer(1, 1.5).unwrap();
    let mm = g.weight_measure(200).unwrap();
    let sys = monic_from_weight(&mm, 5).unwrap();
    assert!((sys.polys[0].eval(0.3) - CMat::identity(2, 2)).norm() == 0.0);
    assert!((&sys.gram[0] - mm.total_mass()).norm() < 1e-14);
    for n in 0..4 {
        assert!((&sys.b[n] - g.b_monic(n).map(c64)).norm() < 1e-8, "B_{n}");
    }
    for n in 1..4 {
        assert!((&sys.c[n] - g.c_monic(n).map(c64)).norm() < 1e-8, "C_{n}");
    }
    let (bm, cm) = monic_coefficients(&g.orthonormal_recurrence(6).unwrap(), 5).unwrap();
    for n in 1..4 {
        assert!((&bm[n] - &sys.b[n]).norm() < 1e-8 && (&cm[n] - &sys.c[n]).norm() < 1e-8);
    }
}

#[test]
fn monic_system_from_degenerate_weight() {
    // folded five-term spectral measure has rank-one continuous part
    let f = FiveTermModel::new(0.3, 0.7, 1.0).unwrap();
    let rec = f.fold(40).unwrap();
    let mm = block_quadrature(&rec, 40).unwrap();
    let sys = monic_from_weight(&mm, 4).unwrap();
    for h in &sys.gram {
        let (ev, _) = herm_eigh(h);
        assert!(ev[0] > 0.0);
    }
}

#[test]
fn block_zeros_are_zeros_of_the_determinant() {
    let rec = gegenbauer(2, 1.5).unwrap().orthonormal_recurrence(6).unwrap();
    let z = block_zeros(&rec, 4).unwrap();
    assert_eq!(z.len(), 12);
    for &x in &z {
        let sv = eval_block_pair(&rec, 4, c64(x)).unwrap().p[4].singular_values();
        let (lo, hi) = (sv.min(), sv.max());
        assert!(lo < 1e-12 * hi, "x = {x}");
    }
}

// ---------- jmatrix ----------

#[test]
fn morse_tridiagonal_rows_decouple() {
    let m = MorseModel::new(2.2).unwrap();
    assert_eq!(m.tridiag(2).0, 0.0);
    assert_eq!(m.tridiag(1).2, 0.0);
    let a = MorseModel::new(3.7).unwrap().assembled(20);
    assert_eq!(a, a.transpose());
}

#[test]
fn morse_bound_state_examples() {
    let m = MorseModel::new(2.2).unwrap();
    let e = m.bound_states();
    assert!((e[0] + 2.89).abs() < 1e-12 && (e[1] + 0.49).abs() < 1e-12);
    assert!(MorseModel::new(0.4).unwrap().bound_states().is_empty());
    let m = MorseModel::new(3.7).unwrap();
    let f = m.bound_states();
    let want: Vec<f64> = (0..4).map(|k| -(3.7 - k as f64 - 0.5f64).powi(2)).collect();
    assert_eq!(f.len(), 4);
    let eig = m.bound_states_eigensolve().unwrap();
    for ((a, b), c) in f.iter().zip(&want).zip(&eig) {
        assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-10);
    }
}

#[test]
fn laguerre_low_degrees() {
    assert_eq!(laguerre(0, 1.3, 4.0).unwrap(), 1.0);
    assert!((laguerre(1, 0.5, 2.0).unwrap() + 0.5).abs() < 1e-15);
}

#[test]
fn morse_expansion_examples() {
    let m = MorseModel::new(2.2).unwrap();
    for z in [0.5, 1.0, 3.0] {
        let (r, s) = m.expansion_defect(1, z).unwrap();
        assert!(r < 1e-10 * s, "z = {z}");
    }
    let (r, s) = MorseModel::new(3.7).unwrap().expansion_defect(0, 2.0).unwrap();
    assert!(r < 1e-9 * s);
    let one = MorseModel::new(1.2).unwrap();
    assert_eq!(one.expansion_constant(0).unwrap(), 1.0);
}

#[test]
fn cdh_weight_and_gram() {
    let m = MorseModel::new(2.2).unwrap();
    for k in 1..=40 {
        assert!(m.cdh_weight(k as f64 * 0.25).unwrap() > 0.0);
    }
    let g = m.cdh_gram(3, 1e-10).unwrap();
    assert!((g[(0, 0)] - 1.0).abs() < 1e-6);
    assert!(g[(1, 2)].abs() < 1e-6);
}

#[test]
fn jacobi_t_examples() {
    let t = JacobiTModel::real(0.5, 0.5, -1.5).unwrap();
    assert_eq!(t.coeffs(0).0, 0.0);

    let t = JacobiTModel::real(0.3, 0.8, 0.25).unwrap();
    let slope = (t.coeffs(4000).0 / t.coeffs(2000).0).ln() / 2f64.ln();
    assert!((slope - 2.0).abs() < 0.05);

    let p = JacobiTModel::real(0.5, 0.5, 0.0).unwrap().projection(8).unwrap();
    let t = JacobiTModel::real(0.5, 0.5, 0.0).unwrap();
    for i in 0..=8usize {
        for j in 0..=8usize {
            if i.abs_diff(j) >= 2 {
                assert!(p[(i, j)].abs() < 1e-9, "({i},{j}) = {}", p[(i, j)]);
            }
        }
    }
    assert!((p[(4, 4)] - t.coeffs(4).1).abs() < 1e-9 * t.coeffs(4).1.abs().max(1.0));
    assert!((p[(4, 5)] - t.coeffs(4).0).abs() < 1e-9 * t.coeffs(4).0);
    assert!((p[(5, 4)] - t.coeffs(4).0).abs() < 1e-9 * t.coeffs(4).0);
}

#[test]
fn jacobi_t_spectrum_examples() {
    let c = JacobiTModel::new(0.2, 0.8, Complex64::new(0.3, 1.1)).unwrap();
    assert!(c.spectrum().discrete.is_empty());
    let s = JacobiTModel::real(0.0, 0.0, -3.0).unwrap().spectrum();
    let mut got = s.discrete.clone();
    got.sort_by(f64::total_cmp);
    let mut want: Vec<f64> = (0..3).map(|k| s.continuous_upper + 2.0 * (-2.5 + k as f64).powi(2)).collect();
    want.sort_by(f64::total_cmp);
    assert_eq!(got, want);
}

#[test]
fn five_term_examples() {
    let f = FiveTermModel::new(0.4, 0.4, 1.0).unwrap();
    for n in 0..12 {
        assert_eq!(f.connection(n).1, 0.0);
    }
    let f = FiveTermModel::new(0.3, 0.7, 0.5).unwrap();
    for x in [-0.7, 0.1, 0.9] {
        let d = f.connection_defects(10, x).unwrap();
        assert!(d.iter().all(|&v| v < 1e-10), "x = {x}: {d:?}");
    }
    assert!(cli::five_term_projection_defect(&f, 10).unwrap() < 1e-8);
}

#[test]
fn folding_examples() {
    let a = vec![1.0; 12];
    let b = vec![c64(0.0); 12];
    let c = vec![0.0; 12];
    let r = fold_to_block(&a, &b, &c, 5).unwrap();
    for n in 0..5 {
        let an = r.a(n);
        assert_eq!(an[(0, 1)], c64(0.0));
        assert_eq!((an[(0, 0)], an[(1, 1)]), (c64(1.0), c64(1.0)));
        assert_eq!(r.b(n).norm(), 0.0);
    }

    let f = FiveTermModel::new(0.3, 0.7, 1.0).unwrap();
    assert!(cli::fold_equivalence_defect(&f, c64(-7.0), 15).unwrap() < 1e-9);

    let f = FiveTermModel::new(0.3, 0.7, -0.16).unwrap();
    let rec = f.fold(12).unwrap();
    for k in 1..=10 {
        let (d1, d2) = liouville_ostrogradsky_defect(&rec, k, Complex64::new(0.4, 1.0)).unwrap().relative();
        assert!(d1 < 1e-9 && d2 < 1e-9, "k = {k}");
    }
}

#[test]
fn gram_weight_is_singular_and_nonnegative() {
    let w = gram_weight(Complex64::new(0.3, -1.0), c64(2.0));
    assert!(w.determinant().norm() < 1e-14);
    let (ev, _) = herm_eigh(&w);
    assert!(ev[0] > -1e-14 && ev[1] > 0.0);
}
