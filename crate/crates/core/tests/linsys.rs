//! Properties of the linear-systems kernels.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use l1margin::linsys::{
    hbar_realization, impulse_response, is_hurwitz, l1_gain, lyapunov_solve, spectral_abscissa, RationalTF,
    StateSpace,
};

const TOL: f64 = 1e-7;

/// Stable second-order systems `(b₁s + b₀)/(s² + a₁s + a₀)`.
fn stable_second_order() -> impl Strategy<Value = StateSpace> {
    (0.2..5.0f64, 0.2..10.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_filter_map("zero numerator", |(a1, a0, b1, b0)| {
        if b1.abs() + b0.abs() < 1e-3 {
            return None;
        }
        RationalTF::new(vec![b0, b1], vec![a0, a1, 1.0]).ok()?.to_state_space().ok()
    })
}

/// Random Hurwitz matrices: a random matrix shifted left past its spectral
/// abscissa.
fn hurwitz(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (prop::collection::vec(-2.0..2.0f64, n * n), 0.1..2.0f64).prop_map(move |(v, margin)| {
        let m = DMatrix::from_row_slice(n, n, &v);
        let alpha = spectral_abscissa(&m).unwrap();
        m - DMatrix::identity(n, n) * (alpha + margin)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn lyapunov_residual_small(a in (2usize..5).prop_flat_map(hurwitz)) {
        let n = a.nrows();
        let q = DMatrix::identity(n, n);
        let p = lyapunov_solve(&a, &q).unwrap();
        let res = (a.transpose() * &p + &p * &a + &q).amax();
        prop_assert!(res <= 1e-10 * p.amax().max(1.0), "residual {res}");
        // P is symmetric positive definite.
        prop_assert!((&p - p.transpose()).amax() <= 1e-12 * p.amax());
        prop_assert!(p.clone().cholesky().is_some());
    }

    #[test]
    fn l1_gain_dominates_dc_gain(sys in stable_second_order()) {
        let g = l1_gain(&sys, 1e-8).unwrap();
        let dc = sys.dc_gain().unwrap();
        prop_assert!(g >= dc.abs() * (1.0 - TOL), "l1 {g} < |dc| {dc}");
    }

    #[test]
    fn l1_gain_dominates_frequency_response(sys in stable_second_order(), w in 0.01..100.0f64) {
        let g = l1_gain(&sys, 1e-8).unwrap();
        let mag = sys.freq_response(w).unwrap().norm();
        prop_assert!(g >= mag * (1.0 - TOL), "l1 {g} < |H(iw)| {mag}");
    }

    #[test]
    fn l1_gain_is_submultiplicative(f in stable_second_order(), g in stable_second_order()) {
        let series = f.series(&g);
        let lhs = l1_gain(&series, 1e-8).unwrap();
        let rhs = l1_gain(&f, 1e-8).unwrap() * l1_gain(&g, 1e-8).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + TOL), "{lhs} > {rhs}");
    }

    #[test]
    fn l1_gain_scales_linearly(sys in stable_second_order(), k in -5.0..5.0f64) {
        let scaled = sys.with_output(sys.c() * k, 0.0).unwrap();
        let a = l1_gain(&scaled, 1e-9).unwrap();
        let b = l1_gain(&sys, 1e-9).unwrap() * k.abs();
        prop_assert!((a - b).abs() <= 1e-6 * b.max(1e-12));
    }

    #[test]
    fn rational_and_state_space_agree(sys in stable_second_order(), w in 0.001..1000.0f64) {
        let tf = sys.to_rational();
        let back = tf.to_state_space().unwrap();
        let (p, q, r) = (sys.freq_response(w).unwrap(), tf.freq_response(w).unwrap(), back.freq_response(w).unwrap());
        prop_assert!((p - q).norm() <= 1e-9 * p.norm().max(1e-12));
        prop_assert!((p - r).norm() <= 1e-9 * p.norm().max(1e-12));
    }

    #[test]
    fn hbar_has_shifted_dynamics(t1 in -5.0..5.0f64, t2 in -5.0..5.0f64) {
        let a_m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -1.4]);
        let b = DVector::from_vec(vec![0.0, 1.0]);
        let theta = DVector::from_vec(vec![t1, t2]);
        let hb = hbar_realization(&a_m, &b, &theta).unwrap();
        let expect = &a_m + &b * theta.transpose();
        prop_assert!((hb.a() - &expect).amax() <= 1e-14);
        prop_assert_eq!(is_hurwitz(hb.a()), spectral_abscissa(&expect).unwrap() < -1e-12);
    }
}

#[test]
fn l1_gain_analytic_cases() {
    for a in [0.1, 1.0, 3.0, 50.0] {
        let g = l1_gain(&RationalTF::first_order(1.0, a).to_state_space().unwrap(), 1e-9).unwrap();
        assert!((g - 1.0 / a).abs() <= 1e-6 / a, "a = {a}: {g}");
    }
    // s/(s + 1)² = e^{-t}(1 - t): ∫|h| = 2/e.
    let sys = RationalTF::new(vec![0.0, 1.0], vec![1.0, 2.0, 1.0]).unwrap().to_state_space().unwrap();
    let g = l1_gain(&sys, 1e-10).unwrap();
    assert!((g - 2.0 / std::f64::consts::E).abs() <= 1e-6, "{g}");
}

#[test]
fn l1_gain_rejects_unstable() {
    let sys = RationalTF::first_order(1.0, -1.0).to_state_space().unwrap();
    assert!(l1_gain(&sys, 1e-6).is_err());
}

#[test]
fn impulse_response_of_first_order() {
    let sys = RationalTF::first_order(1.0, 1.0).to_state_space().unwrap();
    let h = impulse_response(&sys, 0.01, 5.0).unwrap();
    for (i, v) in h.iter().enumerate() {
        assert!((v - (-(i as f64) * 0.01).exp()).abs() <= 1e-9);
    }
}
