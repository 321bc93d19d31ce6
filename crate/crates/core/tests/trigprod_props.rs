use std::f64::consts::PI;

use hkseq::numtheory::UnitFraction;
use hkseq::sequences::PerturbSpec;
use hkseq::trigprod::{
    a_exponent, block_upper_bound, f_iterate, g_n, g_n_product, pi_product, pi_product_f64,
    sharpness_identity, xi_fixed_point, Gamma, TrigProductParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Straight product of |cos(2^j π α + γ_j π/2)| in doubles.
fn naive_product(alpha: f64, gamma: &[u8]) -> f64 {
    gamma
        .iter()
        .enumerate()
        .map(|(j, &g)| (2f64.powi(j as i32) * PI * alpha + g as f64 * PI / 2.0).cos().abs())
        .product()
}

proptest! {
    #[test]
    fn product_in_unit_interval(bits: u128, gamma in prop::collection::vec(0u8..2, 0..300)) {
        let p = TrigProductParams::new(gamma.len() as u32, Gamma::Explicit(gamma)).unwrap();
        let v = pi_product(&p, &UnitFraction::new(bits, 128).unwrap());
        prop_assert!((0.0..=1.0).contains(&v));
    }

    // α = k / 2^40 is exact in a double, and so are its doublings.
    #[test]
    fn matches_naive_and_is_periodic(k in 0u64..1 << 40, gamma in prop::collection::vec(0u8..2, 0..12)) {
        let alpha = k as f64 / 2f64.powi(40);
        let fixed = UnitFraction::new(k as u128, 40).unwrap();
        let p = TrigProductParams::new(gamma.len() as u32, Gamma::Explicit(gamma.clone())).unwrap();
        let v = pi_product(&p, &fixed);
        prop_assert!((v - naive_product(alpha, &gamma)).abs() < 1e-9);
        prop_assert!((v - naive_product(alpha + 1.0, &gamma)).abs() < 1e-9);
        prop_assert!((v - pi_product_f64(&p, alpha + 1.0)).abs() < 1e-12);
        prop_assert!((v - pi_product_f64(&p, alpha - 3.0)).abs() < 1e-12);
    }
}

#[test]
fn telescoping_identity_on_grid() {
    for n in 1..=8u32 {
        let mut worst: f64 = 0.0;
        for i in 0..10_000 {
            let x = i as f64 / 10_000.0;
            if f_iterate(1, x).unwrap() == 0.0 {
                continue;
            }
            let mut lhs = x;
            for nu in 1..n {
                let f = f_iterate(nu, x).unwrap();
                lhs *= (1.0 - f * f).sqrt();
            }
            let rhs = f_iterate(n, x).unwrap() / (2f64.powi(n as i32) * (1.0 - x * x).sqrt());
            worst = worst.max((lhs - rhs).abs());
            assert!((g_n(n, x).unwrap() - rhs).abs() < 1e-10, "n={n} x={x}");
            assert!((g_n_product(n, x).unwrap() - lhs).abs() < 1e-10, "n={n} x={x}");
        }
        assert!(worst < 1e-10, "n={n}: {worst}");
    }
}

#[test]
fn block_bound_dominates_random_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=8u32);
        let ell = rng.gen_range(0..n);
        let r = rng.gen_range(0..=200u32);
        let alpha = UnitFraction::new(rng.gen(), 128).unwrap();
        let p = TrigProductParams::periodic(r, PerturbSpec::shifted(n, ell).unwrap());
        let v = pi_product(&p, &alpha);
        let bound = block_upper_bound(n, ell, r).unwrap();
        assert!(v <= bound * (1.0 + 1e-12), "n={n} ell={ell} r={r}: {v} > {bound}");
    }
}

#[test]
fn exponent_shape() {
    assert!((a_exponent(1).unwrap() - 3f64.ln() / 4f64.ln()).abs() < 1e-12);
    let a: Vec<f64> = (1..=50).map(|n| a_exponent(n).unwrap()).collect();
    assert!(a.windows(2).all(|w| w[0] < w[1]));
    assert!(a[49] < 1.0);
}

#[test]
fn xi_is_fixed_point() {
    // |f_n'(ξ_n)| is about 2^n, so rounding ξ_n to a double alone moves f_n by
    // roughly 2^n ulp; past n = 14 that exceeds 1e-12 even with exact arithmetic.
    for n in 1..=20 {
        let xi = xi_fixed_point(n).unwrap();
        let tol = if n <= 14 { 1e-12 } else { 2f64.powi(n as i32 + 3) * f64::EPSILON };
        assert!((f_iterate(n, xi).unwrap() - xi).abs() < tol, "n={n}");
    }
}

#[test]
fn sharpness_small_table() {
    for n in 1..=6 {
        for l in 1..=20 {
            let rep = sharpness_identity(n, l).unwrap();
            assert!((rep.log_lhs - rep.log_rhs).abs() < 1e-9, "n={n} L={l}");
        }
    }
}
