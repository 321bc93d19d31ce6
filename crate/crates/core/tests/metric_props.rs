use std::f64::consts::{FRAC_2_PI, PI};

use hkseq::metric::{integral_direct, integral_pi, lambda_bracket, mu, phi_level, structural_checks, PhiLadder};

// c_j = 1 iff n divides j.
fn naive_pi(n: u32, r: u32, t: f64) -> f64 {
    (0..r)
        .map(|j| {
            let phase = 2f64.powi(j as i32) * PI * t;
            if j % n == 0 { phase.sin().abs() } else { phase.cos().abs() }
        })
        .product()
}

fn midpoint(n: u32, r: u32, cells: u32) -> f64 {
    let h = 1.0 / cells as f64;
    (0..cells).map(|i| naive_pi(n, r, (i as f64 + 0.5) * h)).sum::<f64>() * h
}

// Every kink of the integrand sits on a cell edge, so one Richardson step
// on the midpoint rule is fourth order.
fn naive_integral(n: u32, r: u32) -> f64 {
    (4.0 * midpoint(n, r, 1 << 21) - midpoint(n, r, 1 << 20)) / 3.0
}

#[test]
fn first_level_closed_form() {
    let grid = phi_level(1, 1, 4096).unwrap();
    let vals = grid.values();
    let worst = vals
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = i as f64 / 4096.0;
            (v - ((x * PI / 2.0).sin() + (x * PI / 2.0).cos()) / 2.0).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn mu_is_phi_one_at_half() {
    assert!((mu(1).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    for n in 1..=8u32 {
        let m = 1u32 << n;
        let direct: f64 = (0..m).map(|k| naive_pi(n, n, (0.5 + k as f64) / m as f64)).sum::<f64>() / m as f64;
        assert!((mu(n).unwrap() - direct).abs() < 1e-10, "n={n}");
        let grid = phi_level(n, 1, 4096).unwrap();
        assert!((grid.values()[2048] - direct).abs() < 1e-10, "n={n}");
    }
}

#[test]
fn grid_doubling_converges() {
    for n in 1..=3u32 {
        let e: Vec<(f64, f64)> = [4096u32, 8192, 16384]
            .iter()
            .map(|&g| {
                let b = lambda_bracket(n, 10, g).unwrap();
                (b.exponent_lower, b.exponent_upper)
            })
            .collect();
        let d1 = (e[0].0 - e[1].0).abs().max((e[0].1 - e[1].1).abs());
        let d2 = (e[1].0 - e[2].0).abs().max((e[1].1 - e[2].1).abs());
        assert!(d2 <= d1 + 1e-9, "n={n}: {d1} then {d2}");
        assert!(d2 < 1e-5, "n={n}: {d2}");
    }
}

#[test]
fn rescaling_leaves_ratios_unchanged() {
    let mut ladder = PhiLadder::new(2, 4096).unwrap();
    ladder.extend_to(6);
    for j in 0..5 {
        let q = ladder.ratio_grid(j);
        let lo = ladder.grid(j).values();
        let hi = ladder.grid(j + 1).values();
        for c in [1e-200, 3.5, 1e150] {
            for i in (0..lo.len()).step_by(97) {
                let scaled = (c * hi[i]) / (c * lo[i]);
                assert!((scaled - q[i]).abs() <= 1e-13 * q[i], "j={j} i={i}");
            }
        }
        // the node ratio also agrees with the off-grid evaluation at the nodes
        for i in (0..lo.len()).step_by(511) {
            let x = i as f64 / 4096.0;
            assert!((ladder.ratio_at(j, x) - q[i]).abs() < 1e-12 * q[i]);
        }
    }
}

#[test]
fn bracket_is_ordered_and_monotone() {
    for n in 1..=3 {
        let b = lambda_bracket(n, 12, 4096).unwrap();
        assert!(b.lower <= b.upper);
        assert!(b.exponent_lower <= b.exponent_upper);
        assert!(b.is_monotone(), "n={n}: {:?}", b.monotonicity_defect());
    }
}

#[test]
fn integrals_match_naive_quadrature() {
    let r = integral_pi(1, 1, 8, 16384).unwrap();
    assert!((r.direct.unwrap() - FRAC_2_PI).abs() < 1e-8);
    assert!((r.via_recurrence.unwrap() - FRAC_2_PI).abs() < 1e-8);
    for (n, l) in [(1, 3), (1, 6), (2, 2), (2, 5), (3, 1), (3, 4)] {
        let want = naive_integral(n, n * l);
        let direct = integral_direct(n, l, 8).unwrap();
        assert!((direct - want).abs() < 1e-8 * want, "n={n} L={l}: {direct} vs {want}");
        let rep = integral_pi(n, l, 8, 16384).unwrap();
        assert_eq!(rep.agree, Some(true), "n={n} L={l}: {rep:?}");
    }
}

#[test]
fn structural_checks_small() {
    for n in 1..=2 {
        let rep = structural_checks(n, 4096).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }
}
