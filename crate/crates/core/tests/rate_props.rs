use proptest::prelude::*;

use strahler::phi::{dphi_iter, phi_iter};
use strahler::rate::RESIDUAL_TOLERANCE;
use strahler::{rate, rate_closed_form_r1, rate_curve, xi_star, Error, GridSpec};

fn top(r: usize) -> f64 {
    0.5f64.powi(r as i32)
}

/// A point strictly inside `(0, 2^{−r})`, drawn on a log scale towards
/// either end so the tails get exercised as much as the middle.
fn interior(r: usize, u: f64, side: bool) -> f64 {
    let t = top(r);
    let gap = t * 10f64.powf(-10.0 * u) * 0.5;
    if side {
        gap
    } else {
        t - gap
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn solver_hits_the_derivative(r in 1usize..=6, u in 0.0f64..1.0, side: bool) {
        let y = interior(r, u, side);
        let s = xi_star(r, y).unwrap();
        prop_assert!(s.residual <= RESIDUAL_TOLERANCE * top(r));
        prop_assert!((dphi_iter(r, s.xi) - y).abs() <= RESIDUAL_TOLERANCE * top(r));
    }

    #[test]
    fn rate_is_nonnegative_and_fenchel_young(r in 1usize..=6, u in 0.0f64..1.0, side: bool, xi in -50.0f64..50.0) {
        let y = interior(r, u, side);
        let v = rate(r, y).unwrap();
        prop_assert!(v.rate >= 0.0);
        // ξ y ≤ I(y) + φ^r(ξ) for every ξ, with equality at ξ*
        let slack = v.rate + phi_iter(r, xi) - xi * y;
        prop_assert!(slack >= -1e-10 * (1.0 + (xi * y).abs()));
        let at_star = v.rate + phi_iter(r, v.xi_star) - v.xi_star * y;
        prop_assert!(at_star.abs() <= 1e-10 * (1.0 + (v.xi_star * y).abs()));
    }

    #[test]
    fn xi_star_is_increasing(r in 1usize..=5, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let t = top(r);
        let (y0, y1) = (t * (0.001 + 0.998 * a.min(b)), t * (0.001 + 0.998 * a.max(b)));
        prop_assume!(y1 - y0 > 1e-9 * t);
        prop_assert!(xi_star(r, y0).unwrap().xi < xi_star(r, y1).unwrap().xi);
    }

    #[test]
    fn rate_is_convex(r in 1usize..=5, a in 0.01f64..0.99, h in 0.001f64..0.01) {
        let t = top(r);
        let y = a * t;
        let d = h * t;
        prop_assume!(y - d > 0.0 && y + d < t);
        let f = |y: f64| rate(r, y).unwrap().rate;
        prop_assert!(2.0 * f(y) <= f(y - d) + f(y + d) + 1e-12);
    }

    #[test]
    fn r1_matches_logit(y in 1e-6f64..0.499_999) {
        let s = xi_star(1, y).unwrap();
        let x = 4.0 * y - 1.0;
        prop_assert!((s.xi - 4.0 * x.atanh()).abs() <= 1e-9 * (1.0 + s.xi.abs()));
        let closed = rate_closed_form_r1(y).unwrap();
        prop_assert!((rate(1, y).unwrap().rate - closed).abs() <= 1e-10 * (1.0 + closed));
    }
}

#[test]
fn minimum_sits_at_the_mean() {
    for r in 1..=6 {
        let mu = 0.25f64.powi(r as i32);
        let at_mu = rate(r, mu).unwrap();
        assert!(at_mu.rate < 1e-20, "r = {r}: I(mu) = {}", at_mu.rate);
        assert!(at_mu.xi_star.abs() < 1e-9);
        for f in [0.5, 0.9, 1.1, 1.5] {
            assert!(rate(r, mu * f).unwrap().rate > 0.0);
        }
    }
}

#[test]
fn curve_is_minimised_at_the_mean() {
    let rows = rate_curve(2, GridSpec { points: 201 }).unwrap();
    let best = rows
        .iter()
        .min_by(|a, b| a.result.rate.total_cmp(&b.result.rate))
        .unwrap();
    assert_eq!(best.result.y, 0.0625);
    assert_eq!(rows.first().unwrap().result.y, 0.0);
    assert_eq!(rows.last().unwrap().result.y, 0.25);
    assert!(rows.iter().all(|row| row.result.rate.is_finite()));
}

#[test]
fn endpoints_are_finite() {
    assert!((rate(1, 0.0).unwrap().rate - std::f64::consts::LN_2).abs() < 1e-15);
    assert!((rate(1, 0.5).unwrap().rate - std::f64::consts::LN_2).abs() < 1e-15);
    assert!((rate(2, 0.25).unwrap().rate - 1.5 * std::f64::consts::LN_2).abs() < 1e-15);
    assert_eq!(rate(3, 0.0).unwrap().xi_star, f64::NEG_INFINITY);
    assert_eq!(rate(3, 0.125).unwrap().xi_star, f64::INFINITY);
}

#[test]
fn domain_errors() {
    assert!(matches!(rate(0, 0.1), Err(Error::Domain(_))));
    assert!(matches!(rate(2, 0.26), Err(Error::Domain(_))));
    assert!(matches!(rate(2, -1e-9), Err(Error::Domain(_))));
    assert!(rate(2, f64::NAN).is_err());
    assert!(xi_star(2, 0.0).is_err());
    assert!(xi_star(2, 0.25).is_err());
    assert!(rate_closed_form_r1(0.5).is_err());
    assert!(rate_curve(2, GridSpec { points: 1 }).is_err());
}

#[test]
fn solver_sweeps_both_ends() {
    for r in 1..=8 {
        for i in 0..=400 {
            let gap = top(r) * 10f64.powf(-0.025 * i as f64) * 0.5;
            for y in [gap, top(r) - gap] {
                let s = xi_star(r, y).unwrap_or_else(|e| panic!("r = {r}, y = {y}: {e}"));
                assert!(s.residual <= RESIDUAL_TOLERANCE * top(r));
            }
        }
    }
}
