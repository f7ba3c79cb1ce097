use std::f64::consts::PI;

use num_complex::Complex64;
use painleve_core::elliptic::asymptotics::{asymptotic_p, p23_sum_coefficient};
use painleve_core::{EllipticContext, EllipticContext32, EllipticContext64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ctx(tau: Complex64) -> EllipticContext64 {
    EllipticContext::new(tau).unwrap()
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// `1/u² + Σ' [1/(u−ω)² − 1/ω²]` over `|m|, |n| ≤ n`, over the square.
fn p_double_sum_raw(u: Complex64, tau: Complex64, n: i64) -> Complex64 {
    let mut acc = (u * u).inv();
    for m in -n..=n {
        for k in -n..=n {
            if m == 0 && k == 0 {
                continue;
            }
            let w = tau * k as f64 + m as f64;
            acc += ((u - w) * (u - w)).inv() - (w * w).inv();
        }
    }
    acc
}

/// The truncation error of the square sum is `a/n² + o(1/n²)`; one
/// Richardson step between `n` and `2n` removes the leading term.
fn p_double_sum(u: Complex64, tau: Complex64, n: i64) -> Complex64 {
    (p_double_sum_raw(u, tau, 2 * n) * 4.0 - p_double_sum_raw(u, tau, n)) / 3.0
}

#[test]
fn p_matches_double_lattice_sum() {
    let (u, tau) = (c(0.3, 0.2), c(0.0, 1.5));
    let oracle = p_double_sum(u, tau, 200);
    let got = ctx(tau).weierstrass_p(u).unwrap();
    assert!(rel(got, oracle) < 1e-8, "{got} vs {oracle}");
}

#[test]
fn p_trig_limit_at_im_tau_8() {
    let u = c(0.3, 0.0);
    let s = (u * PI).sin();
    let expect = (s * s).inv() * (PI * PI) - PI * PI / 3.0;
    assert!((ctx(c(0.0, 8.0)).weierstrass_p(u).unwrap() - expect).norm() < 1e-10);
}

#[test]
fn p_periodic_and_even() {
    let cx = ctx(c(0.0, 2.0));
    let u = c(0.23, 0.11);
    let p = cx.weierstrass_p(u).unwrap();
    assert!(rel(cx.weierstrass_p(u + 1.0).unwrap(), p) < 1e-12);
    assert!(rel(cx.weierstrass_p(-u).unwrap(), p) < 1e-12);
}

#[test]
fn periodicity_grid() {
    for tau in [c(0.0, 1.0), c(0.0, 1.5), c(0.3, 2.0)] {
        let cx = ctx(tau);
        for i in 0..10 {
            for j in 0..10 {
                let u = tau * (-0.41 + 0.09 * j as f64) + (-0.43 + 0.09 * i as f64);
                let p = cx.weierstrass_p(u).unwrap();
                let scale = p.norm().max(1.0);
                assert!((cx.weierstrass_p(u + 1.0).unwrap() - p).norm() / scale < 1e-11);
                assert!((cx.weierstrass_p(u + tau).unwrap() - p).norm() / scale < 1e-11);
            }
        }
    }
}

#[test]
fn p_prime_matches_central_difference() {
    let cx = ctx(c(0.1, 1.3));
    let h = 1e-6;
    for u in [c(0.2, 0.3), c(-0.31, 0.47), c(0.12, -0.2)] {
        let fd = (cx.weierstrass_p(u + h).unwrap() - cx.weierstrass_p(u - h).unwrap()) / (2.0 * h);
        assert!(rel(cx.weierstrass_p_prime(u).unwrap(), fd) < 1e-8);
    }
}

#[test]
fn p_prime_odd_and_zero_at_half_period() {
    let cx = ctx(c(0.0, 2.0));
    let u = c(0.2, 0.3);
    assert!((cx.weierstrass_p_prime(-u).unwrap() + cx.weierstrass_p_prime(u).unwrap()).norm() < 1e-10);
    assert!(cx.weierstrass_p_prime(c(0.5, 0.0)).unwrap().norm() < 1e-10);
}

#[test]
fn cubic_identity() {
    let cx = ctx(c(0.2, 1.1));
    let (e1, e2, e3) = cx.half_period_values();
    for k in 0..20 {
        let u = c(-0.4 + 0.037 * k as f64, 0.5 - 0.043 * k as f64);
        let p = cx.weierstrass_p(u).unwrap();
        let d = cx.weierstrass_p_prime(u).unwrap();
        assert!(rel(d * d, (p - e1) * (p - e2) * (p - e3) * 4.0) < 1e-9);
    }
}

#[test]
fn half_period_values_are_p_at_half_periods() {
    let tau = c(0.0, 1.3);
    let cx = ctx(tau);
    let (e1, e2, e3) = cx.half_period_values();
    assert!((e1 + e2 + e3).norm() < 1e-10);
    let n = 200;
    assert!(rel(e1, p_double_sum(c(0.5, 0.0), tau, n)) < 1e-8);
    assert!(rel(e2, p_double_sum(-(tau + 1.0) * 0.5, tau, n)) < 1e-8);
    assert!(rel(e3, p_double_sum(tau * 0.5, tau, n)) < 1e-8);
}

#[test]
fn shift_identity() {
    let cx = ctx(c(0.0, 1.2));
    let u = c(0.31, 0.07);
    let (e1, e2, e3) = cx.half_period_values();
    let e = [e1, e2, e3];
    let p = cx.weierstrass_p(u).unwrap();
    for j in 0..3 {
        let (k, l) = ((j + 1) % 3, (j + 2) % 3);
        let expect = e[j] + (e[j] - e[k]) * (e[j] - e[l]) / (p - e[j]);
        assert!(rel(cx.shifted_p(u, j + 1).unwrap(), expect) < 1e-9);
    }
    assert_eq!(cx.shifted_p(u, 0).unwrap(), cx.weierstrass_p(u).unwrap());
}

#[test]
fn shifted_p_omega2_large_im_tau() {
    let cx = ctx(c(0.0, 8.0));
    let u = c(0.25, 0.0);
    let q = (c(0.0, PI) * cx.tau()).exp();
    let expect = -PI * PI / 3.0 + (u * 2.0 * PI).cos() * q * (8.0 * PI * PI);
    assert!((cx.shifted_p(u, 2).unwrap() - expect).norm() < 1e-8);
}

#[test]
fn half_period_values_at_large_im_tau() {
    let cx = ctx(c(0.0, 8.0));
    let (e1, e2, _) = cx.half_period_values();
    assert!((e2 - e1 + PI * PI).norm() < 1e-6);
    assert!((e1 - 2.0 * PI * PI / 3.0).norm() < 1e-6);
}

/// Sum over the theta series written out directly.
fn theta_oracle(u: Complex64, tau: Complex64) -> Complex64 {
    (-40..=40).map(|n| (c(0.0, PI) * tau * (n * n) as f64 + c(0.0, 2.0 * PI) * u * n as f64).exp()).sum()
}

#[test]
fn theta_series_and_periods() {
    let tau = c(0.1, 1.1);
    let cx = ctx(tau);
    let u = c(0.4, 0.1);
    assert!(rel(cx.theta(u), theta_oracle(u, tau)) < 1e-13);
    assert!(rel(cx.theta(u + 1.0), cx.theta(u)) < 1e-13);
    let shifted = (c(0.0, -PI) * tau - c(0.0, 2.0 * PI) * u).exp() * cx.theta(u);
    assert!(rel(cx.theta(u + tau), shifted) < 1e-12);
}

#[test]
fn heat_equation_second_difference() {
    let cx = ctx(c(0.0, 1.4));
    let u = c(0.1, 0.2);
    let h = 1e-5;
    let d2 = (cx.theta(u + h) - cx.theta(u) * 2.0 + cx.theta(u - h)) / (h * h);
    assert!(rel(cx.theta_dtau(u) * c(0.0, 4.0 * PI), d2) < 1e-6);
}

#[test]
fn heat_equation_fourth_order_difference() {
    let cx = ctx(c(0.4, 2.0));
    let h = 1e-3;
    for k in 0..50 {
        let u = c(-0.5 + 0.02 * k as f64, -0.9 + 0.037 * k as f64);
        let th = |x: f64| cx.theta(u + x);
        let d2 = (-th(-2.0 * h) + th(-h) * 16.0 - th(0.0) * 30.0 + th(h) * 16.0 - th(2.0 * h)) / (12.0 * h * h);
        assert!(rel(cx.theta_dtau(u) * c(0.0, 4.0 * PI), d2) < 1e-6);
    }
}

#[test]
fn theta_dtau_matches_difference_in_tau() {
    let tau = c(0.2, 1.0);
    let u = c(0.13, 0.21);
    let h = 1e-5;
    let fd = (theta_oracle(u, tau + h) - theta_oracle(u, tau - h)) / (2.0 * h);
    assert!(rel(ctx(tau).theta_dtau(u), fd) < 1e-8);
}

fn f_at(tau: Complex64, u: Complex64) -> Complex64 {
    ctx(tau).f(u).unwrap()
}

#[test]
fn f_at_omega3_is_t() {
    let cx = ctx(c(0.0, 1.2));
    let (e1, e2, e3) = cx.half_period_values();
    assert!(rel(cx.f(cx.tau() * 0.5).unwrap(), (e3 - e1) / (e2 - e1)) < 1e-12);
}

#[test]
fn f_tau_matches_central_difference() {
    let tau = c(0.15, 1.25);
    let cx = ctx(tau);
    let h = 1e-6;
    for k in 0..20 {
        let u = c(-0.4 + 0.041 * k as f64, 0.03 + 0.027 * k as f64);
        let fd = (f_at(tau + h, u) - f_at(tau - h, u)) / (2.0 * h);
        let d = cx.f_and_derivatives(u).unwrap();
        assert!(rel(d.f_tau, fd) < 1e-6, "u={u}: {} vs {fd}", d.f_tau);
    }
}

#[test]
fn g_shifts_by_one_under_tau() {
    let cx = ctx(c(0.0, 1.1));
    let g = |u: Complex64| {
        let d = cx.f_and_derivatives(u).unwrap();
        d.f_tau / d.f_u
    };
    for u in [c(0.11, 0.23), c(-0.3, 0.4), c(0.37, -0.12)] {
        assert!(rel(g(u + cx.tau()), g(u) - 1.0) < 1e-10);
    }
}

#[test]
fn f_tau_theta_relation_with_difference_f_tau() {
    let tau = c(0.0, 1.5);
    let cx = ctx(tau);
    let h = 1e-3;
    for u in [c(0.11, 0.23), c(-0.3, 0.4), c(0.37, -0.12)] {
        let ftau = (f_at(tau - 2.0 * h, u) - f_at(tau - h, u) * 8.0 + f_at(tau + h, u) * 8.0 - f_at(tau + 2.0 * h, u))
            / (12.0 * h);
        let lhs = c(0.0, 2.0 * PI) * ftau / cx.f_and_derivatives(u).unwrap().f_u;
        let v = u + 0.5;
        let rhs = cx.theta_du(v) / cx.theta(v);
        assert!(rel(lhs, rhs) < 1e-9);
    }
}

#[test]
fn log_theta_plus_p_constant_in_u() {
    let cx = ctx(c(0.4, 2.0));
    let vals: Vec<Complex64> = (0..30)
        .map(|k| {
            let u = c(-0.43 + 0.029 * k as f64, 0.6 - 0.04 * k as f64);
            cx.theta_log_second_derivative(u + 0.5) + cx.shifted_p(u, 3).unwrap()
        })
        .collect();
    let mean = vals.iter().sum::<Complex64>() / 30.0;
    let sd = (vals.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / 30.0).sqrt();
    assert!(sd < 1e-8);
}

#[test]
fn asymptotic_p1_and_p23_sum() {
    let u = c(0.2, 0.0);
    let cs = (u * PI).cos();
    let expect = (cs * cs).inv() * (PI * PI) - PI * PI / 3.0;
    assert!((asymptotic_p(u, 1, c(0.0, 3.0)) - expect).norm() < 1e-14);

    let cx = ctx(c(0.0, 6.0));
    let q2 = (c(0.0, 2.0 * PI) * cx.tau()).exp();
    for u in [c(0.1, 0.0), c(0.21, 0.03), c(0.33, -0.02)] {
        let sum = cx.p_centered(u + cx.omega(2)).unwrap() + cx.p_centered(u + cx.omega(3)).unwrap();
        let coeff = sum / q2;
        let expect = p23_sum_coefficient(u);
        assert!(rel(coeff, expect) < 1e-3);
        // cos 2πu in place of cos 4πu misses by O(1).
        let misprint = Complex64::from(16.0 * PI * PI) - (u * 2.0 * PI).cos() * (32.0 * PI * PI);
        assert!(rel(coeff, misprint) > 1e-2);
    }
}

#[test]
fn asymptotic_p3_error_slope() {
    let u = c(0.17, 0.02);
    let errs: Vec<f64> = [4.0, 6.0, 8.0]
        .iter()
        .map(|&im| {
            let cx = ctx(c(0.0, im));
            (cx.shifted_p(u, 3).unwrap() - asymptotic_p(u, 3, cx.tau())).norm()
        })
        .collect();
    let slope = (errs[1].ln() - errs[0].ln()) / 2.0;
    assert!((slope / (-2.0 * PI) - 1.0).abs() < 0.1, "{errs:?}");
    assert!(errs[2] < errs[1]);
}

#[test]
fn single_precision_context() {
    let c32 = EllipticContext32::new(num_complex::Complex32::new(0.0, 1.5)).unwrap();
    let c64 = ctx(c(0.0, 1.5));
    let u = c(0.3, 0.2);
    let p32 = c32.weierstrass_p(num_complex::Complex32::new(0.3, 0.2)).unwrap();
    let p64 = c64.weierstrass_p(u).unwrap();
    assert!(rel(c(p32.re as f64, p32.im as f64), p64) < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn p_is_even_and_periodic(a in -0.45f64..0.45, b in -0.45f64..0.45, im in 0.6f64..2.5) {
        let tau = c(0.1, im);
        let cx = ctx(tau);
        let u = tau * b + a;
        prop_assume!(cx.lattice_distance(u) > 0.05);
        let p = cx.weierstrass_p(u).unwrap();
        let scale = p.norm().max(1.0);
        prop_assert!((cx.weierstrass_p(-u).unwrap() - p).norm() / scale < 1e-11);
        prop_assert!((cx.weierstrass_p(u + tau + 1.0).unwrap() - p).norm() / scale < 1e-11);
    }

    #[test]
    fn lattice_reduction_lands_in_cell(re in -20.0f64..20.0, im in -20.0f64..20.0) {
        let cx = ctx(c(0.3, 1.2));
        let r = cx.reduce(c(re, im));
        let back = r.reduced + cx.tau() * r.n as f64 + r.m as f64;
        prop_assert!((back - c(re, im)).norm() < 1e-9);
        prop_assert!(r.reduced.im.abs() <= 0.6 + 1e-12);
    }
}
