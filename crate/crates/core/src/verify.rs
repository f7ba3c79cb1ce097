//! Numerical checks of the elliptic identities, the canonical
//! transformations, the dynamics, and the degeneration limits, each
//! reported as a [`CheckReport`].
//!
//! Everything here runs in `f64`. Random points come from a ChaCha8 stream
//! seeded per check, so a report is a function of `(check_id, seed)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, painleve_residual, IntegratorOptions, Termination};
use crate::elliptic::{asymptotics, EllipticContext};
use crate::error::{Error, Result};
use crate::systems::{
    canonical_vector_field, hamiltonian, hamiltonian_gradients, AuxParams, Equation, PainleveParams, ParamSet,
    PhaseState, Side, SystemDescriptor, AUX_SYMBOLS,
};
use crate::transforms::{multi_transform, transform_constant, vector_field_defect, Direction};

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
    pub metadata: BTreeMap<String, String>,
}

impl CheckReport {
    pub fn new(check_id: impl Into<String>, max_error: f64, tolerance: f64, samples: usize) -> Self {
        Self {
            check_id: check_id.into(),
            max_error,
            tolerance,
            samples,
            passed: max_error <= tolerance,
            metadata: BTreeMap::new(),
        }
    }

    /// A check whose computation itself failed.
    pub fn failed(check_id: impl Into<String>, tolerance: f64, err: &Error) -> Self {
        let mut r = Self::new(check_id, f64::MAX, tolerance, 0);
        r.passed = false;
        r.metadata.insert("error".into(), err.to_string());
        r
    }

    pub fn with(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }
}

fn report_or_fail(id: String, tol: f64, r: Result<CheckReport>) -> CheckReport {
    r.unwrap_or_else(|e| CheckReport::failed(id, tol, &e))
}

/// Sorts by `check_id` and serializes as a pretty JSON array.
pub fn reports_to_json(reports: &[CheckReport]) -> String {
    let mut sorted = reports.to_vec();
    sorted.sort_by(|a, b| a.check_id.cmp(&b.check_id));
    serde_json::to_string_pretty(&sorted).expect("reports serialize")
}

pub fn default_taus() -> Vec<C> {
    vec![c(0.0, 1.0), c(0.0, 1.5), c(0.4, 2.0)]
}

pub fn default_contexts() -> Vec<EllipticContext<f64>> {
    default_taus().into_iter().map(|t| EllipticContext::new(t).expect("default tau is valid")).collect()
}

fn tau_label(tau: C) -> String {
    format!("{}{:+}i", tau.re, tau.im)
}

fn rng_for(seed: u64, id: &str) -> ChaCha8Rng {
    // FNV-1a of the id, mixed with the seed.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    ChaCha8Rng::seed_from_u64(h ^ seed.wrapping_mul(0x9e3779b97f4a7c15))
}

fn rand_box(rng: &mut ChaCha8Rng, re: (f64, f64), im: (f64, f64)) -> C {
    c(rng.gen_range(re.0..re.1), rng.gen_range(im.0..im.1))
}

fn rand_annulus(rng: &mut ChaCha8Rng, r0: f64, r1: f64) -> C {
    C::from_polar(rng.gen_range(r0..r1), rng.gen_range(-PI..PI))
}

/// Generic point of the cell, away from lattice points and half periods.
fn rand_cell_point(rng: &mut ChaCha8Rng, ctx: &EllipticContext<f64>) -> C {
    loop {
        let u = ctx.tau() * rng.gen_range(-0.45..0.45) + rng.gen_range(-0.45..0.45);
        if (0..=3).all(|k| ctx.lattice_distance(u - ctx.omega(k)) >= 0.05) {
            return u;
        }
    }
}

fn rel_err(a: C, b: C, scale: f64) -> f64 {
    (a - b).norm() / scale.max(1e-300)
}

fn max_by<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

/// `℘(u − v) + ℘(u + v) = −2℘(u) − 2℘(v) + (℘′(u)² + ℘′(v)²)/(2(℘(u) − ℘(v))²)`.
fn addition_check(ctx: &EllipticContext<f64>, seed: u64) -> Result<CheckReport> {
    let id = format!("identity/addition/tau={}", tau_label(ctx.tau()));
    let mut rng = rng_for(seed, &id);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 50 {
        let (u, v) = (rand_cell_point(&mut rng, ctx), rand_cell_point(&mut rng, ctx));
        if ctx.lattice_distance(u - v) < 0.05 || ctx.lattice_distance(u + v) < 0.05 {
            continue;
        }
        let lhs = ctx.weierstrass_p(u - v)? + ctx.weierstrass_p(u + v)?;
        let (pu, pv) = (ctx.weierstrass_p(u)?, ctx.weierstrass_p(v)?);
        let (du, dv) = (ctx.weierstrass_p_prime(u)?, ctx.weierstrass_p_prime(v)?);
        let frac = (du * du + dv * dv) / ((pu - pv) * (pu - pv) * 2.0);
        let rhs = -pu * 2.0 - pv * 2.0 + frac;
        let scale = max_by([lhs.norm(), 2.0 * pu.norm(), 2.0 * pv.norm(), frac.norm()]);
        worst = worst.max(rel_err(lhs, rhs, scale));
        n += 1;
    }
    Ok(CheckReport::new(id, worst, 1e-9, n))
}

/// `℘(u+1) = ℘(u+τ) = ℘(u)` on a 10×10 grid.
fn periodicity_check(ctx: &EllipticContext<f64>) -> Result<CheckReport> {
    let id = format!("identity/periodicity/tau={}", tau_label(ctx.tau()));
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for i in 0..10 {
        for j in 0..10 {
            let u = ctx.tau() * (-0.43 + 0.09 * j as f64 + 0.013) + (-0.44 + 0.09 * i as f64 + 0.007);
            if ctx.lattice_distance(u) < 0.05 {
                continue;
            }
            let p = ctx.weierstrass_p(u)?;
            let scale = p.norm().max(1.0);
            worst = worst.max(rel_err(ctx.weierstrass_p(u + 1.0)?, p, scale)).max(rel_err(
                ctx.weierstrass_p(u + ctx.tau())?,
                p,
                scale,
            ));
            n += 1;
        }
    }
    Ok(CheckReport::new(id, worst, 1e-11, n))
}

/// `℘(u + ω_j) = e_j + (e_j − e_k)(e_j − e_ℓ)/(℘(u) − e_j)`.
fn shift_check(ctx: &EllipticContext<f64>, seed: u64) -> Result<CheckReport> {
    let id = format!("identity/shift/tau={}", tau_label(ctx.tau()));
    let mut rng = rng_for(seed, &id);
    let (e1, e2, e3) = ctx.half_period_values();
    let e = [e1, e2, e3];
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let u = rand_cell_point(&mut rng, ctx);
        let p = ctx.weierstrass_p(u)?;
        for j in 0..3 {
            let (k, l) = ((j + 1) % 3, (j + 2) % 3);
            let rhs = e[j] + (e[j] - e[k]) * (e[j] - e[l]) / (p - e[j]);
            let lhs = ctx.shifted_p(u, j + 1)?;
            worst = worst.max(rel_err(lhs, rhs, lhs.norm().max(e[j].norm())));
        }
    }
    Ok(CheckReport::new(id, worst, 1e-9, 150))
}

/// `℘′² = 4(℘ − e₁)(℘ − e₂)(℘ − e₃)`.
fn cubic_check(ctx: &EllipticContext<f64>, seed: u64) -> Result<CheckReport> {
    let id = format!("identity/cubic/tau={}", tau_label(ctx.tau()));
    let mut rng = rng_for(seed, &id);
    let (e1, e2, e3) = ctx.half_period_values();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let u = rand_cell_point(&mut rng, ctx);
        let p = ctx.weierstrass_p(u)?;
        let d = ctx.weierstrass_p_prime(u)?;
        let rhs = (p - e1) * (p - e2) * (p - e3) * 4.0;
        worst = worst.max(rel_err(d * d, rhs, (d * d).norm().max(p.norm().powi(3))));
    }
    Ok(CheckReport::new(id, worst, 1e-9, 50))
}

/// Fourth-order central difference of `f` in `τ` at fixed argument.
fn f_tau_fd(ctx: &EllipticContext<f64>, u: C, h: f64) -> Result<C> {
    let f = |dt: f64| -> Result<C> { ctx.at_tau(ctx.tau() + dt)?.f(u) };
    Ok((f(-2.0 * h)? - f(-h)? * 8.0 + f(h)? * 8.0 - f(2.0 * h)?) / (12.0 * h))
}

/// `2πi f_τ/f′ = ϑ′(u + ω₁)/ϑ(u + ω₁)` with `f_τ` from finite differences,
/// and the analytic `f_τ` against the same difference quotient.
fn f_tau_theta_check(ctx: &EllipticContext<f64>, seed: u64) -> Result<Vec<CheckReport>> {
    let id = format!("identity/f_tau_theta/tau={}", tau_label(ctx.tau()));
    let id_fd = format!("identity/f_tau_fd/tau={}", tau_label(ctx.tau()));
    let mut rng = rng_for(seed, &id);
    let mut worst: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for _ in 0..50 {
        let u = rand_cell_point(&mut rng, ctx);
        let d = ctx.f_and_derivatives(u)?;
        let ftau = f_tau_fd(ctx, u, 1e-3)?;
        let rhs = ctx.theta_log_derivative(u + ctx.omega(1));
        let lhs = ftau / d.f_u * crate::scalar::two_pi_i::<f64>();
        worst = worst.max(rel_err(lhs, rhs, rhs.norm().max(1.0)));
        worst_fd = worst_fd.max(rel_err(d.f_tau, ftau, ftau.norm().max(1e-3)));
    }
    Ok(vec![CheckReport::new(id, worst, 1e-9, 50), CheckReport::new(id_fd, worst_fd, 1e-6, 50)])
}

/// `g(u + τ) = g(u) − 1` with `g = f_τ/f′`.
fn g_shift_check(ctx: &EllipticContext<f64>, seed: u64) -> Result<CheckReport> {
    let id = format!("identity/g_shift/tau={}", tau_label(ctx.tau()));
    let mut rng = rng_for(seed, &id);
    let g = |u: C| -> Result<C> {
        let d = ctx.f_and_derivatives(u)?;
        Ok(d.f_tau / d.f_u)
    };
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let u = rand_cell_point(&mut rng, ctx);
        let lhs = g(u + ctx.tau())?;
        let rhs = g(u)? - 1.0;
        worst = worst.max(rel_err(lhs, rhs, rhs.norm().max(1.0)));
    }
    Ok(CheckReport::new(id, worst, 1e-10, 50))
}

/// Heat equation `4πi ϑ_τ = ϑ″`, with `ϑ″` from a fourth-order difference.
fn heat_check(ctx: &EllipticContext<f64>, seed: u64) -> Result<CheckReport> {
    let id = format!("identity/heat/tau={}", tau_label(ctx.tau()));
    let mut rng = rng_for(seed, &id);
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let u = rand_box(&mut rng, (-0.5, 0.5), (-0.5 * ctx.tau().im, 0.5 * ctx.tau().im));
        let th = |x: f64| ctx.theta(u + x);
        let d2 = (-th(-2.0 * h) + th(-h) * 16.0 - th(0.0) * 30.0 + th(h) * 16.0 - th(2.0 * h)) / (12.0 * h * h);
        let lhs = ctx.theta_dtau(u) * c(0.0, 4.0 * PI);
        worst = worst.max(rel_err(lhs, d2, d2.norm().max(th(0.0).norm())));
    }
    Ok(CheckReport::new(id, worst, 1e-6, 50))
}

/// `ϑ(u + τ) = e^{−πiτ − 2πiu} ϑ(u)` with unreduced series on both sides.
fn theta_quasi_period_check(ctx: &EllipticContext<f64>, seed: u64) -> Result<CheckReport> {
    let id = format!("identity/theta_quasi_period/tau={}", tau_label(ctx.tau()));
    let mut rng = rng_for(seed, &id);
    let tau = ctx.tau();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let u = rand_box(&mut rng, (-0.5, 0.5), (-0.25 * tau.im, 0.25 * tau.im));
        let lhs = ctx.theta(u + tau);
        let rhs = (c(0.0, -PI) * tau - c(0.0, 2.0 * PI) * u).exp() * ctx.theta(u);
        worst = worst.max(rel_err(lhs, rhs, rhs.norm()));
    }
    Ok(CheckReport::new(id, worst, 1e-12, 50))
}

/// `(log ϑ(u + ω₁))″ + ℘(u + ω₃)` does not depend on `u`.
fn log_theta_check(ctx: &EllipticContext<f64>, seed: u64) -> Result<CheckReport> {
    let id = format!("identity/log_theta/tau={}", tau_label(ctx.tau()));
    let mut rng = rng_for(seed, &id);
    let mut vals = Vec::with_capacity(50);
    for _ in 0..50 {
        let u = rand_cell_point(&mut rng, ctx);
        vals.push(ctx.theta_log_second_derivative(u + ctx.omega(1)) + ctx.shifted_p(u, 3)?);
    }
    let mean = vals.iter().sum::<C>() / vals.len() as f64;
    let sd = (vals.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / vals.len() as f64).sqrt();
    Ok(CheckReport::new(id, sd, 1e-8, vals.len()).with("mean", format!("{mean}")))
}

/// Two-body identity of the hyperbolic model:
/// `1/sinh²((q₁−q₂)/2) + 1/sinh²((q₁+q₂)/2) = 2(λ₁−1)(λ₂−1)(λ₁+λ₂)/(λ₁−λ₂)²`.
fn sinh_two_body_check(seed: u64) -> Result<CheckReport> {
    let id = "identity/sinh_two_body".to_string();
    let mut rng = rng_for(seed, &id);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 50 {
        let q1 = rand_box(&mut rng, (0.3, 2.0), (-1.5, 1.5));
        let q2 = rand_box(&mut rng, (-2.0, -0.3), (-1.5, 1.5));
        if ((q1 - q2) * 0.5).sinh().norm() < 0.05 || ((q1 + q2) * 0.5).sinh().norm() < 0.05 {
            continue;
        }
        let s = |x: C| {
            let v = (x * 0.5).sinh();
            (v * v).inv()
        };
        let lhs = s(q1 - q2) + s(q1 + q2);
        let l = |q: C| {
            let ct = (q * 0.5).cosh() / (q * 0.5).sinh();
            ct * ct
        };
        let (l1, l2) = (l(q1), l(q2));
        let rhs = (l1 - 1.0) * (l2 - 1.0) * (l1 + l2) * 2.0 / ((l1 - l2) * (l1 - l2));
        worst = worst.max(rel_err(lhs, rhs, lhs.norm()));
        n += 1;
    }
    Ok(CheckReport::new(id, worst, 1e-10, n))
}

/// The elliptic two-body term `℘(q_j − q_k) + ℘(q_j + q_k)` in the λ form
/// used by the rank-ℓ Painlevé Hamiltonian.
fn elliptic_two_body_check(ctx: &EllipticContext<f64>, seed: u64) -> Result<CheckReport> {
    let id = format!("identity/elliptic_two_body/tau={}", tau_label(ctx.tau()));
    let mut rng = rng_for(seed, &id);
    let (e1, _, _) = ctx.half_period_values();
    let e21 = ctx.e21();
    let t = ctx.modular_t();
    let s = |l: C| l * (l - 1.0) * (l - t);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 50 {
        let (a, b) = (rand_cell_point(&mut rng, ctx), rand_cell_point(&mut rng, ctx));
        if ctx.lattice_distance(a - b) < 0.05 || ctx.lattice_distance(a + b) < 0.05 {
            continue;
        }
        let lhs = ctx.weierstrass_p(a - b)? + ctx.weierstrass_p(a + b)?;
        let (la, lb) = (ctx.f(a)?, ctx.f(b)?);
        let rhs = -e1 * 4.0 - e21 * (la + lb) * 2.0 + e21 * (s(la) + s(lb)) * 2.0 / ((la - lb) * (la - lb));
        worst = worst.max(rel_err(lhs, rhs, lhs.norm().max(e1.norm())));
        n += 1;
    }
    Ok(CheckReport::new(id, worst, 1e-9, n))
}

fn nome(tau: C, power: f64) -> C {
    (c(0.0, PI * power) * tau).exp()
}

/// Large-`Im τ` expansions of `e_k`, `t`, ℘ and the shifted ℘.
pub fn asymptotic_checks() -> Vec<CheckReport> {
    let mut out = Vec::new();
    let pi2 = PI * PI;
    let ctx = |im: f64| EllipticContext::new(c(0.0, im)).expect("valid tau");
    let c8 = ctx(8.0);
    let (e1, e2, _) = c8.half_period_values();
    out.push(CheckReport::new("asymptotic/e21_limit", (e2 - e1 + pi2).norm(), 1e-6, 1));
    out.push(CheckReport::new("asymptotic/e1_limit", (e1 - 2.0 * pi2 / 3.0).norm(), 1e-6, 1));
    let q8 = nome(c8.tau(), 1.0);
    let tm1 = c8.modular_t_minus_one();
    out.push(
        CheckReport::new("asymptotic/t_limit", (tm1 - q8 * 16.0 * pi2).norm(), 1e-8, 1)
            .with("t_minus_1", tm1)
            .with("nome", q8),
    );
    out.push(
        CheckReport::new("asymptotic/t_coefficient", rel_err(tm1, q8 * 16.0, (q8 * 16.0).norm()), 1e-6, 1)
            .with("coefficient", tm1 / q8),
    );

    // Error of the trigonometric approximation of ℘ should fall like |e^{2πiτ}|.
    let u = c(0.3, 0.05);
    let errs: Vec<f64> = [4.0, 6.0, 8.0].iter().map(|&im| ctx(im).p_tail(u).norm()).collect();
    let mut worst: f64 = 0.0;
    for w in errs.windows(2) {
        let expect = (-4.0 * PI).exp();
        let r = w[1] / w[0];
        worst = worst.max((r / expect).max(expect / r));
    }
    out.push(CheckReport::new("asymptotic/p_trig_rate", worst, 3.0, 3).with("errors", format!("{errs:?}")));

    // e₂ − (−π²/3 + 8π² e^{πiτ}) = O(e^{2πiτ}).
    let e2_err = |im: f64| {
        let cc = ctx(im);
        (cc.half_period_centered(2) - nome(cc.tau(), 1.0) * 8.0 * pi2).norm()
    };
    let (a4, a6) = (e2_err(4.0), e2_err(6.0));
    out.push(
        CheckReport::new("asymptotic/e2_rate", a6 / a4, (-2.0 * PI * 1.9).exp(), 2)
            .with("err_im4", a4)
            .with("err_im6", a6),
    );

    // Shifted ℘ at half periods 2 and 3, coefficients of e^{πiτ}.
    let c6 = ctx(6.0);
    let q6 = nome(c6.tau(), 1.0);
    let mut worst: f64 = 0.0;
    let mut worst23: f64 = 0.0;
    for k in 0..20 {
        let u = c(0.02 + 0.023 * k as f64, 0.01 * (k % 5) as f64);
        let p2 = c6.p_centered(u + c6.omega(2)).expect("generic point");
        let p3 = c6.p_centered(u + c6.omega(3)).expect("generic point");
        let a2 = asymptotics::asymptotic_p(u, 2, c6.tau()) + pi2 / 3.0;
        let a3 = asymptotics::asymptotic_p(u, 3, c6.tau()) + pi2 / 3.0;
        let scale = (q6 * 8.0 * pi2).norm();
        worst = worst.max(rel_err(p2, a2, scale)).max(rel_err(p3, a3, scale));
        let coeff = (p2 + p3) / nome(c6.tau(), 2.0);
        let expect = asymptotics::p23_sum_coefficient(u);
        worst23 = worst23.max(rel_err(coeff, expect, expect.norm().max(16.0 * pi2)));
    }
    out.push(CheckReport::new("asymptotic/shifted_p_omega23", worst, 1e-3, 20));
    out.push(CheckReport::new("asymptotic/p23_sum_coefficient", worst23, 1e-3, 20));

    // ℘(u + ω₃) error decays like e^{2πiτ}: fitted log-error slope against −2π.
    let u = c(0.17, 0.02);
    let ims = [4.0, 6.0, 8.0];
    let errs: Vec<f64> = ims
        .iter()
        .map(|&im| {
            let cc = ctx(im);
            let exact = cc.p_centered(u + cc.omega(3)).expect("generic point");
            (exact - asymptotics::asymptotic_p(u, 3, cc.tau()) - pi2 / 3.0).norm()
        })
        .collect();
    let slope = (errs[2].ln() - errs[0].ln()) / (ims[2] - ims[0]);
    out.push(
        CheckReport::new("asymptotic/p_omega3_slope", (slope / (-2.0 * PI) - 1.0).abs(), 0.1, 3)
            .with("errors", format!("{errs:?}"))
            .with("slope", slope),
    );
    out
}

/// Every elliptic identity at every context, plus the asymptotic checks.
pub fn run_identity_suite(ctxs: &[EllipticContext<f64>], seed: u64) -> Vec<CheckReport> {
    let mut out = Vec::new();
    for ctx in ctxs {
        let label = tau_label(ctx.tau());
        let single: Vec<(&str, f64, Result<CheckReport>)> = vec![
            ("periodicity", 1e-11, periodicity_check(ctx)),
            ("addition", 1e-9, addition_check(ctx, seed)),
            ("shift", 1e-9, shift_check(ctx, seed)),
            ("cubic", 1e-9, cubic_check(ctx, seed)),
            ("g_shift", 1e-10, g_shift_check(ctx, seed)),
            ("heat", 1e-6, heat_check(ctx, seed)),
            ("theta_quasi_period", 1e-12, theta_quasi_period_check(ctx, seed)),
            ("log_theta", 1e-8, log_theta_check(ctx, seed)),
            ("elliptic_two_body", 1e-9, elliptic_two_body_check(ctx, seed)),
        ];
        for (name, tol, r) in single {
            out.push(report_or_fail(format!("identity/{name}/tau={label}"), tol, r).with("seed", seed));
        }
        match f_tau_theta_check(ctx, seed) {
            Ok(rs) => out.extend(rs.into_iter().map(|r| r.with("seed", seed))),
            Err(e) => out.push(CheckReport::failed(format!("identity/f_tau_theta/tau={label}"), 1e-9, &e)),
        }
    }
    out.push(report_or_fail("identity/sinh_two_body".into(), 1e-10, sinh_two_body_check(seed)));
    out.extend(asymptotic_checks());
    out
}

/// Auxiliary constants drawn deterministically for `eq`.
pub fn default_aux(eq: Equation, seed: u64) -> AuxParams<f64> {
    let mut rng = rng_for(seed, &format!("aux/{}", eq.cli_name()));
    let mut aux = AuxParams::default();
    for k in AUX_SYMBOLS {
        aux.set(k, rand_box(&mut rng, (-0.8, 0.8), (-0.4, 0.4)));
    }
    aux
}

/// Random Calogero-side state in the documented sampling domain of `eq`.
pub fn sample_calogero_state(
    eq: Equation,
    rank: usize,
    ctx: Option<&EllipticContext<f64>>,
    rng: &mut ChaCha8Rng,
) -> PhaseState<f64> {
    loop {
        let time = match eq {
            Equation::VI => ctx.expect("PVI sampling needs a context").tau(),
            Equation::V | Equation::III => rand_annulus(rng, 0.5, 1.5),
            _ => rand_box(rng, (-1.0, 1.0), (-1.0, 1.0)),
        };
        let mut qs = Vec::with_capacity(rank);
        for _ in 0..rank {
            qs.push(match eq {
                Equation::VI => rand_cell_point(rng, ctx.expect("context")),
                Equation::V => {
                    let z = rand_box(rng, (0.3, 2.0), (-2.5, 2.5));
                    if rng.gen_bool(0.5) {
                        z
                    } else {
                        -z
                    }
                }
                Equation::IV => rand_annulus(rng, 0.4, 1.6),
                Equation::III => rand_box(rng, (-1.0, 1.0), (-1.5, 1.5)),
                Equation::II | Equation::I => rand_box(rng, (-1.0, 1.0), (-1.0, 1.0)),
            });
        }
        let ps = (0..rank).map(|_| rand_box(rng, (-1.0, 1.0), (-1.0, 1.0))).collect();
        let sep = |a: C, b: C| -> f64 {
            match eq {
                Equation::VI => {
                    let cx = ctx.expect("context");
                    cx.lattice_distance(a - b).min(cx.lattice_distance(a + b))
                }
                Equation::V => ((a - b) * 0.5).sinh().norm().min(((a + b) * 0.5).sinh().norm()),
                Equation::IV => (a - b).norm().min((a + b).norm()),
                Equation::III => ((a - b) * 0.5).sinh().norm(),
                _ => (a - b).norm(),
            }
        };
        let mut ok = true;
        for j in 0..rank {
            for k in j + 1..rank {
                ok &= sep(qs[j], qs[k]) >= 0.05;
            }
        }
        if ok {
            return PhaseState::new(qs, ps, time);
        }
    }
}

/// Random Painlevé-side state: `λ_j` away from `{0, 1, t}` and from each other.
pub fn sample_painleve_state(eq: Equation, rank: usize, rng: &mut ChaCha8Rng) -> PhaseState<f64> {
    loop {
        let time = match eq {
            Equation::VI => rand_box(rng, (-1.5, 2.5), (-1.5, 1.5)),
            Equation::V | Equation::III => rand_annulus(rng, 0.5, 1.5),
            _ => rand_box(rng, (-1.0, 1.0), (-1.0, 1.0)),
        };
        let lam: Vec<C> = (0..rank).map(|_| rand_box(rng, (-1.5, 1.5), (-1.5, 1.5))).collect();
        let mu = (0..rank).map(|_| rand_box(rng, (-1.0, 1.0), (-1.0, 1.0))).collect();
        let far = |z: C| [c(0.0, 0.0), c(1.0, 0.0), time].iter().all(|p| (z - p).norm() >= 0.05);
        let mut ok = (time.norm() >= 0.05) && ((time - 1.0).norm() >= 0.05) && lam.iter().all(|&l| far(l));
        for j in 0..rank {
            for k in j + 1..rank {
                ok &= (lam[j] - lam[k]).norm() >= 0.05;
            }
        }
        if ok {
            return PhaseState::new(lam, mu, time);
        }
    }
}

fn system(eq: Equation, side: Side, rank: usize, g4sq: C, aux: &AuxParams<f64>) -> SystemDescriptor<f64> {
    SystemDescriptor::new(eq, side, rank, g4sq, ParamSet::Aux(*aux)).expect("rank >= 1")
}

/// Closed-form gradients against central differences (step `1e-6`).
pub fn run_gradient_check(eq: Equation, side: Side, rank: usize, n_points: usize, seed: u64) -> CheckReport {
    let side_name = match side {
        Side::Painleve => "painleve",
        Side::Calogero => "calogero",
    };
    let id = format!("gradient/{}/{side_name}/rank{rank}", eq.cli_name());
    let mut rng = rng_for(seed, &id);
    let aux = default_aux(eq, seed);
    let g4 = if rank > 1 { c(0.7, 0.1) } else { c(0.0, 0.0) };
    let sys = system(eq, side, rank, g4, &aux);
    let ctxs = default_contexts();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..n_points {
        let ctx = &ctxs[i % ctxs.len()];
        let st = match side {
            Side::Calogero => sample_calogero_state(eq, rank, Some(ctx), &mut rng),
            Side::Painleve => sample_painleve_state(eq, rank, &mut rng),
        };
        let run = || -> Result<f64> {
            let (gx, gy) = hamiltonian_gradients(&sys, &st, Some(ctx))?;
            let mut err: f64 = 0.0;
            let scale = max_by(gx.iter().chain(&gy).map(|g| g.norm())).max(1e-300);
            for j in 0..rank {
                for which in 0..2 {
                    let bump = |d: f64| {
                        let mut s = st.clone();
                        if which == 0 {
                            s.coords[j] += d;
                        } else {
                            s.momenta[j] += d;
                        }
                        hamiltonian(&sys, &s, Some(ctx))
                    };
                    let fd = (bump(h)? - bump(-h)?) / (2.0 * h);
                    let an = if which == 0 { gx[j] } else { gy[j] };
                    err = err.max((fd - an).norm() / scale);
                }
            }
            Ok(err)
        };
        match run() {
            Ok(e) => worst = worst.max(e),
            Err(e) => return CheckReport::failed(id, 1e-6, &e),
        }
    }
    CheckReport::new(id, worst, 1e-6, n_points).with("seed", seed)
}

/// Pushforward of the Calogero vector field under the canonical map against
/// the Painlevé vector field, at `n_points` random points.
pub fn run_correspondence_suite(
    eq: Equation,
    rank: usize,
    aux: &AuxParams<f64>,
    g4sq: C,
    n_points: usize,
    seed: u64,
) -> CheckReport {
    let id = format!("correspondence/{}/rank{rank}", eq.cli_name());
    let mut rng = rng_for(seed, &id);
    let sys = system(eq, Side::Calogero, rank, g4sq, aux);
    let ctxs = default_contexts();
    let mut worst: f64 = 0.0;
    for i in 0..n_points {
        let ctx = &ctxs[i % ctxs.len()];
        let st = sample_calogero_state(eq, rank, Some(ctx), &mut rng);
        match vector_field_defect(&sys, &st, Some(ctx), 1e-3) {
            Ok(e) => worst = worst.max(e),
            Err(e) => return CheckReport::failed(id, 1e-5, &e).with("point", format!("{st:?}")),
        }
    }
    CheckReport::new(id, worst, 1e-5, n_points)
        .with("seed", seed)
        .with("g4sq", g4sq)
        .with("constant_c", transform_constant::<f64>(eq))
}

/// Integrates the Calogero side and maps the endpoint, then maps the start
/// and integrates the Painlevé side; reports the endpoint discrepancy
/// relative to `max(1, |endpoint|)`.
pub fn run_dynamic_correspondence(
    eq: Equation,
    rank: usize,
    aux: &AuxParams<f64>,
    initial: &PhaseState<f64>,
    arc: C,
    ctx: Option<&EllipticContext<f64>>,
) -> Result<CheckReport> {
    let id = format!("dynamic/{}/rank{rank}", eq.cli_name());
    let cal = system(eq, Side::Calogero, rank, c(0.0, 0.0), aux);
    let pai = cal.with_side(Side::Painleve);
    let opts = IntegratorOptions::with_tolerances(1e-12, 1e-14);
    let tr = integrate(&cal, initial, initial.time + arc, &opts, ctx)?;
    if tr.termination != Termination::Completed {
        return Err(Error::InvalidState(format!("Calogero run ended with {:?}", tr.termination)));
    }
    let end_ctx = match (eq, ctx) {
        (Equation::VI, Some(cx)) => Some(cx.at_tau(tr.last().time)?),
        _ => None,
    };
    let end_ctx = end_ctx.as_ref().or(ctx);
    let mapped_end = multi_transform(eq, Direction::CalogeroToPainleve, tr.last(), aux, end_ctx, None)?;
    let mapped_start = multi_transform(eq, Direction::CalogeroToPainleve, initial, aux, ctx, None)?;
    let tp = integrate(&pai, &mapped_start, mapped_end.time, &opts, None)?;
    if tp.termination != Termination::Completed {
        return Err(Error::InvalidState(format!("Painleve run ended with {:?}", tp.termination)));
    }
    let end = tp.last();
    let mut err: f64 = 0.0;
    for j in 0..rank {
        err = err
            .max((end.coords[j] - mapped_end.coords[j]).norm() / mapped_end.coords[j].norm().max(1.0))
            .max((end.momenta[j] - mapped_end.momenta[j]).norm() / mapped_end.momenta[j].norm().max(1.0));
    }
    Ok(CheckReport::new(id, err, 1e-6, 2)
        .with("arc", arc)
        .with("calogero_steps", tr.steps_accepted)
        .with("painleve_steps", tp.steps_accepted))
}

/// Second-order ODE residual of an integrated Painlevé-side trajectory.
pub fn run_residual_check(eq: Equation, seed: u64) -> CheckReport {
    let id = format!("residual/{}", eq.cli_name());
    let mut rng = rng_for(seed, &id);
    let aux = default_aux(eq, seed);
    let sys = system(eq, Side::Painleve, 1, c(0.0, 0.0), &aux);
    let t0 = match eq {
        Equation::VI => c(0.35, 0.3),
        Equation::V | Equation::III => c(1.0, 0.2),
        _ => c(0.2, 0.1),
    };
    let st =
        PhaseState::rank1(rand_box(&mut rng, (0.3, 0.6), (0.1, 0.3)), rand_box(&mut rng, (-0.3, 0.3), (-0.3, 0.3)), t0);
    let opts = IntegratorOptions { max_step: Some(1.0 / 400.0), ..IntegratorOptions::with_tolerances(1e-12, 1e-14) };
    let run = || -> Result<f64> {
        let tr = integrate(&sys, &st, t0 + c(0.3, 0.0), &opts, None)?;
        painleve_residual(&tr)
    };
    match run() {
        Ok(r) => CheckReport::new(id, r, 1e-4, 1).with("seed", seed),
        Err(e) => CheckReport::failed(id, 1e-4, &e),
    }
}

/// Calogero initial point for the two-path check of `eq`.
pub fn dynamic_initial(eq: Equation, ctx: &EllipticContext<f64>) -> PhaseState<f64> {
    match eq {
        Equation::VI => PhaseState::rank1(c(0.31, 0.17), c(0.5, -0.1), ctx.tau()),
        Equation::V => PhaseState::rank1(c(1.1, 0.4), c(0.3, -0.2), c(0.9, 0.3)),
        Equation::IV => PhaseState::rank1(c(0.9, 0.3), c(0.2, 0.1), c(0.3, 0.1)),
        Equation::III => PhaseState::rank1(c(0.31, 0.17), c(0.5, -0.1), c(0.9, 0.3)),
        Equation::II | Equation::I => PhaseState::rank1(c(0.31, 0.17), c(0.5, -0.1), c(0.2, 0.1)),
    }
}

pub fn dynamic_arc(eq: Equation) -> C {
    if eq == Equation::VI {
        c(0.0, 0.3)
    } else {
        c(0.3, 0.0)
    }
}

// ---------------------------------------------------------------------------
// Degenerations

/// Models appearing at the two ends of a degeneration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Second-order PVI in `λ(t)`.
    PainleveSix,
    /// Second-order PV in `λ(t)`.
    PainleveFive,
    Elliptic,
    Hyperbolic,
    Rational,
    ExpHyperbolic,
    SecondRational,
    FirstPainleve,
}

impl Model {
    /// Symbols a substitution may rescale.
    pub fn symbols(self) -> &'static [&'static str] {
        match self {
            Model::PainleveSix => &["t", "lambda", "alpha", "beta", "gamma", "delta"],
            Model::PainleveFive => &["t", "lambda", "alpha", "beta", "gamma", "delta"],
            Model::Elliptic => &["q", "p", "tau", "g0sq", "g1sq", "g2sq", "g3sq", "g4sq"],
            Model::Hyperbolic | Model::ExpHyperbolic => &["q", "p", "t", "alpha", "beta", "gamma", "delta", "g4sq"],
            Model::Rational => &["q", "p", "t", "alpha", "beta", "g4sq"],
            Model::SecondRational => &["q", "p", "t", "alpha", "g4sq"],
            Model::FirstPainleve => &["q", "p", "t", "g4sq"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::PainleveSix => "p6",
            Model::PainleveFive => "p5",
            Model::Elliptic => "elliptic",
            Model::Hyperbolic => "hyperbolic",
            Model::Rational => "rational",
            Model::ExpHyperbolic => "exp_hyperbolic",
            Model::SecondRational => "second_rational",
            Model::FirstPainleve => "p1",
        }
    }
}

/// A scaling limit `source → target` as `ε → 0`. Tilded quantities are
/// written with a trailing `~`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerationSchedule {
    pub source: Model,
    pub target: Model,
    /// Representative `ε`; the suite sweeps its own list.
    pub epsilon: f64,
    pub substitutions: Vec<(String, String)>,
    /// Power of `ε` at which the defect is expected to vanish.
    pub expected_order: u32,
}

fn subs(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

impl DegenerationSchedule {
    pub fn pvi_to_pv() -> Self {
        Self {
            source: Model::PainleveSix,
            target: Model::PainleveFive,
            epsilon: 1e-2,
            substitutions: subs(&[
                ("t", "1 + eps*t~"),
                ("alpha", "alpha~"),
                ("beta", "beta~"),
                ("gamma", "gamma~/eps - delta~/eps^2"),
                ("delta", "delta~/eps^2"),
            ]),
            expected_order: 1,
        }
    }

    pub fn elliptic_to_hyperbolic() -> Self {
        Self {
            source: Model::Elliptic,
            target: Model::Hyperbolic,
            epsilon: 1e-4,
            substitutions: subs(&[
                ("tau", "16 exp(pi i tau) = eps*t~"),
                ("g0sq", "g0~^2"),
                ("g1sq", "g1~^2"),
                ("g2sq", "g2~^2/eps + g3~^2/eps^2"),
                ("g3sq", "g3~^2/eps^2"),
                ("g4sq", "g4~^2"),
            ]),
            expected_order: 1,
        }
    }

    pub fn hyperbolic_to_rational() -> Self {
        Self {
            source: Model::Hyperbolic,
            target: Model::Rational,
            epsilon: 1e-2,
            substitutions: subs(&[
                ("t", "1 + 2 eps t~"),
                ("q", "pi i + eps^(1/2) q~"),
                ("p", "p~/(2 eps^(1/2))"),
                ("alpha", "1/(8 eps^4)"),
                ("beta", "beta~/4"),
                ("gamma", "-1/(4 eps^4)"),
                ("delta", "-1/(8 eps^4) + alpha~/(2 eps^2)"),
                ("g4sq", "g4~^2/16"),
            ]),
            expected_order: 1,
        }
    }

    pub fn hyperbolic_to_exp_hyperbolic() -> Self {
        Self {
            source: Model::Hyperbolic,
            target: Model::ExpHyperbolic,
            epsilon: 1e-2,
            substitutions: subs(&[
                ("q", "-q~ - log(eps/4)"),
                ("p", "-p~"),
                ("alpha", "alpha~/(4 eps) + gamma~/(8 eps^2)"),
                ("beta", "-gamma~/(8 eps^2)"),
                ("gamma", "beta~ eps/4"),
                ("delta", "delta~ eps^2/8"),
                ("g4sq", "g4~^2"),
            ]),
            expected_order: 1,
        }
    }

    pub fn rational_to_second_rational() -> Self {
        Self {
            source: Model::Rational,
            target: Model::SecondRational,
            epsilon: 1e-1,
            substitutions: subs(&[
                ("t", "(-1 + 4^(-1/3) eps^4 t~)/eps^3"),
                ("q", "2 (1 + 2^(-1/3) eps^2 q~)/eps^(3/2)"),
                ("p", "4^(2/3) p~/eps^(1/2)"),
                ("alpha", "-2 alpha~ - 1/(2 eps^6)"),
                ("beta", "-1/(2 eps^12)"),
                ("g4sq", "16 g4~^2"),
            ]),
            expected_order: 2,
        }
    }

    pub fn exp_hyperbolic_to_second_rational() -> Self {
        Self {
            source: Model::ExpHyperbolic,
            target: Model::SecondRational,
            epsilon: 1e-2,
            substitutions: subs(&[
                ("t", "1 + 2 eps^2 t~"),
                ("q", "2 eps q~"),
                ("p", "p~/eps"),
                ("alpha", "-1/(2 eps^6)"),
                ("beta", "(1 + 4 eps^3 alpha~)/(2 eps^6)"),
                ("gamma", "1/(4 eps^6)"),
                ("delta", "-1/(4 eps^6)"),
                ("g4sq", "g4~^2"),
            ]),
            expected_order: 1,
        }
    }

    pub fn second_rational_to_pi() -> Self {
        Self {
            source: Model::SecondRational,
            target: Model::FirstPainleve,
            epsilon: 0.5,
            substitutions: subs(&[
                ("t", "(-6 + eps^12 t~)/eps^10"),
                ("q", "(1 + eps^6 q~)/eps^5"),
                ("p", "p~/eps"),
                ("alpha", "4/eps^15"),
                ("g4sq", "g4~^2"),
            ]),
            expected_order: 6,
        }
    }

    pub fn all() -> Vec<Self> {
        vec![
            Self::pvi_to_pv(),
            Self::elliptic_to_hyperbolic(),
            Self::hyperbolic_to_rational(),
            Self::hyperbolic_to_exp_hyperbolic(),
            Self::rational_to_second_rational(),
            Self::exp_hyperbolic_to_second_rational(),
            Self::second_rational_to_pi(),
        ]
    }

    pub fn name(&self) -> String {
        format!("{}->{}", self.source.name(), self.target.name())
    }

    /// `ε` values the suite uses by default: small enough for the limit to be
    /// visible, large enough for `f64` cancellation to stay below the defect.
    pub fn default_eps(&self) -> Vec<f64> {
        match (self.source, self.target) {
            (Model::PainleveSix, _) => vec![1e-2, 1e-3],
            (Model::Elliptic, _) => vec![1e-2, 1e-3, 1e-4],
            (Model::Hyperbolic, Model::Rational) => vec![1e-2, 1e-3],
            (Model::Hyperbolic, _) => vec![1e-2, 1e-3, 1e-4],
            (Model::Rational, _) => vec![0.2, 0.1, 0.05],
            (Model::ExpHyperbolic, _) => vec![1e-2, 1e-3],
            _ => vec![0.5, 0.25],
        }
    }

    /// Every substituted symbol exists in the source model, and the
    /// (source, target) pair is one of the known limits.
    pub fn validate(&self) -> Result<()> {
        let known = Self::all();
        let canon = known
            .iter()
            .find(|s| s.source == self.source && s.target == self.target)
            .ok_or_else(|| Error::ScheduleMismatch(format!("no known limit {}", self.name())))?;
        for (sym, _) in &self.substitutions {
            if !self.source.symbols().contains(&sym.as_str()) {
                return Err(Error::ScheduleMismatch(format!(
                    "symbol `{sym}` does not occur in the {} model",
                    self.source.name()
                )));
            }
        }
        for (sym, _) in &canon.substitutions {
            if !self.substitutions.iter().any(|(s, _)| s == sym) {
                return Err(Error::ScheduleMismatch(format!("substitution for `{sym}` missing")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::ScheduleMismatch("epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Tilded phase point shared by the Calogero-level degenerations.
struct Tilde {
    q: [C; 2],
    p: [C; 2],
    t: C,
    alpha: C,
    beta: C,
    gamma: C,
    delta: C,
    g4sq: C,
}

const TILDE: Tilde = Tilde {
    q: [C::new(0.37, 0.21), C::new(-0.52, 0.34)],
    p: [C::new(0.52, -0.13), C::new(-0.21, 0.27)],
    t: C::new(0.81, 0.17),
    alpha: C::new(0.3, 0.1),
    beta: C::new(-0.7, 0.2),
    gamma: C::new(0.45, -0.3),
    delta: C::new(0.25, 0.15),
    g4sq: C::new(0.3, 0.05),
};

/// Affine substitution `x = a + b x̃` for one variable.
#[derive(Clone, Copy)]
struct Affine {
    a: C,
    b: C,
}

impl Affine {
    fn at(self, x: C) -> C {
        self.a + self.b * x
    }
}

struct CalogeroLimit {
    source: Equation,
    target: Equation,
    q: Affine,
    p: Affine,
    t: Affine,
    params: [C; 4],
    g4sq: C,
}

fn calogero_params(eq: Equation, v: [C; 4]) -> ParamSet<f64> {
    ParamSet::Painleve(PainleveParams::new(eq, v[0], v[1], v[2], v[3]))
}

/// Maximum componentwise defect between the substituted source field and the
/// target field, at the rank-2 tilded point.
fn calogero_defect(lim: &CalogeroLimit) -> Result<f64> {
    let tl = &TILDE;
    let rank = 2;
    let src =
        SystemDescriptor::new(lim.source, Side::Calogero, rank, lim.g4sq, calogero_params(lim.source, lim.params))?;
    let tgt = SystemDescriptor::new(
        lim.target,
        Side::Calogero,
        rank,
        tl.g4sq,
        calogero_params(lim.target, [tl.alpha, tl.beta, tl.gamma, tl.delta]),
    )?;
    let s_state = PhaseState::new(
        tl.q.iter().map(|&x| lim.q.at(x)).collect(),
        tl.p.iter().map(|&x| lim.p.at(x)).collect(),
        lim.t.at(tl.t),
    );
    let t_state = PhaseState::new(tl.q.to_vec(), tl.p.to_vec(), tl.t);
    let (sq, sp) = canonical_vector_field(&src, &s_state, None)?;
    let (tq, tp) = canonical_vector_field(&tgt, &t_state, None)?;
    let mut err: f64 = 0.0;
    for j in 0..rank {
        err = err.max((sq[j] * lim.t.b / lim.q.b - tq[j]).norm()).max((sp[j] * lim.t.b / lim.p.b - tp[j]).norm());
    }
    Ok(err)
}

fn limit_for(schedule: &DegenerationSchedule, eps: f64) -> Option<CalogeroLimit> {
    let tl = &TILDE;
    let e = c(eps, 0.0);
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let aff = |a: C, b: C| Affine { a, b };
    let sq = eps.sqrt();
    Some(match (schedule.source, schedule.target) {
        (Model::Hyperbolic, Model::Rational) => CalogeroLimit {
            source: Equation::V,
            target: Equation::IV,
            q: aff(c(0.0, PI), c(sq, 0.0)),
            p: aff(zero, c(0.5 / sq, 0.0)),
            t: aff(one, e * 2.0),
            params: [
                c(1.0 / (8.0 * eps.powi(4)), 0.0),
                tl.beta / 4.0,
                c(-1.0 / (4.0 * eps.powi(4)), 0.0),
                c(-1.0 / (8.0 * eps.powi(4)), 0.0) + tl.alpha / (2.0 * eps * eps),
            ],
            g4sq: tl.g4sq / 16.0,
        },
        (Model::Hyperbolic, Model::ExpHyperbolic) => CalogeroLimit {
            source: Equation::V,
            target: Equation::III,
            q: aff(c(-(eps / 4.0).ln(), 0.0), -one),
            p: aff(zero, -one),
            t: aff(zero, one),
            params: [
                tl.alpha / (4.0 * eps) + tl.gamma / (8.0 * eps * eps),
                -tl.gamma / (8.0 * eps * eps),
                tl.beta * eps / 4.0,
                tl.delta * eps * eps / 8.0,
            ],
            g4sq: tl.g4sq,
        },
        (Model::Rational, Model::SecondRational) => CalogeroLimit {
            source: Equation::IV,
            target: Equation::II,
            q: aff(c(2.0 / eps.powf(1.5), 0.0), c(2.0 * 2f64.powf(-1.0 / 3.0) * eps.sqrt(), 0.0)),
            p: aff(zero, c(4f64.powf(2.0 / 3.0) / eps.sqrt(), 0.0)),
            t: aff(c(-1.0 / eps.powi(3), 0.0), c(4f64.powf(-1.0 / 3.0) * eps, 0.0)),
            params: [-tl.alpha * 2.0 - 1.0 / (2.0 * eps.powi(6)), c(-1.0 / (2.0 * eps.powi(12)), 0.0), zero, zero],
            g4sq: tl.g4sq * 16.0,
        },
        (Model::ExpHyperbolic, Model::SecondRational) => CalogeroLimit {
            source: Equation::III,
            target: Equation::II,
            q: aff(zero, e * 2.0),
            p: aff(zero, c(1.0 / eps, 0.0)),
            t: aff(one, e * e * 2.0),
            params: [
                c(-1.0 / (2.0 * eps.powi(6)), 0.0),
                (tl.alpha * 4.0 * eps.powi(3) + 1.0) / (2.0 * eps.powi(6)),
                c(1.0 / (4.0 * eps.powi(6)), 0.0),
                c(-1.0 / (4.0 * eps.powi(6)), 0.0),
            ],
            g4sq: tl.g4sq,
        },
        (Model::SecondRational, Model::FirstPainleve) => CalogeroLimit {
            source: Equation::II,
            target: Equation::I,
            q: aff(c(1.0 / eps.powi(5), 0.0), c(eps, 0.0)),
            p: aff(zero, c(1.0 / eps, 0.0)),
            t: aff(c(-6.0 / eps.powi(10), 0.0), c(eps * eps, 0.0)),
            params: [c(4.0 / eps.powi(15), 0.0), zero, zero, zero],
            g4sq: tl.g4sq,
        },
        _ => return None,
    })
}

/// `|ε² F_VI(λ, λ̇/ε, 1 + εt̃) − F_V(λ, λ̇, t̃)|` at a fixed `(λ, λ̇, t̃)`.
fn pvi_pv_defect(eps: f64) -> f64 {
    let tl = &TILDE;
    let (lam, dlam) = (c(0.37, 0.21), c(0.52, -0.13));
    let p6 = PainleveParams::new(
        Equation::VI,
        tl.alpha,
        tl.beta,
        tl.gamma / eps - tl.delta / (eps * eps),
        tl.delta / (eps * eps),
    );
    let p5 = PainleveParams::new(Equation::V, tl.alpha, tl.beta, tl.gamma, tl.delta);
    let src = crate::systems::painleve_second_order(&p6, lam, dlam / eps, tl.t * eps + 1.0) * (eps * eps);
    let tgt = crate::systems::painleve_second_order(&p5, lam, dlam, tl.t);
    (src - tgt).norm()
}

/// Couplings `g̃₀², …, g̃₄²` of the elliptic-to-hyperbolic check.
const G_TILDE: [C; 5] = [C::new(0.4, 0.1), C::new(-0.3, 0.2), C::new(0.5, -0.1), C::new(0.2, 0.3), C::new(0.35, -0.05)];

/// `u`-dependence of `V_elliptic(scheduled) − V_limit` over a set of rank-2
/// configurations, after subtracting the mean.
fn elliptic_potential_residual(eps: f64) -> Result<f64> {
    let tt = TILDE.t;
    let tau = (tt * eps / 16.0).ln() / c(0.0, PI);
    let ctx = EllipticContext::new(tau)?;
    let g = G_TILDE;
    let gsq = [g[0], g[1], g[2] / eps + g[3] / (eps * eps), g[3] / (eps * eps)];
    let pi2 = PI * PI;
    let trig = |x: C| {
        let s = (x * PI).sin();
        (s * s).inv() * pi2
    };
    let one_body_ell = |u: C| -> Result<C> {
        let mut v = c(0.0, 0.0);
        for (n, gn) in gsq.iter().enumerate() {
            v += gn * ctx.p_centered(u + ctx.omega(n))?;
        }
        Ok(v)
    };
    let one_body_lim = |u: C| {
        let cs = (u * PI).cos();
        g[0] * trig(u) + g[1] * pi2 / (cs * cs) + g[2] * tt * (pi2 / 2.0) * (u * 2.0 * PI).cos()
            - g[3] * tt * tt * (pi2 / 8.0) * (u * 4.0 * PI).cos()
    };
    let mut diffs = Vec::new();
    for k in 0..24 {
        let u1 = c(0.06 + 0.017 * k as f64, 0.03 * ((k % 4) as f64 - 1.5));
        let u2 = c(-0.41 + 0.013 * k as f64, 0.02 * ((k % 3) as f64 - 1.0));
        let ell =
            one_body_ell(u1)? + one_body_ell(u2)? + g[4] * (ctx.p_centered(u1 - u2)? + ctx.p_centered(u1 + u2)?);
        let lim = one_body_lim(u1) + one_body_lim(u2) + g[4] * (trig(u1 - u2) + trig(u1 + u2));
        diffs.push(ell - lim);
    }
    let mean = diffs.iter().sum::<C>() / diffs.len() as f64;
    Ok(max_by(diffs.iter().map(|d| (d - mean).norm())))
}

/// `|t(τ) − 1 − εt̃|` under `16 e^{πiτ} = εt̃`.
fn elliptic_time_defect(eps: f64) -> Result<f64> {
    let tt = TILDE.t;
    let tau = (tt * eps / 16.0).ln() / c(0.0, PI);
    let ctx = EllipticContext::new(tau)?;
    Ok((ctx.modular_t_minus_one() - tt * eps).norm())
}

fn order_report(id: String, eps: &[f64], defects: &[f64], order: u32) -> CheckReport {
    let mut worst: f64 = 1.0;
    let mut ratios = Vec::new();
    for i in 1..eps.len() {
        let expect = (eps[i - 1] / eps[i]).powi(order as i32);
        let r = defects[i - 1] / defects[i];
        ratios.push(r);
        let dev = if r.is_finite() && r > 0.0 { (r / expect).max(expect / r) } else { f64::MAX };
        worst = worst.max(dev);
    }
    CheckReport::new(id, worst, 3.0, eps.len())
        .with("eps", format!("{eps:?}"))
        .with("defects", format!("{defects:?}"))
        .with("ratios", format!("{ratios:?}"))
        .with("expected_order", order)
}

/// Defects of `schedule` at each `ε` and the check that they shrink like
/// `ε^expected_order`.
pub fn run_degeneration_suite(schedule: &DegenerationSchedule, eps_list: &[f64]) -> Result<Vec<CheckReport>> {
    schedule.validate()?;
    if eps_list.len() < 2 || eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::ScheduleMismatch("eps list must be positive and strictly decreasing".into()));
    }
    let base = format!("degeneration/{}", schedule.name());
    let subs_meta = schedule.substitutions.iter().map(|(a, b)| format!("{a} = {b}")).collect::<Vec<_>>().join("; ");
    let mut out = Vec::new();
    match (schedule.source, schedule.target) {
        (Model::PainleveSix, Model::PainleveFive) => {
            let d: Vec<f64> = eps_list.iter().map(|&e| pvi_pv_defect(e)).collect();
            out.push(order_report(format!("{base}/order"), eps_list, &d, schedule.expected_order));
        }
        (Model::Elliptic, Model::Hyperbolic) => {
            let d = eps_list.iter().map(|&e| elliptic_potential_residual(e)).collect::<Result<Vec<_>>>()?;
            let last = *eps_list.last().expect("non-empty");
            out.push(
                CheckReport::new(format!("{base}/potential"), *d.last().expect("non-empty"), 1e-3, 24)
                    .with("eps", last),
            );
            out.push(order_report(format!("{base}/order"), eps_list, &d, schedule.expected_order));
            let td = eps_list.iter().map(|&e| elliptic_time_defect(e)).collect::<Result<Vec<_>>>()?;
            out.push(order_report(format!("{base}/time_map"), eps_list, &td, 2));
        }
        _ => {
            let d = eps_list
                .iter()
                .map(|&e| {
                    let lim = limit_for(schedule, e)
                        .ok_or_else(|| Error::ScheduleMismatch(format!("no numeric limit for {}", schedule.name())))?;
                    calogero_defect(&lim)
                })
                .collect::<Result<Vec<_>>>()?;
            out.push(order_report(format!("{base}/order"), eps_list, &d, schedule.expected_order));
        }
    }
    Ok(out.into_iter().map(|r| r.with("substitutions", &subs_meta)).collect())
}

/// Suites selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Identities,
    Correspondence,
    Dynamic,
    Degeneration,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "identities" => Suite::Identities,
            "correspondence" => Suite::Correspondence,
            "dynamic" => Suite::Dynamic,
            "degeneration" => Suite::Degeneration,
            "all" => Suite::All,
            other => return Err(format!("unknown suite `{other}`")),
        })
    }
}

/// Gradient checks plus vector-field correspondence at ranks 1 and 3.
pub fn correspondence_reports(seed: u64) -> Vec<CheckReport> {
    let mut out = Vec::new();
    for eq in Equation::ALL {
        for side in [Side::Painleve, Side::Calogero] {
            for rank in [1, 3] {
                out.push(run_gradient_check(eq, side, rank, 30, seed));
            }
        }
        let aux = default_aux(eq, seed);
        out.push(run_correspondence_suite(eq, 1, &aux, c(0.0, 0.0), 100, seed));
        out.push(run_correspondence_suite(eq, 3, &aux, c(0.7, 0.1), 50, seed));
    }
    out
}

/// Two-path endpoint checks and second-order residuals.
pub fn dynamic_reports(seed: u64) -> Vec<CheckReport> {
    let ctx = EllipticContext::new(c(0.1, 1.2)).expect("valid tau");
    let mut out = Vec::new();
    for eq in Equation::ALL {
        let aux = default_aux(eq, seed);
        let init = dynamic_initial(eq, &ctx);
        let id = format!("dynamic/{}/rank1", eq.cli_name());
        out.push(report_or_fail(id, 1e-6, run_dynamic_correspondence(eq, 1, &aux, &init, dynamic_arc(eq), Some(&ctx))));
        out.push(run_residual_check(eq, seed));
    }
    out
}

pub fn degeneration_reports() -> Vec<CheckReport> {
    let mut out = Vec::new();
    for s in DegenerationSchedule::all() {
        let id = format!("degeneration/{}/order", s.name());
        match run_degeneration_suite(&s, &s.default_eps()) {
            Ok(r) => out.extend(r),
            Err(e) => out.push(CheckReport::failed(id, 3.0, &e)),
        }
    }
    out
}

/// Runs one suite and returns its reports sorted by `check_id`.
pub fn run_suite(suite: Suite, seed: u64) -> Vec<CheckReport> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Identities | Suite::All) {
        out.extend(run_identity_suite(&default_contexts(), seed));
    }
    if matches!(suite, Suite::Correspondence | Suite::All) {
        out.extend(correspondence_reports(seed));
    }
    if matches!(suite, Suite::Dynamic | Suite::All) {
        out.extend(dynamic_reports(seed));
    }
    if matches!(suite, Suite::Degeneration | Suite::All) {
        out.extend(degeneration_reports());
    }
    out.sort_by(|a, b| a.check_id.cmp(&b.check_id));
    out
}
