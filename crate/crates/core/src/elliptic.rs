//! Weierstrass ℘ with periods `1` and `τ`, the theta function
//! `ϑ(u) = Σ exp(πiτn² + 2πinu)`, and the auxiliary function
//! `f(u) = (℘(u) − e₁)/(e₂ − e₁)` together with its `u`- and `τ`-derivatives.
//!
//! ℘ is summed as a single series over lattice rows,
//!
//! ```text
//! ℘(u) = Σₙ π²/sin²(π(u + nτ)) − π²/3 − Σ_{n≥1} 2π²/sin²(πnτ),
//! ```
//!
//! which converges like `e^{−2π|n| Im τ}` once `u` has been reduced to the
//! fundamental cell. Rows far from the real axis are evaluated through
//! `w = e^{±2πiz}` so that they never overflow and keep full relative
//! precision when they are tiny.

use std::sync::OnceLock;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{is_finite, real, to_c64, two_pi_i, Real};

pub const DEFAULT_LATTICE_ORDER: usize = 24;
pub const DEFAULT_THETA_ORDER: usize = 16;

/// Absolute distance (after lattice reduction) below which an argument is a pole.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// Values of `℘ + π²/3` at the three half periods.
#[derive(Debug, Clone, Copy)]
struct HalfPeriods<T: Real> {
    centered: [Complex<T>; 3],
}

/// Modular parameter plus truncation orders; caches `e₁, e₂, e₃`.
///
/// The cache is a `OnceLock`, so a context may be shared between threads.
#[derive(Debug, Clone)]
pub struct EllipticContext<T: Real> {
    tau: Complex<T>,
    lattice_order: usize,
    theta_order: usize,
    cache: OnceLock<HalfPeriods<T>>,
}

/// `f`, `∂f/∂u` and `∂f/∂τ` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FDerivatives<T: Real> {
    pub f: Complex<T>,
    pub f_u: Complex<T>,
    pub f_tau: Complex<T>,
}

/// `u = reduced + m + nτ` with `reduced` in the cell centred on the origin.
#[derive(Debug, Clone, Copy)]
pub struct LatticeReduction<T: Real> {
    pub reduced: Complex<T>,
    pub m: T,
    pub n: T,
}

#[inline]
fn pi<T: Real>() -> T {
    T::PI()
}

/// `1/sin²(πz)`, evaluated in exponential form away from the real axis.
pub(crate) fn inv_sin2<T: Real>(z: Complex<T>) -> Complex<T> {
    let one = T::one();
    if z.im.abs() < one {
        let s = (z * pi::<T>()).sin();
        (s * s).inv()
    } else {
        let w = exp_2pi_i(if z.im > T::zero() { z } else { -z });
        let d = real(one) - w;
        -w * T::lit(4.0) / (d * d)
    }
}

/// `d/dz [1/sin²(πz)]`.
pub(crate) fn inv_sin2_prime<T: Real>(z: Complex<T>) -> Complex<T> {
    let one = T::one();
    let p = pi::<T>();
    if z.im.abs() < one {
        let s = (z * p).sin();
        let c = (z * p).cos();
        -c * (p + p) / (s * s * s)
    } else {
        let upper = z.im > T::zero();
        let w = exp_2pi_i(if upper { z } else { -z });
        let d = real(one) - w;
        let mag = Complex::new(T::zero(), T::lit(8.0) * p) * w * (real(one) + w) / (d * d * d);
        if upper {
            -mag
        } else {
            mag
        }
    }
}

#[inline]
fn exp_2pi_i<T: Real>(z: Complex<T>) -> Complex<T> {
    (two_pi_i::<T>() * z).exp()
}

impl<T: Real> EllipticContext<T> {
    pub fn new(tau: Complex<T>) -> Result<Self> {
        Self::with_orders(tau, DEFAULT_LATTICE_ORDER, DEFAULT_THETA_ORDER)
    }

    pub fn with_orders(tau: Complex<T>, lattice_order: usize, theta_order: usize) -> Result<Self> {
        if !(tau.im > T::zero()) || !is_finite(tau) {
            return Err(Error::BadContext(format!("Im tau must be positive, got tau = {}", to_c64(tau))));
        }
        if lattice_order == 0 || theta_order == 0 {
            return Err(Error::BadContext("truncation orders must be >= 1".into()));
        }
        Ok(Self { tau, lattice_order, theta_order, cache: OnceLock::new() })
    }

    /// Same truncation orders, different modulus.
    pub fn at_tau(&self, tau: Complex<T>) -> Result<Self> {
        Self::with_orders(tau, self.lattice_order, self.theta_order)
    }

    pub fn tau(&self) -> Complex<T> {
        self.tau
    }

    pub fn lattice_order(&self) -> usize {
        self.lattice_order
    }

    pub fn theta_order(&self) -> usize {
        self.theta_order
    }

    /// `ω₀ = 0, ω₁ = 1/2, ω₂ = −(1+τ)/2, ω₃ = τ/2`.
    pub fn omega(&self, n: usize) -> Complex<T> {
        let half = T::lit(0.5);
        match n {
            0 => Complex::new(T::zero(), T::zero()),
            1 => real(half),
            2 => -(self.tau + T::one()) * half,
            3 => self.tau * half,
            _ => panic!("half-period index must be in 0..=3, got {n}"),
        }
    }

    pub fn reduce(&self, u: Complex<T>) -> LatticeReduction<T> {
        let n = (u.im / self.tau.im).round();
        let shifted = u - self.tau * n;
        let m = shifted.re.round();
        LatticeReduction { reduced: shifted - real(m), m, n }
    }

    /// Distance from `u` to the nearest lattice point.
    pub fn lattice_distance(&self, u: Complex<T>) -> T {
        let r = self.reduce(u).reduced;
        let mut best = T::infinity();
        for m in -1..=1 {
            for n in -1..=1 {
                let pt = self.tau * T::lit(n as f64) + T::lit(m as f64);
                let d = (r - pt).norm();
                if d < best {
                    best = d;
                }
            }
        }
        best
    }

    fn check_pole(&self, u: Complex<T>) -> Result<Complex<T>> {
        if !is_finite(u) {
            return Err(Error::PoleAt(to_c64(u)));
        }
        let r = self.reduce(u).reduced;
        if self.lattice_distance(r) < T::lit(POLE_TOLERANCE) {
            return Err(Error::PoleAt(to_c64(u)));
        }
        Ok(r)
    }

    /// `Σ_{n≥1} 1/sin²(πnτ)`.
    fn constant_series(&self) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for n in (1..=self.lattice_order).rev() {
            acc = acc + inv_sin2(self.tau * T::lit(n as f64));
        }
        acc
    }

    /// Rows `n ≠ 0` of the ℘ series at `u` (no reduction), including the
    /// constant series; multiplied by π².
    fn tail_rows(&self, u: Complex<T>) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for n in (1..=self.lattice_order).rev() {
            let nt = self.tau * T::lit(n as f64);
            acc = acc + inv_sin2(u + nt) + inv_sin2(u - nt);
        }
        let two = T::lit(2.0);
        (acc - self.constant_series() * two) * (pi::<T>() * pi::<T>())
    }

    /// `℘(u) + π²/3`.
    ///
    /// Far from the real axis this quantity is exponentially small, and it is
    /// returned with full relative precision there; `weierstrass_p` cannot
    /// offer that because of the `−π²/3` offset.
    pub fn p_centered(&self, u: Complex<T>) -> Result<Complex<T>> {
        let r = self.check_pole(u)?;
        Ok(inv_sin2(r) * (pi::<T>() * pi::<T>()) + self.tail_rows(r))
    }

    /// `℘(u) − π²/sin²(πu) + π²/3` at the given (unreduced) `u`: the part of
    /// the row series that vanishes as `Im τ → ∞`.
    pub fn p_tail(&self, u: Complex<T>) -> Complex<T> {
        self.tail_rows(u)
    }

    pub fn weierstrass_p(&self, u: Complex<T>) -> Result<Complex<T>> {
        let p = pi::<T>();
        Ok(self.p_centered(u)? - real(p * p / T::lit(3.0)))
    }

    pub fn weierstrass_p_prime(&self, u: Complex<T>) -> Result<Complex<T>> {
        let r = self.check_pole(u)?;
        let mut acc = Complex::new(T::zero(), T::zero());
        for n in (1..=self.lattice_order).rev() {
            let nt = self.tau * T::lit(n as f64);
            acc = acc + inv_sin2_prime(r + nt) + inv_sin2_prime(r - nt);
        }
        acc = acc + inv_sin2_prime(r);
        Ok(acc * (pi::<T>() * pi::<T>()))
    }

    fn half_periods(&self) -> &HalfPeriods<T> {
        self.cache.get_or_init(|| {
            let centered =
                [1, 2, 3].map(|k| self.p_centered(self.omega(k)).expect("half periods are never lattice points"));
            HalfPeriods { centered }
        })
    }

    /// `(e₁, e₂, e₃) = (℘(ω₁), ℘(ω₂), ℘(ω₃))`, computed once per context.
    pub fn half_period_values(&self) -> (Complex<T>, Complex<T>, Complex<T>) {
        let c = self.half_periods().centered;
        let off = real(pi::<T>() * pi::<T>() / T::lit(3.0));
        (c[0] - off, c[1] - off, c[2] - off)
    }

    /// `e_k + π²/3` for `k = 1, 2, 3`.
    pub fn half_period_centered(&self, k: usize) -> Complex<T> {
        assert!((1..=3).contains(&k), "half-period index must be 1, 2 or 3");
        self.half_periods().centered[k - 1]
    }

    /// `e₂ − e₁`.
    pub fn e21(&self) -> Complex<T> {
        let c = self.half_periods().centered;
        c[1] - c[0]
    }

    /// `t = (e₃ − e₁)/(e₂ − e₁)`, written as `1 + (e₃ − e₂)/(e₂ − e₁)` so that
    /// `t − 1` keeps its relative precision for large `Im τ`.
    pub fn modular_t(&self) -> Complex<T> {
        real(T::one()) + self.modular_t_minus_one()
    }

    /// `t − 1 = (e₃ − e₂)/(e₂ − e₁)`, exponentially small for large `Im τ`.
    pub fn modular_t_minus_one(&self) -> Complex<T> {
        let c = self.half_periods().centered;
        (c[2] - c[1]) / (c[1] - c[0])
    }

    /// `℘(u + ω_n)`, `n ∈ 0..=3`.
    pub fn shifted_p(&self, u: Complex<T>, n: usize) -> Result<Complex<T>> {
        if n > 3 {
            return Err(Error::BadContext(format!("half-period index {n} out of range")));
        }
        self.weierstrass_p(u + self.omega(n))
    }

    pub fn shifted_p_prime(&self, u: Complex<T>, n: usize) -> Result<Complex<T>> {
        if n > 3 {
            return Err(Error::BadContext(format!("half-period index {n} out of range")));
        }
        self.weierstrass_p_prime(u + self.omega(n))
    }

    fn theta_terms<F>(&self, u: Complex<T>, weight: F) -> Complex<T>
    where
        F: Fn(T) -> Complex<T>,
    {
        let ipi = Complex::new(T::zero(), pi::<T>());
        let mut acc = Complex::new(T::zero(), T::zero());
        let m = self.theta_order as i64;
        for k in (1..=m).rev() {
            for n in [k, -k] {
                let nf = T::lit(n as f64);
                let term = (ipi * self.tau * (nf * nf) + ipi * u * (nf + nf)).exp();
                acc = acc + weight(nf) * term;
            }
        }
        acc + weight(T::zero())
    }

    /// `ϑ(u) = Σ_{|n|≤M} exp(πiτn² + 2πinu)`.
    pub fn theta(&self, u: Complex<T>) -> Complex<T> {
        self.theta_terms(u, |_| real(T::one()))
    }

    /// `∂ϑ/∂u`, term by term.
    pub fn theta_du(&self, u: Complex<T>) -> Complex<T> {
        let tpi = two_pi_i::<T>();
        self.theta_terms(u, |n| tpi * n)
    }

    /// `∂²ϑ/∂u²`, term by term.
    pub fn theta_du2(&self, u: Complex<T>) -> Complex<T> {
        let tpi = two_pi_i::<T>();
        self.theta_terms(u, |n| tpi * tpi * (n * n))
    }

    /// `∂ϑ/∂τ`, term by term.
    pub fn theta_dtau(&self, u: Complex<T>) -> Complex<T> {
        let ipi = Complex::new(T::zero(), pi::<T>());
        self.theta_terms(u, |n| ipi * (n * n))
    }

    /// `ϑ′(v)/ϑ(v)`, using `ϑ(v + τ) = e^{−πiτ−2πiv} ϑ(v)` to bring `v` into
    /// the fundamental strip before summing.
    pub fn theta_log_derivative(&self, v: Complex<T>) -> Complex<T> {
        let k = (v.im / self.tau.im).round();
        let v0 = v - self.tau * k;
        self.theta_du(v0) / self.theta(v0) - two_pi_i::<T>() * k
    }

    /// `(log ϑ(v))″`, which is periodic in both `1` and `τ`.
    pub fn theta_log_second_derivative(&self, v: Complex<T>) -> Complex<T> {
        let k = (v.im / self.tau.im).round();
        let v0 = v - self.tau * k;
        let th = self.theta(v0);
        let d1 = self.theta_du(v0) / th;
        self.theta_du2(v0) / th - d1 * d1
    }

    /// `f(u)`, `f′(u)` and `∂f/∂τ`. The last uses
    /// `2πi f_τ/f′ = ϑ′(u + ω₁)/ϑ(u + ω₁)`.
    pub fn f_and_derivatives(&self, u: Complex<T>) -> Result<FDerivatives<T>> {
        let e21 = self.e21();
        let pc = self.p_centered(u)?;
        let pp = self.weierstrass_p_prime(u)?;
        if pp.norm() < T::lit(1e-12) {
            return Err(Error::HalfPeriodSingularity(to_c64(u)));
        }
        let f = (pc - self.half_period_centered(1)) / e21;
        let f_u = pp / e21;
        let h = self.theta_log_derivative(u + self.omega(1));
        Ok(FDerivatives { f, f_u, f_tau: f_u * h / two_pi_i::<T>() })
    }

    /// `f(u) = (℘(u) − e₁)/(e₂ − e₁)` alone.
    pub fn f(&self, u: Complex<T>) -> Result<Complex<T>> {
        Ok((self.p_centered(u)? - self.half_period_centered(1)) / self.e21())
    }
}

/// Leading large-`Im τ` behaviour of ℘ and of the half-period values.
pub mod asymptotics {
    use num_complex::Complex;

    use crate::scalar::{real, Real};

    fn nome<T: Real>(tau: Complex<T>, power: f64) -> Complex<T> {
        (Complex::new(T::zero(), T::PI() * T::lit(power)) * tau).exp()
    }

    /// Approximation of `℘(u + ω_n)` for large `Im τ`:
    /// `n = 0, 1` keep the trigonometric leading term, `n = 2, 3` keep the
    /// `e^{πiτ}` correction.
    pub fn asymptotic_p<T: Real>(u: Complex<T>, n: usize, tau: Complex<T>) -> Complex<T> {
        let p2 = T::PI() * T::PI();
        let third = real(p2 / T::lit(3.0));
        let pu = u * T::PI();
        let q = nome(tau, 1.0);
        let cos2 = (pu + pu).cos();
        match n {
            0 => {
                let s = pu.sin();
                (s * s).inv() * p2 - third
            }
            1 => {
                let c = pu.cos();
                (c * c).inv() * p2 - third
            }
            2 => -third + cos2 * q * (T::lit(8.0) * p2),
            3 => -third - cos2 * q * (T::lit(8.0) * p2),
            _ => panic!("half-period index must be in 0..=3, got {n}"),
        }
    }

    /// `℘(u + ω₂) + ℘(u + ω₃) ≈ −2π²/3 + (16π² − 32π² cos 4πu) e^{2πiτ}`.
    pub fn asymptotic_p23_sum<T: Real>(u: Complex<T>, tau: Complex<T>) -> Complex<T> {
        let p2 = T::PI() * T::PI();
        let q2 = nome(tau, 2.0);
        let cos4 = (u * (T::lit(4.0) * T::PI())).cos();
        real(-p2 * T::lit(2.0 / 3.0)) + q2 * (real(T::lit(16.0) * p2) - cos4 * (T::lit(32.0) * p2))
    }

    /// Coefficient of `e^{2πiτ}` in the asymptotic sum above.
    pub fn p23_sum_coefficient<T: Real>(u: Complex<T>) -> Complex<T> {
        let p2 = T::PI() * T::PI();
        let cos4 = (u * (T::lit(4.0) * T::PI())).cos();
        real(T::lit(16.0) * p2) - cos4 * (T::lit(32.0) * p2)
    }

    /// Leading approximation to `e_k`.
    pub fn asymptotic_e<T: Real>(k: usize, tau: Complex<T>) -> Complex<T> {
        let p2 = T::PI() * T::PI();
        match k {
            1 => real(p2 * T::lit(2.0 / 3.0)) + nome(tau, 2.0) * (T::lit(16.0) * p2),
            2 => real(-p2 / T::lit(3.0)) + nome(tau, 1.0) * (T::lit(8.0) * p2),
            3 => real(-p2 / T::lit(3.0)) - nome(tau, 1.0) * (T::lit(8.0) * p2),
            _ => panic!("half-period index must be 1, 2 or 3, got {k}"),
        }
    }

    /// Leading behaviour `t ≈ 1 + 16 e^{πiτ}` of the modular time.
    pub fn asymptotic_t<T: Real>(tau: Complex<T>) -> Complex<T> {
        real(T::one()) + nome(tau, 1.0) * T::lit(16.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;
    use num_complex::Complex64;

    fn ctx(re: f64, im: f64) -> EllipticContext<f64> {
        EllipticContext::new(Complex64::new(re, im)).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn periodic_and_even() {
        let c = ctx(0.0, 2.0);
        let u = Complex64::new(0.23, 0.11);
        let p = c.weierstrass_p(u).unwrap();
        assert!(rel(c.weierstrass_p(u + 1.0).unwrap(), p) < 1e-12);
        assert!(rel(c.weierstrass_p(-u).unwrap(), p) < 1e-12);
    }

    #[test]
    fn trigonometric_limit_at_large_im_tau() {
        let c = ctx(0.0, 8.0);
        let u = Complex64::new(0.3, 0.0);
        let s = (u * std::f64::consts::PI).sin();
        let pi2 = std::f64::consts::PI.powi(2);
        let approx = pi2 / (s * s) - pi2 / 3.0;
        assert!((c.weierstrass_p(u).unwrap() - approx).norm() < 1e-10);
    }

    #[test]
    fn pole_is_an_error() {
        let c = ctx(0.1, 1.2);
        let tau = c.tau();
        assert!(matches!(c.weierstrass_p(tau + 2.0), Err(Error::PoleAt(_))));
        assert!(matches!(c.weierstrass_p_prime(Complex64::new(1e-13, 0.0)), Err(Error::PoleAt(_))));
        assert!(c.weierstrass_p(Complex64::new(1e-6, 0.0)).is_ok());
    }

    #[test]
    fn bad_context_rejected() {
        assert!(matches!(EllipticContext::new(Complex64::new(0.3, 0.0)), Err(Error::BadContext(_))));
        assert!(matches!(EllipticContext::new(Complex64::new(0.3, -1.0)), Err(Error::BadContext(_))));
        assert!(EllipticContext::with_orders(Complex64::new(0.0, 1.0), 0, 4).is_err());
    }

    #[test]
    fn p_prime_vanishes_at_half_period_and_is_odd() {
        let c = ctx(0.0, 2.0);
        assert!(c.weierstrass_p_prime(c.omega(1)).unwrap().norm() < 1e-10);
        let u = Complex64::new(0.2, 0.3);
        let a = c.weierstrass_p_prime(u).unwrap();
        let b = c.weierstrass_p_prime(-u).unwrap();
        assert!((a + b).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn half_periods_sum_to_zero_and_cache() {
        let c = ctx(0.0, 1.3);
        let (e1, e2, e3) = c.half_period_values();
        assert!((e1 + e2 + e3).norm() < 1e-10);
        let again = c.half_period_values();
        assert_eq!((e1, e2, e3), again);
    }

    #[test]
    fn shift_zero_is_plain_p() {
        let c = ctx(0.2, 1.1);
        let u = Complex64::new(0.31, 0.07);
        assert_eq!(c.shifted_p(u, 0).unwrap(), c.weierstrass_p(u).unwrap());
        assert!(c.shifted_p(u, 4).is_err());
    }

    #[test]
    fn theta_is_one_periodic() {
        let c = ctx(0.1, 1.0);
        let u = Complex64::new(0.4, 0.1);
        assert!(rel(c.theta(u + 1.0), c.theta(u)) < 1e-13);
    }

    #[test]
    fn theta_log_derivative_reduction_matches_direct() {
        let c = ctx(0.2, 1.4);
        let v = Complex64::new(0.37, 0.9);
        let direct = c.theta_du(v) / c.theta(v);
        assert!(rel(c.theta_log_derivative(v), direct) < 1e-11);
    }

    #[test]
    fn f_at_omega3_is_modular_t() {
        let c = ctx(0.15, 1.2);
        let f = c.f(c.omega(3)).unwrap();
        assert!(rel(f, c.modular_t()) < 1e-12);
    }

    #[test]
    fn f_tau_rejects_half_periods() {
        let c = ctx(0.0, 1.0);
        assert!(matches!(c.f_and_derivatives(c.omega(1)), Err(Error::HalfPeriodSingularity(_))));
    }

    #[test]
    fn single_precision_agrees_loosely() {
        let c32 = EllipticContext::<f32>::new(cx(0.1, 1.3)).unwrap();
        let c64 = ctx(0.1, 1.3);
        let u32v = cx::<f32>(0.21, 0.17);
        let a = c32.weierstrass_p(u32v).unwrap();
        let b = c64.weierstrass_p(Complex64::new(0.21, 0.17)).unwrap();
        let a64 = Complex64::new(a.re as f64, a.im as f64);
        assert!(rel(a64, b) < 1e-4);
    }

    #[test]
    fn asymptotic_p1_matches_formula() {
        let u = Complex64::new(0.2, 0.0);
        let pi2 = std::f64::consts::PI.powi(2);
        let expect = pi2 / (0.2 * std::f64::consts::PI).cos().powi(2) - pi2 / 3.0;
        let got = asymptotics::asymptotic_p(u, 1, Complex64::new(0.0, 5.0));
        assert!((got.re - expect).abs() < 1e-12 && got.im.abs() < 1e-12);
    }
}
