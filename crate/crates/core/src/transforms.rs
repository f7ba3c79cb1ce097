//! Canonical maps `(q, p, T) ↦ (λ, μ, t)` between the Calogero and Painlevé
//! sides, their inverses, and the PVI time map `τ ↦ t`.
//!
//! Every map has the shape `λ = Λ(q, T)`, `μ = A(q, T) p + B(q, T)`, so the
//! inverse is a root of `Λ` followed by an affine solve for `p`.

use std::borrow::Cow;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::elliptic::EllipticContext;
use crate::error::{Error, Result};
use crate::scalar::{real, to_c64, two_pi_i, Real};
use crate::systems::{canonical_vector_field, AuxParams, Equation, PhaseState, Side, SystemDescriptor};

const NEWTON_STEPS: usize = 50;
const BRANCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    CalogeroToPainleve,
    PainleveToCalogero,
}

/// `c` in `μ dλ − H dt = c (p dq − 𝓗 dT) + exact`.
pub fn transform_constant<T: Real>(eq: Equation) -> T {
    T::lit(match eq {
        Equation::VI | Equation::II | Equation::I => 1.0,
        Equation::V | Equation::III => 0.5,
        Equation::IV => 0.25,
    })
}

fn ctx_at<'a, T: Real>(ctx: Option<&'a EllipticContext<T>>, tau: Complex<T>) -> Result<Cow<'a, EllipticContext<T>>> {
    match ctx {
        Some(c) if c.tau() == tau => Ok(Cow::Borrowed(c)),
        Some(c) => Ok(Cow::Owned(c.at_tau(tau)?)),
        None => Ok(Cow::Owned(EllipticContext::new(tau)?)),
    }
}

fn map_pole(e: Error) -> Error {
    match e {
        Error::PoleAt(z) | Error::HalfPeriodSingularity(z) => Error::MapSingularity(z),
        other => other,
    }
}

/// `t = (e₃ − e₁)/(e₂ − e₁)` at `τ`, with the truncation orders of `ctx`.
pub fn time_map_pvi<T: Real>(tau: Complex<T>, ctx: &EllipticContext<T>) -> Result<Complex<T>> {
    Ok(ctx_at(Some(ctx), tau)?.modular_t())
}

/// `dτ/dt = πi / (t (t − 1) (e₂ − e₁))`.
pub fn jacobian_dtau_dt<T: Real>(tau: Complex<T>, ctx: &EllipticContext<T>) -> Result<Complex<T>> {
    let c = ctx_at(Some(ctx), tau)?;
    let t = c.modular_t();
    let one = real(T::one());
    Ok(Complex::new(T::zero(), T::PI()) / (t * (t - one) * c.e21()))
}

/// Newton inversion of [`time_map_pvi`] started at `tau_seed`.
pub fn time_map_pvi_inverse<T: Real>(
    t: Complex<T>,
    tau_seed: Complex<T>,
    ctx: &EllipticContext<T>,
) -> Result<Complex<T>> {
    let one = real(T::one());
    let tol = T::lit(BRANCH_TOL);
    if t.norm() < tol || (t - one).norm() < tol || !(tau_seed.im > T::zero()) {
        return Err(Error::NoConvergence(to_c64(tau_seed)));
    }
    let target = T::lit(1e-13) * T::one().max(t.norm());
    let mut tau = tau_seed;
    for _ in 0..NEWTON_STEPS {
        let c = ctx.at_tau(tau)?;
        let r = c.modular_t() - t;
        if r.norm() <= target {
            return Ok(tau);
        }
        let step = r * jacobian_dtau_dt(tau, &c)?;
        let mut damp = T::one();
        while !((tau - step * damp).im > T::zero()) {
            damp = damp * T::lit(0.5);
            if damp < T::lit(1e-6) {
                return Err(Error::NoConvergence(to_c64(tau_seed)));
            }
        }
        tau = tau - step * damp;
    }
    let c = ctx.at_tau(tau)?;
    if (c.modular_t() - t).norm() <= T::lit(1e-10) * T::one().max(t.norm()) {
        Ok(tau)
    } else {
        Err(Error::NoConvergence(to_c64(tau_seed)))
    }
}

/// `λ(q)`; `time` is `τ` for PVI and `t` otherwise.
pub fn lambda_of_q<T: Real>(
    eq: Equation,
    q: Complex<T>,
    time: Complex<T>,
    ctx: Option<&EllipticContext<T>>,
) -> Result<Complex<T>> {
    let h = T::lit(0.5);
    match eq {
        Equation::VI => ctx_at(ctx, time)?.f(q).map_err(map_pole),
        Equation::V => {
            let s = (q * h).sinh();
            if s.norm() < T::lit(BRANCH_TOL) {
                return Err(Error::MapSingularity(to_c64(q)));
            }
            let ct = (q * h).cosh() / s;
            Ok(ct * ct)
        }
        Equation::IV => Ok(q * q * T::lit(0.25)),
        Equation::III => Ok(q.exp()),
        Equation::II | Equation::I => Ok(q),
    }
}

/// `(A, B)` with `μ = A p + B` at `q`.
pub fn mu_affine<T: Real>(
    eq: Equation,
    q: Complex<T>,
    time: Complex<T>,
    aux: &AuxParams<T>,
    ctx: Option<&EllipticContext<T>>,
) -> Result<(Complex<T>, Complex<T>)> {
    let n = |s: &str| aux.need(eq, s);
    let h = T::lit(0.5);
    let one = real(T::one());
    let zero_tol = T::lit(BRANCH_TOL);
    let check = |z: Complex<T>| {
        if z.norm() < zero_tol {
            Err(Error::MapSingularity(to_c64(q)))
        } else {
            Ok(())
        }
    };
    match eq {
        Equation::VI => {
            let (k0, k1, th) = (n("kappa0")?, n("kappa1")?, n("theta")?);
            let c = ctx_at(ctx, time)?;
            let d = c.f_and_derivatives(q).map_err(map_pole)?;
            let e21 = c.e21();
            let pp = d.f_u * e21;
            let t = c.modular_t();
            let lam = d.f;
            check(lam)?;
            check(lam - one)?;
            check(lam - t)?;
            let a = e21 / pp;
            let b = e21 * e21 / (pp * pp) * d.f_tau * two_pi_i::<T>()
                + (k0 / lam + k1 / (lam - one) + (th - one) / (lam - t)) * h;
            Ok((a, b))
        }
        Equation::V => {
            let (k0, t1, e1) = (n("kappa0")?, n("theta1")?, n("eta1")?);
            let sh = (q * h).sinh();
            check(sh)?;
            let s = -(q * h).cosh() / sh;
            let lam = s * s;
            check(s)?;
            let lm = lam - one;
            check(lm)?;
            Ok(((s * lm * T::lit(2.0)).inv(), (k0 / lam + t1 / lm - e1 * time / (lm * lm)) * h))
        }
        Equation::IV => {
            let k0 = n("kappa0")?;
            let s = q * h;
            check(s)?;
            let lam = s * s;
            Ok(((s * T::lit(4.0)).inv(), (lam + time * T::lit(2.0) + k0 * T::lit(2.0) / lam) * T::lit(0.25)))
        }
        Equation::III => {
            let (ei, t0, e0) = (n("eta_inf")?, n("theta0")?, n("eta0")?);
            let lam = q.exp();
            Ok(((lam * T::lit(2.0)).inv(), (ei + t0 / lam - e0 * time / (lam * lam)) * h))
        }
        Equation::II => Ok((one, q * q + time * h)),
        Equation::I => Ok((one, real(T::zero()))),
    }
}

/// `μ(q, p)`.
pub fn mu_of_pq<T: Real>(
    eq: Equation,
    q: Complex<T>,
    p: Complex<T>,
    time: Complex<T>,
    aux: &AuxParams<T>,
    ctx: Option<&EllipticContext<T>>,
) -> Result<Complex<T>> {
    let (a, b) = mu_affine(eq, q, time, aux, ctx)?;
    Ok(a * p + b)
}

fn nearest<T: Real>(cands: impl IntoIterator<Item = Complex<T>>, hint: Complex<T>) -> Complex<T> {
    let mut best: Option<(T, Complex<T>)> = None;
    for c in cands {
        let d = (c - hint).norm();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, c));
        }
    }
    best.expect("candidate list is never empty").1
}

/// Inverse of [`lambda_of_q`]; picks the preimage nearest `branch_hint`, or a
/// principal one without a hint.
pub fn q_of_lambda<T: Real>(
    eq: Equation,
    lambda: Complex<T>,
    time: Complex<T>,
    ctx: Option<&EllipticContext<T>>,
    branch_hint: Option<Complex<T>>,
) -> Result<Complex<T>> {
    let tol = T::lit(BRANCH_TOL);
    let one = real(T::one());
    let tpi = two_pi_i::<T>();
    match eq {
        Equation::VI => {
            let c = ctx_at(ctx, time)?;
            let t = c.modular_t();
            // Branch values are the images of the half periods.
            let branch = [(lambda, 1), (lambda - one, 2), (lambda - t, 3)].into_iter().find(|(d, _)| d.norm() < tol);
            let q0 = match branch {
                Some((_, k)) => c.omega(k),
                None => invert_f(&c, lambda)?,
            };
            Ok(match branch_hint {
                None => q0,
                Some(hint) => {
                    let tau = c.tau();
                    let mut cands = Vec::with_capacity(2);
                    for base in [q0, -q0] {
                        let r = c.reduce(hint - base);
                        cands.push(base + tau * r.n + real(r.m));
                    }
                    nearest(cands, hint)
                }
            })
        }
        Equation::V => {
            if lambda.norm() < tol || (lambda - one).norm() < tol {
                return Err(Error::BranchCut(to_c64(lambda)));
            }
            let s = lambda.sqrt();
            let q0 = ((s - one) / (s + one)).ln();
            Ok(match branch_hint {
                None => q0,
                Some(hint) => {
                    let period = T::PI() + T::PI();
                    let cands = [q0, -q0].map(|b| {
                        let k = ((hint - b).im / period).round();
                        b + tpi * k
                    });
                    nearest(cands, hint)
                }
            })
        }
        Equation::IV => {
            let q0 = lambda.sqrt() * T::lit(2.0);
            Ok(branch_hint.map_or(q0, |h| nearest([q0, -q0], h)))
        }
        Equation::III => {
            if lambda.norm() < tol {
                return Err(Error::BranchCut(to_c64(lambda)));
            }
            let q0 = lambda.ln();
            Ok(match branch_hint {
                None => q0,
                Some(hint) => {
                    let k = ((hint - q0).im / (T::PI() + T::PI())).round();
                    q0 + tpi * k
                }
            })
        }
        Equation::II | Equation::I => Ok(lambda),
    }
}

/// Solves `f(q) = λ` by Newton's method from the best point of a seed grid
/// over the fundamental cell.
fn invert_f<T: Real>(ctx: &EllipticContext<T>, lambda: Complex<T>) -> Result<Complex<T>> {
    const GRID: usize = 8;
    let tau = ctx.tau();
    let mut seeds = Vec::with_capacity(GRID * GRID);
    for i in 0..GRID {
        for j in 0..GRID {
            let a = T::lit((i as f64 + 0.5) / GRID as f64 - 0.5);
            let b = T::lit((j as f64 + 0.5) / GRID as f64 - 0.5);
            let q = tau * b + a;
            if let Ok(f) = ctx.f(q) {
                seeds.push(((f - lambda).norm(), q));
            }
        }
    }
    seeds.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    let target = T::lit(1e-13) * T::one().max(lambda.norm());
    for &(_, seed) in seeds.iter().take(6) {
        let mut q = seed;
        for _ in 0..NEWTON_STEPS {
            let d = match ctx.f_and_derivatives(q) {
                Ok(d) => d,
                Err(_) => break,
            };
            let r = d.f - lambda;
            if r.norm() <= target {
                return Ok(ctx.reduce(q).reduced);
            }
            q = q - r / d.f_u;
            if !(q.re.is_finite() && q.im.is_finite()) {
                break;
            }
        }
    }
    Err(Error::NoConvergence(to_c64(seeds.first().map_or(lambda, |s| s.1))))
}

/// `(q, p)` from `(λ, μ)`.
pub fn pq_of_lambdamu<T: Real>(
    eq: Equation,
    lambda: Complex<T>,
    mu: Complex<T>,
    time: Complex<T>,
    aux: &AuxParams<T>,
    ctx: Option<&EllipticContext<T>>,
    branch_hint: Option<Complex<T>>,
) -> Result<(Complex<T>, Complex<T>)> {
    let q = q_of_lambda(eq, lambda, time, ctx, branch_hint)?;
    let (a, b) = mu_affine(eq, q, time, aux, ctx)?;
    Ok((q, (mu - b) / a))
}

fn check_distinct<T: Real>(coords: &[Complex<T>]) -> Result<()> {
    for j in 0..coords.len() {
        for k in j + 1..coords.len() {
            if (coords[j] - coords[k]).norm() < T::lit(BRANCH_TOL) {
                return Err(Error::TwoBodyCollision(j, k));
            }
        }
    }
    Ok(())
}

/// Componentwise map of a rank-ℓ state. For PVI the time is mapped `τ ↦ t`;
/// going back, `ctx.tau()` seeds the inversion of the time map.
pub fn multi_transform<T: Real>(
    eq: Equation,
    direction: Direction,
    state: &PhaseState<T>,
    aux: &AuxParams<T>,
    ctx: Option<&EllipticContext<T>>,
    branch_hints: Option<&[Complex<T>]>,
) -> Result<PhaseState<T>> {
    if state.coords.len() != state.momenta.len() {
        return Err(Error::InvalidState("coordinate and momentum counts differ".into()));
    }
    match direction {
        Direction::CalogeroToPainleve => {
            let (t, c) = if eq == Equation::VI {
                let c = ctx_at(ctx, state.time)?;
                (c.modular_t(), Some(c))
            } else {
                (state.time, None)
            };
            let cref = c.as_deref();
            let mut lam = Vec::with_capacity(state.rank());
            let mut mu = Vec::with_capacity(state.rank());
            for (&q, &p) in state.coords.iter().zip(&state.momenta) {
                lam.push(lambda_of_q(eq, q, state.time, cref)?);
                mu.push(mu_of_pq(eq, q, p, state.time, aux, cref)?);
            }
            check_distinct(&lam)?;
            Ok(PhaseState::new(lam, mu, t))
        }
        Direction::PainleveToCalogero => {
            check_distinct(&state.coords)?;
            let (time, c) = if eq == Equation::VI {
                let seed_ctx = ctx.ok_or_else(|| Error::BadContext("PVI inverse map needs a seed context".into()))?;
                let tau = time_map_pvi_inverse(state.time, seed_ctx.tau(), seed_ctx)?;
                (tau, Some(ctx_at(ctx, tau)?))
            } else {
                (state.time, None)
            };
            let cref = c.as_deref();
            let mut qs = Vec::with_capacity(state.rank());
            let mut ps = Vec::with_capacity(state.rank());
            for (j, (&l, &m)) in state.coords.iter().zip(&state.momenta).enumerate() {
                let hint = branch_hints.and_then(|h| h.get(j).copied());
                let (q, p) = pq_of_lambdamu(eq, l, m, time, aux, cref, hint)?;
                qs.push(q);
                ps.push(p);
            }
            Ok(PhaseState::new(qs, ps, time))
        }
    }
}

/// Largest component mismatch between the pushforward of the Calogero
/// vector field under the canonical map and the Painlevé vector field at the
/// image point, relative to the largest Painlevé component.
///
/// The pushforward is a fourth-order central difference of the map along
/// the Calogero flow (time included), divided by `dt/dT`.
pub fn vector_field_defect<T: Real>(
    calogero: &SystemDescriptor<T>,
    state: &PhaseState<T>,
    ctx: Option<&EllipticContext<T>>,
    step: T,
) -> Result<T> {
    let eq = calogero.equation;
    if calogero.side != Side::Calogero {
        return Err(Error::InvalidState("vector_field_defect expects a Calogero-side system".into()));
    }
    let aux = calogero.aux()?;
    let (vq, vp) = canonical_vector_field(calogero, state, ctx)?;
    let phi = |s: T| -> Result<PhaseState<T>> {
        let moved = PhaseState::new(
            state.coords.iter().zip(&vq).map(|(x, v)| x + v * s).collect(),
            state.momenta.iter().zip(&vp).map(|(y, v)| y + v * s).collect(),
            state.time + s,
        );
        multi_transform(eq, Direction::CalogeroToPainleve, &moved, &aux, ctx, None)
    };
    let h = step;
    let stencil = [(-h - h, 1.0), (-h, -8.0), (h, 8.0), (h + h, -1.0)];
    let image = phi(T::zero())?;
    let n = state.rank();
    let zero = Complex::new(T::zero(), T::zero());
    let mut dl = vec![zero; n];
    let mut dm = vec![zero; n];
    let mut dt = zero;
    for (s, w) in stencil {
        let img = phi(s)?;
        let w = T::lit(w) / (T::lit(12.0) * h);
        for j in 0..n {
            dl[j] = dl[j] + img.coords[j] * w;
            dm[j] = dm[j] + img.momenta[j] * w;
        }
        dt = dt + img.time * w;
    }
    if eq == Equation::VI {
        let c = ctx_at(ctx, state.time)?;
        dt = jacobian_dtau_dt(state.time, &c)?.inv();
    }
    let painleve = calogero.with_side(Side::Painleve);
    let (fl, fm) = canonical_vector_field(&painleve, &image, None)?;
    let mut scale = T::zero();
    let mut err = T::zero();
    for j in 0..n {
        scale = scale.max(fl[j].norm()).max(fm[j].norm());
        err = err.max((dl[j] / dt - fl[j]).norm()).max((dm[j] / dt - fm[j]).norm());
    }
    Ok(err / scale.max(T::min_positive_value()))
}
