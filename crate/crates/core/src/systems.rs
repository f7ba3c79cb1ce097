//! Polynomial Painlevé Hamiltonians `H(λ, μ, t)`, their Calogero-side normal
//! forms `𝓗(q, p, T)`, and the rank-ℓ versions with two-body couplings.
//!
//! Both sides share one parameter vocabulary: the Calogero side is written in
//! `α, β, γ, δ`, the Painlevé side in the auxiliary constants `κ₀, κ₁, θ, …`,
//! and [`param_to_painleve`] connects them.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::elliptic::EllipticContext;
use crate::error::{Error, Result};
use crate::scalar::{real, to_c64, two_pi_i, Real};

/// Singularity tolerance for one- and two-body terms.
const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Equation {
    VI,
    V,
    IV,
    III,
    II,
    I,
}

impl Equation {
    pub const ALL: [Equation; 6] = [Equation::VI, Equation::V, Equation::IV, Equation::III, Equation::II, Equation::I];

    /// `p6` … `p1`.
    pub fn cli_name(self) -> &'static str {
        match self {
            Equation::VI => "p6",
            Equation::V => "p5",
            Equation::IV => "p4",
            Equation::III => "p3",
            Equation::II => "p2",
            Equation::I => "p1",
        }
    }

    pub fn roman(self) -> &'static str {
        match self {
            Equation::VI => "VI",
            Equation::V => "V",
            Equation::IV => "IV",
            Equation::III => "III",
            Equation::II => "II",
            Equation::I => "I",
        }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.roman())
    }
}

impl FromStr for Equation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let t = s.trim();
        Equation::ALL
            .into_iter()
            .find(|e| {
                t.eq_ignore_ascii_case(e.cli_name())
                    || t.eq_ignore_ascii_case(e.roman())
                    || t.eq_ignore_ascii_case(&e.to_string())
            })
            .ok_or_else(|| format!("unknown equation `{s}` (expected p1..p6)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Painleve,
    Calogero,
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "painleve" => Ok(Side::Painleve),
            "calogero" => Ok(Side::Calogero),
            _ => Err(format!("unknown side `{s}` (expected painleve or calogero)")),
        }
    }
}

/// Which derivative the canonical equations use: `2πi d/dτ`, `t d/dt` or `d/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeGauge {
    Tau,
    LogT,
    T,
}

impl TimeGauge {
    /// `G` in `G · dx/d(time) = ∂H/∂(conjugate)`.
    pub fn factor<T: Real>(self, time: Complex<T>) -> Complex<T> {
        match self {
            TimeGauge::Tau => two_pi_i(),
            TimeGauge::LogT => time,
            TimeGauge::T => real(T::one()),
        }
    }
}

pub fn time_gauge(equation: Equation, side: Side) -> TimeGauge {
    match (side, equation) {
        (Side::Painleve, _) => TimeGauge::T,
        (Side::Calogero, Equation::VI) => TimeGauge::Tau,
        (Side::Calogero, Equation::V | Equation::III) => TimeGauge::LogT,
        (Side::Calogero, _) => TimeGauge::T,
    }
}

/// `(α, β, γ, δ)`; absent entries are those the equation does not use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PainleveParams<T: Real> {
    pub equation: Equation,
    pub alpha: Option<Complex<T>>,
    pub beta: Option<Complex<T>>,
    pub gamma: Option<Complex<T>>,
    pub delta: Option<Complex<T>>,
}

impl<T: Real> PainleveParams<T> {
    /// Stores only the entries relevant to `equation`.
    pub fn new(equation: Equation, alpha: Complex<T>, beta: Complex<T>, gamma: Complex<T>, delta: Complex<T>) -> Self {
        let n = match equation {
            Equation::VI | Equation::V | Equation::III => 4,
            Equation::IV => 2,
            Equation::II => 1,
            Equation::I => 0,
        };
        let pick = |i: usize, v: Complex<T>| if i < n { Some(v) } else { None };
        Self { equation, alpha: pick(0, alpha), beta: pick(1, beta), gamma: pick(2, gamma), delta: pick(3, delta) }
    }

    /// `[α, β, γ, δ]` with zeros in place of absent entries.
    pub fn values(&self) -> [Complex<T>; 4] {
        let z = Complex::new(T::zero(), T::zero());
        [self.alpha.unwrap_or(z), self.beta.unwrap_or(z), self.gamma.unwrap_or(z), self.delta.unwrap_or(z)]
    }

    /// `(α₀, α₁, α₂, α₃) = (α, −β, γ, 1/2 − δ)` for the elliptic potential.
    pub fn manin_couplings(&self) -> [Complex<T>; 4] {
        let [a, b, g, d] = self.values();
        [a, -b, g, real(T::lit(0.5)) - d]
    }
}

/// Auxiliary constants of the polynomial Hamiltonians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AuxParams<T: Real> {
    pub kappa0: Option<Complex<T>>,
    pub kappa1: Option<Complex<T>>,
    pub theta: Option<Complex<T>>,
    pub kappa: Option<Complex<T>>,
    pub theta1: Option<Complex<T>>,
    pub eta1: Option<Complex<T>>,
    pub theta_inf: Option<Complex<T>>,
    pub eta_inf: Option<Complex<T>>,
    pub theta0: Option<Complex<T>>,
    pub eta0: Option<Complex<T>>,
    /// `α` of PII, which enters its Hamiltonian directly.
    pub alpha_ii: Option<Complex<T>>,
}

pub const AUX_SYMBOLS: [&str; 11] =
    ["kappa0", "kappa1", "theta", "kappa", "theta1", "eta1", "theta_inf", "eta_inf", "theta0", "eta0", "alpha"];

impl<T: Real> AuxParams<T> {
    pub fn required_symbols(equation: Equation) -> &'static [&'static str] {
        match equation {
            Equation::VI => &["kappa0", "kappa1", "theta", "kappa"],
            Equation::V => &["kappa0", "theta1", "eta1", "kappa"],
            Equation::IV => &["kappa0", "theta_inf"],
            Equation::III => &["eta_inf", "theta_inf", "eta0", "theta0"],
            Equation::II => &["alpha"],
            Equation::I => &[],
        }
    }

    fn slot(&mut self, name: &str) -> Option<&mut Option<Complex<T>>> {
        Some(match name {
            "kappa0" => &mut self.kappa0,
            "kappa1" => &mut self.kappa1,
            "theta" => &mut self.theta,
            "kappa" => &mut self.kappa,
            "theta1" => &mut self.theta1,
            "eta1" => &mut self.eta1,
            "theta_inf" => &mut self.theta_inf,
            "eta_inf" => &mut self.eta_inf,
            "theta0" => &mut self.theta0,
            "eta0" => &mut self.eta0,
            "alpha" => &mut self.alpha_ii,
            _ => return None,
        })
    }

    pub fn get(&self, name: &str) -> Option<Complex<T>> {
        let mut copy = *self;
        copy.slot(name).and_then(|s| *s)
    }

    /// Returns `false` for an unknown symbol.
    pub fn set(&mut self, name: &str, value: Complex<T>) -> bool {
        match self.slot(name) {
            Some(s) => {
                *s = Some(value);
                true
            }
            None => false,
        }
    }

    /// Builds the subset for `equation` from a symbol table; extra keys are ignored.
    pub fn from_map(equation: Equation, map: &BTreeMap<String, Complex<T>>) -> Result<Self> {
        let required = Self::required_symbols(equation);
        if required.iter().any(|k| !map.contains_key(*k)) {
            return Err(Error::MissingParameter { equation, required: required.to_vec() });
        }
        let mut out = Self::default();
        for k in required {
            out.set(k, map[*k]);
        }
        Ok(out)
    }

    pub fn need(&self, equation: Equation, name: &str) -> Result<Complex<T>> {
        self.get(name)
            .ok_or_else(|| Error::MissingParameter { equation, required: Self::required_symbols(equation).to_vec() })
    }
}

/// The algebraic relations between the auxiliary constants and `α, β, γ, δ`.
pub fn param_to_painleve<T: Real>(aux: &AuxParams<T>, equation: Equation) -> Result<PainleveParams<T>> {
    let n = |s: &str| aux.need(equation, s);
    let h = T::lit(0.5);
    let z = Complex::new(T::zero(), T::zero());
    let one = real(T::one());
    let (a, b, g, d) = match equation {
        Equation::VI => {
            let (k0, k1, th, k) = (n("kappa0")?, n("kappa1")?, n("theta")?, n("kappa")?);
            let s = k0 + k1 + th - one;
            (s * s * h - k * T::lit(2.0), -k0 * k0 * h, k1 * k1 * h, (one - th * th) * h)
        }
        Equation::V => {
            let (k0, t1, e1, k) = (n("kappa0")?, n("theta1")?, n("eta1")?, n("kappa")?);
            let s = k0 + t1;
            (s * s * h - k * T::lit(2.0), -k0 * k0 * h, e1 * (t1 + one), -e1 * e1 * h)
        }
        Equation::IV => {
            let (k0, ti) = (n("kappa0")?, n("theta_inf")?);
            (ti * T::lit(2.0) - k0 + one, -k0 * k0 * T::lit(2.0), z, z)
        }
        Equation::III => {
            let (ei, ti, e0, t0) = (n("eta_inf")?, n("theta_inf")?, n("eta0")?, n("theta0")?);
            let four = T::lit(4.0);
            (-ei * ti * four, e0 * (t0 + one) * four, ei * ei * four, -e0 * e0 * four)
        }
        Equation::II | Equation::I => return Err(Error::UnsupportedEquation(equation)),
    };
    Ok(PainleveParams::new(equation, a, b, g, d))
}

/// Either parameter vocabulary; converted on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamSet<T: Real> {
    Aux(AuxParams<T>),
    Painleve(PainleveParams<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDescriptor<T: Real> {
    pub equation: Equation,
    pub side: Side,
    pub rank: usize,
    pub g4sq: Complex<T>,
    pub params: ParamSet<T>,
}

impl<T: Real> SystemDescriptor<T> {
    pub fn new(equation: Equation, side: Side, rank: usize, g4sq: Complex<T>, params: ParamSet<T>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidState("rank must be at least 1".into()));
        }
        Ok(Self { equation, side, rank, g4sq, params })
    }

    pub fn time_gauge(&self) -> TimeGauge {
        time_gauge(self.equation, self.side)
    }

    /// Same equation, parameters and coupling on the other side.
    pub fn with_side(&self, side: Side) -> Self {
        Self { side, ..self.clone() }
    }

    /// `α, β, γ, δ`, converting from the auxiliary constants if needed.
    pub fn painleve_params(&self) -> Result<PainleveParams<T>> {
        match &self.params {
            ParamSet::Painleve(p) => Ok(*p),
            ParamSet::Aux(a) => match self.equation {
                Equation::II => Ok(PainleveParams::new(
                    Equation::II,
                    a.need(Equation::II, "alpha")?,
                    real(T::zero()),
                    real(T::zero()),
                    real(T::zero()),
                )),
                Equation::I => {
                    let z = real(T::zero());
                    Ok(PainleveParams::new(Equation::I, z, z, z, z))
                }
                eq => param_to_painleve(a, eq),
            },
        }
    }

    pub fn aux(&self) -> Result<AuxParams<T>> {
        match &self.params {
            ParamSet::Aux(a) => Ok(*a),
            ParamSet::Painleve(p) => match self.equation {
                Equation::II => {
                    let mut a = AuxParams::default();
                    a.alpha_ii = p.alpha;
                    Ok(a)
                }
                Equation::I => Ok(AuxParams::default()),
                eq => Err(Error::MissingParameter {
                    equation: eq,
                    required: AuxParams::<T>::required_symbols(eq).to_vec(),
                }),
            },
        }
    }
}

/// Coordinates and momenta of all ℓ components, plus the time (`t` or `τ`).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState<T: Real> {
    pub coords: Vec<Complex<T>>,
    pub momenta: Vec<Complex<T>>,
    pub time: Complex<T>,
}

impl<T: Real> PhaseState<T> {
    pub fn new(coords: Vec<Complex<T>>, momenta: Vec<Complex<T>>, time: Complex<T>) -> Self {
        Self { coords, momenta, time }
    }

    pub fn rank1(coord: Complex<T>, momentum: Complex<T>, time: Complex<T>) -> Self {
        Self::new(vec![coord], vec![momentum], time)
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    pub fn validate(&self, sys: &SystemDescriptor<T>) -> Result<()> {
        if self.coords.len() != sys.rank || self.momenta.len() != sys.rank {
            return Err(Error::InvalidState(format!(
                "expected {} coordinates and momenta, got {} and {}",
                sys.rank,
                self.coords.len(),
                self.momenta.len()
            )));
        }
        let t = self.time;
        let tol = T::lit(SINGULAR_TOL);
        let bad = match (sys.time_gauge(), sys.equation) {
            (TimeGauge::Tau, _) => !(t.im > T::zero()),
            (_, Equation::VI) => t.norm() < tol || (t - T::one()).norm() < tol,
            (_, Equation::V | Equation::III) => t.norm() < tol,
            _ => false,
        };
        if bad {
            return Err(Error::InvalidState(format!(
                "time {} outside the domain of {} ({:?} side)",
                to_c64(t),
                sys.equation,
                sys.side
            )));
        }
        Ok(())
    }
}

fn singular<T: Real>(what: &str, z: Complex<T>) -> Error {
    Error::CoordinateSingularity(format!("{what} at {}", to_c64(z)))
}

fn guard<T: Real>(den: Complex<T>, what: &str, at: Complex<T>) -> Result<()> {
    if den.norm() < T::lit(SINGULAR_TOL) || !(den.re.is_finite() && den.im.is_finite()) {
        Err(singular(what, at))
    } else {
        Ok(())
    }
}

/// Context at the state's `τ`, reusing `ctx` when it already matches.
fn context_at<'a, T: Real>(
    ctx: Option<&'a EllipticContext<T>>,
    tau: Complex<T>,
) -> Result<Cow<'a, EllipticContext<T>>> {
    match ctx {
        Some(c) if c.tau() == tau => Ok(Cow::Borrowed(c)),
        Some(c) => Ok(Cow::Owned(c.at_tau(tau)?)),
        None => Ok(Cow::Owned(EllipticContext::new(tau)?)),
    }
}

fn pole_to_singular(e: Error) -> Error {
    match e {
        Error::PoleAt(z) => Error::CoordinateSingularity(format!("lattice pole at {z}")),
        other => other,
    }
}

/// Calogero one-body potential `V(q)` and `V′(q)`, with `𝓗 = p²/2 + V`.
fn calogero_one_body<T: Real>(
    eq: Equation,
    prm: &PainleveParams<T>,
    q: Complex<T>,
    t: Complex<T>,
    ctx: Option<&EllipticContext<T>>,
) -> Result<(Complex<T>, Complex<T>)> {
    let [a, b, g, d] = prm.values();
    let l = T::lit;
    Ok(match eq {
        Equation::VI => {
            let ctx = ctx.expect("elliptic context resolved by caller");
            let mut v = Complex::new(T::zero(), T::zero());
            let mut dv = v;
            for (n, an) in prm.manin_couplings().into_iter().enumerate() {
                v = v - an * ctx.shifted_p(q, n).map_err(pole_to_singular)?;
                dv = dv - an * ctx.shifted_p_prime(q, n).map_err(pole_to_singular)?;
            }
            (v, dv)
        }
        Equation::V => {
            let h = q * l(0.5);
            let (s, c) = (h.sinh(), h.cosh());
            guard(s, "sinh(q/2) = 0", q)?;
            guard(c, "cosh(q/2) = 0", q)?;
            let (s2, c2) = (s * s, c * c);
            let v = -a / s2 - b / c2 + g * t * l(0.5) * q.cosh() + d * t * t * l(0.125) * (q * l(2.0)).cosh();
            let dv = a * c / (s2 * s)
                + b * s / (c2 * c)
                + g * t * l(0.5) * q.sinh()
                + d * t * t * l(0.25) * (q * l(2.0)).sinh();
            (v, dv)
        }
        Equation::IV => {
            let x = q * l(0.5);
            guard(x, "q = 0", q)?;
            let x2 = x * x;
            let w = t * t - a;
            let v = -x2 * x2 * x2 * l(0.5) - t * x2 * x2 * l(2.0) - w * x2 * l(2.0) + b / x2;
            let dv = (-x2 * x2 * x * l(3.0) - t * x2 * x * l(8.0) - w * x * l(4.0) - b * l(2.0) / (x2 * x)) * l(0.5);
            (v, dv)
        }
        Equation::III => {
            let (e, em) = (q.exp(), (-q).exp());
            let (e2, em2) = (e * e, em * em);
            let v = -a * l(0.25) * e + b * t * l(0.25) * em - g * l(0.125) * e2 + d * t * t * l(0.125) * em2;
            let dv = -a * l(0.25) * e - b * t * l(0.25) * em - g * l(0.25) * e2 - d * t * t * l(0.25) * em2;
            (v, dv)
        }
        Equation::II => {
            let w = q * q + t * l(0.5);
            (-w * w * l(0.5) - a * q, -q * w * l(2.0) - a)
        }
        Equation::I => (-q * q * q * l(2.0) - t * q, -q * q * l(6.0) - t),
    })
}

/// `1/sinh²(x/2)` and its derivative.
fn inv_sinh2_half<T: Real>(x: Complex<T>, at: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
    let h = x * T::lit(0.5);
    let s = h.sinh();
    guard(s, "two-body collision", at)?;
    let s2 = s * s;
    Ok((s2.inv(), -h.cosh() / (s2 * s)))
}

fn inv_sq<T: Real>(x: Complex<T>, at: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
    guard(x, "two-body collision", at)?;
    let r = x.inv();
    Ok((r * r, -r * r * r * T::lit(2.0)))
}

/// Pair term `W(a, b)` (without `g₄²`) and its partials in `a` and `b`.
fn calogero_pair<T: Real>(
    eq: Equation,
    a: Complex<T>,
    b: Complex<T>,
    ctx: Option<&EllipticContext<T>>,
) -> Result<(Complex<T>, Complex<T>, Complex<T>)> {
    let (dm, sm) = (a - b, a + b);
    let both = |f: &dyn Fn(Complex<T>) -> Result<(Complex<T>, Complex<T>)>| -> Result<_> {
        let (w1, d1) = f(dm)?;
        let (w2, d2) = f(sm)?;
        Ok((w1 + w2, d1 + d2, d2 - d1))
    };
    match eq {
        Equation::VI => {
            let ctx = ctx.expect("elliptic context resolved by caller");
            both(&|x| {
                Ok((
                    ctx.weierstrass_p(x).map_err(pole_to_singular)?,
                    ctx.weierstrass_p_prime(x).map_err(pole_to_singular)?,
                ))
            })
        }
        Equation::V => both(&|x| inv_sinh2_half(x, x)),
        Equation::IV => both(&|x| inv_sq(x, x)),
        Equation::III => {
            let (w, d) = inv_sinh2_half(dm, dm)?;
            Ok((w, d, -d))
        }
        Equation::II | Equation::I => {
            let (w, d) = inv_sq(dm, dm)?;
            Ok((w, d, -d))
        }
    }
}

/// Painlevé one-body Hamiltonian with `∂H/∂λ` and `∂H/∂μ`.
fn painleve_one_body<T: Real>(
    eq: Equation,
    aux: &AuxParams<T>,
    lam: Complex<T>,
    mu: Complex<T>,
    t: Complex<T>,
) -> Result<(Complex<T>, Complex<T>, Complex<T>)> {
    let n = |s: &str| aux.need(eq, s);
    let l = T::lit;
    let one = real(T::one());
    Ok(match eq {
        Equation::VI => {
            let (k0, k1, th, k) = (n("kappa0")?, n("kappa1")?, n("theta")?, n("kappa")?);
            let den = t * (t - one);
            let p = lam * (lam - one) * (lam - t);
            let dp = lam * lam * l(3.0) - lam * (t + one) * l(2.0) + t;
            let q = k0 * (lam - one) * (lam - t) + k1 * lam * (lam - t) + (th - one) * lam * (lam - one);
            let dq = k0 * (lam * l(2.0) - one - t) + k1 * (lam * l(2.0) - t) + (th - one) * (lam * l(2.0) - one);
            (
                (p * mu * mu - q * mu + k * (lam - t)) / den,
                (dp * mu * mu - dq * mu + k) / den,
                (p * mu * l(2.0) - q) / den,
            )
        }
        Equation::V => {
            let (k0, t1, e1, k) = (n("kappa0")?, n("theta1")?, n("eta1")?, n("kappa")?);
            let lm = lam - one;
            let p = lam * lm * lm;
            let dp = lm * (lam * l(3.0) - one);
            let q = k0 * lm * lm + t1 * lam * lm - e1 * t * lam;
            let dq = k0 * lm * l(2.0) + t1 * (lam * l(2.0) - one) - e1 * t;
            ((p * mu * mu - q * mu + k * lm) / t, (dp * mu * mu - dq * mu + k) / t, (p * mu * l(2.0) - q) / t)
        }
        Equation::IV => {
            let (k0, ti) = (n("kappa0")?, n("theta_inf")?);
            let q = lam * lam + t * lam * l(2.0) + k0 * l(2.0);
            (
                lam * mu * mu * l(2.0) - q * mu + ti * lam,
                mu * mu * l(2.0) - (lam + t) * mu * l(2.0) + ti,
                lam * mu * l(4.0) - q,
            )
        }
        Equation::III => {
            let (ei, ti, e0, t0) = (n("eta_inf")?, n("theta_inf")?, n("eta0")?, n("theta0")?);
            let q = ei * lam * lam + t0 * lam - e0 * t;
            let c = ei * (t0 + ti) * l(0.5);
            (
                (lam * lam * mu * mu - q * mu + c * lam) / t,
                (lam * mu * mu * l(2.0) - (ei * lam * l(2.0) + t0) * mu + c) / t,
                (lam * lam * mu * l(2.0) - q) / t,
            )
        }
        Equation::II => {
            let a = n("alpha")?;
            let w = lam * lam + t * l(0.5);
            (mu * mu * l(0.5) - w * mu - (a + l(0.5)) * lam, -lam * mu * l(2.0) - a - l(0.5), mu - w)
        }
        Equation::I => (mu * mu * l(0.5) - lam * lam * lam * l(2.0) - t * lam, -lam * lam * l(6.0) - t, mu),
    })
}

/// Painlevé-side pair term including its `t`-dependent prefactor (without `g₄²`).
fn painleve_pair<T: Real>(
    eq: Equation,
    a: Complex<T>,
    b: Complex<T>,
    t: Complex<T>,
) -> Result<(Complex<T>, Complex<T>, Complex<T>)> {
    let d = a - b;
    guard(d, "two-body collision", d)?;
    let l = T::lit;
    let one = real(T::one());
    let (d2, d3) = (d * d, d * d * d);
    let (c, u, ua, ub) = match eq {
        Equation::VI => {
            let s = |x: Complex<T>| x * (x - one) * (x - t);
            let ds = |x: Complex<T>| x * x * l(3.0) - x * (t + one) * l(2.0) + t;
            let ss = s(a) + s(b);
            (
                (t * (t - one) * l(2.0)).inv(),
                ss * l(2.0) / d2 - (a + b) * l(2.0),
                ds(a) * l(2.0) / d2 - ss * l(4.0) / d3 - l(2.0),
                ds(b) * l(2.0) / d2 + ss * l(4.0) / d3 - l(2.0),
            )
        }
        Equation::V => {
            let (am, bm) = (a - one, b - one);
            let num = am * bm * (a + b) * l(2.0);
            let na = bm * (a + b + am) * l(2.0);
            let nb = am * (a + b + bm) * l(2.0);
            ((t * l(2.0)).inv(), num / d2, na / d2 - num * l(2.0) / d3, nb / d2 + num * l(2.0) / d3)
        }
        Equation::IV => {
            (real(l(0.125)), (a + b) / d2, d2.inv() - (a + b) * l(2.0) / d3, d2.inv() + (a + b) * l(2.0) / d3)
        }
        Equation::III => (
            (t * l(2.0)).inv(),
            a * b * l(4.0) / d2,
            b * l(4.0) / d2 - a * b * l(8.0) / d3,
            a * l(4.0) / d2 + a * b * l(8.0) / d3,
        ),
        Equation::II | Equation::I => (one, d2.inv(), -d3.inv() * l(2.0), d3.inv() * l(2.0)),
    };
    Ok((c * u, c * ua, c * ub))
}

struct Evaluation<T: Real> {
    value: Complex<T>,
    d_coords: Vec<Complex<T>>,
    d_momenta: Vec<Complex<T>>,
}

fn evaluate<T: Real>(
    sys: &SystemDescriptor<T>,
    state: &PhaseState<T>,
    ctx: Option<&EllipticContext<T>>,
) -> Result<Evaluation<T>> {
    state.validate(sys)?;
    let ell = sys.rank;
    let t = state.time;
    let zero = Complex::new(T::zero(), T::zero());
    let mut value = zero;
    let mut dc = vec![zero; ell];
    let mut dm = vec![zero; ell];
    match sys.side {
        Side::Calogero => {
            let prm = sys.painleve_params()?;
            let owned;
            let ctx = if sys.equation == Equation::VI {
                owned = context_at(ctx, t)?;
                Some(owned.as_ref())
            } else {
                None
            };
            for j in 0..ell {
                let (q, p) = (state.coords[j], state.momenta[j]);
                let (v, dv) = calogero_one_body(sys.equation, &prm, q, t, ctx)?;
                value = value + p * p * T::lit(0.5) + v;
                dc[j] = dv;
                dm[j] = p;
            }
            if ell > 1 && sys.g4sq != zero {
                for j in 0..ell {
                    for k in j + 1..ell {
                        let (w, wa, wb) = calogero_pair(sys.equation, state.coords[j], state.coords[k], ctx)
                            .map_err(|e| collision(e, j, k))?;
                        value = value + sys.g4sq * w;
                        dc[j] = dc[j] + sys.g4sq * wa;
                        dc[k] = dc[k] + sys.g4sq * wb;
                    }
                }
            }
        }
        Side::Painleve => {
            let aux = sys.aux()?;
            for j in 0..ell {
                let (h, hl, hm) = painleve_one_body(sys.equation, &aux, state.coords[j], state.momenta[j], t)?;
                value = value + h;
                dc[j] = hl;
                dm[j] = hm;
            }
            if ell > 1 && sys.g4sq != zero {
                for j in 0..ell {
                    for k in j + 1..ell {
                        let (w, wa, wb) = painleve_pair(sys.equation, state.coords[j], state.coords[k], t)
                            .map_err(|e| collision(e, j, k))?;
                        value = value + sys.g4sq * w;
                        dc[j] = dc[j] + sys.g4sq * wa;
                        dc[k] = dc[k] + sys.g4sq * wb;
                    }
                }
            }
        }
    }
    Ok(Evaluation { value, d_coords: dc, d_momenta: dm })
}

fn collision(e: Error, j: usize, k: usize) -> Error {
    match e {
        Error::CoordinateSingularity(msg) if msg.starts_with("two-body") => Error::TwoBodyCollision(j, k),
        other => other,
    }
}

/// `H(λ, μ, t)` or `𝓗(q, p, T)`. A context is used for the elliptic system
/// and rebuilt at `state.time` when its `τ` differs.
pub fn hamiltonian<T: Real>(
    sys: &SystemDescriptor<T>,
    state: &PhaseState<T>,
    ctx: Option<&EllipticContext<T>>,
) -> Result<Complex<T>> {
    Ok(evaluate(sys, state, ctx)?.value)
}

/// Closed-form `(∂H/∂coords, ∂H/∂momenta)`.
pub fn hamiltonian_gradients<T: Real>(
    sys: &SystemDescriptor<T>,
    state: &PhaseState<T>,
    ctx: Option<&EllipticContext<T>>,
) -> Result<(Vec<Complex<T>>, Vec<Complex<T>>)> {
    let e = evaluate(sys, state, ctx)?;
    Ok((e.d_coords, e.d_momenta))
}

/// `(dx/d(time), dy/d(time))` from `G dx = ∂H/∂y`, `G dy = −∂H/∂x`.
pub fn canonical_vector_field<T: Real>(
    sys: &SystemDescriptor<T>,
    state: &PhaseState<T>,
    ctx: Option<&EllipticContext<T>>,
) -> Result<(Vec<Complex<T>>, Vec<Complex<T>>)> {
    let (hx, hy) = hamiltonian_gradients(sys, state, ctx)?;
    let g = sys.time_gauge().factor(state.time);
    Ok((hy.into_iter().map(|v| v / g).collect(), hx.into_iter().map(|v| -v / g).collect()))
}

/// `d𝓗/dT` along the canonical flow minus `∂𝓗/∂T`, both by central differences.
/// Vanishes up to truncation error when the gradients are consistent.
pub fn autonomous_check<T: Real>(
    sys: &SystemDescriptor<T>,
    state: &PhaseState<T>,
    ctx: Option<&EllipticContext<T>>,
) -> Result<Complex<T>> {
    let (vx, vy) = canonical_vector_field(sys, state, ctx)?;
    let h = T::epsilon().cbrt() * T::one().max(state.time.norm());
    let shifted = |s: T, along: bool| {
        let w = if along { s } else { T::zero() };
        PhaseState {
            coords: state.coords.iter().zip(&vx).map(|(x, v)| x + v * w).collect(),
            momenta: state.momenta.iter().zip(&vy).map(|(y, v)| y + v * w).collect(),
            time: state.time + s,
        }
    };
    let h_at = |s: T, along: bool| hamiltonian(sys, &shifted(s, along), ctx);
    let total = (h_at(h, true)? - h_at(-h, true)?) / (h + h);
    let explicit = (h_at(h, false)? - h_at(-h, false)?) / (h + h);
    Ok(total - explicit)
}

/// Right-hand side of the second-order Painlevé equation, `λ″ = F(λ, λ′, t)`.
///
/// The `δ` term of PIII is `δ/(4λ)`, the form generated by the polynomial
/// Hamiltonian under the stated parameter relations.
pub fn painleve_second_order<T: Real>(
    prm: &PainleveParams<T>,
    lam: Complex<T>,
    dlam: Complex<T>,
    t: Complex<T>,
) -> Complex<T> {
    let [a, b, g, d] = prm.values();
    let l = T::lit;
    let one = real(T::one());
    match prm.equation {
        Equation::VI => {
            let (lm, lt, tm) = (lam - one, lam - t, t - one);
            (lam.inv() + lm.inv() + lt.inv()) * dlam * dlam * l(0.5) - (t.inv() + tm.inv() + lt.inv()) * dlam
                + lam * lm * lt / (t * t * tm * tm)
                    * (a + b * t / (lam * lam) + g * tm / (lm * lm) + d * t * tm / (lt * lt))
        }
        Equation::V => {
            let lm = lam - one;
            ((lam * l(2.0)).inv() + lm.inv()) * dlam * dlam - dlam / t
                + lam * lm * lm / (t * t)
                    * (a + b / (lam * lam) + g * t / (lm * lm) + d * t * t * (lam + one) / (lm * lm * lm))
        }
        Equation::IV => {
            dlam * dlam / (lam * l(2.0))
                + lam * lam * lam * l(1.5)
                + t * lam * lam * l(4.0)
                + (t * t - a) * lam * l(2.0)
                + b / lam
        }
        Equation::III => {
            dlam * dlam / lam - dlam / t
                + lam * lam / (t * t * l(4.0)) * (a + b * t / (lam * lam) + g * lam + d * t * t / (lam * lam * lam))
        }
        Equation::II => lam * lam * lam * l(2.0) + t * lam + a,
        Equation::I => lam * lam * l(6.0) + t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn aux_of(eq: Equation, vals: &[(&str, Complex64)]) -> AuxParams<f64> {
        let map: BTreeMap<String, Complex64> = vals.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        AuxParams::from_map(eq, &map).unwrap()
    }

    #[test]
    fn pvi_relations() {
        let one = c(1.0, 0.0);
        let aux = aux_of(Equation::VI, &[("kappa0", one), ("kappa1", one), ("theta", one), ("kappa", c(0.0, 0.0))]);
        let p = param_to_painleve(&aux, Equation::VI).unwrap();
        assert_eq!(p.values(), [c(2.0, 0.0), c(-0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn piv_relations() {
        let z = c(0.0, 0.0);
        let aux = aux_of(Equation::IV, &[("theta_inf", z), ("kappa0", z)]);
        let p = param_to_painleve(&aux, Equation::IV).unwrap();
        assert_eq!(p.alpha, Some(c(1.0, 0.0)));
        assert_eq!(p.beta, Some(z));
        assert_eq!(p.gamma, None);
    }

    #[test]
    fn piii_relations() {
        let one = c(1.0, 0.0);
        let aux = aux_of(Equation::III, &[("eta_inf", one), ("theta_inf", one), ("eta0", one), ("theta0", one)]);
        let p = param_to_painleve(&aux, Equation::III).unwrap();
        assert_eq!(p.values(), [c(-4.0, 0.0), c(8.0, 0.0), c(4.0, 0.0), c(-4.0, 0.0)]);
    }

    #[test]
    fn no_relation_for_pii_pi() {
        let aux = AuxParams::<f64>::default();
        assert_eq!(param_to_painleve(&aux, Equation::II), Err(Error::UnsupportedEquation(Equation::II)));
        assert!(param_to_painleve(&aux, Equation::I).is_err());
    }

    #[test]
    fn missing_keys_report_required_list() {
        let map = BTreeMap::from([("kappa0".to_string(), c(1.0, 0.0))]);
        match AuxParams::<f64>::from_map(Equation::V, &map) {
            Err(Error::MissingParameter { required, .. }) => {
                assert_eq!(required, vec!["kappa0", "theta1", "eta1", "kappa"])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pi_painleve_origin_is_zero() {
        let sys =
            SystemDescriptor::new(Equation::I, Side::Painleve, 1, c(0.0, 0.0), ParamSet::Aux(AuxParams::default()))
                .unwrap();
        let s = PhaseState::rank1(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert_eq!(hamiltonian(&sys, &s, None).unwrap(), c(0.0, 0.0));
        let s = PhaseState::rank1(c(0.7, 0.1), c(-0.3, 0.2), c(0.4, 0.0));
        let (dl, dm) = hamiltonian_gradients(&sys, &s, None).unwrap();
        assert_eq!(dm[0], s.momenta[0]);
        let lam = s.coords[0];
        assert!((dl[0] - (-6.0 * lam * lam - s.time)).norm() < 1e-15);
    }

    #[test]
    fn pii_calogero_value() {
        let mut aux = AuxParams::default();
        aux.alpha_ii = Some(c(3.7, -1.0));
        let sys = SystemDescriptor::new(Equation::II, Side::Calogero, 1, c(0.0, 0.0), ParamSet::Aux(aux)).unwrap();
        let s = PhaseState::rank1(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        assert_eq!(hamiltonian(&sys, &s, None).unwrap(), c(0.5, 0.0));
    }

    #[test]
    fn rank2_pii_calogero_value() {
        let mut aux = AuxParams::default();
        aux.alpha_ii = Some(c(0.0, 0.0));
        let sys = SystemDescriptor::new(Equation::II, Side::Calogero, 2, c(1.0, 0.0), ParamSet::Aux(aux)).unwrap();
        let s = PhaseState::new(vec![c(1.0, 0.0), c(-1.0, 0.0)], vec![c(0.0, 0.0); 2], c(0.0, 0.0));
        let h = hamiltonian(&sys, &s, None).unwrap();
        assert!((h - c(-0.75, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn collision_is_reported() {
        let sys =
            SystemDescriptor::new(Equation::I, Side::Calogero, 2, c(1.0, 0.0), ParamSet::Aux(AuxParams::default()))
                .unwrap();
        let s = PhaseState::new(vec![c(0.5, 0.0), c(0.5, 0.0)], vec![c(0.0, 0.0); 2], c(0.0, 0.0));
        assert_eq!(hamiltonian(&sys, &s, None), Err(Error::TwoBodyCollision(0, 1)));
    }

    #[test]
    fn gauges_follow_side_and_equation() {
        assert_eq!(time_gauge(Equation::VI, Side::Calogero), TimeGauge::Tau);
        assert_eq!(time_gauge(Equation::V, Side::Calogero), TimeGauge::LogT);
        assert_eq!(time_gauge(Equation::III, Side::Calogero), TimeGauge::LogT);
        assert_eq!(time_gauge(Equation::IV, Side::Calogero), TimeGauge::T);
        assert_eq!(time_gauge(Equation::VI, Side::Painleve), TimeGauge::T);
    }

    #[test]
    fn pi_autonomous_residual() {
        let sys =
            SystemDescriptor::new(Equation::I, Side::Painleve, 1, c(0.0, 0.0), ParamSet::Aux(AuxParams::default()))
                .unwrap();
        let s = PhaseState::rank1(c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0));
        assert!(autonomous_check(&sys, &s, None).unwrap().norm() < 1e-8);
    }

    #[test]
    fn equation_names_parse() {
        for e in Equation::ALL {
            assert_eq!(e.cli_name().parse::<Equation>().unwrap(), e);
            assert_eq!(e.to_string().parse::<Equation>().unwrap(), e);
        }
        assert!("p7".parse::<Equation>().is_err());
    }
}
