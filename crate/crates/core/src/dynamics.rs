//! Dormand–Prince 5(4) integration of the canonical equations along a
//! straight segment in the complex time plane, and the residual of the
//! second-order Painlevé equations along a computed trajectory.
//!
//! The segment `time(s) = t₀ + s (t₁ − t₀)`, `s ∈ [0, 1]`, is the real
//! integration variable; step control and dense output live in `s`.

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::elliptic::EllipticContext;
use crate::error::{Error, Result};
use crate::scalar::{real, to_c64, Real};
use crate::systems::{
    canonical_vector_field, painleve_second_order, Equation, PhaseState, Side, SystemDescriptor, TimeGauge,
};

/// Magnitude beyond which a component is taken to be running into a pole.
pub const POLE_THRESHOLD: f64 = 1e8;
/// Minimum distance between the time path and a fixed singularity.
pub const PATH_CLEARANCE: f64 = 1e-3;
/// Fewest samples [`painleve_residual`] accepts.
pub const MIN_RESIDUAL_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "time", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    PoleDetected(Complex64),
    StepUnderflow,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions<T: Real> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_steps: usize,
    /// Upper bound on a step, in units of the path parameter `s ∈ [0, 1]`.
    pub max_step: Option<T>,
}

impl<T: Real> Default for IntegratorOptions<T> {
    fn default() -> Self {
        Self { rel_tol: T::lit(1e-10), abs_tol: T::lit(1e-12), max_steps: 200_000, max_step: None }
    }
}

impl<T: Real> IntegratorOptions<T> {
    pub fn with_tolerances(rel_tol: T, abs_tol: T) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }
}

/// Accepted samples of one integration run.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub system: SystemDescriptor<T>,
    pub samples: Vec<PhaseState<T>>,
    /// Path parameter of each sample.
    pub path: Vec<T>,
    /// `d(coords ++ momenta)/ds` at each sample, for Hermite dense output.
    pub slopes: Vec<Vec<Complex<T>>>,
    pub start: Complex<T>,
    pub end: Complex<T>,
    pub tolerances: (T, T),
    pub termination: Termination,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

fn pack<T: Real>(s: &PhaseState<T>) -> Vec<Complex<T>> {
    s.coords.iter().chain(&s.momenta).copied().collect()
}

fn unpack<T: Real>(y: &[Complex<T>], time: Complex<T>) -> PhaseState<T> {
    let n = y.len() / 2;
    PhaseState::new(y[..n].to_vec(), y[n..].to_vec(), time)
}

impl<T: Real> Trajectory<T> {
    /// Wraps precomputed states (for example read back from a file). The path
    /// parameter is recovered from the times; slopes are left at zero.
    pub fn from_samples(system: SystemDescriptor<T>, samples: Vec<PhaseState<T>>) -> Self {
        let start = samples.first().map_or(real(T::zero()), |s| s.time);
        let end = samples.last().map_or(start, |s| s.time);
        let span = end - start;
        let path = samples
            .iter()
            .map(|s| if span.norm() > T::zero() { ((s.time - start) / span).re } else { T::zero() })
            .collect();
        let width = samples.first().map_or(0, |s| 2 * s.rank());
        let slopes = vec![vec![Complex::new(T::zero(), T::zero()); width]; samples.len()];
        Self {
            system,
            samples,
            path,
            slopes,
            start,
            end,
            tolerances: (T::zero(), T::zero()),
            termination: Termination::Completed,
            steps_accepted: 0,
            steps_rejected: 0,
        }
    }

    pub fn times(&self) -> Vec<Complex<T>> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn last(&self) -> &PhaseState<T> {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    /// Cubic Hermite interpolant at path parameter `s` (clamped to the
    /// integrated range).
    pub fn interpolate(&self, s: T) -> PhaseState<T> {
        let n = self.path.len();
        let span = self.end - self.start;
        if n == 1 {
            return self.samples[0].clone();
        }
        let s = s.max(self.path[0]).min(self.path[n - 1]);
        let i = match self.path.iter().position(|&p| p >= s) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => n - 2,
        };
        let (s0, s1) = (self.path[i], self.path[i + 1]);
        let h = s1 - s0;
        let x = if h > T::zero() { (s - s0) / h } else { T::zero() };
        let x2 = x * x;
        let x3 = x2 * x;
        let one = T::one();
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * x3 - three * x2 + one;
        let h10 = x3 - two * x2 + x;
        let h01 = -two * x3 + three * x2;
        let h11 = x3 - x2;
        let (y0, y1) = (pack(&self.samples[i]), pack(&self.samples[i + 1]));
        let y: Vec<Complex<T>> = (0..y0.len())
            .map(|k| y0[k] * h00 + self.slopes[i][k] * (h10 * h) + y1[k] * h01 + self.slopes[i + 1][k] * (h11 * h))
            .collect();
        unpack(&y, self.start + span * s)
    }
}

/// Fixed singular points of the time variable for `sys`.
pub fn fixed_singularities<T: Real>(sys: &SystemDescriptor<T>) -> Vec<Complex<T>> {
    let z = real(T::zero());
    match (sys.time_gauge(), sys.equation) {
        (TimeGauge::Tau, _) => vec![],
        (_, Equation::VI) => vec![z, real(T::one())],
        (_, Equation::V | Equation::III) => vec![z],
        _ => vec![],
    }
}

fn segment_distance<T: Real>(a: Complex<T>, b: Complex<T>, p: Complex<T>) -> T {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == T::zero() {
        return (p - a).norm();
    }
    let u = ((p - a) * d.conj()).re / len2;
    let u = u.max(T::zero()).min(T::one());
    (a + d * u - p).norm()
}

struct Dopri;

impl Dopri {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    /// Fifth-order weights minus the embedded fourth-order ones.
    const E: [f64; 7] =
        [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];
}

struct Rhs<'a, T: Real> {
    sys: &'a SystemDescriptor<T>,
    ctx: Option<&'a EllipticContext<T>>,
    start: Complex<T>,
    span: Complex<T>,
}

impl<T: Real> Rhs<'_, T> {
    fn time(&self, s: T) -> Complex<T> {
        self.start + self.span * s
    }

    fn eval(&self, s: T, y: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let st = unpack(y, self.time(s));
        let (dx, dy) = canonical_vector_field(self.sys, &st, self.ctx)?;
        Ok(dx.into_iter().chain(dy).map(|v| v * self.span).collect())
    }
}

fn max_abs<T: Real>(y: &[Complex<T>]) -> T {
    y.iter().fold(T::zero(), |m, v| m.max(v.norm()))
}

fn all_finite<T: Real>(y: &[Complex<T>]) -> bool {
    y.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Integrates the canonical equations of `sys` from `initial` to `t_end`
/// along the straight time segment.
pub fn integrate<T: Real>(
    sys: &SystemDescriptor<T>,
    initial: &PhaseState<T>,
    t_end: Complex<T>,
    opts: &IntegratorOptions<T>,
    ctx: Option<&EllipticContext<T>>,
) -> Result<Trajectory<T>> {
    initial.validate(sys)?;
    if sys.time_gauge() == TimeGauge::Tau && !(t_end.im > T::zero()) {
        return Err(Error::InvalidState(format!("end point {} has Im tau <= 0", to_c64(t_end))));
    }
    for p in fixed_singularities(sys) {
        let d = segment_distance(initial.time, t_end, p);
        if d <= T::lit(PATH_CLEARANCE) {
            return Err(Error::SingularPath { point: to_c64(p), distance: d.to_f64_lossy() });
        }
    }
    let rhs = Rhs { sys, ctx, start: initial.time, span: t_end - initial.time };
    let mut y = pack(initial);
    let mut traj = Trajectory {
        system: sys.clone(),
        samples: vec![initial.clone()],
        path: vec![T::zero()],
        slopes: vec![],
        start: initial.time,
        end: t_end,
        tolerances: (opts.rel_tol, opts.abs_tol),
        termination: Termination::Completed,
        steps_accepted: 0,
        steps_rejected: 0,
    };
    if rhs.span.norm() == T::zero() {
        traj.slopes.push(vec![Complex::new(T::zero(), T::zero()); y.len()]);
        return Ok(traj);
    }
    let mut k0 = rhs.eval(T::zero(), &y)?;
    traj.slopes.push(k0.clone());

    let scale =
        |a: &[Complex<T>], b: &[Complex<T>], i: usize| opts.abs_tol + opts.rel_tol * a[i].norm().max(b[i].norm());
    let rms = |v: &[Complex<T>], y0: &[Complex<T>], y1: &[Complex<T>]| {
        let n = T::lit(v.len() as f64);
        let sum = (0..v.len()).fold(T::zero(), |acc, i| {
            let r = v[i].norm() / scale(y0, y1, i);
            acc + r * r
        });
        (sum / n).sqrt()
    };

    // Hairer–Wanner starting step.
    let mut h = {
        let d0 = rms(&y, &y, &y);
        let d1 = rms(&k0, &y, &y);
        let h0 = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) { T::lit(1e-6) } else { T::lit(0.01) * d0 / d1 };
        let h0 = h0.min(T::one());
        let y1: Vec<_> = y.iter().zip(&k0).map(|(a, k)| a + k * h0).collect();
        let d2 = match rhs.eval(h0, &y1) {
            Ok(k1) => rms(&k1.iter().zip(&k0).map(|(a, b)| a - b).collect::<Vec<_>>(), &y, &y) / h0,
            Err(_) => T::zero(),
        };
        let h1 = if d1.max(d2) <= T::lit(1e-15) {
            (h0 * T::lit(1e-3)).max(T::lit(1e-6))
        } else {
            (T::lit(0.01) / d1.max(d2)).powf(T::lit(0.2))
        };
        (h0 * T::lit(100.0)).min(h1).min(T::one())
    };
    if let Some(m) = opts.max_step {
        h = h.min(m);
    }

    let mut s = T::zero();
    let mut err_prev = T::lit(1e-4);
    let mut steps = 0usize;
    let h_min = T::epsilon() * T::lit(16.0);
    let mut k = vec![vec![]; 7];
    while s < T::one() {
        if steps >= opts.max_steps {
            return Err(Error::MaxSteps(opts.max_steps));
        }
        steps += 1;
        if h < h_min {
            traj.termination = if max_abs(&y) > T::lit(1e3) {
                Termination::PoleDetected(to_c64(rhs.time(s)))
            } else {
                Termination::StepUnderflow
            };
            return Ok(traj);
        }
        let last = s + h >= T::one();
        let h_step = if last { T::one() - s } else { h };
        k[0] = k0.clone();
        let mut failed = false;
        for st in 1..7 {
            let yi: Vec<Complex<T>> = (0..y.len())
                .map(|i| {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(st) {
                        let a = Dopri::A[st][j];
                        if a != 0.0 {
                            acc = acc + kj[i] * (h_step * T::lit(a));
                        }
                    }
                    acc
                })
                .collect();
            match rhs.eval(s + h_step * T::lit(Dopri::C[st]), &yi) {
                Ok(v) if all_finite(&v) => k[st] = v,
                _ => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            h = h_step * T::lit(0.25);
            traj.steps_rejected += 1;
            continue;
        }
        let y_new: Vec<Complex<T>> = (0..y.len())
            .map(|i| {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(6) {
                    let b = Dopri::A[6][j];
                    if b != 0.0 {
                        acc = acc + kj[i] * (h_step * T::lit(b));
                    }
                }
                acc
            })
            .collect();
        let err_vec: Vec<Complex<T>> = (0..y.len())
            .map(|i| {
                k.iter()
                    .zip(Dopri::E)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (kj, e)| acc + kj[i] * (h_step * T::lit(e)))
            })
            .collect();
        let err = rms(&err_vec, &y, &y_new);
        if !err.is_finite() {
            h = h_step * T::lit(0.25);
            traj.steps_rejected += 1;
            continue;
        }
        if err <= T::one() {
            s = if last { T::one() } else { s + h_step };
            y = y_new;
            k0 = k[6].clone();
            traj.samples.push(unpack(&y, rhs.time(s)));
            traj.path.push(s);
            traj.slopes.push(k0.clone());
            traj.steps_accepted += 1;
            if max_abs(&y) > T::lit(POLE_THRESHOLD) {
                traj.termination = Termination::PoleDetected(to_c64(rhs.time(s)));
                return Ok(traj);
            }
            let e = err.max(T::lit(1e-10));
            let fac = T::lit(0.9) * e.powf(T::lit(-0.7 / 5.0)) * err_prev.powf(T::lit(0.4 / 5.0));
            h = h_step * fac.max(T::lit(0.2)).min(T::lit(5.0));
            err_prev = e;
        } else {
            let fac = T::lit(0.9) * err.powf(T::lit(-0.2));
            h = h_step * fac.max(T::lit(0.2));
            traj.steps_rejected += 1;
        }
        if let Some(m) = opts.max_step {
            h = h.min(m);
        }
    }
    Ok(traj)
}

/// Values at `n` equally spaced path parameters from the local degree-5
/// polynomial through the six nearest samples.
fn resample<T: Real>(path: &[T], values: &[Complex<T>], grid: &[T]) -> Vec<Complex<T>> {
    let n = path.len();
    let width = 6.min(n);
    grid.iter()
        .map(|&s| {
            let i = path.partition_point(|&p| p < s);
            let lo = i.saturating_sub(width / 2).min(n - width);
            let idx = lo..lo + width;
            let mut acc = Complex::new(T::zero(), T::zero());
            for a in idx.clone() {
                let mut w = T::one();
                for b in idx.clone() {
                    if a != b {
                        w = w * (s - path[b]) / (path[a] - path[b]);
                    }
                }
                acc = acc + values[a] * w;
            }
            acc
        })
        .collect()
}

/// Largest `|λ″ − F(λ, λ′, t)|` over interior points of a Painlevé-side
/// trajectory, with derivatives from fourth-order central differences on a
/// uniform resampling of each component. Multi-component trajectories are
/// checked componentwise and must have `g₄² = 0`.
pub fn painleve_residual<T: Real>(traj: &Trajectory<T>) -> Result<T> {
    let sys = &traj.system;
    if sys.side != Side::Painleve {
        return Err(Error::InvalidState("residual needs a Painleve-side trajectory".into()));
    }
    if sys.rank > 1 && sys.g4sq.norm() > T::zero() {
        return Err(Error::InvalidState("residual is defined for uncoupled components only".into()));
    }
    let n = traj.samples.len();
    if n < MIN_RESIDUAL_SAMPLES {
        return Err(Error::TooSparse(n, MIN_RESIDUAL_SAMPLES));
    }
    let prm = sys.painleve_params()?;
    let (s0, s1) = (traj.path[0], traj.path[n - 1]);
    let hs = (s1 - s0) / T::lit((n - 1) as f64);
    let grid: Vec<T> = (0..n).map(|i| s0 + hs * T::lit(i as f64)).collect();
    let span = traj.end - traj.start;
    let dt = span * hs;
    let twelve = T::lit(12.0);
    let mut worst = T::zero();
    // near-coincident nodes (a sliver of a final step) wreck the interpolant
    let min_gap = hs * T::lit(1e-3);
    let mut keep: Vec<usize> = vec![0];
    for i in 1..n {
        if traj.path[i] - traj.path[*keep.last().unwrap()] >= min_gap {
            keep.push(i);
        } else if i == n - 1 {
            *keep.last_mut().unwrap() = i;
        }
    }
    let nodes: Vec<T> = keep.iter().map(|&i| traj.path[i]).collect();
    for comp in 0..sys.rank {
        let vals: Vec<Complex<T>> = keep.iter().map(|&i| traj.samples[i].coords[comp]).collect();
        let f = resample(&nodes, &vals, &grid);
        for i in 2..n - 2 {
            let d1 = (f[i - 2] - f[i - 1] * T::lit(8.0) + f[i + 1] * T::lit(8.0) - f[i + 2]) / (dt * twelve);
            let d2 = (-f[i - 2] + f[i - 1] * T::lit(16.0) - f[i] * T::lit(30.0) + f[i + 1] * T::lit(16.0) - f[i + 2])
                / (dt * dt * twelve);
            let t = traj.start + span * grid[i];
            let r = (d2 - painleve_second_order(&prm, f[i], d1, t)).norm();
            worst = worst.max(r);
        }
    }
    Ok(worst)
}
