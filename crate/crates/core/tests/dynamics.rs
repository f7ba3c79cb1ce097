use num_complex::Complex64;
use painleve_core::dynamics::{integrate, painleve_residual, IntegratorOptions, Termination, Trajectory};
use painleve_core::verify::{default_aux, dynamic_arc, dynamic_initial, run_dynamic_correspondence};
use painleve_core::{AuxParams, EllipticContext, Equation, ParamSet, PhaseState, Side, SystemDescriptor};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn painleve(eq: Equation) -> SystemDescriptor<f64> {
    SystemDescriptor::new(eq, Side::Painleve, 1, c(0.0, 0.0), ParamSet::Aux(default_aux(eq, 1))).unwrap()
}

fn dense(rel: f64, abs: f64) -> IntegratorOptions<f64> {
    IntegratorOptions { max_step: Some(1.0 / 400.0), ..IntegratorOptions::with_tolerances(rel, abs) }
}

fn endpoint(sys: &SystemDescriptor<f64>, s0: &PhaseState<f64>, t1: Complex64, rel: f64) -> PhaseState<f64> {
    let tr = integrate(sys, s0, t1, &IntegratorOptions::with_tolerances(rel, 1e-16), None).unwrap();
    assert_eq!(tr.termination, Termination::Completed);
    tr.last().clone()
}

fn dist(a: &PhaseState<f64>, b: &PhaseState<f64>) -> f64 {
    a.coords
        .iter()
        .chain(&a.momenta)
        .zip(b.coords.iter().chain(&b.momenta))
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[test]
fn pi_second_order_residual() {
    let sys = painleve(Equation::I);
    let s0 = PhaseState::rank1(c(0.2, 0.1), c(-0.3, 0.2), c(0.0, 0.0));
    let tr = integrate(&sys, &s0, c(1.0, 0.0), &dense(1e-10, 1e-12), None).unwrap();
    assert_eq!(tr.termination, Termination::Completed);
    let r = painleve_residual(&tr).unwrap();
    assert!(r < 1e-6, "residual {r}");
}

#[test]
fn piii_second_order_residual() {
    let sys = painleve(Equation::III);
    let s0 = PhaseState::rank1(c(0.6, 0.2), c(0.1, -0.2), c(1.0, 0.1));
    let tr = integrate(&sys, &s0, c(1.5, 0.3), &dense(1e-10, 1e-12), None).unwrap();
    assert_eq!(tr.termination, Termination::Completed);
    assert!(painleve_residual(&tr).unwrap() < 1e-4);
}

#[test]
fn all_equations_residual() {
    for eq in Equation::ALL {
        let sys = painleve(eq);
        let t0 = match eq {
            Equation::VI => c(0.35, 0.3),
            Equation::V | Equation::III => c(1.0, 0.2),
            _ => c(0.2, 0.1),
        };
        let s0 = PhaseState::rank1(c(0.45, 0.2), c(0.1, -0.1), t0);
        let tr = integrate(&sys, &s0, t0 + 0.3, &dense(1e-11, 1e-13), None).unwrap();
        assert!(painleve_residual(&tr).unwrap() < 1e-4, "{eq}");
    }
}

#[test]
fn residual_detects_wrong_dynamics() {
    let sys = painleve(Equation::I);
    let t = |k: usize| c(0.5 + 0.01 * k as f64, 0.0);
    let samples = (0..40).map(|k| PhaseState::rank1(c(0.0, 0.0), c(0.0, 0.0), t(k))).collect();
    let tr = Trajectory::from_samples(sys, samples);
    let r = painleve_residual(&tr).unwrap();
    // 0 − (6·0 + t) at the largest interior t
    assert!((r - t(37).norm()).abs() < 1e-12, "{r}");
}

#[test]
fn zero_length_interval() {
    let sys = painleve(Equation::II);
    let s0 = PhaseState::rank1(c(0.2, 0.0), c(0.1, 0.0), c(0.5, 0.5));
    let tr = integrate(&sys, &s0, s0.time, &IntegratorOptions::default(), None).unwrap();
    assert_eq!(tr.samples, vec![s0]);
}

#[test]
fn halving_rel_tol_reduces_error_fourfold() {
    let sys = painleve(Equation::II);
    let s0 = PhaseState::rank1(c(0.3, 0.1), c(-0.2, 0.15), c(0.0, 0.0));
    let t1 = c(1.5, 0.2);
    let reference = endpoint(&sys, &s0, t1, 1e-12);
    let e1 = dist(&endpoint(&sys, &s0, t1, 1e-6), &reference);
    let e2 = dist(&endpoint(&sys, &s0, t1, 5e-7), &reference);
    assert!(e1 / e2 >= 4.0, "error ratio {} ({e1:e} -> {e2:e})", e1 / e2);
}

#[test]
fn self_convergence_order() {
    for (eq, t1) in [(Equation::II, c(1.5, 0.2)), (Equation::IV, c(0.8, 0.1))] {
        let sys = painleve(eq);
        let s0 = PhaseState::rank1(c(0.3, 0.1), c(-0.2, 0.15), c(0.1, 0.0));
        let reference = endpoint(&sys, &s0, t1, 1e-13);
        let errs: Vec<f64> =
            [1e-5, 1e-6, 1e-7, 1e-8].iter().map(|&tol| dist(&endpoint(&sys, &s0, t1, tol), &reference)).collect();
        let expect = 10f64.powf(5.0 / 6.0);
        for w in errs.windows(2) {
            let r = w[0] / w[1];
            assert!(r / expect < 3.0 && expect / r < 3.0, "{eq}: {errs:?}");
        }
    }
}

#[test]
fn pole_is_detected() {
    // λ″ = 6λ² + t from a large positive λ blows up before t = 1.
    let sys = painleve(Equation::I);
    let s0 = PhaseState::rank1(c(3.0, 0.0), c(6.0, 0.0), c(0.0, 0.0));
    let tr = integrate(&sys, &s0, c(1.0, 0.0), &IntegratorOptions::default(), None).unwrap();
    match tr.termination {
        Termination::PoleDetected(t) => assert!(t.re > 0.0 && t.re < 1.0),
        other => panic!("expected a pole, got {other:?}"),
    }
}

#[test]
fn two_path_endpoints_agree() {
    let ctx = EllipticContext::new(c(0.1, 1.2)).unwrap();
    for eq in Equation::ALL {
        let aux: AuxParams<f64> = default_aux(eq, 7);
        let r =
            run_dynamic_correspondence(eq, 1, &aux, &dynamic_initial(eq, &ctx), dynamic_arc(eq), Some(&ctx)).unwrap();
        assert!(r.passed, "{eq}: {}", r.max_error);
    }
}

#[test]
fn single_precision_integration() {
    let sys32 = SystemDescriptor::<f32>::new(
        Equation::I,
        Side::Painleve,
        1,
        num_complex::Complex32::new(0.0, 0.0),
        ParamSet::Aux(AuxParams::default()),
    )
    .unwrap();
    let s0 = PhaseState::rank1(
        num_complex::Complex32::new(0.2, 0.1),
        num_complex::Complex32::new(-0.3, 0.2),
        num_complex::Complex32::new(0.0, 0.0),
    );
    let tr = integrate(
        &sys32,
        &s0,
        num_complex::Complex32::new(1.0, 0.0),
        &IntegratorOptions::with_tolerances(1e-5, 1e-6),
        None,
    )
    .unwrap();
    let s64 = PhaseState::rank1(c(0.2, 0.1), c(-0.3, 0.2), c(0.0, 0.0));
    let e64 = endpoint(&painleve(Equation::I), &s64, c(1.0, 0.0), 1e-12);
    let l32 = tr.last().coords[0];
    assert!((c(l32.re as f64, l32.im as f64) - e64.coords[0]).norm() < 1e-3);
}
