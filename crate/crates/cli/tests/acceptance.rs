//! One PASS/FAIL line per acceptance criterion.

use std::process::{Command, ExitCode};

use num_complex::Complex64;
use painleve_core::verify::{
    asymptotic_checks, default_aux, default_contexts, dynamic_arc, dynamic_initial, run_correspondence_suite,
    run_degeneration_suite, run_dynamic_correspondence, run_gradient_check, run_identity_suite, run_residual_check,
    CheckReport, DegenerationSchedule,
};
use painleve_core::{EllipticContext, Equation, Side};

type Outcome = Result<String, String>;

fn within(reports: &[CheckReport], tol: f64) -> Outcome {
    let worst = reports.iter().map(|r| r.max_error).fold(0.0, f64::max);
    match reports.iter().find(|r| !(r.max_error < tol)) {
        None => Ok(format!("{} checks, worst {worst:.3e} < {tol:e}", reports.len())),
        Some(r) => Err(format!("{}: {:.3e} vs {tol:e}", r.check_id, r.max_error)),
    }
}

fn identities() -> Outcome {
    let reports = run_identity_suite(&default_contexts(), 7);
    let pinned = [
        ("periodicity", 1e-11),
        ("addition", 1e-9),
        ("shift", 1e-9),
        ("f_tau_theta", 1e-9),
        ("heat", 1e-6),
        ("log_theta", 1e-8),
    ];
    let mut count = 0;
    for (name, tol) in pinned {
        let sel: Vec<_> =
            reports.iter().filter(|r| r.check_id.starts_with(&format!("identity/{name}/"))).cloned().collect();
        if sel.len() != 3 {
            return Err(format!("{name}: expected 3 contexts, got {}", sel.len()));
        }
        if let Some(r) = sel.iter().find(|r| r.samples < 50) {
            return Err(format!("{}: only {} samples", r.check_id, r.samples));
        }
        if let Some(r) = sel.iter().find(|r| !(r.max_error <= tol)) {
            return Err(format!("{}: {:.3e} vs {tol:e}", r.check_id, r.max_error));
        }
        count += sel.len();
    }
    if let Some(r) = reports.iter().find(|r| !r.passed) {
        return Err(format!("{} failed", r.check_id));
    }
    Ok(format!("{count} pinned checks, {} total", reports.len()))
}

fn asymptotics() -> Outcome {
    let reports = asymptotic_checks();
    let get = |id: &str| reports.iter().find(|r| r.check_id == format!("asymptotic/{id}")).cloned();
    for (id, tol) in [("e21_limit", 1e-6), ("e1_limit", 1e-6), ("t_limit", 1e-8), ("p_trig_rate", 3.0)] {
        let r = get(id).ok_or(format!("{id} missing"))?;
        if !(r.max_error < tol) {
            return Err(format!("{id}: {:.3e} vs {tol:e}", r.max_error));
        }
    }
    Ok("Im tau = 8 limits and ratio test".into())
}

fn gradients() -> Outcome {
    let mut reports = Vec::new();
    for eq in Equation::ALL {
        for side in [Side::Painleve, Side::Calogero] {
            for rank in [1, 3] {
                let r = run_gradient_check(eq, side, rank, 30, 7);
                if r.samples < 30 {
                    return Err(format!("{}: {} samples", r.check_id, r.samples));
                }
                reports.push(r);
            }
        }
    }
    within(&reports, 1e-6)
}

fn correspondence() -> Outcome {
    let mut reports = Vec::new();
    for eq in Equation::ALL {
        let aux = default_aux(eq, 7);
        reports.push(run_correspondence_suite(eq, 1, &aux, Complex64::new(0.0, 0.0), 100, 7));
        reports.push(run_correspondence_suite(eq, 3, &aux, Complex64::new(0.7, 0.1), 50, 7));
    }
    within(&reports, 1e-5)
}

fn dynamic() -> Outcome {
    let ctx = EllipticContext::new(Complex64::new(0.1, 1.2)).map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for eq in Equation::ALL {
        let arc = dynamic_arc(eq);
        if (arc.norm() - 0.3).abs() > 1e-12 {
            return Err(format!("{eq}: arc length {}", arc.norm()));
        }
        let r = run_dynamic_correspondence(eq, 1, &default_aux(eq, 7), &dynamic_initial(eq, &ctx), arc, Some(&ctx))
            .map_err(|e| format!("{eq}: {e}"))?;
        reports.push(r);
    }
    within(&reports, 1e-6)
}

fn ratios(r: &CheckReport) -> Vec<f64> {
    r.metadata["ratios"]
        .trim_matches(|ch| ch == '[' || ch == ']')
        .split(',')
        .filter_map(|x| x.trim().parse().ok())
        .collect()
}

fn degeneration() -> Outcome {
    let pv = run_degeneration_suite(&DegenerationSchedule::pvi_to_pv(), &[1e-2, 1e-3]).map_err(|e| e.to_string())?;
    let r = ratios(&pv[0]);
    if !(r.len() == 1 && (3.3..=30.0).contains(&r[0])) {
        return Err(format!("PVI->PV ratio {r:?}"));
    }
    let ell = run_degeneration_suite(&DegenerationSchedule::elliptic_to_hyperbolic(), &[1e-2, 1e-3, 1e-4])
        .map_err(|e| e.to_string())?;
    let pot = ell.iter().find(|r| r.check_id.ends_with("/potential")).ok_or("potential check missing")?;
    if !(pot.max_error < 1e-3) {
        return Err(format!("elliptic potential residual {:.3e}", pot.max_error));
    }
    let mut n = 0;
    for s in DegenerationSchedule::all() {
        for r in run_degeneration_suite(&s, &s.default_eps()).map_err(|e| format!("{}: {e}", s.name()))? {
            if !(r.max_error <= 3.0) {
                return Err(format!("{}: off by factor {:.2}", r.check_id, r.max_error));
            }
            n += 1;
        }
    }
    Ok(format!("PVI->PV ratio {:.2}, potential {:.2e}, {n} order checks", r[0], pot.max_error))
}

fn residual() -> Outcome {
    let reports: Vec<_> = Equation::ALL.iter().map(|&eq| run_residual_check(eq, 7)).collect();
    within(&reports, 1e-4)
}

fn determinism() -> Outcome {
    let once = || {
        Command::new(env!("CARGO_BIN_EXE_painleve"))
            .args(["verify", "--suite", "all", "--seed", "7"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (once()?, once()?);
    if !a.status.success() {
        return Err(format!("exit {:?}", a.status.code()));
    }
    if a.stdout.is_empty() || a.stdout != b.stdout {
        return Err("reports differ between runs".into());
    }
    Ok(format!("{} bytes identical", a.stdout.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("elliptic identities", identities),
        ("theta-expansion asymptotics", asymptotics),
        ("hamiltonian gradients", gradients),
        ("vector-field correspondence", correspondence),
        ("two-path dynamics", dynamic),
        ("degeneration limits", degeneration),
        ("painleve residual", residual),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(msg) => println!("PASS criterion {} {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {} {name}: {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
