use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

use painleve_core::dynamics::{integrate, IntegratorOptions, Termination, Trajectory};
use painleve_core::systems::{param_to_painleve, AuxParams, PainleveParams, ParamSet};
use painleve_core::verify::{reports_to_json, run_suite, Suite};
use painleve_core::{EllipticContext, Equation, PhaseState, Side, SystemDescriptor};

#[derive(Parser)]
#[command(name = "painleve", version, about = "Painleve equations and their Calogero-side Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the canonical equations of one system along a straight time segment.
    Integrate(IntegrateArgs),
    /// Run verification suites and write a JSON report.
    Verify(VerifyArgs),
    /// Convert auxiliary constants to alpha, beta, gamma, delta.
    Params(ParamsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct IntegrateArgs {
    #[arg(long)]
    equation: Equation,
    #[arg(long, default_value = "painleve")]
    side: Side,
    #[arg(long, default_value_t = 1)]
    rank: usize,
    /// Flat JSON object of parameter symbols, plus `g4sq` for rank > 1.
    #[arg(long)]
    params: Option<PathBuf>,
    /// JSON object with `time`, `coords` and `momenta`.
    #[arg(long)]
    initial: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    t_end: String,
    #[arg(long, default_value_t = 1e-10)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    abs_tol: f64,
    #[arg(long, default_value_t = 200_000)]
    max_steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to the extension of `--out`, else csv.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ParamsArgs {
    #[arg(long)]
    equation: Equation,
    /// JSON file or inline `key=value,...`.
    #[arg(long, default_value = "")]
    aux: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `1`, `-2.5`, `3i`, `-i`, `0.5+0.25i`, `1e-3-2e-2i` or `[re, im]`.
fn parse_complex(s: &str) -> Result<Complex64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.starts_with('[') {
        let v: Vec<f64> = serde_json::from_str(&s).with_context(|| format!("bad complex `{s}`"))?;
        return match v.as_slice() {
            [re, im] => Ok(Complex64::new(*re, *im)),
            _ => bail!("complex array must have two entries: `{s}`"),
        };
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(s.parse().with_context(|| format!("bad complex `{s}`"))?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse().with_context(|| format!("bad imaginary part in `{s}`"))?,
    };
    Ok(Complex64::new(re.parse().with_context(|| format!("bad real part in `{s}`"))?, im))
}

fn complex_from_json(v: &Value) -> Result<Complex64> {
    match v {
        Value::Number(n) => Ok(Complex64::new(n.as_f64().ok_or_else(|| anyhow!("bad number"))?, 0.0)),
        Value::String(s) => parse_complex(s),
        Value::Array(a) if a.len() == 2 => {
            let f = |x: &Value| x.as_f64().ok_or_else(|| anyhow!("complex entries must be numbers"));
            Ok(Complex64::new(f(&a[0])?, f(&a[1])?))
        }
        other => bail!("expected a complex number, got {other}"),
    }
}

fn complex_list(v: Option<&Value>, what: &str) -> Result<Vec<Complex64>> {
    match v {
        Some(Value::Array(a)) => a.iter().map(complex_from_json).collect(),
        Some(x) => Ok(vec![complex_from_json(x)?]),
        None => bail!("initial state is missing `{what}`"),
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))
}

fn symbol_table(v: &Value) -> Result<BTreeMap<String, Complex64>> {
    let obj = v.as_object().ok_or_else(|| anyhow!("parameter file must be a flat JSON object"))?;
    obj.iter()
        .map(|(k, x)| Ok((k.clone(), complex_from_json(x).with_context(|| format!("parameter `{k}`"))?)))
        .collect()
}

fn parse_inline(s: &str) -> Result<BTreeMap<String, Complex64>> {
    s.split(',')
        .filter(|kv| !kv.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("expected key=value, got `{kv}`"))?;
            Ok((k.trim().to_string(), parse_complex(v)?))
        })
        .collect()
}

/// Auxiliary constants if all are present, else `alpha..delta` directly.
fn param_set(eq: Equation, table: &BTreeMap<String, Complex64>) -> Result<ParamSet<f64>> {
    if let Ok(aux) = AuxParams::from_map(eq, table) {
        return Ok(ParamSet::Aux(aux));
    }
    let names: &[&str] = match eq {
        Equation::VI | Equation::V | Equation::III => &["alpha", "beta", "gamma", "delta"],
        Equation::IV => &["alpha", "beta"],
        Equation::II => &["alpha"],
        Equation::I => &[],
    };
    if names.iter().all(|k| table.contains_key(*k)) {
        let z = Complex64::new(0.0, 0.0);
        let g = |k: &str| table.get(k).copied().unwrap_or(z);
        return Ok(ParamSet::Painleve(PainleveParams::new(eq, g("alpha"), g("beta"), g("gamma"), g("delta"))));
    }
    bail!("parameters for {eq} need either {:?} or {:?}", AuxParams::<f64>::required_symbols(eq), names)
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(traj: &Trajectory<f64>, side: Side, out: &mut dyn Write) -> Result<()> {
    let rank = traj.system.rank;
    let (x, y) = match side {
        Side::Painleve => ("l", "m"),
        Side::Calogero => ("q", "p"),
    };
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["re_t".to_string(), "im_t".to_string()];
    for name in [x, y] {
        for j in 1..=rank {
            header.push(format!("re_{name}{j}"));
            header.push(format!("im_{name}{j}"));
        }
    }
    w.write_record(&header)?;
    for s in &traj.samples {
        let mut row = vec![fmt17(s.time.re), fmt17(s.time.im)];
        for z in s.coords.iter().chain(&s.momenta) {
            row.push(fmt17(z.re));
            row.push(fmt17(z.im));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SampleOut<'a> {
    t: Complex64,
    coords: &'a [Complex64],
    momenta: &'a [Complex64],
}

#[derive(Serialize)]
struct TrajectoryOut<'a> {
    equation: &'static str,
    side: &'static str,
    rank: usize,
    g4sq: Complex64,
    rel_tol: f64,
    abs_tol: f64,
    termination: Termination,
    steps_accepted: usize,
    steps_rejected: usize,
    samples: Vec<SampleOut<'a>>,
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Painleve => "painleve",
        Side::Calogero => "calogero",
    }
}

fn write_json(traj: &Trajectory<f64>, out: &mut dyn Write) -> Result<()> {
    let doc = TrajectoryOut {
        equation: traj.system.equation.cli_name(),
        side: side_name(traj.system.side),
        rank: traj.system.rank,
        g4sq: traj.system.g4sq,
        rel_tol: traj.tolerances.0,
        abs_tol: traj.tolerances.1,
        termination: traj.termination,
        steps_accepted: traj.steps_accepted,
        steps_rejected: traj.steps_rejected,
        samples: traj.samples.iter().map(|s| SampleOut { t: s.time, coords: &s.coords, momenta: &s.momenta }).collect(),
    };
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)?;
    Ok(())
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_integrate(a: IntegrateArgs) -> Result<ExitCode> {
    let mut table = match &a.params {
        Some(p) => symbol_table(&read_json(p)?)?,
        None => BTreeMap::new(),
    };
    let g4sq = table.remove("g4sq").unwrap_or_default();
    let params = param_set(a.equation, &table)?;
    let sys = SystemDescriptor::new(a.equation, a.side, a.rank, g4sq, params)?;

    let init = read_json(&a.initial)?;
    let time = complex_from_json(init.get("time").ok_or_else(|| anyhow!("initial state is missing `time`"))?)?;
    let initial = PhaseState::new(
        complex_list(init.get("coords"), "coords")?,
        complex_list(init.get("momenta"), "momenta")?,
        time,
    );
    if initial.rank() != a.rank {
        bail!("initial state has {} components but --rank is {}", initial.rank(), a.rank);
    }
    let t_end = parse_complex(&a.t_end)?;
    let ctx = if sys.time_gauge() == painleve_core::TimeGauge::Tau { Some(EllipticContext::new(time)?) } else { None };
    let opts = IntegratorOptions { max_steps: a.max_steps, ..IntegratorOptions::with_tolerances(a.rel_tol, a.abs_tol) };
    let traj = integrate(&sys, &initial, t_end, &opts, ctx.as_ref())?;

    let format = a.format.unwrap_or(match a.out.as_ref().and_then(|p| p.extension()) {
        Some(e) if e == "json" => Format::Json,
        _ => Format::Csv,
    });
    let mut out = open_out(a.out.as_deref())?;
    match format {
        Format::Csv => write_csv(&traj, a.side, &mut out)?,
        Format::Json => write_json(&traj, &mut out)?,
    }
    out.flush()?;
    Ok(match traj.termination {
        Termination::Completed => ExitCode::SUCCESS,
        Termination::PoleDetected(t) => {
            eprintln!("pole detected near t = {t}");
            ExitCode::from(2)
        }
        Termination::StepUnderflow => {
            eprintln!("step size underflow");
            ExitCode::from(2)
        }
    })
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode> {
    let suite: Suite = a.suite.parse().map_err(|e: String| anyhow!(e))?;
    let reports = run_suite(suite, a.seed);
    let json = reports_to_json(&reports);
    let summary = reports
        .iter()
        .map(|r| {
            format!(
                "{} {} max_error={:.3e} tolerance={:.1e} samples={}",
                if r.passed { "PASS" } else { "FAIL" },
                r.check_id,
                r.max_error,
                r.tolerance,
                r.samples
            )
        })
        .collect::<Vec<_>>();
    match &a.out {
        Some(p) => {
            fs::write(p, format!("{json}\n")).with_context(|| format!("cannot write {}", p.display()))?;
            for line in &summary {
                println!("{line}");
            }
        }
        None => {
            println!("{json}");
            for line in &summary {
                eprintln!("{line}");
            }
        }
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    eprintln!("{} checks, {} failed", reports.len(), failed);
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_params(a: ParamsArgs) -> Result<ExitCode> {
    let table = if a.aux.trim_start().starts_with('{') || a.aux.ends_with(".json") || Path::new(&a.aux).is_file() {
        let v = if a.aux.trim_start().starts_with('{') {
            serde_json::from_str(&a.aux)?
        } else {
            read_json(Path::new(&a.aux))?
        };
        symbol_table(&v)?
    } else {
        parse_inline(&a.aux)?
    };
    let aux = AuxParams::from_map(a.equation, &table)?;
    let prm = match a.equation {
        Equation::II => {
            let z = Complex64::new(0.0, 0.0);
            PainleveParams::new(Equation::II, aux.need(Equation::II, "alpha")?, z, z, z)
        }
        Equation::I => {
            let z = Complex64::new(0.0, 0.0);
            PainleveParams::new(Equation::I, z, z, z, z)
        }
        eq => param_to_painleve(&aux, eq)?,
    };
    let mut obj = serde_json::Map::new();
    for (k, v) in [("alpha", prm.alpha), ("beta", prm.beta), ("gamma", prm.gamma), ("delta", prm.delta)] {
        if let Some(z) = v {
            obj.insert(k.into(), serde_json::json!([z.re + 0.0, z.im + 0.0]));
        }
    }
    let text = serde_json::to_string(&Value::Object(obj))?;
    match &a.out {
        Some(p) => fs::write(p, format!("{text}\n"))?,
        None => println!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.command {
        Command::Integrate(a) => cmd_integrate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Params(a) => cmd_params(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
