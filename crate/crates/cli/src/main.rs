//! `qch`: builds metric families, runs curvature checks and writes
//! JSON reports or CSV tables.
//!
//! Exit codes: 0 all checks pass, 1 some check fails, 2 malformed
//! arguments, 3 domain error, 4 output could not be written.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use qch_core::diffgeo::{frame_at, riemann, RadialDistribution};
use qch_core::error::GeometryError;
use qch_core::families::{
    biconformal_apply, biconformally_flat_normal_form, flat_metric, log_polynomial_v, registry_metric, BiconformalPair,
    PotentialKind, RadialMetric, RadialScalar,
};
use qch_core::jet::Jet;
use qch_core::qch::qch_decompose;
use qch_core::rotational::{
    closed_form_coefficients, constant_curvature_meridian, induced_metric, meridian_b_zero_residual, rotational_metric,
    warped_curvature_coefficients, warped_curvature_tensor, RadialChart, RotationalProfile,
};
use qch_core::sampling::{annulus_points, random_direction};
use qch_core::structure::{
    check_b0_distribution, check_b_distribution, check_composition, check_integrability, check_qc_invariance, check_qch,
    check_ricci, check_symmetries, flatten, Tolerances, Verdict, VerificationReport,
};

/// Residual bound for `b` along a sampled meridian.
const MERIDIAN_B_TOL: f64 = 1e-6;
/// Radii used for sweeps, clipped to the family's own annulus.
const SWEEP_RADII: (f64, f64) = (0.4, 3.0);

#[derive(Parser, Debug)]
#[command(name = "qch", version, about = "Curvature checks for radial Kähler metrics and their biconformal images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the check suite on a family.
    Verify(VerifyArgs),
    /// Report the (a, b, c) decomposition of a family's curvature.
    Decompose(FamilyRun),
    /// Apply a biconformal transformation and check the invariants.
    Transform(TransformArgs),
    /// Find the biconformal transformation that flattens a family.
    Flatten(FamilyRun),
    /// Sample the meridian of the constant holomorphic curvature hypersurface.
    Meridian(MeridianArgs),
    /// Curvature of a rotational hypersurface profile.
    Rotational(RotationalArgs),
}

#[derive(Args, Debug, Clone)]
struct FamilySpec {
    /// flat | potential | normal-form | rotational
    #[arg(long, default_value = "flat")]
    family: String,
    /// Potential for `--family potential`: quadratic | log1p | polynomial:c0,c1,...
    #[arg(long, default_value = "log1p")]
    f: String,
    /// `v` for `--family normal-form`: zero | logpoly:c1,c2 | poly:c0,c1,...
    #[arg(long = "nf-v", default_value = "logpoly:0.5,0")]
    nf_v: String,
    /// Profile for `--family rotational`: sin | ramp | constant-holomorphic
    #[arg(long, default_value = "sin")]
    profile: String,
    /// Curvature for `--profile constant-holomorphic`.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    a: f64,
    /// Complex dimension.
    #[arg(long, default_value_t = 3)]
    n: usize,
}

#[derive(Args, Debug, Clone)]
struct Sweep {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    points: usize,
    /// Override a tolerance, e.g. `--tol qch=1e-4`. Repeatable.
    #[arg(long = "tol", value_name = "KEY=VAL")]
    tol: Vec<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FamilyRun {
    #[command(flatten)]
    family: FamilySpec,
    #[command(flatten)]
    sweep: Sweep,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    family: FamilySpec,
    #[command(flatten)]
    sweep: Sweep,
    /// symmetries | qch | ricci | b | b0 | integrability | rotational-coefficients. Repeatable; default all that apply.
    #[arg(long)]
    check: Vec<String>,
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[command(flatten)]
    family: FamilySpec,
    #[command(flatten)]
    sweep: Sweep,
    /// `v` of the transformation: zero | logpoly:c1,c2 | poly:c0,c1,...
    #[arg(long)]
    v: String,
    /// Second `v`, composed after the first and compared with the summed pair.
    #[arg(long = "then-v")]
    then_v: Option<String>,
}

#[derive(Args, Debug)]
struct MeridianArgs {
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// CSV output (columns x,y).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RotationalArgs {
    #[command(flatten)]
    family: FamilySpec,
    #[command(flatten)]
    sweep: Sweep,
    /// CSV output (columns s,t,a,b,c,alpha,beta).
    #[arg(long)]
    csv: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Domain(GeometryError),
    Output(String),
}

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Self {
        Failure::Domain(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Domain(_) => 3,
            Failure::Output(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "invalid configuration: {m}"),
            Failure::Domain(e) => write!(f, "{e}"),
            Failure::Output(m) => write!(f, "cannot write output: {m}"),
        }
    }
}

type Run<T> = Result<T, Failure>;

#[derive(Serialize)]
struct RunConfig {
    command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    checks: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transform: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    meridian: Option<(f64, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerances: Option<Tolerances>,
}

#[derive(Serialize)]
struct Summary {
    checks: usize,
    passed: usize,
    failed: usize,
    out_of_range: usize,
    all_passed: bool,
}

#[derive(Serialize)]
struct Report {
    config: RunConfig,
    checks: Vec<VerificationReport>,
    summary: Summary,
}

impl Report {
    fn new(config: RunConfig, checks: Vec<VerificationReport>) -> Self {
        let count = |v: Verdict| checks.iter().filter(|c| c.verdict == v).count();
        let summary = Summary {
            checks: checks.len(),
            passed: count(Verdict::Pass),
            failed: count(Verdict::Fail),
            out_of_range: count(Verdict::OutOfRange),
            all_passed: count(Verdict::Fail) == 0,
        };
        Self { config, checks, summary }
    }

    fn emit(&self, path: Option<&PathBuf>) -> Run<u8> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Failure::Output(e.to_string()))? + "\n";
        match path {
            Some(p) => {
                write_file(p, &text)?;
                for c in &self.checks {
                    println!("{:<28} {:>12} max residual {:.3e} (tol {:.1e})", c.name, verdict_name(c.verdict), c.max_residual(), c.tolerance);
                }
            }
            None => print!("{text}"),
        }
        Ok(if self.summary.all_passed { 0 } else { 1 })
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "FAIL",
        Verdict::OutOfRange => "out-of-range",
    }
}

fn write_file(path: &PathBuf, text: &str) -> Run<()> {
    fs::write(path, text).map_err(|e| Failure::Output(format!("{}: {e}", path.display())))
}

fn tolerances(sweep: &Sweep) -> Run<Tolerances> {
    let mut t = Tolerances::default();
    for item in &sweep.tol {
        let (key, val) = item.split_once('=').ok_or_else(|| Failure::Config(format!("--tol expects KEY=VAL, got {item:?}")))?;
        let v: f64 = val.trim().parse().map_err(|_| Failure::Config(format!("tolerance {key} is not a number: {val:?}")))?;
        t.set(key.trim(), v).map_err(|e| Failure::Config(e.to_string()))?;
    }
    Ok(t)
}

fn parse_coeffs(list: &str) -> Run<Vec<f64>> {
    list.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|_| Failure::Config(format!("bad coefficient {c:?}"))))
        .collect()
}

fn parse_v(spec: &str) -> Run<RadialScalar<f64>> {
    if spec == "zero" {
        return Ok(RadialScalar::constant(0.0));
    }
    if let Some(rest) = spec.strip_prefix("logpoly:") {
        let c = parse_coeffs(rest)?;
        if c.len() != 2 || c.iter().any(|x| *x < 0.0) {
            return Err(Failure::Config("logpoly expects two nonnegative coefficients c1,c2".into()));
        }
        return Ok(log_polynomial_v(c[0], c[1]));
    }
    if let Some(rest) = spec.strip_prefix("poly:") {
        let c = parse_coeffs(rest)?;
        return Ok(RadialScalar::from_expr(move |x| {
            let mut acc = Jet::constant(0.0);
            for ck in c.iter().rev() {
                acc = acc * x + *ck;
            }
            acc
        }));
    }
    Err(Failure::Config(format!("unknown v {spec:?}; expected zero, logpoly:c1,c2 or poly:c0,c1,...")))
}

fn parse_profile(spec: &FamilySpec) -> Run<RotationalProfile<f64>> {
    match spec.profile.as_str() {
        "sin" | "sine" => Ok(RotationalProfile::sine()),
        "ramp" => Ok(RotationalProfile::ramp()),
        "constant-holomorphic" => Ok(RotationalProfile::constant_holomorphic(spec.a)?),
        other => Err(Failure::Config(format!("unknown profile {other:?}; expected sin, ramp or constant-holomorphic"))),
    }
}

/// A family with the points it is sampled at.
struct Sampled {
    label: String,
    metric: RadialMetric<f64>,
    chart: Option<RadialChart<f64>>,
    /// Profile parameter `s` of each point, rotational families only.
    params: Vec<f64>,
    points: Vec<Vec<f64>>,
}

fn build_family(spec: &FamilySpec, sweep: &Sweep) -> Run<Sampled> {
    if spec.n == 0 {
        return Err(Failure::Config("n must be at least 1".into()));
    }
    if sweep.points == 0 {
        return Err(Failure::Config("points must be at least 1".into()));
    }
    let n = spec.n;
    let metric = match spec.family.as_str() {
        "flat" => flat_metric(n),
        "potential" => {
            let kind = PotentialKind::parse(&spec.f).ok_or_else(|| Failure::Config(format!("unknown potential {:?}", spec.f)))?;
            registry_metric(&kind, n)?
        }
        "normal-form" => {
            let (lo, hi) = qch_core::families::DEFAULT_ANNULUS;
            biconformally_flat_normal_form(parse_v(&spec.nf_v)?, n, lo, hi)?
        }
        "rotational" => {
            let profile = parse_profile(spec)?;
            let (metric, chart) = rotational_metric(&profile, n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(sweep.seed);
            let params = profile.grid(sweep.points);
            let points = params.iter().map(|s| chart.point(*s, &random_direction::<f64>(&mut rng, 2 * n))).collect();
            return Ok(Sampled { label: format!("rotational({})", profile.label), metric, chart: Some(chart), params, points });
        }
        other => return Err(Failure::Config(format!("unknown family {other:?}; expected flat, potential, normal-form or rotational"))),
    };
    let lo = SWEEP_RADII.0.max(metric.r_min * 1.05);
    let hi = SWEEP_RADII.1.min(metric.r_max * 0.95);
    let points = annulus_points::<f64>(n, sweep.points, sweep.seed, lo, hi);
    Ok(Sampled { label: metric.label.clone(), metric, chart: None, params: Vec::new(), points })
}

fn config(command: &str, spec: Option<&FamilySpec>, sweep: Option<&Sweep>, label: Option<&str>, tol: Option<&Tolerances>) -> RunConfig {
    RunConfig {
        command: command.into(),
        family: label.map(String::from),
        n: spec.map(|s| s.n),
        seed: sweep.map(|s| s.seed),
        points: sweep.map(|s| s.points),
        checks: Vec::new(),
        transform: None,
        meridian: None,
        tolerances: tol.cloned(),
    }
}

/// Engine `(a, b, c)` against the closed form along a rotational profile.
fn rotational_coefficients(fam: &Sampled, tol: &Tolerances) -> Run<VerificationReport> {
    let chart = fam.chart.as_ref().ok_or_else(|| Failure::Config("rotational-coefficients needs --family rotational".into()))?;
    let mut residuals = Vec::new();
    let mut cols: [Vec<f64>; 7] = Default::default();
    for (s, p) in fam.params.iter().zip(&fam.points) {
        let frame = frame_at(&fam.metric, &RadialDistribution, p)?;
        let q = qch_decompose(&riemann(&fam.metric, p, &frame)?)?;
        let (a, b, c) = closed_form_coefficients(chart.profile(), *s);
        let scale = a.abs().max(b.abs()).max(c.abs()).max(1.0);
        residuals.push((q.a - a).abs().max((q.b - b).abs()).max((q.c - c).abs()).max(q.residual) / scale);
        for (col, v) in cols.iter_mut().zip([*s, a, b, c, q.a, q.b, q.c]) {
            col.push(v);
        }
    }
    let [s, a, b, c, na, nb, nc] = cols;
    Ok(VerificationReport::new(
        "rotational-coefficients",
        "curvature of a rotational hypersurface in the dilatational metric is QCH with closed-form (a, b, c)",
        fam.points.clone(),
        residuals,
        tol.qch,
    )
    .with_extra("s", s)
    .with_extra("a", a)
    .with_extra("b", b)
    .with_extra("c", c)
    .with_extra("a_numeric", na)
    .with_extra("b_numeric", nb)
    .with_extra("c_numeric", nc))
}

/// Induced metric curvature against the warped-product closed form.
fn warped_coefficients(fam: &Sampled, tol: &Tolerances) -> Run<VerificationReport> {
    let chart = fam.chart.as_ref().ok_or_else(|| Failure::Config("warped check needs --family rotational".into()))?;
    let (induced, _) = induced_metric(chart.profile(), fam.metric.n)?;
    let mut residuals = Vec::new();
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    for (s, p) in fam.params.iter().zip(&fam.points) {
        let frame = frame_at(&induced, &RadialDistribution, p)?;
        let r = riemann(&induced, p, &frame)?;
        let (alpha, beta) = warped_curvature_coefficients(chart.profile(), *s);
        let expect = warped_curvature_tensor(alpha, beta, p.len());
        residuals.push(r.sub(&expect).max_abs() / expect.max_abs().max(1.0));
        alphas.push(alpha);
        betas.push(beta);
    }
    Ok(VerificationReport::new(
        "warped-coefficients",
        "induced metric of a rotational hypersurface is a warped product with curvature (alpha, beta)",
        fam.points.clone(),
        residuals,
        tol.qch,
    )
    .with_extra("alpha", alphas)
    .with_extra("beta", betas))
}

const CHECKS: [&str; 7] = ["symmetries", "qch", "ricci", "b", "b0", "integrability", "rotational-coefficients"];

fn cmd_verify(args: &VerifyArgs) -> Run<u8> {
    let tol = tolerances(&args.sweep)?;
    let fam = build_family(&args.family, &args.sweep)?;
    let mut checks: Vec<String> = if args.check.is_empty() {
        CHECKS.iter().filter(|c| **c != "rotational-coefficients" || fam.chart.is_some()).map(|c| c.to_string()).collect()
    } else {
        args.check.clone()
    };
    if checks.iter().any(|c| c == "all") {
        checks = CHECKS.iter().map(|c| c.to_string()).collect();
    }
    let dist = RadialDistribution;
    let mut reports = Vec::new();
    for name in &checks {
        let rep = match name.as_str() {
            "symmetries" => check_symmetries(&fam.metric, &dist, &fam.points, &tol)?,
            "qch" => check_qch(&fam.metric, &dist, &fam.points, &tol)?,
            "ricci" => check_ricci(&fam.metric, &dist, &fam.points, &tol)?,
            "b" => check_b_distribution(&fam.metric, &dist, &fam.points, &tol)?,
            "b0" => check_b0_distribution(&fam.metric, &dist, &fam.points, &tol)?,
            "integrability" => check_integrability(&fam.metric, &dist, &fam.points, &tol)?,
            "rotational-coefficients" => rotational_coefficients(&fam, &tol)?,
            other => return Err(Failure::Config(format!("unknown check {other:?}; expected one of {}", CHECKS.join(", ")))),
        };
        reports.push(rep);
    }
    let mut cfg = config("verify", Some(&args.family), Some(&args.sweep), Some(&fam.label), Some(&tol));
    cfg.checks = checks;
    Report::new(cfg, reports).emit(args.sweep.json.as_ref())
}

fn cmd_decompose(args: &FamilyRun) -> Run<u8> {
    let tol = tolerances(&args.sweep)?;
    let fam = build_family(&args.family, &args.sweep)?;
    let rep = check_qch(&fam.metric, &RadialDistribution, &fam.points, &tol)?;
    let cfg = config("decompose", Some(&args.family), Some(&args.sweep), Some(&fam.label), Some(&tol));
    Report::new(cfg, vec![rep]).emit(args.sweep.json.as_ref())
}

fn cmd_transform(args: &TransformArgs) -> Run<u8> {
    let tol = tolerances(&args.sweep)?;
    let fam = build_family(&args.family, &args.sweep)?;
    let v = parse_v(&args.v)?;
    let pair = BiconformalPair::for_source(&fam.metric, v.clone())?;
    let image = biconformal_apply(&fam.metric, &pair)?;
    let mut reports = check_qc_invariance(&fam.metric, &image, &pair, &fam.points, &tol)?;
    let mut cols: [Vec<f64>; 4] = Default::default();
    for p in &fam.points {
        let rho = p.iter().map(|x| x * x).sum::<f64>();
        let k0 = fam.metric.k(rho).value();
        let k1 = image.k(rho).value();
        let a0 = fam.metric.horizontal_curvature(rho).value();
        let a1 = image.horizontal_curvature(rho).value();
        for (col, val) in cols.iter_mut().zip([k0, k1, a0 + k0 * k0, a1 + k1 * k1]) {
            col.push(val);
        }
    }
    if let Some(last) = reports.last_mut() {
        let [k, kp, s, sp] = cols;
        last.extra.insert("k".into(), k);
        last.extra.insert("k_prime".into(), kp);
        last.extra.insert("a_plus_k2".into(), s);
        last.extra.insert("a_prime_plus_k_prime2".into(), sp);
    }
    let mut specs = vec![args.v.clone()];
    if let Some(second) = &args.then_v {
        reports.push(check_composition(&fam.metric, v, parse_v(second)?, &fam.points, &tol)?);
        specs.push(second.clone());
    }
    let mut cfg = config("transform", Some(&args.family), Some(&args.sweep), Some(&fam.label), Some(&tol));
    cfg.transform = Some(specs);
    Report::new(cfg, reports).emit(args.sweep.json.as_ref())
}

fn cmd_flatten(args: &FamilyRun) -> Run<u8> {
    let tol = tolerances(&args.sweep)?;
    let fam = build_family(&args.family, &args.sweep)?;
    let out = flatten(&fam.metric, &fam.points, &tol)?;
    let rhos: Vec<f64> = fam.points.iter().map(|p| p.iter().map(|x| x * x).sum()).collect();
    let report = out
        .report
        .with_extra("u", rhos.iter().map(|r| out.pair.u.value(*r)).collect())
        .with_extra("v", rhos.iter().map(|r| out.pair.v.value(*r)).collect());
    let cfg = config("flatten", Some(&args.family), Some(&args.sweep), Some(&fam.label), Some(&tol));
    Report::new(cfg, vec![report]).emit(args.sweep.json.as_ref())
}

fn csv_line(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.14e}")).collect::<Vec<_>>().join(",")
}

fn cmd_meridian(args: &MeridianArgs) -> Run<u8> {
    if args.samples == 0 {
        return Err(Failure::Config("samples must be at least 1".into()));
    }
    if !args.a.is_finite() {
        return Err(Failure::Config("a must be a finite number".into()));
    }
    let pts = constant_curvature_meridian(args.a, args.samples)?;
    let mut csv = String::from("x,y\n");
    for (x, y) in &pts {
        csv.push_str(&csv_line(&[*x, *y]));
        csv.push('\n');
    }
    let residuals: Vec<f64> = pts.iter().map(|(x, _)| meridian_b_zero_residual(args.a, *x).abs()).collect();
    let report = VerificationReport::new(
        "meridian-b-zero",
        "meridian of a rotational hypersurface of constant holomorphic curvature a has b = 0",
        pts.iter().map(|(x, y)| vec![*x, *y]).collect(),
        residuals,
        MERIDIAN_B_TOL,
    );
    if let Some(p) = &args.csv {
        write_file(p, &csv)?;
    }
    let mut cfg = config("meridian", None, None, None, None);
    cfg.meridian = Some((args.a, args.samples));
    let report = Report::new(cfg, vec![report]);
    if args.csv.is_none() && args.json.is_none() {
        print!("{csv}");
        return Ok(if report.summary.all_passed { 0 } else { 1 });
    }
    report.emit(args.json.as_ref())
}

fn cmd_rotational(args: &RotationalArgs) -> Run<u8> {
    let tol = tolerances(&args.sweep)?;
    let mut spec = args.family.clone();
    spec.family = "rotational".into();
    let fam = build_family(&spec, &args.sweep)?;
    let coeffs = rotational_coefficients(&fam, &tol)?;
    let warped = warped_coefficients(&fam, &tol)?;
    if let Some(path) = &args.csv {
        let chart = fam.chart.as_ref().ok_or_else(|| Failure::Config("rotational family expected".into()))?;
        let mut csv = String::from("s,t,a,b,c,alpha,beta\n");
        for s in &fam.params {
            let (a, b, c) = closed_form_coefficients(chart.profile(), *s);
            let (al, be) = warped_curvature_coefficients(chart.profile(), *s);
            csv.push_str(&csv_line(&[*s, chart.profile().derivatives(*s).t, a, b, c, al, be]));
            csv.push('\n');
        }
        write_file(path, &csv)?;
    }
    let cfg = config("rotational", Some(&spec), Some(&args.sweep), Some(&fam.label), Some(&tol));
    Report::new(cfg, vec![coeffs, warped]).emit(args.sweep.json.as_ref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Transform(a) => cmd_transform(a),
        Command::Flatten(a) => cmd_flatten(a),
        Command::Meridian(a) => cmd_meridian(a),
        Command::Rotational(a) => cmd_rotational(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
