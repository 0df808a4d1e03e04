//! `ymforms`: run scenario files against the form library.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ymforms::checks::{bump_centers, CheckOutcome, Status, CRITICALITY_NODES};
use ymforms::forms::basis;
use ymforms::hodge::{star_table, Metric};
use ymforms::scenario::{build, run, Report, Scenario};
use ymforms::variational::{
    bump_direction, directional_derivative, eb_inner, fields_at, functional, optimize_profile, OptimizerConfig,
    ProfileParam,
};
use ymforms::yang_mills::{current, CurrentMethod};
use ymforms::{CMatrix, TraceKind};

#[derive(Parser, Debug)]
#[command(name = "ymforms", version, about = "Verify Yang-Mills identities for matrix-valued forms on C^2")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct Global {
    /// Metric, overriding the scenario.
    #[arg(long, global = true, value_enum)]
    metric: Option<MetricArg>,
    /// Tolerance applied to every asserted check.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Number of sample points.
    #[arg(long, global = true)]
    points: Option<usize>,
    /// Half-width of the quadrature box.
    #[arg(long, global = true)]
    radius: Option<f64>,
    /// Quadrature nodes per axis.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    #[arg(long, global = true, value_enum)]
    trace: Option<TraceArg>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Structured JSON summary instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the scenario's check list.
    Verify { scenario: PathBuf },
    /// Print ★ of every basis form.
    StarTable,
    /// Current components at the sample points as CSV.
    Current {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "generic")]
        method: MethodArg,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// E, B and ⟨E,B⟩ at the sample points as CSV.
    Fields {
        scenario: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// H(A) over the quadrature box, with its source/energy split.
    Functional { scenario: PathBuf },
    /// Compare dH/dt along bump directions with (B, D_A*F_A).
    CriticalCheck {
        scenario: PathBuf,
        #[arg(long, default_value_t = 5)]
        directions: usize,
        /// Bump radius.
        #[arg(long, default_value_t = 1.0)]
        bump_radius: f64,
    },
    /// Coordinate descent on a perturbed radial profile; history as CSV.
    OptimizeProfile {
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// Interior knots.
        #[arg(long, default_value_t = 6)]
        knots: usize,
        /// Relative perturbation of the interior knot values.
        #[arg(long, default_value_t = 0.1)]
        perturb: f64,
        #[arg(long, default_value_t = 400)]
        max_sweeps: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MetricArg {
    Euclidean,
    Minkowski,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum TraceArg {
    Matrix,
    State,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MethodArg {
    ClosedForm,
    Generic,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Minkowski => Metric::Minkowski,
        }
    }
}

impl From<TraceArg> for TraceKind {
    fn from(t: TraceArg) -> Self {
        match t {
            TraceArg::Matrix => TraceKind::Matrix,
            TraceArg::State => TraceKind::State,
        }
    }
}

/// Failures mapped to exit code 2.
struct InputError(String);

impl From<ymforms::Error> for InputError {
    fn from(e: ymforms::Error) -> Self {
        InputError(e.to_string())
    }
}

impl From<std::io::Error> for InputError {
    fn from(e: std::io::Error) -> Self {
        InputError(e.to_string())
    }
}

type CmdResult = Result<bool, InputError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> CmdResult {
    let g = &cli.global;
    match &cli.command {
        Command::Verify { scenario } => verify(&load(scenario, g)?, g),
        Command::StarTable => star_table_cmd(g),
        Command::Current {
            scenario,
            method,
            output,
        } => current_cmd(&load(scenario, g)?, *method, output.as_deref()),
        Command::Fields { scenario, output } => fields_cmd(&load(scenario, g)?, output.as_deref()),
        Command::Functional { scenario } => functional_cmd(&load(scenario, g)?, g),
        Command::CriticalCheck {
            scenario,
            directions,
            bump_radius,
        } => critical_cmd(&load(scenario, g)?, g, *directions, *bump_radius),
        Command::OptimizeProfile {
            mu,
            knots,
            perturb,
            max_sweeps,
            output,
        } => optimize_cmd(g, *mu, *knots, *perturb, *max_sweeps, output.as_deref()),
    }
}

/// Loads a scenario and applies the global overrides.
fn load(path: &Path, g: &Global) -> Result<Scenario, InputError> {
    let mut s = Scenario::load(path)?;
    if let Some(m) = g.metric {
        s.metric = m.into();
    }
    if let Some(t) = g.trace {
        s.trace = t.into();
    }
    if let Some(t) = g.tolerance {
        s.tolerance = Some(t);
    }
    if let Some(p) = g.points {
        s.points = p;
    }
    if let Some(r) = g.radius {
        s.quadrature.radius = r;
    }
    if let Some(n) = g.nodes {
        s.quadrature.nodes_per_axis = n;
    }
    if let Some(seed) = g.seed {
        s.seed = seed;
    }
    s.validate()?;
    Ok(s)
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), InputError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, InputError> {
    serde_json::to_string_pretty(v).map_err(|e| InputError(e.to_string()))
}

fn print_report(r: &Report, g: &Global) -> Result<(), InputError> {
    if g.json {
        println!("{}", to_json(r)?);
    } else {
        print!("{}", r.summary());
    }
    Ok(())
}

fn verify(s: &Scenario, g: &Global) -> CmdResult {
    let report = run(s)?;
    print_report(&report, g)?;
    Ok(report.passed())
}

fn star_table_cmd(g: &Global) -> CmdResult {
    let m: Metric = g.metric.map(Into::into).unwrap_or(Metric::Euclidean);
    let table = star_table(m);
    let mut rows = Vec::new();
    for p in 0..=4u8 {
        for &b in basis(p) {
            let image: Vec<(String, [f64; 2])> = table
                .star_basis(b)
                .into_iter()
                .map(|(t, c)| (t.ascii_label(), [c.re, c.im]))
                .collect();
            rows.push((b, image));
        }
    }
    if g.json {
        let v: Vec<_> = rows
            .iter()
            .map(|(b, img)| serde_json::json!({ "basis": b.ascii_label(), "star": img }))
            .collect();
        println!("{}", to_json(&serde_json::json!({ "metric": m, "table": v }))?);
        return Ok(true);
    }
    println!("metric: {}", m.name());
    for (b, img) in rows {
        let terms: Vec<String> = img
            .iter()
            .map(|(label, [re, im])| format!("({}) {label}", fmt_complex(*re, *im)))
            .collect();
        println!("*({}) = {}", b.ascii_label(), if terms.is_empty() { "0".into() } else { terms.join(" + ") });
    }
    Ok(true)
}

fn fmt_complex(re: f64, im: f64) -> String {
    match (re == 0.0, im == 0.0) {
        (_, true) => format!("{re}"),
        (true, false) => format!("{im}i"),
        _ => format!("{re}{:+}i", im),
    }
}

const CSV_HEADER: &str = "point,x1,y1,x2,y2,component,row,col,re,im\n";

fn matrix_rows(out: &mut String, k: usize, x: [f64; 4], label: &str, m: &CMatrix) {
    let n = m.dim();
    for r in 0..n {
        for c in 0..n {
            let v = m[(r, c)];
            let _ = writeln!(
                out,
                "{k},{},{},{},{},{label},{r},{c},{:.15e},{:.15e}",
                x[0], x[1], x[2], x[3], v.re, v.im
            );
        }
    }
}

fn current_cmd(s: &Scenario, method: MethodArg, output: Option<&Path>) -> CmdResult {
    let built = build(&s.connection)?;
    let method = match method {
        MethodArg::ClosedForm => CurrentMethod::ClosedForm,
        MethodArg::Generic => CurrentMethod::Generic,
    };
    let j = current(&built.connection, s.metric, method).field;
    let mut out = String::from(CSV_HEADER);
    for (k, p) in s.sample_points().iter().enumerate() {
        let v = j.value(p)?;
        for (label, m) in ["J1", "J2", "J1bar", "J2bar"].iter().zip(v.coeffs()) {
            matrix_rows(&mut out, k, p.real(), label, m);
        }
    }
    emit(output, &out)?;
    Ok(true)
}

fn fields_cmd(s: &Scenario, output: Option<&Path>) -> CmdResult {
    let built = build(&s.connection)?;
    let mut out = String::from(CSV_HEADER);
    for (k, p) in s.sample_points().iter().enumerate() {
        let fp = fields_at(&built.connection, p)?;
        for (i, m) in fp.e.iter().enumerate() {
            matrix_rows(&mut out, k, p.real(), &format!("E{}", i + 1), m);
        }
        for (i, m) in fp.b.iter().enumerate() {
            matrix_rows(&mut out, k, p.real(), &format!("B{}", i + 1), m);
        }
        let ip = eb_inner(&fp, s.trace);
        let x = p.real();
        let _ = writeln!(out, "{k},{},{},{},{},EB,,,{:.15e},{:.15e}", x[0], x[1], x[2], x[3], ip.re, ip.im);
    }
    emit(output, &out)?;
    Ok(true)
}

fn functional_cmd(s: &Scenario, g: &Global) -> CmdResult {
    let built = build(&s.connection)?;
    let v = functional(&built.connection, None, s.metric, &s.quadrature, s.trace)?;
    if g.json {
        println!(
            "{}",
            to_json(&serde_json::json!({
                "scenario": s.name, "seed": s.seed, "metric": s.metric, "quadrature": s.quadrature,
                "total": [v.total.re, v.total.im], "source": [v.source.re, v.source.im],
                "energy": [v.energy.re, v.energy.im], "split_gap": v.split_gap(),
            }))?
        );
    } else {
        println!(
            "scenario {} ({} metric, box radius {}, {} nodes/axis)",
            s.name,
            s.metric.name(),
            s.quadrature.radius,
            s.quadrature.nodes_per_axis
        );
        println!("H      = {:.12e} {:+.3e}i", v.total.re, v.total.im);
        println!("(A,-J) = {:.12e} {:+.3e}i", v.source.re, v.source.im);
        println!("(F,F)/2= {:.12e} {:+.3e}i", v.energy.re, v.energy.im);
        println!("split gap {:.3e}", v.split_gap());
    }
    Ok(true)
}

fn critical_cmd(s: &Scenario, g: &Global, directions: usize, bump_radius: f64) -> CmdResult {
    if directions == 0 || !(bump_radius > 0.0) {
        return Err(InputError("need at least one direction and a positive bump radius".into()));
    }
    let built = build(&s.connection)?;
    let n = built.connection.dim();
    let nodes = g.nodes.unwrap_or(CRITICALITY_NODES);
    let quad = ymforms::quadrature::QuadratureSpec {
        nodes_per_axis: nodes,
        ..s.quadrature
    };
    let tol = s.tolerance.unwrap_or(1e-3);
    let mut checks = Vec::new();
    for (k, center) in bump_centers(s.seed + 41, directions).into_iter().enumerate() {
        let c = center.map(|x| x * bump_radius);
        let dir = bump_direction(s.seed + 50 + k as u64, c, bump_radius, n);
        let d = directional_derivative(&built.connection, &dir, None, s.metric, &quad, s.trace)?;
        let bound = tol * d.direction_norm;
        checks.push(CheckOutcome::bound(
            format!("direction-{k}"),
            d.richardson.norm() / bound,
            1.0,
            nodes.pow(4),
            format!(
                "dH/dt {:.3e}, (B, D*F) {:.3e}, gap {:.3e}, bound {bound:.3e}",
                d.richardson.re, d.inner.re, d.gap
            ),
        ));
        checks.push(CheckOutcome::bound(
            format!("direction-{k}-agreement"),
            d.gap / bound,
            1.0,
            nodes.pow(4),
            "|FD − (B, D_A*F_A)| relative to the bound",
        ));
    }
    let overall = if checks.iter().all(CheckOutcome::passed) { Status::Pass } else { Status::Fail };
    let report = Report {
        scenario: s.name.clone(),
        connection: s.connection.name().into(),
        metric: s.metric,
        trace: s.trace,
        seed: s.seed,
        checks,
        overall,
    };
    print_report(&report, g)?;
    Ok(report.passed())
}

fn optimize_cmd(
    g: &Global,
    mu: f64,
    knots: usize,
    perturb: f64,
    max_sweeps: usize,
    output: Option<&Path>,
) -> CmdResult {
    let init = ProfileParam::perturbed_bpst(mu, knots, perturb)?;
    let config = OptimizerConfig {
        max_sweeps,
        ..OptimizerConfig::default()
    };
    let trace: TraceKind = g.trace.map(Into::into).unwrap_or_default();
    let res = optimize_profile(&init, &config, trace)?;
    let reduction = res.initial_residual / res.final_residual.max(1e-300);
    let ok = reduction >= 10.0 && res.monotone();
    match output {
        Some(p) => std::fs::write(p, res.history_csv())?,
        None if !g.json => print!("{}", res.history_csv()),
        None => {}
    }
    if g.json {
        println!(
            "{}",
            to_json(&serde_json::json!({
                "initial_residual": res.initial_residual, "final_residual": res.final_residual,
                "reduction": reduction, "monotone": res.monotone(), "stalled": res.stalled,
                "steps": res.history.len() - 1, "profile": res.profile, "history": res.history,
                "status": if ok { Status::Pass } else { Status::Fail },
            }))?
        );
    } else {
        eprintln!(
            "profile ODE residual {:.3e} -> {:.3e} ({reduction:.1}x), H monotone: {}, {} accepted steps{}",
            res.initial_residual,
            res.final_residual,
            res.monotone(),
            res.history.len() - 1,
            if res.stalled { ", stalled" } else { "" }
        );
    }
    Ok(ok)
}
