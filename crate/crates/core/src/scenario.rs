//! Declarative scenario files and the check catalogue they can request.

use std::collections::BTreeSet;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{CMatrix, TraceKind};
use crate::checks::{criterion_id, run_criterion, CheckConfig, CheckOutcome, Status};
use crate::error::{Error, Result};
use crate::forms::{Form, FormField, Point, PolyCoefficient};
use crate::hodge::{classify_duality, duality_residual, DualityClass, Metric};
use crate::instantons::{
    build_bpst, build_constant, build_dirac_monopole, build_stationary_sd, from_eta, minkowski_condition_residual,
    profile_ode_residual, BpstParams, DualityTarget, EtaForm, EtaKind,
};
use crate::quadrature::QuadratureSpec;
use crate::variational::{eb_inner, fields_at};
use crate::yang_mills::{
    covariant_costar_jet, curvature, lorenz_residual, sample_polydisk, sample_shell, ym_residuals, Connection,
    CurvatureMethod,
};

/// Where sample points are drawn: the polydisk `|z_k| ≤ rmax` when
/// `rmin = 0`, else the shell `rmin ≤ |z| ≤ rmax`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    #[serde(default)]
    pub rmin: f64,
    #[serde(default = "one")]
    pub rmax: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { rmin: 0.0, rmax: 1.0 }
    }
}

impl Sampling {
    pub fn points(&self, seed: u64, count: usize) -> Vec<Point> {
        if self.rmin > 0.0 {
            sample_shell(seed, count, self.rmin, self.rmax)
        } else {
            sample_polydisk(seed, count, self.rmax)
        }
    }
}

/// A connection named by builtin family or given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConnectionSpec {
    Bpst {
        mu: f64,
    },
    DiracMonopole {
        b1: CMatrix,
        b2: CMatrix,
    },
    StationarySd {
        h: PolyCoefficient,
        /// Added to `A1` of `η`; used for negative controls.
        #[serde(default)]
        tamper_a1: Option<CMatrix>,
    },
    Constant {
        a1: CMatrix,
        a2: CMatrix,
    },
    CustomEta {
        a1: PolyCoefficient,
        a2: PolyCoefficient,
        #[serde(default)]
        kind: EtaKind,
        #[serde(default)]
        holomorphic: bool,
        #[serde(default)]
        normal: bool,
    },
    Polynomial {
        components: [PolyCoefficient; 4],
    },
}

impl ConnectionSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ConnectionSpec::Bpst { .. } => "bpst",
            ConnectionSpec::DiracMonopole { .. } => "dirac-monopole",
            ConnectionSpec::StationarySd { .. } => "stationary-sd",
            ConnectionSpec::Constant { .. } => "constant",
            ConnectionSpec::CustomEta { .. } => "custom-eta",
            ConnectionSpec::Polynomial { .. } => "polynomial",
        }
    }

    fn matrices(&self) -> Vec<(String, usize)> {
        let poly = |label: &str, p: &PolyCoefficient| (label.to_string(), p.dim());
        match self {
            ConnectionSpec::Bpst { .. } => vec![],
            ConnectionSpec::DiracMonopole { b1, b2 } => vec![("b1".into(), b1.dim()), ("b2".into(), b2.dim())],
            ConnectionSpec::StationarySd { h, tamper_a1 } => {
                let mut v = vec![poly("h", h)];
                if let Some(t) = tamper_a1 {
                    v.push(("tamper_a1".into(), t.dim()));
                }
                v
            }
            ConnectionSpec::Constant { a1, a2 } => vec![("a1".into(), a1.dim()), ("a2".into(), a2.dim())],
            ConnectionSpec::CustomEta { a1, a2, .. } => vec![poly("a1", a1), poly("a2", a2)],
            ConnectionSpec::Polynomial { components } => ["a1", "a2", "a1bar", "a2bar"]
                .iter()
                .zip(components)
                .map(|(l, p)| poly(l, p))
                .collect(),
        }
    }

    /// Algebra dimension implied by the spec.
    pub fn dim(&self) -> usize {
        match self {
            ConnectionSpec::Bpst { .. } | ConnectionSpec::StationarySd { .. } => 2,
            _ => self.matrices().first().map(|m| m.1).unwrap_or(0),
        }
    }

    fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mats = self.matrices();
        match self {
            ConnectionSpec::Bpst { mu } if !(mu.is_finite() && *mu > 0.0) => {
                problems.push(format!("connection.mu: must be positive, got {mu}"));
            }
            ConnectionSpec::StationarySd { h, tamper_a1 } => {
                if h.dim() != 1 {
                    problems.push(format!("connection.h: must be scalar (1×1), got {}×{}", h.dim(), h.dim()));
                }
                if let Some(t) = tamper_a1 {
                    if t.dim() != 2 {
                        problems.push(format!("connection.tamper_a1: must be 2×2, got {}×{}", t.dim(), t.dim()));
                    }
                }
                return problems;
            }
            _ => {}
        }
        if let Some((first, n)) = mats.first() {
            for (label, m) in &mats[1..] {
                if m != n {
                    problems.push(format!("connection.{label}: dimension {m} does not match {first} ({n})"));
                }
            }
        }
        problems
    }
}

/// Names accepted in a scenario's `checks` list besides criterion names.
pub const CHECK_NAMES: [&str; 14] = [
    "bianchi",
    "vacuum-current",
    "sd",
    "asd",
    "nonzero-curvature",
    "skew-hermitian",
    "eb-bpst",
    "profile-ode",
    "sdm",
    "asdm",
    "lorenz",
    "classify",
    "eb-inner",
    "sign-law",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Algebra dimension; checked against the connection when present.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    #[serde(default)]
    pub trace: TraceKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Overrides every check's default tolerance.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    pub connection: ConnectionSpec,
    pub checks: Vec<String>,
}

fn default_metric() -> Metric {
    Metric::Euclidean
}

fn default_points() -> usize {
    100
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Collects every offending field into one error.
    pub fn validate(&self) -> Result<()> {
        let mut problems = self.connection.validate();
        if let Some(n) = self.n {
            let found = self.connection.dim();
            if n != found {
                problems.push(format!("n: {n} does not match the connection dimension {found}"));
            }
        }
        if self.points == 0 {
            problems.push("points: must be positive".into());
        }
        if let Some(t) = self.tolerance {
            if !(t.is_finite() && t >= 0.0) {
                problems.push(format!("tolerance: must be non-negative, got {t}"));
            }
        }
        if !(self.sampling.rmin >= 0.0 && self.sampling.rmax > self.sampling.rmin) {
            problems.push(format!(
                "sampling: need 0 <= rmin < rmax, got [{}, {}]",
                self.sampling.rmin, self.sampling.rmax
            ));
        }
        if let Err(e) = self.quadrature.validate() {
            problems.push(format!("quadrature: {e}"));
        }
        if self.checks.is_empty() {
            problems.push("checks: list is empty".into());
        }
        for c in &self.checks {
            if !CHECK_NAMES.contains(&c.as_str()) && criterion_id(c).is_none() {
                problems.push(format!(
                    "checks: unknown check `{c}`; expected one of {} or a criterion name",
                    CHECK_NAMES.join(", ")
                ));
            }
        }
        let needs_eta = ["sdm", "asdm"];
        for c in &self.checks {
            if needs_eta.contains(&c.as_str())
                && matches!(self.connection, ConnectionSpec::Bpst { .. } | ConnectionSpec::Polynomial { .. } | ConnectionSpec::DiracMonopole { .. })
            {
                problems.push(format!("checks: `{c}` needs an η-based connection (stationary-sd, constant, custom-eta)"));
            }
            if (c == "eb-bpst" || c == "profile-ode") && !matches!(self.connection, ConnectionSpec::Bpst { .. }) {
                problems.push(format!("checks: `{c}` needs the bpst builtin"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(problems.join("; ")))
        }
    }

    pub fn check_config(&self) -> CheckConfig {
        CheckConfig {
            seed: self.seed,
            points: self.points,
            trace: self.trace,
            quadrature: self.quadrature,
        }
    }

    pub fn sample_points(&self) -> Vec<Point> {
        self.sampling.points(self.seed, self.points)
    }
}

/// A built connection with the ingredients some checks need.
pub struct Built {
    pub connection: Connection,
    pub eta: Option<EtaForm>,
    pub bpst: Option<BpstParams>,
}

pub fn build(spec: &ConnectionSpec) -> Result<Built> {
    let plain = |connection| Built {
        connection,
        eta: None,
        bpst: None,
    };
    Ok(match spec {
        ConnectionSpec::Bpst { mu } => {
            let b = build_bpst(BpstParams::new(*mu)?)?;
            Built {
                connection: b.connection,
                eta: None,
                bpst: Some(b.params),
            }
        }
        ConnectionSpec::DiracMonopole { b1, b2 } => plain(build_dirac_monopole(b1, b2, 1e-10)?.0),
        ConnectionSpec::StationarySd { h, tamper_a1 } => {
            let (mut eta, _) = build_stationary_sd(h)?;
            if let Some(t) = tamper_a1 {
                let shift = FormField::constant(Form::from_coeffs(0, vec![t.clone()])?);
                eta = EtaForm::new(eta.a1.add(&shift)?, eta.a2.clone(), eta.holomorphic, false)?;
            }
            Built {
                connection: from_eta(&eta, EtaKind::Skew),
                eta: Some(eta),
                bpst: None,
            }
        }
        ConnectionSpec::Constant { a1, a2 } => {
            let eta = EtaForm::constant(a1.clone(), a2.clone())?;
            let (connection, _) = build_constant(a1, a2, Metric::Euclidean, 1e-10)?;
            Built {
                connection,
                eta: Some(eta),
                bpst: None,
            }
        }
        ConnectionSpec::CustomEta {
            a1,
            a2,
            kind,
            holomorphic,
            normal,
        } => {
            let eta = EtaForm::from_poly(a1.clone(), a2.clone(), *holomorphic, *normal)?;
            Built {
                connection: from_eta(&eta, *kind),
                eta: Some(eta),
                bpst: None,
            }
        }
        ConnectionSpec::Polynomial { components } => plain(Connection::from_poly(components.clone())?),
    })
}

/// Outcome of running a scenario.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub connection: String,
    pub metric: Metric,
    pub trace: TraceKind,
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
    pub overall: Status,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.overall == Status::Pass
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "scenario {} ({}, {} metric, {} trace, seed {})\n",
            self.scenario,
            self.connection,
            self.metric.name(),
            match self.trace {
                TraceKind::Matrix => "matrix",
                TraceKind::State => "state",
            },
            self.seed
        );
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Info => "info",
            };
            out.push_str(&format!(
                "  [{tag}] {:<34} worst {:>10.3e}  tol {:>8.1e}  points {:>4}  {}\n",
                c.name, c.worst, c.tolerance, c.points, c.detail
            ));
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.passed() { "PASS" } else { "FAIL" }
        ));
        out
    }
}

pub fn run(s: &Scenario) -> Result<Report> {
    s.validate()?;
    let built = build(&s.connection)?;
    let pts = s.sample_points();
    let mut checks = Vec::new();
    for name in &s.checks {
        if let Some(id) = criterion_id(name).filter(|_| !CHECK_NAMES.contains(&name.as_str())) {
            let cr = run_criterion(id, &s.check_config())?;
            checks.extend(cr.checks.into_iter().map(|mut c| {
                c.name = format!("{}/{}", cr.name, c.name);
                c
            }));
            continue;
        }
        let mut outcome = run_check(name, &built, s, &pts)?;
        if let Some(t) = s.tolerance {
            if outcome.status != Status::Info && name != "nonzero-curvature" {
                outcome = CheckOutcome::bound(outcome.name, outcome.worst, t, outcome.points, outcome.detail);
            }
        }
        checks.push(outcome);
    }
    let overall = if checks.iter().all(CheckOutcome::passed) { Status::Pass } else { Status::Fail };
    Ok(Report {
        scenario: s.name.clone(),
        connection: s.connection.name().to_string(),
        metric: s.metric,
        trace: s.trace,
        seed: s.seed,
        checks,
        overall,
    })
}

fn max_over(pts: &[Point], mut f: impl FnMut(&Point) -> Result<f64>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in pts {
        let v = f(p)?;
        if v.is_nan() {
            return Ok(f64::NAN);
        }
        worst = worst.max(v);
    }
    Ok(worst)
}

fn run_check(name: &str, built: &Built, s: &Scenario, pts: &[Point]) -> Result<CheckOutcome> {
    let a = &built.connection;
    let m = s.metric;
    let n = pts.len();
    let f = curvature(a, CurvatureMethod::Generic);
    Ok(match name {
        "bianchi" => {
            let w = max_over(pts, |p| Ok(ym_residuals(a, None, m, p)?.0))?;
            CheckOutcome::bound(name, w, 1e-10, n, "‖D_A F_A‖")
        }
        "vacuum-current" => {
            let w = max_over(pts, |p| Ok(ym_residuals(a, None, m, p)?.1))?;
            CheckOutcome::bound(name, w, 1e-6, n, format!("‖D_A*F_A‖ ({})", m.name()))
        }
        "sd" | "asd" => {
            let w = max_over(pts, |p| {
                let fv = f.value(p)?;
                Ok(duality_residual(&fv, m, name == "sd")? / (1.0 + fv.norm()))
            })?;
            CheckOutcome::bound(name, w, 1e-10, n, format!("duality residual relative to 1 + ‖F‖ ({})", m.name()))
        }
        "nonzero-curvature" => {
            let mut least = f64::INFINITY;
            for p in pts {
                least = least.min(f.value(p)?.norm());
            }
            CheckOutcome::at_least(name, least, 1e-6, n, "min ‖F_A‖")
        }
        "skew-hermitian" => {
            let w = max_over(pts, |p| {
                let v = a.field().value(p)?;
                Ok(v.add(&v.adjoint())?.norm())
            })?;
            CheckOutcome::bound(name, w, 1e-12, n, "‖A + A*‖")
        }
        "eb-bpst" => {
            let params = built.bpst.expect("validated");
            let w = max_over(pts, |p| {
                let r = p.norm_sq();
                let pv = params.p(r);
                let scale = match s.trace {
                    TraceKind::Matrix => 1.0,
                    TraceKind::State => 0.5,
                };
                let want = -24.0 * pv * pv * scale;
                Ok((eb_inner(&fields_at(a, p)?, s.trace) - Complex64::new(want, 0.0)).norm() / want.abs())
            })?;
            CheckOutcome::bound(name, w, 1e-8, n, "⟨E,B⟩ = −24p², relative")
        }
        "profile-ode" => {
            let params = built.bpst.expect("validated");
            let w = max_over(pts, |p| profile_ode_residual(&params, p.norm_sq()))?;
            CheckOutcome::bound(name, w, 1e-10, n, "λf′ − (f² − f)λ′")
        }
        "sdm" | "asdm" => {
            let eta = built.eta.as_ref().expect("validated");
            let target = if name == "sdm" { DualityTarget::SelfDual } else { DualityTarget::AntiSelfDual };
            let w = max_over(pts, |p| minkowski_condition_residual(eta, target, p))?;
            CheckOutcome::bound(
                name,
                w,
                1e-12,
                n,
                format!("[A1* {} iA1, A2] − i(∂1A2 − ∂2A1)", if name == "sdm" { "−" } else { "+" }),
            )
        }
        "lorenz" => {
            let closed = lorenz_residual(a, m);
            let w = max_over(pts, |p| {
                let aj = a.jet(p, 1)?;
                let generic = covariant_costar_jet(&aj, &aj, m)?.value().norm();
                Ok(closed.value(p)?.norm().max(generic))
            })?;
            CheckOutcome::bound(name, w, 1e-12, n, format!("closed-form and generic D_A*A ({})", m.name()))
        }
        "classify" => {
            let mut classes = BTreeSet::new();
            for p in pts {
                classes.insert(classify_duality(&f.value(p)?, m, 1e-8)?.to_string());
            }
            CheckOutcome::info(name, classes.len() as f64, n, classes.into_iter().collect::<Vec<_>>().join("/"))
        }
        "eb-inner" => {
            let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
            let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
            let mut biggest: f64 = 0.0;
            for p in pts {
                let v = eb_inner(&fields_at(a, p)?, s.trace);
                lo = Complex64::new(lo.re.min(v.re), lo.im.min(v.im));
                hi = Complex64::new(hi.re.max(v.re), hi.im.max(v.im));
                biggest = biggest.max(v.norm());
            }
            CheckOutcome::info(name, biggest, n, format!("⟨E,B⟩ re in [{:.3e}, {:.3e}], im in [{:.3e}, {:.3e}]", lo.re, hi.re, lo.im, hi.im))
        }
        "sign-law" => sign_law(a, m, s.trace, pts, &f)?,
        other => return Err(Error::InvalidInput(format!("unknown check `{other}`"))),
    })
}

/// `⟨E,B⟩` must lie on the ray fixed by the pointwise duality class.
fn sign_law(a: &Connection, m: Metric, kind: TraceKind, pts: &[Point], f: &FormField) -> Result<CheckOutcome> {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut worst: f64 = 0.0;
    let mut mixed = 0;
    for p in pts {
        let class = classify_duality(&f.value(p)?, m, 1e-8)?;
        let dir = match (m, class) {
            (_, DualityClass::Zero) => continue,
            (Metric::Euclidean, DualityClass::SelfDual) => one,
            (Metric::Euclidean, DualityClass::AntiSelfDual) => -one,
            (Metric::Minkowski, DualityClass::SelfDual) => -i,
            (Metric::Minkowski, DualityClass::AntiSelfDual) => i,
            _ => {
                mixed += 1;
                continue;
            }
        };
        let v = eb_inner(&fields_at(a, p)?, kind) * dir.conj();
        worst = worst.max((v.im.abs() + (-v.re).max(0.0)) / (1.0 + v.norm()));
    }
    let mut out = CheckOutcome::bound("sign-law", worst, 1e-8, pts.len(), format!("{mixed} points neither SD nor ASD"));
    if mixed > 0 {
        out.status = Status::Fail;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BPST: &str = r#"{
        "name": "bpst", "metric": "euclidean", "seed": 7, "points": 10,
        "sampling": {"rmin": 0.1, "rmax": 10},
        "connection": {"builtin": "bpst", "mu": 1.0},
        "checks": ["asd", "bianchi", "vacuum-current", "eb-bpst"]
    }"#;

    #[test]
    fn parses_and_runs_bpst() {
        let s = Scenario::from_json(BPST).unwrap();
        assert_eq!(s.connection, ConnectionSpec::Bpst { mu: 1.0 });
        let r = run(&s).unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.checks.len(), 4);
    }

    #[test]
    fn unknown_builtin_lists_names() {
        let text = BPST.replace("\"bpst\", \"mu\"", "\"nonesuch\", \"mu\"");
        let err = Scenario::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("nonesuch") && err.contains("dirac-monopole"), "{err}");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let text = r#"{
            "name": "c", "connection": {"builtin": "constant",
              "a1": [[[1,0],[0,0]],[[0,0],[1,0]]],
              "a2": [[[1,0]]]},
            "checks": ["bianchi"]
        }"#;
        let err = Scenario::from_json(text).unwrap_err().to_string();
        assert!(err.contains("connection.a2"), "{err}");
    }

    #[test]
    fn unknown_check_is_rejected() {
        let text = BPST.replace("\"eb-bpst\"", "\"eb-bogus\"");
        let err = Scenario::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("eb-bogus"), "{err}");
    }

    #[test]
    fn tampered_stationary_fails_sdm() {
        let text = r#"{
            "name": "t", "metric": "minkowski", "points": 10,
            "connection": {"builtin": "stationary-sd", "h": [{"powers": [0,0,0,0], "matrix": [[[0,0]]]}],
              "tamper_a1": [[[0.5,0],[0,0]],[[0,0],[0,0]]]},
            "checks": ["sdm"]
        }"#;
        let r = run(&Scenario::from_json(text).unwrap()).unwrap();
        assert!(!r.passed());
        assert!(r.checks[0].worst > 1e-3);
    }
}
