//! Named verification checks. Each acceptance criterion is a [`Criterion`]
//! made of sub-checks; every check reports its worst residual against a
//! tolerance.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{commutator, CMatrix, TraceKind, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::forms::{
    basis, comp, BasisIndex, DerivativeStrategy, Form, FormField, FormValue, Generator, Point,
    PolyCoefficient, PolyTerm, Wirtinger, TOP,
};
use crate::hodge::{classify_duality, duality_residual, pointwise_inner, star, star_table, DualityClass, Metric};
use crate::instantons::{
    build_bpst, build_constant, build_dirac_monopole, build_stationary_sd, gauge_normalize, normal_family_duality,
    BpstParams, DualityTarget, EtaForm, EtaKind, NormalizeCase,
};
use crate::quadrature::QuadratureSpec;
use crate::support::localized;
use crate::variational::{
    bump_direction, directional_derivative, eb_inner, fields_at, optimize_profile, profile_connection,
    OptimizerConfig, ProfileParam,
};
use crate::yang_mills::{
    covariant_costar_jet, covariant_d_jet, current, curvature, lorenz_residual, sample_polydisk, sample_shell,
    ym_residuals, Connection, CurrentMethod, CurvatureMethod,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: Status,
    pub worst: f64,
    pub tolerance: f64,
    pub points: usize,
    pub detail: String,
}

impl CheckOutcome {
    /// Passes when `worst <= tolerance` (a NaN residual fails).
    pub fn bound(name: impl Into<String>, worst: f64, tolerance: f64, points: usize, detail: impl Into<String>) -> Self {
        let status = if worst <= tolerance { Status::Pass } else { Status::Fail };
        CheckOutcome {
            name: name.into(),
            status,
            worst,
            tolerance,
            points,
            detail: detail.into(),
        }
    }

    /// Passes when `value >= floor`; the reported residual is `value`.
    pub fn at_least(name: impl Into<String>, value: f64, floor: f64, points: usize, detail: impl Into<String>) -> Self {
        let status = if value >= floor { Status::Pass } else { Status::Fail };
        CheckOutcome {
            name: name.into(),
            status,
            worst: value,
            tolerance: floor,
            points,
            detail: detail.into(),
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool, points: usize, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            worst: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            points,
            detail: detail.into(),
        }
    }

    pub fn info(name: impl Into<String>, value: f64, points: usize, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.into(),
            status: Status::Info,
            worst: value,
            tolerance: f64::NAN,
            points,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Shared settings for check runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckConfig {
    pub seed: u64,
    pub points: usize,
    pub trace: TraceKind,
    pub quadrature: QuadratureSpec,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            seed: 20240607,
            points: 100,
            trace: TraceKind::Matrix,
            quadrature: QuadratureSpec::default(),
        }
    }
}

/// One acceptance criterion and its sub-checks.
#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub checks: Vec<CheckOutcome>,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }

    /// `criterion 3 adjointness: PASS` followed by failing sub-check names.
    pub fn summary_line(&self) -> String {
        let failing: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.passed())
            .map(|c| c.name.as_str())
            .collect();
        if failing.is_empty() {
            format!("criterion {:>2} {}: PASS", self.id, self.name)
        } else {
            format!("criterion {:>2} {}: FAIL ({})", self.id, self.name, failing.join(", "))
        }
    }
}

pub const CRITERIA: [(u8, &str); 12] = [
    (1, "star-table"),
    (2, "involution"),
    (3, "adjointness"),
    (4, "curvature-current"),
    (5, "lorenz"),
    (6, "stationary-sd"),
    (7, "dirac-monopole"),
    (8, "bpst"),
    (9, "criticality"),
    (10, "constant-solutions"),
    (11, "sign-laws"),
    (12, "profile-optimization"),
];

/// Looks up a criterion by id (`"3"`) or name (`"adjointness"`).
pub fn criterion_id(name: &str) -> Option<u8> {
    CRITERIA
        .iter()
        .find(|(id, n)| *n == name || id.to_string() == name)
        .map(|(id, _)| *id)
}

pub fn run_criterion(id: u8, cfg: &CheckConfig) -> Result<Criterion> {
    let checks = match id {
        1 => star_table_checks()?,
        2 => involution_checks(cfg)?,
        3 => adjointness_checks(cfg)?,
        4 => curvature_current_checks(cfg)?,
        5 => lorenz_checks(cfg)?,
        6 => stationary_checks(cfg)?,
        7 => monopole_checks(cfg)?,
        8 => bpst_checks(cfg)?,
        9 => criticality_checks(cfg)?,
        10 => constant_checks(cfg)?,
        11 => sign_law_checks(cfg)?,
        12 => profile_checks(cfg)?,
        _ => return Err(Error::InvalidInput(format!("no criterion {id}; expected 1..=12"))),
    };
    let name = CRITERIA[(id - 1) as usize].1;
    Ok(Criterion { id, name, checks })
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub(crate) fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let x = random_matrix(rng, n);
    (&x - &x.adjoint()).scale_re(0.5).expm()
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, max_power: u32, terms: usize) -> PolyCoefficient {
    let terms = (0..terms)
        .map(|_| PolyTerm {
            powers: std::array::from_fn(|_| rng.gen_range(0..=max_power)),
            matrix: random_matrix(rng, n),
        })
        .collect();
    PolyCoefficient::new(terms).expect("terms share a dimension")
}

/// A seeded connection with polynomial components.
pub fn random_poly_connection(seed: u64, n: usize) -> Connection {
    let mut r = rng(seed);
    Connection::from_poly(std::array::from_fn(|_| random_poly(&mut r, n, 2, 3))).expect("degree-1 polynomial")
}

fn basis_value(gens: &[Generator], c: Complex64) -> FormValue {
    let (sign, b) = BasisIndex::from_generators(gens).expect("distinct generators");
    Form::basis_form(b, CMatrix::scalar(1, c * sign))
}

fn form_gap(a: &FormValue, b: &FormValue) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).max_abs())
        .fold(0.0, f64::max)
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

fn star_table_checks() -> Result<Vec<CheckOutcome>> {
    use Generator::*;
    let mut out = Vec::new();
    let b = |g: &[Generator], k: Complex64| basis_value(g, k);
    let sum = |x: FormValue, y: FormValue| x.add(&y).expect("same degree");
    // eigenbases
    let euclid_sd = [b(&[Dz1, Dz2], ONE), b(&[Dzb1, Dzb2], ONE), sum(b(&[Dz1, Dzb1], ONE), b(&[Dz2, Dzb2], ONE))];
    let euclid_asd = [b(&[Dz1, Dzb2], ONE), b(&[Dz2, Dzb1], ONE), sum(b(&[Dz1, Dzb1], ONE), b(&[Dz2, Dzb2], -ONE))];
    let mink = |s: f64| {
        [
            sum(b(&[Dz1, Dz2], ONE), b(&[Dz2, Dzb1], I * s)),
            sum(b(&[Dz1, Dzb1], ONE), b(&[Dz2, Dzb2], I * s)),
            sum(b(&[Dz1, Dzb2], ONE), b(&[Dzb1, Dzb2], I * s)),
        ]
    };
    let eig = |forms: &[FormValue], m: Metric, lam: Complex64| {
        max_of(forms.iter().map(|f| form_gap(&star(f, m), &f.scale(lam))))
    };
    let worst = max_of([
        eig(&euclid_sd, Metric::Euclidean, ONE),
        eig(&euclid_asd, Metric::Euclidean, -ONE),
        eig(&mink(1.0), Metric::Minkowski, I),
        eig(&mink(-1.0), Metric::Minkowski, -I),
    ]);
    out.push(CheckOutcome::bound("eigenbases", worst, 1e-12, 12, "SD/ASD spans, eigenvalues ±1 and ±i"));

    // ★ of 1-forms
    let h = c(0.5, 0.0);
    let expected = [
        (Metric::Euclidean, Dz1, b(&[Dz1, Dz2, Dzb2], h)),
        (Metric::Euclidean, Dz2, b(&[Dz1, Dz2, Dzb1], -h)),
        (Metric::Euclidean, Dzb1, b(&[Dz2, Dzb1, Dzb2], h)),
        (Metric::Euclidean, Dzb2, b(&[Dz1, Dzb1, Dzb2], -h)),
        (Metric::Minkowski, Dz1, b(&[Dz2, Dzb1, Dzb2], h)),
        (Metric::Minkowski, Dz2, b(&[Dz1, Dz2, Dzb1], h)),
        (Metric::Minkowski, Dzb1, b(&[Dz1, Dz2, Dzb2], h)),
        (Metric::Minkowski, Dzb2, b(&[Dz1, Dzb1, Dzb2], h)),
    ];
    let worst = max_of(expected.iter().map(|(m, g, want)| form_gap(&star(&b(&[*g], ONE), *m), want)));
    out.push(CheckOutcome::bound("one-form-star", worst, 1e-12, 8, "★dz_k and ★dz̄_k for both metrics"));

    // layouts of ★F for a generic F
    let mut r = rng(3);
    let f = Form::from_coeffs(2, (0..6).map(|_| random_matrix(&mut r, 2)).collect())?;
    let k = f.coeffs();
    let layout = |entries: [(usize, CMatrix); 6]| {
        let mut coeffs = vec![CMatrix::zeros(2); 6];
        for (slot, m) in entries {
            coeffs[slot] = m;
        }
        Form::from_coeffs(2, coeffs).expect("six coefficients")
    };
    let euclid = layout([
        (comp::F12, k[comp::F12].clone()),
        (comp::F1B2B, k[comp::F1B2B].clone()),
        (comp::F11B, k[comp::F22B].clone()),
        (comp::F22B, k[comp::F11B].clone()),
        (comp::F12B, -&k[comp::F12B]),
        (comp::F21B, -&k[comp::F21B]),
    ]);
    let minkowski = layout([
        (comp::F12, k[comp::F21B].clone()),
        (comp::F1B2B, -&k[comp::F12B]),
        (comp::F11B, k[comp::F22B].clone()),
        (comp::F22B, -&k[comp::F11B]),
        (comp::F12B, k[comp::F1B2B].clone()),
        (comp::F21B, -&k[comp::F12]),
    ]);
    out.push(CheckOutcome::bound(
        "curvature-star-euclidean",
        form_gap(&star(&f, Metric::Euclidean), &euclid),
        1e-12,
        1,
        "★F component layout",
    ));
    out.push(CheckOutcome::bound(
        "curvature-star-minkowski",
        form_gap(&star(&f, Metric::Minkowski), &minkowski),
        1e-12,
        1,
        "★F component layout",
    ));
    let top = star_table(Metric::Minkowski).entry(TOP, BasisIndex::from_mask(0));
    out.push(CheckOutcome::bound(
        "star-volume-minkowski",
        (top - c(-4.0, 0.0)).norm(),
        1e-12,
        1,
        format!("★(dz1∧dz2∧dz̄1∧dz̄2) = {top}"),
    ));
    Ok(out)
}

fn involution_checks(cfg: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for m in Metric::ALL {
        for p in 0..=4u8 {
            let pp = (p * (4 - p)) as i32;
            let sign = match m {
                Metric::Euclidean => (-1f64).powi(pp),
                Metric::Minkowski => (-1f64).powi(pp + 1),
            };
            for &bi in basis(p) {
                let f: FormValue = Form::basis_form(bi, CMatrix::identity(1));
                let ss = star(&star(&f, m), m);
                worst = worst.max(form_gap(&ss, &f.scale(c(sign, 0.0))));
                count += 1;
            }
        }
    }
    let mut out = vec![CheckOutcome::bound("double-star", worst, 1e-12, count, "★★ = ±1 per degree and metric")];
    let mut r = rng(cfg.seed ^ 0x5a5a);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for m in Metric::ALL {
        for p in 0..=4u8 {
            for _ in 0..50 {
                let f: FormValue =
                    Form::from_coeffs(p, (0..basis(p).len()).map(|_| random_matrix(&mut r, 2)).collect())?;
                let lhs = star(&f, m).adjoint();
                let rhs = star(&f.adjoint(), m);
                worst = worst.max(form_gap(&lhs, &rhs));
                count += 1;
            }
        }
    }
    out.push(CheckOutcome::bound("star-adjoint", worst, 1e-12, count, "(★η)* = ★(η*)"));
    Ok(out)
}

/// A seeded polynomial form of degree `p` multiplied by a bump.
fn bumped_form(seed: u64, p: u8, center: [f64; 4], radius: f64) -> Result<FormField> {
    let mut r = rng(seed);
    let coeffs = (0..basis(p).len()).map(|_| random_poly(&mut r, 2, 1, 2)).collect();
    localized(&FormField::from_poly(p, coeffs)?, center, radius)
}

/// `((D_A α, β), (α, D_A* β), ‖α‖, ‖β‖)` over a box fitted to the ball
/// carrying `α` and `β`.
pub fn adjointness_pair(
    a: &Connection,
    alpha: &FormField,
    beta: &FormField,
    m: Metric,
    quad: &QuadratureSpec,
    kind: TraceKind,
) -> Result<[Complex64; 4]> {
    quad.integrate(|p| {
        let aj = a.jet(p, 1)?;
        let al = alpha.jet(p, 1)?;
        let be = beta.jet(p, 1)?;
        let da = covariant_d_jet(&aj, &al)?.value();
        let dsb = covariant_costar_jet(&aj, &be, m)?.value();
        let (av, bv) = (al.value(), be.value());
        Ok([
            pointwise_inner(&da, &bv, m, kind)?,
            pointwise_inner(&av, &dsb, m, kind)?,
            pointwise_inner(&av, &av, Metric::Euclidean, kind)?,
            pointwise_inner(&bv, &bv, Metric::Euclidean, kind)?,
        ])
    })
}

fn adjointness_checks(cfg: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let radius = 1.0;
    for m in Metric::ALL {
        let mut worst: f64 = 0.0;
        let mut detail = String::new();
        for k in 0..10u64 {
            let seed = cfg.seed.wrapping_add(100 * k);
            let mut r = rng(seed);
            let center: [f64; 4] = std::array::from_fn(|_| r.gen_range(-0.5..0.5));
            let p = (k % 3) as u8 + 1;
            let alpha = bumped_form(seed + 1, p - 1, center, radius)?;
            let beta = bumped_form(seed + 2, p, center, radius)?;
            let a = random_poly_connection(seed + 3, 2);
            let quad = QuadratureSpec {
                radius,
                ..cfg.quadrature
            }
            .centered(center);
            let [lhs, rhs, aa, bb] = adjointness_pair(&a, &alpha, &beta, m, &quad, cfg.trace)?;
            let bound = 1e-3 * (aa.norm().sqrt() * bb.norm().sqrt() + 1.0);
            let ratio = (lhs - rhs).norm() / bound;
            if ratio > worst {
                worst = ratio;
                detail = format!("pair {k} (degree {p}): |gap| = {:.3e}, bound {bound:.3e}", (lhs - rhs).norm());
            }
        }
        out.push(CheckOutcome::bound(
            format!("adjointness-{}", m.name()),
            worst,
            1.0,
            10,
            format!("gap / (1e-3(‖α‖‖β‖+1)); worst {detail}"),
        ));
    }
    Ok(out)
}

fn relative_gap(a: &FormValue, b: &FormValue) -> Result<f64> {
    Ok(a.sub(b)?.norm() / (1.0 + b.norm()))
}

fn curvature_current_checks(cfg: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    let a = random_poly_connection(cfg.seed, 2);
    let pts = sample_polydisk(cfg.seed + 1, cfg.points, 1.0);
    let gen = curvature(&a, CurvatureMethod::Generic);
    let cmp = curvature(&a, CurvatureMethod::Components);
    let mut worst: f64 = 0.0;
    for p in &pts {
        worst = worst.max(relative_gap(&cmp.value(p)?, &gen.value(p)?)?);
    }
    let mut out = vec![CheckOutcome::bound(
        "curvature-components",
        worst,
        1e-12,
        pts.len(),
        "components vs dA + A∧A, relative to 1 + ‖F‖",
    )];
    for m in Metric::ALL {
        let closed = current(&a, m, CurrentMethod::ClosedForm).field;
        let generic = current(&a, m, CurrentMethod::Generic).field;
        let mut worst: f64 = 0.0;
        let mut slot_worst = [0.0f64; 4];
        for p in &pts {
            let (cv, gv) = (closed.value(p)?, generic.value(p)?);
            worst = worst.max(relative_gap(&cv, &gv)?);
            for (s, (x, y)) in slot_worst.iter_mut().zip(cv.coeffs().iter().zip(gv.coeffs())) {
                *s = s.max((x - y).frobenius_norm() / (1.0 + gv.norm()));
            }
        }
        out.push(CheckOutcome::bound(
            format!("current-closed-form-{}", m.name()),
            worst,
            1e-12,
            pts.len(),
            format!(
                "closed form vs generic D_A*F_A; per slot J1 J2 J1̄ J2̄: {:.2e} {:.2e} {:.2e} {:.2e}",
                slot_worst[0], slot_worst[1], slot_worst[2], slot_worst[3]
            ),
        ));
    }
    {
        let closed = current(&a, Metric::Minkowski, CurrentMethod::ClosedForm).field;
        let generic = current(&a, Metric::Minkowski, CurrentMethod::Generic).field;
        let mut flipped: f64 = 0.0;
        for p in &pts {
            let (cv, gv) = (closed.value(p)?, generic.value(p)?);
            for s in 0..2 {
                flipped = flipped.max((&cv.coeffs()[s] + &gv.coeffs()[s]).frobenius_norm() / (1.0 + gv.norm()));
            }
        }
        out.push(CheckOutcome::info(
            "current-closed-form-minkowski-negated",
            flipped,
            pts.len(),
            "J1, J2 slots of closed form + generic (zero when the closed form carries the opposite overall sign)",
        ));
    }
    let mut worst: f64 = 0.0;
    for p in &pts {
        worst = worst.max(ym_residuals(&a, None, Metric::Euclidean, p)?.0);
    }
    out.push(CheckOutcome::bound("bianchi", worst, 1e-10, pts.len(), "‖D_A F_A‖"));
    Ok(out)
}

/// Diagonal polynomial in a fixed unitary frame: `U diag(p_1, …) U*`.
fn conjugated_diag(u: &CMatrix, entries: &[PolyCoefficient]) -> Result<PolyCoefficient> {
    let n = u.dim();
    let mut terms = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        for t in e.terms() {
            let mut d = vec![ZERO; n];
            d[i] = t.matrix[(0, 0)];
            let m = &(u * &CMatrix::diag(&d)) * &u.adjoint();
            terms.push(PolyTerm { powers: t.powers, matrix: m });
        }
    }
    PolyCoefficient::new(terms)
}

fn scalar_poly(rng: &mut ChaCha8Rng, allowed: [bool; 4]) -> PolyCoefficient {
    let terms = (0..3)
        .map(|_| PolyTerm {
            powers: std::array::from_fn(|k| if allowed[k] { rng.gen_range(0..=2) } else { 0 }),
            matrix: random_matrix(rng, 1),
        })
        .collect();
    PolyCoefficient::new(terms).expect("scalar terms")
}

fn lorenz_checks(cfg: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    let mut r = rng(cfg.seed + 5);
    let pts = sample_polydisk(cfg.seed + 6, cfg.points, 1.0);
    let u = random_unitary(&mut r, 2);
    let holo = [true, true, false, false];
    let anti = [false, false, true, true];
    let mut comp = |allowed| -> Result<PolyCoefficient> {
        let entries = [scalar_poly(&mut r, allowed), scalar_poly(&mut r, allowed)];
        conjugated_diag(&u, &entries)
    };
    // normal: all values are simultaneously diagonal in the frame U
    let a = Connection::from_poly([comp(holo)?, comp(holo)?, comp(anti)?, comp(anti)?])?;
    let mut out = Vec::new();
    let closed = lorenz_residual(&a, Metric::Euclidean);
    let mut worst: f64 = 0.0;
    for p in &pts {
        let aj = a.jet(p, 1)?;
        let generic = covariant_costar_jet(&aj, &aj, Metric::Euclidean)?.value();
        let cl = closed.value(p)?.into_coeffs().remove(0);
        worst = worst.max(cl.frobenius_norm()).max(generic.norm());
    }
    out.push(CheckOutcome::bound(
        "lorenz-euclidean-normal-family",
        worst,
        1e-12,
        pts.len(),
        "holomorphic/antiholomorphic normal A: closed form and D_A*A",
    ));

    // A_j̄ = A_j* with ∂1A1 = ∂2A2*
    let mut r = rng(cfg.seed + 7);
    let (m1, k1, l1) = (random_matrix(&mut r, 2), random_matrix(&mut r, 2), random_matrix(&mut r, 2));
    let a1 = PolyCoefficient::new(vec![
        PolyTerm { powers: [1, 0, 0, 0], matrix: m1.clone() },
        PolyTerm { powers: [0, 1, 0, 0], matrix: k1 },
        PolyTerm { powers: [0, 0, 1, 1], matrix: l1 },
    ])?;
    let a2 = PolyCoefficient::new(vec![
        PolyTerm { powers: [0, 0, 0, 1], matrix: m1.adjoint() },
        PolyTerm { powers: [0, 0, 2, 0], matrix: random_matrix(&mut r, 2) },
    ])?;
    let premise = a1
        .derivative(Wirtinger::D1)
        .add(&a2.adjoint().derivative(Wirtinger::D2).scale(-ONE))?;
    let mut premise_worst: f64 = 0.0;
    for p in &pts {
        premise_worst = premise_worst.max(premise.eval(p).frobenius_norm());
    }
    out.push(CheckOutcome::bound(
        "lorenz-minkowski-premise",
        premise_worst,
        1e-12,
        pts.len(),
        "∂1A1 − ∂2A2* from the polynomial coefficients",
    ));
    let a = Connection::from_poly([a1.clone(), a2.clone(), a1.adjoint(), a2.adjoint()])?;
    let closed = lorenz_residual(&a, Metric::Minkowski);
    let mut worst: f64 = 0.0;
    for p in &pts {
        let aj = a.jet(p, 1)?;
        let generic = covariant_costar_jet(&aj, &aj, Metric::Minkowski)?.value();
        let cl = closed.value(p)?.into_coeffs().remove(0);
        worst = worst.max(cl.frobenius_norm()).max(generic.norm());
    }
    out.push(CheckOutcome::bound(
        "lorenz-minkowski-family",
        worst,
        1e-12,
        pts.len(),
        "A_j̄ = A_j*: closed form and D_A*A",
    ));
    Ok(out)
}

fn h_z1z2() -> PolyCoefficient {
    PolyCoefficient::monomial([1, 1, 0, 0], CMatrix::identity(1))
}

fn stationary_checks(cfg: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    let pts = sample_polydisk(cfg.seed + 11, cfg.points, 1.0);
    let mut out = Vec::new();
    let (eta0, a0) = build_stationary_sd(&PolyCoefficient::zero(1))?;
    let (eta1, a1) = build_stationary_sd(&h_z1z2())?;
    for (label, eta, a) in [("h=0", &eta0, &a0), ("h=z1z2", &eta1, &a1)] {
        let mut cond: f64 = 0.0;
        let mut fmin = f64::INFINITY;
        let mut vac: f64 = 0.0;
        for p in &pts {
            let rep = normal_family_duality(eta, Metric::Minkowski, DualityTarget::SelfDual, p)?;
            cond = cond.max(rep.condition_residual);
            fmin = fmin.min(rep.curvature.norm());
            let (b, e) = ym_residuals(a, None, Metric::Minkowski, p)?;
            vac = vac.max(b).max(e);
        }
        out.push(CheckOutcome::bound(format!("sdm-residual {label}"), cond, 1e-12, pts.len(), "[A1* − iA1, A2] − i(∂1A2 − ∂2A1)"));
        out.push(CheckOutcome::at_least(format!("nonzero-curvature {label}"), fmin, 1e-6, pts.len(), "min ‖F_A‖"));
        out.push(CheckOutcome::bound(
            format!("vacuum-residual {label}"),
            vac,
            1e-6,
            pts.len(),
            "max(‖D_AF‖, ‖D_A*F‖), Minkowski",
        ));
    }
    let mut disp: f64 = 0.0;
    for p in &pts {
        let v1 = eta0.a1.value(p)?.into_coeffs().remove(0);
        let v2 = eta0.a2.value(p)?.into_coeffs().remove(0);
        let got = commutator(&v2, &v1.adjoint())?;
        let phase = (-I * (p.z[1] - c(std::f64::consts::FRAC_PI_4, 0.0))).exp() * std::f64::consts::FRAC_1_SQRT_2;
        let want = CMatrix::from_rows(&[vec![ZERO, phase], vec![-phase, ZERO]])?;
        disp = disp.max((&got - &want).frobenius_norm());
    }
    out.push(CheckOutcome::bound("commutator h=0", disp, 1e-12, pts.len(), "[A2, A1*]"));
    let norm = gauge_normalize(&eta1, NormalizeCase::MinkowskiSd, Point::origin())?;
    let rep = norm.verify(&pts[..pts.len().min(20)])?;
    let f0 = curvature(&a0, CurvatureMethod::Generic);
    let f1 = curvature(&norm.connection, CurvatureMethod::Generic);
    let mut gap: f64 = 0.0;
    for p in &pts {
        gap = gap.max(f1.value(p)?.sub(&f0.value(p)?)?.norm());
    }
    out.push(CheckOutcome::bound("normal-form", rep.worst(), 1e-10, pts.len().min(20), "unitary g, A′1* = iA′1, A′2(z2) normal"));
    out.push(CheckOutcome::bound("normalized-curvature", gap, 1e-10, pts.len(), "F of normalized h=z1z2 vs F of h=0"));
    Ok(out)
}

/// The monopole matrices `B1 = [[−1, 1], [−i, −i]]`, `B2 = [[1, −i], [−1, −i]]`.
pub fn monopole_matrices() -> (CMatrix, CMatrix) {
    let b1 = CMatrix::from_rows(&[vec![c(-1., 0.), c(1., 0.)], vec![c(0., -1.), c(0., -1.)]]).unwrap();
    let b2 = CMatrix::from_rows(&[vec![c(1., 0.), c(0., -1.)], vec![c(-1., 0.), c(0., -1.)]]).unwrap();
    (b1, b2)
}

/// Seeded normal `B1` with `B1 + B1* ≠ 0`.
pub fn random_normal(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let u = random_unitary(rng, n);
    let d: Vec<Complex64> = (0..n).map(|_| c(rng.gen_range(0.5..1.5), rng.gen_range(-1.0..1.0))).collect();
    &(&u * &CMatrix::diag(&d)) * &u.adjoint()
}

fn monopole_suite(label: &str, b1: &CMatrix, b2: &CMatrix, pts: &[Point]) -> Result<Vec<CheckOutcome>> {
    let (a, rep) = build_dirac_monopole(b1, b2, 1e-10)?;
    let f = curvature(&a, CurvatureMethod::Generic);
    let mut asd: f64 = 0.0;
    let mut fmin = f64::INFINITY;
    let mut vac: f64 = 0.0;
    for p in pts {
        let fv = f.value(p)?;
        asd = asd.max(duality_residual(&fv, Metric::Euclidean, false)? / (1.0 + fv.norm()));
        fmin = fmin.min(fv.norm());
        let (b, e) = ym_residuals(&a, None, Metric::Euclidean, p)?;
        vac = vac.max(b).max(e);
    }
    Ok(vec![
        CheckOutcome::flag(
            format!("normal {label}"),
            rep.b1_normal && rep.b2_normal,
            1,
            "B1, B2 normal",
        ),
        CheckOutcome::flag(
            format!("condition-asd {label}"),
            rep.condition_asd,
            1,
            "B1 + B1* = −(B2 + B2*)",
        ),
        CheckOutcome::bound(format!("asd {label}"), asd, 1e-10, pts.len(), "‖F − (−★F)‖/2 relative"),
        CheckOutcome::flag(
            format!("classification {label}"),
            rep.classification == DualityClass::AntiSelfDual,
            1,
            format!("{}", rep.classification),
        ),
        CheckOutcome::at_least(format!("nonzero-curvature {label}"), fmin, 1e-6, pts.len(), "min ‖F_A‖"),
        CheckOutcome::bound(format!("vacuum-residual {label}"), vac, 1e-10, pts.len(), "max(‖D_AF‖, ‖D_A*F‖)"),
    ])
}

fn monopole_checks(cfg: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    // away from the origin, where F is nonzero
    let pts = sample_shell(cfg.seed + 21, cfg.points, 0.2, 2.0);
    let (b1, b2) = monopole_matrices();
    let mut out = monopole_suite("reference-pair", &b1, &b2, &pts)?;
    let mut r = rng(cfg.seed + 22);
    for k in 0..5 {
        let b1 = random_normal(&mut r, 2);
        let b2 = -&b1.adjoint();
        out.extend(monopole_suite(&format!("family-{k}"), &b1, &b2, &pts)?);
    }
    Ok(out)
}

fn bpst_checks(cfg: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let pts = sample_shell(cfg.seed + 31, cfg.points, 0.1, 10.0);
    let mut signs = Vec::new();
    for mu in [0.5, 1.0, 4.0] {
        let b = build_bpst(BpstParams::new(mu)?)?;
        let gamma = b.gamma.clone();
        let numeric = FormField::from_values(0, 2, DerivativeStrategy::finite_difference(), move |p| gamma.value(p))?;
        let fd_dg = numeric.d(crate::forms::DPart::Full)?;
        let f = curvature(&b.connection, CurvatureMethod::Generic);
        let (mut unit, mut mc, mut fgap, mut asd, mut vac, mut eb): (f64, f64, f64, f64, f64, f64) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for p in &pts {
            let g = b.gamma.value(p)?.into_coeffs().remove(0);
            unit = unit.max((&(&g * &g.adjoint()) - &CMatrix::identity(2)).max_abs()).max((g.det() - ONE).norm());
            let ginv_dg = Form::from_coeffs(0, vec![g.inverse()?])?.wedge(&fd_dg.value(p)?)?;
            let closed = b.maurer_cartan_closed_form(p)?;
            mc = mc.max(relative_gap(&ginv_dg, &closed)?);
            let fv = f.value(p)?;
            let pd = b.p_d_eta(p)?;
            let (plus, minus) = (fv.sub(&pd)?.norm(), fv.add(&pd)?.norm());
            signs.push(if plus <= minus { 1 } else { -1 });
            fgap = fgap.max(plus.min(minus) / (1.0 + pd.norm()));
            asd = asd.max(duality_residual(&fv, Metric::Euclidean, false)? / (1.0 + fv.norm()));
            let (bi, eq) = ym_residuals(&b.connection, None, Metric::Euclidean, p)?;
            vac = vac.max(bi).max(eq);
            let pr = b.p(p);
            let ip = eb_inner(&fields_at(&b.connection, p)?, cfg.trace);
            let want = -24.0 * pr * pr * trace_scale(cfg.trace, 2);
            eb = eb.max((ip - c(want, 0.0)).norm() / want.abs());
        }
        let n = pts.len();
        out.push(CheckOutcome::bound(format!("gamma-su2 mu={mu}"), unit, 1e-12, n, "γγ* = I, det γ = 1"));
        out.push(CheckOutcome::bound(format!("maurer-cartan-identity mu={mu}"), mc, 1e-8, n, "γ⁻¹dγ (finite differences) vs −(η − η*)/(2|z|²)"));
        out.push(CheckOutcome::bound(format!("curvature-p-d-eta mu={mu}"), fgap, 1e-8, n, "F = s·p·dη, relative"));
        out.push(CheckOutcome::bound(format!("asd mu={mu}"), asd, 1e-10, n, "Euclidean ASD residual, relative"));
        out.push(CheckOutcome::bound(format!("vacuum-residual mu={mu}"), vac, 1e-6, n, "max(‖D_AF‖, ‖D_A*F‖), |z| in [0.1, 10]"));
        out.push(CheckOutcome::bound(format!("eb-inner mu={mu}"), eb, 1e-8, n, "⟨E,B⟩ = −24p², relative"));
        let params = BpstParams::new(mu)?;
        let mut ode: f64 = 0.0;
        for p in &pts {
            ode = ode.max(crate::instantons::profile_ode_residual(&params, p.norm_sq())?);
        }
        out.push(CheckOutcome::bound(format!("profile-ode mu={mu}"), ode, 1e-10, n, "λf′ − (f² − f)λ′"));
    }
    let s = signs[0];
    out.push(CheckOutcome::flag(
        "global-sign",
        signs.iter().all(|&x| x == s),
        signs.len(),
        format!("F = {}p·dη at every point", if s > 0 { "+" } else { "−" }),
    ));
    Ok(out)
}

/// `Tr(I_n)` under the trace kind, relative to the matrix trace.
fn trace_scale(kind: TraceKind, n: usize) -> f64 {
    match kind {
        TraceKind::Matrix => 1.0,
        TraceKind::State => 1.0 / n as f64,
    }
}

/// Nodes per axis for criticality quadrature over the bump box.
pub const CRITICALITY_NODES: usize = 24;

fn criticality_checks(cfg: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    let b = build_bpst(BpstParams::new(1.0)?)?;
    let quad = QuadratureSpec {
        nodes_per_axis: CRITICALITY_NODES,
        ..cfg.quadrature
    };
    let mut crit: f64 = 0.0;
    let mut agree: f64 = 0.0;
    let mut detail = String::new();
    let centers = bump_centers(cfg.seed + 41, 5);
    for (k, center) in centers.iter().enumerate() {
        let dir = bump_direction(cfg.seed + 50 + k as u64, *center, 1.0, 2);
        let d = directional_derivative(&b.connection, &dir, None, Metric::Euclidean, &quad, cfg.trace)?;
        let bound = 1e-3 * d.direction_norm;
        crit = crit.max(d.richardson.norm() / bound);
        agree = agree.max(d.gap / bound);
        detail = format!("{detail}[{k}: dH/dt {:.2e}, (B, D*F) {:.2e}, bound {bound:.2e}] ", d.richardson.re, d.inner.re);
    }
    let mut out = vec![
        CheckOutcome::bound("bpst-critical", crit, 1.0, 5, format!("|dH/dt| / (1e-3‖B‖); {detail}")),
        CheckOutcome::bound("derivative-matches-inner-product", agree, 1.0, 5, "|FD − (B, D_A*F_A)| / (1e-3‖B‖)"),
    ];
    // negative control: the ±10% perturbed profile
    let pert = perturbed_profile()?;
    let a = profile_connection(&pert)?;
    let dir = bump_direction(cfg.seed + 60, centers[0], 1.0, 2);
    let d = directional_derivative(&a, &dir, None, Metric::Euclidean, &quad, cfg.trace)?;
    let bound = 1e-3 * d.direction_norm;
    out.push(CheckOutcome::at_least(
        "non-critical-control",
        d.richardson.norm() / bound,
        10.0,
        1,
        format!("perturbed profile: dH/dt {:.3e}, bound {bound:.3e}", d.richardson.re),
    ));
    Ok(out)
}

/// Seeded centers at distance 1.3 to 2 from the origin, for unit-radius bumps.
pub fn bump_centers(seed: u64, count: usize) -> Vec<[f64; 4]> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let d: [f64; 4] = std::array::from_fn(|_| r.gen_range(-1.0..1.0));
            let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            let rad = r.gen_range(1.3..2.0);
            d.map(|x| x * rad / n)
        })
        .collect()
}

/// The BPST profile (μ = 1) with its 6 interior knot values scaled
/// alternately by 1.1 and 0.9.
pub fn perturbed_profile() -> Result<ProfileParam> {
    ProfileParam::perturbed_bpst(1.0, 6, 0.1)
}

fn strictly_upper(rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(3, |i, j| if j > i { c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) } else { ZERO })
}

fn constant_checks(cfg: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let mut r = rng(cfg.seed + 71);
    let p = Point::origin();
    for m in Metric::ALL {
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let comps: [PolyCoefficient; 4] = std::array::from_fn(|_| PolyCoefficient::constant(strictly_upper(&mut r)));
            let a = Connection::from_poly(comps)?;
            let j = current(&a, m, CurrentMethod::Generic).field.value(&p)?;
            worst = worst.max(j.norm());
        }
        out.push(CheckOutcome::bound(
            format!("nilpotent-current-{}", m.name()),
            worst,
            1e-12,
            5,
            "‖D_A*F_A‖ for strictly upper triangular 3×3 constants",
        ));
    }
    let mut worst_class = Vec::new();
    let mut ok = true;
    for _ in 0..5 {
        let x = random_matrix(&mut r, 2);
        // A1* = iA1 means A1 = e^{iπ/4}·Hermitian... A1 = (1 − i)H/√2 with H Hermitian
        let h = (&x + &x.adjoint()).scale_re(0.5);
        let a1 = h.scale(c(1.0, -1.0) * std::f64::consts::FRAC_1_SQRT_2);
        let a2 = random_normal(&mut r, 2);
        let (_, rep) = build_constant(&a1, &a2, Metric::Minkowski, 1e-10)?;
        ok &= rep.minkowski_sd && rep.classification == DualityClass::SelfDual;
        worst_class.push(format!("{} (condition {})", rep.classification, rep.minkowski_sd));
    }
    out.push(CheckOutcome::flag(
        "minkowski-sd-constant-family",
        ok,
        5,
        format!("classifications: {}", worst_class.join(", ")),
    ));
    Ok(out)
}

/// Whether `v` lies on the ray `dir·ℝ≥0` within `tol` (relative to `|v|`
/// for the transverse part).
fn on_ray(v: Complex64, dir: Complex64, tol: f64) -> (bool, f64) {
    let along = (v * dir.conj()).re;
    let across = (v * dir.conj()).im.abs();
    let dev = across.max((-along).max(0.0));
    (dev <= tol * (1.0 + v.norm()), dev)
}

fn ray_label(dir: Complex64) -> &'static str {
    match (dir.re.round() as i32, dir.im.round() as i32) {
        (1, 0) => "ℝ≥0",
        (-1, 0) => "−ℝ≥0",
        (0, 1) => "iℝ≥0",
        _ => "−iℝ≥0",
    }
}

fn sign_law_checks(cfg: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let mut families: Vec<(String, Connection, Metric, Complex64, Vec<Point>)> = Vec::new();
    let shell = sample_shell(cfg.seed + 81, 20, 0.2, 3.0);
    let disk = sample_polydisk(cfg.seed + 82, 20, 1.0);
    // Euclidean ASD: BPST and the monopole pair
    let b = build_bpst(BpstParams::new(1.0)?)?;
    families.push(("bpst".into(), b.connection, Metric::Euclidean, -ONE, shell.clone()));
    let (b1, b2) = monopole_matrices();
    let (mono, _) = build_dirac_monopole(&b1, &b2, 1e-10)?;
    families.push(("dirac-monopole".into(), mono, Metric::Euclidean, -ONE, shell.clone()));
    let mut r = rng(cfg.seed + 83);
    let b1 = random_normal(&mut r, 2);
    let (mono, _) = build_dirac_monopole(&b1, &-&b1.adjoint(), 1e-10)?;
    families.push(("normal-monopole-family".into(), mono, Metric::Euclidean, -ONE, shell.clone()));
    // Euclidean SD: commuting diagonal holomorphic η that is not closed
    let d = |a: PolyCoefficient, b: PolyCoefficient| -> Result<PolyCoefficient> {
        let mut terms = Vec::new();
        for (i, p) in [a, b].iter().enumerate() {
            for t in p.terms() {
                let mut e = [ZERO; 2];
                e[i] = t.matrix[(0, 0)];
                terms.push(PolyTerm { powers: t.powers, matrix: CMatrix::diag(&e) });
            }
        }
        PolyCoefficient::new(terms)
    };
    let one = CMatrix::identity(1);
    let eta = EtaForm::from_poly(
        d(PolyCoefficient::monomial([0, 2, 0, 0], one.clone()), PolyCoefficient::monomial([0, 1, 0, 0], one.scale(I)))?,
        d(PolyCoefficient::zero(1), PolyCoefficient::monomial([1, 0, 0, 0], one.clone()))?,
        true,
        true,
    )?;
    let sd = crate::instantons::from_eta(&eta, EtaKind::Skew);
    families.push(("commuting-holomorphic".into(), sd, Metric::Euclidean, ONE, disk.clone()));
    // Minkowski families derived from B = ±iE: SD gives −i·ℝ≥0
    let (_, stat) = build_stationary_sd(&PolyCoefficient::zero(1))?;
    families.push(("stationary-sd".into(), stat, Metric::Minkowski, -I, disk.clone()));
    for (name, a, m, dir, pts) in families {
        let f = curvature(&a, CurvatureMethod::Generic);
        let mut worst: f64 = 0.0;
        let mut ok = true;
        let mut classes = std::collections::BTreeSet::new();
        for p in &pts {
            let fv = f.value(p)?;
            classes.insert(format!("{}", classify_duality(&fv, m, 1e-8)?));
            let ip = eb_inner(&fields_at(&a, p)?, cfg.trace);
            let (on, dev) = on_ray(ip, dir, 1e-8);
            ok &= on;
            worst = worst.max(dev / (1.0 + ip.norm()));
            if m == Metric::Euclidean {
                // strict sign for instantons
                ok &= (ip * dir.conj()).re > 0.0;
            }
        }
        out.push(CheckOutcome {
            name: format!("ray {name} ({})", m.name()),
            status: if ok { Status::Pass } else { Status::Fail },
            worst,
            tolerance: 1e-8,
            points: pts.len(),
            detail: format!(
                "expected ray {}; classes {}",
                ray_label(dir),
                classes.into_iter().collect::<Vec<_>>().join("/")
            ),
        });
    }
    Ok(out)
}

fn profile_checks(cfg: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    let pert = perturbed_profile()?;
    let res = optimize_profile(&pert, &OptimizerConfig::default(), cfg.trace)?;
    let ratio = res.initial_residual / res.final_residual.max(1e-300);
    let h0 = res.history.first().map(|r| r.h).unwrap_or(f64::NAN);
    let h1 = res.history.last().map(|r| r.h).unwrap_or(f64::NAN);
    Ok(vec![
        CheckOutcome::at_least(
            "residual-reduction",
            ratio,
            10.0,
            res.history.len(),
            format!("ODE residual {:.3e} → {:.3e}", res.initial_residual, res.final_residual),
        ),
        CheckOutcome::flag(
            "monotone-h",
            res.monotone(),
            res.history.len(),
            format!("H {h0:.6} → {h1:.6} over {} accepted steps", res.history.len() - 1),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_by_name_and_id() {
        assert_eq!(criterion_id("adjointness"), Some(3));
        assert_eq!(criterion_id("12"), Some(12));
        assert_eq!(criterion_id("nope"), None);
    }

    #[test]
    fn ray_membership() {
        assert!(on_ray(c(-2.0, 0.0), -ONE, 1e-8).0);
        assert!(!on_ray(c(2.0, 0.0), -ONE, 1e-8).0);
        assert!(on_ray(ZERO, I, 1e-8).0 && on_ray(ZERO, -I, 1e-8).0);
        assert!(!on_ray(c(0.0, 1.0), -I, 1e-8).0);
    }

    #[test]
    fn fast_criteria_pass() {
        let cfg = CheckConfig {
            points: 20,
            ..Default::default()
        };
        for id in [1, 2, 5, 7] {
            let cr = run_criterion(id, &cfg).unwrap();
            assert!(cr.passed(), "{cr:#?}");
        }
    }
}
