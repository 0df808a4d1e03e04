//! Chromo-electric and chromo-magnetic fields, the Yang-Mills Lagrangian and
//! functional, criticality checks along compactly supported directions, and
//! optimization of radial profiles for the `f γ⁻¹dγ` ansatz.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{CMatrix, TraceKind, I, ZERO};
use crate::error::{Error, Result};
use crate::forms::{comp, DerivativeStrategy, Form, FormField, FormJet, FormValue, Point};
use crate::hodge::{pointwise_inner, Metric};
use crate::instantons::{profile_ode_residual, radial_connection, RadialProfile};
use crate::jet::ScalarJet;
use crate::quadrature::{gauss_legendre, QuadratureSpec};
use crate::support::bump_jet;
use crate::yang_mills::{covariant_costar_jet, curvature_jet, Connection, CurvatureMethod};

/// Functional values above this magnitude are reported as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `E = (E1, E2, E3)` and `B = (B1, B2, B3)` at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldPair {
    pub e: [CMatrix; 3],
    pub b: [CMatrix; 3],
}

/// The six linear combinations of curvature components defining `E` and `B`.
pub fn extract_eb(f: &FormValue) -> Result<FieldPair> {
    if f.degree() != 2 {
        return Err(Error::DegreeMismatch {
            expected: 2,
            found: f.degree(),
        });
    }
    let k = f.coeffs();
    let (f12, f11b, f12b, f21b, f22b, f1b2b) = (
        &k[comp::F12],
        &k[comp::F11B],
        &k[comp::F12B],
        &k[comp::F21B],
        &k[comp::F22B],
        &k[comp::F1B2B],
    );
    let sum = |terms: &[(f64, &CMatrix)], scale: Complex64| {
        let mut m = CMatrix::zeros(f.dim());
        for (s, t) in terms {
            m.add_scaled(t, c(*s, 0.0));
        }
        m.scale(scale)
    };
    let e = [
        f11b.scale(c(0.0, 2.0)),
        sum(&[(1., f12), (1., f1b2b), (1., f12b), (-1., f21b)], c(-1.0, 0.0)),
        sum(&[(1., f12), (-1., f1b2b), (-1., f12b), (-1., f21b)], -I),
    ];
    let b = [
        f22b.scale(c(0.0, 2.0)),
        sum(&[(1., f12), (1., f1b2b), (-1., f12b), (1., f21b)], c(-1.0, 0.0)),
        sum(&[(1., f12), (-1., f1b2b), (1., f12b), (1., f21b)], -I),
    ];
    Ok(FieldPair { e, b })
}

impl FieldPair {
    pub fn dim(&self) -> usize {
        self.e[0].dim()
    }

    /// Inverts [`extract_eb`], recovering the six curvature components.
    pub fn to_curvature(&self) -> FormValue {
        let [e1, e2, e3] = &self.e;
        let [b1, b2, b3] = &self.b;
        let half = c(0.5, 0.0);
        // a = F12, b = F1̄2̄, c = F12̄, d = F21̄
        let a_plus_b = (e2 + b2).scale(-half);
        let a_minus_b = (e3 + b3).scale(I * half);
        let c_minus_d = (e2 - b2).scale(-half);
        let c_plus_d = (b3 - e3).scale(I * half);
        let mut coeffs = vec![CMatrix::zeros(self.dim()); 6];
        coeffs[comp::F12] = (&a_plus_b + &a_minus_b).scale(half);
        coeffs[comp::F1B2B] = (&a_plus_b - &a_minus_b).scale(half);
        coeffs[comp::F12B] = (&c_plus_d + &c_minus_d).scale(half);
        coeffs[comp::F21B] = (&c_plus_d - &c_minus_d).scale(half);
        coeffs[comp::F11B] = e1.scale(c(0.0, -0.5));
        coeffs[comp::F22B] = b1.scale(c(0.0, -0.5));
        Form::from_coeffs(2, coeffs).expect("six degree-2 coefficients")
    }

    pub fn norm(&self) -> f64 {
        self.e
            .iter()
            .chain(&self.b)
            .map(|m| m.frobenius_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// `⟨E, B⟩ = Tr(E1B1* + E2B2* + E3B3*)`.
pub fn eb_inner(fp: &FieldPair, kind: TraceKind) -> Complex64 {
    fp.e.iter()
        .zip(&fp.b)
        .map(|(e, b)| (e * &b.adjoint()).trace(kind))
        .sum()
}

/// Whether `E` and `B` are componentwise Hermitian.
pub fn hermitian_field_check(fp: &FieldPair, tol: f64) -> (bool, bool) {
    (
        fp.e.iter().all(|m| m.is_hermitian(tol)),
        fp.b.iter().all(|m| m.is_hermitian(tol)),
    )
}

/// `E` and `B` of the curvature of `a` at `p`.
pub fn fields_at(a: &Connection, p: &Point) -> Result<FieldPair> {
    let f = curvature_jet(&a.jet(p, 1)?, CurvatureMethod::Generic)?;
    extract_eb(&f.value())
}

/// Pointwise Lagrangian pieces `(−⟨A, J⟩, ½⟨F, F⟩)` from a jet of `A` of
/// order at least 1.
fn lagrangian_parts(
    aj: &FormJet,
    j: Option<&FormValue>,
    m: Metric,
    kind: TraceKind,
) -> Result<(Complex64, Complex64)> {
    let f = curvature_jet(&aj.truncate(1), CurvatureMethod::Generic)?.value();
    let energy = pointwise_inner(&f, &f, m, kind)? * 0.5;
    let source = match j {
        Some(j) => -pointwise_inner(&aj.value(), j, m, kind)?,
        None => ZERO,
    };
    Ok((source, energy))
}

/// The coefficient of `vol` in `Tr(−A∧★J* + ½ F∧★F*)` at `p`.
pub fn lagrangian(
    a: &Connection,
    j: Option<&FormField>,
    m: Metric,
    p: &Point,
    kind: TraceKind,
) -> Result<Complex64> {
    let jv = j.map(|j| j.value(p)).transpose()?;
    let (s, e) = lagrangian_parts(&a.jet(p, 1)?, jv.as_ref(), m, kind)?;
    Ok(s + e)
}

/// `H(A)` with its split into `(A, −J)` and `½(F, F)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalValue {
    /// Quadrature of the Lagrangian density.
    pub total: Complex64,
    /// `(A, −J)`.
    pub source: Complex64,
    /// `½(F_A, F_A)`.
    pub energy: Complex64,
}

impl FunctionalValue {
    /// Relative gap between the total and the sum of its two parts.
    pub fn split_gap(&self) -> f64 {
        (self.total - self.source - self.energy).norm() / self.total.norm().max(1e-300)
    }
}

fn check_divergence(v: Complex64) -> Result<()> {
    if v.norm() > DIVERGENCE_LIMIT {
        return Err(Error::Divergent(v.norm()));
    }
    Ok(())
}

pub fn functional(
    a: &Connection,
    j: Option<&FormField>,
    m: Metric,
    quad: &QuadratureSpec,
    kind: TraceKind,
) -> Result<FunctionalValue> {
    let [total, source, energy] = quad.integrate(|p| {
        let jv = j.map(|j| j.value(p)).transpose()?;
        let aj = a.jet(p, 1)?;
        let (s, e) = lagrangian_parts(&aj, jv.as_ref(), m, kind)?;
        let l = lagrangian(a, j, m, p, kind)?;
        Ok([l, s, e])
    })?;
    for v in [total, source, energy] {
        check_divergence(v)?;
    }
    Ok(FunctionalValue { total, source, energy })
}

/// A perturbation direction, optionally known to vanish outside a ball.
#[derive(Clone, Debug)]
pub struct Direction {
    pub connection: Connection,
    pub support: Option<([f64; 4], f64)>,
}

impl Direction {
    /// Whether `p` can carry a nonzero value.
    fn touches(&self, p: &Point) -> bool {
        match self.support {
            None => true,
            Some((center, radius)) => {
                let x = p.real();
                let d2: f64 = x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 < radius * radius
            }
        }
    }

    /// A box fitted to the support, or `fallback` without one.
    pub fn quadrature(&self, fallback: &QuadratureSpec) -> QuadratureSpec {
        match self.support {
            Some((center, radius)) => QuadratureSpec {
                radius,
                ..*fallback
            }
            .centered(center),
            None => *fallback,
        }
    }
}

/// `B = bump · (η − η*)` with `η = C1 dz1 + C2 dz2` for seeded constant
/// matrices `C_j` (entries uniform in the unit square), so `B` is
/// skew-Hermitian and supported in the ball.
pub fn bump_direction(seed: u64, center: [f64; 4], radius: f64, n: usize) -> Direction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || CMatrix::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let (c1, c2) = (draw(), draw());
    let coeffs = [c1.clone(), c2.clone(), -&c1.adjoint(), -&c2.adjoint()];
    let field = FormField::new(1, n, DerivativeStrategy::ClosedForm, move |p, k| {
        let b = bump_jet(p, center, radius, k)?;
        Form::from_coeffs(1, coeffs.iter().map(|m| b.times_matrix(m)).collect())
    });
    Direction {
        connection: Connection::new(field).expect("degree-1 field"),
        support: Some((center, radius)),
    }
}

/// Both sides of `dH(A + tB)/dt|₀ = (B, D_A*F_A − J)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Criticality {
    /// Central difference with step `t`.
    pub central: Complex64,
    /// Richardson extrapolation of central differences at `t` and `t/2`.
    pub richardson: Complex64,
    /// `(B, D_A*F_A − J)` by quadrature.
    pub inner: Complex64,
    /// `|richardson − inner|`.
    pub gap: f64,
    /// `‖B‖` in the Euclidean pairing.
    pub direction_norm: f64,
}

pub const CRITICALITY_STEP: f64 = 1e-4;

/// Differentiates `H` along `dir`. The finite difference integrates the
/// pointwise difference of Lagrangians, which vanishes off the support of
/// `B`; with a supported direction the box is fitted to the support.
pub fn directional_derivative(
    a: &Connection,
    dir: &Direction,
    j: Option<&FormField>,
    m: Metric,
    quad: &QuadratureSpec,
    kind: TraceKind,
) -> Result<Criticality> {
    let t = CRITICALITY_STEP;
    let q = dir.quadrature(quad);
    let b = &dir.connection;
    let [d_t, d_half, inner, bb] = q.integrate(|p| {
        if !dir.touches(p) {
            return Ok([ZERO; 4]);
        }
        let aj = a.jet(p, 2)?;
        let bj = b.jet(p, 1)?;
        let jv = j.map(|j| j.value(p)).transpose()?;
        let a1 = aj.truncate(1);
        let lag = |s: f64| -> Result<Complex64> {
            let (src, e) = lagrangian_parts(&a1.add(&bj.scale(c(s, 0.0)))?, jv.as_ref(), m, kind)?;
            Ok(src + e)
        };
        let central = |s: f64| -> Result<Complex64> { Ok((lag(s)? - lag(-s)?) / (2.0 * s)) };
        let f = curvature_jet(&aj, CurvatureMethod::Generic)?;
        let mut eq = covariant_costar_jet(&a1, &f, m)?.value();
        if let Some(jv) = &jv {
            eq = eq.sub(jv)?;
        }
        let bv = bj.value();
        Ok([
            central(t)?,
            central(t / 2.0)?,
            pointwise_inner(&bv, &eq, m, kind)?,
            pointwise_inner(&bv, &bv, Metric::Euclidean, kind)?,
        ])
    })?;
    let richardson = (d_half * 4.0 - d_t) / 3.0;
    Ok(Criticality {
        central: d_t,
        richardson,
        inner,
        gap: (richardson - inner).norm(),
        direction_norm: bb.norm().sqrt(),
    })
}

/// A radial profile `f` parameterized by values at knots in
/// `u = r/(r + μ)`, `r = |z|²`, joined by a monotone cubic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileParam {
    pub mu_hint: f64,
    /// Knots in `u`, strictly increasing from 0 to 1.
    pub knots: Vec<f64>,
    /// Values in `[0, 1]`; the value at `u = 0` is 0.
    pub values: Vec<f64>,
}

impl ProfileParam {
    pub fn new(mu_hint: f64, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if !(mu_hint.is_finite() && mu_hint > 0.0) {
            return Err(Error::InvalidInput(format!("mu_hint must be positive, got {mu_hint}")));
        }
        if knots.len() != values.len() || knots.len() < 5 {
            return Err(Error::InvalidInput(format!(
                "need matching knots and values with at least 5 knots, got {} and {}",
                knots.len(),
                values.len()
            )));
        }
        if knots[0] != 0.0 || *knots.last().unwrap() != 1.0 || knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "knots must increase strictly from 0 to 1".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("profile values must be finite".into()));
        }
        let mut values: Vec<f64> = values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        values[0] = 0.0;
        Ok(ProfileParam { mu_hint, knots, values })
    }

    /// Evenly spaced knots with `interior` interior knots and values `f(u)`.
    pub fn uniform(mu_hint: f64, interior: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let k = interior + 1;
        let knots: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
        let values = knots.iter().map(|&u| f(u)).collect();
        Self::new(mu_hint, knots, values)
    }

    /// The BPST profile `r/(r + μ)`, which is `u` itself.
    pub fn bpst(mu: f64, interior: usize) -> Result<Self> {
        Self::uniform(mu, interior, |u| u)
    }

    /// Knot positions in `r`; the last is infinite.
    /// The BPST profile with interior knot values scaled alternately by
    /// `1 + amplitude` and `1 − amplitude`.
    pub fn perturbed_bpst(mu: f64, interior: usize, amplitude: f64) -> Result<Self> {
        let base = Self::bpst(mu, interior)?;
        let inner = base.interior();
        let values = base
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| match (inner.contains(&k), k % 2) {
                (false, _) => *v,
                (true, 0) => v * (1.0 + amplitude),
                (true, _) => v * (1.0 - amplitude),
            })
            .collect();
        Self::new(mu, base.knots.clone(), values)
    }

    pub fn radii(&self) -> Vec<f64> {
        self.knots
            .iter()
            .map(|&u| if u < 1.0 { self.mu_hint * u / (1.0 - u) } else { f64::INFINITY })
            .collect()
    }

    pub fn interior(&self) -> std::ops::Range<usize> {
        1..self.knots.len() - 1
    }

    /// Fritsch–Carlson slopes at the knots.
    fn slopes(&self) -> Vec<f64> {
        let (x, y) = (&self.knots, &self.values);
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
            let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if s.signum() != d0.signum() {
                0.0
            } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
                3.0 * d0
            } else {
                s
            }
        };
        d[0] = end(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        d
    }

    /// Taylor coefficients `P, P′, P″/2, P‴/6` of the interpolant at `u`.
    pub fn taylor_u(&self, u: f64) -> [f64; 4] {
        let d = self.slopes();
        let (x, y) = (&self.knots, &self.values);
        let u = u.clamp(0.0, 1.0);
        let i = x.partition_point(|&k| k <= u).clamp(1, x.len() - 1) - 1;
        let h = x[i + 1] - x[i];
        // cubic in s = u − x_i
        let delta = (y[i + 1] - y[i]) / h;
        let c2 = (3.0 * delta - 2.0 * d[i] - d[i + 1]) / h;
        let c3 = (d[i] + d[i + 1] - 2.0 * delta) / (h * h);
        let s = u - x[i];
        [
            y[i] + s * (d[i] + s * (c2 + s * c3)),
            d[i] + s * (2.0 * c2 + 3.0 * s * c3),
            c2 + 3.0 * s * c3,
            c3,
        ]
    }

    fn u_of(&self, r: f64) -> f64 {
        r / (r + self.mu_hint)
    }

    /// Max of the profile-ODE residual over `|z|` log-spaced in `[0.1, 10]`.
    pub fn ode_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in 0..=60 {
            let rho = 10f64.powf(-1.0 + 2.0 * k as f64 / 60.0);
            worst = worst.max(profile_ode_residual(self, rho * rho)?);
        }
        Ok(worst)
    }
}

impl RadialProfile for ProfileParam {
    fn value(&self, r: f64) -> f64 {
        self.taylor_u(self.u_of(r))[0]
    }

    fn derivative(&self, r: f64) -> f64 {
        let mu = self.mu_hint;
        self.taylor_u(self.u_of(r))[1] * mu / ((r + mu) * (r + mu))
    }

    fn jet(&self, r: &ScalarJet) -> Result<ScalarJet> {
        let k = r.order();
        let shifted = r.add(&ScalarJet::constant(c(self.mu_hint, 0.0), k));
        let u = r.mul(&shifted.recip()?);
        let t = self.taylor_u(u.value().re);
        let mut taylor: Vec<Complex64> = t.iter().map(|v| c(*v, 0.0)).collect();
        taylor.resize(k.max(3) + 1, ZERO);
        Ok(u.compose(&taylor))
    }
}

/// `A_f = f(|z|²) γ⁻¹dγ`.
pub fn profile_connection(profile: &ProfileParam) -> Result<Connection> {
    radial_connection(Arc::new(profile.clone()))
}

const PROFILE_NODES: usize = 12;
/// Unit direction along which the radial density is sampled.
const PROFILE_DIRECTION: [f64; 4] = [0.5, 0.5, 0.5, 0.5];

/// Vacuum `H(A_f)` under the Euclidean metric. The density depends on `|x|`
/// only, so `H = 2π² ∫ ρ³ L(ρ) dρ`, integrated in `u` piecewise over the
/// knot intervals.
pub fn profile_functional(profile: &ProfileParam, kind: TraceKind) -> Result<Complex64> {
    let a = profile_connection(profile)?;
    let mu = profile.mu_hint;
    let (x, w) = gauss_legendre(PROFILE_NODES);
    let mut total = ZERO;
    for seg in profile.knots.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        for (xi, wi) in x.iter().zip(&w) {
            let u = lo + (hi - lo) * (xi + 1.0) / 2.0;
            let r = mu * u / (1.0 - u);
            let rho = r.sqrt();
            let p = Point::from_real(PROFILE_DIRECTION.map(|d| d * rho));
            let l = lagrangian(&a, None, Metric::Euclidean, &p, kind)?;
            // dρ = dr/(2ρ), dr/du = μ/(1 − u)²
            let jac = 2.0 * std::f64::consts::PI.powi(2) * rho.powi(3) / (2.0 * rho) * mu / ((1.0 - u) * (1.0 - u));
            total += l * (jac * wi * (hi - lo) / 2.0);
        }
    }
    check_divergence(total)?;
    Ok(total)
}

/// Coordinate-descent settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_sweeps: usize,
    pub max_backtracks: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            initial_step: 0.05,
            min_step: 1e-7,
            max_sweeps: 400,
            max_backtracks: 30,
        }
    }
}

/// One accepted step (iteration 0 is the initial profile).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub h: f64,
    pub ode_residual: f64,
    pub step_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    pub profile: ProfileParam,
    pub history: Vec<HistoryRow>,
    pub initial_residual: f64,
    pub final_residual: f64,
    /// Set when a sweep ends with every coordinate out of backtracks
    /// before the step shrank below `min_step`.
    pub stalled: bool,
    pub max_imag: f64,
}

impl OptimizationResult {
    /// Whether `H` never increased across accepted steps.
    pub fn monotone(&self) -> bool {
        self.history.windows(2).all(|w| w[1].h <= w[0].h)
    }

    pub fn history_csv(&self) -> String {
        let mut out = String::from("iteration,h,ode_residual,step_norm\n");
        for r in &self.history {
            out.push_str(&format!("{},{:.15e},{:.6e},{:.6e}\n", r.iteration, r.h, r.ode_residual, r.step_norm));
        }
        out
    }
}

/// Minimizes `Re H(A_f)` over the interior knot values by coordinate descent
/// with step halving.
pub fn optimize_profile(init: &ProfileParam, config: &OptimizerConfig, kind: TraceKind) -> Result<OptimizationResult> {
    if init.knots.len() < 5 {
        return Err(Error::InvalidInput("profile optimization needs at least 5 knots".into()));
    }
    let eval = |p: &ProfileParam| -> Result<Complex64> { profile_functional(p, kind) };
    let mut current = init.clone();
    let mut h = eval(&current)?;
    let mut max_imag = h.im.abs();
    let initial_residual = current.ode_residual()?;
    let mut history = vec![HistoryRow {
        iteration: 0,
        h: h.re,
        ode_residual: initial_residual,
        step_norm: 0.0,
    }];
    let mut steps = vec![config.initial_step; current.knots.len()];
    let mut stalled = false;
    for _ in 0..config.max_sweeps {
        let mut improved = false;
        let mut exhausted = true;
        for i in current.interior() {
            let mut tries = 0;
            while steps[i] >= config.min_step && tries < config.max_backtracks {
                let mut accepted = None;
                for sign in [1.0, -1.0] {
                    let mut values = current.values.clone();
                    values[i] = (values[i] + sign * steps[i]).clamp(0.0, 1.0);
                    if values[i] == current.values[i] {
                        continue;
                    }
                    let cand = ProfileParam::new(current.mu_hint, current.knots.clone(), values)?;
                    let hc = eval(&cand)?;
                    max_imag = max_imag.max(hc.im.abs());
                    if hc.re < h.re {
                        accepted = Some((cand, hc));
                        break;
                    }
                }
                match accepted {
                    Some((cand, hc)) => {
                        let step = (cand.values[i] - current.values[i]).abs();
                        current = cand;
                        h = hc;
                        history.push(HistoryRow {
                            iteration: history.len(),
                            h: h.re,
                            ode_residual: current.ode_residual()?,
                            step_norm: step,
                        });
                        improved = true;
                        exhausted = false;
                        break;
                    }
                    None => {
                        steps[i] /= 2.0;
                        tries += 1;
                    }
                }
            }
            if steps[i] >= config.min_step && tries < config.max_backtracks {
                exhausted = false;
            }
        }
        if steps.iter().skip(1).take(current.knots.len() - 2).all(|&s| s < config.min_step) {
            break;
        }
        if !improved && exhausted {
            stalled = true;
            break;
        }
    }
    let final_residual = current.ode_residual()?;
    Ok(OptimizationResult {
        profile: current,
        history,
        initial_residual,
        final_residual,
        stalled,
        max_imag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{commutator, pauli, ONE};
    use crate::forms::PolyCoefficient;
    use crate::hodge::{classify_duality, DualityClass};
    use crate::instantons::{build_bpst, BpstParams};
    use crate::support::localized;
    use crate::yang_mills::sample_shell;

    fn random_form(seed: u64, n: usize) -> FormValue {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..6)
            .map(|_| CMatrix::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        Form::from_coeffs(2, coeffs).unwrap()
    }

    #[test]
    fn eb_round_trip() {
        for seed in 0..10 {
            let f = random_form(seed, 2);
            let back = extract_eb(&f).unwrap().to_curvature();
            assert!(back.sub(&f).unwrap().norm() < 1e-13);
        }
    }

    #[test]
    fn duality_in_terms_of_e_and_b() {
        for seed in 0..5 {
            let f = random_form(seed, 2);
            for m in Metric::ALL {
                let lam = m.self_dual_eigenvalue();
                let star = crate::hodge::star(&f, m);
                let sd = f.add(&star.scale(ONE / lam)).unwrap();
                let asd = f.sub(&star.scale(ONE / lam)).unwrap();
                let (es, ea) = (extract_eb(&sd).unwrap(), extract_eb(&asd).unwrap());
                for k in 0..3 {
                    // B = λE on SD forms, B = −λE on ASD forms
                    assert!((&es.b[k] - &es.e[k].scale(lam)).frobenius_norm() < 1e-12, "{m:?}");
                    assert!((&ea.b[k] + &ea.e[k].scale(lam)).frobenius_norm() < 1e-12, "{m:?}");
                }
            }
        }
    }

    #[test]
    fn bpst_fields() {
        let b = build_bpst(BpstParams::new(1.5).unwrap()).unwrap();
        let s = pauli();
        for p in sample_shell(3, 10, 0.1, 10.0) {
            let fp = fields_at(&b.connection, &p).unwrap();
            let pr = b.p(&p);
            for k in 0..3 {
                // E_j = 2ipσ_j, B_j = −2ipσ_j
                assert!((&fp.e[k] - &s[k].scale(c(0.0, 2.0 * pr))).frobenius_norm() < 1e-10 * (1.0 + pr));
                assert!((&fp.b[k] + &s[k].scale(c(0.0, 2.0 * pr))).frobenius_norm() < 1e-10 * (1.0 + pr));
            }
            let ip = eb_inner(&fp, TraceKind::Matrix);
            assert!((ip - c(-24.0 * pr * pr, 0.0)).norm() < 1e-10 * pr * pr);
            let (eh, bh) = hermitian_field_check(&fp, 1e-12);
            assert!(!eh && !bh);
        }
        let zero = FieldPair {
            e: std::array::from_fn(|_| CMatrix::zeros(2)),
            b: std::array::from_fn(|_| CMatrix::zeros(2)),
        };
        assert_eq!(hermitian_field_check(&zero, 1e-12), (true, true));
    }

    #[test]
    fn asd_inner_matches_commutator_formula() {
        // constant connection: F is −[A1,A2*]dz1dz̄2 − [A2,A1*]dz2dz̄1 when the
        // remaining brackets vanish; compare against −4 Tr([A1,A2*][A2,A1*])
        let a1 = CMatrix::diag(&[c(1.0, 0.5), c(-0.3, 2.0)]);
        let a2 = CMatrix::from_rows(&[vec![ZERO, c(1.0, 0.0)], vec![ZERO, ZERO]]).unwrap();
        let k12 = commutator(&a1, &a2.adjoint()).unwrap().scale(c(-1.0, 0.0));
        let k21 = commutator(&a2, &a1.adjoint()).unwrap().scale(c(-1.0, 0.0));
        let mut coeffs = vec![CMatrix::zeros(2); 6];
        coeffs[comp::F12B] = k12.clone();
        coeffs[comp::F21B] = k21.clone();
        let f = Form::from_coeffs(2, coeffs).unwrap();
        assert_eq!(classify_duality(&f, Metric::Euclidean, 1e-12).unwrap(), DualityClass::AntiSelfDual);
        let ip = eb_inner(&extract_eb(&f).unwrap(), TraceKind::Matrix);
        let expected = (&k12 * &k21).trace(TraceKind::Matrix) * -4.0;
        assert!((ip - expected).norm() < 1e-12);
        assert!(ip.re < 0.0);
    }

    #[test]
    fn lagrangian_of_zero_and_scalar_case() {
        let p = Point::new(c(0.3, 0.1), c(-0.2, 0.4));
        assert_eq!(lagrangian(&Connection::zero(2), None, Metric::Euclidean, &p, TraceKind::Matrix).unwrap(), ZERO);
        // n = 1: A = z̄1 dz2, F = dz̄1∧dz2 = −dz2∧dz̄1, ½⟨F,F⟩ = ½·|−1|²·⟨dz2dz̄1, dz2dz̄1⟩ = ½·4
        let one = CMatrix::identity(1);
        let a = Connection::from_poly([
            PolyCoefficient::zero(1),
            PolyCoefficient::monomial([0, 0, 1, 0], one),
            PolyCoefficient::zero(1),
            PolyCoefficient::zero(1),
        ])
        .unwrap();
        let l = lagrangian(&a, None, Metric::Euclidean, &p, TraceKind::Matrix).unwrap();
        assert!((l - c(2.0, 0.0)).norm() < 1e-14, "{l}");
    }

    #[test]
    fn vacuum_functional_is_nonnegative_and_splits() {
        let dir = bump_direction(5, [0.0; 4], 1.0, 2);
        let q = dir.quadrature(&QuadratureSpec::new(1.0, 10));
        let v = functional(&dir.connection, None, Metric::Euclidean, &q, TraceKind::Matrix).unwrap();
        assert!(v.total.re > 0.0 && v.total.im.abs() < 1e-10 * v.total.re);
        assert!(v.split_gap() < 1e-10);
        let z = functional(&Connection::zero(2), None, Metric::Euclidean, &q, TraceKind::Matrix).unwrap();
        assert_eq!(z.total, ZERO);
    }

    #[test]
    fn derivative_at_zero_vanishes() {
        let dir = bump_direction(1, [0.5, 0.0, 0.0, 0.0], 1.0, 2);
        let q = QuadratureSpec::new(1.0, 8);
        let d = directional_derivative(&Connection::zero(2), &dir, None, Metric::Euclidean, &q, TraceKind::Matrix)
            .unwrap();
        assert!(d.richardson.norm() < 1e-12 && d.inner.norm() < 1e-12);
    }

    fn poly_times_bump(seed: u64, center: [f64; 4], radius: f64) -> Connection {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || CMatrix::from_fn(2, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let (c1, c2) = (draw(), draw());
        // η = z1 C1 dz1 + z̄2 C2 dz2, A = η − η*
        let eta1 = PolyCoefficient::monomial([1, 0, 0, 0], c1);
        let eta2 = PolyCoefficient::monomial([0, 0, 0, 1], c2);
        let a = Connection::from_poly([
            eta1.clone(),
            eta2.clone(),
            eta1.adjoint().scale(c(-1.0, 0.0)),
            eta2.adjoint().scale(c(-1.0, 0.0)),
        ])
        .unwrap();
        Connection::new(localized(a.field(), center, radius).unwrap()).unwrap()
    }

    #[test]
    fn finite_difference_matches_inner_product() {
        let a = poly_times_bump(9, [0.2, -0.1, 0.0, 0.3], 3.0);
        let dir = bump_direction(4, [0.4, 0.0, 0.1, -0.2], 1.0, 2);
        for m in Metric::ALL {
            let d = directional_derivative(&a, &dir, None, m, &QuadratureSpec::new(1.0, 24), TraceKind::Matrix).unwrap();
            let bound = 1e-3 * d.direction_norm;
            assert!(d.gap < bound, "{m:?} {d:?}");
            assert!(d.inner.norm() > 10.0 * bound, "{m:?} {d:?}");
        }
    }

    #[test]
    fn bpst_profile_is_reproduced_exactly() {
        let prof = ProfileParam::bpst(1.0, 6).unwrap();
        let bp = BpstParams::new(1.0).unwrap();
        for r in [0.01, 0.3, 2.0, 50.0] {
            assert!((prof.value(r) - bp.f(r)).abs() < 1e-14);
            assert!((RadialProfile::derivative(&prof, r) - RadialProfile::derivative(&bp, r)).abs() < 1e-13);
        }
        assert!(prof.ode_residual().unwrap() < 1e-12);
        let a = profile_connection(&prof).unwrap();
        let b = build_bpst(bp).unwrap();
        for p in sample_shell(1, 5, 0.2, 5.0) {
            let gap = a.jet(&p, 1).unwrap().sub(&b.connection.jet(&p, 1).unwrap()).unwrap().norm();
            assert!(gap < 1e-12);
        }
    }

    #[test]
    fn profile_functional_is_rotation_invariant_density() {
        let b = build_bpst(BpstParams::new(1.0).unwrap()).unwrap();
        let rho: f64 = 0.8;
        let dirs = [[1.0, 0.0, 0.0, 0.0], [0.0, 0.6, 0.0, 0.8], [0.5, 0.5, 0.5, 0.5]];
        let vals: Vec<Complex64> = dirs
            .iter()
            .map(|d| {
                let p = Point::from_real(d.map(|x| x * rho));
                lagrangian(&b.connection, None, Metric::Euclidean, &p, TraceKind::Matrix).unwrap()
            })
            .collect();
        for v in &vals {
            assert!((v - vals[0]).norm() < 1e-12);
        }
        let h = profile_functional(&ProfileParam::bpst(1.0, 6).unwrap(), TraceKind::Matrix).unwrap();
        assert!(h.re > 0.0 && h.im.abs() < 1e-10);
    }

    #[test]
    fn zero_profile_stays() {
        let prof = ProfileParam::uniform(1.0, 4, |_| 0.0).unwrap();
        let res = optimize_profile(&prof, &OptimizerConfig::default(), TraceKind::Matrix).unwrap();
        assert!(res.profile.values.iter().all(|&v| v == 0.0));
        assert_eq!(res.history.len(), 1);
    }

    #[test]
    fn profile_validation() {
        assert!(ProfileParam::new(1.0, vec![0.0, 0.5, 1.0], vec![0.0; 3]).is_err());
        assert!(ProfileParam::new(-1.0, vec![0.0, 0.2, 0.4, 0.6, 1.0], vec![0.0; 5]).is_err());
        let p = ProfileParam::new(1.0, vec![0.0, 0.2, 0.4, 0.6, 1.0], vec![0.3, 1.4, -0.2, 0.5, 1.0]).unwrap();
        assert_eq!(p.values, vec![0.0, 1.0, 0.0, 0.5, 1.0]);
        assert!(p.radii()[4].is_infinite());
    }
}

