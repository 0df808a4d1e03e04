//! Special connection families: skew-Hermitian forms built from a (1,0)-form
//! η, holomorphic normal families, constant solutions, a stationary Minkowski
//! self-dual family, the Dirac monopole, the BPST instanton, and gauge
//! normalization of holomorphic normal forms.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{bracket, pauli, CMatrix, DEFAULT_NORMAL_TOL, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::forms::{
    comp, DerivativeStrategy, Form, FormField, FormJet, FormValue, Point, PolyCoefficient, PolyTerm,
};
use crate::hodge::{classify_duality, DualityClass, Metric};
use crate::jet::{coefficient_count, coordinates, monomial, monomial_index, Coeff, Jet, MatJet, ScalarJet};
use crate::quadrature::gauss_legendre;
use crate::yang_mills::{curvature_jet, Connection, CurvatureMethod, GaugeMap};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn scalar_form(j: MatJet) -> Result<FormJet> {
    Form::from_coeffs(0, vec![j])
}

fn component(f: &FormField, p: &Point, order: usize) -> Result<MatJet> {
    Ok(f.jet(p, order)?.into_coeffs().remove(0))
}

/// `η = A1 dz1 + A2 dz2` with flags describing its coefficient functions.
#[derive(Clone, Debug)]
pub struct EtaForm {
    pub a1: FormField,
    pub a2: FormField,
    pub holomorphic: bool,
    pub normal: bool,
}

impl EtaForm {
    pub fn new(a1: FormField, a2: FormField, holomorphic: bool, normal: bool) -> Result<Self> {
        for f in [&a1, &a2] {
            if f.degree() != 0 {
                return Err(Error::DegreeMismatch {
                    expected: 0,
                    found: f.degree(),
                });
            }
        }
        if a1.dim() != a2.dim() {
            return Err(Error::DimensionMismatch {
                expected: a1.dim(),
                found: a2.dim(),
            });
        }
        Ok(EtaForm {
            a1,
            a2,
            holomorphic,
            normal,
        })
    }

    pub fn from_poly(a1: PolyCoefficient, a2: PolyCoefficient, holomorphic: bool, normal: bool) -> Result<Self> {
        Self::new(
            FormField::from_poly(0, vec![a1])?,
            FormField::from_poly(0, vec![a2])?,
            holomorphic,
            normal,
        )
    }

    /// Constant coefficients; the normal flag is read off the matrices.
    pub fn constant(a1: CMatrix, a2: CMatrix) -> Result<Self> {
        let normal = a1.is_normal(DEFAULT_NORMAL_TOL) && a2.is_normal(DEFAULT_NORMAL_TOL);
        Self::from_poly(PolyCoefficient::constant(a1), PolyCoefficient::constant(a2), true, normal)
    }

    pub fn dim(&self) -> usize {
        self.a1.dim()
    }

    /// The 1-form `A1 dz1 + A2 dz2`.
    pub fn form(&self) -> FormField {
        let zero = FormField::zero(0, self.dim());
        FormField::from_components(1, vec![self.a1.clone(), self.a2.clone(), zero.clone(), zero])
            .expect("components share degree and dimension")
    }

    /// Checks the declared flags at `points`.
    pub fn verify_flags(&self, points: &[Point], tol: f64) -> Result<()> {
        for p in points {
            self.verify_flags_at(p, tol)?;
        }
        Ok(())
    }

    fn verify_flags_at(&self, p: &Point, tol: f64) -> Result<()> {
        for (name, f) in [("A1", &self.a1), ("A2", &self.a2)] {
            if self.holomorphic {
                let j = component(f, p, 1)?;
                let scale = 1.0 + j.value().frobenius_norm();
                for var in [2, 3] {
                    let d = j.derivative(var).value().frobenius_norm();
                    if d > tol * scale {
                        return Err(Error::InvalidInput(format!(
                            "{name} is flagged holomorphic but its z̄ derivative is {d:.3e} at {p}"
                        )));
                    }
                }
            }
            if self.normal {
                let v = f.value(p)?.into_coeffs().remove(0);
                let gap = bracket(&v, &v.adjoint()).frobenius_norm();
                if gap > tol * (1.0 + v.frobenius_norm().powi(2)) {
                    return Err(Error::InvalidInput(format!(
                        "{name} is flagged normal but ‖[{name}, {name}*]‖ = {gap:.3e} at {p}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtaKind {
    /// `η − η*`
    #[default]
    Skew,
    /// `η + η*`
    Hermitian,
}

pub fn from_eta(eta: &EtaForm, kind: EtaKind) -> Connection {
    let form = eta.form();
    let field = form.unary(1, 0, move |_, j| {
        let adj = j.adjoint();
        match kind {
            EtaKind::Skew => j.sub(&adj),
            EtaKind::Hermitian => j.add(&adj),
        }
    });
    Connection::new(field).expect("degree one")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaurerCartanReport {
    /// `‖dA + A∧A‖`
    pub total: f64,
    /// Norm of the (1,1) part; for a (1,0)-form this is `‖∂̄η‖`.
    pub delbar: f64,
    /// `‖∂1A2 − ∂2A1 + [A1, A2]‖`
    pub holomorphic_part: f64,
}

/// Pointwise Maurer-Cartan residual of a 1-form.
pub fn maurer_cartan_residual(form: &FormField, p: &Point) -> Result<MaurerCartanReport> {
    if form.degree() != 1 {
        return Err(Error::DegreeMismatch {
            expected: 1,
            found: form.degree(),
        });
    }
    let f = curvature_jet(&form.jet(p, 1)?, CurvatureMethod::Generic)?.value();
    let cs = f.coeffs();
    let norm_of = |idx: &[usize]| idx.iter().map(|&i| cs[i].frobenius_norm()).sum::<f64>();
    Ok(MaurerCartanReport {
        total: f.norm(),
        delbar: norm_of(&[comp::F11B, comp::F12B, comp::F21B, comp::F22B]),
        holomorphic_part: norm_of(&[comp::F12]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DualityTarget {
    #[serde(rename = "SD")]
    SelfDual,
    #[serde(rename = "ASD")]
    AntiSelfDual,
}

impl DualityTarget {
    pub fn class(self) -> DualityClass {
        match self {
            DualityTarget::SelfDual => DualityClass::SelfDual,
            DualityTarget::AntiSelfDual => DualityClass::AntiSelfDual,
        }
    }
}

/// Pointwise outcome of the holomorphic normal duality criterion.
#[derive(Debug, Clone)]
pub struct NormalFamilyReport {
    /// Residual of the metric/target condition on `A1, A2`.
    pub condition_residual: f64,
    /// Curvature predicted by the criterion (meaningful when the residual vanishes).
    pub predicted: FormValue,
    /// `dA + A∧A` for `A = η − η*`.
    pub curvature: FormValue,
    /// `‖predicted − curvature‖`
    pub prediction_gap: f64,
}

/// Duality criterion for `A = η − η*` with holomorphic normal `η`:
/// Euclidean SD ⇔ `[A1, A2] = 0`; Euclidean ASD ⇔ `F12 = 0`;
/// Minkowski SD ⇔ `[A1* − iA1, A2] = i(∂1A2 − ∂2A1)`;
/// Minkowski ASD ⇔ `[A1* + iA1, A2] = −i(∂1A2 − ∂2A1)`.
pub fn normal_family_duality(
    eta: &EtaForm,
    m: Metric,
    target: DualityTarget,
    p: &Point,
) -> Result<NormalFamilyReport> {
    if !(eta.holomorphic && eta.normal) {
        return Err(Error::InvalidInput("criterion needs a holomorphic normal η".into()));
    }
    eta.verify_flags_at(p, 1e-8)?;
    let j1 = component(&eta.a1, p, 1)?;
    let j2 = component(&eta.a2, p, 1)?;
    let (a1, a2) = (j1.value().clone(), j2.value().clone());
    let (a1s, a2s) = (a1.adjoint(), a2.adjoint());
    let curl = j2.derivative(0).value() - j1.derivative(1).value();
    let n = eta.dim();
    let mut predicted = FormValue::zeros(2, n);
    let condition_residual;
    {
        let pc = predicted.coeffs_mut();
        match (m, target) {
            (Metric::Euclidean, DualityTarget::SelfDual) => {
                condition_residual = bracket(&a1, &a2).frobenius_norm();
                pc[comp::F12] = curl.clone();
                let dbar = |f: &MatJet, var| f.derivative(var).value().adjoint();
                // −(∂̄1A2* − ∂̄2A1*) where ∂̄_k(A*) = (∂_k A)*
                pc[comp::F1B2B] = &dbar(&j1, 1) - &dbar(&j2, 0);
            }
            (Metric::Euclidean, DualityTarget::AntiSelfDual) => {
                condition_residual = (&curl + &bracket(&a1, &a2)).frobenius_norm();
                pc[comp::F12B] = -&bracket(&a1, &a2s);
                pc[comp::F21B] = -&bracket(&a2, &a1s);
            }
            (Metric::Minkowski, target) => {
                let sign = if target == DualityTarget::SelfDual { 1.0 } else { -1.0 };
                let lhs = bracket(&(&a1s - &a1.scale(I * sign)), &a2);
                condition_residual = (&lhs - &curl.scale(I * sign)).frobenius_norm();
                // ω = ±[A2, A1*](i dz1∧dz2 ∓ dz2∧dz̄1), F = ω − ω*
                let k = bracket(&a2, &a1s).scale_re(sign);
                let mut omega = FormValue::zeros(2, n);
                omega.coeffs_mut()[comp::F12] = k.scale(I);
                omega.coeffs_mut()[comp::F21B] = k.scale_re(-sign);
                let f = omega.sub(&omega.adjoint())?;
                pc.clone_from_slice(f.coeffs());
            }
        }
    }
    let a = from_eta(eta, EtaKind::Skew);
    let curvature = curvature_jet(&a.jet(p, 1)?, CurvatureMethod::Generic)?.value();
    let prediction_gap = predicted.sub(&curvature)?.norm();
    Ok(NormalFamilyReport {
        condition_residual,
        predicted,
        curvature,
        prediction_gap,
    })
}

/// `‖[A1* ∓ iA1, A2] ∓ i(∂1A2 − ∂2A1)‖` for any `η`; the upper sign is
/// the self-dual target. Normality and holomorphy are not checked.
pub fn minkowski_condition_residual(eta: &EtaForm, target: DualityTarget, p: &Point) -> Result<f64> {
    let j1 = component(&eta.a1, p, 1)?;
    let j2 = component(&eta.a2, p, 1)?;
    let (a1, a2) = (j1.value(), j2.value());
    let curl = j2.derivative(0).value() - j1.derivative(1).value();
    let sign = if target == DualityTarget::SelfDual { 1.0 } else { -1.0 };
    let lhs = bracket(&(&a1.adjoint() - &a1.scale(I * sign)), a2);
    Ok((&lhs - &curl.scale(I * sign)).frobenius_norm())
}

/// Which constant-coefficient duality conditions hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantReport {
    /// `[A1, A2*] = 0` and `[A1, A1*] = [A2, A2*]`
    pub euclidean_sd: bool,
    /// `[A1, A2] = 0` and `[A1, A1*] + [A2, A2*] = 0`
    pub euclidean_asd: bool,
    /// `A1, A2` normal and `[A1* − iA1, A2] = 0`
    pub minkowski_sd: bool,
    /// `A1, A2` normal and `[A1* + iA1, A2] = 0`
    pub minkowski_asd: bool,
    pub classification: DualityClass,
    /// The classification of `F` under the requested metric agrees with the conditions.
    pub consistent: bool,
}

pub fn build_constant(a1: &CMatrix, a2: &CMatrix, m: Metric, tol: f64) -> Result<(Connection, ConstantReport)> {
    if a1.dim() != a2.dim() {
        return Err(Error::DimensionMismatch {
            expected: a1.dim(),
            found: a2.dim(),
        });
    }
    let eta = EtaForm::constant(a1.clone(), a2.clone())?;
    let a = from_eta(&eta, EtaKind::Skew);
    let (a1s, a2s) = (a1.adjoint(), a2.adjoint());
    let small = |x: CMatrix| x.frobenius_norm() <= tol;
    let (n1, n2) = (bracket(a1, &a1s), bracket(a2, &a2s));
    let normal = small(n1.clone()) && small(n2.clone());
    let euclidean_sd = small(bracket(a1, &a2s)) && small(&n1 - &n2);
    let euclidean_asd = small(bracket(a1, a2)) && small(&n1 + &n2);
    let minkowski_sd = normal && small(bracket(&(&a1s - &a1.scale(I)), a2));
    let minkowski_asd = normal && small(bracket(&(&a1s + &a1.scale(I)), a2));
    let f = crate::yang_mills::curvature(&a, CurvatureMethod::Generic).value(&Point::origin())?;
    let classification = classify_duality(&f, m, tol)?;
    let (sd, asd) = match m {
        Metric::Euclidean => (euclidean_sd, euclidean_asd),
        Metric::Minkowski => (minkowski_sd, minkowski_asd),
    };
    let consistent = match classification {
        DualityClass::Zero => sd && asd,
        DualityClass::SelfDual => sd && !asd,
        DualityClass::AntiSelfDual => asd && !sd,
        DualityClass::Mixed => !sd && !asd,
    };
    Ok((
        a,
        ConstantReport {
            euclidean_sd,
            euclidean_asd,
            minkowski_sd,
            minkowski_asd,
            classification,
            consistent,
        },
    ))
}

/// `U = (1/√2)[[1, 1], [i, −i]]`
pub fn stationary_unitary() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_rows(&[vec![c(s, 0.), c(s, 0.)], vec![c(0., s), c(0., -s)]]).unwrap()
}

fn scalar_poly_times(h: &PolyCoefficient, m: &CMatrix) -> Result<PolyCoefficient> {
    if h.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: h.dim(),
        });
    }
    PolyCoefficient::new(
        h.terms()
            .iter()
            .map(|t| PolyTerm {
                powers: t.powers,
                matrix: m.scale(t.matrix[(0, 0)]),
            })
            .collect(),
    )
}

/// Stationary Minkowski self-dual family on `M_2(ℂ)` built from a scalar
/// holomorphic polynomial `h`:
/// `A1 = diag(h, h + 1 − i)`, `A2 = U*·diag(H + cos z2, H + i sin z2)·U`
/// with `H(z1, z2) = ∫_0^{z1} ∂2h(ξ, z2) dξ`.
pub fn build_stationary_sd(h: &PolyCoefficient) -> Result<(EtaForm, Connection)> {
    if !h.is_holomorphic() {
        return Err(Error::InvalidInput("h must be holomorphic".into()));
    }
    let id = CMatrix::identity(2);
    let a1 = scalar_poly_times(h, &id)?.add(&PolyCoefficient::constant(CMatrix::diag(&[ZERO, c(1., -1.)])))?;
    let big_h = h
        .derivative(crate::forms::Wirtinger::D2)
        .antiderivative(crate::forms::Wirtinger::D1);
    let big_h = scalar_poly_times(&big_h, &id)?;
    let u = stationary_unitary();
    let (ud, u2) = (u.adjoint(), u.clone());
    let a2 = FormField::new(0, 2, DerivativeStrategy::ClosedForm, move |p, k| {
        let [_, z2, ..] = coordinates(p.z, k);
        let cos = z2.cos();
        let isin = z2.sin().scale(I);
        let d = cos
            .times_matrix(&CMatrix::diag(&[ONE, ZERO]))
            .add(&isin.times_matrix(&CMatrix::diag(&[ZERO, ONE])));
        let conj: Vec<CMatrix> = d.coeffs().iter().map(|m| &(&ud * m) * &u2).collect();
        let rotated = Jet::from_coeffs(k, conj);
        scalar_form(big_h.jet(p, k).add(&rotated))
    });
    let eta = EtaForm::new(FormField::from_poly(0, vec![a1])?, a2, true, true)?;
    let a = from_eta(&eta, EtaKind::Skew);
    Ok((eta, a))
}

/// Normality and the two monopole duality conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonopoleReport {
    pub b1_normal: bool,
    pub b2_normal: bool,
    /// `[B1,B1*] = [B2,B2*] = [B1,B2*] = 0` and `B1 + B1* = B2 + B2*`
    pub condition_sd: bool,
    /// `[B1,B1*] = [B2,B2*] = 0` and `B1 + B1* = −(B2 + B2*)`
    pub condition_asd: bool,
    /// Euclidean classification of `F` at a sample point away from the origin.
    pub classification: DualityClass,
    pub consistent: bool,
}

/// `A = η − η*` with `η = z̄1 B1 dz1 + z̄2 B2 dz2`.
pub fn build_dirac_monopole(b1: &CMatrix, b2: &CMatrix, tol: f64) -> Result<(Connection, MonopoleReport)> {
    if b1.dim() != b2.dim() {
        return Err(Error::DimensionMismatch {
            expected: b1.dim(),
            found: b2.dim(),
        });
    }
    let eta = EtaForm::from_poly(
        PolyCoefficient::monomial([0, 0, 1, 0], b1.clone()),
        PolyCoefficient::monomial([0, 0, 0, 1], b2.clone()),
        false,
        false,
    )?;
    let a = from_eta(&eta, EtaKind::Skew);
    let small = |x: &CMatrix| x.frobenius_norm() <= tol;
    let (b1s, b2s) = (b1.adjoint(), b2.adjoint());
    let b1_normal = small(&bracket(b1, &b1s));
    let b2_normal = small(&bracket(b2, &b2s));
    let (r1, r2) = (b1 + &b1s, b2 + &b2s);
    let condition_sd = b1_normal && b2_normal && small(&bracket(b1, &b2s)) && small(&(&r1 - &r2));
    let condition_asd = b1_normal && b2_normal && small(&(&r1 + &r2));
    let p = Point::new(c(0.7, -0.3), c(0.4, 0.9));
    let f = crate::yang_mills::curvature(&a, CurvatureMethod::Generic).value(&p)?;
    let classification = classify_duality(&f, Metric::Euclidean, tol)?;
    let consistent = match classification {
        DualityClass::Zero => true,
        DualityClass::SelfDual => condition_sd,
        DualityClass::AntiSelfDual => condition_asd,
        DualityClass::Mixed => !condition_sd && !condition_asd,
    };
    Ok((
        a,
        MonopoleReport {
            b1_normal,
            b2_normal,
            condition_sd,
            condition_asd,
            classification,
            consistent,
        },
    ))
}

/// The radial profile `f = r/(r + μ)` and `p = μ/(r + μ)²`, with `r = |z|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BpstParams {
    pub mu: f64,
}

impl BpstParams {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidInput(format!("mu must be positive, got {mu}")));
        }
        Ok(BpstParams { mu })
    }

    pub fn f(&self, r: f64) -> f64 {
        r / (r + self.mu)
    }

    pub fn p(&self, r: f64) -> f64 {
        self.mu / ((r + self.mu) * (r + self.mu))
    }
}

/// Radius-squared jet `z1z̄1 + z2z̄2`; errors at the origin.
fn radius_jet(p: &Point, order: usize) -> Result<ScalarJet> {
    if p.norm_sq() == 0.0 {
        return Err(Error::NotEvaluable {
            at: *p,
            reason: "the BPST fields are not evaluated at the origin".into(),
        });
    }
    let [z1, z2, zb1, zb2] = coordinates(p.z, order);
    Ok(z1.mul(&zb1).add(&z2.mul(&zb2)))
}

/// `γ = (x0 − iΣ x_j σ_j)/|x|` as a jet.
pub fn gamma_jet(p: &Point, order: usize) -> Result<MatJet> {
    let r = radius_jet(p, order)?;
    let [z1, z2, zb1, zb2] = coordinates(p.z, order);
    let half = c(0.5, 0.0);
    let x0 = z1.add(&zb1).scale(half);
    let x1 = z1.sub(&zb1).scale(c(0.0, -0.5));
    let x2 = z2.add(&zb2).scale(half);
    let x3 = z2.sub(&zb2).scale(c(0.0, -0.5));
    let [s1, s2, s3] = pauli();
    let m = x0
        .times_matrix(&CMatrix::identity(2))
        .sub(&x1.times_matrix(&s1.scale(I)))
        .sub(&x2.times_matrix(&s2.scale(I)))
        .sub(&x3.times_matrix(&s3.scale(I)));
    Ok(r.powf(-0.5).mul_matrix_jet(&m))
}

/// `η = (z̄1dz1 − z̄2dz2)σ1 − i(z̄2dz1 − z̄1dz2)σ2 + (z̄2dz1 + z̄1dz2)σ3`.
pub fn bpst_eta() -> FormField {
    let [s1, s2, s3] = pauli();
    let is2 = s2.scale(I);
    let dz1 = PolyCoefficient::new(vec![
        PolyTerm {
            powers: [0, 0, 1, 0],
            matrix: s1.clone(),
        },
        PolyTerm {
            powers: [0, 0, 0, 1],
            matrix: &s3 - &is2,
        },
    ])
    .unwrap();
    let dz2 = PolyCoefficient::new(vec![
        PolyTerm {
            powers: [0, 0, 0, 1],
            matrix: -&s1,
        },
        PolyTerm {
            powers: [0, 0, 1, 0],
            matrix: &is2 + &s3,
        },
    ])
    .unwrap();
    let zero = PolyCoefficient::zero(2);
    FormField::from_poly(1, vec![dz1, dz2, zero.clone(), zero]).unwrap()
}

/// The BPST connection `A = f·γ⁻¹dγ` with its ingredients.
#[derive(Clone, Debug)]
pub struct Bpst {
    pub params: BpstParams,
    pub connection: Connection,
    /// `γ` as a degree-0 field.
    pub gamma: FormField,
    /// `η` as a degree-1 field.
    pub eta: FormField,
}

pub fn build_bpst(params: BpstParams) -> Result<Bpst> {
    let params = BpstParams::new(params.mu)?;
    let gamma = FormField::new(0, 2, DerivativeStrategy::ClosedForm, |p, k| {
        scalar_form(gamma_jet(p, k)?)
    });
    let connection = radial_connection(Arc::new(params))?;
    Ok(Bpst {
        params,
        connection,
        gamma,
        eta: bpst_eta(),
    })
}

impl Bpst {
    pub fn f(&self, p: &Point) -> f64 {
        self.params.f(p.norm_sq())
    }

    pub fn p(&self, p: &Point) -> f64 {
        self.params.p(p.norm_sq())
    }

    /// `p(z)·dη` at `p`.
    pub fn p_d_eta(&self, pt: &Point) -> Result<FormValue> {
        let d_eta = self.eta.d(crate::forms::DPart::Full)?.value(pt)?;
        Ok(d_eta.scale(c(self.p(pt), 0.0)))
    }

    /// `−(η − η*)/(2|z|²)`, the closed form of `γ⁻¹dγ`.
    pub fn maurer_cartan_closed_form(&self, pt: &Point) -> Result<FormValue> {
        let e = self.eta.value(pt)?;
        Ok(e.sub(&e.adjoint())?.scale(c(-0.5 / pt.norm_sq(), 0.0)))
    }
}

/// A radial profile `f(r)` with `r = |z|²`.
pub trait RadialProfile: Send + Sync {
    fn value(&self, r: f64) -> f64;
    fn derivative(&self, r: f64) -> f64;
    /// `f` composed with a jet of `r`.
    fn jet(&self, r: &ScalarJet) -> Result<ScalarJet>;
}

/// `A = f(|z|²) γ⁻¹dγ` for a radial profile `f`.
pub fn radial_connection(profile: Arc<dyn RadialProfile>) -> Result<Connection> {
    let field = FormField::new(1, 2, DerivativeStrategy::ClosedForm, move |p, k| {
        let g = FormJet::from_coeffs(0, vec![gamma_jet(p, k + 1)?])?;
        let ginv = g.coeffs()[0].truncate(k).inverse().map_err(|_| Error::Singular { at: Some(*p) })?;
        let dg = g.d(crate::forms::DPart::Full)?;
        let f = profile.jet(&radius_jet(p, k)?)?;
        let coeffs = dg
            .coeffs()
            .iter()
            .map(|d| f.mul_matrix_jet(&ginv.mul(d)))
            .collect();
        Form::from_coeffs(1, coeffs)
    });
    Connection::new(field)
}

impl RadialProfile for BpstParams {
    fn value(&self, r: f64) -> f64 {
        self.f(r)
    }

    fn derivative(&self, r: f64) -> f64 {
        self.mu / ((r + self.mu) * (r + self.mu))
    }

    fn jet(&self, r: &ScalarJet) -> Result<ScalarJet> {
        let shifted = r.add(&ScalarJet::constant(c(self.mu, 0.0), r.order()));
        Ok(r.mul(&shifted.recip()?))
    }
}

/// A constant profile.
#[derive(Debug, Clone, Copy)]
pub struct ConstantProfile(pub f64);

impl RadialProfile for ConstantProfile {
    fn value(&self, _: f64) -> f64 {
        self.0
    }

    fn derivative(&self, _: f64) -> f64 {
        0.0
    }

    fn jet(&self, r: &ScalarJet) -> Result<ScalarJet> {
        Ok(ScalarJet::constant(c(self.0, 0.0), r.order()))
    }
}

/// `|λ f′ − (f² − f) λ′|` with `λ = 1/(2r)`.
pub fn profile_ode_residual(f: &dyn RadialProfile, r: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidInput(format!("profile residual needs r > 0, got {r}")));
    }
    let (v, dv) = (f.value(r), f.derivative(r));
    let lambda = 1.0 / (2.0 * r);
    let dlambda = -1.0 / (2.0 * r * r);
    Ok((lambda * dv - (v * v - v) * dlambda).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeCase {
    /// Minkowski SD: `A1* − iA1` commutes with `A2`.
    MinkowskiSd,
    /// Minkowski ASD: `A1* + iA1` commutes with `A2`.
    MinkowskiAsd,
    /// Euclidean ASD flat case: `η` closed with commuting values.
    EuclideanFlat,
}

/// A gauge map bringing `η − η*` to the normal form `η′ − η′*`.
#[derive(Clone, Debug)]
pub struct GaugeNormalization {
    pub case: NormalizeCase,
    pub reference: Point,
    pub gauge: GaugeMap,
    /// `A_g = g⁻¹Ag + g⁻¹dg`
    pub connection: Connection,
    /// Constant `A′1`.
    pub a1: CMatrix,
    /// `A′2(z) = A2(w1, z2)` (zero in the flat case).
    pub a2: FormField,
    /// The exact part `η̃` that was gauged away.
    pub removed: EtaForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalFormReport {
    pub unitarity_gap: f64,
    /// `‖A_g − (η′ − η′*)‖`
    pub form_gap: f64,
    /// `‖A′1* ∓ iA′1‖` (0 for the flat case, where `A′1 = 0`).
    pub a1_condition: f64,
    /// `‖∂1A′2‖ + ‖∂̄A′2‖`
    pub a2_dependence: f64,
    /// `‖[A′2, A′2*]‖`
    pub a2_normality: f64,
}

impl NormalFormReport {
    pub fn worst(&self) -> f64 {
        [
            self.unitarity_gap,
            self.form_gap,
            self.a1_condition,
            self.a2_dependence,
            self.a2_normality,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Restricts a jet in `(z1, z2, z̄1, z̄2)` to the slice `z1 = const`.
fn drop_first_variable(j: &MatJet) -> MatJet {
    let order = j.order();
    let coeffs = (0..coefficient_count(order))
        .map(|i| {
            let e = monomial(i);
            if e[0] > 0 || e[2] > 0 {
                j.coeffs()[i].zero_like()
            } else {
                j.coeffs()[i].clone()
            }
        })
        .collect();
    Jet::from_coeffs(order, coeffs)
}

/// Jet of the holomorphic antiderivative `h̃` with `dh̃ = Ã1dz1 + Ã2dz2`
/// and `h̃(w) = 0`. The value comes from a straight-line integral; higher
/// coefficients come from the jets of `Ã1, Ã2`.
fn antiderivative_jet(eta: &EtaForm, w: &Point, p: &Point, order: usize) -> Result<MatJet> {
    let (nodes, weights) = gauss_legendre(24);
    let dz = [p.z[0] - w.z[0], p.z[1] - w.z[1]];
    let mut value = CMatrix::zeros(eta.dim());
    for (t, wt) in nodes.iter().zip(&weights) {
        let s = 0.5 * (t + 1.0);
        let q = Point::new(w.z[0] + dz[0] * s, w.z[1] + dz[1] * s);
        let a1 = component(&eta.a1, &q, 0)?.value().clone();
        let a2 = component(&eta.a2, &q, 0)?.value().clone();
        value.add_scaled(&a1, dz[0] * (0.5 * wt));
        value.add_scaled(&a2, dz[1] * (0.5 * wt));
    }
    let mut coeffs = vec![value.zero_like(); coefficient_count(order)];
    coeffs[0] = value;
    if order > 0 {
        let j1 = component(&eta.a1, p, order - 1)?;
        let j2 = component(&eta.a2, p, order - 1)?;
        for (i, slot) in coeffs.iter_mut().enumerate().skip(1) {
            let e = monomial(i);
            if e[2] > 0 || e[3] > 0 {
                continue;
            }
            let (var, src) = if e[0] > 0 { (0, &j1) } else { (1, &j2) };
            let mut lower = e;
            lower[var] -= 1;
            let k = monomial_index(&lower).expect("lower monomial exists");
            *slot = src.coeffs()[k].scale_re(1.0 / e[var] as f64);
        }
    }
    Ok(Jet::from_coeffs(order, coeffs))
}

/// Splits `η` into a constant/slice part `η′ = A′1dz1 + A′2dz2` and an
/// exact commuting remainder `η̃ = dh̃`, then gauges the remainder away with
/// the unitary `g = exp(−h̃ + h̃*)`.
pub fn gauge_normalize(eta: &EtaForm, case: NormalizeCase, w: Point) -> Result<GaugeNormalization> {
    if !eta.holomorphic {
        return Err(Error::InvalidInput("gauge normalization needs a holomorphic η".into()));
    }
    let n = eta.dim();
    let a1w = eta.a1.value(&w)?.into_coeffs().remove(0);
    let q = match case {
        NormalizeCase::MinkowskiSd => (&a1w - &a1w.adjoint().scale(I)).scale_re(0.5),
        NormalizeCase::MinkowskiAsd => (&a1w + &a1w.adjoint().scale(I)).scale_re(0.5),
        NormalizeCase::EuclideanFlat => CMatrix::zeros(n),
    };
    let flat = case == NormalizeCase::EuclideanFlat;
    let a2_src = eta.a2.clone();
    let w1 = w.z[0];
    let a2_slice = FormField::new(0, n, DerivativeStrategy::ClosedForm, move |p, k| {
        if flat {
            return Ok(FormValue::zeros(0, a2_src.dim()).to_jet(k));
        }
        let j = component(&a2_src, &Point::new(w1, p.z[1]), k)?;
        scalar_form(drop_first_variable(&j))
    });
    let q_field = FormField::constant(Form::from_coeffs(0, vec![q.clone()])?);
    let removed = EtaForm::new(eta.a1.sub(&q_field)?, eta.a2.sub(&a2_slice)?, true, false)?;

    // η̃ must be closed: ∂2Ã1 = ∂1Ã2
    for p in crate::yang_mills::sample_polydisk(0x5eed, 8, 1.5) {
        let d1 = component(&removed.a1, &p, 1)?.derivative(1).value().clone();
        let d2 = component(&removed.a2, &p, 1)?.derivative(0).value().clone();
        let gap = (&d1 - &d2).frobenius_norm();
        if gap > 1e-8 * (1.0 + d1.frobenius_norm()) {
            return Err(Error::InvalidInput(format!(
                "the remainder η̃ is not closed (‖∂2Ã1 − ∂1Ã2‖ = {gap:.3e} at {p}); no exact antiderivative"
            )));
        }
    }

    let rem = removed.clone();
    let g_field = FormField::new(0, n, DerivativeStrategy::ClosedForm, move |p, k| {
        let h = antiderivative_jet(&rem, &w, p, k)?;
        scalar_form(h.adjoint().sub(&h).exp())
    });
    let gauge = GaugeMap::new(g_field, true)?;
    let connection = crate::yang_mills::gauge_transform(&from_eta(eta, EtaKind::Skew), &gauge)?;
    Ok(GaugeNormalization {
        case,
        reference: w,
        gauge,
        connection,
        a1: q,
        a2: a2_slice,
        removed,
    })
}

impl GaugeNormalization {
    /// The normal-form eta `A′1 dz1 + A′2 dz2`.
    pub fn normal_eta(&self) -> Result<EtaForm> {
        let a1 = FormField::constant(Form::from_coeffs(0, vec![self.a1.clone()])?);
        EtaForm::new(a1, self.a2.clone(), true, true)
    }

    pub fn verify(&self, points: &[Point]) -> Result<NormalFormReport> {
        let target = from_eta(&self.normal_eta()?, EtaKind::Skew);
        let a1_condition = match self.case {
            NormalizeCase::MinkowskiSd => (&self.a1.adjoint() - &self.a1.scale(I)).frobenius_norm(),
            NormalizeCase::MinkowskiAsd => (&self.a1.adjoint() + &self.a1.scale(I)).frobenius_norm(),
            NormalizeCase::EuclideanFlat => self.a1.frobenius_norm(),
        };
        let mut r = NormalFormReport {
            unitarity_gap: 0.0,
            form_gap: 0.0,
            a1_condition,
            a2_dependence: 0.0,
            a2_normality: 0.0,
        };
        for p in points {
            let g = self.gauge.field.value(p)?.into_coeffs().remove(0);
            let gap = (&(&g.adjoint() * &g) - &CMatrix::identity(g.dim())).frobenius_norm();
            r.unitarity_gap = r.unitarity_gap.max(gap);
            let diff = self.connection.field().value(p)?.sub(&target.field().value(p)?)?.norm();
            r.form_gap = r.form_gap.max(diff);
            let j = component(&self.a2, p, 1)?;
            let dep: f64 = [0, 2, 3].iter().map(|&v| j.derivative(v).value().frobenius_norm()).sum();
            r.a2_dependence = r.a2_dependence.max(dep);
            let v = j.value();
            r.a2_normality = r.a2_normality.max(bracket(v, &v.adjoint()).frobenius_norm());
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodge::duality_residual;
    use crate::yang_mills::{curvature, sample_polydisk, sample_shell, ym_residuals};

    fn scalar(powers: [u32; 4], v: Complex64) -> PolyCoefficient {
        PolyCoefficient::monomial(powers, CMatrix::scalar(1, v))
    }

    #[test]
    fn skew_form_is_skew() {
        let [s1, s2, _] = pauli();
        let eta = EtaForm::from_poly(
            PolyCoefficient::monomial([1, 0, 0, 1], s1),
            PolyCoefficient::monomial([0, 2, 0, 0], s2.scale(c(0.5, 1.0))),
            false,
            false,
        )
        .unwrap();
        let a = from_eta(&eta, EtaKind::Skew);
        let p = Point::new(c(0.3, 0.2), c(-0.5, 0.1));
        let v = a.field().value(&p).unwrap();
        assert!(v.add(&v.adjoint()).unwrap().norm() < 1e-15);
        let h = from_eta(&eta, EtaKind::Hermitian).field().value(&p).unwrap();
        assert!(h.sub(&h.adjoint()).unwrap().norm() < 1e-15);
    }

    #[test]
    fn pure_gauge_is_maurer_cartan() {
        // g = I + z1 N with N nilpotent, g⁻¹ = I − z1 N
        let n = CMatrix::from_rows(&[vec![ZERO, ONE], vec![ZERO, ZERO]]).unwrap();
        let g = PolyCoefficient::constant(CMatrix::identity(2))
            .add(&PolyCoefficient::monomial([1, 0, 0, 0], n.clone()))
            .unwrap();
        let gmap = GaugeMap::new(FormField::from_poly(0, vec![g]).unwrap(), false).unwrap();
        let a = crate::yang_mills::gauge_transform(&Connection::zero(2), &gmap).unwrap();
        let p = Point::new(c(0.7, 0.1), c(0.2, -0.4));
        let r = maurer_cartan_residual(a.field(), &p).unwrap();
        assert!(r.total < 1e-14, "{r:?}");
    }

    #[test]
    fn stationary_family_commutator() {
        let (eta, _) = build_stationary_sd(&PolyCoefficient::zero(1)).unwrap();
        for p in sample_polydisk(1, 10, 2.0) {
            let a1 = eta.a1.value(&p).unwrap().into_coeffs().remove(0);
            let a2 = eta.a2.value(&p).unwrap().into_coeffs().remove(0);
            let got = bracket(&a2, &a1.adjoint());
            let phase = (-I * (p.z[1] - c(std::f64::consts::FRAC_PI_4, 0.0))).exp()
                * std::f64::consts::FRAC_1_SQRT_2;
            let want = CMatrix::from_rows(&[vec![ZERO, phase], vec![-phase, ZERO]]).unwrap();
            assert!((&got - &want).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn stationary_family_is_minkowski_sd() {
        let h = scalar([1, 1, 0, 0], ONE);
        let (eta, a) = build_stationary_sd(&h).unwrap();
        for p in sample_polydisk(2, 10, 2.0) {
            let r = normal_family_duality(&eta, Metric::Minkowski, DualityTarget::SelfDual, &p).unwrap();
            assert!(r.condition_residual < 1e-12, "{}", r.condition_residual);
            assert!(r.prediction_gap < 1e-12, "{}", r.prediction_gap);
            assert!(r.curvature.norm() > 1e-3);
            // The first self-dual component relation holds, but a nonzero
            // skew-Hermitian 2-form cannot be a ±i eigenform of the Minkowski
            // star, so the curvature splits evenly between both eigenspaces.
            let f = curvature(&a, CurvatureMethod::Generic).value(&p).unwrap();
            let fc = f.coeffs();
            assert!((&fc[comp::F21B] - &fc[comp::F12].scale(I)).frobenius_norm() < 1e-12);
            assert_eq!(classify_duality(&f, Metric::Minkowski, 1e-10).unwrap(), DualityClass::Mixed);
            let sd = duality_residual(&f, Metric::Minkowski, true).unwrap();
            let asd = duality_residual(&f, Metric::Minkowski, false).unwrap();
            assert!((sd - asd).abs() < 1e-10 * f.norm());
            let (b, _) = ym_residuals(&a, None, Metric::Minkowski, &p).unwrap();
            assert!(b < 1e-10);
        }
    }

    #[test]
    fn euclidean_criteria_predict_curvature() {
        let [_, _, s3] = pauli();
        // commuting: A1 = z1 σ3, A2 = z2² σ3
        let eta = EtaForm::from_poly(
            PolyCoefficient::monomial([1, 0, 0, 0], s3.clone()),
            PolyCoefficient::monomial([0, 2, 0, 0], s3.scale(c(0.0, 1.0))),
            true,
            true,
        )
        .unwrap();
        let p = Point::new(c(0.5, 0.5), c(-0.2, 0.3));
        let r = normal_family_duality(&eta, Metric::Euclidean, DualityTarget::SelfDual, &p).unwrap();
        assert!(r.condition_residual < 1e-14 && r.prediction_gap < 1e-14);
        // closed η ⇒ F ≡ 0
        let closed = EtaForm::from_poly(
            PolyCoefficient::monomial([0, 1, 0, 0], s3.clone()),
            PolyCoefficient::monomial([1, 0, 0, 0], s3.clone()),
            true,
            true,
        )
        .unwrap();
        let r = normal_family_duality(&closed, Metric::Euclidean, DualityTarget::SelfDual, &p).unwrap();
        assert!(r.curvature.norm() < 1e-14);
        let err = normal_family_duality(
            &EtaForm { holomorphic: false, ..eta },
            Metric::Euclidean,
            DualityTarget::SelfDual,
            &p,
        );
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn constant_solutions() {
        let [_, _, s3] = pauli();
        let (_, rep) = build_constant(&s3, &s3, Metric::Euclidean, 1e-12).unwrap();
        assert_eq!(rep.classification, DualityClass::Zero);
        assert!(rep.consistent);
        // A1* = iA1: A1 = e^{-iπ/4}·H with H Hermitian
        let a1 = CMatrix::from_rows(&[vec![c(1., 0.), c(0.5, 0.5)], vec![c(0.5, -0.5), c(-2., 0.)]])
            .unwrap()
            .scale(c(1.0, -1.0) * std::f64::consts::FRAC_1_SQRT_2);
        assert!((&a1.adjoint() - &a1.scale(I)).frobenius_norm() < 1e-14);
        let a2 = CMatrix::diag(&[c(0.3, 1.0), c(-1.0, 0.2)]);
        let (_, rep) = build_constant(&a1, &a2, Metric::Minkowski, 1e-10).unwrap();
        assert!(rep.minkowski_sd);
        // skew-Hermitian curvature is never a ±i eigenform unless it vanishes
        assert_eq!(rep.classification, DualityClass::Mixed);
        assert!(!rep.consistent);
        // a commuting pair with [A1, A1*] + [A2, A2*] = 0 is jointly normal, so F = 0
        let d1 = CMatrix::diag(&[c(1., 2.), c(-1., 0.5)]);
        let d2 = CMatrix::diag(&[c(0., 1.), c(3., 0.)]);
        let (_, rep) = build_constant(&d1, &d2, Metric::Euclidean, 1e-12).unwrap();
        assert!(rep.euclidean_asd && rep.consistent);
        assert_eq!(rep.classification, DualityClass::Zero);
    }

    #[test]
    fn dirac_monopole_matrices() {
        let b1 = CMatrix::from_rows(&[vec![c(-1., 0.), ONE], vec![c(0., -1.), c(0., -1.)]]).unwrap();
        let b2 = CMatrix::from_rows(&[vec![ONE, c(0., -1.)], vec![c(-1., 0.), c(0., -1.)]]).unwrap();
        let (a, rep) = build_dirac_monopole(&b1, &b2, 1e-12).unwrap();
        assert!(rep.b1_normal && rep.b2_normal && rep.condition_asd && !rep.condition_sd);
        assert_eq!(rep.classification, DualityClass::AntiSelfDual);
        for p in sample_polydisk(3, 5, 2.0) {
            let (b, y) = ym_residuals(&a, None, Metric::Euclidean, &p).unwrap();
            assert!(b < 1e-10 && y < 1e-10);
        }
        // B1 = B2 = iI gives an exact form
        let ii = CMatrix::scalar(2, I);
        let (_, rep) = build_dirac_monopole(&ii, &ii, 1e-12).unwrap();
        assert!(rep.condition_sd);
        assert_eq!(rep.classification, DualityClass::Zero);
    }

    #[test]
    fn bpst_gamma_and_curvature() {
        let b = build_bpst(BpstParams::new(1.0).unwrap()).unwrap();
        let mut signs = Vec::new();
        for p in sample_shell(4, 10, 0.1, 10.0) {
            let g = b.gamma.value(&p).unwrap().into_coeffs().remove(0);
            assert!(g.is_unitary(1e-12) && (g.det() - ONE).norm() < 1e-12);
            let f = curvature(&b.connection, CurvatureMethod::Generic).value(&p).unwrap();
            let pd = b.p_d_eta(&p).unwrap();
            let plus = f.sub(&pd).unwrap().norm();
            let minus = f.add(&pd).unwrap().norm();
            signs.push(if plus < minus { 1 } else { -1 });
            assert!(plus.min(minus) < 1e-10 * (1.0 + pd.norm()), "{plus} {minus}");
            assert!(duality_residual(&f, Metric::Euclidean, false).unwrap() < 1e-10);
        }
        assert!(signs.iter().all(|&s| s == -1));
    }

    #[test]
    fn profile_residuals() {
        let bp = BpstParams::new(2.0).unwrap();
        for r in [0.01, 0.5, 3.0, 100.0] {
            assert!(profile_ode_residual(&bp, r).unwrap() < 1e-14);
            assert_eq!(profile_ode_residual(&ConstantProfile(0.0), r).unwrap(), 0.0);
            assert_eq!(profile_ode_residual(&ConstantProfile(1.0), r).unwrap(), 0.0);
            assert!(profile_ode_residual(&ConstantProfile(0.5), r).unwrap() > 0.0);
        }
    }

    #[test]
    fn normalization_of_stationary_family() {
        let h = scalar([1, 1, 0, 0], ONE);
        let (eta, _) = build_stationary_sd(&h).unwrap();
        let norm = gauge_normalize(&eta, NormalizeCase::MinkowskiSd, Point::origin()).unwrap();
        let pts = sample_polydisk(6, 8, 1.5);
        let rep = norm.verify(&pts).unwrap();
        assert!(rep.worst() < 1e-10, "{rep:?}");
        let (_, base) = build_stationary_sd(&PolyCoefficient::zero(1)).unwrap();
        let f0 = curvature(&base, CurvatureMethod::Generic);
        let f1 = curvature(&norm.connection, CurvatureMethod::Generic);
        for p in pts {
            let gap = f0.value(&p).unwrap().sub(&f1.value(&p).unwrap()).unwrap().norm();
            assert!(gap < 1e-10, "{gap}");
        }
    }

    #[test]
    fn flat_commuting_form_is_pure_gauge() {
        let [_, _, s3] = pauli();
        // η = d(z1²z2 σ3) = 2z1z2 σ3 dz1 + z1² σ3 dz2
        let eta = EtaForm::from_poly(
            PolyCoefficient::monomial([1, 1, 0, 0], s3.scale_re(2.0)),
            PolyCoefficient::monomial([2, 0, 0, 0], s3.clone()),
            true,
            true,
        )
        .unwrap();
        let norm = gauge_normalize(&eta, NormalizeCase::EuclideanFlat, Point::origin()).unwrap();
        for p in sample_polydisk(7, 6, 1.5) {
            assert!(norm.connection.field().value(&p).unwrap().norm() < 1e-10);
        }
        // non-closed remainder is rejected
        let bad = EtaForm::from_poly(
            PolyCoefficient::monomial([0, 1, 0, 0], s3.clone()),
            PolyCoefficient::zero(2),
            true,
            true,
        )
        .unwrap();
        assert!(gauge_normalize(&bad, NormalizeCase::EuclideanFlat, Point::origin()).is_err());
    }
}
