//! Metrics on ℂ² ≅ ℝ⁴, the induced pairing of complex forms, the Hodge star
//! and pointwise/global inner products of matrix-valued forms.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{CMatrix, TraceKind, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::forms::{basis, wedge_sign, BasisIndex, Form, FormField, FormValue, Generator, TOP};
use crate::jet::Coeff;
use crate::quadrature::QuadratureSpec;

/// The two constant metrics. Minkowski uses `g = diag(1, −1, −1, −1)` with
/// `x0` as the time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Minkowski,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Euclidean, Metric::Minkowski];

    /// Diagonal of the real metric matrix `g_{st}`.
    pub fn diagonal(self) -> [f64; 4] {
        match self {
            Metric::Euclidean => [1.0, 1.0, 1.0, 1.0],
            Metric::Minkowski => [1.0, -1.0, -1.0, -1.0],
        }
    }

    /// Diagonal of `g^{st}`.
    pub fn inverse_diagonal(self) -> [f64; 4] {
        self.diagonal().map(|x| 1.0 / x)
    }

    /// Eigenvalue of ★ on self-dual 2-forms.
    pub fn self_dual_eigenvalue(self) -> Complex64 {
        match self {
            Metric::Euclidean => ONE,
            Metric::Minkowski => I,
        }
    }

    /// Sign in `D_A* = sign · ★ D_{−A*} ★`.
    pub fn costar_sign(self) -> f64 {
        match self {
            Metric::Euclidean => -1.0,
            Metric::Minkowski => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Minkowski => "minkowski",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Metric::Euclidean),
            "minkowski" => Ok(Metric::Minkowski),
            other => Err(Error::InvalidInput(format!(
                "unknown metric {other:?}; expected euclidean or minkowski"
            ))),
        }
    }
}

/// Real components of a generator: `dz_k = dx_{2k−2} + i dx_{2k−1}`.
fn real_components(g: Generator) -> [Complex64; 4] {
    match g {
        Generator::Dz1 => [ONE, I, ZERO, ZERO],
        Generator::Dz2 => [ZERO, ZERO, ONE, I],
        Generator::Dzb1 => [ONE, -I, ZERO, ZERO],
        Generator::Dzb2 => [ZERO, ZERO, ONE, -I],
    }
}

/// `⟨a, b⟩ = Σ a_s conj(b_t) g^{st}`.
pub fn metric_pairing(a: Generator, b: Generator, m: Metric) -> Complex64 {
    let (ra, rb, gi) = (real_components(a), real_components(b), m.inverse_diagonal());
    (0..4).map(|s| ra[s] * rb[s].conj() * gi[s]).sum()
}

/// Pairing of decomposable p-forms: the determinant of generator pairings.
fn decomposable_pairing(a: &[Generator], b: &[Generator], m: Metric) -> Complex64 {
    if a.is_empty() {
        return ONE;
    }
    let rows: Vec<Vec<Complex64>> = a
        .iter()
        .map(|&x| b.iter().map(|&y| metric_pairing(x, y, m)).collect())
        .collect();
    CMatrix::from_rows(&rows).expect("square pairing matrix").det()
}

/// ★ on basis forms for one metric.
#[derive(Debug, Clone)]
pub struct StarTable {
    metric: Metric,
    /// `vol = volume · dz1∧dz2∧dz̄1∧dz̄2`.
    volume: Complex64,
    /// `maps[p][i][j]`: coefficient of the j-th degree-(4−p) basis element in
    /// ★ of the i-th degree-p basis element.
    maps: [Vec<Vec<Complex64>>; 5],
}

impl StarTable {
    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Coefficient of the volume form against `dz1∧dz2∧dz̄1∧dz̄2`.
    pub fn volume(&self) -> Complex64 {
        self.volume
    }

    /// ★ of a basis form as a list of `(basis, coefficient)` pairs.
    pub fn star_basis(&self, b: BasisIndex) -> Vec<(BasisIndex, Complex64)> {
        let p = b.degree();
        basis(4 - p)
            .iter()
            .zip(&self.maps[p as usize][b.position()])
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(&t, &c)| (t, c))
            .collect()
    }

    pub fn entry(&self, from: BasisIndex, to: BasisIndex) -> Complex64 {
        self.maps[from.degree() as usize][from.position()][to.position()]
    }

    /// Linear extension over arbitrary coefficients.
    pub fn apply<T: Coeff>(&self, f: &Form<T>) -> Form<T> {
        let p = f.degree() as usize;
        let map = &self.maps[p];
        let template = &f.coeffs()[0];
        let mut out = Form::zero(4 - f.degree(), template);
        for (i, c) in f.coeffs().iter().enumerate() {
            for (j, &s) in map[i].iter().enumerate() {
                if s != ZERO {
                    out.coeffs_mut()[j].add_assign_c(&c.scale_c(s));
                }
            }
        }
        out
    }
}

/// Solves `e ∧ ★b = ⟨e, b̄⟩ vol` for every basis pair.
pub fn build_star_table(m: Metric) -> StarTable {
    let g = m.diagonal();
    let sqrt_det = g.iter().product::<f64>().abs().sqrt();
    // (i/2)² √|det g| dz1∧dz̄1∧dz2∧dz̄2, rewritten against the sorted top form.
    let (sign, _) = BasisIndex::from_generators(&[
        Generator::Dz1,
        Generator::Dzb1,
        Generator::Dz2,
        Generator::Dzb2,
    ])
    .unwrap();
    let volume = (I * 0.5).powu(2) * sqrt_det * sign;
    let mut maps: [Vec<Vec<Complex64>>; 5] = Default::default();
    for p in 0..=4u8 {
        let src = basis(p);
        let dst = basis(4 - p);
        let n = src.len();
        let wedge = CMatrix::from_fn(n, |i, j| match wedge_sign(src[i], dst[j]) {
            Some(s) if (src[i].mask() | dst[j].mask()) == TOP.mask() => Complex64::new(s, 0.0),
            _ => ZERO,
        });
        for &b in src {
            let conj: Vec<Generator> = b.generators().into_iter().map(Generator::conjugate).collect();
            let rhs: Vec<Complex64> = src
                .iter()
                .map(|e| decomposable_pairing(&e.generators(), &conj, m) * volume)
                .collect();
            let x = wedge.solve(&rhs).expect("wedge pairing is nondegenerate");
            maps[p as usize].push(x);
        }
    }
    StarTable {
        metric: m,
        volume,
        maps,
    }
}

/// Cached star table for a metric.
pub fn star_table(m: Metric) -> &'static StarTable {
    static TABLES: OnceLock<[StarTable; 2]> = OnceLock::new();
    let t = TABLES.get_or_init(|| [build_star_table(Metric::Euclidean), build_star_table(Metric::Minkowski)]);
    match m {
        Metric::Euclidean => &t[0],
        Metric::Minkowski => &t[1],
    }
}

pub fn star<T: Coeff>(f: &Form<T>, m: Metric) -> Form<T> {
    star_table(m).apply(f)
}

pub fn star_field(f: &FormField, m: Metric) -> FormField {
    f.unary(4 - f.degree(), 0, move |_, j| Ok(star(&j, m)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DualityClass {
    #[serde(rename = "SD")]
    SelfDual,
    #[serde(rename = "ASD")]
    AntiSelfDual,
    #[serde(rename = "mixed")]
    Mixed,
    #[serde(rename = "zero")]
    Zero,
}

impl std::fmt::Display for DualityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DualityClass::SelfDual => "SD",
            DualityClass::AntiSelfDual => "ASD",
            DualityClass::Mixed => "mixed",
            DualityClass::Zero => "zero",
        })
    }
}

/// `‖★ω − λω‖` for the self-dual eigenvalue (`sd = true`) or its negative.
pub fn duality_residual(omega: &FormValue, m: Metric, sd: bool) -> Result<f64> {
    if omega.degree() != 2 {
        return Err(Error::DegreeMismatch {
            expected: 2,
            found: omega.degree(),
        });
    }
    let lambda = if sd {
        m.self_dual_eigenvalue()
    } else {
        -m.self_dual_eigenvalue()
    };
    Ok(star(omega, m).sub(&omega.scale(lambda))?.norm())
}

pub fn classify_duality(omega: &FormValue, m: Metric, tol: f64) -> Result<DualityClass> {
    let sd = duality_residual(omega, m, true)?;
    let asd = duality_residual(omega, m, false)?;
    let norm = omega.norm();
    Ok(if norm <= tol {
        DualityClass::Zero
    } else if sd <= tol * norm {
        DualityClass::SelfDual
    } else if asd <= tol * norm {
        DualityClass::AntiSelfDual
    } else {
        DualityClass::Mixed
    })
}

/// The scalar multiplying vol in `Tr(μ ∧ ★(η*))`.
pub fn pointwise_inner(mu: &FormValue, eta: &FormValue, m: Metric, kind: TraceKind) -> Result<Complex64> {
    if mu.degree() != eta.degree() {
        return Err(Error::DegreeMismatch {
            expected: mu.degree(),
            found: eta.degree(),
        });
    }
    if mu.dim() != eta.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: eta.dim(),
        });
    }
    let t = star_table(m);
    let top = mu.wedge(&t.apply(&eta.adjoint()))?;
    Ok(top.top().trace(kind) / t.volume())
}

/// `(μ, η) = ∫ Tr(μ ∧ ★(η*))` by tensor-product quadrature.
pub fn global_inner(
    mu: &FormField,
    eta: &FormField,
    m: Metric,
    quad: &QuadratureSpec,
    kind: TraceKind,
) -> Result<Complex64> {
    if mu.degree() != eta.degree() {
        return Err(Error::DegreeMismatch {
            expected: mu.degree(),
            found: eta.degree(),
        });
    }
    let [v] = quad.integrate(|p| Ok([pointwise_inner(&mu.value(p)?, &eta.value(p)?, m, kind)?]))?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::Generator::*;

    fn b(gens: &[Generator]) -> BasisIndex {
        BasisIndex::from_generators(gens).unwrap().1
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn generator_pairings() {
        assert_eq!(metric_pairing(Dz1, Dz1, Metric::Euclidean), c(2., 0.));
        assert_eq!(metric_pairing(Dz1, Dzb1, Metric::Euclidean), ZERO);
        for m in Metric::ALL {
            assert_eq!(metric_pairing(Dz1, Dz2, m), ZERO);
        }
    }

    #[test]
    fn volume_is_dx0123() {
        // dx0∧dx1∧dx2∧dx3 = (i/2)² dz1∧dz̄1∧dz2∧dz̄2 = ¼ dz1∧dz2∧dz̄1∧dz̄2
        assert!((star_table(Metric::Euclidean).volume() - c(0.25, 0.)).norm() < 1e-15);
        assert!((star_table(Metric::Minkowski).volume() - c(0.25, 0.)).norm() < 1e-15);
    }

    #[test]
    fn selected_entries() {
        let e = star_table(Metric::Euclidean);
        assert!((e.entry(b(&[Dz1, Dz2]), b(&[Dz1, Dz2])) - ONE).norm() < 1e-14);
        assert!((e.entry(b(&[Dz1]), b(&[Dz1, Dz2, Dzb2])) - c(0.5, 0.)).norm() < 1e-14);
        let mk = star_table(Metric::Minkowski);
        assert!((mk.entry(TOP, BasisIndex::from_mask(0)) - c(-4., 0.)).norm() < 1e-13);
    }

    #[test]
    fn classification() {
        let one = CMatrix::identity(1);
        let w = Form::basis_form(b(&[Dz1, Dzb2]), one.clone());
        assert_eq!(classify_duality(&w, Metric::Euclidean, 1e-12).unwrap(), DualityClass::AntiSelfDual);
        let v = Form::basis_form(b(&[Dz1, Dzb1]), one.clone())
            .add(&Form::basis_form(b(&[Dz2, Dzb2]), one.scale(I)))
            .unwrap();
        assert_eq!(classify_duality(&v, Metric::Minkowski, 1e-12).unwrap(), DualityClass::SelfDual);
        let z = FormValue::zeros(2, 1);
        assert_eq!(classify_duality(&z, Metric::Euclidean, 1e-12).unwrap(), DualityClass::Zero);
        let mixed = Form::basis_form(b(&[Dz1, Dz2]), one.clone())
            .add(&Form::basis_form(b(&[Dz1, Dzb2]), one))
            .unwrap();
        assert_eq!(classify_duality(&mixed, Metric::Euclidean, 1e-12).unwrap(), DualityClass::Mixed);
    }

    #[test]
    fn pointwise_examples() {
        let [s1, ..] = crate::algebra::pauli();
        let mu = Form::basis_form(b(&[Dz1, Dz2]), s1);
        let v = pointwise_inner(&mu, &mu, Metric::Euclidean, TraceKind::Matrix).unwrap();
        assert!(v.re > 0.0 && v.im.abs() < 1e-14);
        let i2 = CMatrix::identity(2);
        let a = Form::basis_form(b(&[Dz1]), i2.clone());
        let bb = Form::basis_form(b(&[Dz2]), i2);
        assert_eq!(pointwise_inner(&a, &bb, Metric::Euclidean, TraceKind::Matrix).unwrap(), ZERO);
        // ⟨dz1, dz1⟩ = 2 per unit of trace
        let one = Form::basis_form(b(&[Dz1]), CMatrix::identity(1));
        let p = pointwise_inner(&one, &one, Metric::Euclidean, TraceKind::Matrix).unwrap();
        assert!((p - c(2., 0.)).norm() < 1e-14);
        assert!(matches!(
            pointwise_inner(&one, &mu, Metric::Euclidean, TraceKind::Matrix),
            Err(Error::DegreeMismatch { .. })
        ));
    }
}
