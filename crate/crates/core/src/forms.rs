//! Matrix-valued differential forms on ℂ² in the complex frame
//! `dz1 < dz2 < dz̄1 < dz̄2`.
//!
//! Pointwise forms ([`FormValue`]) carry matrix coefficients; forms expanded
//! to Taylor order ([`FormJet`]) carry matrix jets, which is what the exterior
//! derivative acts on. A [`FormField`] is a function from points to jets.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{CMatrix, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::jet::{coordinates, Coeff, Jet, MatJet, ScalarJet, MAX_ORDER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    Dz1,
    Dz2,
    Dzb1,
    Dzb2,
}

impl Generator {
    pub const ALL: [Generator; 4] = [Self::Dz1, Self::Dz2, Self::Dzb1, Self::Dzb2];

    /// Slot in the canonical order, also the jet variable it differentiates.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Generator {
        Self::ALL[i]
    }

    pub fn conjugate(self) -> Generator {
        Self::from_index(self.index() ^ 2)
    }

    pub fn is_holomorphic(self) -> bool {
        self.index() < 2
    }

    pub fn label(self) -> &'static str {
        ["dz1", "dz2", "dz̄1", "dz̄2"][self.index()]
    }

    pub fn ascii_label(self) -> &'static str {
        ["dz1", "dz2", "dzb1", "dzb2"][self.index()]
    }
}

/// A sorted wedge of distinct generators, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisIndex(u8);

impl BasisIndex {
    pub fn from_mask(mask: u8) -> Self {
        assert!(mask < 16, "basis mask out of range");
        BasisIndex(mask)
    }

    pub fn from_generators(gens: &[Generator]) -> Result<(f64, Self)> {
        let mut mask = 0u8;
        let mut sign = 1.0;
        for &g in gens {
            let bit = 1u8 << g.index();
            if mask & bit != 0 {
                return Ok((0.0, BasisIndex(mask)));
            }
            if ((mask >> g.index()) >> 1).count_ones() % 2 == 1 {
                sign = -sign;
            }
            mask |= bit;
        }
        Ok((sign, BasisIndex(mask)))
    }

    pub fn mask(self) -> u8 {
        self.0
    }

    pub fn degree(self) -> u8 {
        self.0.count_ones() as u8
    }

    pub fn generators(self) -> Vec<Generator> {
        (0..4)
            .filter(|i| self.0 & (1 << i) != 0)
            .map(Generator::from_index)
            .collect()
    }

    pub fn contains(self, g: Generator) -> bool {
        self.0 & (1 << g.index()) != 0
    }

    /// Position within the canonical degree-p basis.
    pub fn position(self) -> usize {
        positions()[self.0 as usize]
    }

    /// Conjugates every generator in place and re-sorts, returning the sign.
    pub fn conjugate(self) -> (f64, BasisIndex) {
        let gens: Vec<Generator> = self.generators().into_iter().map(Generator::conjugate).collect();
        BasisIndex::from_generators(&gens).expect("conjugation keeps generators distinct")
    }

    pub fn label(self) -> String {
        if self.0 == 0 {
            return "1".into();
        }
        self.generators().iter().map(|g| g.label()).collect::<Vec<_>>().join("∧")
    }

    pub fn ascii_label(self) -> String {
        if self.0 == 0 {
            return "1".into();
        }
        self.generators()
            .iter()
            .map(|g| g.ascii_label())
            .collect::<Vec<_>>()
            .join("^")
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Sign of `e_a ∧ e_b` relative to the sorted basis element, or `None` when
/// they share a generator.
pub fn wedge_sign(a: BasisIndex, b: BasisIndex) -> Option<f64> {
    if a.0 & b.0 != 0 {
        return None;
    }
    let mut inversions = 0;
    for i in 0..4 {
        if a.0 & (1 << i) != 0 {
            inversions += (b.0 & ((1u8 << i) - 1)).count_ones();
        }
    }
    Some(if inversions % 2 == 0 { 1.0 } else { -1.0 })
}

fn all_bases() -> &'static [Vec<BasisIndex>; 5] {
    static BASES: OnceLock<[Vec<BasisIndex>; 5]> = OnceLock::new();
    BASES.get_or_init(|| {
        let mut out: [Vec<BasisIndex>; 5] = Default::default();
        // Lexicographic order on increasing generator sequences.
        let mut masks: Vec<u8> = (0u8..16).collect();
        masks.sort_by_key(|&m| {
            let gens: Vec<usize> = (0..4).filter(|i| m & (1 << i) != 0).collect();
            (gens.len(), gens)
        });
        for m in masks {
            out[m.count_ones() as usize].push(BasisIndex(m));
        }
        out
    })
}

fn positions() -> &'static [usize; 16] {
    static POS: OnceLock<[usize; 16]> = OnceLock::new();
    POS.get_or_init(|| {
        let mut pos = [0; 16];
        for basis in all_bases() {
            for (i, b) in basis.iter().enumerate() {
                pos[b.0 as usize] = i;
            }
        }
        pos
    })
}

/// Canonical basis of degree-p forms, `C(4, p)` members.
pub fn basis(p: u8) -> &'static [BasisIndex] {
    &all_bases()[p as usize]
}

/// The top form `dz1∧dz2∧dz̄1∧dz̄2`.
pub const TOP: BasisIndex = BasisIndex(0b1111);

/// Positions of the curvature components in a degree-2 coefficient vector.
pub mod comp {
    pub const F12: usize = 0;
    pub const F11B: usize = 1;
    pub const F12B: usize = 2;
    pub const F21B: usize = 3;
    pub const F22B: usize = 4;
    pub const F1B2B: usize = 5;
}

/// A point of ℂ², `z_k = x_{2k-2} + i x_{2k-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub z: [Complex64; 2],
}

impl Point {
    pub fn new(z1: Complex64, z2: Complex64) -> Self {
        Point { z: [z1, z2] }
    }

    pub fn from_real(x: [f64; 4]) -> Self {
        Point {
            z: [Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3])],
        }
    }

    pub fn origin() -> Self {
        Point::from_real([0.0; 4])
    }

    pub fn real(&self) -> [f64; 4] {
        [self.z[0].re, self.z[0].im, self.z[1].re, self.z[1].im]
    }

    /// `|z|² = |z1|² + |z2|²`.
    pub fn norm_sq(&self) -> f64 {
        self.z[0].norm_sqr() + self.z[1].norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.real().iter().all(|x| x.is_finite())
    }

    pub fn shifted(&self, axis: usize, h: f64) -> Point {
        let mut x = self.real();
        x[axis] += h;
        Point::from_real(x)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b] = self.z;
        write!(f, "({}{:+}i, {}{:+}i)", a.re, a.im, b.re, b.im)
    }
}

/// A homogeneous form of degree `p` with coefficients in `T`, stored against
/// the canonical basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Form<T> {
    degree: u8,
    coeffs: Vec<T>,
}

pub type FormValue = Form<CMatrix>;
pub type FormJet = Form<MatJet>;

impl<T: Coeff> Form<T> {
    pub fn zero(degree: u8, template: &T) -> Self {
        assert!(degree <= 4);
        Form {
            degree,
            coeffs: vec![template.zero_like(); basis(degree).len()],
        }
    }

    pub fn from_coeffs(degree: u8, coeffs: Vec<T>) -> Result<Self> {
        if degree > 4 {
            return Err(Error::DegreeOverflow(degree));
        }
        let expected = basis(degree).len();
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: coeffs.len(),
            });
        }
        Ok(Form { degree, coeffs })
    }

    /// `c · e_b` for a single basis element.
    pub fn basis_form(b: BasisIndex, c: T) -> Self {
        let mut f = Self::zero(b.degree(), &c);
        f.coeffs[b.position()] = c;
        f
    }

    pub fn degree(&self) -> u8 {
        self.degree
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn coeff(&self, b: BasisIndex) -> &T {
        debug_assert_eq!(b.degree(), self.degree);
        &self.coeffs[b.position()]
    }

    pub fn terms(&self) -> impl Iterator<Item = (BasisIndex, &T)> {
        basis(self.degree).iter().copied().zip(self.coeffs.iter())
    }

    pub fn map<U: Coeff>(&self, f: impl Fn(&T) -> U) -> Form<U> {
        Form {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    fn check_degree(&self, other: &Self) -> Result<()> {
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_degree(other)?;
        let mut out = self.clone();
        for (x, y) in out.coeffs.iter_mut().zip(&other.coeffs) {
            x.add_assign_c(y);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_degree(other)?;
        let mut out = self.clone();
        for (x, y) in out.coeffs.iter_mut().zip(&other.coeffs) {
            x.sub_assign_c(y);
        }
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|x| x.scale_c(c))
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    /// `self ∧ other`, multiplying coefficients in wedge order.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        let degree = self.degree + other.degree;
        if degree > 4 {
            return Err(Error::DegreeOverflow(degree));
        }
        let template = self.coeffs[0].mul_c(&other.coeffs[0]);
        let mut out = Self::zero(degree, &template);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                if let Some(sign) = wedge_sign(a, b) {
                    let target = BasisIndex(a.0 | b.0).position();
                    if sign > 0.0 {
                        out.coeffs[target].mul_acc(ca, cb);
                    } else {
                        let p = ca.mul_c(cb);
                        out.coeffs[target].sub_assign_c(&p);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Adjoint: coefficients are replaced by their adjoints and every
    /// generator by its conjugate at the same position, then re-sorted.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.degree, &self.coeffs[0]);
        for (b, c) in self.terms() {
            let (sign, target) = b.conjugate();
            out.coeffs[target.position()] = c.adjoint_c().scale_c(Complex64::new(sign, 0.0));
        }
        out
    }

    /// Sum of coefficient norms.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(Coeff::norm_c).sum()
    }
}

impl FormValue {
    pub fn dim(&self) -> usize {
        self.coeffs[0].dim()
    }

    pub fn zeros(degree: u8, n: usize) -> Self {
        Self::zero(degree, &CMatrix::zeros(n))
    }

    /// Coefficient of the top form.
    pub fn top(&self) -> &CMatrix {
        assert_eq!(self.degree, 4);
        &self.coeffs[0]
    }

    pub fn to_jet(&self, order: usize) -> FormJet {
        self.map(|m| Jet::constant(m.clone(), order))
    }
}

/// Which part of the exterior derivative to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DPart {
    Full,
    Del,
    Delbar,
}

impl DPart {
    fn includes(self, g: Generator) -> bool {
        match self {
            DPart::Full => true,
            DPart::Del => g.is_holomorphic(),
            DPart::Delbar => !g.is_holomorphic(),
        }
    }
}

impl FormJet {
    pub fn dim(&self) -> usize {
        self.coeffs[0].dim()
    }

    pub fn order(&self) -> usize {
        self.coeffs.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn value(&self) -> FormValue {
        self.map(|j| j.value().clone())
    }

    pub fn truncate(&self, order: usize) -> Self {
        self.map(|j| j.truncate(order))
    }

    /// `∂`, `∂̄` or `d`, lowering the jet order by one.
    pub fn d(&self, part: DPart) -> Result<Self> {
        if self.degree >= 4 {
            return Err(Error::DegreeOverflow(self.degree + 1));
        }
        let order = self.order();
        if order == 0 {
            return Err(Error::JetOrder {
                requested: 1,
                max: 0,
            });
        }
        let template = self.coeffs[0].truncate(order - 1);
        let mut out = Form::zero(self.degree + 1, &template);
        for (b, c) in self.terms() {
            for g in Generator::ALL {
                if !part.includes(g) || b.contains(g) {
                    continue;
                }
                let (sign, target) =
                    BasisIndex::from_generators(&[&[g][..], &b.generators()[..]].concat())?;
                let deriv = c.derivative(g.index());
                if sign > 0.0 {
                    out.coeffs[target.position()].add_assign(&deriv);
                } else {
                    out.coeffs[target.position()].sub_assign(&deriv);
                }
            }
        }
        Ok(out)
    }

    /// Wirtinger derivative of every coefficient.
    pub fn partial(&self, w: Wirtinger) -> Self {
        self.map(|j| j.derivative(w.slot()))
    }
}

/// The four Wirtinger derivatives `∂1, ∂2, ∂̄1, ∂̄2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wirtinger {
    D1,
    D2,
    Db1,
    Db2,
}

impl Wirtinger {
    pub fn slot(self) -> usize {
        self as usize
    }
}

/// One term `z1^a z2^b z̄1^c z̄2^d · M` of a polynomial coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub powers: [u32; 4],
    pub matrix: CMatrix,
}

/// A matrix-valued polynomial in `(z1, z2, z̄1, z̄2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PolyCoefficient {
    terms: Vec<PolyTerm>,
}

impl<'de> Deserialize<'de> for PolyCoefficient {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let terms: Vec<PolyTerm> = Vec::deserialize(d)?;
        PolyCoefficient::new(terms).map_err(serde::de::Error::custom)
    }
}

impl PolyCoefficient {
    pub fn new(terms: Vec<PolyTerm>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidInput("polynomial needs at least one term".into()))?;
        let n = first.matrix.dim();
        for t in &terms {
            if t.matrix.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: t.matrix.dim(),
                });
            }
        }
        Ok(PolyCoefficient { terms })
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(CMatrix::zeros(n))
    }

    pub fn constant(m: CMatrix) -> Self {
        Self::monomial([0; 4], m)
    }

    pub fn monomial(powers: [u32; 4], m: CMatrix) -> Self {
        PolyCoefficient {
            terms: vec![PolyTerm { powers, matrix: m }],
        }
    }

    pub fn terms(&self) -> &[PolyTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.terms[0].matrix.dim()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(terms)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        PolyCoefficient {
            terms: self
                .terms
                .iter()
                .map(|t| PolyTerm {
                    powers: t.powers,
                    matrix: t.matrix.scale(c),
                })
                .collect(),
        }
    }

    /// Left multiplication of every term by a constant matrix.
    pub fn left_mul(&self, m: &CMatrix) -> Self {
        PolyCoefficient {
            terms: self
                .terms
                .iter()
                .map(|t| PolyTerm {
                    powers: t.powers,
                    matrix: m * &t.matrix,
                })
                .collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        PolyCoefficient {
            terms: self
                .terms
                .iter()
                .map(|t| PolyTerm {
                    powers: [t.powers[2], t.powers[3], t.powers[0], t.powers[1]],
                    matrix: t.matrix.adjoint(),
                })
                .collect(),
        }
    }

    pub fn eval(&self, p: &Point) -> CMatrix {
        let vars = [p.z[0], p.z[1], p.z[0].conj(), p.z[1].conj()];
        let mut out = CMatrix::zeros(self.dim());
        for t in &self.terms {
            let mut s = ONE;
            for (v, &k) in vars.iter().zip(&t.powers) {
                s *= v.powu(k);
            }
            out.add_scaled(&t.matrix, s);
        }
        out
    }

    /// Exact Taylor jet at `p`.
    pub fn jet(&self, p: &Point, order: usize) -> MatJet {
        let coords = coordinates(p.z, order);
        self.jet_from_coords(&coords)
    }

    pub(crate) fn jet_from_coords(&self, coords: &[ScalarJet; 4]) -> MatJet {
        let order = coords[0].order();
        let mut out = MatJet::zeros(self.dim(), order);
        for t in &self.terms {
            let mut mono = ScalarJet::constant(ONE, order);
            for (v, &k) in coords.iter().zip(&t.powers) {
                for _ in 0..k {
                    mono = mono.mul(v);
                }
            }
            out.add_assign(&mono.times_matrix(&t.matrix));
        }
        out
    }

    /// Exact Wirtinger derivative.
    pub fn derivative(&self, w: Wirtinger) -> Self {
        let v = w.slot();
        let terms: Vec<PolyTerm> = self
            .terms
            .iter()
            .filter(|t| t.powers[v] > 0)
            .map(|t| {
                let mut powers = t.powers;
                powers[v] -= 1;
                PolyTerm {
                    powers,
                    matrix: t.matrix.scale_re(t.powers[v] as f64),
                }
            })
            .collect();
        if terms.is_empty() {
            Self::zero(self.dim())
        } else {
            PolyCoefficient { terms }
        }
    }

    /// Term-wise antiderivative in one variable with integration constant 0.
    pub fn antiderivative(&self, w: Wirtinger) -> Self {
        let v = w.slot();
        PolyCoefficient {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let mut powers = t.powers;
                    powers[v] += 1;
                    PolyTerm {
                        powers,
                        matrix: t.matrix.scale_re(1.0 / powers[v] as f64),
                    }
                })
                .collect(),
        }
    }

    /// Substitutes `z_k := value` for one holomorphic variable `k` in a
    /// polynomial that does not involve `z̄_k`.
    pub fn substitute(&self, w: Wirtinger, value: Complex64) -> Self {
        let v = w.slot();
        PolyCoefficient {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let mut powers = t.powers;
                    powers[v] = 0;
                    PolyTerm {
                        powers,
                        matrix: t.matrix.scale(value.powu(t.powers[v])),
                    }
                })
                .collect(),
        }
    }

    /// True when no term involves `z̄1` or `z̄2`.
    pub fn is_holomorphic(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.powers[2] == 0 && t.powers[3] == 0 || t.matrix.is_zero())
    }
}

/// How a field computes derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DerivativeStrategy {
    ExactPolynomial,
    ClosedForm,
    FiniteDifference { h: f64, richardson: bool },
}

impl DerivativeStrategy {
    pub const DEFAULT_FD_STEP: f64 = 1e-5;

    pub fn finite_difference() -> Self {
        DerivativeStrategy::FiniteDifference {
            h: Self::DEFAULT_FD_STEP,
            richardson: false,
        }
    }

    fn rank(self) -> u8 {
        match self {
            DerivativeStrategy::ExactPolynomial => 0,
            DerivativeStrategy::ClosedForm => 1,
            DerivativeStrategy::FiniteDifference { .. } => 2,
        }
    }

    /// The weaker of two strategies, used when fields are combined.
    pub fn combine(self, other: Self) -> Self {
        if other.rank() > self.rank() {
            other
        } else {
            self
        }
    }

    /// Highest jet order the strategy can deliver.
    pub fn max_order(self) -> usize {
        match self {
            DerivativeStrategy::FiniteDifference { .. } => 2,
            _ => MAX_ORDER,
        }
    }
}

type EvalFn = dyn Fn(&Point, usize) -> Result<FormJet> + Send + Sync;
type ValueFn = dyn Fn(&Point) -> Result<FormValue> + Send + Sync;

/// A matrix-valued differential form field on ℂ².
#[derive(Clone)]
pub struct FormField {
    degree: u8,
    dim: usize,
    strategy: DerivativeStrategy,
    max_order: usize,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for FormField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormField")
            .field("degree", &self.degree)
            .field("dim", &self.dim)
            .field("strategy", &self.strategy)
            .finish()
    }
}

impl FormField {
    /// A field given by its Taylor jets. `eval(p, k)` must return a jet of
    /// order at least `k`.
    pub fn new(
        degree: u8,
        dim: usize,
        strategy: DerivativeStrategy,
        eval: impl Fn(&Point, usize) -> Result<FormJet> + Send + Sync + 'static,
    ) -> Self {
        Self::with_max_order(degree, dim, strategy, strategy.max_order(), eval)
    }

    fn with_max_order(
        degree: u8,
        dim: usize,
        strategy: DerivativeStrategy,
        max_order: usize,
        eval: impl Fn(&Point, usize) -> Result<FormJet> + Send + Sync + 'static,
    ) -> Self {
        FormField {
            degree,
            dim,
            strategy,
            max_order,
            eval: Arc::new(eval),
        }
    }

    pub fn degree(&self) -> u8 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn strategy(&self) -> DerivativeStrategy {
        self.strategy
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Taylor jet of order `order` at `p`.
    pub fn jet(&self, p: &Point, order: usize) -> Result<FormJet> {
        if order > self.max_order {
            return Err(Error::JetOrder {
                requested: order,
                max: self.max_order,
            });
        }
        if !p.is_finite() {
            return Err(Error::NotEvaluable {
                at: *p,
                reason: "non-finite coordinates".into(),
            });
        }
        let j = (self.eval)(p, order)?;
        let j = if j.order() > order { j.truncate(order) } else { j };
        if !j.norm().is_finite() {
            return Err(Error::NotEvaluable {
                at: *p,
                reason: "non-finite coefficient".into(),
            });
        }
        Ok(j)
    }

    pub fn value(&self, p: &Point) -> Result<FormValue> {
        Ok(self.jet(p, 0)?.value())
    }

    pub fn zero(degree: u8, dim: usize) -> Self {
        Self::new(degree, dim, DerivativeStrategy::ExactPolynomial, move |_, k| {
            Ok(FormValue::zeros(degree, dim).to_jet(k))
        })
    }

    pub fn constant(value: FormValue) -> Self {
        let (degree, dim) = (value.degree(), value.dim());
        Self::new(degree, dim, DerivativeStrategy::ExactPolynomial, move |_, k| {
            Ok(value.to_jet(k))
        })
    }

    /// A field with polynomial coefficients, one per canonical basis element.
    pub fn from_poly(degree: u8, coeffs: Vec<PolyCoefficient>) -> Result<Self> {
        if degree > 4 {
            return Err(Error::DegreeOverflow(degree));
        }
        let expected = basis(degree).len();
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: coeffs.len(),
            });
        }
        let dim = coeffs[0].dim();
        for c in &coeffs {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.dim(),
                });
            }
        }
        Ok(Self::new(degree, dim, DerivativeStrategy::ExactPolynomial, move |p, k| {
            let coords = coordinates(p.z, k);
            Form::from_coeffs(degree, coeffs.iter().map(|c| c.jet_from_coords(&coords)).collect())
        }))
    }

    /// Assembles a degree-p field from scalar (degree-0) component fields.
    pub fn from_components(degree: u8, components: Vec<FormField>) -> Result<Self> {
        let expected = basis(degree).len();
        if components.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: components.len(),
            });
        }
        let dim = components[0].dim;
        let mut strategy = components[0].strategy;
        let mut max_order = MAX_ORDER;
        for c in &components {
            if c.degree != 0 {
                return Err(Error::DegreeMismatch {
                    expected: 0,
                    found: c.degree,
                });
            }
            if c.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.dim,
                });
            }
            strategy = strategy.combine(c.strategy);
            max_order = max_order.min(c.max_order);
        }
        Ok(Self::with_max_order(degree, dim, strategy, max_order, move |p, k| {
            let coeffs = components
                .iter()
                .map(|c| Ok(c.jet(p, k)?.into_coeffs().remove(0)))
                .collect::<Result<Vec<_>>>()?;
            Form::from_coeffs(degree, coeffs)
        }))
    }

    /// A field known only through point values; derivatives come from central
    /// differences in the real coordinates.
    pub fn from_values(
        degree: u8,
        dim: usize,
        strategy: DerivativeStrategy,
        f: impl Fn(&Point) -> Result<FormValue> + Send + Sync + 'static,
    ) -> Result<Self> {
        let DerivativeStrategy::FiniteDifference { h, richardson } = strategy else {
            return Err(Error::InvalidInput(
                "value-only fields need a finite-difference strategy".into(),
            ));
        };
        if !(h.is_finite() && h >= 1e-12) {
            return Err(Error::Numeric(format!("finite-difference step {h} underflows")));
        }
        let f: Arc<ValueFn> = Arc::new(f);
        Ok(Self::new(degree, dim, strategy, move |p, k| {
            fd_jet(f.as_ref(), p, k, h, richardson)
        }))
    }

    /// Applies a pointwise jet map; `extra` is the additional input order the
    /// map consumes (1 for a derivative).
    pub fn unary(
        &self,
        degree: u8,
        extra: usize,
        f: impl Fn(&Point, FormJet) -> Result<FormJet> + Send + Sync + 'static,
    ) -> FormField {
        let src = self.clone();
        let max_order = self.max_order.saturating_sub(extra);
        Self::with_max_order(degree, self.dim, self.strategy, max_order, move |p, k| {
            f(p, src.jet(p, k + extra)?)
        })
    }

    /// Pointwise combination of two fields with the same algebra dimension.
    pub fn binary(
        &self,
        other: &FormField,
        degree: u8,
        extra: usize,
        f: impl Fn(&Point, FormJet, FormJet) -> Result<FormJet> + Send + Sync + 'static,
    ) -> Result<FormField> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let (a, b) = (self.clone(), other.clone());
        let max_order = self.max_order.min(other.max_order).saturating_sub(extra);
        let strategy = self.strategy.combine(other.strategy);
        Ok(Self::with_max_order(degree, self.dim, strategy, max_order, move |p, k| {
            f(p, a.jet(p, k + extra)?, b.jet(p, k + extra)?)
        }))
    }

    pub fn add(&self, other: &FormField) -> Result<FormField> {
        self.same_degree(other)?;
        self.binary(other, self.degree, 0, |_, a, b| a.add(&b))
    }

    pub fn sub(&self, other: &FormField) -> Result<FormField> {
        self.same_degree(other)?;
        self.binary(other, self.degree, 0, |_, a, b| a.sub(&b))
    }

    pub fn scale(&self, c: Complex64) -> FormField {
        self.unary(self.degree, 0, move |_, a| Ok(a.scale(c)))
    }

    pub fn neg(&self) -> FormField {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn wedge(&self, other: &FormField) -> Result<FormField> {
        let degree = self.degree + other.degree;
        if degree > 4 {
            return Err(Error::DegreeOverflow(degree));
        }
        self.binary(other, degree, 0, |_, a, b| a.wedge(&b))
    }

    pub fn adjoint(&self) -> FormField {
        self.unary(self.degree, 0, |_, a| Ok(a.adjoint()))
    }

    pub fn d(&self, part: DPart) -> Result<FormField> {
        if self.degree >= 4 {
            return Err(Error::DegreeOverflow(self.degree + 1));
        }
        Ok(self.unary(self.degree + 1, 1, move |_, a| a.d(part)))
    }

    fn same_degree(&self, other: &FormField) -> Result<()> {
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        Ok(())
    }
}

/// `wedge(mu, nu)` on fields.
pub fn wedge(mu: &FormField, nu: &FormField) -> Result<FormField> {
    mu.wedge(nu)
}

pub fn adjoint_form(mu: &FormField) -> FormField {
    mu.adjoint()
}

pub fn exterior_d(mu: &FormField, part: DPart) -> Result<FormField> {
    mu.d(part)
}

/// Wirtinger derivative of a degree-0 field at `z`.
pub fn wirtinger(coef: &FormField, z: &Point, which: Wirtinger) -> Result<CMatrix> {
    if coef.degree() != 0 {
        return Err(Error::DegreeMismatch {
            expected: 0,
            found: coef.degree(),
        });
    }
    let j = coef.jet(z, 1)?;
    Ok(j.coeffs()[0].derivative(which.slot()).value().clone())
}

/// Real-coordinate derivative rows of the Wirtinger operators:
/// `∂_k = ½(∂_{x} − i∂_{y})`, `∂̄_k = ½(∂_{x} + i∂_{y})`.
fn wirtinger_rows() -> [[Complex64; 4]; 4] {
    let h = Complex64::new(0.5, 0.0);
    let hi = I * 0.5;
    [
        [h, -hi, ZERO, ZERO],
        [ZERO, ZERO, h, -hi],
        [h, hi, ZERO, ZERO],
        [ZERO, ZERO, h, hi],
    ]
}

/// Builds a Taylor jet of order `<= 2` from point values by central
/// differences in the real coordinates.
fn fd_jet(f: &ValueFn, p: &Point, order: usize, h: f64, richardson: bool) -> Result<FormJet> {
    if order > 2 {
        return Err(Error::JetOrder {
            requested: order,
            max: 2,
        });
    }
    let v0 = f(p)?;
    let (degree, ncoef) = (v0.degree(), v0.coeffs().len());
    let mut jets: Vec<MatJet> = v0
        .coeffs()
        .iter()
        .map(|m| Jet::constant(m.clone(), order))
        .collect();
    if order == 0 {
        return Form::from_coeffs(degree, jets);
    }
    let rows = wirtinger_rows();
    let eval_shift = |shifts: &[(usize, f64)]| -> Result<FormValue> {
        let mut x = p.real();
        for &(axis, s) in shifts {
            x[axis] += s;
        }
        f(&Point::from_real(x))
    };
    let central = |axis: usize, step: f64| -> Result<Vec<CMatrix>> {
        let plus = eval_shift(&[(axis, step)])?;
        let minus = eval_shift(&[(axis, -step)])?;
        Ok(plus
            .coeffs()
            .iter()
            .zip(minus.coeffs())
            .map(|(a, b)| (a - b).scale_re(0.5 / step))
            .collect())
    };
    let mut grad: Vec<Vec<CMatrix>> = Vec::with_capacity(4);
    for axis in 0..4 {
        let step = h * (1.0 + p.real()[axis].abs());
        let mut g = central(axis, step)?;
        if richardson {
            let half = central(axis, step / 2.0)?;
            g = g
                .iter()
                .zip(&half)
                .map(|(a, b)| (&b.scale_re(4.0) - a).scale_re(1.0 / 3.0))
                .collect();
        }
        grad.push(g);
    }
    for (w, row) in rows.iter().enumerate() {
        let mut e = [0u8; 4];
        e[w] = 1;
        let idx = crate::jet::monomial_index(&e).unwrap();
        for c in 0..ncoef {
            let mut acc = CMatrix::zeros(v0.dim());
            for (axis, &r) in row.iter().enumerate() {
                acc.add_scaled(&grad[axis][c], r);
            }
            jets[c].coeffs_mut()[idx] = acc;
        }
    }
    if order == 2 {
        // Second derivatives need a larger step to stay above round-off.
        let step2 = h.max(1e-3);
        let mut hess: Vec<Vec<Vec<CMatrix>>> = vec![vec![Vec::new(); 4]; 4];
        for s in 0..4 {
            for t in s..4 {
                let (hs, ht) = (
                    step2 * (1.0 + p.real()[s].abs()),
                    step2 * (1.0 + p.real()[t].abs()),
                );
                let entry: Vec<CMatrix> = if s == t {
                    let plus = eval_shift(&[(s, hs)])?;
                    let minus = eval_shift(&[(s, -hs)])?;
                    (0..ncoef)
                        .map(|c| {
                            let mut m = &plus.coeffs()[c] + &minus.coeffs()[c];
                            m -= &v0.coeffs()[c].scale_re(2.0);
                            m.scale_re(1.0 / (hs * hs))
                        })
                        .collect()
                } else {
                    let pp = eval_shift(&[(s, hs), (t, ht)])?;
                    let pm = eval_shift(&[(s, hs), (t, -ht)])?;
                    let mp = eval_shift(&[(s, -hs), (t, ht)])?;
                    let mm = eval_shift(&[(s, -hs), (t, -ht)])?;
                    (0..ncoef)
                        .map(|c| {
                            let mut m = &pp.coeffs()[c] - &pm.coeffs()[c];
                            m -= &mp.coeffs()[c];
                            m += &mm.coeffs()[c];
                            m.scale_re(1.0 / (4.0 * hs * ht))
                        })
                        .collect()
                };
                hess[s][t] = entry.clone();
                hess[t][s] = entry;
            }
        }
        for a in 0..4 {
            for b in a..4 {
                let mut e = [0u8; 4];
                e[a] += 1;
                e[b] += 1;
                let idx = crate::jet::monomial_index(&e).unwrap();
                // Taylor coefficient = ∂_a ∂_b f / (1 + δ_ab).
                let factor = if a == b { 0.5 } else { 1.0 };
                for c in 0..ncoef {
                    let mut acc = CMatrix::zeros(v0.dim());
                    for s in 0..4 {
                        for t in 0..4 {
                            let w = rows[a][s] * rows[b][t] * factor;
                            if w != ZERO {
                                acc.add_scaled(&hess[s][t][c], w);
                            }
                        }
                    }
                    jets[c].coeffs_mut()[idx] = acc;
                }
            }
        }
    }
    Form::from_coeffs(degree, jets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::pauli;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn b(gens: &[Generator]) -> BasisIndex {
        BasisIndex::from_generators(gens).unwrap().1
    }

    use Generator::*;

    #[test]
    fn basis_order() {
        let two: Vec<String> = basis(2).iter().map(|b| b.label()).collect();
        assert_eq!(
            two,
            ["dz1∧dz2", "dz1∧dz̄1", "dz1∧dz̄2", "dz2∧dz̄1", "dz2∧dz̄2", "dz̄1∧dz̄2"]
        );
        assert_eq!(basis(1).len(), 4);
        assert_eq!(basis(3).len(), 4);
        assert_eq!(basis(4), &[TOP]);
        assert_eq!(b(&[Dz2, Dzb2]).position(), comp::F22B);
    }

    #[test]
    fn generator_sort_signs() {
        assert_eq!(BasisIndex::from_generators(&[Dz2, Dz1]).unwrap().0, -1.0);
        assert_eq!(BasisIndex::from_generators(&[Dz1, Dz1]).unwrap().0, 0.0);
        assert_eq!(BasisIndex::from_generators(&[Dzb1, Dz1, Dzb2, Dz2]).unwrap().0, -1.0);
        assert_eq!(wedge_sign(b(&[Dz1, Dzb1]), b(&[Dz2, Dzb2])), Some(-1.0));
    }

    #[test]
    fn pauli_wedge() {
        let [s1, s2, s3] = pauli();
        let a = Form::basis_form(b(&[Dz1]), s1.clone());
        let bb = Form::basis_form(b(&[Dz2]), s2);
        let w = a.wedge(&bb).unwrap();
        assert!((w.coeff(b(&[Dz1, Dz2])) - &s3.scale(c(0., 1.))).frobenius_norm() < 1e-15);
        let self_wedge = a.wedge(&a).unwrap();
        assert!(self_wedge.norm() < 1e-15);
        let overflow = w.wedge(&w).unwrap().wedge(&w);
        assert!(matches!(overflow, Err(Error::DegreeOverflow(6))));
    }

    #[test]
    fn adjoint_examples() {
        let [s1, s2, _] = pauli();
        let a = Form::basis_form(b(&[Dz1]), s1.scale(c(0., 1.)));
        let adj = a.adjoint();
        assert!((adj.coeff(b(&[Dzb1])) - &s1.scale(c(0., -1.))).frobenius_norm() < 1e-15);
        let p = &s1 * &s2;
        let f = Form::basis_form(b(&[Dz1, Dz2]), p.clone());
        let fa = f.adjoint();
        assert_eq!(fa.coeff(b(&[Dzb1, Dzb2])), &p.adjoint());
        // dz2∧dz̄1 conjugates to dz̄2∧dz1 = −dz1∧dz̄2
        let g = Form::basis_form(b(&[Dz2, Dzb1]), s1.clone());
        assert_eq!(g.adjoint().coeff(b(&[Dz1, Dzb2])), &s1.scale_re(-1.0));
    }

    #[test]
    fn d_of_simple_fields() {
        let one = CMatrix::identity(1);
        let mut coeffs = vec![PolyCoefficient::zero(1); 4];
        coeffs[1] = PolyCoefficient::monomial([1, 0, 0, 0], one.clone());
        let f = FormField::from_poly(1, coeffs).unwrap();
        let df = f.d(DPart::Full).unwrap();
        let p = Point::new(c(0.3, 0.1), c(-1., 2.));
        let v = df.value(&p).unwrap();
        assert_eq!(v.coeff(b(&[Dz1, Dz2])), &one);
        assert!(df.d(DPart::Full).unwrap().value(&p).unwrap().norm() < 1e-15);

        let g = FormField::from_poly(0, vec![PolyCoefficient::monomial([0, 0, 1, 0], one.clone())]).unwrap();
        let dbar = g.d(DPart::Delbar).unwrap().value(&p).unwrap();
        assert_eq!(dbar.coeff(b(&[Dzb1])), &one);
        assert!(g.d(DPart::Del).unwrap().value(&p).unwrap().norm() == 0.0);
    }

    #[test]
    fn wirtinger_examples() {
        let one = CMatrix::identity(1);
        let sq = FormField::from_poly(0, vec![PolyCoefficient::monomial([2, 0, 0, 0], one.clone())]).unwrap();
        let p = Point::new(c(1., 0.), c(0., 0.));
        assert!((wirtinger(&sq, &p, Wirtinger::D1).unwrap()[(0, 0)] - c(2., 0.)).norm() < 1e-15);
        let bar = FormField::from_poly(0, vec![PolyCoefficient::monomial([0, 0, 1, 0], one.clone())]).unwrap();
        assert_eq!(wirtinger(&bar, &p, Wirtinger::D1).unwrap()[(0, 0)], ZERO);

        // |z|² through finite differences on the real coordinates.
        let r2 = FormField::from_values(0, 1, DerivativeStrategy::finite_difference(), |p| {
            Ok(Form::basis_form(BasisIndex::from_mask(0), CMatrix::scalar(1, c(p.norm_sq(), 0.))))
        })
        .unwrap();
        let q = Point::new(c(0.4, -0.7), c(1.1, 0.2));
        let got = wirtinger(&r2, &q, Wirtinger::D1).unwrap()[(0, 0)];
        assert!((got - q.z[0].conj()).norm() < 1e-9);
    }

    #[test]
    fn fd_step_underflow() {
        let err = FormField::from_values(
            0,
            1,
            DerivativeStrategy::FiniteDifference { h: 0.0, richardson: false },
            |_| Ok(FormValue::zeros(0, 1)),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }

    #[test]
    fn poly_serde_roundtrip() {
        let json = r#"[{"powers":[1,0,0,2],"matrix":[[[1,0],[0,1]],[[0,0],[2,-1]]]}]"#;
        let p: PolyCoefficient = serde_json::from_str(json).unwrap();
        assert_eq!(p.terms()[0].powers, [1, 0, 0, 2]);
        let back = serde_json::to_string(&p).unwrap();
        let again: PolyCoefficient = serde_json::from_str(&back).unwrap();
        assert_eq!(again, p);
        assert!(serde_json::from_str::<PolyCoefficient>("[]").is_err());
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let m = CMatrix::identity(2);
        let p = PolyCoefficient::monomial([2, 1, 0, 0], m);
        let back = p.antiderivative(Wirtinger::D1).derivative(Wirtinger::D1);
        let z = Point::new(c(0.3, 0.4), c(1.0, -0.2));
        assert!((&back.eval(&z) - &p.eval(&z)).frobenius_norm() < 1e-14);
    }
}
