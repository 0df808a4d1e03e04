//! Truncated Taylor expansions in the four independent variables
//! `(z1, z2, z̄1, z̄2)`.
//!
//! A jet of order `k` at a point stores the coefficients `c_α` of
//! `f(z + δ) = Σ_{|α| ≤ k} c_α δ^α`. Wirtinger derivatives act exactly on
//! these coefficients, so every operator built from products, sums and
//! derivatives stays exact for polynomial and closed-form inputs.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::algebra::{exp_scaling_squaring, CMatrix, UnitalAlgebra, ONE, ZERO};
use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;
pub const NVARS: usize = 4;

/// Variable slots: 0 = z1, 1 = z2, 2 = z̄1, 3 = z̄2.
pub type Exponents = [u8; NVARS];

struct Table {
    monomials: Vec<Exponents>,
    /// Number of monomials of total degree `<= k`.
    counts: [usize; MAX_ORDER + 1],
    lookup: Vec<u16>,
    /// For each order, every `(i, j, i+j)` with `|i| + |j| <= order`.
    products: Vec<Vec<(u16, u16, u16)>>,
    /// Index of the monomial with slots `a` and `c` swapped with `b` and `d`.
    conj: Vec<u16>,
}

const LOOKUP_BASE: usize = MAX_ORDER + 1;

fn key(e: &Exponents) -> usize {
    e.iter().fold(0, |acc, &x| acc * LOOKUP_BASE + x as usize)
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut monomials = Vec::new();
        let mut counts = [0; MAX_ORDER + 1];
        for deg in 0..=MAX_ORDER {
            // Lexicographically descending within a degree so the linear terms
            // come out as z1, z2, z̄1, z̄2.
            let mut level = Vec::new();
            for a in (0..=deg).rev() {
                for b in (0..=deg - a).rev() {
                    for c in (0..=deg - a - b).rev() {
                        let d = deg - a - b - c;
                        level.push([a as u8, b as u8, c as u8, d as u8]);
                    }
                }
            }
            monomials.extend(level);
            counts[deg] = monomials.len();
        }
        let mut lookup = vec![u16::MAX; LOOKUP_BASE.pow(NVARS as u32)];
        for (i, m) in monomials.iter().enumerate() {
            lookup[key(m)] = i as u16;
        }
        let degree = |m: &Exponents| m.iter().map(|&x| x as usize).sum::<usize>();
        let mut products = Vec::new();
        for order in 0..=MAX_ORDER {
            let mut list = Vec::new();
            for (i, a) in monomials[..counts[order]].iter().enumerate() {
                for (j, b) in monomials[..counts[order - degree(a)]].iter().enumerate() {
                    let s = [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]];
                    list.push((i as u16, j as u16, lookup[key(&s)]));
                }
            }
            products.push(list);
        }
        let conj = monomials
            .iter()
            .map(|m| lookup[key(&[m[2], m[3], m[0], m[1]])])
            .collect();
        Table {
            monomials,
            counts,
            lookup,
            products,
            conj,
        }
    })
}

/// Number of Taylor coefficients of a jet of the given order.
pub fn coefficient_count(order: usize) -> usize {
    table().counts[order]
}

pub fn monomial(index: usize) -> Exponents {
    table().monomials[index]
}

/// Position of a monomial in the coefficient vector, if its degree is within
/// `MAX_ORDER`.
pub fn monomial_index(e: &Exponents) -> Option<usize> {
    if e.iter().map(|&x| x as usize).sum::<usize>() > MAX_ORDER {
        return None;
    }
    Some(table().lookup[key(e)] as usize)
}

/// Ring operations needed by jets and by form coefficients.
pub trait Coeff: Clone + Send + Sync + 'static {
    fn zero_like(&self) -> Self;
    fn add_assign_c(&mut self, other: &Self);
    fn sub_assign_c(&mut self, other: &Self);
    fn mul_c(&self, other: &Self) -> Self;
    fn scale_c(&self, c: Complex64) -> Self;
    fn adjoint_c(&self) -> Self;
    fn norm_c(&self) -> f64;

    fn mul_acc(&mut self, a: &Self, b: &Self) {
        let p = a.mul_c(b);
        self.add_assign_c(&p);
    }
}

impl Coeff for Complex64 {
    fn zero_like(&self) -> Self {
        ZERO
    }
    fn add_assign_c(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign_c(&mut self, other: &Self) {
        *self -= other;
    }
    fn mul_c(&self, other: &Self) -> Self {
        self * other
    }
    fn scale_c(&self, c: Complex64) -> Self {
        self * c
    }
    fn adjoint_c(&self) -> Self {
        self.conj()
    }
    fn norm_c(&self) -> f64 {
        self.norm()
    }
    fn mul_acc(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
}

impl Coeff for CMatrix {
    fn zero_like(&self) -> Self {
        CMatrix::zeros(self.dim())
    }
    fn add_assign_c(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign_c(&mut self, other: &Self) {
        *self -= other;
    }
    fn mul_c(&self, other: &Self) -> Self {
        self * other
    }
    fn scale_c(&self, c: Complex64) -> Self {
        self.scale(c)
    }
    fn adjoint_c(&self) -> Self {
        self.adjoint()
    }
    fn norm_c(&self) -> f64 {
        self.frobenius_norm()
    }
    fn mul_acc(&mut self, a: &Self, b: &Self) {
        self.add_product(a, b);
    }
}

/// A truncated Taylor expansion with coefficients in `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    order: usize,
    coeffs: Vec<T>,
}

pub type ScalarJet = Jet<Complex64>;
pub type MatJet = Jet<CMatrix>;

impl<T: Coeff> Jet<T> {
    pub fn constant(value: T, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let zero = value.zero_like();
        let mut coeffs = vec![zero; coefficient_count(order)];
        coeffs[0] = value;
        Jet { order, coeffs }
    }

    pub fn from_coeffs(order: usize, coeffs: Vec<T>) -> Self {
        assert_eq!(coeffs.len(), coefficient_count(order));
        Jet { order, coeffs }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> &T {
        &self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    /// Coefficient of `δ^e`; zero beyond the stored order.
    pub fn coeff(&self, e: &Exponents) -> T {
        match monomial_index(e) {
            Some(i) if i < self.coeffs.len() => self.coeffs[i].clone(),
            _ => self.coeffs[0].zero_like(),
        }
    }

    pub fn zero_like(&self) -> Self {
        let z = self.coeffs[0].zero_like();
        Jet {
            order: self.order,
            coeffs: vec![z; self.coeffs.len()],
        }
    }

    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order {
            return self.clone();
        }
        Jet {
            order,
            coeffs: self.coeffs[..coefficient_count(order)].to_vec(),
        }
    }

    /// Wirtinger derivative with respect to variable slot `var`; the order
    /// drops by one.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let n = coefficient_count(order);
        let coeffs = (0..n)
            .map(|i| {
                let mut e = monomial(i);
                let factor = e[var] as f64 + 1.0;
                e[var] += 1;
                let idx = monomial_index(&e).expect("within order");
                self.coeffs[idx].scale_c(Complex64::new(factor, 0.0))
            })
            .collect();
        Jet { order, coeffs }
    }

    /// Partial derivative `∂^e f` at the base point.
    pub fn partial(&self, e: &Exponents) -> T {
        let factorial: f64 = e
            .iter()
            .map(|&k| (1..=k as u32).product::<u32>() as f64)
            .product();
        self.coeff(e).scale_c(Complex64::new(factorial, 0.0))
    }

    /// The jet of `z ↦ f(z)*`: swaps holomorphic and antiholomorphic slots.
    pub fn adjoint(&self) -> Self {
        let t = table();
        let coeffs = (0..self.coeffs.len())
            .map(|i| self.coeffs[t.conj[i] as usize].adjoint_c())
            .collect();
        Jet {
            order: self.order,
            coeffs,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Jet {
            order: self.order,
            coeffs: self.coeffs.iter().map(|x| x.scale_c(c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.truncate(other.order);
        for (x, y) in out.coeffs.iter_mut().zip(&other.coeffs) {
            x.add_assign_c(y);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.truncate(other.order);
        for (x, y) in out.coeffs.iter_mut().zip(&other.coeffs) {
            x.sub_assign_c(y);
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn add_assign(&mut self, other: &Self) {
        if other.order < self.order {
            *self = self.truncate(other.order);
        }
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            x.add_assign_c(y);
        }
    }

    pub fn sub_assign(&mut self, other: &Self) {
        if other.order < self.order {
            *self = self.truncate(other.order);
        }
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            x.sub_assign_c(y);
        }
    }

    /// Truncated product; the result has the smaller of the two orders.
    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let zero = self.coeffs[0].zero_like();
        let mut coeffs = vec![zero; coefficient_count(order)];
        for &(i, j, k) in &table().products[order] {
            coeffs[k as usize].mul_acc(&self.coeffs[i as usize], &other.coeffs[j as usize]);
        }
        Jet { order, coeffs }
    }

    /// Sum of coefficient norms; zero exactly when the jet vanishes.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(Coeff::norm_c).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.norm().is_finite()
    }
}

impl<T: Coeff> Coeff for Jet<T> {
    fn zero_like(&self) -> Self {
        Jet::zero_like(self)
    }
    fn add_assign_c(&mut self, other: &Self) {
        self.add_assign(other);
    }
    fn sub_assign_c(&mut self, other: &Self) {
        self.sub_assign(other);
    }
    fn mul_c(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn scale_c(&self, c: Complex64) -> Self {
        self.scale(c)
    }
    fn adjoint_c(&self) -> Self {
        self.adjoint()
    }
    fn norm_c(&self) -> f64 {
        self.norm()
    }
    fn mul_acc(&mut self, a: &Self, b: &Self) {
        let order = self.order.min(a.order).min(b.order);
        if order < self.order {
            *self = self.truncate(order);
        }
        for &(i, j, k) in &table().products[order] {
            self.coeffs[k as usize].mul_acc(&a.coeffs[i as usize], &b.coeffs[j as usize]);
        }
    }
}

impl ScalarJet {
    /// The coordinate function for variable slot `var`, expanded at `value`.
    pub fn variable(value: Complex64, var: usize, order: usize) -> Self {
        let mut j = Jet::constant(value, order);
        if order > 0 {
            let mut e = [0u8; NVARS];
            e[var] = 1;
            j.coeffs[monomial_index(&e).unwrap()] = ONE;
        }
        j
    }

    /// `g(self)` given the Taylor coefficients `g^(k)(u0)/k!` of `g` at the
    /// base value `u0`, for `k = 0..=order`.
    pub fn compose(&self, taylor: &[Complex64]) -> Self {
        debug_assert!(taylor.len() > self.order);
        let mut delta = self.clone();
        delta.coeffs[0] = ZERO;
        let mut out = Jet::constant(taylor[0], self.order);
        let mut power = Jet::constant(ONE, self.order);
        for t in taylor.iter().take(self.order + 1).skip(1) {
            power = power.mul(&delta);
            out.add_assign(&power.scale(*t));
        }
        out
    }

    /// `self^alpha` on the principal branch.
    pub fn powf(&self, alpha: f64) -> Self {
        let u0 = self.coeffs[0];
        let mut taylor = Vec::with_capacity(self.order + 1);
        let mut binom = ONE;
        for k in 0..=self.order {
            if k > 0 {
                binom *= (alpha - (k - 1) as f64) / k as f64;
            }
            taylor.push(binom * u0.powf(alpha - k as f64));
        }
        self.compose(&taylor)
    }

    pub fn recip(&self) -> Result<Self> {
        let u0 = self.coeffs[0];
        if u0.norm() == 0.0 {
            return Err(Error::Numeric("reciprocal of a jet with zero value".into()));
        }
        let taylor: Vec<Complex64> = (0..=self.order)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                u0.powi(-(k as i32 + 1)) * sign
            })
            .collect();
        Ok(self.compose(&taylor))
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn exp(&self) -> Self {
        let e0 = self.coeffs[0].exp();
        let mut f = 1.0;
        let taylor: Vec<Complex64> = (0..=self.order)
            .map(|k| {
                if k > 0 {
                    f *= k as f64;
                }
                e0 / f
            })
            .collect();
        self.compose(&taylor)
    }

    pub fn sin(&self) -> Self {
        self.trig(false)
    }

    pub fn cos(&self) -> Self {
        self.trig(true)
    }

    fn trig(&self, cosine: bool) -> Self {
        let u0 = self.coeffs[0];
        let (s, c) = (u0.sin(), u0.cos());
        // Derivative cycle of sin: sin, cos, -sin, -cos.
        let cycle = if cosine { [c, -s, -c, s] } else { [s, c, -s, -c] };
        let mut f = 1.0;
        let taylor: Vec<Complex64> = (0..=self.order)
            .map(|k| {
                if k > 0 {
                    f *= k as f64;
                }
                cycle[k % 4] / f
            })
            .collect();
        self.compose(&taylor)
    }

    /// Lifts a scalar jet to a matrix jet `s(z)·m`.
    pub fn times_matrix(&self, m: &CMatrix) -> MatJet {
        Jet {
            order: self.order,
            coeffs: self.coeffs.iter().map(|&c| m.scale(c)).collect(),
        }
    }

    pub fn mul_matrix_jet(&self, m: &MatJet) -> MatJet {
        let order = self.order.min(m.order);
        let mut coeffs = vec![m.coeffs[0].zero_like(); coefficient_count(order)];
        for &(i, j, k) in &table().products[order] {
            coeffs[k as usize].add_scaled(&m.coeffs[j as usize], self.coeffs[i as usize]);
        }
        Jet { order, coeffs }
    }
}

impl MatJet {
    pub fn dim(&self) -> usize {
        self.coeffs[0].dim()
    }

    pub fn identity(n: usize, order: usize) -> Self {
        Jet::constant(CMatrix::identity(n), order)
    }

    pub fn zeros(n: usize, order: usize) -> Self {
        Jet::constant(CMatrix::zeros(n), order)
    }

    /// Entry `(i, j)` as a scalar jet.
    pub fn entry(&self, i: usize, j: usize) -> ScalarJet {
        Jet {
            order: self.order,
            coeffs: self.coeffs.iter().map(|m| m[(i, j)]).collect(),
        }
    }

    /// Inverse via `M⁻¹ = Σ_k (-M0⁻¹ N)^k M0⁻¹`, where `N` is the nilpotent part.
    pub fn inverse(&self) -> Result<Self> {
        let inv0 = self.coeffs[0].inverse()?;
        let mut nil = self.clone();
        nil.coeffs[0] = self.coeffs[0].zero_like();
        let step = Jet::constant(inv0.scale_re(-1.0), self.order).mul(&nil);
        let base = Jet::constant(inv0, self.order);
        let mut term = base.clone();
        let mut out = base;
        for _ in 0..self.order {
            term = step.mul(&term);
            out.add_assign(&term);
        }
        Ok(out)
    }

    pub fn exp(&self) -> Self {
        exp_scaling_squaring(self)
    }

    pub fn trace(&self, kind: crate::algebra::TraceKind) -> ScalarJet {
        Jet {
            order: self.order,
            coeffs: self.coeffs.iter().map(|m| m.trace(kind)).collect(),
        }
    }
}

impl UnitalAlgebra for MatJet {
    fn one_like(&self) -> Self {
        MatJet::identity(self.dim(), self.order)
    }
    fn product(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn sum(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn scaled(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Coordinate jets `(z1, z2, z̄1, z̄2)` expanded at `(z1, z2)`.
pub fn coordinates(z: [Complex64; 2], order: usize) -> [ScalarJet; 4] {
    [
        ScalarJet::variable(z[0], 0, order),
        ScalarJet::variable(z[1], 1, order),
        ScalarJet::variable(z[0].conj(), 2, order),
        ScalarJet::variable(z[1].conj(), 3, order),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn table_shape() {
        assert_eq!(
            (0..=MAX_ORDER).map(coefficient_count).collect::<Vec<_>>(),
            vec![1, 5, 15, 35, 70]
        );
        assert_eq!(monomial(1), [1, 0, 0, 0]);
        assert_eq!(monomial(4), [0, 0, 0, 1]);
        for i in 0..coefficient_count(MAX_ORDER) {
            assert_eq!(monomial_index(&monomial(i)), Some(i));
        }
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        let z = [c(0.3, -1.2), c(2.0, 0.5)];
        let [z1, z2, zb1, _] = coordinates(z, 3);
        // f = z1^2 z2 + z̄1
        let f = z1.mul(&z1).mul(&z2).add(&zb1);
        assert!((f.value() - (z[0] * z[0] * z[1] + z[0].conj())).norm() < 1e-14);
        let d1 = f.derivative(0);
        assert!((d1.value() - z[0] * z[1] * 2.0).norm() < 1e-14);
        let d11 = d1.derivative(0);
        assert!((d11.value() - z[1] * 2.0).norm() < 1e-14);
        assert!((f.derivative(2).value() - ONE).norm() < 1e-15);
        assert!(f.derivative(3).value().norm() < 1e-15);
    }

    #[test]
    fn modulus_squared_wirtinger() {
        let z = [c(0.7, 0.1), c(-0.4, 0.9)];
        let [z1, z2, zb1, zb2] = coordinates(z, 1);
        let r = z1.mul(&zb1).add(&z2.mul(&zb2));
        assert!((r.derivative(0).value() - z[0].conj()).norm() < 1e-15);
        assert!((r.derivative(2).value() - z[0]).norm() < 1e-15);
    }

    #[test]
    fn analytic_compositions() {
        let z = [c(0.4, 0.3), c(0.0, 0.0)];
        let [z1, ..] = coordinates(z, 4);
        let e = z1.exp();
        for k in 0..=4u8 {
            let got = e.partial(&[k, 0, 0, 0]);
            assert!((got - z[0].exp()).norm() < 1e-13, "k = {k}");
        }
        let s = z1.sin().mul(&z1.sin()).add(&z1.cos().mul(&z1.cos()));
        assert!((s.value() - ONE).norm() < 1e-14);
        assert!(s.coeffs()[1..].iter().all(|x| x.norm() < 1e-13));
        let r = z1.recip().unwrap().mul(&z1);
        assert!((r.value() - ONE).norm() < 1e-14);
        assert!(r.coeffs()[1..].iter().all(|x| x.norm() < 1e-12));
        let q = z1.sqrt().mul(&z1.sqrt()).sub(&z1);
        assert!(q.norm() < 1e-12);
    }

    #[test]
    fn adjoint_swaps_slots() {
        let z = [c(1.0, 2.0), c(-0.5, 0.25)];
        let [z1, z2, ..] = coordinates(z, 2);
        let f = z1.mul(&z2).scale(c(0.0, 1.0));
        let g = f.adjoint();
        // (i z1 z2)* = -i z̄1 z̄2
        assert!((g.value() - (z[0] * z[1] * c(0.0, 1.0)).conj()).norm() < 1e-14);
        assert!((g.partial(&[0, 0, 1, 1]) - c(0.0, -1.0)).norm() < 1e-14);
        assert!(g.derivative(0).norm() < 1e-15);
    }

    #[test]
    fn matrix_inverse_jet() {
        let z = [c(0.2, 0.1), c(-0.3, 0.4)];
        let [z1, z2, zb1, _] = coordinates(z, 3);
        let [s1, s2, s3] = crate::algebra::pauli();
        let m = MatJet::identity(2, 3)
            .add(&z1.times_matrix(&s1))
            .add(&z2.mul(&zb1).times_matrix(&s2))
            .add(&z2.times_matrix(&s3));
        let inv = m.inverse().unwrap();
        let prod = m.mul(&inv).sub(&MatJet::identity(2, 3));
        assert!(prod.norm() < 1e-13);
    }

    #[test]
    fn matrix_exponential_jet_derivative() {
        let z = [c(0.3, 0.0), c(0.0, 0.0)];
        let [z1, ..] = coordinates(z, 2);
        let [_, _, s3] = crate::algebra::pauli();
        let x = z1.times_matrix(&s3.scale(c(0.0, 1.0)));
        let e = x.exp();
        // d/dz1 exp(i z1 σ3) = i σ3 exp(i z1 σ3)
        let expected = &s3.scale(c(0.0, 1.0)) * e.value();
        assert!((e.derivative(0).value() - &expected).frobenius_norm() < 1e-13);
    }
}
