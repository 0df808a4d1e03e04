//! The matrix C*-algebra M_n(C): adjoint, commutator, trace functionals and the
//! trace inner product `<a, b> = Tr(a b*)`.
//!
//! Matrices are small (n <= 4 in practice), stored row-major inline.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub const I: Complex64 = Complex64::new(0.0, 1.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative tolerance used by [`CMatrix::is_normal`] when callers have no
/// better estimate.
pub const DEFAULT_NORMAL_TOL: f64 = 1e-10;

/// Which trace functional to use.
///
/// `Matrix` is the ordinary sum of diagonal entries (`Tr(I) = n`); `State`
/// divides by `n` so that `Tr(I) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    #[default]
    Matrix,
    State,
}

/// A square complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: SmallVec<[Complex64; 16]>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        CMatrix {
            n,
            data: SmallVec::from_elem(ZERO, n * n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, ONE)
    }

    pub fn scalar(n: usize, c: Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = c;
        }
        m
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &c) in entries.iter().enumerate() {
            m[(i, i)] = c;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from rows; every row must have the same length as the
    /// number of rows.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty matrix".into()));
        }
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    /// Convenience constructor from `(re, im)` pairs, row-major.
    pub fn from_pairs(n: usize, pairs: &[(f64, f64)]) -> Self {
        assert_eq!(pairs.len(), n * n);
        Self::from_fn(n, |i, j| {
            let (re, im) = pairs[i * n + j];
            Complex64::new(re, im)
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.data[j * self.n + i].conj())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// `self += a * b`, the inner kernel of jet and form products.
    #[inline]
    pub fn add_product(&mut self, a: &CMatrix, b: &CMatrix) {
        let n = self.n;
        debug_assert!(a.n == n && b.n == n);
        if n == 2 {
            let (a, b) = (&a.data, &b.data);
            let d = &mut self.data;
            d[0] += a[0] * b[0] + a[1] * b[2];
            d[1] += a[0] * b[1] + a[1] * b[3];
            d[2] += a[2] * b[0] + a[3] * b[2];
            d[3] += a[2] * b[1] + a[3] * b[3];
            return;
        }
        for i in 0..n {
            for k in 0..n {
                let aik = a.data[i * n + k];
                if aik == ZERO {
                    continue;
                }
                for j in 0..n {
                    self.data[i * n + j] += aik * b.data[k * n + j];
                }
            }
        }
    }

    /// `self += c * a`.
    #[inline]
    pub fn add_scaled(&mut self, a: &CMatrix, c: Complex64) {
        debug_assert_eq!(self.n, a.n);
        for (x, y) in self.data.iter_mut().zip(a.data.iter()) {
            *x += *y * c;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self, kind: TraceKind) -> Complex64 {
        let s: Complex64 = (0..self.n).map(|i| self.data[i * self.n + i]).sum();
        match kind {
            TraceKind::Matrix => s,
            TraceKind::State => s / self.n as f64,
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self - &self.adjoint()).frobenius_norm() <= tol * self.frobenius_norm().max(1.0)
    }

    pub fn is_skew_hermitian(&self, tol: f64) -> bool {
        (self + &self.adjoint()).frobenius_norm() <= tol * self.frobenius_norm().max(1.0)
    }

    /// `||a a* - a* a||_F <= tol * max(1, ||a||_F^2)`.
    pub fn is_normal(&self, tol: f64) -> bool {
        let adj = self.adjoint();
        let gap = (&(self * &adj) - &(&adj * self)).frobenius_norm();
        gap <= tol * self.frobenius_norm().powi(2).max(1.0)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (&(&self.adjoint() * self) - &Self::identity(self.n)).frobenius_norm() <= tol
    }

    /// LU with partial pivoting; returns the permutation parity, the packed
    /// factors and the pivot row order.
    fn lu(&self) -> Option<(f64, Vec<Complex64>, Vec<usize>)> {
        let n = self.n;
        let mut a: Vec<Complex64> = self.data.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = 1.0;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let (piv, mag) = (col..n)
                .map(|r| (r, a[r * n + col].norm()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if mag <= 1e-14 * scale {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(piv * n + j, col * n + j);
                }
                perm.swap(piv, col);
                parity = -parity;
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                a[r * n + col] = f;
                for j in col + 1..n {
                    let v = a[col * n + j];
                    a[r * n + j] -= f * v;
                }
            }
        }
        Some((parity, a, perm))
    }

    pub fn det(&self) -> Complex64 {
        match self.lu() {
            None => ZERO,
            Some((parity, a, _)) => {
                let n = self.n;
                (0..n).map(|i| a[i * n + i]).product::<Complex64>() * parity
            }
        }
    }

    /// Solves `self * x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let (_, a, perm) = self.lu().ok_or(Error::Singular { at: None })?;
        let mut y: Vec<Complex64> = perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let v = y[k];
                y[i] -= a[i * n + k] * v;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let v = y[k];
                y[i] -= a[i * n + k] * v;
            }
            y[i] /= a[i * n + i];
        }
        Ok(y)
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let mut inv = Self::zeros(n);
        for j in 0..n {
            let mut e = vec![ZERO; n];
            e[j] = ONE;
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    /// Matrix exponential by scaling and squaring with a Taylor kernel.
    pub fn expm(&self) -> Self {
        exp_scaling_squaring(self)
    }

    fn check_same_dim(&self, other: &CMatrix) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }
}

/// `[a, b] = ab - ba`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    a.check_same_dim(b)?;
    Ok(bracket(a, b))
}

/// Unchecked commutator for internal use where dimensions are known to agree.
#[inline]
pub(crate) fn bracket(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = a * b;
    out -= &(b * a);
    out
}

pub fn trace(a: &CMatrix, kind: TraceKind) -> Complex64 {
    a.trace(kind)
}

/// `<a, b> = Tr(a b*)`: linear in `a`, conjugate-linear in `b`.
pub fn inner(a: &CMatrix, b: &CMatrix, kind: TraceKind) -> Result<Complex64> {
    a.check_same_dim(b)?;
    Ok((a * &b.adjoint()).trace(kind))
}

pub fn is_normal(a: &CMatrix, tol: f64) -> bool {
    a.is_normal(tol)
}

/// The Pauli matrices.
pub fn pauli() -> [CMatrix; 3] {
    let (o, z, i) = (ONE, ZERO, I);
    [
        CMatrix::from_rows(&[vec![z, o], vec![o, z]]).unwrap(),
        CMatrix::from_rows(&[vec![z, -i], vec![i, z]]).unwrap(),
        CMatrix::from_rows(&[vec![o, z], vec![z, -o]]).unwrap(),
    ]
}

/// Minimal algebra interface shared by matrices and matrix jets so both can
/// be exponentiated by the same routine.
pub(crate) trait UnitalAlgebra: Clone {
    fn one_like(&self) -> Self;
    fn product(&self, other: &Self) -> Self;
    fn sum(&self, other: &Self) -> Self;
    fn scaled(&self, c: f64) -> Self;
    fn magnitude(&self) -> f64;
}

impl UnitalAlgebra for CMatrix {
    fn one_like(&self) -> Self {
        CMatrix::identity(self.n)
    }
    fn product(&self, other: &Self) -> Self {
        self * other
    }
    fn sum(&self, other: &Self) -> Self {
        self + other
    }
    fn scaled(&self, c: f64) -> Self {
        self.scale_re(c)
    }
    fn magnitude(&self) -> f64 {
        self.frobenius_norm()
    }
}

pub(crate) fn exp_scaling_squaring<T: UnitalAlgebra>(a: &T) -> T {
    let norm = a.magnitude();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = a.scaled(0.5f64.powi(squarings));
    let mut sum = x.one_like();
    let mut term = x.one_like();
    for k in 1..=30 {
        term = term.product(&x).scaled(1.0 / k as f64);
        sum = sum.sum(&term);
        if term.magnitude() <= 1e-18 * sum.magnitude() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.product(&sum);
    }
    sum
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        let mut out = CMatrix::zeros(self.n);
        out.add_product(self, rhs);
        out
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_re(-1.0)
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        for (x, y) in self.data.iter_mut().zip(rhs.data.iter()) {
            *x += *y;
        }
    }
}

impl SubAssign<&CMatrix> for CMatrix {
    fn sub_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        for (x, y) in self.data.iter_mut().zip(rhs.data.iter()) {
            *x -= *y;
        }
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.n {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.n {
                if j > 0 {
                    write!(f, ", ")?;
                }
                let c = self[(i, j)];
                write!(f, "{:.6}{:+.6}i", c.re, c.im)?;
            }
        }
        write!(f, "]")
    }
}

/// Serialized as nested arrays of `[re, im]` pairs.
impl Serialize for CMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| [self[(i, j)].re, self[(i, j)].im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<Complex64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect();
        CMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn b1() -> CMatrix {
        CMatrix::from_rows(&[vec![c(-1., 0.), c(1., 0.)], vec![c(0., -1.), c(0., -1.)]]).unwrap()
    }

    fn b2() -> CMatrix {
        CMatrix::from_rows(&[vec![c(1., 0.), c(0., -1.)], vec![c(-1., 0.), c(0., -1.)]]).unwrap()
    }

    #[test]
    fn pauli_commutator() {
        let [s1, s2, s3] = pauli();
        let got = commutator(&s1, &s2).unwrap();
        assert!((&got - &s3.scale(c(0., 2.))).frobenius_norm() < 1e-15);
        assert!(commutator(&s1, &s1).unwrap().is_zero());
    }

    #[test]
    fn dirac_b1_commutes_with_adjoint() {
        let b = b1();
        assert!(commutator(&b, &b.adjoint()).unwrap().frobenius_norm() < 1e-15);
        let bb = &b * &b.adjoint();
        assert!((&bb - &CMatrix::scalar(2, c(2., 0.))).frobenius_norm() < 1e-15);
    }

    #[test]
    fn commutator_dimension_mismatch() {
        let err = commutator(&CMatrix::identity(2), &CMatrix::identity(3)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 3 });
    }

    #[test]
    fn traces() {
        let m = CMatrix::scalar(2, c(3., 0.));
        assert_eq!(m.trace(TraceKind::Matrix), c(6., 0.));
        assert_eq!(m.trace(TraceKind::State), c(3., 0.));
    }

    #[test]
    fn inner_products() {
        let [s1, s2, _] = pauli();
        assert_eq!(inner(&s1, &s1, TraceKind::Matrix).unwrap(), c(2., 0.));
        assert!(inner(&s1, &s2, TraceKind::Matrix).unwrap().norm() < 1e-15);
        let z = CMatrix::zeros(2);
        assert_eq!(inner(&z, &z, TraceKind::State).unwrap(), ZERO);
    }

    #[test]
    fn normality() {
        let nil = CMatrix::from_rows(&[vec![ZERO, ONE], vec![ZERO, ZERO]]).unwrap();
        assert!(!nil.is_normal(DEFAULT_NORMAL_TOL));
        assert!(b2().is_normal(DEFAULT_NORMAL_TOL));
        let u = CMatrix::from_rows(&[vec![ZERO, I], vec![I, ZERO]]).unwrap();
        assert!(u.is_unitary(1e-15) && u.is_normal(DEFAULT_NORMAL_TOL));
    }

    #[test]
    fn inverse_and_det() {
        let a = b1();
        let inv = a.inverse().unwrap();
        assert!((&(&a * &inv) - &CMatrix::identity(2)).frobenius_norm() < 1e-14);
        // det [[-1,1],[-i,-i]] = i + i = 2i
        assert!((a.det() - c(0., 2.)).norm() < 1e-14);
        let singular = CMatrix::from_pairs(2, &[(1., 0.), (2., 0.), (2., 0.), (4., 0.)]);
        assert!(matches!(singular.inverse(), Err(Error::Singular { .. })));
    }

    #[test]
    fn expm_of_skew_hermitian_is_unitary() {
        let [s1, s2, s3] = pauli();
        let x = &(&s1.scale(c(0., 0.7)) + &s2.scale(c(0., -1.3))) + &s3.scale(c(0., 2.9));
        let u = x.expm();
        assert!(u.is_unitary(1e-13));
        // exp(i t sigma3) = diag(e^{it}, e^{-it})
        let d = s3.scale(c(0., 0.4)).expm();
        assert!((d[(0, 0)] - c(0., 0.4).exp()).norm() < 1e-15);
        assert!((d[(1, 1)] - c(0., -0.4).exp()).norm() < 1e-15);
    }

    #[test]
    fn serde_pairs() {
        let m = b1();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[[-1.0,0.0],[1.0,0.0]],[[-0.0,-1.0],[-0.0,-1.0]]]".replace("-0.0,-1.0", "0.0,-1.0"));
        let back: CMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<CMatrix>("[[[1,0]],[[0,0]]]").is_err());
    }
}
