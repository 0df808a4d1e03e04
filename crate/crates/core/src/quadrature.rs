//! Tensor-product quadrature over boxes in ℝ⁴.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::ZERO;
use crate::error::{Error, Result};
use crate::forms::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    #[default]
    Gauss,
    Midpoint,
}

/// Integration box `center + [−R, R]⁴` with `nodes_per_axis` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_nodes")]
    pub nodes_per_axis: usize,
    #[serde(default)]
    pub rule: Rule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 4]>,
}

fn default_radius() -> f64 {
    6.0
}

fn default_nodes() -> usize {
    16
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            radius: default_radius(),
            nodes_per_axis: default_nodes(),
            rule: Rule::Gauss,
            center: None,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

impl QuadratureSpec {
    pub fn new(radius: f64, nodes_per_axis: usize) -> Self {
        QuadratureSpec {
            radius,
            nodes_per_axis,
            ..Default::default()
        }
    }

    pub fn centered(mut self, center: [f64; 4]) -> Self {
        self.center = Some(center);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "quadrature radius must be positive, got {}",
                self.radius
            )));
        }
        if self.nodes_per_axis == 0 || self.nodes_per_axis > 256 {
            return Err(Error::InvalidInput(format!(
                "nodes_per_axis must be in 1..=256, got {}",
                self.nodes_per_axis
            )));
        }
        Ok(())
    }

    /// Nodes and weights on `[−R, R]` (before centering).
    pub fn nodes_1d(&self) -> (Vec<f64>, Vec<f64>) {
        let (n, r) = (self.nodes_per_axis, self.radius);
        match self.rule {
            Rule::Gauss => {
                let (x, w) = gauss_legendre(n);
                (x.iter().map(|t| t * r).collect(), w.iter().map(|t| t * r).collect())
            }
            Rule::Midpoint => {
                let h = 2.0 * r / n as f64;
                ((0..n).map(|i| -r + (i as f64 + 0.5) * h).collect(), vec![h; n])
            }
        }
    }

    /// Integrates `N` complex-valued integrands at once. Nodes are evaluated
    /// in parallel; partial sums are combined in a fixed order so the result
    /// does not depend on scheduling.
    pub fn integrate<const N: usize>(
        &self,
        f: impl Fn(&Point) -> Result<[Complex64; N]> + Sync,
    ) -> Result<[Complex64; N]> {
        self.validate()?;
        let (x, w) = self.nodes_1d();
        let c = self.center.unwrap_or([0.0; 4]);
        let n = x.len();
        let partials: Vec<Result<[Complex64; N]>> = (0..n * n)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / n, ij % n);
                let mut acc = [ZERO; N];
                for k in 0..n {
                    for l in 0..n {
                        let p = Point::from_real([c[0] + x[i], c[1] + x[j], c[2] + x[k], c[3] + x[l]]);
                        let v = f(&p)?;
                        let weight = w[i] * w[j] * w[k] * w[l];
                        for (a, vi) in acc.iter_mut().zip(v) {
                            if !(vi.re.is_finite() && vi.im.is_finite()) {
                                return Err(Error::NotEvaluable {
                                    at: p,
                                    reason: "non-finite integrand".into(),
                                });
                            }
                            *a += vi * weight;
                        }
                    }
                }
                Ok(acc)
            })
            .collect();
        let mut total = [ZERO; N];
        for part in partials {
            for (t, v) in total.iter_mut().zip(part?) {
                *t += v;
            }
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n = {n}");
            // exact for degree 2n − 1
            let deg = 2 * n - 2;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((got - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn gaussian_integral() {
        let q = QuadratureSpec::new(6.0, 40);
        let [v] = q
            .integrate(|p| Ok([Complex64::new((-p.norm_sq()).exp(), 0.0)]))
            .unwrap();
        // ∫ e^{-|x|²} d⁴x = π²
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((v.re - pi2).abs() < 1e-10);
    }

    #[test]
    fn midpoint_and_center() {
        let q = QuadratureSpec {
            rule: Rule::Midpoint,
            ..QuadratureSpec::new(1.0, 8)
        }
        .centered([3.0, 0.0, 0.0, 0.0]);
        let [v] = q.integrate(|p| Ok([Complex64::new(p.real()[0], 0.0)])).unwrap();
        // mean of x0 over the box times its volume 2⁴
        assert!((v.re - 48.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonfinite() {
        let q = QuadratureSpec::new(1.0, 2);
        let err = q.integrate(|_| Ok([Complex64::new(f64::NAN, 0.0)])).unwrap_err();
        assert!(matches!(err, Error::NotEvaluable { .. }));
        assert!(QuadratureSpec::new(-1.0, 4).validate().is_err());
    }
}
