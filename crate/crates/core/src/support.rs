//! Smooth compactly supported fields: `exp(1/(|x − c|² − R²))` inside the
//! ball, zero outside.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forms::{DerivativeStrategy, Form, FormField, Point};
use crate::jet::{coordinates, MatJet, ScalarJet};

/// Jet of the bump at `p` (all derivatives vanish outside the open ball).
pub fn bump_jet(p: &Point, center: [f64; 4], radius: f64, order: usize) -> Result<ScalarJet> {
    let x = p.real();
    let r2: f64 = x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
    if r2 >= radius * radius {
        return Ok(ScalarJet::constant(Complex64::new(0.0, 0.0), order));
    }
    let c = Point::from_real(center);
    let [z1, z2, zb1, zb2] = coordinates(p.z, order);
    let w1 = z1.sub(&ScalarJet::constant(c.z[0], order));
    let w2 = z2.sub(&ScalarJet::constant(c.z[1], order));
    let wb1 = zb1.sub(&ScalarJet::constant(c.z[0].conj(), order));
    let wb2 = zb2.sub(&ScalarJet::constant(c.z[1].conj(), order));
    let s = w1.mul(&wb1).add(&w2.mul(&wb2));
    let denom = s.sub(&ScalarJet::constant(Complex64::new(radius * radius, 0.0), order));
    Ok(denom.recip().map_err(|_| Error::Singular { at: Some(*p) })?.exp())
}

/// Scalar bump times the identity of `M_n(ℂ)`, as a degree-0 field.
pub fn bump_field(center: [f64; 4], radius: f64, n: usize) -> FormField {
    let id = crate::algebra::CMatrix::identity(n);
    FormField::new(0, n, DerivativeStrategy::ClosedForm, move |p, k| {
        let b: MatJet = bump_jet(p, center, radius, k)?.times_matrix(&id);
        Form::from_coeffs(0, vec![b])
    })
}

/// `bump ∧ field`: the field cut off to the ball.
pub fn localized(field: &FormField, center: [f64; 4], radius: f64) -> Result<FormField> {
    bump_field(center, radius, field.dim()).wedge(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_vanishes_outside_and_is_smooth_inside() {
        let c = [1.0, 0.0, 0.0, 0.0];
        let p = Point::from_real([3.0, 0.0, 0.0, 0.0]);
        assert!(bump_jet(&p, c, 1.0, 2).unwrap().norm() == 0.0);
        let q = Point::from_real([1.2, 0.1, 0.0, -0.3]);
        let j = bump_jet(&q, c, 1.0, 1).unwrap();
        let r2: f64 = 0.04 + 0.01 + 0.09;
        assert!((j.value().re - (1.0f64 / (r2 - 1.0)).exp()).abs() < 1e-15);
        // ∂/∂x0 via Wirtinger: ∂x0 = ∂1 + ∂̄1
        let h = 1e-6;
        let fd = ((1.0f64 / (0.04 + 2.0 * 0.2 * h + h * h + 0.1 - 1.0)).exp()
            - (1.0f64 / (0.04 - 2.0 * 0.2 * h + h * h + 0.1 - 1.0)).exp())
            / (2.0 * h);
        let d0 = j.coeffs()[1] + j.coeffs()[3];
        assert!((d0.re - fd).abs() < 1e-8, "{d0} {fd}");
    }
}
