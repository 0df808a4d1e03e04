//! Connections, curvature, covariant derivative and co-derivative, currents,
//! the Lorenz gauge residual, gauge transforms and Yang-Mills residuals.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::CMatrix;
use crate::error::{Error, Result};
use crate::forms::{comp, DPart, Form, FormField, FormJet, Point, PolyCoefficient};
use crate::hodge::{star, Metric};
use crate::jet::MatJet;

/// Positions of `A1, A2, A1̄, A2̄` in a 1-form coefficient vector.
pub const A1: usize = 0;
pub const A2: usize = 1;
pub const A1B: usize = 2;
pub const A2B: usize = 3;

/// A matrix-valued connection 1-form `A = A1dz1 + A2dz2 + A1̄dz̄1 + A2̄dz̄2`.
#[derive(Clone, Debug)]
pub struct Connection {
    field: FormField,
}

impl Connection {
    pub fn new(field: FormField) -> Result<Self> {
        if field.degree() != 1 {
            return Err(Error::DegreeMismatch {
                expected: 1,
                found: field.degree(),
            });
        }
        Ok(Connection { field })
    }

    pub fn from_components(components: [FormField; 4]) -> Result<Self> {
        Self::new(FormField::from_components(1, components.into())?)
    }

    pub fn from_poly(components: [PolyCoefficient; 4]) -> Result<Self> {
        Self::new(FormField::from_poly(1, components.into())?)
    }

    pub fn zero(n: usize) -> Self {
        Connection {
            field: FormField::zero(1, n),
        }
    }

    pub fn field(&self) -> &FormField {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn jet(&self, p: &Point, order: usize) -> Result<FormJet> {
        self.field.jet(p, order)
    }

    pub fn add(&self, other: &Connection) -> Result<Connection> {
        Connection::new(self.field.add(&other.field)?)
    }

    pub fn scale(&self, c: f64) -> Connection {
        Connection {
            field: self.field.scale(Complex64::new(c, 0.0)),
        }
    }

    /// `A + t B`.
    pub fn perturbed(&self, direction: &Connection, t: f64) -> Result<Connection> {
        self.add(&direction.scale(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureMethod {
    /// The component formulas `F12 = ∂1A2 − ∂2A1 + [A1, A2]`, etc.
    Components,
    /// `dA + A∧A` through the forms module.
    Generic,
}

fn bracket(a: &MatJet, b: &MatJet) -> MatJet {
    a.mul(b).sub(&b.mul(a))
}

/// Curvature jet of order `k` from a connection jet of order `k + 1`.
pub fn curvature_jet(a: &FormJet, method: CurvatureMethod) -> Result<FormJet> {
    let order = a.order();
    if order == 0 {
        return Err(Error::JetOrder { requested: 1, max: 0 });
    }
    match method {
        CurvatureMethod::Generic => {
            let da = a.d(DPart::Full)?;
            let aa = a.truncate(order - 1).wedge(&a.truncate(order - 1))?;
            da.add(&aa)
        }
        CurvatureMethod::Components => {
            let c = a.coeffs();
            let v: Vec<MatJet> = c.iter().map(|x| x.truncate(order - 1)).collect();
            let d = |i: usize, var: usize| c[i].derivative(var);
            let (z1, z2, zb1, zb2) = (0, 1, 2, 3);
            let f12 = d(A2, z1).sub(&d(A1, z2)).add(&bracket(&v[A1], &v[A2]));
            let f1b2b = d(A2B, zb1).sub(&d(A1B, zb2)).add(&bracket(&v[A1B], &v[A2B]));
            // F_{jk̄} = ∂_j A_k̄ − ∂̄_k A_j + [A_j, A_k̄]
            let fjk = |j: usize, k: usize| {
                let (aj, akb) = (j, 2 + k);
                d(akb, j).sub(&d(aj, 2 + k)).add(&bracket(&v[aj], &v[akb]))
            };
            let _ = (zb1, zb2);
            Form::from_coeffs(2, vec![f12, fjk(0, 0), fjk(0, 1), fjk(1, 0), fjk(1, 1), f1b2b])
        }
    }
}

pub fn curvature(a: &Connection, method: CurvatureMethod) -> FormField {
    a.field.unary(2, 1, move |_, j| curvature_jet(&j, method))
}

/// `D_A T = dT + A∧T − (−1)^p T∧A`; `t` of order `k + 1` gives order `k`.
pub fn covariant_d_jet(a: &FormJet, t: &FormJet) -> Result<FormJet> {
    let order = t.order().min(a.order() + 1);
    if order == 0 {
        return Err(Error::JetOrder { requested: 1, max: 0 });
    }
    let dt = t.truncate(order).d(DPart::Full)?;
    let (a0, t0) = (a.truncate(order - 1), t.truncate(order - 1));
    let at = a0.wedge(&t0)?;
    let ta = t0.wedge(&a0)?;
    let sign = if t.degree() % 2 == 0 { 1.0 } else { -1.0 };
    dt.add(&at)?.sub(&ta.scale(Complex64::new(sign, 0.0)))
}

pub fn covariant_d(a: &Connection, t: &FormField) -> Result<FormField> {
    if t.degree() > 3 {
        return Err(Error::DegreeOverflow(t.degree() + 1));
    }
    a.field.binary(t, t.degree() + 1, 1, |_, aj, tj| covariant_d_jet(&aj, &tj))
}

/// `D_A* β = ∓★ D_{−A*} ★ β` (minus for Euclidean, plus for Minkowski).
pub fn covariant_costar_jet(a: &FormJet, beta: &FormJet, m: Metric) -> Result<FormJet> {
    if beta.degree() == 0 {
        return Err(Error::DegreeMismatch { expected: 1, found: 0 });
    }
    let minus_adj = a.adjoint().neg();
    let inner = covariant_d_jet(&minus_adj, &star(beta, m))?;
    Ok(star(&inner, m).scale(Complex64::new(m.costar_sign(), 0.0)))
}

pub fn covariant_costar(a: &Connection, beta: &FormField, m: Metric) -> Result<FormField> {
    if beta.degree() == 0 {
        return Err(Error::DegreeMismatch { expected: 1, found: 0 });
    }
    a.field.binary(beta, beta.degree() - 1, 1, move |_, aj, bj| {
        covariant_costar_jet(&aj, &bj, m)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurrentMethod {
    /// The explicit component expressions for each metric.
    ClosedForm,
    /// `D_A* F_A` by composition.
    Generic,
}

/// A current 1-form `J = J1dz1 + J2dz2 + J1̄dz̄1 + J2̄dz̄2` for one metric.
#[derive(Clone, Debug)]
pub struct CurrentForm {
    pub metric: Metric,
    pub field: FormField,
}

/// Current jet of order `k` from a connection jet of order `k + 2`.
pub fn current_jet(a: &FormJet, m: Metric, method: CurrentMethod) -> Result<FormJet> {
    let f = curvature_jet(a, CurvatureMethod::Generic)?;
    match method {
        CurrentMethod::Generic => covariant_costar_jet(a, &f, m),
        CurrentMethod::ClosedForm => closed_form_current(a, &f, m),
    }
}

fn closed_form_current(a: &FormJet, f: &FormJet, m: Metric) -> Result<FormJet> {
    let order = f.order();
    if order == 0 {
        return Err(Error::JetOrder { requested: 1, max: 0 });
    }
    let k = order - 1;
    let fc = f.coeffs();
    let d = |i: usize, var: usize| fc[i].derivative(var);
    let fv: Vec<MatJet> = fc.iter().map(|x| x.truncate(k)).collect();
    let adj: Vec<MatJet> = a.coeffs().iter().map(|x| x.truncate(k).adjoint()).collect();
    let br = |x: usize, y: usize| bracket(&adj[x], &fv[y]);
    let (d1, d2, db1, db2) = (0, 1, 2, 3);
    use comp::*;
    let sum = |terms: Vec<(f64, MatJet)>| {
        let mut it = terms.into_iter();
        let (s0, t0) = it.next().unwrap();
        let mut acc = t0.scale(Complex64::new(s0, 0.0));
        for (s, t) in it {
            acc.add_assign(&t.scale(Complex64::new(s, 0.0)));
        }
        acc
    };
    let coeffs = match m {
        Metric::Euclidean => vec![
            sum(vec![
                (2.0, d(F11B, d1)),
                (2.0, d(F12B, d2)),
                (2.0, d(F12, db2)),
                (-2.0, br(A2, F12)),
                (-2.0, br(A1B, F11B)),
                (-2.0, br(A2B, F12B)),
            ]),
            sum(vec![
                (2.0, d(F21B, d1)),
                (2.0, d(F22B, d2)),
                (-2.0, d(F12, db1)),
                (2.0, br(A1, F12)),
                (-2.0, br(A1B, F21B)),
                (-2.0, br(A2B, F22B)),
            ]),
            sum(vec![
                (2.0, d(F1B2B, d2)),
                (-2.0, d(F11B, db1)),
                (-2.0, d(F21B, db2)),
                (2.0, br(A1, F11B)),
                (2.0, br(A2, F21B)),
                (-2.0, br(A2B, F1B2B)),
            ]),
            sum(vec![
                (-2.0, d(F1B2B, d1)),
                (-2.0, d(F12B, db1)),
                (-2.0, d(F22B, db2)),
                (2.0, br(A1, F12B)),
                (2.0, br(A2, F22B)),
                (2.0, br(A1B, F1B2B)),
            ]),
        ],
        Metric::Minkowski => {
            // J′1̄ and J′2̄ share one closed-form expression.
            let bar = sum(vec![
                (2.0, d(F12B, d1)),
                (2.0, d(F1B2B, db1)),
                (-2.0, d(F22B, db2)),
                (-2.0, br(A1, F1B2B)),
                (2.0, br(A2, F22B)),
                (-2.0, br(A1B, F12B)),
            ]);
            vec![
                sum(vec![
                    (2.0, d(F12B, d2)),
                    (-2.0, d(F11B, db1)),
                    (2.0, d(F12, db2)),
                    (2.0, br(A1, F11B)),
                    (-2.0, br(A2, F12)),
                    (-2.0, br(A2B, F12B)),
                ]),
                sum(vec![
                    (2.0, d(F12, d1)),
                    (2.0, d(F22B, d2)),
                    (-2.0, d(F21B, db1)),
                    (2.0, br(A1, F21B)),
                    (-2.0, br(A1B, F12)),
                    (-2.0, br(A2B, F22B)),
                ]),
                bar.clone(),
                bar,
            ]
        }
    };
    Form::from_coeffs(1, coeffs)
}

pub fn current(a: &Connection, m: Metric, method: CurrentMethod) -> CurrentForm {
    CurrentForm {
        metric: m,
        field: a.field.unary(1, 2, move |_, j| current_jet(&j, m, method)),
    }
}

/// Jet of the closed-form `D_A* A` (order `k` from a connection of order `k + 1`).
pub fn lorenz_jet(a: &FormJet, m: Metric) -> Result<MatJet> {
    let order = a.order();
    if order == 0 {
        return Err(Error::JetOrder { requested: 1, max: 0 });
    }
    let c = a.coeffs();
    let d = |i: usize, var: usize| c[i].derivative(var);
    let v: Vec<MatJet> = c.iter().map(|x| x.truncate(order - 1)).collect();
    let adj: Vec<MatJet> = v.iter().map(MatJet::adjoint).collect();
    let two = |x: MatJet, s: f64| x.scale(Complex64::new(s, 0.0));
    Ok(match m {
        Metric::Euclidean => {
            let mut acc = d(A1, 2).add(&d(A2, 3)).add(&d(A1B, 0)).add(&d(A2B, 1));
            for i in [A1, A2, A1B, A2B] {
                acc.add_assign(&bracket(&v[i], &adj[i]));
            }
            two(acc, -2.0)
        }
        Metric::Minkowski => {
            let acc = d(A1, 0)
                .sub(&d(A2B, 1))
                .add(&d(A1B, 2))
                .sub(&d(A2, 3))
                .add(&bracket(&v[A1], &adj[A1B]))
                .sub(&bracket(&v[A2], &adj[A2]))
                .add(&bracket(&v[A1B], &adj[A1]))
                .sub(&bracket(&v[A2B], &adj[A2B]));
            two(acc, 2.0)
        }
    })
}

/// The Lorenz gauge residual `D_A* A` from its closed form, as a degree-0 field.
pub fn lorenz_residual(a: &Connection, m: Metric) -> FormField {
    a.field.unary(0, 1, move |_, j| Form::from_coeffs(0, vec![lorenz_jet(&j, m)?]))
}

/// A gauge map `g: ℂ² → GL_n(ℂ)`.
#[derive(Clone, Debug)]
pub struct GaugeMap {
    pub field: FormField,
    pub unitary: bool,
}

pub const UNITARY_TOL: f64 = 1e-10;

impl GaugeMap {
    pub fn new(field: FormField, unitary: bool) -> Result<Self> {
        if field.degree() != 0 {
            return Err(Error::DegreeMismatch {
                expected: 0,
                found: field.degree(),
            });
        }
        Ok(GaugeMap { field, unitary })
    }

    pub fn constant(g: CMatrix, unitary: bool) -> Self {
        GaugeMap {
            field: FormField::constant(Form::from_coeffs(0, vec![g]).unwrap()),
            unitary,
        }
    }

    /// Jet of `g` at `p`, with invertibility and the unitary flag checked.
    pub fn jet(&self, p: &Point, order: usize) -> Result<MatJet> {
        let g = self.field.jet(p, order)?.into_coeffs().remove(0);
        if self.unitary && !g.value().is_unitary(UNITARY_TOL) {
            return Err(Error::Numeric(format!("gauge map flagged unitary is not unitary at {p}")));
        }
        Ok(g)
    }
}

/// `A_g = g⁻¹ A g + g⁻¹ dg`.
pub fn gauge_transform(a: &Connection, g: &GaugeMap) -> Result<Connection> {
    let gauge = g.clone();
    let field = a.field.binary(&g.field, 1, 1, move |p, aj, _| {
        let order = aj.order() - 1;
        let gj = gauge.jet(p, order + 1)?;
        let ginv = gj.inverse().map_err(|_| Error::Singular { at: Some(*p) })?;
        let dg = Form::from_coeffs(0, vec![gj.clone()])?.d(DPart::Full)?;
        let (gk, gi) = (gj.truncate(order), ginv.truncate(order));
        let coeffs = aj
            .coeffs()
            .iter()
            .zip(dg.coeffs())
            .map(|(ac, dgc)| gi.mul(&ac.truncate(order)).mul(&gk).add(&gi.mul(dgc)))
            .collect();
        Form::from_coeffs(1, coeffs)
    })?;
    Connection::new(field)
}

/// Pointwise `(‖D_A F_A‖, ‖D_A* F_A − J‖)` with `J = 0` when absent.
pub fn ym_residuals(a: &Connection, j: Option<&FormField>, m: Metric, p: &Point) -> Result<(f64, f64)> {
    let aj = a.jet(p, 2)?;
    let f = curvature_jet(&aj, CurvatureMethod::Generic)?;
    let bianchi = covariant_d_jet(&aj, &f)?.value().norm();
    let mut eq = covariant_costar_jet(&aj, &f, m)?.value();
    if let Some(j) = j {
        eq = eq.sub(&j.value(p)?)?;
    }
    Ok((bianchi, eq.norm()))
}

/// Seeded points with `|z_i| <= radius` for each coordinate.
pub fn sample_polydisk(seed: u64, count: usize, radius: f64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut disk = move || loop {
        let (x, y): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if x * x + y * y <= 1.0 {
            return Complex64::new(x * radius, y * radius);
        }
    };
    (0..count).map(|_| Point::new(disk(), disk())).collect()
}

/// Seeded points with `rmin <= |z| <= rmax`, uniform in direction and radius.
pub fn sample_shell(seed: u64, count: usize, rmin: f64, rmax: f64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(0.1..=1.0).contains(&n) {
            continue;
        }
        let r = rng.gen_range(rmin..=rmax);
        out.push(Point::from_real(x.map(|v| v * r / n)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli, ONE, ZERO};
    use crate::forms::FormValue;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_poly(rng: &mut ChaCha8Rng, n: usize, max_deg: u32) -> PolyCoefficient {
        let mut terms = Vec::new();
        for _ in 0..3 {
            let powers = std::array::from_fn(|_| rng.gen_range(0..=max_deg / 2));
            let m = CMatrix::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            terms.push(crate::forms::PolyTerm { powers, matrix: m });
        }
        PolyCoefficient::new(terms).unwrap()
    }

    fn random_connection(seed: u64, n: usize) -> Connection {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Connection::from_poly(std::array::from_fn(|_| random_poly(&mut rng, n, 3))).unwrap()
    }

    #[test]
    fn curvature_methods_agree() {
        let a = random_connection(1, 2);
        let g = curvature(&a, CurvatureMethod::Generic);
        let k = curvature(&a, CurvatureMethod::Components);
        for p in sample_polydisk(3, 20, 2.0) {
            let diff = g.value(&p).unwrap().sub(&k.value(&p).unwrap()).unwrap().norm();
            assert!(diff < 1e-11, "{diff}");
        }
    }

    #[test]
    fn constant_commuting_connection_is_flat() {
        let [_, _, s3] = pauli();
        let comps = [s3.clone(), s3.scale(c(0., 2.)), s3.scale(c(1., 1.)), CMatrix::identity(2)]
            .map(PolyCoefficient::constant);
        let a = Connection::from_poly(comps).unwrap();
        let f = curvature(&a, CurvatureMethod::Generic).value(&Point::origin()).unwrap();
        assert!(f.norm() < 1e-15);
    }

    #[test]
    fn bianchi_for_polynomial_connection() {
        let a = random_connection(7, 2);
        for p in sample_polydisk(5, 10, 2.0) {
            let (b, _) = ym_residuals(&a, None, Metric::Euclidean, &p).unwrap();
            assert!(b < 1e-10, "{b}");
        }
    }

    #[test]
    fn zero_connection_reduces_to_d() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = FormField::from_poly(1, (0..4).map(|_| random_poly(&mut rng, 2, 2)).collect()).unwrap();
        let z = Connection::zero(2);
        let da = covariant_d(&z, &t).unwrap();
        let d = t.d(DPart::Full).unwrap();
        let p = Point::new(c(0.3, 0.2), c(-0.1, 0.5));
        assert!(da.value(&p).unwrap().sub(&d.value(&p).unwrap()).unwrap().norm() < 1e-14);
    }

    #[test]
    fn constant_gauge_commuting_is_identity() {
        let [_, _, s3] = pauli();
        let comps = [s3.clone(), s3.scale(c(0., 1.)), s3.clone(), s3.clone()].map(PolyCoefficient::constant);
        let a = Connection::from_poly(comps).unwrap();
        let g = GaugeMap::constant(CMatrix::diag(&[c(0., 1.), c(0., -1.)]), true);
        let ag = gauge_transform(&a, &g).unwrap();
        let p = Point::new(c(1.0, 0.0), ZERO);
        let diff = ag.field().value(&p).unwrap().sub(&a.field().value(&p).unwrap()).unwrap();
        assert!(diff.norm() < 1e-14);
    }

    #[test]
    fn singular_gauge_reports_location() {
        let a = Connection::zero(2);
        let g = GaugeMap::constant(CMatrix::zeros(2), false);
        let err = gauge_transform(&a, &g).unwrap().field().value(&Point::origin()).unwrap_err();
        assert!(matches!(err, Error::Singular { at: Some(_) }));
    }

    #[test]
    fn euclidean_closed_form_current_matches_composition() {
        let a = random_connection(4, 2);
        let g = current(&a, Metric::Euclidean, CurrentMethod::Generic).field;
        let k = current(&a, Metric::Euclidean, CurrentMethod::ClosedForm).field;
        for p in sample_polydisk(8, 10, 2.0) {
            let diff = g.value(&p).unwrap().sub(&k.value(&p).unwrap()).unwrap().norm();
            assert!(diff < 1e-10, "{diff}");
        }
    }

    #[test]
    fn lorenz_closed_form_is_costar_of_a() {
        let a = random_connection(5, 2);
        let p = Point::new(c(0.4, -0.2), c(0.1, 0.3));
        let aj = a.jet(&p, 1).unwrap();
        let generic = covariant_costar_jet(&aj, &aj, Metric::Euclidean).unwrap().value();
        let closed = lorenz_residual(&a, Metric::Euclidean).value(&p).unwrap();
        assert!(generic.sub(&closed).unwrap().norm() < 1e-12);
        // Minkowski closed form carries the opposite overall sign
        let generic = covariant_costar_jet(&aj, &aj, Metric::Minkowski).unwrap().value();
        let closed = lorenz_residual(&a, Metric::Minkowski).value(&p).unwrap();
        assert!(generic.add(&closed).unwrap().norm() < 1e-12);
    }

    #[test]
    fn scalar_curvature_is_da() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let comps: [PolyCoefficient; 4] = std::array::from_fn(|_| random_poly(&mut rng, 1, 3));
        let a = Connection::from_poly(comps).unwrap();
        let f = curvature(&a, CurvatureMethod::Generic);
        let da = a.field().d(DPart::Full).unwrap();
        let p = Point::new(c(0.5, -0.5), c(0.2, 0.9));
        let diff: FormValue = f.value(&p).unwrap().sub(&da.value(&p).unwrap()).unwrap();
        assert!(diff.norm() < 1e-12);
        let _ = ONE;
    }
}

