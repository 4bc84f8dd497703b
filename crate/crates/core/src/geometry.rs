//! Metric geometry on coordinate patches of surfaces.
//!
//! Everything here is a pure function of its inputs. Fields are stored as
//! shared closures so they can be cloned cheaply and evaluated from many
//! threads at once.

use std::fmt;
use std::sync::Arc;

use crate::diff::{self, CURVATURE_STEP, FIRST_DERIVATIVE_STEP};
use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];
/// `gamma[k][i][j]` is the coefficient of `∂_k` in `∇_{∂_i} ∂_j`.
pub type Christoffel = [[[f64; 2]; 2]; 2];
/// `r[l][k][i][j]` is the `∂_l` component of `R(∂_i, ∂_j) ∂_k`.
pub type Riemann = [[[[f64; 2]; 2]; 2]; 2];

pub type FieldFn<T> = Arc<dyn Fn(Point2) -> T + Send + Sync>;

/// Determinants below this are treated as singular.
pub const SINGULAR_DET: f64 = 1e-14;

/// A point of a coordinate chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub u1: f64,
    pub u2: f64,
}

impl Point2 {
    pub const fn new(u1: f64, u2: f64) -> Self {
        Self { u1, u2 }
    }

    pub fn coord(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.u1
        } else {
            self.u2
        }
    }

    pub fn shifted(&self, axis: usize, d: f64) -> Self {
        if axis == 0 {
            Self::new(self.u1 + d, self.u2)
        } else {
            Self::new(self.u1, self.u2 + d)
        }
    }

    pub fn offset(&self, v: Vec2) -> Self {
        Self::new(self.u1 + v[0], self.u2 + v[1])
    }

    pub fn to_array(self) -> Vec2 {
        [self.u1, self.u2]
    }

    pub fn distance(&self, other: Point2) -> f64 {
        (self.u1 - other.u1).hypot(self.u2 - other.u2)
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }
}

impl From<Vec2> for Point2 {
    fn from(v: Vec2) -> Self {
        Self::new(v[0], v[1])
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u1, self.u2)
    }
}

pub(crate) fn outside(p: Point2) -> Error {
    Error::OutsideDomain { u1: p.u1, u2: p.u2 }
}

// ---------------------------------------------------------------------------
// 2x2 linear algebra
// ---------------------------------------------------------------------------

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Closed-form inverse; rejects `|det| < SINGULAR_DET`.
pub fn inv2(m: &Mat2) -> Result<Mat2> {
    let d = det2(m);
    if !d.is_finite() || d.abs() < SINGULAR_DET {
        return Err(Error::SingularMetric(d));
    }
    Ok([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

pub fn mat_vec(m: &Mat2, v: Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

/// Singular values of a 2x2 matrix, largest first.
pub fn singular_values(m: &Mat2) -> Vec2 {
    let ata = mat_mul(&transpose(m), m);
    let tr = ata[0][0] + ata[1][1];
    let det = det2(&ata);
    let disc = ((tr * tr) / 4.0 - det).max(0.0).sqrt();
    let l1 = tr / 2.0 + disc;
    let l2 = (tr / 2.0 - disc).max(0.0);
    [l1.sqrt(), l2.sqrt()]
}

pub(crate) fn flatten_christoffel(g: &Christoffel) -> [f64; 8] {
    let mut out = [0.0; 8];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                out[4 * k + 2 * i + j] = g[k][i][j];
            }
        }
    }
    out
}

pub(crate) fn unflatten_christoffel(v: &[f64; 8]) -> Christoffel {
    let mut out = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                out[k][i][j] = v[4 * k + 2 * i + j];
            }
        }
    }
    out
}

fn flatten_mat(m: &Mat2) -> [f64; 4] {
    [m[0][0], m[0][1], m[1][0], m[1][1]]
}

// ---------------------------------------------------------------------------
// Fields
// ---------------------------------------------------------------------------

/// A smooth real function on a chart, optionally with its analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    eval: FieldFn<f64>,
    grad: Option<FieldFn<Vec2>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("analytic_gradient", &self.grad.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new(name: impl Into<String>, eval: impl Fn(Point2) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), eval: Arc::new(eval), grad: None }
    }

    pub fn with_gradient(mut self, grad: impl Fn(Point2) -> Vec2 + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c).with_gradient(|_| [0.0, 0.0])
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, p: Point2) -> f64 {
        (self.eval)(p)
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    /// Analytic gradient when supplied, central differences otherwise.
    pub fn gradient(&self, p: Point2, domain: &dyn Fn(Point2) -> bool) -> Result<Vec2> {
        match &self.grad {
            Some(g) => Ok(g(p)),
            None => self.numeric_gradient(p, domain),
        }
    }

    pub fn numeric_gradient(&self, p: Point2, domain: &dyn Fn(Point2) -> bool) -> Result<Vec2> {
        let f = |q: Point2| Ok((self.eval)(q));
        let mut out = [0.0; 2];
        for (axis, o) in out.iter_mut().enumerate() {
            let h = diff::relative_step(p, axis, FIRST_DERIVATIVE_STEP);
            *o = diff::partial_scalar(f, domain, p, axis, h)?;
        }
        Ok(out)
    }

    /// Largest disagreement between the analytic gradient and finite
    /// differences over `points`; zero when no analytic gradient is attached.
    pub fn gradient_mismatch(&self, points: &[Point2], domain: &dyn Fn(Point2) -> bool) -> Result<f64> {
        let Some(g) = &self.grad else { return Ok(0.0) };
        let mut worst: f64 = 0.0;
        for &p in points {
            let a = g(p);
            let n = self.numeric_gradient(p, domain)?;
            worst = worst.max((a[0] - n[0]).abs()).max((a[1] - n[1]).abs());
        }
        Ok(worst)
    }
}

/// Vector field given by its coordinate components `(X^1, X^2)`.
#[derive(Clone)]
pub struct VectorField {
    name: String,
    comps: FieldFn<Vec2>,
}

/// 1-form given by its coordinate components `(ρ_1, ρ_2)`.
#[derive(Clone)]
pub struct OneForm {
    name: String,
    comps: FieldFn<Vec2>,
}

macro_rules! component_field {
    ($ty:ident) => {
        impl $ty {
            pub fn new(name: impl Into<String>, comps: impl Fn(Point2) -> Vec2 + Send + Sync + 'static) -> Self {
                Self { name: name.into(), comps: Arc::new(comps) }
            }

            pub fn zero() -> Self {
                Self::new("0", |_| [0.0, 0.0])
            }

            pub fn name(&self) -> &str {
                &self.name
            }

            pub fn at(&self, p: Point2) -> Vec2 {
                (self.comps)(p)
            }

            /// Components at `p`, rejecting non-finite values.
            pub fn try_at(&self, p: Point2) -> Result<Vec2> {
                let v = (self.comps)(p);
                if v[0].is_finite() && v[1].is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite(format!("{} at {}", self.name, p)))
                }
            }
        }

        impl fmt::Debug for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.debug_struct(stringify!($ty)).field("name", &self.name).finish()
            }
        }
    };
}

component_field!(VectorField);
component_field!(OneForm);

// ---------------------------------------------------------------------------
// Metric
// ---------------------------------------------------------------------------

/// Field of symmetric positive-definite 2x2 matrices on a chart domain.
#[derive(Clone)]
pub struct Metric2D {
    name: String,
    g: FieldFn<Mat2>,
    domain: FieldFn<bool>,
    /// `partials(p)[k]` is `∂_k γ` at `p`.
    partials: Option<FieldFn<[Mat2; 2]>>,
}

impl fmt::Debug for Metric2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Metric2D")
            .field("name", &self.name)
            .field("analytic_partials", &self.partials.is_some())
            .finish()
    }
}

impl Metric2D {
    pub fn new(
        name: impl Into<String>,
        g: impl Fn(Point2) -> Mat2 + Send + Sync + 'static,
        domain: impl Fn(Point2) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), g: Arc::new(g), domain: Arc::new(domain), partials: None }
    }

    pub fn with_partials(mut self, partials: impl Fn(Point2) -> [Mat2; 2] + Send + Sync + 'static) -> Self {
        self.partials = Some(Arc::new(partials));
        self
    }

    /// Canonical inner product of the plane.
    pub fn euclidean() -> Self {
        Self::new("euclidean", |_| IDENTITY, |p| p.is_finite()).with_partials(|_| [[[0.0; 2]; 2]; 2])
    }

    /// Poincaré upper half-plane, `γ = δ / (u²)²`.
    pub fn hyperbolic() -> Self {
        Self::new(
            "hyperbolic",
            |p| {
                let s = 1.0 / (p.u2 * p.u2);
                [[s, 0.0], [0.0, s]]
            },
            |p| p.is_finite() && p.u2 > 0.0,
        )
        .with_partials(|p| {
            let d = -2.0 / (p.u2 * p.u2 * p.u2);
            [[[0.0; 2]; 2], [[d, 0.0], [0.0, d]]]
        })
    }

    /// Conformally flat metric `e^{2σ} δ` on the whole plane.
    pub fn conformal(sigma: ScalarField) -> Self {
        let name = format!("conformal(σ = {})", sigma.name());
        let s_eval = sigma.clone();
        let g = move |p: Point2| {
            let e = (2.0 * s_eval.value(p)).exp();
            [[e, 0.0], [0.0, e]]
        };
        let metric = Self::new(name, g, |p| p.is_finite());
        if sigma.has_gradient() {
            metric.with_partials(move |p| {
                let e = (2.0 * sigma.value(p)).exp();
                let grad = sigma.gradient(p, &|_| true).unwrap_or([f64::NAN; 2]);
                let m = |d: f64| [[2.0 * d * e, 0.0], [0.0, 2.0 * d * e]];
                [m(grad[0]), m(grad[1])]
            })
        } else {
            metric
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn contains(&self, p: Point2) -> bool {
        (self.domain)(p)
    }

    pub fn domain_fn(&self) -> FieldFn<bool> {
        self.domain.clone()
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.partials.is_some()
    }

    /// `γ(p)`, checked for domain membership and finiteness.
    pub fn at(&self, p: Point2) -> Result<Mat2> {
        if !self.contains(p) {
            return Err(outside(p));
        }
        let g = (self.g)(p);
        if g.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("metric {} at {}", self.name, p)));
        }
        Ok(g)
    }

    pub fn det(&self, p: Point2) -> Result<f64> {
        Ok(det2(&self.at(p)?))
    }

    pub fn inverse(&self, p: Point2) -> Result<Mat2> {
        inv2(&self.at(p)?)
    }

    /// `γ_p(v, w)`.
    pub fn inner(&self, p: Point2, v: Vec2, w: Vec2) -> Result<f64> {
        let g = self.at(p)?;
        let gw = mat_vec(&g, w);
        Ok(v[0] * gw[0] + v[1] * gw[1])
    }

    /// `[∂_1 γ, ∂_2 γ]` at `p`, analytic when available.
    pub fn partials(&self, p: Point2) -> Result<[Mat2; 2]> {
        if !self.contains(p) {
            return Err(outside(p));
        }
        if let Some(d) = &self.partials {
            return Ok(d(p));
        }
        let domain = |q: Point2| self.contains(q);
        let mut out = [[[0.0; 2]; 2]; 2];
        for (axis, o) in out.iter_mut().enumerate() {
            let h = diff::relative_step(p, axis, FIRST_DERIVATIVE_STEP);
            let v = diff::partial(|q| self.at(q).map(|m| flatten_mat(&m)), &domain, p, axis, h)?;
            *o = [[v[0], v[1]], [v[2], v[3]]];
        }
        Ok(out)
    }

    /// Smallest eigenvalue of `γ(p)`; positive on a valid metric.
    pub fn min_eigenvalue(&self, p: Point2) -> Result<f64> {
        let g = self.at(p)?;
        let tr = g[0][0] + g[1][1];
        let det = det2(&g);
        Ok(tr / 2.0 - ((tr * tr) / 4.0 - det).max(0.0).sqrt())
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Christoffel symbols of the Levi-Civita connection of `metric` at `p`.
pub fn christoffel_lc(metric: &Metric2D, p: Point2) -> Result<Christoffel> {
    let ginv = metric.inverse(p)?;
    let dg = metric.partials(p)?;
    let mut gamma = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for l in 0..2 {
                    s += ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                }
                gamma[k][i][j] = 0.5 * s;
            }
        }
    }
    Ok(gamma)
}

/// Coordinate curvature of the connection with coefficients `coeffs`,
/// differentiating the coefficients numerically with step `h`.
pub(crate) fn riemann_from_coefficients(
    coeffs: &dyn Fn(Point2) -> Result<Christoffel>,
    domain: &dyn Fn(Point2) -> bool,
    p: Point2,
    h: f64,
) -> Result<Riemann> {
    let g = coeffs(p)?;
    let mut dg = [[[[0.0; 2]; 2]; 2]; 2];
    for (axis, d) in dg.iter_mut().enumerate() {
        let step = diff::relative_step(p, axis, h);
        let v = diff::partial(|q| coeffs(q).map(|c| flatten_christoffel(&c)), domain, p, axis, step)?;
        *d = unflatten_christoffel(&v);
    }
    let mut r = [[[[0.0; 2]; 2]; 2]; 2];
    for l in 0..2 {
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut s = dg[i][l][j][k] - dg[j][l][i][k];
                    for m in 0..2 {
                        s += g[l][i][m] * g[m][j][k] - g[l][j][m] * g[m][i][k];
                    }
                    r[l][k][i][j] = s;
                }
            }
        }
    }
    Ok(r)
}

/// Gauss curvature `γ(R*(∂_1,∂_2)∂_2, ∂_1) / det γ` of the Levi-Civita connection.
pub fn gauss_curvature(metric: &Metric2D, p: Point2) -> Result<f64> {
    let g = metric.at(p)?;
    let coeffs = |q: Point2| christoffel_lc(metric, q);
    let domain = |q: Point2| metric.contains(q);
    let r = riemann_from_coefficients(&coeffs, &domain, p, CURVATURE_STEP)?;
    let num: f64 = (0..2).map(|l| g[l][0] * r[l][1][0][1]).sum();
    Ok(num / det2(&g))
}

/// Riemannian divergence `(1/√det γ) ∂_i(√det γ X^i)`.
pub fn divergence(metric: &Metric2D, x: &VectorField, p: Point2) -> Result<f64> {
    let sqrt_det = |q: Point2| -> Result<f64> {
        let d = metric.det(q)?;
        if d <= 0.0 {
            return Err(Error::SingularMetric(d));
        }
        Ok(d.sqrt())
    };
    let domain = |q: Point2| metric.contains(q);
    let mut total = 0.0;
    for axis in 0..2 {
        let h = diff::relative_step(p, axis, FIRST_DERIVATIVE_STEP);
        total += diff::partial_scalar(|q| Ok(sqrt_det(q)? * x.try_at(q)?[axis]), &domain, p, axis, h)?;
    }
    Ok(total / sqrt_det(p)?)
}

/// Raises the index of `rho` at `p`: `ρ^i = γ^{ik} ρ_k`.
pub fn sharp(metric: &Metric2D, rho: &OneForm, p: Point2) -> Result<Vec2> {
    Ok(mat_vec(&metric.inverse(p)?, rho.try_at(p)?))
}

/// Lowers the index of `x` at `p`: `ρ_i = γ_ik X^k`.
pub fn flat(metric: &Metric2D, x: Vec2, p: Point2) -> Result<Vec2> {
    let g = metric.at(p)?;
    // still reject singular data, so flat and sharp fail on the same inputs
    inv2(&g)?;
    Ok(mat_vec(&g, x))
}

/// `ρ♯` as a field; evaluates to NaN where `sharp` fails.
pub fn sharp_field(metric: &Metric2D, rho: &OneForm) -> VectorField {
    let metric = metric.clone();
    let rho = rho.clone();
    VectorField::new(format!("{}♯", rho.name()), move |p| sharp(&metric, &rho, p).unwrap_or([f64::NAN; 2]))
}

/// `dρ(∂_1, ∂_2) = ∂_1 ρ_2 − ∂_2 ρ_1`.
pub fn exterior_derivative(metric: &Metric2D, rho: &OneForm, p: Point2) -> Result<f64> {
    let domain = |q: Point2| metric.contains(q);
    let h1 = diff::relative_step(p, 0, FIRST_DERIVATIVE_STEP);
    let h2 = diff::relative_step(p, 1, FIRST_DERIVATIVE_STEP);
    let d1 = diff::partial_scalar(|q| Ok(rho.try_at(q)?[1]), &domain, p, 0, h1)?;
    let d2 = diff::partial_scalar(|q| Ok(rho.try_at(q)?[0]), &domain, p, 1, h2)?;
    Ok(d1 - d2)
}

/// Metric models that come with a recipe turning a potential into a
/// divergence-representing 1-form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Euclidean,
    Hyperbolic,
    Conformal,
}

impl SurfaceKind {
    pub fn metric(self) -> Option<Metric2D> {
        match self {
            SurfaceKind::Euclidean => Some(Metric2D::euclidean()),
            SurfaceKind::Hyperbolic => Some(Metric2D::hyperbolic()),
            SurfaceKind::Conformal => None,
        }
    }
}

/// 1-form `ρ` built from a potential `f` so that `κ* = −div* ρ♯`.
///
/// Euclidean plane: `(ρ_1, ρ_2) = (−∂_2 f, ∂_1 f)`.
/// Upper half-plane: `(ρ_1, ρ_2) = (∂_2 f, −∂_1 f − 1/u²)`.
pub fn potential_to_oneform(kind: SurfaceKind, f: &ScalarField) -> Result<OneForm> {
    let metric = kind.metric().ok_or_else(|| Error::Unsupported(format!("{kind:?}")))?;
    let f = f.clone();
    let name = format!("ρ[{}]", f.name());
    let form = match kind {
        SurfaceKind::Euclidean => OneForm::new(name, move |p| match f.gradient(p, &|q| metric.contains(q)) {
            Ok(g) => [-g[1], g[0]],
            Err(_) => [f64::NAN; 2],
        }),
        SurfaceKind::Hyperbolic => OneForm::new(name, move |p| match f.gradient(p, &|q| metric.contains(q)) {
            Ok(g) if p.u2 > 0.0 => [g[1], -g[0] - 1.0 / p.u2],
            _ => [f64::NAN; 2],
        }),
        SurfaceKind::Conformal => unreachable!(),
    };
    Ok(form)
}

/// Built-in potentials of the worked examples.
pub mod potentials {
    use super::ScalarField;

    /// `f = −½((u¹)² + (u²)²)` on the Euclidean plane.
    pub fn euclid_quadratic() -> ScalarField {
        ScalarField::new("euclid-quadratic", |p| -0.5 * (p.u1 * p.u1 + p.u2 * p.u2))
            .with_gradient(|p| [-p.u1, -p.u2])
    }

    /// `f = log u²` on the upper half-plane.
    pub fn hyp_log() -> ScalarField {
        ScalarField::new("hyp-log", |p| p.u2.ln()).with_gradient(|p| [0.0, 1.0 / p.u2])
    }

    pub fn by_name(name: &str) -> Option<ScalarField> {
        match name {
            "euclid-quadratic" => Some(euclid_quadratic()),
            "hyp-log" => Some(hyp_log()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma() -> ScalarField {
        ScalarField::new("0.1 sin sin", |p| 0.1 * p.u1.sin() * p.u2.sin())
            .with_gradient(|p| [0.1 * p.u1.cos() * p.u2.sin(), 0.1 * p.u1.sin() * p.u2.cos()])
    }

    #[test]
    fn euclidean_christoffels_vanish() {
        let g = christoffel_lc(&Metric2D::euclidean(), Point2::new(3.0, -1.0)).unwrap();
        assert!(g.iter().flatten().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn hyperbolic_christoffel_table() {
        let g = christoffel_lc(&Metric2D::hyperbolic(), Point2::new(0.0, 2.0)).unwrap();
        let expect = [[[0.0, -0.5], [-0.5, 0.0]], [[0.5, 0.0], [0.0, -0.5]]];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert!((g[k][i][j] - expect[k][i][j]).abs() < 1e-14, "Γ^{k}_{i}{j}");
                }
            }
        }
    }

    /// Independent oracle: numerically differentiate the metric entries and
    /// apply the Christoffel formula by hand.
    #[test]
    fn conformal_christoffel_matches_brute_force() {
        let s = sigma();
        let metric = Metric2D::conformal(s.clone());
        let p = Point2::new(0.3, 0.7);
        let g = |q: Point2| (2.0 * s.value(q)).exp();
        let h = 1e-4;
        let d1 = (g(p.shifted(0, h)) - g(p.shifted(0, -h))) / (2.0 * h);
        let d2 = (g(p.shifted(1, h)) - g(p.shifted(1, -h))) / (2.0 * h);
        let e = g(p);
        // for γ = e δ: Γ^1_11 = d1/2e, Γ^1_12 = d2/2e, Γ^1_22 = −d1/2e,
        // Γ^2_11 = −d2/2e, Γ^2_12 = d1/2e, Γ^2_22 = d2/2e
        let a = d1 / (2.0 * e);
        let b = d2 / (2.0 * e);
        let expect = [[[a, b], [b, -a]], [[-b, a], [a, b]]];
        let got = christoffel_lc(&metric, p).unwrap();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert!((got[k][i][j] - expect[k][i][j]).abs() < 1e-8);
                    assert_eq!(got[k][i][j], got[k][j][i]);
                }
            }
        }
    }

    #[test]
    fn christoffel_without_partials_uses_differences() {
        let analytic = Metric2D::hyperbolic();
        let numeric = Metric2D::new(
            "hyp-numeric",
            |p| {
                let s = 1.0 / (p.u2 * p.u2);
                [[s, 0.0], [0.0, s]]
            },
            |p| p.u2 > 0.0,
        );
        // the fixed step is large relative to u² near the boundary, so the
        // last point only gets about six digits
        for (p, tol) in [(Point2::new(0.2, 0.5), 1e-7), (Point2::new(-1.0, 3.0), 1e-7), (Point2::new(0.0, 1e-3), 1e-6)] {
            let a = christoffel_lc(&analytic, p).unwrap();
            let n = christoffel_lc(&numeric, p).unwrap();
            let scale = tol / p.u2;
            for (x, y) in flatten_christoffel(&a).iter().zip(flatten_christoffel(&n).iter()) {
                assert!((x - y).abs() < scale, "{p}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn curvature_values() {
        assert_eq!(gauss_curvature(&Metric2D::euclidean(), Point2::new(1.0, 2.0)).unwrap(), 0.0);
        let k = gauss_curvature(&Metric2D::hyperbolic(), Point2::new(1.5, 0.4)).unwrap();
        assert!((k + 1.0).abs() < 1e-6, "{k}");
    }

    #[test]
    fn conformal_curvature_matches_analytic() {
        let metric = Metric2D::conformal(sigma());
        let p = Point2::new(1.0, 2.0);
        let s = 0.1 * p.u1.sin() * p.u2.sin();
        let lap = -0.2 * p.u1.sin() * p.u2.sin();
        let expect = -(-2.0 * s).exp() * lap;
        let k = gauss_curvature(&metric, p).unwrap();
        assert!((k - expect).abs() < 1e-8, "{k} vs {expect}");
    }

    #[test]
    fn divergence_examples() {
        let e = Metric2D::euclidean();
        let rot = VectorField::new("rot", |p| [p.u2, -p.u1]);
        assert!(divergence(&e, &rot, Point2::new(0.7, -1.1)).unwrap().abs() < 1e-10);
        let h = Metric2D::hyperbolic();
        let x = VectorField::new("x", |p| [p.u2, -p.u2]);
        for p in [Point2::new(0.0, 0.5), Point2::new(2.0, 3.0)] {
            assert!((divergence(&h, &x, p).unwrap() - 1.0).abs() < 1e-9);
        }
        assert_eq!(divergence(&h, &VectorField::zero(), Point2::new(0.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn sharp_flat() {
        let h = Metric2D::hyperbolic();
        let rho = OneForm::new("rho", |p| [1.0 / p.u2, -1.0 / p.u2]);
        let p = Point2::new(0.0, 2.0);
        let s = sharp(&h, &rho, p).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-14 && (s[1] + 2.0).abs() < 1e-14);
        let back = flat(&h, s, p).unwrap();
        assert!((back[0] - 0.5).abs() < 1e-15 && (back[1] + 0.5).abs() < 1e-15);
        let e = Metric2D::euclidean();
        assert_eq!(sharp(&e, &OneForm::new("c", |_| [3.0, -4.0]), p).unwrap(), [3.0, -4.0]);
    }

    #[test]
    fn singular_metric_rejected() {
        let m = Metric2D::new("degenerate", |_| [[1.0, 1.0], [1.0, 1.0]], |_| true);
        assert!(matches!(m.inverse(Point2::new(0.0, 0.0)), Err(Error::SingularMetric(_))));
        assert!(matches!(flat(&m, [1.0, 0.0], Point2::new(0.0, 0.0)), Err(Error::SingularMetric(_))));
    }

    #[test]
    fn outside_domain_rejected() {
        let h = Metric2D::hyperbolic();
        let p = Point2::new(0.0, -1.0);
        assert!(christoffel_lc(&h, p).unwrap_err().is_domain());
        assert!(gauss_curvature(&h, p).unwrap_err().is_domain());
    }

    #[test]
    fn potentials_to_forms() {
        let rho = potential_to_oneform(SurfaceKind::Euclidean, &potentials::euclid_quadratic()).unwrap();
        let p = Point2::new(0.3, -0.8);
        assert_eq!(rho.at(p), [p.u2, -p.u1]);
        let rho = potential_to_oneform(SurfaceKind::Hyperbolic, &potentials::hyp_log()).unwrap();
        let p = Point2::new(-1.0, 0.25);
        let r = rho.at(p);
        assert!((r[0] - 4.0).abs() < 1e-14 && (r[1] + 4.0).abs() < 1e-14);
        let zero = potential_to_oneform(SurfaceKind::Euclidean, &ScalarField::zero()).unwrap();
        assert_eq!(zero.at(p), [0.0, 0.0]);
        assert!(matches!(
            potential_to_oneform(SurfaceKind::Conformal, &ScalarField::zero()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn numeric_potential_gradient() {
        let f = ScalarField::new("log", |p| p.u2.ln());
        let rho = potential_to_oneform(SurfaceKind::Hyperbolic, &f).unwrap();
        let r = rho.at(Point2::new(0.0, 2.0));
        assert!((r[0] - 0.5).abs() < 1e-10 && (r[1] + 0.5).abs() < 1e-10);
    }

    #[test]
    fn builtin_gradients_agree_with_differences() {
        let pts: Vec<Point2> = (0..10).map(|i| Point2::new(0.3 * i as f64 - 1.0, 0.2 + 0.3 * i as f64)).collect();
        let dom = |p: Point2| p.u2 > 0.0;
        assert!(potentials::hyp_log().gradient_mismatch(&pts, &dom).unwrap() < 1e-8);
        assert!(potentials::euclid_quadratic().gradient_mismatch(&pts, &dom).unwrap() < 1e-8);
        assert!(sigma().gradient_mismatch(&pts, &dom).unwrap() < 1e-8);
    }

    #[test]
    fn exterior_derivative_of_rotation_form() {
        let rho = OneForm::new("r", |p| [p.u2, -p.u1]);
        let d = exterior_derivative(&Metric2D::euclidean(), &rho, Point2::new(0.5, 0.5)).unwrap();
        assert!((d + 2.0).abs() < 1e-9);
    }
}
