//! Parallel transport along parametrized curves.
//!
//! The transport equations `(X^k)' = −(c^i)' X^j Γ^k_ij ∘ c` are linear, so
//! alongside the transported vector the integrator also carries the
//! fundamental matrix of the system; its value at the end of the curve is
//! the transport matrix.

use std::fmt;
use std::sync::Arc;

use crate::connection::Connection2D;
use crate::diff;
use crate::error::{Error, Result};
use crate::geometry::{mat_vec, Mat2, Metric2D, Point2, ScalarField, Vec2, IDENTITY};

/// Default number of RK4 steps per unit of curve parameter.
pub const DEFAULT_STEPS: usize = 1000;
/// Step used to difference curves without an analytic velocity.
pub const CURVE_DIFF_STEP: f64 = 1e-6;
/// Tolerance on `|c(start) − c(end)|` for a curve to count as a loop.
pub const LOOP_CLOSURE_TOLERANCE: f64 = 1e-12;

type CurveFn = Arc<dyn Fn(f64) -> Point2 + Send + Sync>;
type VelocityFn = Arc<dyn Fn(f64) -> Vec2 + Send + Sync>;

/// A parametrized path `c: [t0, t1] → chart`.
#[derive(Clone)]
pub struct Curve {
    name: String,
    c: CurveFn,
    c_dot: Option<VelocityFn>,
    span: (f64, f64),
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Curve").field("name", &self.name).field("span", &self.span).finish()
    }
}

impl Curve {
    pub fn new(name: impl Into<String>, span: (f64, f64), c: impl Fn(f64) -> Point2 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), c: Arc::new(c), c_dot: None, span }
    }

    pub fn with_velocity(mut self, v: impl Fn(f64) -> Vec2 + Send + Sync + 'static) -> Self {
        self.c_dot = Some(Arc::new(v));
        self
    }

    /// Constant curve at `p` on `[0, 1]`.
    pub fn constant(p: Point2) -> Self {
        Self::new(format!("point{p}"), (0.0, 1.0), move |_| p).with_velocity(|_| [0.0, 0.0])
    }

    /// `c(t) = p + t (q − p)`, `t ∈ [0, 1]`.
    pub fn segment(p: Point2, q: Point2) -> Self {
        let d = [q.u1 - p.u1, q.u2 - p.u2];
        Self::new(format!("segment{p}->{q}"), (0.0, 1.0), move |t| p.offset([t * d[0], t * d[1]]))
            .with_velocity(move |_| d)
    }

    /// `c(t) = p + t v` on `span`.
    pub fn line(p: Point2, v: Vec2, span: (f64, f64)) -> Self {
        Self::new(format!("line{p}+t{v:?}"), span, move |t| p.offset([t * v[0], t * v[1]])).with_velocity(move |_| v)
    }

    /// `c(t) = center + r (cos t, sin t)` on `span`.
    pub fn circle(center: Point2, radius: f64, span: (f64, f64)) -> Self {
        Self::new(format!("circle{center},r={radius}"), span, move |t| {
            center.offset([radius * t.cos(), radius * t.sin()])
        })
        .with_velocity(move |t| [-radius * t.sin(), radius * t.cos()])
    }

    /// Closed circle `c(t) = center + r (cos 2πt, sin 2πt)`, `t ∈ [0, 1]`.
    pub fn loop_circle(center: Point2, radius: f64) -> Self {
        let w = std::f64::consts::TAU;
        Self::new(format!("loop{center},r={radius}"), (0.0, 1.0), move |t| {
            center.offset([radius * (w * t).cos(), radius * (w * t).sin()])
        })
        .with_velocity(move |t| [-w * radius * (w * t).sin(), w * radius * (w * t).cos()])
    }

    /// Smooth arc from `p` to `q` pushed sideways by `bulge · sin(πt)` along
    /// the left normal of the chord.
    pub fn bowed(p: Point2, q: Point2, bulge: f64) -> Self {
        let d = [q.u1 - p.u1, q.u2 - p.u2];
        let n = [-d[1], d[0]];
        let pi = std::f64::consts::PI;
        Self::new(format!("arc{p}->{q},b={bulge}"), (0.0, 1.0), move |t| {
            let s = bulge * (pi * t).sin();
            p.offset([t * d[0] + s * n[0], t * d[1] + s * n[1]])
        })
        .with_velocity(move |t| {
            let s = bulge * pi * (pi * t).cos();
            [d[0] + s * n[0], d[1] + s * n[1]]
        })
    }

    /// Catmull-Rom spline through `points` with uniform knots on `[0, 1]`.
    pub fn through_points(points: Vec<Point2>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySample);
        }
        if points.len() == 1 {
            return Ok(Self::constant(points[0]));
        }
        let pts = Arc::new(points);
        let n = pts.len() - 1;
        let locate = move |t: f64| -> (usize, f64) {
            let x = (t.clamp(0.0, 1.0)) * n as f64;
            let i = (x.floor() as usize).min(n - 1);
            (i, x - i as f64)
        };
        let tangent = {
            let pts = pts.clone();
            move |i: usize| -> Vec2 {
                let a = pts[i.saturating_sub(1)];
                let b = pts[(i + 1).min(n)];
                let span = ((i + 1).min(n) - i.saturating_sub(1)) as f64;
                [(b.u1 - a.u1) / span, (b.u2 - a.u2) / span]
            }
        };
        let (p2, t2) = (pts.clone(), tangent.clone());
        let c = move |t: f64| {
            let (i, s) = locate(t);
            let (a, b) = (p2[i], p2[i + 1]);
            let (ma, mb) = (t2(i), t2(i + 1));
            let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
            let h10 = s.powi(3) - 2.0 * s * s + s;
            let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
            let h11 = s.powi(3) - s * s;
            Point2::new(
                h00 * a.u1 + h10 * ma[0] + h01 * b.u1 + h11 * mb[0],
                h00 * a.u2 + h10 * ma[1] + h01 * b.u2 + h11 * mb[1],
            )
        };
        let v = move |t: f64| {
            let (i, s) = locate(t);
            let (a, b) = (pts[i], pts[i + 1]);
            let (ma, mb) = (tangent(i), tangent(i + 1));
            let d00 = 6.0 * s * s - 6.0 * s;
            let d10 = 3.0 * s * s - 4.0 * s + 1.0;
            let d01 = -6.0 * s * s + 6.0 * s;
            let d11 = 3.0 * s * s - 2.0 * s;
            let k = n as f64;
            [
                k * (d00 * a.u1 + d10 * ma[0] + d01 * b.u1 + d11 * mb[0]),
                k * (d00 * a.u2 + d10 * ma[1] + d01 * b.u2 + d11 * mb[1]),
            ]
        };
        Ok(Self::new(format!("spline[{} points]", n + 1), (0.0, 1.0), c).with_velocity(v))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    pub fn point(&self, t: f64) -> Point2 {
        (self.c)(t)
    }

    pub fn start(&self) -> Point2 {
        self.point(self.span.0)
    }

    pub fn end(&self) -> Point2 {
        self.point(self.span.1)
    }

    /// Analytic velocity when available, otherwise central differences.
    pub fn velocity(&self, t: f64) -> Vec2 {
        match &self.c_dot {
            Some(v) => v(t),
            None => {
                let c = &self.c;
                diff::derivative_1d(&|s| c(s).to_array(), t, CURVE_DIFF_STEP)
            }
        }
    }

    /// Same parametrization restricted to `[t0, t1]`.
    pub fn restricted(&self, t0: f64, t1: f64) -> Self {
        let mut out = self.clone();
        out.span = (t0, t1);
        out
    }

    /// Traverses the curve backwards over the same span.
    pub fn reversed(&self) -> Self {
        let (a, b) = self.span;
        let c = self.c.clone();
        let inner = self.clone();
        Self::new(format!("reverse({})", self.name), self.span, move |t| c(a + b - t)).with_velocity(move |t| {
            let v = inner.velocity(a + b - t);
            [-v[0], -v[1]]
        })
    }

    /// Checks that the sampled curve stays inside `domain`.
    pub fn check_inside(&self, domain: &dyn Fn(Point2) -> bool, samples: usize) -> Result<()> {
        let (a, b) = self.span;
        let n = samples.max(1);
        for i in 0..=n {
            let p = self.point(a + (b - a) * i as f64 / n as f64);
            if !domain(p) {
                return Err(Error::OutsideDomain { u1: p.u1, u2: p.u2 });
            }
        }
        Ok(())
    }
}

/// Sampled solution of the transport equations.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    pub ts: Vec<f64>,
    pub points: Vec<Point2>,
    pub vectors: Vec<Vec2>,
    /// Fundamental matrix `M(t)` at every sample, `X(t) ≈ M(t) X(t0)`.
    pub matrices: Vec<Mat2>,
    /// Transport matrix of the whole curve.
    pub matrix: Mat2,
}

impl TransportResult {
    pub fn final_vector(&self) -> Vec2 {
        *self.vectors.last().expect("at least one sample")
    }

    /// Largest relative drift of `γ(X, X)` along the samples.
    pub fn norm_drift(&self, metric: &Metric2D) -> Result<f64> {
        let q0 = metric.inner(self.points[0], self.vectors[0], self.vectors[0])?;
        let mut worst: f64 = 0.0;
        for (p, x) in self.points.iter().zip(&self.vectors) {
            let q = metric.inner(*p, *x, *x)?;
            worst = worst.max((q - q0).abs() / q0.abs().max(f64::MIN_POSITIVE));
        }
        Ok(worst)
    }
}

/// `A^k_j(t) = −(c^i)'(t) Γ^k_ij(c(t))`.
fn system_matrix(conn: &Connection2D, curve: &Curve, t: f64) -> Result<Mat2> {
    let p = curve.point(t);
    let v = curve.velocity(t);
    if !(v[0].is_finite() && v[1].is_finite()) {
        return Err(Error::NonFinite(format!("velocity of {} at t = {t}", curve.name())));
    }
    let g = conn.coefficients(p)?;
    let mut a = [[0.0; 2]; 2];
    for k in 0..2 {
        for j in 0..2 {
            a[k][j] = -(v[0] * g[k][0][j] + v[1] * g[k][1][j]);
        }
    }
    Ok(a)
}

fn axpy_vec(x: Vec2, s: f64, d: Vec2) -> Vec2 {
    [x[0] + s * d[0], x[1] + s * d[1]]
}

fn axpy_mat(x: &Mat2, s: f64, d: &Mat2) -> Mat2 {
    let mut out = *x;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] += s * d[i][j];
        }
    }
    out
}

fn mat_prod(a: &Mat2, b: &Mat2) -> Mat2 {
    crate::geometry::mat_mul(a, b)
}

/// Classical RK4 integration of the transport equations with `steps` uniform
/// steps over the curve's span.
pub fn parallel_transport(conn: &Connection2D, curve: &Curve, x0: Vec2, steps: usize) -> Result<TransportResult> {
    if steps < 1 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    if !(x0[0].is_finite() && x0[1].is_finite()) {
        return Err(Error::NonFinite("initial vector".into()));
    }
    let (t0, t1) = curve.span();
    let start = curve.point(t0);
    if !conn.contains(start) {
        return Err(Error::OutsideDomain { u1: start.u1, u2: start.u2 });
    }
    let mut out = TransportResult {
        ts: vec![t0],
        points: vec![start],
        vectors: vec![x0],
        matrices: vec![IDENTITY],
        matrix: IDENTITY,
    };
    if t1 == t0 {
        return Ok(out);
    }
    let h = (t1 - t0) / steps as f64;
    let mut x = x0;
    let mut m = IDENTITY;
    let mut a_start = system_matrix(conn, curve, t0)?;
    for n in 0..steps {
        let t = t0 + n as f64 * h;
        let t_next = if n + 1 == steps { t1 } else { t0 + (n + 1) as f64 * h };
        let a_mid = system_matrix(conn, curve, t + 0.5 * h)?;
        let a_end = system_matrix(conn, curve, t_next)?;

        let k1 = mat_vec(&a_start, x);
        let k2 = mat_vec(&a_mid, axpy_vec(x, 0.5 * h, k1));
        let k3 = mat_vec(&a_mid, axpy_vec(x, 0.5 * h, k2));
        let k4 = mat_vec(&a_end, axpy_vec(x, h, k3));
        for i in 0..2 {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        let q1 = mat_prod(&a_start, &m);
        let q2 = mat_prod(&a_mid, &axpy_mat(&m, 0.5 * h, &q1));
        let q3 = mat_prod(&a_mid, &axpy_mat(&m, 0.5 * h, &q2));
        let q4 = mat_prod(&a_end, &axpy_mat(&m, h, &q3));
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += h / 6.0 * (q1[i][j] + 2.0 * q2[i][j] + 2.0 * q3[i][j] + q4[i][j]);
            }
        }

        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::NonFinite(format!("transported vector at t = {t_next}")));
        }
        out.ts.push(t_next);
        out.points.push(curve.point(t_next));
        out.vectors.push(x);
        out.matrices.push(m);
        a_start = a_end;
    }
    out.matrix = m;
    Ok(out)
}

/// Matrix whose columns are the transports of `∂_1` and `∂_2`.
pub fn transport_matrix(conn: &Connection2D, curve: &Curve, steps: usize) -> Result<Mat2> {
    let (a, b) = rayon::join(
        || parallel_transport(conn, curve, [1.0, 0.0], steps),
        || parallel_transport(conn, curve, [0.0, 1.0], steps),
    );
    let (a, b) = (a?.final_vector(), b?.final_vector());
    Ok([[a[0], b[0]], [a[1], b[1]]])
}

/// Transport matrix around a closed curve.
pub fn holonomy(conn: &Connection2D, lp: &Curve, steps: usize) -> Result<Mat2> {
    holonomy_with_tolerance(conn, lp, steps, LOOP_CLOSURE_TOLERANCE)
}

pub fn holonomy_with_tolerance(conn: &Connection2D, lp: &Curve, steps: usize, closure: f64) -> Result<Mat2> {
    let gap = lp.start().distance(lp.end());
    if !(gap <= closure) {
        return Err(Error::OpenLoop(gap));
    }
    transport_matrix(conn, lp, steps)
}

/// Parallel field of the flat Euclidean connection built from potential `f`:
/// `X(t) = r₀ (cos(φ(t) + φ₀), −sin(φ(t) + φ₀))`, `φ = f ∘ c`.
pub fn closed_form_euclidean(f: &ScalarField, curve: &Curve, r0: f64, phi0: f64, t: f64) -> Result<Vec2> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidArgument(format!("r0 must be positive, got {r0}")));
    }
    let a = f.value(curve.point(t)) + phi0;
    Ok([r0 * a.cos(), -r0 * a.sin()])
}

/// Parallel field of the flat half-plane connection built from potential `f`:
/// `X(t) = c²(t) r₀ (cos(φ(t) + φ₀), sin(φ(t) + φ₀))`.
pub fn closed_form_hyperbolic(f: &ScalarField, curve: &Curve, r0: f64, phi0: f64, t: f64) -> Result<Vec2> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidArgument(format!("r0 must be positive, got {r0}")));
    }
    let p = curve.point(t);
    if !(p.u2 > 0.0) {
        return Err(Error::OutsideDomain { u1: p.u1, u2: p.u2 });
    }
    let a = f.value(p) + phi0;
    Ok([p.u2 * r0 * a.cos(), p.u2 * r0 * a.sin()])
}

/// `(r₀, φ₀)` making [`closed_form_euclidean`] equal `x0` at the curve start.
pub fn euclidean_phase(f: &ScalarField, curve: &Curve, x0: Vec2) -> (f64, f64) {
    let r0 = x0[0].hypot(x0[1]);
    let angle = (-x0[1]).atan2(x0[0]);
    (r0, angle - f.value(curve.start()))
}

/// `(r₀, φ₀)` making [`closed_form_hyperbolic`] equal `x0` at the curve start.
pub fn hyperbolic_phase(f: &ScalarField, curve: &Curve, x0: Vec2) -> (f64, f64) {
    let p = curve.start();
    let r0 = x0[0].hypot(x0[1]) / p.u2;
    let angle = x0[1].atan2(x0[0]);
    (r0, angle - f.value(p))
}
