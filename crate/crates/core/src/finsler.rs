//! Convex indicatrices carried around by a flat metric connection.
//!
//! A [`FinslerStructure`] fixes one trifocal ellipse in the tangent plane of
//! a base point and defines the indicatrix everywhere else as its image
//! under parallel transport. The resulting norm is preserved by the
//! connection by construction, which is exactly what the compatibility check
//! measures.

use crate::connection::Connection2D;
use crate::error::{Error, Result};
use crate::geometry::{det2, inv2, mat_mul, mat_vec, max_abs_diff, Mat2, Point2, Vec2, IDENTITY};
use crate::transport::{holonomy_with_tolerance, parallel_transport, transport_matrix, Curve, DEFAULT_STEPS};

const BISECTION_ITERATIONS: usize = 80;
/// Relative fiber step for the Hessian of `½F²`.
pub const FIBER_STEP: f64 = 1e-4;
/// Default number of quadrature nodes on the indicatrix.
pub const DEFAULT_QUAD_POINTS: usize = 720;
/// Pass threshold for the compatibility check.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-6;
/// Allowed holonomy deviation on the probe loop at construction.
pub const PROBE_HOLONOMY_TOLERANCE: f64 = 1e-6;
const ENDPOINT_TOLERANCE: f64 = 1e-9;

/// Points whose distances to `−focal`, `0` and `+focal` sum to `level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrifocalEllipse {
    focal: Vec2,
    level: f64,
}

impl TrifocalEllipse {
    /// The origin must be interior: `2 |focal| < level`.
    pub fn new(focal: Vec2, level: f64) -> Result<Self> {
        if !(focal[0].is_finite() && focal[1].is_finite() && level.is_finite()) {
            return Err(Error::NonFinite("trifocal ellipse data".into()));
        }
        let at_origin = 2.0 * focal[0].hypot(focal[1]);
        if !(at_origin < level) {
            return Err(Error::InvalidArgument(format!(
                "level {level} must exceed the distance sum {at_origin} at the origin"
            )));
        }
        Ok(Self { focal, level })
    }

    /// Foci `(−1, 0), 0, (1, 0)` at level 4.
    pub fn standard() -> Self {
        Self { focal: [1.0, 0.0], level: 4.0 }
    }

    /// Circle of the given radius (all three foci at the origin).
    pub fn circle(radius: f64) -> Result<Self> {
        Self::new([0.0, 0.0], 3.0 * radius)
    }

    pub fn focal(&self) -> Vec2 {
        self.focal
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn distance_sum(&self, v: Vec2) -> f64 {
        let [a, b] = self.focal;
        (v[0] + a).hypot(v[1] + b) + v[0].hypot(v[1]) + (v[0] - a).hypot(v[1] - b)
    }

    /// Boundary point in direction `angle`.
    pub fn boundary_point(&self, angle: f64) -> Vec2 {
        let d = [angle.cos(), angle.sin()];
        let f = gauge(self, d).expect("finite direction");
        [d[0] / f, d[1] / f]
    }

    /// `n` boundary points at uniformly spaced polar angles.
    pub fn boundary(&self, n: usize) -> Vec<Vec2> {
        (0..n).map(|i| self.boundary_point(std::f64::consts::TAU * i as f64 / n as f64)).collect()
    }
}

/// Sum of distances to the three foci minus the level: negative inside,
/// zero on the curve, positive outside.
pub fn membership(e: &TrifocalEllipse, v: Vec2) -> f64 {
    e.distance_sum(v) - e.level
}

/// Minkowski functional of the ellipse: the `t > 0` with `v / t` on the curve.
pub fn gauge(e: &TrifocalEllipse, v: Vec2) -> Result<f64> {
    if !(v[0].is_finite() && v[1].is_finite()) {
        return Err(Error::NonFinite(format!("gauge argument {v:?}")));
    }
    let r = v[0].hypot(v[1]);
    if r == 0.0 {
        return Ok(0.0);
    }
    let scaled = |t: f64| membership(e, [v[0] / t, v[1] / t]);
    // |v|/level puts v/t outside since the distance sum is at least 3|w|
    let mut lo = r / e.level;
    let mut hi = 2.0 * lo;
    while scaled(hi) >= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..BISECTION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if scaled(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fiber Hessian of `E = ½F²` at `y` by second central differences with
/// step `FIBER_STEP · |y|`.
pub fn riemann_finsler_metric(norm: &dyn Fn(Vec2) -> Result<f64>, y: Vec2) -> Result<Mat2> {
    let h = FIBER_STEP * y[0].hypot(y[1]);
    if h == 0.0 {
        return Err(Error::InvalidArgument("Riemann-Finsler metric at the zero vector".into()));
    }
    let e = |a: f64, b: f64| -> Result<f64> {
        let f = norm([y[0] + a, y[1] + b])?;
        Ok(0.5 * f * f)
    };
    let e0 = e(0.0, 0.0)?;
    let g11 = (e(h, 0.0)? - 2.0 * e0 + e(-h, 0.0)?) / (h * h);
    let g22 = (e(0.0, h)? - 2.0 * e0 + e(0.0, -h)?) / (h * h);
    let g12 = (e(h, h)? - e(h, -h)? - e(-h, h)? + e(-h, -h)?) / (4.0 * h * h);
    Ok([[g11, g12], [g12, g22]])
}

/// `∫_{∂K} g_ij μ` for the indicatrix of `norm`, by the periodic trapezoid
/// rule over `n` uniformly spaced polar angles.
///
/// With `y(θ) = r(θ)(cos θ, sin θ)` on the indicatrix, the induced volume form
/// pulls back to `√det g · r² dθ`.
pub fn averaged_metric_of(norm: &dyn Fn(Vec2) -> Result<f64>, n: usize) -> Result<Mat2> {
    if n < 3 {
        return Err(Error::InvalidArgument("at least 3 quadrature nodes required".into()));
    }
    let w = std::f64::consts::TAU / n as f64;
    let mut acc = [[0.0; 2]; 2];
    for i in 0..n {
        let theta = w * i as f64;
        let d = [theta.cos(), theta.sin()];
        let r = 1.0 / norm(d)?;
        let y = [r * d[0], r * d[1]];
        let g = riemann_finsler_metric(norm, y)?;
        let det = det2(&g);
        if !(g[0][0] > 0.0 && det > 0.0) {
            return Err(Error::Convexity(format!("g not positive definite at θ = {theta}")));
        }
        let weight = w * det.sqrt() * r * r;
        for a in 0..2 {
            for b in 0..2 {
                acc[a][b] += weight * g[a][b];
            }
        }
    }
    Ok(acc)
}

/// Indicatrix at a point: the base ellipse pushed forward by a transport matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslatedIndicatrix {
    pub point: Point2,
    pub matrix: Mat2,
    pub base: TrifocalEllipse,
}

impl TranslatedIndicatrix {
    /// `−M X₀, 0, M X₀`.
    pub fn foci(&self) -> [Vec2; 3] {
        let x = mat_vec(&self.matrix, self.base.focal());
        [[-x[0], -x[1]], [0.0, 0.0], x]
    }

    pub fn gauge(&self, v: Vec2) -> Result<f64> {
        gauge(&self.base, mat_vec(&inv2(&self.matrix)?, v))
    }

    /// Image of `n` base boundary points.
    pub fn boundary(&self, n: usize) -> Vec<Vec2> {
        self.base.boundary(n).into_iter().map(|w| mat_vec(&self.matrix, w)).collect()
    }

    /// Trifocal ellipse with the translated foci but the base level. Differs
    /// from the true image whenever the transport is not an isometry of the
    /// coordinate plane; `None` when that level no longer encloses the origin.
    pub fn same_level_variant(&self) -> Option<TrifocalEllipse> {
        TrifocalEllipse::new(mat_vec(&self.matrix, self.base.focal()), self.base.level()).ok()
    }
}

/// A trifocal indicatrix at a base point, spread by a flat connection.
#[derive(Debug, Clone)]
pub struct FinslerStructure {
    base_point: Point2,
    base: TrifocalEllipse,
    connection: Connection2D,
    steps: usize,
}

impl FinslerStructure {
    /// Fails when the base point is outside the connection's domain or the
    /// transport around a small probe loop is not the identity.
    pub fn new(base_point: Point2, base: TrifocalEllipse, connection: Connection2D) -> Result<Self> {
        if !connection.contains(base_point) {
            return Err(Error::OutsideDomain { u1: base_point.u1, u2: base_point.u2 });
        }
        let mut radius = 0.25;
        let probe = loop {
            let c = Curve::loop_circle(base_point, radius);
            if c.check_inside(&|p| connection.contains(p), 64).is_ok() {
                break c;
            }
            radius *= 0.5;
            if radius < 1e-6 {
                return Err(Error::InvalidArgument("no probe loop fits in the domain".into()));
            }
        };
        let h = holonomy_with_tolerance(&connection, &probe, DEFAULT_STEPS, 1e-9)?;
        let dev = max_abs_diff(&h, &IDENTITY);
        if dev > PROBE_HOLONOMY_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "connection {} has nontrivial holonomy (deviation {dev:e})",
                connection.name()
            )));
        }
        Ok(Self { base_point, base, connection, steps: DEFAULT_STEPS })
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps.max(1);
        self
    }

    pub fn base_point(&self) -> Point2 {
        self.base_point
    }

    pub fn base_indicatrix(&self) -> &TrifocalEllipse {
        &self.base
    }

    pub fn connection(&self) -> &Connection2D {
        &self.connection
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn path_to(&self, p: Point2, path: Option<&Curve>) -> Result<Curve> {
        match path {
            Some(c) => {
                if c.start().distance(self.base_point) > ENDPOINT_TOLERANCE || c.end().distance(p) > ENDPOINT_TOLERANCE {
                    return Err(Error::PathMismatch(format!(
                        "{} runs {} -> {}, expected {} -> {}",
                        c.name(),
                        c.start(),
                        c.end(),
                        self.base_point,
                        p
                    )));
                }
                Ok(c.clone())
            }
            None => Ok(Curve::segment(self.base_point, p)),
        }
    }

    /// Transport matrix from the base point to `p`.
    pub fn transport_to(&self, p: Point2, path: Option<&Curve>) -> Result<Mat2> {
        let c = self.path_to(p, path)?;
        transport_matrix(&self.connection, &c, self.steps)
    }
}

/// Indicatrix at `p`, transported along `path` (straight segment if `None`).
pub fn indicatrix_at(fs: &FinslerStructure, p: Point2, path: Option<&Curve>) -> Result<TranslatedIndicatrix> {
    let matrix = fs.transport_to(p, path)?;
    Ok(TranslatedIndicatrix { point: p, matrix, base: fs.base })
}

/// `F(p, v) = gauge(base, M⁻¹ v)` with `M` the transport from the base point.
pub fn finsler_norm(fs: &FinslerStructure, p: Point2, v: Vec2, path: Option<&Curve>) -> Result<f64> {
    indicatrix_at(fs, p, path)?.gauge(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityReport {
    pub ts: Vec<f64>,
    pub values: Vec<f64>,
    pub reference: f64,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Transports `x0` along `curve` and evaluates `F(c(t), X(t))` at `samples`
/// evenly spaced parameters, each through the canonical path from the base.
pub fn compatibility_check(fs: &FinslerStructure, curve: &Curve, x0: Vec2, samples: usize) -> Result<CompatibilityReport> {
    compatibility_check_using(fs, &fs.connection, curve, x0, samples)
}

/// As [`compatibility_check`], but moving `x0` with `transport_conn` instead
/// of the structure's own connection.
pub fn compatibility_check_using(
    fs: &FinslerStructure,
    transport_conn: &Connection2D,
    curve: &Curve,
    x0: Vec2,
    samples: usize,
) -> Result<CompatibilityReport> {
    use rayon::prelude::*;
    let samples = samples.max(1);
    let (t0, t1) = curve.span();
    let steps = ((fs.steps as f64 * (t1 - t0).abs()).ceil() as usize).max(samples);
    // multiple of `samples` so that sample times land on RK4 nodes
    let steps = steps.div_ceil(samples) * samples;
    let tr = parallel_transport(transport_conn, curve, x0, steps)?;
    let idx: Vec<usize> = if tr.ts.len() == 1 { vec![0] } else { (0..=samples).map(|i| i * steps / samples).collect() };
    let values = idx
        .par_iter()
        .map(|&i| finsler_norm(fs, tr.points[i], tr.vectors[i], None))
        .collect::<Result<Vec<_>>>()?;
    let reference = values[0];
    let max_deviation = values.iter().fold(0.0f64, |m, v| m.max((v - reference).abs()));
    Ok(CompatibilityReport {
        ts: idx.iter().map(|&i| tr.ts[i]).collect(),
        values,
        reference,
        max_deviation,
        tolerance: COMPATIBILITY_TOLERANCE,
        pass: max_deviation <= COMPATIBILITY_TOLERANCE,
    })
}

/// Averaged Riemannian metric of the structure at `p`.
pub fn averaged_metric(fs: &FinslerStructure, p: Point2, quad_points: usize) -> Result<Mat2> {
    let ind = indicatrix_at(fs, p, None)?;
    let minv = inv2(&ind.matrix)?;
    let base = fs.base;
    averaged_metric_of(&|v| gauge(&base, mat_vec(&minv, v)), quad_points)
}

/// `Mᵀ A M`.
pub fn congruence(m: &Mat2, a: &Mat2) -> Mat2 {
    let mt = [[m[0][0], m[1][0]], [m[0][1], m[1][1]]];
    mat_mul(&mt, &mat_mul(a, m))
}

/// Max deviation of sampled boundary points from the least-squares ellipse
/// `vᵀ Q v = 1` centred at the origin. Zero for indicatrices of inner
/// products.
pub fn ellipse_fit_residual(e: &TrifocalEllipse, n: usize) -> f64 {
    let pts = e.boundary(n);
    // normal equations for (a, b, c) in a x² + 2b xy + c y² = 1
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for v in &pts {
        let row = [v[0] * v[0], 2.0 * v[0] * v[1], v[1] * v[1]];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i];
        }
    }
    let q = solve3(ata, atb);
    pts.iter()
        .map(|v| (q[0] * v[0] * v[0] + 2.0 * q[1] * v[0] * v[1] + q[2] * v[1] * v[1] - 1.0).abs())
        .fold(0.0, f64::max)
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        *o = det(&m) / d;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::semi_symmetric;
    use crate::geometry::{Metric2D, OneForm};

    fn euclid_structure() -> FinslerStructure {
        let rho = OneForm::new("u2du1-u1du2", |p| [p.u2, -p.u1]);
        let conn = semi_symmetric(&Metric2D::euclidean(), &rho);
        FinslerStructure::new(Point2::new(0.0, 0.0), TrifocalEllipse::standard(), conn).unwrap()
    }

    #[test]
    fn membership_values() {
        let e = TrifocalEllipse::standard();
        assert_eq!(membership(&e, [0.0, 0.0]), -2.0);
        assert!(membership(&e, [4.0 / 3.0, 0.0]).abs() < 1e-15);
        // positive root of 3y² + 8y − 12 = 0
        let y = (-8.0 + (64.0f64 + 144.0).sqrt()) / 6.0;
        assert!((y - 1.070367).abs() < 1e-6);
        assert!(membership(&e, [0.0, y]).abs() < 1e-14);
        assert!(membership(&e, [5.0, 5.0]) > 0.0);
    }

    #[test]
    fn gauge_values() {
        let e = TrifocalEllipse::standard();
        assert!((gauge(&e, [4.0 / 3.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((gauge(&e, [1.0, 0.0]).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(gauge(&e, [0.0, 0.0]).unwrap(), 0.0);
        assert!(gauge(&e, [f64::NAN, 0.0]).is_err());
        let huge = gauge(&e, [1e6, -3e5]).unwrap();
        assert!((gauge(&e, [1.0, -0.3]).unwrap() * 1e6 - huge).abs() < 1e-6 * huge);
    }

    #[test]
    fn ellipse_validation() {
        assert!(TrifocalEllipse::new([1.0, 0.0], 2.0).is_err());
        assert!(TrifocalEllipse::new([1.0, 0.0], 2.1).is_ok());
        assert!(TrifocalEllipse::circle(1.0).is_ok());
    }

    #[test]
    fn norm_at_base_is_gauge() {
        let fs = euclid_structure();
        let f = finsler_norm(&fs, fs.base_point(), [0.3, 0.2], None).unwrap();
        assert!((f - gauge(&TrifocalEllipse::standard(), [0.3, 0.2]).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn path_mismatch_rejected() {
        let fs = euclid_structure();
        let wrong = Curve::segment(Point2::new(1.0, 0.0), Point2::new(1.0, 1.0));
        assert!(matches!(
            finsler_norm(&fs, Point2::new(1.0, 1.0), [1.0, 0.0], Some(&wrong)),
            Err(Error::PathMismatch(_))
        ));
    }

    #[test]
    fn nontrivial_holonomy_rejected() {
        let conn = Connection2D::levi_civita(&Metric2D::hyperbolic());
        assert!(FinslerStructure::new(Point2::new(0.0, 1.0), TrifocalEllipse::standard(), conn).is_err());
    }

    #[test]
    fn circle_averaged_metric_is_round() {
        let e = TrifocalEllipse::circle(1.0).unwrap();
        let m = averaged_metric_of(&|v| gauge(&e, v), 720).unwrap();
        let tau = std::f64::consts::TAU;
        assert!((m[0][0] - tau).abs() < 1e-3 && (m[1][1] - tau).abs() < 1e-3 && m[0][1].abs() < 1e-3);
    }

    #[test]
    fn trifocal_is_not_an_ellipse() {
        assert!(ellipse_fit_residual(&TrifocalEllipse::standard(), 360) >= 1e-2);
        assert!(ellipse_fit_residual(&TrifocalEllipse::circle(2.0).unwrap(), 360) < 1e-12);
    }

    #[test]
    fn same_level_variant_degenerates_when_foci_spread() {
        let ind = TranslatedIndicatrix {
            point: Point2::new(0.0, 3.0),
            matrix: [[3.0, 0.0], [0.0, 3.0]],
            base: TrifocalEllipse::standard(),
        };
        assert!(ind.same_level_variant().is_none());
        assert_eq!(ind.foci()[2], [3.0, 0.0]);
    }
}
