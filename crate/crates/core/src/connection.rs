//! Linear connections on a chart: the semi-symmetric metric connection
//! determined by a metric and a torsion 1-form, plus the checks that tie it
//! back to the metric (torsion, curvature, metricity, divergence identity).

use std::fmt;
use std::sync::Arc;

use crate::diff::CURVATURE_STEP;
use crate::error::{Error, Result};
use crate::geometry::{
    self, christoffel_lc, divergence, gauss_curvature, outside, sharp_field, Christoffel, FieldFn, Metric2D,
    OneForm, Point2, Riemann, VectorField,
};

/// Default pass threshold for the divergence representation check.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-5;

type CoeffFn = Arc<dyn Fn(Point2) -> Result<Christoffel> + Send + Sync>;

/// Connection coefficients `Γ^k_ij`, with `∇_{∂_i} ∂_j = Γ^k_ij ∂_k`.
#[derive(Clone)]
pub struct Connection2D {
    name: String,
    coeffs: CoeffFn,
    domain: FieldFn<bool>,
    torsion_form: Option<OneForm>,
}

impl fmt::Debug for Connection2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Connection2D")
            .field("name", &self.name)
            .field("torsion_form", &self.torsion_form.as_ref().map(|r| r.name().to_string()))
            .finish()
    }
}

impl Connection2D {
    pub fn new(
        name: impl Into<String>,
        domain: FieldFn<bool>,
        coeffs: impl Fn(Point2) -> Result<Christoffel> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), coeffs: Arc::new(coeffs), domain, torsion_form: None }
    }

    /// Levi-Civita connection of `metric`.
    pub fn levi_civita(metric: &Metric2D) -> Self {
        let m = metric.clone();
        Self::new(format!("levi-civita[{}]", metric.name()), metric.domain_fn(), move |p| christoffel_lc(&m, p))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn torsion_form(&self) -> Option<&OneForm> {
        self.torsion_form.as_ref()
    }

    pub fn contains(&self, p: Point2) -> bool {
        (self.domain)(p)
    }

    pub fn domain_fn(&self) -> FieldFn<bool> {
        self.domain.clone()
    }

    /// Coefficients at `p`; fails outside the domain or on non-finite values.
    pub fn coefficients(&self, p: Point2) -> Result<Christoffel> {
        if !self.contains(p) {
            return Err(outside(p));
        }
        let c = (self.coeffs)(p)?;
        if c.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("connection {} at {}", self.name, p)));
        }
        Ok(c)
    }

    /// Same connection with `delta` added to a single coefficient.
    pub fn perturbed(&self, k: usize, i: usize, j: usize, delta: f64) -> Self {
        let base = self.clone();
        let mut out = Self::new(format!("{}+δΓ^{}_{}{}", self.name, k + 1, i + 1, j + 1), self.domain.clone(), move |p| {
            let mut c = base.coefficients(p)?;
            c[k][i][j] += delta;
            Ok(c)
        });
        out.torsion_form = self.torsion_form.clone();
        out
    }
}

/// `∇_X Y = ∇*_X Y − ρ(Y) X + γ(X, Y) ρ♯`, i.e.
/// `Γ^k_ij = Γ*^k_ij − ρ_j δ^k_i + γ_ij ρ^k`.
pub fn semi_symmetric(metric: &Metric2D, rho: &OneForm) -> Connection2D {
    let m = metric.clone();
    let r = rho.clone();
    let mut conn = Connection2D::new(
        format!("semi-symmetric[{}, {}]", metric.name(), rho.name()),
        metric.domain_fn(),
        move |p| {
            let mut gamma = christoffel_lc(&m, p)?;
            let g = m.at(p)?;
            let lower = r.try_at(p)?;
            let upper = geometry::sharp(&m, &r, p)?;
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let delta = if k == i { 1.0 } else { 0.0 };
                        gamma[k][i][j] += -lower[j] * delta + g[i][j] * upper[k];
                    }
                }
            }
            Ok(gamma)
        },
    );
    conn.torsion_form = Some(rho.clone());
    conn
}

/// `T^k_ij = Γ^k_ij − Γ^k_ji`.
pub fn torsion(conn: &Connection2D, p: Point2) -> Result<Christoffel> {
    let c = conn.coefficients(p)?;
    let mut t = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                t[k][i][j] = c[k][i][j] - c[k][j][i];
            }
        }
    }
    Ok(t)
}

/// Reads `(ρ_1, ρ_2) = (T^2_12, −T^1_12)` off a torsion of the form
/// `T(X, Y) = ρ(X) Y − ρ(Y) X`.
pub fn torsion_oneform(t: &Christoffel) -> [f64; 2] {
    [t[1][0][1], -t[0][0][1]]
}

/// Coordinate curvature `R^l_kij` by differencing the coefficients.
pub fn curvature_tensor(conn: &Connection2D, p: Point2) -> Result<Riemann> {
    let coeffs = |q: Point2| conn.coefficients(q);
    let domain = |q: Point2| conn.contains(q);
    geometry::riemann_from_coefficients(&coeffs, &domain, p, CURVATURE_STEP)
}

/// Largest component of the curvature tensor in absolute value.
pub fn max_curvature_component(conn: &Connection2D, p: Point2) -> Result<f64> {
    let r = curvature_tensor(conn, p)?;
    Ok(r.iter().flatten().flatten().flatten().fold(0.0f64, |m, x| m.max(x.abs())))
}

/// `max_{ijk} |∂_k γ_ij − Γ^m_ki γ_mj − Γ^m_kj γ_im|`; zero iff `∇γ = 0` at `p`.
pub fn metric_defect(conn: &Connection2D, metric: &Metric2D, p: Point2) -> Result<f64> {
    let c = conn.coefficients(p)?;
    let g = metric.at(p)?;
    let dg = metric.partials(p)?;
    let mut worst: f64 = 0.0;
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut v = dg[k][i][j];
                for m in 0..2 {
                    v -= c[m][k][i] * g[m][j] + c[m][k][j] * g[i][m];
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Per-point record of `κ*(p) + div* X(p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResidual {
    pub point: Point2,
    pub curvature: f64,
    pub divergence: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub points: Vec<PointResidual>,
    pub max: f64,
    pub mean: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl DivergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u1,u2,kappa,div,residual\n");
        for r in &self.points {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                r.point.u1, r.point.u2, r.curvature, r.divergence, r.residual
            ));
        }
        out
    }
}

/// Checks `κ* = −div* ρ♯` on the sample points.
pub fn verify_divergence_representation(
    metric: &Metric2D,
    rho: &OneForm,
    sample: &[Point2],
    tolerance: f64,
) -> Result<DivergenceReport> {
    verify_divergence_field(metric, &sharp_field(metric, rho), sample, tolerance)
}

/// Same check for a vector field given directly.
pub fn verify_divergence_field(
    metric: &Metric2D,
    x: &VectorField,
    sample: &[Point2],
    tolerance: f64,
) -> Result<DivergenceReport> {
    use rayon::prelude::*;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let points = sample
        .par_iter()
        .map(|&p| {
            let k = gauss_curvature(metric, p)?;
            let d = divergence(metric, x, p)?;
            Ok(PointResidual { point: p, curvature: k, divergence: d, residual: k + d })
        })
        .collect::<Result<Vec<_>>>()?;
    let max = points.iter().fold(0.0f64, |m, r| m.max(r.residual.abs()));
    let mean = points.iter().map(|r| r.residual.abs()).sum::<f64>() / points.len() as f64;
    Ok(DivergenceReport { points, max, mean, tolerance, pass: max <= tolerance })
}

/// Uniform `n1 × n2` grid on `[a1, b1] × [a2, b2]`, endpoints included.
pub fn grid(range1: (f64, f64), range2: (f64, f64), n1: usize, n2: usize) -> Vec<Point2> {
    let lin = |(a, b): (f64, f64), n: usize, i: usize| if n <= 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 };
    let mut out = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            out.push(Point2::new(lin(range1, n1, i), lin(range2, n2, j)));
        }
    }
    out
}

/// [`metric_defect`] with `∂_k γ_ij` always taken by finite differences of
/// the metric entries, ignoring any analytic partials.
pub fn metric_defect_numeric(conn: &Connection2D, metric: &Metric2D, p: Point2) -> Result<f64> {
    let (m, d) = (metric.clone(), metric.clone());
    let stripped = Metric2D::new(
        format!("{} (differenced)", metric.name()),
        move |q| m.at(q).unwrap_or([[f64::NAN; 2]; 2]),
        move |q| d.contains(q),
    );
    metric_defect(conn, &stripped, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{potential_to_oneform, potentials, SurfaceKind};

    fn hyp_example() -> (Metric2D, OneForm) {
        let rho = potential_to_oneform(SurfaceKind::Hyperbolic, &potentials::hyp_log()).unwrap();
        (Metric2D::hyperbolic(), rho)
    }

    #[test]
    fn hyperbolic_example_coefficients() {
        let (m, rho) = hyp_example();
        let c = semi_symmetric(&m, &rho).coefficients(Point2::new(0.0, 2.0)).unwrap();
        let expect = [[[0.0, 0.0], [-0.5, 0.5]], [[0.0, 0.0], [-0.5, -0.5]]];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert!((c[k][i][j] - expect[k][i][j]).abs() < 1e-14, "Γ^{}_{}{}", k + 1, i + 1, j + 1);
                }
            }
        }
    }

    #[test]
    fn zero_form_gives_levi_civita() {
        let m = Metric2D::hyperbolic();
        let p = Point2::new(0.4, 1.7);
        let a = semi_symmetric(&m, &OneForm::zero()).coefficients(p).unwrap();
        let b = Connection2D::levi_civita(&m).coefficients(p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn torsion_recovers_form() {
        let (m, rho) = hyp_example();
        let conn = semi_symmetric(&m, &rho);
        let p = Point2::new(-0.3, 0.9);
        let t = torsion(&conn, p).unwrap();
        let r = rho.at(p);
        assert!((t[1][0][1] - r[0]).abs() < 1e-12);
        assert!((t[0][1][0] - r[1]).abs() < 1e-12);
        let back = torsion_oneform(&t);
        assert!((back[0] - r[0]).abs() < 1e-12 && (back[1] - r[1]).abs() < 1e-12);
        let lc = torsion(&Connection2D::levi_civita(&m), p).unwrap();
        assert!(lc.iter().flatten().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn worked_examples_are_flat() {
        let e = Metric2D::euclidean();
        let rho = OneForm::new("u2du1-u1du2", |p| [p.u2, -p.u1]);
        let r = max_curvature_component(&semi_symmetric(&e, &rho), Point2::new(0.4, -0.7)).unwrap();
        assert!(r < 1e-5, "{r}");
        let (m, rho) = hyp_example();
        let r = max_curvature_component(&semi_symmetric(&m, &rho), Point2::new(1.0, 1.3)).unwrap();
        assert!(r < 1e-5, "{r}");
    }

    #[test]
    fn levi_civita_curvature_gives_minus_one() {
        let m = Metric2D::hyperbolic();
        let p = Point2::new(0.0, 1.0);
        let r = curvature_tensor(&Connection2D::levi_civita(&m), p).unwrap();
        let g = m.at(p).unwrap();
        let k = (g[0][0] * r[0][1][0][1] + g[1][0] * r[1][1][0][1]) / geometry::det2(&g);
        assert!((k + 1.0).abs() < 1e-6);
    }

    #[test]
    fn metric_defect_controls() {
        let (m, rho) = hyp_example();
        let conn = semi_symmetric(&m, &rho);
        let p = Point2::new(0.5, 1.5);
        assert!(metric_defect(&conn, &m, p).unwrap() < 1e-12);
        assert!(metric_defect(&Connection2D::levi_civita(&m), &m, p).unwrap() < 1e-12);
        assert!(metric_defect_numeric(&conn, &m, p).unwrap() < 1e-6);
        let bad = conn.perturbed(0, 0, 0, 0.1);
        assert!(metric_defect(&bad, &m, p).unwrap() >= 0.05);
    }

    #[test]
    fn divergence_report_controls() {
        let (m, rho) = hyp_example();
        let pts = grid((-2.0, 2.0), (0.2, 3.0), 5, 5);
        let ok = verify_divergence_representation(&m, &rho, &pts, DIVERGENCE_TOLERANCE).unwrap();
        assert!(ok.pass, "max {}", ok.max);
        let bad = verify_divergence_representation(&m, &OneForm::zero(), &pts, DIVERGENCE_TOLERANCE).unwrap();
        assert!(!bad.pass);
        assert!((bad.max - 1.0).abs() < 1e-5 && (bad.mean - 1.0).abs() < 1e-5);
        assert!(bad.to_csv().lines().count() == 26);
        assert_eq!(
            verify_divergence_representation(&m, &rho, &[], 1e-5).unwrap_err(),
            Error::EmptySample
        );
    }
}
