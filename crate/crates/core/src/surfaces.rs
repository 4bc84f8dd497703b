//! Built-in surfaces and the divergence solver on products of lines and
//! circles.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::connection::grid;
use crate::diff::{self, FIRST_DERIVATIVE_STEP};
use crate::error::{Error, Result};
use crate::geometry::{gauss_curvature, Metric2D, Point2, ScalarField, SurfaceKind, VectorField};

/// Default Simpson subintervals for the `u²` integral.
pub const DEFAULT_QUAD_STEPS: usize = 512;
/// Pass threshold for periodicity of solved fields.
pub const PERIODICITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Plane,
    Cylinder,
    Torus,
}

/// A metric on `ℝ²` that may descend to a cylinder or torus through the
/// declared translation periods (0 = not periodic in that slot).
#[derive(Clone)]
pub struct PeriodicSurface {
    name: String,
    kind: SurfaceKind,
    metric: Metric2D,
    periods: (f64, f64),
    curvature: Option<ScalarField>,
}

impl fmt::Debug for PeriodicSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicSurface")
            .field("name", &self.name)
            .field("periods", &self.periods)
            .field("topology", &self.topology())
            .finish()
    }
}

impl PeriodicSurface {
    pub fn euclidean() -> Self {
        Self {
            name: "euclidean".into(),
            kind: SurfaceKind::Euclidean,
            metric: Metric2D::euclidean(),
            periods: (0.0, 0.0),
            curvature: Some(ScalarField::zero()),
        }
    }

    pub fn hyperbolic() -> Self {
        Self {
            name: "hyperbolic".into(),
            kind: SurfaceKind::Hyperbolic,
            metric: Metric2D::hyperbolic(),
            periods: (0.0, 0.0),
            curvature: Some(ScalarField::constant(-1.0)),
        }
    }

    pub fn flat_torus() -> Self {
        Self { name: "flat-torus".into(), periods: (TAU, TAU), ..Self::euclidean() }
    }

    /// `e^{2σ} δ` with `σ = a sin(k1 u¹) sin(k2 u²)`; `k1, k2` nonzero integers.
    pub fn conformal_torus(a: f64, k1: f64, k2: f64) -> Result<Self> {
        if k1 == 0.0 || k2 == 0.0 || k1.fract() != 0.0 || k2.fract() != 0.0 {
            return Err(Error::InvalidArgument(format!("frequencies must be nonzero integers, got ({k1}, {k2})")));
        }
        let sigma = ScalarField::new(format!("{a} sin({k1} u1) sin({k2} u2)"), move |p| {
            a * (k1 * p.u1).sin() * (k2 * p.u2).sin()
        })
        .with_gradient(move |p| {
            [a * k1 * (k1 * p.u1).cos() * (k2 * p.u2).sin(), a * k2 * (k1 * p.u1).sin() * (k2 * p.u2).cos()]
        });
        let laplacian = move |p: Point2| -a * (k1 * k1 + k2 * k2) * (k1 * p.u1).sin() * (k2 * p.u2).sin();
        Ok(Self::conformal(format!("conformal-torus({a}, {k1}, {k2})"), sigma, laplacian, (TAU, TAU)))
    }

    /// `e^{2σ} δ` with declared curvature `−e^{−2σ} Δσ`.
    pub fn conformal(
        name: impl Into<String>,
        sigma: ScalarField,
        laplacian: impl Fn(Point2) -> f64 + Send + Sync + 'static,
        periods: (f64, f64),
    ) -> Self {
        let s = sigma.clone();
        let lap = Arc::new(laplacian);
        let curvature = ScalarField::new("-exp(-2σ)Δσ", move |p| -(-2.0 * s.value(p)).exp() * lap(p));
        Self {
            name: name.into(),
            kind: SurfaceKind::Conformal,
            metric: Metric2D::conformal(sigma),
            periods,
            curvature: Some(curvature),
        }
    }

    /// Catalogue lookup: `euclidean`, `hyperbolic`, `flat-torus`,
    /// `conformal-torus(a, k1, k2)`.
    pub fn from_name(name: &str) -> Result<Self> {
        let name = name.trim();
        match name {
            "euclidean" => return Ok(Self::euclidean()),
            "hyperbolic" => return Ok(Self::hyperbolic()),
            "flat-torus" => return Ok(Self::flat_torus()),
            _ => {}
        }
        if let Some(args) = name.strip_prefix("conformal-torus").map(str::trim) {
            let inner = args
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| Error::InvalidArgument(format!("malformed surface name {name:?}")))?;
            let vals = inner
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("{name:?}: {e}")))?;
            if vals.len() != 3 {
                return Err(Error::InvalidArgument(format!("{name:?}: expected 3 parameters")));
            }
            return Self::conformal_torus(vals[0], vals[1], vals[2]);
        }
        Err(Error::Unsupported(name.to_string()))
    }

    /// Redeclares the periods; the topology follows from them.
    pub fn with_periods(mut self, periods: (f64, f64)) -> Self {
        self.periods = periods;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn metric(&self) -> &Metric2D {
        &self.metric
    }

    pub fn periods(&self) -> (f64, f64) {
        self.periods
    }

    pub fn topology(&self) -> Topology {
        match (self.periods.0 > 0.0, self.periods.1 > 0.0) {
            (false, false) => Topology::Plane,
            (true, true) => Topology::Torus,
            _ => Topology::Cylinder,
        }
    }

    pub fn declared_curvature(&self) -> Option<&ScalarField> {
        self.curvature.as_ref()
    }

    /// Declared curvature when the catalogue provides one, otherwise the
    /// numerically computed Gauss curvature.
    pub fn curvature_at(&self, p: Point2) -> Result<f64> {
        if !self.metric.contains(p) {
            return Err(Error::OutsideDomain { u1: p.u1, u2: p.u2 });
        }
        match &self.curvature {
            Some(k) => Ok(k.value(p)),
            None => gauss_curvature(&self.metric, p),
        }
    }

    /// Coordinate box used for sample grids: one fundamental period in
    /// periodic directions, a fixed window otherwise.
    pub fn sample_box(&self) -> ((f64, f64), (f64, f64)) {
        let r1 = if self.periods.0 > 0.0 { (0.0, self.periods.0) } else { (-2.0, 2.0) };
        let r2 = if self.periods.1 > 0.0 {
            (0.0, self.periods.1)
        } else if self.kind == SurfaceKind::Hyperbolic {
            (0.2, 3.0)
        } else {
            (-2.0, 2.0)
        };
        (r1, r2)
    }

    /// `n1 × n2` grid over [`sample_box`](Self::sample_box), excluding the
    /// right end of periodic ranges.
    pub fn sample_grid(&self, n1: usize, n2: usize) -> Vec<Point2> {
        let (r1, r2) = self.sample_box();
        let axis = |(a, b): (f64, f64), period: f64, n: usize| -> Vec<f64> {
            if period > 0.0 {
                (0..n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
            } else {
                grid((a, b), (0.0, 0.0), n, 1).into_iter().map(|p| p.u1).collect()
            }
        };
        let xs = axis(r1, self.periods.0, n1);
        let ys = axis(r2, self.periods.1, n2);
        xs.iter().flat_map(|&x| ys.iter().map(move |&y| Point2::new(x, y))).collect()
    }

    /// Max change of `det γ` and `κ*` under translation by the periods.
    pub fn translation_defect(&self, samples: &[Point2]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for shift in self.period_shifts() {
            for &p in samples {
                let q = p.offset(shift);
                worst = worst.max((self.metric.det(q)? - self.metric.det(p)?).abs());
                worst = worst.max((self.curvature_at(q)? - self.curvature_at(p)?).abs());
            }
        }
        Ok(worst)
    }

    fn period_shifts(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        if self.periods.0 > 0.0 {
            out.push([self.periods.0, 0.0]);
        }
        if self.periods.1 > 0.0 {
            out.push([0.0, self.periods.1]);
        }
        out
    }
}

/// Free data of the divergence solver: `X¹`, the function `c(u¹)` and `c₀`.
#[derive(Debug, Clone)]
pub struct SolverData {
    pub x1: ScalarField,
    pub c_fn: ScalarField,
    pub c0: f64,
    pub quad_steps: usize,
}

impl Default for SolverData {
    fn default() -> Self {
        Self { x1: ScalarField::zero(), c_fn: ScalarField::zero(), c0: 0.0, quad_steps: DEFAULT_QUAD_STEPS }
    }
}

/// `X²(u¹, u²) = −(1/√det γ) (∫₀^{u²} [κ* √det γ + ∂_1(√det γ X¹)](u¹, t) dt + c(u¹) + c₀)`
/// by composite Simpson quadrature. `c_fn` is evaluated at `(u¹, 0)`.
pub fn solve_x2(
    surface: &PeriodicSurface,
    x1: &ScalarField,
    c_fn: &ScalarField,
    c0: f64,
    p: Point2,
    quad_steps: usize,
) -> Result<f64> {
    if quad_steps < 2 {
        return Err(Error::InvalidArgument("quad_steps must be at least 2".into()));
    }
    let n = quad_steps + quad_steps % 2;
    let metric = surface.metric();
    let domain = |q: Point2| metric.contains(q);
    let sqrt_det = |q: Point2| -> Result<f64> { Ok(metric.det(q)?.sqrt()) };
    let integrand = |t: f64| -> Result<f64> {
        let q = Point2::new(p.u1, t);
        let k = surface.curvature_at(q)? * sqrt_det(q)?;
        let h = diff::relative_step(q, 0, FIRST_DERIVATIVE_STEP);
        let flux = diff::partial_scalar(|r| Ok(sqrt_det(r)? * x1.value(r)), &domain, q, 0, h)?;
        Ok(k + flux)
    };
    let h = p.u2 / n as f64;
    let mut sum = integrand(0.0)? + integrand(p.u2)?;
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * integrand(i as f64 * h)?;
    }
    let integral = sum * h / 3.0;
    let c = c_fn.value(Point2::new(p.u1, 0.0));
    Ok(-(integral + c + c0) / sqrt_det(p)?)
}

/// The field `(X¹, X²)` with `X²` from [`solve_x2`]; NaN where the solver fails.
pub fn divergence_field(surface: &PeriodicSurface, data: &SolverData) -> VectorField {
    let s = surface.clone();
    let d = data.clone();
    VectorField::new(format!("X[{}]", surface.name()), move |p| {
        let x2 = solve_x2(&s, &d.x1, &d.c_fn, d.c0, p, d.quad_steps).unwrap_or(f64::NAN);
        [d.x1.value(p), x2]
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicityReport {
    /// Max component deviation for the `u¹` and `u²` periods (0 if not declared).
    pub deviation: [f64; 2],
    pub max: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares `X(p + period)` with `X(p)` on an 8×8 grid per declared period.
pub fn check_periodicity(surface: &PeriodicSurface, x: &VectorField) -> Result<PeriodicityReport> {
    check_periodicity_on(surface, x, &surface.sample_grid(8, 8))
}

pub fn check_periodicity_on(surface: &PeriodicSurface, x: &VectorField, samples: &[Point2]) -> Result<PeriodicityReport> {
    use rayon::prelude::*;
    let (t1, t2) = surface.periods();
    if !(t1 > 0.0 || t2 > 0.0) {
        return Err(Error::NotPeriodic);
    }
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut deviation = [0.0; 2];
    for (slot, shift) in [[t1, 0.0], [0.0, t2]].into_iter().enumerate() {
        if shift[slot] <= 0.0 {
            continue;
        }
        let devs = samples
            .par_iter()
            .map(|&p| {
                let a = x.try_at(p)?;
                let b = x.try_at(p.offset(shift))?;
                Ok((a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            })
            .collect::<Result<Vec<f64>>>()?;
        deviation[slot] = devs.into_iter().fold(0.0, f64::max);
    }
    let max = deviation[0].max(deviation[1]);
    Ok(PeriodicityReport { deviation, max, tolerance: PERIODICITY_TOLERANCE, pass: max <= PERIODICITY_TOLERANCE })
}

/// `∫∫ κ* √det γ du¹ du²` over one fundamental domain by the periodic
/// trapezoid rule; `2π χ = 0` on a torus.
pub fn gauss_bonnet_integral(surface: &PeriodicSurface, grid: (usize, usize)) -> Result<f64> {
    use rayon::prelude::*;
    if surface.topology() != Topology::Torus {
        return Err(Error::Unsupported(format!("{} is not a torus", surface.name())));
    }
    let (n1, n2) = grid;
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidArgument("empty integration grid".into()));
    }
    let (t1, t2) = surface.periods();
    let metric = surface.metric();
    let cell = (t1 / n1 as f64) * (t2 / n2 as f64);
    let total = (0..n1 * n2)
        .into_par_iter()
        .map(|idx| {
            let p = Point2::new(t1 * (idx / n2) as f64 / n1 as f64, t2 * (idx % n2) as f64 / n2 as f64);
            Ok(gauss_curvature(metric, p)? * metric.det(p)?.sqrt())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum::<f64>();
    Ok(total * cell)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_names() {
        for n in ["euclidean", "hyperbolic", "flat-torus", "conformal-torus(0.1, 1, 1)"] {
            assert!(PeriodicSurface::from_name(n).is_ok(), "{n}");
        }
        assert!(matches!(PeriodicSurface::from_name("sphere"), Err(Error::Unsupported(_))));
        assert!(PeriodicSurface::from_name("conformal-torus(0.1, 1)").is_err());
        assert!(PeriodicSurface::from_name("conformal-torus(0.1, 0.5, 1)").is_err());
        assert_eq!(PeriodicSurface::flat_torus().topology(), Topology::Torus);
        assert_eq!(PeriodicSurface::hyperbolic().topology(), Topology::Plane);
        assert_eq!(PeriodicSurface::flat_torus().with_periods((0.0, TAU)).topology(), Topology::Cylinder);
    }

    #[test]
    fn trivial_solver_cases() {
        let e = PeriodicSurface::euclidean();
        let z = ScalarField::zero();
        for p in [Point2::new(0.0, 0.0), Point2::new(1.0, -2.0), Point2::new(-3.0, 5.0)] {
            assert!((solve_x2(&e, &z, &z, -1.0, p, 16).unwrap() - 1.0).abs() < 1e-14);
        }
        let unit = PeriodicSurface { curvature: Some(ScalarField::constant(1.0)), ..PeriodicSurface::euclidean() };
        let p = Point2::new(0.4, 1.7);
        assert!((solve_x2(&unit, &z, &z, 0.0, p, 16).unwrap() + 1.7).abs() < 1e-13);
        assert!(solve_x2(&e, &z, &z, 0.0, p, 1).is_err());
    }

    #[test]
    fn declared_curvature_matches_numeric() {
        let s = PeriodicSurface::conformal_torus(0.1, 1.0, 1.0).unwrap();
        for p in s.sample_grid(6, 6) {
            let a = s.curvature_at(p).unwrap();
            let b = gauss_curvature(s.metric(), p).unwrap();
            assert!((a - b).abs() < 1e-8, "{p}: {a} vs {b}");
        }
        assert!(s.translation_defect(&s.sample_grid(5, 5)).unwrap() < 1e-10);
    }

    #[test]
    fn periodicity_controls() {
        let t = PeriodicSurface::flat_torus();
        let rot = VectorField::new("rot", |p| [p.u2, -p.u1]);
        assert!(!check_periodicity(&t, &rot).unwrap().pass);
        let c = VectorField::new("c", |_| [0.3, -2.0]);
        assert!(check_periodicity(&t, &c).unwrap().pass);
        assert_eq!(check_periodicity(&PeriodicSurface::euclidean(), &c).unwrap_err(), Error::NotPeriodic);
    }

    #[test]
    fn flat_torus_gauss_bonnet_is_zero() {
        assert_eq!(gauss_bonnet_integral(&PeriodicSurface::flat_torus(), (8, 8)).unwrap(), 0.0);
        assert!(gauss_bonnet_integral(&PeriodicSurface::euclidean(), (8, 8)).is_err());
    }
}
