//! Scenario files: flat `key = value` lines with dotted keys.
//!
//! Blank lines and lines starting with `#` are ignored. Numbers may be
//! written as constant expressions (`2*pi`), vectors as comma-separated
//! numbers, and point lists as `x, y; x, y; ...`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::expr::Expr;
use crate::finsler::TrifocalEllipse;
use crate::geometry::{potential_to_oneform, potentials, OneForm, Point2, ScalarField, SurfaceKind, Vec2};
use crate::surfaces::{PeriodicSurface, SolverData, DEFAULT_QUAD_STEPS};
use crate::transport::{Curve, DEFAULT_STEPS};

use super::CliError;

/// Settings for the grid and probe loop used by `verify`.
#[derive(Debug, Clone)]
pub struct VerifySettings {
    pub range1: (f64, f64),
    pub range2: (f64, f64),
    pub n: usize,
    pub loop_center: Point2,
    pub loop_radius: f64,
}

#[derive(Debug, Clone)]
pub struct FigureSettings {
    pub frames: usize,
    pub times: Option<Vec<f64>>,
    pub scale: f64,
}

#[derive(Debug, Clone)]
pub struct TorusSettings {
    pub data: SolverData,
    pub grid: usize,
    pub bonnet_grid: usize,
}

/// A parsed scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub surface: PeriodicSurface,
    pub rho: OneForm,
    /// Potential the 1-form was built from, when given by potential.
    pub potential: Option<ScalarField>,
    pub curve: Option<Curve>,
    pub initial: Vec2,
    /// RK4 steps per unit of curve parameter.
    pub steps: usize,
    pub indicatrix: Option<TrifocalEllipse>,
    pub base_point: Point2,
    pub figure: FigureSettings,
    pub verify: VerifySettings,
    pub torus: TorusSettings,
    pub out_dir: Option<PathBuf>,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!("line {}: expected `key = value`", i + 1)));
            };
            let key = k.trim().to_string();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-') {
                return Err(CliError::Config(format!("line {}: bad key {key:?}", i + 1)));
            }
            if map.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key {key}", i + 1)));
            }
        }
        Ok(Self { map })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn invalid(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        let line = self.map.get(key).map(|(l, _)| *l).unwrap_or(0);
        CliError::Config(format!("line {line}: {key}: {msg}"))
    }

    fn expr(&self, key: &str) -> Result<Option<Expr>, CliError> {
        self.get(key).map(|v| Expr::parse(v).map_err(|e| self.invalid(key, e))).transpose()
    }

    fn number(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.expr(key)? {
            Some(e) => {
                let v = e.eval(Point2::new(0.0, 0.0));
                if v.is_finite() && e.gradient(Point2::new(0.0, 0.0)) == [0.0, 0.0] {
                    Ok(Some(v))
                } else {
                    Err(self.invalid(key, "expected a finite constant"))
                }
            }
            None => Ok(None),
        }
    }

    fn count(&self, key: &str) -> Result<Option<usize>, CliError> {
        match self.get(key) {
            Some(v) => v.parse::<usize>().map(Some).map_err(|e| self.invalid(key, e)),
            None => Ok(None),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some(v) = self.get(key) else { return Ok(None) };
        v.split(',')
            .map(|s| {
                let e = Expr::parse(s).map_err(|e| self.invalid(key, e))?;
                let x = e.eval(Point2::new(0.0, 0.0));
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(self.invalid(key, "non-finite entry"))
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn vector(&self, key: &str) -> Result<Option<Vec2>, CliError> {
        match self.list(key)? {
            Some(v) if v.len() == 2 => Ok(Some([v[0], v[1]])),
            Some(_) => Err(self.invalid(key, "expected two components")),
            None => Ok(None),
        }
    }

    fn point(&self, key: &str) -> Result<Option<Point2>, CliError> {
        Ok(self.vector(key)?.map(Point2::from))
    }

    fn range(&self, key: &str) -> Result<Option<(f64, f64)>, CliError> {
        Ok(self.vector(key)?.map(|v| (v[0], v[1])))
    }

    fn require<T>(&self, key: &str, v: Option<T>) -> Result<T, CliError> {
        v.ok_or_else(|| CliError::Config(format!("missing key {key}")))
    }
}

const KNOWN_KEYS: &[&str] = &[
    "name",
    "surface.name",
    "surface.periods",
    "rho.kind",
    "rho.potential",
    "rho.rho1",
    "rho.rho2",
    "curve.kind",
    "curve.from",
    "curve.to",
    "curve.origin",
    "curve.direction",
    "curve.center",
    "curve.radius",
    "curve.t0",
    "curve.t1",
    "curve.points",
    "curve.at",
    "transport.initial",
    "transport.steps",
    "indicatrix.focal",
    "indicatrix.level",
    "indicatrix.base",
    "figure.frames",
    "figure.times",
    "figure.scale",
    "verify.u1",
    "verify.u2",
    "verify.n",
    "verify.loop.center",
    "verify.loop.radius",
    "torus.x1",
    "torus.c",
    "torus.c0",
    "torus.quad_steps",
    "torus.grid",
    "torus.bonnet_grid",
    "output.dir",
];

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let e = Entries::parse(text)?;
        if let Some(k) = e.map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(e.invalid(k, "unknown key"));
        }

        let surface_name = e.require("surface.name", e.get("surface.name"))?;
        let mut surface = PeriodicSurface::from_name(surface_name).map_err(|err| e.invalid("surface.name", err))?;
        if let Some(p) = e.range("surface.periods")? {
            if p.0 < 0.0 || p.1 < 0.0 {
                return Err(e.invalid("surface.periods", "periods must be non-negative"));
            }
            surface = surface.with_periods(p);
        }

        let (rho, potential) = parse_rho(&e, surface.kind())?;
        let curve = parse_curve(&e)?;

        let domain = surface.metric().domain_fn();
        let default_base = if surface.kind() == SurfaceKind::Hyperbolic { Point2::new(0.0, 1.0) } else { Point2::new(0.0, 0.0) };
        let base_point = e.point("indicatrix.base")?.unwrap_or(default_base);
        let indicatrix = match (e.vector("indicatrix.focal")?, e.number("indicatrix.level")?) {
            (None, None) => None,
            (f, l) => Some(
                TrifocalEllipse::new(f.unwrap_or([1.0, 0.0]), l.unwrap_or(4.0))
                    .map_err(|err| e.invalid("indicatrix.level", err))?,
            ),
        };
        if indicatrix.is_some() && !domain(base_point) {
            return Err(CliError::Domain(format!("indicatrix base point {base_point} outside {}", surface.name())));
        }
        if let Some(c) = &curve {
            c.check_inside(&|p| domain(p), 512)
                .map_err(|err| CliError::Domain(format!("curve {}: {err}", c.name())))?;
        }

        let ((a1, b1), (a2, b2)) = surface.sample_box();
        let default_center = Point2::new(0.5 * (a1 + b1), 0.5 * (a2 + b2));
        let verify = VerifySettings {
            range1: e.range("verify.u1")?.unwrap_or((a1, b1)),
            range2: e.range("verify.u2")?.unwrap_or((a2, b2)),
            n: e.count("verify.n")?.unwrap_or(10).max(1),
            loop_center: e.point("verify.loop.center")?.unwrap_or(match surface.kind() {
                SurfaceKind::Hyperbolic => Point2::new(0.0, 2.0),
                _ => default_center,
            }),
            loop_radius: e.number("verify.loop.radius")?.unwrap_or(1.0),
        };

        let mut data = SolverData::default();
        if let Some(x) = e.expr("torus.x1")? {
            data.x1 = x.into_scalar_field();
        }
        if let Some(c) = e.expr("torus.c")? {
            if c.gradient(Point2::new(0.37, 0.0)) != c.gradient(Point2::new(0.37, 1.0)) || c.eval(Point2::new(0.3, 0.0)) != c.eval(Point2::new(0.3, 1.7)) {
                return Err(e.invalid("torus.c", "must depend on u1 only"));
            }
            data.c_fn = c.into_scalar_field();
        }
        data.c0 = e.number("torus.c0")?.unwrap_or(0.0);
        data.quad_steps = e.count("torus.quad_steps")?.unwrap_or(DEFAULT_QUAD_STEPS);
        if data.quad_steps < 2 {
            return Err(e.invalid("torus.quad_steps", "must be at least 2"));
        }
        let torus = TorusSettings {
            data,
            grid: e.count("torus.grid")?.unwrap_or(16).max(1),
            bonnet_grid: e.count("torus.bonnet_grid")?.unwrap_or(64).max(1),
        };

        let figure = FigureSettings {
            frames: e.count("figure.frames")?.unwrap_or(3),
            times: e.list("figure.times")?,
            scale: e.number("figure.scale")?.unwrap_or(1.0),
        };
        if figure.scale <= 0.0 {
            return Err(e.invalid("figure.scale", "must be positive"));
        }

        let steps = e.count("transport.steps")?.unwrap_or(DEFAULT_STEPS);
        if steps == 0 {
            return Err(e.invalid("transport.steps", "must be at least 1"));
        }

        Ok(Scenario {
            name: e.get("name").unwrap_or(surface_name).to_string(),
            surface,
            rho,
            potential,
            curve,
            initial: e.vector("transport.initial")?.unwrap_or([1.0, 0.0]),
            steps,
            indicatrix,
            base_point,
            figure,
            verify,
            torus,
            out_dir: e.get("output.dir").map(PathBuf::from),
        })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|err| CliError::Config(format!("cannot read {}: {err}", path.display())))?;
        Self::parse(&text)
    }

    /// Total RK4 steps for a parameter interval of the given length.
    pub fn steps_for(&self, length: f64) -> usize {
        ((self.steps as f64 * length.abs()).round() as usize).max(1)
    }
}

fn parse_rho(e: &Entries, kind: SurfaceKind) -> Result<(OneForm, Option<ScalarField>), CliError> {
    match e.get("rho.kind").unwrap_or("zero") {
        "zero" => Ok((OneForm::zero(), None)),
        "potential" => {
            let spec = e.require("rho.potential", e.get("rho.potential"))?;
            let f = match potentials::by_name(spec) {
                Some(f) => f,
                None => Expr::parse(spec).map_err(|err| e.invalid("rho.potential", err))?.into_scalar_field(),
            };
            let rho = potential_to_oneform(kind, &f).map_err(|err| e.invalid("rho.potential", err))?;
            Ok((rho, Some(f)))
        }
        "form" => {
            let a = e.require("rho.rho1", e.expr("rho.rho1")?)?;
            let b = e.require("rho.rho2", e.expr("rho.rho2")?)?;
            Ok((Expr::one_form(a, b), None))
        }
        other => Err(e.invalid("rho.kind", format!("unknown kind {other:?} (zero | potential | form)"))),
    }
}

fn parse_curve(e: &Entries) -> Result<Option<Curve>, CliError> {
    let Some(kind) = e.get("curve.kind") else { return Ok(None) };
    let t0 = e.number("curve.t0")?;
    let t1 = e.number("curve.t1")?;
    let curve = match kind {
        "segment" => {
            let p = e.require("curve.from", e.point("curve.from")?)?;
            let q = e.require("curve.to", e.point("curve.to")?)?;
            if p == q {
                Curve::constant(p).restricted(0.0, 0.0)
            } else {
                Curve::segment(p, q)
            }
        }
        "radial" | "line" => {
            let origin = e.point("curve.origin")?.unwrap_or(Point2::new(0.0, 0.0));
            let dir = e.vector("curve.direction")?.unwrap_or([1.0, 1.0]);
            Curve::line(origin, dir, (t0.unwrap_or(0.0), t1.unwrap_or(1.0)))
        }
        "circle" => {
            let center = e.require("curve.center", e.point("curve.center")?)?;
            let radius = e.number("curve.radius")?.unwrap_or(1.0);
            Curve::circle(center, radius, (t0.unwrap_or(0.0), t1.unwrap_or(std::f64::consts::TAU)))
        }
        "samples" => {
            let raw = e.require("curve.points", e.get("curve.points"))?;
            let mut pts = Vec::new();
            for chunk in raw.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                let xy = chunk
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|err| e.invalid("curve.points", err))?;
                if xy.len() != 2 {
                    return Err(e.invalid("curve.points", format!("bad point {chunk:?}")));
                }
                pts.push(Point2::new(xy[0], xy[1]));
            }
            Curve::through_points(pts).map_err(|err| e.invalid("curve.points", err))?
        }
        "point" => Curve::constant(e.require("curve.at", e.point("curve.at")?)?).restricted(0.0, 0.0),
        other => return Err(e.invalid("curve.kind", format!("unknown kind {other:?}"))),
    };
    let (a, b) = curve.span();
    if b < a {
        return Err(e.invalid("curve.t1", "curve parameter must not decrease"));
    }
    Ok(Some(curve))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_hyperbolic_line() {
        let s = Scenario::parse(
            "# half-plane line\nsurface.name = hyperbolic\nrho.kind = potential\nrho.potential = hyp-log\n\
             curve.kind = line\ncurve.origin = 0, 1\ncurve.direction = 1, 1\ncurve.t1 = e - 1\n\
             indicatrix.focal = 1, 0\nindicatrix.level = 4\n",
        )
        .unwrap();
        assert_eq!(s.base_point, Point2::new(0.0, 1.0));
        let c = s.curve.unwrap();
        assert!((c.span().1 - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        assert_eq!(s.indicatrix.unwrap(), TrifocalEllipse::standard());
        assert_eq!(s.rho.at(Point2::new(0.0, 2.0)), [0.5, -0.5]);
    }

    #[test]
    fn config_errors() {
        for bad in [
            "",
            "surface.name = sphere",
            "surface.name = euclidean\nbogus.key = 1",
            "surface.name = euclidean\nsurface.name = hyperbolic",
            "surface.name euclidean",
            "surface.name = euclidean\nrho.kind = potential\nrho.potential = sin(",
            "surface.name = conformal-torus(0.1,1,1)\nrho.kind = potential\nrho.potential = hyp-log",
            "surface.name = euclidean\ncurve.kind = spiral",
            "surface.name = euclidean\ntransport.steps = 0",
            "surface.name = euclidean\nindicatrix.level = 1",
            "surface.name = flat-torus\ntorus.c = u2",
        ] {
            let r = Scenario::parse(bad);
            assert!(matches!(r, Err(CliError::Config(_))), "{bad:?} gave {r:?}");
        }
    }

    #[test]
    fn curve_outside_domain_is_domain_error() {
        let r = Scenario::parse("surface.name = hyperbolic\ncurve.kind = segment\ncurve.from = 0, 1\ncurve.to = 0, -1\n");
        assert!(matches!(r, Err(CliError::Domain(_))));
    }

    #[test]
    fn custom_form_and_samples() {
        let s = Scenario::parse(
            "surface.name = euclidean\nrho.kind = form\nrho.rho1 = u2\nrho.rho2 = -u1\n\
             curve.kind = samples\ncurve.points = 0,0; 1,0.5; 2,0\n",
        )
        .unwrap();
        assert_eq!(s.rho.at(Point2::new(2.0, 3.0)), [3.0, -2.0]);
        assert_eq!(s.curve.unwrap().end(), Point2::new(2.0, 0.0));
    }
}
