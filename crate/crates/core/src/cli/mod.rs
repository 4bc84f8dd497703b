//! The `berwald2d` command layer: scenario files in, reports and data files out.
//!
//! Commands return an [`Output`] holding the text report and the generated
//! files in memory; the binary decides where they go.

pub mod config;
pub mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::connection::{
    grid, max_curvature_component, metric_defect, semi_symmetric, verify_divergence_field,
    verify_divergence_representation, Connection2D, DIVERGENCE_TOLERANCE,
};
use crate::error::Error;
use crate::finsler::{compatibility_check, finsler_norm, FinslerStructure, TranslatedIndicatrix, TrifocalEllipse};
use crate::geometry::{exterior_derivative, mat_mul, mat_vec, max_abs_diff, Point2, SurfaceKind, Vec2, IDENTITY};
use crate::surfaces::{check_periodicity, divergence_field, gauss_bonnet_integral, Topology};
use crate::transport::{
    closed_form_euclidean, closed_form_hyperbolic, euclidean_phase, holonomy, hyperbolic_phase, parallel_transport,
    transport_matrix, Curve, TransportResult,
};

pub use config::Scenario;
use svg::{Drawing, Style};

pub const CURVATURE_TOLERANCE: f64 = 1e-5;
pub const METRIC_DEFECT_TOLERANCE: f64 = 1e-6;
pub const HOLONOMY_TOLERANCE: f64 = 1e-7;
pub const GAUSS_BONNET_TOLERANCE: f64 = 1e-4;
/// Boundary points per drawn indicatrix.
pub const OUTLINE_POINTS: usize = 240;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("verification failed: {0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Domain(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::OutsideDomain { .. } | Error::PathMismatch(_) | Error::NonFinite(_) | Error::SingularMetric(_) => {
                CliError::Domain(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Transport,
    Figure,
    Torus,
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    /// 0 when every check passed, 1 otherwise.
    pub code: i32,
    pub report: String,
    /// `(file name, contents)` in emission order.
    pub files: Vec<(String, String)>,
}

impl Output {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_files(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        self.files
            .iter()
            .map(|(name, contents)| {
                let path = dir.join(name);
                std::fs::write(&path, contents)?;
                Ok(path)
            })
            .collect()
    }
}

pub fn run(cmd: Command, s: &Scenario) -> Result<Output, CliError> {
    match cmd {
        Command::Verify => verify(s),
        Command::Transport => transport(s),
        Command::Figure => figure(s),
        Command::Torus => torus(s),
    }
}

/// Full-precision number for CSV output (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Checks {
    report: String,
    all_pass: bool,
}

impl Checks {
    fn new(title: &str) -> Self {
        Self { report: format!("{title}\n"), all_pass: true }
    }

    fn check(&mut self, name: &str, value: f64, tol: f64) {
        let pass = value <= tol;
        self.all_pass &= pass;
        let _ = writeln!(self.report, "  {name:<28} {value:>12.3e}  tol {tol:.0e}  {}", if pass { "PASS" } else { "FAIL" });
    }

    fn info(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.report, "  {}", line.as_ref());
    }

    fn finish(self, files: Vec<(String, String)>) -> Output {
        let mut report = self.report;
        let _ = writeln!(report, "{}", if self.all_pass { "result: PASS" } else { "result: FAIL" });
        Output { code: if self.all_pass { 0 } else { 1 }, report, files }
    }
}

fn max_over(points: &[Point2], f: impl Fn(Point2) -> crate::Result<f64> + Sync) -> Result<f64, CliError> {
    let vals = points.par_iter().map(|&p| f(p)).collect::<crate::Result<Vec<_>>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

fn connection(s: &Scenario) -> Connection2D {
    semi_symmetric(s.surface.metric(), &s.rho)
}

fn structure(s: &Scenario, ind: TrifocalEllipse, conn: &Connection2D) -> Result<FinslerStructure, CliError> {
    match FinslerStructure::new(s.base_point, ind, conn.clone()) {
        Ok(fs) => Ok(fs.with_steps(s.steps)),
        Err(Error::InvalidArgument(msg)) => Err(CliError::Failed(format!("cannot spread the indicatrix: {msg}"))),
        Err(e) => Err(e.into()),
    }
}

fn stem(s: &Scenario) -> String {
    let out: String = s.name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    if out.is_empty() {
        "scenario".into()
    } else {
        out
    }
}

/// Closed-form transport of `x0` from the curve start, when the scenario's
/// connection comes from a known potential on the plane or half-plane.
fn closed_form<'a>(s: &'a Scenario, curve: &'a Curve, x0: Vec2) -> Option<Box<dyn Fn(f64) -> crate::Result<Vec2> + 'a>> {
    let f = s.potential.as_ref()?;
    if x0 == [0.0, 0.0] {
        return None;
    }
    match s.surface.kind() {
        SurfaceKind::Euclidean => {
            let (r0, phi0) = euclidean_phase(f, curve, x0);
            Some(Box::new(move |t| closed_form_euclidean(f, curve, r0, phi0, t)))
        }
        SurfaceKind::Hyperbolic => {
            let (r0, phi0) = hyperbolic_phase(f, curve, x0);
            Some(Box::new(move |t| closed_form_hyperbolic(f, curve, r0, phi0, t)))
        }
        SurfaceKind::Conformal => None,
    }
}

fn dist(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Divergence representation, flatness, metric defect and probe holonomy.
pub fn verify(s: &Scenario) -> Result<Output, CliError> {
    let metric = s.surface.metric();
    let v = &s.verify;
    let sample = grid(v.range1, v.range2, v.n, v.n);
    if let Some(p) = sample.iter().find(|p| !metric.contains(**p)) {
        return Err(CliError::Domain(format!("verification grid point {p} outside {}", s.surface.name())));
    }
    let probe = Curve::loop_circle(v.loop_center, v.loop_radius);
    probe
        .check_inside(&|p| metric.contains(p), 256)
        .map_err(|e| CliError::Domain(format!("probe loop: {e}")))?;

    let conn = connection(s);
    let div = verify_divergence_representation(metric, &s.rho, &sample, DIVERGENCE_TOLERANCE)?;
    let curvature = max_over(&sample, |p| max_curvature_component(&conn, p))?;
    let defect = max_over(&sample, |p| metric_defect(&conn, metric, p))?;
    let hol = holonomy(&conn, &probe, s.steps)?;
    let d_rho = max_over(&sample, |p| Ok(exterior_derivative(metric, &s.rho, p)?.abs()))?;

    let mut c = Checks::new(&format!("verify {} on {} with rho = {}", s.name, s.surface.name(), s.rho.name()));
    c.info(format!(
        "grid {}x{} on [{}, {}] x [{}, {}]",
        v.n, v.n, v.range1.0, v.range1.1, v.range2.0, v.range2.1
    ));
    c.check("divergence residual (max)", div.max, DIVERGENCE_TOLERANCE);
    c.info(format!("divergence residual (mean)   {:>12.3e}", div.mean));
    c.check("curvature of connection", curvature, CURVATURE_TOLERANCE);
    c.check("metric defect", defect, METRIC_DEFECT_TOLERANCE);
    c.check("probe loop holonomy", max_abs_diff(&hol, &IDENTITY), HOLONOMY_TOLERANCE);
    c.info(format!("max |d rho|                   {d_rho:>12.3e}  ({})", if d_rho < 1e-8 { "closed" } else { "not closed" }));
    Ok(c.finish(vec![(format!("{}_residuals.csv", stem(s)), div.to_csv())]))
}

/// Transports the initial vector along the curve and samples it.
pub fn transport(s: &Scenario) -> Result<Output, CliError> {
    let curve = s.curve.as_ref().ok_or_else(|| CliError::Config("transport needs a curve (curve.kind)".into()))?;
    let conn = connection(s);
    let (t0, t1) = curve.span();
    let tr = parallel_transport(&conn, curve, s.initial, s.steps_for(t1 - t0))?;

    let norms = match s.indicatrix {
        Some(ind) => {
            let fs = structure(s, ind, &conn)?;
            let vals = tr
                .points
                .par_iter()
                .zip(&tr.vectors)
                .map(|(&p, &x)| finsler_norm(&fs, p, x, None))
                .collect::<crate::Result<Vec<_>>>()?;
            Some(vals)
        }
        None => None,
    };

    let mut csv = String::from(if norms.is_some() { "t,c1,c2,X1,X2,F\n" } else { "t,c1,c2,X1,X2\n" });
    for i in 0..tr.ts.len() {
        let (p, x) = (tr.points[i], tr.vectors[i]);
        let _ = write!(csv, "{},{},{},{},{}", num(tr.ts[i]), num(p.u1), num(p.u2), num(x[0]), num(x[1]));
        if let Some(f) = &norms {
            let _ = write!(csv, ",{}", num(f[i]));
        }
        csv.push('\n');
    }

    let mut c = Checks::new(&format!("transport {} along {}", s.name, curve.name()));
    let x = tr.final_vector();
    c.info(format!("t in [{t0}, {t1}], {} samples", tr.ts.len()));
    c.info(format!("X(t0) = ({}, {})", s.initial[0], s.initial[1]));
    c.info(format!("X(t1) = ({:.12}, {:.12})", x[0], x[1]));
    if s.initial != [0.0, 0.0] {
        c.info(format!("relative drift of g(X, X)     {:>12.3e}", tr.norm_drift(s.surface.metric())?));
    }
    if let Some(f) = &norms {
        let spread = f.iter().fold(0.0f64, |m, v| m.max((v - f[0]).abs()));
        c.info(format!("F(c(t), X(t)) spread          {spread:>12.3e}"));
    }
    closed_form_report(s, curve, &tr, &mut c)?;
    Ok(c.finish(vec![(format!("{}_transport.csv", stem(s)), csv)]))
}

fn closed_form_report(s: &Scenario, curve: &Curve, tr: &TransportResult, c: &mut Checks) -> Result<(), CliError> {
    let Some(exact) = closed_form(s, curve, s.initial) else { return Ok(()) };
    let mut err: f64 = 0.0;
    let mut mirrored: f64 = 0.0;
    for (t, x) in tr.ts.iter().zip(&tr.vectors) {
        let e = exact(*t)?;
        err = err.max(dist(e, *x));
        mirrored = mirrored.max(dist([e[0], -e[1]], *x));
    }
    c.info(format!("max |X - closed form|         {err:>12.3e}"));
    if s.surface.kind() == SurfaceKind::Euclidean {
        c.info(format!(
            "note: the variant with X2 negated deviates by {mirrored:.3e}; the transport equations fix the sign used here"
        ));
    }
    Ok(())
}

/// Figure frames: indicatrix translates along the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub indicatrix: TranslatedIndicatrix,
}

impl Frame {
    /// Transported focal vector `X(t)`.
    pub fn focal(&self) -> Vec2 {
        self.indicatrix.foci()[2]
    }
}

fn frame_times(s: &Scenario, curve: &Curve) -> Result<Vec<f64>, CliError> {
    let (a, b) = curve.span();
    let times = match &s.figure.times {
        Some(ts) => ts.clone(),
        None => {
            let n = s.figure.frames;
            if n == 0 {
                return Err(CliError::Config("figure needs at least one frame".into()));
            }
            (0..n).map(|i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect()
        }
    };
    let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
    if times.is_empty() {
        return Err(CliError::Config("figure.times is empty".into()));
    }
    if let Some(t) = times.iter().find(|&&t| t < a - slack || t > b + slack) {
        return Err(CliError::Config(format!("frame time {t} outside the curve span [{a}, {b}]")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config("frame times must increase".into()));
    }
    Ok(times.into_iter().map(|t| t.clamp(a, b)).collect())
}

/// Frames of the figure scenario; the base indicatrix is first carried along
/// the segment from the base point to the curve start.
pub fn figure_frames(s: &Scenario) -> Result<(Vec<Frame>, FinslerStructure), CliError> {
    let curve = s.curve.as_ref().ok_or_else(|| CliError::Config("figure needs a curve (curve.kind)".into()))?;
    let ind = s.indicatrix.ok_or_else(|| CliError::Config("figure needs an indicatrix (indicatrix.focal, indicatrix.level)".into()))?;
    let conn = connection(s);
    let fs = structure(s, ind, &conn)?;
    let m0 = fs.transport_to(curve.start(), None)?;
    let t0 = curve.span().0;
    let frames = frame_times(s, curve)?
        .par_iter()
        .map(|&t| {
            let m = if t == t0 { IDENTITY } else { transport_matrix(&conn, &curve.restricted(t0, t), s.steps_for(t - t0))? };
            Ok(Frame { t, indicatrix: TranslatedIndicatrix { point: curve.point(t), matrix: mat_mul(&m, &m0), base: ind } })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok((frames, fs))
}

pub fn figure(s: &Scenario) -> Result<Output, CliError> {
    let (frames, fs) = figure_frames(s)?;
    let curve = s.curve.as_ref().expect("checked by figure_frames");
    let ind = *fs.base_indicatrix();
    let conn = fs.connection().clone();
    let (t0, t1) = curve.span();
    let x0 = mat_vec(&fs.transport_to(curve.start(), None)?, ind.focal());
    let path = parallel_transport(&conn, curve, x0, s.steps_for(t1 - t0))?;
    let compat = compatibility_check(&fs, curve, x0, 16)?;

    let k = s.figure.scale;
    let at = |c: Point2, v: Vec2| [c.u1 + k * v[0], c.u2 + k * v[1]];
    let mut d = Drawing::new();
    if t1 > t0 {
        let pts = (0..=400).map(|i| curve.point(t0 + (t1 - t0) * i as f64 / 400.0).to_array()).collect();
        d.polyline(pts, Style::solid("#777777", 1.5));
    }
    for f in &frames {
        let ti = &f.indicatrix;
        let c = ti.point;
        if s.surface.kind() == SurfaceKind::Hyperbolic {
            if let Some(variant) = ti.same_level_variant() {
                d.polygon(variant.boundary(OUTLINE_POINTS).into_iter().map(|w| at(c, w)).collect(), Style::dashed("#c0392b", 1.0));
            }
        }
        d.polygon(ti.boundary(OUTLINE_POINTS).into_iter().map(|w| at(c, w)).collect(), Style::solid("#1f4e9c", 1.5));
        let [a, _, b] = ti.foci();
        d.segment(at(c, a), at(c, b), Style::solid("#999999", 0.75));
        for focus in ti.foci() {
            d.marker(at(c, focus), 3.0, "#000000");
        }
    }

    let mut frames_csv = String::from("frame,t,c1,c2,X1,X2\n");
    for (i, f) in frames.iter().enumerate() {
        let (p, x) = (f.indicatrix.point, f.focal());
        let _ = writeln!(frames_csv, "{i},{},{},{},{},{}", num(f.t), num(p.u1), num(p.u2), num(x[0]), num(x[1]));
    }
    let mut path_csv = String::from("t,c1,c2,X1,X2\n");
    for i in 0..path.ts.len() {
        let (p, x) = (path.points[i], path.vectors[i]);
        let _ = writeln!(path_csv, "{},{},{},{},{}", num(path.ts[i]), num(p.u1), num(p.u2), num(x[0]), num(x[1]));
    }

    let mut c = Checks::new(&format!("figure {} along {}, {} frame(s)", s.name, curve.name(), frames.len()));
    let exact = closed_form(s, curve, x0);
    for (i, f) in frames.iter().enumerate() {
        let x = f.focal();
        let p = f.indicatrix.point;
        let mut line = format!("frame {i}: t = {:.6}, c = ({:.6}, {:.6}), X = ({:.9}, {:.9})", f.t, p.u1, p.u2, x[0], x[1]);
        if let Some(e) = &exact {
            let _ = write!(line, ", |X - closed form| = {:.3e}", dist(e(f.t)?, x));
        }
        c.info(line);
    }
    c.check("F(c(t), X(t)) spread", compat.max_deviation, compat.tolerance);
    let name = stem(s);
    Ok(c.finish(vec![
        (format!("{name}.svg"), d.to_svg()),
        (format!("{name}_frames.csv"), frames_csv),
        (format!("{name}_path.csv"), path_csv),
    ]))
}

/// Divergence solver, periodicity, divergence representation and Gauss-Bonnet.
pub fn torus(s: &Scenario) -> Result<Output, CliError> {
    let topology = s.surface.topology();
    if topology == Topology::Plane {
        return Err(CliError::Config(format!("{} has no periods; torus needs a torus or cylinder", s.surface.name())));
    }
    let metric = s.surface.metric();
    let x = divergence_field(&s.surface, &s.torus.data);
    let g = s.torus.grid;
    let pts = s.surface.sample_grid(g, g);
    let vals = pts.par_iter().map(|&p| x.try_at(p)).collect::<crate::Result<Vec<_>>>()?;
    let per = check_periodicity(&s.surface, &x)?;
    let div = verify_divergence_field(metric, &x, &pts, DIVERGENCE_TOLERANCE)?;

    let (p1, p2) = s.surface.periods();
    let mut c = Checks::new(&format!("torus {} on {} ({topology:?}, periods {p1}, {p2})", s.name, s.surface.name()));
    c.info(format!("X1 = {}, c = {}, c0 = {}, {} Simpson steps", s.torus.data.x1.name(), s.torus.data.c_fn.name(), s.torus.data.c0, s.torus.data.quad_steps));
    c.check("periodicity", per.max, per.tolerance);
    c.check("divergence residual (max)", div.max, DIVERGENCE_TOLERANCE);
    if topology == Topology::Torus {
        let n = s.torus.bonnet_grid;
        let gb = gauss_bonnet_integral(&s.surface, (n, n))?;
        c.check(&format!("|Gauss-Bonnet| ({n}x{n})"), gb.abs(), GAUSS_BONNET_TOLERANCE);
    }

    let mut field = String::from("u1,u2,X1,X2\n");
    for (p, v) in pts.iter().zip(&vals) {
        let _ = writeln!(field, "{},{},{},{}", num(p.u1), num(p.u2), num(v[0]), num(v[1]));
    }
    let name = stem(s);
    Ok(c.finish(vec![(format!("{name}_field.csv"), field), (format!("{name}_residuals.csv"), div.to_csv())]))
}
