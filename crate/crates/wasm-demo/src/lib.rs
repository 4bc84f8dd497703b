//! Browser bindings: figure rendering from scenario text, the Finsler norm of
//! the worked examples, and holonomy of a scaled torsion form.

use berwald_core::cli::{self, Command, Scenario};
use berwald_core::connection::{semi_symmetric, Connection2D};
use berwald_core::finsler::{finsler_norm, indicatrix_at, FinslerStructure, TrifocalEllipse};
use berwald_core::geometry::{max_abs_diff, potential_to_oneform, potentials, Metric2D, OneForm, Point2, SurfaceKind, IDENTITY};
use berwald_core::transport::{holonomy, Curve};
use wasm_bindgen::prelude::*;

fn example(name: &str) -> Result<(Metric2D, OneForm, Point2, SurfaceKind), String> {
    match name {
        "euclidean" => {
            let rho = potential_to_oneform(SurfaceKind::Euclidean, &potentials::euclid_quadratic()).map_err(|e| e.to_string())?;
            Ok((Metric2D::euclidean(), rho, Point2::new(0.0, 0.0), SurfaceKind::Euclidean))
        }
        "hyperbolic" => {
            let rho = potential_to_oneform(SurfaceKind::Hyperbolic, &potentials::hyp_log()).map_err(|e| e.to_string())?;
            Ok((Metric2D::hyperbolic(), rho, Point2::new(0.0, 1.0), SurfaceKind::Hyperbolic))
        }
        other => Err(format!("unknown example {other:?}")),
    }
}

fn structure(name: &str) -> Result<FinslerStructure, String> {
    let (metric, rho, base, _) = example(name)?;
    FinslerStructure::new(base, TrifocalEllipse::standard(), semi_symmetric(&metric, &rho)).map_err(|e| e.to_string())
}

/// SVG of the figure for a scenario file's text.
pub fn render_figure(config: &str) -> Result<String, String> {
    let s = Scenario::parse(config).map_err(|e| e.to_string())?;
    let out = cli::run(Command::Figure, &s).map_err(|e| e.to_string())?;
    out.files.iter().find(|(n, _)| n.ends_with(".svg")).map(|(_, c)| c.clone()).ok_or_else(|| "no figure".into())
}

/// `F(p, v)` for the trifocal structure of a worked example.
pub fn norm(name: &str, u1: f64, u2: f64, v1: f64, v2: f64) -> Result<f64, String> {
    finsler_norm(&structure(name)?, Point2::new(u1, u2), [v1, v2], None).map_err(|e| e.to_string())
}

/// Indicatrix at `p` as a flat `[x0, y0, x1, y1, ...]` list of tangent vectors.
pub fn outline(name: &str, u1: f64, u2: f64, n: usize) -> Result<Vec<f64>, String> {
    let ind = indicatrix_at(&structure(name)?, Point2::new(u1, u2), None).map_err(|e| e.to_string())?;
    Ok(ind.boundary(n.max(3)).into_iter().flatten().collect())
}

/// Distance from the identity of the transport around a circle, for the
/// connection whose torsion form is `scale` times the example's flat one.
pub fn loop_deviation(name: &str, scale: f64, cx: f64, cy: f64, r: f64) -> Result<f64, String> {
    let (metric, rho, _, _) = example(name)?;
    let scaled = OneForm::new(format!("{scale} rho"), move |p| {
        let w = rho.at(p);
        [scale * w[0], scale * w[1]]
    });
    let conn: Connection2D = semi_symmetric(&metric, &scaled);
    let lp = Curve::loop_circle(Point2::new(cx, cy), r);
    lp.check_inside(&|p| metric.contains(p), 128).map_err(|e| e.to_string())?;
    let h = holonomy(&conn, &lp, 1000).map_err(|e| e.to_string())?;
    Ok(max_abs_diff(&h, &IDENTITY))
}

#[wasm_bindgen(js_name = renderFigure)]
pub fn render_figure_js(config: &str) -> Result<String, JsError> {
    render_figure(config).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = finslerNorm)]
pub fn norm_js(example: &str, u1: f64, u2: f64, v1: f64, v2: f64) -> Result<f64, JsError> {
    norm(example, u1, u2, v1, v2).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = indicatrixOutline)]
pub fn outline_js(example: &str, u1: f64, u2: f64, n: usize) -> Result<Vec<f64>, JsError> {
    outline(example, u1, u2, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = loopDeviation)]
pub fn loop_deviation_js(example: &str, scale: f64, cx: f64, cy: f64, r: f64) -> Result<f64, JsError> {
    loop_deviation(example, scale, cx, cy, r).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_from_text() {
        let svg = render_figure(
            "surface.name = euclidean\nrho.kind = potential\nrho.potential = euclid-quadratic\n\
             curve.kind = radial\ncurve.t1 = 1.5\nindicatrix.focal = 1, 0\nindicatrix.level = 4\nfigure.frames = 3\n",
        )
        .unwrap();
        assert!(svg.starts_with("<svg") && svg.matches("<path").count() == 4);
        assert!(render_figure("surface.name = torus").is_err());
    }

    #[test]
    fn norm_matches_gauge_at_base() {
        assert!((norm("euclidean", 0.0, 0.0, 1.0, 0.0).unwrap() - 0.75).abs() < 1e-10);
        // from (0, 1) to (0, 2) the transport is 2 R(log 2)
        let a = 2f64.ln();
        let v = [2.0 * 4.0 / 3.0 * a.cos(), 2.0 * 4.0 / 3.0 * a.sin()];
        assert!((norm("hyperbolic", 0.0, 2.0, v[0], v[1]).unwrap() - 1.0).abs() < 1e-8);
        assert!(norm("sphere", 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(norm("hyperbolic", 0.0, -1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn outline_points_have_unit_norm() {
        let pts = outline("hyperbolic", 0.5, 1.7, 24).unwrap();
        assert_eq!(pts.len(), 48);
        for v in pts.chunks(2) {
            assert!((norm("hyperbolic", 0.5, 1.7, v[0], v[1]).unwrap() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn only_the_flat_scale_closes_loops() {
        assert!(loop_deviation("hyperbolic", 1.0, 0.0, 2.0, 1.0).unwrap() < 1e-7);
        assert!(loop_deviation("hyperbolic", 0.0, 0.0, 2.0, 1.0).unwrap() > 0.1);
        // the Euclidean form is divergence-free, so every multiple stays flat
        assert!(loop_deviation("euclidean", 0.5, 0.0, 0.0, 1.0).unwrap() < 1e-7);
        assert!(loop_deviation("hyperbolic", 0.5, 0.0, 2.0, 1.0).unwrap() > 0.1);
        assert!(loop_deviation("hyperbolic", 1.0, 0.0, 0.5, 1.0).is_err());
    }
}
