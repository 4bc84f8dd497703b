//! Property tests over random points, forms and vectors.

use berwald_core::connection::{metric_defect, semi_symmetric, torsion, torsion_oneform, verify_divergence_field};
use berwald_core::finsler::{averaged_metric, gauge, indicatrix_at, FinslerStructure, TrifocalEllipse};
use berwald_core::geometry::{
    christoffel_lc, flat, potential_to_oneform, potentials, sharp, Metric2D, OneForm, Point2, ScalarField, SurfaceKind,
};
use berwald_core::surfaces::{divergence_field, PeriodicSurface, SolverData};
use berwald_core::transport::{parallel_transport, transport_matrix, Curve};
use proptest::prelude::*;

fn wavy_form(a: f64, b: f64, c: f64) -> OneForm {
    OneForm::new("wavy", move |p| [a * (b * p.u2).sin() + c * p.u1, c * (a * p.u1).cos() - b * p.u2 * p.u2])
}

fn metrics() -> [Metric2D; 3] {
    let sigma = ScalarField::new("sigma", |p| 0.2 * p.u1.sin() * (0.5 * p.u2).cos());
    [Metric2D::euclidean(), Metric2D::hyperbolic(), Metric2D::conformal(sigma)]
}

fn flat_connections() -> [(Metric2D, berwald_core::connection::Connection2D); 2] {
    let e = Metric2D::euclidean();
    let h = Metric2D::hyperbolic();
    let ce = semi_symmetric(&e, &potential_to_oneform(SurfaceKind::Euclidean, &potentials::euclid_quadratic()).unwrap());
    let ch = semi_symmetric(&h, &potential_to_oneform(SurfaceKind::Hyperbolic, &potentials::hyp_log()).unwrap());
    [(e, ce), (h, ch)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flat_inverts_sharp(u1 in -3.0..3.0f64, u2 in 0.1..4.0f64, a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64) {
        let p = Point2::new(u1, u2);
        let rho = wavy_form(a, b, c);
        for m in metrics() {
            let back = flat(&m, sharp(&m, &rho, p).unwrap(), p).unwrap();
            let r = rho.at(p);
            prop_assert!((back[0] - r[0]).abs() <= 1e-12 * (1.0 + r[0].abs()) && (back[1] - r[1]).abs() <= 1e-12 * (1.0 + r[1].abs()));
        }
    }

    #[test]
    fn torsion_and_comparison_identity(u1 in -3.0..3.0f64, u2 in 0.1..4.0f64, a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64) {
        let p = Point2::new(u1, u2);
        let rho = wavy_form(a, b, c);
        for m in metrics() {
            let conn = semi_symmetric(&m, &rho);
            let r = rho.at(p);
            let t = torsion_oneform(&torsion(&conn, p).unwrap());
            prop_assert!((t[0] - r[0]).abs() <= 1e-10 && (t[1] - r[1]).abs() <= 1e-10);

            let g = m.at(p).unwrap();
            let up = sharp(&m, &rho, p).unwrap();
            let lc = christoffel_lc(&m, p).unwrap();
            let nabla = conn.coefficients(p).unwrap();
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let delta = if k == i { 1.0 } else { 0.0 };
                        let expected = r[j] * delta - g[i][j] * up[k];
                        prop_assert!((lc[k][i][j] - nabla[k][i][j] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
                    }
                }
            }
            prop_assert!(metric_defect(&conn, &m, p).unwrap() <= 1e-6);
        }
    }

    #[test]
    fn transport_is_linear(x in prop::array::uniform4(-3.0..3.0f64), alpha in -2.0..2.0f64, beta in -2.0..2.0f64) {
        for (_, conn) in flat_connections() {
            let curve = Curve::bowed(Point2::new(-0.5, 0.6), Point2::new(1.2, 2.0), 0.4);
            let run = |v: [f64; 2]| parallel_transport(&conn, &curve, v, 300).unwrap().final_vector();
            let (a, b) = ([x[0], x[1]], [x[2], x[3]]);
            let combo = run([alpha * a[0] + beta * b[0], alpha * a[1] + beta * b[1]]);
            let (ta, tb) = (run(a), run(b));
            for k in 0..2 {
                prop_assert!((combo[k] - alpha * ta[k] - beta * tb[k]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn transport_is_path_independent(q1 in -1.5..1.5f64, q2 in 0.5..3.0f64, bulge in -0.8..0.8f64) {
        for (metric, conn) in flat_connections() {
            let (p, q) = (Point2::new(0.2, 1.0), Point2::new(q1, q2));
            let arc = Curve::bowed(p, q, bulge);
            prop_assume!(arc.check_inside(&|x| metric.contains(x), 256).is_ok());
            let straight = transport_matrix(&conn, &Curve::segment(p, q), 1000).unwrap();
            let bent = transport_matrix(&conn, &arc, 1000).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((straight[i][j] - bent[i][j]).abs() <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn gauge_is_homogeneous_and_subadditive(
        f in -1.5..1.5f64, g in -1.5..1.5f64, level_pad in 0.2..3.0f64,
        v in prop::array::uniform2(-4.0..4.0f64), w in prop::array::uniform2(-4.0..4.0f64), alpha in 0.01..50.0f64,
    ) {
        let e = TrifocalEllipse::new([f, g], 2.0 * f.hypot(g) + level_pad).unwrap();
        let gv = gauge(&e, v).unwrap();
        let scaled = gauge(&e, [alpha * v[0], alpha * v[1]]).unwrap();
        prop_assert!((scaled - alpha * gv).abs() <= 1e-10 * (1.0 + alpha * gv));
        let sum = gauge(&e, [v[0] + w[0], v[1] + w[1]]).unwrap();
        prop_assert!(sum <= gv + gauge(&e, w).unwrap() + 1e-12);
    }

    #[test]
    fn indicatrix_is_path_independent(q1 in -1.5..1.5f64, q2 in 0.5..3.0f64, bulge in -0.8..0.8f64) {
        let (_, conn) = flat_connections()[1].clone();
        let base = Point2::new(0.0, 1.0);
        let fs = FinslerStructure::new(base, TrifocalEllipse::standard(), conn).unwrap();
        let q = Point2::new(q1, q2);
        let arc = Curve::bowed(base, q, bulge);
        prop_assume!(arc.check_inside(&|x| x.u2 > 0.0, 256).is_ok());
        let a = indicatrix_at(&fs, q, None).unwrap();
        let b = indicatrix_at(&fs, q, Some(&arc)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((a.matrix[i][j] - b.matrix[i][j]).abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn averaged_metric_is_symmetric_positive_definite() {
    for (metric, conn) in flat_connections() {
        let base = if metric.contains(Point2::new(0.0, 0.0)) { Point2::new(0.0, 0.0) } else { Point2::new(0.0, 1.0) };
        let fs = FinslerStructure::new(base, TrifocalEllipse::standard(), conn).unwrap();
        for p in [Point2::new(0.5, 1.5), Point2::new(-1.0, 0.7)] {
            let g = averaged_metric(&fs, p, 360).unwrap();
            assert!((g[0][1] - g[1][0]).abs() <= 1e-12 * g[0][0].abs());
            assert!(g[0][0] > 0.0 && g[0][0] * g[1][1] - g[0][1] * g[1][0] > 0.0, "{g:?}");
        }
    }
}

#[test]
fn simpson_refinement_shrinks_residual() {
    let surface = PeriodicSurface::conformal_torus(0.3, 1.0, 2.0).unwrap();
    let pts = [Point2::new(0.7, 2.5), Point2::new(2.0, 4.0), Point2::new(4.1, 5.5)];
    let residual = |n: usize| {
        let data = SolverData { quad_steps: n, ..SolverData::default() };
        verify_divergence_field(surface.metric(), &divergence_field(&surface, &data), &pts, 1e-5).unwrap().max
    };
    let (coarse, fine) = (residual(8), residual(16));
    assert!(coarse / fine >= 10.0, "{coarse:e} -> {fine:e}");
}
