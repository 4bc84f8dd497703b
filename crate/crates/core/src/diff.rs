//! Finite-difference stencils used wherever analytic derivatives are absent.
//!
//! Interior points use the fourth-order five-point central stencil. When the
//! point is within `10 h` of the domain boundary along the differentiation
//! axis, a fourth-order one-sided stencil pointing into the domain is used.

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Relative step for first derivatives of metric and field data.
pub const FIRST_DERIVATIVE_STEP: f64 = 1e-5;
/// Step for differentiating Christoffel symbols in curvature computations.
pub const CURVATURE_STEP: f64 = 1e-4;

const BOUNDARY_FACTOR: f64 = 10.0;

/// Step along `axis` scaled by the coordinate magnitude.
pub fn relative_step(p: Point2, axis: usize, base: f64) -> f64 {
    base * p.coord(axis).abs().max(1.0)
}

/// Partial derivative along `axis` of an array-valued function.
pub fn partial<const N: usize, F>(
    f: F,
    domain: &dyn Fn(Point2) -> bool,
    p: Point2,
    axis: usize,
    h: f64,
) -> Result<[f64; N]>
where
    F: Fn(Point2) -> Result<[f64; N]>,
{
    if !domain(p) {
        return Err(Error::OutsideDomain { u1: p.u1, u2: p.u2 });
    }
    let mut h = h;
    // shrink until at least one side has room
    for _ in 0..8 {
        let fwd = domain(p.shifted(axis, BOUNDARY_FACTOR * h));
        let bwd = domain(p.shifted(axis, -BOUNDARY_FACTOR * h));
        match (fwd, bwd) {
            (true, true) => {
                return combine(&f, p, axis, h, &[(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)], 12.0);
            }
            (true, false) => {
                return combine(
                    &f,
                    p,
                    axis,
                    h,
                    &[(0.0, -25.0), (1.0, 48.0), (2.0, -36.0), (3.0, 16.0), (4.0, -3.0)],
                    12.0,
                );
            }
            (false, true) => {
                return combine(
                    &f,
                    p,
                    axis,
                    h,
                    &[(0.0, 25.0), (-1.0, -48.0), (-2.0, 36.0), (-3.0, -16.0), (-4.0, 3.0)],
                    12.0,
                );
            }
            (false, false) => h *= 0.1,
        }
    }
    Err(Error::OutsideDomain { u1: p.u1, u2: p.u2 })
}

fn combine<const N: usize, F>(
    f: &F,
    p: Point2,
    axis: usize,
    h: f64,
    stencil: &[(f64, f64)],
    denom: f64,
) -> Result<[f64; N]>
where
    F: Fn(Point2) -> Result<[f64; N]>,
{
    let mut acc = [0.0; N];
    for &(offset, weight) in stencil {
        let v = f(p.shifted(axis, offset * h))?;
        for (a, x) in acc.iter_mut().zip(v.iter()) {
            *a += weight * x;
        }
    }
    for a in acc.iter_mut() {
        *a /= denom * h;
    }
    Ok(acc)
}

/// Scalar convenience wrapper around [`partial`].
pub fn partial_scalar<F>(
    f: F,
    domain: &dyn Fn(Point2) -> bool,
    p: Point2,
    axis: usize,
    h: f64,
) -> Result<f64>
where
    F: Fn(Point2) -> Result<f64>,
{
    partial(|q| f(q).map(|v| [v]), domain, p, axis, h).map(|v| v[0])
}

/// Central derivative of a curve-like function of one real parameter.
pub fn derivative_1d<const N: usize>(f: &dyn Fn(f64) -> [f64; N], t: f64, h: f64) -> [f64; N] {
    let a = f(t - 2.0 * h);
    let b = f(t - h);
    let c = f(t + h);
    let d = f(t + 2.0 * h);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = (a[i] - 8.0 * b[i] + 8.0 * c[i] - d[i]) / (12.0 * h);
    }
    out
}
