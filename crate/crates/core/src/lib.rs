//! Flat metric connections, parallel transport and generalized Berwald
//! structures on Riemannian surfaces.
//!
//! * [`geometry`]: metrics, fields, Christoffel symbols, Gauss curvature,
//!   divergence and the musical isomorphisms.
//! * [`connection`]: semi-symmetric metric connections and their torsion,
//!   curvature and metricity checks.
//! * [`transport`]: RK4 parallel transport, transport matrices, holonomy and
//!   closed-form parallel fields.
//! * [`finsler`]: trifocal-ellipse indicatrices, their gauge, the induced
//!   Finsler norm and the averaged Riemannian metric.
//! * [`surfaces`]: the surface catalogue and the periodic divergence solver.
//! * [`cli`]: scenario files, reports and figure output for `berwald2d`.

pub mod cli;
pub mod connection;
pub mod diff;
pub mod error;
pub mod expr;
pub mod finsler;
pub mod geometry;
pub mod surfaces;
pub mod transport;

pub use error::{Error, Result};
pub use geometry::{Mat2, Point2, Vec2};
