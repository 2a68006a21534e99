//! Christoffel functions of convex bodies in dimensions one to three.
//!
//! The crate is split along the pipeline a computation follows:
//!
//! * [`geometry`] describes bodies and measures them (exit distances, chords, sections);
//! * [`quadrature`] integrates polynomials over them;
//! * [`christoffel`] factors Gram matrices and evaluates `λ_n(D, x)`;
//! * [`constructions`] builds circumscribed box maps, needle certificates and the
//!   extremal bodies used to test sharpness;
//! * [`harness`] runs named experiments and writes their reports.
//!
//! ```
//! use christoffel_core::geometry::ConvexBody;
//! use christoffel_core::christoffel::christoffel_eval;
//!
//! let disc = ConvexBody::unit_ball(2);
//! let value = christoffel_eval(&disc, 1, &[0.0, 0.0]).unwrap();
//! assert!((value.lambda - std::f64::consts::PI).abs() < 1e-12);
//! ```

pub mod christoffel;
pub mod constructions;
mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod quadrature;

pub use error::{Error, Result};
