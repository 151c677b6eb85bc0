//! Recurrent geodesics in spaces of curvature bounded above by a negative
//! constant, their approximation by closed geodesics, and a glued-cylinder
//! space carrying a geodesic that is approximable but not recurrent.
//!
//! The crate is organised bottom-up:
//!
//! * [`model_plane`]: the constant-curvature model plane (upper half-plane),
//!   Möbius isometries, comparison triangles and projections.
//! * [`cylinder`]: hyperbolic cylinders in Fermi coordinates.
//! * [`rose`]: the two-petal rose graph, free-group words and its tree cover.
//! * [`counterexample`]: two cylinders glued along a convex strip, the
//!   geodesic `γ` living on both cores, and its non-recurrence certificate.
//! * [`flow`]: space handles, local geodesics, the shift action and
//!   recurrence detection.
//! * [`approximation`]: associated closed curves, quasi-geodesic and
//!   stability certificates, straightening, alignment and the error budget.
//! * [`cli`]: the `recurrence` command-line front end.

pub mod approximation;
pub mod cli;
pub mod counterexample;
pub mod cylinder;
pub mod error;
pub mod flow;
pub mod metric;
pub mod model_plane;
pub mod rose;
pub mod search;

pub use error::{GeomError, Result};
