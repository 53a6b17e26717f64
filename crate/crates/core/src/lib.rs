//! Flows on the Reeb band `B = ℝ × [0, 1]` and its quotient annulus
//! `A = B/⟨h⟩`.
//!
//! * [`circle`]: circle points, PL circle homeomorphisms and free S¹-actions.
//! * [`profile`]: transit-time profiles `f`, the functional `f*` and `σ(f)`.
//! * [`band`]: the two-chart band carrying a flow with prescribed profile,
//!   and the product model on the punctured quadrant.
//! * [`annulus`]: projections `p, π_0, π_1`, free S¹-actions on `A` and the
//!   boundary diagnostics.
//! * [`examples`]: the glued action with arbitrary boundary action, the
//!   dense-constraint profile and the rigidity analysis.

pub mod annulus;
pub mod band;
pub mod circle;
pub mod error;
pub mod examples;
pub mod profile;
pub mod report;
pub mod roots;
pub mod svg;

pub use error::{Error, Result};
