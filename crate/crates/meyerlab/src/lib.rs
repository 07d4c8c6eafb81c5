//! Cut-and-project model sets and the diagnostics that characterize them.
//!
//! The crate builds finite patches of model sets `𝔓(W)` from a cut-and-project
//! scheme `(H, Γ, G)`, measures Meyer/Delone properties of arbitrary point
//! sets, computes return-time sets `Λ_K` and `P_ε`, and realizes the canonical
//! torus `(H × G)/Γ` of a scheme together with almost-automorphy diagnostics
//! built on it.
//!
//! Everything operates on finite patches with explicit validity bookkeeping:
//! a statement about a translation is reported only when every patch it
//! references lies inside the sampled region. Passing verdicts are exact on
//! the sampled data; failing verdicts carry explicit witnesses.

pub mod geom;
pub mod hullmetric;
pub(crate) mod interval;
pub mod mef;
pub mod meyer;
pub mod modelset;
pub mod returns;
pub mod scalar;
pub mod scheme;
pub mod window;

pub use geom::{AxisBox, Point};
pub use modelset::{generate, PointSet, Provenance};
pub use scalar::{parse_scalar, Mode, Scalar};
pub use scheme::{fibonacci_scheme, integer_lattice_scheme, ProbeConfig, Scheme};
pub use window::{is_nonsingular, FlaggedBox, Membership, Window};
