//! Numerical laboratory for invariant metrics and measures on planar product
//! domains, with side rooms for cone-boundary asymptotics and Levi-flat
//! hypersurface diagnostics.
//!
//! The crate is organized around a small set of closed forms (Poincare
//! densities on discs, half-planes, sectors, truncated cones, annuli) and the
//! product formulas they induce for the Kobayashi-Royden metric and the
//! Eisenman and Caratheodory volume measures on 1- and 2-factor products.
//! Everything that is not a closed form is bounded from both sides by a
//! derivative-free optimizer over polynomial disc maps ([`oracle`]).
//!
//! Modules:
//! - [`planar`]: domains, conformal charts, covering maps, densities.
//! - [`metrics`]: product-domain metric and measure evaluators, holomorphic
//!   maps between products, Schwarz-Pick style decrease checks.
//! - [`oracle`]: simplex-search upper/lower bounds certifying the closed forms.
//! - [`cones`]: boundary-approach ratio experiments on truncated cones and the
//!   product sandwich experiment, with Richardson extrapolation.
//! - [`leviflat`]: Levi forms, leaf tracing, boundary-system normalization,
//!   genericity checks, and a peak function on a wedge product.
//! - [`format`]: deterministic 15-significant-digit text output.

pub mod cones;
pub mod error;
pub mod format;
pub mod leviflat;
pub mod metrics;
pub mod oracle;
pub mod planar;

pub use error::{LabError, LabResult};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
