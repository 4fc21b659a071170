//! Finite-volume solver for the LWR traffic model with a discontinuous,
//! piecewise-linear fundamental diagram.
//!
//! The crate is organized bottom-up:
//!
//! - [`flux`]: flux functions, the bump mollifier and convexity analysis.
//! - [`riemann`]: interface Riemann solver with the zero-wave branch logic.
//! - [`exact`]: closed-form Riemann and double Riemann solutions.
//! - [`engine`]: the wave-propagation finite-volume scheme.
//! - [`analysis`]: error norms, rate fits, conservation tracking.
//! - [`harness`]: config-driven experiments and CSV output.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod exact;
pub mod flux;
pub mod harness;
pub mod riemann;

pub use error::{Error, Result};
pub use flux::{FluxKind, FluxModel};
