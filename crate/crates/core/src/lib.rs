//! Zero cell volume of isotropic Poisson hyperplane tessellations.
//!
//! The hyperplane process has intensity measure
//! `2γ/(nκ_n) ∫_{S^{n-1}} ∫_0^∞ 1{H(u,t) ∈ ·} t^{r-1} dt du`, parametrised by the
//! dimension `n`, the distance exponent `r` and the intensity `γ`. The crate provides
//!
//! - [`special`]: log-space special functions and geometric constants,
//! - [`quadrature`]: adaptive Gauss–Kronrod integration in one and two variables,
//! - [`exact`]: closed-form moments, the variance double integral and its bounds,
//! - [`asymptotics`]: high-dimensional rates and Stirling brackets,
//! - [`simulator`]: a Monte Carlo simulator of the truncated zero cell.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod exact;
pub mod quadrature;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};
pub use quadrature::{QuadConfig, QuadResult, Rule};
pub use special::{LogValue, ModelParams};
