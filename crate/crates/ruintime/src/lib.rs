//! Ruin-time distributions for the Sparre Andersen surplus process with
//! exponential claim sizes.
//!
//! The surplus process is `U(t) = u + c t - sum_{j <= N(t)} X_j`: initial
//! surplus `u`, premium rate `c`, i.i.d. exponential claims `X_j`, and claim
//! arrivals forming a (possibly delayed) renewal process. The ruin time
//! `tau = inf{t > 0 : U(t) < 0}` then has a defective density that this crate
//! evaluates through several independent routes:
//!
//! - a generic series evaluator valid for any supported inter-claim family
//!   ([`density::density_at`]),
//! - hypergeometric closed forms for Erlang inter-claim times
//!   ([`density::erlang_closed_form`], [`density::stationary_erlang2_closed_form`]),
//! - Erlang-mixture expansions for mixed exponential inter-claim times
//!   ([`convolve`]),
//! - adaptive quadrature for finite-time ruin probabilities
//!   ([`quadrature::ruin_prob`]) with a Lundberg ultimate-ruin cross-check,
//! - a seeded Monte Carlo simulator used as an independent oracle
//!   ([`montecarlo::simulate`]).
//!
//! The `examples/` directory contains one runnable walkthrough per
//! capability; the thin `ruintime` binary exposes the same functionality as
//! subcommands (`density`, `prob`, `table1`, `simulate`, `verify`,
//! `moments`).
//!
//! ```
//! use ruintime::{validate, DelaySpec, InterClaimFamily, ModelParams, SeriesConfig};
//! use ruintime::density::{DensityQuery, EvalPath};
//! use ruintime::quadrature::ruin_prob;
//!
//! let model = validate(
//!     ModelParams::new(0.0, 1.1, 1.0)?,
//!     InterClaimFamily::Gamma { shape: 2.0, rate: 2.0 },
//!     DelaySpec::Ordinary,
//! )?;
//! let query = DensityQuery::new(model, SeriesConfig::default(), EvalPath::Auto)?;
//! let psi = ruin_prob(&query, 20.0, 1e-8)?.value;
//! assert!((psi - 0.7973).abs() < 5e-5);
//! # Ok::<(), ruintime::Error>(())
//! ```

// `!(x > 0.0)` guards are NaN-rejecting on purpose; `x <= 0.0` would let
// NaN parameters through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod convolve;
pub mod density;
mod error;
mod gk;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod specfun;

pub use error::{Error, Result};
pub use model::{
    delay_density, delay_moments, moments, validate, DelaySpec, DensityGrid, InterClaimFamily,
    Model, ModelParams, SeriesConfig,
};
