//! Spectral simulation and control synthesis for non-autonomous diffusive
//! equations `∂ₜf + Q_t D·D f = h 1_{ω(t)}` on ℝⁿ, including the
//! Ornstein–Uhlenbeck equations reduced to that form.
//!
//! The crate is organised bottom-up:
//!
//! * [`flows_kalman`]: matrix exponentials, Kalman rank condition, Gramians.
//! * [`symbol_engine`]: the Fourier symbol `A_t(ξ) = ∫ₜᵀ Q_s ξ·ξ ds` and its
//!   time derivatives.
//! * [`spectral_field`]: periodic-box fields, FFTs, propagators, masks.
//! * [`support_geometry`]: moving control supports and integral thickness.
//! * [`hum_synthesizer`]: penalized HUM control synthesis and certificates.
//! * [`diagnostics_lab`]: Gaussian necessity probes, smoothing estimates,
//!   Faà di Bruno combinatorics and cylinder classification.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics_lab;
pub mod error;
pub mod flows_kalman;
pub mod hum_synthesizer;
pub mod quadrature;
pub mod spectral_field;
pub mod sphere;
pub mod support_geometry;
pub mod symbol_engine;

pub use error::{Error, Result};
