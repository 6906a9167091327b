//! Delayed consensus dynamics on signed directed ring networks.
//!
//! The crate simulates the two-delay consensus model with cooperative and
//! antagonistic couplings, decomposes it into circulant Fourier modes,
//! locates the roots of the transcendental characteristic equation, traces
//! the stability switching curves in the (tau1, tau2) plane, and classifies
//! grid sweeps into the consensus / bounded / unstable regimes.

pub mod charroots;
pub mod classifier;
pub mod crossing;
pub mod error;
pub mod integrator;
pub mod modal;
pub mod model;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{RingParams, StateVector};
