//! Discrete-event simulation and time-tag post-processing for a
//! polarization-encoded BB84 link sourced by an LED-class emitter,
//! together with a single-photon histogram-contrast method for
//! electro-optic bandwidth measurement.
//!
//! The crate splits into:
//!
//! * [`units`] — unit-safe photonics arithmetic (dBm/watts, photon rates,
//!   binary entropy, secret fraction), generic over the scalar type;
//! * [`emitter`] — L–I curve, wavelength and electro-optic response of
//!   the light source, plus the photon-budget headroom;
//! * [`txchain`] — Alice: pattern generation with the public sync header,
//!   polarization state preparation, attenuation and channel effects;
//! * [`detection`] — Bob: analyzer projection, SPAD click simulation with
//!   dark counts, dead time and jitter, time-tagged output;
//! * [`postproc`] — folding, temporal filtering, frame synchronization,
//!   sifting, QBER/key-rate estimation and the closed-form oracle;
//! * [`bwmeter`] — swept-frequency modulation-contrast bandwidth meter;
//! * [`tagfile`], [`config`], [`pipeline`] — file formats, TOML
//!   configuration and end-to-end orchestration.

pub mod bwmeter;
pub mod config;
pub mod detection;
pub mod emitter;
pub mod error;
pub mod pipeline;
pub mod postproc;
pub mod real;
pub mod rng;
pub mod tagfile;
pub mod txchain;
pub mod units;

pub use error::{Error, Result};
pub use real::Real;

/// Concrete `f64` instantiations used throughout the event-level pipeline.
pub type OpticalPower64 = units::OpticalPower<f64>;
pub type Wavelength64 = units::Wavelength<f64>;
pub type MeanPhotonNumber64 = units::MeanPhotonNumber<f64>;
pub type EmitterModel64 = emitter::EmitterModel<f64>;

/// Single-precision aliases for callers that trade accuracy for size.
pub type OpticalPower32 = units::OpticalPower<f32>;
pub type Wavelength32 = units::Wavelength<f32>;
pub type MeanPhotonNumber32 = units::MeanPhotonNumber<f32>;
pub type EmitterModel32 = emitter::EmitterModel<f32>;
