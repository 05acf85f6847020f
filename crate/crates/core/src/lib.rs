// SPDX-License-Identifier: Apache-2.0

//! Cavity-enhanced emission of broadband solid-state emitters.
//!
//! The crate models an NV-like emitter, one excited state decaying into a
//! ladder of vibronic ground states, coupled to a single optical cavity
//! mode. It provides:
//!
//! * spectral primitives: [`Spectrum`], [`LineShape`], unit conversion;
//! * [`fitting`]: multi-peak Levenberg-Marquardt decomposition, cavity-mode
//!   subtraction, ZPL counting and charge-state fractions;
//! * [`coupling`]: the generalized Purcell factor F*, emission efficiency β,
//!   intensity enhancement, and a Lindblad master-equation solver used to
//!   validate the closed-form rates;
//! * [`implant`]: Poisson statistics of targeted ion implantation.
//!
//! Spectral arithmetic is done in THz; wavelengths (nm) appear only at
//! input/output boundaries. Widths are FWHM everywhere.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod coupling;
pub mod emitter;
mod error;
pub mod fitting;
pub mod implant;
pub mod lineshape;
pub mod quadrature;
pub mod spectrum;
pub mod units;

pub use cavity::CavityMode;
pub use coupling::{
    efficiency, generalized_purcell, ideal_purcell, intensity_enhancement, line_coupling_rate, measured_efficiency,
    measured_enhancement, overlap_fraction, sweep_purcell, CouplingResult, Sweep,
};
pub use emitter::{EmitterModel, Transition};
pub use error::{Error, Result};
pub use fitting::{fit_multipeak, BackgroundKind, FitConfig, FitResult};
pub use lineshape::{LineKind, LineShape};
pub use spectrum::Spectrum;
pub use units::{frequency_to_wavelength, wavelength_to_frequency};
