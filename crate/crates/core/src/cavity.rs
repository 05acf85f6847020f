// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lineshape::LineShape;
use crate::units::wavelength_to_frequency;

/// A single optical cavity resonance. The energy-decay FWHM `κ = ν_c/Q` is
/// always derived, never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CavityFile", into = "CavityFile")]
pub struct CavityMode {
    lambda_c: f64,
    q_factor: f64,
    mode_volume: f64,
    refractive_index: f64,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct CavityFile {
    #[serde(default)]
    label: String,
    lambda_nm: f64,
    q_factor: f64,
    /// in units of (λ/n)³
    mode_volume: f64,
    refractive_index: f64,
}

impl TryFrom<CavityFile> for CavityMode {
    type Error = Error;

    fn try_from(f: CavityFile) -> Result<Self> {
        CavityMode::new(f.lambda_nm, f.q_factor, f.mode_volume, f.refractive_index, f.label)
    }
}

impl From<CavityMode> for CavityFile {
    fn from(m: CavityMode) -> Self {
        CavityFile {
            label: m.label,
            lambda_nm: m.lambda_c,
            q_factor: m.q_factor,
            mode_volume: m.mode_volume,
            refractive_index: m.refractive_index,
        }
    }
}

/// Refractive index of diamond used for the photonic-crystal membrane.
pub const DIAMOND_INDEX: f64 = 2.4;

impl CavityMode {
    pub fn new(
        lambda_c: f64,
        q_factor: f64,
        mode_volume: f64,
        refractive_index: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(lambda_c > 0.0 && lambda_c.is_finite()) {
            return Err(Error::invalid(
                "cavity mode",
                format!("lambda_c must be > 0, got {lambda_c}"),
            ));
        }
        if !(q_factor > 0.0 && q_factor.is_finite()) {
            return Err(Error::invalid("cavity mode", format!("Q must be > 0, got {q_factor}")));
        }
        if !(mode_volume > 0.0 && mode_volume.is_finite()) {
            return Err(Error::invalid(
                "cavity mode",
                format!("mode volume must be > 0, got {mode_volume}"),
            ));
        }
        if !(refractive_index > 1.0 && refractive_index.is_finite()) {
            return Err(Error::invalid(
                "cavity mode",
                format!("refractive index must be > 1, got {refractive_index}"),
            ));
        }
        Ok(CavityMode {
            lambda_c,
            q_factor,
            mode_volume,
            refractive_index,
            label: label.into(),
        })
    }

    /// Mode c1 of the M1 cavity: 653 nm, Q = 160, V = 1.1 (λ/n)³.
    pub fn m1_c1() -> Self {
        Self::new(653.0, 160.0, 1.1, DIAMOND_INDEX, "c1").expect("valid constants")
    }

    pub fn lambda_c(&self) -> f64 {
        self.lambda_c
    }

    pub fn q_factor(&self) -> f64 {
        self.q_factor
    }

    pub fn mode_volume(&self) -> f64 {
        self.mode_volume
    }

    pub fn refractive_index(&self) -> f64 {
        self.refractive_index
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Resonance frequency ν_c in THz.
    pub fn frequency(&self) -> f64 {
        wavelength_to_frequency(self.lambda_c).expect("validated wavelength")
    }

    /// Cavity FWHM κ = ν_c / Q in THz.
    pub fn kappa(&self) -> f64 {
        self.frequency() / self.q_factor
    }

    /// Same Q, V and n, tuned to a new wavelength.
    pub fn tuned_to(&self, lambda_c: f64) -> Result<Self> {
        Self::new(
            lambda_c,
            self.q_factor,
            self.mode_volume,
            self.refractive_index,
            self.label.clone(),
        )
    }

    /// The mode's spectral profile: a Lorentzian at ν_c with FWHM κ.
    pub fn profile(&self, area: f64) -> Result<LineShape> {
        LineShape::lorentzian(self.frequency(), self.kappa(), area)
    }
}
