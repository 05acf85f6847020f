// SPDX-License-Identifier: Apache-2.0

//! Wavelength/frequency conversion.
//!
//! Spectral arithmetic in this crate happens in terahertz. Nanometres show up
//! only where data enters or leaves (CSV files, CLI flags, cavity resonances
//! as quoted in the lab).

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `c` expressed in nm·THz, so that ν[THz] = C_NM_THZ / λ[nm].
const C_NM_THZ: f64 = SPEED_OF_LIGHT * 1e-3;

/// ν = c/λ, nanometres to terahertz.
pub fn wavelength_to_frequency(lambda_nm: f64) -> Result<f64> {
    if !(lambda_nm > 0.0 && lambda_nm.is_finite()) {
        return Err(Error::Domain(format!(
            "wavelength must be positive and finite, got {lambda_nm}"
        )));
    }
    Ok(C_NM_THZ / lambda_nm)
}

/// λ = c/ν, terahertz to nanometres.
pub fn frequency_to_wavelength(nu_thz: f64) -> Result<f64> {
    if !(nu_thz > 0.0 && nu_thz.is_finite()) {
        return Err(Error::Domain(format!(
            "frequency must be positive and finite, got {nu_thz}"
        )));
    }
    Ok(C_NM_THZ / nu_thz)
}
