// SPDX-License-Identifier: Apache-2.0

//! Area-normalised Lorentzian and Gaussian line profiles on a frequency axis.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineKind {
    Lorentzian,
    Gaussian,
}

/// One spectral component. `center` and `fwhm` are in THz; `area` is the
/// integral of the profile over frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLine", into = "RawLine")]
pub struct LineShape {
    kind: LineKind,
    center: f64,
    fwhm: f64,
    area: f64,
}

#[derive(Serialize, Deserialize)]
struct RawLine {
    kind: LineKind,
    center_thz: f64,
    fwhm_thz: f64,
    area: f64,
}

impl TryFrom<RawLine> for LineShape {
    type Error = Error;

    fn try_from(raw: RawLine) -> Result<Self> {
        LineShape::new(raw.kind, raw.center_thz, raw.fwhm_thz, raw.area)
    }
}

impl From<LineShape> for RawLine {
    fn from(line: LineShape) -> Self {
        RawLine {
            kind: line.kind,
            center_thz: line.center,
            fwhm_thz: line.fwhm,
            area: line.area,
        }
    }
}

impl LineShape {
    pub fn new(kind: LineKind, center: f64, fwhm: f64, area: f64) -> Result<Self> {
        if !(center > 0.0 && center.is_finite()) {
            return Err(Error::invalid(
                "line shape",
                format!("center must be > 0, got {center}"),
            ));
        }
        if !(fwhm > 0.0 && fwhm.is_finite()) {
            return Err(Error::invalid("line shape", format!("fwhm must be > 0, got {fwhm}")));
        }
        if !(area >= 0.0 && area.is_finite()) {
            return Err(Error::invalid("line shape", format!("area must be >= 0, got {area}")));
        }
        Ok(LineShape {
            kind,
            center,
            fwhm,
            area,
        })
    }

    pub fn lorentzian(center: f64, fwhm: f64, area: f64) -> Result<Self> {
        Self::new(LineKind::Lorentzian, center, fwhm, area)
    }

    pub fn gaussian(center: f64, fwhm: f64, area: f64) -> Result<Self> {
        Self::new(LineKind::Gaussian, center, fwhm, area)
    }

    pub fn kind(&self) -> LineKind {
        self.kind
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn fwhm(&self) -> f64 {
        self.fwhm
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Same shape, different area.
    pub fn with_area(self, area: f64) -> Result<Self> {
        Self::new(self.kind, self.center, self.fwhm, area)
    }

    pub fn value(&self, nu: f64) -> f64 {
        profile(self.kind, self.center, self.fwhm, self.area, nu)
    }

    pub fn peak_value(&self) -> f64 {
        self.value(self.center)
    }

    pub fn evaluate(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&nu| self.value(nu)).collect()
    }
}

/// Evaluates a profile from raw parameters, without validating them.
pub fn profile(kind: LineKind, center: f64, fwhm: f64, area: f64, nu: f64) -> f64 {
    let d = nu - center;
    match kind {
        LineKind::Lorentzian => {
            let h = 0.5 * fwhm;
            area / PI * h / (d * d + h * h)
        }
        LineKind::Gaussian => {
            let norm = 2.0 * (LN_2 / PI).sqrt() / fwhm;
            area * norm * (-4.0 * LN_2 * d * d / (fwhm * fwhm)).exp()
        }
    }
}

/// Partial derivatives of [`profile`] with respect to `(center, fwhm, area)`.
pub fn profile_gradient(kind: LineKind, center: f64, fwhm: f64, area: f64, nu: f64) -> [f64; 3] {
    let d = nu - center;
    match kind {
        LineKind::Lorentzian => {
            let h = 0.5 * fwhm;
            let s = d * d + h * h;
            let d_area = h / (PI * s);
            let d_center = area / PI * h * 2.0 * d / (s * s);
            let d_fwhm = 0.5 * area / PI * (d * d - h * h) / (s * s);
            [d_center, d_fwhm, d_area]
        }
        LineKind::Gaussian => {
            let norm = 2.0 * (LN_2 / PI).sqrt() / fwhm;
            let w2 = fwhm * fwhm;
            let shape = norm * (-4.0 * LN_2 * d * d / w2).exp();
            let g = area * shape;
            let d_center = g * 8.0 * LN_2 * d / w2;
            let d_fwhm = g * (8.0 * LN_2 * d * d / (w2 * fwhm) - 1.0 / fwhm);
            [d_center, d_fwhm, shape]
        }
    }
}
