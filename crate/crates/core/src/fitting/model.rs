// SPDX-License-Identifier: Apache-2.0

//! Flat parameter layout for a sum of line shapes plus background.
//!
//! Parameters are stored as `[center_0, fwhm_0, area_0, center_1, ..., bg_0, bg_1]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lineshape::{profile, profile_gradient, LineKind, LineShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackgroundKind {
    #[default]
    None,
    Constant,
    Linear,
}

impl BackgroundKind {
    pub fn n_coefficients(self) -> usize {
        match self {
            BackgroundKind::None => 0,
            BackgroundKind::Constant => 1,
            BackgroundKind::Linear => 2,
        }
    }
}

impl std::str::FromStr for BackgroundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(BackgroundKind::None),
            "constant" => Ok(BackgroundKind::Constant),
            "linear" => Ok(BackgroundKind::Linear),
            other => Err(Error::Precondition(format!(
                "unknown background `{other}` (expected none|constant|linear)"
            ))),
        }
    }
}

/// `c0 + c1·(ν − origin)`; `origin_thz` keeps the slope term well scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundModel {
    pub kind: BackgroundKind,
    pub coefficients: Vec<f64>,
    pub origin_thz: f64,
}

impl BackgroundModel {
    pub fn new(kind: BackgroundKind, coefficients: Vec<f64>, origin_thz: f64) -> Result<Self> {
        if coefficients.len() != kind.n_coefficients() {
            return Err(Error::invalid(
                "background",
                format!(
                    "{:?} takes {} coefficients, got {}",
                    kind,
                    kind.n_coefficients(),
                    coefficients.len()
                ),
            ));
        }
        Ok(BackgroundModel {
            kind,
            coefficients,
            origin_thz,
        })
    }

    pub fn none() -> Self {
        BackgroundModel {
            kind: BackgroundKind::None,
            coefficients: Vec::new(),
            origin_thz: 0.0,
        }
    }

    pub fn value(&self, nu: f64) -> f64 {
        background_value(self.kind, &self.coefficients, self.origin_thz, nu)
    }
}

fn background_value(kind: BackgroundKind, c: &[f64], origin: f64, nu: f64) -> f64 {
    match kind {
        BackgroundKind::None => 0.0,
        BackgroundKind::Constant => c[0],
        BackgroundKind::Linear => c[0] + c[1] * (nu - origin),
    }
}

/// Shape of the model being fitted: which profile each line uses and what
/// background accompanies them.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakModel {
    kinds: Vec<LineKind>,
    background: BackgroundKind,
    origin: f64,
}

impl PeakModel {
    pub fn new(kinds: Vec<LineKind>, background: BackgroundKind, origin_thz: f64) -> Self {
        PeakModel {
            kinds,
            background,
            origin: origin_thz,
        }
    }

    pub fn n_lines(&self) -> usize {
        self.kinds.len()
    }

    pub fn n_params(&self) -> usize {
        3 * self.kinds.len() + self.background.n_coefficients()
    }

    pub fn background_kind(&self) -> BackgroundKind {
        self.background
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Packs line shapes and background coefficients into a parameter vector.
    pub fn pack(&self, lines: &[LineShape], background: &[f64]) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        for l in lines {
            p.extend_from_slice(&[l.center(), l.fwhm(), l.area()]);
        }
        p.extend_from_slice(background);
        p
    }

    pub fn unpack_lines(&self, p: &[f64]) -> Result<Vec<LineShape>> {
        self.kinds
            .iter()
            .enumerate()
            .map(|(k, &kind)| LineShape::new(kind, p[3 * k], p[3 * k + 1], p[3 * k + 2]))
            .collect()
    }

    pub fn unpack_background(&self, p: &[f64]) -> BackgroundModel {
        BackgroundModel {
            kind: self.background,
            coefficients: p[3 * self.kinds.len()..].to_vec(),
            origin_thz: self.origin,
        }
    }

    pub fn evaluate(&self, p: &[f64], nu: f64) -> f64 {
        let n = self.kinds.len();
        let lines: f64 = self
            .kinds
            .iter()
            .enumerate()
            .map(|(k, &kind)| profile(kind, p[3 * k], p[3 * k + 1], p[3 * k + 2], nu))
            .sum();
        lines + background_value(self.background, &p[3 * n..], self.origin, nu)
    }

    /// Writes ∂model/∂p at `nu` into `out` (length `n_params`).
    pub fn gradient(&self, p: &[f64], nu: f64, out: &mut [f64]) {
        let n = self.kinds.len();
        for (k, &kind) in self.kinds.iter().enumerate() {
            let g = profile_gradient(kind, p[3 * k], p[3 * k + 1], p[3 * k + 2], nu);
            out[3 * k..3 * k + 3].copy_from_slice(&g);
        }
        match self.background {
            BackgroundKind::None => {}
            BackgroundKind::Constant => out[3 * n] = 1.0,
            BackgroundKind::Linear => {
                out[3 * n] = 1.0;
                out[3 * n + 1] = nu - self.origin;
            }
        }
    }

    /// Dense Jacobian, one row per grid point.
    pub fn jacobian(&self, p: &[f64], grid: &[f64]) -> DMatrix<f64> {
        let m = self.n_params();
        let mut jac = DMatrix::zeros(grid.len(), m);
        let mut row = vec![0.0; m];
        for (i, &nu) in grid.iter().enumerate() {
            self.gradient(p, nu, &mut row);
            for (j, &v) in row.iter().enumerate() {
                jac[(i, j)] = v;
            }
        }
        jac
    }

    /// Lower bounds implied by the line-shape invariants.
    pub(crate) fn natural_floor(&self, j: usize) -> f64 {
        if j >= 3 * self.kinds.len() {
            return f64::NEG_INFINITY;
        }
        match j % 3 {
            0 => 1e-6,
            1 => 1e-9,
            _ => 0.0,
        }
    }
}
