// SPDX-License-Identifier: Apache-2.0

//! Multi-level emitter description: one excited state decaying into a ladder
//! of vibronic ground states.
//!
//! Rates are FWHM-style frequencies in THz. A transition's homogeneous
//! linewidth is `Γ_i = γ + γ_i* + γ_{i,i-1}`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lineshape::LineShape;

const REFERENCE_JSON: &str = include_str!("../data/reference_nv.json");

/// Default total radiative decay rate: a 12 ns lifetime, γ = 1/(2π·12 ns).
pub const DEFAULT_GAMMA_TOTAL_THZ: f64 = 1.3262911924324612e-05;

const BRANCHING_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub index: usize,
    #[serde(rename = "center_thz")]
    pub center: f64,
    pub branching: f64,
    #[serde(rename = "dephasing_thz")]
    pub dephasing: f64,
    #[serde(rename = "ground_relaxation_thz")]
    pub ground_relaxation: f64,
}

impl Transition {
    fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::invalid("transition", reason));
        if !(self.center > 0.0 && self.center.is_finite()) {
            return bad(format!("transition {}: center must be > 0", self.index));
        }
        if !(0.0..=1.0).contains(&self.branching) {
            return bad(format!(
                "transition {}: branching {} not in [0,1]",
                self.index, self.branching
            ));
        }
        if !(self.dephasing >= 0.0 && self.dephasing.is_finite()) {
            return bad(format!("transition {}: dephasing must be >= 0", self.index));
        }
        if !(self.ground_relaxation >= 0.0 && self.ground_relaxation.is_finite()) {
            return bad(format!("transition {}: ground relaxation must be >= 0", self.index));
        }
        if (self.index == 0) != (self.ground_relaxation == 0.0) {
            return bad(format!(
                "transition {}: ground relaxation must be zero exactly for the ZPL (index 0)",
                self.index
            ));
        }
        Ok(())
    }

    /// Total homogeneous FWHM `γ + γ_i* + γ_{i,i-1}`.
    pub fn linewidth(&self, gamma_total: f64) -> f64 {
        gamma_total + self.dephasing + self.ground_relaxation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EmitterFile", into = "EmitterFile")]
pub struct EmitterModel {
    transitions: Vec<Transition>,
    gamma_total: f64,
    dipole_overlap: f64,
}

/// On-disk layout of an emitter model.
#[derive(Serialize, Deserialize)]
struct EmitterFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    transitions: Vec<Transition>,
    gamma_total_thz: f64,
    #[serde(default = "unit_overlap")]
    dipole_overlap: f64,
}

fn unit_overlap() -> f64 {
    1.0
}

impl TryFrom<EmitterFile> for EmitterModel {
    type Error = Error;

    fn try_from(f: EmitterFile) -> Result<Self> {
        EmitterModel::new(f.transitions, f.gamma_total_thz, f.dipole_overlap)
    }
}

impl From<EmitterModel> for EmitterFile {
    fn from(m: EmitterModel) -> Self {
        EmitterFile {
            description: None,
            transitions: m.transitions,
            gamma_total_thz: m.gamma_total,
            dipole_overlap: m.dipole_overlap,
        }
    }
}

impl EmitterModel {
    pub fn new(transitions: Vec<Transition>, gamma_total: f64, dipole_overlap: f64) -> Result<Self> {
        if transitions.is_empty() {
            return Err(Error::invalid("emitter model", "no transitions"));
        }
        if !(gamma_total > 0.0 && gamma_total.is_finite()) {
            return Err(Error::invalid("emitter model", "gamma_total must be > 0"));
        }
        if !(0.0..=1.0).contains(&dipole_overlap) {
            return Err(Error::invalid("emitter model", "dipole_overlap must lie in [0,1]"));
        }
        for (pos, t) in transitions.iter().enumerate() {
            if t.index != pos {
                return Err(Error::invalid(
                    "emitter model",
                    format!("transition at position {pos} has index {}", t.index),
                ));
            }
            t.validate()?;
        }
        if transitions.windows(2).any(|w| !(w[1].center < w[0].center)) {
            return Err(Error::invalid(
                "emitter model",
                "transitions must be ordered by strictly descending center frequency",
            ));
        }
        let total: f64 = transitions.iter().map(|t| t.branching).sum();
        if (total - 1.0).abs() > BRANCHING_SUM_TOL {
            return Err(Error::invalid(
                "emitter model",
                format!("branchings sum to {total}, expected 1"),
            ));
        }
        Ok(EmitterModel {
            transitions,
            gamma_total,
            dipole_overlap,
        })
    }

    /// One dephasing rate shared by all lines; `ground_relaxation` applies to
    /// every replica (i ≥ 1) and is forced to zero for the ZPL.
    pub fn with_shared_dephasing(
        centers: &[f64],
        branchings: &[f64],
        dephasing: f64,
        ground_relaxation: f64,
        gamma_total: f64,
        dipole_overlap: f64,
    ) -> Result<Self> {
        if centers.len() != branchings.len() {
            return Err(Error::Precondition("centers and branchings differ in length".into()));
        }
        let transitions = centers
            .iter()
            .zip(branchings)
            .enumerate()
            .map(|(index, (&center, &branching))| Transition {
                index,
                center,
                branching,
                dephasing,
                ground_relaxation: if index == 0 { 0.0 } else { ground_relaxation },
            })
            .collect();
        Self::new(transitions, gamma_total, dipole_overlap)
    }

    /// The bundled eight-line NV model.
    pub fn reference() -> Self {
        serde_json::from_str(REFERENCE_JSON).expect("bundled reference model is valid")
    }

    pub fn reference_json() -> &'static str {
        REFERENCE_JSON
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_json_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn gamma_total(&self) -> f64 {
        self.gamma_total
    }

    pub fn dipole_overlap(&self) -> f64 {
        self.dipole_overlap
    }

    pub fn with_dipole_overlap(&self, overlap: f64) -> Result<Self> {
        Self::new(self.transitions.clone(), self.gamma_total, overlap)
    }

    pub fn with_gamma_total(&self, gamma_total: f64) -> Result<Self> {
        Self::new(self.transitions.clone(), gamma_total, self.dipole_overlap)
    }

    pub fn transition(&self, index: usize) -> Option<&Transition> {
        self.transitions.get(index)
    }

    pub fn indices(&self) -> BTreeSet<usize> {
        (0..self.transitions.len()).collect()
    }

    /// The free-space emission spectrum as Lorentzians: centred on each
    /// transition, FWHM `Γ_i`, area `scale · branching_i`.
    pub fn emission_lines(&self, scale: f64) -> Result<Vec<LineShape>> {
        self.transitions
            .iter()
            .map(|t| LineShape::lorentzian(t.center, t.linewidth(self.gamma_total), scale * t.branching))
            .collect()
    }
}
