// SPDX-License-Identifier: Apache-2.0

//! Cavity coupling of a broadband multi-level emitter.
//!
//! Each vibronic line couples to the mode independently, in the bad-cavity
//! limit, with rate
//!
//! ```text
//! R_i = ξ² · 4 g_i² / (κ + Γ_i) · 1 / (1 + (2 δ_i / (κ + Γ_i))²)
//! g_i² = branching_i · F_P κ γ / 4
//! ```
//!
//! and the generalized Purcell factor is `F* = Σ R_i / γ`. The per-line
//! treatment holds while line separations exceed the couplings; joining the
//! lines in one master equation would need incompatible rotating frames.
//!
//! All rates are FWHM-style frequencies in THz (ν convention). The
//! [`master`] submodule converts to angular units internally.

pub mod master;

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::CavityMode;
use crate::emitter::{EmitterModel, Transition};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

pub use master::{build_liouvillian, steady_state_cavity_rate, Liouvillian, MasterEquationSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineContribution {
    pub index: usize,
    pub f_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingResult {
    pub lambda_c: f64,
    pub f_star: f64,
    pub beta: f64,
    pub per_line: Vec<LineContribution>,
}

impl CouplingResult {
    pub fn purcell_enhancement(&self) -> f64 {
        1.0 + self.f_star
    }
}

/// A cavity-wavelength sweep. Q and the mode volume stay fixed while λ_c
/// moves; `constant_q_and_volume` records that assumption for consumers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub points: Vec<CouplingResult>,
    pub constant_q_and_volume: bool,
}

impl Sweep {
    /// The grid point with the largest F*.
    pub fn peak(&self) -> Option<&CouplingResult> {
        self.points.iter().max_by(|a, b| a.f_star.total_cmp(&b.f_star))
    }
}

/// Ideal Purcell factor F_P = 3/(4π²) · Q/Ṽ, with Ṽ in units of (λ/n)³.
pub fn ideal_purcell(cavity: &CavityMode) -> f64 {
    3.0 / (4.0 * PI * PI) * cavity.q_factor() / cavity.mode_volume()
}

/// Coherent coupling g_i (THz) of one transition, from
/// g_i² = branching_i · F_P κ γ / 4.
pub fn coupling_strength(transition: &Transition, emitter: &EmitterModel, cavity: &CavityMode) -> f64 {
    let g_max2 = ideal_purcell(cavity) * cavity.kappa() * emitter.gamma_total() / 4.0;
    (transition.branching * g_max2).sqrt()
}

/// Emission rate (THz) of one transition into the cavity mode.
pub fn line_coupling_rate(transition: &Transition, emitter: &EmitterModel, cavity: &CavityMode) -> f64 {
    let g2 = coupling_strength(transition, emitter, cavity).powi(2);
    let width = cavity.kappa() + transition.linewidth(emitter.gamma_total());
    let detuning = transition.center - cavity.frequency();
    let xi2 = emitter.dipole_overlap().powi(2);
    bad_cavity_rate(g2, width, detuning) * xi2
}

/// 4g²/W · 1/(1 + (2δ/W)²), W the summed FWHM of cavity and line.
pub fn bad_cavity_rate(g2: f64, total_width: f64, detuning: f64) -> f64 {
    let x = 2.0 * detuning / total_width;
    4.0 * g2 / total_width / (1.0 + x * x)
}

pub fn generalized_purcell(emitter: &EmitterModel, cavity: &CavityMode) -> CouplingResult {
    let gamma = emitter.gamma_total();
    let per_line: Vec<LineContribution> = emitter
        .transitions()
        .iter()
        .map(|t| LineContribution {
            index: t.index,
            f_star: line_coupling_rate(t, emitter, cavity) / gamma,
        })
        .collect();
    let f_star: f64 = per_line.iter().map(|c| c.f_star).sum();
    CouplingResult {
        lambda_c: cavity.lambda_c(),
        f_star,
        beta: efficiency(f_star),
        per_line,
    }
}

/// F*(λ_c) over a strictly monotone wavelength grid. Points are computed in
/// parallel; each is independent of the others.
pub fn sweep_purcell(emitter: &EmitterModel, template: &CavityMode, lambda_grid: &[f64]) -> Result<Sweep> {
    if lambda_grid.is_empty() {
        return Err(Error::Precondition("empty wavelength grid".into()));
    }
    let increasing = lambda_grid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = lambda_grid.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::Precondition("wavelength grid must be strictly monotone".into()));
    }
    let cavities: Vec<CavityMode> = lambda_grid
        .iter()
        .map(|&l| template.tuned_to(l))
        .collect::<Result<_>>()?;
    let points = cavities.par_iter().map(|c| generalized_purcell(emitter, c)).collect();
    Ok(Sweep {
        points,
        constant_q_and_volume: true,
    })
}

/// Emission efficiency into the mode, β = F*/(1+F*).
pub fn efficiency(f_star: f64) -> f64 {
    f_star / (1.0 + f_star)
}

/// Expected on/off intensity ratio when the mode overlaps a fraction `e` of
/// the emission: `1 + F*·e`.
pub fn intensity_enhancement(f_star: f64, e_overlap: f64) -> Result<f64> {
    if !(f_star >= 0.0 && f_star.is_finite()) {
        return Err(Error::Domain(format!("F* must be finite and >= 0, got {f_star}")));
    }
    if !(0.0..=1.0).contains(&e_overlap) {
        return Err(Error::Domain(format!("overlap must lie in [0,1], got {e_overlap}")));
    }
    Ok(1.0 + f_star * e_overlap)
}

/// Summed branching of the selected transitions.
pub fn overlap_fraction(emitter: &EmitterModel, indices: impl IntoIterator<Item = usize>) -> Result<f64> {
    let set: BTreeSet<usize> = indices.into_iter().collect();
    let mut total = 0.0;
    for i in set {
        let t = emitter
            .transition(i)
            .ok_or_else(|| Error::Precondition(format!("no transition with index {i}")))?;
        total += t.branching;
    }
    Ok(total)
}

/// I_on / I_off: ratio of frequency-domain integrals over `window` (nm).
pub fn measured_enhancement(coupled: &Spectrum, bare: &Spectrum, window: (f64, f64)) -> Result<f64> {
    let on = coupled.integrate_window(window.0, window.1)?;
    let off = bare.integrate_window(window.0, window.1)?;
    if off == 0.0 {
        return Err(Error::UndefinedRatio(
            "bare spectrum integrates to zero over the window".into(),
        ));
    }
    Ok(on / off)
}

/// β_exp: the mode Lorentzian's share of the total integrated intensity.
/// Both integrals use the spectrum's own grid.
pub fn measured_efficiency(coupled: &Spectrum, mode: &CavityMode, mode_amplitude: f64) -> Result<f64> {
    if !coupled.contains_nm(mode.lambda_c()) {
        return Err(Error::Precondition(format!(
            "mode at {} nm lies outside the spectrum",
            mode.lambda_c()
        )));
    }
    if !(mode_amplitude >= 0.0 && mode_amplitude.is_finite()) {
        return Err(Error::Precondition("mode amplitude must be finite and >= 0".into()));
    }
    let total = coupled.integrate();
    if total == 0.0 {
        return Err(Error::UndefinedRatio("spectrum integrates to zero".into()));
    }
    let profile = mode.profile(mode_amplitude)?;
    let mode_only = coupled.map(|_, nu, _| profile.value(nu))?;
    Ok(mode_only.integrate() / total)
}
