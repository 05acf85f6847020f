// SPDX-License-Identifier: Apache-2.0

//! Cavity-mode removal, ZPL counting and NV charge-state bookkeeping.

use serde::{Deserialize, Serialize};

use super::model::{BackgroundKind, BackgroundModel};
use crate::cavity::CavityMode;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;
use crate::units::wavelength_to_frequency;

/// Default relative uncertainty of the single-emitter reference area.
pub const DEFAULT_REFERENCE_REL_SIGMA: f64 = 0.3;

/// Removes the Lorentzian profile of each mode (centre ν_c, FWHM κ, area
/// `amplitudes[k]`). The result is signed.
pub fn subtract_cavity_modes(spectrum: &Spectrum, modes: &[CavityMode], amplitudes: &[f64]) -> Result<Spectrum> {
    apply_modes(spectrum, modes, amplitudes, -1.0)
}

/// Inverse of [`subtract_cavity_modes`].
pub fn add_cavity_modes(spectrum: &Spectrum, modes: &[CavityMode], amplitudes: &[f64]) -> Result<Spectrum> {
    apply_modes(spectrum, modes, amplitudes, 1.0)
}

fn apply_modes(spectrum: &Spectrum, modes: &[CavityMode], amplitudes: &[f64], sign: f64) -> Result<Spectrum> {
    if modes.len() != amplitudes.len() {
        return Err(Error::Precondition(format!(
            "{} modes but {} amplitudes",
            modes.len(),
            amplitudes.len()
        )));
    }
    for m in modes {
        if !spectrum.contains_nm(m.lambda_c()) {
            return Err(Error::Precondition(format!(
                "mode {} at {} nm lies outside the spectrum",
                m.label(),
                m.lambda_c()
            )));
        }
    }
    if amplitudes.iter().any(|a| !a.is_finite()) {
        return Err(Error::Precondition("mode amplitudes must be finite".into()));
    }
    // amplitudes may be negative here; profile() has no sign check
    let profiles: Vec<(f64, f64, f64)> = modes
        .iter()
        .zip(amplitudes)
        .map(|(m, &a)| (m.frequency(), m.kappa(), a))
        .collect();
    let out = spectrum.map(|_, nu, i| {
        let modes: f64 = profiles
            .iter()
            .map(|&(c, w, a)| crate::lineshape::profile(crate::lineshape::LineKind::Lorentzian, c, w, a, nu))
            .sum();
        i + sign * modes
    })?;
    Ok(if sign < 0.0 { out.into_signed() } else { out })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceArea {
    /// Integrated ZPL intensity of one emitter (arb. units · THz).
    pub area: f64,
    /// Relative 1σ uncertainty of `area`.
    pub rel_sigma: f64,
}

impl ReferenceArea {
    pub fn new(area: f64) -> Self {
        ReferenceArea {
            area,
            rel_sigma: DEFAULT_REFERENCE_REL_SIGMA,
        }
    }

    pub fn with_rel_sigma(self, rel_sigma: f64) -> Self {
        ReferenceArea { rel_sigma, ..self }
    }
}

/// Number of emitters inferred from a background-corrected window integral.
///
/// Two uncertainty channels are kept apart: `count_sigma` comes from the
/// reference-area normalisation, `counting_sigma` is the Poisson spread
/// `√count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterCount {
    pub count: f64,
    pub count_sigma: f64,
    pub counting_sigma: f64,
    pub integral: f64,
    pub window_nm: (f64, f64),
    pub background: BackgroundModel,
}

impl EmitterCount {
    /// `count ± count_sigma`.
    pub fn interval(&self) -> (f64, f64) {
        (self.count - self.count_sigma, self.count + self.count_sigma)
    }

    /// The interval rounded to whole emitters, e.g. 3.0 ± 0.9 → 2..=4.
    pub fn integer_interval(&self) -> std::ops::RangeInclusive<i64> {
        let (lo, hi) = self.interval();
        (lo.round().max(0.0) as i64)..=(hi.round() as i64)
    }
}

/// Background under a window, estimated from its outer 10% on each side.
pub fn estimate_window_background(
    spectrum: &Spectrum,
    window: (f64, f64),
    kind: BackgroundKind,
) -> Result<BackgroundModel> {
    let (lo, hi) = window;
    let edge = 0.1 * (hi - lo);
    let origin = 0.5 * (wavelength_to_frequency(lo)? + wavelength_to_frequency(hi)?);
    let pick = |a: f64, b: f64| -> Result<Vec<(f64, f64)>> {
        let mut pts = Vec::new();
        for (w, i) in spectrum.samples().filter(|&(w, _)| w >= a && w <= b) {
            pts.push((wavelength_to_frequency(w)? - origin, i));
        }
        Ok(pts)
    };
    let left = pick(lo, lo + edge)?;
    let right = pick(hi - edge, hi)?;
    if kind != BackgroundKind::None && (left.is_empty() || right.is_empty()) {
        return Err(Error::Range(format!(
            "no samples in the outer 10% of window [{lo}, {hi}] nm to estimate the background"
        )));
    }
    let edges: Vec<(f64, f64)> = left.into_iter().chain(right).collect();
    let n = edges.len() as f64;
    let coefficients = match kind {
        BackgroundKind::None => vec![],
        BackgroundKind::Constant => vec![edges.iter().map(|p| p.1).sum::<f64>() / n],
        BackgroundKind::Linear => {
            let mx = edges.iter().map(|p| p.0).sum::<f64>() / n;
            let my = edges.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = edges.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = edges.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
            let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
            vec![my - slope * mx, slope]
        }
    };
    BackgroundModel::new(kind, coefficients, origin)
}

/// Integrates the background-corrected signal over `window` (nm) and
/// normalises it to the single-emitter reference area.
pub fn count_emitters(
    spectrum: &Spectrum,
    window: (f64, f64),
    reference: ReferenceArea,
    background: BackgroundKind,
) -> Result<EmitterCount> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Precondition(format!("window [{lo}, {hi}] nm must have lo < hi")));
    }
    if !(reference.area > 0.0 && reference.area.is_finite()) {
        return Err(Error::Precondition("reference area must be > 0".into()));
    }
    if !(reference.rel_sigma >= 0.0) {
        return Err(Error::Precondition("reference uncertainty must be >= 0".into()));
    }
    if !spectrum.contains_nm(lo) || !spectrum.contains_nm(hi) {
        let (a, b) = spectrum.range_nm();
        return Err(Error::Range(format!(
            "window [{lo}, {hi}] nm outside spectrum range [{a}, {b}] nm"
        )));
    }
    let bg = estimate_window_background(spectrum, window, background)?;
    let corrected = spectrum.map(|_, nu, i| i - bg.value(nu))?;
    let integral = corrected.integrate_window(lo, hi)?;
    let count = integral / reference.area;
    Ok(EmitterCount {
        count,
        count_sigma: count.abs() * reference.rel_sigma,
        counting_sigma: count.max(0.0).sqrt(),
        integral,
        window_nm: window,
        background: bg,
    })
}

/// Efficiency ratios NV⁻/NV⁰ for detection, absorption and quantum yield.
/// NV⁰ intensities are multiplied by their product to put both charge
/// states on the NV⁻ scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeCorrections {
    pub detection_ratio: f64,
    pub absorption_ratio: f64,
    pub quantum_efficiency_ratio: f64,
}

impl Default for ChargeCorrections {
    fn default() -> Self {
        ChargeCorrections {
            detection_ratio: 1.0,
            absorption_ratio: 1.0,
            quantum_efficiency_ratio: 1.0,
        }
    }
}

impl ChargeCorrections {
    pub fn product(&self) -> f64 {
        self.detection_ratio * self.absorption_ratio * self.quantum_efficiency_ratio
    }
}

/// Fraction of emitters in the negative charge state, N₋/(N₋ + N₀).
pub fn charge_state_fraction(intensity_nv0: f64, intensity_nvm: f64, corrections: ChargeCorrections) -> Result<f64> {
    if !(intensity_nv0 >= 0.0 && intensity_nvm >= 0.0) {
        return Err(Error::Precondition("intensities must be >= 0".into()));
    }
    let ratios = [
        corrections.detection_ratio,
        corrections.absorption_ratio,
        corrections.quantum_efficiency_ratio,
    ];
    if ratios.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::Precondition("correction ratios must be > 0".into()));
    }
    let n0 = intensity_nv0 * corrections.product();
    let nm = intensity_nvm;
    if n0 + nm == 0.0 {
        return Err(Error::UndefinedRatio("both charge-state intensities are zero".into()));
    }
    Ok(nm / (nm + n0))
}

/// NV⁰ (575 nm) and NV⁻ (637 nm) ZPL windows, 20 nm wide.
pub const NV0_WINDOW_NM: (f64, f64) = (565.0, 585.0);
pub const NVM_WINDOW_NM: (f64, f64) = (627.0, 647.0);

/// [`charge_state_fraction`] from the raw intensities integrated in 20 nm
/// windows around both zero-phonon lines.
pub fn charge_state_from_spectrum(spectrum: &Spectrum, corrections: ChargeCorrections) -> Result<f64> {
    let i0 = spectrum.integrate_window(NV0_WINDOW_NM.0, NV0_WINDOW_NM.1)?;
    let im = spectrum.integrate_window(NVM_WINDOW_NM.0, NVM_WINDOW_NM.1)?;
    charge_state_fraction(i0.max(0.0), im.max(0.0), corrections)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lineshape::LineShape;
    use crate::spectrum::uniform_grid;

    fn zpl_spectrum(centers_nm: &[f64], area: f64, step: f64, bg: impl Fn(f64) -> f64) -> Spectrum {
        let lines: Vec<_> = centers_nm
            .iter()
            .map(|&c| LineShape::gaussian(wavelength_to_frequency(c).unwrap(), 0.25, area).unwrap())
            .collect();
        Spectrum::from_frequency_fn(&uniform_grid(620.0, 655.0, step), "zpl", |nu| {
            lines.iter().map(|l| l.value(nu)).sum::<f64>() + bg(nu)
        })
        .unwrap()
    }

    #[test]
    fn three_reference_zpls_count_three() {
        let s = zpl_spectrum(&[636.2, 637.0, 637.9], 0.7, 0.01, |_| 0.0);
        let c = count_emitters(&s, (629.0, 645.0), ReferenceArea::new(0.7), BackgroundKind::Linear).unwrap();
        assert!((c.count - 3.0).abs() < 1e-6, "{}", c.count);
        assert!((c.count_sigma - 0.9).abs() < 1e-6);
        assert_eq!(c.integer_interval(), 2..=4);
    }

    #[test]
    fn linear_background_is_removed() {
        let s = zpl_spectrum(&[636.2, 637.0, 637.9], 0.7, 0.01, |nu| 0.02 + 0.001 * (nu - 470.0));
        let c = count_emitters(&s, (629.0, 645.0), ReferenceArea::new(0.7), BackgroundKind::Linear).unwrap();
        assert!((c.count - 3.0).abs() < 1e-6, "{}", c.count);
    }

    #[test]
    fn background_only_counts_zero() {
        let s = zpl_spectrum(&[], 0.7, 0.01, |nu| 0.5 + 0.01 * (nu - 470.0));
        let c = count_emitters(&s, (629.0, 645.0), ReferenceArea::new(0.7), BackgroundKind::Linear).unwrap();
        assert!(c.count.abs() < 1e-9, "{}", c.count);
    }

    #[test]
    fn count_is_linear_and_grid_stable() {
        let s = zpl_spectrum(&[636.5, 637.4], 1.0, 0.02, |_| 0.1);
        let r = ReferenceArea::new(1.0);
        let one = count_emitters(&s, (629.0, 645.0), r, BackgroundKind::Linear).unwrap();
        let two = count_emitters(&s.scaled(2.0).unwrap(), (629.0, 645.0), r, BackgroundKind::Linear).unwrap();
        assert!((two.count - 2.0 * one.count).abs() < 1e-12 * one.count);
        let fine = zpl_spectrum(&[636.5, 637.4], 1.0, 0.01, |_| 0.1);
        let f = count_emitters(&fine, (629.0, 645.0), r, BackgroundKind::Linear).unwrap();
        assert!((f.count / one.count - 1.0).abs() < 0.005);
    }

    #[test]
    fn count_errors() {
        let s = zpl_spectrum(&[637.0], 1.0, 0.02, |_| 0.0);
        let r = ReferenceArea::new(1.0);
        assert!(matches!(
            count_emitters(&s, (645.0, 629.0), r, BackgroundKind::Linear),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            count_emitters(&s, (600.0, 645.0), r, BackgroundKind::Linear),
            Err(Error::Range(_))
        ));
        assert!(count_emitters(&s, (629.0, 645.0), ReferenceArea::new(0.0), BackgroundKind::Linear).is_err());
    }

    #[test]
    fn mode_subtraction() {
        let bare = zpl_spectrum(&[637.0], 1.0, 0.05, |_| 0.05);
        let c1 = CavityMode::m1_c1();
        assert_eq!(
            subtract_cavity_modes(&bare, std::slice::from_ref(&c1), &[0.0])
                .unwrap()
                .intensities(),
            bare.intensities()
        );

        let coupled = add_cavity_modes(&bare, std::slice::from_ref(&c1), &[0.4]).unwrap();
        let recovered = subtract_cavity_modes(&coupled, std::slice::from_ref(&c1), &[0.4]).unwrap();
        assert!(recovered.allows_negative());
        for (a, b) in recovered.intensities().iter().zip(bare.intensities()) {
            assert!((a - b).abs() <= 1e-10);
        }
        let again = add_cavity_modes(&recovered, std::slice::from_ref(&c1), &[0.4]).unwrap();
        for (a, b) in again.intensities().iter().zip(coupled.intensities()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
        assert!(subtract_cavity_modes(&bare, std::slice::from_ref(&c1), &[]).is_err());
        let far = CavityMode::new(900.0, 160.0, 1.1, 2.4, "far").unwrap();
        assert!(subtract_cavity_modes(&bare, &[far], &[1.0]).is_err());
    }

    #[test]
    fn mode_subtraction_removes_its_area() {
        // The 645-661 nm window holds a known fraction of the c1 Lorentzian;
        // compute that fraction independently from the arctangent.
        let c1 = CavityMode::m1_c1();
        let grid = uniform_grid(600.0, 720.0, 0.01);
        let coupled =
            Spectrum::from_frequency_fn(&grid, "c", |nu| 0.02 + 0.3 * c1.profile(1.0).unwrap().value(nu)).unwrap();
        let bare = subtract_cavity_modes(&coupled, std::slice::from_ref(&c1), &[0.3]).unwrap();
        let drop = coupled.integrate_window(645.0, 661.0).unwrap() - bare.integrate_window(645.0, 661.0).unwrap();
        let half = 0.5 * c1.kappa();
        let a = wavelength_to_frequency(661.0).unwrap() - c1.frequency();
        let b = wavelength_to_frequency(645.0).unwrap() - c1.frequency();
        let injected = 0.3 / std::f64::consts::PI * ((b / half).atan() - (a / half).atan());
        assert!((drop - injected).abs() < 1e-6 * injected, "{drop} vs {injected}");
    }

    #[test]
    fn charge_state() {
        let unit = ChargeCorrections::default();
        assert_eq!(charge_state_fraction(2.0, 2.0, unit).unwrap(), 0.5);
        assert_eq!(charge_state_fraction(0.0, 2.0, unit).unwrap(), 1.0);
        assert!(matches!(
            charge_state_fraction(0.0, 0.0, unit),
            Err(Error::UndefinedRatio(_))
        ));
        // populations 0.7 (NV-) and 0.3 (NV0); NV0 raw intensity is the
        // population divided by the correction product
        let corr = ChargeCorrections {
            detection_ratio: 1.3,
            absorption_ratio: 0.8,
            quantum_efficiency_ratio: 2.5,
        };
        let f = charge_state_fraction(0.3 / corr.product(), 0.7, corr).unwrap();
        assert!((f - 0.7).abs() < 1e-12);
        let zero = ChargeCorrections {
            detection_ratio: 0.0,
            ..unit
        };
        assert!(charge_state_fraction(1.0, 1.0, zero).is_err());
    }

    #[test]
    fn charge_state_from_bands() {
        let nv0 = LineShape::gaussian(wavelength_to_frequency(575.0).unwrap(), 2.0, 0.3).unwrap();
        let nvm = LineShape::gaussian(wavelength_to_frequency(637.0).unwrap(), 2.0, 0.7).unwrap();
        let s = Spectrum::from_frequency_fn(&uniform_grid(540.0, 680.0, 0.02), "ens", |nu| {
            nv0.value(nu) + nvm.value(nu)
        })
        .unwrap();
        let f = charge_state_from_spectrum(&s, ChargeCorrections::default()).unwrap();
        assert!((f - 0.7).abs() < 1e-3, "{f}");
    }
}
