// SPDX-License-Identifier: Apache-2.0

//! Sampled photoluminescence spectra.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::units::{frequency_to_wavelength, wavelength_to_frequency};

pub const CSV_HEADER: [&str; 2] = ["wavelength_nm", "intensity"];

/// Intensity samples on a strictly increasing wavelength grid.
///
/// Measured spectra are non-negative. Residuals and mode-subtracted spectra
/// may dip below zero and carry `allow_negative`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    wavelengths: Vec<f64>,
    intensities: Vec<f64>,
    label: String,
    allow_negative: bool,
}

impl Spectrum {
    pub fn new(samples: Vec<(f64, f64)>, label: impl Into<String>) -> Result<Self> {
        let (w, i) = samples.into_iter().unzip();
        Self::from_parts(w, i, label, false)
    }

    /// Like [`Spectrum::new`] but accepts negative intensities.
    pub fn signed(samples: Vec<(f64, f64)>, label: impl Into<String>) -> Result<Self> {
        let (w, i) = samples.into_iter().unzip();
        Self::from_parts(w, i, label, true)
    }

    pub fn from_parts(
        wavelengths: Vec<f64>,
        intensities: Vec<f64>,
        label: impl Into<String>,
        allow_negative: bool,
    ) -> Result<Self> {
        if wavelengths.len() != intensities.len() {
            return Err(Error::invalid("spectrum", "wavelength and intensity counts differ"));
        }
        if wavelengths.len() < 2 {
            return Err(Error::invalid("spectrum", "need at least 2 samples"));
        }
        if let Some(k) = first_bad_sample(&wavelengths, &intensities, allow_negative) {
            return Err(Error::invalid(
                "spectrum",
                format!(
                    "sample {k} ({} nm, {}) breaks the grid/intensity rules",
                    wavelengths[k], intensities[k]
                ),
            ));
        }
        Ok(Spectrum {
            wavelengths,
            intensities,
            label: label.into(),
            allow_negative,
        })
    }

    /// Samples `f(ν)` on a wavelength grid. The result is signed if `f`
    /// produces any negative value.
    pub fn from_frequency_fn(
        wavelength_grid: &[f64],
        label: impl Into<String>,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let mut intensities = Vec::with_capacity(wavelength_grid.len());
        for &w in wavelength_grid {
            intensities.push(f(wavelength_to_frequency(w)?));
        }
        let signed = intensities.iter().any(|&v| v < 0.0);
        Self::from_parts(wavelength_grid.to_vec(), intensities, label, signed)
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn allows_negative(&self) -> bool {
        self.allow_negative
    }

    pub fn len(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.wavelengths.iter().copied().zip(self.intensities.iter().copied())
    }

    /// `(min, max)` wavelength in nm.
    pub fn range_nm(&self) -> (f64, f64) {
        (self.wavelengths[0], self.wavelengths[self.len() - 1])
    }

    /// `(min, max)` frequency in THz.
    pub fn range_thz(&self) -> (f64, f64) {
        let (lo, hi) = self.range_nm();
        (
            wavelength_to_frequency(hi).expect("validated grid"),
            wavelength_to_frequency(lo).expect("validated grid"),
        )
    }

    /// Sample frequencies in THz, in the same (descending) order as the samples.
    pub fn frequencies(&self) -> Vec<f64> {
        self.wavelengths
            .iter()
            .map(|&w| wavelength_to_frequency(w).expect("validated grid"))
            .collect()
    }

    /// The spectrum as ascending-frequency `(ν, I)` columns.
    pub fn frequency_axis(&self) -> (Vec<f64>, Vec<f64>) {
        let mut nu = self.frequencies();
        let mut y = self.intensities.clone();
        nu.reverse();
        y.reverse();
        (nu, y)
    }

    pub fn contains_nm(&self, lambda: f64) -> bool {
        let (lo, hi) = self.range_nm();
        lambda >= lo && lambda <= hi
    }

    /// Linear interpolation onto a new, strictly increasing wavelength grid.
    pub fn resample(&self, grid: &[f64]) -> Result<Spectrum> {
        if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition(
                "resample grid must be strictly increasing with at least 2 points".into(),
            ));
        }
        let mut out = Vec::with_capacity(grid.len());
        for &g in grid {
            let v = quadrature::interpolate(&self.wavelengths, &self.intensities, g).ok_or_else(|| {
                let (lo, hi) = self.range_nm();
                Error::Range(format!("{g} nm is outside the sampled range [{lo}, {hi}] nm"))
            })?;
            out.push(v);
        }
        Spectrum::from_parts(grid.to_vec(), out, self.label.clone(), self.allow_negative)
    }

    /// ∫ I dν over the whole spectrum (THz-weighted).
    pub fn integrate(&self) -> f64 {
        let (nu, y) = self.frequency_axis();
        quadrature::trapezoid(&nu, &y)
    }

    /// ∫ I dν between two wavelengths, cut points interpolated linearly.
    pub fn integrate_window(&self, lo_nm: f64, hi_nm: f64) -> Result<f64> {
        if !(lo_nm < hi_nm) {
            return Err(Error::Precondition(format!(
                "window [{lo_nm}, {hi_nm}] nm must have lo < hi"
            )));
        }
        if !self.contains_nm(lo_nm) || !self.contains_nm(hi_nm) {
            let (lo, hi) = self.range_nm();
            return Err(Error::Range(format!(
                "window [{lo_nm}, {hi_nm}] nm not inside spectrum range [{lo}, {hi}] nm"
            )));
        }
        let (nu, y) = self.frequency_axis();
        let a = wavelength_to_frequency(hi_nm)?;
        let b = wavelength_to_frequency(lo_nm)?;
        // cut points can land a few ulps outside the converted grid
        let a = a.max(nu[0]);
        let b = b.min(nu[nu.len() - 1]);
        quadrature::trapezoid_window(&nu, &y, a, b).ok_or_else(|| Error::Range("window outside spectrum".into()))
    }

    /// Pointwise `f(λ, ν, I)`; the result is signed if any output is negative.
    pub fn map(&self, mut f: impl FnMut(f64, f64, f64) -> f64) -> Result<Spectrum> {
        let out: Vec<f64> = self
            .samples()
            .map(|(w, i)| f(w, wavelength_to_frequency(w).expect("validated grid"), i))
            .collect();
        let signed = self.allow_negative || out.iter().any(|&v| v < 0.0);
        Spectrum::from_parts(self.wavelengths.clone(), out, self.label.clone(), signed)
    }

    pub fn scaled(&self, factor: f64) -> Result<Spectrum> {
        self.map(|_, _, i| i * factor)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Marks the spectrum as signed without touching the samples.
    pub fn into_signed(mut self) -> Self {
        self.allow_negative = true;
        self
    }

    /// Reads `wavelength_nm,intensity` CSV. Errors name the offending line.
    pub fn read_csv<R: Read>(reader: R, label: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
        if headers.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "empty file; expected header `wavelength_nm,intensity`".into(),
            });
        }
        if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "expected header `wavelength_nm,intensity`, found `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut wavelengths = Vec::new();
        let mut intensities: Vec<f64> = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| csv_error(e, 0))?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != 2 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 2 fields, found {}", record.len()),
                });
            }
            let w = parse_field(&record[0], line, "wavelength_nm")?;
            let i = parse_field(&record[1], line, "intensity")?;
            if !(w > 0.0) {
                return Err(Error::Parse {
                    line,
                    message: format!("wavelength must be positive, got {w}"),
                });
            }
            if i < 0.0 {
                return Err(Error::Parse {
                    line,
                    message: format!("negative intensity {i}"),
                });
            }
            if let Some(&prev) = wavelengths.last() {
                if !(w > prev) {
                    return Err(Error::Parse {
                        line,
                        message: format!("wavelengths must strictly increase ({w} after {prev})"),
                    });
                }
            }
            wavelengths.push(w);
            intensities.push(i);
        }
        if wavelengths.len() < 2 {
            return Err(Error::Parse {
                line: 1 + wavelengths.len() as u64,
                message: format!("need at least 2 samples, found {}", wavelengths.len()),
            });
        }
        Spectrum::from_parts(wavelengths, intensities, label, false)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        Self::read_csv(file, path.display().to_string())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", CSV_HEADER.join(","))?;
        for (w, i) in self.samples() {
            writeln!(out, "{w},{i}")?;
        }
        Ok(())
    }
}

fn first_bad_sample(w: &[f64], y: &[f64], allow_negative: bool) -> Option<usize> {
    for k in 0..w.len() {
        let bad_w = !(w[k].is_finite() && w[k] > 0.0) || (k > 0 && !(w[k] > w[k - 1]));
        let bad_y = !y[k].is_finite() || (!allow_negative && y[k] < 0.0);
        if bad_w || bad_y {
            return Some(k);
        }
    }
    None
}

fn parse_field(s: &str, line: u64, name: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {name} `{s}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{name} must be finite, got `{s}`"),
        });
    }
    Ok(v)
}

pub(crate) fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Uniform wavelength grid from `start` to `stop` inclusive.
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|k| start + step * k as f64).collect()
}

/// Converts a THz window `(lo, hi)` into the wavelength window covering it.
pub fn frequency_window_to_nm(lo_thz: f64, hi_thz: f64) -> Result<(f64, f64)> {
    Ok((frequency_to_wavelength(hi_thz)?, frequency_to_wavelength(lo_thz)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lineshape::LineShape;

    #[test]
    fn rejects_bad_grids() {
        assert!(Spectrum::new(vec![(600.0, 1.0)], "x").is_err());
        assert!(Spectrum::new(vec![(600.0, 1.0), (600.0, 1.0)], "x").is_err());
        assert!(Spectrum::new(vec![(601.0, 1.0), (600.0, 1.0)], "x").is_err());
        assert!(Spectrum::new(vec![(600.0, f64::NAN), (601.0, 1.0)], "x").is_err());
        assert!(Spectrum::new(vec![(600.0, f64::INFINITY), (601.0, 1.0)], "x").is_err());
        assert!(Spectrum::new(vec![(600.0, -1.0), (601.0, 1.0)], "x").is_err());
        assert!(Spectrum::signed(vec![(600.0, -1.0), (601.0, 1.0)], "x").is_ok());
    }

    #[test]
    fn resample_identity_and_midpoint() {
        let s = Spectrum::new(vec![(600.0, 0.0), (650.0, 0.2), (700.0, 1.0)], "s").unwrap();
        assert_eq!(s.resample(s.wavelengths()).unwrap(), s);

        let two = Spectrum::new(vec![(600.0, 0.0), (700.0, 1.0)], "two").unwrap();
        let mid = two.resample(&[600.0, 650.0]).unwrap();
        assert_eq!(mid.intensities()[1], 0.5);
    }

    #[test]
    fn resample_refuses_extrapolation() {
        let s = Spectrum::new(vec![(600.0, 0.0), (700.0, 1.0)], "s").unwrap();
        assert!(matches!(s.resample(&[590.0, 650.0]), Err(Error::Range(_))));
        assert!(matches!(s.resample(&[650.0, 640.0]), Err(Error::Precondition(_))));
    }

    #[test]
    fn resampled_lorentzian_keeps_area() {
        // 2.87 THz wide line over ~300 THz of grid: truncation < 1%.
        let line = LineShape::lorentzian(459.11, 2.87, 1.0).unwrap();
        let grid = uniform_grid(420.0, 1000.0, 0.05);
        let dense = Spectrum::from_frequency_fn(&grid, "dense", |nu| line.value(nu)).unwrap();
        let half: Vec<f64> = grid.iter().step_by(2).copied().collect();
        let sparse = dense.resample(&half).unwrap();
        assert!((sparse.integrate() - 1.0).abs() < 0.01, "{}", sparse.integrate());
        assert!((dense.integrate() - 1.0).abs() < 0.01);
    }

    #[test]
    fn window_integral_of_constant() {
        let s = Spectrum::from_frequency_fn(&uniform_grid(600.0, 700.0, 0.5), "flat", |_| 2.0).unwrap();
        let got = s.integrate_window(620.0, 680.0).unwrap();
        let want = 2.0 * (wavelength_to_frequency(620.0).unwrap() - wavelength_to_frequency(680.0).unwrap());
        assert!((got - want).abs() < 1e-9);
        assert!(matches!(s.integrate_window(590.0, 680.0), Err(Error::Range(_))));
    }

    #[test]
    fn csv_round_trip_and_line_numbers() {
        let text = "wavelength_nm,intensity\n600,1\n601,2.5\n602,0\n";
        let s = Spectrum::read_csv(text.as_bytes(), "t").unwrap();
        assert_eq!(s.len(), 3);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(Spectrum::read_csv(buf.as_slice(), "t").unwrap(), s);

        let bad = "wavelength_nm,intensity\n600,1\n601,abc\n";
        match Spectrum::read_csv(bad.as_bytes(), "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let unordered = "wavelength_nm,intensity\n600,1\n601,1\n599,1\n";
        match Spectrum::read_csv(unordered.as_bytes(), "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Spectrum::read_csv("".as_bytes(), "t"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(Spectrum::read_csv("wl,i\n1,2\n3,4\n".as_bytes(), "t").is_err());
        assert!(Spectrum::read_csv("wavelength_nm,intensity\n600,nan\n601,1\n".as_bytes(), "t").is_err());
    }
}
