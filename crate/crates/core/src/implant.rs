// SPDX-License-Identifier: Apache-2.0

//! Poisson statistics of targeted ion implantation.
//!
//! Emitter creation is modelled as rare independent events: with `μ = dose ·
//! spot_area · yield` the number of optically active emitters in one spot is
//! Poisson(μ). The number of implanted ions per spot is large compared with
//! the expected emitter count, so the binomial correction is negligible.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::csv_error;

/// Effective implantation area per site in cm². Chosen so that 3e13
/// ions/cm² at 0.8 % yield gives three emitters; not a measured value.
pub const DEFAULT_SPOT_AREA_CM2: f64 = 1.25e-11;

/// Creation yield used when none is supplied.
pub const DEFAULT_YIELD: f64 = 0.008;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImplantConfig {
    /// ions/cm²
    pub dose: f64,
    /// cm²
    pub spot_area: f64,
    /// keV; carried as metadata only
    #[serde(default)]
    pub ion_energy_kev: Option<f64>,
    #[serde(rename = "yield")]
    pub yield_: f64,
}

impl ImplantConfig {
    pub fn new(dose: f64, spot_area: f64, yield_: f64) -> Result<Self> {
        let c = ImplantConfig {
            dose,
            spot_area,
            ion_energy_kev: None,
            yield_,
        };
        c.validate()?;
        Ok(c)
    }

    /// Default spot area and yield at the given dose.
    pub fn with_defaults(dose: f64) -> Result<Self> {
        Self::new(dose, DEFAULT_SPOT_AREA_CM2, DEFAULT_YIELD)
    }

    pub fn with_ion_energy(mut self, kev: f64) -> Self {
        self.ion_energy_kev = Some(kev);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dose >= 0.0 && self.dose.is_finite()) {
            return Err(Error::invalid(
                "implant config",
                format!("dose must be >= 0, got {}", self.dose),
            ));
        }
        if !(self.spot_area > 0.0 && self.spot_area.is_finite()) {
            return Err(Error::invalid(
                "implant config",
                format!("spot_area must be > 0, got {}", self.spot_area),
            ));
        }
        if !(0.0..=1.0).contains(&self.yield_) {
            return Err(Error::invalid(
                "implant config",
                format!("yield must be in [0, 1], got {}", self.yield_),
            ));
        }
        Ok(())
    }
}

/// Mean emitter count per spot, `dose · spot_area · yield`.
pub fn expected_count(config: &ImplantConfig) -> f64 {
    config.dose * config.spot_area * config.yield_
}

/// Poisson probability of exactly `k` events at mean `mu`.
pub fn poisson_pmf(mu: f64, k: u64) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let ln = k as f64 * mu.ln() - mu - ln_factorial(k);
    ln.exp()
}

fn ln_factorial(k: u64) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// `P(k)` for `k = 0..=k_max`.
pub fn count_distribution(config: &ImplantConfig, k_max: u64) -> Vec<f64> {
    let mu = expected_count(config);
    // recurrence P(k) = P(k-1)·μ/k, restarted from log space when P(0) underflows
    let mut out = Vec::with_capacity(k_max as usize + 1);
    let p0 = (-mu).exp();
    if p0 > 0.0 {
        let mut p = p0;
        out.push(p);
        for k in 1..=k_max {
            p *= mu / k as f64;
            out.push(p);
        }
    } else {
        out.extend((0..=k_max).map(|k| poisson_pmf(mu, k)));
    }
    out
}

/// Probability of exactly one emitter, `μ e^{−μ}`. It is maximal,
/// `e^{−1} ≈ 0.368`, at `μ = 1`.
pub fn single_emitter_probability(config: &ImplantConfig) -> f64 {
    let mu = expected_count(config);
    mu * (-mu).exp()
}

/// Dose for a target mean emitter count.
pub fn optimal_dose(target_count: f64, spot_area: f64, yield_: f64) -> Result<f64> {
    if !(target_count > 0.0 && target_count.is_finite()) {
        return Err(Error::Domain(format!("target count must be > 0, got {target_count}")));
    }
    if !(spot_area > 0.0 && spot_area.is_finite()) {
        return Err(Error::Domain(format!("spot_area must be > 0, got {spot_area}")));
    }
    if !(yield_ > 0.0 && yield_ <= 1.0) {
        return Err(Error::Domain(format!("yield must be in (0, 1], got {yield_}")));
    }
    Ok(target_count / (spot_area * yield_))
}

/// One observation of a dose series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DosePoint {
    #[serde(rename = "dose_ions_per_cm2")]
    pub dose: f64,
    pub count: f64,
    pub count_sigma: f64,
}

impl DosePoint {
    pub fn new(dose: f64, count: f64, count_sigma: f64) -> Self {
        DosePoint {
            dose,
            count,
            count_sigma,
        }
    }
}

/// Column names of a dose-series CSV file.
pub const DOSE_CSV_HEADER: [&str; 3] = ["dose_ions_per_cm2", "count", "count_sigma"];

/// Reads `dose_ions_per_cm2,count,count_sigma` CSV. Values are checked by
/// [`estimate_yield`], not here.
pub fn read_dose_csv<R: Read>(reader: R) -> Result<Vec<DosePoint>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    if headers.iter().collect::<Vec<_>>() != DOSE_CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                DOSE_CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<DosePoint>() {
        out.push(row.map_err(|e| csv_error(e, 0))?);
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no dose points".into(),
        });
    }
    Ok(out)
}

pub fn read_dose_csv_path(path: impl AsRef<Path>) -> Result<Vec<DosePoint>> {
    read_dose_csv(std::fs::File::open(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldEstimate {
    #[serde(rename = "yield")]
    pub yield_: f64,
    pub sigma: f64,
    pub points: Vec<DosePoint>,
}

/// Weighted least squares of `count = yield · dose · spot_area` through the
/// origin with weights `1/count_sigma²`. An infinite sigma drops the point.
pub fn estimate_yield(points: &[DosePoint], spot_area: f64) -> Result<YieldEstimate> {
    if points.is_empty() {
        return Err(Error::Precondition("at least one dose point is required".into()));
    }
    if !(spot_area > 0.0 && spot_area.is_finite()) {
        return Err(Error::Precondition(format!("spot_area must be > 0, got {spot_area}")));
    }
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for p in points {
        if !(p.dose > 0.0 && p.dose.is_finite()) {
            return Err(Error::Precondition(format!("doses must be > 0, got {}", p.dose)));
        }
        if !p.count.is_finite() {
            return Err(Error::Precondition(format!("count must be finite, got {}", p.count)));
        }
        if !(p.count_sigma > 0.0) {
            return Err(Error::Precondition(format!(
                "count_sigma must be > 0, got {} (use infinity to drop a point)",
                p.count_sigma
            )));
        }
        let w = 1.0 / (p.count_sigma * p.count_sigma);
        let x = p.dose * spot_area;
        sxx += w * x * x;
        sxy += w * x * p.count;
    }
    if sxx == 0.0 {
        return Err(Error::Precondition("all points have zero weight".into()));
    }
    Ok(YieldEstimate {
        yield_: (sxy / sxx).max(0.0),
        sigma: sxx.recip().sqrt(),
        points: points.to_vec(),
    })
}
