// SPDX-License-Identifier: Apache-2.0

//! Multi-peak spectral decomposition and the analyses built on it.
//!
//! The optimizer is a damped Gauss-Newton (Levenberg-Marquardt) iteration on
//! the frequency grid. Damping grows tenfold on a rejected step and shrinks
//! tenfold on an accepted one, and accepted steps never raise χ². Bounds are
//! enforced by clamping each trial point.

mod analysis;
mod model;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub use analysis::{
    add_cavity_modes, charge_state_fraction, charge_state_from_spectrum, count_emitters, estimate_window_background,
    subtract_cavity_modes, ChargeCorrections, EmitterCount, ReferenceArea, DEFAULT_REFERENCE_REL_SIGMA,
};
pub use model::{BackgroundKind, BackgroundModel, PeakModel};

use crate::error::{Error, Result};
use crate::lineshape::LineShape;
use crate::spectrum::Spectrum;

const MAX_DAMPING: f64 = 1e16;
const MIN_DAMPING: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Relative χ² decrease below which an accepted step ends the fit.
    pub convergence_tol: f64,
    pub damping_init: f64,
    /// Optional `[lo, hi]` per parameter, in the [`PeakModel`] layout.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Parameters held at their initial value.
    pub frozen: Option<Vec<bool>>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iterations: 200,
            convergence_tol: 1e-10,
            damping_init: 1e-3,
            bounds: None,
            frozen: None,
        }
    }
}

impl FitConfig {
    fn validate(&self, n_params: usize) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::invalid("fit config", "max_iterations must be >= 1"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::invalid("fit config", "convergence_tol must be > 0"));
        }
        if !(self.damping_init > 0.0) {
            return Err(Error::invalid("fit config", "damping_init must be > 0"));
        }
        if let Some(b) = &self.bounds {
            if b.len() != n_params {
                return Err(Error::invalid(
                    "fit config",
                    format!("{} bounds for {} parameters", b.len(), n_params),
                ));
            }
            if b.iter().any(|(lo, hi)| !(lo <= hi)) {
                return Err(Error::invalid("fit config", "bound with lo > hi"));
            }
        }
        if let Some(f) = &self.frozen {
            if f.len() != n_params {
                return Err(Error::invalid(
                    "fit config",
                    format!("{} frozen flags for {} parameters", f.len(), n_params),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub lines: Vec<LineShape>,
    pub background: BackgroundModel,
    /// Σ residual² on the frequency grid.
    pub chi2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Over the free parameters, row-major, scaled by χ²/(N − p).
    pub covariance: Vec<Vec<f64>>,
    #[serde(default)]
    pub warnings: Vec<String>,
    /// χ² after each accepted step, starting from the initial guess.
    #[serde(default, skip_serializing)]
    pub chi2_history: Vec<f64>,
}

impl FitResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Evaluates the fitted model at `nu`.
    pub fn model_value(&self, nu: f64) -> f64 {
        self.lines.iter().map(|l| l.value(nu)).sum::<f64>() + self.background.value(nu)
    }
}

/// Least-squares decomposition of `spectrum` into the `initial` line shapes
/// plus a background of the given kind.
pub fn fit_multipeak(
    spectrum: &Spectrum,
    initial: &[LineShape],
    background: BackgroundKind,
    config: &FitConfig,
) -> Result<FitResult> {
    if initial.is_empty() {
        return Err(Error::Precondition("at least one initial line is required".into()));
    }
    let (lo, hi) = spectrum.range_thz();
    for (k, l) in initial.iter().enumerate() {
        if l.center() < lo || l.center() > hi {
            return Err(Error::Precondition(format!(
                "initial line {k} at {} THz lies outside the spectrum ({lo:.3}-{hi:.3} THz)",
                l.center()
            )));
        }
    }
    let origin = 0.5 * (lo + hi);
    let model = PeakModel::new(initial.iter().map(|l| l.kind()).collect(), background, origin);
    config.validate(model.n_params())?;

    let (nu, y) = spectrum.frequency_axis();
    let bg0 = initial_background(background, &y);
    let p0 = model.pack(initial, &bg0);
    let mut result = levenberg_marquardt(&model, &nu, &y, p0, config)?;
    result.warnings.extend(overlap_warnings(&result.lines));
    Ok(result)
}

fn initial_background(kind: BackgroundKind, y: &[f64]) -> Vec<f64> {
    let floor = y.iter().copied().fold(f64::INFINITY, f64::min);
    match kind {
        BackgroundKind::None => vec![],
        BackgroundKind::Constant => vec![floor],
        BackgroundKind::Linear => vec![floor, 0.0],
    }
}

fn overlap_warnings(lines: &[LineShape]) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let sep = (lines[i].center() - lines[j].center()).abs();
            let narrow = lines[i].fwhm().min(lines[j].fwhm());
            if sep < 0.5 * narrow {
                out.push(format!(
                    "lines {i} and {j} are {sep:.4} THz apart, under half the narrower FWHM ({narrow:.4} THz)"
                ));
            }
        }
    }
    out
}

struct Problem<'a> {
    model: &'a PeakModel,
    nu: &'a [f64],
    y: &'a [f64],
    free: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Problem<'_> {
    fn chi2(&self, p: &[f64]) -> f64 {
        self.nu
            .iter()
            .zip(self.y)
            .map(|(&nu, &y)| {
                let r = y - self.model.evaluate(p, nu);
                r * r
            })
            .sum()
    }

    fn project(&self, p: &mut [f64]) {
        for (j, v) in p.iter_mut().enumerate() {
            *v = v.clamp(self.lower[j], self.upper[j]);
        }
    }

    /// JᵀJ and Jᵀr restricted to the free parameters.
    fn normal_equations(&self, p: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let m = self.free.len();
        let mut jtj = DMatrix::zeros(m, m);
        let mut jtr = DVector::zeros(m);
        let mut full = vec![0.0; self.model.n_params()];
        let mut g = vec![0.0; m];
        for (&nu, &y) in self.nu.iter().zip(self.y) {
            self.model.gradient(p, nu, &mut full);
            for (a, &j) in self.free.iter().enumerate() {
                g[a] = full[j];
            }
            let r = y - self.model.evaluate(p, nu);
            for a in 0..m {
                jtr[a] += g[a] * r;
                for b in a..m {
                    jtj[(a, b)] += g[a] * g[b];
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                jtj[(a, b)] = jtj[(b, a)];
            }
        }
        (jtj, jtr)
    }

    fn covariance(&self, p: &[f64], chi2: f64) -> Vec<Vec<f64>> {
        let m = self.free.len();
        let (jtj, _) = self.normal_equations(p);
        let dof = self.nu.len().saturating_sub(m).max(1);
        let scale = chi2 / dof as f64;
        // pseudo-inverse through the eigendecomposition keeps the result
        // symmetric positive semidefinite even when JᵀJ is near singular
        let eig = SymmetricEigen::new(jtj);
        let cutoff = eig.eigenvalues.amax() * 1e-14;
        let mut cov = DMatrix::zeros(m, m);
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda > cutoff {
                let v = eig.eigenvectors.column(k);
                cov += (v * v.transpose()) * (scale / lambda);
            }
        }
        (0..m).map(|a| (0..m).map(|b| cov[(a, b)]).collect()).collect()
    }

    fn finish(&self, p: &[f64], chi2: f64, iterations: usize, converged: bool, history: Vec<f64>) -> Result<FitResult> {
        Ok(FitResult {
            lines: self.model.unpack_lines(p)?,
            background: self.model.unpack_background(p),
            chi2,
            iterations,
            converged,
            covariance: self.covariance(p, chi2),
            warnings: Vec::new(),
            chi2_history: history,
        })
    }
}

fn levenberg_marquardt(
    model: &PeakModel,
    nu: &[f64],
    y: &[f64],
    mut p: Vec<f64>,
    config: &FitConfig,
) -> Result<FitResult> {
    let n = model.n_params();
    let frozen = config.frozen.clone().unwrap_or_else(|| vec![false; n]);
    let mut lower: Vec<f64> = (0..n).map(|j| model.natural_floor(j)).collect();
    let mut upper = vec![f64::INFINITY; n];
    if let Some(bounds) = &config.bounds {
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            lower[j] = lower[j].max(lo);
            upper[j] = hi;
        }
    }
    let problem = Problem {
        model,
        nu,
        y,
        free: (0..n).filter(|&j| !frozen[j]).collect(),
        lower,
        upper,
    };
    problem.project(&mut p);

    let signal: f64 = y.iter().map(|v| v * v).sum();
    let mut chi2 = problem.chi2(&p);
    let mut history = vec![chi2];
    let mut damping = config.damping_init;
    let mut iterations = 0;

    if problem.free.is_empty() || chi2 <= 1e-28 * signal {
        return problem.finish(&p, chi2, iterations, true, history);
    }

    let (mut jtj, mut jtr) = problem.normal_equations(&p);
    loop {
        if iterations >= config.max_iterations {
            return problem.finish(&p, chi2, iterations, false, history);
        }
        iterations += 1;

        let diag_max = jtj.diagonal().amax();
        if !(diag_max > 0.0) || !diag_max.is_finite() {
            return Err(fit_failure(
                &problem,
                &p,
                chi2,
                iterations,
                history,
                "Jacobian vanishes or is not finite",
            ));
        }
        let mut a = jtj.clone();
        for k in 0..a.nrows() {
            let d = jtj[(k, k)].max(1e-12 * diag_max);
            a[(k, k)] += damping * d;
        }
        let Some(chol) = a.cholesky() else {
            damping *= 10.0;
            if damping > MAX_DAMPING {
                return Err(fit_failure(
                    &problem,
                    &p,
                    chi2,
                    iterations,
                    history,
                    "normal equations stayed singular under maximal damping",
                ));
            }
            continue;
        };
        let step = chol.solve(&jtr);

        let mut trial = p.clone();
        for (a, &j) in problem.free.iter().enumerate() {
            trial[j] += step[a];
        }
        problem.project(&mut trial);
        let trial_chi2 = problem.chi2(&trial);

        if trial_chi2.is_finite() && trial_chi2 < chi2 {
            let decrease = (chi2 - trial_chi2) / chi2;
            p = trial;
            chi2 = trial_chi2;
            history.push(chi2);
            damping = (damping * 0.1).max(MIN_DAMPING);
            if decrease < config.convergence_tol || chi2 <= 1e-28 * signal {
                return problem.finish(&p, chi2, iterations, true, history);
            }
            (jtj, jtr) = problem.normal_equations(&p);
        } else {
            damping *= 10.0;
            if damping > MAX_DAMPING {
                // no descent direction left at working precision
                return problem.finish(&p, chi2, iterations, true, history);
            }
        }
    }
}

fn fit_failure(
    problem: &Problem<'_>,
    p: &[f64],
    chi2: f64,
    iterations: usize,
    history: Vec<f64>,
    message: &str,
) -> Error {
    let last = FitResult {
        lines: problem.model.unpack_lines(p).unwrap_or_default(),
        background: problem.model.unpack_background(p),
        chi2,
        iterations,
        converged: false,
        covariance: Vec::new(),
        warnings: Vec::new(),
        chi2_history: history,
    };
    Error::FitFailure {
        message: message.to_string(),
        iterations,
        last: Box::new(last),
    }
}
