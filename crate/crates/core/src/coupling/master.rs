// SPDX-License-Identifier: Apache-2.0

//! Lindblad master equation for one emitter transition coupled to a
//! truncated cavity mode.
//!
//! The Hilbert space is `{g, e} ⊗ {|0⟩ … |N⟩}` with index
//! `emitter · (N+1) + photons`. Density matrices are vectorised column by
//! column, so `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.
//!
//! In the rotating frame of the cavity,
//!
//! ```text
//! H/ħ = 2π [ δ σ⁺σ⁻ + g (a σ⁺ + a† σ⁻) ]
//! ```
//!
//! with collapse operators √(2πκ) a, √(2πγ) σ⁻, √(2πγ*) σ⁺σ⁻ and
//! √(2πP) σ⁺. Every input rate is a FWHM in THz; time is in ps.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Largest accepted Liouvillian side length.
pub const MAX_LIOUVILLIAN_DIM: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MasterEquationSpec {
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub dephasing: f64,
    pub detuning: f64,
    pub photon_cutoff: usize,
    pub pump: f64,
}

impl MasterEquationSpec {
    /// Weak incoherent pumping (`pump = 1e-4·γ`) and two-photon truncation.
    pub fn weak_pump(g: f64, kappa: f64, gamma: f64, dephasing: f64, detuning: f64) -> Self {
        MasterEquationSpec {
            g,
            kappa,
            gamma,
            dephasing,
            detuning,
            photon_cutoff: 2,
            pump: 1e-4 * gamma,
        }
    }

    pub fn with_cutoff(self, photon_cutoff: usize) -> Self {
        MasterEquationSpec { photon_cutoff, ..self }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("dephasing", self.dephasing),
            ("pump", self.pump),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    "master equation spec",
                    format!("{name} must be >= 0, got {v}"),
                ));
            }
        }
        if !self.detuning.is_finite() {
            return Err(Error::invalid("master equation spec", "detuning must be finite"));
        }
        if self.photon_cutoff < 1 {
            return Err(Error::invalid("master equation spec", "photon_cutoff must be >= 1"));
        }
        Ok(())
    }

    /// Side length of the density matrix, 2·(N+1).
    pub fn hilbert_dim(&self) -> usize {
        2 * (self.photon_cutoff + 1)
    }
}

/// Dense superoperator acting on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    matrix: DMatrix<C64>,
    dim: usize,
    cutoff: usize,
}

/// Operators on the joint space for a given photon cutoff.
struct Operators {
    a: DMatrix<C64>,
    sigma_minus: DMatrix<C64>,
}

impl Operators {
    fn new(cutoff: usize) -> Self {
        let levels = cutoff + 1;
        let photon = DMatrix::from_fn(levels, levels, |r, c| {
            if c == r + 1 {
                C64::new((c as f64).sqrt(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        // basis (g, e): σ⁻ = |g⟩⟨e|
        let mut sm = DMatrix::zeros(2, 2);
        sm[(0, 1)] = C64::new(1.0, 0.0);
        let id_emitter = DMatrix::<C64>::identity(2, 2);
        let id_photon = DMatrix::<C64>::identity(levels, levels);
        Operators {
            a: id_emitter.kronecker(&photon),
            sigma_minus: sm.kronecker(&id_photon),
        }
    }

    fn photon_number(&self) -> DMatrix<C64> {
        self.a.adjoint() * &self.a
    }

    fn excited_population(&self) -> DMatrix<C64> {
        self.sigma_minus.adjoint() * &self.sigma_minus
    }
}

/// `vec(X ρ) = (I ⊗ X) vec ρ`
fn left(x: &DMatrix<C64>) -> DMatrix<C64> {
    DMatrix::<C64>::identity(x.nrows(), x.nrows()).kronecker(x)
}

/// `vec(ρ X) = (Xᵀ ⊗ I) vec ρ`
fn right(x: &DMatrix<C64>) -> DMatrix<C64> {
    x.transpose().kronecker(&DMatrix::<C64>::identity(x.nrows(), x.nrows()))
}

/// `rate · (C ρ C† − ½{C†C, ρ})`
fn dissipator(c: &DMatrix<C64>, rate: f64) -> DMatrix<C64> {
    let cdc = c.adjoint() * c;
    let jump = c.conjugate().kronecker(c);
    (jump - (left(&cdc) + right(&cdc)) * C64::new(0.5, 0.0)) * C64::new(rate, 0.0)
}

pub fn build_liouvillian(spec: &MasterEquationSpec) -> Result<Liouvillian> {
    spec.validate()?;
    let d = spec.hilbert_dim();
    let side = d.checked_mul(d).filter(|&s| s <= MAX_LIOUVILLIAN_DIM).ok_or_else(|| {
        Error::Resource(format!(
            "photon cutoff {} gives a {}x{} Liouvillian (limit {MAX_LIOUVILLIAN_DIM})",
            spec.photon_cutoff,
            d * d,
            d * d
        ))
    })?;
    let ops = Operators::new(spec.photon_cutoff);
    let two_pi = 2.0 * PI;
    let sp = ops.sigma_minus.adjoint();
    let n_e = ops.excited_population();
    let coupling = &ops.a * &sp + ops.a.adjoint() * &ops.sigma_minus;
    let h = (&n_e * C64::new(spec.detuning, 0.0) + coupling * C64::new(spec.g, 0.0)) * C64::new(two_pi, 0.0);

    let minus_i = C64::new(0.0, -1.0);
    let mut l = (left(&h) - right(&h)) * minus_i;
    l += dissipator(&ops.a, two_pi * spec.kappa);
    l += dissipator(&ops.sigma_minus, two_pi * spec.gamma);
    l += dissipator(&n_e, two_pi * spec.dephasing);
    l += dissipator(&sp, two_pi * spec.pump);
    debug_assert_eq!(l.nrows(), side);
    Ok(Liouvillian {
        matrix: l,
        dim: d,
        cutoff: spec.photon_cutoff,
    })
}

impl Liouvillian {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Side length of the density matrices it acts on.
    pub fn hilbert_dim(&self) -> usize {
        self.dim
    }

    /// dρ/dt for a density matrix `rho`.
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let v = DVector::from_column_slice(rho.as_slice());
        let out = &self.matrix * v;
        DMatrix::from_column_slice(self.dim, self.dim, out.as_slice())
    }

    /// Fixed-step RK4 integration of dρ/dt = L ρ over `t` ps.
    pub fn evolve(&self, rho0: &DMatrix<C64>, t: f64, steps: usize) -> DMatrix<C64> {
        let h = C64::new(t / steps as f64, 0.0);
        let half = C64::new(0.5, 0.0);
        let mut v = DVector::from_column_slice(rho0.as_slice());
        for _ in 0..steps {
            let k1 = &self.matrix * &v;
            let k2 = &self.matrix * (&v + &k1 * (h * half));
            let k3 = &self.matrix * (&v + &k2 * (h * half));
            let k4 = &self.matrix * (&v + &k3 * h);
            v += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (h / C64::new(6.0, 0.0));
        }
        DMatrix::from_column_slice(self.dim, self.dim, v.as_slice())
    }

    /// Pure state `|emitter, photons⟩⟨…|`, emitter 0 = ground, 1 = excited.
    pub fn basis_state(&self, excited: bool, photons: usize) -> DMatrix<C64> {
        let k = usize::from(excited) * (self.cutoff + 1) + photons;
        let mut rho = DMatrix::zeros(self.dim, self.dim);
        rho[(k, k)] = C64::new(1.0, 0.0);
        rho
    }

    /// Solves L ρ = 0 with Tr ρ = 1 by replacing the first row of L with the
    /// trace functional and factorising.
    pub fn steady_state(&self) -> Result<DMatrix<C64>> {
        let d = self.dim;
        let n = d * d;
        let mut system = self.matrix.clone();
        for j in 0..n {
            system[(0, j)] = C64::new(0.0, 0.0);
        }
        for i in 0..d {
            system[(0, i * d + i)] = C64::new(1.0, 0.0);
        }
        let mut rhs = DVector::zeros(n);
        rhs[0] = C64::new(1.0, 0.0);
        let v = system.lu().solve(&rhs).ok_or_else(|| Error::Numerical {
            message: "Liouvillian with trace constraint is singular".into(),
            residual: f64::INFINITY,
        })?;
        let residual = (&self.matrix * &v).norm() / (self.matrix.norm() * v.norm());
        if !residual.is_finite() || residual > 1e-9 {
            return Err(Error::Numerical {
                message: "steady state does not annihilate the Liouvillian".into(),
                residual,
            });
        }
        let rho = DMatrix::from_column_slice(d, d, v.as_slice());
        // symmetrise away round-off
        Ok((&rho + rho.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn expect_photons(&self, rho: &DMatrix<C64>) -> f64 {
        (Operators::new(self.cutoff).photon_number() * rho).trace().re
    }

    pub fn expect_excited(&self, rho: &DMatrix<C64>) -> f64 {
        (Operators::new(self.cutoff).excited_population() * rho).trace().re
    }
}

/// Photon emission rate through the cavity per unit excited population,
/// κ⟨a†a⟩/⟨σ⁺σ⁻⟩, in THz. Compare with
/// [`bad_cavity_rate`](super::bad_cavity_rate) in the weak-pump limit.
pub fn steady_state_cavity_rate(spec: &MasterEquationSpec) -> Result<f64> {
    if !(spec.pump > 0.0) {
        return Err(Error::Precondition(
            "pump must be > 0; without excitation the steady state is the vacuum".into(),
        ));
    }
    let l = build_liouvillian(spec)?;
    let rho = l.steady_state()?;
    let photons = l.expect_photons(&rho);
    let excited = l.expect_excited(&rho);
    if !(excited > 0.0) {
        return Err(Error::Numerical {
            message: "steady-state excited population vanished".into(),
            residual: excited,
        });
    }
    Ok(spec.kappa * photons / excited)
}
