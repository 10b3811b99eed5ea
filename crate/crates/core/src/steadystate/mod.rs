//! Stationary covariance matrix, mode occupancies and effective temperatures.

mod oracle;

use crate::constants::{HBAR, K_B};
use crate::model::{
    build_diffusion, build_drift, stability_eta, stability_spectral, LinearizedModel, ModelError,
    ModelWarning,
};
use crate::numerics::{
    eigenvalues_hermitian, lyapunov_residual, solve_lyapunov, symplectic_form, HermitianPair,
    NumericsError, RealMatrix, TOLERANCES,
};
use thiserror::Error;

pub use oracle::{oracle_covariance, oracle_covariance_with, OracleOptions, OracleResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteadyStateError {
    #[error("drift matrix is not Hurwitz (max real part {max_real_part:e} rad/s)")]
    Unstable { max_real_part: f64 },
    #[error("frequency integral did not converge after {evaluations} evaluations (error estimate {error_estimate:e})")]
    QuadratureNotConverged {
        evaluations: usize,
        error_estimate: f64,
    },
    #[error("covariance matrix must be square with even dimension, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },
    #[error("covariance matrix is not symmetric (defect {0:e})")]
    NotSymmetric(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Symmetrised second moments of the quadratures, ordered
/// (q₁, p₁, …, q_N, p_N, X, Y). Vacuum variance is ½.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(RealMatrix);

impl CovarianceMatrix {
    /// Accepts a square, even-dimensional matrix symmetric to 10⁻¹² relative.
    pub fn new(m: RealMatrix) -> Result<Self, SteadyStateError> {
        if !m.is_square() || !m.rows().is_multiple_of(2) || m.rows() == 0 {
            return Err(SteadyStateError::BadShape {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let defect = m.asymmetry();
        if defect > 1e-12 * m.max_abs().max(1.0) {
            return Err(SteadyStateError::NotSymmetric(defect));
        }
        Ok(Self(m.symmetrized()))
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.0
    }

    pub fn into_inner(self) -> RealMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    /// Number of bosonic modes (mechanical modes plus the cavity).
    pub fn n_subsystems(&self) -> usize {
        self.0.rows() / 2
    }
}

/// Solves `A V + V Aᵀ = -D` for a stable model.
pub fn steady_covariance(model: &LinearizedModel) -> Result<CovarianceMatrix, SteadyStateError> {
    let s = stability_spectral(model)?;
    if !s.stable {
        return Err(SteadyStateError::Unstable {
            max_real_part: s.max_real_part,
        });
    }
    let v = solve_lyapunov(&build_drift(model), &build_diffusion(model))?;
    CovarianceMatrix::new(v)
}

/// n_eff = (⟨δq_j²⟩ + ⟨δp_j²⟩ − 1)/2.
pub fn mode_occupancy(v: &CovarianceMatrix, j: usize) -> f64 {
    let m = v.matrix();
    (m[(2 * j, 2 * j)] + m[(2 * j + 1, 2 * j + 1)] - 1.0) / 2.0
}

/// Temperature (K) of a thermal state with mean occupancy `n_eff` at `omega`.
pub fn effective_temperature(n_eff: f64, omega: f64) -> f64 {
    if n_eff <= 0.0 {
        return 0.0;
    }
    HBAR * omega / (K_B * (1.0 + 1.0 / n_eff).ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physicality {
    pub min_eig: f64,
    pub physical: bool,
}

/// Smallest eigenvalue of `V + iJ/2`; the state is physical when it is not
/// below `-TOLERANCES.physicality`.
pub fn physicality_check(v: &CovarianceMatrix) -> Result<Physicality, SteadyStateError> {
    let k = symplectic_form(v.n_subsystems()).scale(0.5);
    let h = HermitianPair::new(v.matrix().clone(), k)?;
    let min_eig = eigenvalues_hermitian(&h)?[0];
    Ok(Physicality {
        min_eig,
        physical: min_eig >= -TOLERANCES.physicality,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateReport {
    pub covariance: CovarianceMatrix,
    pub occupancy: Vec<f64>,
    /// Kelvin, one per mechanical mode.
    pub effective_temperature: Vec<f64>,
    /// η⁽ᴺ⁾; `None` when Δ ≤ 0, where it is not defined.
    pub eta: Option<f64>,
    pub stable: bool,
    pub max_real_part: f64,
    pub min_symplectic_eig: f64,
    /// ‖AV + VAᵀ + D‖_F / ‖D‖_F
    pub relative_residual: f64,
    pub warnings: Vec<ModelWarning>,
}

pub fn steady_state_report(model: &LinearizedModel) -> Result<SteadyStateReport, SteadyStateError> {
    let s = stability_spectral(model)?;
    if !s.stable {
        return Err(SteadyStateError::Unstable {
            max_real_part: s.max_real_part,
        });
    }
    let a = build_drift(model);
    let d = build_diffusion(model);
    let covariance = CovarianceMatrix::new(solve_lyapunov(&a, &d)?)?;
    let relative_residual = lyapunov_residual(&a, covariance.matrix(), &d) / d.frobenius_norm();
    let occupancy: Vec<f64> = (0..model.n_modes())
        .map(|j| mode_occupancy(&covariance, j))
        .collect();
    let effective_temperature = occupancy
        .iter()
        .zip(model.omega())
        .map(|(&n, &w)| effective_temperature(n, w))
        .collect();
    let phys = physicality_check(&covariance)?;
    Ok(SteadyStateReport {
        occupancy,
        effective_temperature,
        eta: stability_eta(model).ok(),
        stable: true,
        max_real_part: s.max_real_part,
        min_symplectic_eig: phys.min_eig,
        relative_residual,
        warnings: model.warnings().to_vec(),
        covariance,
    })
}
