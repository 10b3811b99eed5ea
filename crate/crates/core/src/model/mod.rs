//! Laboratory parameters, the linearised model and its drift/diffusion matrices.
//!
//! Internal units: every frequency and rate is an angular frequency (rad/s).
//! Quadratures are normalised so the vacuum variance is 1/2.
//!
//! Phase-space ordering for N mechanical modes is
//! `(δq₁, δp₁, …, δq_N, δp_N, δX, δY)`.

mod semiclassical;
mod transform;

use std::fmt;

use thiserror::Error;

use crate::constants::{C, HBAR, K_B};
use crate::numerics::{eigenvalues_general, NumericsError, RealMatrix, TOLERANCES};

pub use semiclassical::{semiclassical_solve, SemiclassicalBranch, SemiclassicalState};
pub use transform::{cm_relative, CmRelativeTransform};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {}", format_issues(.0))]
    Invalid(Vec<FieldIssue>),
    #[error("{0}")]
    DomainError(String),
    #[error("no physical semiclassical root (all roots negative)")]
    NoPhysicalRoot,
    #[error("bare detuning gives {count} semiclassical branches; select one explicitly")]
    AmbiguousBranch { count: usize },
    #[error("center-of-mass transform needs at least one nonzero coupling")]
    DegenerateCoupling,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// One validation problem, addressed by a dotted field path such as `modes[0].mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldIssue {
    pub field: String,
    pub reason: String,
}

impl FieldIssue {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

fn format_issues(issues: &[FieldIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Damping {
    /// Energy damping rate γ (rad/s).
    Rate(f64),
    /// Mechanical quality factor, γ = ω/Q.
    QualityFactor(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechModeParams {
    /// Resonance frequency ω_j (rad/s).
    pub omega: f64,
    pub damping: Damping,
    /// Effective mass (kg).
    pub mass: f64,
    /// Overlap c_j ∈ [0, 1] of the mechanical mode with the optical spot.
    pub overlap: f64,
}

impl MechModeParams {
    pub fn gamma(&self) -> f64 {
        match self.damping {
            Damping::Rate(g) => g,
            Damping::QualityFactor(q) => self.omega / q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CavityLoss {
    Finesse(f64),
    /// Amplitude decay rate κ (rad/s).
    Kappa(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetuningSpec {
    /// The effective detuning Δ_(N), including the static radiation-pressure shift.
    Effective(f64),
    /// The bare laser detuning Δ₀ = ω_c − ω₀.
    Bare(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    pub modes: Vec<MechModeParams>,
    /// Cavity length L (m).
    pub cavity_length: f64,
    pub cavity_loss: CavityLoss,
    /// Laser wavelength λ₀ (m).
    pub laser_wavelength: f64,
    /// Input power 𝒫_in (W).
    pub input_power: f64,
    /// Mirror bath temperature T (K).
    pub bath_temperature: f64,
    pub detuning: DetuningSpec,
}

impl PhysicalParams {
    pub fn kappa(&self) -> f64 {
        match self.cavity_loss {
            CavityLoss::Kappa(k) => k,
            CavityLoss::Finesse(f) => kappa_from_finesse(self.cavity_length, f),
        }
    }

    /// Laser angular frequency ω₀ = 2πc/λ₀, also used for the cavity resonance
    /// in coupling prefactors.
    pub fn laser_omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * C / self.laser_wavelength
    }

    /// Single-photon coupling G₀ʲ = (ω_c c_j / L) √(ħ / m_j ω_j).
    pub fn bare_coupling(&self, j: usize) -> f64 {
        let m = &self.modes[j];
        self.laser_omega() * m.overlap / self.cavity_length * (HBAR / (m.mass * m.omega)).sqrt()
    }

    /// Drive amplitude |E| = √(2 𝒫_in κ / ħ ω₀).
    pub fn drive_amplitude(&self) -> f64 {
        (2.0 * self.input_power * self.kappa() / (HBAR * self.laser_omega())).sqrt()
    }

    /// Input power for which mode 0 has effective coupling `g1` at `detuning`.
    pub fn input_power_for_coupling(&self, g1: f64, detuning: f64) -> Result<f64, ModelError> {
        let m = self
            .modes
            .first()
            .ok_or_else(|| ModelError::Invalid(vec![FieldIssue::new("modes", "empty")]))?;
        if m.overlap <= 0.0 {
            return Err(ModelError::Invalid(vec![FieldIssue::new(
                "modes[0].overlap",
                "must be positive to set the coupling of mode 0",
            )]));
        }
        let kappa = self.kappa();
        let w0 = self.laser_omega();
        let prefactor = 2.0 * w0 * m.overlap / self.cavity_length;
        Ok(
            (g1 / prefactor).powi(2)
                * m.mass
                * m.omega
                * w0
                * (kappa * kappa + detuning * detuning)
                / kappa,
        )
    }

    /// Every problem with the parameter set, not only the first.
    pub fn validate(&self) -> Vec<FieldIssue> {
        let mut issues = Vec::new();
        let mut positive = |field: String, value: f64| {
            if !(value.is_finite() && value > 0.0) {
                issues.push(FieldIssue::new(
                    field,
                    format!("must be positive, got {value}"),
                ));
            }
        };
        positive("cavity_length".into(), self.cavity_length);
        positive("laser_wavelength".into(), self.laser_wavelength);
        match self.cavity_loss {
            CavityLoss::Kappa(k) => positive("kappa".into(), k),
            CavityLoss::Finesse(f) => positive("finesse".into(), f - 1.0),
        }
        for (j, m) in self.modes.iter().enumerate() {
            positive(format!("modes[{j}].omega"), m.omega);
            positive(format!("modes[{j}].mass"), m.mass);
            if let Damping::QualityFactor(q) = m.damping {
                positive(format!("modes[{j}].quality_factor"), q);
            }
        }
        if self.modes.is_empty() {
            issues.push(FieldIssue::new(
                "modes",
                "at least one mechanical mode is required",
            ));
        }
        if !(self.input_power.is_finite() && self.input_power >= 0.0) {
            issues.push(FieldIssue::new("input_power", "must be non-negative"));
        }
        if !(self.bath_temperature.is_finite() && self.bath_temperature >= 0.0) {
            issues.push(FieldIssue::new("bath_temperature", "must be non-negative"));
        }
        for (j, m) in self.modes.iter().enumerate() {
            if let Damping::Rate(g) = m.damping {
                if !(g.is_finite() && g >= 0.0) {
                    issues.push(FieldIssue::new(
                        format!("modes[{j}].gamma"),
                        "must be non-negative",
                    ));
                }
            }
            if !(0.0..=1.0).contains(&m.overlap) {
                issues.push(FieldIssue::new(
                    format!("modes[{j}].overlap"),
                    "must lie in [0, 1]",
                ));
            }
        }
        let detuning = match self.detuning {
            DetuningSpec::Effective(d) | DetuningSpec::Bare(d) => d,
        };
        if !detuning.is_finite() {
            issues.push(FieldIssue::new("detuning", "must be finite"));
        }
        issues
    }
}

/// κ = πc / (2 L 𝓕)
pub fn kappa_from_finesse(length: f64, finesse: f64) -> f64 {
    std::f64::consts::PI * C / (2.0 * length * finesse)
}

/// Bose occupancy 1/(exp(ħω/k_B T) − 1); zero at T = 0.
pub fn thermal_occupancy(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (K_B * temperature)).exp_m1()
}

/// Effective coupling G_j = (2ω_c c_j / L) √(𝒫_in κ / (m_j ω_j ω₀ (κ² + Δ²))).
pub fn effective_coupling(params: &PhysicalParams, detuning: f64, j: usize) -> f64 {
    let m = &params.modes[j];
    let kappa = params.kappa();
    let w0 = params.laser_omega();
    let prefactor = 2.0 * w0 * m.overlap / params.cavity_length;
    prefactor
        * (params.input_power * kappa
            / (m.mass * m.omega * w0 * (kappa * kappa + detuning * detuning)))
            .sqrt()
}

/// How couplings respond when the detuning moves along a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingMode {
    /// Input power held fixed; G_j(Δ) follows the effective-coupling law.
    FixedPower,
    /// G_j frozen at their value for `reference_detuning`.
    FixedG { reference_detuning: f64 },
}

impl CouplingMode {
    pub fn label(&self) -> &'static str {
        match self {
            CouplingMode::FixedPower => "fixed-power",
            CouplingMode::FixedG { .. } => "fixed-G",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelWarning {
    /// ħω_j / 2k_BT exceeds 0.1: the white-noise bath approximation is degrading.
    NonMarkovianBath { mode: usize, ratio: f64 },
    /// Several semiclassical branches exist; `chosen` is the one used.
    Bistable { branches: usize, chosen: usize },
}

impl fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelWarning::NonMarkovianBath { mode, ratio } => write!(
                f,
                "mode {}: hbar*omega/(2 kB T) = {ratio:.3e} > 0.1, Markovian bath approximation degrading",
                mode + 1
            ),
            ModelWarning::Bistable { branches, chosen } => write!(
                f,
                "{branches} semiclassical branches, using branch {chosen}"
            ),
        }
    }
}

/// Threshold on ħω/2k_BT above which the bath is flagged as non-Markovian.
pub const MARKOV_RATIO_LIMIT: f64 = 0.1;

/// The normalised linear model: the only input of the matrix builders.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedModel {
    omega: Vec<f64>,
    gamma: Vec<f64>,
    coupling: Vec<f64>,
    n_thermal: Vec<f64>,
    kappa: f64,
    detuning: f64,
    warnings: Vec<ModelWarning>,
}

impl LinearizedModel {
    pub fn new(
        omega: Vec<f64>,
        gamma: Vec<f64>,
        coupling: Vec<f64>,
        n_thermal: Vec<f64>,
        kappa: f64,
        detuning: f64,
    ) -> Result<Self, ModelError> {
        let n = omega.len();
        let mut issues = Vec::new();
        if n == 0 {
            issues.push(FieldIssue::new("omega", "at least one mode is required"));
        }
        for (name, list) in [
            ("gamma", &gamma),
            ("coupling", &coupling),
            ("n_thermal", &n_thermal),
        ] {
            if list.len() != n {
                issues.push(FieldIssue::new(
                    name,
                    format!("expected {n} entries, got {}", list.len()),
                ));
            }
        }
        for (j, &w) in omega.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                issues.push(FieldIssue::new(format!("omega[{j}]"), "must be positive"));
            }
        }
        for (j, &g) in gamma.iter().enumerate() {
            if !(g.is_finite() && g >= 0.0) {
                issues.push(FieldIssue::new(
                    format!("gamma[{j}]"),
                    "must be non-negative",
                ));
            }
        }
        for (j, &g) in coupling.iter().enumerate() {
            if !g.is_finite() {
                issues.push(FieldIssue::new(format!("coupling[{j}]"), "must be finite"));
            }
        }
        for (j, &x) in n_thermal.iter().enumerate() {
            if !(x.is_finite() && x >= 0.0) {
                issues.push(FieldIssue::new(
                    format!("n_thermal[{j}]"),
                    "must be non-negative",
                ));
            }
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            issues.push(FieldIssue::new("kappa", "must be positive"));
        }
        if !detuning.is_finite() {
            issues.push(FieldIssue::new("detuning", "must be finite"));
        }
        if !issues.is_empty() {
            return Err(ModelError::Invalid(issues));
        }
        Ok(Self {
            omega,
            gamma,
            coupling,
            n_thermal,
            kappa,
            detuning,
            warnings: Vec::new(),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.omega.len()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Effective couplings G_j (rad/s).
    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    pub fn n_thermal(&self) -> &[f64] {
        &self.n_thermal
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Effective detuning Δ_(N) (rad/s).
    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub fn warnings(&self) -> &[ModelWarning] {
        &self.warnings
    }

    pub fn with_detuning(&self, detuning: f64) -> Self {
        Self {
            detuning,
            ..self.clone()
        }
    }

    pub fn with_couplings(&self, coupling: Vec<f64>) -> Self {
        assert_eq!(coupling.len(), self.n_modes());
        Self {
            coupling,
            ..self.clone()
        }
    }

    pub fn with_warnings(mut self, warnings: Vec<ModelWarning>) -> Self {
        self.warnings = warnings;
        self
    }

    /// The same cavity coupled to mechanical mode `j` alone.
    pub fn restrict_to_mode(&self, j: usize) -> Self {
        Self {
            omega: vec![self.omega[j]],
            gamma: vec![self.gamma[j]],
            coupling: vec![self.coupling[j]],
            n_thermal: vec![self.n_thermal[j]],
            kappa: self.kappa,
            detuning: self.detuning,
            warnings: self
                .warnings
                .iter()
                .filter_map(|w| match w {
                    ModelWarning::NonMarkovianBath { mode, ratio } if *mode == j => {
                        Some(ModelWarning::NonMarkovianBath {
                            mode: 0,
                            ratio: *ratio,
                        })
                    }
                    ModelWarning::NonMarkovianBath { .. } => None,
                    other => Some(other.clone()),
                })
                .collect(),
        }
    }
}

fn markov_warnings(params: &PhysicalParams) -> Vec<ModelWarning> {
    params
        .modes
        .iter()
        .enumerate()
        .filter_map(|(j, m)| {
            let ratio = if params.bath_temperature > 0.0 {
                HBAR * m.omega / (2.0 * K_B * params.bath_temperature)
            } else {
                f64::INFINITY
            };
            (ratio > MARKOV_RATIO_LIMIT)
                .then_some(ModelWarning::NonMarkovianBath { mode: j, ratio })
        })
        .collect()
}

fn assemble(
    params: &PhysicalParams,
    coupling: Vec<f64>,
    detuning: f64,
    mut warnings: Vec<ModelWarning>,
) -> Result<LinearizedModel, ModelError> {
    let omega: Vec<f64> = params.modes.iter().map(|m| m.omega).collect();
    let gamma = params.modes.iter().map(MechModeParams::gamma).collect();
    let n_thermal = omega
        .iter()
        .map(|&w| thermal_occupancy(w, params.bath_temperature))
        .collect();
    warnings.extend(markov_warnings(params));
    Ok(
        LinearizedModel::new(omega, gamma, coupling, n_thermal, params.kappa(), detuning)?
            .with_warnings(warnings),
    )
}

fn check(params: &PhysicalParams) -> Result<(), ModelError> {
    let issues = params.validate();
    if issues.is_empty() {
        Ok(())
    } else {
        Err(ModelError::Invalid(issues))
    }
}

/// Linearised model at fixed input power.
pub fn build_linearized(params: &PhysicalParams) -> Result<LinearizedModel, ModelError> {
    build_linearized_with(params, CouplingMode::FixedPower)
}

/// Linearised model with an explicit coupling mode.
///
/// An effective detuning is used as given. A bare detuning goes through the
/// semiclassical solve and must have a single branch; use
/// [`build_linearized_on_branch`] otherwise.
pub fn build_linearized_with(
    params: &PhysicalParams,
    mode: CouplingMode,
) -> Result<LinearizedModel, ModelError> {
    check(params)?;
    match (params.detuning, mode) {
        (DetuningSpec::Effective(delta), CouplingMode::FixedPower) => {
            let g = (0..params.modes.len())
                .map(|j| effective_coupling(params, delta, j))
                .collect();
            assemble(params, g, delta, Vec::new())
        }
        (DetuningSpec::Effective(delta), CouplingMode::FixedG { reference_detuning }) => {
            let g = (0..params.modes.len())
                .map(|j| effective_coupling(params, reference_detuning, j))
                .collect();
            assemble(params, g, delta, Vec::new())
        }
        (DetuningSpec::Bare(_), CouplingMode::FixedG { .. }) => {
            Err(ModelError::Invalid(vec![FieldIssue::new(
                "coupling_mode",
                "fixed-G requires an effective detuning",
            )]))
        }
        (DetuningSpec::Bare(_), CouplingMode::FixedPower) => {
            let state = semiclassical_solve(params)?;
            match state.branches.as_slice() {
                [branch] => build_linearized_on_branch(params, branch),
                _ => Err(ModelError::AmbiguousBranch {
                    count: state.branch_count(),
                }),
            }
        }
    }
}

/// Linearised model around a chosen semiclassical branch: G_j = √2 G₀ʲ α_s.
pub fn build_linearized_on_branch(
    params: &PhysicalParams,
    branch: &SemiclassicalBranch,
) -> Result<LinearizedModel, ModelError> {
    check(params)?;
    let g = (0..params.modes.len())
        .map(|j| std::f64::consts::SQRT_2 * params.bare_coupling(j) * branch.alpha_s)
        .collect();
    assemble(params, g, branch.effective_detuning, Vec::new())
}

/// Drift matrix of the linearised Langevin equations.
pub fn build_drift(model: &LinearizedModel) -> RealMatrix {
    let n = model.n_modes();
    let (x, y) = (2 * n, 2 * n + 1);
    let mut a = RealMatrix::zeros(2 * n + 2, 2 * n + 2);
    for j in 0..n {
        let (q, p) = (2 * j, 2 * j + 1);
        a[(q, p)] = model.omega[j];
        a[(p, q)] = -model.omega[j];
        a[(p, p)] = -model.gamma[j];
        a[(p, x)] = model.coupling[j];
        a[(y, q)] = model.coupling[j];
    }
    a[(x, x)] = -model.kappa;
    a[(x, y)] = model.detuning;
    a[(y, x)] = -model.detuning;
    a[(y, y)] = -model.kappa;
    a
}

/// diag(0, γ₁(2n₁+1), …, 0, γ_N(2n_N+1), κ, κ)
pub fn build_diffusion(model: &LinearizedModel) -> RealMatrix {
    let mut diag = Vec::with_capacity(2 * model.n_modes() + 2);
    for j in 0..model.n_modes() {
        diag.push(0.0);
        diag.push(model.gamma[j] * (2.0 * model.n_thermal[j] + 1.0));
    }
    diag.push(model.kappa);
    diag.push(model.kappa);
    RealMatrix::from_diagonal(&diag)
}

/// η⁽ᴺ⁾ = 1 − Δ/(κ² + Δ²) Σ_j G_j²/ω_j; the system is stable iff η > 0 (for Δ > 0).
pub fn stability_eta(model: &LinearizedModel) -> Result<f64, ModelError> {
    let d = model.detuning;
    if d <= 0.0 {
        return Err(ModelError::DomainError(format!(
            "analytic stability condition needs a positive detuning, got {d:e}"
        )));
    }
    let sum: f64 = model
        .coupling
        .iter()
        .zip(&model.omega)
        .map(|(g, w)| g * g / w)
        .sum();
    Ok(1.0 - d / (model.kappa * model.kappa + d * d) * sum)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralStability {
    pub stable: bool,
    /// Largest real part among the drift eigenvalues (rad/s).
    pub max_real_part: f64,
}

/// Hurwitz test on the drift matrix: every eigenvalue must have real part
/// below `-eigen_sign_margin · ‖A‖_F`.
pub fn stability_spectral(model: &LinearizedModel) -> Result<SpectralStability, ModelError> {
    let a = build_drift(model);
    let margin = TOLERANCES.eigen_sign_margin * a.frobenius_norm();
    let max_real_part = eigenvalues_general(&a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectralStability {
        stable: max_real_part < -margin,
        max_real_part,
    })
}
