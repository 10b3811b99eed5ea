//! Frequency-domain response of the mechanical modes: bare and dressed
//! susceptibilities, effective frequency and damping, and the net laser
//! cooling rate.

use crate::model::LinearizedModel;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("{0}")]
    DomainError(String),
    #[error("mode index {index} out of range for {n_modes} modes")]
    BadIndex { index: usize, n_modes: usize },
    #[error("invalid response: {0}")]
    InvalidResponse(String),
}

/// A complex function sampled on a strictly increasing frequency grid (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexResponse {
    frequency_grid: Vec<f64>,
    values: Vec<Complex64>,
}

impl ComplexResponse {
    pub fn new(frequency_grid: Vec<f64>, values: Vec<Complex64>) -> Result<Self, SpectralError> {
        if frequency_grid.len() != values.len() {
            return Err(SpectralError::InvalidResponse(format!(
                "{} grid points but {} values",
                frequency_grid.len(),
                values.len()
            )));
        }
        if frequency_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SpectralError::InvalidResponse(
                "frequency grid must be strictly increasing".into(),
            ));
        }
        if let Some(k) = values
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(SpectralError::InvalidResponse(format!(
                "non-finite value at grid point {k}"
            )));
        }
        Ok(Self {
            frequency_grid,
            values,
        })
    }

    /// Evaluates `f` at every grid point.
    pub fn sample<F>(grid: &[f64], mut f: F) -> Result<Self, SpectralError>
    where
        F: FnMut(f64) -> Result<Complex64, SpectralError>,
    {
        let values = grid.iter().map(|&w| f(w)).collect::<Result<Vec<_>, _>>()?;
        Self::new(grid.to_vec(), values)
    }

    pub fn frequency_grid(&self) -> &[f64] {
        &self.frequency_grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// ω_eff² and γ_eff sampled on a grid. ω_eff² keeps its sign so a softened
/// (negative-stiffness) mode stays visible.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveOscillator {
    pub frequency_grid: Vec<f64>,
    pub omega_eff_sq: Vec<f64>,
    pub gamma_eff: Vec<f64>,
}

impl EffectiveOscillator {
    /// sign(ω_eff²)·√|ω_eff²|
    pub fn omega_eff(&self) -> Vec<f64> {
        self.omega_eff_sq
            .iter()
            .map(|&x| x.signum() * x.abs().sqrt())
            .collect()
    }
}

fn check_index(model: &LinearizedModel, i: usize) -> Result<(), SpectralError> {
    if i >= model.n_modes() {
        return Err(SpectralError::BadIndex {
            index: i,
            n_modes: model.n_modes(),
        });
    }
    Ok(())
}

/// z(ω) = Δ / ((κ − iω)² + Δ²)
pub fn z_response(model: &LinearizedModel, omega: f64) -> Complex64 {
    let k = Complex64::new(model.kappa(), -omega);
    let d = model.detuning();
    d / (k * k + d * d)
}

fn chi_bare_inv(model: &LinearizedModel, i: usize, omega: f64) -> Complex64 {
    let wi = model.omega()[i];
    Complex64::new(wi * wi - omega * omega, -omega * model.gamma()[i]) / wi
}

fn chi_modified_inv(model: &LinearizedModel, i: usize, omega: f64) -> Complex64 {
    let g = model.coupling()[i];
    chi_bare_inv(model, i, omega) - z_response(model, omega) * g * g
}

/// χ₀ⁱ(ω) = ω_i / ((ω_i² − ω²) − iωγ_i)
pub fn chi_bare(model: &LinearizedModel, i: usize, omega: f64) -> Result<Complex64, SpectralError> {
    check_index(model, i)?;
    Ok(chi_bare_inv(model, i, omega).inv())
}

/// χ_i⁻¹ = (χ₀ⁱ)⁻¹ − z G_i²
pub fn chi_modified(
    model: &LinearizedModel,
    i: usize,
    omega: f64,
) -> Result<Complex64, SpectralError> {
    check_index(model, i)?;
    Ok(chi_modified_inv(model, i, omega).inv())
}

/// Dressed susceptibility of mode 1 with the second mode eliminated:
/// (χ₁ᵗᵐ)⁻¹ = χ₁⁻¹ − χ₂ z² G₁² G₂².
pub fn chi_two_mode(model: &LinearizedModel, omega: f64) -> Result<Complex64, SpectralError> {
    if model.n_modes() != 2 {
        return Err(SpectralError::DomainError(format!(
            "two-mode susceptibility needs N = 2, got {}",
            model.n_modes()
        )));
    }
    let z = z_response(model, omega);
    let (g1, g2) = (model.coupling()[0], model.coupling()[1]);
    let chi2 = chi_modified_inv(model, 1, omega).inv();
    Ok((chi_modified_inv(model, 0, omega) - chi2 * z * z * (g1 * g1 * g2 * g2)).inv())
}

/// Reads ω_eff² = ω² + ω_i Re χ⁻¹ and γ_eff = −ω_i Im χ⁻¹ / ω off a response
/// of mode `i`.
pub fn effective_oscillator(
    chi: &ComplexResponse,
    model: &LinearizedModel,
    i: usize,
) -> Result<EffectiveOscillator, SpectralError> {
    check_index(model, i)?;
    let wi = model.omega()[i];
    let mut omega_eff_sq = Vec::with_capacity(chi.len());
    let mut gamma_eff = Vec::with_capacity(chi.len());
    for (&w, &x) in chi.frequency_grid().iter().zip(chi.values()) {
        if w == 0.0 {
            return Err(SpectralError::DomainError(
                "effective damping is undefined at ω = 0".into(),
            ));
        }
        if x == Complex64::new(0.0, 0.0) {
            return Err(SpectralError::DomainError(format!(
                "susceptibility vanishes at ω = {w}"
            )));
        }
        let inv = x.inv();
        omega_eff_sq.push(w * w + wi * inv.re);
        gamma_eff.push(-wi * inv.im / w);
    }
    Ok(EffectiveOscillator {
        frequency_grid: chi.frequency_grid().to_vec(),
        omega_eff_sq,
        gamma_eff,
    })
}

/// Γ_j = 2G_j²Δω_jκ / ([κ² + (ω_j − Δ)²][κ² + (ω_j + Δ)²])
pub fn net_cooling_rate(model: &LinearizedModel, j: usize) -> f64 {
    let (g, w) = (model.coupling()[j], model.omega()[j]);
    let (k, d) = (model.kappa(), model.detuning());
    2.0 * g * g * d * w * k / ((k * k + (w - d).powi(2)) * (k * k + (w + d).powi(2)))
}

fn require_two(model: &LinearizedModel) -> Result<(), SpectralError> {
    if model.n_modes() != 2 {
        return Err(SpectralError::DomainError(format!(
            "interference formula needs N = 2, got {}",
            model.n_modes()
        )));
    }
    Ok(())
}

/// Approximate effective damping of mode 1 with frequency-independent rates:
/// (γ₁ + Γ₁) − Γ₁ω²Γ₂² / [(ω₂² − ω²)² + ω²Γ₂²].
pub fn gamma_eff_interference(model: &LinearizedModel, omega: f64) -> Result<f64, SpectralError> {
    require_two(model)?;
    let (big1, big2) = (net_cooling_rate(model, 0), net_cooling_rate(model, 1));
    let w2 = model.omega()[1];
    let detune = (w2 * w2 - omega * omega).powi(2);
    let w_sq = omega * omega;
    Ok(model.gamma()[0] + big1 - big1 * w_sq * big2 * big2 / (detune + w_sq * big2 * big2))
}

/// The same without dropping the γ₂Γ₂ term:
/// γ₁ + Γ₁[(ω₂² − ω²)² + ω²γ₂Γ₂] / [(ω₂² − ω²)² + ω²Γ₂²].
pub fn gamma_eff_interference_full(
    model: &LinearizedModel,
    omega: f64,
) -> Result<f64, SpectralError> {
    require_two(model)?;
    let (big1, big2) = (net_cooling_rate(model, 0), net_cooling_rate(model, 1));
    let w2 = model.omega()[1];
    let gamma2 = model.gamma()[1];
    let detune = (w2 * w2 - omega * omega).powi(2);
    let w_sq = omega * omega;
    Ok(model.gamma()[0] + big1 * (detune + w_sq * gamma2 * big2) / (detune + w_sq * big2 * big2))
}

pub const DEFAULT_CORE_POINTS: usize = 4001;
pub const DEFAULT_WING_POINTS: usize = 100;

/// 4001 points over [0.5ω₁, 1.5ω₁], with coarser wings on (0.05ω₁, 0.5ω₁) and
/// (1.5ω₁, 3ω₁].
pub fn default_grid(model: &LinearizedModel) -> Vec<f64> {
    let w1 = model.omega()[0];
    let mut grid = Vec::with_capacity(DEFAULT_CORE_POINTS + 2 * DEFAULT_WING_POINTS);
    let lerp = |a: f64, b: f64, k: usize, n: usize| a + (b - a) * k as f64 / n as f64;
    for k in 0..DEFAULT_WING_POINTS {
        grid.push(w1 * lerp(0.05, 0.5, k, DEFAULT_WING_POINTS));
    }
    for k in 0..DEFAULT_CORE_POINTS {
        grid.push(w1 * lerp(0.5, 1.5, k, DEFAULT_CORE_POINTS - 1));
    }
    for k in 1..=DEFAULT_WING_POINTS {
        grid.push(w1 * lerp(1.5, 3.0, k, DEFAULT_WING_POINTS));
    }
    grid
}
