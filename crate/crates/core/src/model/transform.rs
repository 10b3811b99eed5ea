use super::{LinearizedModel, ModelError};
use crate::numerics::RealMatrix;

/// Center-of-mass / relative coordinates of two mechanical modes.
///
/// With weights (g₁, g₂) = (G₁, G₂)/√(G₁² + G₂²):
/// q_cm = g₁q₁ + g₂q₂, q_r = g₁q₂ − g₂q₁ (and the same for momenta).
/// The free mechanical Hamiltonian becomes
/// ω_cm/2 (q_cm² + p_cm²) + ω_r/2 (q_r² + p_r²) + cross (q_cm q_r + p_cm p_r).
#[derive(Debug, Clone, PartialEq)]
pub struct CmRelativeTransform {
    pub omega_cm: f64,
    pub omega_r: f64,
    /// (ω₂ − ω₁) G₁G₂ / (G₁² + G₂²)
    pub cross_coupling: f64,
    /// Maps (q₁, p₁, q₂, p₂) to (q_cm, p_cm, q_r, p_r).
    pub basis: RealMatrix,
}

pub fn cm_relative(model: &LinearizedModel) -> Result<CmRelativeTransform, ModelError> {
    if model.n_modes() != 2 {
        return Err(ModelError::DomainError(format!(
            "center-of-mass transform needs exactly two modes, got {}",
            model.n_modes()
        )));
    }
    let (g1, g2) = (model.coupling()[0], model.coupling()[1]);
    let norm2 = g1 * g1 + g2 * g2;
    if norm2 == 0.0 {
        return Err(ModelError::DegenerateCoupling);
    }
    let (w1, w2) = (model.omega()[0], model.omega()[1]);
    let norm = norm2.sqrt();
    let (a, b) = (g1 / norm, g2 / norm);
    let basis = RealMatrix::from_rows(&[
        [a, 0.0, b, 0.0],
        [0.0, a, 0.0, b],
        [-b, 0.0, a, 0.0],
        [0.0, -b, 0.0, a],
    ]);
    Ok(CmRelativeTransform {
        omega_cm: (g1 * g1 * w1 + g2 * g2 * w2) / norm2,
        omega_r: (g1 * g1 * w2 + g2 * g2 * w1) / norm2,
        cross_coupling: (w2 - w1) * g1 * g2 / norm2,
        basis,
    })
}
