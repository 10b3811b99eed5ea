use super::{ModelError, PhysicalParams};

/// One self-consistent steady state of the driven cavity and displaced mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiclassicalBranch {
    /// Intracavity amplitude α_s (real, non-negative by phase choice).
    pub alpha_s: f64,
    /// Static displacements q_sʲ = G₀ʲ α_s² / ω_j (dimensionless).
    pub q_s: Vec<f64>,
    /// Δ_(N) = Δ₀ − α_s² Σ_j (G₀ʲ)²/ω_j (rad/s).
    pub effective_detuning: f64,
}

impl SemiclassicalBranch {
    pub fn photon_number(&self) -> f64 {
        self.alpha_s * self.alpha_s
    }
}

/// All physical branches, ordered by increasing photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiclassicalState {
    pub branches: Vec<SemiclassicalBranch>,
}

impl SemiclassicalState {
    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }
}

/// Solves |α_s|² (κ² + Δ_(N)²) = E² with Δ_(N) = Δ₀ − |α_s|² S, S = Σ_j (G₀ʲ)²/ω_j.
///
/// In the scaled unknown y = S|α_s|²/κ this is the cubic
/// y³ − 2δy² + (1 + δ²)y − p = 0 with δ = Δ₀/κ and p = E²S/κ³.
pub fn semiclassical_solve(params: &PhysicalParams) -> Result<SemiclassicalState, ModelError> {
    let issues = params.validate();
    if !issues.is_empty() {
        return Err(ModelError::Invalid(issues));
    }
    let bare = match params.detuning {
        super::DetuningSpec::Bare(d) => d,
        super::DetuningSpec::Effective(_) => {
            return Err(ModelError::DomainError(
                "semiclassical solve needs a bare detuning".into(),
            ))
        }
    };
    let kappa = params.kappa();
    let e2 = params.drive_amplitude().powi(2);
    let g0: Vec<f64> = (0..params.modes.len())
        .map(|j| params.bare_coupling(j))
        .collect();
    let shift: f64 = g0
        .iter()
        .zip(&params.modes)
        .map(|(g, m)| g * g / m.omega)
        .sum();

    let photon_numbers: Vec<f64> = if shift == 0.0 {
        vec![e2 / (kappa * kappa + bare * bare)]
    } else {
        let delta = bare / kappa;
        let p = e2 * shift / kappa.powi(3);
        real_cubic_roots(-2.0 * delta, 1.0 + delta * delta, -p)
            .into_iter()
            .filter(|&y| y >= 0.0)
            .map(|y| kappa * y / shift)
            .collect()
    };
    if photon_numbers.is_empty() {
        return Err(ModelError::NoPhysicalRoot);
    }

    let branches = photon_numbers
        .into_iter()
        .map(|x| SemiclassicalBranch {
            alpha_s: x.sqrt(),
            q_s: g0
                .iter()
                .zip(&params.modes)
                .map(|(g, m)| g * x / m.omega)
                .collect(),
            effective_detuning: bare - x * shift,
        })
        .collect();
    Ok(SemiclassicalState { branches })
}

/// Real roots of y³ + a y² + b y + c, ascending, Newton-polished.
fn real_cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a.powi(3) / 27.0 - a * b / 3.0 + c;
    let disc = -(4.0 * p.powi(3) + 27.0 * q * q);

    let mut roots = if disc > 0.0 {
        // Three distinct real roots.
        let m = 2.0 * (-p / 3.0).sqrt();
        let theta = (3.0 * q / (p * m)).clamp(-1.0, 1.0).acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect::<Vec<_>>()
    } else {
        let s = (q * q / 4.0 + p.powi(3) / 27.0).max(0.0).sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() - shift]
    };

    for r in &mut roots {
        for _ in 0..50 {
            let f = ((*r + a) * *r + b) * *r + c;
            let df = (3.0 * *r + 2.0 * a) * *r + b;
            if df == 0.0 {
                break;
            }
            let step = f / df;
            *r -= step;
            if step.abs() <= 1e-15 * r.abs().max(1e-300) {
                break;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_roots_of_known_polynomials() {
        // (y-1)(y-2)(y-3)
        let r = real_cubic_roots(-6.0, 11.0, -6.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        // (y-2)(y² + 1)
        let r = real_cubic_roots(-2.0, 1.0, -2.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 2.0).abs() < 1e-12);
    }
}
