//! Dense small-matrix kernels: linear solves, Kronecker products, the
//! continuous Lyapunov equation and eigenvalues.
//!
//! Matrices here are at most a few hundred rows, so everything is plain dense
//! row-major arithmetic. The Lyapunov equation `A V + V Aᵀ = -D` is solved by
//! vectorising it into one `n² x n²` linear system.

mod matrix;

use nalgebra::linalg::{Schur, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

pub use matrix::{HermitianPair, RealMatrix};

/// Every numerical threshold used by the crate, in one place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative pivot magnitude (against ‖M‖∞) below which a solve is singular.
    pub pivot: f64,
    /// Relative Frobenius residual allowed for a Lyapunov solution.
    pub lyapunov_residual: f64,
    /// Margin, relative to a matrix norm, for deciding the sign of an eigenvalue.
    pub eigen_sign_margin: f64,
    /// Absolute slack on `min eig(V + iJ/2) >= 0`.
    pub physicality: f64,
    /// Relative symmetry defect tolerated in a `HermitianPair`.
    pub hermitian_symmetry: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    pivot: 1e-14,
    lyapunov_residual: 1e-10,
    eigen_sign_margin: 1e-9,
    physicality: 1e-9,
    hermitian_symmetry: 1e-10,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("singular matrix: pivot {pivot:e} at column {column} below threshold {threshold:e}")]
    SingularMatrix {
        column: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("Lyapunov operator is singular (eigenvalue pair of A sums to zero)")]
    SingularLyapunov,
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("matrix pair is not Hermitian (symmetry defect {deviation:e})")]
    NotHermitian { deviation: f64 },
}

/// Row-pivoted LU factorisation `P M = L U`, stored packed.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factor(m: &RealMatrix) -> Result<Self, NumericsError> {
        if !m.is_square() {
            return Err(NumericsError::DimensionMismatch {
                expected: "square matrix".into(),
                found: format!("{}x{}", m.rows(), m.cols()),
            });
        }
        let n = m.rows();
        let threshold = TOLERANCES.pivot * m.inf_norm();
        let mut lu = m.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();

        for col in 0..n {
            let (pivot_row, pivot_abs) =
                (col..n)
                    .map(|r| (r, lu[r * n + col].abs()))
                    .fold(
                        (col, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot_abs <= threshold {
                return Err(NumericsError::SingularMatrix {
                    column: col,
                    pivot: pivot_abs,
                    threshold,
                });
            }
            if pivot_row != col {
                for j in 0..n {
                    lu.swap(col * n + j, pivot_row * n + j);
                }
                perm.swap(col, pivot_row);
            }
            let pivot = lu[col * n + col];
            for r in (col + 1)..n {
                let factor = lu[r * n + col] / pivot;
                if factor == 0.0 {
                    continue;
                }
                lu[r * n + col] = factor;
                for j in (col + 1)..n {
                    lu[r * n + j] -= factor * lu[col * n + j];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n, "right-hand side length mismatch");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }
}

/// Solves `M x = b` by row-pivoted Gaussian elimination.
pub fn solve_linear(m: &RealMatrix, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if b.len() != m.rows() {
        return Err(NumericsError::DimensionMismatch {
            expected: format!("rhs of length {}", m.rows()),
            found: format!("length {}", b.len()),
        });
    }
    Ok(LuFactors::factor(m)?.solve(b))
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &RealMatrix, b: &RealMatrix) -> RealMatrix {
    let (ra, ca, rb, cb) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = RealMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `‖A V + V Aᵀ + D‖_F`
pub fn lyapunov_residual(a: &RealMatrix, v: &RealMatrix, d: &RealMatrix) -> f64 {
    lyapunov_residual_matrix(a, v, d).frobenius_norm()
}

fn lyapunov_residual_matrix(a: &RealMatrix, v: &RealMatrix, d: &RealMatrix) -> RealMatrix {
    &(&a.matmul(v) + &v.matmul(&a.transpose())) + d
}

const MAX_REFINEMENT_STEPS: usize = 10;

/// Solves `A V + V Aᵀ = -D` for symmetric `V`.
///
/// With row-major vectorisation `(A ⊗ I + I ⊗ A) vec(V) = -vec(D)`. The direct
/// solve is followed by iterative refinement against the unvectorised
/// residual until it stops decreasing. Every iterate is symmetrised: the
/// antisymmetric part is poorly determined when A has a nearly undamped mode
/// and would otherwise leak into the correction.
pub fn solve_lyapunov(a: &RealMatrix, d: &RealMatrix) -> Result<RealMatrix, NumericsError> {
    if !a.is_square() || !d.is_square() || a.rows() != d.rows() {
        return Err(NumericsError::DimensionMismatch {
            expected: format!("square A and D of equal size ({})", a.rows()),
            found: format!("A {}x{}, D {}x{}", a.rows(), a.cols(), d.rows(), d.cols()),
        });
    }
    let n = a.rows();
    let eye = RealMatrix::identity(n);
    let op = &kron(a, &eye) + &kron(&eye, a);
    let lu = LuFactors::factor(&op).map_err(|e| match e {
        NumericsError::SingularMatrix { .. } => NumericsError::SingularLyapunov,
        other => other,
    })?;

    let rhs: Vec<f64> = d.as_slice().iter().map(|x| -x).collect();
    let mut v = RealMatrix::new(n, n, lu.solve(&rhs))?.symmetrized();
    let mut r = lyapunov_residual_matrix(a, &v, d);
    let mut r_norm = r.frobenius_norm();
    for _ in 0..MAX_REFINEMENT_STEPS {
        if r_norm == 0.0 {
            break;
        }
        let neg_r: Vec<f64> = r.as_slice().iter().map(|x| -x).collect();
        let next = (&v + &RealMatrix::new(n, n, lu.solve(&neg_r))?).symmetrized();
        let next_r = lyapunov_residual_matrix(a, &next, d);
        let next_norm = next_r.frobenius_norm();
        if next_norm >= r_norm {
            break;
        }
        (v, r, r_norm) = (next, next_r, next_norm);
    }
    Ok(v)
}

/// All eigenvalues of a general real square matrix.
pub fn eigenvalues_general(a: &RealMatrix) -> Result<Vec<Complex64>, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::DimensionMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", a.rows(), a.cols()),
        });
    }
    let schur = Schur::try_new(a.to_nalgebra(), f64::EPSILON, 10_000)
        .ok_or(NumericsError::NoConvergence)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalues of `S + iK`, ascending, through the real embedding
/// `[[S, -K], [K, S]]`. Every eigenvalue of the embedding appears twice; one
/// copy of each pair is returned.
pub fn eigenvalues_hermitian(h: &HermitianPair) -> Result<Vec<f64>, NumericsError> {
    let emb = h.real_embedding();
    let mut eig: Vec<f64> = SymmetricEigen::new(emb.to_nalgebra())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    if eig.iter().any(|x| !x.is_finite()) {
        return Err(NumericsError::NoConvergence);
    }
    eig.sort_by(f64::total_cmp);
    Ok(eig.into_iter().step_by(2).collect())
}

/// Block-diagonal symplectic form with `[[0, 1], [-1, 0]]` per mode.
pub fn symplectic_form(modes: usize) -> RealMatrix {
    let mut j = RealMatrix::zeros(2 * modes, 2 * modes);
    for m in 0..modes {
        j[(2 * m, 2 * m + 1)] = 1.0;
        j[(2 * m + 1, 2 * m)] = -1.0;
    }
    j
}
