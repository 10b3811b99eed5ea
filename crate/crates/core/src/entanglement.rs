//! Gaussian entanglement of the steady state: reduced states, logarithmic
//! negativity and the partial-transpose tests for three subsystems.
//!
//! Conventions: per-mode symplectic block `[[0, 1], [-1, 0]]`, vacuum
//! variance ½, so a covariance matrix is physical iff `V + iJ/2 ≥ 0`.

use crate::numerics::{
    eigenvalues_hermitian, symplectic_form, HermitianPair, RealMatrix, TOLERANCES,
};
use crate::steadystate::{CovarianceMatrix, SteadyStateError};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntanglementError {
    #[error("bad subsystem selection: {0}")]
    BadIndex(String),
    #[error("non-physical bipartite matrix: Σ² − 4 det V = {discriminant:e}")]
    NonPhysicalInput { discriminant: f64 },
    #[error(transparent)]
    SteadyState(#[from] SteadyStateError),
}

impl From<crate::numerics::NumericsError> for EntanglementError {
    fn from(e: crate::numerics::NumericsError) -> Self {
        Self::SteadyState(e.into())
    }
}

/// One bosonic mode of the full state. The cavity is always the last mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subsystem {
    /// Zero-based mechanical mode index.
    Mechanical(usize),
    Cavity,
}

impl Subsystem {
    fn position(self, n_subsystems: usize) -> Result<usize, EntanglementError> {
        match self {
            Subsystem::Cavity => Ok(n_subsystems - 1),
            Subsystem::Mechanical(j) if j + 1 < n_subsystems => Ok(j),
            Subsystem::Mechanical(j) => Err(EntanglementError::BadIndex(format!(
                "mechanical mode {j} does not exist in a state with {} mechanical modes",
                n_subsystems - 1
            ))),
        }
    }
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subsystem::Mechanical(j) => write!(f, "mode{}", j + 1),
            Subsystem::Cavity => f.write_str("cavity"),
        }
    }
}

/// Keeps the rows and columns of the listed subsystems, in the state's order.
pub fn reduce(
    v: &CovarianceMatrix,
    subsystems: &[Subsystem],
) -> Result<CovarianceMatrix, EntanglementError> {
    if subsystems.is_empty() || subsystems.len() > 2 {
        return Err(EntanglementError::BadIndex(format!(
            "expected one or two subsystems, got {}",
            subsystems.len()
        )));
    }
    let mut pos = subsystems
        .iter()
        .map(|s| s.position(v.n_subsystems()))
        .collect::<Result<Vec<_>, _>>()?;
    pos.sort_unstable();
    if pos.windows(2).any(|w| w[0] == w[1]) {
        return Err(EntanglementError::BadIndex("repeated subsystem".into()));
    }
    let idx: Vec<usize> = pos.iter().flat_map(|&p| [2 * p, 2 * p + 1]).collect();
    Ok(CovarianceMatrix::new(v.matrix().submatrix(&idx))?)
}

/// Two-mode covariance matrix [[A, C], [Cᵀ, B]].
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteCM(CovarianceMatrix);

impl BipartiteCM {
    pub fn new(v: CovarianceMatrix) -> Result<Self, EntanglementError> {
        if v.dim() != 4 {
            return Err(EntanglementError::BadIndex(format!(
                "bipartite matrix must be 4x4, got {}x{}",
                v.dim(),
                v.dim()
            )));
        }
        Ok(Self(v))
    }

    pub fn from_blocks(
        a: &RealMatrix,
        b: &RealMatrix,
        c: &RealMatrix,
    ) -> Result<Self, EntanglementError> {
        let mut m = RealMatrix::zeros(4, 4);
        m.set_block(0, 0, a);
        m.set_block(2, 2, b);
        m.set_block(0, 2, c);
        m.set_block(2, 0, &c.transpose());
        Self::new(CovarianceMatrix::new(m)?)
    }

    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.0
    }

    pub fn a(&self) -> RealMatrix {
        self.0.matrix().block(0, 0, 2, 2)
    }

    pub fn b(&self) -> RealMatrix {
        self.0.matrix().block(2, 2, 2, 2)
    }

    pub fn c(&self) -> RealMatrix {
        self.0.matrix().block(0, 2, 2, 2)
    }

    /// Smallest symplectic eigenvalue η⁻ of the partial transpose.
    pub fn eta_minus(&self) -> Result<f64, EntanglementError> {
        let sigma = self.a().det2() + self.b().det2() - 2.0 * self.c().det2();
        let det = self.0.matrix().to_nalgebra().determinant();
        let mut disc = sigma * sigma - 4.0 * det;
        if disc < 0.0 {
            if disc < -1e-9 * sigma * sigma.max(1.0) {
                return Err(EntanglementError::NonPhysicalInput { discriminant: disc });
            }
            disc = 0.0;
        }
        // η⁻² = (Σ − √disc)/2, written without the cancellation.
        let denom = sigma + disc.sqrt();
        if denom <= 0.0 || det < 0.0 {
            return Err(EntanglementError::NonPhysicalInput { discriminant: disc });
        }
        Ok((2.0 * det / denom).sqrt())
    }
}

/// Reduced two-mode state of `first` and `second`.
pub fn reduce_bipartite(
    v: &CovarianceMatrix,
    first: Subsystem,
    second: Subsystem,
) -> Result<BipartiteCM, EntanglementError> {
    BipartiteCM::new(reduce(v, &[first, second])?)
}

/// E_N = max(0, −ln 2η⁻).
pub fn log_negativity(vbip: &BipartiteCM) -> Result<f64, EntanglementError> {
    Ok((-(2.0 * vbip.eta_minus()?).ln()).max(0.0))
}

/// Minimum eigenvalue of Λ_k V Λ_k + iJ/2, where Λ_k flips the momentum of
/// subsystem `k`. Negative means the cut k | rest is NPT.
pub fn npt_test(v: &CovarianceMatrix, k: Subsystem) -> Result<f64, EntanglementError> {
    let p = 2 * k.position(v.n_subsystems())? + 1;
    let mut s = v.matrix().clone();
    for i in 0..s.rows() {
        if i != p {
            s[(i, p)] = -s[(i, p)];
            s[(p, i)] = -s[(p, i)];
        }
    }
    let h = HermitianPair::new(s, symplectic_form(v.n_subsystems()).scale(0.5))?;
    Ok(eigenvalues_hermitian(&h)?[0])
}

/// Sign reading of a test eigenvalue against `−margin·‖V‖_F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestSign {
    Negative,
    NonNegative,
    /// Within the tolerance band around zero.
    Ambiguous,
}

pub fn classify_eigenvalue(min_eig: f64, v: &CovarianceMatrix) -> TestSign {
    let t = TOLERANCES.eigen_sign_margin * v.matrix().frobenius_norm();
    if min_eig < -t {
        TestSign::Negative
    } else if min_eig > t {
        TestSign::NonNegative
    } else {
        TestSign::Ambiguous
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripartiteClass {
    FullyInseparable,
    /// Exactly one cut is PPT; the field names it.
    OneModeBiseparable(Subsystem),
    TwoModeBiseparable,
    NptUndetected,
}

impl TripartiteClass {
    pub fn label(&self) -> String {
        match self {
            TripartiteClass::FullyInseparable => "fully-inseparable".into(),
            TripartiteClass::OneModeBiseparable(s) => format!("one-mode-biseparable({s})"),
            TripartiteClass::TwoModeBiseparable => "two-mode-biseparable".into(),
            TripartiteClass::NptUndetected => "npt-undetected".into(),
        }
    }
}

impl fmt::Display for TripartiteClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub const TRIPARTITE_ORDER: [Subsystem; 3] = [
    Subsystem::Mechanical(0),
    Subsystem::Mechanical(1),
    Subsystem::Cavity,
];

#[derive(Debug, Clone, PartialEq)]
pub struct TripartiteClassReport {
    /// NPT test values for mode 1, mode 2 and the cavity.
    pub min_eigs: [f64; 3],
    pub class_label: TripartiteClass,
    /// Set when any test value falls inside the tolerance band; such values
    /// count as non-negative for the label.
    pub ambiguous: bool,
    /// E_N for (mode1|cavity), (mode2|cavity), (mode1|mode2).
    pub negativities: [f64; 3],
}

pub fn classify_tripartite(
    v: &CovarianceMatrix,
) -> Result<TripartiteClassReport, EntanglementError> {
    if v.n_subsystems() != 3 {
        return Err(EntanglementError::BadIndex(format!(
            "tripartite classification needs two mechanical modes and the cavity, got {} subsystems",
            v.n_subsystems()
        )));
    }
    let mut min_eigs = [0.0; 3];
    let mut negative = [false; 3];
    let mut ambiguous = false;
    for (k, &s) in TRIPARTITE_ORDER.iter().enumerate() {
        min_eigs[k] = npt_test(v, s)?;
        match classify_eigenvalue(min_eigs[k], v) {
            TestSign::Negative => negative[k] = true,
            TestSign::Ambiguous => ambiguous = true,
            TestSign::NonNegative => {}
        }
    }
    let class_label = match negative.iter().filter(|&&x| x).count() {
        3 => TripartiteClass::FullyInseparable,
        2 => {
            let k = negative.iter().position(|&x| !x).expect("one cut is PPT");
            TripartiteClass::OneModeBiseparable(TRIPARTITE_ORDER[k])
        }
        1 => TripartiteClass::TwoModeBiseparable,
        _ => TripartiteClass::NptUndetected,
    };
    let pair =
        |x, y| -> Result<f64, EntanglementError> { log_negativity(&reduce_bipartite(v, x, y)?) };
    let negativities = [
        pair(Subsystem::Mechanical(0), Subsystem::Cavity)?,
        pair(Subsystem::Mechanical(1), Subsystem::Cavity)?,
        pair(Subsystem::Mechanical(0), Subsystem::Mechanical(1))?,
    ];
    Ok(TripartiteClassReport {
        min_eigs,
        class_label,
        ambiguous,
        negativities,
    })
}
