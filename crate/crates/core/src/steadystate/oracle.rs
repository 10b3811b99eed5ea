//! Covariance matrix from the noise spectrum,
//! V = (1/2π) ∫ (A − iωI)⁻¹ D (Aᵀ + iωI)⁻¹ dω,
//! by adaptive Gauss–Kronrod quadrature. Shares nothing with the Lyapunov
//! solver except the drift and diffusion builders.

use super::{CovarianceMatrix, SteadyStateError};
use crate::model::{build_diffusion, build_drift, stability_spectral, LinearizedModel};
use crate::numerics::{eigenvalues_general, RealMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Target absolute error relative to the norm of the uncoupled thermal state.
    pub rel_tol: f64,
    pub max_evaluations: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_evaluations: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub covariance: CovarianceMatrix,
    /// ‖Im V‖_F / ‖Re V‖_F of the raw integral.
    pub imaginary_residue: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Frequency-integral covariance with default options.
pub fn oracle_covariance(model: &LinearizedModel) -> Result<CovarianceMatrix, SteadyStateError> {
    Ok(oracle_covariance_with(model, OracleOptions::default())?.covariance)
}

pub fn oracle_covariance_with(
    model: &LinearizedModel,
    options: OracleOptions,
) -> Result<OracleResult, SteadyStateError> {
    let s = stability_spectral(model)?;
    if !s.stable {
        return Err(SteadyStateError::Unstable {
            max_real_part: s.max_real_part,
        });
    }
    let a = build_drift(model);
    let d = build_diffusion(model).diagonal();
    let n = a.rows();
    let eigs = eigenvalues_general(&a)?;

    let mut scale_max = model.kappa().max(model.detuning().abs());
    for &w in model.omega() {
        scale_max = scale_max.max(w);
    }
    for z in &eigs {
        scale_max = scale_max.max(z.norm());
    }
    let cutoff = 50.0 * scale_max;

    let mut points = vec![0.0, cutoff, -cutoff];
    let mut centres: Vec<f64> = model.omega().to_vec();
    centres.push(model.detuning());
    centres.push(0.0);
    for c in centres {
        for x in [c, c - 5.0 * model.kappa(), c + 5.0 * model.kappa()] {
            points.push(x);
            points.push(-x);
        }
    }
    for z in &eigs {
        let w = z.re.abs();
        points.push(z.im);
        for k in [1.0, 4.0, 16.0, 64.0] {
            points.push(z.im - k * w);
            points.push(z.im + k * w);
            points.push(-z.im - k * w);
            points.push(-z.im + k * w);
        }
    }
    points.retain(|x| x.abs() <= cutoff);
    points.sort_by(f64::total_cmp);
    points.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * cutoff);

    let thermal_norm: f64 = {
        let mut sq = 0.5;
        for &nt in model.n_thermal() {
            sq += 2.0 * (nt + 0.5).powi(2);
        }
        sq.sqrt()
    };
    let tol = options.rel_tol * 2.0 * PI * thermal_norm;

    let integrand = Integrand {
        a: to_complex(&a),
        d,
        n,
        cutoff,
    };
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        heap.push(integrand.segment(Domain::Direct, w[0], w[1]));
        evaluations += 15;
    }
    for side in [Domain::UpperTail, Domain::LowerTail] {
        heap.push(integrand.segment(side, 0.0, 1.0));
        evaluations += 15;
    }

    loop {
        let total_error: f64 = heap.iter().map(|s| s.error).sum();
        if total_error <= tol {
            break;
        }
        if evaluations >= options.max_evaluations {
            return Err(SteadyStateError::QuadratureNotConverged {
                evaluations,
                error_estimate: total_error / (2.0 * PI),
            });
        }
        // Refine the worst few segments per pass to keep the loop cheap.
        for _ in 0..8 {
            let Some(worst) = heap.pop() else { break };
            let mid = 0.5 * (worst.lo + worst.hi);
            heap.push(integrand.segment(worst.domain, worst.lo, mid));
            heap.push(integrand.segment(worst.domain, mid, worst.hi));
            evaluations += 30;
        }
    }

    let mut segments = heap.into_vec();
    // Sum in a fixed order so the result does not depend on heap layout.
    segments.sort_by(|x, y| {
        (x.domain as u8, x.lo)
            .partial_cmp(&(y.domain as u8, y.lo))
            .unwrap_or(Ordering::Equal)
    });
    let mut total = vec![Complex64::new(0.0, 0.0); n * n];
    let mut error_estimate = 0.0;
    for s in &segments {
        for (t, v) in total.iter_mut().zip(&s.value) {
            *t += v;
        }
        error_estimate += s.error;
    }
    let re: Vec<f64> = total.iter().map(|z| z.re / (2.0 * PI)).collect();
    let im_norm = total
        .iter()
        .map(|z| (z.im / (2.0 * PI)).powi(2))
        .sum::<f64>()
        .sqrt();
    let re_norm = re.iter().map(|x| x * x).sum::<f64>().sqrt();
    let covariance = CovarianceMatrix::new(RealMatrix::new(n, n, re)?.symmetrized())?;
    Ok(OracleResult {
        covariance,
        imaginary_residue: im_norm / re_norm,
        error_estimate: error_estimate / (2.0 * PI),
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Domain {
    /// ω itself on a finite interval.
    Direct = 0,
    /// ω = Ω/t, t ∈ (0, 1].
    UpperTail = 1,
    /// ω = −Ω/t, t ∈ (0, 1].
    LowerTail = 2,
}

struct Segment {
    domain: Domain,
    lo: f64,
    hi: f64,
    value: Vec<Complex64>,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

struct Integrand {
    a: DMatrix<Complex64>,
    d: Vec<f64>,
    n: usize,
    cutoff: f64,
}

impl Integrand {
    /// (A − iω)⁻¹ D (A − iω)⁻ᴴ, row-major.
    fn spectrum(&self, omega: f64) -> Vec<Complex64> {
        let n = self.n;
        let mut m = self.a.clone();
        for i in 0..n {
            m[(i, i)] -= Complex64::new(0.0, omega);
        }
        let inv = m
            .lu()
            .try_inverse()
            .expect("stable drift has no real-axis poles");
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in r..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    if self.d[k] != 0.0 {
                        acc += inv[(r, k)] * self.d[k] * inv[(c, k)].conj();
                    }
                }
                out[r * n + c] = acc;
                out[c * n + r] = acc.conj();
            }
        }
        out
    }

    fn eval(&self, domain: Domain, x: f64) -> Vec<Complex64> {
        match domain {
            Domain::Direct => self.spectrum(x),
            Domain::UpperTail | Domain::LowerTail => {
                let sign = if domain == Domain::UpperTail {
                    1.0
                } else {
                    -1.0
                };
                let jac = self.cutoff / (x * x);
                let mut f = self.spectrum(sign * self.cutoff / x);
                for v in &mut f {
                    *v *= jac;
                }
                f
            }
        }
    }

    fn segment(&self, domain: Domain, lo: f64, hi: f64) -> Segment {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let len = self.n * self.n;
        let mut kronrod = vec![Complex64::new(0.0, 0.0); len];
        let mut gauss = vec![Complex64::new(0.0, 0.0); len];

        let centre = self.eval(domain, mid);
        for i in 0..len {
            kronrod[i] += centre[i] * WGK[7];
            gauss[i] += centre[i] * WG[3];
        }
        for (k, &x) in XGK[..7].iter().enumerate() {
            let f1 = self.eval(domain, mid - half * x);
            let f2 = self.eval(domain, mid + half * x);
            for i in 0..len {
                let s = f1[i] + f2[i];
                kronrod[i] += s * WGK[k];
                if k % 2 == 1 {
                    gauss[i] += s * WG[k / 2];
                }
            }
        }
        let mut err2 = 0.0;
        for i in 0..len {
            kronrod[i] *= half;
            gauss[i] *= half;
            err2 += (kronrod[i] - gauss[i]).norm_sqr();
        }
        Segment {
            domain,
            lo,
            hi,
            value: kronrod,
            error: err2.sqrt(),
        }
    }
}

fn to_complex(a: &RealMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(a.rows(), a.cols(), |r, c| Complex64::new(a[(r, c)], 0.0))
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];
