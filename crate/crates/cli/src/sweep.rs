//! Evaluates a configuration at every sweep point, in parallel, keeping rows
//! in sweep order.

use crate::config::{Output, RunConfig, SweepVariable};
use num_complex::Complex64;
use optomech::entanglement::{
    classify_tripartite, log_negativity, reduce_bipartite, Subsystem, TripartiteClassReport,
};
use optomech::model::{
    build_linearized_on_branch, build_linearized_with, semiclassical_solve, stability_eta,
    DetuningSpec, LinearizedModel, ModelError, ModelWarning,
};
use optomech::spectral::{
    chi_modified, chi_two_mode, effective_oscillator, gamma_eff_interference,
    gamma_eff_interference_full, ComplexResponse,
};
use optomech::steadystate::{steady_state_report, SteadyStateError, SteadyStateReport};
use rayon::prelude::*;

pub const WORKERS_ENV: &str = "OPTOMECH_WORKERS";

/// Worker count: explicit flag, then `OPTOMECH_WORKERS`, then the machine's
/// available parallelism.
pub fn resolve_workers(flag: Option<usize>) -> usize {
    if let Some(n) = flag.filter(|&n| n > 0) {
        return n;
    }
    if let Some(n) = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        return n;
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Response of mode 1 at one probe frequency. Frequencies and rates in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityPoint {
    pub chi_two_mode: Complex64,
    pub omega_eff_sq_two_mode: f64,
    pub gamma_eff_two_mode: f64,
    pub chi_single: Complex64,
    pub omega_eff_sq_single: f64,
    pub gamma_eff_single: f64,
    pub gamma_eff_interference: f64,
    pub gamma_eff_interference_full: f64,
}

/// Mode 1 coupled to the cavity on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceValues {
    pub occupancy: f64,
    pub temperature: f64,
    pub negativity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub stable: bool,
    pub eta: Option<f64>,
    pub max_real_part: Option<f64>,
    pub report: Option<SteadyStateReport>,
    pub reference: Option<ReferenceValues>,
    /// (mode1|cavity), (mode2|cavity), (mode1|mode2); only the first for N = 1.
    pub negativities: Vec<f64>,
    pub tripartite: Option<TripartiteClassReport>,
    pub susceptibility: Option<SusceptibilityPoint>,
    pub warnings: Vec<String>,
    /// Set when the point could not be evaluated for a reason other than
    /// instability.
    pub error: Option<String>,
}

impl ResultRow {
    fn empty(sweep_value: f64) -> Self {
        Self {
            sweep_value,
            stable: false,
            eta: None,
            max_real_part: None,
            report: None,
            reference: None,
            negativities: Vec::new(),
            tripartite: None,
            susceptibility: None,
            warnings: Vec::new(),
            error: None,
        }
    }

    /// True when physics columns carry values.
    pub fn has_physics(&self) -> bool {
        self.stable && self.error.is_none()
    }
}

/// Linear model at one sweep value.
pub fn model_at(cfg: &RunConfig, value: f64) -> Result<LinearizedModel, ModelError> {
    let w1 = cfg.omega1();
    let mut params = cfg.params.clone();
    match cfg.sweep.variable {
        SweepVariable::Detuning => {
            params.detuning = match params.detuning {
                DetuningSpec::Effective(_) => DetuningSpec::Effective(value * w1),
                DetuningSpec::Bare(_) => DetuningSpec::Bare(value * w1),
            }
        }
        SweepVariable::Omega2Ratio => params.modes[1].omega = value * w1,
        SweepVariable::Temperature => params.bath_temperature = value,
        SweepVariable::Frequency => {}
    }
    match params.detuning {
        DetuningSpec::Effective(_) => build_linearized_with(&params, cfg.sweep.coupling_mode),
        DetuningSpec::Bare(_) => {
            // Lowest-photon branch; flagged when the cavity is bistable.
            let state = semiclassical_solve(&params)?;
            let model = build_linearized_on_branch(&params, &state.branches[0])?;
            if state.branch_count() > 1 {
                let mut w = model.warnings().to_vec();
                w.push(ModelWarning::Bistable {
                    branches: state.branch_count(),
                    chosen: 0,
                });
                Ok(model.with_warnings(w))
            } else {
                Ok(model)
            }
        }
    }
}

/// Evaluates one sweep point.
pub fn evaluate(cfg: &RunConfig, value: f64) -> ResultRow {
    let mut row = ResultRow::empty(value);
    let model = match model_at(cfg, value) {
        Ok(m) => m,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.warnings = model.warnings().iter().map(|w| w.to_string()).collect();
    row.eta = stability_eta(&model).ok();

    if cfg.sweep.variable == SweepVariable::Frequency {
        match optomech::model::stability_spectral(&model) {
            Ok(s) => {
                row.stable = s.stable;
                row.max_real_part = Some(s.max_real_part);
            }
            Err(e) => {
                row.error = Some(e.to_string());
                return row;
            }
        }
        if row.stable {
            match susceptibility(&model, value * cfg.omega1()) {
                Ok(p) => row.susceptibility = Some(p),
                Err(e) => row.error = Some(e),
            }
        }
        return row;
    }

    let report = match steady_state_report(&model) {
        Ok(r) => r,
        Err(SteadyStateError::Unstable { max_real_part }) => {
            row.max_real_part = Some(max_real_part);
            return row;
        }
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.stable = true;
    row.max_real_part = Some(report.max_real_part);
    if let Err(e) = fill_entanglement(cfg, &model, &report, &mut row) {
        row.error = Some(e);
    }
    row.report = Some(report);
    row
}

fn fill_entanglement(
    cfg: &RunConfig,
    model: &LinearizedModel,
    report: &SteadyStateReport,
    row: &mut ResultRow,
) -> Result<(), String> {
    let v = &report.covariance;
    let pair = |a, b| -> Result<f64, String> {
        log_negativity(&reduce_bipartite(v, a, b).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())
    };
    if cfg.sweep.wants(Output::Negativity) {
        row.negativities
            .push(pair(Subsystem::Mechanical(0), Subsystem::Cavity)?);
        if model.n_modes() >= 2 {
            row.negativities
                .push(pair(Subsystem::Mechanical(1), Subsystem::Cavity)?);
            row.negativities
                .push(pair(Subsystem::Mechanical(0), Subsystem::Mechanical(1))?);
        }
    }
    if cfg.sweep.wants(Output::Tripartite) {
        row.tripartite = Some(classify_tripartite(v).map_err(|e| e.to_string())?);
    }
    if cfg.sweep.wants(Output::Reference) {
        let single = model.restrict_to_mode(0);
        match steady_state_report(&single) {
            Ok(r) => {
                let e = log_negativity(
                    &reduce_bipartite(&r.covariance, Subsystem::Mechanical(0), Subsystem::Cavity)
                        .map_err(|e| e.to_string())?,
                )
                .map_err(|e| e.to_string())?;
                row.reference = Some(ReferenceValues {
                    occupancy: r.occupancy[0],
                    temperature: r.effective_temperature[0],
                    negativity: e,
                });
            }
            Err(SteadyStateError::Unstable { .. }) => {
                row.warnings
                    .push("single-mode reference is unstable".into());
            }
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(())
}

fn susceptibility(model: &LinearizedModel, omega: f64) -> Result<SusceptibilityPoint, String> {
    let err = |e: optomech::spectral::SpectralError| e.to_string();
    let single = model.restrict_to_mode(0);
    let chi_tm = chi_two_mode(model, omega).map_err(err)?;
    let chi_1 = chi_modified(&single, 0, omega).map_err(err)?;
    let tm = effective_oscillator(
        &ComplexResponse::new(vec![omega], vec![chi_tm]).map_err(err)?,
        model,
        0,
    )
    .map_err(err)?;
    let one = effective_oscillator(
        &ComplexResponse::new(vec![omega], vec![chi_1]).map_err(err)?,
        &single,
        0,
    )
    .map_err(err)?;
    Ok(SusceptibilityPoint {
        chi_two_mode: chi_tm,
        omega_eff_sq_two_mode: tm.omega_eff_sq[0],
        gamma_eff_two_mode: tm.gamma_eff[0],
        chi_single: chi_1,
        omega_eff_sq_single: one.omega_eff_sq[0],
        gamma_eff_single: one.gamma_eff[0],
        gamma_eff_interference: gamma_eff_interference(model, omega).map_err(err)?,
        gamma_eff_interference_full: gamma_eff_interference_full(model, omega).map_err(err)?,
    })
}

/// All rows in ascending sweep order. `workers = 1` runs on the calling thread.
pub fn run_sweep(cfg: &RunConfig, workers: usize) -> Vec<ResultRow> {
    let values = cfg.sweep.values();
    if workers <= 1 {
        return values.iter().map(|&v| evaluate(cfg, v)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(|| values.par_iter().map(|&v| evaluate(cfg, v)).collect())
}
