//! CSV emission: a `#` metadata block, a header row and one line per sweep
//! point. Numbers carry 12 significant digits.

use crate::config::{Output, RunConfig, SweepVariable};
use crate::sweep::ResultRow;
use optomech::numerics::TOLERANCES;
use std::io::Write;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Formats like C's `%.12g`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    const DIGITS: i32 = 12;
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    SweepValue,
    NEff(usize),
    TEff(usize),
    NEffSingle,
    TEffSingle,
    Negativity(usize),
    NegativitySingle,
    Npt(usize),
    Class,
    Ambiguous,
    ReChiTm,
    ImChiTm,
    OmegaEffSqTm,
    GammaEffTm,
    ReChiSingle,
    ImChiSingle,
    OmegaEffSqSingle,
    GammaEffSingle,
    GammaInterference,
    GammaInterferenceFull,
    MaxRe,
    MinSymplectic,
    Residual,
    Warnings,
    Eta,
    Stable,
}

const NEGATIVITY_NAMES: [&str; 3] = ["E_N_m1_cav", "E_N_m2_cav", "E_N_m1_m2"];
const NPT_NAMES: [&str; 3] = ["npt_min_m1", "npt_min_m2", "npt_min_cav"];

impl Column {
    fn name(self) -> String {
        match self {
            Column::SweepValue => "sweep_value".into(),
            Column::NEff(j) => format!("n_eff_{}", j + 1),
            Column::TEff(j) => format!("T_eff_{}_K", j + 1),
            Column::NEffSingle => "n_eff_single".into(),
            Column::TEffSingle => "T_eff_single_K".into(),
            Column::Negativity(k) => NEGATIVITY_NAMES[k].into(),
            Column::NegativitySingle => "E_N_single_cav".into(),
            Column::Npt(k) => NPT_NAMES[k].into(),
            Column::Class => "class".into(),
            Column::Ambiguous => "ambiguous".into(),
            Column::ReChiTm => "re_chi_tm".into(),
            Column::ImChiTm => "im_chi_tm".into(),
            Column::OmegaEffSqTm => "omega_eff_sq_tm".into(),
            Column::GammaEffTm => "gamma_eff_tm".into(),
            Column::ReChiSingle => "re_chi_single".into(),
            Column::ImChiSingle => "im_chi_single".into(),
            Column::OmegaEffSqSingle => "omega_eff_sq_single".into(),
            Column::GammaEffSingle => "gamma_eff_single".into(),
            Column::GammaInterference => "gamma_eff_interference".into(),
            Column::GammaInterferenceFull => "gamma_eff_interference_full".into(),
            Column::MaxRe => "max_re_lambda".into(),
            Column::MinSymplectic => "min_eig_uncertainty".into(),
            Column::Residual => "lyapunov_residual".into(),
            Column::Warnings => "warnings".into(),
            Column::Eta => "eta".into(),
            Column::Stable => "stable".into(),
        }
    }

    /// Cell text. `w1` rescales frequency-like quantities to units of ω₁.
    fn cell(self, row: &ResultRow, w1: f64) -> String {
        let num = |x: Option<f64>| x.map(format_number).unwrap_or_default();
        let physics = row.has_physics();
        let report = row.report.as_ref().filter(|_| physics);
        let trip = row.tripartite.as_ref().filter(|_| physics);
        let sus = row.susceptibility.as_ref().filter(|_| physics);
        let refv = row.reference.as_ref().filter(|_| physics);
        match self {
            Column::SweepValue => format_number(row.sweep_value),
            Column::NEff(j) => num(report.map(|r| r.occupancy[j])),
            Column::TEff(j) => num(report.map(|r| r.effective_temperature[j])),
            Column::NEffSingle => num(refv.map(|r| r.occupancy)),
            Column::TEffSingle => num(refv.map(|r| r.temperature)),
            Column::Negativity(k) => {
                num(physics.then(|| row.negativities.get(k).copied()).flatten())
            }
            Column::NegativitySingle => num(refv.map(|r| r.negativity)),
            Column::Npt(k) => num(trip.map(|t| t.min_eigs[k])),
            Column::Class => trip.map(|t| t.class_label.label()).unwrap_or_default(),
            Column::Ambiguous => trip.map(|t| t.ambiguous.to_string()).unwrap_or_default(),
            Column::ReChiTm => num(sus.map(|s| s.chi_two_mode.re * w1)),
            Column::ImChiTm => num(sus.map(|s| s.chi_two_mode.im * w1)),
            Column::OmegaEffSqTm => num(sus.map(|s| s.omega_eff_sq_two_mode / (w1 * w1))),
            Column::GammaEffTm => num(sus.map(|s| s.gamma_eff_two_mode / w1)),
            Column::ReChiSingle => num(sus.map(|s| s.chi_single.re * w1)),
            Column::ImChiSingle => num(sus.map(|s| s.chi_single.im * w1)),
            Column::OmegaEffSqSingle => num(sus.map(|s| s.omega_eff_sq_single / (w1 * w1))),
            Column::GammaEffSingle => num(sus.map(|s| s.gamma_eff_single / w1)),
            Column::GammaInterference => num(sus.map(|s| s.gamma_eff_interference / w1)),
            Column::GammaInterferenceFull => num(sus.map(|s| s.gamma_eff_interference_full / w1)),
            Column::MaxRe => num(row.max_real_part.map(|x| x / w1)),
            Column::MinSymplectic => num(report.map(|r| r.min_symplectic_eig)),
            Column::Residual => num(report.map(|r| r.relative_residual)),
            Column::Warnings => {
                let mut w = row.warnings.clone();
                if let Some(e) = &row.error {
                    w.push(format!("error: {e}"));
                }
                w.join("; ")
            }
            Column::Eta => num(row.eta),
            Column::Stable => row.stable.to_string(),
        }
    }
}

fn columns(cfg: &RunConfig) -> Vec<Column> {
    let n = cfg.params.modes.len();
    let sweep = &cfg.sweep;
    let mut cols = vec![Column::SweepValue];
    if sweep.wants(Output::Occupancy) {
        cols.extend((0..n).map(Column::NEff));
        cols.extend((0..n).map(Column::TEff));
    }
    if sweep.wants(Output::Reference) {
        cols.extend([Column::NEffSingle, Column::TEffSingle]);
    }
    if sweep.wants(Output::Negativity) {
        let k = if n >= 2 { 3 } else { 1 };
        cols.extend((0..k).map(Column::Negativity));
        if sweep.wants(Output::Reference) {
            cols.push(Column::NegativitySingle);
        }
    }
    if sweep.wants(Output::Tripartite) {
        cols.extend((0..3).map(Column::Npt));
        cols.extend([Column::Class, Column::Ambiguous]);
    }
    if sweep.wants(Output::Susceptibility) {
        cols.extend([
            Column::ReChiTm,
            Column::ImChiTm,
            Column::OmegaEffSqTm,
            Column::GammaEffTm,
            Column::ReChiSingle,
            Column::ImChiSingle,
            Column::OmegaEffSqSingle,
            Column::GammaEffSingle,
            Column::GammaInterference,
            Column::GammaInterferenceFull,
        ]);
    }
    if sweep.wants(Output::Stability) {
        cols.push(Column::MaxRe);
        if sweep.variable != SweepVariable::Frequency {
            cols.extend([Column::MinSymplectic, Column::Residual]);
        }
        cols.push(Column::Warnings);
    }
    cols.extend([Column::Eta, Column::Stable]);
    cols
}

/// Column names in output order.
pub fn header(cfg: &RunConfig) -> Vec<String> {
    columns(cfg).into_iter().map(Column::name).collect()
}

/// `key=value` lines of the metadata block, without the leading `#`.
pub fn metadata(cfg: &RunConfig, preset: Option<&str>) -> Vec<String> {
    let s = &cfg.sweep;
    let unit = match s.variable {
        SweepVariable::Temperature => "K",
        _ => "omega1",
    };
    let t = TOLERANCES;
    vec![
        format!("optomech_version={VERSION}"),
        format!("preset={}", preset.unwrap_or("none")),
        format!("config={}", cfg.name),
        format!("coupling_mode={}", s.coupling_mode.label()),
        format!(
            "reference_detuning_over_omega1={}",
            format_number(cfg.reference_detuning / cfg.omega1())
        ),
        format!(
            "sweep={} start={} stop={} points={} unit={unit}",
            s.variable.name(),
            format_number(s.start),
            format_number(s.stop),
            s.points
        ),
        format!(
            "outputs={}",
            s.outputs.iter().map(|o| o.name()).collect::<Vec<_>>().join(",")
        ),
        "units=rates and frequencies in units of omega1; chi scaled by omega1; temperatures in K"
            .into(),
        format!(
            "tolerances=pivot:{} lyapunov_residual:{} eigen_sign_margin:{} physicality:{} hermitian_symmetry:{}",
            format_number(t.pivot),
            format_number(t.lyapunov_residual),
            format_number(t.eigen_sign_margin),
            format_number(t.physicality),
            format_number(t.hermitian_symmetry)
        ),
    ]
}

/// Writes the full CSV document to `out`.
pub fn write_csv_to<W: Write>(
    cfg: &RunConfig,
    preset: Option<&str>,
    rows: &[ResultRow],
    mut out: W,
) -> std::io::Result<()> {
    for line in metadata(cfg, preset) {
        writeln!(out, "# {line}")?;
    }
    let cols = columns(cfg);
    let w1 = cfg.omega1();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(cols.iter().map(|c| c.name()))?;
    for row in rows {
        w.write_record(cols.iter().map(|c| c.cell(row, w1)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(
    cfg: &RunConfig,
    preset: Option<&str>,
    rows: &[ResultRow],
    path: &Path,
) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    write_csv_to(cfg, preset, rows, &mut buf)?;
    buf.flush()
}
