//! TOML run configuration: physical parameters in laboratory units plus the
//! sweep to perform.
//!
//! Frequencies and rates are cyclic (Hz) in the file and become rad/s here.
//! Sweep `start`/`stop` are in units of ω₁ except for temperature sweeps (K).

use optomech::model::{
    CavityLoss, CouplingMode, Damping, DetuningSpec, FieldIssue, MechModeParams, PhysicalParams,
};
use serde::Deserialize;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration:\n{}", format_issues(.0))]
    Validation(Vec<FieldIssue>),
}

fn format_issues(issues: &[FieldIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Δ/ω₁ (effective, or bare if the drive section gives a bare detuning).
    Detuning,
    /// ω₂/ω₁
    Omega2Ratio,
    /// Bath temperature in K.
    Temperature,
    /// Probe frequency ω/ω₁ for susceptibility scans.
    Frequency,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Detuning => "detuning",
            SweepVariable::Omega2Ratio => "omega2_ratio",
            SweepVariable::Temperature => "temperature",
            SweepVariable::Frequency => "frequency",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "detuning" => SweepVariable::Detuning,
            "omega2_ratio" => SweepVariable::Omega2Ratio,
            "temperature" => SweepVariable::Temperature,
            "frequency" => SweepVariable::Frequency,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Output {
    Occupancy,
    /// Mode 1 alone with the cavity, for comparison.
    Reference,
    Negativity,
    Tripartite,
    Susceptibility,
    Stability,
}

impl Output {
    pub const ALL: [Output; 6] = [
        Output::Occupancy,
        Output::Reference,
        Output::Negativity,
        Output::Tripartite,
        Output::Susceptibility,
        Output::Stability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Output::Occupancy => "occupancy",
            Output::Reference => "reference",
            Output::Negativity => "negativity",
            Output::Tripartite => "tripartite",
            Output::Susceptibility => "susceptibility",
            Output::Stability => "stability",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Output::ALL.into_iter().find(|o| o.name() == s)
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What to sweep, over which range, and which columns to emit.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub coupling_mode: CouplingMode,
    /// Sorted, without duplicates.
    pub outputs: Vec<Output>,
}

impl SweepSpec {
    /// Checked constructor: at least two points and `start < stop`.
    pub fn new(
        variable: SweepVariable,
        start: f64,
        stop: f64,
        points: usize,
        coupling_mode: CouplingMode,
        outputs: Vec<Output>,
    ) -> Result<Self, Vec<FieldIssue>> {
        let mut issues = Vec::new();
        if points < 2 {
            issues.push(FieldIssue::new("sweep.points", "must be at least 2"));
        }
        if !(start.is_finite() && stop.is_finite() && start < stop) {
            issues.push(FieldIssue::new(
                "sweep.start",
                "must be finite and below sweep.stop",
            ));
        }
        if !issues.is_empty() {
            return Err(issues);
        }
        Ok(Self::unchecked(
            variable,
            start,
            stop,
            points,
            coupling_mode,
            outputs,
        ))
    }

    /// A single evaluation at `value`.
    pub fn single(
        variable: SweepVariable,
        value: f64,
        coupling_mode: CouplingMode,
        outputs: Vec<Output>,
    ) -> Self {
        Self::unchecked(variable, value, value, 1, coupling_mode, outputs)
    }

    fn unchecked(
        variable: SweepVariable,
        start: f64,
        stop: f64,
        points: usize,
        coupling_mode: CouplingMode,
        mut outputs: Vec<Output>,
    ) -> Self {
        outputs.sort();
        outputs.dedup();
        Self {
            variable,
            start,
            stop,
            points,
            coupling_mode,
            outputs,
        }
    }

    /// Sweep values, evenly spaced with both end points included.
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                if k + 1 == self.points {
                    self.stop
                } else {
                    self.start + span * k as f64 / last
                }
            })
            .collect()
    }

    pub fn wants(&self, output: Output) -> bool {
        self.outputs.contains(&output)
    }
}

/// A fully validated run: parameters plus sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub params: PhysicalParams,
    pub sweep: SweepSpec,
    /// Detuning (rad/s) at which fixed-G couplings are evaluated.
    pub reference_detuning: f64,
}

impl RunConfig {
    pub fn omega1(&self) -> f64 {
        self.params.modes[0].omega
    }

    /// The same run with another coupling mode.
    pub fn with_coupling(&self, kind: CouplingKind) -> Result<Self, ConfigError> {
        let mut out = self.clone();
        out.sweep.coupling_mode = kind.mode(self.reference_detuning);
        let issues = cross_checks(&out.params, &out.sweep);
        if !issues.is_empty() {
            return Err(ConfigError::Validation(issues));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    FixedPower,
    FixedG,
}

impl CouplingKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fixed-power" => Some(CouplingKind::FixedPower),
            "fixed-G" => Some(CouplingKind::FixedG),
            _ => None,
        }
    }

    pub fn mode(self, reference_detuning: f64) -> CouplingMode {
        match self {
            CouplingKind::FixedPower => CouplingMode::FixedPower,
            CouplingKind::FixedG => CouplingMode::FixedG { reference_detuning },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    temperature_k: Option<f64>,
    cavity: Option<RawCavity>,
    drive: Option<RawDrive>,
    modes: Option<Vec<RawMode>>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCavity {
    length_mm: Option<f64>,
    kappa_hz: Option<f64>,
    finesse: Option<f64>,
    wavelength_nm: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    power_mw: Option<f64>,
    coupling_g1_hz: Option<f64>,
    reference_detuning_hz: Option<f64>,
    effective_detuning_hz: Option<f64>,
    bare_detuning_hz: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    frequency_hz: Option<f64>,
    damping_hz: Option<f64>,
    quality_factor: Option<f64>,
    mass_ng: Option<f64>,
    overlap: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    variable: Option<String>,
    start: Option<f64>,
    stop: Option<f64>,
    points: Option<i64>,
    coupling: Option<String>,
    outputs: Option<Vec<String>>,
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let default_name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "config".into());
    parse_config(&text, &default_name)
}

/// Parses and validates a configuration held in memory.
pub fn parse_config(text: &str, default_name: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| line_column(text, s.start))
            .unwrap_or((0, 0));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    convert(raw, default_name)
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

struct Issues(Vec<FieldIssue>);

impl Issues {
    fn push(&mut self, field: impl Into<String>, reason: impl Into<String>) {
        self.0.push(FieldIssue::new(field, reason));
    }

    fn required(&mut self, field: &str, value: Option<f64>) -> f64 {
        match value {
            Some(v) if v.is_finite() => v,
            Some(_) => {
                self.push(field, "must be finite");
                f64::NAN
            }
            None => {
                self.push(field, "is required");
                f64::NAN
            }
        }
    }

    fn positive(&mut self, field: &str, value: Option<f64>) -> f64 {
        let v = self.required(field, value);
        if v.is_finite() && v <= 0.0 {
            self.push(field, format!("must be positive, got {v}"));
        }
        v
    }

    fn exactly_one(&mut self, a: (&str, Option<f64>), b: (&str, Option<f64>)) {
        match (a.1, b.1) {
            (Some(_), Some(_)) => self.push(
                a.0,
                format!("give exactly one of {} and {}, not both", a.0, b.0),
            ),
            (None, None) => self.push(a.0, format!("one of {} or {} is required", a.0, b.0)),
            _ => {}
        }
    }
}

const TWO_PI: f64 = 2.0 * PI;

fn convert(raw: RawConfig, default_name: &str) -> Result<RunConfig, ConfigError> {
    let mut is = Issues(Vec::new());

    let temperature = is.required("temperature_k", raw.temperature_k);
    if temperature < 0.0 {
        is.push("temperature_k", "must be non-negative");
    }

    let cavity = raw.cavity.unwrap_or(RawCavity {
        length_mm: None,
        kappa_hz: None,
        finesse: None,
        wavelength_nm: None,
    });
    let length = is.positive("cavity.length_mm", cavity.length_mm) * 1e-3;
    let wavelength = is.positive("cavity.wavelength_nm", cavity.wavelength_nm) * 1e-9;
    is.exactly_one(
        ("cavity.kappa_hz", cavity.kappa_hz),
        ("cavity.finesse", cavity.finesse),
    );
    let cavity_loss = match (cavity.kappa_hz, cavity.finesse) {
        (Some(k), None) => {
            let k = is.positive("cavity.kappa_hz", Some(k));
            CavityLoss::Kappa(TWO_PI * k)
        }
        (None, Some(f)) => {
            if !(f.is_finite() && f > 1.0) {
                is.push("cavity.finesse", "must exceed 1");
            }
            CavityLoss::Finesse(f)
        }
        _ => CavityLoss::Kappa(f64::NAN),
    };

    let mut modes = Vec::new();
    match raw.modes {
        None => is.push("modes", "at least one [[modes]] entry is required"),
        Some(list) if list.is_empty() => {
            is.push("modes", "at least one [[modes]] entry is required")
        }
        Some(list) => {
            for (j, m) in list.into_iter().enumerate() {
                let f = |name: &str| format!("modes[{j}].{name}");
                let omega = TWO_PI * is.positive(&f("frequency_hz"), m.frequency_hz);
                let mass = is.positive(&f("mass"), m.mass_ng) * 1e-12;
                is.exactly_one(
                    (&f("damping_hz"), m.damping_hz),
                    (&f("quality_factor"), m.quality_factor),
                );
                let damping = match (m.damping_hz, m.quality_factor) {
                    (Some(g), None) => {
                        if !(g.is_finite() && g >= 0.0) {
                            is.push(f("damping_hz"), "must be non-negative");
                        }
                        Damping::Rate(TWO_PI * g)
                    }
                    (None, Some(q)) => {
                        is.positive(&f("quality_factor"), Some(q));
                        Damping::QualityFactor(q)
                    }
                    _ => Damping::Rate(f64::NAN),
                };
                let overlap = m.overlap.unwrap_or(1.0);
                if !(0.0..=1.0).contains(&overlap) {
                    is.push(f("overlap"), "must lie in [0, 1]");
                }
                modes.push(MechModeParams {
                    omega,
                    damping,
                    mass,
                    overlap,
                });
            }
        }
    }

    let drive = raw.drive.unwrap_or(RawDrive {
        power_mw: None,
        coupling_g1_hz: None,
        reference_detuning_hz: None,
        effective_detuning_hz: None,
        bare_detuning_hz: None,
    });
    is.exactly_one(
        ("drive.effective_detuning_hz", drive.effective_detuning_hz),
        ("drive.bare_detuning_hz", drive.bare_detuning_hz),
    );
    let detuning = match (drive.effective_detuning_hz, drive.bare_detuning_hz) {
        (Some(d), None) => {
            DetuningSpec::Effective(TWO_PI * is.required("drive.effective_detuning_hz", Some(d)))
        }
        (None, Some(d)) => {
            DetuningSpec::Bare(TWO_PI * is.required("drive.bare_detuning_hz", Some(d)))
        }
        _ => DetuningSpec::Effective(f64::NAN),
    };
    is.exactly_one(
        ("drive.power_mw", drive.power_mw),
        ("drive.coupling_g1_hz", drive.coupling_g1_hz),
    );
    let reference_detuning = match (drive.reference_detuning_hz, detuning) {
        (Some(r), _) => TWO_PI * is.required("drive.reference_detuning_hz", Some(r)),
        (None, DetuningSpec::Effective(d)) => d,
        (None, DetuningSpec::Bare(d)) => d,
    };
    if drive.coupling_g1_hz.is_some() && drive.reference_detuning_hz.is_none() {
        is.push(
            "drive.reference_detuning_hz",
            "is required when the drive is given as coupling_g1_hz",
        );
    }
    if let Some(p) = drive.power_mw {
        if !(p.is_finite() && p >= 0.0) {
            is.push("drive.power_mw", "must be non-negative");
        }
    }

    let sweep = match raw.sweep {
        None => {
            is.push("sweep", "a [sweep] section is required");
            None
        }
        Some(s) => convert_sweep(s, reference_detuning, &mut is),
    };

    let mut params = PhysicalParams {
        modes,
        cavity_length: length,
        cavity_loss,
        laser_wavelength: wavelength,
        input_power: drive.power_mw.unwrap_or(0.0) * 1e-3,
        bath_temperature: temperature,
        detuning,
    };
    if !is.0.is_empty() {
        return Err(ConfigError::Validation(is.0));
    }
    if let Some(g1) = drive.coupling_g1_hz {
        match params.input_power_for_coupling(TWO_PI * g1, reference_detuning) {
            Ok(p) => params.input_power = p,
            Err(optomech::model::ModelError::Invalid(v)) => is.0.extend(v),
            Err(e) => is.push("drive.coupling_g1_hz", e.to_string()),
        }
    }
    is.0.extend(params.validate());
    let sweep = sweep.expect("sweep present when no issues were found");
    is.0.extend(cross_checks(&params, &sweep));
    if !is.0.is_empty() {
        return Err(ConfigError::Validation(is.0));
    }
    Ok(RunConfig {
        name: raw.name.unwrap_or_else(|| default_name.to_string()),
        params,
        sweep,
        reference_detuning,
    })
}

fn convert_sweep(s: RawSweep, reference_detuning: f64, is: &mut Issues) -> Option<SweepSpec> {
    let variable = match s.variable.as_deref() {
        None => {
            is.push("sweep.variable", "is required");
            None
        }
        Some(v) => {
            let parsed = SweepVariable::parse(v);
            if parsed.is_none() {
                is.push(
                    "sweep.variable",
                    format!("unknown variable {v:?}; expected detuning, omega2_ratio, temperature or frequency"),
                );
            }
            parsed
        }
    };
    let start = is.required("sweep.start", s.start);
    let stop = is.required("sweep.stop", s.stop);
    let points = match s.points {
        None => {
            is.push("sweep.points", "is required");
            0
        }
        Some(p) if p < 2 => {
            is.push("sweep.points", "must be at least 2");
            0
        }
        Some(p) => p as usize,
    };
    if start.is_finite() && stop.is_finite() && start >= stop {
        is.push("sweep.start", "must be below sweep.stop");
    }
    let kind = match s.coupling.as_deref() {
        None => Some(CouplingKind::FixedPower),
        Some(c) => {
            let k = CouplingKind::parse(c);
            if k.is_none() {
                is.push(
                    "sweep.coupling",
                    format!("expected fixed-power or fixed-G, got {c:?}"),
                );
            }
            k
        }
    };
    let mut outputs = Vec::new();
    match s.outputs {
        None => is.push("sweep.outputs", "is required"),
        Some(list) if list.is_empty() => is.push("sweep.outputs", "must not be empty"),
        Some(list) => {
            for o in list {
                match Output::parse(&o) {
                    Some(x) => outputs.push(x),
                    None => is.push("sweep.outputs", format!("unknown output {o:?}")),
                }
            }
        }
    }
    let (variable, kind) = (variable?, kind?);
    if points < 2 || !(start < stop) {
        return None;
    }
    SweepSpec::new(
        variable,
        start,
        stop,
        points,
        kind.mode(reference_detuning),
        outputs,
    )
    .ok()
}

/// Consistency between the sweep and the parameter set.
fn cross_checks(params: &PhysicalParams, sweep: &SweepSpec) -> Vec<FieldIssue> {
    let mut issues = Vec::new();
    let n = params.modes.len();
    let two_mode_only = [
        Output::Tripartite,
        Output::Reference,
        Output::Susceptibility,
    ];
    for o in two_mode_only {
        if sweep.wants(o) && n != 2 {
            issues.push(FieldIssue::new(
                "sweep.outputs",
                format!("{o} needs exactly two mechanical modes, got {n}"),
            ));
        }
    }
    if sweep.variable == SweepVariable::Omega2Ratio && n < 2 {
        issues.push(FieldIssue::new(
            "sweep.variable",
            "omega2_ratio needs at least two mechanical modes",
        ));
    }
    let spectral = sweep.variable == SweepVariable::Frequency;
    if spectral {
        if let Some(o) = sweep.outputs.iter().find(|&&o| o != Output::Susceptibility) {
            issues.push(FieldIssue::new(
                "sweep.outputs",
                format!("{o} cannot be computed on a frequency sweep"),
            ));
        }
        if sweep.start <= 0.0 {
            issues.push(FieldIssue::new(
                "sweep.start",
                "frequency sweeps must stay above ω = 0",
            ));
        }
    } else if sweep.wants(Output::Susceptibility) {
        issues.push(FieldIssue::new(
            "sweep.outputs",
            "susceptibility needs variable = \"frequency\"",
        ));
    }
    if sweep.variable == SweepVariable::Temperature && sweep.start < 0.0 {
        issues.push(FieldIssue::new(
            "sweep.start",
            "temperature must be non-negative",
        ));
    }
    if sweep.variable == SweepVariable::Omega2Ratio && sweep.start <= 0.0 {
        issues.push(FieldIssue::new(
            "sweep.start",
            "frequency ratio must be positive",
        ));
    }
    if matches!(sweep.coupling_mode, CouplingMode::FixedG { .. })
        && matches!(params.detuning, DetuningSpec::Bare(_))
    {
        issues.push(FieldIssue::new(
            "sweep.coupling",
            "fixed-G requires an effective detuning",
        ));
    }
    issues
}
