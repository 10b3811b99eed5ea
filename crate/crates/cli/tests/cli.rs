use optomech::model::{CouplingMode, DetuningSpec};
use optomech_cli::config::{parse_config, ConfigError, Output, SweepSpec, SweepVariable};
use optomech_cli::output::{format_number, header, write_csv_to};
use optomech_cli::presets::{find_preset, PRESETS};
use optomech_cli::sweep::{evaluate, model_at, resolve_workers, run_sweep, WORKERS_ENV};
use std::f64::consts::PI;
use std::process::Command;

const W1: f64 = 2.0 * PI * 10e6;

const BASE: &str = r#"
temperature_k = 0.6

[cavity]
length_mm = 1.0
kappa_hz = 2.0e6
wavelength_nm = 1064.0

[drive]
power_mw = 30.0
effective_detuning_hz = 10.0e6

[[modes]]
frequency_hz = 10.0e6
damping_hz = 100.0
mass_ng = 250.0

[[modes]]
frequency_hz = 17.0e6
quality_factor = 1.7e5
mass_ng = 250.0

[sweep]
variable = "detuning"
start = 0.5
stop = 2.5
points = 11
outputs = ["occupancy"]
"#;

fn csv_text(cfg: &optomech_cli::config::RunConfig, preset: Option<&str>, workers: usize) -> String {
    let rows = run_sweep(cfg, workers);
    let mut buf = Vec::new();
    write_csv_to(cfg, preset, &rows, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

fn issues(err: ConfigError) -> Vec<String> {
    match err {
        ConfigError::Validation(v) => v.into_iter().map(|i| i.field).collect(),
        other => panic!("expected a validation error, got {other}"),
    }
}

#[test]
fn fig1a_preset_loads_expected_parameters() {
    let cfg = find_preset("fig1a").unwrap().load().unwrap();
    let p = &cfg.params;
    assert_eq!(p.modes.len(), 2);
    assert!((p.modes[0].omega - W1).abs() < 1e-6);
    assert!((p.modes[1].omega / p.modes[0].omega - 1.7).abs() < 1e-12);
    assert!((p.modes[0].gamma() - 2.0 * PI * 100.0).abs() < 1e-9);
    assert!((p.modes[1].mass - 250e-12).abs() < 1e-24);
    assert_eq!(p.bath_temperature, 0.6);
    assert!((p.kappa() / W1 - 0.2).abs() < 1e-12);
    assert_eq!(
        cfg.sweep.coupling_mode,
        CouplingMode::FixedG {
            reference_detuning: W1
        }
    );
    let m = model_at(&cfg, 1.0).unwrap();
    assert!((m.coupling()[0] / W1 - 0.2).abs() < 1e-12);
    assert!((m.n_thermal()[0] / 1250.0 - 1.0).abs() < 0.01);
    assert!((m.n_thermal()[1] / 735.0 - 1.0).abs() < 0.01);
}

#[test]
fn every_preset_validates() {
    assert_eq!(PRESETS.len(), 11);
    for p in &PRESETS {
        let cfg = p.load().unwrap_or_else(|e| panic!("{}: {e}", p.name));
        assert_eq!(cfg.name, p.name);
        assert!(!p.description().is_empty());
    }
}

#[test]
fn base_config_defaults_to_fixed_power() {
    let cfg = parse_config(BASE, "base").unwrap();
    assert_eq!(cfg.sweep.coupling_mode, CouplingMode::FixedPower);
    assert!((cfg.params.input_power - 0.03).abs() < 1e-15);
    assert_eq!(cfg.params.detuning, DetuningSpec::Effective(W1));
    assert!((cfg.params.modes[1].gamma() - 2.0 * PI * 100.0).abs() < 1e-9);
    let text = csv_text(&cfg, None, 1);
    assert!(text.contains("# coupling_mode=fixed-power\n"));
    assert!(text.contains("# preset=none\n"));
}

#[test]
fn missing_mass_is_named() {
    let text = BASE.replacen("mass_ng = 250.0\n", "", 1);
    let fields = issues(parse_config(&text, "x").unwrap_err());
    assert_eq!(fields, vec!["modes[0].mass"]);
}

#[test]
fn kappa_and_finesse_are_exclusive() {
    let text = BASE.replace("kappa_hz = 2.0e6", "kappa_hz = 2.0e6\nfinesse = 1.5e5");
    let fields = issues(parse_config(&text, "x").unwrap_err());
    assert_eq!(fields, vec!["cavity.kappa_hz"]);
}

#[test]
fn every_problem_is_reported() {
    let text = BASE
        .replacen("mass_ng = 250.0\n", "", 1)
        .replace("points = 11", "points = 1")
        .replace("length_mm = 1.0", "length_mm = -1.0")
        .replace("\"occupancy\"", "\"occupancy\", \"colour\"");
    let fields = issues(parse_config(&text, "x").unwrap_err());
    for f in [
        "modes[0].mass",
        "sweep.points",
        "cavity.length_mm",
        "sweep.outputs",
    ] {
        assert!(fields.iter().any(|x| x == f), "{f} missing from {fields:?}");
    }
}

#[test]
fn parse_errors_carry_position() {
    let text = BASE.replace("points = 11", "points = = 11");
    match parse_config(&text, "x").unwrap_err() {
        ConfigError::Parse { line, column, .. } => {
            let expected = BASE.lines().position(|l| l.starts_with("points")).unwrap() + 1;
            assert_eq!(line, expected);
            assert!(column > 1);
        }
        other => panic!("expected parse error, got {other}"),
    }
    let unknown = BASE.replace("temperature_k", "temperature");
    assert!(matches!(
        parse_config(&unknown, "x"),
        Err(ConfigError::Parse { .. })
    ));
}

#[test]
fn outputs_must_fit_the_model() {
    let single = BASE.split("[[modes]]").collect::<Vec<_>>();
    let one_mode = format!("{}[[modes]]{}{}", single[0], single[1], "[sweep]")
        + BASE.split("[sweep]").nth(1).unwrap();
    assert!(parse_config(&one_mode, "x").is_ok());
    let trip = one_mode.replace("[\"occupancy\"]", "[\"tripartite\"]");
    assert_eq!(
        issues(parse_config(&trip, "x").unwrap_err()),
        vec!["sweep.outputs"]
    );
    let sus = BASE.replace("[\"occupancy\"]", "[\"susceptibility\"]");
    assert_eq!(
        issues(parse_config(&sus, "x").unwrap_err()),
        vec!["sweep.outputs"]
    );
    let freq = BASE.replace("variable = \"detuning\"", "variable = \"frequency\"");
    assert_eq!(
        issues(parse_config(&freq, "x").unwrap_err()),
        vec!["sweep.outputs"]
    );
}

#[test]
fn occupancy_header_schema() {
    let cfg = parse_config(BASE, "base").unwrap();
    assert_eq!(
        header(&cfg).join(","),
        "sweep_value,n_eff_1,n_eff_2,T_eff_1_K,T_eff_2_K,eta,stable"
    );
}

#[test]
fn csv_round_trips_to_twelve_digits() {
    let cfg = parse_config(BASE, "base").unwrap();
    let rows = run_sweep(&cfg, 2);
    let text = csv_text(&cfg, None, 2);
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let parsed: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(parsed.len(), rows.len());
    for (rec, row) in parsed.iter().zip(&rows) {
        let rep = row.report.as_ref().unwrap();
        let back: f64 = rec[1].parse().unwrap();
        assert!((back - rep.occupancy[0]).abs() <= 1e-11 * rep.occupancy[0].abs());
        let t2: f64 = rec[4].parse().unwrap();
        assert!((t2 - rep.effective_temperature[1]).abs() <= 1e-11 * t2.abs());
        assert_eq!(format_number(back), rec[1].to_string());
    }
}

#[test]
fn parallel_and_serial_sweeps_are_byte_identical() {
    for name in ["fig1a", "fig4b"] {
        let cfg = find_preset(name).unwrap().load().unwrap();
        let serial = csv_text(&cfg, Some(name), 1);
        assert_eq!(serial, csv_text(&cfg, Some(name), 4));
        assert_eq!(serial, csv_text(&cfg, Some(name), 3));
    }
}

#[test]
fn single_point_matches_direct_evaluation() {
    let cfg = parse_config(BASE, "base").unwrap();
    let mut one = cfg.clone();
    one.sweep = SweepSpec::single(
        SweepVariable::Detuning,
        1.3,
        cfg.sweep.coupling_mode,
        vec![Output::Occupancy],
    );
    let rows = run_sweep(&one, 4);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0], evaluate(&cfg, 1.3));
    assert!(SweepSpec::new(
        SweepVariable::Detuning,
        1.0,
        1.0,
        1,
        CouplingMode::FixedPower,
        vec![]
    )
    .is_err());
}

#[test]
fn unstable_points_keep_their_row() {
    // Strong fixed coupling: unstable near Δ ≈ κ-scale detunings.
    let text = BASE
        .replace(
            "power_mw = 30.0",
            "coupling_g1_hz = 12.0e6\nreference_detuning_hz = 10.0e6",
        )
        .replace("points = 11", "points = 21\ncoupling = \"fixed-G\"")
        .replace("kappa_hz = 2.0e6", "kappa_hz = 3.0e6")
        .replace(
            "[\"occupancy\"]",
            "[\"occupancy\", \"negativity\", \"stability\"]",
        );
    let cfg = parse_config(&text, "x").unwrap();
    let rows = run_sweep(&cfg, 2);
    assert_eq!(rows.len(), 21);
    let unstable: Vec<_> = rows.iter().filter(|r| !r.stable).collect();
    assert!(!unstable.is_empty());
    assert!(rows.iter().any(|r| r.stable));
    let text = csv_text(&cfg, None, 2);
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let head = reader.headers().unwrap().clone();
    let idx = |name: &str| head.iter().position(|h| h == name).unwrap();
    for rec in reader.records() {
        let rec = rec.unwrap();
        if &rec[idx("stable")] == "false" {
            assert_eq!(&rec[idx("n_eff_1")], "");
            assert_eq!(&rec[idx("E_N_m1_cav")], "");
            assert!(rec[idx("max_re_lambda")].parse::<f64>().unwrap() > 0.0);
            assert!(rec[idx("eta")].parse::<f64>().unwrap() < 0.0);
        }
    }
}

#[test]
fn fig1a_sweep_has_minima_at_both_resonances() {
    let cfg = find_preset("fig1a").unwrap().load().unwrap();
    let rows = run_sweep(&cfg, 4);
    let argmin = |j: usize| {
        rows.iter()
            .min_by(|a, b| {
                let (x, y) = (&a.report.as_ref().unwrap(), &b.report.as_ref().unwrap());
                x.occupancy[j].total_cmp(&y.occupancy[j])
            })
            .unwrap()
            .sweep_value
    };
    assert!(
        (argmin(0) - 1.0).abs() < 0.15,
        "mode 1 minimum at {}",
        argmin(0)
    );
    assert!(
        (argmin(1) - 1.7).abs() < 0.25,
        "mode 2 minimum at {}",
        argmin(1)
    );
}

#[test]
fn fig1d_plateau_and_resonant_spike() {
    let cfg = find_preset("fig1d").unwrap().load().unwrap();
    let rows = run_sweep(&cfg, 4);
    let n1 = |r: &optomech_cli::sweep::ResultRow| r.report.as_ref().unwrap().occupancy[0];
    let last = rows.last().unwrap();
    assert_eq!(last.sweep_value, 2.0);
    assert!((n1(last) - 0.22).abs() < 0.3 * 0.22);
    let resonant = rows.iter().find(|r| r.sweep_value == 1.0).unwrap();
    let n_th = model_at(&cfg, 1.0).unwrap().n_thermal()[0];
    assert!(n1(resonant) > 0.3 * n_th);
}

#[test]
fn fig2_two_mode_response_is_passive() {
    let cfg = find_preset("fig2").unwrap().load().unwrap();
    let rows = run_sweep(&cfg, 4);
    assert_eq!(rows.len(), 4001);
    for r in &rows {
        let s = r.susceptibility.as_ref().unwrap();
        assert!(s.chi_two_mode.im > 0.0, "at {}", r.sweep_value);
        assert!(s.chi_single.im > 0.0);
    }
}

#[test]
fn bare_detuning_runs_through_semiclassical_branch() {
    let text = BASE.replace("effective_detuning_hz", "bare_detuning_hz");
    let cfg = parse_config(&text, "bare").unwrap();
    let rows = run_sweep(&cfg, 2);
    assert!(rows.iter().all(|r| r.error.is_none()));
    let m = model_at(&cfg, 1.0).unwrap();
    assert!(m.detuning() < W1);
    let fixed_g = text.replace("points = 11", "points = 11\ncoupling = \"fixed-G\"");
    assert_eq!(
        issues(parse_config(&fixed_g, "x").unwrap_err()),
        vec!["sweep.coupling"]
    );
}

#[test]
fn worker_count_precedence() {
    std::env::set_var(WORKERS_ENV, "3");
    assert_eq!(resolve_workers(Some(5)), 5);
    assert_eq!(resolve_workers(None), 3);
    std::env::set_var(WORKERS_ENV, "zero");
    assert!(resolve_workers(None) >= 1);
    std::env::remove_var(WORKERS_ENV);
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_optomech"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(&good, BASE).unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        BASE.replace("kappa_hz = 2.0e6", "finesse = 1.5e5\nkappa_hz = 2.0e6"),
    )
    .unwrap();

    let st = binary().arg("validate").arg(&good).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let out = binary().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cavity.kappa_hz"));
    let st = binary()
        .arg("validate")
        .arg(dir.path().join("missing.toml"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(1));

    let csv_path = dir.path().join("run.csv");
    let st = binary()
        .args(["simulate"])
        .arg(&good)
        .arg("--out")
        .arg(&csv_path)
        .args(["--workers", "2"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.contains("sweep_value,n_eff_1"));

    let st = binary()
        .args(["preset", "fig1a", "--coupling", "fixed-power", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("fig1a.csv")).unwrap();
    assert!(text.contains("# coupling_mode=fixed-power\n"));
    assert!(text.contains("# preset=fig1a\n"));

    let st = binary().args(["preset", "nope"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let out = binary().arg("list-presets").output().unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 11);
}

#[test]
fn bistable_drive_is_flagged() {
    // Strong drive far red of resonance with a heavy-coupling cavity: several
    // branches, the lowest one is used and flagged.
    let text = BASE
        .replace("effective_detuning_hz", "bare_detuning_hz")
        .replace("power_mw = 30.0", "power_mw = 3000.0")
        .replace("kappa_hz = 2.0e6", "kappa_hz = 0.2e6")
        .replace("[\"occupancy\"]", "[\"occupancy\", \"stability\"]");
    let cfg = parse_config(&text, "x").unwrap();
    let rows = run_sweep(&cfg, 2);
    assert!(rows.iter().any(|r| r
        .warnings
        .iter()
        .any(|w| w.contains("semiclassical branches"))));
}
