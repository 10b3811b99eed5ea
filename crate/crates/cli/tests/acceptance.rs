//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use optomech::entanglement::{log_negativity, reduce_bipartite, Subsystem, TripartiteClass};
use optomech::model::{stability_eta, stability_spectral, thermal_occupancy, LinearizedModel};
use optomech::spectral::net_cooling_rate;
use optomech::steadystate::{oracle_covariance_with, steady_state_report, OracleOptions};
use optomech_cli::config::RunConfig;
use optomech_cli::output::write_csv_to;
use optomech_cli::presets::{find_preset, PRESETS};
use optomech_cli::sweep::{evaluate, model_at, resolve_workers, run_sweep, ResultRow};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

struct Run {
    cfg: RunConfig,
    rows: Vec<ResultRow>,
    seconds: f64,
}

struct Suite {
    runs: HashMap<&'static str, Run>,
    failures: usize,
}

impl Suite {
    fn run(&self, name: &str) -> &Run {
        &self.runs[name]
    }

    fn check(&mut self, id: usize, title: &str, ok: bool, detail: String) {
        println!(
            "{} [{id:>2}] {title}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            self.failures += 1;
        }
    }
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target.abs()
}

fn n_eff(r: &ResultRow, j: usize) -> f64 {
    r.report.as_ref().expect("stable row").occupancy[j]
}

fn t_eff(r: &ResultRow, j: usize) -> f64 {
    r.report.as_ref().expect("stable row").effective_temperature[j]
}

fn stable_rows(run: &Run) -> impl Iterator<Item = &ResultRow> {
    run.rows.iter().filter(|r| r.has_physics())
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

fn thermal_occupancies(s: &mut Suite) {
    let cfg = &s.run("fig1a").cfg;
    let (w1, w2) = (cfg.params.modes[0].omega, cfg.params.modes[1].omega);
    let t = cfg.params.bath_temperature;
    let (n1, n2) = (thermal_occupancy(w1, t), thermal_occupancy(w2, t));
    let ok = (w1 / (2.0 * PI * 10e6) - 1.0).abs() < 1e-12
        && t == 0.6
        && within(n1, 1250.0, 0.01)
        && within(n2, 735.0, 0.01);
    s.check(
        1,
        "thermal occupancies",
        ok,
        format!("n1 = {n1:.2}, n2 = {n2:.2}"),
    );
}

fn single_mode_cooling(s: &mut Suite) {
    let run = s.run("fig1a");
    let best = stable_rows(run)
        .filter_map(|r| r.reference.as_ref())
        .min_by(|a, b| a.occupancy.total_cmp(&b.occupancy))
        .expect("reference values");
    let (n, t_mk) = (best.occupancy, best.temperature * 1e3);
    let secs = run.seconds;
    let ok = (0.10..=0.22).contains(&n) && within(t_mk, 0.24, 0.25) && secs < 5.0;
    s.check(
        2,
        "single-mode optimal cooling",
        ok,
        format!(
            "min n_eff = {n:.4}, T = {t_mk:.3} mK, {} points in {secs:.2} s",
            run.rows.len()
        ),
    );
}

fn halfway_crossing(s: &mut Suite) {
    let cfg = &s.run("fig1a").cfg;
    let half = (1.0 + cfg.params.modes[1].omega / cfg.omega1()) / 2.0;
    let r = evaluate(cfg, half);
    let ok = r.has_physics()
        && within(n_eff(&r, 0), 0.5, 0.4)
        && within(n_eff(&r, 1), 0.5, 0.4)
        && within(t_eff(&r, 0) * 1e3, 0.46, 0.4)
        && within(t_eff(&r, 1) * 1e3, 0.79, 0.4);
    let detail = if r.has_physics() {
        format!(
            "Δ = {half:.3}ω1: n = {:.3}/{:.3}, T = {:.3}/{:.3} mK",
            n_eff(&r, 0),
            n_eff(&r, 1),
            t_eff(&r, 0) * 1e3,
            t_eff(&r, 1) * 1e3
        )
    } else {
        "unstable at the halfway detuning".into()
    };
    s.check(3, "halfway-detuning crossing", ok, detail);
}

fn plateau_and_suppression(s: &mut Suite) {
    let run = s.run("fig1d");
    let rows: Vec<&ResultRow> = stable_rows(run).collect();
    let single = rows[0].reference.as_ref().expect("reference").occupancy;
    let plateau = n_eff(rows.last().unwrap(), 0);
    let resonant = rows
        .iter()
        .find(|r| r.sweep_value == 1.0)
        .expect("ratio 1 on grid");
    let n1 = model_at(&run.cfg, 1.0).unwrap().n_thermal()[0];
    // Contiguous window around ω₂ = ω₁ where cooling is at least halved.
    let centre = rows.iter().position(|r| r.sweep_value == 1.0).unwrap();
    let suppressed = |r: &&ResultRow| n_eff(r, 0) > 2.0 * single;
    let mut lo = centre;
    while lo > 0 && suppressed(&rows[lo - 1]) {
        lo -= 1;
    }
    let mut hi = centre;
    while hi + 1 < rows.len() && suppressed(&rows[hi + 1]) {
        hi += 1;
    }
    let width = rows[hi].sweep_value - rows[lo].sweep_value;
    let big2 = net_cooling_rate(&model_at(&run.cfg, 1.0).unwrap(), 1) / run.cfg.omega1();
    let ratio = width / big2;
    let ok = within(plateau, 0.22, 0.3)
        && n_eff(resonant, 0) >= 0.3 * n1
        && (0.5..=2.0).contains(&ratio);
    s.check(
        4,
        "plateau and resonant suppression",
        ok,
        format!(
            "plateau = {plateau:.3}, n(ω2 = ω1) = {:.1} vs 0.3·n1 = {:.1}, window {width:.4}ω1 = {ratio:.2}·Γ2",
            n_eff(resonant, 0),
            0.3 * n1
        ),
    );
}

fn interference(s: &mut Suite) {
    let cfg = &s.run("fig2").cfg;
    let r = evaluate(cfg, 1.0);
    let sus = r.susceptibility.as_ref().expect("susceptibility at ω1");
    let m = model_at(cfg, 1.0).unwrap();
    let (big1, big2) = (net_cooling_rate(&m, 0), net_cooling_rate(&m, 1));
    let (g1, g2) = (m.gamma()[0], m.gamma()[1]);
    let target_tm = g1 + big1 * g2 / big2;
    let target_single = g1 + big1;
    let ratio_tm = sus.gamma_eff_two_mode / target_tm;
    let ok = (0.5..=2.0).contains(&ratio_tm) && within(sus.gamma_eff_single, target_single, 0.1);
    let w1 = cfg.omega1();
    s.check(
        5,
        "interference formula",
        ok,
        format!(
            "γ_eff = {:.4e}ω1 vs {:.4e}ω1 (ratio {ratio_tm:.3}); single {:.4e}ω1 vs {:.4e}ω1",
            sus.gamma_eff_two_mode / w1,
            target_tm / w1,
            sus.gamma_eff_single / w1,
            target_single / w1
        ),
    );
}

fn lyapunov_correctness(s: &mut Suite) {
    let mut worst = 0.0f64;
    let mut points = 0usize;
    for run in s.runs.values() {
        for r in stable_rows(run).filter(|r| r.report.is_some()) {
            worst = worst.max(r.report.as_ref().unwrap().relative_residual);
            points += 1;
        }
    }
    let cfg = &s.run("fig1a").cfg;
    let model = model_at(cfg, 1.0).unwrap();
    let lyap = steady_state_report(&model).unwrap().covariance;
    let oracle = oracle_covariance_with(&model, OracleOptions::default()).unwrap();
    let diff = rel_diff(
        oracle.covariance.matrix().as_slice(),
        lyap.matrix().as_slice(),
    );
    let ok = points > 0 && worst <= 1e-10 && diff <= 1e-4;
    s.check(
        6,
        "Lyapunov correctness",
        ok,
        format!("max residual {worst:.2e}·‖D‖ over {points} points; oracle difference {diff:.2e}"),
    );
}

fn physicality(s: &mut Suite) {
    let mut worst = f64::INFINITY;
    let mut points = 0usize;
    for run in s.runs.values() {
        for r in stable_rows(run).filter_map(|r| r.report.as_ref()) {
            worst = worst.min(r.min_symplectic_eig);
            points += 1;
        }
    }
    s.check(
        7,
        "physicality",
        points > 0 && worst >= -1e-9,
        format!("min eig(V + iJ/2) = {worst:.3e} over {points} stable points"),
    );
}

fn entanglement_ordering(s: &mut Suite) {
    let run = s.run("fig3a");
    let all_stable = run.rows.iter().all(|r| r.has_physics());
    let mut violations = 0;
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for r in stable_rows(run) {
        let single = r.reference.as_ref().expect("reference").negativity;
        if r.negativities[0] > single + 1e-12 {
            violations += 1;
        }
        e1 = e1.max(r.negativities[0]);
        e2 = e2.max(r.negativities[1]);
    }
    let ok = all_stable && violations == 0 && e1 > 0.0 && e2 > 0.0;
    s.check(
        8,
        "entanglement ordering",
        ok,
        format!(
            "{violations} points above the single-mode value; max E_N = {e1:.4} (mode 1), {e2:.4} (mode 2)"
        ),
    );
}

fn resonance_fragility(s: &mut Suite) {
    let r = evaluate(&s.run("fig3b").cfg, 1.0);
    let (two, single) = if r.has_physics() {
        (r.negativities[0], r.reference.as_ref().unwrap().negativity)
    } else {
        (f64::NAN, f64::NAN)
    };
    let hot = s.run("fig3c");
    let near: Vec<&ResultRow> = hot
        .rows
        .iter()
        .filter(|r| (r.sweep_value - 1.0).abs() <= 0.05)
        .collect();
    let vanishes = !near.is_empty()
        && near
            .iter()
            .all(|r| r.has_physics() && r.negativities[0] == 0.0 && r.negativities[1] == 0.0);
    let revives = stable_rows(hot).any(|r| r.negativities[0] > 0.0);
    let ok = two > single && vanishes && revives;
    s.check(
        9,
        "resonant enhancement and fragility",
        ok,
        format!(
            "T = 0: E_N = {two:.4} vs single {single:.4}; T = 0.4 K: E_N = 0 on |ω2/ω1 − 1| ≤ 0.05 ({} points): {vanishes}",
            near.len()
        ),
    );
}

fn tripartite(s: &mut Suite) {
    let count = |name: &str, want: &dyn Fn(&TripartiteClass, &[f64; 3]) -> bool| {
        let run = s.run(name);
        let hits: Vec<f64> = stable_rows(run)
            .filter(|r| {
                let t = r.tripartite.as_ref().unwrap();
                want(&t.class_label, &t.min_eigs)
            })
            .map(|r| r.sweep_value)
            .collect();
        (hits.len(), run.rows.len(), hits)
    };
    let (full, total_a, _) = count("fig4a", &|c, e| {
        *c == TripartiteClass::FullyInseparable && e.iter().all(|&x| x < 0.0)
    });
    let (bisep, total_b, hits) = count("fig4b", &|c, e| {
        *c == TripartiteClass::TwoModeBiseparable && e[0] >= 0.0 && e[1] >= 0.0 && e[2] < 0.0
    });
    let span = hits.last().copied().unwrap_or(0.0) - hits.first().copied().unwrap_or(0.0);
    let ok = full > 0 && bisep * 2 >= total_b && span >= 1.0;
    s.check(
        10,
        "tripartite classes",
        ok,
        format!(
            "ω2 = 1.5ω1: {full}/{total_a} fully inseparable; ω2 = 1.01ω1: {bisep}/{total_b} two-mode biseparable spanning {span:.2}ω1"
        ),
    );
}

fn mechanical_separability(s: &mut Suite) {
    let mut worst = 0.0f64;
    let mut points = 0;
    for name in [
        "fig1a", "fig1b", "fig1c", "fig1d", "fig3a", "fig3b", "fig3c", "fig3d",
    ] {
        for r in stable_rows(s.run(name)) {
            worst = worst.max(r.negativities[2]);
            points += 1;
        }
    }
    s.check(
        11,
        "mechanical-mechanical separability",
        points > 0 && worst == 0.0,
        format!("max E_N(mode1|mode2) = {worst:.3e} over {points} points"),
    );
}

fn csv_bytes(cfg: &RunConfig, name: &str, workers: usize) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv_to(cfg, Some(name), &run_sweep(cfg, workers), &mut buf).unwrap();
    buf
}

fn random_model(rng: &mut StdRng) -> LinearizedModel {
    let w2 = rng.random_range(0.5..2.0);
    let n = rng.random_range(0.0..500.0);
    LinearizedModel::new(
        vec![1.0, w2],
        vec![1e-3, 2e-3],
        vec![rng.random_range(0.0..1.5), rng.random_range(0.0..1.5)],
        vec![n, n / w2],
        rng.random_range(0.05..1.5),
        rng.random_range(0.05..3.0),
    )
    .unwrap()
}

fn property_suite(s: &mut Suite) {
    let mut notes = Vec::new();

    // G = 0: thermal ⊕ vacuum.
    let base = model_at(&s.run("fig1a").cfg, 1.0).unwrap();
    let free = base.with_couplings(vec![0.0, 0.0]);
    let v = steady_state_report(&free).unwrap().covariance;
    let mut expected = Vec::new();
    for &n in free.n_thermal() {
        expected.extend([n + 0.5, n + 0.5]);
    }
    expected.extend([0.5, 0.5]);
    let m = v.matrix();
    let scale = m.max_abs();
    let mut off = 0.0f64;
    let mut diag = 0.0f64;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i == j {
                diag = diag.max((m.row(i)[j] - expected[i]).abs() / expected[i]);
            } else {
                off = off.max(m.row(i)[j].abs() / scale);
            }
        }
    }
    let diagonal_ok = off <= 1e-12 && diag <= 1e-12;
    notes.push(format!("G = 0 off-diagonal {off:.1e}, diagonal {diag:.1e}"));

    // G₂ = 0 against the one-mode model.
    let mut worst = 0.0f64;
    for name in ["fig1a", "fig3a", "fig4a"] {
        let cfg = &s.run(name).cfg;
        for value in [0.8, 1.0, 1.4] {
            let m2 = model_at(cfg, value).unwrap();
            let m2 = m2.with_couplings(vec![m2.coupling()[0], 0.0]);
            let m1 = m2.restrict_to_mode(0);
            let (r2, r1) = (
                steady_state_report(&m2).unwrap(),
                steady_state_report(&m1).unwrap(),
            );
            let e2 = log_negativity(
                &reduce_bipartite(&r2.covariance, Subsystem::Mechanical(0), Subsystem::Cavity)
                    .unwrap(),
            )
            .unwrap();
            let e1 = log_negativity(
                &reduce_bipartite(&r1.covariance, Subsystem::Mechanical(0), Subsystem::Cavity)
                    .unwrap(),
            )
            .unwrap();
            worst = worst
                .max((r2.occupancy[0] - r1.occupancy[0]).abs() / r1.occupancy[0])
                .max((e2 - e1).abs() / e1.abs().max(1.0));
            let keep = [0, 1, 4, 5];
            let sub = r2.covariance.matrix().submatrix(&keep);
            worst = worst.max(rel_diff(sub.as_slice(), r1.covariance.matrix().as_slice()));
        }
    }
    let reduction_ok = worst <= 1e-8;
    notes.push(format!("G2 = 0 vs N = 1 {worst:.1e}"));

    // Byte-identical CSVs for serial and parallel runs.
    let workers = resolve_workers(None).max(2);
    let mut identical = true;
    for p in &PRESETS {
        let cfg = &s.run(p.name).cfg;
        identical &= csv_bytes(cfg, p.name, 1) == csv_bytes(cfg, p.name, workers);
    }
    notes.push(format!(
        "serial vs {workers} workers identical: {identical}"
    ));

    // η sign against the spectrum.
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let (mut agree, mut tested) = (0, 0);
    while tested < 50 {
        let m = random_model(&mut rng);
        let eta = stability_eta(&m).unwrap();
        if eta.abs() < 1e-6 {
            continue;
        }
        tested += 1;
        if (eta > 0.0) == stability_spectral(&m).unwrap().stable {
            agree += 1;
        }
    }
    notes.push(format!("η sign agreement {agree}/{tested}"));

    let ok = diagonal_ok && reduction_ok && identical && agree == tested;
    s.check(12, "property suite", ok, notes.join("; "));
}

fn main() -> ExitCode {
    let workers = resolve_workers(None);
    let mut runs = HashMap::new();
    for p in &PRESETS {
        let cfg = find_preset(p.name).unwrap().load().expect("preset loads");
        let start = Instant::now();
        let rows = run_sweep(&cfg, workers);
        let seconds = start.elapsed().as_secs_f64();
        println!(
            "info: {:<6} {:>5} points in {seconds:.2} s{}",
            p.name,
            rows.len(),
            if seconds < 60.0 { "" } else { " (over 60 s)" }
        );
        runs.insert(p.name, Run { cfg, rows, seconds });
    }
    let mut suite = Suite { runs, failures: 0 };

    thermal_occupancies(&mut suite);
    single_mode_cooling(&mut suite);
    halfway_crossing(&mut suite);
    plateau_and_suppression(&mut suite);
    interference(&mut suite);
    lyapunov_correctness(&mut suite);
    physicality(&mut suite);
    entanglement_ordering(&mut suite);
    resonance_fragility(&mut suite);
    tripartite(&mut suite);
    mechanical_separability(&mut suite);
    property_suite(&mut suite);

    if suite.failures == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", suite.failures);
        ExitCode::FAILURE
    }
}
