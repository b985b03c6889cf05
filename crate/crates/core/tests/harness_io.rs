use std::fs;

use rps_kinetic::harness::output::{read_profile_csv, read_trajectory_csv};
use rps_kinetic::harness::{
    check_run_dir, epsilon_sweep, run_config, write_sweep, Manifest, ModelKind, RunConfig,
};
use rps_kinetic::{l1_distance, mass, Error};

const CONSTRAINED: &str = "\
# no-debt model started from a block
model = constrained
eta = 3
payoff = 0.25
x_min = 0
x_max = 8
n_cells = 64
t_end = 2
n_outputs = 4
initial = indicator(0.5, 1.5)
";

fn parse(text: &str) -> rps_kinetic::Result<RunConfig> {
    RunConfig::parse(text, std::path::Path::new("."))
}

#[test]
fn config_text_round_trips() {
    let cfg = parse(CONSTRAINED).unwrap();
    assert_eq!(cfg.model, ModelKind::Constrained);
    assert_eq!(parse(&cfg.to_text()).unwrap(), cfg);
}

#[test]
fn config_errors_carry_line_numbers() {
    let err = parse(&CONSTRAINED.replace("eta = 3", "eta = fast")).unwrap_err();
    assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
    assert_eq!(err.exit_code(), 2);

    let err = parse(&format!("{CONSTRAINED}colour = red\n")).unwrap_err();
    assert!(err.to_string().contains("unknown key 'colour'"));

    let err = parse(&CONSTRAINED.replace("payoff = 0.25", "payoff = 0.3")).unwrap_err();
    assert!(err.to_string().contains("alignment rule"), "{err}");

    let err = parse(&CONSTRAINED.replace("x_min = 0\nx_max = 8", "x_min = -1\nx_max = 7")).unwrap_err();
    assert!(err.to_string().contains("x_min = 0"), "{err}");
}

#[test]
fn run_writes_readable_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse(CONSTRAINED).unwrap();
    let outcome = run_config(&cfg, dir.path(), None, true).unwrap();
    for file in ["trajectory.csv", "moments.csv", "manifest.json", "profiles.svg", "moments.svg"] {
        assert!(dir.path().join(file).is_file(), "{file} missing");
    }

    let manifest = Manifest::read(&dir.path().join("manifest.json")).unwrap();
    assert!(manifest.all_passed());
    assert_eq!(manifest.output_times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    assert!(manifest.contraction_horizon.is_some());
    assert_eq!(parse(&manifest.config_text).unwrap(), cfg);

    let traj = read_trajectory_csv(&dir.path().join("trajectory.csv"), cfg.grid().unwrap()).unwrap();
    assert_eq!(traj.len(), outcome.simulation.trajectory.len());
    for (a, b) in traj.iter().zip(outcome.simulation.trajectory.iter()) {
        // 17 significant digits round-trip exactly
        assert_eq!(a.values, b.values);
    }

    let moments = fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    assert!(moments.starts_with("t,mass,first_moment,energy,linf,beta\n"));

    let rechecked = check_run_dir(dir.path()).unwrap();
    assert!(rechecked.iter().all(|r| r.passed));
}

#[test]
fn tampered_trajectory_fails_recheck() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse(CONSTRAINED).unwrap();
    run_config(&cfg, dir.path(), None, false).unwrap();
    let path = dir.path().join("trajectory.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let last = lines.len() - 1;
    let (prefix, _) = lines[last].rsplit_once(',').unwrap();
    lines[last] = format!("{prefix},-1.0");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let results = check_run_dir(dir.path()).unwrap();
    assert!(results.iter().any(|r| r.name == "positivity" && !r.passed));
}

#[test]
fn csv_initial_data_is_read_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("x,f\n");
    for i in 0..64 {
        let x = (i as f64 + 0.5) * 0.125;
        csv.push_str(&format!("{x},{}\n", if (1.0..2.0).contains(&x) { 2.0 } else { 0.0 }));
    }
    fs::write(dir.path().join("start.csv"), csv).unwrap();
    let text = CONSTRAINED.replace("indicator(0.5, 1.5)", "csv(start.csv)");
    fs::write(dir.path().join("run.cfg"), &text).unwrap();
    let cfg = RunConfig::from_file(&dir.path().join("run.cfg")).unwrap();
    let f = cfg.initial_field().unwrap();
    assert_eq!(mass(&f), 2.0);
    let back = read_profile_csv(&dir.path().join("start.csv"), cfg.grid().unwrap()).unwrap();
    assert_eq!(l1_distance(&f, &back).unwrap(), 0.0);
}

#[test]
fn sweep_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let text = "model = unconstrained\neta = 3\npayoff = 0.4\nrescaled = true\nx_min = -8\n\
                x_max = 8\nn_cells = 40\nt_end = 0.5\ninitial = indicator(0,1)\n";
    let cfg = parse(text).unwrap();
    let report = epsilon_sweep(&cfg, &[0.4, 0.2], Some(2)).unwrap();
    write_sweep(&report, &cfg, dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(dir.path().join("sweep.json").is_file());
    assert!(dir.path().join("eps_1").join("profile.csv").is_file());
}
