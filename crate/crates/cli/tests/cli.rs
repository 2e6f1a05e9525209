use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use mrbv::regimes::RegimeLabel;
use mrbv::reparam::ParameterizedCurve;
use mrbv::solver::Trajectory;
use mrbv_cli::commands;
use mrbv_cli::config::{R0Config, ReparamConfig};
use mrbv_cli::{CliError, RunConfig};

fn preset_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(format!("{name}.json"))
}

fn preset(name: &str) -> RunConfig {
    RunConfig::load(&preset_path(name)).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mrbv"))
}

fn exit_code(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn presets_load_and_validate() {
    for name in [
        "example1_a2",
        "example1_a1",
        "example1_a05",
        "example2_a2",
        "example2_a1",
        "example2_a05",
    ] {
        let cfg = preset(name);
        assert!(cfg.eps.is_some() && cfg.eps_list.is_some(), "{name}");
        cfg.setup().unwrap();
    }
}

#[test]
fn config_validation() {
    let base = preset("example1_a2");
    let bad = |f: &dyn Fn(&mut RunConfig)| {
        let mut c = base.clone();
        f(&mut c);
        matches!(c.setup(), Err(CliError::Config(_)))
    };
    assert!(bad(&|c| c.model = "example3".into()));
    assert!(bad(&|c| c.t_span = [1.0, 1.0]));
    assert!(bad(&|c| c.initial.u = vec![1.0, 2.0]));
    assert!(bad(&|c| c.eps = Some(0.0)));
    assert!(bad(&|c| c.alpha = -1.0));
    assert!(bad(&|c| c.potentials.vu = vec![vec![-1.0]]));
    assert!(bad(&|c| c.potentials.r0 = R0Config::L1(vec![0.0])));
    assert!(bad(&|c| c.reparam = ReparamConfig::Custom { floor: 0.0 }));
    assert!(bad(&|c| c.solver.delta_max = -1.0));
    let mut c = base.clone();
    c.eps_list = Some(vec![1e-2, 1e-3]);
    assert!(matches!(c.eps_list(), Err(CliError::Config(_))));
    c.eps_list = Some(vec![1e-2, 1e-3, 1e-2]);
    assert!(matches!(c.eps_list(), Err(CliError::Config(_))));
    let mut c = base;
    c.eps = None;
    assert!(matches!(c.params(), Err(CliError::Config(_))));
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(preset_path("example1_a2")).unwrap();
    let path = dir.path().join("c.json");
    fs::write(&path, text.replacen("\"alpha\"", "\"alpah\": 1, \"alpha\"", 1)).unwrap();
    assert!(matches!(RunConfig::load(&path), Err(CliError::Config(_))));
}

#[test]
fn simulate_example1_rate_independent_branch() {
    let dir = tempfile::tempdir().unwrap();
    let setup = preset("example1_a2").setup().unwrap();
    let (tr, summary) = commands::simulate(&setup, dir.path()).unwrap();
    let q = tr.state_at(1.0);
    assert!((q.u[0] - 1.0).abs() < 0.02 && q.z[0].abs() < 0.02, "{q:?}");
    assert!(!summary.partial);
    assert!(summary.energy_balance.unwrap().relative < 1e-3);
    assert!(dir.path().join("trajectory.csv").exists());
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn simulate_example1_half_alpha_plateau() {
    let dir = tempfile::tempdir().unwrap();
    let setup = preset("example1_a05").setup().unwrap();
    let (tr, _) = commands::simulate(&setup, dir.path()).unwrap();
    let q = tr.state_at(1.0);
    // u follows the equilibrium t + z with z stuck at 0.5
    assert!((q.u[0] - 1.5).abs() < 0.02 && (q.z[0] - 0.5).abs() < 0.02, "{q:?}");
}

#[test]
fn simulate_example2_from_unprepared_datum() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("example2_a1");
    cfg.eps = Some(3e-3);
    cfg.initial.u = vec![-2.4];
    let setup = cfg.setup().unwrap();
    let (_, summary) = commands::simulate(&setup, dir.path()).unwrap();
    assert_eq!(summary.final_t, 1.0);
    let eb = summary.energy_balance.unwrap();
    assert!(eb.relative < 1e-3, "{eb:?}");
    // besides the initial relaxation layer, z jumps once
    let later: Vec<_> = summary.jumps.iter().filter(|j| j.t_start > -0.15).collect();
    assert_eq!(later.len(), 1, "{:?}", summary.jumps);
    assert!(later[0].z_end[0] > later[0].z_start[0]);
}

#[test]
fn csv_round_trip_through_reparam_and_classify() {
    let dir = tempfile::tempdir().unwrap();
    let setup = preset("example1_a1").setup().unwrap();
    let (tr, _) = commands::simulate(&setup, dir.path()).unwrap();
    let back = Trajectory::read_csv(fs::File::open(dir.path().join("trajectory.csv")).unwrap()).unwrap();
    assert_eq!(back.len(), tr.len());
    for (a, b) in back.nodes.iter().zip(&tr.nodes) {
        assert_eq!(a.t, b.t);
        assert_eq!(a.q, b.q);
    }
    let (curve, _) = commands::reparam(&setup, Some(&dir.path().join("trajectory.csv")), dir.path()).unwrap();
    let read = ParameterizedCurve::read_csv(fs::File::open(dir.path().join("curve.csv")).unwrap()).unwrap();
    assert_eq!(read, curve);
    let from_file = commands::classify(&setup, Some(&dir.path().join("curve.csv")), dir.path()).unwrap();
    let direct = commands::classify_curve(&setup, &commands::reparameterize(&setup, &tr).unwrap()).unwrap();
    assert_eq!(from_file.segments, direct.report.segments);
    assert_eq!(from_file.labels, vec![RegimeLabel::VuVz, RegimeLabel::EuRz]);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let setup = preset("example2_a2").setup().unwrap();
        commands::classify(&setup, None, dir).unwrap();
        commands::gamma_check(&setup, dir).unwrap();
    }
    for f in ["trajectory.csv", "summary.json", "segments.json", "nodes.csv", "regimes.svg", "gamma.json"] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn example1_stable_region_is_the_band() {
    let setup = preset("example1_a2").setup().unwrap();
    let grid = 100;
    let (zr, ur) = ((-2.0, 2.0), (-5.0, 5.0));
    let runs = commands::stable_region(&setup, 0.0, &setup.q0, zr, ur, grid).unwrap();
    assert_eq!(runs.len(), grid);
    let cell = (ur.1 - ur.0) / grid as f64;
    for (z, lo, hi) in runs {
        if 2.0 * z + 1.0 < ur.1 && 2.0 * z - 1.0 > ur.0 {
            assert!((lo - (2.0 * z - 1.0)).abs() <= cell, "z {z}: {lo}");
            assert!((hi - (2.0 * z + 1.0)).abs() <= cell, "z {z}: {hi}");
        }
    }
}

#[test]
fn phase_plot_without_trajectories_is_region_only() {
    let dir = tempfile::tempdir().unwrap();
    let setup = preset("example2_a2").setup().unwrap();
    let path = commands::plot_phase(&setup, &[], dir.path()).unwrap();
    let svg = fs::read_to_string(path).unwrap();
    assert!(svg.contains("<rect") && !svg.contains("<path"));
}

#[test]
fn gamma_battery_passes() {
    let setup = preset("example1_a2").setup().unwrap();
    let r = commands::gamma_report(&setup).unwrap();
    assert_eq!(r.points.len(), 12);
    assert!(r.pass);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = preset_path("example1_a05");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(exit_code(&["gamma-check", "--config", cfg, "--out", out]), 0);
    assert_eq!(exit_code(&["simulate", "--config", "/nonexistent.json", "--out", out]), 1);
    assert_eq!(exit_code(&["simulate", "--config", cfg, "--eps", "-1", "--out", out]), 1);
    assert_eq!(exit_code(&["frobnicate"]), 1);
    assert_eq!(exit_code(&["classify", "--config", cfg, "--eps", "3e-3", "--out", out]), 3);

    let mut c = preset("example1_a2");
    c.solver.max_steps = 20;
    let path = dir.path().join("short.json");
    fs::write(&path, serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(exit_code(&["simulate", "--config", path.to_str().unwrap(), "--out", out]), 2);

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "s,t,u_1,z_1,dt,du_1,dz_1\n0,0,0,0,1,0,0\n1,x,0,0,1,0,0\n").unwrap();
    let o = bin()
        .args(["classify", "--config", cfg, "--input", bad.to_str().unwrap(), "--out", out])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn sweep_report_is_ordered_and_converges() {
    let setup = preset("example1_a2").setup().unwrap();
    let r = commands::sweep_report(&setup).unwrap();
    let eps: Vec<f64> = r.entries.iter().map(|e| e.eps).collect();
    assert_eq!(eps, vec![3e-2, 1e-2, 3e-3, 1e-3]);
    assert!(r.entries[0].sup_distance.is_none());
    assert!(r.sup_distance_decreasing);
}
