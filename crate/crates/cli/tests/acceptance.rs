//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when
//! the set of failing criteria differs from `KNOWN_FAILURES`.

use std::path::Path;
use std::process::ExitCode;

use mrbv::mfunctional::{canonical_battery, gamma_pointwise_check, property_suite, Branch};
use mrbv::potentials::Potentials;
use mrbv::regimes::{verify_relaxation_structure, RegimeLabel};
use mrbv::solver::Trajectory;
use mrbv::state::Dims;
use mrbv::stats::loglog_slope;
use mrbv::{Exec, State};
use mrbv_cli::commands::{self, Classified};
use mrbv_cli::{RunConfig, Setup};

/// Criteria expected to fail, with the reason printed next to them.
const KNOWN_FAILURES: &[(&str, &str)] = &[(
    "3",
    "the stated plateau u = t - 0.5 contradicts u = t + z at z = 0.5; see 3*",
)];

const BRANCH_TOL: f64 = 0.02;
const JUMP_END_TOL: f64 = 0.05;
const ENERGY_REL_TOL: f64 = 1e-3;
const MIN_ORDER: f64 = 0.9;
const SAMPLES: usize = 10_000;
const GAP_FLOOR: f64 = -1e-10;
const HOMOGENEITY_TOL: f64 = 1e-9;
const DIVERGENCE_TOL: f64 = 0.1;
const AGREEMENT_MIN: f64 = 0.95;
const BAND: usize = 5;
const RELAX_EPS: f64 = 1e-4;
const RELAX_TOL_EQ: f64 = 1e-3;
const RELAX_DZ: f64 = 1e-3;
const RELAX_DT: f64 = 1e-6;
const RELAX_EQUILIBRIUM: f64 = 5e-3;
const RELAX_RESIDUAL: f64 = 1e-3;
const VARIATION_SPREAD: f64 = 0.25;

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: &'static str, pass: bool, detail: String) -> Line {
    Line { id, pass, detail }
}

fn preset(name: &str) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(format!("{name}.json"));
    RunConfig::load(&path).unwrap()
}

struct Run {
    name: &'static str,
    setup: Setup,
    traj: Trajectory,
    classified: Classified,
}

fn run(name: &'static str, eps: Option<f64>) -> Run {
    let setup = preset(name).with_overrides(eps, None).setup().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (traj, _) = commands::simulate(&setup, dir.path()).unwrap();
    let curve = commands::reparameterize(&setup, &traj).unwrap();
    let classified = commands::classify_curve(&setup, &curve).unwrap();
    Run {
        name,
        setup,
        traj,
        classified,
    }
}

fn dist(q: &State, u: f64, z: f64) -> f64 {
    ((q.u[0] - u).powi(2) + (q.z[0] - z).powi(2)).sqrt()
}

fn segment_end(r: &Run, k: usize) -> Option<State> {
    let seg = r.classified.report.segments.get(k)?;
    Some(r.classified.curve.q[seg.j_b].clone())
}

/// Largest deviation of the trajectory from `(u(t), z(t))` over `[a, b]`.
fn max_deviation(tr: &Trajectory, a: f64, b: f64, u: impl Fn(f64) -> f64, z: impl Fn(f64) -> f64) -> (f64, f64) {
    tr.nodes
        .iter()
        .filter(|n| n.t >= a && n.t <= b)
        .fold((0.0f64, 0.0f64), |(du, dz), n| {
            (du.max((n.q.u[0] - u(n.t)).abs()), dz.max((n.q.z[0] - z(n.t)).abs()))
        })
}

fn c1(r: &Run) -> Line {
    let (du, dz) = max_deviation(&r.traj, 0.2, 1.0, |t| 2.0 * t - 1.0, |t| t - 1.0);
    line(
        "1",
        du <= BRANCH_TOL && dz <= BRANCH_TOL,
        format!("example1 a=2 on [0.2, 1]: max|u-(2t-1)| = {du:.2e}, max|z-(t-1)| = {dz:.2e} (tol {BRANCH_TOL})"),
    )
}

fn jump_structure(r: &Run, targets: [(f64, f64); 2]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, (u, z)) in targets.into_iter().enumerate() {
        match segment_end(r, k) {
            Some(q) => {
                let d = dist(&q, u, z);
                ok &= d <= JUMP_END_TOL;
                parts.push(format!("segment {} ends at ({:.3}, {:.3}), {d:.2e} from ({u}, {z})", k + 1, q.u[0], q.z[0]));
            }
            None => {
                ok = false;
                parts.push(format!("segment {} missing", k + 1));
            }
        }
    }
    (ok, parts.join("; "))
}

/// The end states carry a viscous lag that vanishes with eps, so the check
/// runs on the fine run; the preset run is reported alongside.
fn c2(preset_run: &Run, fine: &Run) -> Line {
    let targets = [(-1.5, -1.5), (-1.0, -1.0)];
    let (ok, d) = jump_structure(fine, targets);
    let (_, coarse) = jump_structure(preset_run, targets);
    line(
        "2",
        ok,
        format!("example1 a=2, eps {RELAX_EPS}: {d} (tol {JUMP_END_TOL}); at preset eps: {coarse}"),
    )
}

fn c3(r: &Run, literal: bool) -> Line {
    let (ok, d) = jump_structure(r, [(2.0, 0.5), (0.5, 0.5)]);
    let shift = if literal { -0.5 } else { 0.5 };
    let (du, dz) = max_deviation(&r.traj, 0.6, 1.4, |t| t + shift, |_| 0.5);
    let pass = ok && du <= BRANCH_TOL && dz <= BRANCH_TOL;
    let label = if literal { "t-0.5" } else { "t+0.5" };
    line(
        if literal { "3" } else { "3*" },
        pass,
        format!("example1 a=1/2: {d}; on [0.6, 1.4] max|z-0.5| = {dz:.2e}, max|u-({label})| = {du:.2e} (tol {BRANCH_TOL})"),
    )
}

fn expected_sequence(name: &str) -> Vec<RegimeLabel> {
    use RegimeLabel::*;
    match name {
        "example1_a2" => vec![VuBz, EuVz, EuRz],
        "example1_a1" => vec![VuVz, EuRz],
        "example1_a05" => vec![BuVz, VuRz, EuRz],
        "example2_a2" => vec![EuRz, EuVz, EuRz],
        "example2_a1" => vec![EuRz, VuVz, EuRz],
        "example2_a05" => vec![EuRz, VuRz, BuVz, VuRz, EuRz],
        other => panic!("no expected sequence for {other}"),
    }
}

fn fmt_labels(l: &[RegimeLabel]) -> String {
    l.iter().map(|x| x.as_str()).collect::<Vec<_>>().join(",")
}

fn c4(runs: &[Run]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in runs {
        let got = &r.classified.report.labels;
        let want = expected_sequence(r.name);
        ok &= *got == want;
        parts.push(format!("{} [{}]", r.name, fmt_labels(got)));
    }
    line("4", ok, parts.join("; "))
}

fn c5(runs: &[Run]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in runs {
        let mut cfg = r.setup.config.clone();
        cfg.energy_check.per_node = false;
        let setup = cfg.setup().unwrap();
        let rep = commands::energy_report(&setup).unwrap();
        let rel = rep.refinements[0].balance.relative;
        let h: Vec<f64> = rep.refinements.iter().map(|e| e.delta_max).collect();
        let res: Vec<f64> = rep.refinements.iter().map(|e| e.balance.absolute).collect();
        let order = loglog_slope(&h, &res).unwrap_or(f64::NAN);
        ok &= rel <= ENERGY_REL_TOL && order >= MIN_ORDER && rep.refinements.len() == 4;
        parts.push(format!("{} rel {rel:.1e} order {order:.2}", r.name));
    }
    line("5", ok, format!("{} (tol {ENERGY_REL_TOL}, order >= {MIN_ORDER})", parts.join("; ")))
}

fn c6() -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    let configs = [(Potentials::standard(1, 1), Dims::new(1, 1)), (Potentials::standard(2, 2), Dims::new(2, 2))];
    for alpha in [2.0, 1.0, 0.5] {
        let (mut gap, mut hom, mut finite) = (f64::INFINITY, 0.0f64, 0);
        for (k, (pot, dims)) in configs.iter().enumerate() {
            let r = property_suite(pot, *dims, alpha, SAMPLES, 11 + k as u64, Exec::Parallel).unwrap();
            gap = gap.min(r.min_gap);
            hom = hom.max(r.max_homogeneity_error);
            finite += r.finite;
            ok &= r.branch_changes == 0;
        }
        ok &= gap >= GAP_FLOOR && hom <= HOMOGENEITY_TOL;
        parts.push(format!("a={alpha}: min gap {gap:.1e}, homogeneity {hom:.1e} ({finite} finite)"));
    }
    line("6", ok, format!("{} samples per config; {}", SAMPLES, parts.join("; ")))
}

fn c7() -> Line {
    let pot = Potentials::standard(1, 1);
    let eps = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let battery = canonical_battery();
    let passed = battery
        .iter()
        .filter(|b| gamma_pointwise_check(&pot, &b.args, b.alpha, &eps).unwrap().pass)
        .count();
    let inf = battery
        .iter()
        .find(|b| b.alpha == 2.0 && b.branch == Some(Branch::FastInfinite))
        .unwrap();
    let r = gamma_pointwise_check(&pot, &inf.args, 2.0, &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
    let exponent = r.divergence_exponent.unwrap_or(f64::NAN);
    line(
        "7",
        passed == battery.len() && (exponent - 0.5).abs() <= DIVERGENCE_TOL,
        format!("{passed}/{} battery points pass; a=2 divergence exponent {exponent:.4} (expected 0.5 +- {DIVERGENCE_TOL})", battery.len()),
    )
}

fn c8(runs: &[Run]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in runs {
        let c = &r.classified;
        let a = mrbv::regimes::contact_agreement(&c.report.segments, &c.nodes, BAND);
        ok &= a >= AGREEMENT_MIN;
        parts.push(format!("{} {:.4}", r.name, a));
    }
    line("8", ok, format!("{} (min {AGREEMENT_MIN})", parts.join("; ")))
}

/// Relaxation structure, with the reduced energy identity checked against
/// the closed form `I(t, z) = ½z² − tz − ½t²` and its limit dissipation
/// `|z′| max(1, |∂_zI|)`.
fn c9(r: &Run) -> Line {
    let curve = &r.classified.curve;
    let cfg = &r.setup.config.classify.segment;
    let rep = verify_relaxation_structure(
        curve,
        r.setup.model.as_ref(),
        &r.setup.pot,
        2.0,
        RELAX_TOL_EQ,
        &cfg.gates(curve),
    )
    .unwrap();
    let Some(js) = rep.j_star else {
        return line("9", false, "no equilibrated terminal interval".into());
    };
    let i = |j: usize| {
        let (t, z) = (curve.t[j], curve.q[j].z[0]);
        0.5 * z * z - t * z - 0.5 * t * t
    };
    let (mut diss, mut power) = (0.0, 0.0);
    let dens = |j: usize| {
        let (t, z, dz) = (curve.t[j], curve.q[j].z[0], curve.dq[j].z[0]);
        (dz.abs() * (z - t).abs().max(1.0), (-z - t) * curve.dt[j])
    };
    for j in js..curve.len() - 1 {
        let ds = curve.s[j + 1] - curve.s[j];
        let (a, b) = (dens(j), dens(j + 1));
        diss += 0.5 * ds * (a.0 + b.0);
        power += 0.5 * ds * (a.1 + b.1);
    }
    let closed = (i(curve.len() - 1) + diss - i(js) - power).abs();
    let post_eq = (js..curve.len())
        .map(|j| (curve.q[j].u[0] - curve.q[j].z[0] - curve.t[j]).abs())
        .fold(0.0, f64::max);
    let pass = rep.terminal_interval
        && rep.pre_max_dz <= RELAX_DZ
        && rep.pre_max_dt <= RELAX_DT
        && post_eq <= RELAX_EQUILIBRIUM
        && closed <= RELAX_RESIDUAL
        && rep.reduced_residual <= RELAX_RESIDUAL;
    line(
        "9",
        pass,
        format!(
            "eps {RELAX_EPS}: terminal {} at s* = {:.3}; pre max|dz| {:.1e}, max|dt| {:.1e}; post max|u-(z+t)| {post_eq:.1e}; reduced residual {closed:.1e} (library {:.1e})",
            rep.terminal_interval,
            rep.s_star.unwrap_or(f64::NAN),
            rep.pre_max_dz,
            rep.pre_max_dt,
            rep.reduced_residual
        ),
    )
}

fn c10() -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["example1_a2", "example1_a1", "example1_a05"] {
        let mut cfg = preset(name);
        cfg.eps_list = Some(vec![3e-2, 1e-2, 3e-3, 1e-3]);
        let rep = commands::sweep_report(&cfg.setup().unwrap()).unwrap();
        let n = rep.entries.len();
        let (a, b) = (&rep.entries[n - 2].apriori, &rep.entries[n - 1].apriori);
        let spread = |x: f64, y: f64| (x - y).abs() / x.min(y);
        let (sz, su) = (spread(a.total_var_z, b.total_var_z), spread(a.total_var_u, b.total_var_u));
        ok &= sz < VARIATION_SPREAD && su < VARIATION_SPREAD && rep.sup_distance_decreasing;
        let sups: Vec<String> = rep.entries.iter().filter_map(|e| e.sup_distance).map(|d| format!("{d:.3}")).collect();
        parts.push(format!(
            "a={}: var_z {:.1}%, var_u {:.1}%, sup [{}]",
            rep.alpha,
            100.0 * sz,
            100.0 * su,
            sups.join(",")
        ));
    }
    line("10", ok, parts.join("; "))
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let names = [
        "example1_a2",
        "example1_a1",
        "example1_a05",
        "example2_a2",
        "example2_a1",
        "example2_a05",
    ];
    let runs: Vec<Run> = names.iter().map(|n| run(n, None)).collect();
    let fine = run("example1_a2", Some(RELAX_EPS));
    let by_name = |n: &str| runs.iter().find(|r| r.name == n).unwrap();
    let lines = vec![
        c1(by_name("example1_a2")),
        c2(by_name("example1_a2"), &fine),
        c3(by_name("example1_a05"), true),
        c3(by_name("example1_a05"), false),
        c4(&runs),
        c5(&runs),
        c6(),
        c7(),
        c8(&runs),
        c9(&fine),
        c10(),
    ];
    let mut unexpected = Vec::new();
    for l in &lines {
        let known = KNOWN_FAILURES.iter().find(|(id, _)| *id == l.id);
        let status = match (l.pass, known) {
            (true, None) => "PASS",
            (false, Some(_)) => "FAIL (known)",
            (false, None) => "FAIL",
            (true, Some(_)) => "PASS (expected to fail)",
        };
        println!("criterion {:<3} {status}: {}", l.id, l.detail);
        if let (false, Some((_, why))) = (l.pass, known) {
            println!("              known failure: {why}");
        }
        if l.pass == known.is_some() {
            unexpected.push(l.id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all criteria as expected");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome for {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
