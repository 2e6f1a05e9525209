use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use mrbv::mfunctional::{
    curve_node_m0, gamma_pointwise_check, parameterized_energy_residual, Branch, GammaReport, NodeM0,
    ParamEnergyResidual,
};
use mrbv::regimes::{
    contact_agreement, segment_curve, verify_relaxation_structure, NodeClass, RegimeLabel, RegimeSegment,
    RelaxationReport,
};
use mrbv::reparam::{arclength_reparam, custom_reparam, normalize, CurveTag, ParameterizedCurve};
use mrbv::solver::{fmt_f64, integrate, Apriori, EnergyBalance, RateParams, SolverConfig, Trajectory};
use mrbv::stats::loglog_slope;
use mrbv::potentials::Potentials;
use mrbv::{Error, Exec};
use serde::Serialize;

use crate::config::{ReparamConfig, Setup};
use crate::error::CliError;
use crate::svg::{padded_range, Plot, Scale, PALETTE};

/// Samples used for sup-distances between curves.
const SUP_SAMPLES: usize = 4000;
/// `|D_uE|` threshold of the relaxation check.
const RELAXATION_TOL: f64 = 1e-3;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn solve(setup: &Setup, params: &RateParams, cfg: &SolverConfig) -> Result<Trajectory, Error> {
    let [t0, t1] = setup.config.t_span;
    integrate(setup.model.as_ref(), &setup.pot, params, cfg, t0, t1, &setup.q0)
}

#[derive(Clone, Debug, Serialize)]
pub struct JumpSummary {
    pub t_start: f64,
    pub t_end: f64,
    pub u_start: Vec<f64>,
    pub z_start: Vec<f64>,
    pub u_end: Vec<f64>,
    pub z_end: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateSummary {
    pub model: String,
    pub alpha: f64,
    pub eps: f64,
    pub t_span: [f64; 2],
    pub nodes: usize,
    pub partial: bool,
    pub error: Option<String>,
    pub final_t: f64,
    pub final_u: Vec<f64>,
    pub final_z: Vec<f64>,
    pub jumps: Vec<JumpSummary>,
    pub energy_balance: Option<EnergyBalance>,
    pub apriori: Apriori,
}

fn summarize(setup: &Setup, params: &RateParams, tr: &Trajectory, error: Option<String>) -> SimulateSummary {
    let last = tr.last();
    let jumps = tr
        .jumps(params)
        .into_iter()
        .map(|j| {
            let (a, b) = (&tr.nodes[j.k_start].q, &tr.nodes[j.k_end].q);
            JumpSummary {
                t_start: j.t_start,
                t_end: j.t_end,
                u_start: a.u.iter().copied().collect(),
                z_start: a.z.iter().copied().collect(),
                u_end: b.u.iter().copied().collect(),
                z_end: b.z.iter().copied().collect(),
            }
        })
        .collect();
    SimulateSummary {
        model: setup.config.model.clone(),
        alpha: params.alpha,
        eps: params.eps,
        t_span: setup.config.t_span,
        nodes: tr.len(),
        partial: error.is_some(),
        error,
        final_t: last.t,
        final_u: last.q.u.iter().copied().collect(),
        final_z: last.q.z.iter().copied().collect(),
        jumps,
        energy_balance: tr.energy_balance_residual(&setup.pot, params, 0, tr.len() - 1).ok(),
        apriori: tr.apriori_diagnostics(),
    }
}

/// Integrate and write `trajectory.csv` and `summary.json`. A run stopped by
/// step underflow still writes its partial trajectory, flagged in the summary.
pub fn simulate(setup: &Setup, out: &Path) -> Result<(Trajectory, SimulateSummary), CliError> {
    let params = setup.config.params()?;
    match solve(setup, &params, &setup.config.solver) {
        Ok(tr) => {
            tr.write_csv(create(&out.join("trajectory.csv"))?)?;
            let summary = summarize(setup, &params, &tr, None);
            write_json(&out.join("summary.json"), &summary)?;
            Ok((tr, summary))
        }
        Err(Error::StepUnderflow { t, h_min, partial }) => {
            let msg = Error::StepUnderflow {
                t,
                h_min,
                partial: partial.clone(),
            }
            .to_string();
            if !partial.is_empty() {
                partial.write_csv(create(&out.join("trajectory_partial.csv"))?)?;
                write_json(&out.join("summary.json"), &summarize(setup, &params, &partial, Some(msg.clone())))?;
            }
            Err(CliError::Numerical(msg))
        }
        Err(e) => Err(e.into()),
    }
}

fn load_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let f = File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    Trajectory::read_csv(f).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_curve(path: &Path) -> Result<ParameterizedCurve, CliError> {
    let f = File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    ParameterizedCurve::read_csv(f).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn trajectory_from(setup: &Setup, input: Option<&Path>, out: &Path) -> Result<Trajectory, CliError> {
    match input {
        Some(p) => load_trajectory(p),
        None => Ok(simulate(setup, out)?.0),
    }
}

pub fn reparameterize(setup: &Setup, tr: &Trajectory) -> Result<ParameterizedCurve, CliError> {
    Ok(match setup.config.reparam {
        ReparamConfig::Arclength => arclength_reparam(tr)?,
        ReparamConfig::Custom { floor } => custom_reparam(tr, floor)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReparamSummary {
    pub tag: CurveTag,
    pub nodes: usize,
    pub length: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub min_dt: f64,
    pub normalization_defect: f64,
}

/// Parameterize a trajectory (read from `input`, or simulated) and write
/// `curve.csv` and `reparam.json`.
pub fn reparam(setup: &Setup, input: Option<&Path>, out: &Path) -> Result<(ParameterizedCurve, ReparamSummary), CliError> {
    let tr = trajectory_from(setup, input, out)?;
    let curve = reparameterize(setup, &tr)?;
    curve.write_csv(create(&out.join("curve.csv"))?)?;
    let summary = ReparamSummary {
        tag: curve.tag,
        nodes: curve.len(),
        length: curve.length(),
        t_start: curve.t[0],
        t_end: curve.t[curve.len() - 1],
        min_dt: curve.min_dt(),
        normalization_defect: curve.normalization_defect(),
    };
    write_json(&out.join("reparam.json"), &summary)?;
    Ok((curve, summary))
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifyReport {
    pub alpha: f64,
    pub grid: usize,
    pub tau_threshold: f64,
    pub segments: Vec<RegimeSegment>,
    pub labels: Vec<RegimeLabel>,
    pub unclassified_fraction: f64,
    pub contact_agreement: f64,
    pub relaxation: Option<RelaxationReport>,
}

pub struct Classified {
    pub curve: ParameterizedCurve,
    pub nodes: Vec<NodeClass>,
    pub report: ClassifyReport,
}

/// Classify a curve without writing anything.
pub fn classify_curve(setup: &Setup, curve: &ParameterizedCurve) -> Result<Classified, CliError> {
    let cfg = &setup.config.classify;
    let alpha = setup.config.alpha;
    let curve = curve.resample(cfg.grid)?;
    let (segments, nodes) = segment_curve(
        &curve,
        setup.model.as_ref(),
        &setup.pot,
        alpha,
        &cfg.segment,
        Exec::default(),
    )?;
    let unclassified = nodes.iter().filter(|n| n.label == RegimeLabel::Unclassified).count();
    let relaxation = if alpha > 1.0 {
        Some(verify_relaxation_structure(
            &curve,
            setup.model.as_ref(),
            &setup.pot,
            alpha,
            RELAXATION_TOL,
            &cfg.segment.gates(&curve),
        )?)
    } else {
        None
    };
    let report = ClassifyReport {
        alpha,
        grid: cfg.grid,
        tau_threshold: cfg.segment.tau_threshold(&curve),
        labels: segments.iter().map(|s| s.label).collect(),
        unclassified_fraction: unclassified as f64 / nodes.len() as f64,
        contact_agreement: contact_agreement(&segments, &nodes, cfg.boundary_band),
        segments,
        relaxation,
    };
    Ok(Classified { curve, nodes, report })
}

fn write_node_classes(path: &Path, c: &Classified) -> Result<(), CliError> {
    let mut header = c.curve.header();
    header.truncate(2 + c.curve.dims.n + c.curve.dims.m);
    header.extend(
        ["label", "theta_u", "theta_z", "residual_u", "residual_z", "relative_gap"].map(String::from),
    );
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(&header).map_err(Error::from)?;
    for (j, n) in c.nodes.iter().enumerate() {
        let mut row = vec![fmt_f64(c.curve.s[j]), fmt_f64(c.curve.t[j])];
        row.extend(c.curve.q[j].to_vec().into_iter().map(fmt_f64));
        row.push(n.label.to_string());
        row.extend(
            [
                n.theta.theta_u,
                n.theta.theta_z,
                n.theta.residual_u,
                n.theta.residual_z,
                n.relative_gap,
            ]
            .map(fmt_f64),
        );
        w.write_record(&row).map_err(Error::from)?;
    }
    w.flush()?;
    Ok(())
}

/// `(t, u, z)` against `s` with regime boundaries and labels.
pub fn regimes_svg(c: &Classified, title: &str) -> String {
    let curve = &c.curve;
    let values = curve
        .t
        .iter()
        .copied()
        .chain(curve.q.iter().flat_map(|q| q.to_vec()));
    let mut plot = Plot::new(
        title,
        "s",
        "t, u, z",
        (curve.s[0], curve.s[curve.len() - 1]),
        padded_range(values),
    );
    plot.line(&curve.s, &curve.t, "black", Some("2,3"), "t");
    let (n, m) = (curve.dims.n, curve.dims.m);
    for i in 0..n {
        let ys: Vec<f64> = curve.q.iter().map(|q| q.u[i]).collect();
        let label = if n == 1 { "u".to_string() } else { format!("u_{}", i + 1) };
        plot.line(&curve.s, &ys, PALETTE[i % PALETTE.len()], None, &label);
    }
    for i in 0..m {
        let ys: Vec<f64> = curve.q.iter().map(|q| q.z[i]).collect();
        let label = if m == 1 { "z".to_string() } else { format!("z_{}", i + 1) };
        plot.line(&curve.s, &ys, PALETTE[(n + i) % PALETTE.len()], Some("6,3"), &label);
    }
    for (k, seg) in c.report.segments.iter().enumerate() {
        if k > 0 {
            plot.vline(seg.s_a, "gray");
        }
        plot.top_label(0.5 * (seg.s_a + seg.s_b), seg.label.as_str());
    }
    plot.finish()
}

/// Classify a curve (read from `input`, or simulated and parameterized) and
/// write `segments.json`, `nodes.csv` and `regimes.svg`. Fails with
/// [`CliError::Unclassified`] after writing when too many nodes stay
/// unclassified.
pub fn classify(setup: &Setup, input: Option<&Path>, out: &Path) -> Result<ClassifyReport, CliError> {
    let curve = match input {
        Some(p) => load_curve(p)?,
        None => reparameterize(setup, &simulate(setup, out)?.0)?,
    };
    let c = classify_curve(setup, &curve)?;
    write_json(&out.join("segments.json"), &c.report)?;
    write_node_classes(&out.join("nodes.csv"), &c)?;
    let title = format!("{} alpha={}", setup.config.model, setup.config.alpha);
    fs::write(out.join("regimes.svg"), regimes_svg(&c, &title))?;
    let limit = setup.config.classify.max_unclassified_fraction;
    if c.report.unclassified_fraction > limit {
        return Err(CliError::Unclassified {
            fraction: c.report.unclassified_fraction,
            limit,
        });
    }
    Ok(c.report)
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementEntry {
    pub delta_max: f64,
    pub nodes: usize,
    pub balance: EnergyBalance,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    pub alpha: f64,
    pub eps: f64,
    pub refinements: Vec<RefinementEntry>,
    /// `log₂` of consecutive residual ratios under step halving.
    pub observed_orders: Vec<f64>,
    pub parameterized: ParamEnergyResidual,
    pub nodes: Option<Vec<NodeM0>>,
}

/// Discrete energy balance under repeated step halving plus the
/// parameterized balance against `M₀` on the resampled base curve.
pub fn energy_report(setup: &Setup) -> Result<EnergyReport, CliError> {
    let params = setup.config.params()?;
    let cfg = &setup.config;
    let levels: Vec<usize> = (0..=cfg.energy_check.refinements).collect();
    let runs = Exec::default().map(&levels, |&k| {
        let sc = cfg.solver.refined(0.5f64.powi(k as i32));
        solve(setup, &params, &sc).map(|tr| (sc, tr))
    });
    let mut refinements = Vec::new();
    let mut base = None;
    for run in runs {
        let (sc, tr) = run?;
        let balance = tr.energy_balance_residual(&setup.pot, &params, 0, tr.len() - 1)?;
        refinements.push(RefinementEntry {
            delta_max: sc.delta_max,
            nodes: tr.len(),
            balance,
        });
        base.get_or_insert(tr);
    }
    let observed_orders = refinements
        .windows(2)
        .map(|w| (w[0].balance.absolute / w[1].balance.absolute).log2())
        .collect();
    let tr = base.expect("at least one level");
    let curve = reparameterize(setup, &tr)?.resample(cfg.classify.grid)?;
    let gates = cfg.classify.segment.gates(&curve);
    let model = setup.model.as_ref();
    let parameterized = parameterized_energy_residual(
        &curve,
        model,
        &setup.pot,
        cfg.alpha,
        0,
        curve.len() - 1,
        &gates,
        Exec::default(),
    )?;
    let nodes = if cfg.energy_check.per_node {
        Some(curve_node_m0(&curve, model, &setup.pot, cfg.alpha, &gates, Exec::default())?)
    } else {
        None
    };
    Ok(EnergyReport {
        alpha: cfg.alpha,
        eps: params.eps,
        refinements,
        observed_orders,
        parameterized,
        nodes,
    })
}

pub fn energy_check(setup: &Setup, out: &Path) -> Result<EnergyReport, CliError> {
    let report = energy_report(setup)?;
    write_json(&out.join("energy.json"), &report)?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub eps: f64,
    pub nodes: usize,
    pub apriori: Apriori,
    pub energy_relative: f64,
    pub parameterized_relative: f64,
    pub curve_length: f64,
    /// Sup-distance to the normalized curve of the previous (larger) `ε`.
    pub sup_distance: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub alpha: f64,
    pub entries: Vec<SweepEntry>,
    pub sup_distance_decreasing: bool,
    /// Fitted exponent of the sup-distance against `ε`.
    pub convergence_rate: Option<f64>,
}

/// Runs every `ε` of the list concurrently; results are collected in list
/// order.
pub fn sweep_report(setup: &Setup) -> Result<SweepReport, CliError> {
    let cfg = &setup.config;
    let eps_list = cfg.eps_list()?;
    let model = setup.model.as_ref();
    let runs = Exec::default().map(&eps_list, |&eps| -> Result<_, CliError> {
        let params = RateParams::new(eps, cfg.alpha)?;
        let tr = solve(setup, &params, &cfg.solver)?;
        let balance = tr.energy_balance_residual(&setup.pot, &params, 0, tr.len() - 1)?;
        let curve = reparameterize(setup, &tr)?.resample(cfg.classify.grid)?;
        let gates = cfg.classify.segment.gates(&curve);
        let param = parameterized_energy_residual(
            &curve,
            model,
            &setup.pot,
            cfg.alpha,
            0,
            curve.len() - 1,
            &gates,
            Exec::Sequential,
        )?;
        let normalized = normalize(&curve)?;
        Ok((tr.len(), tr.apriori_diagnostics(), balance.relative, param.relative, curve.length(), normalized))
    });
    let mut entries = Vec::new();
    let mut prev: Option<ParameterizedCurve> = None;
    for (eps, run) in eps_list.iter().zip(runs) {
        let (nodes, apriori, energy_relative, parameterized_relative, curve_length, curve) = run?;
        entries.push(SweepEntry {
            eps: *eps,
            nodes,
            apriori,
            energy_relative,
            parameterized_relative,
            curve_length,
            sup_distance: prev.as_ref().map(|p| curve.sup_distance(p, SUP_SAMPLES)),
        });
        prev = Some(curve);
    }
    let sups: Vec<f64> = entries.iter().filter_map(|e| e.sup_distance).collect();
    let eps_with_sup: Vec<f64> = entries.iter().filter(|e| e.sup_distance.is_some()).map(|e| e.eps).collect();
    Ok(SweepReport {
        alpha: cfg.alpha,
        sup_distance_decreasing: sups.windows(2).all(|w| w[1] < w[0]),
        convergence_rate: loglog_slope(&eps_with_sup, &sups),
        entries,
    })
}

pub fn convergence_svg(report: &SweepReport, title: &str) -> String {
    let eps: Vec<f64> = report.entries.iter().map(|e| e.eps).collect();
    let sup: Vec<f64> = report.entries.iter().map(|e| e.sup_distance.unwrap_or(f64::NAN)).collect();
    let par: Vec<f64> = report.entries.iter().map(|e| e.parameterized_relative).collect();
    let positive = sup.iter().chain(&par).copied().filter(|v| *v > 0.0 && v.is_finite());
    let (lo, hi) = positive.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo / 2.0, hi * 2.0) } else { (1e-3, 1.0) };
    let (e_lo, e_hi) = eps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    let mut plot = Plot::new(title, "eps", "distance / residual", (e_lo / 2.0, e_hi * 2.0), (lo, hi))
        .log_axes(Scale::Log10, Scale::Log10);
    plot.line(&eps, &sup, PALETTE[0], None, "sup-distance");
    plot.markers(&eps, &sup, PALETTE[0]);
    let par_pos: Vec<f64> = par.iter().map(|v| if *v > 0.0 { *v } else { f64::NAN }).collect();
    plot.line(&eps, &par_pos, PALETTE[1], Some("6,3"), "M0 residual");
    plot.markers(&eps, &par_pos, PALETTE[1]);
    plot.finish()
}

pub fn sweep(setup: &Setup, out: &Path) -> Result<SweepReport, CliError> {
    let report = sweep_report(setup)?;
    write_json(&out.join("sweep.json"), &report)?;
    let title = format!("{} alpha={} eps sweep", setup.config.model, setup.config.alpha);
    fs::write(out.join("convergence.svg"), convergence_svg(&report, &title))?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaPointReport {
    pub name: String,
    pub expected_branch: Option<Branch>,
    pub report: GammaReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaCheckReport {
    pub eps_list: Vec<f64>,
    pub points: Vec<GammaPointReport>,
    pub pass: bool,
}

pub fn gamma_report(setup: &Setup) -> Result<GammaCheckReport, CliError> {
    let eps_list = setup.config.gamma.eps_list.clone();
    let pot = Potentials::standard(1, 1);
    let mut points = Vec::new();
    for b in setup.config.gamma.battery() {
        let report = gamma_pointwise_check(&pot, &b.args, b.alpha, &eps_list)?;
        points.push(GammaPointReport {
            name: b.name,
            expected_branch: b.branch,
            report,
        });
    }
    let pass = points.iter().all(|p| p.report.pass);
    Ok(GammaCheckReport { eps_list, points, pass })
}

pub fn gamma_check(setup: &Setup, out: &Path) -> Result<GammaCheckReport, CliError> {
    let report = gamma_report(setup)?;
    write_json(&out.join("gamma.json"), &report)?;
    Ok(report)
}

/// Cells per axis when sampling the locally stable region.
const PHASE_GRID: usize = 200;

/// Vertical runs `(z, u_lo, u_hi)` of grid cells, centred at `z`, whose
/// centre lies in the locally stable region `{−D_zE(t, q) ∈ K(q)}`. Only the
/// first components of `u` and `z` vary; the others are taken from `base`.
pub fn stable_region(
    setup: &Setup,
    t: f64,
    base: &mrbv::State,
    zr: (f64, f64),
    ur: (f64, f64),
    grid: usize,
) -> Result<Vec<(f64, f64, f64)>, CliError> {
    let model = setup.model.as_ref();
    let (dz, du) = ((zr.1 - zr.0) / grid as f64, (ur.1 - ur.0) / grid as f64);
    let columns: Vec<usize> = (0..grid).collect();
    let per_column = Exec::default().map(&columns, |&i| -> Result<Vec<(f64, f64, f64)>, CliError> {
        let z = zr.0 + (i as f64 + 0.5) * dz;
        let mut runs = Vec::new();
        let mut start: Option<usize> = None;
        for k in 0..=grid {
            let inside = k < grid && {
                let mut q = base.clone();
                q.z[0] = z;
                q.u[0] = ur.0 + (k as f64 + 0.5) * du;
                let xi = -model.dz(t, &q);
                setup.pot.r0.stable_set(&q)?.contains(&xi, 0.0)
            };
            match (inside, start) {
                (true, None) => start = Some(k),
                (false, Some(a)) => {
                    runs.push((z, ur.0 + a as f64 * du, ur.0 + k as f64 * du));
                    start = None;
                }
                _ => {}
            }
        }
        Ok(runs)
    });
    let mut out = Vec::new();
    for c in per_column {
        out.extend(c?);
    }
    Ok(out)
}

/// Trajectories in the `(z, u)` plane over the shaded locally stable region
/// at the initial time.
pub fn phase_svg(setup: &Setup, trajectories: &[(String, Trajectory)]) -> Result<String, CliError> {
    let q0 = &setup.q0;
    let zs = trajectories
        .iter()
        .flat_map(|(_, tr)| tr.nodes.iter().map(|n| n.q.z[0]))
        .chain([q0.z[0] - 1.0, q0.z[0] + 1.0, -2.0, 2.0]);
    let us = trajectories
        .iter()
        .flat_map(|(_, tr)| tr.nodes.iter().map(|n| n.q.u[0]))
        .chain([q0.u[0] - 1.0, q0.u[0] + 1.0, -3.0, 3.0]);
    let (zr, ur) = (padded_range(zs), padded_range(us));
    let title = format!("{}: locally stable region and trajectories", setup.config.model);
    let mut plot = Plot::new(&title, "z", "u", zr, ur);
    let half = 0.5 * (zr.1 - zr.0) / PHASE_GRID as f64;
    for (z, u0, u1) in stable_region(setup, setup.config.t_span[0], q0, zr, ur, PHASE_GRID)? {
        plot.rect(z - half, z + half, u0, u1, "#f5e79e");
    }
    for (k, (name, tr)) in trajectories.iter().enumerate() {
        let z: Vec<f64> = tr.nodes.iter().map(|n| n.q.z[0]).collect();
        let u: Vec<f64> = tr.nodes.iter().map(|n| n.q.u[0]).collect();
        plot.line(&z, &u, PALETTE[k % PALETTE.len()], None, name);
    }
    Ok(plot.finish())
}

pub fn plot_phase(setup: &Setup, inputs: &[PathBuf], out: &Path) -> Result<PathBuf, CliError> {
    let mut trajectories = Vec::new();
    for p in inputs {
        let tr = load_trajectory(p)?;
        if tr.dims != setup.model.dims() {
            return Err(CliError::Config(format!("{} does not match the model dimensions", p.display())));
        }
        let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        trajectories.push((name, tr));
    }
    let path = out.join("phase.svg");
    fs::write(&path, phase_svg(setup, &trajectories)?)?;
    Ok(path)
}
