//! Adaptive semi-implicit integration of the viscous system
//!
//! ```text
//! ε^α V_u(q) u′ + D_uE(t, q) = 0,
//! ∂R₀(q, z′) + ε V_z(q) z′ + D_zE(t, q) ∋ 0,
//! ```
//!
//! together with the discrete energy-dissipation diagnostics.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::potentials::{solve_spd, Potentials};
use crate::sampling::SamplingBox;
use crate::state::{Dims, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AlphaRegime {
    /// `α > 1`: `u` relaxes faster than `z`.
    Above,
    One,
    /// `α ∈ (0, 1)`: `z` relaxes faster than `u`.
    Below,
}

/// Exponents within this distance of 1 are treated as `α = 1`.
pub const ALPHA_ONE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub eps: f64,
    pub alpha: f64,
}

impl RateParams {
    pub fn new(eps: f64, alpha: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!("eps must be positive, got {eps}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { eps, alpha })
    }

    pub fn regime(&self) -> AlphaRegime {
        alpha_regime(self.alpha)
    }

    /// Viscosity of `u`, `ε^α`.
    pub fn eps_u(&self) -> f64 {
        self.eps.powf(self.alpha)
    }

    /// Slowest relaxation time scale, `max(ε, ε^α)`.
    pub fn slow_scale(&self) -> f64 {
        self.eps.max(self.eps_u())
    }
}

pub fn alpha_regime(alpha: f64) -> AlphaRegime {
    if (alpha - 1.0).abs() <= ALPHA_ONE_TOL {
        AlphaRegime::One
    } else if alpha > 1.0 {
        AlphaRegime::Above
    } else {
        AlphaRegime::Below
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Largest accepted `|q_{k+1} − q_k|`.
    pub delta_max: f64,
    /// Relative tolerance of the implicit `u`-solve.
    pub newton_tol: f64,
    /// Largest accepted residual of the `z`-inclusion at the new state.
    pub incl_tol: f64,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            h0: 1e-6,
            h_min: 1e-16,
            h_max: 1e-2,
            delta_max: 1e-3,
            newton_tol: 1e-12,
            incl_tol: 1e-2,
            max_steps: 20_000_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.h_min > 0.0
            && self.h_min <= self.h0
            && self.h0 <= self.h_max
            && self.delta_max > 0.0
            && self.newton_tol > 0.0
            && self.incl_tol > 0.0
            && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid solver configuration {self:?}")))
        }
    }

    /// Same configuration with `h0`, `h_max` and `delta_max` multiplied by `f`.
    pub fn refined(&self, f: f64) -> Self {
        Self {
            h0: (self.h0 * f).max(self.h_min),
            h_max: self.h_max * f,
            delta_max: self.delta_max * f,
            ..self.clone()
        }
    }
}

/// One sample of a trajectory. `v` is the difference quotient of the step
/// leaving this node (the last node repeats the previous one).
#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub t: f64,
    pub q: State,
    pub v: State,
    pub e: f64,
    pub dt_e: f64,
    pub du_e: DVector<f64>,
    pub dz_e: DVector<f64>,
    /// Length of the step leaving this node, 0 at the last node.
    pub h: f64,
    /// Inclusion residual of the step that produced this node.
    pub incl_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dims: Dims,
    pub nodes: Vec<Node>,
}

/// Integrands of the energy-dissipation identity at a node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Terms {
    pub r0: f64,
    /// `ε V_z(q, z′)`
    pub vz: f64,
    /// `ε^α V_u(q, u′)`
    pub vu: f64,
    /// `W_z*(q, −D_zE) / ε`
    pub wz_dual: f64,
    /// `V_u*(q, −D_uE) / ε^α`
    pub vu_dual: f64,
}

impl Terms {
    pub fn primal(&self) -> f64 {
        self.r0 + self.vz + self.vu
    }

    pub fn dual(&self) -> f64 {
        self.wz_dual + self.vu_dual
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDiag {
    pub dq: f64,
    pub newton_iters: usize,
    pub newton_residual: f64,
    pub incl_residual: f64,
}

const NEWTON_MAX_ITER: usize = 50;

fn positive_part(h: &DMatrix<f64>) -> DMatrix<f64> {
    if h.nrows() == 1 {
        return DMatrix::from_element(1, 1, h[(0, 0)].max(0.0));
    }
    let sym = 0.5 * (h + h.transpose());
    let eig = sym.symmetric_eigen();
    let d = eig.eigenvalues.map(|x| x.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

fn solve_general(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    match solve_spd(a, b) {
        Ok(x) => Ok(x),
        Err(_) => a.clone().lu().solve(b).ok_or(Error::Singular {
            condition: crate::potentials::condition_number(a),
        }),
    }
}

/// One linearly implicit step of length `h` from `(t, q)`.
///
/// The `z`-update solves the inclusion with the implicit response of `u`
/// eliminated to first order. With `c = ε^α/h`, `S = c V_u + H_uu` and all
/// derivatives at `(t + h, q)`,
///
/// ```text
/// 0 ∈ ∂R₀(q, v) + (ε V_z + h H⁺) v + D_zE − H_zu S⁻¹ D_uE,
/// H = H_zz − H_zu S⁻¹ H_uz,
/// ```
///
/// where `H⁺` is the positive part of `H`, and `z⁺ = z + h v`. The
/// `u`-update then solves `ε^α V_u (u⁺ − u)/h + D_uE(t + h, u⁺, z⁺) = 0` by
/// Newton. For quadratic energies this is the fully implicit Euler step.
pub fn step(
    model: &dyn EnergyModel,
    pot: &Potentials,
    params: &RateParams,
    t: f64,
    q: &State,
    h: f64,
    newton_tol: f64,
) -> Result<(State, StepDiag)> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step size must be positive, got {h}")));
    }
    if !q.is_finite() {
        return Err(Error::Newton {
            t,
            residual: f64::NAN,
            last: q.u.iter().copied().collect(),
        });
    }
    let th = t + h;
    let c = params.eps_u() / h;
    let vu = pot.vu.matrix(q);

    let du0 = model.du(th, q);
    let huz = model.d2uz(th, q);
    let s = &vu * c + model.d2uu(th, q);
    let y = solve_general(&s, &du0)?;
    let mut x = DMatrix::zeros(huz.nrows(), huz.ncols());
    for j in 0..huz.ncols() {
        x.set_column(j, &solve_general(&s, &huz.column(j).into_owned())?);
    }
    let g = model.dz(th, q) - huz.transpose() * &y;
    let heff = model.d2zz(th, q) - huz.transpose() * &x;
    let a = pot.vz.matrix(q) * params.eps + positive_part(&heff) * h;
    let v = pot.prox_with(q, &g, &a)?;
    let dz = &v * h;
    let z = &q.z + &dz;

    let mut u = &q.u - &y - &x * &dz;
    let mut iters = 0;
    let f = |u: &DVector<f64>| -> DVector<f64> { &vu * (u - &q.u) * c + model.du(th, &State::new(u.clone(), z.clone())) };
    let mut r = f(&u);
    // The inertial term is only known to roundoff relative to c·|V_u|·|u|.
    let scale = 1.0 + du0.norm() + c * vu.norm() * q.u.norm().max(u.norm());
    while !(r.norm() <= newton_tol * scale) {
        if iters == NEWTON_MAX_ITER || !r.norm().is_finite() {
            return Err(Error::Newton {
                t: th,
                residual: r.norm(),
                last: u.iter().copied().collect(),
            });
        }
        let qs = State::new(u.clone(), z.clone());
        let jac = &vu * c + model.d2uu(th, &qs);
        u -= solve_general(&jac, &r)?;
        r = f(&u);
        iters += 1;
    }
    let newton_residual = r.norm() / scale;

    let next = State::new(u, z);
    if !next.is_finite() {
        return Err(Error::Model { t: th, q: next.to_vec() });
    }
    let zeta = -(pot.vz.matrix(&next) * &v) * params.eps - model.dz(th, &next);
    let incl_residual = pot.subdiff_residual(&next, &v, &zeta)?;
    let dq = next.sub(q).norm();
    Ok((
        next,
        StepDiag {
            dq,
            newton_iters: iters,
            newton_residual,
            incl_residual,
        },
    ))
}

fn node_at(model: &dyn EnergyModel, t: f64, q: State, incl_residual: f64) -> Result<Node> {
    let ev = crate::energy::eval_energy(model, t, &q)?;
    let dims = q.dims();
    Ok(Node {
        t,
        v: State::zeros(dims),
        q,
        e: ev.e,
        dt_e: ev.dt,
        du_e: ev.du,
        dz_e: ev.dz,
        h: 0.0,
        incl_residual,
    })
}

/// Integrate from `(t0, q0)` to `t_end`.
pub fn integrate(
    model: &dyn EnergyModel,
    pot: &Potentials,
    params: &RateParams,
    cfg: &SolverConfig,
    t0: f64,
    t_end: f64,
    q0: &State,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(t0 < t_end) {
        return Err(Error::Config(format!("empty time interval [{t0}, {t_end}]")));
    }
    if !q0.is_finite() {
        return Err(Error::Config("initial state is not finite".into()));
    }
    if q0.dims() != model.dims() {
        return Err(Error::Config(format!(
            "initial state has dims {:?}, model '{}' expects {:?}",
            q0.dims(),
            model.name(),
            model.dims()
        )));
    }
    let dims = q0.dims();
    let mut traj = Trajectory {
        dims,
        nodes: vec![node_at(model, t0, q0.clone(), 0.0)?],
    };
    let mut t = t0;
    let mut q = q0.clone();
    let mut h = cfg.h0;
    let mut streak = 0usize;
    let end_tol = 1e-12 * (1.0 + t_end.abs());
    while t_end - t > end_tol {
        if traj.nodes.len() > cfg.max_steps {
            return Err(Error::IterationLimit {
                what: "time integration",
                iterations: cfg.max_steps,
                residual: t_end - t,
            });
        }
        let hs = h.min(t_end - t);
        let attempt = step(model, pot, params, t, &q, hs, cfg.newton_tol);
        let accepted = match attempt {
            Ok((next, diag)) if diag.dq <= cfg.delta_max && diag.incl_residual <= cfg.incl_tol => Some((next, diag)),
            Ok(_) => None,
            Err(e) if e.is_numerical() => None,
            Err(e) => return Err(e),
        };
        match accepted {
            Some((next, diag)) => {
                let t_next = if t_end - (t + hs) <= end_tol { t_end } else { t + hs };
                let last = traj.nodes.last_mut().expect("nonempty");
                last.h = t_next - t;
                last.v = next.sub(&q).scale(1.0 / last.h);
                traj.nodes.push(node_at(model, t_next, next.clone(), diag.incl_residual)?);
                t = t_next;
                q = next;
                streak += 1;
                if streak >= 5 {
                    h = (h * 1.5).min(cfg.h_max);
                    streak = 0;
                }
            }
            None => {
                h = hs * 0.5;
                streak = 0;
                if h < cfg.h_min {
                    let n = traj.nodes.len();
                    if n >= 2 {
                        let v = traj.nodes[n - 2].v.clone();
                        traj.nodes[n - 1].v = v;
                    }
                    return Err(Error::StepUnderflow {
                        t,
                        h_min: cfg.h_min,
                        partial: Box::new(traj),
                    });
                }
            }
        }
    }
    let n = traj.nodes.len();
    if n >= 2 {
        let v = traj.nodes[n - 2].v.clone();
        traj.nodes[n - 1].v = v;
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyBalance {
    pub absolute: f64,
    pub relative: f64,
    pub dissipation: f64,
    pub power: f64,
    pub energy_start: f64,
    pub energy_end: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Apriori {
    pub sup_e: f64,
    pub sup_q: f64,
    pub total_var_z: f64,
    pub total_var_u: f64,
}

/// A maximal run of fast steps, i.e. a resolved jump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JumpInterval {
    pub k_start: usize,
    pub k_end: usize,
    pub t_start: f64,
    pub t_end: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn last(&self) -> &Node {
        self.nodes.last().expect("nonempty trajectory")
    }

    pub fn times(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.t).collect()
    }

    /// Piecewise-linear interpolation of `q` at time `t` (clamped).
    pub fn state_at(&self, t: f64) -> State {
        let nodes = &self.nodes;
        if t <= nodes[0].t {
            return nodes[0].q.clone();
        }
        if t >= self.last().t {
            return self.last().q.clone();
        }
        let k = nodes.partition_point(|n| n.t <= t) - 1;
        let (a, b) = (&nodes[k], &nodes[k + 1]);
        let w = (t - a.t) / (b.t - a.t);
        a.q.add_scaled(&b.q.sub(&a.q), w)
    }

    /// Integrands of the energy identity at every node.
    pub fn dissipation_terms(&self, pot: &Potentials, params: &RateParams) -> Result<Vec<Terms>> {
        let epu = params.eps_u();
        self.nodes
            .iter()
            .map(|n| {
                Ok(Terms {
                    r0: pot.eval_r0(&n.q, &n.v.z)?,
                    vz: params.eps * pot.eval_vz(&n.q, &n.v.z),
                    vu: epu * pot.eval_vu(&n.q, &n.v.u),
                    wz_dual: pot.conj_wz(&n.q, &(-&n.dz_e))? / params.eps,
                    vu_dual: pot.conj_vu(&n.q, &(-&n.du_e))? / epu,
                })
            })
            .collect()
    }

    /// Residual of the discrete energy identity on `[t_{k1}, t_{k2}]`.
    ///
    /// Velocity terms are piecewise constant on each step and integrated
    /// exactly; force terms and `∂ₜE` use the trapezoidal rule.
    pub fn energy_balance_residual(&self, pot: &Potentials, params: &RateParams, k1: usize, k2: usize) -> Result<EnergyBalance> {
        if k1 > k2 || k2 >= self.nodes.len() {
            return Err(Error::Domain(format!("invalid index range [{k1}, {k2}]")));
        }
        let terms = self.dissipation_terms(pot, params)?;
        let mut diss = 0.0;
        let mut power = 0.0;
        for k in k1..k2 {
            let h = self.nodes[k + 1].t - self.nodes[k].t;
            diss += h * terms[k].primal() + 0.5 * h * (terms[k].dual() + terms[k + 1].dual());
            power += 0.5 * h * (self.nodes[k].dt_e + self.nodes[k + 1].dt_e);
        }
        let (e1, e2) = (self.nodes[k1].e, self.nodes[k2].e);
        let absolute = (e2 + diss - e1 - power).abs();
        let relative = if diss > 0.0 { absolute / diss } else { absolute };
        Ok(EnergyBalance {
            absolute,
            relative,
            dissipation: diss,
            power,
            energy_start: e1,
            energy_end: e2,
        })
    }

    pub fn apriori_diagnostics(&self) -> Apriori {
        let mut out = Apriori {
            sup_e: f64::NEG_INFINITY,
            sup_q: 0.0,
            total_var_z: 0.0,
            total_var_u: 0.0,
        };
        for (k, n) in self.nodes.iter().enumerate() {
            out.sup_e = out.sup_e.max(n.e);
            out.sup_q = out.sup_q.max(n.q.norm());
            if k > 0 {
                let p = &self.nodes[k - 1].q;
                out.total_var_u += (&n.q.u - &p.u).norm();
                out.total_var_z += (&n.q.z - &p.z).norm();
            }
        }
        out
    }

    /// Maximal runs of steps with speed `|Δq|/h ≥ speed`, merged when
    /// separated by less than `gap` in time.
    pub fn jump_intervals(&self, speed: f64, gap: f64) -> Vec<JumpInterval> {
        let mut out: Vec<JumpInterval> = Vec::new();
        for k in 0..self.nodes.len().saturating_sub(1) {
            let n = &self.nodes[k];
            if n.h > 0.0 && n.v.norm() >= speed {
                let t_next = self.nodes[k + 1].t;
                match out.last_mut() {
                    Some(j) if n.t - j.t_end <= gap => {
                        j.k_end = k + 1;
                        j.t_end = t_next;
                    }
                    _ => out.push(JumpInterval {
                        k_start: k,
                        k_end: k + 1,
                        t_start: n.t,
                        t_end: t_next,
                    }),
                }
            }
        }
        out
    }

    /// Default jump detection: speed above `0.1 / max(ε, ε^α)`, runs merged
    /// across gaps shorter than `max(ε, ε^α)`.
    pub fn jumps(&self, params: &RateParams) -> Vec<JumpInterval> {
        let s = params.slow_scale();
        self.jump_intervals(0.1 / s, s)
    }

    /// Bounding box of the samples.
    pub fn bounding_box(&self) -> Result<SamplingBox> {
        let k = self.dims.total();
        let mut lo = vec![f64::INFINITY; k];
        let mut hi = vec![f64::NEG_INFINITY; k];
        for n in &self.nodes {
            for (i, x) in n.q.to_vec().into_iter().enumerate() {
                lo[i] = lo[i].min(x);
                hi[i] = hi[i].max(x);
            }
        }
        for i in 0..k {
            if hi[i] - lo[i] < 1e-9 {
                lo[i] -= 0.5;
                hi[i] += 0.5;
            }
        }
        SamplingBox::new((self.first().t, self.last().t), lo, hi, self.dims)
    }

    pub fn header(&self) -> Vec<String> {
        let (n, m) = (self.dims.n, self.dims.m);
        let mut h = vec!["t".to_string()];
        h.extend((1..=n).map(|i| format!("u_{i}")));
        h.extend((1..=m).map(|i| format!("z_{i}")));
        h.extend((1..=n).map(|i| format!("du_{i}")));
        h.extend((1..=m).map(|i| format!("dz_{i}")));
        h.push("E".into());
        h.push("dtE".into());
        h.extend((1..=n).map(|i| format!("DuE_{i}")));
        h.extend((1..=m).map(|i| format!("DzE_{i}")));
        h.push("h".into());
        h.push("incl_residual".into());
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(self.header())?;
        for n in &self.nodes {
            let mut row = vec![n.t];
            row.extend(n.q.u.iter());
            row.extend(n.q.z.iter());
            row.extend(n.v.u.iter());
            row.extend(n.v.z.iter());
            row.push(n.e);
            row.push(n.dt_e);
            row.extend(n.du_e.iter());
            row.extend(n.dz_e.iter());
            row.push(n.h);
            row.push(n.incl_residual);
            wr.write_record(row.iter().map(|x| fmt_f64(*x)))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let (header, rows) = read_table(r)?;
        let n = header.iter().filter(|h| h.starts_with("u_")).count();
        let m = header.iter().filter(|h| h.starts_with("z_")).count();
        let dims = Dims::new(n, m);
        let probe = Trajectory { dims, nodes: vec![] };
        if header != probe.header() {
            return Err(Error::Parse {
                line: 1,
                message: format!("unexpected trajectory header {header:?}"),
            });
        }
        let mut nodes = Vec::with_capacity(rows.len());
        for (line, row) in rows {
            let mut it = row.into_iter();
            let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).collect() };
            let t = take(1)[0];
            let u = take(n);
            let z = take(m);
            let du = take(n);
            let dz = take(m);
            let e = take(1)[0];
            let dt_e = take(1)[0];
            let du_e = take(n);
            let dz_e = take(m);
            let h = take(1)[0];
            let incl = take(1)[0];
            if let Some(prev) = nodes.last() {
                let prev: &Node = prev;
                if !(t > prev.t) {
                    return Err(Error::Parse {
                        line,
                        message: "times are not strictly increasing".into(),
                    });
                }
            }
            nodes.push(Node {
                t,
                q: State::from_slices(&u, &z),
                v: State::from_slices(&du, &dz),
                e,
                dt_e,
                du_e: DVector::from_vec(du_e),
                dz_e: DVector::from_vec(dz_e),
                h,
                incl_residual: incl,
            });
        }
        if nodes.is_empty() {
            return Err(Error::Parse {
                line: 2,
                message: "no data rows".into(),
            });
        }
        Ok(Trajectory { dims, nodes })
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Numeric CSV rows tagged with their 1-based line number.
pub type Rows = Vec<(u64, Vec<f64>)>;

/// Read a headed numeric CSV, returning the header and `(line, values)` rows.
pub fn read_table<R: Read>(r: R) -> Result<(Vec<String>, Rows)> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let vals = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    message: format!("bad number '{s}': {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, vals));
    }
    Ok((header, rows))
}

/// `(E₀ + shift) e^{c₁ T} − shift`, the Gronwall bound on `sup E`.
pub fn gronwall_bound(e0: f64, shift: f64, c1: f64, duration: f64) -> f64 {
    (e0 + shift) * (c1 * duration).exp() - shift
}

/// `|D_uE(t₀, q₀)| / ε^α`, bounded uniformly in `ε` for well-prepared data.
pub fn well_prepared_ratio(model: &dyn EnergyModel, params: &RateParams, t0: f64, q0: &State) -> f64 {
    model.du(t0, q0).norm() / params.eps_u()
}
