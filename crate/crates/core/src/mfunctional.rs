//! The rescaled viscous functional `M_ε`, its limit `M₀`, the duality gap
//! `M₀ − ⟨q′, ξ⟩`, recovery sequences and the parameterized energy identity.

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::potentials::Potentials;
use crate::reparam::ParameterizedCurve;
use crate::sampling::stream_rng;
use crate::solver::{alpha_regime, AlphaRegime};
use crate::state::{Dims, State};
use crate::stats::loglog_slope;

/// Arguments `(q, τ, q′, ξ)` with `ξ = (η, ζ)`. Along curves `ξ = −D_qE`.
#[derive(Clone, Debug, PartialEq)]
pub struct MArgs {
    pub q: State,
    pub tau: f64,
    pub dq: State,
    pub xi: State,
}

impl MArgs {
    pub fn new(q: State, tau: f64, dq: State, xi: State) -> Result<Self> {
        let finite = tau.is_finite() && q.is_finite() && dq.is_finite() && xi.is_finite();
        if !finite || tau < 0.0 {
            return Err(Error::Domain(format!("invalid M arguments (tau = {tau})")));
        }
        Ok(Self { q, tau, dq, xi })
    }

    /// Arguments at a curve point with forces `ξ = −D_qE(t, q)`.
    pub fn along(model: &dyn EnergyModel, t: f64, q: &State, tau: f64, dq: &State) -> Result<Self> {
        let xi = State::new(-model.du(t, q), -model.dz(t, q));
        Self::new(q.clone(), tau.max(0.0), dq.clone(), xi)
    }

    /// `⟨q′, ξ⟩ = ⟨u′, η⟩ + ⟨z′, ζ⟩`.
    pub fn pairing(&self) -> f64 {
        self.dq.dot(&self.xi)
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            q: self.q.clone(),
            tau: lambda * self.tau,
            dq: self.dq.scale(lambda),
            xi: self.xi.clone(),
        }
    }
}

/// The five potential values entering `M_ε` and `M₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Parts {
    pub r0: f64,
    pub vz: f64,
    pub vu: f64,
    pub wz_dual: f64,
    pub vu_dual: f64,
}

impl Parts {
    pub fn of(pot: &Potentials, a: &MArgs) -> Result<Self> {
        Ok(Self {
            r0: pot.eval_r0(&a.q, &a.dq.z)?,
            vz: pot.eval_vz(&a.q, &a.dq.z),
            vu: pot.eval_vu(&a.q, &a.dq.u),
            wz_dual: pot.conj_wz(&a.q, &a.xi.z)?,
            vu_dual: pot.conj_vu(&a.q, &a.xi.u)?,
        })
    }

    /// `M_ε − R₀`.
    pub fn reduced_eps(&self, tau: f64, eps: f64, alpha: f64) -> f64 {
        let ea = eps.powf(alpha);
        (eps / tau) * self.vz + (ea / tau) * self.vu + (tau / eps) * self.wz_dual + (tau / ea) * self.vu_dual
    }

    /// Roles of `u` and `z` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            r0: self.r0,
            vz: self.vu,
            vu: self.vz,
            wz_dual: self.vu_dual,
            vu_dual: self.wz_dual,
        }
    }
}

/// Thresholds deciding which quantities count as zero in the case split of
/// `M₀`. `τ ≤ tau` is treated as `τ = 0`; a primal value `V(q′)` is zero if
/// `V ≤ primal · (τ² + |q′|²)`; a dual value is zero if it is below
/// `dual · (|ξ|² + |w|²)` with `w` the dissipation weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gates {
    pub tau: f64,
    pub primal: f64,
    pub dual: f64,
}

impl Gates {
    pub const STRICT: Gates = Gates {
        tau: 0.0,
        primal: 1e-9,
        dual: 1e-9,
    };

    /// Gates for finite-ε curves: `|v| ≲ rho · scale` counts as zero.
    pub fn relative(tau: f64, rho: f64) -> Self {
        Self {
            tau,
            primal: 0.5 * rho * rho,
            dual: 0.5 * rho * rho,
        }
    }
}

impl Default for Gates {
    fn default() -> Self {
        Self::STRICT
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InfReason {
    /// `τ > 0` with `W_z*(ζ) + V_u*(η) > 0`.
    ForcesNotAdmissible,
    /// `τ = 0`, `α > 1`, `V_z(z′) · V_u*(η) > 0`.
    ZMovesUUnbalanced,
    /// `τ = 0`, `α < 1`, `V_u(u′) · W_z*(ζ) > 0`.
    UMovesZUnstable,
}

/// A value in `[0, ∞]` with an explicit reason for `∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtendedValue {
    Finite(f64),
    Infinite(InfReason),
}

impl ExtendedValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedValue::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtendedValue::Finite(v) => Some(*v),
            ExtendedValue::Infinite(_) => None,
        }
    }

    /// Lossy view for plotting and sorting; `∞` maps to `f64::INFINITY`.
    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn minus(&self, x: f64) -> ExtendedValue {
        match self {
            ExtendedValue::Finite(v) => ExtendedValue::Finite(v - x),
            inf => *inf,
        }
    }
}

/// Which formula produced an `M₀` value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    SlowAdmissible,
    SlowInfinite,
    FastZFrozen,
    FastUEquilibrated,
    FastUFrozen,
    FastZStable,
    FastCoupled,
    FastInfinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct M0Eval {
    pub value: ExtendedValue,
    pub branch: Branch,
    /// Smallest `|log₁₀(value / threshold)|` over the zero tests that decided
    /// the branch; small margins flag borderline nodes.
    pub margin: f64,
    pub parts: Parts,
}

/// `M_ε(q, τ, q′, ξ)` for `τ > 0`.
#[allow(non_snake_case)]
pub fn eval_Meps(pot: &Potentials, args: &MArgs, eps: f64, alpha: f64) -> Result<f64> {
    if !(args.tau > 0.0) {
        return Err(Error::Domain("M_eps needs tau > 0; use eval_M0 for the limit".into()));
    }
    if !(eps > 0.0 && alpha > 0.0) {
        return Err(Error::Domain(format!("invalid eps = {eps} or alpha = {alpha}")));
    }
    let p = Parts::of(pot, args)?;
    Ok(p.r0 + p.reduced_eps(args.tau, eps, alpha))
}

struct ZeroTest {
    value: f64,
    threshold: f64,
}

impl ZeroTest {
    fn zero(&self) -> bool {
        self.value <= self.threshold
    }

    fn margin(&self) -> f64 {
        if self.value <= 0.0 || self.threshold <= 0.0 {
            f64::INFINITY
        } else {
            (self.value / self.threshold).log10().abs()
        }
    }
}

/// `M₀(q, τ, q′, ξ)` for the given `α`.
///
/// Finite values are `R₀ + 2√V_u√V_u* + 2√V_z√W_z*` off the coupled case and
/// `R₀ + 2√(V_z+V_u)√(W_z*+V_u*)` for `α = 1`; in every branch the terms
/// that the case split declares zero vanish, so these agree with the
/// branch formulas while keeping `M₀ ≥ ⟨q′, ξ⟩` when a gate fires on a
/// small nonzero value.
#[allow(non_snake_case)]
pub fn eval_M0(pot: &Potentials, args: &MArgs, alpha: f64, gates: &Gates) -> Result<M0Eval> {
    let p = Parts::of(pot, args)?;
    let w = pot.r0.weights(&args.q)?;
    let pscale = args.tau * args.tau + args.dq.norm().powi(2);
    let dscale = args.xi.norm().powi(2) + w.norm_squared();
    let vz0 = ZeroTest {
        value: p.vz,
        threshold: gates.primal * pscale,
    };
    let vu0 = ZeroTest {
        value: p.vu,
        threshold: gates.primal * pscale,
    };
    let wz0 = ZeroTest {
        value: p.wz_dual,
        threshold: gates.dual * dscale,
    };
    let ud0 = ZeroTest {
        value: p.vu_dual,
        threshold: gates.dual * dscale,
    };
    let separable = p.r0 + 2.0 * (p.vu * p.vu_dual).sqrt() + 2.0 * (p.vz * p.wz_dual).sqrt();
    let coupled = p.r0 + 2.0 * ((p.vz + p.vu) * (p.wz_dual + p.vu_dual)).sqrt();
    let fin = ExtendedValue::Finite;
    let inf = ExtendedValue::Infinite;
    let (value, branch, margin) = if args.tau > gates.tau {
        let m = wz0.margin().min(ud0.margin());
        if wz0.zero() && ud0.zero() {
            (fin(separable), Branch::SlowAdmissible, m)
        } else {
            (inf(InfReason::ForcesNotAdmissible), Branch::SlowInfinite, m)
        }
    } else {
        match alpha_regime(alpha) {
            AlphaRegime::One => (fin(coupled), Branch::FastCoupled, f64::INFINITY),
            AlphaRegime::Above => {
                let m = vz0.margin().min(ud0.margin());
                if vz0.zero() {
                    (fin(separable), Branch::FastZFrozen, m)
                } else if ud0.zero() {
                    (fin(separable), Branch::FastUEquilibrated, m)
                } else {
                    (inf(InfReason::ZMovesUUnbalanced), Branch::FastInfinite, m)
                }
            }
            AlphaRegime::Below => {
                let m = vu0.margin().min(wz0.margin());
                if wz0.zero() {
                    (fin(separable), Branch::FastZStable, m)
                } else if vu0.zero() {
                    (fin(separable), Branch::FastUFrozen, m)
                } else {
                    (inf(InfReason::UMovesZUnstable), Branch::FastInfinite, m)
                }
            }
        }
    };
    Ok(M0Eval {
        value,
        branch,
        margin,
        parts: p,
    })
}

/// `M₀ − ⟨q′, ξ⟩`, nonnegative by Fenchel–Young.
pub fn duality_gap(pot: &Potentials, args: &MArgs, alpha: f64, gates: &Gates) -> Result<ExtendedValue> {
    Ok(eval_M0(pot, args, alpha, gates)?.value.minus(args.pairing()))
}

/// Force-times-velocity scale `|q′|(|ξ| + |w|)` used to normalize gaps.
pub fn gap_scale(pot: &Potentials, args: &MArgs) -> Result<f64> {
    let w = pot.r0.weights(&args.q)?;
    Ok(args.dq.norm() * (args.xi.norm() + w.norm()))
}

/// `τ_ε = √(εV_z + ε^α V_u) / √(W_z*/ε + V_u*/ε^α)`, the minimizer of
/// `τ ↦ M_ε`, which recovers `M₀` at `τ = 0` in all three regimes.
pub fn recovery_tau(pot: &Potentials, args: &MArgs, eps: f64, alpha: f64) -> Result<f64> {
    let p = Parts::of(pot, args)?;
    recovery_tau_parts(&p, eps, alpha)
}

fn recovery_tau_parts(p: &Parts, eps: f64, alpha: f64) -> Result<f64> {
    let ea = eps.powf(alpha);
    let den = p.wz_dual / eps + p.vu_dual / ea;
    if !(den > 0.0) {
        return Err(Error::Domain("zero dual terms: any tau recovers the limit".into()));
    }
    Ok(((eps * p.vz + ea * p.vu) / den).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaEntry {
    pub eps: f64,
    pub tau: f64,
    pub m_eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaReport {
    pub alpha: f64,
    pub tau: f64,
    pub m0: ExtendedValue,
    pub entries: Vec<GammaEntry>,
    /// Fitted exponent `p` in `|M_ε − M₀| ~ ε^p` (finite limit).
    pub rate: Option<f64>,
    /// Fitted exponent `p` in `M_ε − R₀ ~ ε^{−p}` (infinite limit).
    pub divergence_exponent: Option<f64>,
    pub expected_divergence: Option<f64>,
    pub pass: bool,
}

/// Pointwise Γ-limit check along a decreasing `ε` list: at `τ > 0` the
/// functional is evaluated at the given `τ`, at `τ = 0` at the recovery
/// value.
pub fn gamma_pointwise_check(pot: &Potentials, args: &MArgs, alpha: f64, eps_list: &[f64]) -> Result<GammaReport> {
    if eps_list.len() < 2 || eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list[eps_list.len() - 1] <= 0.0 {
        return Err(Error::Config("eps list must be positive and strictly decreasing".into()));
    }
    let m0 = eval_M0(pot, args, alpha, &Gates::STRICT)?;
    let p = m0.parts;
    let entries: Vec<GammaEntry> = eps_list
        .iter()
        .map(|&eps| {
            let tau = if args.tau > 0.0 {
                args.tau
            } else {
                recovery_tau_parts(&p, eps, alpha).unwrap_or_else(|_| eps.powf(0.5 * alpha.min(1.0)))
            };
            GammaEntry {
                eps,
                tau,
                m_eps: p.r0 + p.reduced_eps(tau, eps, alpha),
            }
        })
        .collect();
    let eps: Vec<f64> = entries.iter().map(|e| e.eps).collect();
    let mut report = GammaReport {
        alpha,
        tau: args.tau,
        m0: m0.value,
        entries,
        rate: None,
        divergence_exponent: None,
        expected_divergence: None,
        pass: false,
    };
    match m0.value {
        ExtendedValue::Finite(limit) => {
            let err: Vec<f64> = report.entries.iter().map(|e| (e.m_eps - limit).abs()).collect();
            report.rate = loglog_slope(&eps, &err);
            let scale = 1.0 + limit.abs();
            let tiny = 1e-12 * scale;
            let monotone = err.windows(2).all(|w| w[1] <= w[0] + tiny);
            let shrinks = err[err.len() - 1] < err[0] || err[0] <= tiny;
            report.pass = monotone && shrinks;
        }
        ExtendedValue::Infinite(_) => {
            let excess: Vec<f64> = report.entries.iter().map(|e| e.m_eps - p.r0).collect();
            report.divergence_exponent = loglog_slope(&eps, &excess).map(|s| -s);
            if args.tau == 0.0 && alpha_regime(alpha) != AlphaRegime::One {
                report.expected_divergence = Some(0.5 * (alpha - 1.0).abs());
            }
            let growing = report.entries.windows(2).all(|w| w[1].m_eps > w[0].m_eps);
            report.pass = growing && report.divergence_exponent.is_some_and(|x| x > 0.0);
        }
    }
    Ok(report)
}

/// `M₀`, gap and branch at one curve node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeM0 {
    pub s: f64,
    pub m0: ExtendedValue,
    pub gap: ExtendedValue,
    pub relative_gap: f64,
    pub branch: Branch,
    pub margin: f64,
}

pub fn curve_node_m0(
    curve: &ParameterizedCurve,
    model: &dyn EnergyModel,
    pot: &Potentials,
    alpha: f64,
    gates: &Gates,
    exec: Exec,
) -> Result<Vec<NodeM0>> {
    exec.map_range(curve.len(), |j| {
        let args = MArgs::along(model, curve.t[j], &curve.q[j], curve.dt[j], &curve.dq[j])?;
        let ev = eval_M0(pot, &args, alpha, gates)?;
        let gap = ev.value.minus(args.pairing());
        let scale = gap_scale(pot, &args)?;
        let relative_gap = match gap {
            ExtendedValue::Finite(g) if scale > 0.0 => g / scale,
            ExtendedValue::Finite(g) => g,
            ExtendedValue::Infinite(_) => f64::INFINITY,
        };
        Ok(NodeM0 {
            s: curve.s[j],
            m0: ev.value,
            gap,
            relative_gap,
            branch: ev.branch,
            margin: ev.margin,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamEnergyResidual {
    pub residual: f64,
    pub relative: f64,
    pub dissipation: f64,
    pub power: f64,
    pub energy_start: f64,
    pub energy_end: f64,
    /// Node indices where `M₀ = ∞`; excluded from the quadrature.
    pub violations: Vec<usize>,
}

/// Residual `|E(s₂) + ∫M₀ − E(s₁) − ∫∂ₜE t′|` of the parameterized energy
/// identity between node indices `j1 ≤ j2`, trapezoid rule on the nodes.
#[allow(clippy::too_many_arguments)]
pub fn parameterized_energy_residual(
    curve: &ParameterizedCurve,
    model: &dyn EnergyModel,
    pot: &Potentials,
    alpha: f64,
    j1: usize,
    j2: usize,
    gates: &Gates,
    exec: Exec,
) -> Result<ParamEnergyResidual> {
    if j1 > j2 || j2 >= curve.len() {
        return Err(Error::Domain(format!("invalid node range [{j1}, {j2}]")));
    }
    let m0 = curve_node_m0(curve, model, pot, alpha, gates, exec)?;
    let dens: Vec<f64> = m0.iter().map(|n| n.m0.finite().unwrap_or(0.0)).collect();
    let power_dens: Vec<f64> = (0..curve.len())
        .map(|j| model.dt(curve.t[j], &curve.q[j]) * curve.dt[j])
        .collect();
    let violations = (j1..=j2).filter(|&j| !m0[j].m0.is_finite()).collect();
    let dissipation = curve.integrate(&dens, j1, j2);
    let power = curve.integrate(&power_dens, j1, j2);
    let e1 = model.energy(curve.t[j1], &curve.q[j1]);
    let e2 = model.energy(curve.t[j2], &curve.q[j2]);
    let residual = (e2 + dissipation - e1 - power).abs();
    Ok(ParamEnergyResidual {
        residual,
        relative: if dissipation > 0.0 { residual / dissipation } else { residual },
        dissipation,
        power,
        energy_start: e1,
        energy_end: e2,
        violations,
    })
}

/// Node index range `[j1, j2]` covering parameters `[s1, s2]`.
pub fn index_range(curve: &ParameterizedCurve, s1: f64, s2: f64) -> (usize, usize) {
    let j1 = curve.s.partition_point(|s| *s < s1).min(curve.len() - 1);
    let j2 = curve.s.partition_point(|s| *s <= s2).saturating_sub(1).max(j1);
    (j1, j2)
}

/// Isotropic unit configuration in one dimension per variable.
pub fn unit_args(tau: f64, du: f64, dz: f64, eta: f64, zeta: f64) -> MArgs {
    MArgs {
        q: State::scalar(0.0, 0.0),
        tau,
        dq: State::scalar(du, dz),
        xi: State::new(DVector::from_element(1, eta), DVector::from_element(1, zeta)),
    }
}

/// The `i`-th random argument of a reproducible stream. Each of `τ`, the
/// velocity blocks and the force blocks is exactly zero with probability ¼
/// so that every branch of `M₀` is visited.
pub fn sample_args(dims: Dims, seed: u64, i: usize) -> MArgs {
    let mut rng = stream_rng(seed, i);
    let block = |len: usize, r: f64, rng: &mut rand_chacha::ChaCha8Rng| -> DVector<f64> {
        if rng.gen_bool(0.25) {
            DVector::zeros(len)
        } else {
            DVector::from_fn(len, |_, _| rng.gen_range(-r..=r))
        }
    };
    let q = State::new(block(dims.n, 2.0, &mut rng), block(dims.m, 2.0, &mut rng));
    let tau = if rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(0.0..=3.0) };
    let dq = State::new(block(dims.n, 3.0, &mut rng), block(dims.m, 3.0, &mut rng));
    let xi = State::new(block(dims.n, 3.0, &mut rng), block(dims.m, 3.0, &mut rng));
    MArgs { q, tau, dq, xi }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub alpha: f64,
    pub samples: usize,
    pub finite: usize,
    pub min_gap: f64,
    /// Largest `|M₀(λ·) − λM₀(·)| / (1 + |M₀(λ·)|)` over finite samples.
    pub max_homogeneity_error: f64,
    /// Samples whose branch changed under scaling.
    pub branch_changes: usize,
}

/// Nonnegativity of the gap and 1-homogeneity of `M₀` on random samples,
/// with strict gates.
pub fn property_suite(pot: &Potentials, dims: Dims, alpha: f64, samples: usize, seed: u64, exec: Exec) -> Result<PropertyReport> {
    let rows = exec.map_range(samples, |i| -> Result<(Option<f64>, f64, bool)> {
        let a = sample_args(dims, seed, i);
        let lambda = 10f64.powf(stream_rng(seed ^ 0x5eed, i).gen_range(-2.0..=2.0));
        let m = eval_M0(pot, &a, alpha, &Gates::STRICT)?;
        let ml = eval_M0(pot, &a.scaled(lambda), alpha, &Gates::STRICT)?;
        let gap = m.value.minus(a.pairing()).finite();
        let err = match (m.value, ml.value) {
            (ExtendedValue::Finite(x), ExtendedValue::Finite(y)) => (y - lambda * x).abs() / (1.0 + y.abs()),
            _ => 0.0,
        };
        Ok((gap, err, m.branch != ml.branch))
    });
    let mut report = PropertyReport {
        alpha,
        samples,
        finite: 0,
        min_gap: f64::INFINITY,
        max_homogeneity_error: 0.0,
        branch_changes: 0,
    };
    for row in rows {
        let (gap, err, changed) = row?;
        if let Some(g) = gap {
            report.finite += 1;
            report.min_gap = report.min_gap.min(g);
        }
        report.max_homogeneity_error = report.max_homogeneity_error.max(err);
        report.branch_changes += changed as usize;
    }
    Ok(report)
}

/// A named point of the canonical battery.
#[derive(Clone, Debug, PartialEq)]
pub struct BatteryPoint {
    pub name: String,
    pub alpha: f64,
    pub args: MArgs,
    /// Expected branch of `M₀`, when known.
    pub branch: Option<Branch>,
}

/// Twelve unit configurations covering every branch of `M₀` for
/// `α ∈ {2, 1, ½}`.
pub fn canonical_battery() -> Vec<BatteryPoint> {
    let p = |name: &str, alpha, a: (f64, f64, f64, f64, f64), branch| BatteryPoint {
        name: name.to_string(),
        alpha,
        args: unit_args(a.0, a.1, a.2, a.3, a.4),
        branch: Some(branch),
    };
    vec![
        p("slow admissible a=2", 2.0, (1.0, 0.5, 0.3, 0.0, 0.5), Branch::SlowAdmissible),
        p("slow admissible a=1/2", 0.5, (1.0, 0.5, 0.3, 0.0, 0.5), Branch::SlowAdmissible),
        p("slow infinite a=2", 2.0, (1.0, 0.5, 0.3, 0.4, 0.5), Branch::SlowInfinite),
        p("z frozen a=2", 2.0, (0.0, 1.0, 0.0, 1.0, 2.0), Branch::FastZFrozen),
        p("u equilibrated a=2", 2.0, (0.0, 0.0, 1.0, 0.0, 2.0), Branch::FastUEquilibrated),
        p("infinite a=2", 2.0, (0.0, 1.0, 1.0, 1.0, 0.0), Branch::FastInfinite),
        p("coupled a=1", 1.0, (0.0, 1.0, 1.0, 1.0, 2.0), Branch::FastCoupled),
        p("coupled z frozen a=1", 1.0, (0.0, 1.0, 0.0, 1.0, 0.5), Branch::FastCoupled),
        p("z stable a=1/2", 0.5, (0.0, 1.0, 0.5, 1.0, 1.0), Branch::FastZStable),
        p("u frozen a=1/2", 0.5, (0.0, 0.0, 1.0, 1.0, 2.0), Branch::FastUFrozen),
        p("infinite a=1/2", 0.5, (0.0, 1.0, 0.0, 1.0, 2.0), Branch::FastInfinite),
        p("slow infinite a=1", 1.0, (1.0, 1.0, 0.0, 1.0, 0.0), Branch::SlowInfinite),
    ]
}
