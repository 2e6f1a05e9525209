//! Switching parameters `(θ_u, θ_z)`, pointwise regime labels, curve
//! segmentation and the relaxation structure for `α > 1`.

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize, Serializer};

use crate::energy::{equilibrium_map, EnergyModel};
use crate::error::Result;
use crate::exec::Exec;
use crate::mfunctional::{eval_M0, gap_scale, ExtendedValue, Gates, MArgs};
use crate::potentials::Potentials;
use crate::reparam::ParameterizedCurve;
use crate::solver::{alpha_regime, AlphaRegime};
use crate::state::State;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegimeLabel {
    EuRz,
    VuBz,
    EuVz,
    VuVz,
    BuVz,
    VuRz,
    Stationary,
    Unclassified,
}

impl RegimeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeLabel::EuRz => "E_uR_z",
            RegimeLabel::VuBz => "V_uB_z",
            RegimeLabel::EuVz => "E_uV_z",
            RegimeLabel::VuVz => "V_uV_z",
            RegimeLabel::BuVz => "B_uV_z",
            RegimeLabel::VuRz => "V_uR_z",
            RegimeLabel::Stationary => "Stationary",
            RegimeLabel::Unclassified => "Unclassified",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            RegimeLabel::EuRz,
            RegimeLabel::VuBz,
            RegimeLabel::EuVz,
            RegimeLabel::VuVz,
            RegimeLabel::BuVz,
            RegimeLabel::VuRz,
            RegimeLabel::Stationary,
            RegimeLabel::Unclassified,
        ]
        .into_iter()
        .find(|l| l.as_str() == s)
    }

    /// Labels of the contact set for this `α`, besides `E_uR_z`.
    pub fn fast_labels(alpha: f64) -> &'static [RegimeLabel] {
        match alpha_regime(alpha) {
            AlphaRegime::Above => &[RegimeLabel::VuBz, RegimeLabel::EuVz],
            AlphaRegime::One => &[RegimeLabel::VuVz],
            AlphaRegime::Below => &[RegimeLabel::BuVz, RegimeLabel::VuRz],
        }
    }

    pub fn admissible(self, alpha: f64) -> bool {
        matches!(self, RegimeLabel::EuRz | RegimeLabel::Stationary | RegimeLabel::Unclassified)
            || Self::fast_labels(alpha).contains(&self)
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for RegimeLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ThetaPair {
    pub theta_u: f64,
    pub theta_z: f64,
    pub residual_u: f64,
    pub residual_z: f64,
}

const TINY: f64 = 1e-300;

/// Relative violation of `θ V_u u′ = (1−θ) η`.
fn residual_u(vu_du: &DVector<f64>, eta: &DVector<f64>, theta: f64) -> f64 {
    let r = vu_du * theta - eta * (1.0 - theta);
    r.norm() / (vu_du.norm() + eta.norm() + TINY)
}

/// Least-squares `θ_u ∈ [0, 1]` for `θ V_u u′ = (1−θ) η`, with `θ = 0`
/// when both sides vanish.
pub fn recover_theta_u(pot: &Potentials, q: &State, du: &DVector<f64>, eta: &DVector<f64>) -> (f64, f64) {
    let a = pot.vu.matrix(q) * du;
    let sum = &a + eta;
    let den = sum.norm_squared();
    if den <= TINY {
        return (0.0, 0.0);
    }
    let theta = (eta.dot(&sum) / den).clamp(0.0, 1.0);
    (theta, residual_u(&a, eta, theta))
}

struct ZInclusion {
    k: crate::potentials::StableSet,
    vz_dz: DVector<f64>,
    dz: DVector<f64>,
    zeta: DVector<f64>,
    gate: f64,
    scale: f64,
}

impl ZInclusion {
    /// `gate` is absolute: components of `z′` at or below it count as zero.
    fn new(pot: &Potentials, q: &State, dz: &DVector<f64>, zeta: &DVector<f64>, gate: f64) -> Result<Self> {
        let k = pot.r0.stable_set(q)?;
        let vz_dz = pot.vz.matrix(q) * dz;
        let w = pot.r0.weights(q)?;
        let scale = vz_dz.norm() + zeta.norm() + w.norm() + TINY;
        Ok(Self {
            k,
            vz_dz,
            dz: dz.clone(),
            zeta: zeta.clone(),
            gate,
            scale,
        })
    }

    /// Relative distance of `(1−θ)ζ − θ V_z z′` to `(1−θ) ∂R₀(q, z′)`.
    fn residual(&self, theta: f64) -> f64 {
        let p = &self.zeta * (1.0 - theta) - &self.vz_dz * theta;
        let set = self.k.scaled(1.0 - theta);
        set.face_distance(&self.dz, &p, self.gate) / self.scale
    }
}

/// Minimize a convex function on `[0, 1]` by golden sections.
fn argmin_unit(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let mut best = (0.5 * (a + b), f(0.5 * (a + b)));
    for x in [0.0, 1.0] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Smallest `θ_z ∈ [0, 1]` whose relative residual is within `tol`; when
/// no `θ` qualifies, the least-residual one.
pub fn recover_theta_z(pot: &Potentials, q: &State, dz: &DVector<f64>, zeta: &DVector<f64>, tol: f64) -> Result<(f64, f64)> {
    let inc = ZInclusion::new(pot, q, dz, zeta, 1e-6 * dz.norm())?;
    Ok(smallest_admissible(|th| inc.residual(th), tol))
}

fn smallest_admissible(f: impl Fn(f64) -> f64, tol: f64) -> (f64, f64) {
    let r0 = f(0.0);
    if r0 <= tol {
        return (0.0, r0);
    }
    let (tmin, rmin) = argmin_unit(&f);
    if rmin > tol {
        return (tmin, rmin);
    }
    let (mut lo, mut hi) = (0.0, tmin);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi, f(hi))
}

/// Switching condition and the `α`-specific relation between `θ_u`, `θ_z`.
pub fn check_alpha_constraints(pair: &ThetaPair, tau: f64, alpha: f64, tol: f64) -> bool {
    let (tu, tz) = (pair.theta_u, pair.theta_z);
    let switching = tau * tu <= tol && tau * tz <= tol;
    let relation = match alpha_regime(alpha) {
        AlphaRegime::Above => tu * (1.0 - tz) <= tol,
        AlphaRegime::One => (tu - tz).abs() <= tol,
        AlphaRegime::Below => tz * (1.0 - tu) <= tol,
    };
    switching && relation
}

/// Tolerances of the pointwise classifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassifyTol {
    /// `t′ ≤ tau` counts as a jump.
    pub tau: f64,
    /// Accepted relative residual of the inclusions.
    pub residual: f64,
    /// Relative gate for vanishing velocity components.
    pub zero: f64,
}

impl Default for ClassifyTol {
    fn default() -> Self {
        Self {
            tau: 1e-3,
            residual: 1e-6,
            zero: 1e-6,
        }
    }
}

/// Assign the admissible regime whose inclusions hold with the smallest
/// residual. Jumps (`t′ ≤ tol.tau`) prefer the fast labels of `α`.
pub fn classify_point(
    pot: &Potentials,
    q: &State,
    tau: f64,
    dq: &State,
    xi: &State,
    alpha: f64,
    tol: &ClassifyTol,
) -> Result<(RegimeLabel, ThetaPair)> {
    let vu_du = pot.vu.matrix(q) * &dq.u;
    let eta = &xi.u;
    let zi = ZInclusion::new(pot, q, &dq.z, &xi.z, tol.zero * dq.norm())?;
    let ru = |th: f64| residual_u(&vu_du, eta, th);
    let rz = |th: f64| zi.residual(th);
    let (tu_free, _) = recover_theta_u(pot, q, &dq.u, eta);
    let (tz_free, _) = smallest_admissible(rz, 1e-10);
    let pair = |tu: f64, tz: f64| ThetaPair {
        theta_u: tu,
        theta_z: tz,
        residual_u: ru(tu),
        residual_z: rz(tz),
    };
    let candidate = |label: RegimeLabel| -> ThetaPair {
        match label {
            RegimeLabel::VuBz => pair(tu_free, 1.0),
            RegimeLabel::EuVz => pair(0.0, tz_free),
            RegimeLabel::BuVz => pair(1.0, tz_free),
            RegimeLabel::VuRz => pair(tu_free, 0.0),
            RegimeLabel::VuVz => {
                let (th, _) = argmin_unit(|th| ru(th) + rz(th));
                pair(th, th)
            }
            _ => pair(0.0, 0.0),
        }
    };
    let total = |p: &ThetaPair| p.residual_u + p.residual_z;
    let slow = candidate(RegimeLabel::EuRz);
    let qn = dq.norm();
    let slow_label = if qn <= tol.zero * (qn + tau) {
        RegimeLabel::Stationary
    } else {
        RegimeLabel::EuRz
    };
    if tau <= tol.tau {
        let best = RegimeLabel::fast_labels(alpha)
            .iter()
            .map(|&l| (l, candidate(l)))
            .min_by(|a, b| total(&a.1).total_cmp(&total(&b.1)));
        if let Some((label, p)) = best {
            if total(&p) <= tol.residual {
                return Ok((label, p));
            }
        }
    }
    if total(&slow) <= tol.residual {
        return Ok((slow_label, slow));
    }
    let fallback = if tau <= tol.tau {
        RegimeLabel::fast_labels(alpha)
            .iter()
            .map(|&l| candidate(l))
            .chain(std::iter::once(slow))
            .min_by(|a, b| total(a).total_cmp(&total(b)))
            .unwrap_or(slow)
    } else {
        slow
    };
    Ok((RegimeLabel::Unclassified, fallback))
}

/// Options for classifying whole curves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentOptions {
    /// `t′` threshold as a fraction of `max t′` over the curve.
    pub kappa_t: f64,
    pub residual: f64,
    pub zero: f64,
    pub min_run: usize,
    /// Relative zero gate used when evaluating `M₀` and the duality gap.
    pub gate_rho: f64,
    /// Accepted relative duality gap for contact.
    pub tol_gap: f64,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self {
            kappa_t: 0.05,
            residual: 0.1,
            zero: 1e-6,
            min_run: 5,
            gate_rho: 0.1,
            tol_gap: 0.1,
        }
    }
}

impl SegmentOptions {
    pub fn classify_tol(&self, curve: &ParameterizedCurve) -> ClassifyTol {
        ClassifyTol {
            tau: self.tau_threshold(curve),
            residual: self.residual,
            zero: self.zero,
        }
    }

    pub fn tau_threshold(&self, curve: &ParameterizedCurve) -> f64 {
        self.kappa_t * curve.dt.iter().copied().fold(0.0, f64::max)
    }

    pub fn gates(&self, curve: &ParameterizedCurve) -> Gates {
        Gates::relative(self.tau_threshold(curve), self.gate_rho)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeClass {
    pub s: f64,
    pub label: RegimeLabel,
    pub theta: ThetaPair,
    pub gap: ExtendedValue,
    pub relative_gap: f64,
    pub contact: bool,
}

/// Per-node labels with the duality gap evaluated under the same gates.
pub fn classify_nodes(
    curve: &ParameterizedCurve,
    model: &dyn EnergyModel,
    pot: &Potentials,
    alpha: f64,
    opts: &SegmentOptions,
    exec: Exec,
) -> Result<Vec<NodeClass>> {
    let tol = opts.classify_tol(curve);
    let gates = opts.gates(curve);
    exec.map_range(curve.len(), |j| {
        let args = MArgs::along(model, curve.t[j], &curve.q[j], curve.dt[j], &curve.dq[j])?;
        let (label, theta) = classify_point(pot, &args.q, args.tau, &args.dq, &args.xi, alpha, &tol)?;
        let gap = eval_M0(pot, &args, alpha, &gates)?.value.minus(args.pairing());
        let scale = gap_scale(pot, &args)?;
        let relative_gap = match gap {
            ExtendedValue::Finite(g) if scale > 0.0 => g / scale,
            ExtendedValue::Finite(g) => g,
            ExtendedValue::Infinite(_) => f64::INFINITY,
        };
        Ok(NodeClass {
            s: curve.s[j],
            label,
            theta,
            gap,
            relative_gap,
            contact: relative_gap <= opts.tol_gap,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeSegment {
    pub s_a: f64,
    pub s_b: f64,
    pub j_a: usize,
    pub j_b: usize,
    pub label: RegimeLabel,
    pub theta_u: f64,
    pub theta_z: f64,
    pub max_residual: f64,
}

/// Runs of equal labels as `(label, start, end_exclusive)`.
fn runs(labels: &[RegimeLabel]) -> Vec<(RegimeLabel, usize, usize)> {
    let mut out: Vec<(RegimeLabel, usize, usize)> = Vec::new();
    for (j, &l) in labels.iter().enumerate() {
        match out.last_mut() {
            Some(r) if r.0 == l => r.2 = j + 1,
            _ => out.push((l, j, j + 1)),
        }
    }
    out
}

/// Relabel runs shorter than `min_run` with a neighbouring label, shortest
/// runs first, preferring the longer neighbour.
pub fn min_run_filter(labels: &[RegimeLabel], min_run: usize) -> Vec<RegimeLabel> {
    let mut out = labels.to_vec();
    loop {
        let rs = runs(&out);
        if rs.len() <= 1 {
            return out;
        }
        let Some((i, _)) = rs
            .iter()
            .enumerate()
            .filter(|(_, r)| r.2 - r.1 < min_run)
            .min_by_key(|(_, r)| r.2 - r.1)
        else {
            return out;
        };
        let (_, a, b) = rs[i];
        let left = (i > 0).then(|| rs[i - 1]);
        let right = rs.get(i + 1).copied();
        let with = match (left, right) {
            (Some(l), Some(r)) => {
                if l.2 - l.1 >= r.2 - r.1 {
                    l.0
                } else {
                    r.0
                }
            }
            (Some(l), None) => l.0,
            (None, Some(r)) => r.0,
            (None, None) => return out,
        };
        for x in &mut out[a..b] {
            *x = with;
        }
    }
}

/// Filtered, merged segments of a classified curve. Stationary nodes count
/// as `E_uR_z`.
pub fn segment_nodes(curve: &ParameterizedCurve, nodes: &[NodeClass], min_run: usize) -> Vec<RegimeSegment> {
    let labels: Vec<RegimeLabel> = nodes
        .iter()
        .map(|n| match n.label {
            RegimeLabel::Stationary => RegimeLabel::EuRz,
            l => l,
        })
        .collect();
    let filtered = min_run_filter(&labels, min_run);
    runs(&filtered)
        .into_iter()
        .map(|(label, a, b)| {
            let k = (b - a) as f64;
            let slice = &nodes[a..b];
            RegimeSegment {
                s_a: curve.s[a],
                s_b: curve.s[(b).min(curve.len() - 1)],
                j_a: a,
                j_b: b - 1,
                label,
                theta_u: slice.iter().map(|n| n.theta.theta_u).sum::<f64>() / k,
                theta_z: slice.iter().map(|n| n.theta.theta_z).sum::<f64>() / k,
                max_residual: slice
                    .iter()
                    .map(|n| n.theta.residual_u + n.theta.residual_z)
                    .fold(0.0, f64::max),
            }
        })
        .collect()
}

pub fn segment_curve(
    curve: &ParameterizedCurve,
    model: &dyn EnergyModel,
    pot: &Potentials,
    alpha: f64,
    opts: &SegmentOptions,
    exec: Exec,
) -> Result<(Vec<RegimeSegment>, Vec<NodeClass>)> {
    let nodes = classify_nodes(curve, model, pot, alpha, opts, exec)?;
    Ok((segment_nodes(curve, &nodes, opts.min_run), nodes))
}

/// Fraction of nodes, outside bands of `band` nodes around segment
/// boundaries, where contact (`gap ≤ tol_gap`) agrees with being classified.
pub fn contact_agreement(segments: &[RegimeSegment], nodes: &[NodeClass], band: usize) -> f64 {
    let n = nodes.len();
    let mut excluded = vec![false; n];
    for w in segments.windows(2) {
        let b = w[1].j_a;
        for x in excluded.iter_mut().take((b + band).min(n)).skip(b.saturating_sub(band)) {
            *x = true;
        }
    }
    let (mut agree, mut total) = (0usize, 0usize);
    for (node, ex) in nodes.iter().zip(&excluded) {
        if *ex {
            continue;
        }
        total += 1;
        if node.contact == (node.label != RegimeLabel::Unclassified) {
            agree += 1;
        }
    }
    if total == 0 {
        1.0
    } else {
        agree as f64 / total as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelaxationReport {
    pub applicable: bool,
    /// Index where `|D_uE| ≤ tol` starts for good, if it does.
    pub j_star: Option<usize>,
    pub s_star: Option<f64>,
    pub terminal_interval: bool,
    pub pre_max_dz: f64,
    pub pre_max_dt: f64,
    pub pre_u_variation: f64,
    pub post_max_equilibrium_gap: f64,
    pub reduced_residual: f64,
    pub reduced_violations: usize,
}

/// Check that `{s : |D_uE| ≤ tol}` is a terminal interval `[s*, S]`, that
/// only `u` moves before `s*`, and that afterwards `u = M(t, z)` and
/// `(t, z)` satisfies the reduced energy identity with `I(t, z)`.
pub fn verify_relaxation_structure(
    curve: &ParameterizedCurve,
    model: &dyn EnergyModel,
    pot: &Potentials,
    alpha: f64,
    tol: f64,
    gates: &Gates,
) -> Result<RelaxationReport> {
    let mut rep = RelaxationReport {
        applicable: alpha_regime(alpha) == AlphaRegime::Above,
        j_star: None,
        s_star: None,
        terminal_interval: false,
        pre_max_dz: 0.0,
        pre_max_dt: 0.0,
        pre_u_variation: 0.0,
        post_max_equilibrium_gap: 0.0,
        reduced_residual: f64::NAN,
        reduced_violations: 0,
    };
    if !rep.applicable {
        return Ok(rep);
    }
    let n = curve.len();
    let inside: Vec<bool> = (0..n)
        .map(|j| model.du(curve.t[j], &curve.q[j]).norm() <= tol)
        .collect();
    let j_star = (0..n).rev().take_while(|&j| inside[j]).last();
    let Some(js) = j_star else {
        rep.terminal_interval = inside.iter().all(|x| !x);
        return Ok(rep);
    };
    rep.j_star = Some(js);
    rep.s_star = Some(curve.s[js]);
    rep.terminal_interval = inside[..js].iter().all(|x| !x);
    let (t0, z0) = (curve.t[0], &curve.q[0].z);
    for j in 0..js {
        rep.pre_max_dz = rep.pre_max_dz.max((&curve.q[j].z - z0).norm());
        rep.pre_max_dt = rep.pre_max_dt.max((curve.t[j] - t0).abs());
        if j > 0 {
            rep.pre_u_variation += (&curve.q[j].u - &curve.q[j - 1].u).norm();
        }
    }
    let mut guess = curve.q[js].u.clone();
    let mut i_vals = Vec::with_capacity(n - js);
    let mut dens = Vec::with_capacity(n - js);
    let mut power = Vec::with_capacity(n - js);
    for j in js..n {
        let (t, q) = (curve.t[j], &curve.q[j]);
        let u_eq = equilibrium_map(model, t, &q.z, &guess)?;
        rep.post_max_equilibrium_gap = rep.post_max_equilibrium_gap.max((&q.u - &u_eq).norm());
        let qr = State::new(u_eq.clone(), q.z.clone());
        guess = u_eq;
        i_vals.push(model.energy(t, &qr));
        power.push(model.dt(t, &qr) * curve.dt[j]);
        let zero_u = DVector::zeros(q.u.len());
        let args = MArgs::new(
            qr.clone(),
            curve.dt[j].max(0.0),
            State::new(zero_u.clone(), curve.dq[j].z.clone()),
            State::new(zero_u, -model.dz(t, &qr)),
        )?;
        match eval_M0(pot, &args, alpha, gates)?.value {
            ExtendedValue::Finite(v) => dens.push(v),
            ExtendedValue::Infinite(_) => {
                rep.reduced_violations += 1;
                dens.push(0.0);
            }
        }
    }
    let mut diss = 0.0;
    let mut pw = 0.0;
    for k in 0..dens.len() - 1 {
        let ds = curve.s[js + k + 1] - curve.s[js + k];
        diss += 0.5 * ds * (dens[k] + dens[k + 1]);
        pw += 0.5 * ds * (power[k] + power[k + 1]);
    }
    rep.reduced_residual = (i_vals[i_vals.len() - 1] + diss - i_vals[0] - pw).abs();
    Ok(rep)
}
