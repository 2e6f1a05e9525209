//! Energy models `E(t, u, z)`, assumption diagnostics, the equilibrium map
//! `M(t, z)` and the reduced energy `I(t, z) = min_u E(t, u, z)`.

mod example1;
mod example2;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use example1::Example1;
pub use example2::{g as example2_g, Example2};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::potentials::solve_spd;
use crate::sampling::SamplingBox;
use crate::state::{Dims, State};

/// Declared structural constants; `None` means not declared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyConstants {
    /// `E(t, q) ≥ c0 |q|² − c0_hat`.
    pub c0: Option<f64>,
    pub c0_hat: Option<f64>,
    /// `|∂ₜE| ≤ c1 (E + shift)`.
    pub c1: Option<f64>,
    /// Uniform convexity modulus of `E(t, ·, z)`.
    pub mu: Option<f64>,
}

/// Step used by the default finite-difference Hessians.
const FD_HESS_STEP: f64 = 1e-6;

pub trait EnergyModel: Send + Sync {
    fn name(&self) -> &str;
    fn dims(&self) -> Dims;
    fn constants(&self) -> EnergyConstants;

    fn energy(&self, t: f64, q: &State) -> f64;
    fn dt(&self, t: f64, q: &State) -> f64;
    fn du(&self, t: f64, q: &State) -> DVector<f64>;
    fn dz(&self, t: f64, q: &State) -> DVector<f64>;

    fn d2uu(&self, t: f64, q: &State) -> DMatrix<f64> {
        let n = q.u.len();
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            let step = FD_HESS_STEP * (1.0 + q.u[j].abs());
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp.u[j] += step;
            qm.u[j] -= step;
            h.set_column(j, &((self.du(t, &qp) - self.du(t, &qm)) / (2.0 * step)));
        }
        h
    }

    /// `∂²E/∂u∂z`, an `n × m` matrix.
    fn d2uz(&self, t: f64, q: &State) -> DMatrix<f64> {
        let (n, m) = (q.u.len(), q.z.len());
        let mut h = DMatrix::zeros(n, m);
        for j in 0..m {
            let step = FD_HESS_STEP * (1.0 + q.z[j].abs());
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp.z[j] += step;
            qm.z[j] -= step;
            h.set_column(j, &((self.du(t, &qp) - self.du(t, &qm)) / (2.0 * step)));
        }
        h
    }

    fn d2zz(&self, t: f64, q: &State) -> DMatrix<f64> {
        let m = q.z.len();
        let mut h = DMatrix::zeros(m, m);
        for j in 0..m {
            let step = FD_HESS_STEP * (1.0 + q.z[j].abs());
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp.z[j] += step;
            qm.z[j] -= step;
            h.set_column(j, &((self.dz(t, &qp) - self.dz(t, &qm)) / (2.0 * step)));
        }
        0.5 * (&h + h.transpose())
    }
}

/// Look up a built-in model by its config name.
pub fn builtin(name: &str) -> Result<Arc<dyn EnergyModel>> {
    match name {
        "example1" => Ok(Arc::new(Example1)),
        "example2" => Ok(Arc::new(Example2::new())),
        other => Err(Error::Config(format!("unknown energy model '{other}'"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyEval {
    pub e: f64,
    pub dt: f64,
    pub du: DVector<f64>,
    pub dz: DVector<f64>,
}

pub fn eval_energy(model: &dyn EnergyModel, t: f64, q: &State) -> Result<EnergyEval> {
    let out = EnergyEval {
        e: model.energy(t, q),
        dt: model.dt(t, q),
        du: model.du(t, q),
        dz: model.dz(t, q),
    };
    let finite = out.e.is_finite()
        && out.dt.is_finite()
        && out.du.iter().chain(out.dz.iter()).all(|x| x.is_finite());
    if finite {
        Ok(out)
    } else {
        Err(Error::Model { t, q: q.to_vec() })
    }
}

#[derive(Clone, Debug)]
pub struct AssumptionOptions {
    pub samples: usize,
    pub seed: u64,
    /// Constant added to `E` before forming power-control ratios; `None`
    /// picks the shift making the sampled minimum equal to 1.
    pub shift: Option<f64>,
    /// Step of the central differences in the gradient-consistency check.
    pub fd_step: f64,
}

impl Default for AssumptionOptions {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 20_240_917,
            shift: None,
            fd_step: 1e-5,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub samples: usize,
    /// `min (E − c0|q|² + c0_hat)`; nonnegative when coercivity holds.
    pub coercivity_margin: Option<f64>,
    /// `min E / (1 + |q|²)`, reported whether or not constants are declared.
    pub coercivity_ratio: f64,
    pub shift: f64,
    /// `max |∂ₜE| / (E + shift)`.
    pub power_control_ratio: f64,
    /// Smallest eigenvalue of `D²_{uu}E` seen.
    pub convexity_modulus: f64,
    /// Largest spectral norm of `D²_{uz}E` seen.
    pub mixed_bound: f64,
    /// Worst relative mismatch between declared derivatives and central
    /// differences of `E`.
    pub gradient_consistency: f64,
    pub coercivity_pass: Option<bool>,
    pub power_control_pass: Option<bool>,
    pub convexity_pass: Option<bool>,
    pub gradient_pass: bool,
}

impl AssumptionReport {
    pub fn pass(&self) -> bool {
        self.gradient_pass
            && self.coercivity_pass != Some(false)
            && self.power_control_pass != Some(false)
            && self.convexity_pass != Some(false)
            && self.power_control_ratio.is_finite()
    }
}

/// Relative error of declared derivatives against central differences.
pub fn gradient_mismatch(model: &dyn EnergyModel, t: f64, q: &State, step: f64) -> f64 {
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1.0);
    let fd_t = (model.energy(t + step, q) - model.energy(t - step, q)) / (2.0 * step);
    let mut worst = rel(model.dt(t, q), fd_t);
    let du = model.du(t, q);
    for i in 0..q.u.len() {
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp.u[i] += step;
        qm.u[i] -= step;
        let fd = (model.energy(t, &qp) - model.energy(t, &qm)) / (2.0 * step);
        worst = worst.max(rel(du[i], fd));
    }
    let dz = model.dz(t, q);
    for i in 0..q.z.len() {
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp.z[i] += step;
        qm.z[i] -= step;
        let fd = (model.energy(t, &qp) - model.energy(t, &qm)) / (2.0 * step);
        worst = worst.max(rel(dz[i], fd));
    }
    worst
}

pub fn check_assumptions(
    model: &dyn EnergyModel,
    bx: &SamplingBox,
    opts: &AssumptionOptions,
    exec: Exec,
) -> AssumptionReport {
    let c = model.constants();
    struct Row {
        e: f64,
        dt: f64,
        qn2: f64,
        margin: Option<f64>,
        convex: f64,
        mixed: f64,
        grad: f64,
    }
    let rows = exec.map_range(opts.samples, |i| {
        let (t, q) = bx.sample(opts.seed, i);
        let e = model.energy(t, &q);
        let qn2 = q.norm().powi(2);
        let margin = match (c.c0, c.c0_hat) {
            (Some(c0), Some(ch)) => Some(e - c0 * qn2 + ch),
            _ => None,
        };
        let convex = model.d2uu(t, &q).symmetric_eigenvalues().min();
        let mixed = model.d2uz(t, &q).singular_values().max();
        Row {
            e,
            dt: model.dt(t, &q),
            qn2,
            margin,
            convex,
            mixed,
            grad: gradient_mismatch(model, t, &q, opts.fd_step),
        }
    });
    let emin = rows.iter().map(|r| r.e).fold(f64::INFINITY, f64::min);
    let shift = opts.shift.unwrap_or((1.0 - emin).max(0.0));
    let power = rows
        .iter()
        .map(|r| {
            let d = r.e + shift;
            if d > 0.0 {
                r.dt.abs() / d
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    let margin = rows
        .iter()
        .filter_map(|r| r.margin)
        .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.min(m))));
    let convex = rows.iter().map(|r| r.convex).fold(f64::INFINITY, f64::min);
    let grad = rows.iter().map(|r| r.grad).fold(0.0, f64::max);
    AssumptionReport {
        samples: opts.samples,
        coercivity_margin: margin,
        coercivity_ratio: rows.iter().map(|r| r.e / (1.0 + r.qn2)).fold(f64::INFINITY, f64::min),
        shift,
        power_control_ratio: power,
        convexity_modulus: convex,
        mixed_bound: rows.iter().map(|r| r.mixed).fold(0.0, f64::max),
        gradient_consistency: grad,
        coercivity_pass: margin.map(|m| m >= 0.0),
        power_control_pass: c.c1.map(|c1| power <= c1),
        convexity_pass: c.mu.map(|mu| convex >= mu * (1.0 - 1e-9)),
        gradient_pass: grad <= 1e-6,
    }
}

/// Tolerance on `|D_uE(t, M(t, z), z)|`.
pub const EQUILIBRIUM_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;

/// `u = M(t, z)`, the unique zero of `D_uE(t, ·, z)` for uniformly convex
/// models. Damped Newton with backtracking on `E(t, ·, z)`.
pub fn equilibrium_map(model: &dyn EnergyModel, t: f64, z: &DVector<f64>, u_guess: &DVector<f64>) -> Result<DVector<f64>> {
    if model.constants().mu.is_none_or(|mu| mu <= 0.0) {
        return Err(Error::Config(format!(
            "model '{}' declares no convexity modulus; M(t, z) is not defined",
            model.name()
        )));
    }
    let mut q = State::new(u_guess.clone(), z.clone());
    let mut g = model.du(t, &q);
    for _ in 0..NEWTON_MAX_ITER {
        let res = g.norm();
        if !res.is_finite() {
            break;
        }
        if res <= EQUILIBRIUM_TOL {
            return Ok(q.u);
        }
        let step = solve_spd(&model.d2uu(t, &q), &g)?;
        let e0 = model.energy(t, &q);
        let slope = g.dot(&step);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = State::new(&q.u - &step * lambda, q.z.clone());
            let e1 = model.energy(t, &trial);
            let g1 = model.du(t, &trial);
            // Armijo on E, or plain residual decrease once E stagnates at roundoff.
            if e1 <= e0 - 1e-4 * lambda * slope || g1.norm() < res {
                q = trial;
                g = g1;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let residual = g.norm();
    if residual <= EQUILIBRIUM_TOL {
        return Ok(q.u);
    }
    Err(Error::Newton {
        t,
        residual,
        last: q.u.iter().copied().collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reduced {
    pub i: f64,
    pub dz_i: DVector<f64>,
    pub u: DVector<f64>,
}

/// `I(t, z) = E(t, M(t, z), z)` and `D_zI(t, z) = D_zE(t, M(t, z), z)`.
pub fn reduced_i(model: &dyn EnergyModel, t: f64, z: &DVector<f64>, u_guess: &DVector<f64>) -> Result<Reduced> {
    let u = equilibrium_map(model, t, z, u_guess)?;
    let q = State::new(u.clone(), z.clone());
    Ok(Reduced {
        i: model.energy(t, &q),
        dz_i: model.dz(t, &q),
        u,
    })
}

/// `|D_uE|` at `q`, the distance from the equilibrium manifold in force units.
pub fn equilibrium_defect(model: &dyn EnergyModel, t: f64, q: &State) -> f64 {
    model.du(t, q).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;
    use proptest::prelude::*;

    fn grid_min_u(model: &dyn EnergyModel, t: f64, z: f64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        let (mut lo, mut hi) = (-20.0, 20.0);
        for _ in 0..30 {
            let n = 200;
            for i in 0..=n {
                let u = lo + (hi - lo) * i as f64 / n as f64;
                let e = model.energy(t, &State::scalar(u, z));
                if e < best.0 {
                    best = (e, u);
                }
            }
            let w = (hi - lo) / 20.0;
            lo = best.1 - w;
            hi = best.1 + w;
        }
        best.1
    }

    #[test]
    fn example1_values() {
        let m = Example1;
        let ev = eval_energy(&m, 0.0, &State::scalar(2.0, -1.5)).unwrap();
        assert_abs_diff_eq!(ev.e, 7.25, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.du[0], 3.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.dz[0], -5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.dt, -2.0, epsilon = 1e-15);
        let ev = eval_energy(&m, 0.3, &State::scalar(-0.2 + 0.3, -0.2)).unwrap();
        assert_abs_diff_eq!(ev.du[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn example2_du_matches_fd() {
        let m = Example2::new();
        let q = State::scalar(-2.4, -1.2);
        let du = m.du(-0.2, &q)[0];
        let h = 1e-5;
        let fd = (m.energy(-0.2, &State::scalar(-2.4 + h, -1.2)) - m.energy(-0.2, &State::scalar(-2.4 - h, -1.2))) / (2.0 * h);
        assert_abs_diff_eq!(du, fd, epsilon = 1e-7);
        // g(-1.2) = -2.112
        assert_abs_diff_eq!(du, -2.4 + 2.112 + 0.2, epsilon = 1e-12);
    }

    #[test]
    fn example1_assumptions() {
        let bx = SamplingBox::cube((0.0, 1.0), 3.0, Dims::new(1, 1)).unwrap();
        let opts = AssumptionOptions {
            samples: 2000,
            ..Default::default()
        };
        let r = check_assumptions(&Example1, &bx, &opts, Exec::Sequential);
        assert!(r.pass(), "{r:?}");
        assert_abs_diff_eq!(r.convexity_modulus, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.mixed_bound, 1.0, epsilon = 1e-6);
        assert_eq!(r.convexity_pass, Some(true));
    }

    #[test]
    fn example2_assumptions() {
        let bx = SamplingBox::cube((-0.2, 1.0), 3.0, Dims::new(1, 1)).unwrap();
        let opts = AssumptionOptions {
            samples: 2000,
            ..Default::default()
        };
        let r = check_assumptions(&Example2::new(), &bx, &opts, Exec::Parallel);
        assert!(r.power_control_ratio.is_finite() && r.power_control_ratio > 0.0);
        // independent recomputation of the sampled ratio
        let m = Example2::new();
        let mut emin = f64::INFINITY;
        let mut pts = Vec::new();
        for i in 0..opts.samples {
            let (t, q) = bx.sample(opts.seed, i);
            let e = m.energy(t, &q);
            emin = emin.min(e);
            pts.push((e, q.u[0].abs()));
        }
        let shift = (1.0 - emin).max(0.0);
        let ratio = pts.iter().map(|(e, du)| du / (e + shift)).fold(0.0, f64::max);
        assert_abs_diff_eq!(r.power_control_ratio, ratio, epsilon = 1e-12);
        assert!(r.gradient_pass, "{r:?}");
    }

    #[test]
    fn equilibrium_map_example1() {
        let m = Example1;
        let u = equilibrium_map(&m, 0.6, &dvector![-0.4], &dvector![5.0]).unwrap();
        assert_abs_diff_eq!(u[0], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(grid_min_u(&m, 0.6, -0.4), 0.2, epsilon = 1e-6);
        let u = equilibrium_map(&m, 0.6, &dvector![-0.4], &dvector![0.2]).unwrap();
        assert_eq!(u[0], 0.2);
    }

    #[test]
    fn equilibrium_map_example2_is_minimizer() {
        let m = Example2::new();
        for &(t, z) in &[(-0.2, -1.2), (0.5, 0.3), (1.0, 1.1)] {
            let u = equilibrium_map(&m, t, &dvector![z], &dvector![0.0]).unwrap();
            assert!(m.du(t, &State::scalar(u[0], z)).norm() <= EQUILIBRIUM_TOL);
            assert_abs_diff_eq!(u[0], grid_min_u(&m, t, z), epsilon = 1e-6);
        }
    }

    #[test]
    fn reduced_energy_example1() {
        let m = Example1;
        let r = reduced_i(&m, 0.0, &dvector![0.0], &dvector![1.0]).unwrap();
        assert_abs_diff_eq!(r.i, 0.0, epsilon = 1e-15);
        for &(t, z) in &[(0.2, -0.7), (0.9, 1.3), (0.5, 0.0)] {
            let r = reduced_i(&m, t, &dvector![z], &dvector![0.0]).unwrap();
            assert_abs_diff_eq!(r.i, 0.5 * z * z - t * z - 0.5 * t * t, epsilon = 1e-12);
            let ug = grid_min_u(&m, t, z);
            assert_abs_diff_eq!(r.i, m.energy(t, &State::scalar(ug, z)), epsilon = 1e-10);
            assert_abs_diff_eq!(r.dz_i[0], z - t, epsilon = 1e-12);
            let h = 1e-5;
            let ip = reduced_i(&m, t, &dvector![z + h], &dvector![0.0]).unwrap().i;
            let im = reduced_i(&m, t, &dvector![z - h], &dvector![0.0]).unwrap().i;
            assert_abs_diff_eq!(r.dz_i[0], (ip - im) / (2.0 * h), epsilon = 1e-6);
            // second differences of I: modulus 1
            let i0 = r.i;
            assert_abs_diff_eq!((ip - 2.0 * i0 + im) / (h * h), 1.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn envelope_example2() {
        let m = Example2::new();
        for &(t, z) in &[(0.1, -0.9), (0.7, 0.4)] {
            let r = reduced_i(&m, t, &dvector![z], &dvector![0.0]).unwrap();
            let h = 1e-5;
            let ip = reduced_i(&m, t, &dvector![z + h], &r.u).unwrap().i;
            let im = reduced_i(&m, t, &dvector![z - h], &r.u).unwrap().i;
            let fd = (ip - im) / (2.0 * h);
            assert!((r.dz_i[0] - fd).abs() <= 1e-6 * r.dz_i[0].abs().max(1.0));
        }
    }

    #[test]
    fn missing_modulus_is_config_error() {
        struct NoMu;
        impl EnergyModel for NoMu {
            fn name(&self) -> &str {
                "nomu"
            }
            fn dims(&self) -> Dims {
                Dims::new(1, 1)
            }
            fn constants(&self) -> EnergyConstants {
                EnergyConstants::default()
            }
            fn energy(&self, _: f64, q: &State) -> f64 {
                q.u[0].powi(2)
            }
            fn dt(&self, _: f64, _: &State) -> f64 {
                0.0
            }
            fn du(&self, _: f64, q: &State) -> DVector<f64> {
                dvector![2.0 * q.u[0]]
            }
            fn dz(&self, _: f64, _: &State) -> DVector<f64> {
                dvector![0.0]
            }
        }
        assert!(matches!(
            equilibrium_map(&NoMu, 0.0, &dvector![0.0], &dvector![1.0]),
            Err(Error::Config(_))
        ));
        // default FD Hessian
        assert_abs_diff_eq!(NoMu.d2uu(0.0, &State::scalar(0.3, 0.0))[(0, 0)], 2.0, epsilon = 1e-6);
    }

    #[test]
    fn builtin_lookup() {
        assert_eq!(builtin("example1").unwrap().name(), "example1");
        assert_eq!(builtin("example2").unwrap().name(), "example2");
        assert!(builtin("nope").is_err());
    }

    #[test]
    fn nonfinite_is_model_error() {
        let m = Example1;
        assert!(matches!(eval_energy(&m, 0.0, &State::scalar(f64::NAN, 0.0)), Err(Error::Model { .. })));
    }

    proptest! {
        #[test]
        fn gradients_match_finite_differences(t in 0.0..1.0f64, u in -3.0..3.0f64, z in -2.0..2.0f64) {
            let q = State::scalar(u, z);
            prop_assert!(gradient_mismatch(&Example1, t, &q, 1e-5) <= 1e-6);
            let m = Example2::new();
            let t2 = -0.2 + 1.2 * t;
            prop_assert!(gradient_mismatch(&m, t2, &q, 1e-5) <= 1e-6);
        }

        #[test]
        fn analytic_hessians_match_fd(t in -0.2..1.0f64, u in -3.0..3.0f64, z in -2.0..2.0f64) {
            let m = Example2::new();
            let q = State::scalar(u, z);
            let h = 1e-6;
            let fd_zz = (m.dz(t, &State::scalar(u, z + h))[0] - m.dz(t, &State::scalar(u, z - h))[0]) / (2.0 * h);
            let a = m.d2zz(t, &q)[(0, 0)];
            prop_assert!((a - fd_zz).abs() <= 1e-5 * a.abs().max(1.0));
            let fd_uz = (m.du(t, &State::scalar(u, z + h))[0] - m.du(t, &State::scalar(u, z - h))[0]) / (2.0 * h);
            let b = m.d2uz(t, &q)[(0, 0)];
            prop_assert!((b - fd_uz).abs() <= 1e-6 * b.abs().max(1.0));
        }
    }
}
