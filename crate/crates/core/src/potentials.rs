//! Dissipation potentials.
//!
//! `R₀(q, ·)` is a weighted ℓ¹ norm or an isotropic weighted Euclidean norm,
//! so its stable set `K(q) = ∂R₀(q, 0)` is a box or a ball. The viscous
//! potentials are quadratic, `V(q, v) = ½⟨V(q)v, v⟩` with SPD `V(q)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::sampling::SamplingBox;
use crate::state::State;

pub type WeightFn = Arc<dyn Fn(&State) -> DVector<f64> + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&State) -> DMatrix<f64> + Send + Sync>;

/// Stopping tolerance of the projected-gradient projection onto `K(q)`.
pub const PROJECTION_TOL: f64 = 1e-12;
const PROJECTION_MAX_ITER: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum R0Mode {
    /// `R₀(q, v) = Σ wᵢ(q)|vᵢ|`, stable set a box.
    L1,
    /// `R₀(q, v) = w(q)|v|`, stable set a ball.
    Isotropic,
}

#[derive(Clone)]
pub struct R0Spec {
    weights: WeightFn,
    mode: R0Mode,
    /// Declared `(C_{0,R}, C_{1,R})`.
    pub bounds: (f64, f64),
}

impl fmt::Debug for R0Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("R0Spec")
            .field("mode", &self.mode)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl R0Spec {
    pub fn new(mode: R0Mode, weights: WeightFn, bounds: (f64, f64)) -> Self {
        Self {
            weights,
            mode,
            bounds,
        }
    }

    pub fn l1(weights: Vec<f64>) -> Self {
        let lo = weights.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = weights.iter().copied().fold(0.0, f64::max);
        let w = DVector::from_vec(weights);
        let m = w.len() as f64;
        Self::new(R0Mode::L1, Arc::new(move |_| w.clone()), (lo, hi * m.sqrt()))
    }

    pub fn isotropic(weight: f64) -> Self {
        Self::new(
            R0Mode::Isotropic,
            Arc::new(move |_| DVector::from_element(1, weight)),
            (weight, weight),
        )
    }

    pub fn mode(&self) -> R0Mode {
        self.mode
    }

    /// Weights at `q`; all must be finite and strictly positive.
    pub fn weights(&self, q: &State) -> Result<DVector<f64>> {
        let w = (self.weights)(q);
        let expected = match self.mode {
            R0Mode::L1 => q.z.len(),
            R0Mode::Isotropic => 1,
        };
        if w.len() != expected {
            return Err(Error::Config(format!(
                "R0 weight vector has length {}, expected {expected}",
                w.len()
            )));
        }
        if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::Config(format!("nonpositive R0 weight {bad} at q = {:?}", q.to_vec())));
        }
        Ok(w)
    }

    pub fn stable_set(&self, q: &State) -> Result<StableSet> {
        let w = self.weights(q)?;
        Ok(match self.mode {
            R0Mode::L1 => StableSet::Box(w),
            R0Mode::Isotropic => StableSet::Ball(w[0]),
        })
    }
}

/// `K(q) = ∂R₀(q, 0)`.
#[derive(Clone, Debug, PartialEq)]
pub enum StableSet {
    Box(DVector<f64>),
    Ball(f64),
}

impl StableSet {
    /// Support function, which is `R₀(q, v)`.
    pub fn support(&self, v: &DVector<f64>) -> f64 {
        match self {
            StableSet::Box(w) => w.iter().zip(v.iter()).map(|(w, v)| w * v.abs()).sum(),
            StableSet::Ball(r) => r * v.norm(),
        }
    }

    /// Euclidean projection.
    pub fn project(&self, zeta: &DVector<f64>) -> DVector<f64> {
        match self {
            StableSet::Box(w) => DVector::from_iterator(
                zeta.len(),
                zeta.iter().zip(w.iter()).map(|(z, w)| z.clamp(-w, *w)),
            ),
            StableSet::Ball(r) => {
                let n = zeta.norm();
                if n <= *r {
                    zeta.clone()
                } else {
                    zeta * (r / n)
                }
            }
        }
    }

    pub fn distance(&self, zeta: &DVector<f64>) -> f64 {
        (zeta - self.project(zeta)).norm()
    }

    pub fn contains(&self, zeta: &DVector<f64>, tol: f64) -> bool {
        self.distance(zeta) <= tol
    }

    /// Distance from `p` to the face `∂R₀(q, v)` of the set. Components of
    /// `v` (or `|v|` for a ball) at or below `gate` count as zero.
    pub fn face_distance(&self, v: &DVector<f64>, p: &DVector<f64>, gate: f64) -> f64 {
        match self {
            StableSet::Box(w) => w
                .iter()
                .zip(v.iter())
                .zip(p.iter())
                .map(|((w, v), p)| {
                    let d = if v.abs() > gate {
                        p - w * v.signum()
                    } else {
                        (p.abs() - w).max(0.0)
                    };
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            StableSet::Ball(r) => {
                let vn = v.norm();
                if vn > gate {
                    (p - v * (r / vn)).norm()
                } else {
                    (p.norm() - r).max(0.0)
                }
            }
        }
    }

    /// The set scaled by `a ≥ 0`.
    pub fn scaled(&self, a: f64) -> StableSet {
        match self {
            StableSet::Box(w) => StableSet::Box(w * a),
            StableSet::Ball(r) => StableSet::Ball(r * a),
        }
    }
}

/// Quadratic potential `½⟨V(q)v, v⟩` with declared eigenvalue bounds of `V(q)`.
#[derive(Clone)]
pub struct QuadraticForm {
    matrix: MatrixFn,
    constant: bool,
    pub bounds: (f64, f64),
}

impl fmt::Debug for QuadraticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadraticForm")
            .field("constant", &self.constant)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl QuadraticForm {
    pub fn new(matrix: MatrixFn, constant: bool, bounds: (f64, f64)) -> Self {
        Self {
            matrix,
            constant,
            bounds,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(DMatrix::identity(dim, dim))
    }

    pub fn constant(mat: DMatrix<f64>) -> Self {
        let eig = mat.clone().symmetric_eigenvalues();
        let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(Arc::new(move |_| mat.clone()), true, (lo, hi))
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn matrix(&self, q: &State) -> DMatrix<f64> {
        (self.matrix)(q)
    }

    pub fn eval(&self, q: &State, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&(self.matrix(q) * v))
    }

    /// `V*(q, ξ) = ½⟨V(q)⁻¹ξ, ξ⟩`.
    pub fn conj(&self, q: &State, xi: &DVector<f64>) -> Result<f64> {
        let inv_xi = solve_spd(&self.matrix(q), xi)?;
        Ok(0.5 * xi.dot(&inv_xi))
    }
}

/// Solve `A x = b` for SPD `A`, reporting the condition number on failure.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() == 1 {
        let d = a[(0, 0)];
        if d > 0.0 && d.is_finite() {
            return Ok(b / d);
        }
        return Err(Error::Singular {
            condition: f64::INFINITY,
        });
    }
    match a.clone().cholesky() {
        Some(ch) => Ok(ch.solve(b)),
        None => Err(Error::Singular {
            condition: condition_number(a),
        }),
    }
}

pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let eig = a.clone().symmetric_eigenvalues();
    let lo = eig.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    let hi = eig.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// The triple `(R₀, V_u, V_z)`.
#[derive(Clone, Debug)]
pub struct Potentials {
    pub r0: R0Spec,
    pub vu: QuadraticForm,
    pub vz: QuadraticForm,
}

impl Potentials {
    pub fn new(r0: R0Spec, vu: QuadraticForm, vz: QuadraticForm) -> Self {
        Self { r0, vu, vz }
    }

    /// Unit weights and identity viscosities, as in both built-in examples.
    pub fn standard(n: usize, m: usize) -> Self {
        let r0 = if m == 1 {
            R0Spec::l1(vec![1.0])
        } else {
            R0Spec::l1(vec![1.0; m])
        };
        Self::new(r0, QuadraticForm::identity(n), QuadraticForm::identity(m))
    }

    pub fn eval_r0(&self, q: &State, v: &DVector<f64>) -> Result<f64> {
        Ok(self.r0.stable_set(q)?.support(v))
    }

    /// `ζ ∈ ∂R₀(q, v)` within `tol`, via `ζ ∈ K(q)` and `⟨ζ, v⟩ ≥ R₀(q, v)`.
    pub fn in_subdiff_r0(&self, q: &State, v: &DVector<f64>, zeta: &DVector<f64>, tol: f64) -> bool {
        let Ok(k) = self.r0.stable_set(q) else {
            return false;
        };
        k.contains(zeta, tol) && zeta.dot(v) >= k.support(v) - tol
    }

    /// Force-scaled violation of `ζ ∈ ∂R₀(q, v)`: distance of `ζ` to `K(q)`
    /// plus the normalized slack `(R₀(q, v) − ⟨ζ, v⟩)⁺ / |v|`.
    pub fn subdiff_residual(&self, q: &State, v: &DVector<f64>, zeta: &DVector<f64>) -> Result<f64> {
        let k = self.r0.stable_set(q)?;
        let slack = (k.support(v) - zeta.dot(v)).max(0.0);
        let vn = v.norm();
        let normalized = if vn > 0.0 { slack / vn } else { 0.0 };
        Ok(k.distance(zeta) + normalized)
    }

    pub fn eval_vu(&self, q: &State, v: &DVector<f64>) -> f64 {
        self.vu.eval(q, v)
    }

    pub fn eval_vz(&self, q: &State, v: &DVector<f64>) -> f64 {
        self.vz.eval(q, v)
    }

    pub fn conj_vu(&self, q: &State, eta: &DVector<f64>) -> Result<f64> {
        self.vu.conj(q, eta)
    }

    pub fn conj_vz(&self, q: &State, xi: &DVector<f64>) -> Result<f64> {
        self.vz.conj(q, xi)
    }

    /// Minimizer over `ω ∈ K(q)` of `½⟨V_z(q)⁻¹(ζ − ω), ζ − ω⟩`.
    pub fn project_k(&self, q: &State, zeta: &DVector<f64>) -> Result<DVector<f64>> {
        let k = self.r0.stable_set(q)?;
        project_in_metric(&k, &self.vz.matrix(q), zeta)
    }

    /// `W_z*(q, ζ) = min_{ω ∈ K(q)} V_z*(q, ζ − ω)`.
    pub fn conj_wz(&self, q: &State, zeta: &DVector<f64>) -> Result<f64> {
        let omega = self.project_k(q, zeta)?;
        self.vz.conj(q, &(zeta - omega))
    }

    /// Velocity `v` with `0 ∈ ∂R₀(q, v) + ε V_z(q) v + g`.
    pub fn prox_z(&self, q: &State, g: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("prox_z needs eps > 0, got {eps}")));
        }
        let a = self.vz.matrix(q) * eps;
        self.prox_with(q, g, &a)
    }

    /// Velocity `v` with `0 ∈ ∂R₀(q, v) + A v + g` for an SPD `A`.
    ///
    /// With `ζ = −g` the solution is `v = A⁻¹(ζ − ω)` where `ω` is the
    /// projection of `ζ` onto `K(q)` in the `A⁻¹` metric.
    pub fn prox_with(&self, q: &State, g: &DVector<f64>, a: &DMatrix<f64>) -> Result<DVector<f64>> {
        let k = self.r0.stable_set(q)?;
        let zeta = -g;
        let omega = project_in_metric(&k, a, &zeta)?;
        solve_spd(a, &(zeta - omega))
    }

    /// Sample the declared constants `C_{0,R}`, `C_{1,R}` and the
    /// eigenvalue bounds of `V_u`, `V_z`.
    pub fn check_declared(&self, bx: &SamplingBox, samples: usize, seed: u64, exec: Exec) -> PotentialCheck {
        let rows = exec.map_range(samples, |i| {
            let (_, q) = bx.sample(seed, i);
            let w = self.r0.weights(&q).ok();
            let (wlo, whi) = w
                .map(|w| {
                    let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = w.iter().copied().fold(0.0, f64::max);
                    let scale = match self.r0.mode {
                        R0Mode::L1 => (q.z.len() as f64).sqrt(),
                        R0Mode::Isotropic => 1.0,
                    };
                    (lo, hi * scale)
                })
                .unwrap_or((f64::NAN, f64::NAN));
            let eu = self.vu.matrix(&q).symmetric_eigenvalues();
            let ez = self.vz.matrix(&q).symmetric_eigenvalues();
            let mn = |e: &DVector<f64>| e.iter().copied().fold(f64::INFINITY, f64::min);
            let mx = |e: &DVector<f64>| e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (wlo, whi, mn(&eu), mx(&eu), mn(&ez), mx(&ez))
        });
        let mut c = PotentialCheck {
            r0_lower: f64::INFINITY,
            r0_upper: 0.0,
            vu_eig: (f64::INFINITY, f64::NEG_INFINITY),
            vz_eig: (f64::INFINITY, f64::NEG_INFINITY),
            vu_constant_ok: true,
            pass: true,
        };
        for (wlo, whi, ul, uh, zl, zh) in rows {
            c.r0_lower = c.r0_lower.min(wlo);
            c.r0_upper = c.r0_upper.max(whi);
            c.vu_eig = (c.vu_eig.0.min(ul), c.vu_eig.1.max(uh));
            c.vz_eig = (c.vz_eig.0.min(zl), c.vz_eig.1.max(zh));
        }
        if self.vu.is_constant() && samples >= 2 {
            let (_, q1) = bx.sample(seed, 0);
            let (_, q2) = bx.sample(seed, 1);
            c.vu_constant_ok = (self.vu.matrix(&q1) - self.vu.matrix(&q2)).norm() == 0.0;
        }
        let rel = 1e-12;
        c.pass = c.r0_lower.is_finite()
            && c.r0_lower >= self.r0.bounds.0 * (1.0 - rel)
            && c.r0_upper <= self.r0.bounds.1 * (1.0 + rel)
            && c.vu_eig.0 > 0.0
            && c.vz_eig.0 > 0.0
            && c.vu_eig.0 >= self.vu.bounds.0 * (1.0 - rel)
            && c.vu_eig.1 <= self.vu.bounds.1 * (1.0 + rel)
            && c.vz_eig.0 >= self.vz.bounds.0 * (1.0 - rel)
            && c.vz_eig.1 <= self.vz.bounds.1 * (1.0 + rel)
            && c.vu_constant_ok;
        c
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PotentialCheck {
    /// Sampled lower/upper constants of `R₀(q, v) / |v|`.
    pub r0_lower: f64,
    pub r0_upper: f64,
    pub vu_eig: (f64, f64),
    pub vz_eig: (f64, f64),
    pub vu_constant_ok: bool,
    pub pass: bool,
}

fn scalar_identity(a: &DMatrix<f64>) -> Option<f64> {
    let d = a[(0, 0)];
    let tol = 1e-14 * d.abs().max(1.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let target = if i == j { d } else { 0.0 };
            if (a[(i, j)] - target).abs() > tol {
                return None;
            }
        }
    }
    Some(d)
}

fn is_diagonal(a: &DMatrix<f64>) -> bool {
    let tol = 1e-14 * a.amax().max(1.0);
    (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| i == j || a[(i, j)].abs() <= tol))
}

/// `argmin_{ω ∈ K} ½⟨A⁻¹(ζ − ω), ζ − ω⟩` for SPD `A`.
pub fn project_in_metric(k: &StableSet, a: &DMatrix<f64>, zeta: &DVector<f64>) -> Result<DVector<f64>> {
    if scalar_identity(a).is_some() {
        return Ok(k.project(zeta));
    }
    if let StableSet::Box(_) = k {
        if is_diagonal(a) {
            return Ok(k.project(zeta));
        }
    }
    // Accelerated projected gradient on f(ω) = ½(ω − ζ)ᵀ A⁻¹ (ω − ζ).
    let b = a
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular {
            condition: condition_number(a),
        })?;
    let lmax = b.clone().symmetric_eigenvalues().amax();
    let step = 1.0 / lmax;
    let mut x = k.project(zeta);
    let mut y = x.clone();
    let mut tk = 1.0_f64;
    let mut change = f64::INFINITY;
    for _ in 0..PROJECTION_MAX_ITER {
        let grad = &b * (&y - zeta);
        let x_next = k.project(&(&y - grad * step));
        change = (&x_next - &x).norm();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        y = &x_next + (&x_next - &x) * ((tk - 1.0) / t_next);
        x = x_next;
        tk = t_next;
        if change <= PROJECTION_TOL * (1.0 + x.norm()) {
            return Ok(x);
        }
    }
    Err(Error::IterationLimit {
        what: "projection onto K(q)",
        iterations: PROJECTION_MAX_ITER,
        residual: change,
    })
}
