use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::{EnergyConstants, EnergyModel};
use crate::state::{Dims, State};

/// `E(t, u, z) = ½(u − g(z))² + F(z) − tu` with `g(z) = 4z³ − 4z` and a
/// tilted double-well `F` given through its derivative.
///
/// `F` is tabulated once per process on a uniform grid over `[-3, 3]` and
/// evaluated by cubic Hermite interpolation with the exact `F′` at the nodes.
/// The additive constant is fixed by `F(-1.2) = 0`.
#[derive(Clone, Copy, Debug)]
pub struct Example2 {
    table: &'static FTable,
}

impl Default for Example2 {
    fn default() -> Self {
        Self::new()
    }
}

pub const F_REFERENCE: f64 = -1.2;
const GRID_LO: f64 = -3.0;
const GRID_HI: f64 = 3.0;
const GRID_STEP: f64 = 1e-4;

#[derive(Debug)]
struct FTable {
    values: Vec<f64>,
}

fn table() -> &'static FTable {
    static TABLE: OnceLock<FTable> = OnceLock::new();
    TABLE.get_or_init(FTable::build)
}

pub fn g(z: f64) -> f64 {
    4.0 * z * z * z - 4.0 * z
}

pub fn g1(z: f64) -> f64 {
    12.0 * z * z - 4.0
}

pub fn g2(z: f64) -> f64 {
    24.0 * z
}

pub fn f1(z: f64) -> f64 {
    let y = z + 1.0;
    let bump = 38.0 * (-10.0 * (z + 0.5).powi(2)).exp();
    -1.0 + y * y * (-40.0 + 10.0 * y * y + bump)
}

pub fn f2(z: f64) -> f64 {
    let y = z + 1.0;
    let bump = 38.0 * (-10.0 * (z + 0.5).powi(2)).exp();
    let p = -40.0 + 10.0 * y * y + bump;
    let dp = 20.0 * y - 20.0 * (z + 0.5) * bump;
    2.0 * y * p + y * y * dp
}

// 5-point Gauss-Legendre on [-1, 1].
const GL_X: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

fn gauss(a: f64, b: f64) -> f64 {
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    GL_X.iter().zip(GL_W).map(|(x, w)| w * f1(c + r * x)).sum::<f64>() * r
}

/// `∫_a^b F′` by composite Gauss-Legendre with panels of at most `GRID_STEP`.
fn integrate(a: f64, b: f64) -> f64 {
    let panels = (((b - a).abs() / GRID_STEP).ceil() as usize).max(1);
    let h = (b - a) / panels as f64;
    (0..panels).map(|k| gauss(a + k as f64 * h, a + (k + 1) as f64 * h)).sum()
}

impl FTable {
    fn nodes() -> usize {
        ((GRID_HI - GRID_LO) / GRID_STEP).round() as usize + 1
    }

    fn node(i: usize) -> f64 {
        GRID_LO + i as f64 * GRID_STEP
    }

    fn build() -> Self {
        let n = Self::nodes();
        let mut values = Vec::with_capacity(n);
        let mut acc = 0.0;
        values.push(0.0);
        for i in 1..n {
            acc += gauss(Self::node(i - 1), Self::node(i));
            values.push(acc);
        }
        let mut t = FTable { values };
        let offset = t.eval(F_REFERENCE);
        for v in &mut t.values {
            *v -= offset;
        }
        t
    }

    fn eval(&self, z: f64) -> f64 {
        let last = self.values.len() - 1;
        if z < GRID_LO {
            return self.values[0] - integrate(z, GRID_LO);
        }
        if z > GRID_HI {
            return self.values[last] + integrate(GRID_HI, z);
        }
        let i = (((z - GRID_LO) / GRID_STEP).floor() as usize).min(last - 1);
        let (z0, z1) = (Self::node(i), Self::node(i + 1));
        let h = z1 - z0;
        let s = (z - z0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[i] + h10 * h * f1(z0) + h01 * self.values[i + 1] + h11 * h * f1(z1)
    }
}

impl Example2 {
    pub fn new() -> Self {
        Self { table: table() }
    }

    pub fn f(&self, z: f64) -> f64 {
        self.table.eval(z)
    }
}

impl EnergyModel for Example2 {
    fn name(&self) -> &str {
        "example2"
    }

    fn dims(&self) -> Dims {
        Dims::new(1, 1)
    }

    fn constants(&self) -> EnergyConstants {
        EnergyConstants {
            c0: None,
            c0_hat: None,
            c1: None,
            mu: Some(1.0),
        }
    }

    fn energy(&self, t: f64, q: &State) -> f64 {
        let (u, z) = (q.u[0], q.z[0]);
        0.5 * (u - g(z)).powi(2) + self.f(z) - t * u
    }

    fn dt(&self, _t: f64, q: &State) -> f64 {
        -q.u[0]
    }

    fn du(&self, t: f64, q: &State) -> DVector<f64> {
        DVector::from_element(1, q.u[0] - g(q.z[0]) - t)
    }

    fn dz(&self, _t: f64, q: &State) -> DVector<f64> {
        let (u, z) = (q.u[0], q.z[0]);
        DVector::from_element(1, f1(z) + g1(z) * (g(z) - u))
    }

    fn d2uu(&self, _t: f64, _q: &State) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 1.0)
    }

    fn d2uz(&self, _t: f64, q: &State) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, -g1(q.z[0]))
    }

    fn d2zz(&self, _t: f64, q: &State) -> DMatrix<f64> {
        let (u, z) = (q.u[0], q.z[0]);
        DMatrix::from_element(1, 1, f2(z) + g2(z) * (g(z) - u) + g1(z).powi(2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Composite Simpson, independent of the tabulation.
    fn simpson(a: f64, b: f64) -> f64 {
        let n = 200_000;
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|k| if k % 2 == 1 { 4.0 } else { 2.0 } * f1(a + k as f64 * h)).sum();
        h / 3.0 * (f1(a) + inner + f1(b))
    }

    #[test]
    fn reference_point_is_zero() {
        assert_abs_diff_eq!(Example2::new().f(F_REFERENCE), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn table_matches_simpson_quadrature() {
        let m = Example2::new();
        for &z in &[-2.9, -1.7, -0.5, 0.0, 0.3333, 1.25, 2.999, 3.4, -3.2] {
            let a = simpson(F_REFERENCE, z);
            assert_abs_diff_eq!(m.f(z), a, epsilon = 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn derivative_of_table_is_f1() {
        let m = Example2::new();
        let h = 1e-5;
        for &z in &[-2.0, -1.0, -0.5, 0.1, 0.77, 1.9] {
            let fd = (m.f(z + h) - m.f(z - h)) / (2.0 * h);
            assert!((fd - f1(z)).abs() <= 1e-7 * f1(z).abs().max(1.0));
        }
    }
}
