use nalgebra::{DMatrix, DVector};

use super::{EnergyConstants, EnergyModel};
use crate::state::{Dims, State};

/// `E(t, u, z) = ½(u − z)² + ½z² − tu` on `ℝ × ℝ`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Example1;

impl EnergyModel for Example1 {
    fn name(&self) -> &str {
        "example1"
    }

    fn dims(&self) -> Dims {
        Dims::new(1, 1)
    }

    /// Coercivity holds with `c0 = 0.09`, `c0_hat = 10` for `|t| ≤ 2`; the
    /// quadratic part has smallest eigenvalue `(3 − √5)/4 ≈ 0.19`.
    fn constants(&self) -> EnergyConstants {
        EnergyConstants {
            c0: Some(0.09),
            c0_hat: Some(10.0),
            c1: None,
            mu: Some(1.0),
        }
    }

    fn energy(&self, t: f64, q: &State) -> f64 {
        let (u, z) = (q.u[0], q.z[0]);
        0.5 * (u - z).powi(2) + 0.5 * z * z - t * u
    }

    fn dt(&self, _t: f64, q: &State) -> f64 {
        -q.u[0]
    }

    fn du(&self, t: f64, q: &State) -> DVector<f64> {
        DVector::from_element(1, q.u[0] - q.z[0] - t)
    }

    fn dz(&self, _t: f64, q: &State) -> DVector<f64> {
        DVector::from_element(1, 2.0 * q.z[0] - q.u[0])
    }

    fn d2uu(&self, _t: f64, _q: &State) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 1.0)
    }

    fn d2uz(&self, _t: f64, _q: &State) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, -1.0)
    }

    fn d2zz(&self, _t: f64, _q: &State) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 2.0)
    }
}
