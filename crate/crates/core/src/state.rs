use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Dimensions `(n, m)` of the elastic variable `u` and the dissipative variable `z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
}

impl Dims {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    pub fn total(&self) -> usize {
        self.n + self.m
    }
}

/// A point `q = (u, z)` of the extended phase space.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u: DVector<f64>,
    pub z: DVector<f64>,
}

impl State {
    pub fn new(u: DVector<f64>, z: DVector<f64>) -> Self {
        Self { u, z }
    }

    pub fn from_slices(u: &[f64], z: &[f64]) -> Self {
        Self {
            u: DVector::from_column_slice(u),
            z: DVector::from_column_slice(z),
        }
    }

    /// Scalar convenience for the one-dimensional models.
    pub fn scalar(u: f64, z: f64) -> Self {
        Self::from_slices(&[u], &[z])
    }

    pub fn zeros(dims: Dims) -> Self {
        Self {
            u: DVector::zeros(dims.n),
            z: DVector::zeros(dims.m),
        }
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.u.len(), self.z.len())
    }

    /// Euclidean norm of the stacked vector `(u, z)`.
    pub fn norm(&self) -> f64 {
        (self.u.norm_squared() + self.z.norm_squared()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.z.iter()).all(|x| x.is_finite())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.u.iter().chain(self.z.iter()).copied().collect()
    }

    pub fn from_stacked(dims: Dims, v: &[f64]) -> Self {
        Self::from_slices(&v[..dims.n], &v[dims.n..dims.n + dims.m])
    }

    pub fn sub(&self, other: &State) -> State {
        State::new(&self.u - &other.u, &self.z - &other.z)
    }

    pub fn add_scaled(&self, other: &State, a: f64) -> State {
        State::new(&self.u + &other.u * a, &self.z + &other.z * a)
    }

    pub fn scale(&self, a: f64) -> State {
        State::new(&self.u * a, &self.z * a)
    }

    pub fn dot(&self, other: &State) -> f64 {
        self.u.dot(&other.u) + self.z.dot(&other.z)
    }

    /// Max-norm distance, used for sup-distances between curves.
    pub fn max_abs_diff(&self, other: &State) -> f64 {
        self.u
            .iter()
            .zip(other.u.iter())
            .chain(self.z.iter().zip(other.z.iter()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
