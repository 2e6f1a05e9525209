use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Dims, State};

/// Axis-aligned region `[t_lo, t_hi] × ∏[lo_i, hi_i]` used to sample the
/// declared structural constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingBox {
    pub t: (f64, f64),
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub dims: Dims,
}

impl SamplingBox {
    pub fn new(t: (f64, f64), lo: Vec<f64>, hi: Vec<f64>, dims: Dims) -> Result<Self> {
        if lo.len() != dims.total() || hi.len() != dims.total() {
            return Err(Error::Config("sampling box dimension mismatch".into()));
        }
        if !(t.0 <= t.1) || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::Config("degenerate sampling box".into()));
        }
        Ok(Self { t, lo, hi, dims })
    }

    /// Cube `[-r, r]^{n+m}` over the time interval `t`.
    pub fn cube(t: (f64, f64), r: f64, dims: Dims) -> Result<Self> {
        let k = dims.total();
        Self::new(t, vec![-r; k], vec![r; k], dims)
    }

    /// Inflate every side by `factor` times its length (0.2 = 20%).
    pub fn inflated(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for (lo, hi) in out.lo.iter_mut().zip(out.hi.iter_mut()) {
            let pad = factor * (*hi - *lo).max(1e-12);
            *lo -= pad;
            *hi += pad;
        }
        let pad = factor * (self.t.1 - self.t.0);
        out.t = (self.t.0 - pad, self.t.1 + pad);
        out
    }

    /// The `i`-th sample of a reproducible stream.
    pub fn sample(&self, seed: u64, i: usize) -> (f64, State) {
        let mut rng = stream_rng(seed, i);
        let t = if self.t.1 > self.t.0 {
            rng.gen_range(self.t.0..=self.t.1)
        } else {
            self.t.0
        };
        let v: Vec<f64> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| rng.gen_range(*a..=*b))
            .collect();
        (t, State::from_stacked(self.dims, &v))
    }
}

/// Independent, order-free random stream per sample index so that parallel
/// and sequential batteries see identical draws.
pub fn stream_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}
