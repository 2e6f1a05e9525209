use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{gradient, linspace, Pchip};
use crate::potentials::Potentials;
use crate::solver::{fmt_f64, read_table, Trajectory};
use crate::state::{Dims, State};

pub const DEFAULT_GRID: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveTag {
    Arclength,
    Custom,
    Normalized,
}

impl fmt::Display for CurveTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveTag::Arclength => "arclength",
            CurveTag::Custom => "custom",
            CurveTag::Normalized => "normalized",
        })
    }
}

impl FromStr for CurveTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arclength" => Ok(CurveTag::Arclength),
            "custom" => Ok(CurveTag::Custom),
            "normalized" => Ok(CurveTag::Normalized),
            _ => Err(Error::Config(format!("unknown curve tag '{s}'"))),
        }
    }
}

/// A curve `s ↦ (t(s), q(s))` sampled at increasing `s`, with derivative
/// estimates `t′`, `q′` at every sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterizedCurve {
    pub dims: Dims,
    pub tag: CurveTag,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub q: Vec<State>,
    pub dt: Vec<f64>,
    pub dq: Vec<State>,
}

/// Arclength `σ(t) = ∫(1 + |q̇|)`, sampled at the trajectory nodes.
pub fn arclength_reparam(traj: &Trajectory) -> Result<ParameterizedCurve> {
    from_increments(traj, CurveTag::Arclength, |h, dq| h + dq.norm())
}

/// Speed `max(floor, |u̇|, |ż|)`, sampled at the trajectory nodes.
pub fn custom_reparam(traj: &Trajectory, floor: f64) -> Result<ParameterizedCurve> {
    if !(floor > 0.0) {
        return Err(Error::Config(format!("custom speed floor must be positive, got {floor}")));
    }
    from_increments(traj, CurveTag::Custom, |h, dq| {
        (floor * h).max(dq.u.norm()).max(dq.z.norm())
    })
}

fn from_increments(
    traj: &Trajectory,
    tag: CurveTag,
    ds: impl Fn(f64, &State) -> f64,
) -> Result<ParameterizedCurve> {
    if traj.is_empty() {
        return Err(Error::Domain("empty trajectory".into()));
    }
    let mut s = vec![0.0];
    for w in traj.nodes.windows(2) {
        let inc = ds(w[1].t - w[0].t, &w[1].q.sub(&w[0].q));
        s.push(s.last().unwrap() + inc);
    }
    let t = traj.times();
    let q = traj.nodes.iter().map(|n| n.q.clone()).collect();
    Ok(ParameterizedCurve::with_quotients(traj.dims, tag, s, t, q))
}

/// Reparameterize so that `t′ + |q′| = 1`. Plateaus where the curve does
/// not move collapse to single points.
pub fn normalize(curve: &ParameterizedCurve) -> Result<ParameterizedCurve> {
    let n = curve.len();
    let mut s = vec![0.0];
    let mut t = vec![curve.t[0]];
    let mut q = vec![curve.q[0].clone()];
    for k in 1..n {
        let inc = (curve.t[k] - curve.t[k - 1]).abs() + curve.q[k].sub(&curve.q[k - 1]).norm();
        if inc > 0.0 {
            s.push(s.last().unwrap() + inc);
            t.push(curve.t[k]);
            q.push(curve.q[k].clone());
        }
    }
    if s.len() < 2 {
        return Err(Error::Domain("totally degenerate curve".into()));
    }
    Ok(ParameterizedCurve::with_quotients(curve.dims, CurveTag::Normalized, s, t, q))
}

impl ParameterizedCurve {
    /// Curve through the given samples, with left-attributed difference
    /// quotients as derivatives.
    pub fn with_quotients(dims: Dims, tag: CurveTag, s: Vec<f64>, t: Vec<f64>, q: Vec<State>) -> Self {
        let n = s.len();
        let mut dt = Vec::with_capacity(n);
        let mut dq = Vec::with_capacity(n);
        for k in 0..n.saturating_sub(1) {
            let ds = s[k + 1] - s[k];
            dt.push((t[k + 1] - t[k]) / ds);
            dq.push(q[k + 1].sub(&q[k]).scale(1.0 / ds));
        }
        if n >= 2 {
            dt.push(dt[n - 2]);
            dq.push(dq[n - 2].clone());
        } else {
            dt.push(0.0);
            dq.push(State::zeros(dims));
        }
        Self { dims, tag, s, t, q, dt, dq }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Total parameter length `S`.
    pub fn length(&self) -> f64 {
        self.s.last().copied().unwrap_or(0.0) - self.s.first().copied().unwrap_or(0.0)
    }

    /// Resample onto `n` uniform nodes: monotone cubic Hermite for every
    /// coordinate, central differences for the derivatives.
    pub fn resample(&self, n: usize) -> Result<ParameterizedCurve> {
        if n < 2 {
            return Err(Error::Config("resampling needs at least two nodes".into()));
        }
        let (s0, s1) = (self.s[0], *self.s.last().unwrap());
        if !(s1 > s0) {
            return Err(Error::Domain("cannot resample a curve of zero length".into()));
        }
        let grid = linspace(s0, s1, n);
        let interp = |vals: Vec<f64>| -> Result<Vec<f64>> {
            let p = Pchip::new(self.s.clone(), vals)?;
            Ok(grid.iter().map(|x| p.eval(*x)).collect())
        };
        let t = interp(self.t.clone())?;
        let k = self.dims.total();
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|i| interp(self.q.iter().map(|q| q.to_vec()[i]).collect()))
            .collect::<Result<_>>()?;
        let q: Vec<State> = (0..n)
            .map(|j| State::from_stacked(self.dims, &cols.iter().map(|c| c[j]).collect::<Vec<_>>()))
            .collect();
        let dt = gradient(&grid, &t);
        let dcols: Vec<Vec<f64>> = cols.iter().map(|c| gradient(&grid, c)).collect();
        let dq = (0..n)
            .map(|j| State::from_stacked(self.dims, &dcols.iter().map(|c| c[j]).collect::<Vec<_>>()))
            .collect();
        Ok(ParameterizedCurve {
            dims: self.dims,
            tag: self.tag,
            s: grid,
            t,
            q,
            dt,
            dq,
        })
    }

    /// `max |t′ + |q′| − 1|` over the nodes.
    pub fn normalization_defect(&self) -> f64 {
        self.dt
            .iter()
            .zip(&self.dq)
            .map(|(a, b)| (a + b.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_dt(&self) -> f64 {
        self.dt.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Trapezoid rule for per-node values over node indices `[j1, j2]`.
    pub fn integrate(&self, f: &[f64], j1: usize, j2: usize) -> f64 {
        (j1..j2)
            .map(|j| 0.5 * (self.s[j + 1] - self.s[j]) * (f[j] + f[j + 1]))
            .sum()
    }

    /// `∫ R₀(q, z′) ds` over the whole curve.
    pub fn r0_integral(&self, pot: &Potentials) -> Result<f64> {
        let vals = self
            .q
            .iter()
            .zip(&self.dq)
            .map(|(q, v)| pot.eval_r0(q, &v.z))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.integrate(&vals, 0, self.len() - 1))
    }

    /// Linear interpolation of `(t, q)` at parameter `s` (clamped).
    pub fn point_at(&self, s: f64) -> (f64, State) {
        let n = self.len();
        if s <= self.s[0] {
            return (self.t[0], self.q[0].clone());
        }
        if s >= self.s[n - 1] {
            return (self.t[n - 1], self.q[n - 1].clone());
        }
        let k = self.s.partition_point(|x| *x <= s) - 1;
        let w = (s - self.s[k]) / (self.s[k + 1] - self.s[k]);
        let t = self.t[k] + w * (self.t[k + 1] - self.t[k]);
        (t, self.q[k].add_scaled(&self.q[k + 1].sub(&self.q[k]), w))
    }

    /// Sup over a common grid of fractions `s/S` of the distance between two
    /// curves in `(t, q)`.
    pub fn sup_distance(&self, other: &ParameterizedCurve, samples: usize) -> f64 {
        let (la, lb) = (self.length(), other.length());
        linspace(0.0, 1.0, samples.max(2))
            .into_iter()
            .map(|f| {
                let (ta, qa) = self.point_at(self.s[0] + f * la);
                let (tb, qb) = other.point_at(other.s[0] + f * lb);
                ((ta - tb).powi(2) + qa.sub(&qb).norm().powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn header(&self) -> Vec<String> {
        let (n, m) = (self.dims.n, self.dims.m);
        let mut h = vec!["s".to_string(), "t".to_string()];
        h.extend((1..=n).map(|i| format!("u_{i}")));
        h.extend((1..=m).map(|i| format!("z_{i}")));
        h.push("dt".into());
        h.extend((1..=n).map(|i| format!("du_{i}")));
        h.extend((1..=m).map(|i| format!("dz_{i}")));
        h
    }

    /// CSV with a leading `# tag=…` comment line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# tag={}", self.tag)?;
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(self.header())?;
        for j in 0..self.len() {
            let mut row = vec![self.s[j], self.t[j]];
            row.extend(self.q[j].u.iter());
            row.extend(self.q[j].z.iter());
            row.push(self.dt[j]);
            row.extend(self.dq[j].u.iter());
            row.extend(self.dq[j].z.iter());
            wr.write_record(row.iter().map(|x| fmt_f64(*x)))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let (tag, body, offset) = match text.strip_prefix("# tag=") {
            Some(rest) => {
                let end = rest.find('\n').unwrap_or(rest.len());
                let tag: CurveTag = rest[..end].trim().parse().map_err(|_| Error::Parse {
                    line: 1,
                    message: format!("unknown curve tag '{}'", rest[..end].trim()),
                })?;
                (tag, &rest[(end + 1).min(rest.len())..], 1)
            }
            None => (CurveTag::Custom, text.as_str(), 0),
        };
        let shift = |e: Error| match e {
            Error::Parse { line, message } => Error::Parse {
                line: line + offset,
                message,
            },
            other => other,
        };
        let (header, rows) = read_table(body.as_bytes()).map_err(shift)?;
        let n = header.iter().filter(|h| h.starts_with("u_")).count();
        let m = header.iter().filter(|h| h.starts_with("z_")).count();
        let dims = Dims::new(n, m);
        let mut curve = ParameterizedCurve {
            dims,
            tag,
            s: vec![],
            t: vec![],
            q: vec![],
            dt: vec![],
            dq: vec![],
        };
        if header != curve.header() {
            return Err(Error::Parse {
                line: 1 + offset,
                message: format!("unexpected curve header {header:?}"),
            });
        }
        for (line, row) in rows {
            let s = row[0];
            if let Some(prev) = curve.s.last() {
                if !(s > *prev) {
                    return Err(Error::Parse {
                        line: line + offset,
                        message: "s is not strictly increasing".into(),
                    });
                }
            }
            let u = &row[2..2 + n];
            let z = &row[2 + n..2 + n + m];
            let dt = row[2 + n + m];
            let du = &row[3 + n + m..3 + 2 * n + m];
            let dz = &row[3 + 2 * n + m..];
            curve.s.push(s);
            curve.t.push(row[1]);
            curve.q.push(State::from_slices(u, z));
            curve.dt.push(dt);
            curve.dq.push(State::new(DVector::from_row_slice(du), DVector::from_row_slice(dz)));
        }
        if curve.is_empty() {
            return Err(Error::Parse {
                line: 2 + offset,
                message: "no data rows".into(),
            });
        }
        Ok(curve)
    }
}
