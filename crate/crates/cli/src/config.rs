use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mrbv::energy::{builtin, EnergyModel};
use mrbv::mfunctional::{canonical_battery, unit_args, BatteryPoint};
use mrbv::potentials::{Potentials, QuadraticForm, R0Spec};
use mrbv::regimes::SegmentOptions;
use mrbv::reparam::DEFAULT_GRID;
use mrbv::solver::{RateParams, SolverConfig};
use mrbv::State;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One experiment, read from a single JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in energy, `example1` or `example2`.
    pub model: String,
    pub potentials: PotentialsConfig,
    pub alpha: f64,
    #[serde(default)]
    pub eps: Option<f64>,
    /// Strictly decreasing `ε` values for `sweep`.
    #[serde(default)]
    pub eps_list: Option<Vec<f64>>,
    pub t_span: [f64; 2],
    pub initial: InitialState,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub reparam: ReparamConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub energy_check: EnergyCheckConfig,
    #[serde(default)]
    pub gamma: GammaConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub u: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum R0Config {
    /// `Σ wᵢ|z′ᵢ|`
    L1(Vec<f64>),
    /// `w|z′|`
    Isotropic(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialsConfig {
    pub r0: R0Config,
    /// Row-major symmetric positive definite matrices.
    pub vu: Vec<Vec<f64>>,
    pub vz: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReparamConfig {
    #[default]
    Arclength,
    Custom { floor: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    /// Uniform resampling grid of the curve before classification.
    pub grid: usize,
    pub segment: SegmentOptions,
    /// Half-width in nodes of the bands around segment boundaries excluded
    /// from the contact agreement.
    pub boundary_band: usize,
    /// Exit with code 3 above this fraction of unclassified nodes.
    pub max_unclassified_fraction: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            grid: DEFAULT_GRID,
            segment: SegmentOptions::default(),
            boundary_band: 5,
            max_unclassified_fraction: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyCheckConfig {
    /// Number of step halvings used for the observed order.
    pub refinements: usize,
    /// Include per-node `M₀` values in the report.
    pub per_node: bool,
}

impl Default for EnergyCheckConfig {
    fn default() -> Self {
        Self {
            refinements: 3,
            per_node: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaPoint {
    pub name: String,
    pub alpha: f64,
    pub tau: f64,
    pub du: f64,
    pub dz: f64,
    pub eta: f64,
    pub zeta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaConfig {
    pub eps_list: Vec<f64>,
    /// Scalar unit configurations; the canonical battery when absent.
    pub points: Option<Vec<GammaPoint>>,
}

impl Default for GammaConfig {
    fn default() -> Self {
        Self {
            eps_list: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            points: None,
        }
    }
}

impl GammaConfig {
    pub fn battery(&self) -> Vec<BatteryPoint> {
        match &self.points {
            None => canonical_battery(),
            Some(points) => points
                .iter()
                .map(|p| BatteryPoint {
                    name: p.name.clone(),
                    alpha: p.alpha,
                    args: unit_args(p.tau, p.du, p.dz, p.eta, p.zeta),
                    branch: None,
                })
                .collect(),
        }
    }
}

/// Everything a command needs, built from a validated config.
pub struct Setup {
    pub config: RunConfig,
    pub model: Arc<dyn EnergyModel>,
    pub pot: Potentials,
    pub q0: State,
}

fn matrix(name: &str, rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::Config(format!("{name} must be a {dim}x{dim} matrix")));
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    if (&m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
        return Err(CliError::Config(format!("{name} is not symmetric")));
    }
    if m.iter().any(|x| !x.is_finite()) || m.clone().cholesky().is_none() {
        return Err(CliError::Config(format!("{name} is not positive definite")));
    }
    Ok(m)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn with_overrides(mut self, eps: Option<f64>, alpha: Option<f64>) -> Self {
        if eps.is_some() {
            self.eps = eps;
        }
        if let Some(a) = alpha {
            self.alpha = a;
        }
        self
    }

    pub fn eps(&self) -> Result<f64, CliError> {
        self.eps
            .ok_or_else(|| CliError::Config("eps is required (config or --eps)".into()))
    }

    pub fn params(&self) -> Result<RateParams, CliError> {
        Ok(RateParams::new(self.eps()?, self.alpha)?)
    }

    pub fn eps_list(&self) -> Result<Vec<f64>, CliError> {
        let list = self
            .eps_list
            .clone()
            .ok_or_else(|| CliError::Config("eps_list is required for a sweep".into()))?;
        if list.len() < 3 {
            return Err(CliError::Config("a sweep needs at least three eps values".into()));
        }
        if list.iter().any(|e| !(*e > 0.0)) || list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(CliError::Config("eps_list must be positive and strictly decreasing".into()));
        }
        Ok(list)
    }

    pub fn setup(self) -> Result<Setup, CliError> {
        let model = builtin(&self.model)?;
        let dims = model.dims();
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(CliError::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0 && e.is_finite()) {
                return Err(CliError::Config(format!("eps must be positive, got {e}")));
            }
        }
        let [t0, t1] = self.t_span;
        if !(t0 < t1 && t0.is_finite() && t1.is_finite()) {
            return Err(CliError::Config(format!("t_span must satisfy t0 < T, got [{t0}, {t1}]")));
        }
        if self.initial.u.len() != dims.n || self.initial.z.len() != dims.m {
            return Err(CliError::Config(format!(
                "initial state must have dimensions ({}, {})",
                dims.n, dims.m
            )));
        }
        let r0 = match &self.potentials.r0 {
            R0Config::L1(w) => {
                if w.len() != dims.m {
                    return Err(CliError::Config(format!("r0 needs {} weights", dims.m)));
                }
                R0Spec::l1(w.clone())
            }
            R0Config::Isotropic(w) => R0Spec::isotropic(*w),
        };
        let vu = matrix("vu", &self.potentials.vu, dims.n)?;
        let vz = matrix("vz", &self.potentials.vz, dims.m)?;
        let pot = Potentials::new(r0, QuadraticForm::constant(vu), QuadraticForm::constant(vz));
        let q0 = State::new(
            DVector::from_vec(self.initial.u.clone()),
            DVector::from_vec(self.initial.z.clone()),
        );
        pot.r0.weights(&q0)?;
        self.solver.validate()?;
        if self.classify.grid < 2 {
            return Err(CliError::Config("classify.grid must be at least 2".into()));
        }
        if let ReparamConfig::Custom { floor } = self.reparam {
            if !(floor > 0.0) {
                return Err(CliError::Config("custom reparameterization needs floor > 0".into()));
            }
        }
        Ok(Setup {
            config: self,
            model,
            pot,
            q0,
        })
    }
}
