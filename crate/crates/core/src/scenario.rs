//! Experiment configuration and the named figure presets.
//!
//! Units: positions and radii in meters, path-loss intercepts in dB, powers
//! and noise in dBm. User indices in `extra_loss_users` are zero-based.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{FadingSpec, PathLossParams, SystemDimensions};
use crate::error::{Error, Result};
use crate::optimizer::{OptimizerConfig, PhaseInit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Mean sorted Gram eigenvalues per phase method.
    Eigenvalues,
    /// Sum rates over `power_grid_dbm` at fixed surface size.
    SnrSweep,
    /// Sum rates over `ris_element_grid` at the single power in `power_grid_dbm`.
    ElementSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioGeometry {
    pub bs_position: [f64; 2],
    pub ris_positions: Vec<[f64; 2]>,
    pub user_center: [f64; 2],
    pub user_radius: f64,
}

impl Default for ScenarioGeometry {
    fn default() -> Self {
        Self {
            bs_position: [0.0, 0.0],
            ris_positions: vec![[200.0, 0.0]],
            user_center: [200.0, 30.0],
            user_radius: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkPathLoss {
    pub direct: PathLossParams,
    pub reflect: PathLossParams,
    pub bs_ris: PathLossParams,
}

impl Default for LinkPathLoss {
    fn default() -> Self {
        Self {
            direct: PathLossParams { alpha_db: 30.0, beta: 3.76 },
            reflect: PathLossParams { alpha_db: 30.0, beta: 2.2 },
            bs_ris: PathLossParams { alpha_db: 30.0, beta: 2.2 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkFading {
    pub direct: FadingSpec,
    pub reflect: FadingSpec,
    pub bs_ris: FadingSpec,
}

impl Default for LinkFading {
    fn default() -> Self {
        Self {
            direct: FadingSpec::Rayleigh,
            reflect: FadingSpec::Rayleigh,
            bs_ris: FadingSpec::Rayleigh,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub max_sweeps: usize,
    pub rel_tolerance: f64,
    pub regularization: f64,
    pub randomized_order: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_sweeps: 100,
            rel_tolerance: 1e-9,
            regularization: 1e-12,
            randomized_order: false,
        }
    }
}

impl OptimizerSettings {
    pub fn to_config(&self, init: PhaseInit) -> OptimizerConfig {
        OptimizerConfig {
            max_sweeps: self.max_sweeps,
            rel_tolerance: self.rel_tolerance,
            regularization: self.regularization,
            init,
            randomized_order: self.randomized_order,
            verify_updates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub name: String,
    pub experiment: ExperimentKind,
    pub dimensions: SystemDimensions,
    pub geometry: ScenarioGeometry,
    pub pathloss: LinkPathLoss,
    pub fading: LinkFading,
    pub extra_loss_db: f64,
    pub extra_loss_users: Vec<usize>,
    pub noise_dbm: f64,
    pub n_trials: usize,
    pub seed: u64,
    pub power_grid_dbm: Vec<f64>,
    pub ris_element_grid: Vec<usize>,
    /// Ranks of a `kronecker_rank` BS-surface channel to sweep in the
    /// eigenvalue experiment. Empty means the rank in `fading.bs_ris`.
    pub rank_grid: Vec<usize>,
    pub optimizer: OptimizerSettings,
    pub output_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            experiment: ExperimentKind::SnrSweep,
            dimensions: SystemDimensions {
                n_bs: 16,
                n_ms: 1,
                n_users: 6,
                n_ris_elements: vec![256],
            },
            geometry: ScenarioGeometry::default(),
            pathloss: LinkPathLoss::default(),
            fading: LinkFading::default(),
            extra_loss_db: 0.0,
            extra_loss_users: Vec::new(),
            noise_dbm: -100.0,
            n_trials: 1000,
            seed: 1,
            power_grid_dbm: (-10..=40).step_by(5).map(f64::from).collect(),
            ris_element_grid: vec![1, 4, 16, 64, 256],
            rank_grid: Vec::new(),
            optimizer: OptimizerSettings::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

pub const PRESET_NAMES: [&str; 8] = ["fig1a", "fig1b", "fig1c", "fig1d", "fig3a", "fig3b", "fig4a", "fig4b"];

/// Trial count used by the presets.
pub const PRESET_TRIALS: usize = 100;

const RICIAN_FACTOR_DB: f64 = 6.0;

impl ScenarioConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig {
            name: name.to_string(),
            n_trials: PRESET_TRIALS,
            ..Default::default()
        };
        let eigen = |cfg: &mut ScenarioConfig, rank: usize, beta_re: f64| {
            cfg.experiment = ExperimentKind::Eigenvalues;
            cfg.fading.bs_ris = FadingSpec::KroneckerRank { rank };
            cfg.rank_grid = vec![rank];
            cfg.pathloss.reflect.beta = beta_re;
            cfg.extra_loss_db = 20.0;
            cfg.extra_loss_users = vec![3, 4, 5];
        };
        match name {
            "fig1a" => eigen(&mut cfg, 1, 3.76),
            "fig1b" => eigen(&mut cfg, 2, 3.76),
            "fig1c" => eigen(&mut cfg, 6, 3.76),
            "fig1d" => eigen(&mut cfg, 6, 2.2),
            "fig3a" => cfg.experiment = ExperimentKind::SnrSweep,
            "fig3b" => {
                cfg.experiment = ExperimentKind::SnrSweep;
                cfg.fading.bs_ris = FadingSpec::Rician { rician_factor_db: RICIAN_FACTOR_DB };
            }
            "fig4a" | "fig4b" => {
                cfg.experiment = ExperimentKind::ElementSweep;
                cfg.power_grid_dbm = vec![40.0];
                if name == "fig4b" {
                    cfg.fading.bs_ris = FadingSpec::Rician { rician_factor_db: RICIAN_FACTOR_DB };
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown preset {other:?}; expected one of {PRESET_NAMES:?}"
                )))
            }
        }
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Surface sizes used by each case of the configured experiment.
    pub fn element_cases(&self) -> Vec<Vec<usize>> {
        match self.experiment {
            ExperimentKind::ElementSweep => self
                .ris_element_grid
                .iter()
                .map(|&n| vec![n; self.geometry.ris_positions.len()])
                .collect(),
            _ => vec![self.dimensions.n_ris_elements.clone()],
        }
    }

    /// Ranks swept by the eigenvalue experiment.
    pub fn ranks(&self) -> Vec<Option<usize>> {
        if self.rank_grid.is_empty() {
            match self.fading.bs_ris {
                FadingSpec::KroneckerRank { rank } => vec![Some(rank)],
                _ => vec![None],
            }
        } else {
            self.rank_grid.iter().map(|&r| Some(r)).collect()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.dimensions.validate()?;
        let dims = &self.dimensions;
        if self.geometry.ris_positions.len() != dims.n_ris_elements.len() {
            return bad(format!(
                "{} surface positions for {} surfaces",
                self.geometry.ris_positions.len(),
                dims.n_ris_elements.len()
            ));
        }
        let points = std::iter::once(self.geometry.bs_position)
            .chain(self.geometry.ris_positions.iter().copied())
            .chain(std::iter::once(self.geometry.user_center));
        for p in points {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return bad(format!("non-finite position {p:?}"));
            }
        }
        if !(self.geometry.user_radius >= 0.0 && self.geometry.user_radius.is_finite()) {
            return bad(format!("invalid user radius {}", self.geometry.user_radius));
        }
        self.pathloss.direct.validate()?;
        self.pathloss.reflect.validate()?;
        self.pathloss.bs_ris.validate()?;
        if self.extra_loss_users.iter().any(|&k| k >= dims.n_users) {
            return bad(format!("extra-loss user index out of range: {:?}", self.extra_loss_users));
        }
        if !self.extra_loss_db.is_finite() || !self.noise_dbm.is_finite() {
            return bad("extra loss and noise must be finite".into());
        }
        if self.n_trials == 0 {
            return bad("n_trials must be >= 1".into());
        }
        match self.experiment {
            ExperimentKind::Eigenvalues => {
                if !self.rank_grid.is_empty() && !matches!(self.fading.bs_ris, FadingSpec::KroneckerRank { .. }) {
                    return bad("rank_grid needs kronecker_rank fading on bs_ris".into());
                }
            }
            ExperimentKind::SnrSweep => {
                if self.power_grid_dbm.is_empty() {
                    return bad("power_grid_dbm is empty".into());
                }
            }
            ExperimentKind::ElementSweep => {
                if self.power_grid_dbm.len() != 1 {
                    return bad("element sweep needs exactly one power in power_grid_dbm".into());
                }
                if self.ris_element_grid.is_empty() || self.ris_element_grid.contains(&0) {
                    return bad("ris_element_grid must be nonempty and positive".into());
                }
            }
        }
        if self.power_grid_dbm.iter().any(|p| !p.is_finite()) {
            return bad("non-finite power".into());
        }
        for sizes in self.element_cases() {
            for rank in self.ranks().into_iter().flatten() {
                check_rank(rank, &sizes, dims.n_bs)?;
            }
            if let FadingSpec::KroneckerRank { rank } = self.fading.bs_ris {
                if self.rank_grid.is_empty() {
                    check_rank(rank, &sizes, dims.n_bs)?;
                }
            }
            for spec in [self.fading.direct, self.fading.reflect] {
                if let FadingSpec::KroneckerRank { rank } = spec {
                    let r = dims.r();
                    let cols_min = sizes.iter().copied().min().unwrap_or(0).min(dims.n_bs);
                    if rank == 0 || rank > r.min(cols_min) {
                        return bad(format!("kronecker rank {rank} invalid for user links"));
                    }
                }
            }
        }
        let opt = &self.optimizer;
        if opt.max_sweeps == 0 || !(opt.rel_tolerance > 0.0) || !(opt.regularization >= 0.0) {
            return bad(format!("invalid optimizer settings {opt:?}"));
        }
        Ok(())
    }

    /// Copy with the BS-surface rank replaced, for one eigenvalue-experiment case.
    pub fn with_rank(&self, rank: Option<usize>) -> Self {
        let mut cfg = self.clone();
        if let Some(rank) = rank {
            cfg.fading.bs_ris = FadingSpec::KroneckerRank { rank };
        }
        cfg
    }

    /// Copy with every surface resized, for one element-sweep case.
    pub fn with_elements(&self, sizes: &[usize]) -> Self {
        let mut cfg = self.clone();
        cfg.dimensions.n_ris_elements = sizes.to_vec();
        cfg
    }
}

fn check_rank(rank: usize, sizes: &[usize], n_bs: usize) -> Result<()> {
    for &n in sizes {
        if rank == 0 || rank > n.min(n_bs) {
            return Err(Error::Config(format!(
                "rank {rank} exceeds min(N_RIS = {n}, N_B = {n_bs})"
            )));
        }
    }
    Ok(())
}
