//! Experiment configuration: JSON schema, validation, sweep expansion,
//! and the bundled presets.
//!
//! A config is one JSON document; unknown keys are rejected. `p_dbm`
//! accepts a scalar or a list (the power sweep); `n_sweep` lists `[n1, n2]`
//! RIS shapes (empty means "just the geometry's shape"). Optional stage
//! overrides fall back to the estimator defaults documented on
//! [`crate::bs_ris::FdStage1Config`] and [`crate::ris_user::Stage2Config`].

use crate::bs_ris::FdStage1Config;
use crate::channel::{ArrayGeometry, GridSnap, Scenario};
use crate::ris_user::{RankPolicy, Stage2Config};
use serde::{Deserialize, Deserializer, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("unknown preset {0:?} (expected smoke, fig3, fig4, or fig5)")]
    UnknownPreset(String),
}

/// Which estimators an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorSelection {
    Baseline,
    Proposed,
    Both,
}

/// A single estimator kind (sweep records carry one each).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Baseline,
    Proposed,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Baseline => "baseline",
            EstimatorKind::Proposed => "proposed",
        }
    }
}

impl EstimatorSelection {
    pub fn kinds(self) -> Vec<EstimatorKind> {
        match self {
            EstimatorSelection::Baseline => vec![EstimatorKind::Baseline],
            EstimatorSelection::Proposed => vec![EstimatorKind::Proposed],
            EstimatorSelection::Both => {
                vec![EstimatorKind::Baseline, EstimatorKind::Proposed]
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub m_r: usize,
    pub m_t: usize,
    pub n1: usize,
    pub n2: usize,
    #[serde(default = "default_spacing")]
    pub d_over_lambda: f64,
}

fn default_spacing() -> f64 {
    0.5
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage1Overrides {
    /// Subframe count `B`; default `max(ceil(log2 M), ceil(log2 N^2))`.
    pub subframes: Option<usize>,
    /// Slots per subframe `T`; default `max(M_T, L)`.
    pub slots_per_subframe: Option<usize>,
    pub g_iota: Option<usize>,
    pub g_phi: Option<usize>,
    /// Rotation-search step; default `1/(16 M_R)`.
    pub epsilon: Option<f64>,
    pub rho: Option<f64>,
    /// Fix the detected path count to the true `L`.
    #[serde(default)]
    pub known_paths: bool,
    /// Effective stage-1 noise power override (residual self-interference
    /// folded in); defaults to the experiment noise power.
    pub noise_dbm: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage2Overrides {
    /// Subframe count `C`; default `ceil(N/M)`.
    pub subframes: Option<usize>,
    /// Slots per subframe `T2`; default `K`.
    pub slots_per_subframe: Option<usize>,
    pub kappa_max: Option<f64>,
    #[serde(default)]
    pub rank_policy: RankPolicy,
}

fn scalar_or_list<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

fn default_timing() -> bool {
    true
}

/// Complete description of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub geometry: GeometryConfig,
    /// User count `K`.
    pub users: usize,
    /// BS-RIS path count `L`.
    pub bs_ris_paths: usize,
    /// Paths per user `U_k`.
    pub user_paths: usize,
    /// Transmit power sweep in dBm (scalar accepted).
    #[serde(deserialize_with = "scalar_or_list")]
    pub p_dbm: Vec<f64>,
    /// Noise power in dBm; omit for exactly noiseless runs.
    pub noise_dbm: Option<f64>,
    pub fc_ghz: f64,
    pub d_br_m: f64,
    pub d_ru_m: f64,
    pub beta_bs_ris: f64,
    pub beta_ris_user: f64,
    pub shadow_sigma_db: f64,
    /// RIS-user re-estimations per frame (`gamma`), for overhead accounting.
    pub gamma_reestimations: usize,
    /// RIS shapes `[n1, n2]` to sweep; empty means the geometry's shape.
    #[serde(default)]
    pub n_sweep: Vec<[usize; 2]>,
    #[serde(default)]
    pub stage1: Stage1Overrides,
    #[serde(default)]
    pub stage2: Stage2Overrides,
    pub estimators: EstimatorSelection,
    pub trials: usize,
    pub seed: u64,
    /// Snap BS-RIS path angles onto the estimation grids (distinct bins).
    #[serde(default)]
    pub on_grid: bool,
    /// Record only pilot-slot counts, skipping channel simulation; used for
    /// overhead studies at RIS sizes where simulation is infeasible.
    #[serde(default)]
    pub overhead_only: bool,
    /// Record wall-clock time per run; disable for byte-identical reruns.
    #[serde(default = "default_timing")]
    pub include_timing: bool,
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub n1: usize,
    pub n2: usize,
    pub p_dbm: f64,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.experiment_id.is_empty() {
            return bad("experiment_id must be non-empty".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.p_dbm.is_empty() {
            return bad("p_dbm sweep must be non-empty".into());
        }
        if self.users == 0 || self.bs_ris_paths == 0 || self.user_paths == 0 {
            return bad("users, bs_ris_paths, user_paths must be at least 1".into());
        }
        if self.fc_ghz <= 0.0 || self.d_br_m <= 0.0 || self.d_ru_m <= 0.0 {
            return bad("fc_ghz and distances must be positive".into());
        }
        for &[n1, n2] in &self.n_sweep {
            self.geometry_for(n1, n2)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        self.geometry_for(self.geometry.n1, self.geometry.n2)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for point in self.sweep_points() {
            let geometry = self
                .geometry_for(point.n1, point.n2)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            let s1 = self.stage1_config(&geometry);
            if !self.overhead_only {
                s1.validate()
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
            let s2 = self.stage2_config(&geometry);
            if s2.slots_per_subframe < self.users {
                return bad(format!(
                    "stage2 slots_per_subframe {} below user count {}",
                    s2.slots_per_subframe, self.users
                ));
            }
        }
        Ok(())
    }

    pub fn geometry_for(
        &self,
        n1: usize,
        n2: usize,
    ) -> Result<ArrayGeometry, crate::channel::ChannelError> {
        ArrayGeometry::with_spacing(
            self.geometry.m_r,
            self.geometry.m_t,
            n1,
            n2,
            self.geometry.d_over_lambda,
        )
    }

    /// Cross product of the RIS-shape sweep and the power sweep.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let shapes: Vec<[usize; 2]> = if self.n_sweep.is_empty() {
            vec![[self.geometry.n1, self.geometry.n2]]
        } else {
            self.n_sweep.clone()
        };
        let mut points = Vec::new();
        let mut index = 0;
        for &[n1, n2] in &shapes {
            for &p in &self.p_dbm {
                points.push(SweepPoint {
                    index,
                    n1,
                    n2,
                    p_dbm: p,
                });
                index += 1;
            }
        }
        points
    }

    /// Stage-1 configuration at a sweep geometry (power and noise are per
    /// point; the runner fills them in).
    pub fn stage1_config(&self, geometry: &ArrayGeometry) -> FdStage1Config {
        let mut cfg = FdStage1Config::defaults(*geometry, self.bs_ris_paths);
        if let Some(b) = self.stage1.subframes {
            cfg.subframes = b;
        }
        if let Some(t) = self.stage1.slots_per_subframe {
            cfg.slots_per_subframe = t;
        }
        if let Some(g) = self.stage1.g_iota {
            cfg.g_iota = g;
        }
        if let Some(g) = self.stage1.g_phi {
            cfg.g_phi = g;
        }
        if let Some(e) = self.stage1.epsilon {
            cfg.epsilon = e;
        }
        if let Some(r) = self.stage1.rho {
            cfg.rho = r;
        }
        if self.stage1.known_paths {
            cfg.known_paths = Some(self.bs_ris_paths);
        }
        cfg
    }

    /// Stage-2 configuration at a sweep geometry.
    pub fn stage2_config(&self, geometry: &ArrayGeometry) -> Stage2Config {
        let mut cfg = Stage2Config::defaults(geometry.m(), geometry.n(), self.users);
        if let Some(c) = self.stage2.subframes {
            cfg.subframes = c;
        }
        if let Some(t) = self.stage2.slots_per_subframe {
            cfg.slots_per_subframe = t;
        }
        if let Some(k) = self.stage2.kappa_max {
            cfg.kappa_max = k;
        }
        cfg.rank_policy = self.stage2.rank_policy;
        cfg
    }

    /// Channel-sampling scenario at a sweep geometry.
    pub fn scenario(&self, geometry: &ArrayGeometry) -> Scenario {
        let s1 = self.stage1_config(geometry);
        Scenario {
            geometry: *geometry,
            users: self.users,
            bs_ris_paths: self.bs_ris_paths,
            user_paths: self.user_paths,
            fc_ghz: self.fc_ghz,
            d_br_m: self.d_br_m,
            d_ru_m: self.d_ru_m,
            beta_br: self.beta_bs_ris,
            beta_ru: self.beta_ris_user,
            shadow_sigma_db: self.shadow_sigma_db,
            on_grid: self.on_grid.then_some(GridSnap {
                g_iota: s1.g_iota,
                g_phi: s1.g_phi,
            }),
        }
    }

    /// Noise power in watts; `None` noise_dbm means exactly zero.
    pub fn noise_w(&self) -> f64 {
        self.noise_dbm.map(dbm_to_watts).unwrap_or(0.0)
    }

    /// Stage-1 effective noise power in watts.
    pub fn stage1_noise_w(&self) -> f64 {
        self.stage1
            .noise_dbm
            .map(dbm_to_watts)
            .unwrap_or_else(|| self.noise_w())
    }

    /// Bundled presets. `smoke` is a noiseless on-grid exactness check;
    /// `fig3` sweeps the RIS size, `fig4` the transmit power, and `fig5`
    /// tabulates pilot overhead at full scale without simulating.
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let base = ExperimentConfig {
            experiment_id: String::new(),
            geometry: GeometryConfig {
                m_r: 16,
                m_t: 16,
                n1: 6,
                n2: 6,
                d_over_lambda: 0.5,
            },
            users: 4,
            bs_ris_paths: 3,
            user_paths: 4,
            p_dbm: vec![20.0],
            noise_dbm: Some(-100.0),
            fc_ghz: 28.0,
            d_br_m: 10.0,
            d_ru_m: 50.0,
            beta_bs_ris: 2.2,
            beta_ris_user: 2.2,
            shadow_sigma_db: 2.0,
            gamma_reestimations: 2,
            n_sweep: Vec::new(),
            stage1: Stage1Overrides::default(),
            stage2: Stage2Overrides::default(),
            estimators: EstimatorSelection::Both,
            trials: 50,
            seed: 1,
            on_grid: false,
            overhead_only: false,
            include_timing: true,
        };
        let cfg = match name {
            // Noiseless on-grid single-path pipeline exactness at desk size.
            "smoke" => ExperimentConfig {
                experiment_id: "smoke".into(),
                geometry: GeometryConfig {
                    m_r: 8,
                    m_t: 8,
                    n1: 4,
                    n2: 4,
                    d_over_lambda: 0.5,
                },
                users: 2,
                bs_ris_paths: 1,
                user_paths: 2,
                p_dbm: vec![20.0],
                noise_dbm: None,
                shadow_sigma_db: 0.0,
                stage1: Stage1Overrides {
                    g_iota: Some(60),
                    g_phi: Some(60),
                    known_paths: true,
                    ..Stage1Overrides::default()
                },
                // C = N/L subframes give the stacked regressor full rank.
                stage2: Stage2Overrides {
                    subframes: Some(16),
                    ..Stage2Overrides::default()
                },
                trials: 2,
                seed: 7,
                on_grid: true,
                ..base
            },
            // NMSE against RIS size, desk-scaled: M = 32, N in {16, 36, 64}.
            "fig3" => ExperimentConfig {
                experiment_id: "fig3".into(),
                n_sweep: vec![[4, 4], [6, 6], [8, 8]],
                stage2: Stage2Overrides {
                    rank_policy: RankPolicy::MinNorm,
                    ..Stage2Overrides::default()
                },
                seed: 11,
                ..base
            },
            // NMSE against transmit power at N = 36.
            "fig4" => ExperimentConfig {
                experiment_id: "fig4".into(),
                p_dbm: vec![0.0, 10.0, 20.0, 30.0],
                stage2: Stage2Overrides {
                    rank_policy: RankPolicy::MinNorm,
                    ..Stage2Overrides::default()
                },
                seed: 12,
                ..base
            },
            // Pilot-overhead table at the full array scale (no simulation).
            "fig5" => ExperimentConfig {
                experiment_id: "fig5".into(),
                geometry: GeometryConfig {
                    m_r: 40,
                    m_t: 40,
                    n1: 4,
                    n2: 4,
                    d_over_lambda: 0.5,
                },
                n_sweep: vec![[4, 4], [10, 10], [25, 40], [100, 100]],
                trials: 1,
                overhead_only: true,
                seed: 13,
                ..base
            },
            other => return Err(ConfigError::UnknownPreset(other.to_string())),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
