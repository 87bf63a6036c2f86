//! JSON configuration files: field geometry, kick catalog with timing
//! and penalty parameters, and sensor noise.
//!
//! Every loader rejects unknown keys so a typo fails loudly instead of
//! silently falling back to a default.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use kickmind_core::{ActionSet, ApproachModel, FieldSpec, KickModel, NoiseConfig, RewardParams};

use crate::CliError;

/// Reads and parses one JSON config file.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(&format!("cannot read {}", path.display()), e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(&format!("cannot parse {}", path.display()), e))
}

/// Field geometry in meters. Defaults to the standard kid-size pitch:
/// 9 x 6 m, 2.6 m goals, 0.75 m center circle, 0.25 m grid.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    pub length_m: f64,
    pub width_m: f64,
    pub goal_width_m: f64,
    pub center_circle_radius_m: f64,
    pub grid_resolution_m: f64,
    pub out_margin_m: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        let spec = FieldSpec::default();
        FieldConfig {
            length_m: spec.length_m(),
            width_m: spec.width_m(),
            goal_width_m: spec.goal_width_m(),
            center_circle_radius_m: spec.center_circle_radius_m(),
            grid_resolution_m: spec.grid_resolution_m(),
            out_margin_m: spec.out_margin_m(),
        }
    }
}

impl FieldConfig {
    pub fn to_field(self) -> Result<FieldSpec, CliError> {
        FieldSpec::new(
            self.length_m,
            self.width_m,
            self.goal_width_m,
            self.center_circle_radius_m,
            self.grid_resolution_m,
            self.out_margin_m,
        )
        .map_err(|e| CliError::config("invalid field", e))
    }
}

/// Loads a field config, or the default field when no path is given.
pub fn load_field(path: Option<&Path>) -> Result<FieldSpec, CliError> {
    match path {
        Some(p) => read_json::<FieldConfig>(p)?.to_field(),
        None => Ok(FieldSpec::default()),
    }
}

/// Kick catalog plus the robot timing and penalty parameters the
/// planner needs alongside it.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub kicks: Vec<KickModel>,
    pub orientation_count: u32,
    pub approach: ApproachModel,
    pub reward: RewardParams,
    /// Angle quadrature nodes per kick when integrating transition
    /// distributions.
    pub quadrature_points: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        let actions = ActionSet::default();
        PlannerConfig {
            kicks: actions.kicks,
            orientation_count: actions.orientation_count,
            approach: ApproachModel::default(),
            reward: RewardParams::default(),
            quadrature_points: 15,
        }
    }
}

impl PlannerConfig {
    pub fn action_set(&self) -> ActionSet {
        ActionSet {
            kicks: self.kicks.clone(),
            orientation_count: self.orientation_count,
        }
    }
}

/// Loads a planner config, or the built-in three-kick catalog when no
/// path is given.
pub fn load_planner(path: Option<&Path>) -> Result<PlannerConfig, CliError> {
    match path {
        Some(p) => read_json(p),
        None => Ok(PlannerConfig::default()),
    }
}

/// Noise configuration file for the localizer and log generator.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseFileConfig {
    pub odo_sigma_trans_m: f64,
    pub odo_sigma_rot_rad: f64,
    pub obs_sigma_bearing_rad: f64,
    pub obs_sigma_distance_rel: f64,
    pub exploration_rate: f64,
}

impl Default for NoiseFileConfig {
    fn default() -> Self {
        let n = NoiseConfig::default();
        NoiseFileConfig {
            odo_sigma_trans_m: n.odo_sigma_trans_m,
            odo_sigma_rot_rad: n.odo_sigma_rot_rad,
            obs_sigma_bearing_rad: n.obs_sigma_bearing_rad,
            obs_sigma_distance_rel: n.obs_sigma_distance_rel,
            exploration_rate: n.exploration_rate,
        }
    }
}

impl NoiseFileConfig {
    pub fn to_noise(self) -> NoiseConfig {
        NoiseConfig {
            odo_sigma_trans_m: self.odo_sigma_trans_m,
            odo_sigma_rot_rad: self.odo_sigma_rot_rad,
            obs_sigma_bearing_rad: self.obs_sigma_bearing_rad,
            obs_sigma_distance_rel: self.obs_sigma_distance_rel,
            exploration_rate: self.exploration_rate,
        }
    }
}

/// Loads a noise config, or the library defaults when no path is given.
pub fn load_noise(path: Option<&Path>) -> Result<NoiseConfig, CliError> {
    match path {
        Some(p) => Ok(read_json::<NoiseFileConfig>(p)?.to_noise()),
        None => Ok(NoiseConfig::default()),
    }
}
