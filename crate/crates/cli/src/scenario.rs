//! Scenario files: everything needed to replay one game situation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use kickmind_core::{FieldSpec, Point2, Pose, RestartState};

use crate::config::{read_json, FieldConfig};
use crate::CliError;

/// Which side a robot plays for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Team {
    Ours,
    Opponents,
}

/// One robot's starting pose.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotStart {
    pub team: Team,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub theta: f64,
}

impl RobotStart {
    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.theta)
    }
}

fn default_max_kicks() -> usize {
    50
}

/// A replayable game situation: field, ball, robots, referee state and
/// the episode caps.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub field: FieldConfig,
    /// Ball position `[x, y]` in meters.
    pub ball_start: [f64; 2],
    pub robots: Vec<RobotStart>,
    #[serde(default)]
    pub restart_state: RestartState,
    pub rng_seed: u64,
    pub max_sim_time_s: f64,
    /// Episode ends after this many kicks even without a goal.
    #[serde(default = "default_max_kicks")]
    pub max_kicks: usize,
}

impl Scenario {
    pub fn ball(&self) -> Point2 {
        Point2::new(self.ball_start[0], self.ball_start[1])
    }

    pub fn our_poses(&self) -> Vec<Pose> {
        self.robots
            .iter()
            .filter(|r| r.team == Team::Ours)
            .map(RobotStart::pose)
            .collect()
    }

    pub fn opponent_positions(&self) -> Vec<Point2> {
        self.robots
            .iter()
            .filter(|r| r.team == Team::Opponents)
            .map(|r| Point2::new(r.x, r.y))
            .collect()
    }

    /// Builds the field and checks the scenario is playable on it.
    pub fn validate(&self) -> Result<FieldSpec, CliError> {
        let field = self.field.to_field()?;
        if !self.ball().x.is_finite() || !self.ball().y.is_finite() {
            return Err(CliError::Config("ball_start must be finite".into()));
        }
        if !field.contains(self.ball()) {
            return Err(CliError::Config(format!(
                "ball_start ({}, {}) is outside the field",
                self.ball_start[0], self.ball_start[1]
            )));
        }
        if self.our_poses().is_empty() {
            return Err(CliError::Config("scenario needs at least one of our robots".into()));
        }
        for (i, robot) in self.robots.iter().enumerate() {
            if !field.in_domain(Point2::new(robot.x, robot.y)) {
                return Err(CliError::Config(format!(
                    "robot {i} starts outside the field domain"
                )));
            }
        }
        if !(self.max_sim_time_s > 0.0) {
            return Err(CliError::Config("max_sim_time_s must be positive".into()));
        }
        if self.max_kicks == 0 {
            return Err(CliError::Config("max_kicks must be at least 1".into()));
        }
        Ok(field)
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let scenario: Scenario = read_json(path)?;
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> &'static str {
        r#"{
            "ball_start": [0.0, 0.0],
            "robots": [
                {"team": "ours", "x": -0.5, "y": 0.0, "theta": 0.0},
                {"team": "opponents", "x": 2.0, "y": 1.0}
            ],
            "restart_state": "kickoff_ours_ball_not_in_play",
            "rng_seed": 7,
            "max_sim_time_s": 120.0
        }"#
    }

    #[test]
    fn parses_with_defaults() {
        let s: Scenario = serde_json::from_str(minimal_json()).unwrap();
        let field = s.validate().unwrap();
        assert_eq!(field.cols(), 36);
        assert_eq!(s.our_poses().len(), 1);
        assert_eq!(s.opponent_positions().len(), 1);
        assert_eq!(s.restart_state, RestartState::KickoffOursBallNotInPlay);
        assert_eq!(s.max_kicks, 50);
    }

    #[test]
    fn rejects_ball_off_field() {
        let mut s: Scenario = serde_json::from_str(minimal_json()).unwrap();
        s.ball_start = [99.0, 0.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn rejects_empty_team() {
        let mut s: Scenario = serde_json::from_str(minimal_json()).unwrap();
        s.robots.retain(|r| r.team == Team::Opponents);
        assert!(s.validate().is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        let json = r#"{"ball_start": [0,0], "robots": [], "rng_seed": 1,
                       "max_sim_time_s": 10.0, "wind_speed": 3.0}"#;
        assert!(serde_json::from_str::<Scenario>(json).is_err());
    }
}
