//! Synthetic sensor logs for the localizer: a robot drives a scripted
//! or random path over the field at 10 Hz, logging noisy odometry
//! deltas and noisy landmark sightings gated by a field of view.
//!
//! Line formats, one JSON object per line, timestamps strictly
//! increasing:
//!
//! ```text
//! {"t": 1.4, "odom": [dx, dy, dtheta]}
//! {"t": 1.45, "obs": [{"class": "goal_post_base", "bearing": 0.1, "distance": 3.2}]}
//! ```
//!
//! Odometry deltas are in the robot frame before the step. Sightings
//! are taken from the true pose after the step and stamped half a tick
//! later than the odometry line they follow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use kickmind_core::{FieldSpec, LandmarkClass, NoiseConfig, Point2, Pose};

/// One landmark sighting in a log line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObsEntry {
    pub class: LandmarkClass,
    pub bearing: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdomLine {
    pub t: f64,
    /// Robot-frame displacement `[dx, dy, dtheta]` over one tick.
    pub odom: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObsLine {
    pub t: f64,
    pub obs: Vec<ObsEntry>,
}

/// One parsed log line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogRecord {
    Odom(OdomLine),
    Obs(ObsLine),
}

impl LogRecord {
    pub fn t(&self) -> f64 {
        match self {
            LogRecord::Odom(l) => l.t,
            LogRecord::Obs(l) => l.t,
        }
    }
}

/// True pose at one tick, for error evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// A generated log plus its ground truth trace.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedLog {
    pub records: Vec<LogRecord>,
    pub truth: Vec<TruthRow>,
}

/// Motion and sensing parameters of the simulated robot.
#[derive(Clone, Copy, Debug)]
pub struct LogGenConfig {
    pub duration_s: f64,
    pub dt_s: f64,
    /// Full field-of-view angle; a landmark is visible when its
    /// absolute bearing is at most half of this.
    pub fov_rad: f64,
    pub max_range_m: f64,
    pub walk_speed_mps: f64,
    pub turn_speed_radps: f64,
    /// In-place rotation rate during scan phases.
    pub scan_rate_radps: f64,
}

impl Default for LogGenConfig {
    fn default() -> Self {
        LogGenConfig {
            duration_s: 120.0,
            dt_s: 0.1,
            fov_rad: 1.4,
            max_range_m: 12.0,
            walk_speed_mps: 0.3,
            turn_speed_radps: 1.0,
            scan_rate_radps: 0.7,
        }
    }
}

fn wrap(a: f64) -> f64 {
    let mut x = a % core::f64::consts::TAU;
    if x > core::f64::consts::PI {
        x -= core::f64::consts::TAU;
    } else if x <= -core::f64::consts::PI {
        x += core::f64::consts::TAU;
    }
    x
}

fn gauss(rng: &mut impl Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        sigma * rng.sample::<f64, _>(rand_distr::StandardNormal)
    }
}

struct LogBuilder<'a> {
    field: &'a FieldSpec,
    noise: &'a NoiseConfig,
    cfg: LogGenConfig,
    rng: ChaCha8Rng,
    pose: Pose,
    /// Ticks elapsed; the clock is `tick * dt` so it cannot drift.
    tick: u64,
    t: f64,
    records: Vec<LogRecord>,
    truth: Vec<TruthRow>,
}

impl<'a> LogBuilder<'a> {
    fn new(
        field: &'a FieldSpec,
        noise: &'a NoiseConfig,
        cfg: LogGenConfig,
        seed: u64,
        start: Pose,
    ) -> Self {
        let mut b = LogBuilder {
            field,
            noise,
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pose: start,
            tick: 0,
            t: 0.0,
            records: Vec::new(),
            truth: Vec::new(),
        };
        b.truth.push(TruthRow {
            t: 0.0,
            x: start.x,
            y: start.y,
            theta: start.theta,
        });
        // Pre-motion sighting so the filter sees something at t = 0.
        b.emit_observations(b.cfg.dt_s / 2.0);
        b
    }

    /// Moves the true pose by a world-frame step, logging the noisy
    /// robot-frame odometry and the sightings after the step.
    fn step(&mut self, dx_world: f64, dy_world: f64, dtheta: f64) {
        let (sin0, cos0) = self.pose.theta.sin_cos();
        let rdx = cos0 * dx_world + sin0 * dy_world;
        let rdy = -sin0 * dx_world + cos0 * dy_world;
        let mag = (rdx * rdx + rdy * rdy).sqrt();

        self.pose = Pose::new(
            self.pose.x + dx_world,
            self.pose.y + dy_world,
            wrap(self.pose.theta + dtheta),
        );
        self.tick += 1;
        self.t = self.tick as f64 * self.cfg.dt_s;

        let measured = [
            rdx + gauss(&mut self.rng, self.noise.odo_sigma_trans_m * mag),
            rdy + gauss(&mut self.rng, self.noise.odo_sigma_trans_m * mag),
            dtheta + gauss(&mut self.rng, self.noise.odo_sigma_rot_rad * dtheta.abs()),
        ];
        self.records.push(LogRecord::Odom(OdomLine {
            t: self.t,
            odom: measured,
        }));
        self.truth.push(TruthRow {
            t: self.t,
            x: self.pose.x,
            y: self.pose.y,
            theta: self.pose.theta,
        });
        self.emit_observations(self.t + self.cfg.dt_s / 2.0);
    }

    fn emit_observations(&mut self, stamp: f64) {
        let mut sightings = Vec::new();
        for lm in self.field.landmarks() {
            let distance = self.pose.position().distance(lm.position);
            let bearing = self.pose.bearing_to(lm.position);
            if bearing.abs() <= self.cfg.fov_rad / 2.0 && distance <= self.cfg.max_range_m {
                sightings.push(ObsEntry {
                    class: lm.class,
                    bearing: wrap(
                        bearing + gauss(&mut self.rng, self.noise.obs_sigma_bearing_rad),
                    ),
                    distance: (distance
                        + gauss(&mut self.rng, self.noise.obs_sigma_distance_rel * distance))
                    .max(0.05),
                });
            }
        }
        if !sightings.is_empty() {
            self.records.push(LogRecord::Obs(ObsLine {
                t: stamp,
                obs: sightings,
            }));
        }
    }

    /// Turns in place toward `heading`, one tick per call, then walks
    /// straight to `target`. Returns true when the target is reached.
    fn tick_toward(&mut self, target: Point2) -> bool {
        let heading = self.pose.position().angle_to(target);
        let err = wrap(heading - self.pose.theta);
        let max_turn = self.cfg.turn_speed_radps * self.cfg.dt_s;
        if err.abs() > max_turn {
            self.step(0.0, 0.0, err.signum() * max_turn);
            return false;
        }
        let dist = self.pose.position().distance(target);
        let step_len = self.cfg.walk_speed_mps * self.cfg.dt_s;
        if dist <= step_len {
            let d = target - self.pose.position();
            self.step(d.x, d.y, err);
            return true;
        }
        let dir = Point2::from_angle(heading) * step_len;
        self.step(dir.x, dir.y, err);
        false
    }

    /// One full in-place revolution, scanning the surroundings.
    fn scan(&mut self) {
        let total = core::f64::consts::TAU;
        let per_tick = self.cfg.scan_rate_radps * self.cfg.dt_s;
        let mut turned = 0.0;
        while turned < total && self.t < self.cfg.duration_s {
            self.step(0.0, 0.0, per_tick);
            turned += per_tick;
        }
    }
}

/// Random move-and-scan wander: the robot repeatedly walks to a random
/// point of the inner field, then scans with a full turn in place.
pub fn generate_move_scan_log(
    field: &FieldSpec,
    noise: &NoiseConfig,
    cfg: LogGenConfig,
    seed: u64,
) -> GeneratedLog {
    let inner_x = field.half_length() - 0.6;
    let inner_y = field.half_width() - 0.6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5_A5A5_A5A5_A5A5);
    let start = Pose::new(
        rng.random_range(-inner_x..inner_x),
        rng.random_range(-inner_y..inner_y),
        rng.random_range(-core::f64::consts::PI..core::f64::consts::PI),
    );
    let mut b = LogBuilder::new(field, noise, cfg, seed, start);
    let mut target = Point2::new(
        rng.random_range(-inner_x..inner_x),
        rng.random_range(-inner_y..inner_y),
    );
    while b.t < cfg.duration_s {
        if b.tick_toward(target) {
            b.scan();
            target = Point2::new(
                rng.random_range(-inner_x..inner_x),
                rng.random_range(-inner_y..inner_y),
            );
        }
    }
    GeneratedLog {
        records: b.records,
        truth: b.truth,
    }
}

/// Side-line re-entry: the robot starts on the lower side line facing
/// into the field, walks straight in, turns toward the opponent goal,
/// walks on and finishes with a scan.
///
/// The landmark map is symmetric under a half-turn of the field, so
/// sightings support the true pose and its 180-degree twin equally;
/// the belief stays bimodal for the whole log.
pub fn generate_side_entry_log(
    field: &FieldSpec,
    noise: &NoiseConfig,
    seed: u64,
    fov_rad: f64,
) -> GeneratedLog {
    let cfg = LogGenConfig {
        duration_s: 60.0,
        fov_rad,
        ..LogGenConfig::default()
    };
    let start = Pose::new(-1.0, -field.half_width(), core::f64::consts::FRAC_PI_2);
    let mut b = LogBuilder::new(field, noise, cfg, seed, start);
    let legs = [Point2::new(-1.0, -field.half_width() + 1.5), Point2::new(0.5, -1.5)];
    for leg in legs {
        while !b.tick_toward(leg) && b.t < cfg.duration_s {}
    }
    b.scan();
    GeneratedLog {
        records: b.records,
        truth: b.truth,
    }
}

/// Serializes records as line-delimited JSON.
pub fn records_to_jsonl(records: &[LogRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("log records serialize infallibly"));
        out.push('\n');
    }
    out
}

/// Serializes the truth trace as `t,x,y,theta` CSV.
pub fn truth_to_csv(truth: &[TruthRow]) -> String {
    let mut out = String::from("t,x,y,theta\n");
    for row in truth {
        out.push_str(&format!("{},{},{},{}\n", row.t, row.x, row.y, row.theta));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn move_scan_log_is_deterministic_and_dense() {
        let field = FieldSpec::default();
        let noise = NoiseConfig::default();
        let cfg = LogGenConfig::default();
        let a = generate_move_scan_log(&field, &noise, cfg, 7);
        let b = generate_move_scan_log(&field, &noise, cfg, 7);
        assert_eq!(a.records, b.records);
        assert_eq!(a.truth, b.truth);

        let obs_lines = a
            .records
            .iter()
            .filter(|r| matches!(r, LogRecord::Obs(_)))
            .count();
        let odom_lines = a.records.len() - obs_lines;
        // 120 s at 10 Hz.
        assert_eq!(odom_lines, 1200);
        assert!(obs_lines > 1000, "only {obs_lines} observation lines");
    }

    #[test]
    fn timestamps_strictly_increase() {
        let field = FieldSpec::default();
        let noise = NoiseConfig::default();
        let log = generate_move_scan_log(&field, &noise, LogGenConfig::default(), 3);
        let mut last = f64::NEG_INFINITY;
        for r in &log.records {
            assert!(r.t() > last);
            last = r.t();
        }
    }

    #[test]
    fn truth_matches_odometry_when_noise_free() {
        let field = FieldSpec::default();
        let noise = NoiseConfig {
            odo_sigma_trans_m: 0.0,
            odo_sigma_rot_rad: 0.0,
            obs_sigma_bearing_rad: 0.0,
            obs_sigma_distance_rel: 0.0,
            exploration_rate: 0.0,
        };
        let log = generate_move_scan_log(&field, &noise, LogGenConfig::default(), 5);
        // Dead-reckon the odometry and compare against the truth trace.
        let mut pose = Pose::new(log.truth[0].x, log.truth[0].y, log.truth[0].theta);
        let mut idx = 1;
        for r in &log.records {
            if let LogRecord::Odom(line) = r {
                let (s, c) = pose.theta.sin_cos();
                pose = Pose::new(
                    pose.x + c * line.odom[0] - s * line.odom[1],
                    pose.y + s * line.odom[0] + c * line.odom[1],
                    pose.theta + line.odom[2],
                );
                let truth = &log.truth[idx];
                assert!((pose.x - truth.x).abs() < 1e-9);
                assert!((pose.y - truth.y).abs() < 1e-9);
                assert!(wrap(pose.theta - truth.theta).abs() < 1e-9);
                idx += 1;
            }
        }
        assert_eq!(idx, log.truth.len());
    }

    #[test]
    fn sightings_respect_the_fov_gate() {
        let field = FieldSpec::default();
        let noise = NoiseConfig {
            obs_sigma_bearing_rad: 0.0,
            obs_sigma_distance_rel: 0.0,
            ..NoiseConfig::default()
        };
        let cfg = LogGenConfig {
            fov_rad: 0.8,
            ..LogGenConfig::default()
        };
        let log = generate_move_scan_log(&field, &noise, cfg, 9);
        for r in &log.records {
            if let LogRecord::Obs(line) = r {
                for s in &line.obs {
                    assert!(s.bearing.abs() <= 0.4 + 1e-12);
                    assert!(s.distance <= 12.0);
                }
            }
        }
    }

    #[test]
    fn side_entry_log_walks_in_from_the_side_line() {
        let field = FieldSpec::default();
        let noise = NoiseConfig::default();
        let log = generate_side_entry_log(&field, &noise, 21, 0.8);
        assert_eq!(log.truth[0].y, -3.0);
        let last = log.truth.last().unwrap();
        assert!(last.y > -2.0, "robot should have entered the field");
        assert!(!log.records.is_empty());
    }

    #[test]
    fn log_lines_parse_back() {
        let field = FieldSpec::default();
        let noise = NoiseConfig::default();
        let log = generate_side_entry_log(&field, &noise, 2, 0.8);
        let text = records_to_jsonl(&log.records);
        for line in text.lines() {
            let parsed: LogRecord = serde_json::from_str(line).unwrap();
            match parsed {
                LogRecord::Odom(l) => assert!(l.t >= 0.0),
                LogRecord::Obs(l) => assert!(!l.obs.is_empty()),
            }
        }
    }
}
