//! Replays a sensor log through the Monte-Carlo localizer, summarizing
//! the particle belief after every observation batch.

use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kickmind_core::{
    select_k, serialize_belief, FieldSpec, McLocalizer, NoiseConfig, ObservationSample,
    OdometryDelta, Particle, ParticleSet, Pose,
};

use crate::loggen::{LogRecord, TruthRow};
use crate::CliError;

/// Gaussian pose prior for a filter that starts roughly knowing where
/// it is; without one the filter starts uniform over the field.
#[derive(Clone, Copy, Debug)]
pub struct InitPrior {
    pub pose: Pose,
    pub sigma_pos_m: f64,
    pub sigma_theta_rad: f64,
    /// Also seed the half-turn twin pose (-x, -y, theta + pi) with half
    /// of the particles. The landmark classes are symmetric under a
    /// half-turn of the field, so a robot that only knows it stands at
    /// one of two symmetric spots (a side-line re-entry) genuinely
    /// holds both hypotheses.
    pub with_twin: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct LocalizeParams {
    pub particle_count: usize,
    pub seed: u64,
    /// Acceptance ratio for growing the cluster count.
    pub ratio: f64,
    pub init: Option<InitPrior>,
}

impl Default for LocalizeParams {
    fn default() -> Self {
        LocalizeParams {
            particle_count: kickmind_core::DEFAULT_PARTICLE_COUNT,
            seed: 0,
            ratio: 0.5,
            init: None,
        }
    }
}

/// Belief summary after one observation batch.
#[derive(Clone, Debug)]
pub struct StepEstimate {
    pub t: f64,
    pub k: usize,
    pub best_x: f64,
    pub best_y: f64,
    pub best_theta: f64,
    pub best_mass: f64,
    pub position_variance: f64,
    pub orientation_variance: f64,
    /// True when the filter fired its lost-recovery on this batch.
    pub recovered: bool,
    /// Compact wire encoding of the full belief.
    pub belief: Vec<u8>,
}

/// Runs the filter over the records (already in time order) and
/// returns one estimate per observation line.
pub fn run_localization(
    field: &FieldSpec,
    noise: &NoiseConfig,
    records: &[LogRecord],
    params: &LocalizeParams,
) -> Result<Vec<StepEstimate>, CliError> {
    let mut root = ChaCha8Rng::seed_from_u64(params.seed);
    let init_seed: u64 = root.random();
    let filter_seed: u64 = root.random();
    let select_seed: u64 = root.random();

    let mut localizer = match &params.init {
        None => McLocalizer::new(*field, *noise, params.particle_count, filter_seed)?,
        Some(prior) => {
            let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
            let w = 1.0 / params.particle_count as f64;
            let particles: Vec<Particle> = (0..params.particle_count)
                .map(|i| {
                    // Odd particles go to the half-turn twin when the prior
                    // carries the two-sided ambiguity.
                    let (cx, cy, ct) = if prior.with_twin && i % 2 == 1 {
                        (-prior.pose.x, -prior.pose.y, prior.pose.theta + PI)
                    } else {
                        (prior.pose.x, prior.pose.y, prior.pose.theta)
                    };
                    Particle {
                        x: cx + prior.sigma_pos_m * rng.sample::<f64, _>(rand_distr::StandardNormal),
                        y: cy + prior.sigma_pos_m * rng.sample::<f64, _>(rand_distr::StandardNormal),
                        theta: ct
                            + prior.sigma_theta_rad
                                * rng.sample::<f64, _>(rand_distr::StandardNormal),
                        weight: w,
                    }
                })
                .collect();
            let set = ParticleSet::from_particles(particles)
                .map_err(|e| CliError::config("invalid init prior", e))?;
            McLocalizer::with_particles(*field, *noise, set, filter_seed)?
        }
    };

    let mut estimates = Vec::new();
    let mut step: u64 = 0;
    for record in records {
        match record {
            LogRecord::Odom(line) => {
                localizer.predict(&OdometryDelta {
                    dx: line.odom[0],
                    dy: line.odom[1],
                    dtheta: line.odom[2],
                });
            }
            LogRecord::Obs(line) => {
                let sightings: Vec<ObservationSample> = line
                    .obs
                    .iter()
                    .map(|o| ObservationSample {
                        landmark_class: o.class,
                        bearing: o.bearing,
                        distance: o.distance,
                    })
                    .collect();
                let recovered = localizer.observe(&sightings);
                let summary = select_k(
                    localizer.particles(),
                    select_seed.wrapping_add(step),
                    params.ratio,
                )?;
                let best = summary.best();
                estimates.push(StepEstimate {
                    t: line.t,
                    k: summary.k,
                    best_x: best.mean_xy.x,
                    best_y: best.mean_xy.y,
                    best_theta: best.mean_theta,
                    best_mass: best.mass,
                    position_variance: best.position_variance(),
                    orientation_variance: best.var_theta,
                    recovered,
                    belief: serialize_belief(&summary),
                });
                step += 1;
            }
        }
    }
    Ok(estimates)
}

/// Parses a line-delimited JSON log, enforcing strictly increasing
/// timestamps.
pub fn parse_log(text: &str) -> Result<Vec<LogRecord>, CliError> {
    let mut records = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: LogRecord = serde_json::from_str(line)
            .map_err(|e| CliError::config(&format!("log line {}", idx + 1), e))?;
        if !(record.t() > last_t) {
            return Err(CliError::Config(format!(
                "log line {}: timestamp {} does not increase",
                idx + 1,
                record.t()
            )));
        }
        last_t = record.t();
        records.push(record);
    }
    if records.is_empty() {
        return Err(CliError::Config("log contains no records".into()));
    }
    Ok(records)
}

/// Parses a `t,x,y,theta` truth trace.
pub fn parse_truth_csv(text: &str) -> Result<Vec<TruthRow>, CliError> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CliError::Config(format!(
                "truth line {}: expected t,x,y,theta",
                idx + 1
            )));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.trim()
                .parse()
                .map_err(|e| CliError::config(&format!("truth line {}", idx + 1), e))
        };
        rows.push(TruthRow {
            t: parse(fields[0])?,
            x: parse(fields[1])?,
            y: parse(fields[2])?,
            theta: parse(fields[3])?,
        });
    }
    if rows.is_empty() {
        return Err(CliError::Config("truth trace contains no rows".into()));
    }
    Ok(rows)
}

/// True pose nearest in time to `t` (truth rows are time-sorted).
pub fn truth_at(truth: &[TruthRow], t: f64) -> TruthRow {
    let idx = truth.partition_point(|row| row.t < t);
    if idx == 0 {
        return truth[0];
    }
    if idx == truth.len() {
        return truth[truth.len() - 1];
    }
    if (truth[idx].t - t).abs() < (t - truth[idx - 1].t).abs() {
        truth[idx]
    } else {
        truth[idx - 1]
    }
}
