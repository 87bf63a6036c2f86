//! Monte-Carlo localization: a 3-DOF particle filter over
//! `(x, y, theta)` fusing odometry deltas and landmark sightings.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::angles::wrap_angle;
use crate::field::{FieldSpec, LandmarkClass};
use crate::geom::Point2;

/// Default particle count for a filter instance.
pub const DEFAULT_PARTICLE_COUNT: usize = 500;

/// Floor applied to likelihood sigmas so zero-noise configurations
/// degrade to near-delta densities instead of dividing by zero.
const SIGMA_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LocalizationError {
    /// Total observation likelihood underflowed to zero; the caller
    /// must trigger recovery resampling. Weights are left untouched.
    AllWeightsZero,
    /// A particle set needs at least one particle with positive,
    /// finite weight.
    InvalidParticles(&'static str),
    /// A noise parameter violates its documented range.
    InvalidNoise(&'static str),
}

impl fmt::Display for LocalizationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalizationError::AllWeightsZero => {
                write!(f, "all particle weights underflowed to zero")
            }
            LocalizationError::InvalidParticles(what) => write!(f, "invalid particle set: {what}"),
            LocalizationError::InvalidNoise(what) => write!(f, "invalid noise config: {what}"),
        }
    }
}

impl core::error::Error for LocalizationError {}

/// One pose hypothesis with an importance weight.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Particle {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub weight: f64,
}

impl Particle {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Robot-frame displacement reported by odometry since the last step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OdometryDelta {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

/// One landmark sighting in the robot frame.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObservationSample {
    pub landmark_class: LandmarkClass,
    pub bearing: f64,
    pub distance: f64,
}

/// Filter noise model and the exploration knob.
///
/// Odometry sigmas scale with the motion magnitude (per metre / per
/// radian moved); the bearing sigma is absolute and the distance sigma
/// is a fraction of the predicted range. `exploration_rate` is the
/// fraction of particles redrawn uniformly at each resampling; lowering
/// it expresses higher confidence in odometry.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseConfig {
    pub odo_sigma_trans_m: f64,
    pub odo_sigma_rot_rad: f64,
    pub obs_sigma_bearing_rad: f64,
    pub obs_sigma_distance_rel: f64,
    pub exploration_rate: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            odo_sigma_trans_m: 0.1,
            odo_sigma_rot_rad: 0.1,
            obs_sigma_bearing_rad: 0.05,
            obs_sigma_distance_rel: 0.05,
            exploration_rate: 0.05,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), LocalizationError> {
        let sigmas = [
            self.odo_sigma_trans_m,
            self.odo_sigma_rot_rad,
            self.obs_sigma_bearing_rad,
            self.obs_sigma_distance_rel,
        ];
        if sigmas.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(LocalizationError::InvalidNoise("sigmas must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.exploration_rate) {
            return Err(LocalizationError::InvalidNoise("exploration_rate must be in [0, 1]"));
        }
        Ok(())
    }
}

/// A fixed-size set of weighted pose hypotheses.
///
/// Weights are kept normalized (they sum to 1) by every operation that
/// changes them.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet {
    particles: Vec<Particle>,
}

impl ParticleSet {
    /// Particles drawn uniformly over the field with uniform heading
    /// and equal weights.
    pub fn uniform(field: &FieldSpec, count: usize, rng: &mut impl Rng) -> Self {
        assert!(count >= 1, "particle count must be at least 1");
        let w = 1.0 / count as f64;
        let particles = (0..count).map(|_| draw_uniform(field, w, rng)).collect();
        ParticleSet { particles }
    }

    /// Wraps externally produced particles, normalizing their weights.
    pub fn from_particles(mut particles: Vec<Particle>) -> Result<Self, LocalizationError> {
        if particles.is_empty() {
            return Err(LocalizationError::InvalidParticles("empty set"));
        }
        let mut total = 0.0;
        for p in &particles {
            if !(p.weight >= 0.0) || !p.weight.is_finite() {
                return Err(LocalizationError::InvalidParticles(
                    "weights must be non-negative and finite",
                ));
            }
            total += p.weight;
        }
        if total <= 0.0 {
            return Err(LocalizationError::InvalidParticles("total weight must be positive"));
        }
        for p in &mut particles {
            p.weight /= total;
            p.theta = wrap_angle(p.theta);
        }
        Ok(ParticleSet { particles })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Weighted mean position of the whole set.
    pub fn weighted_mean_xy(&self) -> Point2 {
        let mut mean = Point2::new(0.0, 0.0);
        for p in &self.particles {
            mean = mean + p.position() * p.weight;
        }
        mean
    }

    pub fn reset_uniform_weights(&mut self) {
        let w = 1.0 / self.particles.len() as f64;
        for p in &mut self.particles {
            p.weight = w;
        }
    }

    /// Motion update: advances every particle by `delta` expressed in
    /// its own frame, with zero-mean noise scaled by the motion
    /// magnitude. Weights are unchanged.
    pub fn predict(&mut self, delta: &OdometryDelta, noise: &NoiseConfig, rng: &mut impl Rng) {
        let trans_mag = delta.dx.hypot(delta.dy);
        let sigma_trans = noise.odo_sigma_trans_m * trans_mag;
        let sigma_rot = noise.odo_sigma_rot_rad * delta.dtheta.abs();
        let trans_noise = Normal::new(0.0, sigma_trans).expect("sigma is non-negative");
        let rot_noise = Normal::new(0.0, sigma_rot).expect("sigma is non-negative");
        for p in &mut self.particles {
            let (sin, cos) = p.theta.sin_cos();
            let gx = cos * delta.dx - sin * delta.dy;
            let gy = sin * delta.dx + cos * delta.dy;
            p.x += gx + trans_noise.sample(rng);
            p.y += gy + trans_noise.sample(rng);
            p.theta = wrap_angle(p.theta + delta.dtheta + rot_noise.sample(rng));
        }
    }

    /// Measurement update: multiplies weights by the observation
    /// likelihood under nearest-landmark-of-same-class association and
    /// renormalizes.
    ///
    /// On total underflow returns [`LocalizationError::AllWeightsZero`]
    /// and leaves the weights as they were.
    pub fn update(
        &mut self,
        observations: &[ObservationSample],
        field: &FieldSpec,
        noise: &NoiseConfig,
    ) -> Result<(), LocalizationError> {
        if observations.is_empty() {
            return Ok(());
        }
        let landmarks = field.landmarks();
        let sigma_bearing = noise.obs_sigma_bearing_rad.max(SIGMA_FLOOR);
        let mut new_weights: Vec<f64> = Vec::with_capacity(self.particles.len());
        let mut total = 0.0;
        for p in &self.particles {
            let mut w = p.weight;
            for obs in observations {
                let mut best = 0.0f64;
                let mut found = false;
                for lm in landmarks.iter().filter(|l| l.class == obs.landmark_class) {
                    found = true;
                    let to_lm = lm.position - p.position();
                    let pred_distance = to_lm.norm();
                    let pred_bearing = wrap_angle(to_lm.y.atan2(to_lm.x) - p.theta);
                    let sigma_distance =
                        (noise.obs_sigma_distance_rel * pred_distance).max(SIGMA_FLOOR);
                    let l = gaussian_pdf(wrap_angle(obs.bearing - pred_bearing), sigma_bearing)
                        * gaussian_pdf(obs.distance - pred_distance, sigma_distance);
                    if l > best {
                        best = l;
                    }
                }
                debug_assert!(found, "observed class missing from the landmark map");
                if found {
                    w *= best;
                }
            }
            new_weights.push(w);
            total += w;
        }
        if !(total > 0.0) || !total.is_finite() {
            return Err(LocalizationError::AllWeightsZero);
        }
        for (p, w) in self.particles.iter_mut().zip(new_weights) {
            p.weight = w / total;
        }
        Ok(())
    }

    /// Systematic (low-variance) resampling back to the fixed count,
    /// with `floor(exploration_rate * count)` particles redrawn
    /// uniformly over the field. All weights reset to `1/count`.
    pub fn resample(&mut self, noise: &NoiseConfig, field: &FieldSpec, rng: &mut impl Rng) {
        let n = self.particles.len();
        let n_explore = (noise.exploration_rate * n as f64).floor() as usize;
        let n_explore = n_explore.min(n);
        let n_systematic = n - n_explore;
        let w = 1.0 / n as f64;
        let mut next: Vec<Particle> = Vec::with_capacity(n);
        if n_systematic > 0 {
            let u: f64 = rng.random();
            let step = 1.0 / n_systematic as f64;
            let mut i = 0;
            let mut cumulative = self.particles[0].weight;
            for k in 0..n_systematic {
                let target = (k as f64 + u) * step;
                while cumulative < target && i + 1 < n {
                    i += 1;
                    cumulative += self.particles[i].weight;
                }
                let mut p = self.particles[i];
                p.weight = w;
                next.push(p);
            }
        }
        for _ in 0..n_explore {
            next.push(draw_uniform(field, w, rng));
        }
        self.particles = next;
    }
}

fn draw_uniform(field: &FieldSpec, weight: f64, rng: &mut impl Rng) -> Particle {
    let hl = field.half_length();
    let hw = field.half_width();
    Particle {
        x: rng.random_range(-hl..hl),
        y: rng.random_range(-hw..hw),
        theta: rng.random_range(-PI..PI),
        weight,
    }
}

fn gaussian_pdf(residual: f64, sigma: f64) -> f64 {
    let z = residual / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Effective sample size `1 / sum(w^2)`, in `[1, count]` for
/// normalized weights.
pub fn effective_sample_size(set: &ParticleSet) -> f64 {
    let sum_sq: f64 = set.particles().iter().map(|p| p.weight * p.weight).sum();
    if sum_sq <= 0.0 {
        return 0.0;
    }
    1.0 / sum_sq
}

/// A complete localizer: particle set, noise model, seeded RNG stream
/// and the resampling policy (resample when the effective sample size
/// drops below half the particle count).
#[derive(Clone, Debug)]
pub struct McLocalizer {
    field: FieldSpec,
    noise: NoiseConfig,
    set: ParticleSet,
    rng: ChaCha8Rng,
}

impl McLocalizer {
    /// A localizer with particles spread uniformly over the field.
    pub fn new(
        field: FieldSpec,
        noise: NoiseConfig,
        count: usize,
        seed: u64,
    ) -> Result<Self, LocalizationError> {
        noise.validate()?;
        if count == 0 {
            return Err(LocalizationError::InvalidParticles("count must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = ParticleSet::uniform(&field, count, &mut rng);
        Ok(McLocalizer {
            field,
            noise,
            set,
            rng,
        })
    }

    /// A localizer starting from an externally supplied particle set.
    pub fn with_particles(
        field: FieldSpec,
        noise: NoiseConfig,
        set: ParticleSet,
        seed: u64,
    ) -> Result<Self, LocalizationError> {
        noise.validate()?;
        Ok(McLocalizer {
            field,
            noise,
            set,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn particles(&self) -> &ParticleSet {
        &self.set
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    /// Applies one odometry reading.
    pub fn predict(&mut self, delta: &OdometryDelta) {
        self.set.predict(delta, &self.noise, &mut self.rng);
    }

    /// Applies one batch of landmark sightings, resampling when the
    /// effective sample size halves. Returns true when the
    /// all-weights-zero recovery fired (uniform weights plus one
    /// exploration-heavy resample).
    pub fn observe(&mut self, observations: &[ObservationSample]) -> bool {
        match self.set.update(observations, &self.field, &self.noise) {
            Ok(()) => {
                if effective_sample_size(&self.set) < self.set.len() as f64 / 2.0 {
                    self.set.resample(&self.noise, &self.field, &mut self.rng);
                }
                false
            }
            Err(LocalizationError::AllWeightsZero) => {
                self.set.reset_uniform_weights();
                let recovery = NoiseConfig {
                    exploration_rate: self.noise.exploration_rate.max(0.5),
                    ..self.noise
                };
                self.set.resample(&recovery, &self.field, &mut self.rng);
                true
            }
            Err(_) => unreachable!("update only fails with AllWeightsZero"),
        }
    }
}
