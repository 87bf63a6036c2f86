//! Validates the particle filter against independent numerics: the
//! measurement update against a dense-grid Bayes posterior, and the
//! motion update against the analytic moments of its noise model.

use kickmind_core::{
    FieldSpec, LandmarkClass, NoiseConfig, ObservationSample, OdometryDelta, Particle,
    ParticleSet, Point2, Pose,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Bearing/distance likelihood of one pose for one observation, under
/// max-likelihood association to a landmark of the same class.
/// Reimplements the filter's documented measurement model.
fn observation_likelihood(
    pose: Pose,
    obs: &ObservationSample,
    field: &FieldSpec,
    noise: &NoiseConfig,
) -> f64 {
    let mut best = 0.0f64;
    for lm in field.landmarks() {
        if lm.class != obs.landmark_class {
            continue;
        }
        let dx = lm.position.x - pose.x;
        let dy = lm.position.y - pose.y;
        let dist = dx.hypot(dy);
        let bearing = wrap(dy.atan2(dx) - pose.theta);
        let sigma_d = (noise.obs_sigma_distance_rel * dist).max(1e-9);
        let l = gauss(wrap(obs.bearing - bearing), noise.obs_sigma_bearing_rad)
            * gauss(obs.distance - dist, sigma_d);
        best = best.max(l);
    }
    best
}

fn gauss(x: f64, sigma: f64) -> f64 {
    let z = x / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

fn wrap(a: f64) -> f64 {
    let mut r = a % (2.0 * std::f64::consts::PI);
    if r > std::f64::consts::PI {
        r -= 2.0 * std::f64::consts::PI;
    } else if r <= -std::f64::consts::PI {
        r += 2.0 * std::f64::consts::PI;
    }
    r
}

fn true_observation(pose: Pose, target: Point2, class: LandmarkClass) -> ObservationSample {
    let dx = target.x - pose.x;
    let dy = target.y - pose.y;
    ObservationSample {
        landmark_class: class,
        bearing: wrap(dy.atan2(dx) - pose.theta),
        distance: dx.hypot(dy),
    }
}

/// One measurement update on a uniform position cloud at known heading
/// must reproduce the dense-grid Bayes posterior (marginalized onto
/// 0.25 m cells) within 5% total variation.
#[test]
fn measurement_update_matches_grid_bayes_posterior() {
    let field = FieldSpec::default();
    let noise = NoiseConfig {
        odo_sigma_trans_m: 0.1,
        odo_sigma_rot_rad: 0.1,
        obs_sigma_bearing_rad: 0.1,
        obs_sigma_distance_rel: 0.1,
        exploration_rate: 0.0,
    };
    let theta0 = 0.9;
    let truth = Pose::new(1.3, -0.8, theta0);
    let marks = field.landmarks();
    let post = marks
        .iter()
        .find(|l| l.class == LandmarkClass::GoalPostBase && l.position.x > 0.0 && l.position.y > 0.0)
        .unwrap();
    let corner = marks
        .iter()
        .find(|l| l.class == LandmarkClass::FieldCorner && l.position.x > 0.0 && l.position.y < 0.0)
        .unwrap();
    let tee = marks
        .iter()
        .find(|l| l.class == LandmarkClass::TCrossing && l.position.y < 0.0)
        .unwrap();
    let observations = vec![
        true_observation(truth, post.position, LandmarkClass::GoalPostBase),
        true_observation(truth, corner.position, LandmarkClass::FieldCorner),
        true_observation(truth, tee.position, LandmarkClass::TCrossing),
    ];

    // Particle side: uniform positions, fixed heading. Self-normalized
    // importance weighting leaves a TV error near sqrt(cells/n), so n
    // must be large for a 0.05 bound regardless of posterior shape.
    let n = 2_000_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let hl = field.half_length();
    let hw = field.half_width();
    let particles: Vec<Particle> = (0..n)
        .map(|_| Particle {
            x: rng.random_range(-hl..hl),
            y: rng.random_range(-hw..hw),
            theta: theta0,
            weight: 1.0,
        })
        .collect();
    let mut set = ParticleSet::from_particles(particles).unwrap();
    set.update(&observations, &field, &noise).unwrap();

    let cols = field.cols() as usize;
    let rows = field.rows() as usize;
    let mut pf_hist = vec![0.0f64; cols * rows];
    for p in set.particles() {
        let cell = field.nearest_cell(p.position());
        pf_hist[field.cell_index(cell)] += p.weight;
    }

    // Dense grid Bayes: uniform prior over positions, same likelihood.
    let step = 0.025;
    let sub = (field.grid_resolution_m() / step).round() as usize;
    assert_eq!(sub, 10);
    let mut grid_hist = vec![0.0f64; cols * rows];
    let mut total = 0.0;
    for iy in 0..rows * sub {
        let y = -hw + (iy as f64 + 0.5) * step;
        for ix in 0..cols * sub {
            let x = -hl + (ix as f64 + 0.5) * step;
            let pose = Pose::new(x, y, theta0);
            let mut l = 1.0;
            for obs in &observations {
                l *= observation_likelihood(pose, obs, &field, &noise);
            }
            grid_hist[(iy / sub) * cols + ix / sub] += l;
            total += l;
        }
    }
    assert!(total > 0.0);
    for v in &mut grid_hist {
        *v /= total;
    }

    let tv: f64 = 0.5
        * pf_hist
            .iter()
            .zip(&grid_hist)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    assert!(tv < 0.05, "total variation {tv}");

    // The posterior concentrates near the true position.
    let mean = set.weighted_mean_xy();
    let err = mean.distance(truth.position());
    assert!(err < 0.25, "posterior mean error {err}");
}

/// The motion update's sample moments must match its model: the mean
/// advances by the rotated delta; position noise is isotropic with
/// sigma proportional to the translation magnitude; heading noise is
/// proportional to the rotation magnitude.
#[test]
fn motion_update_matches_analytic_moments() {
    let noise = NoiseConfig {
        odo_sigma_trans_m: 0.1,
        odo_sigma_rot_rad: 0.05,
        obs_sigma_bearing_rad: 0.1,
        obs_sigma_distance_rel: 0.1,
        exploration_rate: 0.0,
    };
    let n = 400_000usize;
    let (x0, y0, theta0) = (0.5, -0.2, 0.7);
    let particles = vec![
        Particle {
            x: x0,
            y: y0,
            theta: theta0,
            weight: 1.0,
        };
        n
    ];
    let mut set = ParticleSet::from_particles(particles).unwrap();
    let delta = OdometryDelta {
        dx: 0.3,
        dy: 0.1,
        dtheta: 0.2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    set.predict(&delta, &noise, &mut rng);

    let trans_mag = (delta.dx * delta.dx + delta.dy * delta.dy).sqrt();
    let sigma_xy = noise.odo_sigma_trans_m * trans_mag;
    let sigma_th = noise.odo_sigma_rot_rad * delta.dtheta.abs();
    let expect_x = x0 + theta0.cos() * delta.dx - theta0.sin() * delta.dy;
    let expect_y = y0 + theta0.sin() * delta.dx + theta0.cos() * delta.dy;
    let expect_th = theta0 + delta.dtheta;

    let inv = 1.0 / n as f64;
    let mean_x: f64 = set.particles().iter().map(|p| p.x).sum::<f64>() * inv;
    let mean_y: f64 = set.particles().iter().map(|p| p.y).sum::<f64>() * inv;
    let mean_th: f64 = set.particles().iter().map(|p| p.theta).sum::<f64>() * inv;
    let var_x: f64 = set.particles().iter().map(|p| (p.x - mean_x).powi(2)).sum::<f64>() * inv;
    let var_y: f64 = set.particles().iter().map(|p| (p.y - mean_y).powi(2)).sum::<f64>() * inv;
    let cov_xy: f64 = set
        .particles()
        .iter()
        .map(|p| (p.x - mean_x) * (p.y - mean_y))
        .sum::<f64>()
        * inv;
    let var_th: f64 =
        set.particles().iter().map(|p| (p.theta - mean_th).powi(2)).sum::<f64>() * inv;

    // Mean standard error ~ sigma/sqrt(n) = 5e-5; allow 5 of them.
    assert!((mean_x - expect_x).abs() < 3e-4, "mean x {mean_x} vs {expect_x}");
    assert!((mean_y - expect_y).abs() < 3e-4, "mean y {mean_y} vs {expect_y}");
    assert!((mean_th - expect_th).abs() < 3e-4, "mean theta {mean_th} vs {expect_th}");
    // Variance standard error ~ sigma^2 sqrt(2/n) ~ 0.5% relative.
    assert!((var_x / (sigma_xy * sigma_xy) - 1.0).abs() < 0.02, "var x {var_x}");
    assert!((var_y / (sigma_xy * sigma_xy) - 1.0).abs() < 0.02, "var y {var_y}");
    assert!(cov_xy.abs() < 3.0 * sigma_xy * sigma_xy / (n as f64).sqrt() * 5.0);
    assert!((var_th / (sigma_th * sigma_th) - 1.0).abs() < 0.02, "var theta {var_th}");
}

/// Weights survive prediction untouched and particles stay finite.
#[test]
fn prediction_preserves_weights() {
    let field = FieldSpec::default();
    let noise = NoiseConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut set = ParticleSet::uniform(&field, 1000, &mut rng);
    let before: Vec<f64> = set.particles().iter().map(|p| p.weight).collect();
    set.predict(
        &OdometryDelta {
            dx: 0.05,
            dy: 0.0,
            dtheta: 0.1,
        },
        &noise,
        &mut rng,
    );
    let after: Vec<f64> = set.particles().iter().map(|p| p.weight).collect();
    assert_eq!(before, after);
    assert!(set
        .particles()
        .iter()
        .all(|p| p.x.is_finite() && p.y.is_finite() && p.theta.is_finite()));
}
