//! Integration of the stochastic kick-outcome density into a discrete
//! transition distribution over ball outcomes.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::field::{BallOutcome, CellId, FieldSpec};
use crate::geom::Point2;

use super::{KickAction, PlannerError};

/// The density is truncated this many sigmas from the mean on both the
/// distance and the angle axis (then renormalized). Public so that
/// simulators sampling kick outcomes can match the integrated model.
pub const TRUNCATION_SIGMAS: f64 = 4.0;

/// Discrete distribution over ball outcomes of one kick action.
///
/// Entries are sorted by outcome, probabilities are positive and sum
/// to 1 within floating-point accumulation error.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionDistribution {
    entries: Vec<(BallOutcome, f64)>,
}

impl TransitionDistribution {
    pub fn entries(&self) -> &[(BallOutcome, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Probability of one outcome (0 when absent).
    pub fn probability(&self, outcome: BallOutcome) -> f64 {
        match self.entries.binary_search_by(|(o, _)| o.cmp(&outcome)) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}

/// Standard normal CDF.
fn phi(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / SQRT_2))
}

/// Integrates the kick density — distance ~ Normal(mean, sigma_d),
/// angle ~ Normal(aim, sigma_a) — over the field grid from the centre
/// of `s`.
///
/// The angle axis uses a midpoint quadrature with `quadrature_points`
/// nodes over ±4 sigma; along each ray the distance mass per grid cell
/// is integrated exactly from the Gaussian CDF between the ray's
/// grid-line crossings. Mass beyond the field boundary goes to the
/// ray's exit outcome (goal or out-of-field). The result is normalized
/// and deterministic.
pub fn transition_distribution(
    s: CellId,
    action: &KickAction,
    field: &FieldSpec,
    quadrature_points: usize,
) -> Result<TransitionDistribution, PlannerError> {
    if quadrature_points == 0 {
        return Err(PlannerError::InvalidModel("quadrature_points must be at least 1"));
    }
    let kick = &action.kick;
    kick.validate()?;
    if kick.mean_distance_m + TRUNCATION_SIGMAS * kick.sigma_distance_m
        < field.grid_resolution_m()
    {
        return Err(PlannerError::DegenerateKick {
            kick: kick.name.clone(),
        });
    }
    let origin = field.center_of(s);
    let aim = action.aim_rad();

    let mut acc: BTreeMap<BallOutcome, f64> = BTreeMap::new();
    if kick.sigma_angle_rad > 0.0 {
        // Midpoint nodes over the truncated angle range, weighted by the
        // Gaussian pdf (the constant node width cancels when normalizing).
        let half_span = TRUNCATION_SIGMAS * kick.sigma_angle_rad;
        let step = 2.0 * half_span / quadrature_points as f64;
        let mut weights = Vec::with_capacity(quadrature_points);
        let mut total_w = 0.0;
        for j in 0..quadrature_points {
            let offset = -half_span + (j as f64 + 0.5) * step;
            let w = (-0.5 * (offset / kick.sigma_angle_rad).powi(2)).exp();
            weights.push((aim + offset, w));
            total_w += w;
        }
        for (angle, w) in weights {
            accumulate_ray(&mut acc, field, origin, angle, kick, w / total_w);
        }
    } else {
        accumulate_ray(&mut acc, field, origin, aim, kick, 1.0);
    }

    let total: f64 = acc.values().sum();
    debug_assert!(total > 0.0);
    let entries: Vec<(BallOutcome, f64)> = acc
        .into_iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(o, p)| (o, p / total))
        .collect();
    Ok(TransitionDistribution { entries })
}

/// Adds the distance-marginal mass of one aim ray, scaled by `weight`.
fn accumulate_ray(
    acc: &mut BTreeMap<BallOutcome, f64>,
    field: &FieldSpec,
    origin: Point2,
    angle: f64,
    kick: &super::KickModel,
    weight: f64,
) {
    let dir = Point2::from_angle(angle);
    let (exit_dist, exit_outcome) = field.ray_exit(origin, dir);
    let mu = kick.mean_distance_m;
    let sigma = kick.sigma_distance_m;

    if sigma <= 0.0 {
        // Deterministic distance: a point mass at mu. Landing exactly on
        // the boundary is still in play (the field is closed).
        let outcome = if mu <= exit_dist {
            BallOutcome::InPlay(field.nearest_cell(origin + dir * mu))
        } else {
            exit_outcome
        };
        *acc.entry(outcome).or_insert(0.0) += weight;
        return;
    }

    let d_lo = (mu - TRUNCATION_SIGMAS * sigma).max(0.0);
    let d_hi = mu + TRUNCATION_SIGMAS * sigma;
    let in_end = d_hi.min(exit_dist);

    if d_lo < in_end {
        // Split the in-field span at every grid-line crossing so each
        // segment lies in a single cell.
        let mut cuts: Vec<f64> = Vec::new();
        axis_crossings(&mut cuts, origin.x + field.half_length(), dir.x, field, field.cols(), d_lo, in_end);
        axis_crossings(&mut cuts, origin.y + field.half_width(), dir.y, field, field.rows(), d_lo, in_end);
        cuts.sort_unstable_by(f64::total_cmp);

        let mut seg_start = d_lo;
        let mut cdf_start = phi((seg_start - mu) / sigma);
        for &cut in cuts.iter().chain(core::iter::once(&in_end)) {
            if cut <= seg_start {
                continue;
            }
            let cdf_end = phi((cut - mu) / sigma);
            let mass = cdf_end - cdf_start;
            if mass > 0.0 {
                let mid = origin + dir * ((seg_start + cut) / 2.0);
                let cell = field.nearest_cell(mid);
                *acc.entry(BallOutcome::InPlay(cell)).or_insert(0.0) += weight * mass;
            }
            seg_start = cut;
            cdf_start = cdf_end;
        }
    }

    if d_hi > exit_dist {
        // Everything past the boundary crossing leaves the field.
        let from = exit_dist.max(d_lo);
        let mass = phi((d_hi - mu) / sigma) - phi((from - mu) / sigma);
        if mass > 0.0 {
            *acc.entry(exit_outcome).or_insert(0.0) += weight * mass;
        }
    }
}

/// Pushes the ray parameters where one axis crosses interior grid
/// lines, restricted to `(lo, hi)`. `offset` is the origin coordinate
/// shifted to the grid frame (0 at the low field edge).
fn axis_crossings(
    cuts: &mut Vec<f64>,
    offset: f64,
    dir: f64,
    field: &FieldSpec,
    n: u32,
    lo: f64,
    hi: f64,
) {
    if dir.abs() < 1e-12 {
        return;
    }
    let res = field.grid_resolution_m();
    for k in 1..n {
        let t = (k as f64 * res - offset) / dir;
        if t > lo && t < hi {
            cuts.push(t);
        }
    }
}
