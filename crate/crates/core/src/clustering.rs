//! Gaussian-mixture summaries of a particle belief: weighted EM over
//! particle positions, variance-driven selection of the mixture size,
//! and per-cluster circular orientation statistics.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::angles::circular_mean_var;
use crate::geom::Point2;
use crate::localization::ParticleSet;

/// Hard cap on the mixture size.
pub const MAX_CLUSTERS: usize = 5;

/// Regularization floor added to covariance diagonals (m^2); keeps
/// components positive definite on arbitrarily tight blobs.
pub const COV_REGULARIZATION: f64 = 1e-6;

/// Default EM iteration cap.
pub const EM_MAX_ITERS: usize = 100;

/// Default EM stop threshold on the log-likelihood improvement.
pub const EM_TOL: f64 = 1e-6;

/// A component's soft weight may not collapse below this.
const MIN_COMPONENT_WEIGHT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClusteringError {
    /// Fewer positively weighted particles than requested clusters.
    InsufficientParticles { have: usize, need: usize },
    /// A mixture component collapsed (soft weight below 1e-6 or no
    /// hard members); the caller falls back to fewer clusters.
    DegenerateComponent,
    /// A parameter violates its documented range.
    InvalidParam(&'static str),
}

impl fmt::Display for ClusteringError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusteringError::InsufficientParticles { have, need } => {
                write!(f, "need {need} positively weighted particles, have {have}")
            }
            ClusteringError::DegenerateComponent => write!(f, "a mixture component collapsed"),
            ClusteringError::InvalidParam(what) => write!(f, "invalid clustering param: {what}"),
        }
    }
}

impl core::error::Error for ClusteringError {}

/// One mixture component with hard-assignment statistics.
///
/// `mass` is the fraction of total particle weight hard-assigned to the
/// cluster; `member_count` the number of assigned particles. Position
/// statistics are weighted over members; orientation uses circular
/// statistics (variance in `[0, 1]`).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cluster {
    pub mean_xy: Point2,
    pub cov_xy: [[f64; 2]; 2],
    pub mean_theta: f64,
    pub var_theta: f64,
    pub mass: f64,
    pub member_count: usize,
}

impl Cluster {
    /// Position variance of the cluster: trace of `cov_xy`.
    pub fn position_variance(&self) -> f64 {
        self.cov_xy[0][0] + self.cov_xy[1][1]
    }
}

/// A selected clustering: components sorted by mass descending (ties
/// by mean position), plus the internal variances of the partition.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusteringResult {
    pub clusters: Vec<Cluster>,
    pub k: usize,
    /// Index of the most massive cluster (0 after sorting).
    pub best_index: usize,
    /// Internal position variance of the partition, m^2.
    pub var_p: f64,
    /// Internal orientation variance of the partition, `[0, 1]`.
    pub var_o: f64,
}

impl ClusteringResult {
    pub fn best(&self) -> &Cluster {
        &self.clusters[self.best_index]
    }
}

/// An EM fit before model selection.
#[derive(Clone, Debug, PartialEq)]
pub struct EmFit {
    pub clusters: Vec<Cluster>,
    pub log_likelihood: f64,
    /// Weighted log-likelihood after each EM iteration; nondecreasing.
    pub ll_history: Vec<f64>,
}

/// Weighted EM fit of a `k`-component Gaussian mixture on particle
/// positions.
///
/// Components carry full 2x2 covariances with a small diagonal
/// regularization. Initialization is weighted k-means++ seeding from
/// the given seed, so the fit is deterministic. The returned clusters
/// hold hard-assignment statistics (maximum responsibility), including
/// circular orientation moments; cluster order follows the internal
/// component order (use [`select_k`] for the sorted, selected result).
pub fn em_fit(
    set: &ParticleSet,
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<EmFit, ClusteringError> {
    if k == 0 {
        return Err(ClusteringError::InvalidParam("k must be at least 1"));
    }
    if max_iters == 0 {
        return Err(ClusteringError::InvalidParam("max_iters must be at least 1"));
    }
    if !(tol >= 0.0) {
        return Err(ClusteringError::InvalidParam("tol must be non-negative"));
    }
    let particles = set.particles();
    let n = particles.len();
    let positive = particles.iter().filter(|p| p.weight > 0.0).count();
    if positive < k {
        return Err(ClusteringError::InsufficientParticles {
            have: positive,
            need: k,
        });
    }

    let xs: Vec<Point2> = particles.iter().map(|p| p.position()).collect();
    let ws: Vec<f64> = particles.iter().map(|p| p.weight).collect();

    // Initialization: k-means++ centers, uniform priors, the global
    // weighted covariance for every component.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = kmeanspp_centers(&xs, &ws, k, &mut rng);
    let global_cov = weighted_covariance(&xs, &ws, weighted_mean(&xs, &ws));
    let mut comps: Vec<Component> = centers
        .into_iter()
        .map(|mean| Component {
            prior: 1.0 / k as f64,
            mean,
            cov: regularized(global_cov),
        })
        .collect();

    let mut resp = vec![0.0f64; n * k];
    let mut ll_history: Vec<f64> = Vec::new();
    for _ in 0..max_iters {
        // E step: responsibilities and the weighted log-likelihood.
        let mut ll = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let mut total = 0.0;
            for (j, comp) in comps.iter().enumerate() {
                let d = comp.prior * gaussian2_pdf(*x, comp.mean, comp.cov);
                resp[i * k + j] = d;
                total += d;
            }
            if total > 0.0 {
                for j in 0..k {
                    resp[i * k + j] /= total;
                }
            } else {
                // Far outlier underflowed every component: spread its
                // responsibility uniformly.
                for j in 0..k {
                    resp[i * k + j] = 1.0 / k as f64;
                }
            }
            ll += ws[i] * total.max(f64::MIN_POSITIVE).ln();
        }
        let improved = match ll_history.last() {
            Some(&prev) => ll - prev,
            None => f64::INFINITY,
        };
        ll_history.push(ll);
        if improved < tol {
            break;
        }

        // M step: weighted component updates.
        for (j, comp) in comps.iter_mut().enumerate() {
            let nj: f64 = (0..n).map(|i| ws[i] * resp[i * k + j]).sum();
            if nj < MIN_COMPONENT_WEIGHT {
                return Err(ClusteringError::DegenerateComponent);
            }
            let mut mean = Point2::new(0.0, 0.0);
            for i in 0..n {
                mean = mean + xs[i] * (ws[i] * resp[i * k + j]);
            }
            mean = mean * (1.0 / nj);
            let mut cov = [[0.0f64; 2]; 2];
            for i in 0..n {
                let d = xs[i] - mean;
                let w = ws[i] * resp[i * k + j];
                cov[0][0] += w * d.x * d.x;
                cov[0][1] += w * d.x * d.y;
                cov[1][1] += w * d.y * d.y;
            }
            cov[0][0] /= nj;
            cov[0][1] /= nj;
            cov[1][1] /= nj;
            cov[1][0] = cov[0][1];
            comp.prior = nj;
            comp.mean = mean;
            comp.cov = regularized(cov);
        }
    }

    // Hard partition by maximum responsibility (ties to the lower
    // component index).
    let mut assignment = vec![0usize; n];
    for i in 0..n {
        let mut best = 0;
        for j in 1..k {
            if resp[i * k + j] > resp[i * k + best] {
                best = j;
            }
        }
        assignment[i] = best;
    }

    let mut clusters = Vec::with_capacity(k);
    for j in 0..k {
        let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == j).collect();
        if members.is_empty() {
            return Err(ClusteringError::DegenerateComponent);
        }
        let mass: f64 = members.iter().map(|&i| ws[i]).sum();
        if mass < MIN_COMPONENT_WEIGHT {
            return Err(ClusteringError::DegenerateComponent);
        }
        let m_xs: Vec<Point2> = members.iter().map(|&i| xs[i]).collect();
        let m_ws: Vec<f64> = members.iter().map(|&i| ws[i]).collect();
        let mean_xy = weighted_mean(&m_xs, &m_ws);
        let cov_xy = regularized(weighted_covariance(&m_xs, &m_ws, mean_xy));
        let (mean_theta, var_theta) = circular_mean_var(
            members
                .iter()
                .map(|&i| (particles[i].theta, particles[i].weight)),
        );
        clusters.push(Cluster {
            mean_xy,
            cov_xy,
            mean_theta,
            var_theta,
            mass,
            member_count: members.len(),
        });
    }

    let log_likelihood = *ll_history.last().expect("at least one EM iteration ran");
    Ok(EmFit {
        clusters,
        log_likelihood,
        ll_history,
    })
}

/// Internal variances of a partition: the member-count weighted mean
/// of per-cluster variances,
/// `Var(C) = sum_i Var(c_i)*|c_i| / sum_i |c_i|`,
/// evaluated for position (trace of `cov_xy`, m^2) and orientation
/// (circular variance). Returns `(var_p, var_o)`.
pub fn internal_variance(clusters: &[Cluster]) -> (f64, f64) {
    debug_assert!(!clusters.is_empty());
    let total: f64 = clusters.iter().map(|c| c.member_count as f64).sum();
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    let var_p = clusters
        .iter()
        .map(|c| c.position_variance() * c.member_count as f64)
        .sum::<f64>()
        / total;
    let var_o = clusters
        .iter()
        .map(|c| c.var_theta * c.member_count as f64)
        .sum::<f64>()
        / total;
    (var_p, var_o)
}

/// Fits mixtures of growing size and keeps adding clusters only while
/// each step at least halves (by `ratio`) the internal position
/// variance; stops at `k = 5` unconditionally and on degenerate
/// components. Returns the accepted clustering sorted by mass
/// descending.
pub fn select_k(set: &ParticleSet, seed: u64, ratio: f64) -> Result<ClusteringResult, ClusteringError> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(ClusteringError::InvalidParam("ratio must be positive"));
    }
    let mut current = em_fit(set, 1, per_k_seed(seed, 1), EM_MAX_ITERS, EM_TOL)?;
    let mut current_var = internal_variance(&current.clusters).0;
    for k in 2..=MAX_CLUSTERS {
        match em_fit(set, k, per_k_seed(seed, k), EM_MAX_ITERS, EM_TOL) {
            Ok(next) => {
                let next_var = internal_variance(&next.clusters).0;
                if next_var < ratio * current_var {
                    current = next;
                    current_var = next_var;
                } else {
                    break;
                }
            }
            Err(ClusteringError::DegenerateComponent)
            | Err(ClusteringError::InsufficientParticles { .. }) => break,
            Err(other) => return Err(other),
        }
    }
    Ok(finalize(current.clusters))
}

/// Sorts clusters (mass descending, then mean position) and computes
/// the partition variances.
pub(crate) fn finalize(mut clusters: Vec<Cluster>) -> ClusteringResult {
    clusters.sort_by(|a, b| {
        b.mass
            .total_cmp(&a.mass)
            .then(a.mean_xy.x.total_cmp(&b.mean_xy.x))
            .then(a.mean_xy.y.total_cmp(&b.mean_xy.y))
    });
    let (var_p, var_o) = internal_variance(&clusters);
    ClusteringResult {
        k: clusters.len(),
        best_index: 0,
        var_p,
        var_o,
        clusters,
    }
}

fn per_k_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Component {
    prior: f64,
    mean: Point2,
    cov: [[f64; 2]; 2],
}

fn weighted_mean(xs: &[Point2], ws: &[f64]) -> Point2 {
    let total: f64 = ws.iter().sum();
    let mut mean = Point2::new(0.0, 0.0);
    for (x, w) in xs.iter().zip(ws) {
        mean = mean + *x * *w;
    }
    mean * (1.0 / total)
}

fn weighted_covariance(xs: &[Point2], ws: &[f64], mean: Point2) -> [[f64; 2]; 2] {
    let total: f64 = ws.iter().sum();
    let mut cov = [[0.0f64; 2]; 2];
    for (x, w) in xs.iter().zip(ws) {
        let d = *x - mean;
        cov[0][0] += w * d.x * d.x;
        cov[0][1] += w * d.x * d.y;
        cov[1][1] += w * d.y * d.y;
    }
    cov[0][0] /= total;
    cov[0][1] /= total;
    cov[1][1] /= total;
    cov[1][0] = cov[0][1];
    cov
}

fn regularized(mut cov: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    cov[0][0] += COV_REGULARIZATION;
    cov[1][1] += COV_REGULARIZATION;
    cov
}

fn gaussian2_pdf(x: Point2, mean: Point2, cov: [[f64; 2]; 2]) -> f64 {
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    debug_assert!(det > 0.0, "regularized covariance must be positive definite");
    let det = det.max(f64::MIN_POSITIVE);
    let d = x - mean;
    // Mahalanobis form with the inverse written out.
    let maha = (cov[1][1] * d.x * d.x - 2.0 * cov[0][1] * d.x * d.y + cov[0][0] * d.y * d.y) / det;
    (-0.5 * maha).exp() / (2.0 * PI * det.sqrt())
}

/// Weighted k-means++ seeding: the first centre is drawn by particle
/// weight, later ones proportional to `w * D^2` to the nearest chosen
/// centre.
fn kmeanspp_centers(xs: &[Point2], ws: &[f64], k: usize, rng: &mut impl Rng) -> Vec<Point2> {
    let n = xs.len();
    let mut centers: Vec<Point2> = Vec::with_capacity(k);
    let total_w: f64 = ws.iter().sum();
    centers.push(xs[draw_index(ws, total_w, rng)]);
    let mut d2 = vec![0.0f64; n];
    while centers.len() < k {
        let last = *centers.last().expect("at least one centre chosen");
        let mut total = 0.0;
        for i in 0..n {
            let dist2 = {
                let d = xs[i] - last;
                d.dot(d)
            };
            if centers.len() == 1 || dist2 < d2[i] {
                d2[i] = dist2;
            }
            total += ws[i] * d2[i];
        }
        if total > 0.0 {
            let scores: Vec<f64> = (0..n).map(|i| ws[i] * d2[i]).collect();
            centers.push(xs[draw_index(&scores, total, rng)]);
        } else {
            // All remaining mass sits on the chosen centres; duplicate
            // one (EM will flag the degenerate component).
            centers.push(xs[draw_index(ws, total_w, rng)]);
        }
    }
    centers
}

fn draw_index(scores: &[f64], total: f64, rng: &mut impl Rng) -> usize {
    debug_assert!(total > 0.0);
    let target: f64 = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    for (i, s) in scores.iter().enumerate() {
        cumulative += s;
        if cumulative >= target && *s > 0.0 {
            return i;
        }
    }
    // Float shortfall: fall back to the last positive score.
    scores
        .iter()
        .rposition(|s| *s > 0.0)
        .expect("total > 0 implies a positive score")
}
