//! Angle normalization and circular statistics.

use core::f64::consts::{PI, TAU};

#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Wraps an angle to the interval `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    if !a.is_finite() {
        return a;
    }
    let mut r = a - TAU * (a / TAU).floor();
    // r is now in [0, 2*pi); shift the upper half down.
    if r > PI {
        r -= TAU;
    }
    // Guards the r == 0.0 vs -0.0 and accumulated rounding edge.
    if r <= -PI {
        r = PI;
    }
    r
}

/// Weighted circular mean and variance of headings.
///
/// Returns `(mean, variance)` where the variance is `1 - R`, `R` being
/// the mean resultant length, so it lies in `[0, 1]` (0 for perfectly
/// aligned headings, 1 for a uniform spread). Weights must be
/// non-negative; with zero total weight the mean defaults to 0 and the
/// variance to 1.
pub fn circular_mean_var<I>(samples: I) -> (f64, f64)
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut sum_cos = 0.0;
    let mut sum_sin = 0.0;
    let mut total = 0.0;
    for (theta, w) in samples {
        sum_cos += w * theta.cos();
        sum_sin += w * theta.sin();
        total += w;
    }
    if total <= 0.0 {
        return (0.0, 1.0);
    }
    let mean = sum_sin.atan2(sum_cos);
    let r = (sum_cos.hypot(sum_sin) / total).min(1.0);
    (mean, 1.0 - r)
}
