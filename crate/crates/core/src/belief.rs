//! Compact belief wire format for low-bandwidth monitoring.
//!
//! Little-endian layout: byte 0 magic `0xB7`, byte 1 the cluster count
//! `k`, then 16 bytes per cluster: i16 x, i16 y (centimeters), i16
//! theta (radians x 1e4), u16 mass (x 1/65535), u16 position variance
//! (cm^2, saturating), u16 orientation variance (x 1/65535), u32
//! member count. Total size is `2 + 16k` bytes.

use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::clustering::{internal_variance, Cluster, ClusteringResult, MAX_CLUSTERS};
use crate::geom::Point2;

/// First byte of every serialized belief.
pub const BELIEF_MAGIC: u8 = 0xB7;

const CLUSTER_BYTES: usize = 16;
const HEADER_BYTES: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BeliefError {
    /// Bad magic byte, impossible cluster count, or wrong length.
    MalformedBelief { reason: &'static str },
}

impl fmt::Display for BeliefError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BeliefError::MalformedBelief { reason } => {
                write!(f, "malformed belief payload: {reason}")
            }
        }
    }
}

impl core::error::Error for BeliefError {}

/// Serialized size in bytes for a mixture of `k` clusters.
pub const fn belief_size(k: usize) -> usize {
    HEADER_BYTES + CLUSTER_BYTES * k
}

/// Encodes a clustering into the compact wire format.
///
/// Quantization: positions to 1 cm, angles to 1e-4 rad, masses and
/// circular variances to 1/65535, position variance to 1 cm^2
/// (saturating at 6.5535 m^2). Values outside representable ranges
/// are clamped.
pub fn serialize_belief(result: &ClusteringResult) -> Vec<u8> {
    debug_assert!(result.k >= 1 && result.k <= MAX_CLUSTERS);
    debug_assert_eq!(result.k, result.clusters.len());
    let mut out = Vec::with_capacity(belief_size(result.clusters.len()));
    out.push(BELIEF_MAGIC);
    out.push(result.clusters.len() as u8);
    for c in &result.clusters {
        push_i16(&mut out, quant_i16(c.mean_xy.x * 100.0));
        push_i16(&mut out, quant_i16(c.mean_xy.y * 100.0));
        push_i16(&mut out, quant_i16(c.mean_theta * 1.0e4));
        push_u16(&mut out, quant_u16(c.mass * 65535.0));
        push_u16(&mut out, quant_u16(c.position_variance() * 1.0e4));
        push_u16(&mut out, quant_u16(c.var_theta * 65535.0));
        out.extend_from_slice(&(c.member_count as u32).to_le_bytes());
    }
    out
}

/// Decodes the compact wire format.
///
/// Cluster order is taken from the payload as-is; `best_index` is
/// recomputed as the argmax of mass and the internal variances from
/// the dequantized clusters. Quantized masses are not renormalized.
pub fn deserialize_belief(bytes: &[u8]) -> Result<ClusteringResult, BeliefError> {
    if bytes.len() < HEADER_BYTES {
        return Err(BeliefError::MalformedBelief {
            reason: "shorter than the 2-byte header",
        });
    }
    if bytes[0] != BELIEF_MAGIC {
        return Err(BeliefError::MalformedBelief {
            reason: "bad magic byte",
        });
    }
    let k = bytes[1] as usize;
    if !(1..=MAX_CLUSTERS).contains(&k) {
        return Err(BeliefError::MalformedBelief {
            reason: "cluster count outside 1..=5",
        });
    }
    if bytes.len() != belief_size(k) {
        return Err(BeliefError::MalformedBelief {
            reason: "length does not match 2 + 16k",
        });
    }

    let mut clusters = Vec::with_capacity(k);
    for i in 0..k {
        let at = HEADER_BYTES + i * CLUSTER_BYTES;
        let x = read_i16(bytes, at) as f64 / 100.0;
        let y = read_i16(bytes, at + 2) as f64 / 100.0;
        let theta = read_i16(bytes, at + 4) as f64 / 1.0e4;
        let mass = read_u16(bytes, at + 6) as f64 / 65535.0;
        let var_p = read_u16(bytes, at + 8) as f64 / 1.0e4;
        let var_o = read_u16(bytes, at + 10) as f64 / 65535.0;
        let member_count = u32::from_le_bytes(
            bytes[at + 12..at + 16]
                .try_into()
                .expect("slice is 4 bytes"),
        ) as usize;
        // Only the covariance trace crosses the wire; reconstruct it
        // isotropically.
        let half = var_p / 2.0;
        clusters.push(Cluster {
            mean_xy: Point2::new(x, y),
            cov_xy: [[half, 0.0], [0.0, half]],
            mean_theta: theta,
            var_theta: var_o,
            mass,
            member_count,
        });
    }

    let best_index = clusters
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.mass.total_cmp(&b.mass).then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .expect("k >= 1");
    let (var_p, var_o) = internal_variance(&clusters);
    Ok(ClusteringResult {
        k,
        best_index,
        var_p,
        var_o,
        clusters,
    })
}

fn quant_i16(scaled: f64) -> i16 {
    let r = scaled.round();
    if r <= i16::MIN as f64 {
        i16::MIN
    } else if r >= i16::MAX as f64 {
        i16::MAX
    } else {
        r as i16
    }
}

fn quant_u16(scaled: f64) -> u16 {
    let r = scaled.round();
    if r <= 0.0 {
        0
    } else if r >= u16::MAX as f64 {
        u16::MAX
    } else {
        r as u16
    }
}

fn push_i16(out: &mut Vec<u8>, v: i16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn read_i16(bytes: &[u8], at: usize) -> i16 {
    i16::from_le_bytes(bytes[at..at + 2].try_into().expect("slice is 2 bytes"))
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes(bytes[at..at + 2].try_into().expect("slice is 2 bytes"))
}
