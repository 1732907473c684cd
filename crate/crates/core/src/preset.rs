//! The reference experiment: 200 links, lengths in [1, 20], alpha = 2.5,
//! beta = 1, mean power, distributed protocol.

use crate::model::TopologyParams;
use crate::sinr::PowerAssignment;

pub const N: usize = 200;
pub const L_MIN: f64 = 1.0;
pub const L_MAX: f64 = 20.0;
pub const ALPHA: f64 = 2.5;
pub const BETA: f64 = 1.0;
pub const SLOTS: u64 = 200_000;
/// Period length coefficient `c` in `theta = ceil(c * log2(n)^2)`.
pub const THETA_COEFF: f64 = 8.0;

/// Square side giving a mean sender spacing equal to the longest link length.
pub fn side() -> f64 {
    L_MAX * (N as f64).sqrt()
}

pub fn topology() -> TopologyParams {
    TopologyParams { n: N, l_min: L_MIN, l_max: L_MAX, side: side(), alpha: ALPHA, beta: BETA, noise: 0.0 }
}

pub fn power() -> PowerAssignment {
    PowerAssignment::Mean
}
