//! Power assignments, affectance, and SINR feasibility.
//!
//! The affectance of link `dst` caused by link `src` under power `P` is
//!
//! ```text
//! a_src(dst) = min(1, c_dst * (P_src / P_dst) * (len_dst / d(s_src, r_dst))^alpha)
//! c_dst      = beta / (1 - beta * N * len_dst^alpha / P_dst)
//! ```
//!
//! and a set `S` is feasible iff every member's SINR reaches `beta`, which is
//! the same as every member's total incoming affectance staying at most 1.

use crate::error::SinrError;
use crate::model::{Instance, Link};

/// Slack on the affectance-sum side of a feasibility test.
pub const AFFECTANCE_EPS: f64 = 1e-12;
/// Relative slack on the direct SINR side of a feasibility test.
pub const SINR_EPS: f64 = 1e-12;
/// Largest set accepted by [`MaxAvgMode::Exact`].
pub const EXACT_AVG_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum PowerAssignment {
    /// Every link uses the same level.
    Uniform(f64),
    /// `P = len^alpha`.
    Linear,
    /// `P = len^(alpha/2)`.
    Mean,
    /// One entry per link id.
    Custom(Vec<f64>),
}

impl PowerAssignment {
    pub fn power(&self, link: &Link, alpha: f64) -> f64 {
        match self {
            PowerAssignment::Uniform(level) => *level,
            PowerAssignment::Linear => link.length().powf(alpha),
            PowerAssignment::Mean => link.length().powf(alpha / 2.0),
            PowerAssignment::Custom(table) => table[link.id],
        }
    }

    /// Checks that the assignment yields a finite positive power for every link.
    pub fn validate(&self, inst: &Instance) -> Result<(), SinrError> {
        if let PowerAssignment::Custom(table) = self {
            if table.len() != inst.len() {
                return Err(SinrError::PowerTableSize { expected: inst.len(), got: table.len() });
            }
        }
        for link in inst.links() {
            let value = self.power(link, inst.alpha());
            if !(value.is_finite() && value > 0.0) {
                return Err(SinrError::NonPositivePower { id: link.id, value });
            }
        }
        Ok(())
    }

    pub fn powers(&self, inst: &Instance) -> Result<Vec<f64>, SinrError> {
        self.validate(inst)?;
        Ok(inst.links().iter().map(|l| self.power(l, inst.alpha())).collect())
    }
}

/// Power of a single link under `pa`.
pub fn power(pa: &PowerAssignment, link: &Link, alpha: f64) -> f64 {
    pa.power(link, alpha)
}

fn check_id(inst: &Instance, id: usize) -> Result<(), SinrError> {
    if id < inst.len() {
        Ok(())
    } else {
        Err(SinrError::UnknownLink(id))
    }
}

/// A link is dead when `P <= beta * N * len^alpha`: it cannot beat the noise floor with margin.
fn is_dead(inst: &Instance, len: f64, p: f64) -> bool {
    p <= inst.beta() * inst.noise() * len.powf(inst.alpha())
}

/// The per-receiver constant `c` of the affectance definition.
fn noise_factor(inst: &Instance, len: f64, p: f64, id: usize) -> Result<f64, SinrError> {
    if is_dead(inst, len, p) {
        return Err(SinrError::DeadLink { id });
    }
    let beta = inst.beta();
    Ok(beta / (1.0 - beta * inst.noise() * len.powf(inst.alpha()) / p))
}

fn uncapped(inst: &Instance, src: usize, dst: usize, p_src: f64, p_dst: f64) -> Result<f64, SinrError> {
    if src == dst {
        return Ok(0.0);
    }
    let dst_link = &inst.links()[dst];
    let len = dst_link.length();
    let c = noise_factor(inst, len, p_dst, dst)?;
    let ratio = len / inst.cross_distance(src, dst);
    Ok(c * (p_src / p_dst) * ratio.powf(inst.alpha()))
}

/// Affectance of `dst` caused by `src`.
pub fn affectance(src: usize, dst: usize, pa: &PowerAssignment, inst: &Instance) -> Result<f64, SinrError> {
    check_id(inst, src)?;
    check_id(inst, dst)?;
    let alpha = inst.alpha();
    let p_src = pa.power(&inst.links()[src], alpha);
    let p_dst = pa.power(&inst.links()[dst], alpha);
    // The receiving link is checked for deadness even on the diagonal.
    noise_factor(inst, inst.links()[dst].length(), p_dst, dst)?;
    Ok(uncapped(inst, src, dst, p_src, p_dst)?.min(1.0))
}

/// Total affectance on `l` from the members of `set`.
pub fn affectance_sum(set: &[usize], l: usize, pa: &PowerAssignment, inst: &Instance) -> Result<f64, SinrError> {
    set.iter().try_fold(0.0, |acc, &src| Ok(acc + affectance(src, l, pa, inst)?))
}

/// Feasibility of `set` by the direct SINR inequality.
///
/// Sets containing a dead link, an unknown id, or a repeated id are infeasible.
pub fn is_feasible(set: &[usize], pa: &PowerAssignment, inst: &Instance) -> bool {
    if set.is_empty() || has_duplicates(set) || set.iter().any(|&l| l >= inst.len()) {
        return false;
    }
    let Ok(powers) = pa.powers(inst) else {
        return false;
    };
    let alpha = inst.alpha();
    set.iter().all(|&l| {
        let len = inst.links()[l].length();
        if is_dead(inst, len, powers[l]) {
            return false;
        }
        let signal = powers[l] / len.powf(alpha);
        let interference: f64 =
            set.iter().filter(|&&o| o != l).map(|&o| powers[o] / inst.cross_distance(o, l).powf(alpha)).sum();
        signal >= inst.beta() * (1.0 - SINR_EPS) * (interference + inst.noise())
    })
}

/// Feasibility of `set` through the affectance rewriting.
pub fn is_feasible_by_affectance(set: &[usize], pa: &PowerAssignment, inst: &Instance) -> bool {
    if set.is_empty() || has_duplicates(set) || set.iter().any(|&l| l >= inst.len()) {
        return false;
    }
    let Ok(powers) = pa.powers(inst) else {
        return false;
    };
    set.iter().all(|&l| {
        let mut total = 0.0;
        for &src in set {
            match uncapped(inst, src, l, powers[src], powers[l]) {
                Ok(a) => total += a,
                Err(_) => return false,
            }
        }
        // A dead receiver has no finite affectance even when alone.
        noise_factor(inst, inst.links()[l].length(), powers[l], l).is_ok() && total <= 1.0 + AFFECTANCE_EPS
    })
}

pub(crate) fn has_duplicates(set: &[usize]) -> bool {
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Precomputed affectances for one (instance, power assignment) pair.
///
/// Stores both the capped affectance of the definition and the uncapped
/// value. Feasibility tests sum the uncapped values: a single interferer
/// whose capped affectance is exactly 1 may still push the SINR below the
/// threshold, which the capped sum cannot see.
#[derive(Debug, Clone)]
pub struct AffectanceMatrix {
    n: usize,
    raw: Vec<f64>,
}

impl AffectanceMatrix {
    pub fn new(inst: &Instance, pa: &PowerAssignment) -> Result<Self, SinrError> {
        let powers = pa.powers(inst)?;
        let n = inst.len();
        for (l, &p) in powers.iter().enumerate() {
            noise_factor(inst, inst.links()[l].length(), p, l)?;
        }
        let mut raw = vec![0.0; n * n];
        for src in 0..n {
            for dst in 0..n {
                raw[src * n + dst] = uncapped(inst, src, dst, powers[src], powers[dst])?;
            }
        }
        Ok(Self { n, raw })
    }

    /// Builds a matrix from uncapped values in row-major `[src][dst]` order.
    /// The diagonal is forced to zero.
    pub fn from_raw(n: usize, mut raw: Vec<f64>) -> Self {
        assert_eq!(raw.len(), n * n, "need n*n entries");
        for l in 0..n {
            raw[l * n + l] = 0.0;
        }
        Self { n, raw }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Capped affectance of `dst` caused by `src`.
    pub fn get(&self, src: usize, dst: usize) -> f64 {
        self.raw[src * self.n + dst].min(1.0)
    }

    pub fn raw(&self, src: usize, dst: usize) -> f64 {
        self.raw[src * self.n + dst]
    }

    pub fn sum_onto(&self, set: &[usize], l: usize) -> f64 {
        set.iter().map(|&src| self.get(src, l)).sum()
    }

    fn raw_sum_onto(&self, set: &[usize], l: usize) -> f64 {
        set.iter().map(|&src| self.raw(src, l)).sum()
    }

    pub fn is_feasible(&self, set: &[usize]) -> bool {
        !set.is_empty()
            && set.iter().all(|&l| l < self.n)
            && !has_duplicates(set)
            && set.iter().all(|&l| self.raw_sum_onto(set, l) <= 1.0 + AFFECTANCE_EPS)
    }

    /// Members of `transmitters` whose incoming affectance within the set stays at most 1.
    pub fn successful(&self, transmitters: &[usize]) -> Vec<usize> {
        transmitters.iter().copied().filter(|&l| self.raw_sum_onto(transmitters, l) <= 1.0 + AFFECTANCE_EPS).collect()
    }
}

/// Received-power table for evaluating the SINR inequality directly.
#[derive(Debug, Clone)]
pub struct SinrChannel {
    n: usize,
    /// `gain[src * n + dst]` is the power received at `r_dst` from `s_src`.
    gain: Vec<f64>,
    noise: f64,
    beta: f64,
}

impl SinrChannel {
    pub fn new(inst: &Instance, pa: &PowerAssignment) -> Result<Self, SinrError> {
        let powers = pa.powers(inst)?;
        let n = inst.len();
        let alpha = inst.alpha();
        if let Some(id) = (0..n).find(|&l| is_dead(inst, inst.links()[l].length(), powers[l])) {
            return Err(SinrError::DeadLink { id });
        }
        let mut gain = vec![0.0; n * n];
        for src in 0..n {
            for dst in 0..n {
                gain[src * n + dst] = powers[src] / inst.cross_distance(src, dst).powf(alpha);
            }
        }
        Ok(Self { n, gain, noise: inst.noise(), beta: inst.beta() })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sinr(&self, l: usize, transmitters: &[usize]) -> f64 {
        let interference: f64 = transmitters.iter().filter(|&&o| o != l).map(|&o| self.gain[o * self.n + l]).sum();
        self.gain[l * self.n + l] / (interference + self.noise)
    }

    fn receives(&self, l: usize, transmitters: &[usize]) -> bool {
        let interference: f64 = transmitters.iter().filter(|&&o| o != l).map(|&o| self.gain[o * self.n + l]).sum();
        self.gain[l * self.n + l] >= self.beta * (1.0 - SINR_EPS) * (interference + self.noise)
    }

    /// The transmitters whose receivers decode in a slot where exactly
    /// `transmitters` are active.
    pub fn arbitrate(&self, transmitters: &[usize]) -> Vec<usize> {
        transmitters.iter().copied().filter(|&l| self.receives(l, transmitters)).collect()
    }

    pub fn is_feasible(&self, set: &[usize]) -> bool {
        !set.is_empty()
            && set.iter().all(|&l| l < self.n)
            && !has_duplicates(set)
            && set.iter().all(|&l| self.receives(l, set))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxAvgMode {
    /// Minimum-degree peeling; within a factor 2 of the optimum.
    Greedy,
    /// Enumeration of all subsets; at most [`EXACT_AVG_LIMIT`] links.
    Exact,
}

/// Maximum over nonempty `Q` of `R` of the total pairwise affectance within `Q` divided by `|Q|`.
pub fn max_avg_affectance(set: &[usize], matrix: &AffectanceMatrix, mode: MaxAvgMode) -> Result<f64, SinrError> {
    if set.is_empty() {
        return Err(SinrError::EmptySet);
    }
    if let Some(&bad) = set.iter().find(|&&l| l >= matrix.len()) {
        return Err(SinrError::UnknownLink(bad));
    }
    // Symmetrized weights: w(u, v) = a_u(v) + a_v(u).
    let k = set.len();
    let mut w = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            if i != j && set[i] != set[j] {
                w[i * k + j] = matrix.get(set[i], set[j]) + matrix.get(set[j], set[i]);
            }
        }
    }
    match mode {
        MaxAvgMode::Greedy => Ok(peel(&w, k)),
        MaxAvgMode::Exact => {
            if k > EXACT_AVG_LIMIT {
                return Err(SinrError::TooManyLinks { max: EXACT_AVG_LIMIT, got: k });
            }
            Ok(enumerate(&w, k))
        }
    }
}

fn peel(w: &[f64], k: usize) -> f64 {
    let mut alive = vec![true; k];
    let mut degree: Vec<f64> = (0..k).map(|i| w[i * k..(i + 1) * k].iter().sum()).collect();
    // Each unordered pair appears twice in the degree sum.
    let mut total: f64 = degree.iter().sum::<f64>() / 2.0;
    let mut best = total / k as f64;
    for remaining in (1..k).rev() {
        let (victim, _) = degree
            .iter()
            .enumerate()
            .filter(|(i, _)| alive[*i])
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("at least one live vertex");
        alive[victim] = false;
        total -= degree[victim];
        for j in 0..k {
            if alive[j] {
                degree[j] -= w[j * k + victim];
            }
        }
        best = best.max(total / remaining as f64);
    }
    best
}

fn enumerate(w: &[f64], k: usize) -> f64 {
    let mut totals = vec![0.0; 1 << k];
    let mut best = 0.0_f64;
    for mask in 1usize..(1 << k) {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let mut add = 0.0;
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            add += w[low * k + j];
            bits &= bits - 1;
        }
        totals[mask] = totals[rest] + add;
        best = best.max(totals[mask] / mask.count_ones() as f64);
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerClass {
    pub length_monotone: bool,
    pub sublinear: bool,
}

/// Tests the length-monotone and sublinear properties over all link pairs.
pub fn classify_power(pa: &PowerAssignment, inst: &Instance) -> PowerClass {
    const REL: f64 = 1e-9;
    let alpha = inst.alpha();
    let data: Vec<(f64, f64)> = inst.links().iter().map(|l| (l.length(), pa.power(l, alpha))).collect();
    let mut class = PowerClass { length_monotone: true, sublinear: true };
    for &(lv, pv) in &data {
        for &(lw, pw) in &data {
            if lv >= lw {
                if pv < pw * (1.0 - REL) {
                    class.length_monotone = false;
                }
                if pv / lv.powf(alpha) > pw / lw.powf(alpha) * (1.0 + REL) {
                    class.sublinear = false;
                }
            }
        }
    }
    class
}
