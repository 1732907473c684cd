use crate::model::Instance;
use crate::sinr::AffectanceMatrix;

/// Outgoing affectance from each link towards links that are at least as long.
///
/// Links are ordered by `(length, id)`; for link `l` the targets are every
/// `l'` after `l` in that order, weighted by `a_l(l')`.
#[derive(Debug, Clone)]
pub struct OutAffectance {
    targets: Vec<Vec<(usize, f64)>>,
}

impl OutAffectance {
    pub fn new(inst: &Instance, matrix: &AffectanceMatrix) -> Self {
        let n = inst.len();
        let mut order: Vec<usize> = (0..n).collect();
        let links = inst.links();
        order.sort_by(|&a, &b| links[a].length().total_cmp(&links[b].length()).then(a.cmp(&b)));
        let mut targets = vec![Vec::new(); n];
        for (rank, &l) in order.iter().enumerate() {
            targets[l] = order[rank + 1..].iter().map(|&t| (t, matrix.get(l, t))).collect();
        }
        Self { targets }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Per-link outgoing affectance for arrival counts `x` (indexed by link).
    pub fn weigh(&self, x: &[f64]) -> Vec<f64> {
        self.targets.iter().map(|ts| ts.iter().map(|&(t, a)| a * x[t]).sum()).collect()
    }

    /// Expected per-slot outgoing affectance under arrival rates `rates`.
    pub fn expected(&self, rates: &[f64]) -> Vec<f64> {
        self.weigh(rates)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutAffectanceReport {
    /// `per_slot[t][l]`: outgoing affectance of `l` caused by slot `t`'s arrivals.
    pub per_slot: Vec<Vec<f64>>,
    /// Sum over the period, per link.
    pub total: Vec<f64>,
}

/// Outgoing affectance per slot and per period for one period of arrivals.
///
/// `period_sample[t]` lists the links that received a packet in slot `t`.
pub fn diagnostic_out_affectance(out: &OutAffectance, period_sample: &[Vec<usize>]) -> OutAffectanceReport {
    let n = out.len();
    let mut total = vec![0.0; n];
    let mut x = vec![0.0; n];
    let per_slot = period_sample
        .iter()
        .map(|arrivals| {
            x.iter_mut().for_each(|v| *v = 0.0);
            for &l in arrivals {
                x[l] += 1.0;
            }
            let slot = out.weigh(&x);
            for (acc, v) in total.iter_mut().zip(&slot) {
                *acc += v;
            }
            slot
        })
        .collect();
    OutAffectanceReport { per_slot, total }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Link, Point};
    use crate::sinr::PowerAssignment;

    fn inst() -> Instance {
        // Lengths 1, 2, 4. The receiver of link 1 is at distance 4 from the sender of link 0.
        Instance::new(
            vec![
                Link { id: 0, sender: Point::new(0.0, 0.0), receiver: Point::new(1.0, 0.0) },
                Link { id: 1, sender: Point::new(0.0, 6.0), receiver: Point::new(0.0, 4.0) },
                Link { id: 2, sender: Point::new(500.0, 0.0), receiver: Point::new(504.0, 0.0) },
            ],
            2.0,
            1.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn longest_link_has_no_targets() {
        let inst = inst();
        let m = AffectanceMatrix::new(&inst, &PowerAssignment::Uniform(1.0)).unwrap();
        let out = OutAffectance::new(&inst, &m);
        let r = diagnostic_out_affectance(&out, &[vec![0, 1, 2]]);
        assert_eq!(r.total[2], 0.0);
    }

    #[test]
    fn single_longer_arrival() {
        let inst = inst();
        let m = AffectanceMatrix::new(&inst, &PowerAssignment::Uniform(1.0)).unwrap();
        assert_eq!(m.get(0, 1), 0.25);
        let out = OutAffectance::new(&inst, &m);
        let r = diagnostic_out_affectance(&out, &[vec![1], vec![]]);
        assert_eq!(r.per_slot[0][0], 0.25);
        assert_eq!(r.per_slot[1][0], 0.0);
        assert_eq!(r.total[0], 0.25);
        // Shorter links are not targets.
        assert_eq!(r.total[1], 0.0);
    }
}
