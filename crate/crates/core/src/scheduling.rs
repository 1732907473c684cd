//! Partitioning a packet batch into SINR-feasible slots.

use std::collections::BTreeMap;

use crate::error::{ScheduleError, SinrError};
use crate::model::Instance;
use crate::sinr::{is_feasible, AffectanceMatrix, PowerAssignment, AFFECTANCE_EPS};

/// A multiset of link ids, one entry per pending packet.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PacketBatch {
    packets: Vec<usize>,
}

impl PacketBatch {
    pub fn new(packets: Vec<usize>) -> Self {
        Self { packets }
    }

    /// Builds a batch from `(link, count)` pairs; zero counts are dropped.
    pub fn from_counts<I: IntoIterator<Item = (usize, usize)>>(counts: I) -> Self {
        let packets = counts.into_iter().flat_map(|(link, c)| std::iter::repeat_n(link, c)).collect();
        Self { packets }
    }

    pub fn packets(&self) -> &[usize] {
        &self.packets
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn counts(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for &l in &self.packets {
            *m.entry(l).or_insert(0) += 1;
        }
        m
    }

    pub fn max_multiplicity(&self) -> usize {
        self.counts().values().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotSet {
    /// Period whose arrivals this set carries.
    pub period: usize,
    pub links: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schedule {
    pub sets: Vec<SlotSet>,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// Number of slots a schedule occupies.
pub fn schedule_length(s: &Schedule) -> usize {
    s.sets.len()
}

/// A centralized scheduling algorithm: turns one period's packets into feasible sets.
pub trait Scheduler {
    fn schedule(&self, batch: &PacketBatch, period: usize) -> Result<Schedule, ScheduleError>;
}

/// First-fit over packets in decreasing link length.
///
/// Ties are broken by link id, then by packet index. A packet joins the first
/// open set that does not already hold its link and stays feasible with it;
/// otherwise it opens a new set.
#[derive(Debug, Clone, Copy)]
pub struct GreedyScheduler<'a> {
    inst: &'a Instance,
    matrix: &'a AffectanceMatrix,
}

impl<'a> GreedyScheduler<'a> {
    pub fn new(inst: &'a Instance, matrix: &'a AffectanceMatrix) -> Self {
        Self { inst, matrix }
    }
}

struct OpenSet {
    links: Vec<usize>,
    /// Uncapped affectance accumulated on each member, parallel to `links`.
    load: Vec<f64>,
}

impl OpenSet {
    fn try_add(&mut self, l: usize, m: &AffectanceMatrix) -> bool {
        const LIMIT: f64 = 1.0 + AFFECTANCE_EPS;
        if self.links.contains(&l) {
            return false;
        }
        let incoming: f64 = self.links.iter().map(|&o| m.raw(o, l)).sum();
        if incoming > LIMIT {
            return false;
        }
        if self.links.iter().zip(&self.load).any(|(&o, &load)| load + m.raw(l, o) > LIMIT) {
            return false;
        }
        for (&o, load) in self.links.iter().zip(self.load.iter_mut()) {
            *load += m.raw(l, o);
        }
        self.links.push(l);
        self.load.push(incoming);
        true
    }
}

impl Scheduler for GreedyScheduler<'_> {
    fn schedule(&self, batch: &PacketBatch, period: usize) -> Result<Schedule, ScheduleError> {
        if batch.is_empty() {
            return Err(ScheduleError::EmptyBatch);
        }
        if let Some(&bad) = batch.packets().iter().find(|&&l| l >= self.inst.len()) {
            return Err(ScheduleError::UnknownLink(bad));
        }

        let mut order: Vec<(usize, usize)> = batch.packets().iter().copied().enumerate().collect();
        let links = self.inst.links();
        order.sort_by(|&(ia, la), &(ib, lb)| {
            links[lb].length().total_cmp(&links[la].length()).then(la.cmp(&lb)).then(ia.cmp(&ib))
        });

        let mut open: Vec<OpenSet> = Vec::new();
        for (_, l) in order {
            if open.iter_mut().any(|s| s.try_add(l, self.matrix)) {
                continue;
            }
            let mut fresh = OpenSet { links: Vec::new(), load: Vec::new() };
            if !fresh.try_add(l, self.matrix) {
                return Err(ScheduleError::Unschedulable { id: l });
            }
            open.push(fresh);
        }
        Ok(Schedule { sets: open.into_iter().map(|s| SlotSet { period, links: s.links }).collect() })
    }
}

/// Greedy schedule for a single batch, building the affectance table on the fly.
pub fn schedule_greedy(batch: &PacketBatch, pa: &PowerAssignment, inst: &Instance) -> Result<Schedule, ScheduleError> {
    if let Some(&bad) = batch.packets().iter().find(|&&l| l >= inst.len()) {
        return Err(ScheduleError::UnknownLink(bad));
    }
    let matrix = AffectanceMatrix::new(inst, pa).map_err(|e| match e {
        SinrError::DeadLink { id } => ScheduleError::Unschedulable { id },
        _ => ScheduleError::Unschedulable { id: usize::MAX },
    })?;
    GreedyScheduler::new(inst, &matrix).schedule(batch, 0)
}

/// Checks a schedule against its batch.
///
/// Every set must be nonempty, repeat no link, and pass the direct SINR
/// test; the multiset union of the sets must equal the batch.
pub fn validate_schedule(s: &Schedule, batch: &PacketBatch, pa: &PowerAssignment, inst: &Instance) -> bool {
    let mut placed: BTreeMap<usize, usize> = BTreeMap::new();
    for set in &s.sets {
        if set.links.is_empty() || !is_feasible(&set.links, pa, inst) {
            return false;
        }
        for &l in &set.links {
            *placed.entry(l).or_insert(0) += 1;
        }
    }
    placed == batch.counts()
}
