//! Slotted-time queueing simulation.
//!
//! Two engines share the same [`Trace`] output:
//!
//! * [`run_centralized`] batches each period's arrivals, partitions them into
//!   feasible sets with a [`Scheduler`](crate::scheduling::Scheduler), and
//!   transmits one set per slot from a FIFO queue of sets.
//! * [`run_distributed`] pairs physical slots into a data slot and a
//!   signaling slot. Senders run a randomized backoff on the packets of the
//!   period currently being served; a silent signaling slot advances that
//!   period for everybody.

mod centralized;
mod diagnostics;
mod distributed;
mod stability;

pub use centralized::{run_centralized, run_centralized_with};
pub use diagnostics::{diagnostic_out_affectance, OutAffectance, OutAffectanceReport};
pub use distributed::{phase_length, run_distributed, run_distributed_with, LinkProtocolState};
pub use stability::{estimate_stability, Stability, MIN_STABILITY_SLOTS, STABLE_RELATIVE_RISE, STABLE_SLOPE_PER_1000};

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Centralized,
    Distributed,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Centralized => "centralized",
            Mode::Distributed => "distributed",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "centralized" => Ok(Mode::Centralized),
            "distributed" => Ok(Mode::Distributed),
            other => Err(format!("unknown mode `{other}` (expected centralized or distributed)")),
        }
    }
}

/// How senders learn whether a signaling slot was silent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CarrierSense {
    /// Every sender observes the true channel state.
    #[default]
    Perfect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub mode: Mode,
    /// Period length. Slots in centralized mode, slot pairs in distributed mode.
    pub theta: u64,
    /// Physical slots to simulate.
    pub total_slots: u64,
    pub seed: u64,
    pub sense: CarrierSense,
    /// Keep a per-packet delivery log in the trace.
    pub record_deliveries: bool,
}

impl SimConfig {
    pub fn new(mode: Mode, theta: u64, total_slots: u64, seed: u64) -> Self {
        Self { mode, theta, total_slots, seed, sense: CarrierSense::Perfect, record_deliveries: false }
    }

    pub fn with_delivery_log(mut self) -> Self {
        self.record_deliveries = true;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.theta == 0 {
            return Err(SimError::Config("theta must be >= 1".into()));
        }
        if self.total_slots < self.theta {
            return Err(SimError::Config(format!(
                "total_slots ({}) must be >= theta ({})",
                self.total_slots, self.theta
            )));
        }
        Ok(())
    }
}

/// Period length `ceil(c * log2(n)^2)`, at least 1.
pub fn default_theta(n: usize, c: f64) -> u64 {
    let lg = (n.max(1) as f64).log2();
    ((c * lg * lg).ceil() as u64).max(1)
}

/// A queued packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub arrival_slot: u64,
    /// Period in which the packet was generated.
    pub period: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRecord {
    pub slot: u64,
    pub max_queue: u64,
    pub total_queue: u64,
    pub delivered: u64,
    pub delivered_cum: u64,
    pub arrived_cum: u64,
    /// Sets waiting in the set queue (centralized) or the period being served (distributed).
    pub setqueue_or_s: u64,
    /// Current period.
    pub cur: u64,
    /// Links transmitting in this slot.
    pub transmitters: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodRecord {
    pub period: u64,
    /// Packets generated in the period.
    pub batch_size: u64,
    /// Slots of the period's schedule (centralized) or slot pairs spent
    /// serving the period (distributed).
    pub schedule_len: u64,
    /// Largest outgoing affectance towards longer links over the period's arrivals.
    pub max_out_affectance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub slot: u64,
    pub link: usize,
    pub packet: Packet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub mode: Mode,
    pub theta: u64,
    pub slots: Vec<SlotRecord>,
    pub periods: Vec<PeriodRecord>,
    pub deliveries: Vec<Delivery>,
}

impl Trace {
    fn new(mode: Mode, theta: u64, capacity: usize) -> Self {
        Self { mode, theta, slots: Vec::with_capacity(capacity), periods: Vec::new(), deliveries: Vec::new() }
    }

    pub fn last(&self) -> Option<&SlotRecord> {
        self.slots.last()
    }

    /// Delivered packets over arrived packets; 1 when nothing arrived.
    pub fn delivered_fraction(&self) -> f64 {
        match self.last() {
            Some(r) if r.arrived_cum > 0 => r.delivered_cum as f64 / r.arrived_cum as f64,
            _ => 1.0,
        }
    }

    /// Checks arrivals = deliveries + queued at every slot.
    pub fn check_conservation(&self) -> Result<(), SimError> {
        for r in &self.slots {
            if r.arrived_cum != r.delivered_cum + r.total_queue {
                return Err(SimError::Invariant {
                    slot: r.slot,
                    msg: format!(
                        "arrived {} != delivered {} + queued {}",
                        r.arrived_cum, r.delivered_cum, r.total_queue
                    ),
                });
            }
        }
        Ok(())
    }

    /// Checks that no packet of a later period was delivered before a packet of an earlier one.
    pub fn check_period_fifo(&self) -> Result<(), SimError> {
        let mut highest = 0;
        for d in &self.deliveries {
            if d.packet.period < highest {
                return Err(SimError::Invariant {
                    slot: d.slot,
                    msg: format!("packet of period {} delivered after a packet of period {highest}", d.packet.period),
                });
            }
            highest = d.packet.period;
        }
        Ok(())
    }
}

/// Per-link FIFO queues with running totals.
#[derive(Debug, Clone)]
struct Queues {
    links: Vec<std::collections::VecDeque<Packet>>,
    total: u64,
    arrived: u64,
    delivered: u64,
}

impl Queues {
    fn new(n: usize) -> Self {
        Self { links: vec![Default::default(); n], total: 0, arrived: 0, delivered: 0 }
    }

    fn push(&mut self, link: usize, packet: Packet) {
        self.links[link].push_back(packet);
        self.total += 1;
        self.arrived += 1;
    }

    fn pop(&mut self, link: usize) -> Option<Packet> {
        let p = self.links[link].pop_front()?;
        self.total -= 1;
        self.delivered += 1;
        Some(p)
    }

    fn head(&self, link: usize) -> Option<&Packet> {
        self.links[link].front()
    }

    fn max_len(&self) -> u64 {
        self.links.iter().map(|q| q.len() as u64).max().unwrap_or(0)
    }
}
