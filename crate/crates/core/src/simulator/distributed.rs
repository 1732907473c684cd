use std::collections::VecDeque;

use rand::Rng;

use super::diagnostics::OutAffectance;
use super::{CarrierSense, Delivery, Mode, Packet, PeriodRecord, Queues, SimConfig, SlotRecord, Trace};
use crate::arrivals::{ArrivalProcess, BernoulliArrivals, RateVector};
use crate::error::SimError;
use crate::model::Instance;
use crate::rng::{stream_rng, Stream};
use crate::sinr::{AffectanceMatrix, PowerAssignment, SinrChannel};

/// Data slots in backoff phase `k`: `ceil(8 ln n / q)` with `q = 1 / (4 * 2^k)`.
///
/// `n` below 2 is treated as 2 so that every phase has at least one slot.
pub fn phase_length(n: usize, k: u32) -> u64 {
    let ln_n = (n.max(2) as f64).ln();
    (8.0 * ln_n / transmit_probability(k)).ceil() as u64
}

fn transmit_probability(k: u32) -> f64 {
    0.25 / 2f64.powi(k as i32)
}

/// Backoff state of a sender working on its head-of-line packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkProtocolState {
    pub phase: u32,
    pub slots_left_in_phase: u64,
    pub q: f64,
}

impl LinkProtocolState {
    pub fn start(n: usize) -> Self {
        Self { phase: 0, slots_left_in_phase: phase_length(n, 0), q: transmit_probability(0) }
    }

    /// Consumes one data slot without success; moves to the next phase when the current one is spent.
    pub fn fail(&mut self, n: usize) {
        self.slots_left_in_phase -= 1;
        if self.slots_left_in_phase == 0 {
            self.phase += 1;
            self.q = transmit_probability(self.phase);
            self.slots_left_in_phase = phase_length(n, self.phase);
        }
    }
}

/// Randomized backoff with carrier-sensed period advance, Bernoulli arrivals.
pub fn run_distributed(
    inst: &Instance,
    pa: &PowerAssignment,
    rv: &RateVector,
    cfg: &SimConfig,
) -> Result<Trace, SimError> {
    let matrix = AffectanceMatrix::new(inst, pa)?;
    let channel = SinrChannel::new(inst, pa)?;
    let mut arrivals = BernoulliArrivals::new(rv, cfg.seed);
    run_distributed_with(inst, &matrix, &channel, &mut arrivals, cfg)
}

/// Runs the distributed protocol with any arrival process.
///
/// Physical slot `t` is a data slot when even and a signaling slot when odd.
/// The current period is `cur = t / (2 theta)`; packets are stamped with the
/// `cur` of their arrival slot. In a data slot, every sender whose head
/// packet belongs to period `s` transmits with its backoff probability, and
/// the SINR arbiter decides which transmissions succeed. In a signaling
/// slot, those senders still holding a period-`s` packet emit a busy tone;
/// a silent slot advances `s`, but never beyond `cur`.
pub fn run_distributed_with(
    inst: &Instance,
    matrix: &AffectanceMatrix,
    channel: &SinrChannel,
    arrivals: &mut dyn ArrivalProcess,
    cfg: &SimConfig,
) -> Result<Trace, SimError> {
    cfg.validate()?;
    let CarrierSense::Perfect = cfg.sense;
    let n = inst.len();
    let theta = cfg.theta;
    let out_aff = OutAffectance::new(inst, matrix);
    let mut rng = stream_rng(cfg.seed, Stream::Protocol);

    let mut trace = Trace::new(Mode::Distributed, theta, cfg.total_slots as usize);
    let mut queues = Queues::new(n);
    let mut proto: Vec<Option<LinkProtocolState>> = vec![None; n];
    let mut s: u64 = 0;
    // Arrival counts per link for each period not yet fully served.
    let mut period_counts: VecDeque<Vec<f64>> = VecDeque::from([vec![0.0; n]]);
    let mut serving_since: u64 = 0;

    let mut active: Vec<usize> = Vec::with_capacity(n);
    let mut transmitters: Vec<usize> = Vec::with_capacity(n);
    let mut fresh: Vec<usize> = Vec::new();

    for t in 0..cfg.total_slots {
        let cur = t / (2 * theta);
        let pair = t / 2;
        let mut delivered = 0;

        active.clear();
        active.extend((0..n).filter(|&l| queues.head(l).is_some_and(|p| p.period == s)));

        if t % 2 == 0 {
            transmitters.clear();
            for &l in &active {
                let state = proto[l].get_or_insert_with(|| LinkProtocolState::start(n));
                if rng.random::<f64>() < state.q {
                    transmitters.push(l);
                }
            }
            let winners = channel.arbitrate(&transmitters);
            let mut won = winners.iter().peekable();
            for &l in &active {
                if won.next_if_eq(&&l).is_some() {
                    let packet = queues.pop(l).expect("active link has a head packet");
                    if packet.period != s {
                        return Err(SimError::Invariant {
                            slot: t,
                            msg: format!("delivered period {} while serving {s}", packet.period),
                        });
                    }
                    if cfg.record_deliveries {
                        trace.deliveries.push(Delivery { slot: t, link: l, packet });
                    }
                    proto[l] = None;
                    delivered += 1;
                } else if let Some(state) = proto[l].as_mut() {
                    state.fail(n);
                }
            }
        } else {
            let busy = !active.is_empty();
            if !busy && s < cur {
                let counts = period_counts.pop_front().unwrap_or_else(|| vec![0.0; n]);
                let batch_size = counts.iter().sum::<f64>() as u64;
                let max_out_affectance = out_aff.weigh(&counts).into_iter().fold(0.0, f64::max);
                trace.periods.push(PeriodRecord {
                    period: s,
                    batch_size,
                    schedule_len: pair + 1 - serving_since,
                    max_out_affectance,
                });
                s += 1;
                serving_since = pair + 1;
            }
        }

        fresh.clear();
        arrivals.arrivals(t, &mut fresh);
        while period_counts.len() as u64 <= cur - s {
            period_counts.push_back(vec![0.0; n]);
        }
        let slot_counts = &mut period_counts[(cur - s) as usize];
        for &l in &fresh {
            queues.push(l, Packet { arrival_slot: t, period: cur });
            slot_counts[l] += 1.0;
        }

        trace.slots.push(SlotRecord {
            slot: t,
            max_queue: queues.max_len(),
            total_queue: queues.total,
            delivered,
            delivered_cum: queues.delivered,
            arrived_cum: queues.arrived,
            setqueue_or_s: s,
            cur,
            transmitters: if t % 2 == 0 { transmitters.len() as u64 } else { 0 },
        });
    }
    Ok(trace)
}
