use std::collections::VecDeque;

use super::diagnostics::OutAffectance;
use super::{Delivery, Mode, Packet, PeriodRecord, Queues, SimConfig, SlotRecord, Trace};
use crate::arrivals::{ArrivalProcess, BernoulliArrivals, RateVector};
use crate::error::SimError;
use crate::model::Instance;
use crate::scheduling::{GreedyScheduler, PacketBatch, Scheduler, SlotSet};
use crate::sinr::{AffectanceMatrix, PowerAssignment, SinrChannel};

/// Batching scheduler with the greedy first-fit partitioner and Bernoulli arrivals.
pub fn run_centralized(
    inst: &Instance,
    pa: &PowerAssignment,
    rv: &RateVector,
    cfg: &SimConfig,
) -> Result<Trace, SimError> {
    let matrix = AffectanceMatrix::new(inst, pa)?;
    let channel = SinrChannel::new(inst, pa)?;
    let scheduler = GreedyScheduler::new(inst, &matrix);
    let mut arrivals = BernoulliArrivals::new(rv, cfg.seed);
    run_centralized_with(inst, &matrix, &channel, &scheduler, &mut arrivals, cfg)
}

/// Runs the batching scheduler with any partitioner and arrival process.
///
/// Slots are numbered from 0 and period `q` spans slots `[q*theta, (q+1)*theta)`.
/// Each slot first transmits the front set of the set queue; at the first
/// slot of a new period the previous period's arrivals are partitioned and
/// appended; finally the slot's own arrivals are queued.
pub fn run_centralized_with(
    inst: &Instance,
    matrix: &AffectanceMatrix,
    channel: &SinrChannel,
    scheduler: &dyn Scheduler,
    arrivals: &mut dyn ArrivalProcess,
    cfg: &SimConfig,
) -> Result<Trace, SimError> {
    cfg.validate()?;
    let n = inst.len();
    let theta = cfg.theta;
    let out_aff = OutAffectance::new(inst, matrix);

    let mut trace = Trace::new(Mode::Centralized, theta, cfg.total_slots as usize);
    let mut queues = Queues::new(n);
    let mut set_queue: VecDeque<SlotSet> = VecDeque::new();
    // Packets per link already placed in the set queue.
    let mut scheduled = vec![0u64; n];
    let mut pending: Vec<usize> = Vec::new();
    let mut fresh: Vec<usize> = Vec::new();

    for t in 0..cfg.total_slots {
        let mut delivered = 0;
        let mut transmitters = 0;
        if let Some(set) = set_queue.pop_front() {
            if !channel.is_feasible(&set.links) {
                return Err(SimError::Invariant { slot: t, msg: format!("infeasible set {:?}", set.links) });
            }
            transmitters = set.links.len() as u64;
            for &l in &set.links {
                if scheduled[l] == 0 {
                    return Err(SimError::Invariant { slot: t, msg: format!("link {l} scheduled without a packet") });
                }
                scheduled[l] -= 1;
                let packet = queues.pop(l).expect("scheduled packet is queued");
                if cfg.record_deliveries {
                    trace.deliveries.push(Delivery { slot: t, link: l, packet });
                }
                delivered += 1;
            }
        }

        if t > 0 && t % theta == 0 {
            let period = t / theta - 1;
            let batch = PacketBatch::new(std::mem::take(&mut pending));
            let mut counts = vec![0.0; n];
            for &l in batch.packets() {
                counts[l] += 1.0;
                scheduled[l] += 1;
            }
            let schedule_len = if batch.is_empty() {
                0
            } else {
                let schedule = scheduler.schedule(&batch, period as usize)?;
                let len = schedule.len() as u64;
                set_queue.extend(schedule.sets);
                len
            };
            let max_out_affectance = out_aff.weigh(&counts).into_iter().fold(0.0, f64::max);
            trace.periods.push(PeriodRecord {
                period,
                batch_size: batch.len() as u64,
                schedule_len,
                max_out_affectance,
            });
        }

        fresh.clear();
        arrivals.arrivals(t, &mut fresh);
        let cur = t / theta;
        for &l in &fresh {
            queues.push(l, Packet { arrival_slot: t, period: cur });
        }
        pending.extend_from_slice(&fresh);

        let s_t = set_queue.len() as u64;
        if let Some(l) = scheduled.iter().position(|&q| q > s_t) {
            return Err(SimError::Invariant {
                slot: t,
                msg: format!("link {l} has {} scheduled packets but only {s_t} sets remain", scheduled[l]),
            });
        }

        trace.slots.push(SlotRecord {
            slot: t,
            max_queue: queues.max_len(),
            total_queue: queues.total,
            delivered,
            delivered_cum: queues.delivered,
            arrived_cum: queues.arrived,
            setqueue_or_s: s_t,
            cur,
            transmitters,
        });
    }
    Ok(trace)
}
