//! Arrival-rate vectors and the packet processes that realize them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::ArrivalError;
use crate::model::Instance;
use crate::rng::{stream_rng, Stream};
use crate::scheduling::{PacketBatch, Scheduler};

/// A feasible set and the rate it is loaded with.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSet {
    pub links: Vec<usize>,
    pub weight: f64,
}

/// Per-link Bernoulli arrival rates.
///
/// Rates built by [`build_rate_vector`] carry the weighted feasible sets they
/// were assembled from, so a rate vector can be audited against the
/// feasibility predicate. Rates given explicitly carry no decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector {
    rates: Vec<f64>,
    gamma: f64,
    decomposition: Vec<WeightedSet>,
}

impl RateVector {
    pub fn explicit(rates: Vec<f64>) -> Result<Self, ArrivalError> {
        if let Some(&bad) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(ArrivalError::Parse { line: 0, msg: format!("rate {bad} outside [0, 1]") });
        }
        let gamma = rates.iter().copied().fold(0.0, f64::max);
        Ok(Self { rates, gamma, decomposition: Vec::new() })
    }

    pub fn zero(n: usize) -> Self {
        Self { rates: vec![0.0; n], gamma: 0.0, decomposition: Vec::new() }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rate(&self, l: usize) -> f64 {
        self.rates[l]
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn decomposition(&self) -> &[WeightedSet] {
        &self.decomposition
    }

    /// Header `gamma T`, then one `m_i: id id ...` line per set.
    pub fn to_text(&self) -> String {
        let mut out = format!("{:.16e} {}\n", self.gamma, self.decomposition.len());
        for set in &self.decomposition {
            let _ = write!(out, "{:.16e}:", set.weight);
            for id in &set.links {
                let _ = write!(out, " {id}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text form for an instance of `n` links, recomputing the rates.
    pub fn from_text(text: &str, n: usize) -> Result<Self, ArrivalError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let perr = |line: usize, msg: String| ArrivalError::Parse { line, msg };

        let (hl, header) = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
        let mut h = header.split_whitespace();
        let gamma: f64 = h.next().and_then(|s| s.parse().ok()).ok_or_else(|| perr(hl, "bad gamma".into()))?;
        let count: usize = h.next().and_then(|s| s.parse().ok()).ok_or_else(|| perr(hl, "bad set count".into()))?;

        let mut decomposition = Vec::with_capacity(count);
        for (lno, line) in lines {
            let (w, ids) = line.split_once(':').ok_or_else(|| perr(lno, "expected `m_i: ids`".into()))?;
            let weight: f64 = w.trim().parse().map_err(|_| perr(lno, format!("bad weight `{w}`")))?;
            let links = ids
                .split_whitespace()
                .map(|s| match s.parse::<usize>() {
                    Ok(id) if id < n => Ok(id),
                    _ => Err(perr(lno, format!("bad link id `{s}`"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            decomposition.push(WeightedSet { links, weight });
        }
        if decomposition.len() != count {
            return Err(perr(hl, format!("header declares {count} sets, found {}", decomposition.len())));
        }
        let mut rates = vec![0.0; n];
        for set in &decomposition {
            for &l in &set.links {
                rates[l] += set.weight;
            }
        }
        Ok(Self { rates, gamma, decomposition })
    }
}

/// Loads every link with one packet, partitions them with `scheduler`, and
/// gives each of the `T` resulting sets weight `gamma / T`.
pub fn build_rate_vector(inst: &Instance, gamma: f64, scheduler: &dyn Scheduler) -> Result<RateVector, ArrivalError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(ArrivalError::Gamma(gamma));
    }
    let batch = PacketBatch::new((0..inst.len()).collect());
    let schedule = scheduler.schedule(&batch, 0)?;
    let weight = gamma / schedule.len() as f64;
    let mut rates = vec![0.0; inst.len()];
    let decomposition: Vec<WeightedSet> = schedule
        .sets
        .into_iter()
        .map(|s| {
            for &l in &s.links {
                rates[l] += weight;
            }
            WeightedSet { links: s.links, weight }
        })
        .collect();
    Ok(RateVector { rates, gamma, decomposition })
}

/// Arrivals of a single slot: a 0/1 packet count per link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalSample {
    pub counts: Vec<u8>,
}

/// Independent Bernoulli draws, one per link.
pub fn sample(rv: &RateVector, rng: &mut impl Rng) -> ArrivalSample {
    ArrivalSample { counts: rv.rates.iter().map(|&r| u8::from(draw(r, rng))).collect() }
}

fn draw(rate: f64, rng: &mut impl Rng) -> bool {
    // Exact at the endpoints regardless of the generator's output.
    if rate <= 0.0 {
        false
    } else if rate >= 1.0 {
        true
    } else {
        rng.random::<f64>() < rate
    }
}

/// Source of per-slot packet arrivals for the simulator.
pub trait ArrivalProcess {
    /// Appends to `out` the ids of links receiving a packet in `slot`.
    fn arrivals(&mut self, slot: u64, out: &mut Vec<usize>);
}

/// Bernoulli arrivals drawn from the run's dedicated arrival stream.
#[derive(Debug, Clone)]
pub struct BernoulliArrivals {
    rates: Vec<f64>,
    rng: ChaCha8Rng,
}

impl BernoulliArrivals {
    pub fn new(rv: &RateVector, seed: u64) -> Self {
        Self { rates: rv.rates.clone(), rng: stream_rng(seed, Stream::Arrivals) }
    }
}

impl ArrivalProcess for BernoulliArrivals {
    fn arrivals(&mut self, _slot: u64, out: &mut Vec<usize>) {
        for (l, &r) in self.rates.iter().enumerate() {
            if draw(r, &mut self.rng) {
                out.push(l);
            }
        }
    }
}

/// Fixed arrivals keyed by slot.
#[derive(Debug, Clone, Default)]
pub struct ScriptedArrivals {
    script: BTreeMap<u64, Vec<usize>>,
}

impl ScriptedArrivals {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn at(mut self, slot: u64, link: usize) -> Self {
        self.script.entry(slot).or_default().push(link);
        self
    }
}

impl ArrivalProcess for ScriptedArrivals {
    fn arrivals(&mut self, slot: u64, out: &mut Vec<usize>) {
        if let Some(ls) = self.script.get(&slot) {
            out.extend_from_slice(ls);
        }
    }
}
