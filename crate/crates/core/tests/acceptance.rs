//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sinr_sched::arrivals::{build_rate_vector, ArrivalProcess, BernoulliArrivals, RateVector, ScriptedArrivals};
use sinr_sched::model::{generate_instance, Instance, Link, Point, TopologyParams};
use sinr_sched::preset;
use sinr_sched::scheduling::{schedule_greedy, schedule_length, validate_schedule, GreedyScheduler, PacketBatch};
use sinr_sched::simulator::{
    default_theta, diagnostic_out_affectance, estimate_stability, phase_length, run_centralized, run_distributed,
    run_distributed_with, Mode, OutAffectance, SimConfig, Trace,
};
use sinr_sched::sinr::{
    is_feasible, is_feasible_by_affectance, max_avg_affectance, AffectanceMatrix, MaxAvgMode, PowerAssignment,
    SinrChannel,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_power(rng: &mut impl Rng) -> PowerAssignment {
    match rng.random_range(0..4) {
        0 => PowerAssignment::Uniform(rng.random_range(0.5..4.0)),
        1 => PowerAssignment::Linear,
        2 => PowerAssignment::Mean,
        _ => PowerAssignment::Uniform(1.0),
    }
}

fn random_instance(rng: &mut impl Rng, n: usize) -> Instance {
    let params = TopologyParams {
        n,
        l_min: rng.random_range(0.5..2.0),
        l_max: rng.random_range(2.0..20.0),
        side: rng.random_range(5.0..20.0 * (n as f64).sqrt() + 10.0),
        alpha: rng.random_range(2.0..5.0),
        beta: rng.random_range(1.0..3.0),
        noise: 0.0,
    };
    generate_instance(&params, rng.random()).unwrap()
}

/// SINR inequality evaluated straight from the geometry.
fn oracle_feasible(set: &[usize], pa: &PowerAssignment, inst: &Instance) -> bool {
    let (alpha, beta, noise) = (inst.alpha(), inst.beta(), inst.noise());
    set.iter().all(|&l| {
        let link = inst.link(l).unwrap();
        let p = pa.power(link, alpha);
        let signal = p / link.length().powf(alpha);
        let interference: f64 = set
            .iter()
            .filter(|&&o| o != l)
            .map(|&o| {
                let other = inst.link(o).unwrap();
                let d =
                    ((other.sender.x - link.receiver.x).powi(2) + (other.sender.y - link.receiver.y).powi(2)).sqrt();
                pa.power(other, alpha) / d.powf(alpha)
            })
            .sum();
        signal >= beta * (interference + noise) * (1.0 - 1e-12) && p > beta * noise * link.length().powf(alpha)
    })
}

fn feasibility_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0001);
    let (mut feasible, mut disagreements) = (0, 0);
    for _ in 0..1000 {
        let n = rng.random_range(2..=50);
        let mut inst = random_instance(&mut rng, n);
        let pa = random_power(&mut rng);
        if rng.random_bool(0.3) {
            // Ambient noise below half of what the weakest link can tolerate.
            let headroom = inst
                .links()
                .iter()
                .map(|l| pa.power(l, inst.alpha()) / (inst.beta() * l.length().powf(inst.alpha())))
                .fold(f64::INFINITY, f64::min);
            inst = inst.with_noise(headroom * rng.random_range(0.0..0.5)).unwrap();
        }
        let k = rng.random_range(1..=n.min(8));
        let set = sample(&mut rng, n, k).into_vec();
        let expected = oracle_feasible(&set, &pa, &inst);
        feasible += usize::from(expected);
        if is_feasible(&set, &pa, &inst) != expected || is_feasible_by_affectance(&set, &pa, &inst) != expected {
            disagreements += 1;
        }
    }
    outcome(disagreements == 0, format!("1000 triples, {feasible} feasible, {disagreements} disagreements"))
}

/// Densest-subgraph value by enumerating every nonempty subset.
fn brute_force_avg(set: &[usize], m: &AffectanceMatrix) -> f64 {
    let mut best = 0.0_f64;
    for mask in 1u32..(1 << set.len()) {
        let members: Vec<usize> = (0..set.len()).filter(|i| mask >> i & 1 == 1).map(|i| set[i]).collect();
        let total: f64 = members
            .iter()
            .flat_map(|&a| members.iter().map(move |&b| (a, b)))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| m.get(a, b))
            .sum();
        best = best.max(total / members.len() as f64);
    }
    best
}

fn avg_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0002);
    let mut worst_ratio = f64::INFINITY;
    let mut bad = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=12);
        let inst = random_instance(&mut rng, n);
        let m = AffectanceMatrix::new(&inst, &random_power(&mut rng)).unwrap();
        let ids: Vec<usize> = (0..n).collect();
        let exact = brute_force_avg(&ids, &m);
        let greedy = max_avg_affectance(&ids, &m, MaxAvgMode::Greedy).unwrap();
        let lib_exact = max_avg_affectance(&ids, &m, MaxAvgMode::Exact).unwrap();
        let tol = 1e-12 * exact.max(1.0);
        if greedy < exact / 2.0 - tol || greedy > exact + tol || (lib_exact - exact).abs() > tol {
            bad += 1;
        }
        if exact > 0.0 {
            worst_ratio = worst_ratio.min(greedy / exact);
        }
    }
    outcome(bad == 0, format!("200 instances, {bad} out of range, worst greedy/exact = {worst_ratio:.4}"))
}

fn scheduler_validity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0003);
    let mut bad = 0;
    let mut total_slots = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=100);
        let inst = random_instance(&mut rng, n);
        let pa = random_power(&mut rng);
        let mut batch = PacketBatch::from_counts((0..n).map(|l| (l, rng.random_range(0..=5))));
        if batch.is_empty() {
            batch = PacketBatch::new(vec![0]);
        }
        let s = schedule_greedy(&batch, &pa, &inst).unwrap();
        total_slots += schedule_length(&s);
        if !validate_schedule(&s, &batch, &pa, &inst) || schedule_length(&s) < batch.max_multiplicity() {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("500 batches, {bad} invalid, {total_slots} slots in total"))
}

fn colocated(count: usize, beta: f64) -> Instance {
    let links =
        (0..count).map(|id| Link { id, sender: Point::new(0.0, 0.0), receiver: Point::new(1.0, 0.0) }).collect();
    Instance::new(links, 3.0, beta, 0.0).unwrap()
}

fn centralized_pair(runs: &mut Vec<Trace>) -> Outcome {
    let pa = PowerAssignment::Uniform(1.0);

    let single = colocated(1, 1.0);
    let cfg = SimConfig::new(Mode::Centralized, 4, 100_000, 1);
    let light = run_centralized(&single, &pa, &RateVector::explicit(vec![0.5]).unwrap(), &cfg).unwrap();
    let light_st = estimate_stability(&light).unwrap();

    // Two identical links: each one's SINR is 1 < beta, so they never share a slot.
    let twins = colocated(2, 1.5);
    assert!(!is_feasible(&[0, 1], &pa, &twins));
    let heavy = run_centralized(&twins, &pa, &RateVector::explicit(vec![0.75, 0.75]).unwrap(), &cfg).unwrap();
    let heavy_st = estimate_stability(&heavy).unwrap();
    let heavy_queue = heavy.last().unwrap().total_queue;

    let pass = light_st.stable
        && light.delivered_fraction() >= 0.99
        && !heavy_st.stable
        && heavy_queue as f64 >= 0.2 * cfg.total_slots as f64;
    let detail = format!(
        "single link: stable={} delivered={:.4}; twins: stable={} slope={:.1}/1000 final total queue={heavy_queue}",
        light_st.stable,
        light.delivered_fraction(),
        heavy_st.stable,
        heavy_st.slope
    );
    runs.push(light);
    runs.push(heavy);
    outcome(pass, detail)
}

fn distributed_sanity(runs: &mut Vec<Trace>) -> Outcome {
    // A lone packet on one link of the reference layout, all others silent.
    let inst = generate_instance(&preset::topology(), 1).unwrap();
    let pa = preset::power();
    let matrix = AffectanceMatrix::new(&inst, &pa).unwrap();
    let channel = SinrChannel::new(&inst, &pa).unwrap();
    let window = phase_length(inst.len(), 0);
    let mut within = 0;
    let mut slowest = 0;
    for seed in 0..100 {
        let mut arrivals = ScriptedArrivals::new().at(0, (seed % inst.len() as u64) as usize);
        let cfg = SimConfig::new(Mode::Distributed, 1, 2 * window + 4, seed).with_delivery_log();
        let trace = run_distributed_with(&inst, &matrix, &channel, &mut arrivals, &cfg).unwrap();
        // The packet arrives after the data slot of pair 0; pair 1 is the first attempt.
        if let Some(d) = trace.deliveries.first() {
            let attempts = d.slot / 2;
            slowest = slowest.max(attempts);
            within += usize::from(attempts <= window);
        }
        runs.push(trace);
    }

    let mut fifo_bad = 0;
    for seed in 1..=20 {
        let params = TopologyParams { n: 20, side: 20.0 * 20f64.sqrt(), ..preset::topology() };
        let inst = generate_instance(&params, seed).unwrap();
        let m = AffectanceMatrix::new(&inst, &pa).unwrap();
        let rv = build_rate_vector(&inst, 0.1, &GreedyScheduler::new(&inst, &m)).unwrap();
        let cfg = SimConfig::new(Mode::Distributed, default_theta(20, 1.0), 50_000, seed).with_delivery_log();
        let trace = run_distributed(&inst, &pa, &rv, &cfg).unwrap();
        if trace.check_period_fifo().is_err() {
            fifo_bad += 1;
        }
        runs.push(trace);
    }
    outcome(
        within == 100 && fifo_bad == 0,
        format!(
            "lone packet delivered within phase 0 in {within}/100 (phase {window} pairs, slowest {slowest}); FIFO violations in {fifo_bad}/20 runs"
        ),
    )
}

fn conservation_and_determinism(runs: &[Trace]) -> Outcome {
    let broken = runs.iter().filter(|t| t.check_conservation().is_err()).count();

    let inst =
        generate_instance(&TopologyParams { n: 40, side: 20.0 * 40f64.sqrt(), ..preset::topology() }, 77).unwrap();
    let pa = preset::power();
    let m = AffectanceMatrix::new(&inst, &pa).unwrap();
    let rv = build_rate_vector(&inst, 0.3, &GreedyScheduler::new(&inst, &m)).unwrap();
    let mut diverged = 0;
    for mode in [Mode::Centralized, Mode::Distributed] {
        for seed in [1, 2, 3] {
            let cfg = SimConfig::new(mode, default_theta(40, 1.0), 30_000, seed).with_delivery_log();
            let run = || match mode {
                Mode::Centralized => run_centralized(&inst, &pa, &rv, &cfg).unwrap(),
                Mode::Distributed => run_distributed(&inst, &pa, &rv, &cfg).unwrap(),
            };
            let (a, b) = (run(), run());
            diverged += usize::from(a != b || a.check_conservation().is_err());
        }
    }
    outcome(
        broken == 0 && diverged == 0,
        format!("{} traces audited, {broken} conservation failures; 6 re-runs, {diverged} diverged", runs.len()),
    )
}

struct ReplicationRun {
    gamma: f64,
    seed: u64,
    stable: bool,
    slope: f64,
    final_max_queue: u64,
}

fn replicate(gamma: f64, seed: u64) -> ReplicationRun {
    let inst = generate_instance(&preset::topology(), seed).unwrap();
    let pa = preset::power();
    let m = AffectanceMatrix::new(&inst, &pa).unwrap();
    let rv = build_rate_vector(&inst, gamma, &GreedyScheduler::new(&inst, &m)).unwrap();
    let theta = default_theta(inst.len(), preset::THETA_COEFF);
    let trace =
        run_distributed(&inst, &pa, &rv, &SimConfig::new(Mode::Distributed, theta, preset::SLOTS, seed)).unwrap();
    let st = estimate_stability(&trace).unwrap();
    ReplicationRun { gamma, seed, stable: st.stable, slope: st.slope, final_max_queue: trace.last().unwrap().max_queue }
}

fn replication() -> Outcome {
    const GAMMAS: [f64; 9] = [0.1, 0.15, 0.2, 0.22, 0.25, 0.3, 0.35, 0.4, 1.0];
    let jobs: Vec<(f64, u64)> = GAMMAS.iter().flat_map(|&g| (1..=5).map(move |s| (g, s))).collect();
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).min(jobs.len());
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<ReplicationRun> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut mine = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        let Some(&(g, s)) = jobs.get(i) else { break mine };
                        mine.push(replicate(g, s));
                    }
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    results.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.seed.cmp(&b.seed)));

    for r in &results {
        println!(
            "    gamma={:.2} seed={} stable={} slope={:.4}/1000 final_max_queue={}",
            r.gamma, r.seed, r.stable, r.slope, r.final_max_queue
        );
    }
    let all_stable = |g: f64| results.iter().filter(|r| r.gamma == g).all(|r| r.stable);
    let none_stable = |g: f64| results.iter().filter(|r| r.gamma == g).all(|r| !r.stable);
    let threshold = GAMMAS.iter().copied().take_while(|&g| all_stable(g)).last();
    let pass = all_stable(0.2) && none_stable(1.0);
    outcome(
        pass,
        format!(
            "gamma=0.2 stable for all seeds: {}; gamma=1.0 unstable for all seeds: {}; measured threshold (largest grid gamma stable for every seed) = {}",
            all_stable(0.2),
            none_stable(1.0),
            threshold.map_or("none".into(), |g| format!("{g}"))
        ),
    )
}

fn out_affectance_consistency() -> Outcome {
    let params = TopologyParams { n: 30, side: 20.0 * 30f64.sqrt(), ..preset::topology() };
    let inst = generate_instance(&params, 2024).unwrap();
    let pa = preset::power();
    let m = AffectanceMatrix::new(&inst, &pa).unwrap();
    let rv = build_rate_vector(&inst, 0.3, &GreedyScheduler::new(&inst, &m)).unwrap();
    let theta = default_theta(inst.len(), 1.0);
    let out = OutAffectance::new(&inst, &m);

    // Prediction straight from the matrix: sum over links at least as long (ties by id).
    let order = |l: usize| (inst.links()[l].length(), l);
    let predicted: Vec<f64> = (0..inst.len())
        .map(|l| {
            (0..inst.len())
                .filter(|&o| o != l && order(o).partial_cmp(&order(l)) == Some(std::cmp::Ordering::Greater))
                .map(|o| m.get(l, o) * rv.rate(o))
                .sum::<f64>()
                * theta as f64
        })
        .collect();

    const PERIODS: u64 = 200;
    let mut arrivals = BernoulliArrivals::new(&rv, 5);
    let mut samples = vec![Vec::with_capacity(PERIODS as usize); inst.len()];
    for p in 0..PERIODS {
        let period: Vec<Vec<usize>> = (0..theta)
            .map(|t| {
                let mut v = Vec::new();
                arrivals.arrivals(p * theta + t, &mut v);
                v
            })
            .collect();
        for (l, a) in diagnostic_out_affectance(&out, &period).total.into_iter().enumerate() {
            samples[l].push(a);
        }
    }

    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for (l, xs) in samples.iter().enumerate() {
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let se = (var / k).sqrt();
        let gap = (mean - predicted[l]).abs();
        if se > 0.0 {
            worst = worst.max(gap / se);
        }
        if gap > 3.0 * se + 1e-12 {
            bad.push(l);
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "30 links, theta={theta}, 200 periods; worst deviation {worst:.2} standard errors; outside 3 SE: {bad:?}"
        ),
    )
}

fn main() -> ExitCode {
    let mut runs = Vec::new();
    let mut all = true;
    let mut report = |name: &str, budget: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let pass = o.pass && took <= budget;
        all &= pass;
        println!(
            "{} {name}: {} [{:.1}s, budget {}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    };
    let secs = Duration::from_secs;
    report("feasibility equivalence", secs(10), &mut feasibility_equivalence);
    report("avgA oracle", secs(60), &mut avg_oracle);
    report("scheduler validity", secs(30), &mut scheduler_validity);
    report("centralized stability/instability pair", secs(30), &mut || centralized_pair(&mut runs));
    report("distributed protocol sanity", secs(120), &mut || distributed_sanity(&mut runs));
    report("conservation and determinism", secs(120), &mut || conservation_and_determinism(&runs));
    report("scaled replication", secs(600), &mut replication);
    report("out-affectance consistency", secs(60), &mut out_affectance_consistency);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
