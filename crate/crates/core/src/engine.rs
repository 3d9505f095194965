//! Deterministic seeded discrete-event simulators for the three communication
//! models. One run owns one mutable state and one event stream; identical
//! (seed, config, inputs) produce bit-identical output.

use rand::Rng;

use crate::dualcore::{
    cacdm_params, cacdm_read_dual, cacdm_step, cdm_step, gossip_matrix, sync_step, CacdmParams,
    CacdmState, CdmState,
};
use crate::error::{Error, Result};
use crate::graph::{rlnm_rates, DelayProfile, Topology};
use crate::objective::{ErrorMetrics, NodeField, Optimum, ProblemInstance};
use crate::rng::{stream, StreamId};

/// Which dual algorithm drives the event loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Cdm,
    Cacdm,
}

/// Run-level configuration shared by all models.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub horizon: f64,
    pub record_times: Vec<f64>,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub record_activation_log: bool,
}

impl SimConfig {
    pub fn new(horizon: f64, samples: usize, seed: u64, algorithm: Algorithm) -> Result<Self> {
        if horizon <= 0.0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        if samples == 0 {
            return Err(Error::invalid("need at least one record time"));
        }
        let record_times = (1..=samples)
            .map(|k| horizon * k as f64 / samples as f64)
            .collect();
        Ok(SimConfig {
            horizon,
            record_times,
            seed,
            algorithm,
            record_activation_log: false,
        })
    }

    pub fn with_record_times(mut self, times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid("record times must be non-empty"));
        }
        let mut last = 0.0;
        for &t in &times {
            if t <= last && last != 0.0 || t < 0.0 || t > self.horizon {
                return Err(Error::invalid(
                    "record times must be increasing in [0, horizon]",
                ));
            }
            last = t;
        }
        self.record_times = times;
        Ok(self)
    }

    pub fn with_activation_log(mut self) -> Self {
        self.record_activation_log = true;
        self
    }
}

/// One attempt in the loss-network log (P.p.p. logs only accepted events).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationEvent {
    pub time: f64,
    /// Initiating node (tick owner in RLNM; edge endpoint i in P.p.p.).
    pub initiator: usize,
    /// Target node.
    pub target: usize,
    pub edge: usize,
    pub accepted: bool,
    /// Dual gap immediately after the event (unchanged if rejected).
    pub dual_gap: f64,
}

/// Recorded trajectories of one run.
#[derive(Debug, Clone)]
pub struct MetricSeries {
    pub times: Vec<f64>,
    pub dual_gap: Vec<f64>,
    pub primal_sq_err: Vec<f64>,
    pub consensus_sq_err: Vec<f64>,
    pub activation_log: Option<Vec<ActivationEvent>>,
}

impl MetricSeries {
    fn with_capacity(times: &[f64], log: bool) -> Self {
        MetricSeries {
            times: times.to_vec(),
            dual_gap: Vec::with_capacity(times.len()),
            primal_sq_err: Vec::with_capacity(times.len()),
            consensus_sq_err: Vec::with_capacity(times.len()),
            activation_log: if log { Some(Vec::new()) } else { None },
        }
    }

    fn push(&mut self, m: ErrorMetrics) {
        self.dual_gap.push(m.dual_gap);
        self.primal_sq_err.push(m.primal_sq_err);
        self.consensus_sq_err.push(m.consensus_sq_err);
    }

    /// Accepted activations in log order.
    pub fn accepted(&self) -> Vec<&ActivationEvent> {
        self.activation_log
            .as_deref()
            .map(|log| log.iter().filter(|e| e.accepted).collect())
            .unwrap_or_default()
    }
}

/// Inverse-CDF exponential sampling: -ln(U)/rate with U uniform in (0, 1].
pub fn sample_exponential<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    -u.ln() / rate
}

/// Binary search over a cumulative weight table.
fn pick_categorical(cumulative: &[f64], total: f64, u: f64) -> usize {
    let x = u * total;
    match cumulative.binary_search_by(|c| c.partial_cmp(&x).unwrap()) {
        Ok(i) => (i + 1).min(cumulative.len() - 1),
        Err(i) => i.min(cumulative.len() - 1),
    }
}

enum AlgoState {
    Cdm(CdmState),
    Cacdm(CacdmState),
}

impl AlgoState {
    fn dual_at(&self, t: f64) -> Result<NodeField> {
        match self {
            AlgoState::Cdm(s) => Ok(s.v.clone()),
            AlgoState::Cacdm(s) => cacdm_read_dual(s, t),
        }
    }
}

/// Everything shared across same-setup runs: precomputed optimum and, for
/// CACDM, the tuned parameters. Building this once avoids re-running the
/// eigensolver for every seed of a multi-seed experiment.
pub struct Prepared<'a> {
    pub topology: &'a Topology,
    pub instance: &'a ProblemInstance,
    pub rates: Vec<f64>,
    pub optimum: Optimum,
    pub cacdm: Option<CacdmParams>,
}

impl<'a> Prepared<'a> {
    pub fn new(
        topology: &'a Topology,
        rates: Vec<f64>,
        instance: &'a ProblemInstance,
        algorithm: Algorithm,
    ) -> Result<Self> {
        if rates.len() != topology.edge_count() || rates.iter().any(|&p| p <= 0.0 || !p.is_finite())
        {
            return Err(Error::invalid("rates must be positive on every edge"));
        }
        let optimum = instance.optimum()?;
        let cacdm = match algorithm {
            Algorithm::Cdm => None,
            Algorithm::Cacdm => Some(cacdm_params(topology, &rates, instance)?),
        };
        Ok(Prepared {
            topology,
            instance,
            rates,
            optimum,
            cacdm,
        })
    }

    fn make_state(&self, algorithm: Algorithm) -> Result<AlgoState> {
        let n = self.topology.node_count();
        let d = self.instance.dim();
        Ok(match algorithm {
            Algorithm::Cdm => AlgoState::Cdm(CdmState::zeros(n, d)),
            Algorithm::Cacdm => AlgoState::Cacdm(CacdmState::zeros(
                n,
                d,
                self.cacdm
                    .ok_or_else(|| Error::InvalidState("missing CACDM params".into()))?,
            )),
        })
    }
}

/// Poisson point process model via superposition: one global exponential
/// clock of rate I, edge chosen with probability p_ij / I per arrival.
pub fn run_ppp_prepared(prep: &Prepared<'_>, config: &SimConfig) -> Result<MetricSeries> {
    let intensity: f64 = prep.rates.iter().sum();
    let mut cumulative = Vec::with_capacity(prep.rates.len());
    let mut acc = 0.0;
    for &p in &prep.rates {
        acc += p;
        cumulative.push(acc);
    }
    let mut rng = stream(config.seed, StreamId::Events);
    let mut state = prep.make_state(config.algorithm)?;
    let mut series =
        MetricSeries::with_capacity(&config.record_times, config.record_activation_log);

    let mut t = 0.0_f64;
    let mut next_record = 0usize;
    loop {
        let dt = sample_exponential(&mut rng, intensity);
        let t_next = t + dt;
        while next_record < config.record_times.len()
            && config.record_times[next_record] <= t_next.min(config.horizon)
        {
            let rt = config.record_times[next_record];
            let dual = state.dual_at(rt)?;
            series.push(prep.instance.error_metrics(&dual, &prep.optimum)?);
            next_record += 1;
        }
        if t_next > config.horizon {
            break;
        }
        t = t_next;
        let e = pick_categorical(&cumulative, intensity, rng.gen::<f64>());
        let (i, j) = prep.topology.edge(e);
        match &mut state {
            AlgoState::Cdm(s) => cdm_step(s, prep.instance, (i, j))?,
            AlgoState::Cacdm(s) => cacdm_step(s, prep.instance, (i, j), t)?,
        }
        if let Some(log) = series.activation_log.as_mut() {
            let dual = state.dual_at(t)?;
            let gap = prep.instance.error_metrics(&dual, &prep.optimum)?.dual_gap;
            log.push(ActivationEvent {
                time: t,
                initiator: i,
                target: j,
                edge: e,
                accepted: true,
                dual_gap: gap,
            });
        }
    }
    Ok(series)
}

pub fn run_ppp(
    topology: &Topology,
    rates: &[f64],
    instance: &ProblemInstance,
    config: &SimConfig,
) -> Result<MetricSeries> {
    let prep = Prepared::new(topology, rates.to_vec(), instance, config.algorithm)?;
    run_ppp_prepared(&prep, config)
}

/// Refined loss network with busy-locking and epsilon busy-checks.
///
/// Per-node Poisson clocks of rate r_i = (1/2) sum_{j~i} p_ij, sampled by
/// superposition. A tick of a busy node is dropped. Otherwise the node picks
/// a neighbor proportionally to p_ij; the busy-check costs the initiator
/// eps*tau_ij; if the target is free the pair locks for (1+eps)*tau_ij total
/// and exactly one dual step applies, committed at the tick time.
pub fn run_rlnm(
    topology: &Topology,
    delays: &DelayProfile,
    instance: &ProblemInstance,
    config: &SimConfig,
) -> Result<MetricSeries> {
    let rates = rlnm_rates(topology, delays)?;
    let prep = Prepared::new(topology, rates, instance, config.algorithm)?;
    run_rlnm_prepared(&prep, delays, config)
}

pub fn run_rlnm_prepared(
    prep: &Prepared<'_>,
    delays: &DelayProfile,
    config: &SimConfig,
) -> Result<MetricSeries> {
    let topology = prep.topology;
    let n = topology.node_count();
    let eps = delays.epsilon();

    // Node clock rates r_i and the per-node neighbor tables.
    let mut node_rate = vec![0.0_f64; n];
    for (e, &(i, j)) in topology.edges().iter().enumerate() {
        node_rate[i] += 0.5 * prep.rates[e];
        node_rate[j] += 0.5 * prep.rates[e];
    }
    let total_rate: f64 = node_rate.iter().sum();
    let mut node_cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &r in &node_rate {
        acc += r;
        node_cumulative.push(acc);
    }
    // neighbor_cumulative[i]: cumulative p over the adjacency order of i.
    let neighbor_cumulative: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            topology
                .neighbors(i)
                .iter()
                .map(|&(_, e)| {
                    acc += prep.rates[e];
                    acc
                })
                .collect()
        })
        .collect();
    let neighbor_total: Vec<f64> = (0..n)
        .map(|i| neighbor_cumulative[i].last().copied().unwrap_or(0.0))
        .collect();

    let mut clock_rng = stream(config.seed, StreamId::NodeClocks);
    let mut choice_rng = stream(config.seed, StreamId::NeighborChoice);
    let mut state = prep.make_state(config.algorithm)?;
    let mut series =
        MetricSeries::with_capacity(&config.record_times, config.record_activation_log);
    let mut busy_until = vec![0.0_f64; n];

    let mut t = 0.0_f64;
    let mut next_record = 0usize;
    loop {
        let dt = sample_exponential(&mut clock_rng, total_rate);
        let t_next = t + dt;
        while next_record < config.record_times.len()
            && config.record_times[next_record] <= t_next.min(config.horizon)
        {
            let rt = config.record_times[next_record];
            let dual = state.dual_at(rt)?;
            series.push(prep.instance.error_metrics(&dual, &prep.optimum)?);
            next_record += 1;
        }
        if t_next > config.horizon {
            break;
        }
        t = t_next;
        let i = pick_categorical(&node_cumulative, total_rate, clock_rng.gen::<f64>());
        if t < busy_until[i] {
            continue; // dropped tick
        }
        let nbrs = topology.neighbors(i);
        let pick = pick_categorical(
            &neighbor_cumulative[i],
            neighbor_total[i],
            choice_rng.gen::<f64>(),
        );
        let (j, e) = nbrs[pick];
        let tau = delays.edge_delay(e);
        let accepted = t >= busy_until[j];
        if accepted {
            busy_until[i] = t + (1.0 + eps) * tau;
            busy_until[j] = t + (1.0 + eps) * tau;
            match &mut state {
                AlgoState::Cdm(s) => cdm_step(s, prep.instance, (i, j))?,
                AlgoState::Cacdm(s) => cacdm_step(s, prep.instance, (i, j), t)?,
            }
        } else {
            busy_until[i] = t + eps * tau;
        }
        if let Some(log) = series.activation_log.as_mut() {
            let dual = state.dual_at(t)?;
            let gap = prep.instance.error_metrics(&dual, &prep.optimum)?.dual_gap;
            log.push(ActivationEvent {
                time: t,
                initiator: i,
                target: j,
                edge: e,
                accepted,
                dual_gap: gap,
            });
        }
    }
    Ok(series)
}

/// Synchronous gossip: rounds of x <- W x every tau_max time units, with
/// metrics sampled by zero-order hold of the latest completed round.
pub fn run_sync(
    topology: &Topology,
    delays: &DelayProfile,
    instance: &ProblemInstance,
    config: &SimConfig,
) -> Result<MetricSeries> {
    let w = gossip_matrix(topology);
    let tau_max = delays.tau_max();
    let optimum = instance.optimum()?;
    let mut series = MetricSeries::with_capacity(&config.record_times, false);

    // x(0) = primal point of the zero dual.
    let mut x = instance.primal_point(&NodeField::zeros(topology.node_count(), instance.dim()))?;
    let mut completed_round_end = 0.0_f64;

    let metrics_of = |x: &NodeField| -> Result<ErrorMetrics> {
        let n = x.node_count();
        let mut v = NodeField::zeros(n, x.dim());
        for i in 0..n {
            let g = instance.local_grad(i, x.row(i));
            v.row_mut(i).copy_from_slice(&g);
        }
        instance.error_metrics(&v, &optimum)
    };

    for &rt in &config.record_times {
        while completed_round_end + tau_max <= rt {
            x = sync_step(&x, &w);
            completed_round_end += tau_max;
        }
        series.push(metrics_of(&x)?);
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_topology, ppp_rates, GraphKind};
    use approx::assert_abs_diff_eq;

    fn averaging(n: usize) -> ProblemInstance {
        ProblemInstance::averaging_spike(n, 1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn exponential_inverse_cdf_scaling() {
        // Same uniform stream at rate r equals rate-1 samples divided by r.
        let mut a = stream(3, StreamId::Events);
        let mut b = stream(3, StreamId::Events);
        for _ in 0..100 {
            let x = sample_exponential(&mut a, 1.0);
            let y = sample_exponential(&mut b, 2.0);
            assert_abs_diff_eq!(x / 2.0, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn exponential_mean_matches_rate() {
        let mut rng = stream(4, StreamId::Events);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_exponential(&mut rng, 2.0))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn ppp_path2_cdm_consensus_after_first_arrival() {
        let t = build_topology(GraphKind::Path(2)).unwrap();
        let inst = averaging(2);
        let config = SimConfig::new(20.0, 40, 7, Algorithm::Cdm).unwrap();
        let series = run_ppp(&t, &[1.0], &inst, &config).unwrap();
        // After a generous prefix every recorded gap must be exactly 0.
        let tail = &series.dual_gap[series.dual_gap.len() / 2..];
        assert!(tail.iter().all(|&g| g.abs() < 1e-15));
    }

    #[test]
    fn ppp_deterministic_given_seed() {
        let t = build_topology(GraphKind::Cycle(6)).unwrap();
        let inst = averaging(6);
        let d = crate::graph::DelayProfile::uniform(&t, 1.0, 0.0).unwrap();
        let rates = ppp_rates(&d).unwrap();
        let config = SimConfig::new(10.0, 25, 99, Algorithm::Cdm)
            .unwrap()
            .with_activation_log();
        let s1 = run_ppp(&t, &rates, &inst, &config).unwrap();
        let s2 = run_ppp(&t, &rates, &inst, &config).unwrap();
        assert_eq!(s1.dual_gap, s2.dual_gap);
        assert_eq!(s1.activation_log.unwrap(), s2.activation_log.unwrap());
    }

    #[test]
    fn ppp_activation_counts_match_rates() {
        // Counts over horizon T are Poisson(p_ij * T): check 3-sigma bands.
        let t = build_topology(GraphKind::Cycle(10)).unwrap();
        let inst = averaging(10);
        let d = crate::graph::DelayProfile::uniform(&t, 1.0, 0.0).unwrap();
        let rates = ppp_rates(&d).unwrap();
        let horizon = 10_000.0;
        let config = SimConfig::new(horizon, 2, 11, Algorithm::Cdm)
            .unwrap()
            .with_activation_log();
        let series = run_ppp(&t, &rates, &inst, &config).unwrap();
        let log = series.activation_log.unwrap();
        let mut counts = vec![0usize; t.edge_count()];
        for ev in &log {
            counts[ev.edge] += 1;
        }
        for (e, &c) in counts.iter().enumerate() {
            let expect = rates[e] * horizon;
            let sigma = expect.sqrt();
            assert!(
                (c as f64 - expect).abs() < 3.0 * sigma,
                "edge {e}: count {c} vs {expect}"
            );
        }
    }

    #[test]
    fn ppp_cdm_gap_nonincreasing() {
        let t = build_topology(GraphKind::Cycle(8)).unwrap();
        let inst = averaging(8);
        let d = crate::graph::DelayProfile::uniform(&t, 1.0, 0.0).unwrap();
        let rates = ppp_rates(&d).unwrap();
        let config = SimConfig::new(30.0, 60, 5, Algorithm::Cdm).unwrap();
        let series = run_ppp(&t, &rates, &inst, &config).unwrap();
        for w in series.dual_gap.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn rlnm_two_nodes_exchanges_spaced_by_tau() {
        let t = build_topology(GraphKind::Path(2)).unwrap();
        let inst = averaging(2);
        let d = crate::graph::DelayProfile::uniform(&t, 1.0, 0.0).unwrap();
        let config = SimConfig::new(200.0, 10, 21, Algorithm::Cdm)
            .unwrap()
            .with_activation_log();
        let series = run_rlnm(&t, &d, &inst, &config).unwrap();
        let log = series.activation_log.unwrap();
        let accepted: Vec<_> = log.iter().filter(|e| e.accepted).collect();
        assert!(accepted.len() > 10);
        for pair in accepted.windows(2) {
            assert!(
                pair[1].time - pair[0].time >= 1.0 - 1e-12,
                "exchanges too close: {} then {}",
                pair[0].time,
                pair[1].time
            );
        }
    }

    #[test]
    fn rlnm_no_overlapping_busy_intervals() {
        let t = build_topology(GraphKind::Cycle(10)).unwrap();
        let inst = averaging(10);
        let mut delays = vec![1.0; 10];
        delays[0] = 10.0;
        let d = crate::graph::DelayProfile::from_node_delays(&t, delays, 0.05).unwrap();
        let config = SimConfig::new(500.0, 10, 33, Algorithm::Cdm)
            .unwrap()
            .with_activation_log();
        let series = run_rlnm(&t, &d, &inst, &config).unwrap();
        let log = series.activation_log.unwrap();
        // Reconstruct busy intervals per node and assert no overlap.
        let mut intervals: Vec<Vec<(f64, f64)>> = vec![Vec::new(); 10];
        for ev in &log {
            let tau = d.edge_delay(ev.edge);
            if ev.accepted {
                intervals[ev.initiator].push((ev.time, ev.time + 1.05 * tau));
                intervals[ev.target].push((ev.time, ev.time + 1.05 * tau));
            } else {
                intervals[ev.initiator].push((ev.time, ev.time + 0.05 * tau));
            }
        }
        for node_iv in &intervals {
            for pair in node_iv.windows(2) {
                assert!(
                    pair[1].0 >= pair[0].1 - 1e-9,
                    "overlap: {:?} then {:?}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn rlnm_deterministic_given_seed() {
        let t = build_topology(GraphKind::Cycle(6)).unwrap();
        let inst = averaging(6);
        let d = crate::graph::DelayProfile::uniform(&t, 1.0, 0.05).unwrap();
        let config = SimConfig::new(50.0, 10, 42, Algorithm::Cdm)
            .unwrap()
            .with_activation_log();
        let s1 = run_rlnm(&t, &d, &inst, &config).unwrap();
        let s2 = run_rlnm(&t, &d, &inst, &config).unwrap();
        assert_eq!(s1.dual_gap, s2.dual_gap);
        assert_eq!(s1.activation_log.unwrap(), s2.activation_log.unwrap());
    }

    #[test]
    fn rlnm_vanishing_locks_approach_ppp_acceptance() {
        // Attempt rates held fixed while the locking delays shrink to zero:
        // blocking vanishes and the acceptance ratio approaches 1. (Shrinking
        // the delays *and* retuning the rates to them is scale-invariant and
        // keeps the blocking probability constant instead.)
        let t = build_topology(GraphKind::Cycle(8)).unwrap();
        let inst = averaging(8);
        let rate_profile = crate::graph::DelayProfile::uniform(&t, 1.0, 0.0).unwrap();
        let rates = crate::graph::rlnm_rates(&t, &rate_profile).unwrap();
        let lock_profile = crate::graph::DelayProfile::uniform(&t, 1e-6, 0.0).unwrap();
        let prep = Prepared::new(&t, rates, &inst, Algorithm::Cdm).unwrap();
        let config = SimConfig::new(2_000.0, 4, 17, Algorithm::Cdm)
            .unwrap()
            .with_activation_log();
        let series = run_rlnm_prepared(&prep, &lock_profile, &config).unwrap();
        let log = series.activation_log.unwrap();
        let total = log.len() as f64;
        let ok = log.iter().filter(|e| e.accepted).count() as f64;
        assert!(total > 100.0);
        assert!(ok / total > 0.95, "acceptance {}", ok / total);

        // Sanity of the scale-invariance claim itself: homogeneous tau = 1
        // and tau = 1e-3 with retuned rates give matching acceptance ratios.
        let accept_ratio = |tau: f64, seed: u64| -> f64 {
            let d = crate::graph::DelayProfile::uniform(&t, tau, 0.0).unwrap();
            let config = SimConfig::new(4_000.0 * tau, 4, seed, Algorithm::Cdm)
                .unwrap()
                .with_activation_log();
            let s = run_rlnm(&t, &d, &inst, &config).unwrap();
            let log = s.activation_log.unwrap();
            log.iter().filter(|e| e.accepted).count() as f64 / log.len() as f64
        };
        let r1 = accept_ratio(1.0, 101);
        let r2 = accept_ratio(1e-3, 102);
        assert!((r1 - r2).abs() < 0.05, "{r1} vs {r2}");
    }

    #[test]
    fn sync_round_count_and_hold() {
        // tau_max = 100, horizon 1000: exactly 10 rounds; the sample at 950
        // reflects 9 completed rounds.
        let t = build_topology(GraphKind::Cycle(4)).unwrap();
        let inst = averaging(4);
        let d = crate::graph::DelayProfile::uniform(&t, 100.0, 0.0).unwrap();
        let config = SimConfig::new(1000.0, 20, 1, Algorithm::Cdm).unwrap();
        let series = run_sync(&t, &d, &inst, &config).unwrap();
        // Manual replay.
        let w = gossip_matrix(&t);
        let mut x = inst.primal_point(&NodeField::zeros(4, 1)).unwrap();
        let mut manual = Vec::new();
        for k in 0..10 {
            x = sync_step(&x, &w);
            let mut v = NodeField::zeros(4, 1);
            for i in 0..4 {
                let g = inst.local_grad(i, x.row(i));
                v.row_mut(i).copy_from_slice(&g);
            }
            manual.push((
                k,
                inst.error_metrics(&v, &inst.optimum().unwrap())
                    .unwrap()
                    .dual_gap,
            ));
        }
        // Record grid is 50,100,...,1000: sample at 150 == after round 1.
        let idx_150 = series.times.iter().position(|&t| t == 150.0).unwrap();
        assert_abs_diff_eq!(series.dual_gap[idx_150], manual[0].1, epsilon = 1e-12);
        let idx_1000 = series.times.iter().position(|&t| t == 1000.0).unwrap();
        assert_abs_diff_eq!(series.dual_gap[idx_1000], manual[9].1, epsilon = 1e-12);
    }

    #[test]
    fn sync_consensus_start_stays_flat_zero() {
        let t = build_topology(GraphKind::Cycle(4)).unwrap();
        let inst = ProblemInstance::quadratic(vec![1.0; 4], vec![vec![0.7]; 4]).unwrap();
        let d = crate::graph::DelayProfile::uniform(&t, 1.0, 0.0).unwrap();
        let config = SimConfig::new(10.0, 10, 1, Algorithm::Cdm).unwrap();
        let series = run_sync(&t, &d, &inst, &config).unwrap();
        for &g in &series.dual_gap {
            assert!(g.abs() < 1e-14);
        }
    }

    #[test]
    fn sync_first_round_matches_gossip_matrix() {
        let t = build_topology(GraphKind::Cycle(4)).unwrap();
        let inst = averaging(4);
        let d = crate::graph::DelayProfile::uniform(&t, 1.0, 0.0).unwrap();
        let config = SimConfig::new(1.0, 1, 1, Algorithm::Cdm).unwrap();
        let series = run_sync(&t, &d, &inst, &config).unwrap();
        let w = gossip_matrix(&t);
        let x0 = inst.primal_point(&NodeField::zeros(4, 1)).unwrap();
        let x1 = sync_step(&x0, &w);
        let mut v = NodeField::zeros(4, 1);
        for i in 0..4 {
            let g = inst.local_grad(i, x1.row(i));
            v.row_mut(i).copy_from_slice(&g);
        }
        let expect = inst
            .error_metrics(&v, &inst.optimum().unwrap())
            .unwrap()
            .dual_gap;
        assert_abs_diff_eq!(series.dual_gap[0], expect, epsilon = 1e-14);
    }

    #[test]
    fn event_times_strictly_increase() {
        let t = build_topology(GraphKind::Cycle(6)).unwrap();
        let inst = averaging(6);
        let d = crate::graph::DelayProfile::uniform(&t, 1.0, 0.05).unwrap();
        let config = SimConfig::new(100.0, 5, 3, Algorithm::Cdm)
            .unwrap()
            .with_activation_log();
        for series in [
            run_ppp(&t, &ppp_rates(&d).unwrap(), &inst, &config).unwrap(),
            run_rlnm(&t, &d, &inst, &config).unwrap(),
        ] {
            let log = series.activation_log.unwrap();
            for pair in log.windows(2) {
                assert!(pair[1].time > pair[0].time);
            }
        }
    }

    #[test]
    fn cacdm_runs_under_both_models() {
        let t = build_topology(GraphKind::Cycle(6)).unwrap();
        let inst = averaging(6);
        let d = crate::graph::DelayProfile::uniform(&t, 1.0, 0.0).unwrap();
        let rates = ppp_rates(&d).unwrap();
        let config = SimConfig::new(50.0, 50, 5, Algorithm::Cacdm).unwrap();
        let s = run_ppp(&t, &rates, &inst, &config).unwrap();
        assert!(s.dual_gap.last().unwrap() < &1e-3);
        let s2 = run_rlnm(&t, &d, &inst, &config).unwrap();
        assert!(s2.dual_gap.last().unwrap() < s2.dual_gap.first().unwrap());
    }
}
