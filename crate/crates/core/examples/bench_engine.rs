//! Quick wall-clock probe of the event loop on the figure-scale graphs.
use gossipnet::engine::{run_ppp_prepared, Algorithm, Prepared, SimConfig};
use gossipnet::graph::{assign_straggler_delays, build_topology, ppp_rates, GraphKind};
use gossipnet::objective::ProblemInstance;
use gossipnet::rng::{stream, StreamId};
use std::time::Instant;

fn main() {
    let t = build_topology(GraphKind::Cycle(50)).unwrap();
    let mut rng = stream(3, StreamId::Topology);
    let d = assign_straggler_delays(&t, 0.1, 100.0, 1.0, 0.0, &mut rng).unwrap();
    let rates = ppp_rates(&d).unwrap();
    let inst = ProblemInstance::averaging_spike(50, 1, 1.0, 1.0).unwrap();
    let intensity: f64 = rates.iter().sum();

    for algo in [Algorithm::Cdm, Algorithm::Cacdm] {
        let prep = Prepared::new(&t, rates.clone(), &inst, algo).unwrap();
        let horizon = 60_000.0;
        let config = SimConfig::new(horizon, 200, 1, algo).unwrap();
        let t0 = Instant::now();
        let series = run_ppp_prepared(&prep, &config).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        let events = intensity * horizon;
        println!(
            "{algo:?}: {dt:.2}s for ~{events:.2e} events = {:.1} ns/event; final gap {:.3e}",
            dt / events * 1e9,
            series.dual_gap.last().unwrap()
        );
    }
}
