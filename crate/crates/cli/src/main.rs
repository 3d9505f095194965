//! gossipnet: experiment orchestration for asynchronous gossip simulations.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure.

mod config;
mod output;
mod reproduce;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use gossipnet::analysis::queue_probe;
use gossipnet::engine::{
    run_ppp_prepared, run_rlnm_prepared, run_sync, Algorithm, MetricSeries, Prepared, SimConfig,
};
use gossipnet::graph::{
    laplacian, ppp_rates, rlnm_rates, rlnm_theoretical_weights, spectral_gap, total_intensity,
    EdgeWeights,
};
use gossipnet::Error as CoreError;

use config::{AlgorithmSpec, ExperimentConfig, Model};
use output::{emit_svg, write_activation_csv, write_mean_csv, write_metric_csv, SvgSeries};

#[derive(Parser)]
#[command(
    name = "gossipnet",
    version,
    about = "Asynchronous gossip optimization simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment over its seeds and write CSVs.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        /// Override the number of seeds (0..N).
        #[arg(long)]
        seeds: Option<u64>,
        /// Output directory (defaults to the config's output_dir, then "out").
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also emit an SVG chart.
        #[arg(long)]
        svg: bool,
    },
    /// Reproduce one of the benchmark figures (fig1, fig2, fig3).
    Reproduce {
        figure: String,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Print spectral gaps of the configured graph under the four weightings.
    Gap {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Probe the no-activation probability bound per edge class.
    ProbeQueue {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate {
            config,
            seeds,
            out,
            svg,
        } => cmd_simulate(&config, seeds, out, svg),
        Command::Reproduce {
            figure,
            seeds,
            out,
            svg,
        } => reproduce::cmd_reproduce(&figure, seeds, &out, svg),
        Command::Gap { config } => cmd_gap(&config),
        Command::ProbeQueue {
            config,
            delta,
            trials,
        } => cmd_probe_queue(&config, delta, trials),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            // Numeric failures exit 3, everything else is a config error.
            let numeric = err.chain().any(|c| {
                matches!(
                    c.downcast_ref::<CoreError>(),
                    Some(CoreError::NumericFailure { .. })
                )
            });
            ExitCode::from(if numeric { 3 } else { 2 })
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    ExperimentConfig::parse(&text)
}

fn effective_seeds(cfg: &ExperimentConfig, cli_seeds: Option<u64>) -> Vec<u64> {
    if let Ok(env_seed) = std::env::var("GOSSIPNET_SEED") {
        if let Ok(s) = env_seed.parse::<u64>() {
            return vec![s];
        }
    }
    match cli_seeds {
        Some(n) => (0..n).collect(),
        None => cfg.seeds.seeds(),
    }
}

/// Runs one seed of the configured experiment.
fn run_one(
    cfg: &ExperimentConfig,
    prep: &Prepared<'_>,
    delays: &gossipnet::graph::DelayProfile,
    seed: u64,
) -> Result<MetricSeries> {
    let algo = match cfg.algorithm {
        AlgorithmSpec::Cdm | AlgorithmSpec::SyncGossip => Algorithm::Cdm,
        AlgorithmSpec::Cacdm => Algorithm::Cacdm,
    };
    let mut sim = SimConfig::new(cfg.horizon, cfg.record_count(), seed, algo)?;
    if let Some(times) = cfg.record_times() {
        sim = sim.with_record_times(times)?;
    }
    if cfg.record_activation_log {
        sim = sim.with_activation_log();
    }
    let series = match cfg.model {
        Model::Ppp => run_ppp_prepared(prep, &sim)?,
        Model::Rlnm => run_rlnm_prepared(prep, delays, &sim)?,
        Model::Sync => run_sync(prep.topology, delays, prep.instance, &sim)?,
    };
    Ok(series)
}

fn cmd_simulate(
    path: &Path,
    cli_seeds: Option<u64>,
    out: Option<PathBuf>,
    svg: bool,
) -> Result<()> {
    let cfg = load_config(path)?;
    let out = out
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let out = out.as_path();
    let topology = cfg.build_topology()?;
    let seeds = effective_seeds(&cfg, cli_seeds);
    let base_seed = seeds.first().copied().unwrap_or(0);
    let delays = cfg.build_delays(&topology, base_seed)?;
    let instance = cfg.build_instance(&topology)?;
    let algo = match cfg.algorithm {
        AlgorithmSpec::Cdm | AlgorithmSpec::SyncGossip => Algorithm::Cdm,
        AlgorithmSpec::Cacdm => Algorithm::Cacdm,
    };
    let rates = match cfg.model {
        Model::Rlnm => rlnm_rates(&topology, &delays)?,
        _ => ppp_rates(&delays)?,
    };
    let prep = Prepared::new(&topology, rates, &instance, algo)?;

    fs::create_dir_all(out)?;
    let runs: Vec<(u64, MetricSeries)> = seeds
        .par_iter()
        .map(|&s| run_one(&cfg, &prep, &delays, s).map(|r| (s, r)))
        .collect::<Result<_>>()?;

    for (s, series) in &runs {
        let file = out.join(format!("run_seed{s}.csv"));
        write_metric_csv(&file, series)?;
        if series.activation_log.is_some() {
            write_activation_csv(&out.join(format!("activations_seed{s}.csv")), series)?;
        }
        println!("wrote {}", file.display());
    }
    // Seed-averaged curves.
    let samples = runs[0].1.times.len();
    let times = runs[0].1.times.clone();
    let mean = |f: fn(&MetricSeries) -> &Vec<f64>| -> Vec<f64> {
        (0..samples)
            .map(|k| runs.iter().map(|(_, r)| f(r)[k]).sum::<f64>() / runs.len() as f64)
            .collect()
    };
    let mean_gap = mean(|r| &r.dual_gap);
    let mean_primal = mean(|r| &r.primal_sq_err);
    let mean_consensus = mean(|r| &r.consensus_sq_err);
    let avg_path = out.join("average.csv");
    write_mean_csv(&avg_path, &times, &mean_gap, &mean_primal, &mean_consensus)?;
    println!("wrote {}", avg_path.display());

    if svg || cfg.emit_svg {
        let svg_series = vec![SvgSeries {
            label: "mean dual gap",
            times: &times,
            values: &mean_gap,
            dashed: false,
        }];
        let svg_path = out.join("average.svg");
        emit_svg(&svg_series, &svg_path)?;
        println!("wrote {}", svg_path.display());
    }
    Ok(())
}

fn cmd_gap(path: &Path) -> Result<()> {
    let cfg = load_config(path)?;
    let topology = cfg.build_topology()?;
    let seeds = cfg.seeds.seeds();
    let delays = cfg.build_delays(&topology, seeds.first().copied().unwrap_or(0))?;

    let gap_of = |weights: &EdgeWeights| -> Result<f64> {
        Ok(spectral_gap(&laplacian(&topology, weights)?)?)
    };
    let uniform = gap_of(&EdgeWeights::uniform(&topology, 1.0)?)?;
    let p_ppp = ppp_rates(&delays)?;
    let i_ppp = total_intensity(&p_ppp);
    let g_ppp = gap_of(&EdgeWeights::new(&topology, p_ppp)?)?;
    let p_rlnm = rlnm_rates(&topology, &delays)?;
    let i_rlnm = total_intensity(&p_rlnm);
    let g_rlnm = gap_of(&EdgeWeights::new(&topology, p_rlnm)?)?;
    let w_thm3 = rlnm_theoretical_weights(&topology, &delays, i_rlnm)?;
    let g_thm3 = gap_of(&w_thm3)?;

    let report = json!({
        "nodes": topology.node_count(),
        "edges": topology.edge_count(),
        "intensity": {"ppp": i_ppp, "rlnm": i_rlnm},
        "gaps": {
            "uniform": uniform,
            "ppp": g_ppp,
            "rlnm": g_rlnm,
            "thm3_weights": g_thm3,
        },
        "normalized_gaps": {
            "ppp": g_ppp / i_ppp,
            "rlnm": g_rlnm / i_rlnm,
            "thm3_weights": g_thm3 / i_rlnm,
        },
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_probe_queue(path: &Path, delta: f64, trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(anyhow!("trials must be positive"));
    }
    let cfg = load_config(path)?;
    let topology = cfg.build_topology()?;
    let seeds = cfg.seeds.seeds();
    let base_seed = seeds.first().copied().unwrap_or(0);
    let delays = cfg.build_delays(&topology, base_seed)?;
    let slack = 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt();

    // One representative edge per delay class keeps large graphs affordable;
    // small graphs probe every edge.
    let rates = rlnm_rates(&topology, &delays)?;
    let mut class_reps: Vec<usize> = Vec::new();
    if topology.edge_count() <= 64 {
        class_reps.extend(0..topology.edge_count());
    } else {
        let mut seen: Vec<(u64, u64)> = Vec::new();
        for (e, rate) in rates.iter().enumerate() {
            let key = (
                rate.to_bits(),
                delays.tau_max_around(&topology, e).to_bits(),
            );
            if !seen.contains(&key) {
                seen.push(key);
                class_reps.push(e);
            }
        }
    }

    let mut edges = Vec::new();
    let mut all_ok = true;
    for e in class_reps {
        let miss = queue_probe(&topology, &delays, e, delta, trials, base_seed)?;
        let ok = miss <= delta + slack;
        all_ok &= ok;
        let (i, j) = topology.edge(e);
        edges.push(json!({
            "edge": e, "i": i, "j": j,
            "rate": rates[e],
            "miss_probability": miss,
            "ok": ok,
        }));
    }
    let report = json!({
        "delta": delta,
        "trials": trials,
        "bound": delta + slack,
        "edges": edges,
        "all_ok": all_ok,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
