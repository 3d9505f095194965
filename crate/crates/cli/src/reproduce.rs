//! Benchmark-figure reproduction: the two heterogeneous graphs (50-cycle and
//! 15x15 grid, 10% stragglers with delay 100 vs 1), seed-averaged error
//! curves for the relevant algorithm/model pairs, plus theoretical envelopes.

use std::fs;
use std::path::Path;

use anyhow::{bail, Result};
use rayon::prelude::*;

use gossipnet::analysis::{bound_curve, rate_ppp_cdm, rate_rlnm, BoundKind};
use gossipnet::dualcore::cacdm_params;
use gossipnet::engine::{
    run_ppp_prepared, run_rlnm_prepared, run_sync, Algorithm, Prepared, SimConfig,
};
use gossipnet::graph::{
    assign_straggler_delays, build_topology, laplacian, ppp_rates, rlnm_rates, spectral_gap,
    total_intensity, DelayProfile, EdgeWeights, GraphKind, Topology,
};
use gossipnet::objective::ProblemInstance;
use gossipnet::rng::{stream, StreamId};

use crate::output::{emit_svg, write_overlay_csv, SvgSeries};

/// Straggler placement stream shared by all figures.
const PLACEMENT_SEED: u64 = 1000;

struct FigureGraph {
    name: &'static str,
    topology: Topology,
    delays: DelayProfile,
    instance: ProblemInstance,
    horizon_ppp: f64,
    horizon_rlnm: f64,
}

fn figure_graphs(epsilon: f64) -> Vec<FigureGraph> {
    let mut out = Vec::new();
    for (name, kind, n, horizon_ppp, horizon_rlnm) in [
        (
            "cycle50",
            GraphKind::Cycle(50),
            50usize,
            80_000.0,
            300_000.0,
        ),
        (
            "grid15x15",
            GraphKind::Grid2d(15, 15),
            225,
            5_000.0,
            60_000.0,
        ),
    ] {
        let topology = build_topology(kind).unwrap();
        let mut rng = stream(PLACEMENT_SEED, StreamId::Topology);
        let delays =
            assign_straggler_delays(&topology, 0.1, 100.0, 1.0, epsilon, &mut rng).unwrap();
        let instance = ProblemInstance::averaging_spike(n, 1, 1.0, 1.0).unwrap();
        out.push(FigureGraph {
            name,
            topology,
            delays,
            instance,
            horizon_ppp,
            horizon_rlnm,
        });
    }
    out
}

fn mean_curve(
    prep: &Prepared<'_>,
    delays: Option<&DelayProfile>,
    horizon: f64,
    samples: usize,
    seeds: u64,
    algo: Algorithm,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let curves: Vec<Vec<f64>> = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let config = SimConfig::new(horizon, samples, s, algo)?;
            let series = match delays {
                None => run_ppp_prepared(prep, &config)?,
                Some(d) => run_rlnm_prepared(prep, d, &config)?,
            };
            Ok(series.dual_gap)
        })
        .collect::<Result<_>>()?;
    let times: Vec<f64> = (1..=samples)
        .map(|k| horizon * k as f64 / samples as f64)
        .collect();
    let mean = (0..samples)
        .map(|k| curves.iter().map(|c| c[k]).sum::<f64>() / seeds as f64)
        .collect();
    Ok((times, mean))
}

pub fn cmd_reproduce(figure: &str, seeds: u64, out: &Path, svg: bool) -> Result<()> {
    if seeds == 0 {
        bail!("need at least one seed");
    }
    fs::create_dir_all(out)?;
    match figure {
        "fig1" => fig1(seeds, out, svg),
        "fig2" => fig2(seeds, out, svg),
        "fig3" => fig3(seeds, out, svg),
        other => bail!("unknown figure {other:?} (expected fig1, fig2 or fig3)"),
    }
}

/// CDM vs CACDM under the Poisson model.
fn fig1(seeds: u64, out: &Path, svg: bool) -> Result<()> {
    for g in figure_graphs(0.0) {
        let rates = ppp_rates(&g.delays)?;
        let gamma_p = spectral_gap(&laplacian(
            &g.topology,
            &EdgeWeights::new(&g.topology, rates.clone())?,
        )?)?;
        let gap0 = -g.instance.optimum()?.dual_opt;
        let samples = 400;

        let prep = Prepared::new(&g.topology, rates.clone(), &g.instance, Algorithm::Cdm)?;
        let (times, cdm) = mean_curve(&prep, None, g.horizon_ppp, samples, seeds, Algorithm::Cdm)?;
        let prep = Prepared::new(&g.topology, rates.clone(), &g.instance, Algorithm::Cacdm)?;
        let (_, cacdm) = mean_curve(&prep, None, g.horizon_ppp, samples, seeds, Algorithm::Cacdm)?;

        let bound_cdm = bound_curve(
            &BoundKind::Thm1 {
                initial_gap: gap0,
                rate: rate_ppp_cdm(&g.instance, gamma_p),
            },
            &times,
        );
        let params = cacdm_params(&g.topology, &rates, &g.instance)?;
        let bound_ac = bound_curve(
            &BoundKind::Thm2 {
                l0: gap0,
                rate: params.rate(),
            },
            &times,
        );

        let csv = out.join(format!("fig1_{}.csv", g.name));
        write_overlay_csv(
            &csv,
            &times,
            &[
                ("cdm_ppp", &cdm),
                ("cacdm_ppp", &cacdm),
                ("bound_thm1", &bound_cdm),
                ("bound_thm2", &bound_ac),
            ],
        )?;
        println!("wrote {}", csv.display());
        if svg {
            let path = out.join(format!("fig1_{}.svg", g.name));
            emit_svg(
                &[
                    SvgSeries {
                        label: "CDM (P.p.p.)",
                        times: &times,
                        values: &cdm,
                        dashed: false,
                    },
                    SvgSeries {
                        label: "CACDM (P.p.p.)",
                        times: &times,
                        values: &cacdm,
                        dashed: false,
                    },
                    SvgSeries {
                        label: "thm1 bound",
                        times: &times,
                        values: &bound_cdm,
                        dashed: true,
                    },
                    SvgSeries {
                        label: "thm2 bound",
                        times: &times,
                        values: &bound_ac,
                        dashed: true,
                    },
                ],
                &path,
            )?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

/// Synchronous gossip vs CDM on the loss network.
fn fig2(seeds: u64, out: &Path, svg: bool) -> Result<()> {
    for g in figure_graphs(0.05) {
        let rates = rlnm_rates(&g.topology, &g.delays)?;
        let samples = 400;
        let prep = Prepared::new(&g.topology, rates.clone(), &g.instance, Algorithm::Cdm)?;
        let (times, rlnm) = mean_curve(
            &prep,
            Some(&g.delays),
            g.horizon_rlnm,
            samples,
            seeds,
            Algorithm::Cdm,
        )?;
        let sync_cfg = SimConfig::new(g.horizon_rlnm, samples, 0, Algorithm::Cdm)?;
        let sync = run_sync(&g.topology, &g.delays, &g.instance, &sync_cfg)?;

        // Discrete Theorem-3 envelope mapped to time through the attempt
        // intensity I (one unit of time ~ I activations).
        let gap0 = -g.instance.optimum()?.dual_opt;
        let (_, big_gamma, _) = rate_rlnm(&g.topology, &g.delays, &g.instance)?;
        let consts = gossipnet::analysis::rlnm_constants(&g.topology, &g.delays, 0.1)?;
        let intensity = total_intensity(&rates);
        let activation_index: Vec<f64> = times.iter().map(|&t| t * intensity).collect();
        let bound = bound_curve(
            &BoundKind::Thm3 {
                l0: gap0,
                cond: g.instance.sigma_min() / g.instance.l_max(),
                gamma: big_gamma,
                t_window: consts.t_window,
            },
            &activation_index,
        );

        let csv = out.join(format!("fig2_{}.csv", g.name));
        write_overlay_csv(
            &csv,
            &times,
            &[
                ("cdm_rlnm", &rlnm),
                ("sync_gossip", &sync.dual_gap),
                ("bound_thm3", &bound),
            ],
        )?;
        println!("wrote {}", csv.display());
        if svg {
            let path = out.join(format!("fig2_{}.svg", g.name));
            emit_svg(
                &[
                    SvgSeries {
                        label: "CDM (RLNM)",
                        times: &times,
                        values: &rlnm,
                        dashed: false,
                    },
                    SvgSeries {
                        label: "sync gossip",
                        times: &times,
                        values: &sync.dual_gap,
                        dashed: false,
                    },
                    SvgSeries {
                        label: "thm3 bound",
                        times: &times,
                        values: &bound,
                        dashed: true,
                    },
                ],
                &path,
            )?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

/// CDM vs CACDM, both on the loss network.
fn fig3(seeds: u64, out: &Path, svg: bool) -> Result<()> {
    for g in figure_graphs(0.05) {
        let rates = rlnm_rates(&g.topology, &g.delays)?;
        let samples = 400;
        let prep = Prepared::new(&g.topology, rates.clone(), &g.instance, Algorithm::Cdm)?;
        let (times, cdm) = mean_curve(
            &prep,
            Some(&g.delays),
            g.horizon_rlnm,
            samples,
            seeds,
            Algorithm::Cdm,
        )?;
        let prep = Prepared::new(&g.topology, rates.clone(), &g.instance, Algorithm::Cacdm)?;
        let (_, cacdm) = mean_curve(
            &prep,
            Some(&g.delays),
            g.horizon_rlnm,
            samples,
            seeds,
            Algorithm::Cacdm,
        )?;
        // Envelope for the accelerated run, tuned from the loss-network rates.
        let gap0 = -g.instance.optimum()?.dual_opt;
        let params = cacdm_params(&g.topology, &rates, &g.instance)?;
        let bound = bound_curve(
            &BoundKind::Thm2 {
                l0: gap0,
                rate: params.rate(),
            },
            &times,
        );

        let csv = out.join(format!("fig3_{}.csv", g.name));
        write_overlay_csv(
            &csv,
            &times,
            &[
                ("cdm_rlnm", &cdm),
                ("cacdm_rlnm", &cacdm),
                ("bound_thm2", &bound),
            ],
        )?;
        println!("wrote {}", csv.display());
        if svg {
            let path = out.join(format!("fig3_{}.svg", g.name));
            emit_svg(
                &[
                    SvgSeries {
                        label: "CDM (RLNM)",
                        times: &times,
                        values: &cdm,
                        dashed: false,
                    },
                    SvgSeries {
                        label: "CACDM (RLNM)",
                        times: &times,
                        values: &cacdm,
                        dashed: false,
                    },
                    SvgSeries {
                        label: "thm2 bound",
                        times: &times,
                        values: &bound,
                        dashed: true,
                    },
                ],
                &path,
            )?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
