//! Theoretical rate calculators, loss-network constants, activation-log
//! statistics, the queueing probe, and empirical rate fitting.

use rayon::prelude::*;

use crate::dualcore::CacdmParams;
use crate::engine::{run_rlnm, Algorithm, SimConfig};
use crate::error::{Error, Result};
use crate::graph::{
    alpha_constant, laplacian, rlnm_rates, rlnm_theoretical_weights, spectral_gap, total_intensity,
    DelayProfile, EdgeWeights, Topology,
};
use crate::objective::ProblemInstance;

/// |ln(1 - (1 - 1/e)/e)|, the per-round success-probability log that
/// normalizes every inactivation-length bound.
pub fn round_log() -> f64 {
    let base: f64 = 1.0 - (1.0 - (-1.0_f64).exp()) * (-1.0_f64).exp();
    base.ln().abs()
}

/// Continuous-time rate of the plain coordinate method under the Poisson
/// model: sigma_min / (2 L_max) * gamma_p.
pub fn rate_ppp_cdm(instance: &ProblemInstance, gamma_p: f64) -> f64 {
    instance.sigma_min() / (2.0 * instance.l_max()) * gamma_p
}

/// Continuous-time rate of the accelerated method: I * theta.
pub fn rate_cacdm(params: &CacdmParams) -> f64 {
    params.rate()
}

/// Constants of the loss-network analysis, all logarithms taken in absolute
/// value so lengths and counts come out positive.
#[derive(Debug, Clone)]
pub struct RlnmConstants {
    pub tau_tilde: Vec<f64>,
    pub tau_tilde_max: f64,
    /// Window length in activations.
    pub t_window: usize,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    /// Inactivation-length bound per edge at the chosen delta.
    pub ell: Vec<f64>,
    pub d_max: usize,
    pub intensity: f64,
    pub delta: f64,
}

/// tau~_ij = (1+eps)/p_ij; T = ceil(2 ln(6|E|)/|ln(1-(1-1/e)/e)| * I tau~_max);
/// a = 2eI ln(6|E|T)/|ln(...)|; b = 2e ln(6|E|T)/|ln(...)|;
/// ell_ij(delta) = |ln delta|/|ln(...)| * (p_ij^{-1} + tau_max(ij)) (1+eps).
pub fn rlnm_constants(
    topology: &Topology,
    delays: &DelayProfile,
    delta: f64,
) -> Result<RlnmConstants> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    let rates = rlnm_rates(topology, delays)?;
    let intensity = total_intensity(&rates);
    let eps = delays.epsilon();
    let tau_tilde: Vec<f64> = rates.iter().map(|&p| (1.0 + eps) / p).collect();
    let tau_tilde_max = tau_tilde.iter().cloned().fold(f64::MIN, f64::max);
    let m = topology.edge_count() as f64;
    let c = round_log();
    let t_window = (2.0 * (6.0 * m).ln() / c * intensity * tau_tilde_max).ceil() as usize;
    let log_6mt = (6.0 * m * t_window as f64).ln();
    let a = 2.0 * std::f64::consts::E * intensity * log_6mt / c;
    let b = 2.0 * std::f64::consts::E * log_6mt / c;
    let ell = ell_lengths(topology, delays, &rates, delta);
    Ok(RlnmConstants {
        tau_tilde,
        tau_tilde_max,
        t_window,
        a,
        b,
        alpha: alpha_constant(),
        ell,
        d_max: topology.max_degree(),
        intensity,
        delta,
    })
}

/// ell_ij(delta) = (|ln delta| / |ln(1-(1-1/e)/e)|) (p_ij^{-1} + tau_max(ij)) (1+eps).
pub fn ell_lengths(
    topology: &Topology,
    delays: &DelayProfile,
    rates: &[f64],
    delta: f64,
) -> Vec<f64> {
    let c = round_log();
    let eps = delays.epsilon();
    (0..topology.edge_count())
        .map(|e| {
            delta.ln().abs() / c
                * (1.0 / rates[e] + delays.tau_max_around(topology, e))
                * (1.0 + eps)
        })
        .collect()
}

/// Loss-network rate package: the theoretical edge weights, their spectral
/// gap Gamma, and the per-activation asymptotic rate
/// sigma_min/L_max * Gamma / (24 e).
pub fn rate_rlnm(
    topology: &Topology,
    delays: &DelayProfile,
    instance: &ProblemInstance,
) -> Result<(EdgeWeights, f64, f64)> {
    let rates = rlnm_rates(topology, delays)?;
    let intensity = total_intensity(&rates);
    let weights = rlnm_theoretical_weights(topology, delays, intensity)?;
    let gamma = spectral_gap(&laplacian(topology, &weights)?)?;
    let rate = instance.sigma_min() / instance.l_max() * gamma / (24.0 * std::f64::consts::E);
    Ok((weights, gamma, rate))
}

/// Delay-constraint check: tau~_max/tau~_min <= (L_max/sigma_min) * alpha
/// d_max^2 ln|E| / gamma_1. Returns (holds, lhs, rhs).
pub fn check_assumption1(
    topology: &Topology,
    delays: &DelayProfile,
    instance: &ProblemInstance,
) -> Result<(bool, f64, f64)> {
    let rates = rlnm_rates(topology, delays)?;
    let eps = delays.epsilon();
    let tau_tilde: Vec<f64> = rates.iter().map(|&p| (1.0 + eps) / p).collect();
    let lhs = tau_tilde.iter().cloned().fold(f64::MIN, f64::max)
        / tau_tilde.iter().cloned().fold(f64::MAX, f64::min);
    let gamma_1 = spectral_gap(&laplacian(topology, &EdgeWeights::uniform(topology, 1.0)?)?)?;
    let d_max = topology.max_degree() as f64;
    let rhs = instance.l_max() / instance.sigma_min()
        * alpha_constant()
        * d_max
        * d_max
        * (topology.edge_count() as f64).ln()
        / gamma_1;
    Ok((lhs <= rhs, lhs, rhs))
}

/// Which assumption item a window violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssumptionItem {
    /// (1) every edge activated within the window
    Coverage,
    /// (2) inter-activation counts within a * ell_ij
    Spacing,
    /// (3) cross-edge counts within ceil(b ell_ij / ell_kl)
    CrossCount,
}

/// Per-window verdicts for the three delay assumptions, computed from an
/// accepted-activation log (edge ids in activation order).
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub windows: usize,
    pub ok_windows: usize,
    /// Windows where every edge appears.
    pub coverage_ok: usize,
    /// Windows with all inter-activation counts within a*ell.
    pub spacing_ok: usize,
    /// Windows with all cross-edge counts within ceil(b ell_ij / ell_kl).
    pub crosscount_ok: usize,
    /// (window index, violated item) pairs.
    pub violations: Vec<(usize, AssumptionItem)>,
}

impl AssumptionReport {
    pub fn fraction_ok(&self) -> f64 {
        if self.windows == 0 {
            0.0
        } else {
            self.ok_windows as f64 / self.windows as f64
        }
    }
}

/// Evaluates assumption items (1)-(3) on consecutive windows of `t_window`
/// activations. Counts at window borders are capped by the window, matching
/// the event the stochastic analysis conditions on.
pub fn activation_stats(
    accepted_edges: &[usize],
    edge_count: usize,
    ell: &[f64],
    t_window: usize,
    a: f64,
    b: f64,
) -> Result<AssumptionReport> {
    if accepted_edges.is_empty() {
        return Err(Error::invalid("empty activation log"));
    }
    if t_window == 0 {
        return Err(Error::invalid("window must be positive"));
    }
    let len = accepted_edges.len();
    if len < t_window {
        return Err(Error::InvalidWindow {
            start: 0,
            end: t_window,
            reason: format!("log has only {len} activations"),
        });
    }
    let n_windows = len / t_window;
    let mut coverage_ok = 0usize;
    let mut spacing_ok = 0usize;
    let mut crosscount_ok = 0usize;
    let mut ok_windows = 0usize;
    let mut violations = Vec::new();

    for w in 0..n_windows {
        let start = w * t_window;
        let end = start + t_window;
        let window = &accepted_edges[start..end];

        // Item (1): all edges activated within the window.
        let mut seen = vec![false; edge_count];
        for &e in window {
            seen[e] = true;
        }
        let cov = seen.iter().all(|&s| s);

        // Occurrence positions per edge inside the window.
        let mut positions: Vec<Vec<usize>> = vec![Vec::new(); edge_count];
        for (idx, &e) in window.iter().enumerate() {
            positions[e].push(idx);
        }

        // Item (2): for every s, the gap between consecutive activations of
        // each edge (capped at window borders) stays within a * ell_ij.
        let mut spc = true;
        'outer: for e in 0..edge_count {
            let pos = &positions[e];
            let bound = a * ell[e];
            let mut prev: isize = -1;
            for &p in pos {
                let gap = (p as isize - prev - 1) as f64;
                if gap > bound {
                    spc = false;
                    break 'outer;
                }
                prev = p as isize;
            }
            let tail = (t_window as isize - prev - 1) as f64;
            if tail > bound {
                spc = false;
                break;
            }
            if pos.is_empty() && t_window as f64 > bound {
                spc = false;
                break;
            }
        }

        // Item (3): between consecutive activations of edge (ij), each other
        // edge kl fires at most ceil(b ell_ij / ell_kl) times.
        let mut crx = true;
        'outer3: for e in 0..edge_count {
            let pos = &positions[e];
            // Segment boundaries: window start, activations of e, window end.
            let mut bounds = Vec::with_capacity(pos.len() + 2);
            bounds.push(0usize);
            bounds.extend(pos.iter().map(|&p| p + 1));
            bounds.push(t_window);
            for seg in bounds.windows(2) {
                let (s0, s1) = (seg[0], seg[1]);
                if s1 <= s0 {
                    continue;
                }
                let mut counts = vec![0usize; edge_count];
                for &other in &window[s0..s1] {
                    counts[other] += 1;
                }
                for k in 0..edge_count {
                    if k == e {
                        continue;
                    }
                    let cap = (b * ell[e] / ell[k]).ceil();
                    if counts[k] as f64 > cap {
                        crx = false;
                        break 'outer3;
                    }
                }
            }
        }

        if cov {
            coverage_ok += 1;
        } else {
            violations.push((w, AssumptionItem::Coverage));
        }
        if spc {
            spacing_ok += 1;
        } else {
            violations.push((w, AssumptionItem::Spacing));
        }
        if crx {
            crosscount_ok += 1;
        } else {
            violations.push((w, AssumptionItem::CrossCount));
        }
        if cov && spc && crx {
            ok_windows += 1;
        }
    }
    Ok(AssumptionReport {
        windows: n_windows,
        ok_windows,
        coverage_ok,
        spacing_ok,
        crosscount_ok,
        violations,
    })
}

/// Monte-Carlo check of the inactivation-length bound: the fraction of
/// independent warmed-up loss-network runs in which `edge` sees no accepted
/// activation within a window of length ell_ij(delta). Contract: <= delta
/// up to binomial slack.
pub fn queue_probe(
    topology: &Topology,
    delays: &DelayProfile,
    edge: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    if trials < 100 {
        return Err(Error::invalid("need at least 100 trials"));
    }
    if edge >= topology.edge_count() {
        return Err(Error::invalid("edge out of range"));
    }
    let rates = rlnm_rates(topology, delays)?;
    let ell = ell_lengths(topology, delays, &rates, delta)[edge];
    let eps = delays.epsilon();
    let tau_tilde_max = rates
        .iter()
        .map(|&p| (1.0 + eps) / p)
        .fold(f64::MIN, f64::max);
    let warmup = 10.0 * tau_tilde_max;
    let horizon = warmup + ell;
    let n = topology.node_count();
    let instance = ProblemInstance::averaging_spike(n, 1, 1.0, 1.0)?;

    let misses: usize = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let config = SimConfig {
                horizon,
                record_times: vec![horizon],
                seed: seed.wrapping_add(trial as u64),
                algorithm: Algorithm::Cdm,
                record_activation_log: true,
            };
            let series = run_rlnm(topology, delays, &instance, &config).expect("probe run");
            let log = series.activation_log.unwrap();
            let hit = log
                .iter()
                .any(|ev| ev.accepted && ev.edge == edge && ev.time >= warmup);
            usize::from(!hit)
        })
        .sum();
    Ok(misses as f64 / trials as f64)
}

/// Least-squares slope of ln(gap) against time over [t_start, t_end], negated.
pub fn fit_rate(times: &[f64], gaps: &[f64], t_start: f64, t_end: f64) -> Result<f64> {
    if times.len() != gaps.len() {
        return Err(Error::invalid("length mismatch"));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(gaps)
        .filter(|&(&t, _)| t >= t_start && t <= t_end)
        .map(|(&t, &g)| (t, g))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidWindow {
            start: t_start as usize,
            end: t_end as usize,
            reason: "fewer than 2 samples in window".into(),
        });
    }
    if pts.iter().any(|&(_, g)| g <= 0.0) {
        return Err(Error::InvalidWindow {
            start: t_start as usize,
            end: t_end as usize,
            reason: "non-positive gap in window".into(),
        });
    }
    let n = pts.len() as f64;
    let mean_t: f64 = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y: f64 = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(t, g) in &pts {
        num += (t - mean_t) * (g.ln() - mean_y);
        den += (t - mean_t) * (t - mean_t);
    }
    if den == 0.0 {
        return Err(Error::invalid("degenerate time window"));
    }
    Ok(-num / den)
}

/// Theoretical envelope curves.
#[derive(Debug, Clone)]
pub enum BoundKind {
    /// initial_gap * exp(-rate * t)
    Thm1 { initial_gap: f64, rate: f64 },
    /// l0 * exp(-rate * t)
    Thm2 { l0: f64, rate: f64 },
    /// l0 * ((1/4)(1 - cond * gamma)^{T/3} + 3/4)^{ceil(k / (2T))}, evaluated
    /// at activation indices k.
    Thm3 {
        l0: f64,
        cond: f64,
        gamma: f64,
        t_window: usize,
    },
}

/// Envelope values at the given times (thm1/thm2: continuous time; thm3:
/// activation indices passed through `times`).
pub fn bound_curve(kind: &BoundKind, times: &[f64]) -> Vec<f64> {
    match kind {
        BoundKind::Thm1 { initial_gap, rate } => times
            .iter()
            .map(|&t| initial_gap * (-rate * t).exp())
            .collect(),
        BoundKind::Thm2 { l0, rate } => times.iter().map(|&t| l0 * (-rate * t).exp()).collect(),
        BoundKind::Thm3 {
            l0,
            cond,
            gamma,
            t_window,
        } => {
            let t = *t_window as f64;
            let base = 0.25 * (1.0 - cond * gamma).powf(t / 3.0) + 0.75;
            times
                .iter()
                .map(|&k| l0 * base.powf((k / (2.0 * t)).ceil()))
                .collect()
        }
    }
}
