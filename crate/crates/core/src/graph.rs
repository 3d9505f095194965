//! Graph topologies, delay profiles, weighted Laplacians and the edge-rate /
//! edge-weight formulas used by the communication models.
//!
//! Edges are stored once with `i < j`; adjacency lists carry `(neighbor,
//! edge_id)` pairs so simulators can walk incident edges without lookups.

use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{check_symmetric, symmetric_eigen};

/// Connected simple undirected graph.
#[derive(Debug, Clone)]
pub struct Topology {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<(usize, usize)>>,
    degrees: Vec<usize>,
}

/// Families supported by [`build_topology`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Path(usize),
    Cycle(usize),
    Grid2d(usize, usize),
    Complete(usize),
}

pub fn build_topology(kind: GraphKind) -> Result<Topology> {
    match kind {
        GraphKind::Path(n) => {
            if n < 2 {
                return Err(Error::invalid("path needs at least 2 nodes"));
            }
            Topology::from_edges(n, (0..n - 1).map(|i| (i, i + 1)).collect())
        }
        GraphKind::Cycle(n) => {
            if n < 3 {
                return Err(Error::invalid("cycle needs at least 3 nodes"));
            }
            let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
            edges.push((0, n - 1));
            Topology::from_edges(n, edges)
        }
        GraphKind::Grid2d(rows, cols) => {
            if rows * cols < 2 || rows == 0 || cols == 0 {
                return Err(Error::invalid("grid needs at least 2 nodes"));
            }
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let u = r * cols + c;
                    if c + 1 < cols {
                        edges.push((u, u + 1));
                    }
                    if r + 1 < rows {
                        edges.push((u, u + cols));
                    }
                }
            }
            Topology::from_edges(rows * cols, edges)
        }
        GraphKind::Complete(n) => {
            if n < 2 {
                return Err(Error::invalid("complete graph needs at least 2 nodes"));
            }
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    edges.push((i, j));
                }
            }
            Topology::from_edges(n, edges)
        }
    }
}

impl Topology {
    /// Builds from an explicit edge list, normalizing pairs to `i < j` and
    /// validating simplicity and connectivity.
    pub fn from_edges(n: usize, raw: Vec<(usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("need at least 2 nodes"));
        }
        let mut edges = Vec::with_capacity(raw.len());
        let mut seen = std::collections::HashSet::new();
        for (a, b) in raw {
            if a == b {
                return Err(Error::invalid(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::invalid(format!("edge ({a},{b}) out of range")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::invalid(format!("duplicate edge ({},{})", e.0, e.1)));
            }
            edges.push(e);
        }
        let mut adjacency = vec![Vec::new(); n];
        for (id, &(i, j)) in edges.iter().enumerate() {
            adjacency[i].push((j, id));
            adjacency[j].push((i, id));
        }
        let degrees: Vec<usize> = adjacency.iter().map(|a| a.len()).collect();
        let topo = Topology {
            n,
            edges,
            adjacency,
            degrees,
        };
        if !topo.is_connected() {
            return Err(Error::invalid("graph is not connected"));
        }
        if topo.degrees.contains(&0) {
            return Err(Error::invalid("isolated node"));
        }
        Ok(topo)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> (usize, usize) {
        self.edges[id]
    }

    /// Neighbors of `node` as `(neighbor, edge_id)` pairs.
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.degrees[node]
    }

    pub fn max_degree(&self) -> usize {
        *self.degrees.iter().max().unwrap()
    }

    /// Edge ids adjacent to `edge_id`, including `edge_id` itself (two edges
    /// are adjacent when they share a node or coincide).
    pub fn adjacent_edges(&self, edge_id: usize) -> Vec<usize> {
        let (i, j) = self.edges[edge_id];
        let mut out = Vec::with_capacity(self.degrees[i] + self.degrees[j]);
        out.push(edge_id);
        for &(_, e) in &self.adjacency[i] {
            if e != edge_id {
                out.push(e);
            }
        }
        for &(_, e) in &self.adjacency[j] {
            if e != edge_id {
                out.push(e);
            }
        }
        out
    }
}

/// Per-node and per-edge delays plus the busy-check fraction epsilon.
#[derive(Debug, Clone)]
pub struct DelayProfile {
    node_delays: Vec<f64>,
    edge_delays: Vec<f64>,
    epsilon: f64,
}

impl DelayProfile {
    pub fn from_node_delays(
        topology: &Topology,
        node_delays: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self> {
        if node_delays.len() != topology.node_count() {
            return Err(Error::invalid("node delay count mismatch"));
        }
        if node_delays
            .iter()
            .any(|&t| t <= 0.0 || t.is_nan() || !t.is_finite())
        {
            return Err(Error::invalid("node delays must be strictly positive"));
        }
        if epsilon < 0.0 {
            return Err(Error::invalid("epsilon must be non-negative"));
        }
        let edge_delays = topology
            .edges()
            .iter()
            .map(|&(i, j)| node_delays[i].max(node_delays[j]))
            .collect();
        Ok(DelayProfile {
            node_delays,
            edge_delays,
            epsilon,
        })
    }

    pub fn uniform(topology: &Topology, tau: f64, epsilon: f64) -> Result<Self> {
        Self::from_node_delays(topology, vec![tau; topology.node_count()], epsilon)
    }

    pub fn node_delay(&self, i: usize) -> f64 {
        self.node_delays[i]
    }

    pub fn node_delays(&self) -> &[f64] {
        &self.node_delays
    }

    pub fn edge_delay(&self, edge_id: usize) -> f64 {
        self.edge_delays[edge_id]
    }

    pub fn edge_delays(&self) -> &[f64] {
        &self.edge_delays
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tau_max(&self) -> f64 {
        self.edge_delays.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// max over edges adjacent to `edge_id` (including itself) of their delay.
    pub fn tau_max_around(&self, topology: &Topology, edge_id: usize) -> f64 {
        topology
            .adjacent_edges(edge_id)
            .into_iter()
            .map(|e| self.edge_delays[e])
            .fold(f64::MIN, f64::max)
    }
}

/// Draws `floor(fraction * n)` straggler nodes uniformly without replacement,
/// assigns them delay `slow` and everyone else `fast`.
pub fn assign_straggler_delays<R: Rng>(
    topology: &Topology,
    fraction: f64,
    slow: f64,
    fast: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<DelayProfile> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid("fraction must be in [0, 1]"));
    }
    if slow <= 0.0 || fast <= 0.0 {
        return Err(Error::invalid("delays must be strictly positive"));
    }
    let n = topology.node_count();
    let k = (fraction * n as f64).floor() as usize;
    let mut node_delays = vec![fast; n];
    for idx in sample(rng, n, k) {
        node_delays[idx] = slow;
    }
    DelayProfile::from_node_delays(topology, node_delays, epsilon)
}

/// Non-negative symmetric edge weights aligned with the topology's edge list.
#[derive(Debug, Clone)]
pub struct EdgeWeights(Vec<f64>);

impl EdgeWeights {
    pub fn new(topology: &Topology, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != topology.edge_count() {
            return Err(Error::invalid("weight count does not match edge count"));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        Ok(EdgeWeights(weights))
    }

    pub fn uniform(topology: &Topology, w: f64) -> Result<Self> {
        Self::new(topology, vec![w; topology.edge_count()])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Dense symmetric weighted Laplacian.
#[derive(Debug, Clone)]
pub struct LaplacianView {
    matrix: Array2<f64>,
}

impl LaplacianView {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// Dense CSV dump for external verification.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.matrix.nrows() {
            let row: Vec<String> = (0..self.matrix.ncols())
                .map(|j| format!("{:.16e}", self.matrix[[i, j]]))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// L[i][i] = sum of incident weights, L[i][j] = -w_ij on edges, 0 elsewhere.
pub fn laplacian(topology: &Topology, weights: &EdgeWeights) -> Result<LaplacianView> {
    let n = topology.node_count();
    if weights.values().len() != topology.edge_count() {
        return Err(Error::invalid("weights missing for some edges"));
    }
    let mut m = Array2::zeros((n, n));
    for (id, &(i, j)) in topology.edges().iter().enumerate() {
        let w = weights.values()[id];
        m[[i, i]] += w;
        m[[j, j]] += w;
        m[[i, j]] -= w;
        m[[j, i]] -= w;
    }
    Ok(LaplacianView { matrix: m })
}

/// Second-smallest eigenvalue of the Laplacian. The constant eigenvector is
/// deflated by shifting it out with a rank-one correction before the solve.
pub fn spectral_gap(view: &LaplacianView) -> Result<f64> {
    let n = check_symmetric(view.matrix(), 1e-9)?;
    // Shift the constant mode to trace-level magnitude so the second-smallest
    // eigenvalue of L becomes the smallest of the deflated matrix.
    let shift = view.matrix().diag().sum().max(1.0);
    let mut deflated = view.matrix().clone();
    let bump = shift / n as f64;
    for i in 0..n {
        for j in 0..n {
            deflated[[i, j]] += bump;
        }
    }
    let eig = symmetric_eigen(&deflated)?;
    Ok(eig.values[0].max(0.0))
}

/// Poisson rates p_ij = 1 / tau_ij.
pub fn ppp_rates(delays: &DelayProfile) -> Result<Vec<f64>> {
    if delays.edge_delays().iter().any(|&t| t <= 0.0) {
        return Err(Error::invalid("delays must be positive"));
    }
    Ok(delays.edge_delays().iter().map(|&t| 1.0 / t).collect())
}

/// Loss-network rates
/// p_ij = min( 1/tau_max(ij), 1/(2 (max(d_i,d_j) - 1)) * 1/tau_ij ).
///
/// When max(d_i, d_j) = 1 (both endpoints degree one) the contention factor is
/// vacuous and the first branch is used alone.
pub fn rlnm_rates(topology: &Topology, delays: &DelayProfile) -> Result<Vec<f64>> {
    if delays.edge_delays().iter().any(|&t| t <= 0.0) {
        return Err(Error::invalid("delays must be positive"));
    }
    let mut rates = Vec::with_capacity(topology.edge_count());
    for (id, &(i, j)) in topology.edges().iter().enumerate() {
        let tau_around = delays.tau_max_around(topology, id);
        let first = 1.0 / tau_around;
        let dmax = topology.degree(i).max(topology.degree(j));
        let rate = if dmax <= 1 {
            first
        } else {
            let second = 1.0 / (2.0 * (dmax as f64 - 1.0)) / delays.edge_delay(id);
            first.min(second)
        };
        rates.push(rate);
    }
    Ok(rates)
}

/// Total Poisson intensity I = sum of edge rates.
pub fn total_intensity(rates: &[f64]) -> f64 {
    rates.iter().sum()
}

/// The universal constant 32 e^2 / ln(1 - (1 - 1/e)/e)^2 (~3.38e3).
pub fn alpha_constant() -> f64 {
    let base: f64 = 1.0 - (1.0 - (-1.0_f64).exp()) * (-1.0_f64).exp();
    32.0 * std::f64::consts::E.powi(2) / base.ln().powi(2)
}

/// Theoretical loss-network edge weights:
/// nu_ij = alpha * tau~_ij^{-1} * min_{(kl)~(ij)} (tau~_ij / tau~_kl)
///         / ( I * d_max^2 * (ln|E| + ln(I * tau~_max))^2 ),
/// with tau~_ij = (1 + eps) / p_ij.
pub fn rlnm_theoretical_weights(
    topology: &Topology,
    delays: &DelayProfile,
    intensity: f64,
) -> Result<EdgeWeights> {
    if intensity <= 0.0 {
        return Err(Error::invalid("total intensity must be positive"));
    }
    let rates = rlnm_rates(topology, delays)?;
    let eps = delays.epsilon();
    let tau_tilde: Vec<f64> = rates.iter().map(|&p| (1.0 + eps) / p).collect();
    let tau_tilde_max = tau_tilde.iter().cloned().fold(f64::MIN, f64::max);
    let m = topology.edge_count() as f64;
    let dmax = topology.max_degree() as f64;
    let log_term = m.ln() + (intensity * tau_tilde_max).ln();
    if log_term.abs() < 1e-12 {
        return Err(Error::invalid(
            "degenerate weight normalization: ln|E| + ln(I tau~_max) = 0",
        ));
    }
    let denom = intensity * dmax * dmax * log_term * log_term;
    let alpha = alpha_constant();

    let mut weights = Vec::with_capacity(topology.edge_count());
    for e in 0..topology.edge_count() {
        let ratio = topology
            .adjacent_edges(e)
            .into_iter()
            .map(|k| tau_tilde[e] / tau_tilde[k])
            .fold(f64::MAX, f64::min);
        weights.push(alpha * ratio / (tau_tilde[e] * denom));
    }
    EdgeWeights::new(topology, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamId};
    use approx::assert_abs_diff_eq;

    #[test]
    fn cycle_50_has_50_edges() {
        let t = build_topology(GraphKind::Cycle(50)).unwrap();
        assert_eq!(t.node_count(), 50);
        assert_eq!(t.edge_count(), 50);
        assert!(t.degrees.iter().all(|&d| d == 2));
    }

    #[test]
    fn path_2_is_single_edge() {
        let t = build_topology(GraphKind::Path(2)).unwrap();
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.edge_count(), 1);
    }

    #[test]
    fn grid_15x15_edge_count_matches_enumeration() {
        let t = build_topology(GraphKind::Grid2d(15, 15)).unwrap();
        assert_eq!(t.node_count(), 225);
        // Independent count: horizontal + vertical lattice edges.
        let mut count = 0;
        for r in 0..15 {
            for c in 0..15 {
                if c + 1 < 15 {
                    count += 1;
                }
                if r + 1 < 15 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 420);
        assert_eq!(t.edge_count(), count);
    }

    #[test]
    fn too_small_sizes_error() {
        assert!(build_topology(GraphKind::Path(1)).is_err());
        assert!(build_topology(GraphKind::Cycle(2)).is_err());
        assert!(build_topology(GraphKind::Grid2d(1, 1)).is_err());
    }

    #[test]
    fn straggler_fraction_counts_nodes() {
        let t = build_topology(GraphKind::Cycle(50)).unwrap();
        let mut rng = stream(7, StreamId::Topology);
        let d = assign_straggler_delays(&t, 0.1, 100.0, 1.0, 0.0, &mut rng).unwrap();
        let slow = d.node_delays().iter().filter(|&&x| x == 100.0).count();
        assert_eq!(slow, 5);
    }

    #[test]
    fn straggler_zero_fraction_all_fast() {
        let t = build_topology(GraphKind::Cycle(10)).unwrap();
        let mut rng = stream(7, StreamId::Topology);
        let d = assign_straggler_delays(&t, 0.0, 100.0, 1.0, 0.0, &mut rng).unwrap();
        assert!(d.node_delays().iter().all(|&x| x == 1.0));
        assert!(d.edge_delays().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn straggler_path2_edge_gets_max() {
        let t = build_topology(GraphKind::Path(2)).unwrap();
        let mut rng = stream(3, StreamId::Topology);
        let d = assign_straggler_delays(&t, 0.5, 100.0, 1.0, 0.0, &mut rng).unwrap();
        let slow = d.node_delays().iter().filter(|&&x| x == 100.0).count();
        assert_eq!(slow, 1);
        assert_abs_diff_eq!(d.edge_delay(0), 100.0);
    }

    #[test]
    fn straggler_rejects_bad_delays() {
        let t = build_topology(GraphKind::Path(2)).unwrap();
        let mut rng = stream(3, StreamId::Topology);
        assert!(assign_straggler_delays(&t, 0.5, -1.0, 1.0, 0.0, &mut rng).is_err());
        assert!(assign_straggler_delays(&t, 0.5, 1.0, 0.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn laplacian_path2_unit() {
        let t = build_topology(GraphKind::Path(2)).unwrap();
        let l = laplacian(&t, &EdgeWeights::uniform(&t, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(l.matrix()[[0, 0]], 1.0);
        assert_abs_diff_eq!(l.matrix()[[0, 1]], -1.0);
        assert_abs_diff_eq!(l.matrix()[[1, 1]], 1.0);
    }

    #[test]
    fn laplacian_path2_scales() {
        let t = build_topology(GraphKind::Path(2)).unwrap();
        let l = laplacian(&t, &EdgeWeights::uniform(&t, 5.0).unwrap()).unwrap();
        assert_abs_diff_eq!(l.matrix()[[0, 0]], 5.0);
        assert_abs_diff_eq!(l.matrix()[[1, 0]], -5.0);
    }

    #[test]
    fn laplacian_cycle3() {
        let t = build_topology(GraphKind::Cycle(3)).unwrap();
        let l = laplacian(&t, &EdgeWeights::uniform(&t, 1.0).unwrap()).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(l.matrix()[[i, i]], 2.0);
            for j in 0..3 {
                if i != j {
                    assert_abs_diff_eq!(l.matrix()[[i, j]], -1.0);
                }
            }
        }
    }

    #[test]
    fn laplacian_row_sums_vanish() {
        let t = build_topology(GraphKind::Grid2d(4, 5)).unwrap();
        let w: Vec<f64> = (0..t.edge_count()).map(|e| 0.1 + (e % 7) as f64).collect();
        let l = laplacian(&t, &EdgeWeights::new(&t, w).unwrap()).unwrap();
        for i in 0..t.node_count() {
            let s: f64 = l.matrix().row(i).sum();
            assert!(s.abs() < 1e-12, "row {i} sums to {s}");
        }
    }

    #[test]
    fn gap_path2_is_two() {
        let t = build_topology(GraphKind::Path(2)).unwrap();
        let l = laplacian(&t, &EdgeWeights::uniform(&t, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(spectral_gap(&l).unwrap(), 2.0, epsilon = 1e-10);
    }

    #[test]
    fn gap_complete3_is_three() {
        let t = build_topology(GraphKind::Complete(3)).unwrap();
        let l = laplacian(&t, &EdgeWeights::uniform(&t, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(spectral_gap(&l).unwrap(), 3.0, epsilon = 1e-10);
    }

    #[test]
    fn gap_matches_cycle_formula() {
        // gamma(cycle n) = 2 (1 - cos(2 pi / n)), the circulant eigenvalue.
        for n in 3..=50 {
            let t = build_topology(GraphKind::Cycle(n)).unwrap();
            let l = laplacian(&t, &EdgeWeights::uniform(&t, 1.0).unwrap()).unwrap();
            let expect = 2.0 * (1.0 - (2.0 * std::f64::consts::PI / n as f64).cos());
            let got = spectral_gap(&l).unwrap();
            assert!((got - expect).abs() < 1e-9, "cycle({n}): {got} vs {expect}");
        }
    }

    #[test]
    fn gap_monotone_in_weights() {
        let t = build_topology(GraphKind::Grid2d(3, 4)).unwrap();
        let mut rng = stream(11, StreamId::Topology);
        for _ in 0..100 {
            let w: Vec<f64> = (0..t.edge_count())
                .map(|_| rng.gen_range(0.1..2.0))
                .collect();
            let mut w2 = w.clone();
            let e = rng.gen_range(0..t.edge_count());
            w2[e] += rng.gen_range(0.0..1.0);
            let g1 =
                spectral_gap(&laplacian(&t, &EdgeWeights::new(&t, w).unwrap()).unwrap()).unwrap();
            let g2 =
                spectral_gap(&laplacian(&t, &EdgeWeights::new(&t, w2).unwrap()).unwrap()).unwrap();
            assert!(g2 >= g1 - 1e-12, "gap decreased: {g1} -> {g2}");
        }
    }

    #[test]
    fn connected_graph_has_positive_gap() {
        for kind in [
            GraphKind::Path(7),
            GraphKind::Cycle(9),
            GraphKind::Grid2d(3, 3),
            GraphKind::Complete(5),
        ] {
            let t = build_topology(kind).unwrap();
            let l = laplacian(&t, &EdgeWeights::uniform(&t, 1.0).unwrap()).unwrap();
            assert!(spectral_gap(&l).unwrap() > 1e-6);
        }
    }

    #[test]
    fn ppp_rates_invert_delays() {
        let t = build_topology(GraphKind::Path(3)).unwrap();
        let d = DelayProfile::from_node_delays(&t, vec![1.0, 1.0, 100.0], 0.0).unwrap();
        let p = ppp_rates(&d).unwrap();
        assert_abs_diff_eq!(p[0], 1.0);
        assert_abs_diff_eq!(p[1], 0.01);
    }

    #[test]
    fn rlnm_rates_homogeneous_cycle() {
        let t = build_topology(GraphKind::Cycle(8)).unwrap();
        let d = DelayProfile::uniform(&t, 1.0, 0.0).unwrap();
        let p = rlnm_rates(&t, &d).unwrap();
        // degrees 2: min(1, 1/2) = 1/2 on every edge.
        assert!(p.iter().all(|&x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn rlnm_rates_path2_degenerate_degree() {
        let t = build_topology(GraphKind::Path(2)).unwrap();
        let d = DelayProfile::uniform(&t, 1.0, 0.0).unwrap();
        let p = rlnm_rates(&t, &d).unwrap();
        assert_abs_diff_eq!(p[0], 1.0);
    }

    #[test]
    fn rlnm_rates_straggler_neighborhood() {
        // Cycle with one slow node: edges adjacent to a slow edge see
        // tau_max(ij) = 100 and get min(0.01, 1/(2 tau_ij)).
        let t = build_topology(GraphKind::Cycle(6)).unwrap();
        let mut delays = vec![1.0; 6];
        delays[0] = 100.0;
        let d = DelayProfile::from_node_delays(&t, delays, 0.0).unwrap();
        let p = rlnm_rates(&t, &d).unwrap();
        for (e, &(i, j)) in t.edges().iter().enumerate() {
            let slow_edge = i == 0 || j == 0;
            let adjacent_to_slow = t.adjacent_edges(e).iter().any(|&k| {
                let (a, b) = t.edge(k);
                a == 0 || b == 0
            });
            if slow_edge {
                assert_abs_diff_eq!(p[e], (0.01_f64).min(0.5 / 100.0), epsilon = 1e-15);
            } else if adjacent_to_slow {
                assert_abs_diff_eq!(p[e], (0.01_f64).min(0.5), epsilon = 1e-15);
            } else {
                assert_abs_diff_eq!(p[e], 0.5, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn intensity_sums_rates() {
        assert_abs_diff_eq!(total_intensity(&[1.0]), 1.0);
        assert_abs_diff_eq!(total_intensity(&vec![0.5; 50]), 25.0);
        assert_abs_diff_eq!(total_intensity(&[]), 0.0);
    }

    #[test]
    fn alpha_matches_reference_value() {
        // 32 e^2 / ln(0.76749...)^2, evaluated independently: ~3.376e3.
        let a = alpha_constant();
        assert!((a - 3376.0).abs() / 3376.0 < 0.01, "alpha = {a}");
    }

    #[test]
    fn thm3_weights_uniform_on_homogeneous_graph() {
        let t = build_topology(GraphKind::Cycle(10)).unwrap();
        let d = DelayProfile::uniform(&t, 1.0, 0.0).unwrap();
        let p = rlnm_rates(&t, &d).unwrap();
        let w = rlnm_theoretical_weights(&t, &d, total_intensity(&p)).unwrap();
        let first = w.values()[0];
        assert!(w.values().iter().all(|&x| (x - first).abs() < 1e-15));
        assert!(first > 0.0);
    }

    #[test]
    fn thm3_weight_ratio_two_delay_path() {
        // path(3) with tau~ = {1, 10}-style asymmetry: the fast edge's
        // min-ratio over adjacent edges is tau~_fast / tau~_slow.
        let t = build_topology(GraphKind::Path(3)).unwrap();
        let d = DelayProfile::from_node_delays(&t, vec![1.0, 1.0, 10.0], 0.0).unwrap();
        let p = rlnm_rates(&t, &d).unwrap();
        let tt: Vec<f64> = p.iter().map(|&x| 1.0 / x).collect();
        let w = rlnm_theoretical_weights(&t, &d, total_intensity(&p)).unwrap();
        // fast edge 0 adjacent to slow edge 1: ratio = tt0/tt1 < 1
        let expect_ratio = tt[0] / tt[1];
        let alpha = alpha_constant();
        let m = 2.0_f64;
        let dmax = 2.0_f64;
        let intensity = total_intensity(&p);
        let ttmax = tt[1];
        let log_term = m.ln() + (intensity * ttmax).ln();
        let denom = intensity * dmax * dmax * log_term * log_term;
        assert_abs_diff_eq!(
            w.values()[0],
            alpha * expect_ratio / (tt[0] * denom),
            epsilon = 1e-12
        );
        // slow edge's min ratio is 1 (itself), neighbors are faster.
        assert_abs_diff_eq!(
            w.values()[1],
            alpha * 1.0 / (tt[1] * denom),
            epsilon = 1e-12
        );
    }

    #[test]
    fn laplacian_csv_round_trips() {
        let t = build_topology(GraphKind::Path(2)).unwrap();
        let l = laplacian(&t, &EdgeWeights::uniform(&t, 1.0).unwrap()).unwrap();
        let csv = l.to_csv();
        let rows: Vec<Vec<f64>> = csv
            .lines()
            .map(|line| line.split(',').map(|x| x.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 2);
        assert_abs_diff_eq!(rows[0][0], 1.0);
        assert_abs_diff_eq!(rows[0][1], -1.0);
    }

    #[test]
    fn laplacian_psd_and_kernel() {
        let t = build_topology(GraphKind::Grid2d(3, 3)).unwrap();
        let w: Vec<f64> = (0..t.edge_count())
            .map(|e| 1.0 + (e as f64) * 0.2)
            .collect();
        let l = laplacian(&t, &EdgeWeights::new(&t, w).unwrap()).unwrap();
        let eig = symmetric_eigen(l.matrix()).unwrap();
        assert!(eig.values[0] > -1e-10);
        assert!(eig.values[0].abs() < 1e-10);
    }
}
