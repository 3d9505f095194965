//! Algorithm state transitions: pairwise dual coordinate steps (CDM), the
//! continuously accelerated variant (CACDM) with its closed-form contraction,
//! synchronous gossip, and the analysis-only edge-dual machinery.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::{laplacian, spectral_gap, EdgeWeights, Topology};
use crate::linalg::{pseudo_inverse_psd, symmetric_eigen};
use crate::objective::{NodeField, ProblemInstance};

// ---------------------------------------------------------------------------
// CDM
// ---------------------------------------------------------------------------

/// Node-level dual iterate for the coordinate descent method.
#[derive(Debug, Clone)]
pub struct CdmState {
    pub v: NodeField,
}

impl CdmState {
    pub fn zeros(n: usize, d: usize) -> Self {
        CdmState {
            v: NodeField::zeros(n, d),
        }
    }
}

/// One dual coordinate step on edge (i, j):
/// g = (grad f_i^*(v_i) - grad f_j^*(v_j)) / (sigma_i^{-1} + sigma_j^{-1}),
/// v_i -= g, v_j += g. State is untouched if a conjugate solve fails.
pub fn cdm_step(
    state: &mut CdmState,
    instance: &ProblemInstance,
    edge: (usize, usize),
) -> Result<()> {
    let (i, j) = edge;
    let xi = instance.conj_grad(i, state.v.row(i))?;
    let xj = instance.conj_grad(j, state.v.row(j))?;
    let denom = 1.0 / instance.sigma(i) + 1.0 / instance.sigma(j);
    let d = instance.dim();
    for k in 0..d {
        let g = (xi[k] - xj[k]) / denom;
        state.v.row_mut(i)[k] -= g;
        state.v.row_mut(j)[k] += g;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// CACDM
// ---------------------------------------------------------------------------

/// Parameters of the accelerated method, all derived from the rates and the
/// instance: the spectral gap of the rate-weighted Laplacian, the tightest
/// admissible S^2, and theta.
#[derive(Debug, Clone, Copy)]
pub struct CacdmParams {
    pub gamma_p: f64,
    pub s_sq: f64,
    pub theta: f64,
    pub intensity: f64,
    /// Momentum kick coefficient theta * L_max / gamma_p.
    pub kappa: f64,
}

impl CacdmParams {
    /// Continuous-time contraction rate I * theta.
    pub fn rate(&self) -> f64 {
        self.intensity * self.theta
    }
}

/// gamma_p = gap(Laplacian(nu = p)); S^2 = sup_(ij) (sigma_i^{-1} +
/// sigma_j^{-1}) / (2 p_ij / I), taken with equality; theta =
/// sqrt(gamma_p / (I S^2 L_max)).
pub fn cacdm_params(
    topology: &Topology,
    rates: &[f64],
    instance: &ProblemInstance,
) -> Result<CacdmParams> {
    let intensity: f64 = rates.iter().sum();
    if intensity <= 0.0 {
        return Err(Error::invalid("total intensity must be positive"));
    }
    let weights = EdgeWeights::new(topology, rates.to_vec())?;
    let gamma_p = spectral_gap(&laplacian(topology, &weights)?)?;
    if gamma_p <= 1e-14 {
        return Err(Error::invalid("rate-weighted graph is disconnected"));
    }
    let mut s_sq = 0.0_f64;
    for (e, &(i, j)) in topology.edges().iter().enumerate() {
        let num = 1.0 / instance.sigma(i) + 1.0 / instance.sigma(j);
        s_sq = s_sq.max(num / (2.0 * rates[e] / intensity));
    }
    let l_max = instance.l_max();
    let theta = (gamma_p / (intensity * s_sq * l_max)).sqrt();
    Ok(CacdmParams {
        gamma_p,
        s_sq,
        theta,
        intensity,
        kappa: theta * l_max / gamma_p,
    })
}

/// Iterate/momentum pair with lazy per-node contraction timestamps.
#[derive(Debug, Clone)]
pub struct CacdmState {
    pub u: NodeField,
    pub v: NodeField,
    pub last_sync: Vec<f64>,
    pub params: CacdmParams,
}

impl CacdmState {
    pub fn zeros(n: usize, d: usize, params: CacdmParams) -> Self {
        CacdmState {
            u: NodeField::zeros(n, d),
            v: NodeField::zeros(n, d),
            last_sync: vec![0.0; n],
            params,
        }
    }
}

/// Applies the closed-form contraction to node i up to time t:
/// with rho = exp(-2 I theta (t - last)), (u_i, v_i) gets the symmetric mix
/// ((1+rho)/2, (1-rho)/2; (1-rho)/2, (1+rho)/2).
pub fn cacdm_contract(state: &mut CacdmState, node: usize, t: f64) -> Result<()> {
    let last = state.last_sync[node];
    if t < last {
        return Err(Error::ClockRegression { requested: t, last });
    }
    let rho = (-2.0 * state.params.rate() * (t - last)).exp();
    let a = 0.5 * (1.0 + rho);
    let b = 0.5 * (1.0 - rho);
    let d = state.u.dim();
    for k in 0..d {
        let uk = state.u.row(node)[k];
        let vk = state.v.row(node)[k];
        state.u.row_mut(node)[k] = a * uk + b * vk;
        state.v.row_mut(node)[k] = b * uk + a * vk;
    }
    state.last_sync[node] = t;
    Ok(())
}

/// Activation of edge (i, j) at time t: contract both endpoints to t, then
/// u gets the coordinate step and v the momentum kick
/// v_i -= kappa * g_full, with g_full the raw conjugate-gradient difference.
pub fn cacdm_step(
    state: &mut CacdmState,
    instance: &ProblemInstance,
    edge: (usize, usize),
    t: f64,
) -> Result<()> {
    let (i, j) = edge;
    cacdm_contract(state, i, t)?;
    cacdm_contract(state, j, t)?;
    let xi = instance.conj_grad(i, state.u.row(i))?;
    let xj = instance.conj_grad(j, state.u.row(j))?;
    let denom = 1.0 / instance.sigma(i) + 1.0 / instance.sigma(j);
    let kappa = state.params.kappa;
    let d = instance.dim();
    for k in 0..d {
        let g_full = xi[k] - xj[k];
        let g = g_full / denom;
        state.u.row_mut(i)[k] -= g;
        state.u.row_mut(j)[k] += g;
        state.v.row_mut(i)[k] -= kappa * g_full;
        state.v.row_mut(j)[k] += kappa * g_full;
    }
    Ok(())
}

/// Non-mutating read: contracts a copy of the state to time t and returns the
/// primal point x_i = grad f_i^*(u_i).
pub fn cacdm_read(state: &CacdmState, instance: &ProblemInstance, t: f64) -> Result<NodeField> {
    let mut copy = state.clone();
    for i in 0..copy.u.node_count() {
        cacdm_contract(&mut copy, i, t)?;
    }
    instance.primal_point(&copy.u)
}

/// Contracted dual iterate at time t (for metric evaluation on duals).
pub fn cacdm_read_dual(state: &CacdmState, t: f64) -> Result<NodeField> {
    let mut copy = state.clone();
    for i in 0..copy.u.node_count() {
        cacdm_contract(&mut copy, i, t)?;
    }
    Ok(copy.u)
}

// ---------------------------------------------------------------------------
// Synchronous gossip
// ---------------------------------------------------------------------------

/// Symmetric stochastic matrix supported by the graph.
#[derive(Debug, Clone)]
pub struct GossipMatrix {
    matrix: Array2<f64>,
}

impl GossipMatrix {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }
}

/// Metropolis weights: W_ij = 1 / (1 + max(d_i, d_j)) on edges, diagonal
/// completes each row to 1.
pub fn gossip_matrix(topology: &Topology) -> GossipMatrix {
    let n = topology.node_count();
    let mut w = Array2::zeros((n, n));
    for &(i, j) in topology.edges() {
        let wij = 1.0 / (1.0 + topology.degree(i).max(topology.degree(j)) as f64);
        w[[i, j]] = wij;
        w[[j, i]] = wij;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[[i, j]]).sum();
        w[[i, i]] = 1.0 - off;
    }
    GossipMatrix { matrix: w }
}

/// One synchronous round x <- W x.
pub fn sync_step(x: &NodeField, w: &GossipMatrix) -> NodeField {
    let n = x.node_count();
    let d = x.dim();
    let mut out = NodeField::zeros(n, d);
    for i in 0..n {
        for j in 0..n {
            let wij = w.matrix[[i, j]];
            if wij == 0.0 {
                continue;
            }
            for k in 0..d {
                out.row_mut(i)[k] += wij * x.row(j)[k];
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Edge-dual machinery (analysis only)
// ---------------------------------------------------------------------------

/// How the edge-incidence scaling mu_ij is chosen.
pub enum MuChoice<'a> {
    /// mu_ij^2 = p_ij (the accelerated analysis pairing).
    Ppp(&'a [f64]),
    /// mu_ij^2 = p_ij / (sigma_i^{-1} + sigma_j^{-1}) (plain CDM analysis).
    Cdm {
        rates: &'a [f64],
        instance: &'a ProblemInstance,
    },
    /// mu_ij = 1.
    Unit,
}

/// Explicit incidence-style matrix A with columns mu_ij (e_i - e_j), the
/// edge-dual iterates and everything needed to evaluate Lyapunov functions.
pub struct EdgeDualTracker {
    a_matrix: Array2<f64>,
    mu: Vec<f64>,
    /// lambda and omega are |E| x d, flattened row-major like NodeField.
    pub lambda: Vec<f64>,
    pub omega: Vec<f64>,
    d: usize,
    /// Projector onto Ker(A)^perp (the row space of A).
    projector: Array2<f64>,
    /// gap(A A^T) / L_max, the strong-convexity surrogate sigma_A.
    pub sigma_a: f64,
    pub lambda_star: Option<Vec<f64>>,
    /// Shared lazy contraction clock for the CACDM pairing.
    last_contract: f64,
}

impl EdgeDualTracker {
    pub fn new(
        topology: &Topology,
        choice: MuChoice<'_>,
        instance: &ProblemInstance,
    ) -> Result<Self> {
        let n = topology.node_count();
        let m = topology.edge_count();
        let mu: Vec<f64> = match choice {
            MuChoice::Ppp(rates) => rates.iter().map(|p| p.sqrt()).collect(),
            MuChoice::Cdm { rates, instance } => topology
                .edges()
                .iter()
                .enumerate()
                .map(|(e, &(i, j))| {
                    (rates[e] / (1.0 / instance.sigma(i) + 1.0 / instance.sigma(j))).sqrt()
                })
                .collect(),
            MuChoice::Unit => vec![1.0; m],
        };
        if mu.len() != m || mu.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
            return Err(Error::invalid("mu must be positive on every edge"));
        }
        let mut a = Array2::zeros((n, m));
        for (e, &(i, j)) in topology.edges().iter().enumerate() {
            a[[i, e]] = mu[e];
            a[[j, e]] = -mu[e];
        }
        // A^T A is m x m; its pseudo-inverse times itself projects onto the
        // row space of A (= Ker(A)^perp).
        let ata = a.t().dot(&a);
        let pinv = pseudo_inverse_psd(&ata, 1e-12)?;
        let projector = pinv.dot(&ata);
        // gap(A A^T): smallest nonzero eigenvalue of the node Laplacian.
        let aat = a.dot(&a.t());
        let eig = symmetric_eigen(&aat)?;
        let lam_min_pos = eig
            .values
            .iter()
            .cloned()
            .find(|&x| x > 1e-12 * eig.values[eig.values.len() - 1].max(1.0))
            .ok_or_else(|| Error::invalid("A A^T has no positive eigenvalue"))?;
        let sigma_a = lam_min_pos / instance.l_max();
        let d = instance.dim();
        Ok(EdgeDualTracker {
            a_matrix: a,
            mu,
            lambda: vec![0.0; m * d],
            omega: vec![0.0; m * d],
            d,
            projector,
            sigma_a,
            lambda_star: None,
            last_contract: 0.0,
        })
    }

    pub fn a_matrix(&self) -> &Array2<f64> {
        &self.a_matrix
    }

    /// Dense CSV dump of A for offline verification.
    pub fn a_matrix_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.a_matrix.nrows() {
            let row: Vec<String> = (0..self.a_matrix.ncols())
                .map(|j| format!("{:.16e}", self.a_matrix[[i, j]]))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn edge_count(&self) -> usize {
        self.a_matrix.ncols()
    }

    /// v = A lambda mapped into node space.
    pub fn node_image(&self, edge_vec: &[f64]) -> NodeField {
        let n = self.a_matrix.nrows();
        let m = self.edge_count();
        let mut out = NodeField::zeros(n, self.d);
        for e in 0..m {
            for i in 0..n {
                let aie = self.a_matrix[[i, e]];
                if aie == 0.0 {
                    continue;
                }
                for k in 0..self.d {
                    out.row_mut(i)[k] += aie * edge_vec[e * self.d + k];
                }
            }
        }
        out
    }

    /// Partial gradient of F_A^* along edge coordinate e at the current
    /// lambda: mu_e (grad f_i^*((A lambda)_i) - grad f_j^*((A lambda)_j)).
    pub fn partial_gradient(
        &self,
        topology: &Topology,
        instance: &ProblemInstance,
        e: usize,
    ) -> Result<Vec<f64>> {
        let v = self.node_image(&self.lambda);
        let (i, j) = topology.edge(e);
        let xi = instance.conj_grad(i, v.row(i))?;
        let xj = instance.conj_grad(j, v.row(j))?;
        Ok((0..self.d).map(|k| self.mu[e] * (xi[k] - xj[k])).collect())
    }

    /// F_A^*(lambda) = F^*(A lambda).
    pub fn dual_value(&self, instance: &ProblemInstance, edge_vec: &[f64]) -> Result<f64> {
        instance.dual_value(&self.node_image(edge_vec))
    }

    /// Reference minimizer lambda* = A^+ v*, the Ker(A)^perp representative.
    pub fn set_reference(&mut self, instance: &ProblemInstance) -> Result<()> {
        let opt = instance.optimum()?;
        // A^+ = A^T (A A^T)^+ ; apply to each column of v*.
        let aat = self.a_matrix.dot(&self.a_matrix.t());
        let pinv = pseudo_inverse_psd(&aat, 1e-12)?;
        let n = self.a_matrix.nrows();
        let m = self.edge_count();
        let mut lam = vec![0.0; m * self.d];
        for k in 0..self.d {
            let col: Vec<f64> = (0..n).map(|i| opt.v_star.row(i)[k]).collect();
            let tmp: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| pinv[[i, j]] * col[j]).sum())
                .collect();
            for (e, slot) in lam.iter_mut().skip(k).step_by(self.d).enumerate().take(m) {
                let mut s = 0.0;
                for (i, t) in tmp.iter().enumerate() {
                    s += self.a_matrix[[i, e]] * t;
                }
                *slot = s;
            }
        }
        self.lambda_star = Some(lam);
        Ok(())
    }

    /// CDM step in edge-dual coordinates (full coordinate gradient step).
    pub fn cdm_step(
        &mut self,
        topology: &Topology,
        instance: &ProblemInstance,
        e: usize,
    ) -> Result<()> {
        let grad = self.partial_gradient(topology, instance, e)?;
        let (i, j) = topology.edge(e);
        let denom = (1.0 / instance.sigma(i) + 1.0 / instance.sigma(j)) * self.mu[e] * self.mu[e];
        for (k, g) in grad.iter().enumerate() {
            self.lambda[e * self.d + k] -= g / denom;
        }
        Ok(())
    }

    /// Contracts the (lambda, omega) pair to time t. The contraction acts on
    /// every coordinate with the same 2x2 mix, so one shared clock suffices.
    pub fn contract(&mut self, rate: f64, t: f64) -> Result<()> {
        if t < self.last_contract {
            return Err(Error::ClockRegression {
                requested: t,
                last: self.last_contract,
            });
        }
        let rho = (-2.0 * rate * (t - self.last_contract)).exp();
        let a = 0.5 * (1.0 + rho);
        let b = 0.5 * (1.0 - rho);
        for idx in 0..self.lambda.len() {
            let l = self.lambda[idx];
            let w = self.omega[idx];
            self.lambda[idx] = a * l + b * w;
            self.omega[idx] = b * l + a * w;
        }
        self.last_contract = t;
        Ok(())
    }

    /// CACDM step in edge-dual coordinates at time t: contract the pair, then
    /// lambda takes the coordinate step matching the node-level iterate update
    /// and omega takes the momentum kick theta / (sigma_A p_e) on the same
    /// partial gradient.
    pub fn cacdm_step(
        &mut self,
        topology: &Topology,
        instance: &ProblemInstance,
        e: usize,
        t: f64,
        params: &CacdmParams,
        rates: &[f64],
    ) -> Result<()> {
        self.contract(params.rate(), t)?;
        let grad = self.partial_gradient(topology, instance, e)?;
        let (i, j) = topology.edge(e);
        let denom = (1.0 / instance.sigma(i) + 1.0 / instance.sigma(j)) * self.mu[e] * self.mu[e];
        let omega_coeff = params.theta / (self.sigma_a * rates[e]);
        for (k, g) in grad.iter().enumerate() {
            self.lambda[e * self.d + k] -= g / denom;
            self.omega[e * self.d + k] -= omega_coeff * g;
        }
        Ok(())
    }

    /// ||P z||^2 for an edge vector z.
    fn projected_sq_norm(&self, z: &[f64]) -> f64 {
        let m = self.edge_count();
        let mut total = 0.0;
        for k in 0..self.d {
            for r in 0..m {
                let mut s = 0.0;
                for c in 0..m {
                    s += self.projector[[r, c]] * z[c * self.d + k];
                }
                total += s * z[r * self.d + k];
            }
        }
        total
    }

    /// Lyapunov value at time t for a co-evolving CACDM pair:
    /// L_t = ||P(omega_t - lambda*)||^2
    ///       + (2 theta^2 S^2 / sigma_A^2) (F_A^*(lambda_t) - F_A^*(lambda*)).
    pub fn lyapunov_cacdm(
        &self,
        instance: &ProblemInstance,
        params: &CacdmParams,
        t: f64,
    ) -> Result<f64> {
        let star = self
            .lambda_star
            .as_ref()
            .ok_or_else(|| Error::InvalidState("lambda_star not set".into()))?;
        let mut copy_lambda = self.lambda.clone();
        let mut copy_omega = self.omega.clone();
        if t < self.last_contract {
            return Err(Error::ClockRegression {
                requested: t,
                last: self.last_contract,
            });
        }
        let rho = (-2.0 * params.rate() * (t - self.last_contract)).exp();
        let a = 0.5 * (1.0 + rho);
        let b = 0.5 * (1.0 - rho);
        for idx in 0..copy_lambda.len() {
            let l = copy_lambda[idx];
            let w = copy_omega[idx];
            copy_lambda[idx] = a * l + b * w;
            copy_omega[idx] = b * l + a * w;
        }
        let diff: Vec<f64> = copy_omega.iter().zip(star).map(|(w, s)| w - s).collect();
        let dist = self.projected_sq_norm(&diff);
        let f_gap = self.dual_value(instance, &copy_lambda)? - self.dual_value(instance, star)?;
        let coeff = 2.0 * params.theta * params.theta * params.s_sq / (self.sigma_a * self.sigma_a);
        Ok(dist + coeff * f_gap)
    }
}

/// Windowed Lyapunov of the loss-network analysis:
/// L_k = (1/T) sum_{l=k}^{k+T-1} E_l over a log of per-activation dual gaps.
pub fn lyapunov_rlnm(gap_log: &[f64], k: usize, t_window: usize) -> Result<f64> {
    if t_window == 0 {
        return Err(Error::invalid("window must be positive"));
    }
    if k + t_window > gap_log.len() {
        return Err(Error::InvalidWindow {
            start: k,
            end: k + t_window,
            reason: format!("log has {} entries", gap_log.len()),
        });
    }
    Ok(gap_log[k..k + t_window].iter().sum::<f64>() / t_window as f64)
}
