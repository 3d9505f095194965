//! Local objective families, Fenchel conjugate oracles and error metrics.
//!
//! Each node i owns a smooth strongly convex f_i. Algorithms only touch f_i
//! through the conjugate gradient map x = grad f_i^*(v), which inverts
//! grad f_i. Quadratics get the closed form; the custom family solves the
//! scalar inversion per coordinate with safeguarded Newton.

use std::sync::Arc;

use crate::error::{Error, Result};

/// An n x d array of reals, one d-vector per node. Used for primal points,
/// convex-dual iterates and momentum fields alike.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl NodeField {
    pub fn zeros(n: usize, d: usize) -> Self {
        NodeField {
            data: vec![0.0; n * d],
            n,
            d,
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("empty node field"));
        }
        let d = rows[0].len();
        let mut data = Vec::with_capacity(n * d);
        for r in &rows {
            if r.len() != d {
                return Err(Error::invalid("ragged node field"));
            }
            data.extend_from_slice(r);
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite entry in node field"));
        }
        Ok(NodeField { data, n, d })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Column-wise mean across nodes.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for i in 0..self.n {
            for (k, x) in self.row(i).iter().enumerate() {
                m[k] += x;
            }
        }
        for x in &mut m {
            *x /= self.n as f64;
        }
        m
    }

    /// Column-wise sums (zero-sum conservation checks).
    pub fn column_sums(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for i in 0..self.n {
            for (k, x) in self.row(i).iter().enumerate() {
                m[k] += x;
            }
        }
        m
    }
}

/// Scalar profile for the custom separable family: f_i(x) = sum_k phi(x_k).
pub struct ScalarProfile {
    /// phi(x)
    pub value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// phi'(x)
    pub grad: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for ScalarProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ScalarProfile{..}")
    }
}

/// A node's local function.
#[derive(Debug, Clone)]
pub enum LocalFamily {
    /// f_i(x) = (a/2) ||x - c||^2, sigma = L = a.
    Quadratic { curvature: f64, center: Vec<f64> },
    /// Separable smooth strongly convex profile with declared sigma, L and a
    /// conjugate-solve tolerance.
    Custom {
        profile: Arc<ScalarProfile>,
        sigma: f64,
        lsmooth: f64,
        tolerance: f64,
    },
}

/// The full distributed problem: one local function per node.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    locals: Vec<LocalFamily>,
    d: usize,
    sigma: Vec<f64>,
    lsmooth: Vec<f64>,
}

/// Ground truth produced by [`ProblemInstance::optimum`].
#[derive(Debug, Clone)]
pub struct Optimum {
    /// Consensus minimizer of f(z) = sum_i f_i(z).
    pub x_star: Vec<f64>,
    /// Dual optimum v*_i = grad f_i(x*).
    pub v_star: NodeField,
    /// F*(v*), the dual value at the optimum.
    pub dual_opt: f64,
}

/// The three error metrics recorded by simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub dual_gap: f64,
    pub primal_sq_err: f64,
    pub consensus_sq_err: f64,
}

const NEWTON_CAP: usize = 200;
const CENTRAL_TOL: f64 = 1e-12;

impl ProblemInstance {
    pub fn new(locals: Vec<LocalFamily>, d: usize) -> Result<Self> {
        if locals.is_empty() {
            return Err(Error::invalid("need at least one node"));
        }
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let mut sigma = Vec::with_capacity(locals.len());
        let mut lsmooth = Vec::with_capacity(locals.len());
        for l in &locals {
            match l {
                LocalFamily::Quadratic { curvature, center } => {
                    if *curvature <= 0.0 {
                        return Err(Error::invalid("curvature must be positive"));
                    }
                    if center.len() != d {
                        return Err(Error::invalid("center dimension mismatch"));
                    }
                    sigma.push(*curvature);
                    lsmooth.push(*curvature);
                }
                LocalFamily::Custom {
                    sigma: s,
                    lsmooth: ll,
                    ..
                } => {
                    if !(*s > 0.0 && *ll >= *s) {
                        return Err(Error::invalid("need 0 < sigma <= L"));
                    }
                    sigma.push(*s);
                    lsmooth.push(*ll);
                }
            }
        }
        Ok(ProblemInstance {
            locals,
            d,
            sigma,
            lsmooth,
        })
    }

    /// Homogeneous quadratics with centers c_0 = e0-style spike: c_0 = spike,
    /// all other centers zero.
    pub fn averaging_spike(n: usize, d: usize, curvature: f64, spike: f64) -> Result<Self> {
        let locals = (0..n)
            .map(|i| LocalFamily::Quadratic {
                curvature,
                center: if i == 0 {
                    let mut c = vec![0.0; d];
                    c[0] = spike;
                    c
                } else {
                    vec![0.0; d]
                },
            })
            .collect();
        ProblemInstance::new(locals, d)
    }

    pub fn quadratic(curvatures: Vec<f64>, centers: Vec<Vec<f64>>) -> Result<Self> {
        if curvatures.len() != centers.len() {
            return Err(Error::invalid("curvature/center count mismatch"));
        }
        let d = centers.first().map(|c| c.len()).unwrap_or(0);
        let locals = curvatures
            .into_iter()
            .zip(centers)
            .map(|(a, c)| LocalFamily::Quadratic {
                curvature: a,
                center: c,
            })
            .collect();
        ProblemInstance::new(locals, d)
    }

    pub fn node_count(&self) -> usize {
        self.locals.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn sigma(&self, i: usize) -> f64 {
        self.sigma[i]
    }

    pub fn lsmooth(&self, i: usize) -> f64 {
        self.lsmooth[i]
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma.iter().cloned().fold(f64::MAX, f64::min)
    }

    pub fn l_max(&self) -> f64 {
        self.lsmooth.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn local(&self, i: usize) -> &LocalFamily {
        &self.locals[i]
    }

    /// f_i evaluated at x (used by tests and conjugate values).
    pub fn local_value(&self, i: usize, x: &[f64]) -> f64 {
        match &self.locals[i] {
            LocalFamily::Quadratic { curvature, center } => {
                let s: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(xi, ci)| (xi - ci) * (xi - ci))
                    .sum();
                0.5 * curvature * s
            }
            LocalFamily::Custom { profile, .. } => x.iter().map(|&xi| (profile.value)(xi)).sum(),
        }
    }

    /// grad f_i at x.
    pub fn local_grad(&self, i: usize, x: &[f64]) -> Vec<f64> {
        match &self.locals[i] {
            LocalFamily::Quadratic { curvature, center } => x
                .iter()
                .zip(center)
                .map(|(xi, ci)| curvature * (xi - ci))
                .collect(),
            LocalFamily::Custom { profile, .. } => x.iter().map(|&xi| (profile.grad)(xi)).collect(),
        }
    }

    /// grad f_i^*(v): the inverse of grad f_i.
    pub fn conj_grad(&self, i: usize, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.d {
            return Err(Error::invalid("conjugate argument dimension mismatch"));
        }
        match &self.locals[i] {
            LocalFamily::Quadratic { curvature, center } => Ok(v
                .iter()
                .zip(center)
                .map(|(vi, ci)| vi / curvature + ci)
                .collect()),
            LocalFamily::Custom {
                profile,
                sigma,
                lsmooth,
                tolerance,
            } => v
                .iter()
                .map(|&target| invert_scalar_grad(profile, *sigma, *lsmooth, *tolerance, target))
                .collect(),
        }
    }

    /// f_i^*(v) = <x*, v> - f_i(x*) with x* = grad f_i^*(v).
    pub fn conj_value(&self, i: usize, v: &[f64]) -> Result<f64> {
        match &self.locals[i] {
            LocalFamily::Quadratic { curvature, center } => {
                let sq: f64 = v.iter().map(|x| x * x).sum();
                let dot: f64 = v.iter().zip(center).map(|(a, b)| a * b).sum();
                Ok(sq / (2.0 * curvature) + dot)
            }
            LocalFamily::Custom { .. } => {
                let x = self.conj_grad(i, v)?;
                let dot: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
                Ok(dot - self.local_value(i, &x))
            }
        }
    }

    /// F*(v) = sum_i f_i^*(v_i).
    pub fn dual_value(&self, v: &NodeField) -> Result<f64> {
        if v.node_count() != self.node_count() || v.dim() != self.d {
            return Err(Error::invalid("node field shape mismatch"));
        }
        let mut total = 0.0;
        for i in 0..self.node_count() {
            total += self.conj_value(i, v.row(i))?;
        }
        Ok(total)
    }

    /// Primal surrogate x_i = grad f_i^*(v_i) per node.
    pub fn primal_point(&self, v: &NodeField) -> Result<NodeField> {
        let mut out = NodeField::zeros(self.node_count(), self.d);
        for i in 0..self.node_count() {
            let x = self.conj_grad(i, v.row(i))?;
            out.row_mut(i).copy_from_slice(&x);
        }
        Ok(out)
    }

    /// Centralized ground truth. Quadratics use the weighted-mean closed form;
    /// the general family runs gradient descent on f(z) = sum f_i(z) with step
    /// 1/(sum L_i), independent of any distributed code path.
    pub fn optimum(&self) -> Result<Optimum> {
        let n = self.node_count();
        let all_quadratic = self
            .locals
            .iter()
            .all(|l| matches!(l, LocalFamily::Quadratic { .. }));
        let x_star = if all_quadratic {
            let mut num = vec![0.0; self.d];
            let mut den = 0.0;
            for l in &self.locals {
                if let LocalFamily::Quadratic { curvature, center } = l {
                    den += curvature;
                    for k in 0..self.d {
                        num[k] += curvature * center[k];
                    }
                }
            }
            num.iter().map(|x| x / den).collect::<Vec<f64>>()
        } else {
            self.centralized_descent()?
        };
        let mut v_star = NodeField::zeros(n, self.d);
        for i in 0..n {
            let g = self.local_grad(i, &x_star);
            v_star.row_mut(i).copy_from_slice(&g);
        }
        let dual_opt = self.dual_value(&v_star)?;
        Ok(Optimum {
            x_star,
            v_star,
            dual_opt,
        })
    }

    fn centralized_descent(&self) -> Result<Vec<f64>> {
        let l_total: f64 = self.lsmooth.iter().sum();
        let step = 1.0 / l_total;
        let mut z = vec![0.0; self.d];
        for _ in 0..200_000 {
            let mut g = vec![0.0; self.d];
            for i in 0..self.node_count() {
                for (k, gi) in self.local_grad(i, &z).into_iter().enumerate() {
                    g[k] += gi;
                }
            }
            let norm: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < CENTRAL_TOL {
                return Ok(z);
            }
            for k in 0..self.d {
                z[k] -= step * g[k];
            }
        }
        Err(Error::NumericFailure {
            what: "centralized gradient descent",
            residual: f64::NAN,
        })
    }

    /// Dual gap, squared primal error and squared consensus error of the
    /// dual iterate v against a precomputed optimum.
    pub fn error_metrics(&self, v: &NodeField, opt: &Optimum) -> Result<ErrorMetrics> {
        let dual_gap = self.dual_value(v)? - opt.dual_opt;
        let x = self.primal_point(v)?;
        let mut primal = 0.0;
        for i in 0..self.node_count() {
            for (k, xi) in x.row(i).iter().enumerate() {
                let dxi = xi - opt.x_star[k];
                primal += dxi * dxi;
            }
        }
        let mean = x.mean();
        let mut consensus = 0.0;
        for i in 0..self.node_count() {
            for (k, xi) in x.row(i).iter().enumerate() {
                let dxi = xi - mean[k];
                consensus += dxi * dxi;
            }
        }
        Ok(ErrorMetrics {
            dual_gap,
            primal_sq_err: primal,
            consensus_sq_err: consensus,
        })
    }
}

/// Solves phi'(x) = target by safeguarded Newton with bisection fallback.
/// phi' is strictly increasing (sigma-strong convexity), so a sign-bracketing
/// interval always exists and bisection guarantees progress.
fn invert_scalar_grad(
    profile: &ScalarProfile,
    sigma: f64,
    _lsmooth: f64,
    tolerance: f64,
    target: f64,
) -> Result<f64> {
    let g = |x: f64| (profile.grad)(x) - target;

    // Bracket the root: phi'(x) - target has slope >= sigma.
    let mut lo = 0.0_f64;
    let mut hi = 0.0_f64;
    let mut step = 1.0_f64.max(target.abs() / sigma);
    while g(lo) > 0.0 {
        lo -= step;
        step *= 2.0;
        if !lo.is_finite() {
            return Err(Error::NumericFailure {
                what: "conjugate bracket",
                residual: g(0.0),
            });
        }
    }
    step = 1.0_f64.max(target.abs() / sigma);
    while g(hi) < 0.0 {
        hi += step;
        step *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NumericFailure {
                what: "conjugate bracket",
                residual: g(0.0),
            });
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..NEWTON_CAP {
        let gx = g(x);
        if gx.abs() <= tolerance {
            return Ok(x);
        }
        if gx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        // Newton with the strong-convexity slope lower bound; fall back to
        // bisection when the step leaves the bracket.
        let slope = numeric_slope(profile, x).max(sigma);
        let newton = x - gx / slope;
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let residual = g(x).abs();
    if residual <= tolerance * 1e3 {
        return Ok(x);
    }
    Err(Error::NumericFailure {
        what: "conjugate newton",
        residual,
    })
}

fn numeric_slope(profile: &ScalarProfile, x: f64) -> f64 {
    let h = 1e-6 * (1.0 + x.abs());
    ((profile.grad)(x + h) - (profile.grad)(x - h)) / (2.0 * h)
}

/// Quartic profile phi(x) = x^4/4 + x^2/2, the custom-family test workhorse
/// (sigma = 1 globally, L = 13 on |x| <= 2).
pub fn quartic_profile() -> Arc<ScalarProfile> {
    Arc::new(ScalarProfile {
        value: Arc::new(|x| x.powi(4) / 4.0 + x * x / 2.0),
        grad: Arc::new(|x| x.powi(3) + x),
    })
}


#[cfg(test)]
mod scaling_tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn doubling_curvature_halves_offset_effect() {
        let a1 = ProblemInstance::quadratic(vec![1.0], vec![vec![2.0]]).unwrap();
        let a2 = ProblemInstance::quadratic(vec![2.0], vec![vec![2.0]]).unwrap();
        let v = [0.8];
        let x1 = a1.conj_grad(0, &v).unwrap()[0];
        let x2 = a2.conj_grad(0, &v).unwrap()[0];
        assert_abs_diff_eq!(x1 - 2.0, 2.0 * (x2 - 2.0), epsilon = 1e-15);
    }
}
