//! Dense symmetric eigensolver (cyclic Jacobi) and small helpers built on it.
//!
//! Desk scale only: everything here is O(n^3) with n in the low hundreds.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
pub struct SymmetricEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

/// Cyclic Jacobi with a sweep threshold. Input must be symmetric.
pub fn symmetric_eigen(matrix: &Array2<f64>) -> Result<SymmetricEigen> {
    let n = check_symmetric(matrix, 1e-10)?;
    let mut a = matrix.clone();
    let mut v: Array2<f64> = Array2::eye(n);

    let scale: f64 = a.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-14 * scale;
    let max_sweeps = 64;

    for _ in 0..max_sweeps {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[[p, q]].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                // Rotation angle from the standard Jacobi formulas.
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].partial_cmp(&a[[j, j]]).unwrap());

    let values = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let mut vectors = Array2::zeros((n, n));
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[[k, new]] = v[[k, old]];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Checks squareness and symmetry up to `tol` (relative to the matrix scale).
pub fn check_symmetric(matrix: &Array2<f64>, tol: f64) -> Result<usize> {
    let (n, m) = matrix.dim();
    if n != m {
        return Err(Error::invalid(format!("matrix not square: {n}x{m}")));
    }
    let scale: f64 = matrix.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (matrix[[i, j]] - matrix[[j, i]]).abs() > tol * scale {
                return Err(Error::invalid(format!(
                    "matrix not symmetric at ({i},{j}): {} vs {}",
                    matrix[[i, j]],
                    matrix[[j, i]]
                )));
            }
        }
    }
    Ok(n)
}

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix via its spectrum.
/// Eigenvalues below `cutoff * lambda_max` are treated as zero.
pub fn pseudo_inverse_psd(matrix: &Array2<f64>, cutoff: f64) -> Result<Array2<f64>> {
    let eig = symmetric_eigen(matrix)?;
    let n = eig.values.len();
    let lmax = eig.values.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let mut out = Array2::zeros((n, n));
    for k in 0..n {
        let lam = eig.values[k];
        if lam > cutoff * lmax {
            let inv = 1.0 / lam;
            for i in 0..n {
                let vik = eig.vectors[[i, k]];
                if vik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[[i, j]] += inv * vik * eig.vectors[[j, k]];
                }
            }
        }
    }
    Ok(out)
}
