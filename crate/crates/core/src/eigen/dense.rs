//! Full symmetric eigendecomposition: Householder reduction to tridiagonal
//! form followed by the implicitly shifted QL iteration.

use super::{residual_norm, EigenResult, SolverKind};
use crate::error::{Error, Result};
use crate::laplacian::{LaplacianMatrix, Operator};

#[derive(Debug, Clone, Copy)]
pub struct DenseOptions {
    /// Largest dimension the dense path accepts.
    pub max_dim: usize,
    /// Allowed asymmetry relative to the spectral bound.
    pub symmetry_tol: f64,
}

impl Default for DenseOptions {
    fn default() -> Self {
        Self { max_dim: 2000, symmetry_tol: 1e-12 }
    }
}

pub fn solve_dense(s: &LaplacianMatrix) -> Result<EigenResult> {
    solve_dense_with(s, DenseOptions::default())
}

pub fn solve_dense_with(s: &LaplacianMatrix, opts: DenseOptions) -> Result<EigenResult> {
    let n = s.dim();
    if n > opts.max_dim {
        return Err(Error::InvalidArgument(format!(
            "dimension {n} exceeds the dense threshold {}",
            opts.max_dim
        )));
    }
    let asym = s.max_asymmetry();
    if asym > opts.symmetry_tol * s.spectral_bound() {
        return Err(Error::NotSymmetric { max_asymmetry: asym });
    }
    let mut a = vec![0.0; n * n];
    for (u, row) in s.to_dense().into_iter().enumerate() {
        a[u * n..(u + 1) * n].copy_from_slice(&row);
    }
    let (values, vectors) = symmetric_eigen(n, a)?;
    let residuals: Vec<f64> = values.iter().zip(&vectors).map(|(&l, v)| residual_norm(s, l, v)).collect();
    let bound = 1e-10 * s.spectral_bound();
    Ok(EigenResult {
        converged: residuals.iter().map(|&r| r <= bound).collect(),
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
        iterations: 1,
        solver_kind: SolverKind::Dense,
    })
}

/// Eigen-decomposition of the symmetric row-major `n x n` matrix `a`.
///
/// Returns ascending eigenvalues and the matching orthonormal eigenvectors.
pub fn symmetric_eigen(n: usize, mut a: Vec<f64>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut a, &mut d, &mut e);
    // a holds the orthogonal transform column-wise; iterate on its transpose so
    // that every eigenvector is a contiguous row
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            z[i * n + k] = a[k * n + i];
        }
    }
    ql_implicit(n, &mut d, &mut e, &mut z)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].total_cmp(&d[y]).then(x.cmp(&y)));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = order.iter().map(|&i| z[i * n..(i + 1) * n].to_vec()).collect();
    Ok((values, vectors))
}

/// Householder reduction. On return `d` is the diagonal, `e[1..]` the
/// subdiagonal and `v` (row-major) the accumulated transform.
fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                let f = d[j];
                v[at(j, i)] = f;
                let mut g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`, rotating the rows of `z`.
fn ql_implicit(n: usize, d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    const MAX_SWEEPS: usize = 60;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::NoConvergence { converged: l, requested: n, iterations: sweeps });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for k in 0..n {
                        let h = zi1[k];
                        zi1[k] = s * zi[k] + c * h;
                        zi[k] = c * zi[k] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
